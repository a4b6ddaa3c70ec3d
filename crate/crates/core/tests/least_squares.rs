use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use msgnn::graph::{NodeSelection, SparseGraph};
use msgnn::matrix::Matrix;
use msgnn::theory::{identity_error, solve_ls, LinearLSProblem};

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

#[test]
fn normal_equations_match_qr() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let d = rand_matrix(&mut rng, 30, 3);
        let y = rand_matrix(&mut rng, 30, 2);
        let ours = solve_ls(&d, &y, false).unwrap();
        assert!(ours.ridge.is_none());
        let qr = to_na(&d).qr();
        let rhs = qr.q().transpose() * to_na(&y);
        let oracle = qr.r().solve_upper_triangular(&rhs).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((ours.theta[(i, j)] - oracle[(i, j)]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn rank_deficient_design_needs_ridge() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base = rand_matrix(&mut rng, 20, 2);
    let d = Matrix::from_fn(20, 3, |i, j| if j < 2 { base[(i, j)] } else { base[(i, 0)] + base[(i, 1)] });
    let y = rand_matrix(&mut rng, 20, 1);
    assert!(solve_ls(&d, &y, false).is_err());
    let sol = solve_ls(&d, &y, true).unwrap();
    assert!(sol.ridge.is_some());
    assert!(sol.theta.is_finite());
}

#[test]
fn block_identity_holds_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..25 {
        let n = rng.random_range(10..40);
        let density = rng.random_range(0.05..0.4);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(density) {
                    edges.push((i, j));
                }
            }
        }
        let g = SparseGraph::from_edges(n, &edges).unwrap();
        let c = rng.random_range(1..5);
        let x = rand_matrix(&mut rng, n, c);
        let y = rand_matrix(&mut rng, n, 1);
        let mut idx: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if idx.len() < c {
            idx = (0..c).collect();
        }
        let sel = NodeSelection::new(idx, n).unwrap();
        let problem = LinearLSProblem::new(g, x, y, sel).unwrap();
        let theta = rand_matrix(&mut rng, c, 1);
        assert!(identity_error(&problem, &theta).unwrap() < 1e-10);
    }
}
