use msgnn::datasets::{gen_qtips, qtips_union, QtipsSpec, BACKGROUND};
use msgnn::engine::ModelSpec;
use msgnn::experiment::init_model;
use msgnn::trainers::{evaluate, train_single_level, TrainSchedule};

// A rod of length 7 has its centre three hops from either endpoint, so the
// class of the centre is invisible to a two-layer model.
#[test]
fn deep_gcn_sees_both_rod_ends() {
    let train = QtipsSpec {
        num_graphs: 20,
        grid_side: 12,
        rod_length: 7,
        rods_per_graph: 3,
        knn_k: 8,
        seed: 1,
    };
    let held = QtipsSpec { seed: 2, ..train.clone() };
    let train_scenes = gen_qtips(&train).unwrap();
    let held_scenes = gen_qtips(&held).unwrap();
    let mut data = qtips_union(&train_scenes, &held_scenes).unwrap();

    let n_train: usize = train_scenes.iter().map(|g| g.graph.num_nodes()).sum();
    let labels = data.labels.labels().to_vec();
    for i in 0..data.num_nodes() {
        data.masks.train[i] = i < n_train && labels[i] != BACKGROUND;
        data.masks.val[i] = false;
        data.masks.test[i] = false;
    }
    let mut offset = n_train;
    for scene in &held_scenes {
        for rod in &scene.rods {
            data.masks.val[offset + rod[3]] = true;
            data.masks.test[offset + rod[3]] = true;
        }
        offset += scene.graph.num_nodes();
    }
    let centres: Vec<usize> = (0..data.num_nodes()).filter(|&i| data.masks.test[i]).map(|i| labels[i]).collect();
    let majority = (1..4).map(|c| centres.iter().filter(|&&l| l == c).count()).max().unwrap() as f64 / centres.len() as f64;

    let accuracy = |depth: usize| {
        let mut channels = vec![3];
        channels.extend(std::iter::repeat_n(16, depth - 1));
        channels.push(4);
        let model = init_model(&ModelSpec::gcn(channels), 0).unwrap();
        let (model, _) = train_single_level(model, &data, &TrainSchedule::single(300, 0.01)).unwrap();
        evaluate(&model, &data, &data.masks.test).unwrap()
    };
    let shallow = accuracy(2);
    let deep = accuracy(7);
    assert!(shallow <= majority + 0.1, "shallow {shallow:.3}, majority {majority:.3}");
    assert!(deep >= shallow + 0.2, "deep {deep:.3}, shallow {shallow:.3}");
}
