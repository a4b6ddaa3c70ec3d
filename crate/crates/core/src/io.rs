//! Plain-text graph formats.
//!
//! * edge list: whitespace-separated `u v` pairs, 0-based, one per line;
//!   blank lines and `#` comments are skipped
//! * features: CSV `node,f0,..,f{c-1}`
//! * labels: CSV `node,label`
//! * masks: CSV `node,split` with split one of `train`, `val`, `test`

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{LabelVector, Masks, SparseGraph};
use crate::matrix::Matrix;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads an edge list. The node count is `num_nodes` if given, else one more
/// than the largest id seen. Edges are symmetrized and deduplicated.
pub fn read_edge_list<R: Read>(reader: R, path: &Path, num_nodes: Option<usize>) -> Result<SparseGraph> {
    let mut edges = Vec::new();
    let mut max_id = None;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut it = body.split_whitespace();
        let mut id = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| parse_err(path, k + 1, format!("missing {what} endpoint")))?
                .parse::<usize>()
                .map_err(|e| parse_err(path, k + 1, e.to_string()))
        };
        let (u, v) = (id("first")?, id("second")?);
        if it.next().is_some() {
            return Err(parse_err(path, k + 1, "expected two columns"));
        }
        max_id = max_id.max(Some(u.max(v)));
        edges.push((u, v));
    }
    let n = match (num_nodes, max_id) {
        (Some(n), Some(m)) if m >= n => {
            return Err(parse_err(path, 0, format!("node id {m} out of range for {n} nodes")));
        }
        (Some(n), _) => n,
        (None, m) => m.map_or(0, |m| m + 1),
    };
    SparseGraph::from_edges(n, &edges)
}

pub fn load_edge_list(path: &Path, num_nodes: Option<usize>) -> Result<SparseGraph> {
    read_edge_list(File::open(path)?, path, num_nodes)
}

pub fn write_edge_list<W: Write>(g: &SparseGraph, mut w: W) -> Result<()> {
    for (u, v) in g.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Rows of a headed CSV keyed by a `node` column, returned in node order.
/// Every node in `0..n` must appear exactly once.
fn read_node_rows<R: Read>(reader: R, path: &Path, expect_cols: Option<usize>) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.first().map(String::as_str) != Some("node") {
        return Err(parse_err(path, 1, "first column must be `node`"));
    }
    if let Some(c) = expect_cols {
        if header.len() != c {
            return Err(parse_err(path, 1, format!("expected {c} columns, found {}", header.len())));
        }
    }
    let mut rows: Vec<Option<Vec<String>>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        let node: usize = rec[0].parse().map_err(|_| parse_err(path, line, format!("bad node id `{}`", &rec[0])))?;
        if node >= rows.len() {
            rows.resize(node + 1, None);
        }
        if rows[node].is_some() {
            return Err(parse_err(path, line, format!("node {node} listed twice")));
        }
        rows[node] = Some(rec.iter().skip(1).map(str::to_owned).collect());
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| parse_err(path, 0, format!("node {i} missing"))))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn read_features<R: Read>(reader: R, path: &Path) -> Result<Matrix> {
    let (header, rows) = read_node_rows(reader, path, None)?;
    let c = header.len() - 1;
    for (j, name) in header[1..].iter().enumerate() {
        if *name != format!("f{j}") {
            return Err(parse_err(path, 1, format!("column {} should be `f{j}`", j + 1)));
        }
    }
    let mut data = Vec::with_capacity(rows.len() * c);
    for (i, row) in rows.iter().enumerate() {
        for v in row {
            data.push(v.parse::<f64>().map_err(|e| parse_err(path, 0, format!("node {i}: {e}")))?);
        }
    }
    Matrix::from_vec(rows.len(), c, data)
}

/// Class count is one more than the largest label.
pub fn read_labels<R: Read>(reader: R, path: &Path) -> Result<LabelVector> {
    let (header, rows) = read_node_rows(reader, path, Some(2))?;
    if header[1] != "label" {
        return Err(parse_err(path, 1, "second column must be `label`"));
    }
    let labels: Vec<usize> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r[0].parse().map_err(|e| parse_err(path, 0, format!("node {i}: {e}"))))
        .collect::<Result<_>>()?;
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    LabelVector::new(labels, classes)
}

pub fn read_masks<R: Read>(reader: R, path: &Path) -> Result<Masks> {
    let (header, rows) = read_node_rows(reader, path, Some(2))?;
    if header[1] != "split" {
        return Err(parse_err(path, 1, "second column must be `split`"));
    }
    let n = rows.len();
    let mut masks = Masks {
        train: vec![false; n],
        val: vec![false; n],
        test: vec![false; n],
    };
    for (i, r) in rows.iter().enumerate() {
        match r[0].as_str() {
            "train" => masks.train[i] = true,
            "val" => masks.val[i] = true,
            "test" => masks.test[i] = true,
            other => return Err(parse_err(path, 0, format!("node {i}: unknown split `{other}`"))),
        }
    }
    Ok(masks)
}

pub fn write_features<W: Write>(x: &Matrix, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec!["node".to_string()];
    header.extend((0..x.cols()).map(|j| format!("f{j}")));
    wtr.write_record(&header)?;
    for i in 0..x.rows() {
        let mut rec = vec![i.to_string()];
        // `{:?}` prints the shortest string that parses back to the same f64
        rec.extend(x.row(i).iter().map(|v| format!("{v:?}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_labels<W: Write>(y: &LabelVector, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["node", "label"])?;
    for (i, l) in y.labels().iter().enumerate() {
        wtr.write_record([i.to_string(), l.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Nodes in no mask are written as `test`; nodes in several take the first
/// of train, val, test.
pub fn write_masks<W: Write>(m: &Masks, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["node", "split"])?;
    for i in 0..m.len() {
        let split = if m.train[i] {
            "train"
        } else if m.val[i] {
            "val"
        } else {
            "test"
        };
        wtr.write_record([i.to_string().as_str(), split])?;
    }
    wtr.flush()?;
    Ok(())
}

/// File locations of a dataset stored on disk.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetFiles {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub masks: PathBuf,
}

impl DatasetFiles {
    /// Paths are resolved against `base` when relative.
    pub fn load(&self, base: &Path) -> Result<crate::coarsening::LevelData> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let (fp, lp, mp) = (at(&self.features), at(&self.labels), at(&self.masks));
        let x = read_features(File::open(&fp)?, &fp)?;
        let y = read_labels(File::open(&lp)?, &lp)?;
        let masks = read_masks(File::open(&mp)?, &mp)?;
        let g = load_edge_list(&at(&self.edges), Some(x.rows()))?;
        crate::coarsening::LevelData::new(g, x, y, masks, None)
    }

    /// Writes all four files, creating parent directories.
    pub fn save(&self, base: &Path, data: &crate::coarsening::LevelData) -> Result<()> {
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let create = |p: PathBuf| -> Result<File> {
            if let Some(dir) = p.parent() {
                std::fs::create_dir_all(dir)?;
            }
            Ok(File::create(p)?)
        };
        write_edge_list(&data.graph, std::io::BufWriter::new(create(at(&self.edges))?))?;
        write_features(&data.features, create(at(&self.features))?)?;
        write_labels(&data.labels, create(at(&self.labels))?)?;
        write_masks(&data.masks, create(at(&self.masks))?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PathBuf {
        PathBuf::from("mem")
    }

    #[test]
    fn edge_list_symmetrizes_and_dedups() {
        let text = "# triangle\n0 1\n1 0\n\n1 2   \n2 0\n2 2\n";
        let g = read_edge_list(text.as_bytes(), &p(), None).unwrap();
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.num_undirected_edges(), 3);
        assert!(!g.has_edge(2, 2));
        let padded = read_edge_list(text.as_bytes(), &p(), Some(5)).unwrap();
        assert_eq!(padded.num_nodes(), 5);
    }

    #[test]
    fn edge_list_errors_carry_line() {
        let err = read_edge_list("0 1\n1 x\n".as_bytes(), &p(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(read_edge_list("0 1 2\n".as_bytes(), &p(), None).is_err());
        assert!(read_edge_list("0 4\n".as_bytes(), &p(), Some(3)).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let x = Matrix::from_rows(&[vec![0.1, -2.5e-7], vec![1.0 / 3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_features(&x, &mut buf).unwrap();
        assert_eq!(read_features(buf.as_slice(), &p()).unwrap(), x);

        let y = LabelVector::new(vec![2, 0], 3).unwrap();
        let mut buf = Vec::new();
        write_labels(&y, &mut buf).unwrap();
        assert_eq!(read_labels(buf.as_slice(), &p()).unwrap(), y);

        let m = Masks {
            train: vec![true, false, false],
            val: vec![false, true, false],
            test: vec![false, false, true],
        };
        let mut buf = Vec::new();
        write_masks(&m, &mut buf).unwrap();
        assert_eq!(read_masks(buf.as_slice(), &p()).unwrap(), m);
    }

    #[test]
    fn csv_rows_may_come_in_any_order() {
        let text = "node,label\n1,0\n0,1\n";
        assert_eq!(read_labels(text.as_bytes(), &p()).unwrap().labels(), &[1, 0]);
    }

    #[test]
    fn csv_errors() {
        assert!(read_labels("id,label\n0,1\n".as_bytes(), &p()).is_err());
        assert!(read_labels("node,label\n0,1\n0,1\n".as_bytes(), &p()).is_err());
        assert!(read_labels("node,label\n1,1\n".as_bytes(), &p()).is_err());
        assert!(read_masks("node,split\n0,dev\n".as_bytes(), &p()).is_err());
        assert!(read_features("node,g0\n0,1\n".as_bytes(), &p()).is_err());
    }
}
