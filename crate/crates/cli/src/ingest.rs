//! Text inputs: a TSV edge list, CSV (or `EABGZ1`) attributes, and
//! semicolon-separated class names per edge.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use eagle_core::{Eabg, Mat};

use crate::bundle::Dataset;
use crate::error::{CliError, Result};
use crate::matrix_io::{load_matrix, MATRIX_MAGIC};

#[derive(Debug, Default)]
struct Interner {
    ids: HashMap<String, usize>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, name: &str) -> usize {
        if let Some(&i) = self.ids.get(name) {
            return i;
        }
        let i = self.names.len();
        self.ids.insert(name.to_string(), i);
        self.names.push(name.to_string());
        i
    }
}

pub struct EdgeList {
    pub edges: Vec<(usize, usize)>,
    pub u_ids: Vec<String>,
    pub v_ids: Vec<String>,
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let line = e.position().map_or(0, |p| p.line());
    CliError::parse(path, line, e.to_string())
}

/// Reads `u_id<TAB>v_id` lines. Ids are arbitrary strings, numbered per side
/// in order of first appearance. Blank lines and `#` comments are skipped.
pub fn read_edges(path: &Path) -> Result<EdgeList> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(b'\t')
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let (mut us, mut vs) = (Interner::default(), Interner::default());
    let mut edges = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(CliError::parse(
                path,
                line,
                format!("expected `u_id<TAB>v_id`, found {} field(s)", rec.len()),
            ));
        }
        edges.push((us.intern(&rec[0]), vs.intern(&rec[1])));
    }
    if edges.is_empty() {
        return Err(CliError::Input(format!("{}: no edges", path.display())));
    }
    Ok(EdgeList {
        edges,
        u_ids: us.names,
        v_ids: vs.names,
    })
}

fn has_matrix_magic(path: &Path) -> Result<bool> {
    let mut head = [0u8; 6];
    let mut file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut read = 0;
    while read < head.len() {
        match file.read(&mut head[read..]).map_err(|e| CliError::io(path, e))? {
            0 => break,
            n => read += n,
        }
    }
    Ok(read == head.len() && &head == MATRIX_MAGIC)
}

/// Reads attributes from an `EABGZ1` file or a headerless CSV of reals.
pub fn read_attrs(path: &Path) -> Result<Mat> {
    if has_matrix_magic(path)? {
        return load_matrix(path);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = record_line(&rec);
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(CliError::parse(path, line, format!("expected {c} values, found {}", rec.len())));
            }
            _ => {}
        }
        for field in rec.iter() {
            let x: f64 = field
                .parse()
                .map_err(|_| CliError::parse(path, line, format!("not a number: {field:?}")))?;
            values.push(x);
        }
        rows += 1;
    }
    Ok(Mat::from_row_slice(rows, cols.unwrap_or(0), &values))
}

/// Reads one line of `;`-separated class names per edge. An empty line
/// means the edge has no class. Columns follow the sorted class names.
pub fn read_labels(path: &Path) -> Result<(Mat, Vec<String>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut per_edge: Vec<Vec<String>> = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        per_edge.push(
            line.split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
        );
    }
    let classes: Vec<String> = per_edge
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut y = Mat::zeros(per_edge.len(), classes.len());
    for (i, names) in per_edge.iter().enumerate() {
        for name in names {
            y[(i, index[name.as_str()])] = 1.0;
        }
    }
    Ok((y, classes))
}

/// Parses and validates the three inputs into a dataset.
pub fn ingest(edges_path: &Path, attrs_path: &Path, labels_path: Option<&Path>) -> Result<Dataset> {
    let list = read_edges(edges_path)?;
    let attrs = read_attrs(attrs_path)?;
    let m = list.edges.len();
    if attrs.nrows() != m {
        return Err(CliError::Input(format!(
            "{} has {} attribute rows but {} lists {} edges",
            attrs_path.display(),
            attrs.nrows(),
            edges_path.display(),
            m
        )));
    }
    let (labels, classes) = match labels_path {
        Some(p) => {
            let (y, classes) = read_labels(p)?;
            if y.nrows() != m {
                return Err(CliError::Input(format!(
                    "{} has {} label rows but {} lists {} edges",
                    p.display(),
                    y.nrows(),
                    edges_path.display(),
                    m
                )));
            }
            (Some(y), Some(classes))
        }
        None => (None, None),
    };
    let graph = Eabg::new(list.u_ids.len(), list.v_ids.len(), list.edges, attrs, labels)?;
    Ok(Dataset {
        graph,
        u_ids: list.u_ids,
        v_ids: list.v_ids,
        classes,
    })
}
