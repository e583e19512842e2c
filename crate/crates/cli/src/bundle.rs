//! Single-file dataset bundles.
//!
//! Layout: the magic `EABGB1`, a `u64` header length, a JSON header with the
//! node and class names, `u64` edge pairs, the attribute matrix and, when
//! present, the label matrix (both in `EABGZ1` form).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use eagle_core::Eabg;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::matrix_io::{read_matrix, write_matrix};
use crate::SCHEMA_VERSION;

pub const BUNDLE_MAGIC: &[u8; 6] = b"EABGB1";

/// A graph plus the external names of its nodes and classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Eabg,
    pub u_ids: Vec<String>,
    pub v_ids: Vec<String>,
    /// Class names in label-column order.
    pub classes: Option<Vec<String>>,
}

impl Dataset {
    /// Wraps a graph, naming nodes by their indices.
    pub fn from_graph(graph: Eabg) -> Self {
        let u_ids = (0..graph.num_u()).map(|i| i.to_string()).collect();
        let v_ids = (0..graph.num_v()).map(|i| i.to_string()).collect();
        let classes = graph.labels().map(|y| (0..y.ncols()).map(|c| format!("class{c}")).collect());
        Self {
            graph,
            u_ids,
            v_ids,
            classes,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    num_u: usize,
    num_v: usize,
    num_edges: usize,
    u_ids: Vec<String>,
    v_ids: Vec<String>,
    classes: Option<Vec<String>>,
}

pub fn write_bundle<W: Write>(w: &mut W, ds: &Dataset) -> std::io::Result<()> {
    let g = &ds.graph;
    let header = Header {
        schema_version: SCHEMA_VERSION,
        num_u: g.num_u(),
        num_v: g.num_v(),
        num_edges: g.num_edges(),
        u_ids: ds.u_ids.clone(),
        v_ids: ds.v_ids.clone(),
        classes: ds.classes.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(BUNDLE_MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for &(u, v) in g.edges() {
        w.write_all(&(u as u64).to_le_bytes())?;
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    write_matrix(w, g.attrs())?;
    if let Some(y) = g.labels() {
        write_matrix(w, y)?;
    }
    Ok(())
}

fn bad(path: &Path, msg: impl Into<String>) -> CliError {
    CliError::Input(format!("{}: {}", path.display(), msg.into()))
}

pub fn read_bundle<R: Read>(r: &mut R, path: &Path) -> Result<Dataset> {
    let io = |e| CliError::io(path, e);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != BUNDLE_MAGIC {
        return Err(bad(path, "not a dataset bundle"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(io)?;
    let len = u64::from_le_bytes(len);
    let mut json = Vec::new();
    r.by_ref().take(len).read_to_end(&mut json).map_err(io)?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(bad(path, format!("unsupported schema version {}", header.schema_version)));
    }
    if header.u_ids.len() != header.num_u || header.v_ids.len() != header.num_v {
        return Err(bad(path, "node name lists do not match the node counts"));
    }
    let mut edges = Vec::with_capacity(header.num_edges.min(1 << 20));
    let mut buf = [0u8; 16];
    for _ in 0..header.num_edges {
        r.read_exact(&mut buf).map_err(io)?;
        let u = u64::from_le_bytes(buf[..8].try_into().unwrap());
        let v = u64::from_le_bytes(buf[8..].try_into().unwrap());
        edges.push((u as usize, v as usize));
    }
    let attrs = read_matrix(r).map_err(io)?;
    let labels = match &header.classes {
        Some(classes) => {
            let y = read_matrix(r).map_err(io)?;
            if y.ncols() != classes.len() {
                return Err(bad(path, "label matrix does not match the class list"));
            }
            Some(y)
        }
        None => None,
    };
    let graph = Eabg::new(header.num_u, header.num_v, edges, attrs, labels)?;
    Ok(Dataset {
        graph,
        u_ids: header.u_ids,
        v_ids: header.v_ids,
        classes: header.classes,
    })
}

pub fn save_bundle(path: &Path, ds: &Dataset) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_bundle(&mut w, ds)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn load_bundle(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_bundle(&mut BufReader::new(file), path)
}
