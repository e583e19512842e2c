//! Edge-attributed bipartite graphs and their edge-wise transition matrices.
//!
//! With `E_U` (`|E| x |U|`) and `E_V` (`|E| x |V|`) the edge-node indicator
//! matrices and `D_U`, `D_V` the node degrees, the U-wise transition matrix is
//! `P_U = E_U D_U⁻¹ E_Uᵀ`: entry `(i, j)` is `1/deg(u)` when edges `i` and `j`
//! share the U-endpoint `u`. Both `P_U` and `P_V` are symmetric and doubly
//! stochastic, and so is any convex combination of them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{check_shape, Error, Result};
use crate::math;
use crate::sparse::SparseCsr;
use crate::Mat;

/// Which edge-wise transition a computation runs over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "view", rename_all = "snake_case")]
pub enum View {
    /// `β P_U + (1−β) P_V`, factored by the combined incidence `B`.
    Combined { beta: f64 },
    /// `P_U`, factored by `E_U D_U^(−1/2)`.
    U,
    /// `P_V`, factored by `E_V D_V^(−1/2)`.
    V,
}

/// Edge-attributed bipartite graph.
///
/// Edges are indexed `0..|E|` and each carries one row of `attrs`. Every node
/// index has at least one incident edge. Parallel edges (the same `(u, v)`
/// pair under two edge ids) are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Eabg {
    num_u: usize,
    num_v: usize,
    edges: Vec<(usize, usize)>,
    attrs: Mat,
    labels: Option<Mat>,
}

impl Eabg {
    pub fn new(
        num_u: usize,
        num_v: usize,
        edges: Vec<(usize, usize)>,
        attrs: Mat,
        labels: Option<Mat>,
    ) -> Result<Self> {
        if edges.is_empty() {
            return Err(Error::InvalidGraph("graph has no edges".into()));
        }
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u >= num_u || v >= num_v {
                return Err(Error::InvalidGraph(format!(
                    "edge {i} = ({u}, {v}) is out of bounds for {num_u} U-nodes and {num_v} V-nodes"
                )));
            }
        }
        let (deg_u, deg_v) = degrees(num_u, num_v, &edges);
        check_degrees(&deg_u, &deg_v)?;
        if attrs.nrows() != edges.len() {
            return Err(Error::InvalidGraph(format!(
                "attribute matrix has {} rows but the graph has {} edges",
                attrs.nrows(),
                edges.len()
            )));
        }
        if attrs.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidGraph("attributes must be finite".into()));
        }
        if let Some(y) = &labels {
            if y.nrows() != edges.len() {
                return Err(Error::InvalidGraph(format!(
                    "label matrix has {} rows but the graph has {} edges",
                    y.nrows(),
                    edges.len()
                )));
            }
            if y.iter().any(|&x| x != 0.0 && x != 1.0) {
                return Err(Error::InvalidGraph("label entries must be 0 or 1".into()));
            }
        }
        Ok(Self {
            num_u,
            num_v,
            edges,
            attrs,
            labels,
        })
    }

    /// Builds a graph from arbitrary node ids, renumbering each side densely
    /// in order of first appearance so no node is left without an edge.
    pub fn from_sparse_ids(edges: &[(usize, usize)], attrs: Mat, labels: Option<Mat>) -> Result<Self> {
        let mut u_map = BTreeMap::new();
        let mut v_map = BTreeMap::new();
        let compact: Vec<(usize, usize)> = edges
            .iter()
            .map(|&(u, v)| {
                let nu = u_map.len();
                let cu = *u_map.entry(u).or_insert(nu);
                let nv = v_map.len();
                let cv = *v_map.entry(v).or_insert(nv);
                (cu, cv)
            })
            .collect();
        Self::new(u_map.len(), v_map.len(), compact, attrs, labels)
    }

    pub fn num_u(&self) -> usize {
        self.num_u
    }

    pub fn num_v(&self) -> usize {
        self.num_v
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn attrs(&self) -> &Mat {
        &self.attrs
    }

    pub fn attr_dim(&self) -> usize {
        self.attrs.ncols()
    }

    pub fn labels(&self) -> Option<&Mat> {
        self.labels.as_ref()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.as_ref().map_or(0, |y| y.ncols())
    }

    /// Number of edges whose `(u, v)` pair already appeared at a lower index.
    pub fn duplicate_pair_count(&self) -> usize {
        let mut seen = BTreeMap::new();
        self.edges
            .iter()
            .filter(|&&e| seen.insert(e, ()).is_some())
            .count()
    }

    /// Incident edge ids per U-node, ascending.
    pub fn u_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_u];
        for (i, &(u, _)) in self.edges.iter().enumerate() {
            adj[u].push(i);
        }
        adj
    }

    /// Incident edge ids per V-node, ascending.
    pub fn v_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_v];
        for (i, &(_, v)) in self.edges.iter().enumerate() {
            adj[v].push(i);
        }
        adj
    }

    /// Reorders edges so that new edge `i` is old edge `perm[i]`.
    pub fn permute_edges(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_edges();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || core::mem::replace(&mut seen[p], true)) {
            return Err(Error::param("perm", "must be a permutation of the edge ids"));
        }
        let edges = perm.iter().map(|&p| self.edges[p]).collect();
        let attrs = self.attrs.select_rows(perm.iter());
        let labels = self.labels.as_ref().map(|y| y.select_rows(perm.iter()));
        Self::new(self.num_u, self.num_v, edges, attrs, labels)
    }

    /// Keeps the listed edges (in the given order) and renumbers nodes.
    pub fn edge_subgraph(&self, keep: &[usize]) -> Result<Self> {
        if keep.iter().any(|&e| e >= self.num_edges()) {
            return Err(Error::param("keep", "edge id out of range"));
        }
        let edges: Vec<(usize, usize)> = keep.iter().map(|&e| self.edges[e]).collect();
        let attrs = self.attrs.select_rows(keep.iter());
        let labels = self.labels.as_ref().map(|y| y.select_rows(keep.iter()));
        Self::from_sparse_ids(&edges, attrs, labels)
    }
}

fn degrees(num_u: usize, num_v: usize, edges: &[(usize, usize)]) -> (Vec<usize>, Vec<usize>) {
    let mut deg_u = vec![0usize; num_u];
    let mut deg_v = vec![0usize; num_v];
    for &(u, v) in edges {
        deg_u[u] += 1;
        deg_v[v] += 1;
    }
    (deg_u, deg_v)
}

fn check_degrees(deg_u: &[usize], deg_v: &[usize]) -> Result<()> {
    if let Some(node) = deg_u.iter().position(|&d| d == 0) {
        return Err(Error::DegenerateGraph { side: 'U', node });
    }
    if let Some(node) = deg_v.iter().position(|&d| d == 0) {
        return Err(Error::DegenerateGraph { side: 'V', node });
    }
    Ok(())
}

/// Edge-node indicator matrices `E_U`, `E_V` and node degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidencePair {
    pub e_u: SparseCsr,
    pub e_v: SparseCsr,
    pub deg_u: Vec<usize>,
    pub deg_v: Vec<usize>,
}

pub fn build_incidence(g: &Eabg) -> Result<IncidencePair> {
    let (deg_u, deg_v) = degrees(g.num_u, g.num_v, &g.edges);
    check_degrees(&deg_u, &deg_v)?;
    let m = g.num_edges();
    let e_u = SparseCsr::from_raw(
        m,
        g.num_u,
        (0..=m).collect(),
        g.edges.iter().map(|&(u, _)| u).collect(),
        vec![1.0; m],
    )?;
    let e_v = SparseCsr::from_raw(
        m,
        g.num_v,
        (0..=m).collect(),
        g.edges.iter().map(|&(_, v)| v).collect(),
        vec![1.0; m],
    )?;
    Ok(IncidencePair {
        e_u,
        e_v,
        deg_u,
        deg_v,
    })
}

fn inv_sqrt(deg: &[usize]) -> Vec<f64> {
    deg.iter().map(|&d| 1.0 / math::sqrt(d as f64)).collect()
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::param("beta", "must lie in [0, 1]"))
    }
}

/// Sparse `E D⁻¹ Eᵀ` for a single indicator matrix.
fn transition_from(e: &SparseCsr, deg: &[usize], scale: f64, out: &mut Vec<(usize, usize, f64)>) {
    let mut groups = vec![Vec::new(); deg.len()];
    for (i, &node) in e.col_idx().iter().enumerate() {
        groups[node].push(i);
    }
    for (node, members) in groups.iter().enumerate() {
        let w = scale / deg[node] as f64;
        for &i in members {
            for &j in members {
                out.push((i, j, w));
            }
        }
    }
}

impl IncidencePair {
    pub fn num_edges(&self) -> usize {
        self.e_u.nrows()
    }

    /// `E_U D_U^(−1/2)`.
    pub fn normalized_u(&self) -> SparseCsr {
        self.e_u.scale_columns(&inv_sqrt(&self.deg_u)).expect("degree vector matches E_U")
    }

    /// `E_V D_V^(−1/2)`.
    pub fn normalized_v(&self) -> SparseCsr {
        self.e_v.scale_columns(&inv_sqrt(&self.deg_v)).expect("degree vector matches E_V")
    }

    /// `B = √β·E_U D_U^(−1/2) ∥ √(1−β)·E_V D_V^(−1/2)`, so that
    /// `B Bᵀ = β P_U + (1−β) P_V`.
    pub fn combined_incidence(&self, beta: f64) -> Result<SparseCsr> {
        check_beta(beta)?;
        let left = self.normalized_u().scaled(math::sqrt(beta));
        let right = self.normalized_v().scaled(math::sqrt(1.0 - beta));
        left.hstack(&right)
    }

    /// The normalized incidence whose Gram matrix is the view's transition.
    pub fn normalized(&self, view: View) -> Result<SparseCsr> {
        match view {
            View::Combined { beta } => self.combined_incidence(beta),
            View::U => Ok(self.normalized_u()),
            View::V => Ok(self.normalized_v()),
        }
    }

    pub fn transition_u(&self) -> SparseCsr {
        let mut t = Vec::new();
        transition_from(&self.e_u, &self.deg_u, 1.0, &mut t);
        let m = self.num_edges();
        SparseCsr::from_triplets(m, m, &t).expect("edge ids are in range")
    }

    pub fn transition_v(&self) -> SparseCsr {
        let mut t = Vec::new();
        transition_from(&self.e_v, &self.deg_v, 1.0, &mut t);
        let m = self.num_edges();
        SparseCsr::from_triplets(m, m, &t).expect("edge ids are in range")
    }

    /// `β P_U + (1−β) P_V`, assembled directly from the node groups.
    pub fn transition_combined(&self, beta: f64) -> Result<SparseCsr> {
        check_beta(beta)?;
        let mut t = Vec::new();
        transition_from(&self.e_u, &self.deg_u, beta, &mut t);
        transition_from(&self.e_v, &self.deg_v, 1.0 - beta, &mut t);
        let m = self.num_edges();
        SparseCsr::from_triplets(m, m, &t)
    }

    pub fn transition(&self, view: View) -> Result<SparseCsr> {
        match view {
            View::Combined { beta } => self.transition_combined(beta),
            View::U => Ok(self.transition_u()),
            View::V => Ok(self.transition_v()),
        }
    }

    /// Dense transition matrix, refused above `cap` edges.
    pub fn dense_transition(&self, view: View, cap: usize) -> Result<Mat> {
        let m = self.num_edges();
        if m > cap {
            return Err(Error::DenseCapExceeded { edges: m, cap });
        }
        Ok(self.transition(view)?.to_dense())
    }
}

/// Checks that `attrs`-shaped inputs line up with the graph.
pub(crate) fn check_edge_rows(op: &'static str, g: &Eabg, m: &Mat) -> Result<()> {
    check_shape(op, (g.num_edges(), m.ncols()), m.shape())
}
