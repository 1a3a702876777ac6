//! Undirected neighbor graphs over the rows or columns of the agent grid.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Named topology for [`NeighborGraph::make`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Path,
    Ring,
    Complete,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Path => "path",
            Topology::Ring => "ring",
            Topology::Complete => "complete",
        })
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(Topology::Path),
            "ring" => Ok(Topology::Ring),
            "complete" => Ok(Topology::Complete),
            other => Err(Error::InvalidGraph(format!("unknown topology `{other}`"))),
        }
    }
}

/// Connected undirected graph on `0..m`. Every vertex counts as its own
/// neighbor; the stored edge set never contains loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl NeighborGraph {
    pub fn make(kind: Topology, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut edges = Vec::new();
        match kind {
            Topology::Path => edges.extend((1..m).map(|k| (k - 1, k))),
            Topology::Ring => {
                edges.extend((1..m).map(|k| (k - 1, k)));
                if m > 2 {
                    edges.push((m - 1, 0));
                }
            }
            Topology::Complete => {
                for a in 0..m {
                    edges.extend((a + 1..m).map(|b| (a, b)));
                }
            }
        }
        Self::from_edges(m, &edges)
    }

    /// Builds a graph from an explicit edge list. Loops and duplicate edges
    /// are ignored; the result must be connected.
    pub fn from_edges(m: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        let mut adjacency = alloc::vec![BTreeSet::new(); m];
        for &(a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) outside 0..{m}")));
            }
            if a != b {
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
        let g = Self { adjacency };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    /// Neighbors of `k` excluding `k`.
    pub fn neighbors(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[k].iter().copied()
    }

    /// Neighbors of `k` including `k`, ascending.
    pub fn closed_neighbors(&self, k: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.adjacency[k].iter().copied().collect();
        let at = v.partition_point(|&x| x < k);
        v.insert(at, k);
        v
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        a == b || self.adjacency[a].contains(&b)
    }

    /// Degree without the self-loop.
    pub fn degree(&self, k: usize) -> usize {
        self.adjacency[k].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, set) in self.adjacency.iter().enumerate() {
            out.extend(set.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    fn is_connected(&self) -> bool {
        let mut seen = alloc::vec![false; self.num_vertices()];
        let mut stack = alloc::vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// Degree matrix minus adjacency, loops excluded.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let m = self.num_vertices();
        DMatrix::from_fn(m, m, |a, b| {
            if a == b {
                self.degree(a) as f64
            } else if self.adjacency[a].contains(&b) {
                -1.0
            } else {
                0.0
            }
        })
    }

    /// `w_ik = 1/max(|M_i|, |M_k|)` for neighbors `k ≠ i`, with neighbor set
    /// sizes counting the vertex itself; the diagonal takes the remainder.
    pub fn metropolis_weights(&self) -> DMatrix<f64> {
        let m = self.num_vertices();
        let size = |k: usize| (self.degree(k) + 1) as f64;
        let mut w = DMatrix::zeros(m, m);
        for a in 0..m {
            for &b in &self.adjacency[a] {
                w[(a, b)] = 1.0 / size(a).max(size(b));
            }
            let off: f64 = self.adjacency[a].iter().map(|&b| w[(a, b)]).sum();
            w[(a, a)] = 1.0 - off;
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn named_topologies() {
        assert_eq!(NeighborGraph::make(Topology::Path, 2).unwrap().edges(), [(0, 1)]);
        assert_eq!(NeighborGraph::make(Topology::Path, 4).unwrap().edges(), [(0, 1), (1, 2), (2, 3)]);
        assert_eq!(NeighborGraph::make(Topology::Complete, 3).unwrap().edges(), [(0, 1), (0, 2), (1, 2)]);
        assert_eq!(NeighborGraph::make(Topology::Ring, 4).unwrap().edges().len(), 4);
        assert_eq!(NeighborGraph::make(Topology::Ring, 2).unwrap().edges(), [(0, 1)]);
        assert!(NeighborGraph::make(Topology::Path, 0).is_err());
        let single = NeighborGraph::make(Topology::Ring, 1).unwrap();
        assert_eq!(single.closed_neighbors(0), [0]);
        assert_eq!(NeighborGraph::make(Topology::Path, 3).unwrap().closed_neighbors(1), [0, 1, 2]);
        assert_eq!("ring".parse::<Topology>().unwrap(), Topology::Ring);
        assert!("star".parse::<Topology>().is_err());
    }

    #[test]
    fn disconnected_edges_are_rejected() {
        assert!(matches!(NeighborGraph::from_edges(4, &[(0, 1), (2, 3)]), Err(Error::Disconnected)));
        assert!(matches!(NeighborGraph::from_edges(2, &[(0, 0)]), Err(Error::Disconnected)));
        assert!(NeighborGraph::from_edges(2, &[(0, 5)]).is_err());
        assert!(NeighborGraph::from_edges(3, &[(0, 1), (1, 1), (1, 2), (2, 1)]).is_ok());
    }

    #[test]
    fn laplacian_examples() {
        let l = NeighborGraph::make(Topology::Path, 2).unwrap().laplacian();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let l3 = NeighborGraph::make(Topology::Path, 3).unwrap().laplacian();
        let mut eig: Vec<f64> = l3.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!(eig[0].abs() < 1e-12 && (eig[1] - 1.0).abs() < 1e-12 && (eig[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn metropolis_examples() {
        let w2 = NeighborGraph::make(Topology::Path, 2).unwrap().metropolis_weights();
        assert!(w2.iter().all(|&v| v == 0.5));
        let w3 = NeighborGraph::make(Topology::Path, 3).unwrap().metropolis_weights();
        let third = 1.0 / 3.0;
        assert!((w3[(0, 1)] - third).abs() < 1e-15 && (w3[(0, 0)] - 2.0 * third).abs() < 1e-15);
        assert!((w3[(1, 1)] - third).abs() < 1e-15 && (w3[(1, 2)] - third).abs() < 1e-15);
        assert_eq!(w3[(0, 2)], 0.0);
        let w4 = NeighborGraph::make(Topology::Complete, 4).unwrap().metropolis_weights();
        assert!(w4.iter().all(|&v| (v - 0.25).abs() < 1e-15));
    }

    fn random_graph() -> impl Strategy<Value = NeighborGraph> {
        (1usize..=16, proptest::collection::vec((0usize..16, 0usize..16), 0..40)).prop_map(|(m, extra)| {
            // A spanning path keeps it connected; extra chords vary the degrees.
            let mut edges: Vec<(usize, usize)> = (1..m).map(|k| (k - 1, k)).collect();
            edges.extend(extra.into_iter().map(|(a, b)| (a % m, b % m)));
            NeighborGraph::from_edges(m, &edges).unwrap()
        })
    }

    proptest! {
        #[test]
        fn metropolis_is_symmetric_doubly_stochastic(g in random_graph()) {
            let w = g.metropolis_weights();
            let m = g.num_vertices();
            for a in 0..m {
                prop_assert!((w.row(a).sum() - 1.0).abs() < 1e-12);
                prop_assert!((w.column(a).sum() - 1.0).abs() < 1e-12);
                for b in 0..m {
                    prop_assert!((w[(a, b)] - w[(b, a)]).abs() < 1e-12);
                    prop_assert!(w[(a, b)] >= 0.0);
                    if !g.contains(a, b) {
                        prop_assert_eq!(w[(a, b)], 0.0);
                    }
                }
            }
            let mut eig: Vec<f64> = w.symmetric_eigen().eigenvalues.iter().copied().collect();
            eig.sort_by(f64::total_cmp);
            prop_assert!((eig[m - 1] - 1.0).abs() < 1e-10);
            if m > 1 {
                prop_assert!(eig[m - 2] < 1.0 - 1e-10);
            }
            prop_assert!(eig[0] > -1.0 + 1e-10);
        }

        #[test]
        fn laplacian_annihilates_ones(g in random_graph()) {
            let l = g.laplacian();
            for a in 0..g.num_vertices() {
                prop_assert!(l.row(a).sum().abs() < 1e-14);
            }
        }
    }
}
