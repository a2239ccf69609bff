//! Directed communication topology.
//!
//! An edge `(j, i)` means node `j` receives from node `i`. Self-loops are
//! implicit (every agent reads its own state) and are never stored. Nodes are
//! numbered `0..n`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::rng::SimRng;
use crate::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Digraph {
    in_adj: Vec<Vec<NodeId>>,
    out_adj: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl Digraph {
    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes(n));
        }
        Ok(Self {
            in_adj: vec![Vec::new(); n],
            out_adj: vec![Vec::new(); n],
            edge_count: 0,
        })
    }

    /// Builds a graph from `(receiver, sender)` pairs. Duplicates collapse.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Result<Self> {
        let mut g = Self::empty(n)?;
        for (receiver, sender) in edges {
            g.add_edge(receiver, sender)?;
        }
        Ok(g)
    }

    /// Directed ring `0 → 1 → … → n−1 → 0`.
    pub fn ring(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).map(|i| ((i + 1) % n, i)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(
            n,
            (0..n).flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (j, i))),
        )
    }

    /// Adds the edge over which `receiver` hears `sender`. Returns whether it was new.
    pub fn add_edge(&mut self, receiver: NodeId, sender: NodeId) -> Result<bool> {
        self.check(receiver)?;
        self.check(sender)?;
        if receiver == sender {
            return Err(Error::SelfLoop(receiver));
        }
        let ins = &mut self.in_adj[receiver];
        match ins.binary_search(&sender) {
            Ok(_) => Ok(false),
            Err(pos) => {
                ins.insert(pos, sender);
                let outs = &mut self.out_adj[sender];
                let pos = outs.binary_search(&receiver).unwrap_err();
                outs.insert(pos, receiver);
                self.edge_count += 1;
                Ok(true)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.in_adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn has_edge(&self, receiver: NodeId, sender: NodeId) -> bool {
        self.in_adj
            .get(receiver)
            .is_some_and(|ins| ins.binary_search(&sender).is_ok())
    }

    /// All `(receiver, sender)` pairs, ordered by receiver then sender.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.in_adj
            .iter()
            .enumerate()
            .flat_map(|(j, ins)| ins.iter().map(move |&i| (j, i)))
    }

    /// Sorted senders that `j` hears from.
    pub fn in_neighbors(&self, j: NodeId) -> Result<&[NodeId]> {
        self.check(j)?;
        Ok(&self.in_adj[j])
    }

    /// Sorted receivers that hear `j`.
    pub fn out_neighbors(&self, j: NodeId) -> Result<&[NodeId]> {
        self.check(j)?;
        Ok(&self.out_adj[j])
    }

    pub fn in_degree(&self, j: NodeId) -> Result<usize> {
        self.in_neighbors(j).map(<[_]>::len)
    }

    pub fn out_degree(&self, j: NodeId) -> Result<usize> {
        self.out_neighbors(j).map(<[_]>::len)
    }

    /// `r_ji = 1/(1 + d_j^in)` when `i` is an in-neighbor of `j` or `i = j`.
    pub fn pull_weight(&self, j: NodeId, i: NodeId) -> f64 {
        if j >= self.node_count() || i >= self.node_count() {
            return 0.0;
        }
        if i == j || self.has_edge(j, i) {
            1.0 / (1.0 + self.in_adj[j].len() as f64)
        } else {
            0.0
        }
    }

    /// `c_lj = 1/(1 + d_j^out)` when `l` is an out-neighbor of `j` or `l = j`.
    pub fn push_weight(&self, l: NodeId, j: NodeId) -> f64 {
        if j >= self.node_count() || l >= self.node_count() {
            return 0.0;
        }
        if l == j || self.has_edge(l, j) {
            1.0 / (1.0 + self.out_adj[j].len() as f64)
        } else {
            0.0
        }
    }

    /// Hop distances from `source` following edge direction; `None` if unreachable.
    pub fn distances_from(&self, source: NodeId) -> Result<Vec<Option<usize>>> {
        self.check(source)?;
        let mut dist = vec![None; self.node_count()];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let next = dist[u].map(|d| d + 1);
            for &v in &self.out_adj[u] {
                if dist[v].is_none() {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    pub fn is_strongly_connected(&self) -> bool {
        // Everything reachable from node 0 forwards and backwards.
        let forward = self.reach(0, &self.out_adj);
        let backward = self.reach(0, &self.in_adj);
        forward.iter().all(|&r| r) && backward.iter().all(|&r| r)
    }

    /// Longest shortest directed path, by BFS from every node.
    pub fn diameter(&self) -> Result<usize> {
        let mut diameter = 0;
        for source in 0..self.node_count() {
            for d in self.distances_from(source)? {
                diameter = diameter.max(d.ok_or(Error::NotStronglyConnected)?);
            }
        }
        Ok(diameter)
    }

    /// A directed Hamiltonian cycle over a seeded random ordering of the nodes,
    /// plus every other ordered pair independently with probability
    /// `extra_edge_prob`.
    ///
    /// Draw order: the node permutation (Fisher–Yates), then one Bernoulli per
    /// non-cycle pair `(j, i)` in lexicographic order of receiver `j` then
    /// sender `i`.
    pub fn random_strongly_connected(n: usize, extra_edge_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&extra_edge_prob) {
            return Err(Error::InvalidProbability(extra_edge_prob));
        }
        let mut g = Self::empty(n)?;
        let mut rng = SimRng::new(seed);
        let mut order: Vec<NodeId> = (0..n).collect();
        rng.shuffle(&mut order);
        for k in 0..n {
            g.add_edge(order[(k + 1) % n], order[k])?;
        }
        for j in 0..n {
            for i in 0..n {
                if i != j && !g.has_edge(j, i) && rng.bernoulli(extra_edge_prob) {
                    g.add_edge(j, i)?;
                }
            }
        }
        Ok(g)
    }

    fn reach(&self, source: NodeId, adj: &[Vec<NodeId>]) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode {
                node,
                n: self.node_count(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_neighborhoods() {
        // 0 → 1 → 2 → 0
        let g = Digraph::ring(3).unwrap();
        assert_eq!(g.in_neighbors(1).unwrap(), &[0]);
        assert_eq!(g.out_neighbors(1).unwrap(), &[2]);
        assert_eq!(g.edge_count(), 3);
        let k3 = Digraph::complete(3).unwrap();
        for j in 0..3 {
            assert_eq!(k3.in_degree(j).unwrap(), 2);
        }
        assert!(matches!(
            g.in_neighbors(3),
            Err(Error::UnknownNode { node: 3, n: 3 })
        ));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Digraph::empty(1), Err(Error::TooFewNodes(1)));
        let mut g = Digraph::empty(3).unwrap();
        assert_eq!(g.add_edge(1, 1), Err(Error::SelfLoop(1)));
        assert!(g.add_edge(0, 5).is_err());
        assert!(g.add_edge(0, 1).unwrap());
        assert!(!g.add_edge(0, 1).unwrap());
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn weights() {
        // node 0 hears 1 and 2; node 3 sends to 0, 1, 2
        let g = Digraph::from_edges(4, [(0, 1), (0, 2), (0, 3), (1, 3), (2, 3), (3, 0)]).unwrap();
        assert_eq!(g.pull_weight(0, 1), 0.25);
        assert_eq!(g.pull_weight(0, 0), 0.25);
        assert_eq!(g.pull_weight(1, 0), 0.0);
        assert_eq!(g.push_weight(2, 3), 0.25);
        assert_eq!(g.push_weight(3, 3), 0.25);
        assert_eq!(g.push_weight(1, 2), 0.0);

        let two_in = Digraph::from_edges(3, [(0, 1), (0, 2)]).unwrap();
        assert_eq!(two_in.pull_weight(0, 2), 1.0 / 3.0);

        let ring = Digraph::ring(5).unwrap();
        for j in 0..5 {
            let pred = (j + 4) % 5;
            assert_eq!(ring.pull_weight(j, j), 0.5);
            assert_eq!(ring.pull_weight(j, pred), 0.5);
            assert_eq!(ring.push_weight(j, j), 0.5);
            assert_eq!(ring.push_weight((j + 1) % 5, j), 0.5);
        }
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(Digraph::ring(5).unwrap().diameter().unwrap(), 4);
        assert_eq!(Digraph::complete(4).unwrap().diameter().unwrap(), 1);
        let one_way = Digraph::from_edges(2, [(1, 0)]).unwrap();
        assert!(!one_way.is_strongly_connected());
        assert_eq!(one_way.diameter(), Err(Error::NotStronglyConnected));
    }

    #[test]
    fn generator_extremes() {
        for seed in 0..5 {
            let ring = Digraph::random_strongly_connected(6, 0.0, seed).unwrap();
            assert_eq!(ring.edge_count(), 6);
            assert_eq!(ring.diameter().unwrap(), 5);
            let full = Digraph::random_strongly_connected(6, 1.0, seed).unwrap();
            assert_eq!(full.edge_count(), 30);
            assert_eq!(full.diameter().unwrap(), 1);
        }
        assert!(Digraph::random_strongly_connected(4, 1.5, 0).is_err());
        assert_eq!(
            Digraph::random_strongly_connected(10, 0.3, 99).unwrap(),
            Digraph::random_strongly_connected(10, 0.3, 99).unwrap()
        );
    }
}
