//! Manhattan-grid road network and uniform route sampling.
//!
//! Nodes sit on a W×H lattice; every pair of adjacent nodes is joined by two
//! directed edges (one per travel direction) of uniform length. Routes are
//! built by repeatedly drawing a successor edge uniformly at random, never
//! taking the immediate U-turn while another option exists.

use crate::error::{Error, Result};
use crate::SimRng;
use rand::Rng;
use std::collections::HashMap;
use std::io::{self, Write};

/// Intersection identifier; index into the lattice, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Directed lane identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

#[derive(Debug, Clone)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
}

/// Immutable road network. Construct with [`build_grid`].
#[derive(Debug, Clone)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub edge_length: f64,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<EdgeId>>,
    in_edges: Vec<Vec<EdgeId>>,
    reverse: Vec<EdgeId>,
}

/// Connected sequence of edges a vehicle travels, front to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    pub edges: Vec<EdgeId>,
}

impl Route {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Builds the W×H lattice with bidirectional roads of uniform `edge_length`.
pub fn build_grid(width: usize, height: usize, edge_length: f64) -> Result<Grid> {
    if width < 2 || height < 2 {
        return Err(Error::DegenerateGrid { width, height });
    }
    if !edge_length.is_finite() || edge_length <= 0.0 {
        return Err(Error::InvalidEdgeLength(edge_length));
    }

    let node = |x: usize, y: usize| NodeId((y * width + x) as u32);
    let n_nodes = width * height;
    let mut edges = Vec::new();
    let mut out_edges = vec![Vec::new(); n_nodes];
    let mut by_pair = HashMap::new();

    // Node-major enumeration keeps each node's outgoing edges in ascending
    // EdgeId order, which fixes the sampling order everywhere.
    for y in 0..height {
        for x in 0..width {
            let from = node(x, y);
            let mut neighbors = Vec::new();
            if x + 1 < width {
                neighbors.push(node(x + 1, y));
            }
            if x > 0 {
                neighbors.push(node(x - 1, y));
            }
            if y + 1 < height {
                neighbors.push(node(x, y + 1));
            }
            if y > 0 {
                neighbors.push(node(x, y - 1));
            }
            for to in neighbors {
                let id = EdgeId(edges.len() as u32);
                edges.push(Edge {
                    from,
                    to,
                    length: edge_length,
                });
                out_edges[from.0 as usize].push(id);
                by_pair.insert((from, to), id);
            }
        }
    }

    let reverse = edges
        .iter()
        .map(|e| by_pair[&(e.to, e.from)])
        .collect::<Vec<_>>();

    let mut in_edges = vec![Vec::new(); n_nodes];
    for (i, e) in edges.iter().enumerate() {
        in_edges[e.to.0 as usize].push(EdgeId(i as u32));
    }

    Ok(Grid {
        width,
        height,
        edge_length,
        edges,
        out_edges,
        in_edges,
        reverse,
    })
}

impl Grid {
    pub fn node_count(&self) -> usize {
        self.width * self.height
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.node_count() as u32).map(NodeId)
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0 as usize]
    }

    /// Outgoing edges of `node`, ascending by EdgeId.
    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_edges[node.0 as usize]
    }

    /// Incoming edges of `node`, ascending by EdgeId.
    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_edges[node.0 as usize]
    }

    /// The opposite-direction edge of `id`.
    pub fn reverse_of(&self, id: EdgeId) -> EdgeId {
        self.reverse[id.0 as usize]
    }

    /// Edges a vehicle arriving on `incoming` may continue onto: the outgoing
    /// edges at its end node, minus the U-turn whenever an alternative exists.
    /// Order is ascending by EdgeId.
    pub fn feasible_successors(&self, incoming: EdgeId) -> Vec<EdgeId> {
        let end = self.edge(incoming).to;
        let rev = self.reverse_of(incoming);
        let all = self.out_edges(end);
        if all.len() > 1 {
            all.iter().copied().filter(|&e| e != rev).collect()
        } else {
            all.to_vec()
        }
    }

    /// One line per edge: `from to length`.
    pub fn write_adjacency<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for e in &self.edges {
            writeln!(w, "{} {} {}", e.from.0, e.to.0, e.length)?;
        }
        Ok(())
    }
}

/// Samples a route of `length` edges starting with `start_edge`; each
/// subsequent edge is drawn uniformly from the feasible successors of the
/// previous one, consuming exactly `length - 1` words from `rng`.
pub fn sample_route(grid: &Grid, start_edge: EdgeId, length: usize, rng: &mut SimRng) -> Route {
    assert!(length >= 1, "route length must be at least 1");
    let mut edges = Vec::with_capacity(length);
    edges.push(start_edge);
    while edges.len() < length {
        let succ = grid.feasible_successors(*edges.last().unwrap());
        // One u32 word per draw; modulo bias is < 2^-30 for the at-most-3
        // successors a lattice node offers.
        let pick = (rng.next_u32() as usize) % succ.len();
        edges.push(succ[pick]);
    }
    Route { edges }
}
