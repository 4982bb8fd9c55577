//! Decentralized auction with no auctioneer.
//!
//! A vehicle entering the broadcast radius of its next intersection announces
//! a bid, computed once on entry, and slots into that intersection's ranking.
//! Vehicles cross strictly in ranking order: the top-ranked vehicle is
//! granted when it stands at its stop line, and the intersection idles while
//! it is still rolling up — bid priority outranks arrival order. Newcomers
//! with higher bids overtake the ranking without any re-auction. If the
//! top-ranked vehicle is physically boxed in behind lower-ranked traffic on
//! its own lane, its lane's front vehicle is served instead (nothing else can
//! unblock the head).

use crate::engine::{VehicleId, VehicleState, WorldView};
use crate::network::NodeId;
use crate::strategy::central::{compute_bid, Bidding};
use crate::strategy::{Grant, Strategy, StrategyDecision};
use crate::SimRng;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct DauctionConfig {
    pub bidding: Bidding,
    /// Broadcast radius around the intersection, meters.
    pub radius: f64,
    /// Serve the best-ranked vehicle already at its line instead of idling
    /// while the head rolls up.
    pub skip_absent_head: bool,
}

impl Default for DauctionConfig {
    fn default() -> Self {
        DauctionConfig {
            bidding: Bidding::Random,
            radius: 50.0,
            skip_absent_head: false,
        }
    }
}

/// Bid-ordered ranking of the vehicles contending for one intersection.
#[derive(Debug, Clone, Default)]
pub struct ContentionList {
    entries: Vec<(VehicleId, f64)>,
}

impl ContentionList {
    /// Inserts a newcomer at its rank: below every strictly higher bid and
    /// below equal bids from lower ids. Later entries never reorder.
    pub fn join(&mut self, vehicle: VehicleId, bid: f64) {
        debug_assert!(
            !self.entries.iter().any(|&(v, _)| v == vehicle),
            "duplicate join"
        );
        let at = self
            .entries
            .partition_point(|&(v, b)| b > bid || (b == bid && v < vehicle));
        self.entries.insert(at, (vehicle, bid));
    }

    pub fn remove(&mut self, vehicle: VehicleId) {
        self.entries.retain(|&(v, _)| v != vehicle);
    }

    pub fn head(&self) -> Option<(VehicleId, f64)> {
        self.entries.first().copied()
    }

    pub fn bid_of(&self, vehicle: VehicleId) -> Option<f64> {
        self.entries
            .iter()
            .find(|&&(v, _)| v == vehicle)
            .map(|&(_, b)| b)
    }

    pub fn entries(&self) -> &[(VehicleId, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub struct DecentralAuctionStrategy {
    cfg: DauctionConfig,
    lists: BTreeMap<NodeId, ContentionList>,
    /// Which intersection each broadcast vehicle is ranked at.
    joined: BTreeMap<VehicleId, NodeId>,
}

impl DecentralAuctionStrategy {
    pub fn new(cfg: DauctionConfig) -> Self {
        DecentralAuctionStrategy {
            cfg,
            lists: BTreeMap::new(),
            joined: BTreeMap::new(),
        }
    }

    pub fn list(&self, node: NodeId) -> Option<&ContentionList> {
        self.lists.get(&node)
    }

    fn grant(&mut self, node: NodeId, vehicle: VehicleId, bid: f64, out: &mut StrategyDecision) {
        out.grants.push(Grant {
            node,
            vehicles: vec![vehicle],
        });
        out.charges.push((vehicle, bid));
        self.lists.get_mut(&node).unwrap().remove(vehicle);
        self.joined.remove(&vehicle);
        if self.lists.get(&node).is_some_and(|l| l.is_empty()) {
            self.lists.remove(&node);
        }
    }
}

impl Strategy for DecentralAuctionStrategy {
    fn name(&self) -> &'static str {
        "dauction"
    }

    fn decide(&mut self, w: &WorldView<'_>, rng: &mut SimRng) -> StrategyDecision {
        // broadcast: every driving vehicle entering the radius announces once
        for v in w.vehicles {
            if v.state != VehicleState::Driving || self.joined.contains_key(&v.id) {
                continue;
            }
            if w.dist_to_line(v) <= self.cfg.radius {
                let node = w.grid.edge(v.current_edge()).to;
                let bid = compute_bid(v.budget, v.remaining_crossings(), self.cfg.bidding, rng);
                self.lists.entry(node).or_default().join(v.id, bid);
                self.joined.insert(v.id, node);
            }
        }

        let mut out = StrategyDecision::default();
        let nodes: Vec<NodeId> = self.lists.keys().copied().collect();
        for node in nodes {
            if w.intersection(node).occupant.is_some() {
                continue;
            }
            if self.cfg.skip_absent_head {
                let ready = self.lists[&node]
                    .entries()
                    .iter()
                    .find(|&&(v, _)| w.at_line(w.vehicle(v)))
                    .copied();
                if let Some((vid, bid)) = ready {
                    self.grant(node, vid, bid, &mut out);
                }
                continue;
            }
            let Some((head, head_bid)) = self.lists[&node].head() else {
                continue;
            };
            if w.at_line(w.vehicle(head)) {
                self.grant(node, head, head_bid, &mut out);
                continue;
            }
            // boxed head: traffic ahead on its own lane can only clear by
            // crossing, so its lane leader inherits the turn
            let edge = w.vehicle(head).current_edge();
            let front = w.edge_queues[edge.0 as usize][0];
            if front != head && w.at_line(w.vehicle(front)) {
                if let Some(bid) = self.lists[&node].bid_of(front) {
                    self.grant(node, front, bid, &mut out);
                }
            }
            // head still rolling up: the intersection idles this step
        }
        out
    }
}
