//! Emergent-behavior coordination.
//!
//! Every vehicle carries a non-negative "hurry" that grows while it waits and
//! decays in free motion; same-lane neighbors within a spreading range pull a
//! vehicle's hurry up toward higher-hurry neighbors, so stopped queues
//! converge to a shared value. At each free intersection the hurriest lane
//! leader crosses, together with the contiguous tail of followers whose hurry
//! matches its own — the emergent platoon.

use crate::engine::{World, WorldView};
use crate::strategy::{Grant, Strategy, StrategyDecision};
use crate::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HurryFn {
    Lin,
    Log,
    Gro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpreadFn {
    Std,
    Dbl,
    Rbl,
}

#[derive(Debug, Clone)]
pub struct EbConfig {
    /// Update rule applied with +`ic` while waiting.
    pub inc_fn: HurryFn,
    /// Update rule applied with −`dc` in free motion.
    pub dec_fn: HurryFn,
    pub ic: f64,
    pub dc: f64,
    pub spread_fn: SpreadFn,
    /// Spreading range, meters.
    pub sr: f64,
    /// Distance magnitude scaling the neighbor interaction.
    pub dm: f64,
    /// Hurry-equality tolerance for platoon membership.
    pub platoon_eps: f64,
}

impl Default for EbConfig {
    fn default() -> Self {
        EbConfig {
            inc_fn: HurryFn::Log,
            dec_fn: HurryFn::Gro,
            ic: 10.0,
            dc: 10.0,
            spread_fn: SpreadFn::Std,
            sr: 100.0,
            dm: 10.0,
            platoon_eps: 0.5,
        }
    }
}

/// One hurry update. `c` is positive while the vehicle waits and negative in
/// free motion; the result never drops below zero.
pub fn hurry_update(h: f64, f: HurryFn, c: f64) -> f64 {
    let next = match f {
        HurryFn::Lin => h + c,
        HurryFn::Log => h + c * (h + 2.0).ln(),
        HurryFn::Gro => h + (h * c / 100.0).max(c),
    };
    next.max(0.0)
}

/// Total pull a vehicle with hurry `h_v` receives from same-lane neighbors
/// `(h_n, d)` within the spreading range. Only higher-hurry neighbors
/// contribute, and each term is capped at the difference so the pair
/// converges instead of overshooting.
pub fn spreading_delta(h_v: f64, neighbors: &[(f64, f64)], f: SpreadFn, dm: f64, sr: f64) -> f64 {
    let mut total = 0.0;
    for &(h_n, d) in neighbors {
        debug_assert!(d > 0.0, "coincident vehicles");
        let diff = h_n - h_v;
        if diff <= 0.0 {
            continue;
        }
        let term = match f {
            SpreadFn::Std => diff * dm / d,
            SpreadFn::Dbl => (diff + 1.0).ln() * dm / d,
            SpreadFn::Rbl => (diff + 1.0).ln() * sr * dm / d,
        };
        total += term.min(diff);
    }
    total
}

pub struct EmergentStrategy {
    cfg: EbConfig,
}

impl EmergentStrategy {
    pub fn new(cfg: EbConfig) -> Self {
        EmergentStrategy { cfg }
    }

    pub fn config(&self) -> &EbConfig {
        &self.cfg
    }
}

impl Strategy for EmergentStrategy {
    fn name(&self) -> &'static str {
        "eb"
    }

    fn decide(&mut self, w: &WorldView<'_>, _rng: &mut SimRng) -> StrategyDecision {
        let mut grants = Vec::new();
        for node in w.grid.nodes() {
            if w.intersection(node).occupant.is_some() {
                continue;
            }
            // only vehicles standing at the line contend; reserving the
            // intersection for a rolling leader would idle it
            let leaders: Vec<_> = w
                .lane_leaders(node)
                .into_iter()
                .filter(|&l| w.at_line(w.vehicle(l)))
                .collect();
            let Some(&leader) = leaders.iter().reduce(|best, cand| {
                let (hb, hc) = (w.vehicle(*best).hurry, w.vehicle(*cand).hurry);
                if hc > hb || (hc == hb && cand < best) {
                    cand
                } else {
                    best
                }
            }) else {
                continue;
            };
            let mut vehicles = vec![leader];
            let lead_hurry = w.vehicle(leader).hurry;
            for f in w.followers_in_zone(leader) {
                if (w.vehicle(f).hurry - lead_hurry).abs() <= self.cfg.platoon_eps {
                    vehicles.push(f);
                } else {
                    break;
                }
            }
            grants.push(Grant { node, vehicles });
        }
        StrategyDecision {
            grants,
            charges: Vec::new(),
        }
    }

    /// Hurry dynamics: the waiting/free update first, then one simultaneous
    /// spreading pass over the updated values.
    fn post_step(&mut self, world: &mut World) {
        let threshold = world.params.wait_speed_threshold;
        let updated: Vec<f64> = world
            .vehicles
            .iter()
            .map(|v| {
                if v.speed < threshold {
                    hurry_update(v.hurry, self.cfg.inc_fn, self.cfg.ic)
                } else {
                    hurry_update(v.hurry, self.cfg.dec_fn, -self.cfg.dc)
                }
            })
            .collect();

        let mut next = updated.clone();
        for q in &world.edge_queues {
            for (i, &vid) in q.iter().enumerate() {
                let pos = world.vehicles[vid].pos;
                let mut neighbors = Vec::new();
                for (j, &other) in q.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let d = (world.vehicles[other].pos - pos).abs();
                    if d <= self.cfg.sr && d > 0.0 {
                        neighbors.push((updated[other], d));
                    }
                }
                next[vid] = updated[vid]
                    + spreading_delta(
                        updated[vid],
                        &neighbors,
                        self.cfg.spread_fn,
                        self.cfg.dm,
                        self.cfg.sr,
                    );
            }
        }
        for (v, h) in world.vehicles.iter_mut().zip(next) {
            v.hurry = h;
        }
    }
}
