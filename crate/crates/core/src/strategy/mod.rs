//! Coordination strategy plug-in contract and the per-approach factory.

pub mod central;
pub mod decentral;
pub mod emergent;

use crate::config::{Approach, ExperimentConfig};
use crate::engine::{VehicleId, World, WorldView};
use crate::network::NodeId;
use crate::SimRng;

/// Permission for an ordered group of vehicles — one lane's contiguous front,
/// a single vehicle in the common case — to begin crossing `node`.
#[derive(Debug, Clone)]
pub struct Grant {
    pub node: NodeId,
    pub vehicles: Vec<VehicleId>,
}

/// Per-step output of a strategy: grants take effect immediately, charges are
/// deducted from vehicle budgets whether or not the payer was granted.
#[derive(Debug, Clone, Default)]
pub struct StrategyDecision {
    pub grants: Vec<Grant>,
    pub charges: Vec<(VehicleId, f64)>,
}

pub trait Strategy {
    fn name(&self) -> &'static str;

    /// Observes the world before motion and decides who crosses this step.
    fn decide(&mut self, world: &WorldView<'_>, rng: &mut SimRng) -> StrategyDecision;

    /// Runs after motion and metrics; vehicle-side state updates live here.
    fn post_step(&mut self, _world: &mut World) {}
}

/// Builds the configured approach's strategy.
pub fn strategy_for(cfg: &ExperimentConfig) -> Box<dyn Strategy> {
    match cfg.approach {
        Approach::Eb => Box::new(emergent::EmergentStrategy::new(cfg.eb.clone())),
        Approach::Coop | Approach::Comp => {
            Box::new(central::CentralAuctionStrategy::new(cfg.auction.clone()))
        }
        Approach::Dauction => Box::new(decentral::DecentralAuctionStrategy::new(
            cfg.dauction.clone(),
        )),
    }
}
