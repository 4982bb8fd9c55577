//! Full experiment parameter set with validation.

use crate::engine::SimParams;
use crate::error::{Error, Result};
use crate::strategy::central::{AuctionConfig, AuctionVariant};
use crate::strategy::decentral::DauctionConfig;
use crate::strategy::emergent::EbConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approach {
    Eb,
    Coop,
    Comp,
    Dauction,
}

impl Approach {
    pub fn as_str(&self) -> &'static str {
        match self {
            Approach::Eb => "eb",
            Approach::Comp => "comp",
            Approach::Coop => "coop",
            Approach::Dauction => "dauction",
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eb" => Ok(Approach::Eb),
            "coop" => Ok(Approach::Coop),
            "comp" => Ok(Approach::Comp),
            "dauction" => Ok(Approach::Dauction),
            other => Err(Error::InvalidConfig(format!(
                "unknown approach '{other}' (expected eb|coop|comp|dauction)"
            ))),
        }
    }
}

/// Everything one batch of runs depends on. A batch is `runs` independent
/// simulations seeded `base_seed..base_seed+runs`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub approach: Approach,
    pub vehicles: usize,
    pub steps: u64,
    pub runs: usize,
    pub base_seed: u64,
    pub grid_width: usize,
    pub grid_height: usize,
    pub edge_length: f64,
    pub sim: SimParams,
    pub eb: EbConfig,
    pub auction: AuctionConfig,
    pub dauction: DauctionConfig,
}

impl ExperimentConfig {
    pub fn defaults_for(approach: Approach) -> Self {
        let variant = match approach {
            Approach::Comp => AuctionVariant::Competitive,
            _ => AuctionVariant::Cooperative,
        };
        ExperimentConfig {
            approach,
            vehicles: 100,
            steps: 10_000,
            runs: 10,
            base_seed: 42,
            grid_width: 5,
            grid_height: 5,
            edge_length: 100.0,
            sim: SimParams::default(),
            eb: EbConfig::default(),
            auction: AuctionConfig::defaults_for(variant),
            dauction: DauctionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.grid_width < 2 || self.grid_height < 2 {
            return bad(format!(
                "grid must be at least 2x2, got {}x{}",
                self.grid_width, self.grid_height
            ));
        }
        if !self.edge_length.is_finite() || self.edge_length <= 0.0 {
            return bad(format!(
                "edge length must be positive, got {}",
                self.edge_length
            ));
        }
        if self.vehicles == 0 || self.steps == 0 || self.runs == 0 {
            return bad("vehicles, steps and runs must all be at least 1".into());
        }
        if self.sim.route_len == 0 {
            return bad("route length must be at least 1".into());
        }
        if self.sim.v_max <= 0.0 || self.sim.vehicle_len <= 0.0 || self.sim.min_gap < 0.0 {
            return bad("kinematic constants must be positive".into());
        }
        if self.sim.t_cross == 0 {
            return bad("tcross must be at least 1 step".into());
        }
        if self.sim.approach_radius <= 0.0 {
            return bad("approach radius must be positive".into());
        }
        if self.sim.initial_budget < 0.0 {
            return bad("budget must be non-negative".into());
        }
        if self.eb.ic <= 0.0 || self.eb.dc <= 0.0 || self.eb.sr <= 0.0 || self.eb.dm <= 0.0 {
            return bad("eb coefficients ic, dc, sr, dm must be positive".into());
        }
        if self.eb.platoon_eps < 0.0 {
            return bad("platoon-eps must be non-negative".into());
        }
        if !matches!(self.auction.sponsorship_pct, 0 | 25 | 50 | 75) {
            return bad(format!(
                "sponsorship must be one of 0, 25, 50, 75, got {}",
                self.auction.sponsorship_pct
            ));
        }
        if self.approach == Approach::Coop && self.auction.sponsorship_pct != 0 {
            return bad("sponsorship applies to the competitive variant only".into());
        }
        if self.auction.mca == 0 {
            return bad("mca must be at least 1".into());
        }
        if self.dauction.radius <= 0.0 {
            return bad("broadcast radius must be positive".into());
        }
        // mismatched variant/approach is a wiring bug, not user input
        match self.approach {
            Approach::Coop => debug_assert_eq!(self.auction.variant, AuctionVariant::Cooperative),
            Approach::Comp => debug_assert_eq!(self.auction.variant, AuctionVariant::Competitive),
            _ => {}
        }
        Ok(())
    }
}
