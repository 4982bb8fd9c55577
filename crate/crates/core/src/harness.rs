//! Seeded batch execution and CSV emission.

use crate::config::{Approach, ExperimentConfig};
use crate::engine::World;
use crate::error::Result;
use crate::metrics::{batch_stats, BatchStats};
use crate::network::build_grid;
use crate::strategy::strategy_for;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub cwt_mean: f64,
    pub twt_mean: f64,
    pub cwt_events: usize,
    pub twt_episodes: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunSummary>,
    pub stats: BatchStats,
}

/// Executes one simulation. `trace` receives one line per vehicle per step
/// (`step vehicle edge pos speed state`) when given.
pub fn run_single(
    cfg: &ExperimentConfig,
    run: usize,
    seed: u64,
    mut trace: Option<&mut dyn Write>,
) -> Result<RunSummary> {
    let grid = build_grid(cfg.grid_width, cfg.grid_height, cfg.edge_length)?;
    let mut world = World::new(grid, cfg.sim.clone(), seed);
    world.spawn_vehicles(cfg.vehicles)?;
    let mut strategy = strategy_for(cfg);
    for _ in 0..cfg.steps {
        world.step(strategy.as_mut());
        if let Some(w) = trace.as_deref_mut() {
            for v in &world.vehicles {
                writeln!(
                    w,
                    "{} {} {} {:.3} {:.3} {}",
                    world.clock,
                    v.id,
                    v.current_edge().0,
                    v.pos,
                    v.speed,
                    match v.state {
                        crate::engine::VehicleState::Driving => "driving",
                        crate::engine::VehicleState::Granted { .. } => "granted",
                        crate::engine::VehicleState::Crossing { .. } => "crossing",
                    }
                )?;
            }
        }
    }
    let (cwt_mean, twt_mean) = world.metrics.summary();
    Ok(RunSummary {
        run,
        seed,
        cwt_mean,
        twt_mean,
        cwt_events: world.metrics.cwt_events.len(),
        twt_episodes: world.metrics.twt_episodes.len(),
    })
}

/// Runs the whole batch, one independent world per seed
/// `base_seed..base_seed+runs`, concurrently when there is no trace writer.
/// Output order is by run index regardless of completion order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut runs: Vec<RunSummary> = Vec::with_capacity(cfg.runs);
    if cfg.runs == 1 {
        runs.push(run_single(cfg, 0, cfg.base_seed, None)?);
    } else {
        let results: Vec<Result<RunSummary>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..cfg.runs)
                .map(|i| scope.spawn(move || run_single(cfg, i, cfg.base_seed + i as u64, None)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("run thread panicked"))
                .collect()
        });
        for r in results {
            runs.push(r?);
        }
    }
    let cwt: Vec<f64> = runs.iter().map(|r| r.cwt_mean).collect();
    let twt: Vec<f64> = runs.iter().map(|r| r.twt_mean).collect();
    Ok(ExperimentResult {
        stats: batch_stats(&cwt, &twt),
        runs,
    })
}

pub const CSV_HEADER: &str = "approach,run,seed,vs,steps,cp,mca,enhancement,bidding,sponsorship,\
routes,if,df,spread,ic,dc,sr,dm,cwt_mean,cwt_events,twt_mean,twt_episodes,cwt_std,twt_std";

/// One fixed schema for every approach; parameter columns foreign to the
/// configured approach stay empty, as do the σ columns outside the final
/// `run=agg` row.
pub fn write_csv<W: Write>(
    cfg: &ExperimentConfig,
    result: &ExperimentResult,
    w: &mut W,
) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    let params = param_columns(cfg);
    for r in &result.runs {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6},{},{:.6},{},,",
            cfg.approach.as_str(),
            r.run,
            r.seed,
            cfg.vehicles,
            cfg.steps,
            params,
            r.cwt_mean,
            r.cwt_events,
            r.twt_mean,
            r.twt_episodes,
        )?;
    }
    let s = &result.stats;
    let total_cwt: usize = result.runs.iter().map(|r| r.cwt_events).sum();
    let total_twt: usize = result.runs.iter().map(|r| r.twt_episodes).sum();
    writeln!(
        w,
        "{},agg,{},{},{},{},{:.6},{},{:.6},{},{:.6},{:.6}",
        cfg.approach.as_str(),
        cfg.base_seed,
        cfg.vehicles,
        cfg.steps,
        params,
        s.cwt_mean,
        total_cwt,
        s.twt_mean,
        total_twt,
        s.cwt_std,
        s.twt_std,
    )?;
    Ok(())
}

/// The `cp..dm` parameter columns, comma-joined.
fn param_columns(cfg: &ExperimentConfig) -> String {
    use crate::strategy::central::{Bidding, CrossingPolicy};
    let bidding = |b: Bidding| match b {
        Bidding::Balanced => "balanced",
        Bidding::Random => "random",
    };
    let routes = match cfg.sim.route_policy {
        crate::engine::RoutePolicy::Static => "s",
        crate::engine::RoutePolicy::Random => "r",
    };
    match cfg.approach {
        Approach::Eb => {
            let f = |f: crate::strategy::emergent::HurryFn| match f {
                crate::strategy::emergent::HurryFn::Lin => "lin",
                crate::strategy::emergent::HurryFn::Log => "log",
                crate::strategy::emergent::HurryFn::Gro => "gro",
            };
            let s = match cfg.eb.spread_fn {
                crate::strategy::emergent::SpreadFn::Std => "std",
                crate::strategy::emergent::SpreadFn::Dbl => "dbl",
                crate::strategy::emergent::SpreadFn::Rbl => "rbl",
            };
            format!(
                ",,,,,{routes},{},{},{s},{},{},{},{}",
                f(cfg.eb.inc_fn),
                f(cfg.eb.dec_fn),
                cfg.eb.ic,
                cfg.eb.dc,
                cfg.eb.sr,
                cfg.eb.dm
            )
        }
        Approach::Coop | Approach::Comp => {
            let cp = match cfg.auction.cp {
                CrossingPolicy::OnlyWinnerPays => "owp",
                CrossingPolicy::AllVehiclesPay => "avp",
            };
            let e = if cfg.auction.enhancement { "y" } else { "n" };
            let spn = if cfg.approach == Approach::Comp {
                cfg.auction.sponsorship_pct.to_string()
            } else {
                String::new()
            };
            format!(
                "{cp},{},{e},{},{spn},{routes},,,,,,,",
                cfg.auction.mca,
                bidding(cfg.auction.bidding)
            )
        }
        Approach::Dauction => {
            format!(",,,{},,{routes},,,,,,,", bidding(cfg.dauction.bidding))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(approach: Approach) -> ExperimentConfig {
        ExperimentConfig {
            vehicles: 20,
            steps: 300,
            runs: 3,
            base_seed: 7,
            ..ExperimentConfig::defaults_for(approach)
        }
    }

    #[test]
    fn csv_has_fixed_schema_and_one_row_per_run() {
        let cfg = small(Approach::Coop);
        let result = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&cfg, &result, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + cfg.runs + 1);
        let cols = CSV_HEADER.split(',').count();
        for line in &lines {
            assert_eq!(line.split(',').count(), cols, "ragged row: {line}");
        }
        assert!(lines.last().unwrap().starts_with("coop,agg,"));
    }

    #[test]
    fn each_seed_is_isolated_from_its_siblings() {
        let cfg = small(Approach::Eb);
        let batch = run_experiment(&cfg).unwrap();
        let alone = run_single(&cfg, 1, cfg.base_seed + 1, None).unwrap();
        assert_eq!(batch.runs[1], alone);
    }

    #[test]
    fn stats_summarize_run_means() {
        let cfg = small(Approach::Dauction);
        let r = run_experiment(&cfg).unwrap();
        let hand: f64 = r.runs.iter().map(|x| x.twt_mean).sum::<f64>() / r.runs.len() as f64;
        assert!((r.stats.twt_mean - hand).abs() < 1e-12);
        assert_eq!(r.stats.runs, 3);
    }
}
