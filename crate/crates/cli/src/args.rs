//! Flag parsing: `--key value` pairs over an optional `key=value` config
//! file, flags overriding file entries, both overriding per-approach
//! defaults. Dotted module keys (`eb.if`, `auction.cp`, `dauction.radius`)
//! are accepted as aliases for the bare flag names.

use crossway_core::config::{Approach, ExperimentConfig};
use crossway_core::engine::RoutePolicy;
use crossway_core::strategy::central::{Bidding, CrossingPolicy};
use crossway_core::strategy::emergent::{HurryFn, SpreadFn};
use std::path::PathBuf;

pub const USAGE: &str = "usage: crossway --approach <eb|coop|comp|dauction> [options]

run shape:
  --vehicles <n>          vehicles spawned (default 100)
  --steps <n>             simulation steps, one second each (default 10000)
  --runs <n>              independent seeded runs (default 10)
  --seed <n>              base seed; run i uses seed+i (default 42)
  --out <path>            write CSV here instead of stdout
  --config <path>         key=value file; flags override file entries
  --trace <path>          per-step state dump (runs execute sequentially)
  --dump-grid <path>      write the edge list `from to length` and continue
                          (without --approach: dump only and exit)

network and kinematics:
  --grid <WxH>            lattice size (default 5x5)
  --edge-length <m>       road length (default 100)
  --vmax <m/s>            speed limit (default 13.89)
  --vehicle-length <m>    body length (default 5)
  --min-gap <m>           standstill gap (default 2.5)
  --tcross <steps>        stop-line dwell per crossing (default 1)
  --platoon-headway <steps>  follower dwell in a streamed platoon (default 1)
  --approach-radius <m>   approach-zone radius (default 50)
  --wait-threshold <m/s>  waiting-speed threshold (default 0.1)
  --route-length <n>      edges per route (default 12)
  --routes <s|r>          static cyclic or random regeneration (default r)

emergent behavior (--approach eb):
  --if <lin|log|gro>      increasing function (default log)
  --df <lin|log|gro>      decreasing function (default gro)
  --spread <std|dbl|rbl>  spreading function (default std)
  --ic <x> --dc <x>       increase/decrease coefficients (default 10)
  --sr <m> --dm <x>       spreading range / distance magnitude (default 100/10)
  --platoon-eps <x>       hurry tolerance for platoons (default 0.5)

central auctions (--approach coop|comp):
  --cp <owp|avp>          crossing policy (default avp)
  --mca <n>               minimum vehicles to open an auction (default 2)
  --enhancement <y|n>     boost bids from crowded lanes (default n)
  --bidding <balanced|random>  bid strategy (default random)
  --sponsorship <0|25|50|75>   follower donations, comp only (default 25)
  --auction-steps <n>     bid-collection window (default 2)

decentralized auction (--approach dauction):
  --radius <m>            broadcast radius (default: approach radius)
  --skip-absent-head <y|n>  serve the best ranked vehicle at the line
                            instead of idling for the head (default n)

shared:
  --budget <x>            trip budget, reset each route (default 100)";

/// What the process should do after parsing.
#[derive(Debug)]
pub enum CliAction {
    Run(Box<RunSpec>),
    DumpGridOnly {
        path: PathBuf,
        width: usize,
        height: usize,
        edge_length: f64,
    },
    Help,
}

#[derive(Debug)]
pub struct RunSpec {
    pub cfg: ExperimentConfig,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub dump_grid: Option<PathBuf>,
}

/// Maps argv (without the program name) to a validated configuration.
pub fn parse_cli(argv: &[String]) -> Result<CliAction, String> {
    let mut flag_pairs: Vec<(String, String)> = Vec::new();
    let mut i = 0;
    while i < argv.len() {
        let arg = &argv[i];
        if arg == "--help" || arg == "-h" {
            return Ok(CliAction::Help);
        }
        let Some(key) = arg.strip_prefix("--") else {
            return Err(format!(
                "unexpected argument '{arg}' (flags are --key value)"
            ));
        };
        let Some(value) = argv.get(i + 1) else {
            return Err(format!("flag --{key} is missing its value"));
        };
        flag_pairs.push((normalize_key(key), value.clone()));
        i += 2;
    }

    // config file first so flags override it
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some((_, path)) = flag_pairs.iter().find(|(k, _)| k == "config") {
        pairs.extend(load_config_file(path)?);
    }
    pairs.extend(flag_pairs.into_iter().filter(|(k, _)| k != "config"));

    let approach = pairs
        .iter()
        .rev()
        .find(|(k, _)| k == "approach" || k == "variant")
        .map(|(_, v)| v.parse::<Approach>().map_err(|e| e.to_string()))
        .transpose()?;

    let Some(approach) = approach else {
        // grid dump needs no approach
        if let Some((_, path)) = pairs.iter().rev().find(|(k, _)| k == "dump-grid") {
            let mut width = 5;
            let mut height = 5;
            let mut edge_length = 100.0;
            for (k, v) in &pairs {
                match k.as_str() {
                    "grid" => (width, height) = parse_grid(v)?,
                    "edge-length" => edge_length = parse_num(k, v)?,
                    "dump-grid" => {}
                    other => return Err(format!("--{other} requires --approach")),
                }
            }
            return Ok(CliAction::DumpGridOnly {
                path: PathBuf::from(path),
                width,
                height,
                edge_length,
            });
        }
        return Err("missing required flag --approach".to_string());
    };

    let mut cfg = ExperimentConfig::defaults_for(approach);
    let mut out = None;
    let mut trace = None;
    let mut dump_grid = None;
    let mut radius_set = false;

    for (key, value) in &pairs {
        apply_key(
            &mut cfg,
            &mut out,
            &mut trace,
            &mut dump_grid,
            &mut radius_set,
            key,
            value,
        )?;
    }
    if !radius_set {
        cfg.dauction.radius = cfg.sim.approach_radius;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(CliAction::Run(Box::new(RunSpec {
        cfg,
        out,
        trace,
        dump_grid,
    })))
}

/// Lowercases and strips a module prefix: `eb.if` → `if`, `auction.cp` → `cp`.
fn normalize_key(key: &str) -> String {
    let k = key.to_ascii_lowercase();
    for prefix in ["eb.", "auction.", "dauction.", "engine.", "sim."] {
        if let Some(rest) = k.strip_prefix(prefix) {
            return rest.to_string();
        }
    }
    k
}

fn load_config_file(path: &str) -> Result<Vec<(String, String)>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file '{path}': {e}"))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("{path}:{}: expected key=value", lineno + 1));
        };
        pairs.push((normalize_key(k.trim()), v.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("invalid value for --{key}: '{value}'"))
}

fn parse_grid(value: &str) -> Result<(usize, usize), String> {
    let err = || format!("invalid value for --grid: '{value}' (expected WxH, e.g. 5x5)");
    let (w, h) = value.split_once(['x', 'X']).ok_or_else(err)?;
    Ok((w.parse().map_err(|_| err())?, h.parse().map_err(|_| err())?))
}

fn parse_yn(key: &str, value: &str) -> Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "y" | "yes" | "true" => Ok(true),
        "n" | "no" | "false" => Ok(false),
        _ => Err(format!(
            "invalid value for --{key}: '{value}' (expected y|n)"
        )),
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_key(
    cfg: &mut ExperimentConfig,
    out: &mut Option<PathBuf>,
    trace: &mut Option<PathBuf>,
    dump_grid: &mut Option<PathBuf>,
    radius_set: &mut bool,
    key: &str,
    value: &str,
) -> Result<(), String> {
    match key {
        "approach" | "variant" => {} // resolved before defaults were built
        "vehicles" | "vs" => cfg.vehicles = parse_num(key, value)?,
        "steps" | "stp" => cfg.steps = parse_num(key, value)?,
        "runs" => cfg.runs = parse_num(key, value)?,
        "seed" => cfg.base_seed = parse_num(key, value)?,
        "out" => *out = Some(PathBuf::from(value)),
        "trace" => *trace = Some(PathBuf::from(value)),
        "dump-grid" => *dump_grid = Some(PathBuf::from(value)),
        "grid" => (cfg.grid_width, cfg.grid_height) = parse_grid(value)?,
        "edge-length" => cfg.edge_length = parse_num(key, value)?,
        "vmax" => cfg.sim.v_max = parse_num(key, value)?,
        "vehicle-length" => cfg.sim.vehicle_len = parse_num(key, value)?,
        "min-gap" => cfg.sim.min_gap = parse_num(key, value)?,
        "tcross" => cfg.sim.t_cross = parse_num(key, value)?,
        "platoon-headway" => cfg.sim.platoon_headway = parse_num(key, value)?,
        "approach-radius" => cfg.sim.approach_radius = parse_num(key, value)?,
        "wait-threshold" => cfg.sim.wait_speed_threshold = parse_num(key, value)?,
        "route-length" => cfg.sim.route_len = parse_num(key, value)?,
        "budget" => cfg.sim.initial_budget = parse_num(key, value)?,
        "routes" | "rts" => {
            cfg.sim.route_policy = match value.to_ascii_lowercase().as_str() {
                "s" | "static" => RoutePolicy::Static,
                "r" | "random" => RoutePolicy::Random,
                _ => {
                    return Err(format!(
                        "invalid value for --routes: '{value}' (expected s|r)"
                    ))
                }
            }
        }
        "if" => cfg.eb.inc_fn = parse_hurry_fn(key, value)?,
        "df" => cfg.eb.dec_fn = parse_hurry_fn(key, value)?,
        "spread" => {
            cfg.eb.spread_fn = match value.to_ascii_lowercase().as_str() {
                "std" => SpreadFn::Std,
                "dbl" => SpreadFn::Dbl,
                "rbl" => SpreadFn::Rbl,
                _ => {
                    return Err(format!(
                        "invalid value for --spread: '{value}' (expected std|dbl|rbl)"
                    ))
                }
            }
        }
        "ic" => cfg.eb.ic = parse_num(key, value)?,
        "dc" => cfg.eb.dc = parse_num(key, value)?,
        "sr" => cfg.eb.sr = parse_num(key, value)?,
        "dm" => cfg.eb.dm = parse_num(key, value)?,
        "platoon-eps" => cfg.eb.platoon_eps = parse_num(key, value)?,
        "cp" => {
            cfg.auction.cp = match value.to_ascii_lowercase().as_str() {
                "owp" => CrossingPolicy::OnlyWinnerPays,
                "avp" => CrossingPolicy::AllVehiclesPay,
                _ => {
                    return Err(format!(
                        "invalid value for --cp: '{value}' (expected owp|avp)"
                    ))
                }
            }
        }
        "mca" => cfg.auction.mca = parse_num(key, value)?,
        "enhancement" | "e" => cfg.auction.enhancement = parse_yn(key, value)?,
        "bidding" | "bdn" => {
            let b = match value.to_ascii_lowercase().as_str() {
                "balanced" | "b" => Bidding::Balanced,
                "random" | "r" => Bidding::Random,
                _ => {
                    return Err(format!(
                        "invalid value for --bidding: '{value}' (expected balanced|random)"
                    ))
                }
            };
            cfg.auction.bidding = b;
            cfg.dauction.bidding = b;
        }
        "sponsorship" | "spn" => cfg.auction.sponsorship_pct = parse_num(key, value)?,
        "auction-steps" => cfg.auction.auction_steps = parse_num(key, value)?,
        "radius" => {
            cfg.dauction.radius = parse_num(key, value)?;
            *radius_set = true;
        }
        "skip-absent-head" => cfg.dauction.skip_absent_head = parse_yn(key, value)?,
        other => return Err(format!("unknown flag --{other}")),
    }
    Ok(())
}

fn parse_hurry_fn(key: &str, value: &str) -> Result<HurryFn, String> {
    match value.to_ascii_lowercase().as_str() {
        "lin" => Ok(HurryFn::Lin),
        "log" => Ok(HurryFn::Log),
        "gro" => Ok(HurryFn::Gro),
        _ => Err(format!(
            "invalid value for --{key}: '{value}' (expected lin|log|gro)"
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn parse_run(s: &str) -> Result<Box<RunSpec>, String> {
        match parse_cli(&args(s))? {
            CliAction::Run(spec) => Ok(spec),
            _ => panic!("expected a run"),
        }
    }

    #[test]
    fn eb_flags_map_onto_config() {
        let spec = parse_run("--approach eb --if log --df gro --spread std --vehicles 80").unwrap();
        assert_eq!(spec.cfg.approach, Approach::Eb);
        assert_eq!(spec.cfg.eb.inc_fn, HurryFn::Log);
        assert_eq!(spec.cfg.eb.dec_fn, HurryFn::Gro);
        assert_eq!(spec.cfg.eb.spread_fn, SpreadFn::Std);
        assert_eq!(spec.cfg.vehicles, 80);
        // defaults elsewhere
        assert_eq!(spec.cfg.steps, 10_000);
        assert_eq!(spec.cfg.runs, 10);
        assert_eq!(spec.cfg.eb.ic, 10.0);
    }

    #[test]
    fn sponsorship_domain_is_rejected() {
        let err = parse_cli(&args("--approach comp --sponsorship 30")).unwrap_err();
        assert!(err.contains("sponsorship"), "{err}");
    }

    #[test]
    fn coop_with_sponsorship_is_rejected() {
        let err = parse_cli(&args("--approach coop --sponsorship 25")).unwrap_err();
        assert!(err.contains("competitive"), "{err}");
    }

    #[test]
    fn unknown_flag_is_rejected() {
        let err = parse_cli(&args("--approach eb --frobnicate 3")).unwrap_err();
        assert!(err.contains("unknown flag"), "{err}");
    }

    #[test]
    fn flags_override_config_file() {
        let dir = std::env::temp_dir().join("crossway-args-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(
            &path,
            "# comment\napproach=comp\nvehicles=120\neb.if=lin\nauction.cp=owp\n",
        )
        .unwrap();
        let spec = parse_run(&format!(
            "--config {} --vehicles 80 --sponsorship 50",
            path.display()
        ))
        .unwrap();
        assert_eq!(spec.cfg.approach, Approach::Comp);
        assert_eq!(spec.cfg.vehicles, 80, "flag beats file");
        assert_eq!(spec.cfg.auction.cp, CrossingPolicy::OnlyWinnerPays);
        assert_eq!(spec.cfg.auction.sponsorship_pct, 50);
        assert_eq!(spec.cfg.eb.inc_fn, HurryFn::Lin, "dotted alias accepted");
    }

    #[test]
    fn dauction_radius_follows_approach_radius_unless_set() {
        let spec = parse_run("--approach dauction --approach-radius 30").unwrap();
        assert_eq!(spec.cfg.dauction.radius, 30.0);
        let spec = parse_run("--approach dauction --approach-radius 30 --radius 80").unwrap();
        assert_eq!(spec.cfg.dauction.radius, 80.0);
    }

    #[test]
    fn dump_grid_without_approach_is_standalone() {
        match parse_cli(&args("--dump-grid g.txt --grid 4x3")).unwrap() {
            CliAction::DumpGridOnly { width, height, .. } => {
                assert_eq!((width, height), (4, 3));
            }
            _ => panic!("expected dump-grid action"),
        }
    }

    #[test]
    fn comp_defaults_match_reported_experiments() {
        let spec = parse_run("--approach comp").unwrap();
        assert_eq!(spec.cfg.auction.sponsorship_pct, 25);
        assert_eq!(spec.cfg.auction.mca, 2);
        assert_eq!(spec.cfg.runs, 10);
    }
}
