//! `uavsec`: runs experiment plans over the reference scenario or a TOML
//! config and writes CSV results plus a JSON manifest.
//!
//! Exit codes: 0 every run succeeded, 1 some run failed, 2 invalid plan.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use uavsec::experiment::{run_experiments, ExperimentPlan, LocationKind, SlotRule, DEFAULT_MC_SAMPLES};
use uavsec::scenario::{default_paper_scenario, load_config_file, SpaceMode, PAPER_ROBUST_RADIUS};
use uavsec::schemes::SchemeKind;
use uavsec::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Proposed,
    FixedPower,
    StraightLine,
    NoJamming,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Space {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Location {
    Perfect,
    Robust,
}

#[derive(Debug, Parser)]
#[command(name = "uavsec", version, about = "UAV jammer trajectory and power optimization experiments")]
struct Args {
    /// TOML scenario; the built-in reference scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_enum, value_delimiter = ',', default_value = "proposed")]
    scheme: Vec<Scheme>,

    /// Space modes; defaults to the config's.
    #[arg(long, value_enum, value_delimiter = ',')]
    space: Vec<Space>,

    #[arg(long, value_enum, default_value = "perfect")]
    location: Location,

    /// Uncertainty radii in meters for robust runs.
    #[arg(long = "radius-q", value_delimiter = ',')]
    radius_q: Vec<f64>,

    /// Flight horizons in seconds; defaults to the config's.
    #[arg(long, value_delimiter = ',')]
    horizon: Vec<f64>,

    /// Slot count for every horizon.
    #[arg(long, conflicts_with = "slots_per_second")]
    slots: Option<usize>,

    /// Slot count proportional to the horizon.
    #[arg(long)]
    slots_per_second: Option<f64>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, default_value = "results")]
    out: PathBuf,

    /// Concurrent runs (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Fading draws per slot and link for the ergodic secrecy column.
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
}

fn plan_from(args: Args) -> Result<ExperimentPlan, String> {
    let (scenario, source) = match &args.config {
        Some(p) => (load_config_file(p).map_err(|e| format!("{}: {e}", p.display()))?, p.display().to_string()),
        None => (default_paper_scenario(), "builtin:reference".to_string()),
    };
    let mut plan = ExperimentPlan::new(scenario, args.out);
    plan.scenario_source = source;

    let mut schemes = Vec::new();
    for s in args.scheme {
        let kinds: &[SchemeKind] = match s {
            Scheme::Proposed => &[SchemeKind::Proposed],
            Scheme::FixedPower => &[SchemeKind::FixedPower],
            Scheme::StraightLine => &[SchemeKind::StraightLine],
            Scheme::NoJamming => &[SchemeKind::NoJamming],
            Scheme::All => &SchemeKind::ALL,
        };
        for k in kinds {
            if !schemes.contains(k) {
                schemes.push(*k);
            }
        }
    }
    plan.schemes = schemes;
    if !args.space.is_empty() {
        plan.space_modes = args
            .space
            .iter()
            .map(|s| match s {
                Space::TwoD => SpaceMode::TwoD,
                Space::ThreeD => SpaceMode::ThreeD,
            })
            .collect();
    }
    plan.location = match args.location {
        Location::Perfect => LocationKind::Perfect,
        Location::Robust => LocationKind::Robust,
    };
    plan.radii = if !args.radius_q.is_empty() {
        args.radius_q
    } else if plan.scenario.eve_radius_q > 0.0 {
        vec![plan.scenario.eve_radius_q]
    } else {
        vec![PAPER_ROBUST_RADIUS]
    };
    if !args.horizon.is_empty() {
        plan.horizons = args.horizon;
    }
    if let Some(n) = args.slots {
        plan.slots = SlotRule::Fixed(n);
    }
    if let Some(r) = args.slots_per_second {
        plan.slots = SlotRule::PerSecond(r);
    }
    if let Some(seed) = args.seed {
        plan.seed = seed;
    }
    plan.jobs = args.jobs;
    plan.mc_samples = args.mc_samples;
    Ok(plan)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let plan = match plan_from(args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_experiments(&plan) {
        Ok(out) => {
            for r in &out.records {
                match &r.result {
                    Ok(res) => println!(
                        "{}: average secrecy {:.6} bit/s/Hz, {} iterations{}",
                        r.spec.id(),
                        res.average_secrecy,
                        res.iterations,
                        if res.converged { "" } else { " (iteration cap)" }
                    ),
                    Err(e) => println!("{}: failed: {e}", r.spec.id()),
                }
            }
            println!("summary: {}", out.summary_path.display());
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::InvalidPlan(_)) { 2 } else { 1 })
        }
    }
}
