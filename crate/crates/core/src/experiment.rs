//! Experiment plans: sweeps over schemes, space modes, horizons and
//! uncertainty radii, written as CSV files plus one JSON manifest.
//!
//! Layout under the output directory:
//!
//! ```text
//! summary.csv                      one row per run, plan order
//! manifest.json                    config hash, versions, wall times
//! runs/<run-id>/trajectory.csv     n, x, y, z   (n = 0 is the start)
//! runs/<run-id>/per_slot.csv       n, rates, powers, clipped secrecy, UAV–Eve distance
//! runs/<run-id>/convergence.csv    iteration, objective
//! ```
//!
//! Every CSV depends only on the plan, so reruns are byte-identical; wall
//! times go to the manifest only.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channel::{distance, ergodic_rate_mc_with};
use crate::engine::RunResult;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::scenario::{ScenarioConfig, SpaceMode};
use crate::schemes::{run_scheme, LocationModel, SchemeKind, SchemeSpec};

/// Monte-Carlo fading draws per slot and link for the ergodic column.
pub const DEFAULT_MC_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SlotRule {
    Fixed(usize),
    /// `N = round(rate · T)`, at least 1.
    PerSecond(f64),
}

impl SlotRule {
    pub fn slots(&self, horizon_t: f64) -> usize {
        match *self {
            SlotRule::Fixed(n) => n,
            SlotRule::PerSecond(r) => ((r * horizon_t).round() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LocationKind {
    Perfect,
    Robust,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentPlan {
    /// Where the scenario came from, recorded in the manifest.
    pub scenario_source: String,
    #[serde(skip)]
    pub scenario: ScenarioConfig,
    pub schemes: Vec<SchemeKind>,
    pub horizons: Vec<f64>,
    pub slots: SlotRule,
    pub location: LocationKind,
    /// Uncertainty radii swept in robust plans; ignored for perfect ones.
    pub radii: Vec<f64>,
    pub space_modes: Vec<SpaceMode>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub mc_samples: usize,
    /// Worker threads for concurrent runs (0 = library default).
    pub jobs: usize,
}

impl ExperimentPlan {
    /// Single-run plan over `scenario` as given.
    pub fn new(scenario: ScenarioConfig, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            scenario_source: "builtin:reference".into(),
            schemes: vec![SchemeKind::Proposed],
            horizons: vec![scenario.horizon_t],
            slots: SlotRule::Fixed(scenario.slot_count_n),
            location: if scenario.eve_radius_q > 0.0 { LocationKind::Robust } else { LocationKind::Perfect },
            radii: vec![scenario.eve_radius_q],
            space_modes: vec![scenario.space_mode],
            seed: scenario.rng_seed,
            output_dir: output_dir.into(),
            mc_samples: DEFAULT_MC_SAMPLES,
            jobs: 0,
            scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPlan(m.into()));
        if self.schemes.is_empty() {
            return bad("scheme list is empty");
        }
        if self.horizons.is_empty() {
            return bad("horizon list is empty");
        }
        if self.space_modes.is_empty() {
            return bad("space mode list is empty");
        }
        if self.location == LocationKind::Robust && self.radii.is_empty() {
            return bad("robust plans need at least one radius");
        }
        if let Some(t) = self.horizons.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidPlan(format!("horizon must be positive, got {t}")));
        }
        if let Some(q) = self.radii.iter().find(|q| !(**q >= 0.0 && q.is_finite())) {
            return Err(Error::InvalidPlan(format!("radius must be non-negative, got {q}")));
        }
        match self.slots {
            SlotRule::Fixed(0) => return bad("slot count must be positive"),
            SlotRule::PerSecond(r) if !(r > 0.0 && r.is_finite()) => return bad("slot rate must be positive"),
            _ => {}
        }
        if self.mc_samples == 0 {
            return bad("need at least one Monte-Carlo sample");
        }
        Ok(())
    }

    fn locations(&self) -> Vec<LocationModel> {
        match self.location {
            LocationKind::Perfect => vec![LocationModel::Perfect],
            LocationKind::Robust => self.radii.iter().map(|&q| LocationModel::Robust(q)).collect(),
        }
    }

    /// Cartesian product in the order scheme, space, location, horizon.
    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &kind in &self.schemes {
            for &space in &self.space_modes {
                for loc in self.locations() {
                    for &t in &self.horizons {
                        out.push(RunSpec {
                            scheme: SchemeSpec::new(kind, space, loc),
                            horizon_t: t,
                            slots: self.slots.slots(t),
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunSpec {
    pub scheme: SchemeSpec,
    pub horizon_t: f64,
    pub slots: usize,
}

impl RunSpec {
    pub fn id(&self) -> String {
        format!(
            "{}_{}_{}_T{}_N{}_Q{}",
            self.scheme.kind,
            self.scheme.space_mode.as_str(),
            self.scheme.location_model.as_str(),
            self.horizon_t,
            self.slots,
            self.scheme.location_model.radius()
        )
    }
}

/// Outcome of one run of a plan.
#[derive(Debug)]
pub struct RunRecord {
    pub spec: RunSpec,
    pub result: Result<RunResult>,
    /// Mean over slots of `[E R_S − E R_E]⁺` under Rayleigh fading, with Eve
    /// at the location estimate.
    pub ergodic_secrecy: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.result.is_err()).count()
    }

    /// 0 when every run succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            1
        }
    }
}

/// Formats a float with 12 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.11e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Ergodic secrecy of a finished design; slot `n` uses seeds `seed + 2n`
/// (SR) and `seed + 2n + 1` (Eve), so schemes share fading draws.
pub fn ergodic_secrecy(cfg: &ScenarioConfig, r: &RunResult, samples: usize, seed: u64) -> Result<f64> {
    let ch = cfg.channel();
    let p = &r.point;
    let d_ss = distance(&cfg.st_pos, &cfg.sr_pos);
    let d_se = distance(&cfg.st_pos, &cfg.eve_pos_estimate);
    let mut total = 0.0;
    for n in 0..p.slot_count() {
        let c = &p.c_u[n];
        let s = seed.wrapping_add(2 * n as u64);
        let rs = ergodic_rate_mc_with(p.p_s[n], p.p_u[n], d_ss, distance(c, &cfg.sr_pos), samples, s, &ch, Execution::Sequential)?;
        let re = ergodic_rate_mc_with(
            p.p_s[n],
            p.p_u[n],
            d_se,
            distance(c, &cfg.eve_pos_estimate),
            samples,
            s.wrapping_add(1),
            &ch,
            Execution::Sequential,
        )?;
        total += (rs.mean - re.mean).max(0.0);
    }
    Ok(total / p.slot_count() as f64)
}

fn write_run_files(dir: &Path, cfg: &ScenarioConfig, r: &RunResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let p = &r.point;
    let start = std::iter::once((0, cfg.uav_start));
    let traj = start.chain(p.c_u.iter().copied().enumerate().map(|(i, c)| (i + 1, c)));
    write_csv(
        &dir.join("trajectory.csv"),
        &["n", "x_m", "y_m", "z_m"],
        traj.map(|(n, c)| vec![n.to_string(), fmt_num(c.x), fmt_num(c.y), fmt_num(c.z)]),
    )?;
    write_csv(
        &dir.join("per_slot.csv"),
        &["n", "r_s_bps_hz", "r_e_bps_hz", "secrecy_bps_hz", "p_s_w", "p_u_w", "uav_eve_distance_m"],
        (0..p.slot_count()).map(|n| {
            vec![
                (n + 1).to_string(),
                fmt_num(r.rates[n].r_s),
                fmt_num(r.rates[n].r_e),
                fmt_num(r.per_slot_secrecy[n]),
                fmt_num(p.p_s[n]),
                fmt_num(p.p_u[n]),
                fmt_num(r.uav_eve_distance[n]),
            ]
        }),
    )?;
    write_csv(
        &dir.join("convergence.csv"),
        &["iteration", "objective_bps_hz"],
        r.objective_history.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_num(*v)]),
    )
}

fn execute(plan: &ExperimentPlan, spec: &RunSpec) -> RunRecord {
    let clock = Instant::now();
    let attempt = || -> Result<(RunResult, f64)> {
        let cfg = plan.scenario.with_horizon(spec.horizon_t, spec.slots)?.with_seed(plan.seed);
        let result = run_scheme(&spec.scheme, &cfg)?;
        let cfg = spec.scheme.scenario(&cfg)?;
        write_run_files(&plan.output_dir.join("runs").join(spec.id()), &cfg, &result)?;
        let erg = ergodic_secrecy(&cfg, &result, plan.mc_samples, plan.seed)?;
        Ok((result, erg))
    };
    let (result, ergodic_secrecy) = match attempt() {
        Ok((r, e)) => (Ok(r), Some(e)),
        Err(e) => (Err(e), None),
    };
    RunRecord { spec: *spec, result, ergodic_secrecy, wall_time_s: clock.elapsed().as_secs_f64() }
}

const SUMMARY_HEADER: [&str; 15] = [
    "run_id",
    "scheme",
    "space",
    "location",
    "horizon_s",
    "slots",
    "radius_q_m",
    "status",
    "average_secrecy_bps_hz",
    "average_secrecy_bps",
    "ergodic_secrecy_bps_hz",
    "objective_bps_hz",
    "iterations",
    "converged",
    "error",
];

fn summary_row(plan: &ExperimentPlan, r: &RunRecord) -> Vec<String> {
    let s = &r.spec;
    let mut row = vec![
        s.id(),
        s.scheme.kind.to_string(),
        s.scheme.space_mode.as_str().into(),
        s.scheme.location_model.as_str().into(),
        fmt_num(s.horizon_t),
        s.slots.to_string(),
        fmt_num(s.scheme.location_model.radius()),
    ];
    match &r.result {
        Ok(res) => row.extend([
            "ok".into(),
            fmt_num(res.average_secrecy),
            fmt_num(res.average_secrecy * plan.scenario.bandwidth_hz),
            r.ergodic_secrecy.map(fmt_num).unwrap_or_default(),
            fmt_num(res.objective),
            res.iterations.to_string(),
            res.converged.to_string(),
            String::new(),
        ]),
        Err(e) => {
            row.extend(["failed".into()]);
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(e.to_string().replace(['\n', '\r'], " "));
        }
    }
    row
}

#[derive(Serialize)]
struct ManifestRun {
    run_id: String,
    status: &'static str,
    wall_time_s: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    crate_name: &'static str,
    crate_version: &'static str,
    conic_backend: &'static str,
    config_sha256: String,
    plan: &'a ExperimentPlan,
    config: &'a ScenarioConfig,
    runs: Vec<ManifestRun>,
    total_wall_time_s: f64,
}

pub fn config_sha256(cfg: &ScenarioConfig) -> String {
    let digest = Sha256::digest(cfg.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Validates and executes `plan`; independent runs share a bounded pool.
///
/// Errors only for an invalid plan or an unwritable output directory;
/// individual run failures are recorded in the outcome.
pub fn run_experiments(plan: &ExperimentPlan) -> Result<ExperimentOutcome> {
    plan.validate()?;
    fs::create_dir_all(plan.output_dir.join("runs"))
        .map_err(|e| Error::InvalidPlan(format!("output directory {}: {e}", plan.output_dir.display())))?;
    let clock = Instant::now();
    let runs = plan.runs();
    let records =
        par::with_pool(plan.jobs, || par::map_slice(Execution::default(), &runs, |spec| execute(plan, spec)));

    let summary_path = plan.output_dir.join("summary.csv");
    write_csv(&summary_path, &SUMMARY_HEADER, records.iter().map(|r| summary_row(plan, r)))?;

    let manifest = Manifest {
        crate_name: env!("CARGO_PKG_NAME"),
        crate_version: env!("CARGO_PKG_VERSION"),
        conic_backend: "clarabel 0.11",
        config_sha256: config_sha256(&plan.scenario),
        plan,
        config: &plan.scenario,
        runs: records
            .iter()
            .map(|r| ManifestRun {
                run_id: r.spec.id(),
                status: if r.result.is_ok() { "ok" } else { "failed" },
                wall_time_s: r.wall_time_s,
            })
            .collect(),
        total_wall_time_s: clock.elapsed().as_secs_f64(),
    };
    let manifest_path = plan.output_dir.join("manifest.json");
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(ExperimentOutcome { records, summary_path, manifest_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::default_paper_scenario;

    fn small_plan(dir: &Path) -> ExperimentPlan {
        let mut plan = ExperimentPlan::new(default_paper_scenario().with_horizon(60.0, 12).unwrap(), dir);
        plan.schemes = vec![SchemeKind::Proposed, SchemeKind::NoJamming];
        plan.mc_samples = 2_000;
        plan
    }

    #[test]
    fn empty_lists_are_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = small_plan(dir.path());
        plan.schemes.clear();
        assert!(matches!(run_experiments(&plan), Err(Error::InvalidPlan(_))));
        let mut plan = small_plan(dir.path());
        plan.location = LocationKind::Robust;
        plan.radii.clear();
        assert!(matches!(plan.validate(), Err(Error::InvalidPlan(_))));
    }

    #[test]
    fn writes_every_file_and_summary_matches_slots() {
        let dir = tempfile::tempdir().unwrap();
        let plan = small_plan(dir.path());
        let out = run_experiments(&plan).unwrap();
        assert_eq!(out.exit_code(), 0);
        for r in &out.records {
            let res = r.result.as_ref().unwrap();
            let mean = res.per_slot_secrecy.iter().sum::<f64>() / res.per_slot_secrecy.len() as f64;
            assert!((mean - res.average_secrecy).abs() <= 1e-12);
            let d = dir.path().join("runs").join(r.spec.id());
            for f in ["trajectory.csv", "per_slot.csv", "convergence.csv"] {
                assert!(d.join(f).is_file(), "{f}");
            }
            let traj = fs::read_to_string(d.join("trajectory.csv")).unwrap();
            assert_eq!(traj.lines().count(), 1 + 1 + 12);
        }
        let summary = fs::read_to_string(&out.summary_path).unwrap();
        assert!(summary.starts_with("run_id,scheme,space,location,horizon_s"));
        assert_eq!(summary.lines().count(), 3);
        let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out.manifest_path).unwrap()).unwrap();
        assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn failed_runs_are_recorded() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = small_plan(dir.path());
        plan.schemes = vec![SchemeKind::Proposed];
        // 600 m cannot be flown in 10 s.
        plan.horizons = vec![10.0, 60.0];
        let out = run_experiments(&plan).unwrap();
        assert_eq!(out.failures(), 1);
        assert_eq!(out.exit_code(), 1);
        let summary = fs::read_to_string(&out.summary_path).unwrap();
        assert!(summary.contains("failed"));
    }

    #[test]
    fn slot_rule_scales_with_horizon() {
        assert_eq!(SlotRule::PerSecond(0.5).slots(100.0), 50);
        assert_eq!(SlotRule::PerSecond(0.5).slots(0.1), 1);
        assert_eq!(SlotRule::Fixed(7).slots(100.0), 7);
    }
}
