//! Worst-case eavesdropper location inside a horizontal disk of radius Q.
//!
//! The ST–Eve distance is fixed at its minimum over the disk, and the
//! UAV–Eve distance bound `α_E` must hold for every point of the disk,
//! which the S-procedure turns into one arrow LMI per slot.

use crate::conic::{Block, ConicProgram, LinExpr, Sym3};
use crate::engine::{Engine, EveModel, DISK_SAMPLES};
use crate::error::{Error, Result};
use crate::scenario::{Position3D, ScenarioConfig};
use crate::sca_perfect::mode_pins;

pub use crate::engine::{disk_max_squared_distance, RobustIterate, RunResult};

/// `‖ĉ_E − c_ST‖ − Q`, the closest any admissible Eve can be to the ST.
pub fn worst_case_st_eve_distance(eve_estimate: &Position3D, q: f64, st: &Position3D) -> Result<f64> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("uncertainty radius must be non-negative, got {q}")));
    }
    let d = crate::channel::distance(eve_estimate, st);
    if d <= q {
        return Err(Error::InfeasibleGeometry(format!(
            "ST lies inside the eavesdropper uncertainty disk (distance {d} m, radius {q} m)"
        )));
    }
    Ok(d - q)
}

/// Variable indices of one slot that the S-procedure couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SProcedureVars {
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub alpha_e: usize,
    pub theta: usize,
    pub mu: usize,
}

/// `f_d(ĉ_E, c) ≤ α_E + θ`, `μ ≥ 0` and
/// `[[μ−1, 0, x−x̂], [0, μ−1, y−ŷ], [x−x̂, y−ŷ, −Q²μ−θ]] ⪰ 0`.
/// Together they imply `f_d(ĉ_E + (Δ, 0), c) ≤ α_E` for all `‖Δ‖ ≤ Q`.
pub fn s_procedure_blocks(v: &SProcedureVars, eve: &Position3D, q: f64) -> Result<Vec<(&'static str, Block)>> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("S-procedure needs Q > 0, got {q}")));
    }
    let wx = LinExpr::var(v.x).with_constant(-eve.x);
    let wy = LinExpr::var(v.y).with_constant(-eve.y);
    let wz = LinExpr::var(v.z).with_constant(-eve.z);
    let center = Block::Rsoc {
        u: LinExpr::var(v.alpha_e) + LinExpr::var(v.theta),
        v: LinExpr::constant(0.5),
        x: vec![wx.clone(), wy.clone(), wz],
    };
    let corner = LinExpr::term(v.mu, -q * q) - LinExpr::var(v.theta);
    let lmi = Sym3::arrow(LinExpr::var(v.mu).with_constant(-1.0), wx, wy, corner);
    Ok(vec![("eve-center", center), ("mu-nonneg", Block::Nonneg(LinExpr::var(v.mu))), ("s-procedure", Block::Psd3(lmi))])
}

fn engine(cfg: &ScenarioConfig) -> Result<Engine<'_>> {
    Engine::new(cfg, EveModel::Robust { q: cfg.eve_radius_q }, mode_pins(cfg))
}

/// Straight-line start with worst-case-tight slacks.
pub fn init_robust(cfg: &ScenarioConfig) -> Result<RobustIterate> {
    let e = engine(cfg)?;
    let point = e.initial_point()?;
    let (theta, mu) = e.robust_slacks(&point);
    Ok(RobustIterate { point, theta, mu })
}

pub fn build_robust_subproblem(prev: &RobustIterate, cfg: &ScenarioConfig) -> Result<ConicProgram> {
    engine(cfg)?.build(&prev.point)
}

/// Robust ascent with `Q = cfg.eve_radius_q`.
pub fn solve_robust_sca(cfg: &ScenarioConfig) -> Result<RunResult> {
    let e = engine(cfg)?;
    e.run(e.initial_point()?)
}

/// Largest relative excess of the sampled disk maximum of `f_d` over `α_E`.
pub fn disk_audit(cfg: &ScenarioConfig, c_u: &[Position3D], alpha_e: &[f64]) -> Result<f64> {
    if c_u.len() != alpha_e.len() {
        return Err(Error::LengthMismatch { expected: c_u.len(), got: alpha_e.len() });
    }
    Ok(engine(cfg)?.disk_violation(c_u, alpha_e, DISK_SAMPLES))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{solve, SolveStatus, DEFAULT_TOL};
    use crate::scenario::default_paper_scenario;

    #[test]
    fn worst_case_distance_examples() {
        let eve = Position3D::new(150.0, 250.0, 0.0);
        let st = Position3D::new(0.0, 0.0, 0.0);
        let d = worst_case_st_eve_distance(&eve, 20.0, &st).unwrap();
        assert!((d - (85_000.0_f64.sqrt() - 20.0)).abs() < 1e-12);
        assert!((d - 271.547_594_742_265).abs() < 1e-9);
        let d0 = worst_case_st_eve_distance(&eve, 0.0, &st).unwrap();
        assert!((d0 - 291.547_594_742_265).abs() < 1e-9);
        assert!(worst_case_st_eve_distance(&eve, 85_000.0_f64.sqrt(), &st).is_err());
        assert!(s_procedure_blocks(&vars(), &eve, 0.0).is_err());
    }

    fn vars() -> SProcedureVars {
        SProcedureVars { x: 0, y: 1, z: 2, alpha_e: 3, theta: 4, mu: 5 }
    }

    /// Smallest α_E the blocks admit at a fixed UAV position.
    fn min_alpha(c: Position3D, q: f64) -> f64 {
        let eve = Position3D::new(150.0, 250.0, 0.0);
        let mut p = ConicProgram::new();
        for s in [100.0, 100.0, 100.0, 1e4, 1e4, 1.0] {
            p.add_variable(s);
        }
        p.add_objective(&LinExpr::term(3, -1.0));
        for (k, v) in [(0, c.x), (1, c.y), (2, c.z)] {
            p.add_eq("fix", LinExpr::var(k), LinExpr::constant(v));
        }
        for (tag, b) in s_procedure_blocks(&vars(), &eve, q).unwrap() {
            p.push(tag, b);
        }
        let s = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal, "{} viol {} kkt {}", s.backend_status, s.max_violation, s.kkt_residual);
        s.primal[3]
    }

    #[test]
    fn blocks_match_disk_brute_force() {
        let eve = Position3D::new(150.0, 250.0, 0.0);
        for c in [Position3D::new(250.0, 250.0, 100.0), Position3D::new(150.0, 250.0, 100.0), Position3D::new(-40.0, 130.0, 60.0)] {
            let a = min_alpha(c, 20.0);
            let brute = disk_max_squared_distance(&c, &eve, 20.0, 10_000);
            assert!(brute <= a * (1.0 + 1e-6), "{brute} > {a}");
            assert!(a <= brute * (1.0 + 1e-5), "{a} much larger than {brute}");
        }
        let a = min_alpha(Position3D::new(250.0, 250.0, 100.0), 20.0);
        assert!((a - (120.0_f64.powi(2) + 100.0_f64.powi(2))).abs() < 1e-3);
    }

    #[test]
    fn tight_slacks_satisfy_blocks() {
        let cfg = default_paper_scenario().with_horizon(100.0, 20).unwrap().with_eve_radius(20.0).unwrap();
        let it = init_robust(&cfg).unwrap();
        let prog = build_robust_subproblem(&it, &cfg).unwrap();
        assert_eq!(prog.variable_count, 17 * 20);
        let e = engine(&cfg).unwrap();
        let (v, tag) = prog.scaled_violation(&e.pack_robust(&it));
        assert!(v <= 1e-9, "violation {v} at {tag:?}");
    }
}
