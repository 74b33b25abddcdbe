//! Shared successive-convex-approximation machinery for the perfect and
//! worst-case eavesdropper models.
//!
//! Per slot the subproblem has 13 core variables
//! `x y z pS pU rS rE tS tE αS αE αP β`, two epigraph variables `vE vP` for
//! the hyperbolic terms, and in the robust model `θ μ`.

use crate::channel::{distance, squared_distance, ChannelParams, RatePair};
use crate::conic::{self, Block, ConicProgram, ConicSolution, LinExpr, SolveOptions, SolveStatus};
use crate::sca_robust::{s_procedure_blocks, SProcedureVars};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::scenario::{Position3D, ScenarioConfig};
use crate::surrogates::{
    bilinear_lower, bilinear_upper, distance_first_order, log_lower_tangent, log_upper_tangent, quad_over_lin_upper,
    QuadOverLinUpper,
};

/// Lower bound on slack families and trust regions.
pub const MARGIN: f64 = 1e-6;
/// Relative floor on transmit powers that are optimized, keeping every
/// surrogate expansion point strictly inside its domain.
pub const POWER_FLOOR: f64 = 1e-6;
/// Iteration cap of the outer loop.
pub const MAX_ITERATIONS: usize = 100;
/// Denominator below which the stopping rule switches to an absolute test.
pub const RELATIVE_GUARD: f64 = 1e-12;
/// Number of sunflower samples used by disk audits.
pub const DISK_SAMPLES: usize = 10_000;

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
const PS: usize = 3;
const PU: usize = 4;
const RS: usize = 5;
const RE: usize = 6;
const TS: usize = 7;
const TE: usize = 8;
const AS: usize = 9;
const AE: usize = 10;
const AP: usize = 11;
const BETA: usize = 12;
const VE: usize = 13;
const VP: usize = 14;
const THETA: usize = 15;
const MU: usize = 16;

const DIST_SCALE: f64 = 100.0;

/// One SCA iterate. All vectors have one entry per slot `n = 1..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct IteratePoint {
    pub c_u: Vec<Position3D>,
    pub p_s: Vec<f64>,
    pub p_u: Vec<f64>,
    pub r_s: Vec<f64>,
    pub r_e: Vec<f64>,
    pub t_s: Vec<f64>,
    pub t_e: Vec<f64>,
    pub alpha_s: Vec<f64>,
    pub alpha_e: Vec<f64>,
    pub alpha_p: Vec<f64>,
    pub beta: Vec<f64>,
}

impl IteratePoint {
    pub fn slot_count(&self) -> usize {
        self.c_u.len()
    }

    /// `(1/N) Σ (r_S − r_E)`.
    pub fn objective(&self) -> f64 {
        let n = self.slot_count() as f64;
        self.r_s.iter().zip(&self.r_e).map(|(s, e)| s - e).sum::<f64>() / n
    }
}

/// Iterate of the worst-case model: the perfect-model families plus the
/// S-procedure slack `θ` and multiplier `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustIterate {
    pub point: IteratePoint,
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EveModel {
    Perfect,
    /// Eve lies in a horizontal disk of radius `q` around the estimate.
    Robust { q: f64 },
}

/// Values held fixed by equality constraints.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Pins {
    pub altitude: Option<f64>,
    pub trajectory: Option<Vec<Position3D>>,
    pub p_s: Option<f64>,
    pub p_u: Option<f64>,
}

impl Pins {
    pub fn no_jamming(&self) -> bool {
        self.p_u == Some(0.0)
    }
}

/// Raw trajectory and `α_E` returned by the solver at an accepted iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverSnapshot {
    pub c_u: Vec<Position3D>,
    pub alpha_e: Vec<f64>,
}

/// Worst violation of the original constraints, each relative to its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub altitude: f64,
    pub speed: f64,
    /// Absolute endpoint miss in meters.
    pub endpoint: f64,
    pub power_peak: f64,
    pub power_average: f64,
    pub interference: f64,
}

impl FeasibilityReport {
    pub fn max_relative(&self) -> f64 {
        [self.altitude, self.speed, self.power_peak, self.power_average, self.interference]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.max_relative() <= rel_tol && self.endpoint <= 1e-6
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub point: IteratePoint,
    /// Empty for the perfect model.
    pub theta: Vec<f64>,
    /// Empty for the perfect model.
    pub mu: Vec<f64>,
    /// Exact objective at iteration 0 (initial point) and every accepted step.
    pub objective_history: Vec<f64>,
    /// Exact unclipped objective of the reported point.
    pub objective: f64,
    pub rates: Vec<RatePair>,
    /// Clipped `[r_S − r_E]⁺` per slot.
    pub per_slot_secrecy: Vec<f64>,
    /// Mean of `per_slot_secrecy`.
    pub average_secrecy: f64,
    /// Distance from the UAV to the eavesdropper estimate per slot.
    pub uav_eve_distance: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub feasibility: FeasibilityReport,
    pub solver_snapshots: Vec<SolverSnapshot>,
    pub variable_count: usize,
}

/// Straight-line trajectory `c[n] = start + (n/N)(end − start)`, `n = 1..N`.
pub fn straight_line(cfg: &ScenarioConfig) -> Vec<Position3D> {
    let n = cfg.slot_count_n;
    (1..=n).map(|k| cfg.uav_start.lerp(&cfg.uav_end, k as f64 / n as f64)).collect()
}

fn horizontal_offset(c: &Position3D, eve: &Position3D) -> (f64, f64, f64) {
    (c.x - eve.x, c.y - eve.y, c.z - eve.z)
}

/// `max over ‖Δ‖ ≤ q` of `f_d(ĉ_E + (Δ, 0), c)`.
pub fn worst_case_uav_eve_sq(c: &Position3D, eve: &Position3D, q: f64) -> f64 {
    let (wx, wy, dz) = horizontal_offset(c, eve);
    let w = (wx * wx + wy * wy).sqrt();
    (w + q).powi(2) + dz * dz
}

/// Sunflower point `k` of `count` on the unit disk.
pub fn sunflower(k: usize, count: usize) -> (f64, f64) {
    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let r = ((k as f64 + 0.5) / count as f64).sqrt();
    let a = golden * k as f64;
    (r * a.cos(), r * a.sin())
}

/// Brute-force maximum of `f_d(ĉ_E + Δ, c)` over `samples` disk points,
/// including the boundary circle.
pub fn disk_max_squared_distance(c: &Position3D, eve: &Position3D, q: f64, samples: usize) -> f64 {
    let interior = (0..samples).map(|k| sunflower(k, samples));
    let rim = (0..samples.max(1)).map(|k| {
        let a = 2.0 * std::f64::consts::PI * k as f64 / samples.max(1) as f64;
        (a.cos(), a.sin())
    });
    interior
        .chain(rim)
        .map(|(u, v)| squared_distance(&Position3D::new(eve.x + q * u, eve.y + q * v, eve.z), c))
        .fold(0.0, f64::max)
}

pub struct Engine<'a> {
    pub cfg: &'a ScenarioConfig,
    pub ch: ChannelParams,
    pub eve: EveModel,
    pub pins: Pins,
    pub opts: SolveOptions,
    pub exec: Execution,
    /// `e^{−k} γ0 d_SS^{−φ}`.
    c_s: f64,
    /// `γ0 d_SE^{−φ}` with the model's ST–Eve distance.
    c_e: f64,
    /// `ρ0 d_SP^{−φ}`.
    sp_gain: f64,
}

impl<'a> Engine<'a> {
    pub fn new(cfg: &'a ScenarioConfig, eve: EveModel, pins: Pins) -> Result<Self> {
        let ch = cfg.channel();
        let d_ss = distance(&cfg.st_pos, &cfg.sr_pos);
        let d_sp = distance(&cfg.st_pos, &cfg.pr_pos);
        let d_se = match eve {
            EveModel::Perfect => distance(&cfg.st_pos, &cfg.eve_pos_estimate),
            EveModel::Robust { q } => crate::sca_robust::worst_case_st_eve_distance(&cfg.eve_pos_estimate, q, &cfg.st_pos)?,
        };
        for (name, d) in [("ST–SR", d_ss), ("ST–PR", d_sp), ("ST–Eve", d_se)] {
            if !(d > 0.0) {
                return Err(Error::InfeasibleGeometry(format!("{name} distance must be positive")));
            }
        }
        if let Some(z) = pins.altitude {
            if (cfg.uav_end.z - z).abs() > 0.0 {
                return Err(Error::InfeasibleGeometry(format!(
                    "2D flight at altitude {z} m cannot reach the endpoint altitude {} m",
                    cfg.uav_end.z
                )));
            }
        }
        Ok(Self {
            ch,
            eve,
            pins,
            opts: SolveOptions::default(),
            exec: Execution::Sequential,
            c_s: (-ch.euler_k).exp() * ch.gamma0 * d_ss.powf(-ch.path_loss_exp),
            c_e: ch.gamma0 * d_se.powf(-ch.path_loss_exp),
            sp_gain: ch.rho0 * d_sp.powf(-ch.path_loss_exp),
            cfg,
        })
    }

    fn n(&self) -> usize {
        self.cfg.slot_count_n
    }

    fn stride(&self) -> usize {
        match self.eve {
            EveModel::Perfect => 15,
            EveModel::Robust { .. } => 17,
        }
    }

    fn q(&self) -> f64 {
        match self.eve {
            EveModel::Perfect => 0.0,
            EveModel::Robust { q } => q,
        }
    }

    fn p_s_bounds(&self) -> (f64, f64) {
        match self.pins.p_s {
            Some(p) => (p, p),
            None => (POWER_FLOOR * self.cfg.p_s_max, self.cfg.p_s_max),
        }
    }

    fn p_u_bounds(&self) -> (f64, f64) {
        match self.pins.p_u {
            Some(p) => (p, p),
            None => (POWER_FLOOR * self.cfg.p_u_max, self.cfg.p_u_max),
        }
    }

    /// Squared UAV–Eve distance used by the model (worst case if robust).
    fn alpha_e_of(&self, c: &Position3D) -> f64 {
        worst_case_uav_eve_sq(c, &self.cfg.eve_pos_estimate, self.q())
    }

    /// Exact safe rates of one slot.
    pub fn slot_rates(&self, c: &Position3D, p_s: f64, p_u: f64) -> RatePair {
        let a_s = squared_distance(&self.cfg.sr_pos, c);
        let a_e = self.alpha_e_of(c);
        let g = self.ch.gamma0;
        let t_s = self.c_s * p_s / (g * p_u / a_s + 1.0);
        let t_e = self.c_e * p_s / (g * p_u / a_e + 1.0);
        RatePair::new(t_s.ln_1p() / std::f64::consts::LN_2, t_e.ln_1p() / std::f64::consts::LN_2)
    }

    /// Builds the iterate whose slacks are tight at `(c, p_S, p_U)`.
    pub fn tighten(&self, c_u: Vec<Position3D>, p_s: Vec<f64>, p_u: Vec<f64>) -> IteratePoint {
        let g = self.ch.gamma0;
        let n = c_u.len();
        let mut it = IteratePoint {
            r_s: vec![0.0; n],
            r_e: vec![0.0; n],
            t_s: vec![0.0; n],
            t_e: vec![0.0; n],
            alpha_s: vec![0.0; n],
            alpha_e: vec![0.0; n],
            alpha_p: vec![0.0; n],
            beta: vec![0.0; n],
            c_u,
            p_s,
            p_u,
        };
        for k in 0..n {
            let c = it.c_u[k];
            let (ps, pu) = (it.p_s[k], it.p_u[k]);
            let a_s = squared_distance(&self.cfg.sr_pos, &c);
            let a_e = self.alpha_e_of(&c);
            let beta = g * pu / a_e;
            let t_s = self.c_s * ps * a_s / (g * pu + a_s);
            let t_e = self.c_e * ps / (beta + 1.0);
            it.alpha_s[k] = a_s;
            it.alpha_e[k] = a_e;
            it.alpha_p[k] = squared_distance(&self.cfg.pr_pos, &c);
            it.beta[k] = beta;
            it.t_s[k] = t_s;
            it.t_e[k] = t_e;
            it.r_s[k] = t_s.ln_1p() / std::f64::consts::LN_2;
            it.r_e[k] = t_e.ln_1p() / std::f64::consts::LN_2;
        }
        it
    }

    /// Tight `(θ, μ)` for the robust model.
    pub fn robust_slacks(&self, point: &IteratePoint) -> (Vec<f64>, Vec<f64>) {
        let q = self.q();
        if !matches!(self.eve, EveModel::Robust { .. }) {
            return (Vec::new(), Vec::new());
        }
        point
            .c_u
            .iter()
            .map(|c| {
                if q == 0.0 {
                    return (0.0, 1.0);
                }
                let (wx, wy, _) = horizontal_offset(c, &self.cfg.eve_pos_estimate);
                let w = (wx * wx + wy * wy).sqrt();
                (-(q * q + 2.0 * q * w), 1.0 + w / q)
            })
            .unzip()
    }

    /// Initial point: straight-line flight, small constant jamming and the
    /// largest ST power keeping interference at 90% of the threshold.
    pub fn initial_point(&self) -> Result<IteratePoint> {
        let cfg = self.cfg;
        let n = self.n();
        let seg = distance(&cfg.uav_start, &cfg.uav_end);
        if seg > n as f64 * cfg.l_max * (1.0 + 1e-12) {
            return Err(Error::InfeasibleGeometry(format!(
                "straight segment of {seg:.3} m exceeds N·L_max = {:.3} m",
                n as f64 * cfg.l_max
            )));
        }
        let c_u: Vec<Position3D> = match &self.pins.trajectory {
            Some(t) => {
                if t.len() != n {
                    return Err(Error::LengthMismatch { expected: n, got: t.len() });
                }
                t.clone()
            }
            None => straight_line(cfg),
        };
        let p_u_val = self.pins.p_u.unwrap_or(0.5 * cfg.p_u_avg);
        let p_u = vec![p_u_val; n];
        let uav_part: f64 =
            c_u.iter().map(|c| cfg.rho0 * p_u_val / squared_distance(&cfg.pr_pos, c)).sum::<f64>() / n as f64;
        let p_s_val = match self.pins.p_s {
            Some(p) => p,
            None => {
                let budget = 0.9 * cfg.interference_eps - uav_part;
                if budget <= 0.0 {
                    return Err(Error::InfeasibleGeometry(
                        "initial jamming alone exceeds the interference threshold".into(),
                    ));
                }
                (budget / self.sp_gain).min(cfg.p_s_avg).min(cfg.p_s_max)
            }
        };
        let p_s = vec![p_s_val; n];
        let point = self.tighten(c_u, p_s, p_u);
        let report = self.audit(&point);
        if !report.holds(1e-9) {
            return Err(if self.pins.p_s.is_some() || self.pins.p_u.is_some() {
                Error::InfeasibleScheme(format!("pinned powers violate the original constraints: {report:?}"))
            } else {
                Error::InfeasibleGeometry(format!("initial point violates the original constraints: {report:?}"))
            });
        }
        Ok(point)
    }

    /// Exact feasibility of `(c, p)` against mobility, power and
    /// interference constraints.
    pub fn audit(&self, point: &IteratePoint) -> FeasibilityReport {
        audit_point(self.cfg, point)
    }

    fn idx(&self, slot: usize, k: usize) -> usize {
        slot * self.stride() + k
    }

    fn var(&self, slot: usize, k: usize) -> LinExpr {
        LinExpr::var(self.idx(slot, k))
    }

    fn position_exprs(&self, slot: usize) -> [LinExpr; 3] {
        [self.var(slot, X), self.var(slot, Y), self.var(slot, Z)]
    }

    /// Adds `Σ x_k² ≤ rhs` as a rotated cone with `v = ½`.
    fn quad_le(prog: &mut ConicProgram, tag: &'static str, rhs: LinExpr, terms: Vec<LinExpr>) {
        prog.push(tag, Block::Rsoc { u: rhs, v: LinExpr::constant(0.5), x: terms });
    }

    fn affine_distance(&self, anchor: &Position3D, c0: &Position3D, slot: usize) -> LinExpr {
        let (g, k) = distance_first_order(anchor, c0).affine();
        LinExpr::constant(k).with_term(self.idx(slot, X), g[0]).with_term(self.idx(slot, Y), g[1]).with_term(
            self.idx(slot, Z),
            g[2],
        )
    }

    /// Convex subproblem around `prev`.
    pub fn build(&self, prev: &IteratePoint) -> Result<ConicProgram> {
        let cfg = self.cfg;
        let n = self.n();
        if prev.slot_count() != n {
            return Err(Error::LengthMismatch { expected: n, got: prev.slot_count() });
        }
        let robust_q = match self.eve {
            EveModel::Robust { q } => Some(q),
            EveModel::Perfect => None,
        };
        let no_jam = self.pins.no_jamming();
        let g0 = self.ch.gamma0;
        let inv_n = 1.0 / n as f64;
        let (ps_lo, ps_hi) = self.p_s_bounds();
        let (pu_lo, pu_hi) = self.p_u_bounds();

        let mut prog = ConicProgram::new();
        for s in 0..n {
            let hint = |v: f64, floor: f64| v.abs().max(floor);
            let d2 = DIST_SCALE * DIST_SCALE;
            let mut scales = vec![
                DIST_SCALE,
                DIST_SCALE,
                DIST_SCALE,
                cfg.p_s_max,
                cfg.p_u_max,
                1.0,
                1.0,
                hint(prev.t_s[s], 1.0),
                hint(prev.t_e[s], 1.0),
                hint(prev.alpha_s[s], d2),
                hint(prev.alpha_e[s], d2),
                hint(prev.alpha_p[s], d2),
                hint(prev.beta[s], 1.0),
                hint(prev.t_e[s], 1.0),
                hint(prev.p_u[s] / prev.alpha_p[s], 1e-12),
            ];
            if robust_q.is_some() {
                scales.push(d2);
                scales.push(1.0);
            }
            for sc in scales {
                prog.add_variable(sc);
            }
        }

        let mut obj = LinExpr::zero();
        for s in 0..n {
            obj = obj.with_term(self.idx(s, RS), inv_n).with_term(self.idx(s, RE), -inv_n);
        }
        prog.add_objective(&obj);

        // Mobility.
        for s in 0..n {
            prog.add_le("altitude-min", LinExpr::constant(cfg.h_min), self.var(s, Z));
            prog.add_le("altitude-max", self.var(s, Z), LinExpr::constant(cfg.h_max));
            let here = self.position_exprs(s);
            let back: [LinExpr; 3] = if s == 0 {
                let a = cfg.uav_start.as_array();
                [LinExpr::constant(a[0]), LinExpr::constant(a[1]), LinExpr::constant(a[2])]
            } else {
                self.position_exprs(s - 1)
            };
            let hop: Vec<LinExpr> = here.into_iter().zip(back).map(|(a, b)| a - b).collect();
            prog.push("speed", Block::Soc { t: LinExpr::constant(cfg.l_max), x: hop });
            if let Some(z) = self.pins.altitude {
                prog.add_eq("pin-altitude", self.var(s, Z), LinExpr::constant(z));
            }
            if let Some(t) = &self.pins.trajectory {
                for (k, v) in [(X, t[s].x), (Y, t[s].y), (Z, t[s].z)] {
                    prog.add_eq("pin-trajectory", self.var(s, k), LinExpr::constant(v));
                }
            }
        }
        let end = cfg.uav_end.as_array();
        for (k, v) in [X, Y, Z].into_iter().zip(end) {
            prog.add_eq("endpoint", self.var(n - 1, k), LinExpr::constant(v));
        }

        // Powers.
        let mut avg_s = LinExpr::zero();
        let mut avg_u = LinExpr::zero();
        for s in 0..n {
            if ps_lo == ps_hi {
                prog.add_eq("pin-ps", self.var(s, PS), LinExpr::constant(ps_lo));
            } else {
                prog.add_le("ps-min", LinExpr::constant(ps_lo), self.var(s, PS));
                prog.add_le("ps-max", self.var(s, PS), LinExpr::constant(ps_hi));
            }
            if pu_lo == pu_hi {
                prog.add_eq("pin-pu", self.var(s, PU), LinExpr::constant(pu_lo));
            } else {
                prog.add_le("pu-min", LinExpr::constant(pu_lo), self.var(s, PU));
                prog.add_le("pu-max", self.var(s, PU), LinExpr::constant(pu_hi));
            }
            avg_s = avg_s.with_term(self.idx(s, PS), inv_n);
            avg_u = avg_u.with_term(self.idx(s, PU), inv_n);
        }
        prog.add_le("ps-average", avg_s, LinExpr::constant(cfg.p_s_avg));
        prog.add_le("pu-average", avg_u, LinExpr::constant(cfg.p_u_avg));

        let mut interference = LinExpr::constant(cfg.interference_eps);
        let mut interference_quads = Vec::new();

        for s in 0..n {
            let c0 = prev.c_u[s];
            let (ps0, pu0) = (prev.p_s[s], prev.p_u[s]);
            let (ts0, te0) = (prev.t_s[s], prev.t_e[s]);
            let (as0, ae0, ap0, b0) = (prev.alpha_s[s], prev.alpha_e[s], prev.alpha_p[s], prev.beta[s]);

            // r_S ≤ a − b/t_S.
            let lt = log_lower_tangent(ts0)?;
            prog.push(
                "rate-sr",
                Block::Rsoc {
                    u: LinExpr::constant(lt.a) - self.var(s, RS),
                    v: self.var(s, TS),
                    x: vec![LinExpr::constant((2.0 * lt.b).sqrt())],
                },
            );

            // t_S (γ0 p_U + α_S) ≤ C_S p_S α_S.
            let gexpr = self.var(s, AS) + self.var(s, PU) * g0;
            let bu = bilinear_upper(ts0, g0 * pu0 + as0)?;
            let bl = bilinear_lower(ps0, as0)?;
            let quarter = 0.25 * self.c_s;
            let lam = bl.lambda;
            let h = self.var(s, PS) * lam + self.var(s, AS) * (1.0 / lam);
            let gdiff = self.var(s, PS) * lam - self.var(s, AS) * (1.0 / lam);
            let rhs = h * (2.0 * bl.h0 * quarter) - LinExpr::constant(bl.h0 * bl.h0 * quarter);
            Self::quad_le(
                &mut prog,
                "snr-sr",
                rhs,
                vec![self.var(s, TS) * bu.x_coef.sqrt(), gexpr * bu.y_coef.sqrt(), gdiff * quarter.sqrt()],
            );

            // α_S ≤ f_d linearized at c0.
            prog.add_le("dist-sr", self.var(s, AS), self.affine_distance(&cfg.sr_pos, &c0, s));

            // r_E ≥ log2(1 + t_E) linearized.
            let lu = log_upper_tangent(te0)?;
            let (slope, k0) = lu.affine();
            prog.add_le("rate-eve", self.var(s, TE) * slope + LinExpr::constant(k0), self.var(s, RE));

            // C_E p_S / (β + 1) ≤ t_E.
            let qe = quad_over_lin_upper(self.c_e, ps0, b0)?;
            Self::quad_le(
                &mut prog,
                "snr-eve",
                self.var(s, TE) - self.var(s, VE),
                vec![self.var(s, PS) * qe.quad_coef().sqrt()],
            );
            let trust_b = self.var(s, BETA) * 2.0 + LinExpr::constant(1.0 - b0);
            prog.push(
                "snr-eve-hyperbolic",
                Block::Rsoc {
                    u: self.var(s, VE),
                    v: trust_b.clone(),
                    x: vec![LinExpr::constant((2.0 * qe.hyperbolic_numerator()).sqrt())],
                },
            );
            prog.push("trust-beta", Block::Nonneg(trust_b.with_constant(-MARGIN)));

            // α_E β ≤ γ0 p_U.
            if no_jam {
                prog.add_eq("pin-beta", self.var(s, BETA), LinExpr::zero());
            } else {
                let bj = bilinear_upper(ae0, b0)?;
                Self::quad_le(
                    &mut prog,
                    "jamming",
                    self.var(s, PU) * g0,
                    vec![self.var(s, AE) * bj.x_coef.sqrt(), self.var(s, BETA) * bj.y_coef.sqrt()],
                );
                prog.add_le("beta-min", LinExpr::constant(MARGIN), self.var(s, BETA));
            }

            // Eve distance.
            let eve = cfg.eve_pos_estimate;
            let w = [
                self.var(s, X).with_constant(-eve.x),
                self.var(s, Y).with_constant(-eve.y),
                self.var(s, Z).with_constant(-eve.z),
            ];
            match robust_q {
                Some(q) if q > 0.0 => {
                    let v = SProcedureVars {
                        x: self.idx(s, X),
                        y: self.idx(s, Y),
                        z: self.idx(s, Z),
                        alpha_e: self.idx(s, AE),
                        theta: self.idx(s, THETA),
                        mu: self.idx(s, MU),
                    };
                    for (tag, b) in s_procedure_blocks(&v, &eve, q)? {
                        prog.push(tag, b);
                    }
                }
                Some(_) => {
                    Self::quad_le(&mut prog, "eve-distance", self.var(s, AE), w.to_vec());
                    prog.add_eq("pin-theta", self.var(s, THETA), LinExpr::zero());
                    prog.add_eq("pin-mu", self.var(s, MU), LinExpr::constant(1.0));
                }
                None => Self::quad_le(&mut prog, "eve-distance", self.var(s, AE), w.to_vec()),
            }

            // α_P ≤ f_d linearized at c0 and the interference terms.
            prog.add_le("dist-pr", self.var(s, AP), self.affine_distance(&cfg.pr_pos, &c0, s));
            interference = interference - self.var(s, PS) * (self.sp_gain * inv_n);
            if no_jam {
                prog.add_eq("pin-vp", self.var(s, VP), LinExpr::zero());
            } else {
                let qp = QuadOverLinUpper::with_denominator(cfg.rho0, pu0, ap0)?;
                let trust_p = self.var(s, AP) * 2.0 - LinExpr::constant(ap0);
                prog.push(
                    "interference-hyperbolic",
                    Block::Rsoc { u: self.var(s, VP), v: trust_p.clone(), x: vec![LinExpr::constant((2.0 * pu0).sqrt())] },
                );
                prog.push("trust-alpha-p", Block::Nonneg(trust_p.with_constant(-MARGIN)));
                interference = interference - self.var(s, VP) * (0.5 * cfg.rho0 * inv_n);
                interference_quads.push(self.var(s, PU) * (qp.quad_coef() * inv_n).sqrt());
            }

            for k in [AS, AE, AP] {
                prog.add_le("alpha-min", LinExpr::constant(MARGIN), self.var(s, k));
            }
            prog.add_le("ts-min", LinExpr::constant(MARGIN), self.var(s, TS));
        }
        if no_jam {
            prog.push("interference", Block::Nonneg(interference));
        } else {
            Self::quad_le(&mut prog, "interference", interference, interference_quads);
        }
        Ok(prog)
    }

    /// Subproblem variable vector holding `point` with tight epigraph
    /// variables (and tight `θ, μ` in the robust model).
    pub fn pack(&self, point: &IteratePoint) -> Vec<f64> {
        let (theta, mu) = self.robust_slacks(point);
        self.pack_with(point, &theta, &mu)
    }

    pub fn pack_robust(&self, it: &RobustIterate) -> Vec<f64> {
        self.pack_with(&it.point, &it.theta, &it.mu)
    }

    fn pack_with(&self, p: &IteratePoint, theta: &[f64], mu: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n() * self.stride()];
        for s in 0..self.n() {
            let c = p.c_u[s];
            let vals = [
                (X, c.x),
                (Y, c.y),
                (Z, c.z),
                (PS, p.p_s[s]),
                (PU, p.p_u[s]),
                (RS, p.r_s[s]),
                (RE, p.r_e[s]),
                (TS, p.t_s[s]),
                (TE, p.t_e[s]),
                (AS, p.alpha_s[s]),
                (AE, p.alpha_e[s]),
                (AP, p.alpha_p[s]),
                (BETA, p.beta[s]),
                (VE, 0.5 * self.c_e * p.p_s[s] / (p.beta[s] + 1.0)),
                (VP, if self.pins.no_jamming() { 0.0 } else { p.p_u[s] / p.alpha_p[s] }),
            ];
            for (k, v) in vals {
                x[self.idx(s, k)] = v;
            }
            if self.stride() > THETA {
                x[self.idx(s, THETA)] = theta[s];
                x[self.idx(s, MU)] = mu[s];
            }
        }
        x
    }

    /// Pulls `(c, p_S, p_U)` out of a solution, snapping pinned values.
    fn extract(&self, sol: &ConicSolution) -> (Vec<Position3D>, Vec<f64>, Vec<f64>, SolverSnapshot) {
        let n = self.n();
        let x = &sol.primal;
        let (ps_lo, ps_hi) = self.p_s_bounds();
        let (pu_lo, pu_hi) = self.p_u_bounds();
        let mut c_u = Vec::with_capacity(n);
        let mut raw_c = Vec::with_capacity(n);
        let mut p_s = Vec::with_capacity(n);
        let mut p_u = Vec::with_capacity(n);
        let mut alpha_e = Vec::with_capacity(n);
        for s in 0..n {
            let raw = Position3D::new(x[self.idx(s, X)], x[self.idx(s, Y)], x[self.idx(s, Z)]);
            raw_c.push(raw);
            alpha_e.push(x[self.idx(s, AE)]);
            let mut c = raw;
            c.z = c.z.clamp(self.cfg.h_min, self.cfg.h_max);
            if let Some(z) = self.pins.altitude {
                c.z = z;
            }
            if let Some(t) = &self.pins.trajectory {
                c = t[s];
            }
            if s == n - 1 {
                c = self.cfg.uav_end;
            }
            c_u.push(c);
            p_s.push(x[self.idx(s, PS)].clamp(ps_lo, ps_hi));
            p_u.push(x[self.idx(s, PU)].clamp(pu_lo, pu_hi));
        }
        (c_u, p_s, p_u, SolverSnapshot { c_u: raw_c, alpha_e })
    }

    /// Runs the SCA loop from `init`.
    pub fn run(&self, init: IteratePoint) -> Result<RunResult> {
        let mut current = init;
        let mut history = vec![current.objective()];
        let mut snapshots = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        let mut variable_count = 0;
        for i in 1..=MAX_ITERATIONS {
            let prog = self.build(&current)?;
            variable_count = prog.variable_count;
            let sol = conic::solve_with(&prog, &self.opts)?;
            if sol.status != SolveStatus::Optimal {
                let detail = format!(
                    "backend {}, violation {:.3e} at {}",
                    sol.backend_status,
                    sol.max_violation,
                    sol.worst_block.unwrap_or("-")
                );
                return Err(Error::Subproblem { iteration: i, status: sol.status, detail });
            }
            let (c_u, p_s, p_u, snap) = self.extract(&sol);
            let next = self.tighten(c_u, p_s, p_u);
            let prev_obj = *history.last().expect("history starts non-empty");
            let obj = next.objective();
            if !(obj >= prev_obj) {
                converged = true;
                break;
            }
            iterations = i;
            history.push(obj);
            snapshots.push(snap);
            current = next;
            let gain = obj - prev_obj;
            let done = if prev_obj.abs() <= RELATIVE_GUARD {
                gain <= self.cfg.eps_tol
            } else {
                gain / prev_obj.abs() <= self.cfg.eps_tol
            };
            if done {
                converged = true;
                break;
            }
        }
        if variable_count == 0 {
            variable_count = self.n() * self.stride();
        }

        // Slots with negative secrecy are better off silent.
        let mut p_s = current.p_s.clone();
        let mut changed = false;
        if self.pins.p_s.is_none() {
            for ((p, r_s), r_e) in p_s.iter_mut().zip(&current.r_s).zip(&current.r_e) {
                if r_s - r_e < 0.0 {
                    *p = 0.0;
                    changed = true;
                }
            }
        }
        if changed {
            current = self.tighten(current.c_u.clone(), p_s, current.p_u.clone());
        }
        Ok(self.finish(current, history, snapshots, iterations, converged, variable_count))
    }

    fn finish(
        &self,
        point: IteratePoint,
        history: Vec<f64>,
        solver_snapshots: Vec<SolverSnapshot>,
        iterations: usize,
        converged: bool,
        variable_count: usize,
    ) -> RunResult {
        let rates: Vec<RatePair> =
            (0..point.slot_count()).map(|s| RatePair::new(point.r_s[s], point.r_e[s])).collect();
        let per_slot_secrecy: Vec<f64> = rates.iter().map(|r| r.secrecy).collect();
        let average_secrecy = per_slot_secrecy.iter().sum::<f64>() / per_slot_secrecy.len() as f64;
        let uav_eve_distance = point.c_u.iter().map(|c| distance(c, &self.cfg.eve_pos_estimate)).collect();
        let (theta, mu) = self.robust_slacks(&point);
        RunResult {
            feasibility: self.audit(&point),
            objective: point.objective(),
            point,
            theta,
            mu,
            objective_history: history,
            rates,
            per_slot_secrecy,
            average_secrecy,
            uav_eve_distance,
            iterations,
            converged,
            solver_snapshots,
            variable_count,
        }
    }

    /// Largest relative excess of the disk maximum of `f_d` over `α_E`
    /// across slots.
    pub fn disk_violation(&self, c_u: &[Position3D], alpha_e: &[f64], samples: usize) -> f64 {
        let q = self.q();
        let eve = self.cfg.eve_pos_estimate;
        par::map_indexed(self.exec, c_u.len(), |s| {
            let m = disk_max_squared_distance(&c_u[s], &eve, q, samples);
            (m - alpha_e[s]) / alpha_e[s]
        })
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Exact feasibility of a trajectory and power schedule.
pub fn audit_point(cfg: &ScenarioConfig, point: &IteratePoint) -> FeasibilityReport {
    let n = point.slot_count();
    let mut altitude = 0.0_f64;
    let mut speed = 0.0_f64;
    let mut prev = cfg.uav_start;
    for c in &point.c_u {
        altitude = altitude.max((cfg.h_min - c.z) / cfg.h_min).max((c.z - cfg.h_max) / cfg.h_max);
        speed = speed.max((distance(c, &prev) - cfg.l_max) / cfg.l_max);
        prev = *c;
    }
    let endpoint = point.c_u.last().map_or(f64::INFINITY, |c| distance(c, &cfg.uav_end));
    let mut power_peak = 0.0_f64;
    for s in 0..n {
        power_peak = power_peak
            .max((point.p_s[s] - cfg.p_s_max) / cfg.p_s_max)
            .max(-point.p_s[s] / cfg.p_s_max)
            .max((point.p_u[s] - cfg.p_u_max) / cfg.p_u_max)
            .max(-point.p_u[s] / cfg.p_u_max);
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let power_average = ((avg(&point.p_s) - cfg.p_s_avg) / cfg.p_s_avg).max((avg(&point.p_u) - cfg.p_u_avg) / cfg.p_u_avg);
    let d_sp = distance(&cfg.st_pos, &cfg.pr_pos);
    let d_up: Vec<f64> = point.c_u.iter().map(|c| distance(c, &cfg.pr_pos)).collect();
    let interference = crate::channel::interference_at_pr(&point.p_s, &point.p_u, d_sp, &d_up, &cfg.channel())
        .map_or(f64::INFINITY, |i| (i - cfg.interference_eps) / cfg.interference_eps);
    FeasibilityReport {
        altitude: altitude.max(0.0),
        speed: speed.max(0.0),
        endpoint,
        power_peak: power_peak.max(0.0),
        power_average: power_average.max(0.0),
        interference: interference.max(0.0),
    }
}
