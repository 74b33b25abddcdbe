//! Clarabel adapter. Clarabel solves `min ½yᵀPy + qᵀy` s.t. `Ay + s = b`,
//! `s ∈ K`; here `P = 0` and every block maps to rows of `A`, `b` with
//! `s` equal to the block's affine expressions.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus, SupportedConeT,
    ZeroConeT,
};

use super::{Block, ConicProgram, ConicSolution, LinExpr, SolveStatus, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: super::DEFAULT_TOL, max_iter: DEFAULT_MAX_ITER }
    }
}

/// Solves with the default iteration cap.
pub fn solve(program: &ConicProgram, tol: f64) -> Result<ConicSolution> {
    solve_with(program, &SolveOptions { tol, ..SolveOptions::default() })
}

#[derive(Default)]
struct Rows {
    ai: Vec<usize>,
    aj: Vec<usize>,
    av: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

impl Rows {
    /// Appends `s = e / norm` as one row of `Ay + s = b`.
    fn row(&mut self, e: &LinExpr, norm: f64) {
        let r = self.b.len();
        for &(j, c) in &e.canonical().terms {
            self.ai.push(r);
            self.aj.push(j);
            self.av.push(-c / norm);
        }
        self.b.push(e.constant / norm);
    }

    fn cone(&mut self, cone: SupportedConeT<f64>) {
        match (self.cones.last_mut(), &cone) {
            (Some(ZeroConeT(k)), ZeroConeT(d)) | (Some(NonnegativeConeT(k)), NonnegativeConeT(d)) => *k += d,
            _ => self.cones.push(cone),
        }
    }
}

impl ConicProgram {
    /// Same program in `y = x / scale`, with unit scales.
    pub fn rescaled(&self) -> ConicProgram {
        let map = |e: &LinExpr| LinExpr {
            terms: e.terms.iter().map(|&(i, c)| (i, c * self.scale[i])).collect(),
            constant: e.constant,
        };
        let mut out = ConicProgram {
            variable_count: self.variable_count,
            objective: self.objective.iter().zip(&self.scale).map(|(c, s)| c * s).collect(),
            objective_constant: self.objective_constant,
            constraints: Vec::with_capacity(self.constraints.len()),
            scale: vec![1.0; self.variable_count],
        };
        for c in &self.constraints {
            let block = match &c.block {
                Block::Eq(e) => Block::Eq(map(e)),
                Block::Nonneg(e) => Block::Nonneg(map(e)),
                Block::Soc { t, x } => Block::Soc { t: map(t), x: x.iter().map(map).collect() },
                Block::Rsoc { u, v, x } => Block::Rsoc { u: map(u), v: map(v), x: x.iter().map(map).collect() },
                Block::Psd3(m) => {
                    let mut m = m.clone();
                    for e in &mut m.upper {
                        *e = map(e);
                    }
                    Block::Psd3(m)
                }
            };
            out.push(c.tag, block);
        }
        out
    }

    /// Max block-normalized violation in scaled coordinates, the measure
    /// behind [`SolveStatus::Optimal`].
    pub fn scaled_violation(&self, x: &[f64]) -> (f64, Option<&'static str>) {
        let y: Vec<f64> = x.iter().zip(&self.scale).map(|(v, s)| v / s).collect();
        balanced(self.rescaled(), None).max_violation(&y)
    }
}

fn expr_magnitude(e: &LinExpr) -> f64 {
    e.terms.iter().map(|t| t.1.abs()).fold(e.constant.abs(), f64::max)
}

/// Rescales each rotated cone `2uv ≥ ‖x‖²` to `u ← κu`, `v ← v/κ`, which
/// leaves the feasible set unchanged and keeps the equivalent second-order
/// cone away from degeneracy. `κ = √(v/u)` at `at` when both sides are
/// positive there, else the ratio of coefficient magnitudes.
fn balanced(mut p: ConicProgram, at: Option<&[f64]>) -> ConicProgram {
    for c in &mut p.constraints {
        if let Block::Rsoc { u, v, .. } = &mut c.block {
            let (mu, mv) = match at.map(|y| (u.eval(y), v.eval(y))) {
                Some((a, b)) if a > 0.0 && b > 0.0 => (a, b),
                _ => (expr_magnitude(u), expr_magnitude(v)),
            };
            if mu > 0.0 && mv > 0.0 {
                let k = (mv / mu).sqrt();
                *u = u.clone() * k;
                *v = v.clone() * (1.0 / k);
            }
        }
    }
    p
}

/// Clarabel data `(q, A, b, cones)` for a rescaled program, every block
/// normalized by its largest coefficient.
fn backend_data(scaled: &ConicProgram) -> (Vec<f64>, CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
    let mut rows = Rows::default();
    let r2 = std::f64::consts::SQRT_2;
    for c in &scaled.constraints {
        let norm = c.block.norm();
        match &c.block {
            Block::Eq(e) => {
                rows.row(e, norm);
                rows.cone(ZeroConeT(1));
            }
            Block::Nonneg(e) => {
                rows.row(e, norm);
                rows.cone(NonnegativeConeT(1));
            }
            Block::Soc { t, x } => {
                rows.row(t, norm);
                for e in x {
                    rows.row(e, norm);
                }
                rows.cone(SecondOrderConeT(1 + x.len()));
            }
            Block::Rsoc { u, v, x } => {
                rows.row(&(u.clone() + v.clone()), norm);
                rows.row(&(u.clone() - v.clone()), norm);
                for e in x {
                    rows.row(&(e.clone() * r2), norm);
                }
                rows.cone(SecondOrderConeT(2 + x.len()));
            }
            Block::Psd3(_) => unreachable!("lowered() removes PSD blocks"),
        }
    }
    let obj_norm = scaled.objective.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let obj_norm = if obj_norm > 0.0 { obj_norm } else { 1.0 };
    let q = scaled.objective.iter().map(|c| -c / obj_norm).collect();
    let a = CscMatrix::new_from_triplets(rows.b.len(), scaled.variable_count, rows.ai, rows.aj, rows.av);
    (q, a, rows.b, rows.cones)
}

/// Floor, relative to the caller's scale, on scales refreshed from a
/// previous attempt.
const RESCALE_FLOOR: f64 = 1e-3;

pub fn solve_with(program: &ConicProgram, opts: &SolveOptions) -> Result<ConicSolution> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("solver tolerance must be positive, got {}", opts.tol)));
    }
    program.validate()?;
    let lowered = program.lowered()?;
    // Violations are always measured on this fixed normalization.
    let audit = balanced(lowered.rescaled(), None);
    let n = lowered.variable_count;
    let p = CscMatrix::<f64>::zeros((n, n));

    // Backend feasibility is relative to data norms, so a backend success
    // can still miss the absolute row-scaled audit. Retry tighter, then
    // with scales and cone balance taken from the best attempt so far.
    let mut best: Option<ConicSolution> = None;
    for round in 0..3 {
        let mut working = lowered.clone();
        let mut reference = None;
        if let Some(b) = &best {
            for (i, s) in working.scale.iter_mut().enumerate() {
                *s = b.primal[i].abs().max(RESCALE_FLOOR * program.scale[i]);
            }
            reference = Some(b.primal.iter().zip(&working.scale).map(|(x, s)| x / s).collect::<Vec<f64>>());
        }
        let sent = balanced(working.rescaled(), reference.as_deref());
        let (q, a, b, cones) = backend_data(&sent);
        let factors: &[f64] = if round == 0 { &[0.1, 1e-3] } else { &[0.1] };
        for &factor in factors {
            let settings = DefaultSettings {
                max_iter: opts.max_iter,
                verbose: false,
                tol_gap_abs: opts.tol,
                tol_gap_rel: opts.tol,
                tol_feas: factor * opts.tol,
                equilibrate_enable: false,
                iterative_refinement_max_iter: 40,
                iterative_refinement_reltol: 1e-14,
                iterative_refinement_abstol: 1e-14,
                static_regularization_constant: 1e-10,
                ..DefaultSettings::default()
            };
            let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
                .map_err(|e| Error::MalformedProgram(format!("backend rejected program: {e}")))?;
            solver.solve();

            let sol = &solver.solution;
            let primal: Vec<f64> = sol.x.iter().zip(&working.scale).map(|(y, s)| y * s).collect();
            let (max_violation, worst_block) = audit.max_violation(
                &primal.iter().zip(&program.scale).map(|(x, s)| x / s).collect::<Vec<f64>>(),
            );
            let converged = matches!(sol.status, SolverStatus::Solved | SolverStatus::AlmostSolved);
            let finite = primal.iter().all(|v| v.is_finite());
            let status = match sol.status {
                _ if converged && finite && max_violation <= opts.tol => SolveStatus::Optimal,
                SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
                SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
                _ => SolveStatus::NumericalFailure,
            };
            let out = ConicSolution {
                status,
                objective_value: program.objective_value(&primal),
                primal,
                kkt_residual: solver.info.res_primal.max(solver.info.res_dual),
                max_violation,
                iterations: sol.iterations,
                worst_block,
                backend_status: format!("{:?}", sol.status),
            };
            if !(finite && status == SolveStatus::NumericalFailure) {
                return Ok(out);
            }
            if best.as_ref().is_none_or(|b| out.max_violation < b.max_violation) {
                best = Some(out);
            }
        }
    }
    Ok(best.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::{Sym3, DEFAULT_TOL};

    #[test]
    fn linear_example() {
        let mut p = ConicProgram::new();
        let x = p.add_variable(1.0);
        p.add_objective(&LinExpr::term(x, -1.0));
        p.push("x>=1", Block::Nonneg(LinExpr::var(x).with_constant(-1.0)));
        let s = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[x] - 1.0).abs() < 1e-7);
        assert!(s.objective_value <= -1.0 + 1e-7);
    }

    #[test]
    fn fixed_vector_soc_example() {
        let mut p = ConicProgram::new();
        let t = p.add_variable(1.0);
        p.add_objective(&LinExpr::term(t, -1.0));
        p.push("soc", Block::Soc { t: LinExpr::var(t), x: vec![LinExpr::constant(3.0), LinExpr::constant(4.0)] });
        let s = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[t] - 5.0).abs() < 1e-6);
        assert!(s.objective_value <= -5.0 + 1e-6);
    }

    #[test]
    fn diagonal_psd_example() {
        let mut p = ConicProgram::new();
        let mu = p.add_variable(1.0);
        p.add_objective(&LinExpr::term(mu, -1.0));
        let d = LinExpr::var(mu).with_constant(-1.0);
        p.push("psd", Block::Psd3(Sym3::arrow(d.clone(), LinExpr::zero(), LinExpr::zero(), d)));
        let s = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[mu] - 1.0).abs() < 1e-6);
        assert!(s.objective_value <= -1.0 + 1e-6);
    }

    #[test]
    fn rotated_cone_with_scales() {
        // max x s.t. 2·u·v ≥ x², u = 1e3, v = 2e-3 → x = 2.
        let mut p = ConicProgram::new();
        let u = p.add_variable(1e3);
        let v = p.add_variable(1e-3);
        let x = p.add_variable(1.0);
        p.add_objective(&LinExpr::var(x));
        p.add_eq("u", LinExpr::var(u), LinExpr::constant(1e3));
        p.add_eq("v", LinExpr::var(v), LinExpr::constant(2e-3));
        p.push("rsoc", Block::Rsoc { u: LinExpr::var(u), v: LinExpr::var(v), x: vec![LinExpr::var(x)] });
        let s = solve(&p, DEFAULT_TOL).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[x] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = ConicProgram::new();
        let x = p.add_variable(1.0);
        p.push("lo", Block::Nonneg(LinExpr::var(x).with_constant(-2.0)));
        p.push("hi", Block::Nonneg(LinExpr::term(x, -1.0).with_constant(1.0)));
        assert_eq!(solve(&p, DEFAULT_TOL).unwrap().status, SolveStatus::Infeasible);

        let mut p = ConicProgram::new();
        let x = p.add_variable(1.0);
        p.add_objective(&LinExpr::var(x));
        p.push("lo", Block::Nonneg(LinExpr::var(x)));
        assert_eq!(solve(&p, DEFAULT_TOL).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn bad_tolerance_is_an_error() {
        let p = ConicProgram::new();
        assert!(solve(&p, 0.0).is_err());
    }
}
