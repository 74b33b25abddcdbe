//! Solver-agnostic convex programs over linear, second-order, rotated
//! second-order and 3×3 arrow-shaped PSD blocks.
//!
//! Programs are written in physical units. Each variable carries a scale
//! hint; the backend solves in `y = x / scale` and normalizes every block by
//! its largest coefficient, so reported violations are in row-scaled units.

mod backend;
mod cbf;

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub use backend::{solve, solve_with, SolveOptions};
pub use cbf::write_cbf;

/// Default tolerance for optimality and feasibility.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default interior-point iteration cap.
pub const DEFAULT_MAX_ITER: u32 = 200;

/// Affine expression `Σ coef·x[var] + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(i: usize) -> Self {
        Self::term(i, 1.0)
    }

    pub fn term(i: usize, coef: f64) -> Self {
        Self { terms: vec![(i, coef)], constant: 0.0 }
    }

    pub fn with_term(mut self, i: usize, coef: f64) -> Self {
        self.terms.push((i, coef));
        self
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().fold(self.constant, |acc, &(i, c)| acc + c * x[i])
    }

    /// Sorted by variable with duplicates merged and exact zeros dropped.
    pub fn canonical(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (i, c) in terms {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Self { terms: merged, constant: self.constant }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.iter().all(|&(_, c)| c == 0.0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.iter().map(|&(i, _)| i).max()
    }

    fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.terms.iter().all(|&(_, c)| c.is_finite())
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }
}

/// Symmetric 3×3 affine matrix stored by its upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct Sym3 {
    /// `[m00, m01, m02, m11, m12, m22]`.
    pub upper: [LinExpr; 6],
}

impl Sym3 {
    /// `[[μ−1, 0, a], [0, μ−1, b], [a, b, c]]` given `μ−1`, `a`, `b`, `c`.
    pub fn arrow(mu_minus_one: LinExpr, a: LinExpr, b: LinExpr, c: LinExpr) -> Self {
        Self { upper: [mu_minus_one.clone(), LinExpr::zero(), a, mu_minus_one, b, c] }
    }

    pub fn eval(&self, x: &[f64]) -> [[f64; 3]; 3] {
        let v: Vec<f64> = self.upper.iter().map(|e| e.eval(x)).collect();
        [[v[0], v[1], v[2]], [v[1], v[3], v[4]], [v[2], v[4], v[5]]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    /// `expr = 0`.
    Eq(LinExpr),
    /// `expr ≥ 0`.
    Nonneg(LinExpr),
    /// `‖x‖ ≤ t`.
    Soc { t: LinExpr, x: Vec<LinExpr> },
    /// `2uv ≥ ‖x‖²` with `u, v ≥ 0`.
    Rsoc { u: LinExpr, v: LinExpr, x: Vec<LinExpr> },
    /// Matrix is positive semidefinite. Only the arrow shape is solvable.
    Psd3(Sym3),
}

impl Block {
    fn exprs(&self) -> Vec<&LinExpr> {
        match self {
            Block::Eq(e) | Block::Nonneg(e) => vec![e],
            Block::Soc { t, x } => std::iter::once(t).chain(x.iter()).collect(),
            Block::Rsoc { u, v, x } => [u, v].into_iter().chain(x.iter()).collect(),
            Block::Psd3(m) => m.upper.iter().collect(),
        }
    }

    /// Largest absolute coefficient or constant, floored at 1e-300.
    pub fn norm(&self) -> f64 {
        self.exprs()
            .iter()
            .flat_map(|e| e.terms.iter().map(|t| t.1.abs()).chain(std::iter::once(e.constant.abs())))
            .fold(1e-300, f64::max)
    }

    /// Violation at `x` in unscaled units (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Block::Eq(e) => e.eval(x).abs(),
            Block::Nonneg(e) => (-e.eval(x)).max(0.0),
            Block::Soc { t, x: xs } => {
                let n = xs.iter().map(|e| e.eval(x).powi(2)).sum::<f64>().sqrt();
                (n - t.eval(x)).max(0.0)
            }
            Block::Rsoc { u, v, x: xs } => {
                let (u, v) = (u.eval(x), v.eval(x));
                let sq: f64 = xs.iter().map(|e| e.eval(x).powi(2)).sum();
                let n = (2.0 * sq + (u - v).powi(2)).sqrt();
                (n - (u + v)).max(0.0) / std::f64::consts::SQRT_2
            }
            Block::Psd3(m) => (-min_eigenvalue_sym3(&m.eval(x))).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: &'static str,
    pub block: Block,
}

/// Maximize `objective · x + objective_constant` subject to `constraints`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConicProgram {
    pub variable_count: usize,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub constraints: Vec<Constraint>,
    /// Typical magnitude of each variable, used as a preconditioner.
    pub scale: Vec<f64>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a variable with the given magnitude hint.
    pub fn add_variable(&mut self, scale: f64) -> usize {
        self.variable_count += 1;
        self.objective.push(0.0);
        self.scale.push(scale);
        self.variable_count - 1
    }

    pub fn add_objective(&mut self, e: &LinExpr) {
        for &(i, c) in &e.terms {
            self.objective[i] += c;
        }
        self.objective_constant += e.constant;
    }

    pub fn push(&mut self, tag: &'static str, block: Block) {
        self.constraints.push(Constraint { tag, block });
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, tag: &'static str, lhs: LinExpr, rhs: LinExpr) {
        self.push(tag, Block::Nonneg(rhs - lhs));
    }

    /// `lhs = rhs`.
    pub fn add_eq(&mut self, tag: &'static str, lhs: LinExpr, rhs: LinExpr) {
        self.push(tag, Block::Eq(lhs - rhs));
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() + self.objective_constant
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.variable_count {
            return Err(Error::LengthMismatch { expected: self.variable_count, got: self.objective.len() });
        }
        if self.scale.len() != self.variable_count {
            return Err(Error::LengthMismatch { expected: self.variable_count, got: self.scale.len() });
        }
        if let Some(i) = self.scale.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::MalformedProgram(format!("variable {i} has scale {}", self.scale[i])));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::MalformedProgram("non-finite objective coefficient".into()));
        }
        for (k, c) in self.constraints.iter().enumerate() {
            for e in c.block.exprs() {
                if let Some(i) = e.max_var().filter(|&i| i >= self.variable_count) {
                    return Err(Error::MalformedProgram(format!(
                        "constraint {k} ({}) references undeclared variable {i}",
                        c.tag
                    )));
                }
                if !e.is_finite() {
                    return Err(Error::MalformedProgram(format!("constraint {k} ({}) has a non-finite entry", c.tag)));
                }
            }
        }
        Ok(())
    }

    /// Replaces every PSD block by its rotated-cone form.
    pub fn lowered(&self) -> Result<ConicProgram> {
        let mut out = self.clone();
        out.constraints.clear();
        for c in &self.constraints {
            match &c.block {
                Block::Psd3(m) => {
                    for b in lmi_to_rotated_cone(m)? {
                        out.push(c.tag, b);
                    }
                }
                b => out.push(c.tag, b.clone()),
            }
        }
        Ok(out)
    }

    /// Largest row-normalized violation and the tag of the offending block.
    pub fn max_violation(&self, x: &[f64]) -> (f64, Option<&'static str>) {
        self.constraints.iter().fold((0.0, None), |(worst, tag), c| {
            let v = c.block.violation(x) / c.block.norm();
            if v > worst {
                (v, Some(c.tag))
            } else {
                (worst, tag)
            }
        })
    }
}

/// Lowers `[[μ−1, 0, a], [0, μ−1, b], [a, b, c]] ⪰ 0` to
/// `μ−1 ≥ 0`, `c ≥ 0`, `2(μ−1)c ≥ 2a² + 2b²` (same feasible set).
pub fn lmi_to_rotated_cone(m: &Sym3) -> Result<Vec<Block>> {
    let [d0, off01, a, d1, b, c] = &m.upper;
    let same_diag = {
        let (p, q) = (d0.canonical(), d1.canonical());
        p.constant == q.constant && p.terms == q.terms
    };
    if !off01.canonical().is_zero() || !same_diag {
        return Err(Error::MalformedProgram("PSD block does not have the arrow structure".into()));
    }
    let r2 = std::f64::consts::SQRT_2;
    Ok(vec![
        Block::Nonneg(d0.clone()),
        Block::Nonneg(c.clone()),
        Block::Rsoc { u: d0.clone(), v: c.clone(), x: vec![a.clone() * r2, b.clone() * r2] },
    ])
}

/// Smallest eigenvalue of a symmetric 3×3 matrix.
pub fn min_eigenvalue_sym3(m: &[[f64; 3]; 3]) -> f64 {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        return m[0][0].min(m[1][1]).min(m[2][2]);
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (m[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub objective_value: f64,
    /// Max of primal and dual residuals reported by the backend.
    pub kkt_residual: f64,
    /// Largest row-normalized block violation of `primal`.
    pub max_violation: f64,
    pub iterations: u32,
    /// Tag of the block attaining `max_violation`.
    pub worst_block: Option<&'static str>,
    /// Backend status name, for diagnostics.
    pub backend_status: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrow_program(mu: f64, a: f64, b: f64, c: f64) -> (Vec<Block>, Vec<f64>) {
        let m = Sym3::arrow(LinExpr::var(0).with_constant(-1.0), LinExpr::var(1), LinExpr::var(2), LinExpr::var(3));
        (lmi_to_rotated_cone(&m).unwrap(), vec![mu, a, b, c])
    }

    fn lowered_violation(mu: f64, a: f64, b: f64, c: f64) -> f64 {
        let (blocks, x) = arrow_program(mu, a, b, c);
        blocks.iter().map(|bl| bl.violation(&x)).fold(0.0, f64::max)
    }

    #[test]
    fn lmi_examples() {
        assert_eq!(lowered_violation(2.0, 0.0, 0.0, 0.0), 0.0);
        assert!(lowered_violation(2.0, 1.0, 0.0, 1.0) <= 1e-12);
        assert!(lowered_violation(1.0, 1.0, 0.0, 1.0) > 0.1);
        assert!(lowered_violation(1.0, 1.0, 0.0, 5.0) > 0.1);
    }

    #[test]
    fn non_arrow_shape_is_rejected() {
        let mut m = Sym3::arrow(LinExpr::var(0), LinExpr::var(1), LinExpr::var(2), LinExpr::var(3));
        m.upper[1] = LinExpr::var(1);
        assert!(lmi_to_rotated_cone(&m).is_err());
        let mut m = Sym3::arrow(LinExpr::var(0), LinExpr::var(1), LinExpr::var(2), LinExpr::var(3));
        m.upper[3] = LinExpr::var(2);
        assert!(lmi_to_rotated_cone(&m).is_err());
    }

    #[test]
    fn min_eigenvalue_known_matrices() {
        assert_eq!(min_eigenvalue_sym3(&[[3.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, 1.0]]), -2.0);
        let m = [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 5.0]];
        assert!((min_eigenvalue_sym3(&m) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn validate_rejects_undeclared_variable() {
        let mut p = ConicProgram::new();
        p.add_variable(1.0);
        p.push("bad", Block::Nonneg(LinExpr::var(3)));
        assert!(matches!(p.validate(), Err(Error::MalformedProgram(_))));
    }

    #[test]
    fn canonical_merges_terms() {
        let e = LinExpr::var(2).with_term(0, 1.0).with_term(2, -1.0);
        assert_eq!(e.canonical().terms, vec![(0, 1.0)]);
    }
}
