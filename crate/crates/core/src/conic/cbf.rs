//! Conic Benchmark Format (CBF, version 3) writer for cross-checking
//! subproblems against external solvers.
//!
//! Variables are free (`F`); each block becomes one row group of `Ax + b`
//! in cone `L=`, `L+`, `Q` (`x1 ≥ ‖x2..‖`) or `QR` (`2x1x2 ≥ ‖x3..‖²`).
//! PSD blocks are written after lowering to `QR`.

use std::fmt::Write as _;

use super::{Block, ConicProgram, LinExpr};
use crate::error::Result;

pub fn write_cbf(program: &ConicProgram) -> Result<String> {
    program.validate()?;
    let p = program.lowered()?;
    let mut cones: Vec<(&str, usize)> = Vec::new();
    let mut rows: Vec<LinExpr> = Vec::new();
    for c in &p.constraints {
        let (kind, exprs): (&str, Vec<LinExpr>) = match &c.block {
            Block::Eq(e) => ("L=", vec![e.clone()]),
            Block::Nonneg(e) => ("L+", vec![e.clone()]),
            Block::Soc { t, x } => ("Q", std::iter::once(t.clone()).chain(x.iter().cloned()).collect()),
            Block::Rsoc { u, v, x } => ("QR", [u.clone(), v.clone()].into_iter().chain(x.iter().cloned()).collect()),
            Block::Psd3(_) => unreachable!("lowered() removes PSD blocks"),
        };
        match cones.last_mut() {
            Some((k, d)) if *k == kind && (kind == "L=" || kind == "L+") => *d += exprs.len(),
            _ => cones.push((kind, exprs.len())),
        }
        rows.extend(exprs.into_iter().map(|e| e.canonical()));
    }

    let mut s = String::new();
    let _ = writeln!(s, "VER\n3\n\nOBJSENSE\nMAX\n\nVAR\n{} 1\nF {}\n", p.variable_count, p.variable_count);
    let _ = writeln!(s, "CON\n{} {}", rows.len(), cones.len());
    for (k, d) in &cones {
        let _ = writeln!(s, "{k} {d}");
    }
    let obj: Vec<(usize, f64)> = p.objective.iter().copied().enumerate().filter(|&(_, c)| c != 0.0).collect();
    let _ = writeln!(s, "\nOBJACOORD\n{}", obj.len());
    for (j, c) in obj {
        let _ = writeln!(s, "{j} {c:e}");
    }
    if p.objective_constant != 0.0 {
        let _ = writeln!(s, "\nOBJBCOORD\n{:e}", p.objective_constant);
    }
    let nnz: usize = rows.iter().map(|r| r.terms.len()).sum();
    let _ = writeln!(s, "\nACOORD\n{nnz}");
    for (i, r) in rows.iter().enumerate() {
        for &(j, c) in &r.terms {
            let _ = writeln!(s, "{i} {j} {c:e}");
        }
    }
    let b: Vec<(usize, f64)> = rows.iter().map(|r| r.constant).enumerate().filter(|&(_, c)| c != 0.0).collect();
    let _ = writeln!(s, "\nBCOORD\n{}", b.len());
    for (i, c) in b {
        let _ = writeln!(s, "{i} {c:e}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program_layout() {
        let mut p = ConicProgram::new();
        let t = p.add_variable(1.0);
        p.add_objective(&LinExpr::term(t, -1.0));
        p.push("lo", Block::Nonneg(LinExpr::var(t)));
        p.push("soc", Block::Soc { t: LinExpr::var(t), x: vec![LinExpr::constant(3.0), LinExpr::constant(4.0)] });
        let s = write_cbf(&p).unwrap();
        assert!(s.starts_with("VER\n3\n"));
        assert!(s.contains("CON\n4 2\nL+ 1\nQ 3\n"));
        assert!(s.contains("ACOORD\n2\n0 0 1e0\n1 0 1e0\n"));
        assert!(s.contains("BCOORD\n2\n2 3e0\n3 4e0\n"));
    }
}
