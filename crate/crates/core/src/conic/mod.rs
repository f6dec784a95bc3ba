//! Small dense second-order cone programming: problem container, embedded
//! primal-dual interior-point solver, and an independent KKT verifier.
//!
//! A [`ConeProgram`] minimizes `cᵀv` subject to norm-cone constraints
//! `‖Av + b‖ ≤ gᵀv + h`, linear constraints `fᵀv ≤ e`, and optional
//! elementwise nonnegativity on a subset of variables. The solver runs a
//! path-following iteration with Nesterov–Todd scaling over the homogeneous
//! self-dual embedding, so genuinely infeasible programs terminate with a
//! checkable certificate instead of an error.

mod solver;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

pub use solver::{DEFAULT_MAX_ITER, DEFAULT_TOL};

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("program has no variables")]
    NoVariables,
    #[error("program has no constraints")]
    NoConstraints,
    #[error("cone {index}: matrix has {got} columns, expected {want}")]
    ConeCols { index: usize, got: usize, want: usize },
    #[error("cone {index}: offset length {got}, expected {want} rows")]
    ConeOffset { index: usize, got: usize, want: usize },
    #[error("cone {index}: gain vector length {got}, expected {want}")]
    ConeGain { index: usize, got: usize, want: usize },
    #[error("linear constraint {index}: length {got}, expected {want}")]
    LinearLen { index: usize, got: usize, want: usize },
    #[error("nonnegativity index {0} out of range")]
    MaskRange(usize),
}

/// One second-order cone constraint `‖A v + b‖₂ ≤ gᵀ v + h`.
#[derive(Debug, Clone)]
pub struct SocConstraint {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub g: DVector<f64>,
    pub h: f64,
}

/// One linear constraint `fᵀ v ≤ e`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub f: DVector<f64>,
    pub e: f64,
}

/// Linear objective over norm cones, linear rows and a nonnegative-variable
/// mask. Immutable once built.
#[derive(Debug, Clone)]
pub struct ConeProgram {
    pub objective: DVector<f64>,
    pub soc_constraints: Vec<SocConstraint>,
    pub linear_constraints: Vec<LinearConstraint>,
    /// Indices of decision variables constrained to be `≥ 0` (sorted, deduped).
    pub nonneg_mask: Vec<usize>,
}

impl ConeProgram {
    pub fn new(
        objective: DVector<f64>,
        soc_constraints: Vec<SocConstraint>,
        linear_constraints: Vec<LinearConstraint>,
        mut nonneg_mask: Vec<usize>,
    ) -> Result<Self, ConicError> {
        let n = objective.len();
        if n == 0 {
            return Err(ConicError::NoVariables);
        }
        if soc_constraints.is_empty() && linear_constraints.is_empty() && nonneg_mask.is_empty() {
            return Err(ConicError::NoConstraints);
        }
        for (index, soc) in soc_constraints.iter().enumerate() {
            if soc.a.ncols() != n {
                return Err(ConicError::ConeCols {
                    index,
                    got: soc.a.ncols(),
                    want: n,
                });
            }
            if soc.b.len() != soc.a.nrows() {
                return Err(ConicError::ConeOffset {
                    index,
                    got: soc.b.len(),
                    want: soc.a.nrows(),
                });
            }
            if soc.g.len() != n {
                return Err(ConicError::ConeGain {
                    index,
                    got: soc.g.len(),
                    want: n,
                });
            }
        }
        for (index, lin) in linear_constraints.iter().enumerate() {
            if lin.f.len() != n {
                return Err(ConicError::LinearLen {
                    index,
                    got: lin.f.len(),
                    want: n,
                });
            }
        }
        nonneg_mask.sort_unstable();
        nonneg_mask.dedup();
        if let Some(&j) = nonneg_mask.last() {
            if j >= n {
                return Err(ConicError::MaskRange(j));
            }
        }
        Ok(Self {
            objective,
            soc_constraints,
            linear_constraints,
            nonneg_mask,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Solves with default tolerance and iteration cap.
    pub fn solve(&self) -> Solution {
        self.solve_with(DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    /// Solves with explicit tolerance and iteration cap. Deterministic:
    /// identical inputs produce bitwise-identical iterates.
    pub fn solve_with(&self, tol: f64, max_iter: usize) -> Solution {
        solver::solve(self, tol, max_iter)
    }

    /// Plain-text triplet dump (objective, cone rows, linear rows) for
    /// external cross-checking. One entry per line, 17 significant digits.
    pub fn dump_triplets(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "n {}", self.num_vars());
        for (j, v) in self.objective.iter().enumerate() {
            if *v != 0.0 {
                let _ = writeln!(out, "obj {} {:.16e}", j, v);
            }
        }
        for (i, soc) in self.soc_constraints.iter().enumerate() {
            let _ = writeln!(out, "soc {} rows {}", i, soc.a.nrows());
            for r in 0..soc.a.nrows() {
                for j in 0..soc.a.ncols() {
                    if soc.a[(r, j)] != 0.0 {
                        let _ = writeln!(out, "soc_a {} {} {} {:.16e}", i, r, j, soc.a[(r, j)]);
                    }
                }
                if soc.b[r] != 0.0 {
                    let _ = writeln!(out, "soc_b {} {} {:.16e}", i, r, soc.b[r]);
                }
            }
            for (j, v) in soc.g.iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "soc_g {} {} {:.16e}", i, j, v);
                }
            }
            let _ = writeln!(out, "soc_h {} {:.16e}", i, soc.h);
        }
        for (l, lin) in self.linear_constraints.iter().enumerate() {
            for (j, v) in lin.f.iter().enumerate() {
                if *v != 0.0 {
                    let _ = writeln!(out, "lin {} {} {:.16e}", l, j, v);
                }
            }
            let _ = writeln!(out, "lin_e {} {:.16e}", l, lin.e);
        }
        for j in &self.nonneg_mask {
            let _ = writeln!(out, "nonneg {}", j);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    PrimalInfeasible,
    /// Dual infeasible; the primal is unbounded along the returned ray.
    DualInfeasible,
    MaxIterations,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::PrimalInfeasible => "primal_infeasible",
            SolveStatus::DualInfeasible => "dual_infeasible",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::NumericalFailure => "numerical_failure",
        }
    }
}

/// Relative termination measures at the returned iterate.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Solver output. At `Optimal` the residuals are each at most the configured
/// tolerance. At `PrimalInfeasible` the dual fields hold a Farkas certificate
/// normalized so the offsets aggregate to −1; at `DualInfeasible` `v` holds
/// an unbounded ray normalized so `cᵀv = −1`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub v: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    /// Per norm cone, the multiplier `(z₀, z₁…)` with `‖z₁‖ ≤ z₀`.
    pub soc_duals: Vec<Vec<f64>>,
    pub linear_duals: Vec<f64>,
    /// One multiplier per entry of `nonneg_mask`, in mask order.
    pub nonneg_duals: Vec<f64>,
}

/// Independently recomputed optimality measures; see [`check_kkt`].
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// Worst slack violation across all constraints at `v`.
    pub primal: f64,
    /// Stationarity violation `‖c + Gᵀz‖∞` of the returned multipliers.
    pub dual: f64,
    /// Worst dual-cone violation of the multipliers.
    pub dual_cone: f64,
    /// Worst per-constraint complementary slackness `|sᵀz|`.
    pub complementarity: f64,
    /// For infeasibility certificates: worst certificate identity violation.
    pub certificate: Option<f64>,
    pub passed: bool,
}

impl KktReport {
    pub fn max_violation(&self) -> f64 {
        let base = self
            .primal
            .max(self.dual)
            .max(self.dual_cone)
            .max(self.complementarity);
        base.max(self.certificate.unwrap_or(0.0))
    }
}

/// Recomputes primal feasibility, dual feasibility and complementarity of a
/// solution directly from the program data, independent of solver internals.
/// For infeasible statuses the certificate identities are checked instead.
pub fn check_kkt(prog: &ConeProgram, sol: &Solution, tol: f64) -> KktReport {
    match sol.status {
        SolveStatus::PrimalInfeasible => check_primal_certificate(prog, sol, tol),
        SolveStatus::DualInfeasible => check_dual_ray(prog, sol, tol),
        _ => check_optimality(prog, sol, tol),
    }
}

fn check_optimality(prog: &ConeProgram, sol: &Solution, tol: f64) -> KktReport {
    let v = DVector::from_column_slice(&sol.v);
    let mut primal: f64 = 0.0;
    let mut dual_cone: f64 = 0.0;
    let mut comp: f64 = 0.0;
    // stationarity: c + Gᵀz where the rows of G encode slack = h̃ − Gv
    let mut stat = prog.objective.clone();

    for (i, soc) in prog.soc_constraints.iter().enumerate() {
        let head = soc.g.dot(&v) + soc.h;
        let tail = &soc.a * &v + &soc.b;
        primal = primal.max(tail.norm() - head);
        let z = &sol.soc_duals[i];
        let z0 = z[0];
        let z1 = DVector::from_column_slice(&z[1..]);
        dual_cone = dual_cone.max(z1.norm() - z0);
        comp = comp.max((head * z0 + tail.dot(&z1)).abs());
        stat -= &soc.g * z0;
        stat -= soc.a.transpose() * z1;
    }
    for (l, lin) in prog.linear_constraints.iter().enumerate() {
        let slack = lin.e - lin.f.dot(&v);
        primal = primal.max(-slack);
        let z = sol.linear_duals[l];
        dual_cone = dual_cone.max(-z);
        comp = comp.max((slack * z).abs());
        stat += &lin.f * z;
    }
    for (idx, &j) in prog.nonneg_mask.iter().enumerate() {
        primal = primal.max(-sol.v[j]);
        let z = sol.nonneg_duals[idx];
        dual_cone = dual_cone.max(-z);
        comp = comp.max((sol.v[j] * z).abs());
        stat[j] -= z;
    }
    let dual = stat.amax();
    let passed = primal <= tol && dual <= tol && dual_cone <= tol && comp <= tol;
    KktReport {
        primal,
        dual,
        dual_cone,
        complementarity: comp,
        certificate: None,
        passed,
    }
}

/// Farkas certificate: multipliers z in the dual cone with `Gᵀz = 0` and
/// aggregated offsets `h̃ᵀz < 0` prove there is no feasible point.
fn check_primal_certificate(prog: &ConeProgram, sol: &Solution, tol: f64) -> KktReport {
    let mut stat = DVector::zeros(prog.num_vars());
    let mut dual_cone: f64 = 0.0;
    let mut offset = 0.0;
    for (i, soc) in prog.soc_constraints.iter().enumerate() {
        let z = &sol.soc_duals[i];
        let z0 = z[0];
        let z1 = DVector::from_column_slice(&z[1..]);
        dual_cone = dual_cone.max(z1.norm() - z0);
        stat -= &soc.g * z0;
        offset += soc.h * z0 + soc.b.dot(&z1);
        stat -= soc.a.transpose() * z1;
    }
    for (l, lin) in prog.linear_constraints.iter().enumerate() {
        let z = sol.linear_duals[l];
        dual_cone = dual_cone.max(-z);
        stat += &lin.f * z;
        offset += lin.e * z;
    }
    // mask rows carry zero offset
    for (idx, &j) in prog.nonneg_mask.iter().enumerate() {
        let z = sol.nonneg_duals[idx];
        dual_cone = dual_cone.max(-z);
        stat[j] -= z;
    }
    // Gᵀz ≈ 0 and the aggregated offset h̃ᵀz is normalized to −1.
    let cert = stat.amax().max((offset + 1.0).abs());
    let passed = cert <= tol && dual_cone <= tol;
    KktReport {
        primal: f64::INFINITY,
        dual: 0.0,
        dual_cone,
        complementarity: 0.0,
        certificate: Some(cert),
        passed,
    }
}

/// Unboundedness ray: a direction with `cᵀv = −1` that is feasible for the
/// homogeneous constraints.
fn check_dual_ray(prog: &ConeProgram, sol: &Solution, tol: f64) -> KktReport {
    let v = DVector::from_column_slice(&sol.v);
    let mut viol: f64 = 0.0;
    for soc in &prog.soc_constraints {
        let head = soc.g.dot(&v);
        let tail = &soc.a * &v;
        viol = viol.max(tail.norm() - head);
    }
    for lin in &prog.linear_constraints {
        viol = viol.max(lin.f.dot(&v));
    }
    for &j in &prog.nonneg_mask {
        viol = viol.max(-sol.v[j]);
    }
    let cert = viol.max((prog.objective.dot(&v) + 1.0).abs());
    KktReport {
        primal: 0.0,
        dual: f64::INFINITY,
        dual_cone: 0.0,
        complementarity: 0.0,
        certificate: Some(cert),
        passed: cert <= tol,
    }
}
