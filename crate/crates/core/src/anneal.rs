//! Proximal distance iteration: solve the penalized problem for an increasing
//! ladder `rho0, M rho0, M^2 rho0, ...`, carrying the iterate across rungs,
//! until the normalized squared distance to `S_k` settles; then project.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::objective::PenaltyWeights;
use crate::solver::{FitConfig, Problem, SolveReport, SolverKind};
use crate::solver_mm::{mm_solve, MmWorkspace};
use crate::solver_sd::{sd_solve, SdWorkspace};
use crate::sparsity::{self, SparsityConstraint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub rho0: f64,
    /// Factor applied to `rho` after every outer iteration that does not halt.
    pub multiplier: f64,
    pub max_outer: usize,
    pub dist_tol: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { rho0: 1.0, multiplier: 1.2, max_outer: 100, dist_tol: 1e-6 }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0) || !(self.multiplier > 1.0) || self.max_outer == 0 || !(self.dist_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("invalid annealing schedule {self:?}")));
        }
        Ok(())
    }

    /// `rho` used at 1-based outer iteration `i`.
    pub fn rho_at(&self, i: usize) -> f64 {
        self.rho0 * self.multiplier.powi(i as i32 - 1)
    }
}

/// Nesterov extrapolation `beta_new + (j - 1)/(j + r - 1) (beta_new - beta_old)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelPolicy {
    /// The shift `r`; 3 is the usual choice.
    pub shift: usize,
    /// Inner iterations of each subproblem run before extrapolating.
    pub warmup: usize,
    /// Discard an extrapolation that raises the objective and reset `j` to 1.
    pub restart_on_ascent: bool,
}

impl Default for AccelPolicy {
    fn default() -> Self {
        Self { shift: 3, warmup: 10, restart_on_ascent: true }
    }
}

impl AccelPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.shift < 3 {
            return Err(Error::InvalidArgument(format!("acceleration shift must be at least 3, got {}", self.shift)));
        }
        Ok(())
    }
}

/// Extrapolated iterate and the incremented counter. Restarts are decided by
/// the caller, which compares objectives and resets the counter to 1.
pub fn nesterov_step(
    beta_new: &DVector<f64>,
    beta_old: &DVector<f64>,
    j: usize,
    policy: &AccelPolicy,
) -> (DVector<f64>, usize) {
    debug_assert!(j >= 1);
    let weight = (j - 1) as f64 / (j + policy.shift - 1) as f64;
    let mut out = beta_new - beta_old;
    out *= weight;
    out += beta_new;
    (out, j + 1)
}

/// One row per outer iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub outer: usize,
    pub rho: f64,
    pub inner_iters: usize,
    pub objective: f64,
    pub grad_sq: f64,
    /// `dist(beta, S_k)^2 / (p - k + 1)` before the final projection.
    pub distance: f64,
    /// Training accuracy in percent of the unprojected iterate.
    pub train_accuracy: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub outer_iters: usize,
    pub total_inner_iters: usize,
    /// Penalized objective at the last `rho`, before projection.
    pub objective: f64,
    pub grad_sq: f64,
    /// Normalized squared distance at the last outer iteration.
    pub distance: f64,
    pub sv_count: usize,
    /// True iff the fit halted because the distance fell to `dist_tol`.
    pub converged: bool,
    /// Subproblems that stopped at the inner iteration cap.
    pub capped_subproblems: usize,
    pub wall_time: f64,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
    /// Per-subproblem objective histories, filled when the solver keeps them.
    #[serde(skip)]
    pub inner_history: Vec<Vec<f64>>,
}

/// Samples on or inside the margin, `y_i x_i' beta <= 1`.
pub fn sv_count(beta: &DVector<f64>, d: &DesignMatrix) -> usize {
    (d.x() * beta).component_mul(d.y()).iter().filter(|&&m| m <= 1.0).count()
}

pub fn normalized_distance(beta: &DVector<f64>, c: &SparsityConstraint) -> f64 {
    sparsity::sq_distance(beta, c) / c.penalty_denominator()
}

/// Percentage of rows classified correctly by `sign(fitted)`, with a zero
/// score assigned to the positive class.
pub(crate) fn sign_accuracy(fitted: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let wrong = fitted.iter().zip(y.iter()).filter(|(&f, &y)| (f >= 0.0) != (y > 0.0)).count();
    100.0 * (1.0 - wrong as f64 / y.len() as f64)
}

/// Write trace rows as CSV with a header line.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

enum Workspace<'a> {
    Mm(MmWorkspace<'a>),
    Sd(SdWorkspace),
}

/// Anneal `rho` from `beta0` and return the projected estimate.
pub fn prox_dist_fit(
    problem: &Problem,
    c: &SparsityConstraint,
    beta0: &DVector<f64>,
    cfg: &FitConfig,
) -> Result<(DVector<f64>, FitReport)> {
    cfg.validate()?;
    let d = problem.design();
    if c.p() != d.p() || beta0.len() != d.dim() {
        return Err(Error::Dimension(format!(
            "design has {} coefficients, constraint p = {}, start has {}",
            d.dim(),
            c.p(),
            beta0.len()
        )));
    }
    let start = Instant::now();
    let sched = &cfg.schedule;
    let mut ws = match cfg.solver.kind {
        SolverKind::MM => Workspace::Mm(MmWorkspace::new(problem.svd()?, cfg.solver.mm_form)),
        SolverKind::SD => Workspace::Sd(SdWorkspace::new(d)),
    };

    let mut report = FitReport::default();
    let mut beta = beta0.clone();
    let mut d_prev = normalized_distance(&beta, c);
    let mut rho = sched.rho0;
    for outer in 1..=sched.max_outer {
        let w = PenaltyWeights::new(d.n(), c, rho);
        let solved: Result<(DVector<f64>, SolveReport)> = match &mut ws {
            Workspace::Mm(ws) => mm_solve(&beta, ws, d, c, &w, &cfg.solver),
            Workspace::Sd(ws) => sd_solve(&beta, ws, d, c, &w, &cfg.solver),
        };
        let (next, sub) = solved.map_err(|e| match e {
            Error::NonFinite { rho, .. } => Error::NonFinite { outer, rho },
            e => e,
        })?;
        if !sub.objective.is_finite() || next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { outer, rho });
        }
        if cfg.solver.keep_history {
            report.inner_history.push(sub.history);
        }
        beta = next;
        let dist = normalized_distance(&beta, c);
        report.outer_iters = outer;
        report.total_inner_iters += sub.iterations;
        report.capped_subproblems += usize::from(sub.cap_hit);
        report.objective = sub.objective;
        report.grad_sq = sub.grad_sq;
        report.distance = dist;
        report.trace.push(TraceRow {
            outer,
            rho,
            inner_iters: sub.iterations,
            objective: sub.objective,
            grad_sq: sub.grad_sq,
            distance: dist,
            train_accuracy: sign_accuracy(&(d.x() * &beta), d.y()),
        });
        if dist <= sched.dist_tol {
            report.converged = true;
            break;
        }
        if (dist - d_prev).abs() < sched.dist_tol * (1.0 + d_prev) {
            break;
        }
        d_prev = dist;
        rho *= sched.multiplier;
    }
    let beta = sparsity::project(&beta, c);
    report.sv_count = sv_count(&beta, d);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((beta, report))
}
