//! Shared configuration and the fixed-`rho` inner iteration used by both
//! solvers.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::anneal::{nesterov_step, AccelPolicy, AnnealSchedule};
use crate::data::{thin_svd, DesignMatrix, ThinSvd, DEFAULT_SVD_TOL};
use crate::error::{Error, Result};
use crate::objective::{ObjectiveState, PenaltyWeights};
use crate::sparsity::SparsityConstraint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Closed-form surrogate minimization through the thin SVD.
    MM,
    /// Steepest descent with exact line search on the surrogate.
    SD,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::MM => "mm",
            SolverKind::SD => "sd",
        })
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mm" => Ok(SolverKind::MM),
            "sd" => Ok(SolverKind::SD),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// How the MM update is evaluated. Both forms compute the same iterate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateForm {
    /// One dot-product pair and one axpy per singular value.
    #[default]
    Loop,
    /// Two matrix-vector products with `U` and `V`.
    Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Inner iterations stop once `||grad f||^2 < grad_tol`.
    pub grad_tol: f64,
    pub max_inner: usize,
    pub accel: Option<AccelPolicy>,
    pub mm_form: UpdateForm,
    pub svd_tol: f64,
    /// Record the objective after every inner iteration.
    pub keep_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kind: SolverKind::MM,
            grad_tol: 1e-6,
            max_inner: 10_000,
            accel: Some(AccelPolicy::default()),
            mm_form: UpdateForm::Loop,
            svd_tol: DEFAULT_SVD_TOL,
            keep_history: false,
        }
    }
}

impl SolverConfig {
    pub fn with_kind(kind: SolverKind) -> Self {
        Self { kind, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("gradient tolerance must be positive".into()));
        }
        if self.max_inner == 0 {
            return Err(Error::InvalidArgument("inner iteration cap must be at least 1".into()));
        }
        if let Some(a) = &self.accel {
            a.validate()?;
        }
        Ok(())
    }
}

/// Everything needed to run one annealed fit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub solver: SolverConfig,
    pub schedule: AnnealSchedule,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.schedule.validate()
    }
}

/// A binary design together with its lazily computed thin SVD, which is
/// shared by every `rho` and every sparsity level fitted on it.
#[derive(Debug)]
pub struct Problem {
    design: DesignMatrix,
    svd_tol: f64,
    svd: OnceLock<ThinSvd>,
}

impl Problem {
    pub fn new(design: DesignMatrix) -> Self {
        Self::with_svd_tol(design, DEFAULT_SVD_TOL)
    }

    pub fn with_svd_tol(design: DesignMatrix, svd_tol: f64) -> Self {
        Self { design, svd_tol, svd: OnceLock::new() }
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn svd(&self) -> Result<&ThinSvd> {
        if let Some(s) = self.svd.get() {
            return Ok(s);
        }
        let s = thin_svd(self.design.x(), self.svd_tol)?;
        Ok(self.svd.get_or_init(|| s))
    }
}

/// Outcome of one fixed-`rho` solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub objective: f64,
    pub grad_sq: f64,
    pub cap_hit: bool,
    /// Objective at the start and after each iteration, when requested.
    #[serde(skip)]
    pub history: Vec<f64>,
}

pub(crate) trait InnerStep {
    /// Next iterate from `beta`, whose objective state (gradient included) is
    /// `state`.
    fn step(
        &mut self,
        beta: &DVector<f64>,
        state: &ObjectiveState,
        d: &DesignMatrix,
        w: &PenaltyWeights,
    ) -> DVector<f64>;
}

pub(crate) fn run_inner<S: InnerStep>(
    stepper: &mut S,
    beta0: &DVector<f64>,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, SolveReport)> {
    let mut beta = beta0.clone();
    let mut state = ObjectiveState::evaluate(&beta, d, c, w);
    let mut report = SolveReport::default();
    if cfg.keep_history {
        report.history.push(state.objective);
    }
    let mut grad_sq = state.grad_sq();
    let mut j = 1usize;
    let mut m = 0usize;
    while grad_sq >= cfg.grad_tol {
        if m == cfg.max_inner {
            report.cap_hit = true;
            break;
        }
        m += 1;
        let plain = stepper.step(&beta, &state, d, w);
        let mut next_state = ObjectiveState::from_fitted(&plain, d.x() * &plain, d, c, w);
        let mut next = plain;
        if let Some(policy) = cfg.accel.as_ref().filter(|p| m > p.warmup) {
            let (candidate, j_next) = nesterov_step(&next, &beta, j, policy);
            if j_next > 2 {
                let cand_state = ObjectiveState::from_fitted(&candidate, d.x() * &candidate, d, c, w);
                if policy.restart_on_ascent && !(cand_state.objective <= next_state.objective) {
                    j = 1;
                } else {
                    next = candidate;
                    next_state = cand_state;
                    j = j_next;
                }
            } else {
                j = j_next;
            }
        }
        if !next_state.objective.is_finite() {
            return Err(Error::NonFinite { outer: 0, rho: w.rho });
        }
        next_state.fill_gradient(&next, d, w);
        beta = next;
        state = next_state;
        grad_sq = state.grad_sq();
        if cfg.keep_history {
            report.history.push(state.objective);
        }
    }
    report.iterations = m;
    report.objective = state.objective;
    report.grad_sq = grad_sq;
    Ok((beta, report))
}
