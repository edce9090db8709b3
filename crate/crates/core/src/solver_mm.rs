//! MM solver: each iterate is the exact minimizer of the quadratic surrogate,
//!
//! ```text
//! beta+ = p + a^2 V (a^2 S^2 + b^2 I)^-1 (S U'z - S^2 V'p),
//! ```
//!
//! obtained from `(a^2 X'X + b^2 I) beta+ = a^2 X'z + b^2 p` through the
//! Woodbury identity and the thin SVD `X = U S V'`. The Gram matrix is never
//! formed.

use nalgebra::DVector;

use crate::data::{DesignMatrix, ThinSvd};
use crate::error::Result;
use crate::objective::{working_response_into, ObjectiveState, PenaltyWeights};
use crate::solver::{run_inner, InnerStep, SolveReport, SolverConfig, UpdateForm};
use crate::sparsity::SparsityConstraint;

/// Buffers for the MM update. Owned by a single solve.
#[derive(Clone, Debug)]
pub struct MmWorkspace<'a> {
    svd: &'a ThinSvd,
    form: UpdateForm,
    z: DVector<f64>,
    /// `a^2 s_j / (a^2 s_j^2 + b^2)`
    c1: DVector<f64>,
    /// `a^2 s_j^2 / (a^2 s_j^2 + b^2)`; zero when `b^2 = 0`.
    c2: DVector<f64>,
    weights: Option<(f64, f64)>,
}

impl<'a> MmWorkspace<'a> {
    pub fn new(svd: &'a ThinSvd, form: UpdateForm) -> Self {
        let r = svd.rank();
        Self {
            svd,
            form,
            z: DVector::zeros(svd.u.nrows()),
            c1: DVector::zeros(r),
            c2: DVector::zeros(r),
            weights: None,
        }
    }

    pub fn c1(&self) -> &DVector<f64> {
        &self.c1
    }

    pub fn c2(&self) -> &DVector<f64> {
        &self.c2
    }

    pub fn set_weights(&mut self, w: &PenaltyWeights) {
        if self.weights == Some((w.a2, w.b2)) {
            return;
        }
        for (j, &s) in self.svd.s.iter().enumerate() {
            let denom = w.a2 * s * s + w.b2;
            self.c1[j] = w.a2 * s / denom;
            // With b^2 = 0 the surrogate minimizers form an affine set; the
            // update then starts from zero and returns the minimum-norm one.
            self.c2[j] = if w.b2 == 0.0 { 0.0 } else { w.a2 * s * s / denom };
        }
        self.weights = Some((w.a2, w.b2));
    }

    /// Surrogate minimizer anchored at the point described by `state`.
    fn update_from(&mut self, state: &ObjectiveState, d: &DesignMatrix, w: &PenaltyWeights) -> DVector<f64> {
        self.set_weights(w);
        working_response_into(&state.margins, &state.fitted, d.y(), &mut self.z);
        let pm = &state.projection;
        let mut beta = if w.b2 == 0.0 { DVector::zeros(pm.len()) } else { pm.clone() };
        match self.form {
            UpdateForm::Loop => {
                for j in 0..self.svd.rank() {
                    let uz = self.svd.u.column(j).dot(&self.z);
                    let vp = self.svd.v.column(j).dot(pm);
                    let c3 = self.c1[j] * uz - self.c2[j] * vp;
                    beta.axpy(c3, &self.svd.v.column(j), 1.0);
                }
            }
            UpdateForm::Matrix => {
                let uz = self.svd.u.tr_mul(&self.z);
                let vp = self.svd.v.tr_mul(pm);
                let coef = self.c1.component_mul(&uz) - self.c2.component_mul(&vp);
                beta.gemv(1.0, &self.svd.v, &coef, 1.0);
            }
        }
        beta
    }
}

impl InnerStep for MmWorkspace<'_> {
    fn step(
        &mut self,
        _beta: &DVector<f64>,
        state: &ObjectiveState,
        d: &DesignMatrix,
        w: &PenaltyWeights,
    ) -> DVector<f64> {
        self.update_from(state, d, w)
    }
}

/// One MM iterate from `beta`.
pub fn mm_update(
    beta: &DVector<f64>,
    ws: &mut MmWorkspace<'_>,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
) -> DVector<f64> {
    let state = ObjectiveState::from_fitted(beta, d.x() * beta, d, c, w);
    ws.update_from(&state, d, w)
}

/// Iterate [`mm_update`] (with optional acceleration) until the squared
/// gradient norm drops below `cfg.grad_tol` or `cfg.max_inner` updates ran.
pub fn mm_solve(
    beta0: &DVector<f64>,
    ws: &mut MmWorkspace<'_>,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, SolveReport)> {
    run_inner(ws, beta0, d, c, w, cfg)
}
