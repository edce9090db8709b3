//! Steepest descent with an exact line search on the quadratic surrogate.
//!
//! Along `-g`, `g = grad f(beta)`, the surrogate is the exact quadratic
//! `g(beta) - t ||g||^2 + t^2/2 (a^2 ||X g||^2 + b^2 ||g||^2)`, minimized by
//! `t = ||g||^2 / (a^2 ||X g||^2 + b^2 ||g||^2)`. A small guard in the
//! denominator resolves `0/0` at stationary points. No factorization of `X`
//! is needed.

use nalgebra::DVector;

use crate::data::DesignMatrix;
use crate::error::Result;
use crate::objective::{ObjectiveState, PenaltyWeights};
use crate::solver::{run_inner, InnerStep, SolveReport, SolverConfig};
use crate::sparsity::SparsityConstraint;

#[derive(Clone, Debug)]
pub struct SdWorkspace {
    xg: DVector<f64>,
    delta: f64,
}

impl SdWorkspace {
    /// Guard `delta = 1e-12 (1 + a^2 ||X||_F^2)`.
    pub fn new(d: &DesignMatrix) -> Self {
        let a2 = 1.0 / d.n() as f64;
        Self::with_guard(d, 1e-12 * (1.0 + a2 * d.x().norm_squared()))
    }

    pub fn with_guard(d: &DesignMatrix, delta: f64) -> Self {
        assert!(delta > 0.0, "step guard must be positive");
        Self { xg: DVector::zeros(d.n()), delta }
    }

    pub fn guard(&self) -> f64 {
        self.delta
    }

    fn step_length(&mut self, g: &DVector<f64>, d: &DesignMatrix, w: &PenaltyWeights) -> f64 {
        self.xg.gemv(1.0, d.x(), g, 0.0);
        let gg = g.norm_squared();
        gg / (w.a2 * self.xg.norm_squared() + w.b2 * gg + self.delta)
    }
}

/// Exact surrogate step length along `-g`, guarded by `delta`.
pub fn step_size(g: &DVector<f64>, d: &DesignMatrix, w: &PenaltyWeights, delta: f64) -> f64 {
    let xg = d.x() * g;
    let gg = g.norm_squared();
    gg / (w.a2 * xg.norm_squared() + w.b2 * gg + delta)
}

impl InnerStep for SdWorkspace {
    fn step(
        &mut self,
        beta: &DVector<f64>,
        state: &ObjectiveState,
        d: &DesignMatrix,
        w: &PenaltyWeights,
    ) -> DVector<f64> {
        let t = self.step_length(&state.grad, d, w);
        let mut next = beta.clone();
        next.axpy(-t, &state.grad, 1.0);
        next
    }
}

pub fn sd_update(
    beta: &DVector<f64>,
    ws: &mut SdWorkspace,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
) -> DVector<f64> {
    let state = ObjectiveState::evaluate(beta, d, c, w);
    ws.step(beta, &state, d, w)
}

pub fn sd_solve(
    beta0: &DVector<f64>,
    ws: &mut SdWorkspace,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
    cfg: &SolverConfig,
) -> Result<(DVector<f64>, SolveReport)> {
    run_inner(ws, beta0, d, c, w, cfg)
}
