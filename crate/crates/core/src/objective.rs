//! Squared-hinge loss, the distance-penalized objective and its quadratic
//! majorizer.
//!
//! With `a^2 = 1/n`, `b^2 = rho / (p - k + 1)` and `P` the projection onto
//! `S_k`:
//!
//! ```text
//! f(beta)          = a^2/2 * sum_i max(0, 1 - y_i x_i' beta)^2 + b^2/2 * ||beta - P(beta)||^2
//! g(beta | anchor) = a^2/2 * ||z - X beta||^2 + b^2/2 * ||P(anchor) - beta||^2
//! ```
//!
//! where the working response `z` takes the fitted value `x_i' anchor` for
//! samples with margin at least one and the label `y_i` otherwise.

use nalgebra::DVector;

use crate::data::DesignMatrix;
use crate::sparsity::{self, SparsityConstraint};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyWeights {
    /// Loss weight `a^2 = 1/n`.
    pub a2: f64,
    /// Distance weight `b^2 = rho / (p - k + 1)`.
    pub b2: f64,
    pub rho: f64,
}

impl PenaltyWeights {
    pub fn new(n: usize, c: &SparsityConstraint, rho: f64) -> Self {
        assert!(rho >= 0.0, "rho must be nonnegative");
        Self { a2: 1.0 / n as f64, b2: rho / c.penalty_denominator(), rho }
    }

    /// Weights with an explicit `b^2`. Combined with `k = 0` this gives the
    /// ridge-penalized squared hinge with penalty `b^2/2 ||beta_{1..p}||^2`.
    pub fn with_b2(n: usize, c: &SparsityConstraint, b2: f64) -> Self {
        Self { a2: 1.0 / n as f64, b2, rho: b2 * c.penalty_denominator() }
    }
}

/// Objective value and derived quantities at one coefficient vector.
#[derive(Clone, Debug)]
pub struct ObjectiveState {
    /// `X beta`.
    pub fitted: DVector<f64>,
    /// `y_i x_i' beta`.
    pub margins: DVector<f64>,
    /// `P(beta)`.
    pub projection: DVector<f64>,
    pub loss: f64,
    pub penalty: f64,
    pub objective: f64,
    /// Gradient of the penalized objective; empty until computed.
    pub grad: DVector<f64>,
}

impl ObjectiveState {
    /// Objective terms from precomputed fitted values, without the gradient.
    pub(crate) fn from_fitted(
        beta: &DVector<f64>,
        fitted: DVector<f64>,
        d: &DesignMatrix,
        c: &SparsityConstraint,
        w: &PenaltyWeights,
    ) -> Self {
        let margins = fitted.component_mul(d.y());
        let loss = loss_from_margins(&margins, w.a2);
        let projection = sparsity::project(beta, c);
        let dist: f64 = beta.iter().zip(projection.iter()).map(|(b, p)| (b - p) * (b - p)).sum();
        let penalty = 0.5 * w.b2 * dist;
        Self { fitted, margins, projection, loss, penalty, objective: loss + penalty, grad: DVector::zeros(0) }
    }

    pub(crate) fn evaluate(beta: &DVector<f64>, d: &DesignMatrix, c: &SparsityConstraint, w: &PenaltyWeights) -> Self {
        let mut state = Self::from_fitted(beta, d.x() * beta, d, c, w);
        state.fill_gradient(beta, d, w);
        state
    }

    /// `b^2 (beta - P(beta)) + X' v` with `v_i = -a^2 y_i max(0, 1 - margin_i)`.
    /// A margin of exactly one contributes nothing.
    pub(crate) fn fill_gradient(&mut self, beta: &DVector<f64>, d: &DesignMatrix, w: &PenaltyWeights) {
        let v = DVector::from_iterator(
            self.margins.len(),
            self.margins.iter().zip(d.y().iter()).map(|(&m, &y)| -w.a2 * y * (1.0 - m).max(0.0)),
        );
        let mut grad = d.x().tr_mul(&v);
        grad.axpy(w.b2, beta, 1.0);
        grad.axpy(-w.b2, &self.projection, 1.0);
        self.grad = grad;
    }

    pub fn grad_sq(&self) -> f64 {
        self.grad.norm_squared()
    }

    /// Working response `z` for the surrogate anchored here.
    pub fn working_response(&self, d: &DesignMatrix) -> DVector<f64> {
        let mut z = DVector::zeros(self.margins.len());
        working_response_into(&self.margins, &self.fitted, d.y(), &mut z);
        z
    }
}

fn loss_from_margins(margins: &DVector<f64>, a2: f64) -> f64 {
    0.5 * a2 * margins.iter().map(|&m| (1.0 - m).max(0.0).powi(2)).sum::<f64>()
}

pub(crate) fn working_response_into(
    margins: &DVector<f64>,
    fitted: &DVector<f64>,
    y: &DVector<f64>,
    z: &mut DVector<f64>,
) {
    for i in 0..margins.len() {
        z[i] = if margins[i] >= 1.0 { fitted[i] } else { y[i] };
    }
}

/// `(1/2n) sum_i max(0, 1 - y_i x_i' beta)^2`.
pub fn hinge_loss(beta: &DVector<f64>, d: &DesignMatrix) -> f64 {
    let margins = (d.x() * beta).component_mul(d.y());
    loss_from_margins(&margins, 1.0 / d.n() as f64)
}

pub fn penalized_objective(
    beta: &DVector<f64>,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
) -> ObjectiveState {
    ObjectiveState::evaluate(beta, d, c, w)
}

pub fn working_response(beta: &DVector<f64>, d: &DesignMatrix) -> DVector<f64> {
    let fitted = d.x() * beta;
    let margins = fitted.component_mul(d.y());
    let mut z = DVector::zeros(d.n());
    working_response_into(&margins, &fitted, d.y(), &mut z);
    z
}

pub fn gradient(beta: &DVector<f64>, d: &DesignMatrix, c: &SparsityConstraint, w: &PenaltyWeights) -> DVector<f64> {
    ObjectiveState::evaluate(beta, d, c, w).grad
}

/// Majorizer `g(beta | anchor)`.
pub fn surrogate_value(
    beta: &DVector<f64>,
    anchor: &DVector<f64>,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
) -> f64 {
    let z = working_response(anchor, d);
    let pm = sparsity::project(anchor, c);
    let resid = z - d.x() * beta;
    0.5 * w.a2 * resid.norm_squared() + 0.5 * w.b2 * (pm - beta).norm_squared()
}

/// `(a^2 X'X + b^2 I) beta - a^2 X'z - b^2 P(anchor)`, evaluated without
/// forming `X'X`.
pub fn surrogate_gradient(
    beta: &DVector<f64>,
    anchor: &DVector<f64>,
    d: &DesignMatrix,
    c: &SparsityConstraint,
    w: &PenaltyWeights,
) -> DVector<f64> {
    let z = working_response(anchor, d);
    let pm = sparsity::project(anchor, c);
    let resid = d.x() * beta - z;
    let mut g = d.x().tr_mul(&resid) * w.a2;
    g.axpy(w.b2, beta, 1.0);
    g.axpy(-w.b2, &pm, 1.0);
    g
}
