//! Shared fixtures for the benchmarks in `benches/`.

use nalgebra::DVector;
use pdsvm::simdata::gen_synthetic_corr;
use pdsvm::{binarize, init_heuristic, DesignMatrix, Problem};

/// A binary problem drawn from the correlated synthetic family, plus the
/// usual starting point.
pub struct Fixture {
    pub problem: Problem,
    pub beta0: DVector<f64>,
}

impl Fixture {
    pub fn synthetic(n: usize, p: usize, seed: u64) -> Self {
        let (ds, _) = gen_synthetic_corr(n, p, seed).expect("synthetic data");
        let d: DesignMatrix = binarize(&ds, 0, 1).expect("two classes");
        let beta0 = init_heuristic(&d);
        Self { problem: Problem::new(d), beta0 }
    }

    pub fn design(&self) -> &DesignMatrix {
        self.problem.design()
    }
}
