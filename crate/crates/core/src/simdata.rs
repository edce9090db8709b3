//! Seeded generators for simulated classification data.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so a spec
//! and seed pin down the output bit for bit on any platform.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

/// Name of the generator behind every simulated dataset.
pub const RNG_NAME: &str = "ChaCha8Rng";

/// Eigenvalue floor used when repairing a covariance matrix.
pub const EIGEN_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimFamily {
    SyntheticCorr,
    GaussianCausal,
    Spiral,
}

impl fmt::Display for SimFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimFamily::SyntheticCorr => "synthetic_corr",
            SimFamily::GaussianCausal => "gaussian_causal",
            SimFamily::Spiral => "spiral",
        })
    }
}

impl FromStr for SimFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic_corr" | "synthetic" => Ok(SimFamily::SyntheticCorr),
            "gaussian_causal" => Ok(SimFamily::GaussianCausal),
            "spiral" => Ok(SimFamily::Spiral),
            _ => Err(Error::InvalidArgument(format!(
                "unknown dataset family {s:?} (expected synthetic_corr, gaussian_causal or spiral)"
            ))),
        }
    }
}

/// Class sizes and noise standard deviations of the three spirals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    pub counts: [usize; 3],
    pub sigmas: [f64; 3],
}

impl Default for SpiralParams {
    fn default() -> Self {
        Self { counts: [600, 300, 100], sigmas: [0.1, 0.2, 0.3] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub family: SimFamily,
    pub n: usize,
    pub p: usize,
    /// Number of causal features; only used by `gaussian_causal`.
    pub k0: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spiral: Option<SpiralParams>,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match self.family {
            SimFamily::SyntheticCorr if self.p < 2 => bad(format!("synthetic_corr needs p >= 2, got {}", self.p)),
            SimFamily::GaussianCausal if self.p == 0 || self.k0 == 0 || self.k0 > self.p => {
                bad(format!("gaussian_causal needs 1 <= k0 <= p, got k0 = {}, p = {}", self.k0, self.p))
            }
            SimFamily::Spiral => {
                let sp = self.spiral.unwrap_or_default();
                if sp.counts.contains(&0) {
                    return bad("spiral class counts must be positive".into());
                }
                if sp.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                    return bad("spiral noise levels must be finite and nonnegative".into());
                }
                Ok(())
            }
            _ if self.n == 0 => bad("n must be positive".into()),
            _ => Ok(()),
        }
    }
}

/// Coefficients that generated the labels, intercept last (always zero).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub beta_true: Vec<f64>,
    /// Sorted 0-based indices of the causal features.
    pub support: Vec<usize>,
}

impl PlantedModel {
    pub fn coefficients(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.beta_true)
    }

    /// Causal proportion `k0 / p`.
    pub fn causal_fraction(&self) -> f64 {
        self.support.len() as f64 / (self.beta_true.len() - 1) as f64
    }
}

/// Contents of the JSON file written next to a simulated CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub spec: SimSpec,
    pub rng: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedModel>,
}

impl Sidecar {
    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

fn binary_labels(
    n: usize,
    p: usize,
    beta: &[f64],
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng, &mut [f64]),
) -> Result<Dataset> {
    let mut x = DMatrix::zeros(n, p);
    let mut labels = Vec::with_capacity(n);
    let mut row = vec![0.0; p];
    for i in 0..n {
        // sgn(0) has probability zero; redraw the row if it happens anyway
        let score = loop {
            draw(rng, &mut row);
            let s: f64 = row.iter().zip(beta).map(|(a, b)| a * b).sum();
            if s != 0.0 {
                break s;
            }
        };
        for (j, &v) in row.iter().enumerate() {
            x[(i, j)] = v;
        }
        labels.push(if score > 0.0 { 0 } else { 1 });
    }
    Dataset::new(x, labels, vec!["1".into(), "-1".into()])
}

/// The covariance of [`gen_synthetic_corr`] before repair.
fn raw_covariance(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(p, p);
    for i in 0..p {
        s[(i, i)] = match i {
            0 => 1.0,
            1 => 3.0,
            _ => 2.0,
        };
        for j in (i + 1)..p {
            let v = if (i, j) == (0, 1) { 0.9 } else { 1e-3 * rng.sample::<f64, _>(StandardNormal) };
            s[(i, j)] = v;
            s[(j, i)] = v;
        }
    }
    s
}

/// Symmetrize and raise every eigenvalue to at least [`EIGEN_FLOOR`].
pub fn repair_covariance(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.min();
    let fixed = if min >= EIGEN_FLOOR {
        sym
    } else {
        let lam = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR));
        let v = &eig.eigenvectors;
        let r = v * DMatrix::from_diagonal(&lam) * v.transpose();
        (&r + r.transpose()) * 0.5
    };
    if fixed.iter().any(|v| !v.is_finite()) {
        return Err(Error::CovarianceRepair(min));
    }
    Ok(fixed)
}

/// Correlated-pair example: `x ~ N(0, S)` with `S_11 = 1`, `S_22 = 3`,
/// `S_12 = 0.9`, `S_jj = 2` otherwise and tiny random off-diagonals;
/// `beta_1 = 10`, `beta_2 = -10`, labels `sgn(x' beta)`.
pub fn gen_synthetic_corr(n: usize, p: usize, seed: u64) -> Result<(Dataset, PlantedModel)> {
    SimSpec { family: SimFamily::SyntheticCorr, n, p, k0: 2, seed, spiral: None }.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = repair_covariance(&raw_covariance(p, &mut rng))?;
    let l = match Cholesky::new(s.clone()) {
        Some(c) => c.unpack(),
        None => return Err(Error::CovarianceRepair(SymmetricEigen::new(s).eigenvalues.min())),
    };
    let mut beta = vec![0.0; p + 1];
    beta[0] = 10.0;
    beta[1] = -10.0;
    let mut z = DVector::zeros(p);
    let ds = binary_labels(n, p, &beta, &mut rng, |rng, row| {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let x = &l * &z;
        row.copy_from_slice(x.as_slice());
    })?;
    Ok((ds, PlantedModel { beta_true: beta, support: vec![0, 1] }))
}

/// `x ~ N(0, I)` with `k0` causal features whose coefficients are uniform on
/// `[-10, -2] U [2, 10]`.
pub fn gen_gaussian_causal(n: usize, p: usize, k0: usize, seed: u64) -> Result<(Dataset, PlantedModel)> {
    SimSpec { family: SimFamily::GaussianCausal, n, p, k0, seed, spiral: None }.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = index::sample(&mut rng, p, k0).into_vec();
    support.sort_unstable();
    let magnitude = Uniform::new_inclusive(2.0, 10.0).expect("valid range");
    let mut beta = vec![0.0; p + 1];
    for &j in &support {
        let m: f64 = rng.sample(magnitude);
        beta[j] = if rng.random::<bool>() { m } else { -m };
    }
    let ds = binary_labels(n, p, &beta, &mut rng, |rng, row| {
        for v in row.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    })?;
    Ok((ds, PlantedModel { beta_true: beta, support }))
}

/// Noise-free position of the `k`-th point (1-based) of spiral `class`.
pub fn spiral_point(class: usize, k: usize, n_c: usize) -> (f64, f64) {
    let (x0, y0) = (-3.5, 3.5);
    let n = n_c as f64;
    let r = 7.0 * (1.0 - k as f64 / (n + n / 5.0));
    let theta = PI / 8.0 + k as f64 * PI / n + class as f64 * 2.0 * PI / 3.0;
    (x0 + r * theta.cos(), y0 + r * theta.sin())
}

/// Three interleaved spirals labelled `A`, `B`, `C`, with default noise.
pub fn gen_spiral(counts: [usize; 3], seed: u64) -> Result<Dataset> {
    gen_spiral_with(&SpiralParams { counts, ..SpiralParams::default() }, seed)
}

pub fn gen_spiral_with(params: &SpiralParams, seed: u64) -> Result<Dataset> {
    let n: usize = params.counts.iter().sum();
    SimSpec { family: SimFamily::Spiral, n, p: 2, k0: 0, seed, spiral: Some(*params) }.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::zeros(n, 2);
    let mut labels = Vec::with_capacity(n);
    let mut i = 0;
    for (c, (&n_c, &sigma)) in params.counts.iter().zip(&params.sigmas).enumerate() {
        for k in 1..=n_c {
            let (px, py) = spiral_point(c, k, n_c);
            let ex: f64 = rng.sample(StandardNormal);
            let ey: f64 = rng.sample(StandardNormal);
            x[(i, 0)] = px + sigma * ex;
            x[(i, 1)] = py + sigma * ey;
            labels.push(c);
            i += 1;
        }
    }
    Dataset::new(x, labels, vec!["A".into(), "B".into(), "C".into()])
}

/// Run the generator named by `spec`.
pub fn generate(spec: &SimSpec) -> Result<(Dataset, Option<PlantedModel>)> {
    match spec.family {
        SimFamily::SyntheticCorr => gen_synthetic_corr(spec.n, spec.p, spec.seed).map(|(d, m)| (d, Some(m))),
        SimFamily::GaussianCausal => gen_gaussian_causal(spec.n, spec.p, spec.k0, spec.seed).map(|(d, m)| (d, Some(m))),
        SimFamily::Spiral => Ok((gen_spiral_with(&spec.spiral.unwrap_or_default(), spec.seed)?, None)),
    }
}
