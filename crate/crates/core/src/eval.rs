//! Accuracy, feature-selection metrics and cross-validation along a sparsity
//! path.

use std::io::Write;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anneal::FitReport;
use crate::data::{apply_transform, Dataset, FoldPlan, TransformKind};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::multiclass::{OvoModel, OvoProblems, SparsityLevel};
use crate::solver::FitConfig;

/// Percentage of matching entries.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len(), "prediction and label lengths differ");
    if truth.is_empty() {
        return f64::NAN;
    }
    let wrong = pred.iter().zip(truth).filter(|(a, b)| a != b).count();
    100.0 * (1.0 - wrong as f64 / truth.len() as f64)
}

pub fn model_accuracy(model: &OvoModel, ds: &Dataset) -> f64 {
    accuracy(&model.predict_rows(ds.features()), ds.labels())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionMetrics {
    pub sen: f64,
    pub spc: f64,
    pub fdr: f64,
    #[serde(rename = "for")]
    pub for_: f64,
    pub q: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Compare nonzero patterns of the non-intercept coefficients. FDR and FOR are
/// adjusted by the causal proportion `q`; `0/0` counts as 0.
pub fn selection_metrics(beta_hat: &DVector<f64>, beta_true: &DVector<f64>, q: f64) -> Result<SelectionMetrics> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!("causal proportion must lie in (0, 1), got {q}")));
    }
    if beta_hat.len() != beta_true.len() || beta_hat.is_empty() {
        return Err(Error::Dimension(format!(
            "estimate has {} coefficients, truth has {}",
            beta_hat.len(),
            beta_true.len()
        )));
    }
    let p = beta_hat.len() - 1;
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for j in 0..p {
        match (beta_hat[j] != 0.0, beta_true[j] != 0.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let sen = ratio(tp as f64, (tp + fn_) as f64);
    let spc = ratio(tn as f64, (tn + fp) as f64);
    Ok(SelectionMetrics {
        sen,
        spc,
        fdr: ratio((1.0 - spc) * (1.0 - q), (1.0 - spc) * (1.0 - q) + sen * q),
        for_: ratio((1.0 - sen) * q, (1.0 - sen) * q + spc * (1.0 - q)),
        q,
        tp,
        fp,
        tn,
        fn_,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOptions {
    /// Sparsity fractions in ascending order, each in `[0, 1)`.
    pub grid: Vec<f64>,
    pub fit: FitConfig,
    pub kernel: Option<KernelSpec>,
    /// Fitted on each training split and applied to its validation and test data.
    pub transform: TransformKind,
    /// Fill the time column; off by default so tables are reproducible.
    pub record_time: bool,
}

impl CvOptions {
    pub fn new(grid: Vec<f64>, fit: FitConfig) -> Self {
        Self { grid, fit, kernel: None, transform: TransformKind::None, record_time: false }
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.validate()?;
        if self.grid.is_empty() {
            return Err(Error::InvalidArgument("sparsity grid is empty".into()));
        }
        if let Some(s) = self.grid.iter().find(|s| !(0.0..1.0).contains(*s)) {
            return Err(Error::InvalidArgument(format!("sparsity {s} outside [0, 1)")));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("sparsity grid must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// One fit on one fold at one sparsity level. Multiclass fits sum iterations
/// and support vectors over the pair classifiers and average the objective
/// and the distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub fold: usize,
    pub s: f64,
    /// Feature count kept; absent for kernel models, whose `k` varies by pair.
    pub k: Option<usize>,
    pub iterations: usize,
    pub time: Option<f64>,
    pub objective: f64,
    pub distance: f64,
    pub train: f64,
    pub valid: f64,
    pub test: Option<f64>,
    pub sv: usize,
    pub converged: bool,
    pub error: Option<String>,
}

/// The sparsity level with the best mean validation accuracy and the model
/// refit there on the full training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub s: f64,
    pub k: Option<usize>,
    pub iterations: f64,
    pub time: Option<f64>,
    pub objective: f64,
    pub distance: f64,
    pub train: f64,
    pub valid: f64,
    /// Accuracy of the refit model on the test split.
    pub test: Option<f64>,
    pub sv: f64,
    /// Average observed sparsity of the refit model's pair classifiers.
    pub observed_sparsity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvTable {
    pub rows: Vec<CvRow>,
    pub selection: Option<CvSelection>,
}

const HEADER: [&str; 13] = [
    "fold",
    "s",
    "k",
    "Iter.",
    "Time",
    "Objective",
    "Squared Distance",
    "Train",
    "Valid.",
    "Test",
    "SV",
    "converged",
    "error",
];

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NA".into()
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".into(), |v| v.to_string())
}

impl CvTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(HEADER)?;
        for r in &self.rows {
            out.write_record([
                r.fold.to_string(),
                r.s.to_string(),
                opt(r.k),
                r.iterations.to_string(),
                opt(r.time),
                num(r.objective),
                num(r.distance),
                num(r.train),
                num(r.valid),
                r.test.map_or_else(|| "NA".into(), num),
                r.sv.to_string(),
                r.converged.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        if let Some(sel) = &self.selection {
            out.write_record([
                "selected".to_string(),
                sel.s.to_string(),
                opt(sel.k),
                num(sel.iterations),
                opt(sel.time),
                num(sel.objective),
                num(sel.distance),
                num(sel.train),
                num(sel.valid),
                sel.test.map_or_else(|| "NA".into(), num),
                num(sel.sv),
                String::new(),
                String::new(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    /// Rows at sparsity `s` that fitted without error.
    pub fn rows_at(&self, s: f64) -> impl Iterator<Item = &CvRow> {
        self.rows.iter().filter(move |r| r.s == s && r.error.is_none())
    }
}

fn prepare(train: &Dataset, kind: TransformKind) -> Result<Dataset> {
    match kind {
        TransformKind::None => Ok(train.clone()),
        k => apply_transform(train, k),
    }
}

/// Where a path of fits is evaluated.
struct Splits<'a> {
    train: Dataset,
    valid: Option<Dataset>,
    test: Option<Dataset>,
    kernel: Option<KernelSpec>,
    opts: &'a CvOptions,
}

impl Splits<'_> {
    /// Transform parameters are fitted on `train` and reused for the others.
    fn new<'a>(
        train: &Dataset,
        valid: Option<&Dataset>,
        test: Option<&Dataset>,
        opts: &'a CvOptions,
    ) -> Result<Splits<'a>> {
        let tr = prepare(train, opts.transform)?;
        let map = |d: Option<&Dataset>| -> Result<Option<Dataset>> {
            d.map(|d| if opts.transform == TransformKind::None { Ok(d.clone()) } else { tr.transform_like(d) })
                .transpose()
        };
        Ok(Splits { valid: map(valid)?, test: map(test)?, train: tr, kernel: opts.kernel, opts })
    }

    /// Fit the grid points `grid` in order, each warm-started from the last
    /// successful fit. Returns one row per grid point and the final model.
    fn traverse(&self, fold: usize, grid: &[f64]) -> (Vec<CvRow>, Option<OvoModel>) {
        let cfg = &self.opts.fit;
        let problems = match OvoProblems::new(&self.train, self.kernel, cfg.solver.svd_tol) {
            Ok(p) => p,
            Err(e) => {
                let msg = e.to_string();
                return (grid.iter().map(|&s| failed_row(fold, s, &msg)).collect(), None);
            }
        };
        let mut warm: Option<Vec<DVector<f64>>> = None;
        let mut last = None;
        let mut rows = Vec::with_capacity(grid.len());
        for &s in grid {
            let start = Instant::now();
            match problems.fit(SparsityLevel::Fraction(s), cfg, warm.as_deref()) {
                Ok((model, reports)) => {
                    let time = start.elapsed().as_secs_f64();
                    rows.push(self.row(fold, s, &model, &reports, time));
                    warm = Some(model.pairs.iter().map(|c| c.model.coefficients().clone()).collect());
                    last = Some(model);
                }
                Err(e) => rows.push(failed_row(fold, s, &e.to_string())),
            }
        }
        (rows, last)
    }

    fn row(&self, fold: usize, s: f64, model: &OvoModel, reports: &[FitReport], time: f64) -> CvRow {
        let m = reports.len() as f64;
        CvRow {
            fold,
            s,
            k: match self.kernel {
                None => SparsityLevel::Fraction(s).constraint(self.train.p()).ok().map(|c| c.k()),
                Some(_) => None,
            },
            iterations: reports.iter().map(|r| r.total_inner_iters).sum(),
            time: self.opts.record_time.then_some(time),
            objective: reports.iter().map(|r| r.objective).sum::<f64>() / m,
            distance: reports.iter().map(|r| r.distance).sum::<f64>() / m,
            train: model_accuracy(model, &self.train),
            valid: self.valid.as_ref().map_or(f64::NAN, |v| model_accuracy(model, v)),
            test: self.test.as_ref().map(|t| model_accuracy(model, t)),
            sv: reports.iter().map(|r| r.sv_count).sum(),
            converged: reports.iter().all(|r| r.converged),
            error: None,
        }
    }
}

fn failed_row(fold: usize, s: f64, msg: &str) -> CvRow {
    CvRow {
        fold,
        s,
        k: None,
        iterations: 0,
        time: None,
        objective: f64::NAN,
        distance: f64::NAN,
        train: f64::NAN,
        valid: f64::NAN,
        test: None,
        sv: 0,
        converged: false,
        error: Some(msg.to_string()),
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

/// `k`-fold cross-validation along `opts.grid`.
///
/// Within each fold the grid is traversed from dense to sparse, each fit
/// warm-started from the previous solution; the first point starts from the
/// univariate-regression heuristic. A failed fit is recorded in its row and
/// the traversal continues. The level with the highest mean validation
/// accuracy is selected, ties going to the sparser level. When `test` is
/// given, the path is refit on all of `train` up to the selected level and
/// that model is scored on `test`; each fold's model is scored on it too.
pub fn cross_validate(train: &Dataset, test: Option<&Dataset>, folds: &FoldPlan, opts: &CvOptions) -> Result<CvTable> {
    opts.validate()?;
    if folds.assignments.len() != train.n() {
        return Err(Error::Dimension(format!(
            "fold plan covers {} rows, training data has {}",
            folds.assignments.len(),
            train.n()
        )));
    }
    if let Some(t) = test {
        if t.p() != train.p() {
            return Err(Error::Dimension(format!("test data has {} features, training data {}", t.p(), train.p())));
        }
    }
    let per_fold: Vec<Vec<CvRow>> = (0..folds.num_folds)
        .into_par_iter()
        .map(|f| -> Result<Vec<CvRow>> {
            let (tr, va) = folds.split(f);
            let splits = Splits::new(&train.subset(&tr), Some(&train.subset(&va)), test, opts)?;
            Ok(splits.traverse(f, &opts.grid).0)
        })
        .collect::<Result<_>>()?;
    let mut table = CvTable { rows: per_fold.into_iter().flatten().collect(), selection: None };

    let mut best: Option<(f64, f64)> = None;
    for &s in &opts.grid {
        if table.rows_at(s).next().is_none() {
            continue;
        }
        let v = mean(table.rows_at(s).map(|r| r.valid));
        if best.is_none_or(|(_, b)| v >= b) {
            best = Some((s, v));
        }
    }
    let Some((s, valid)) = best else {
        return Ok(table);
    };

    let (test_acc, observed) = match test {
        Some(t) => {
            let upto: Vec<f64> = opts.grid.iter().copied().filter(|&g| g <= s).collect();
            let splits = Splits::new(train, None, Some(t), opts)?;
            let (rows, model) = splits.traverse(0, &upto);
            match (rows.last(), model) {
                (Some(r), Some(m)) if r.error.is_none() => (r.test, Some(m.mean_sparsity())),
                _ => (None, None),
            }
        }
        None => (None, None),
    };
    let at = || table.rows_at(s);
    let selection = CvSelection {
        s,
        k: at().next().and_then(|r| r.k),
        iterations: mean(at().map(|r| r.iterations as f64)),
        time: opts.record_time.then(|| mean(at().filter_map(|r| r.time))),
        objective: mean(at().map(|r| r.objective)),
        distance: mean(at().map(|r| r.distance)),
        train: mean(at().map(|r| r.train)),
        valid,
        test: test_acc,
        sv: mean(at().map(|r| r.sv as f64)),
        observed_sparsity: observed,
    };
    table.selection = Some(selection);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn perfect_recovery() {
        let t = v(&[3.0, 0.0, -2.0, 0.0, 0.5]);
        let m = selection_metrics(&v(&[1.0, 0.0, 7.0, 0.0, 0.0]), &t, 0.5).unwrap();
        assert_eq!((m.sen, m.spc, m.fdr, m.for_), (1.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn empty_model() {
        let t = v(&[3.0, 0.0, -2.0, 0.0, 0.0, 1.0]);
        let m = selection_metrics(&DVector::zeros(6), &t, 0.3).unwrap();
        assert_eq!((m.sen, m.spc, m.fdr), (0.0, 1.0, 0.0));
        assert!((m.for_ - 0.3).abs() < 1e-15);
    }

    #[test]
    fn symmetric_half() {
        // one hit, one miss, one false alarm, one correct rejection
        let t = v(&[1.0, 1.0, 0.0, 0.0, 0.0]);
        let m = selection_metrics(&v(&[1.0, 0.0, 1.0, 0.0, 0.0]), &t, 0.5).unwrap();
        assert_eq!((m.sen, m.spc), (0.5, 0.5));
        assert_eq!((m.fdr, m.for_), (0.5, 0.5));
        assert!(selection_metrics(&t, &t, 1.0).is_err());
        assert!(selection_metrics(&t, &t, 0.0).is_err());
    }

    #[test]
    fn magnitudes_do_not_matter() {
        let t = v(&[1.0, 0.0, 2.0, 0.0, 9.0]);
        let a = selection_metrics(&v(&[0.1, 5.0, 0.0, 0.0, 0.0]), &t, 0.4).unwrap();
        let b = selection_metrics(&v(&[-8.0, 1e-9, 0.0, 0.0, 3.0]), &t, 0.4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn accuracy_counts() {
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]), 75.0);
    }

    #[test]
    fn grid_validation() {
        let mut o = CvOptions::new(vec![0.0, 0.5], FitConfig::default());
        assert!(o.validate().is_ok());
        o.grid = vec![0.5, 0.5];
        assert!(o.validate().is_err());
        o.grid = vec![1.0];
        assert!(o.validate().is_err());
    }
}
