//! Datasets, feature transforms, design matrices, the thin SVD and fold plans.

use std::collections::HashMap;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-wise feature transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformKind {
    #[default]
    None,
    Standardized,
    MinMax,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::None => "none",
            TransformKind::Standardized => "standardized",
            TransformKind::MinMax => "minmax",
        })
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(TransformKind::None),
            "standardized" | "standardize" | "zscore" => Ok(TransformKind::Standardized),
            "minmax" | "min-max" => Ok(TransformKind::MinMax),
            other => Err(Error::InvalidArgument(format!("unknown transform {other:?}"))),
        }
    }
}

/// Fitted transform parameters, kept so held-out data can be mapped with the
/// training statistics. A column is mapped to `(x - center) / scale`; a zero
/// scale marks a constant training column, which maps to 0.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub kind: TransformKind,
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl TransformParams {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn apply_value(&self, j: usize, x: f64) -> f64 {
        if self.kind == TransformKind::None {
            return x;
        }
        if self.scale[j] == 0.0 {
            0.0
        } else {
            (x - self.center[j]) / self.scale[j]
        }
    }

    /// Transform a feature matrix (rows are samples) with the stored parameters.
    pub fn apply(&self, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.kind == TransformKind::None {
            return Ok(features.clone());
        }
        if features.ncols() != self.center.len() {
            return Err(Error::Dimension(format!(
                "transform fitted on {} features, got {}",
                self.center.len(),
                features.ncols()
            )));
        }
        Ok(DMatrix::from_fn(features.nrows(), features.ncols(), |i, j| self.apply_value(j, features[(i, j)])))
    }

    pub fn apply_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, &v)| self.apply_value(j, v)).collect()
    }
}

/// Labeled feature matrix. Rows are samples; labels index into `class_names`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    labels: Vec<usize>,
    class_names: Vec<String>,
    transform: TransformParams,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        let ds = Self { features, labels, class_names, transform: TransformParams::identity() };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let (n, p) = self.features.shape();
        if n == 0 || p == 0 {
            return Err(Error::Dimension(format!("dataset must be non-empty, got {n}x{p}")));
        }
        if self.labels.len() != n {
            return Err(Error::Dimension(format!("{} labels for {n} rows", self.labels.len())));
        }
        if let Some(pos) = self.features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite feature at row {}, column {}",
                pos % n + 1,
                pos / n + 1
            )));
        }
        if let Some(&bad) = self.labels.iter().find(|&&l| l >= self.class_names.len()) {
            return Err(Error::InvalidArgument(format!("label id {bad} has no class name")));
        }
        if self.class_names.len() < 2 {
            return Err(Error::TooFewClasses);
        }
        Ok(())
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn transform(&self) -> &TransformParams {
        &self.transform
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.features.row(i).iter().copied().collect()
    }

    /// Rows `indices`, keeping class names and transform metadata. Classes may
    /// be absent from the subset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let features = self.features.select_rows(indices.iter());
        Dataset {
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            transform: self.transform.clone(),
        }
    }

    /// Row indices belonging to either class, in dataset order.
    pub fn pair_indices(&self, a: usize, b: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == a || self.labels[i] == b).collect()
    }

    /// Map held-out features with this dataset's stored transform.
    pub fn transform_like(&self, other: &Dataset) -> Result<Dataset> {
        if other.transform.kind != TransformKind::None {
            return Err(Error::AlreadyTransformed(other.transform.kind.to_string()));
        }
        let mut out = other.clone();
        out.features = self.transform.apply(&other.features)?;
        out.transform = self.transform.clone();
        Ok(out)
    }
}

/// Apply a column-wise transform, fitting its parameters on `ds`.
///
/// Standardization uses the unbiased (n - 1) standard deviation. Constant
/// columns map to zero under both transforms.
pub fn apply_transform(ds: &Dataset, kind: TransformKind) -> Result<Dataset> {
    if ds.transform.kind != TransformKind::None {
        return Err(Error::AlreadyTransformed(ds.transform.kind.to_string()));
    }
    let (n, p) = ds.features.shape();
    let mut center = Vec::with_capacity(p);
    let mut scale = Vec::with_capacity(p);
    for col in ds.features.column_iter() {
        let min = col.min();
        let max = col.max();
        let constant = min == max;
        match kind {
            TransformKind::None => {}
            TransformKind::Standardized => {
                let mean = col.sum() / n as f64;
                let sd = if constant || n < 2 {
                    0.0
                } else {
                    (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
                };
                center.push(mean);
                scale.push(sd);
            }
            TransformKind::MinMax => {
                center.push(min);
                scale.push(if constant { 0.0 } else { max - min });
            }
        }
    }
    let params = TransformParams { kind, center, scale };
    Ok(Dataset {
        features: params.apply(&ds.features)?,
        labels: ds.labels.clone(),
        class_names: ds.class_names.clone(),
        transform: params,
    })
}

/// Which CSV column holds the class label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(s) => f.write_str(s),
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, label, has_header)
}

/// Features and, when a label column is named, the raw label strings.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub features: DMatrix<f64>,
    pub labels: Option<Vec<String>>,
}

/// Parse comma-separated data. Every column other than `label` must hold
/// finite reals.
pub fn read_table<R: Read>(reader: R, label: Option<&LabelColumn>, has_header: bool) -> Result<RawTable> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(has_header).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let header: Option<Vec<String>> =
        if has_header { Some(rdr.headers()?.iter().map(str::to_string).collect()) } else { None };
    let label_idx = match (label, &header) {
        (None, _) => None,
        (Some(LabelColumn::Index(i)), _) => Some(*i),
        (Some(LabelColumn::Name(name)), Some(h)) => {
            Some(h.iter().position(|c| c == name).ok_or_else(|| Error::LabelColumn(name.clone()))?)
        }
        (Some(LabelColumn::Name(name)), None) => return Err(Error::LabelColumn(name.clone())),
    };
    let column_name =
        |j: usize| -> String { header.as_ref().and_then(|h| h.get(j).cloned()).unwrap_or_else(|| (j + 1).to_string()) };

    let mut width = header.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0;
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { row, expected, found: record.len() });
        }
        if label_idx.is_some_and(|l| l >= expected) {
            return Err(Error::LabelColumn(label.map(|l| l.to_string()).unwrap_or_default()));
        }
        for (j, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(Error::MissingValue { row, column: column_name(j) });
            }
            if Some(j) == label_idx {
                labels.push(cell.to_string());
            } else {
                let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
                    row,
                    column: column_name(j),
                    value: cell.to_string(),
                })?;
                values.push(v);
            }
        }
        n += 1;
    }
    let p = width.unwrap_or(0).saturating_sub(usize::from(label_idx.is_some()));
    if n == 0 || p == 0 {
        return Err(Error::Dimension(format!("no data: {n} rows, {p} feature columns")));
    }
    Ok(RawTable { features: DMatrix::from_row_slice(n, p, &values), labels: label_idx.map(|_| labels) })
}

/// Parse comma-separated data with a label column. Labels are factorized in
/// order of first appearance.
pub fn read_csv<R: Read>(reader: R, label: &LabelColumn, has_header: bool) -> Result<Dataset> {
    let table = read_table(reader, Some(label), has_header)?;
    let raw = table.labels.unwrap_or_default();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_ids: HashMap<&str, usize> = HashMap::new();
    let labels = raw
        .iter()
        .map(|l| {
            let next = class_names.len();
            *class_ids.entry(l.as_str()).or_insert_with(|| {
                class_names.push(l.clone());
                next
            })
        })
        .collect();
    if class_names.len() < 2 {
        return Err(Error::TooFewClasses);
    }
    Dataset::new(table.features, labels, class_names)
}

/// Like [`load_csv`], but labels are looked up in `class_names` (typically
/// those of a training set) instead of being factorized afresh.
pub fn load_csv_with_classes(
    path: impl AsRef<Path>,
    label: &LabelColumn,
    has_header: bool,
    class_names: &[String],
) -> Result<Dataset> {
    let table = read_table(std::fs::File::open(path)?, Some(label), has_header)?;
    let labels = table
        .labels
        .unwrap_or_default()
        .iter()
        .map(|l| {
            class_names
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| Error::InvalidArgument(format!("label {l:?} does not occur in the training data")))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(table.features, labels, class_names.to_vec())
}

/// Write `ds` as CSV with a header `x1,...,xp,label`.
pub fn write_csv<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (1..=ds.p()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for i in 0..ds.n() {
        let mut rec: Vec<String> = ds.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.class_names[ds.labels[i]].clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Intercept-augmented design `[X | 1]` with labels in {-1, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DesignMatrix {
    /// Validate an already augmented matrix: last column ones, labels ±1.
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() || x.ncols() < 1 || x.nrows() == 0 {
            return Err(Error::Dimension(format!("design {}x{} with {} labels", x.nrows(), x.ncols(), y.len())));
        }
        if x.column(x.ncols() - 1).iter().any(|&v| v != 1.0) {
            return Err(Error::InvalidArgument("last design column must be all ones".into()));
        }
        if y.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidArgument("labels must be -1 or +1".into()));
        }
        Ok(Self { x, y })
    }

    /// Append the intercept column to `features`.
    pub fn from_features(features: &DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let (n, p) = features.shape();
        let x = features.clone().insert_column(p, 1.0);
        debug_assert_eq!(x.shape(), (n, p + 1));
        Self::new(x, y)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of coefficients, `p + 1`.
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Number of non-intercept coefficients.
    pub fn p(&self) -> usize {
        self.x.ncols() - 1
    }
}

/// Restrict `ds` to two classes: `positive` maps to +1, `negative` to -1.
pub fn binarize(ds: &Dataset, positive: usize, negative: usize) -> Result<DesignMatrix> {
    if positive == negative {
        return Err(Error::InvalidArgument(format!("classes must differ, got {positive} twice")));
    }
    let counts = ds.class_counts();
    for c in [positive, negative] {
        if counts.get(c).copied().unwrap_or(0) == 0 {
            return Err(Error::InvalidArgument(format!("class {c} is absent")));
        }
    }
    let rows = ds.pair_indices(positive, negative);
    let features = ds.features.select_rows(rows.iter());
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| if ds.labels[i] == positive { 1.0 } else { -1.0 }));
    DesignMatrix::from_features(&features, y)
}

/// Thin singular value decomposition `X = U diag(s) V^T` truncated to the
/// singular values above `tol * s_1`.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, mut col) in us.column_iter_mut().enumerate() {
            col *= self.s[j];
        }
        us * self.v.transpose()
    }
}

pub const DEFAULT_SVD_TOL: f64 = 1e-12;

pub fn thin_svd(x: &DMatrix<f64>, tol: f64) -> Result<ThinSvd> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let (n, m) = x.shape();
    let svd = x.clone().try_svd(true, true, f64::EPSILON, 0).ok_or(Error::SvdConvergence)?;
    let u_full = svd.u.ok_or(Error::SvdConvergence)?;
    let vt_full = svd.v_t.ok_or(Error::SvdConvergence)?;
    let s_full = svd.singular_values;

    let mut order: Vec<usize> = (0..s_full.len()).collect();
    order.sort_by(|&a, &b| s_full[b].total_cmp(&s_full[a]).then(a.cmp(&b)));
    let s1 = order.first().map(|&j| s_full[j]).unwrap_or(0.0);
    let kept: Vec<usize> = order.into_iter().filter(|&j| s1 > 0.0 && s_full[j] > tol * s1).collect();
    let r = kept.len();
    let u = DMatrix::from_fn(n, r, |i, j| u_full[(i, kept[j])]);
    let v = DMatrix::from_fn(m, r, |i, j| vt_full[(kept[j], i)]);
    let s = DVector::from_iterator(r, kept.iter().map(|&j| s_full[j]));
    Ok(ThinSvd { u, s, v })
}

/// Assignment of samples to cross-validation folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub num_folds: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// `(train, validation)` row indices for fold `f`.
    pub fn split(&self, f: usize) -> (Vec<usize>, Vec<usize>) {
        let (val, train): (Vec<usize>, Vec<usize>) =
            (0..self.assignments.len()).partition(|&i| self.assignments[i] == f);
        (train, val)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_folds];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

fn check_folds(n: usize, num_folds: usize) -> Result<()> {
    if num_folds < 2 || num_folds > n {
        return Err(Error::InvalidArgument(format!("number of folds must lie in [2, {n}], got {num_folds}")));
    }
    Ok(())
}

/// Deal shuffled positions round-robin so fold sizes differ by at most one.
fn deal(order: &[usize], n: usize, num_folds: usize) -> Vec<usize> {
    let mut assignments = vec![0; n];
    for (t, &i) in order.iter().enumerate() {
        assignments[i] = t % num_folds;
    }
    assignments
}

pub fn make_folds(n: usize, num_folds: usize, seed: u64) -> Result<FoldPlan> {
    check_folds(n, num_folds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    Ok(FoldPlan { num_folds, assignments: deal(&order, n, num_folds), seed })
}

/// Stratified folds: each class is shuffled separately and the classes are
/// dealt one after another, continuing the round-robin, so every class is
/// spread as evenly as possible and overall fold sizes differ by at most one.
pub fn make_stratified_folds(labels: &[usize], num_folds: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    check_folds(n, num_folds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut order = Vec::with_capacity(n);
    for c in 0..num_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    Ok(FoldPlan { num_folds, assignments: deal(&order, n, num_folds), seed })
}

/// Stratified split into `(train, test)` row indices with roughly
/// `test_fraction` of every class held out.
pub fn train_test_split(labels: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!("test fraction must lie in [0, 1), got {test_fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..num_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        members.shuffle(&mut rng);
        let held = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..held]);
        train.extend_from_slice(&members[held..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds_from(cols: &[&[f64]]) -> Dataset {
        let n = cols[0].len();
        let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(x, labels, vec!["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn csv_readback() {
        let text = "f1,f2,label\n1.0,2.0,a\n3.0,4.0,b\n5.0,6.0,a\n";
        let ds = read_csv(text.as_bytes(), &LabelColumn::Name("label".into()), true).unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 2));
        assert_eq!(ds.class_names(), ["a", "b"]);
        assert_eq!(ds.labels(), [0, 1, 0]);
        assert_eq!(ds.features()[(2, 1)], 6.0);
        assert_eq!(ds.transform().kind, TransformKind::None);
    }

    #[test]
    fn csv_label_by_index_without_header() {
        let text = "x,1.5,2\ny,0.5,1\n";
        let ds = read_csv(text.as_bytes(), &LabelColumn::Index(0), false).unwrap();
        assert_eq!(ds.class_names(), ["x", "y"]);
        assert_eq!(ds.features()[(1, 0)], 0.5);
    }

    #[test]
    fn csv_parse_error_reports_row() {
        let text = "f1,f2,label\n1,2,a\n3,x,b\n";
        match read_csv(text.as_bytes(), &LabelColumn::Name("label".into()), true) {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "f2");
                assert_eq!(value, "x");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_missing_and_single_class() {
        let text = "f1,label\n1,a\n,b\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &LabelColumn::Index(1), true),
            Err(Error::MissingValue { row: 2, .. })
        ));
        let text = "f1,label\n1,a\n2,a\n";
        let err = read_csv(text.as_bytes(), &LabelColumn::Index(1), true).unwrap_err();
        assert!(matches!(err, Error::TooFewClasses));
        assert_eq!(err.to_string(), "fewer than 2 classes");
    }

    #[test]
    fn csv_rejects_nonfinite() {
        let text = "f1,label\n1,a\ninf,b\n";
        assert!(matches!(read_csv(text.as_bytes(), &LabelColumn::Index(1), true), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn standardize_uses_sample_sd() {
        let ds = ds_from(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]]);
        let t = apply_transform(&ds, TransformKind::Standardized).unwrap();
        let f = t.features();
        // mean 2, unbiased sd 1
        for (i, want) in [-1.0, 0.0, 1.0].iter().enumerate() {
            assert!((f[(i, 0)] - want).abs() < 1e-12);
            assert_eq!(f[(i, 1)], 0.0);
        }
        assert_eq!(t.transform().kind, TransformKind::Standardized);
    }

    #[test]
    fn minmax_and_constant_columns() {
        let ds = ds_from(&[&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]]);
        let t = apply_transform(&ds, TransformKind::MinMax).unwrap();
        let col: Vec<f64> = t.features().column(0).iter().copied().collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        assert!(t.features().column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn double_transform_rejected() {
        let ds = ds_from(&[&[1.0, 2.0, 3.0]]);
        let t = apply_transform(&ds, TransformKind::MinMax).unwrap();
        assert!(matches!(apply_transform(&t, TransformKind::Standardized), Err(Error::AlreadyTransformed(_))));
    }

    #[test]
    fn heldout_uses_training_parameters() {
        let train = ds_from(&[&[1.0, 2.0, 3.0]]);
        let t = apply_transform(&train, TransformKind::MinMax).unwrap();
        let test = ds_from(&[&[0.0, 5.0]]);
        let mapped = t.transform_like(&test).unwrap();
        // outside the training range: leaves [0, 1]
        assert_eq!(mapped.features()[(0, 0)], -0.5);
        assert_eq!(mapped.features()[(1, 0)], 2.0);
    }

    #[test]
    fn binarize_counts_and_intercept() {
        let labels: Vec<usize> = (0..60)
            .map(|i| {
                if i < 10 {
                    0
                } else if i < 30 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let x = DMatrix::from_fn(60, 3, |i, j| (i * 3 + j) as f64);
        let ds = Dataset::new(x, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let d = binarize(&ds, 0, 1).unwrap();
        assert_eq!(d.n(), 30);
        assert_eq!(d.y().iter().filter(|&&v| v == 1.0).count(), 10);
        assert_eq!(d.y().iter().filter(|&&v| v == -1.0).count(), 20);
        assert!(d.x().column(3).iter().all(|&v| v == 1.0));
        assert!(binarize(&ds, 0, 0).is_err());
    }

    #[test]
    fn svd_identity_and_rank_one() {
        let svd = thin_svd(&DMatrix::identity(3, 3), DEFAULT_SVD_TOL).unwrap();
        assert_eq!(svd.rank(), 3);
        assert!(svd.s.iter().all(|&s| (s - 1.0).abs() < 1e-14));

        let u = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let v = DVector::from_vec(vec![2.0, 1.0, -1.0]);
        let svd = thin_svd(&(&u * v.transpose()), 1e-12).unwrap();
        assert_eq!(svd.rank(), 1);
    }

    #[test]
    fn folds_balanced_and_deterministic() {
        let plan = make_folds(10, 10, 3).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 1));
        let plan = make_folds(10, 3, 3).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 3, 4]);
        assert_eq!(plan, make_folds(10, 3, 3).unwrap());
        assert!(make_folds(10, 1, 0).is_err());
        assert!(make_folds(10, 11, 0).is_err());
    }

    #[test]
    fn stratified_folds_spread_classes() {
        let labels: Vec<usize> = (0..50).map(|i| usize::from(i >= 40)).collect();
        let plan = make_stratified_folds(&labels, 10, 1).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 5));
        for f in 0..10 {
            let (_, val) = plan.split(f);
            assert_eq!(val.iter().filter(|&&i| labels[i] == 1).count(), 1);
        }
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(serde_json::from_str::<FoldPlan>(&json).unwrap(), plan);
    }
}
