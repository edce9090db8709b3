//! Versioned JSON model files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, TransformParams};
use crate::error::{Error, Result};
use crate::kernel::KernelModel;
use crate::multiclass::{OvoModel, PairClassifier, PairModel};

pub const MODEL_VERSION: u32 = 1;

/// A trained classifier together with the feature transform fitted on its
/// training data. Predictions take raw features.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub ovo: OvoModel,
    pub transform: TransformParams,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelKind {
    Linear,
    Kernel,
}

#[derive(Serialize, Deserialize)]
struct KernelPayload {
    gamma: f64,
    /// Training points with a nonzero dual coefficient, one row each.
    train_x: Vec<Vec<f64>>,
    train_y: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    positive: usize,
    negative: usize,
    /// Feature weights, or dual coefficients for kernel models; intercept last.
    coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kernel: Option<KernelPayload>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    kind: ModelKind,
    class_names: Vec<String>,
    transform: TransformParams,
    pairs: Vec<PairRecord>,
}

impl PairRecord {
    fn from_pair(c: &PairClassifier) -> Self {
        let (coefficients, kernel) = match &c.model {
            PairModel::Linear(beta) => (beta.as_slice().to_vec(), None),
            PairModel::Kernel(m) => {
                let m = m.pruned();
                let payload = KernelPayload {
                    gamma: m.gamma,
                    train_x: m.train_x.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    train_y: m.train_y.as_slice().to_vec(),
                };
                (m.alpha.as_slice().to_vec(), Some(payload))
            }
        };
        Self { positive: c.positive, negative: c.negative, coefficients, kernel }
    }

    fn into_pair(self, num_classes: usize, p: Option<usize>) -> Result<PairClassifier> {
        if self.positive >= num_classes || self.negative >= num_classes || self.positive == self.negative {
            return Err(Error::InvalidArgument(format!(
                "bad class pair ({}, {}) for {num_classes} classes",
                self.positive, self.negative
            )));
        }
        let coef = DVector::from_vec(self.coefficients);
        let model = match self.kernel {
            None => {
                if let Some(p) = p {
                    if coef.len() != p + 1 {
                        return Err(Error::Dimension(format!("{} coefficients for {p} features", coef.len())));
                    }
                }
                PairModel::Linear(coef)
            }
            Some(k) => {
                let n = k.train_x.len();
                let width = k.train_x.first().map_or(p.unwrap_or(0), Vec::len);
                if k.train_x.iter().any(|r| r.len() != width) {
                    return Err(Error::Dimension("ragged kernel training rows".into()));
                }
                let x = DMatrix::from_row_iterator(n, width, k.train_x.into_iter().flatten());
                PairModel::Kernel(KernelModel::new(coef, k.gamma, x, DVector::from_vec(k.train_y))?)
            }
        };
        Ok(PairClassifier { positive: self.positive, negative: self.negative, model })
    }
}

impl TrainedModel {
    pub fn new(ovo: OvoModel, transform: TransformParams) -> Self {
        Self { ovo, transform }
    }

    pub fn is_kernel(&self) -> bool {
        self.ovo.pairs.iter().any(|c| matches!(c.model, PairModel::Kernel(_)))
    }

    /// Number of raw input features the model expects.
    pub fn num_features(&self) -> usize {
        match &self.ovo.pairs[0].model {
            PairModel::Linear(beta) => beta.len() - 1,
            PairModel::Kernel(m) => m.train_x.ncols(),
        }
    }

    /// Predicted class ids for rows of raw features.
    pub fn predict(&self, features: &DMatrix<f64>) -> Result<Vec<usize>> {
        if features.ncols() != self.num_features() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.num_features(),
                features.ncols()
            )));
        }
        let x = self.transform.apply(features)?;
        Ok(self.ovo.predict_rows(&x))
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<usize>> {
        self.predict(ds.features())
    }

    pub fn class_name(&self, id: usize) -> &str {
        &self.ovo.class_names[id]
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        let file = ModelFile {
            version: MODEL_VERSION,
            kind: if self.is_kernel() { ModelKind::Kernel } else { ModelKind::Linear },
            class_names: self.ovo.class_names.clone(),
            transform: self.transform.clone(),
            pairs: self.ovo.pairs.iter().map(PairRecord::from_pair).collect(),
        };
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        if file.version != MODEL_VERSION {
            return Err(Error::ModelVersion(file.version));
        }
        let c = file.class_names.len();
        let p = match file.transform.kind {
            crate::data::TransformKind::None => None,
            _ => Some(file.transform.center.len()),
        };
        let pairs = file.pairs.into_iter().map(|r| r.into_pair(c, p)).collect::<Result<Vec<_>>>()?;
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("model file has no classifiers".into()));
        }
        let kernel = matches!(file.kind, ModelKind::Kernel);
        if pairs.iter().any(|c| matches!(c.model, PairModel::Kernel(_)) != kernel) {
            return Err(Error::InvalidArgument("model kind does not match its classifiers".into()));
        }
        Ok(Self { ovo: OvoModel { class_names: file.class_names, pairs }, transform: file.transform })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.to_writer(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TransformKind;

    fn linear() -> TrainedModel {
        let pairs = vec![
            PairClassifier {
                positive: 0,
                negative: 1,
                model: PairModel::Linear(DVector::from_vec(vec![1.0, -0.5, 0.1])),
            },
            PairClassifier {
                positive: 0,
                negative: 2,
                model: PairModel::Linear(DVector::from_vec(vec![0.0, 2.0, -0.3])),
            },
            PairClassifier {
                positive: 1,
                negative: 2,
                model: PairModel::Linear(DVector::from_vec(vec![-1.0, 1.0, 0.0])),
            },
        ];
        let transform =
            TransformParams { kind: TransformKind::Standardized, center: vec![1.0, -2.0], scale: vec![2.0, 0.0] };
        TrainedModel::new(OvoModel { class_names: vec!["a".into(), "b".into(), "c".into()], pairs }, transform)
    }

    #[test]
    fn json_roundtrip() {
        let m = linear();
        let mut buf = Vec::new();
        m.to_writer(&mut buf).unwrap();
        let back = TrainedModel::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 3.0, -2.0, -4.0, 7.5]);
        assert_eq!(back.predict(&x).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn kernel_roundtrip_prunes() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let y = DVector::from_vec(vec![1.0, -1.0, 1.0]);
        let k = KernelModel::new(DVector::from_vec(vec![0.7, 0.0, 0.2, -0.1]), 0.8, x, y).unwrap();
        let m = TrainedModel::new(
            OvoModel {
                class_names: vec!["u".into(), "v".into()],
                pairs: vec![PairClassifier { positive: 0, negative: 1, model: PairModel::Kernel(k.clone()) }],
            },
            TransformParams::identity(),
        );
        let mut buf = Vec::new();
        m.to_writer(&mut buf).unwrap();
        let back = TrainedModel::from_reader(buf.as_slice()).unwrap();
        let PairModel::Kernel(kb) = &back.ovo.pairs[0].model else { panic!("kernel expected") };
        assert_eq!(kb.train_x.nrows(), 2);
        for t in [-1.0, 0.5, 1.5, 3.0] {
            assert_eq!(kb.score(&[t]), k.score(&[t]));
        }
    }

    #[test]
    fn rejects_future_version() {
        let mut buf = Vec::new();
        linear().to_writer(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(TrainedModel::from_reader(s.as_bytes()), Err(Error::ModelVersion(9))));
    }
}
