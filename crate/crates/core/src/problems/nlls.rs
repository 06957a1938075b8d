use std::io::{Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::{KnownOptimum, Problem, StartKind};
use crate::error::CoreError;
use crate::linalg::{SymmetricOperator, Vector};
use crate::rng;

/// Binary classification data, one sample per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub features: DMatrix<f64>,
    /// Labels in `{0, 1}`.
    pub labels: Vector,
    pub seed: u64,
}

/// Scale of the hidden weight vector used to draw labels.
const TRUTH_SCALE: f64 = 2.0;

/// Rows are standard normal scaled by `1/sqrt(d)`; label `i` is 1 with
/// probability `sigmoid(<a_i, x_true>)` for a hidden `x_true`.
pub fn synthetic_dataset(n: usize, d: usize, seed: u64) -> Result<SyntheticDataset, CoreError> {
    if n == 0 || d == 0 {
        return Err(CoreError::InvalidConfig(format!("dataset needs n, d >= 1, got ({n}, {d})")));
    }
    let mut r = rng::stream(seed, "synthetic-dataset");
    let x_true = rng::normal_vector(&mut r, d) * TRUTH_SCALE;
    let scale = 1.0 / (d as f64).sqrt();
    let mut features = DMatrix::zeros(n, d);
    for i in 0..n {
        let row = rng::normal_vector(&mut r, d) * scale;
        features.set_row(i, &row.transpose());
    }
    let margins = &features * &x_true;
    let labels = margins.map(|m| if r.gen::<f64>() < sigmoid(m) { 1.0 } else { 0.0 });
    Ok(SyntheticDataset { features, labels, seed })
}

impl SyntheticDataset {
    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    /// Writes one CSV row per sample: label, then features.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CoreError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for i in 0..self.n() {
            let mut row = Vec::with_capacity(self.d() + 1);
            row.push(format!("{}", self.labels[i]));
            row.extend(self.features.row(i).iter().map(|x| format!("{x:.17e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, seed: u64) -> Result<Self, CoreError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
        let mut labels = Vec::new();
        let mut values = Vec::new();
        let mut width = None;
        for rec in rdr.records() {
            let rec = rec?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            let parsed = parsed.map_err(|e| CoreError::InvalidConfig(format!("bad dataset entry: {e}")))?;
            let d = parsed.len().saturating_sub(1);
            if d == 0 {
                return Err(CoreError::InvalidConfig("dataset row without features".into()));
            }
            match width {
                None => width = Some(d),
                Some(w) if w != d => return Err(CoreError::DimensionMismatch { expected: w, found: d }),
                _ => {}
            }
            if parsed[0] != 0.0 && parsed[0] != 1.0 {
                return Err(CoreError::InvalidConfig(format!("label must be 0 or 1, got {}", parsed[0])));
            }
            labels.push(parsed[0]);
            values.extend_from_slice(&parsed[1..]);
        }
        let d = width.ok_or_else(|| CoreError::InvalidConfig("empty dataset".into()))?;
        let n = labels.len();
        Ok(Self {
            features: DMatrix::from_row_slice(n, d, &values),
            labels: Vector::from_vec(labels),
            seed,
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(1/n) sum_i (b_i - sigmoid(<a_i, x>))^2 + lambda sum_j x_j^2 / (1 + x_j^2)`.
#[derive(Debug, Clone)]
pub struct RegularizedNlls {
    data: Arc<SyntheticDataset>,
    lambda: f64,
    name: String,
}

pub fn regularized_nlls(data: SyntheticDataset, lambda: f64) -> Result<RegularizedNlls, CoreError> {
    if !(lambda >= 0.0) {
        return Err(CoreError::InvalidConfig(format!("lambda must be >= 0, got {lambda}")));
    }
    let name = format!("nlls-n{}-d{}", data.n(), data.d());
    Ok(RegularizedNlls {
        data: Arc::new(data),
        lambda,
        name,
    })
}

impl RegularizedNlls {
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn data(&self) -> &SyntheticDataset {
        &self.data
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn sigmoids(&self, x: &Vector) -> Vector {
        (&self.data.features * x).map(sigmoid)
    }
}

impl Problem for RegularizedNlls {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.data.d()
    }

    fn value(&self, x: &Vector) -> f64 {
        let s = self.sigmoids(x);
        let n = self.data.n() as f64;
        let loss = s.iter().zip(self.data.labels.iter()).map(|(s, b)| (b - s).powi(2)).sum::<f64>() / n;
        let reg = x.iter().map(|t| t * t / (1.0 + t * t)).sum::<f64>();
        loss + self.lambda * reg
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let s = self.sigmoids(x);
        let n = self.data.n() as f64;
        let weights = Vector::from_iterator(
            s.len(),
            s.iter().zip(self.data.labels.iter()).map(|(s, b)| -2.0 * (b - s) * s * (1.0 - s) / n),
        );
        let mut g = self.data.features.tr_mul(&weights);
        for (gj, xj) in g.iter_mut().zip(x.iter()) {
            *gj += self.lambda * 2.0 * xj / (1.0 + xj * xj).powi(2);
        }
        g
    }

    fn hessian_at(&self, x: &Vector) -> SymmetricOperator {
        let s = self.sigmoids(x);
        let n = self.data.n() as f64;
        // d^2/dz^2 (b - sigmoid(z))^2 = 2 s'^2 - 2 (b - s) s''
        let row_weights = Vector::from_iterator(
            s.len(),
            s.iter().zip(self.data.labels.iter()).map(|(s, b)| {
                let d1 = s * (1.0 - s);
                let d2 = d1 * (1.0 - 2.0 * s);
                2.0 * (d1 * d1 - (b - s) * d2) / n
            }),
        );
        let reg = x.map(|t| {
            let u = 1.0 + t * t;
            self.lambda * (2.0 - 6.0 * t * t) / (u * u * u)
        });
        let data = Arc::clone(&self.data);
        SymmetricOperator::from_fn(self.dim(), move |v| {
            let av = (&data.features * v).component_mul(&row_weights);
            let mut out = data.features.tr_mul(&av);
            out += reg.component_mul(v);
            out
        })
    }

    fn known_optimum(&self) -> Option<KnownOptimum> {
        None
    }

    fn start_kind(&self) -> StartKind {
        StartKind::StandardNormal
    }
}
