//! Multinomial logistic regression on mapping-unit activations.
//!
//! Features are standardized with training-set statistics, the softmax
//! cross-entropy (plus L2 on the weights, not the biases) is minimized by
//! full-batch gradient descent with Armijo backtracking, and the L2 strength
//! is picked from a fixed grid by validation accuracy.

use serde::{Deserialize, Serialize};

use crate::math::Matrix;
use crate::model::{CoreKind, CoreStructure};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledFeatures {
    /// `[examples × K]`
    pub features: Matrix,
    pub labels: Vec<u16>,
    pub num_classes: usize,
}

impl LabeledFeatures {
    pub fn new(features: Matrix, labels: Vec<u16>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows for {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} >= num_classes {num_classes}"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegConfig {
    #[serde(default = "default_grid")]
    pub l2_grid: Vec<f64>,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Stop when the largest gradient entry falls below this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_grid() -> Vec<f64> {
    vec![0.0, 1e-4, 1e-3, 1e-2, 1e-1]
}
fn default_max_iters() -> usize {
    500
}
fn default_tolerance() -> f64 {
    1e-6
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2_grid: default_grid(),
            max_iters: default_max_iters(),
            tolerance: default_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub num_classes: usize,
    pub mean: Vec<f64>,
    pub inv_std: Vec<f64>,
    /// `[features × classes]`, acting on standardized features.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub l2: f64,
}

impl LogisticRegression {
    fn standardize(&self, x: &Matrix) -> Matrix {
        let mut s = x.clone();
        for r in 0..s.rows() {
            for ((v, m), is) in s.row_mut(r).iter_mut().zip(&self.mean).zip(&self.inv_std) {
                *v = (*v - m) * is;
            }
        }
        s
    }

    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::Dimension(format!(
                "classifier expects {} features, got {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let mut z = self.standardize(x).matmul(&self.weights);
        z.add_row_vector(&self.bias);
        Ok(z)
    }

    /// Argmax class per row; ties go to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<u16>> {
        let z = self.logits(x)?;
        Ok((0..z.rows()).map(|r| argmax(z.row(r)) as u16).collect())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy plus `l2/2·‖W‖²`, and its gradient w.r.t.
/// `(W, b)`, for already-standardized features.
pub fn cross_entropy(
    x: &Matrix,
    labels: &[u16],
    weights: &Matrix,
    bias: &[f64],
    l2: f64,
) -> (f64, Matrix, Vec<f64>) {
    let n = x.rows() as f64;
    let mut z = x.matmul(weights);
    z.add_row_vector(bias);
    let mut loss = 0.0;
    for r in 0..z.rows() {
        let row = z.row_mut(r);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        let y = labels[r] as usize;
        loss -= (row[y] / sum).ln();
        for v in row.iter_mut() {
            *v /= sum;
        }
        row[y] -= 1.0;
    }
    loss /= n;
    loss += 0.5 * l2 * weights.frobenius_sq();
    z.scale(1.0 / n);
    let mut gw = x.t_matmul(&z);
    gw.axpy(l2, weights);
    let gb = z.column_sums();
    (loss, gw, gb)
}

fn fit_fixed(
    xs: &Matrix,
    labels: &[u16],
    num_classes: usize,
    l2: f64,
    cfg: &LogRegConfig,
) -> (Matrix, Vec<f64>) {
    let d = xs.cols();
    let mut w = Matrix::zeros(d, num_classes);
    let mut b = vec![0.0; num_classes];
    let mut step = 1.0;
    let (mut f, mut gw, mut gb) = cross_entropy(xs, labels, &w, &b, l2);
    for _ in 0..cfg.max_iters {
        let gmax = gw
            .as_slice()
            .iter()
            .chain(&gb)
            .fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax < cfg.tolerance {
            break;
        }
        let gnorm2 = gw.frobenius_sq() + gb.iter().map(|v| v * v).sum::<f64>();
        loop {
            let mut w2 = w.clone();
            w2.axpy(-step, &gw);
            let b2: Vec<f64> = b.iter().zip(&gb).map(|(a, g)| a - step * g).collect();
            let (f2, gw2, gb2) = cross_entropy(xs, labels, &w2, &b2, l2);
            if f2 <= f - 0.5 * step * gnorm2 || step < 1e-12 {
                w = w2;
                b = b2;
                f = f2;
                gw = gw2;
                gb = gb2;
                step = (step * 2.0).min(1e3);
                break;
            }
            step *= 0.5;
        }
    }
    (w, b)
}

fn feature_stats(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut mean = x.column_sums();
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; x.cols()];
    for r in 0..x.rows() {
        for ((v, a), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *v += (a - m).powi(2);
        }
    }
    let inv_std = var
        .iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-8 {
                1.0 / s
            } else {
                1.0
            }
        })
        .collect();
    (mean, inv_std)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: LogisticRegression,
    pub valid_accuracy: f64,
    /// `(l2, validation accuracy)` for every grid point.
    pub grid: Vec<(f64, f64)>,
}

pub fn fit_logreg(
    train: &LabeledFeatures,
    valid: &LabeledFeatures,
    cfg: &LogRegConfig,
) -> Result<FitResult> {
    let num_classes = train.num_classes.max(valid.num_classes);
    let mut present = vec![false; num_classes];
    for &l in &train.labels {
        present[l as usize] = true;
    }
    if present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::InvalidArgument(
            "logistic regression needs at least two classes in the training labels".into(),
        ));
    }
    if train.features.cols() != valid.features.cols() {
        return Err(Error::Dimension("train/valid feature widths differ".into()));
    }
    if cfg.l2_grid.is_empty() {
        return Err(Error::InvalidArgument("empty L2 grid".into()));
    }
    let (mean, inv_std) = feature_stats(&train.features);
    let mut template = LogisticRegression {
        num_classes,
        mean,
        inv_std,
        weights: Matrix::zeros(train.features.cols(), num_classes),
        bias: vec![0.0; num_classes],
        l2: 0.0,
    };
    let xs = template.standardize(&train.features);
    let mut best: Option<(f64, LogisticRegression)> = None;
    let mut grid = Vec::new();
    for &l2 in &cfg.l2_grid {
        let (w, b) = fit_fixed(&xs, &train.labels, num_classes, l2, cfg);
        template.weights = w;
        template.bias = b;
        template.l2 = l2;
        let acc = evaluate(&template, valid)?.accuracy;
        grid.push((l2, acc));
        if best.as_ref().is_none_or(|(a, _)| acc > *a) {
            best = Some((acc, template.clone()));
        }
    }
    let (valid_accuracy, model) = best.expect("grid is nonempty");
    Ok(FitResult {
        model,
        valid_accuracy,
        grid,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    /// `None` for classes absent from the test set.
    pub per_class_accuracy: Vec<Option<f64>>,
    /// `confusion[true][predicted]`
    pub confusion: Vec<Vec<usize>>,
    pub l2: f64,
    pub total: usize,
}

pub fn evaluate(model: &LogisticRegression, test: &LabeledFeatures) -> Result<ClassificationReport> {
    let pred = model.predict(&test.features)?;
    let c = model.num_classes.max(test.num_classes);
    report_from_predictions(&test.labels, &pred, c, model.l2)
}

pub fn report_from_predictions(
    labels: &[u16],
    predicted: &[u16],
    num_classes: usize,
    l2: f64,
) -> Result<ClassificationReport> {
    if labels.len() != predicted.len() || labels.is_empty() {
        return Err(Error::Dimension("labels and predictions must be nonempty and equal length".into()));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&t, &p) in labels.iter().zip(predicted) {
        confusion[t as usize][p as usize] += 1;
    }
    let correct: usize = (0..num_classes).map(|i| confusion[i][i]).sum();
    let per_class_accuracy = confusion
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let n: usize = row.iter().sum();
            (n > 0).then(|| row[i] as f64 / n as f64)
        })
        .collect();
    Ok(ClassificationReport {
        accuracy: correct as f64 / labels.len() as f64,
        per_class_accuracy,
        confusion,
        l2,
        total: labels.len(),
    })
}

/// Sizes that fix a gated model's parameter count for a given filter count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden: usize,
}

/// How to pick the grouped filter count matching a diagonal model's budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceRule {
    /// Largest multiple of the group size whose exact parameter count does
    /// not exceed the diagonal model's.
    #[default]
    FloorGroupMultiple,
    /// Nearest count when each grouped filter is charged
    /// `input_dim + output_dim + group_size·hidden` parameters.
    NearestPerFilter,
}

/// Factor-matrix plus hidden-weight parameters, closed form.
pub fn gated_parameter_count(kind: &CoreKind, num_factors: usize, dims: ModelDims) -> usize {
    let (i, j, k) = (dims.input_dim, dims.output_dim, dims.hidden);
    let grouped_products = |f: usize, gs: usize| (f / gs) * gs * gs + (f % gs).pow(2);
    match kind {
        CoreKind::Diagonal => (i + j) * num_factors + num_factors * k,
        CoreKind::Grouped { group_size } => {
            (i + j) * num_factors + grouped_products(num_factors, *group_size) * k
        }
        CoreKind::AsymGrouped { group_size } => {
            let groups = num_factors.div_ceil(*group_size);
            i * groups + j * num_factors + num_factors * k
        }
        CoreKind::Topographic { neighborhood, .. } => {
            (i + j) * num_factors + num_factors * neighborhood.pow(4) * k
        }
    }
}

/// Parameter count by building the structure and counting tensor entries.
pub fn enumerated_parameter_count(kind: &CoreKind, num_factors: usize, dims: ModelDims) -> Result<usize> {
    let core = CoreStructure::new(kind.clone(), num_factors)?;
    Ok(dims.input_dim * core.input_factors()
        + dims.output_dim * core.output_factors()
        + core.num_products() * dims.hidden)
}

/// Grouped filter count with the same parameter budget as a diagonal model
/// with `num_filters_diagonal` filters.
pub fn parameter_equivalence(
    num_filters_diagonal: usize,
    group_size: usize,
    dims: ModelDims,
    rule: EquivalenceRule,
) -> Result<usize> {
    if num_filters_diagonal == 0 || group_size == 0 || dims.hidden == 0 {
        return Err(Error::InvalidArgument("counts must be positive".into()));
    }
    let budget = gated_parameter_count(&CoreKind::Diagonal, num_filters_diagonal, dims);
    let kind = CoreKind::Grouped { group_size };
    match rule {
        EquivalenceRule::FloorGroupMultiple => {
            let mut f = 0;
            while gated_parameter_count(&kind, f + group_size, dims) <= budget {
                f += group_size;
            }
            Ok(f)
        }
        EquivalenceRule::NearestPerFilter => {
            let per = (dims.input_dim + dims.output_dim + group_size * dims.hidden) as f64;
            let f = budget as f64 / per;
            // ties toward the smaller count
            let lo = f.floor();
            let pick = if f - lo > 0.5 { lo + 1.0 } else { lo };
            Ok(pick.max(1.0) as usize)
        }
    }
}
