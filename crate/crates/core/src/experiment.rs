//! End-to-end pipeline stages behind the `groupgate` commands.
//!
//! Each `cmd_*` function reads its inputs, writes its artifacts under the
//! output directory and returns the paths it produced. Progress goes to a
//! [`Log`] as `key=value` lines on standard error.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    filters_as_patches, group_dispersion, model_spectra, phase_difference_table, property_histograms,
    render_mosaic, render_property_map, render_topographic_map, topographic_smoothness, write_phase_differences_csv,
    write_spectra_csv, FilterAnalysis, GroupDispersion, HistogramBins, Property, Smoothness,
};
use crate::classifier::{evaluate, fit_logreg, parameter_equivalence, ClassificationReport, LabeledFeatures, LogRegConfig, ModelDims};
use crate::config::{ExperimentConfig, ModelConfig, Table1Config};
use crate::datagen::{build_natural_dataset, generate, synth_natural_frames, Dataset, DatasetSpec, FrameSource, Split, TaskSpec};
use crate::io::{
    read_dataset, read_frames, read_model, read_pgm_dir, read_whitening, write_csv_report, write_dataset,
    write_json_report, write_model, write_whitening, AnyModel,
};
use crate::math::{Matrix, Rng, WhiteningTransform};
use crate::model::{train_with_observer, CoreKind, CoreStructure, EpochStats, FactorModel, SquarePoolingModel, TrainConfig};
use crate::{Error, Result};

/// Line-oriented `key=value` logging to standard error.
#[derive(Clone, Copy, Debug, Default)]
pub struct Log {
    pub quiet: bool,
}

impl Log {
    pub fn new(quiet: bool) -> Self {
        Self { quiet }
    }

    pub fn event(&self, event: &str, fields: &[(&str, String)]) {
        if self.quiet {
            return;
        }
        let mut line = format!("event={event}");
        for (k, v) in fields {
            if v.contains(char::is_whitespace) || v.is_empty() {
                line.push_str(&format!(" {k}={v:?}"));
            } else {
                line.push_str(&format!(" {k}={v}"));
            }
        }
        eprintln!("{line}");
    }
}

pub fn load_frames(source: &FrameSource) -> Result<Vec<Matrix>> {
    match source {
        FrameSource::File { path } => read_frames(path),
        FrameSource::PgmDir { path } => read_pgm_dir(path),
        FrameSource::Synthetic(p) => synth_natural_frames(p),
    }
}

/// Generates a dataset; natural tasks also return their whitening.
pub fn build_dataset(spec: &DatasetSpec) -> Result<(Dataset, Option<WhiteningTransform>)> {
    match &spec.task {
        TaskSpec::Natural { source, .. } => {
            let frames = load_frames(source)?;
            let (d, w, _) = build_natural_dataset(spec, &frames)?;
            Ok((d, Some(w)))
        }
        _ => Ok((generate(spec)?, None)),
    }
}

pub fn build_model(cfg: &ModelConfig, dim: usize, init_std: f64, seed: u64) -> Result<AnyModel> {
    let mut rng = Rng::new(seed).substream(20, 0);
    match cfg {
        ModelConfig::Gated {
            core,
            num_factors,
            hidden,
        } => {
            let cs = CoreStructure::new(core.clone(), *num_factors)?;
            Ok(AnyModel::Factor(FactorModel::init(cs, dim, dim, *hidden, init_std, &mut rng)?))
        }
        ModelConfig::SquarePooling { filters, hidden } => Ok(AnyModel::SquarePooling(SquarePoolingModel::init(
            dim, *filters, *hidden, init_std, &mut rng,
        )?)),
    }
}

/// Trains either model kind, returning the trained model and its curve.
pub fn train_any(
    model: AnyModel,
    train: &Split,
    valid: Option<&Split>,
    cfg: &TrainConfig,
    observer: impl FnMut(&EpochStats),
) -> Result<(AnyModel, Vec<EpochStats>)> {
    match model {
        AnyModel::Factor(m) => {
            let o = train_with_observer(m, train, valid, cfg, observer)?;
            Ok((AnyModel::Factor(o.model), o.curve))
        }
        AnyModel::SquarePooling(m) => {
            let o = train_with_observer(m, train, valid, cfg, observer)?;
            Ok((AnyModel::SquarePooling(o.model), o.curve))
        }
    }
}

/// Mapping-unit activations of a labeled split, computed in chunks.
pub fn features(model: &AnyModel, split: &Split, num_classes: usize) -> Result<LabeledFeatures> {
    let labels = split
        .labels
        .clone()
        .ok_or_else(|| Error::InvalidArgument("split has no labels".into()))?;
    let mut data = Vec::with_capacity(split.len() * model.hidden());
    let mut start = 0;
    while start < split.len() {
        let idx: Vec<usize> = (start..(start + 2000).min(split.len())).collect();
        let h = model.infer_batch(&split.x.select_rows(&idx), &split.y.select_rows(&idx))?;
        data.extend_from_slice(h.as_slice());
        start += idx.len();
    }
    LabeledFeatures::new(Matrix::from_vec(split.len(), model.hidden(), data)?, labels, num_classes)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    pub valid_accuracy: f64,
    pub l2_grid: Vec<(f64, f64)>,
    pub report: ClassificationReport,
}

/// Fits the classifier on train features, selects L2 on valid, reports on test.
pub fn classify(model: &AnyModel, dataset: &Dataset, cfg: &LogRegConfig) -> Result<Evaluation> {
    let c = dataset
        .num_classes
        .ok_or_else(|| Error::InvalidArgument("dataset is unlabeled".into()))?;
    let train = features(model, &dataset.train, c)?;
    let valid = features(model, &dataset.valid, c)?;
    let test = features(model, &dataset.test, c)?;
    let fit = fit_logreg(&train, &valid, cfg)?;
    Ok(Evaluation {
        valid_accuracy: fit.valid_accuracy,
        l2_grid: fit.grid,
        report: evaluate(&fit.model, &test)?,
    })
}

fn epoch_logger<'a>(log: &'a Log, tag: &'a str) -> impl FnMut(&EpochStats) + 'a {
    move |s: &EpochStats| {
        log.event(
            "epoch",
            &[
                ("model", tag.to_string()),
                ("epoch", s.epoch.to_string()),
                ("train_loss", format!("{:.6}", s.train_loss)),
                ("valid_loss", s.valid_loss.map_or("none".into(), |v| format!("{v:.6}"))),
            ],
        )
    }
}

/// Trains a model from config on a dataset and classifies with it.
pub fn train_and_classify(
    model_cfg: &ModelConfig,
    dataset: &Dataset,
    train_cfg: &TrainConfig,
    logreg: &LogRegConfig,
    log: &Log,
    tag: &str,
) -> Result<(AnyModel, Evaluation)> {
    let model = build_model(model_cfg, dataset.dim, train_cfg.weight_init_std, train_cfg.seed)
        .map_err(|e| e.in_stage(format!("{tag}: init")))?;
    let (model, _) = train_any(model, &dataset.train, Some(&dataset.valid), train_cfg, epoch_logger(log, tag))
        .map_err(|e| e.in_stage(format!("{tag}: train")))?;
    let eval = classify(&model, dataset, logreg).map_err(|e| e.in_stage(format!("{tag}: classify")))?;
    log.event(
        "classified",
        &[
            ("model", tag.to_string()),
            ("test_accuracy", format!("{:.4}", eval.report.accuracy)),
            ("l2", eval.report.l2.to_string()),
        ],
    );
    Ok((model, eval))
}

// ---- commands ----

pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path, log: &Log) -> Result<Vec<PathBuf>> {
    let (d, w) = build_dataset(&cfg.dataset).map_err(|e| e.in_stage("generate"))?;
    let path = out.join("dataset.rgd");
    write_dataset(&path, &d)?;
    let mut paths = vec![path];
    if let Some(w) = w {
        let wp = out.join("whitening.rgw");
        write_whitening(&wp, &w)?;
        paths.push(wp);
    }
    log.event(
        "generated",
        &[
            ("task", cfg.dataset.task.name().into()),
            ("train", d.train.len().to_string()),
            ("valid", d.valid.len().to_string()),
            ("test", d.test.len().to_string()),
            ("dim", d.dim.to_string()),
        ],
    );
    Ok(paths)
}

pub fn cmd_train(cfg: &ExperimentConfig, dataset: &Path, out: &Path, log: &Log) -> Result<Vec<PathBuf>> {
    let d = read_dataset(dataset).map_err(|e| e.in_stage("load dataset"))?;
    let model = build_model(&cfg.model, d.dim, cfg.train.weight_init_std, cfg.train.seed)?;
    let (model, curve) = train_any(model, &d.train, Some(&d.valid), &cfg.train, epoch_logger(log, "model"))
        .map_err(|e| e.in_stage("train"))?;
    let model_path = out.join("model.rgm");
    write_model(&model_path, &model, Some(&cfg.train))?;
    let progress = out.join("progress.csv");
    write_csv_report(
        &progress,
        &["epoch", "train_loss", "valid_loss"],
        curve.iter().map(|s| {
            vec![
                s.epoch.to_string(),
                s.train_loss.to_string(),
                s.valid_loss.map_or(String::new(), |v| v.to_string()),
            ]
        }),
    )?;
    Ok(vec![model_path, progress])
}

pub fn cmd_eval(cfg: &ExperimentConfig, model: &Path, dataset: &Path, out: &Path, log: &Log) -> Result<Vec<PathBuf>> {
    let m = read_model(model).map_err(|e| e.in_stage("load model"))?.model;
    let d = read_dataset(dataset).map_err(|e| e.in_stage("load dataset"))?;
    let eval = classify(&m, &d, &cfg.classifier).map_err(|e| e.in_stage("classify"))?;
    log.event(
        "evaluated",
        &[
            ("test_accuracy", format!("{:.4}", eval.report.accuracy)),
            ("valid_accuracy", format!("{:.4}", eval.valid_accuracy)),
        ],
    );
    let path = out.join("eval.json");
    write_json_report(&path, &eval)?;
    Ok(vec![path])
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisSummary {
    pub filters: usize,
    pub degenerate_inputs: usize,
    pub occupied_orientation_bins: usize,
    pub occupied_frequency_bins: usize,
    pub largest_cell_fraction: f64,
    pub groups: Vec<GroupDispersion>,
    pub smoothness: Option<SmoothnessSummary>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothnessSummary {
    pub mean_neighbor_difference: f64,
    pub mean_random_difference: f64,
    pub p_value: f64,
}

impl From<&Smoothness> for SmoothnessSummary {
    fn from(s: &Smoothness) -> Self {
        Self {
            mean_neighbor_difference: s.mean_neighbor(),
            mean_random_difference: s.mean_random(),
            p_value: s.test.p_less,
        }
    }
}

fn grid_for(n: usize) -> (usize, usize) {
    let cols = (n as f64).sqrt().ceil().max(1.0) as usize;
    (n.div_ceil(cols).max(1), cols)
}

fn padded(spectra: &[FilterAnalysis], len: usize) -> Vec<FilterAnalysis> {
    let mut v = spectra.to_vec();
    while v.len() < len {
        v.push(FilterAnalysis::Degenerate {
            filter_index: v.len(),
            peak_magnitude: 0.0,
        });
    }
    v
}

pub fn analyze_model(model: &FactorModel, whitening: Option<&WhiteningTransform>) -> Result<(AnalysisSummary, Vec<FilterAnalysis>, Vec<FilterAnalysis>)> {
    let (sx, sy) = model_spectra(model, whitening)?;
    let side = (whitening.map_or(model.input_dim(), |w| w.pixels()) as f64).sqrt().round() as usize;
    let hist = property_histograms(&sx, HistogramBins::for_patch(side))?;
    let smoothness = match model.core.kind() {
        CoreKind::Topographic {
            grid_rows,
            grid_cols,
            wraparound,
            ..
        } => Some(SmoothnessSummary::from(&topographic_smoothness(&sx, *grid_rows, *grid_cols, *wraparound)?)),
        _ => None,
    };
    let total = hist.total();
    let summary = AnalysisSummary {
        filters: sx.len(),
        degenerate_inputs: sx.len() - total,
        occupied_orientation_bins: hist.occupied_orientations(),
        occupied_frequency_bins: hist.occupied_frequencies(),
        largest_cell_fraction: if total > 0 { hist.max_cell() as f64 / total as f64 } else { 0.0 },
        groups: if matches!(model.core.kind(), CoreKind::Grouped { .. }) {
            group_dispersion(&model.core, &sx)
        } else {
            Vec::new()
        },
        smoothness,
    };
    Ok((summary, sx, sy))
}

pub fn cmd_analyze(model: &Path, whitening: Option<&Path>, out: &Path, log: &Log) -> Result<Vec<PathBuf>> {
    let AnyModel::Factor(m) = read_model(model).map_err(|e| e.in_stage("load model"))?.model else {
        return Err(Error::Unsupported("analysis covers gated factor models only".into()));
    };
    let w = whitening.map(read_whitening).transpose()?;
    let (summary, sx, sy) = analyze_model(&m, w.as_ref()).map_err(|e| e.in_stage("analyze"))?;
    let side = (w.as_ref().map_or(m.input_dim(), |w| w.pixels()) as f64).sqrt().round() as usize;
    let mut paths = Vec::new();
    let mut emit = |name: &str| {
        let p = out.join(name);
        paths.push(p.clone());
        p
    };
    write_spectra_csv(emit("spectra_x.csv"), &sx)?;
    write_spectra_csv(emit("spectra_y.csv"), &sy)?;
    let hist = property_histograms(&sx, HistogramBins::for_patch(side))?;
    write_csv_report(
        emit("histogram.csv"),
        &["frequency_bin", "orientation_bin", "count"],
        hist.counts.iter().enumerate().flat_map(|(f, row)| {
            row.iter()
                .enumerate()
                .map(move |(o, c)| vec![f.to_string(), o.to_string(), c.to_string()])
        }),
    )?;
    if m.core.kind().is_symmetric() {
        write_phase_differences_csv(emit("phase_differences.csv"), &phase_difference_table(&m, w.as_ref())?)?;
    }
    let fx = filters_as_patches(&m.wx, w.as_ref())?;
    let fy = filters_as_patches(&m.wy, w.as_ref())?;
    render_mosaic(&fx)?.write(emit("filters_x.pgm"))?;
    render_mosaic(&fy)?.write(emit("filters_y.pgm"))?;
    let (rows, cols) = match m.core.kind() {
        CoreKind::Topographic { grid_rows, grid_cols, .. } => {
            render_topographic_map(&fx, *grid_rows, *grid_cols)?.write(emit("topographic_x.pgm"))?;
            (*grid_rows, *grid_cols)
        }
        _ => grid_for(sx.len()),
    };
    let grid = padded(&sx, rows * cols);
    let cell = 8;
    render_property_map(&grid, Property::Frequency { max: side as f64 / 2.0 }, rows, cols, cell)?
        .write(emit("frequency_map.pgm"))?;
    render_property_map(&grid, Property::Orientation, rows, cols, cell)?.write(emit("orientation_map.ppm"))?;
    render_property_map(&grid, Property::Phase, rows, cols, cell)?.write(emit("phase_map.ppm"))?;
    write_json_report(emit("analysis.json"), &summary)?;
    log.event(
        "analyzed",
        &[
            ("filters", summary.filters.to_string()),
            ("degenerate", summary.degenerate_inputs.to_string()),
            ("orientation_bins", summary.occupied_orientation_bins.to_string()),
            ("frequency_bins", summary.occupied_frequency_bins.to_string()),
        ],
    );
    Ok(paths)
}

// ---- Table 1 and accuracy-vs-size curves ----

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Entry {
    pub task: String,
    pub core_kind: String,
    pub num_filters: usize,
    /// Filter count of the parameter-matched counterpart.
    pub equivalent_filters: usize,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveEntry {
    pub model: String,
    pub train_size: usize,
    pub seed: u64,
    pub accuracy: f64,
}

fn task_spec(base: &DatasetSpec, task: &TaskSpec) -> DatasetSpec {
    DatasetSpec {
        task: task.clone(),
        ..base.clone()
    }
}

pub fn run_table1(cfg: &ExperimentConfig, t: &Table1Config, log: &Log) -> Result<Vec<Table1Entry>> {
    let mut out = Vec::new();
    for task in &t.tasks {
        let spec = task_spec(&cfg.dataset, task);
        let d = generate(&spec).map_err(|e| e.in_stage(format!("generate {}", task.name())))?;
        let dims = ModelDims {
            input_dim: d.dim,
            output_dim: d.dim,
            hidden: t.hidden,
        };
        for row in &t.rows {
            let grouped = match row.grouped {
                Some(g) => g,
                None => parameter_equivalence(row.diagonal, t.group_size, dims, t.equivalence)?,
            };
            for (core, f, eq) in [
                (CoreKind::Diagonal, row.diagonal, grouped),
                (CoreKind::Grouped { group_size: t.group_size }, grouped, row.diagonal),
            ] {
                let mc = ModelConfig::Gated {
                    core: core.clone(),
                    num_factors: f,
                    hidden: t.hidden,
                };
                let tag = format!("{}/{}/{f}", task.name(), core.name());
                let (_, eval) = train_and_classify(&mc, &d, &cfg.train, &cfg.classifier, log, &tag)?;
                out.push(Table1Entry {
                    task: task.name().into(),
                    core_kind: core.name().into(),
                    num_filters: f,
                    equivalent_filters: eq,
                    accuracy: eval.report.accuracy,
                });
            }
        }
    }
    Ok(out)
}

/// Gated (diagonal core) versus square pooling on translations, over
/// training-set sizes and seeds. Smaller sizes use the head of the largest
/// training split.
pub fn run_curves(cfg: &ExperimentConfig, t: &Table1Config, log: &Log) -> Result<Vec<CurveEntry>> {
    let Some(c) = &t.curves else {
        return Ok(Vec::new());
    };
    let largest = *c.train_sizes.iter().max().expect("validated nonempty");
    let mut out = Vec::new();
    for &seed in &c.seeds {
        let mut spec = task_spec(&cfg.dataset, &TaskSpec::translation());
        spec.seed = seed;
        spec.counts.train = largest;
        let full = generate(&spec).map_err(|e| e.in_stage("generate curves"))?;
        for &n in &c.train_sizes {
            let d = Dataset {
                train: full.train.head(n),
                ..full.clone()
            };
            let models = [
                (
                    "gated",
                    ModelConfig::Gated {
                        core: CoreKind::Diagonal,
                        num_factors: c.num_factors,
                        hidden: t.hidden,
                    },
                    cfg.train.clone(),
                ),
                (
                    "square_pooling",
                    ModelConfig::SquarePooling {
                        filters: c.num_factors,
                        hidden: t.hidden,
                    },
                    c.pooling_train.clone().unwrap_or_else(|| cfg.train.clone()),
                ),
            ];
            for (name, mc, mut tc) in models {
                tc.seed = seed;
                if c.equal_updates {
                    tc.epochs = curve_epochs(tc.epochs, largest, n);
                }
                let tag = format!("{name}/n{n}/s{seed}");
                let (_, eval) = train_and_classify(&mc, &d, &tc, &cfg.classifier, log, &tag)?;
                out.push(CurveEntry {
                    model: name.into(),
                    train_size: n,
                    seed,
                    accuracy: eval.report.accuracy,
                });
            }
        }
    }
    Ok(out)
}

/// Epochs giving a `size`-pair split as many minibatch updates as
/// `epochs` over the `largest` split (rounded up).
pub fn curve_epochs(epochs: usize, largest: usize, size: usize) -> usize {
    (epochs * largest).div_ceil(size.max(1))
}

/// Mean accuracy per `(model, train_size)`, in first-seen order.
pub fn mean_curves(entries: &[CurveEntry]) -> Vec<(String, usize, f64)> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for e in entries {
        let k = (e.model.clone(), e.train_size);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(m, n)| {
            let accs: Vec<f64> = entries
                .iter()
                .filter(|e| e.model == m && e.train_size == n)
                .map(|e| e.accuracy)
                .collect();
            let mean = accs.iter().sum::<f64>() / accs.len() as f64;
            (m, n, mean)
        })
        .collect()
}

pub fn cmd_reproduce_table1(cfg: &ExperimentConfig, out: &Path, log: &Log) -> Result<Vec<PathBuf>> {
    let t = cfg
        .table1
        .as_ref()
        .ok_or_else(|| Error::Config("reproduce-table1 needs a table1 section".into()))?;
    let rows = run_table1(cfg, t, log)?;
    let table = out.join("table1.csv");
    write_csv_report(
        &table,
        &["task", "core_kind", "num_filters", "equivalent_filters", "accuracy"],
        rows.iter().map(|r| {
            vec![
                r.task.clone(),
                r.core_kind.clone(),
                r.num_filters.to_string(),
                r.equivalent_filters.to_string(),
                format!("{:.4}", r.accuracy),
            ]
        }),
    )?;
    let mut paths = vec![table];
    if t.curves.is_some() {
        let entries = run_curves(cfg, t, log)?;
        let curves = out.join("curves.csv");
        write_csv_report(
            &curves,
            &["model", "train_size", "accuracy"],
            mean_curves(&entries)
                .into_iter()
                .map(|(m, n, a)| vec![m, n.to_string(), format!("{a:.4}")]),
        )?;
        let by_seed = out.join("curves_by_seed.csv");
        write_csv_report(
            &by_seed,
            &["model", "train_size", "seed", "accuracy"],
            entries.iter().map(|e| {
                vec![
                    e.model.clone(),
                    e.train_size.to_string(),
                    e.seed.to_string(),
                    format!("{:.4}", e.accuracy),
                ]
            }),
        )?;
        paths.push(curves);
        paths.push(by_seed);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_epochs_keep_update_count() {
        assert_eq!(curve_epochs(40, 20_000, 20_000), 40);
        assert_eq!(curve_epochs(40, 20_000, 2_000), 400);
        assert_eq!(curve_epochs(40, 20_000, 3_000), 267);
    }

    #[test]
    fn mean_curves_average_over_seeds() {
        let e = |m: &str, n, seed, accuracy| CurveEntry {
            model: m.into(),
            train_size: n,
            seed,
            accuracy,
        };
        let rows = mean_curves(&[e("a", 10, 1, 0.5), e("b", 10, 1, 0.2), e("a", 10, 2, 0.7)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, "a");
        assert!((rows[0].2 - 0.6).abs() < 1e-12);
    }

    #[test]
    fn grid_fits_all_filters() {
        for n in 1..50 {
            let (r, c) = grid_for(n);
            assert!(r * c >= n && (r - 1) * c < n);
        }
    }
}
