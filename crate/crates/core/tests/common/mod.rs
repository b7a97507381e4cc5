//! Checks shared by the property tests and the acceptance suite. Each check
//! returns the worst measured error so callers can assert or report it.
#![allow(dead_code)]

use groupgate::datagen::{generate, DatasetSpec, SplitCounts, TaskSpec};
use groupgate::io::{decode_dataset, decode_model, encode_dataset, encode_model, AnyModel};
use groupgate::math::{dft2, fit_whitening, Matrix, Rng};
use groupgate::model::{
    compose_tensor, train, Autoencoder, CoreKind, CoreStructure, FactorModel, SquarePoolingModel, TrainConfig,
};

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gaussian(0.0, 1.0))
}

/// Tiny model of every core kind: 5×5 images, K = 3.
pub fn tiny_cores() -> Vec<CoreStructure> {
    vec![
        CoreStructure::diagonal(6).unwrap(),
        CoreStructure::grouped(6, 2).unwrap(),
        CoreStructure::asym_grouped(6, 2).unwrap(),
        CoreStructure::topographic(3, 3, 2, true).unwrap(),
    ]
}

/// Per-tensor relative error `‖g_fd − g‖ / max(‖g_fd‖, ‖g‖)` of the analytic
/// gradient against central differences.
pub fn gradient_errors<M: Autoencoder>(model: &M, x: &Matrix, y: &Matrix, xc: &Matrix, yc: &Matrix) -> Vec<(String, f64)> {
    const EPS: f64 = 1e-5;
    let (_, grad) = model.loss_and_grad(x, y, xc, yc).unwrap();
    let analytic: Vec<(String, Vec<f64>)> = grad.tensors().into_iter().map(|(n, g)| (n.to_string(), g.to_vec())).collect();
    let mut out = Vec::new();
    for (t, (name, g)) in analytic.iter().enumerate() {
        let mut diff = 0.0;
        let mut norm_fd = 0.0;
        let mut norm_an = 0.0;
        for i in 0..g.len() {
            let mut plus = model.clone();
            plus.tensors_mut()[t].1[i] += EPS;
            let mut minus = model.clone();
            minus.tensors_mut()[t].1[i] -= EPS;
            let fd = (plus.loss(x, y, xc, yc).unwrap() - minus.loss(x, y, xc, yc).unwrap()) / (2.0 * EPS);
            diff += (fd - g[i]).powi(2);
            norm_fd += fd * fd;
            norm_an += g[i] * g[i];
        }
        let scale = norm_fd.sqrt().max(norm_an.sqrt());
        out.push((name.clone(), if scale == 0.0 { 0.0 } else { diff.sqrt() / scale }));
    }
    out
}

/// Worst gradient error over every core kind and square pooling, with noisy
/// inputs and distinct clean targets.
pub fn worst_gradient_error(seed: u64) -> (f64, String) {
    let mut rng = Rng::new(seed);
    let (n, d, k) = (4, 25, 3);
    let x = random_matrix(n, d, &mut rng);
    let y = random_matrix(n, d, &mut rng);
    let xc = random_matrix(n, d, &mut rng);
    let yc = random_matrix(n, d, &mut rng);
    let mut worst = (0.0, String::new());
    let mut note = |label: String, errs: Vec<(String, f64)>| {
        for (t, e) in errs {
            if e >= worst.0 {
                worst = (e, format!("{label}/{t}"));
            }
        }
    };
    for core in tiny_cores() {
        let label = core.kind().name().to_string();
        let mut m = FactorModel::init(core, d, d, k, 0.3, &mut rng).unwrap();
        m.bh.iter_mut().for_each(|b| *b = rng.gaussian(0.0, 0.5));
        m.bx.iter_mut().for_each(|b| *b = rng.gaussian(0.0, 0.5));
        m.by.iter_mut().for_each(|b| *b = rng.gaussian(0.0, 0.5));
        note(label, gradient_errors(&m, &x, &y, &xc, &yc));
    }
    let p = SquarePoolingModel::init(d, 6, k, 0.3, &mut rng).unwrap();
    note("square_pooling".into(), gradient_errors(&p, &x, &y, &xc, &yc));
    worst
}

/// Largest `|E_dense − E_factored| / max(1, |E|)` over random tiny models of
/// every kind, where the dense energy uses the composed tensor and the
/// factored energy is summed here from the raw weights.
pub fn worst_energy_gap(models: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mut worst: f64 = 0.0;
    for m_idx in 0..models {
        let core = tiny_cores()[m_idx % 4].clone();
        let (i, j, k) = (2 + rng.below(5), 2 + rng.below(5), 1 + rng.below(4));
        let m = FactorModel::init(core, i, j, k, 1.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..i).map(|_| rng.gaussian(0.0, 1.0)).collect();
        let y: Vec<f64> = (0..j).map(|_| rng.gaussian(0.0, 1.0)).collect();
        let h: Vec<f64> = (0..k).map(|_| rng.unit()).collect();
        let mut factored = 0.0;
        for t in m.core.triples() {
            let u: f64 = (0..i).map(|a| m.wx[(a, t.input)] * x[a]).sum();
            let v: f64 = (0..j).map(|b| m.wy[(b, t.output)] * y[b]).sum();
            let z: f64 = (0..k).map(|c| m.wh[(t.slot, c)] * h[c]).sum();
            factored += u * v * z;
        }
        let dense = compose_tensor(&m).unwrap().energy(&x, &y, &h);
        worst = worst.max((dense - factored).abs() / factored.abs().max(1.0));
        worst = worst.max((m.energy(&x, &y, &h) - factored).abs() / factored.abs().max(1.0));
    }
    worst
}

/// Largest difference between a grouped core with groups of one and a
/// diagonal core sharing all weights: activations, loss and every gradient.
pub fn grouped_one_vs_diagonal(seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let (n, d, f, k) = (5, 16, 7, 4);
    let diag = FactorModel::init(CoreStructure::diagonal(f).unwrap(), d, d, k, 0.5, &mut rng).unwrap();
    let grouped = FactorModel {
        core: CoreStructure::grouped(f, 1).unwrap(),
        ..diag.clone()
    };
    let x = random_matrix(n, d, &mut rng);
    let y = random_matrix(n, d, &mut rng);
    let mut worst: f64 = diag.infer_batch(&x, &y).unwrap().max_abs_diff(&grouped.infer_batch(&x, &y).unwrap());
    let (ld, gd) = diag.loss_and_grad(&x, &y, &x, &y).unwrap();
    let (lg, gg) = grouped.loss_and_grad(&x, &y, &x, &y).unwrap();
    worst = worst.max((ld - lg).abs());
    for ((_, a), (_, b)) in gd.tensors().into_iter().zip(gg.tensors()) {
        for (p, q) in a.iter().zip(b) {
            worst = worst.max((p - q).abs());
        }
    }
    worst
}

/// Parseval and shift-theorem errors relative to the spectrum energy scale.
pub fn dft_errors(n: usize, shift: (usize, usize), rng: &mut Rng) -> (f64, f64) {
    let img = random_matrix(n, n, rng);
    let spec = dft2(&img).unwrap();
    let pixel_energy = img.frobenius_sq();
    let parseval = (spec.energy() - (n * n) as f64 * pixel_energy).abs() / spec.energy().max(1e-300);
    let (sy, sx) = shift;
    let shifted = Matrix::from_fn(n, n, |r, c| img[((r + n - sy) % n, (c + n - sx) % n)]);
    let s2 = dft2(&shifted).unwrap();
    let scale = spec.energy().sqrt();
    let mut worst: f64 = 0.0;
    for ky in 0..n {
        for kx in 0..n {
            let angle = -2.0 * std::f64::consts::PI * ((kx * sx + ky * sy) % n) as f64 / n as f64;
            let want = spec.at(ky, kx) * num_complex::Complex64::from_polar(1.0, angle);
            worst = worst.max((s2.at(ky, kx) - want).norm() / scale);
        }
    }
    (parseval, worst)
}

/// Worst `|unwhiten(whiten(x)) − x|` for full-variance whitening of
/// correlated data.
pub fn whitening_round_trip(d: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed);
    let mix = random_matrix(d, d, &mut rng);
    let data = random_matrix(4 * d, d, &mut rng).matmul(&mix);
    let w = fit_whitening(&data, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for r in 0..data.rows() {
        let back = w.unwhiten(&w.whiten(data.row(r)));
        for (a, b) in back.iter().zip(data.row(r)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

pub fn small_spec(task: TaskSpec, seed: u64) -> DatasetSpec {
    DatasetSpec {
        task,
        patch_size: 7,
        counts: SplitCounts {
            train: 60,
            valid: 20,
            test: 20,
        },
        seed,
    }
}

/// Dataset and model encodings survive decode and re-encode byte for byte.
pub fn files_round_trip(seed: u64) -> bool {
    let d = generate(&small_spec(TaskSpec::rotation(), seed)).unwrap();
    let bytes = encode_dataset(&d);
    let back = decode_dataset(&bytes).unwrap();
    if back != d || encode_dataset(&back) != bytes {
        return false;
    }
    let mut rng = Rng::new(seed);
    let mut models: Vec<AnyModel> = tiny_cores()
        .into_iter()
        .map(|c| AnyModel::Factor(FactorModel::init(c, 25, 25, 3, 0.1, &mut rng).unwrap()))
        .collect();
    models.push(AnyModel::SquarePooling(SquarePoolingModel::init(25, 6, 3, 0.1, &mut rng).unwrap()));
    let cfg = TrainConfig::default();
    models.iter().all(|m| {
        let bytes = encode_model(m, Some(&cfg));
        let back = decode_model(&bytes).unwrap();
        back.model == *m && encode_model(&back.model, back.header.train_config.as_ref()) == bytes
    })
}

/// Generates data and trains twice from the same seed; true when both the
/// data and the trained parameters agree bitwise.
pub fn training_is_deterministic(seed: u64) -> bool {
    let run = || {
        let d = generate(&small_spec(TaskSpec::translation(), seed)).unwrap();
        let mut rng = Rng::new(seed).substream(20, 0);
        let m = FactorModel::init(CoreStructure::grouped(12, 3).unwrap(), d.dim, d.dim, 5, 0.05, &mut rng).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.05,
            minibatch_size: 16,
            epochs: 3,
            noise: groupgate::model::Noise::Gaussian { std: 0.1 },
            seed,
            ..TrainConfig::default()
        };
        let out = train(m, &d.train, Some(&d.valid), &cfg).unwrap();
        (encode_dataset(&d), encode_model(&AnyModel::Factor(out.model), Some(&cfg)))
    };
    run() == run()
}

/// Products predicted by the counting law for a core.
pub fn expected_products(core: &CoreKind, f: usize) -> usize {
    match core {
        CoreKind::Diagonal => f,
        CoreKind::Grouped { group_size } => {
            let full = f / group_size;
            let rest = f % group_size;
            full * group_size * group_size + rest * rest
        }
        CoreKind::AsymGrouped { .. } => f,
        CoreKind::Topographic { grid_rows, grid_cols, neighborhood, wraparound } => {
            if *wraparound {
                grid_rows * grid_cols * neighborhood.pow(4)
            } else {
                // clipped neighborhoods: Σ over cells of (rows covered · cols covered)²
                let span = |len: usize, at: usize| {
                    let lo = at as i64 + window_lo(*neighborhood);
                    let hi = lo + *neighborhood as i64 - 1;
                    (hi.min(len as i64 - 1) - lo.max(0) + 1) as usize
                };
                let mut total = 0;
                for r in 0..*grid_rows {
                    for c in 0..*grid_cols {
                        total += (span(*grid_rows, r) * span(*grid_cols, c)).pow(2);
                    }
                }
                total
            }
        }
    }
}

/// Offset of the first cell of an `n`-wide window relative to its anchor,
/// centered with the extra cell after the anchor for even `n`.
fn window_lo(n: usize) -> i64 {
    -((n as i64 - 1) / 2)
}

/// Exhaustive product-count check; returns the mismatches found.
pub fn product_count_mismatches() -> Vec<String> {
    let mut bad = Vec::new();
    for gs in 1..=6 {
        for f in 1..=40 {
            for kind in [CoreKind::Grouped { group_size: gs }, CoreKind::AsymGrouped { group_size: gs }] {
                let s = CoreStructure::new(kind.clone(), f).unwrap();
                let want: usize = match kind {
                    CoreKind::AsymGrouped { .. } => s.groups().iter().map(|g| g.outputs.len()).sum(),
                    _ => s.groups().iter().map(|g| g.inputs.len().pow(2)).sum(),
                };
                if s.num_products() != want || s.num_products() != expected_products(&kind, f) {
                    bad.push(format!("{} gs={gs} F={f}: {}", kind.name(), s.num_products()));
                }
            }
        }
    }
    for rows in 1..=8 {
        for cols in 1..=8 {
            for n in 1..=rows.min(cols) {
                for wrap in [false, true] {
                    let s = CoreStructure::topographic(rows, cols, n, wrap).unwrap();
                    let sum_sq: usize = s.groups().iter().map(|g| g.inputs.len().pow(2)).sum();
                    let want = expected_products(s.kind(), rows * cols);
                    let law_ok = !wrap || s.num_products() == s.groups().len() * n.pow(4);
                    if s.num_products() != sum_sq || s.num_products() != want || !law_ok {
                        bad.push(format!("topographic {rows}x{cols} n={n} wrap={wrap}: {}", s.num_products()));
                    }
                }
            }
        }
    }
    bad
}
