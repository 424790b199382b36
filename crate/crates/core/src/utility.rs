//! Train-on-synthetic, test-on-real harness: time-of-use classification and
//! short-term forecasting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_solve, squared_distance, Matrix};
use crate::model::{AlignedDataset, TimeOfUse, SLOTS_PER_WEEK};
use crate::seed::{derive_seed, subsample_indices};
use crate::stats::{mean, std_dev, Spread};
use crate::transforms::{feature_vector, znorm_instance};

/// Accuracy and unweighted mean of per-label F1 scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Classification<L> {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub predictions: Vec<L>,
}

/// Macro-F1 over the union of true and predicted labels; a label never
/// predicted (or never present) contributes F1 = 0.
pub fn macro_f1<L: Ord + Copy>(truth: &[L], pred: &[L]) -> f64 {
    let mut counts: BTreeMap<L, (usize, usize, usize)> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            counts.entry(t).or_default().0 += 1;
        } else {
            counts.entry(p).or_default().1 += 1;
            counts.entry(t).or_default().2 += 1;
        }
    }
    if counts.is_empty() {
        return 0.0;
    }
    let total: f64 = counts
        .values()
        .map(|&(tp, fp, fneg)| {
            let denom = 2 * tp + fp + fneg;
            if tp == 0 || denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        })
        .sum();
    total / counts.len() as f64
}

/// Euclidean k-NN majority vote. Neighbours are ordered by distance then training
/// index; a vote tie goes to the label whose first neighbour comes earliest.
pub fn knn_classify<L: Ord + Copy>(
    train_x: &[&[f64]],
    train_y: &[L],
    test_x: &[&[f64]],
    test_y: &[L],
    k: usize,
) -> Result<Classification<L>> {
    if train_x.is_empty() {
        return Err(Error::EmptySelection("k-NN needs a training set"));
    }
    if k == 0 || k > train_x.len() {
        return Err(Error::InvalidArgument(format!("k = {k} with {} training points", train_x.len())));
    }
    let d = train_x[0].len();
    if let Some(v) = train_x.iter().chain(test_x).find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    let predictions: Vec<L> = test_x
        .iter()
        .map(|q| {
            let mut order: Vec<(f64, usize)> = train_x.iter().enumerate().map(|(i, x)| (squared_distance(x, q), i)).collect();
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes: Vec<(L, usize, usize)> = Vec::new();
            for (rank, &(_, i)) in order[..k].iter().enumerate() {
                match votes.iter_mut().find(|v| v.0 == train_y[i]) {
                    Some(v) => v.1 += 1,
                    None => votes.push((train_y[i], 1, rank)),
                }
            }
            votes.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2))).map(|v| v.0).expect("k >= 1")
        })
        .collect();
    let correct = predictions.iter().zip(test_y).filter(|(p, t)| p == t).count();
    Ok(Classification {
        accuracy: if test_y.is_empty() { 0.0 } else { correct as f64 / test_y.len() as f64 },
        macro_f1: macro_f1(test_y, &predictions),
        predictions,
    })
}

/// Time-of-use classification on 104-dimensional curve features.
pub fn knn_classify_tou(train: &AlignedDataset, test: &AlignedDataset, k: usize) -> Result<Classification<TimeOfUse>> {
    let tx: Vec<Vec<f64>> = train.curves.iter().map(feature_vector).collect();
    let ty: Vec<TimeOfUse> = train.curves.iter().map(|c| c.tou).collect();
    let qx: Vec<Vec<f64>> = test.curves.iter().map(feature_vector).collect();
    let qy: Vec<TimeOfUse> = test.curves.iter().map(|c| c.tou).collect();
    let tr: Vec<&[f64]> = tx.iter().map(|v| v.as_slice()).collect();
    let qr: Vec<&[f64]> = qx.iter().map(|v| v.as_slice()).collect();
    knn_classify(&tr, &ty, &qr, &qy, k)
}

/// Repeats the values one week before the forecast origin:
/// `x̂[t+1..t+H] = x[t-336+1..t-336+H]`.
pub fn forecast_repeat_week(history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    if horizon > SLOTS_PER_WEEK {
        return Err(Error::InvalidArgument(format!("horizon {horizon} exceeds one week ({SLOTS_PER_WEEK} slots)")));
    }
    if history.len() < SLOTS_PER_WEEK {
        return Err(Error::InsufficientData { what: "weekly repeat history", needed: SLOTS_PER_WEEK, got: history.len() });
    }
    let from = history.len() - SLOTS_PER_WEEK;
    Ok(history[from..from + horizon].to_vec())
}

/// Ridge solution `(XᵀWX + λI)⁻¹ XᵀWY` with optional per-row weights.
pub fn fit_linear(x: &Matrix, y: &Matrix, weights: Option<&[f64]>, lambda: f64) -> Result<Matrix> {
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidArgument("ridge lambda must be finite and non-negative".into()));
    }
    if x.rows() != y.rows() {
        return Err(Error::DimensionMismatch { expected: x.rows(), got: y.rows() });
    }
    let (n, p, h) = (x.rows(), x.cols(), y.cols());
    let mut xtx = Matrix::zeros(p, p);
    let mut xty = Matrix::zeros(p, h);
    for r in 0..n {
        let w = weights.map_or(1.0, |w| w[r]);
        let xr = x.row(r);
        let yr = y.row(r);
        for i in 0..p {
            let a = w * xr[i];
            if a == 0.0 {
                continue;
            }
            for j in i..p {
                xtx[(i, j)] += a * xr[j];
            }
            for (j, yv) in yr.iter().enumerate() {
                xty[(i, j)] += a * yv;
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            xtx[(i, j)] = xtx[(j, i)];
        }
        xtx[(i, i)] += lambda;
    }
    cholesky_solve(&xtx, &xty)
}

/// Window moments used for per-window normalization; a flat window uses unit scale.
fn window_moments(lookback: &[f64]) -> (f64, f64) {
    let m = mean(lookback);
    let s = std_dev(lookback);
    (m, if s > 1e-12 { s } else { 1.0 })
}

/// A linear map from `lookback` normalized inputs to `horizon` outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeForecaster {
    pub lookback: usize,
    pub horizon: usize,
    pub lambda: f64,
    /// `lookback × horizon`.
    pub coefficients: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingWindow {
    pub lookback: Vec<f64>,
    pub target: Vec<f64>,
}

impl RidgeForecaster {
    pub fn fit(windows: &[TrainingWindow], lambda: f64) -> Result<Self> {
        Self::fit_weighted(windows, None, lambda)
    }

    /// Each window is normalized by its lookback mean and std before fitting.
    pub fn fit_weighted(windows: &[TrainingWindow], weights: Option<&[f64]>, lambda: f64) -> Result<Self> {
        let first = windows.first().ok_or(Error::EmptySelection("ridge forecaster needs training windows"))?;
        let (l, h) = (first.lookback.len(), first.target.len());
        if l == 0 || h == 0 {
            return Err(Error::InvalidArgument("empty lookback or horizon".into()));
        }
        let mut xd = Vec::with_capacity(windows.len() * l);
        let mut yd = Vec::with_capacity(windows.len() * h);
        for w in windows {
            if w.lookback.len() != l || w.target.len() != h {
                return Err(Error::DimensionMismatch { expected: l, got: w.lookback.len() });
            }
            let (m, s) = window_moments(&w.lookback);
            xd.extend(w.lookback.iter().map(|v| (v - m) / s));
            yd.extend(w.target.iter().map(|v| (v - m) / s));
        }
        let x = Matrix::from_rows(windows.len(), l, xd);
        let y = Matrix::from_rows(windows.len(), h, yd);
        let coefficients = fit_linear(&x, &y, weights, lambda)?;
        Ok(Self { lookback: l, horizon: h, lambda, coefficients })
    }

    pub fn predict(&self, lookback: &[f64]) -> Result<Vec<f64>> {
        if lookback.len() != self.lookback {
            return Err(Error::DimensionMismatch { expected: self.lookback, got: lookback.len() });
        }
        let (m, s) = window_moments(lookback);
        let z: Vec<f64> = lookback.iter().map(|v| (v - m) / s).collect();
        Ok((0..self.horizon)
            .map(|j| m + s * (0..self.lookback).map(|i| z[i] * self.coefficients[(i, j)]).sum::<f64>())
            .collect())
    }
}

pub fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64
}

pub fn mae(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64
}

/// Sliding `(lookback, target)` windows with the given stride.
pub fn training_windows(series: &[&[f64]], lookback: usize, horizon: usize, stride: usize) -> Vec<TrainingWindow> {
    let stride = stride.max(1);
    let mut out = Vec::new();
    for s in series {
        let mut start = 0;
        while start + lookback + horizon <= s.len() {
            out.push(TrainingWindow {
                lookback: s[start..start + lookback].to_vec(),
                target: s[start + lookback..start + lookback + horizon].to_vec(),
            });
            start += stride;
        }
    }
    out
}

/// Fraction of each test series reserved for forecast targets.
pub const EVAL_FRACTION: f64 = 0.3;

/// Forecast origins (index of the first target slot) over the final 30% of a
/// series, stepping by `horizon`, with at least `min_history` slots before each origin.
pub fn evaluation_origins(len: usize, horizon: usize, min_history: usize) -> Vec<usize> {
    let first = len - libm::floor(len as f64 * EVAL_FRACTION) as usize;
    let mut origin = first.max(min_history);
    let mut out = Vec::new();
    while origin + horizon <= len {
        out.push(origin);
        origin += horizon.max(1);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TstrConfig {
    pub lookback: usize,
    pub horizons: Vec<usize>,
    pub train_stride: usize,
    /// Upper bound on windows per fit, drawn by seeded subsampling.
    pub max_train_windows: usize,
    pub ridge_lambda: f64,
    pub k: usize,
    /// Seeded subsamples averaged per training source.
    pub repeats: usize,
    /// Optional cap on the common training-set size.
    pub train_size: Option<usize>,
}

impl Default for TstrConfig {
    fn default() -> Self {
        Self {
            lookback: 720,
            horizons: vec![48, 96, 192, 336],
            train_stride: 48,
            max_train_windows: 1000,
            ridge_lambda: 1.0,
            k: 5,
            repeats: 5,
            train_size: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceErrors {
    pub mse: Spread,
    pub mae: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HorizonResult {
    pub horizon: usize,
    pub n_windows: usize,
    /// Repeat-last-week baseline; absent for horizons above one week.
    pub baseline: Option<(f64, f64)>,
    pub synthetic: SourceErrors,
    pub real: SourceErrors,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceClassification {
    pub accuracy: Spread,
    pub macro_f1: Spread,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UtilityResult {
    pub train_size: usize,
    pub horizons: Vec<HorizonResult>,
    pub classification_synthetic: SourceClassification,
    pub classification_real: SourceClassification,
    /// Accuracy and macro-F1 of predicting the majority class of the real training set.
    pub majority_baseline: (f64, f64),
    pub notes: Vec<String>,
}

fn normalized_series(ds: &AlignedDataset) -> Vec<Vec<f64>> {
    ds.curves.iter().filter_map(|c| znorm_instance(&c.values).ok()).map(|n| n.series).collect()
}

struct RunMetrics {
    errors: Vec<(f64, f64)>,
    accuracy: f64,
    macro_f1: f64,
}

fn run_once(
    train: &AlignedDataset,
    test: &AlignedDataset,
    test_series: &[Vec<f64>],
    cfg: &TstrConfig,
    seed: u64,
) -> Result<RunMetrics> {
    let cls = knn_classify_tou(train, test, cfg.k.min(train.len()))?;
    let series = normalized_series(train);
    let refs: Vec<&[f64]> = series.iter().map(|s| s.as_slice()).collect();
    let mut errors = Vec::with_capacity(cfg.horizons.len());
    for &h in &cfg.horizons {
        let mut windows = training_windows(&refs, cfg.lookback, h, cfg.train_stride);
        if windows.len() > cfg.max_train_windows {
            let keep = subsample_indices(windows.len(), cfg.max_train_windows, derive_seed(seed, &format!("windows/{h}")));
            windows = keep.into_iter().map(|i| windows[i].clone()).collect();
        }
        let model = RidgeForecaster::fit(&windows, cfg.ridge_lambda)?;
        let (mut se, mut ae, mut n) = (0.0, 0.0, 0usize);
        for s in test_series {
            for origin in evaluation_origins(s.len(), h, cfg.lookback.max(SLOTS_PER_WEEK)) {
                let pred = model.predict(&s[origin - cfg.lookback..origin])?;
                let truth = &s[origin..origin + h];
                se += mse(&pred, truth) * h as f64;
                ae += mae(&pred, truth) * h as f64;
                n += h;
            }
        }
        if n == 0 {
            return Err(Error::InsufficientData { what: "forecast evaluation windows", needed: 1, got: 0 });
        }
        errors.push((se / n as f64, ae / n as f64));
    }
    Ok(RunMetrics { errors, accuracy: cls.accuracy, macro_f1: cls.macro_f1 })
}

/// Trains on `train_source` (TSTR) and on `real_train` (TRTR), both restricted to a
/// common size by seeded subsampling, and evaluates both on `real_test`.
pub fn run_tstr(
    train_source: &AlignedDataset,
    real_train: &AlignedDataset,
    real_test: &AlignedDataset,
    cfg: &TstrConfig,
    seed: u64,
) -> Result<UtilityResult> {
    if real_test.is_empty() {
        return Err(Error::EmptySelection("TSTR needs a non-empty real test set"));
    }
    if cfg.horizons.is_empty() {
        return Err(Error::InvalidArgument("empty forecast horizon grid".into()));
    }
    let mut size = train_source.len().min(real_train.len());
    if let Some(cap) = cfg.train_size {
        size = size.min(cap);
    }
    if size == 0 {
        return Err(Error::EmptySelection("TSTR needs non-empty training sets"));
    }
    let test_series = normalized_series(real_test);
    let mut notes = Vec::new();

    let mut per_source = Vec::new();
    for (label, src) in [("synthetic", train_source), ("real", real_train)] {
        let reps = if src.len() > size { cfg.repeats.max(1) } else { 1 };
        let mut runs = Vec::with_capacity(reps);
        for rep in 0..reps {
            let run_seed = derive_seed(seed, &format!("tstr/{label}/{rep}"));
            let subset = src.select(&subsample_indices(src.len(), size, run_seed));
            runs.push(run_once(&subset, real_test, &test_series, cfg, run_seed)?);
        }
        per_source.push(runs);
    }

    let classify = |runs: &[RunMetrics]| SourceClassification {
        accuracy: Spread::of(&runs.iter().map(|r| r.accuracy).collect::<Vec<_>>()),
        macro_f1: Spread::of(&runs.iter().map(|r| r.macro_f1).collect::<Vec<_>>()),
    };
    let source_errors = |runs: &[RunMetrics], i: usize| SourceErrors {
        mse: Spread::of(&runs.iter().map(|r| r.errors[i].0).collect::<Vec<_>>()),
        mae: Spread::of(&runs.iter().map(|r| r.errors[i].1).collect::<Vec<_>>()),
    };

    let mut horizons = Vec::new();
    for (i, &h) in cfg.horizons.iter().enumerate() {
        let mut n_windows = 0;
        let baseline = if h <= SLOTS_PER_WEEK {
            let (mut se, mut ae) = (0.0, 0.0);
            for s in &test_series {
                for origin in evaluation_origins(s.len(), h, cfg.lookback.max(SLOTS_PER_WEEK)) {
                    let pred = forecast_repeat_week(&s[..origin], h)?;
                    se += mse(&pred, &s[origin..origin + h]);
                    ae += mae(&pred, &s[origin..origin + h]);
                    n_windows += 1;
                }
            }
            Some((se / n_windows as f64, ae / n_windows as f64))
        } else {
            notes.push(format!("horizon {h}: weekly repeat baseline needs H <= {SLOTS_PER_WEEK}"));
            None
        };
        horizons.push(HorizonResult {
            horizon: h,
            n_windows,
            baseline,
            synthetic: source_errors(&per_source[0], i),
            real: source_errors(&per_source[1], i),
        });
    }

    let mut freq: BTreeMap<TimeOfUse, usize> = BTreeMap::new();
    for c in &real_train.curves {
        *freq.entry(c.tou).or_default() += 1;
    }
    let majority = freq.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).map(|(l, _)| *l).unwrap_or(TimeOfUse::Misc);
    let truth: Vec<TimeOfUse> = real_test.curves.iter().map(|c| c.tou).collect();
    let pred = vec![majority; truth.len()];
    let acc = truth.iter().filter(|t| **t == majority).count() as f64 / truth.len() as f64;

    Ok(UtilityResult {
        train_size: size,
        horizons,
        classification_synthetic: classify(&per_source[0]),
        classification_real: classify(&per_source[1]),
        majority_baseline: (acc, macro_f1(&truth, &pred)),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|x| x.as_slice()).collect()
    }

    #[test]
    fn knn_exact_match_k1() {
        let tx = vec![vec![0.0, 0.0], vec![5.0, 5.0], vec![9.0, 0.0]];
        let ty = ['a', 'b', 'c'];
        let c = knn_classify(&refs(&tx), &ty, &refs(&[vec![5.0, 5.0]]), &['b'], 1).unwrap();
        assert_eq!(c.predictions, ['b']);
        assert_eq!(c.accuracy, 1.0);
    }

    #[test]
    fn knn_three_clusters() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let centers = [[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]];
        let mut tx = Vec::new();
        let mut ty = Vec::new();
        let mut qx = Vec::new();
        let mut qy = Vec::new();
        for (label, c) in centers.iter().enumerate() {
            for i in 0..20 {
                let p = vec![c[0] + r.random_range(-1.0..1.0), c[1] + r.random_range(-1.0..1.0)];
                if i < 15 {
                    tx.push(p);
                    ty.push(label);
                } else {
                    qx.push(p);
                    qy.push(label);
                }
            }
        }
        let c = knn_classify(&refs(&tx), &ty, &refs(&qx), &qy, 5).unwrap();
        assert_eq!((c.accuracy, c.macro_f1), (1.0, 1.0));
    }

    #[test]
    fn knn_errors() {
        let empty: Vec<&[f64]> = Vec::new();
        assert!(knn_classify::<u8>(&empty, &[], &empty, &[], 1).is_err());
        let tx = vec![vec![0.0]];
        assert!(knn_classify(&refs(&tx), &[0u8], &refs(&tx), &[0u8], 2).is_err());
    }

    #[test]
    fn knn_permutation_invariant() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let tx: Vec<Vec<f64>> = (0..30).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let ty: Vec<u8> = (0..30).map(|i| (i % 3) as u8).collect();
        let qx: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let qy: Vec<u8> = (0..10).map(|i| (i % 3) as u8).collect();
        let a = knn_classify(&refs(&tx), &ty, &refs(&qx), &qy, 5).unwrap();
        let perm: Vec<usize> = (0..30).rev().collect();
        let ptx: Vec<Vec<f64>> = perm.iter().map(|&i| tx[i].clone()).collect();
        let pty: Vec<u8> = perm.iter().map(|&i| ty[i]).collect();
        let b = knn_classify(&refs(&ptx), &pty, &refs(&qx), &qy, 5).unwrap();
        assert_eq!(a.predictions, b.predictions);
    }

    #[test]
    fn majority_macro_f1_anchor() {
        // 60.7% majority out of 3 classes: F1 of the majority class is
        // 2p / (1 + p) and the other two are 0.
        let mut truth = vec![0u8; 607];
        truth.extend(vec![1u8; 250]);
        truth.extend(vec![2u8; 143]);
        let pred = vec![0u8; 1000];
        let f1 = macro_f1(&truth, &pred);
        assert!((f1 - 0.252).abs() < 5e-4, "{f1}");
    }

    #[test]
    fn repeat_week_indexing() {
        let history: Vec<f64> = (1..=400).map(f64::from).collect();
        assert_eq!(forecast_repeat_week(&history, 2).unwrap(), [65.0, 66.0]);
        assert!(forecast_repeat_week(&history, 337).is_err());
        assert!(forecast_repeat_week(&history[..300], 2).is_err());
    }

    #[test]
    fn repeat_week_is_exact_on_periodic_series() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let week: Vec<f64> = (0..336).map(|_| r.random_range(0.0..1.0)).collect();
        let s: Vec<f64> = week.iter().cycle().take(336 * 4).copied().collect();
        for h in [48, 96, 192, 336] {
            let origin = 336 * 3;
            let pred = forecast_repeat_week(&s[..origin], h).unwrap();
            assert_eq!(mse(&pred, &s[origin..origin + h]), 0.0);
        }
    }

    /// Least squares by Gauss-Jordan elimination on the normal equations.
    fn gauss_jordan_ls(x: &[Vec<f64>], y: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let p = x[0].len();
        let h = y[0].len();
        let mut aug = vec![vec![0.0; p + h]; p];
        for (xr, yr) in x.iter().zip(y) {
            for i in 0..p {
                for j in 0..p {
                    aug[i][j] += xr[i] * xr[j];
                }
                for j in 0..h {
                    aug[i][p + j] += xr[i] * yr[j];
                }
            }
        }
        for c in 0..p {
            let piv = (c..p).max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs())).unwrap();
            aug.swap(c, piv);
            let d = aug[c][c];
            aug[c].iter_mut().for_each(|v| *v /= d);
            for r in 0..p {
                if r != c {
                    let f = aug[r][c];
                    let row_c = aug[c].clone();
                    aug[r].iter_mut().zip(&row_c).for_each(|(v, w)| *v -= f * w);
                }
            }
        }
        aug.iter().map(|row| row[p..].to_vec()).collect()
    }

    #[test]
    fn ridge_zero_lambda_matches_least_squares() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let (n, p, h) = (40, 6, 3);
        let truth: Vec<Vec<f64>> = (0..p).map(|_| (0..h).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<Vec<f64>> = x.iter().map(|xr| (0..h).map(|j| (0..p).map(|i| xr[i] * truth[i][j]).sum()).collect()).collect();
        let xm = Matrix::from_rows(n, p, x.concat());
        let ym = Matrix::from_rows(n, h, y.concat());
        let w = fit_linear(&xm, &ym, None, 0.0).unwrap();
        let oracle = gauss_jordan_ls(&x, &y);
        for i in 0..p {
            for j in 0..h {
                assert!((w[(i, j)] - oracle[i][j]).abs() < 1e-9);
            }
        }
        let fitted = xm.matmul(&w);
        assert!(mse(fitted.data(), ym.data()) < 1e-8);
    }

    #[test]
    fn ridge_forecaster_on_affine_equivariant_targets() {
        // Targets are convex combinations of the lookback, hence exactly linear in
        // the per-window normalized space.
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let (l, h) = (8, 2);
        let mix: Vec<Vec<f64>> = (0..h)
            .map(|_| {
                let raw: Vec<f64> = (0..l).map(|_| r.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        let windows: Vec<TrainingWindow> = (0..60)
            .map(|_| {
                let lb: Vec<f64> = (0..l).map(|_| r.random_range(0.0..5.0)).collect();
                let target = mix.iter().map(|m| m.iter().zip(&lb).map(|(a, b)| a * b).sum()).collect();
                TrainingWindow { lookback: lb, target }
            })
            .collect();
        // Normalized lookbacks sum to zero, so a tiny ridge keeps the system definite.
        let model = RidgeForecaster::fit(&windows, 1e-9).unwrap();
        let err: f64 = windows.iter().map(|w| mse(&model.predict(&w.lookback).unwrap(), &w.target)).sum::<f64>() / 60.0;
        assert!(err < 1e-8);
    }

    #[test]
    fn ridge_shrinks_to_window_mean() {
        let windows = vec![
            TrainingWindow { lookback: vec![1.0, 2.0, 3.0], target: vec![4.0] },
            TrainingWindow { lookback: vec![3.0, 1.0, 0.0], target: vec![2.0] },
        ];
        let model = RidgeForecaster::fit(&windows, 1e12).unwrap();
        let pred = model.predict(&[2.0, 4.0, 6.0]).unwrap();
        assert!((pred[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn ridge_duplicate_windows_equal_double_weight() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let windows: Vec<TrainingWindow> = (0..10)
            .map(|_| TrainingWindow {
                lookback: (0..5).map(|_| r.random_range(0.0..1.0)).collect(),
                target: (0..2).map(|_| r.random_range(0.0..1.0)).collect(),
            })
            .collect();
        let mut dup = windows.clone();
        dup.push(windows[3].clone());
        let mut weights = vec![1.0; 10];
        weights[3] = 2.0;
        let a = RidgeForecaster::fit(&dup, 0.5).unwrap();
        let b = RidgeForecaster::fit_weighted(&windows, Some(&weights), 0.5).unwrap();
        let q = [0.2, 0.4, 0.1, 0.9, 0.5];
        let (pa, pb) = (a.predict(&q).unwrap(), b.predict(&q).unwrap());
        for (x, y) in pa.iter().zip(&pb) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn ridge_singular_reported() {
        let windows = vec![TrainingWindow { lookback: vec![1.0, 2.0, 3.0], target: vec![1.0] }];
        assert_eq!(RidgeForecaster::fit(&windows, 0.0), Err(Error::Singular));
    }

    #[test]
    fn evaluation_origins_cover_final_fraction() {
        let o = evaluation_origins(1344, 48, 720);
        assert_eq!(o[0], 1344 - 403);
        assert!(o.iter().all(|s| s + 48 <= 1344));
        assert!(o.windows(2).all(|w| w[1] - w[0] == 48));
        assert_eq!(evaluation_origins(1344, 336, 720).len(), 1);
    }
}
