//! Fidelity metrics: discriminative score, Context-FID, correlation score, and the
//! aggregate tables behind the comparison plots.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::encoder::{embedding_moments, train_encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::linalg::{psd_sqrt, singular_values, squared_distance, Matrix};
use crate::model::{partition_by_category, AlignedDataset, Category, SLOTS_PER_DAY, SLOTS_PER_WEEK};
use crate::seed::{derive_seed, rng, subsample_indices};
use crate::stats::{min_max, quantile_sorted, sorted, std_dev, Histogram};
use crate::transforms::{acf, curve_profile, pca_project_2d, weekly_profile, DayFilter};

/// Vector space in which curves are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// The full half-hourly series.
    Year,
    /// The 48-value mean daily profile.
    Profile,
}

pub fn space_vectors(ds: &AlignedDataset, space: Space) -> Vec<Vec<f64>> {
    match space {
        Space::Year => ds.curves.iter().map(|c| c.values.clone()).collect(),
        Space::Profile => ds
            .curves
            .iter()
            .map(|c| curve_profile(c, DayFilter::All).map(|p| p.0.to_vec()).unwrap_or_default())
            .collect(),
    }
}

fn check_dims(sets: &[&[&[f64]]]) -> Result<usize> {
    let d = sets.iter().flat_map(|s| s.first()).map(|v| v.len()).next().unwrap_or(0);
    for s in sets {
        if let Some(v) = s.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    Ok(d)
}

/// Index of the nearest point, lowest index on ties.
pub(crate) fn nearest(points: &[&[f64]], q: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        let d = squared_distance(p, q);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// `|1/2 - acc|` of a 1-nearest-neighbour real-vs-synthetic classifier trained on
/// half of each set and evaluated on the other half.
pub fn discriminative_score(real: &[&[f64]], synth: &[&[f64]], seed: u64) -> Result<f64> {
    if real.len() != synth.len() {
        return Err(Error::InvalidArgument(format!(
            "discriminative score needs equal set sizes, got {} real and {} synthetic",
            real.len(),
            synth.len()
        )));
    }
    if real.len() < 4 {
        return Err(Error::InsufficientData { what: "discriminative score", needed: 4, got: real.len() });
    }
    check_dims(&[real, synth])?;
    let n = real.len();
    let mut r = rng(seed);
    let mut ri: Vec<usize> = (0..n).collect();
    let mut si: Vec<usize> = (0..n).collect();
    ri.shuffle(&mut r);
    si.shuffle(&mut r);
    let half = n / 2;
    let mut train: Vec<&[f64]> = ri[..half].iter().map(|&i| real[i]).collect();
    train.extend(si[..half].iter().map(|&i| synth[i]));
    let label = |j: usize| usize::from(j >= half);

    let mut correct = 0usize;
    let mut total = 0usize;
    for (set, truth) in [(&ri, 0usize), (&si, 1usize)] {
        let src = if truth == 0 { real } else { synth };
        for &i in &set[half..] {
            if label(nearest(&train, src[i])) == truth {
                correct += 1;
            }
            total += 1;
        }
    }
    let acc = correct as f64 / total as f64;
    Ok((0.5 - acc).abs())
}

/// `‖μ1 − μ2‖² + tr(S1) + tr(S2) − 2 tr((S1 S2)^{1/2})`, clamped at zero.
///
/// The trace of the matrix square root equals the nuclear norm of
/// `S1^{1/2} S2^{1/2}`, which is evaluated with a one-sided Jacobi SVD so that
/// null directions contribute exactly nothing.
pub fn frechet_distance(mu1: &[f64], s1: &Matrix, mu2: &[f64], s2: &Matrix) -> Result<f64> {
    let d = mu1.len();
    for got in [mu2.len(), s1.rows(), s1.cols(), s2.rows(), s2.cols()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    let scale = s1.data().iter().chain(s2.data()).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    if !s1.is_symmetric(1e-9 * scale) || !s2.is_symmetric(1e-9 * scale) {
        return Err(Error::InvalidArgument("covariance matrices must be symmetric".into()));
    }
    let r1 = psd_sqrt(s1)?;
    let r2 = psd_sqrt(s2)?;
    let nuclear: f64 = singular_values(&r1.matmul(&r2))?.iter().sum();
    let mean_term: f64 = squared_distance(mu1, mu2);
    Ok((mean_term + s1.trace() + s2.trace() - 2.0 * nuclear).max(0.0))
}

/// How a window is cut into the chunks on which separate encoders are trained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chunking {
    /// Calendar months for windows of at least 365 days, otherwise 30-day chunks.
    Auto,
    CalendarMonths,
    /// Contiguous chunks of this many days; the remainder is dropped. A window
    /// shorter than one chunk forms a single chunk.
    FixedDays(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChunkSpan {
    pub label: String,
    pub start_day: usize,
    pub end_day: usize,
}

pub fn chunk_spans(window: &crate::model::Window, chunking: Chunking) -> Vec<ChunkSpan> {
    let n = window.n_days;
    let resolved = match chunking {
        Chunking::Auto if n >= 365 => Chunking::CalendarMonths,
        Chunking::Auto => Chunking::FixedDays(30),
        other => other,
    };
    match resolved {
        Chunking::CalendarMonths => {
            let mut spans: Vec<ChunkSpan> = Vec::new();
            for d in 0..n {
                let date = window.day_date(d);
                let label = format!("{:04}-{:02}", date.year, date.month);
                match spans.last_mut() {
                    Some(s) if s.label == label => s.end_day = d + 1,
                    _ => spans.push(ChunkSpan { label, start_day: d, end_day: d + 1 }),
                }
            }
            spans
        }
        Chunking::FixedDays(k) => {
            let k = k.max(1);
            if n < k {
                return vec![ChunkSpan { label: format!("days-0-{n}"), start_day: 0, end_day: n }];
            }
            (0..n / k)
                .map(|c| ChunkSpan { label: format!("days-{}-{}", c * k, (c + 1) * k), start_day: c * k, end_day: (c + 1) * k })
                .collect()
        }
        Chunking::Auto => unreachable!(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextFid {
    pub per_chunk: Vec<(String, f64)>,
    pub mean: f64,
}

/// Context-FID: per chunk, an encoder trained on the real chunk embeds both sets;
/// the Fréchet distances of the embedding moments are averaged over chunks.
pub fn context_fid(real: &AlignedDataset, synth: &AlignedDataset, cfg: &EncoderConfig, chunking: Chunking) -> Result<ContextFid> {
    if real.window != synth.window {
        return Err(Error::InvalidArgument("real and synthetic datasets cover different windows".into()));
    }
    for n in [real.len(), synth.len()] {
        if n < 2 {
            return Err(Error::InsufficientData { what: "Context-FID", needed: 2, got: n });
        }
    }
    let mut per_chunk = Vec::new();
    for (i, span) in chunk_spans(&real.window, chunking).into_iter().enumerate() {
        let range = span.start_day * SLOTS_PER_DAY..span.end_day * SLOTS_PER_DAY;
        let real_chunks: Vec<&[f64]> = real.curves.iter().map(|c| &c.values[range.clone()]).collect();
        let synth_chunks: Vec<&[f64]> = synth.curves.iter().map(|c| &c.values[range.clone()]).collect();
        let mut chunk_cfg = cfg.clone();
        chunk_cfg.seed = derive_seed(cfg.seed, &format!("context_fid/chunk/{i}"));
        let encoder = train_encoder(&real_chunks, &chunk_cfg)?;
        let er: Vec<Vec<f64>> = real_chunks.iter().map(|x| encoder.encode(x)).collect();
        let es: Vec<Vec<f64>> = synth_chunks.iter().map(|x| encoder.encode(x)).collect();
        let (mr, sr) = embedding_moments(&er)?;
        let (ms, ss) = embedding_moments(&es)?;
        per_chunk.push((span.label, frechet_distance(&mr, &sr, &ms, &ss)?));
    }
    let mean = per_chunk.iter().map(|(_, v)| v).sum::<f64>() / per_chunk.len().max(1) as f64;
    Ok(ContextFid { per_chunk, mean })
}

/// Mean autocorrelation function of a set of series over lags `0..=max_lag`.
pub fn mean_acf(set: &[&[f64]], max_lag: usize) -> Result<Vec<f64>> {
    if set.is_empty() {
        return Err(Error::EmptySelection("autocorrelation of an empty set"));
    }
    let mut acc = vec![0.0; max_lag + 1];
    for s in set {
        acc.iter_mut().zip(acf(s, max_lag)?).for_each(|(a, v)| *a += v);
    }
    acc.iter_mut().for_each(|a| *a /= set.len() as f64);
    Ok(acc)
}

/// Mean over lags `1..=max_lag` of the absolute difference of per-set mean ACFs.
pub fn correlation_score(real: &[&[f64]], synth: &[&[f64]], max_lag: usize) -> Result<f64> {
    if max_lag == 0 {
        return Err(Error::InvalidArgument("max_lag must be at least 1".into()));
    }
    let a = mean_acf(real, max_lag)?;
    let b = mean_acf(synth, max_lag)?;
    Ok(a[1..].iter().zip(&b[1..]).map(|(x, y)| (x - y).abs()).sum::<f64>() / max_lag as f64)
}

pub const DEFAULT_MAX_LAG: usize = SLOTS_PER_WEEK;
pub const DEFAULT_BINS: usize = 50;

/// Aggregates of one dataset, for the comparison plots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetAggregates {
    pub mean_curve: Vec<f64>,
    pub weekly_profile: Vec<f64>,
    pub acf_mean: Vec<f64>,
    pub acf_std: Vec<f64>,
}

/// Histogram of one per-day statistic with bins shared by both sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatHistogram {
    pub statistic: String,
    pub edges: Vec<f64>,
    pub real_counts: Vec<u64>,
    pub synth_counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub source: String,
    pub meter_id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotTables {
    pub real: SetAggregates,
    pub synth: SetAggregates,
    pub histograms: Vec<StatHistogram>,
    pub scatter: Vec<ScatterPoint>,
}

pub const DAILY_STATISTICS: [&str; 7] = ["mean", "std", "min", "max", "q10", "median", "q90"];

fn daily_statistics(ds: &AlignedDataset) -> [Vec<f64>; 7] {
    let mut out: [Vec<f64>; 7] = Default::default();
    for curve in &ds.curves {
        for day in curve.days() {
            let s = sorted(day);
            let m = day.iter().sum::<f64>() / day.len() as f64;
            let vals = [
                m,
                std_dev(day),
                s[0],
                s[s.len() - 1],
                quantile_sorted(&s, 0.1),
                quantile_sorted(&s, 0.5),
                quantile_sorted(&s, 0.9),
            ];
            for (o, v) in out.iter_mut().zip(vals) {
                o.push(v);
            }
        }
    }
    out
}

fn set_aggregates(ds: &AlignedDataset, max_lag: usize) -> SetAggregates {
    let t = ds.window.n_slots();
    let mut mean_curve = vec![0.0; t];
    for c in &ds.curves {
        mean_curve.iter_mut().zip(&c.values).for_each(|(m, v)| *m += v);
    }
    if !ds.is_empty() {
        mean_curve.iter_mut().for_each(|m| *m /= ds.len() as f64);
    }
    let series = ds.series();
    let weekly_profile = weekly_profile(&series).unwrap_or_default();
    let lag = max_lag.min(t.saturating_sub(1));
    let acfs: Vec<Vec<f64>> = series.iter().filter_map(|s| acf(s, lag).ok()).collect();
    let (acf_mean, acf_std) = if acfs.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        (0..=lag)
            .map(|l| {
                let col: Vec<f64> = acfs.iter().map(|a| a[l]).collect();
                (col.iter().sum::<f64>() / col.len() as f64, std_dev(&col))
            })
            .unzip()
    };
    SetAggregates { mean_curve, weekly_profile, acf_mean, acf_std }
}

/// Tables behind the mean-curve, weekly-profile, statistic-histogram, ACF and
/// 2-D scatter comparisons.
pub fn aggregate_plots(real: &AlignedDataset, synth: &AlignedDataset, max_lag: usize, bins: usize) -> PlotTables {
    let rs = daily_statistics(real);
    let ss = daily_statistics(synth);
    let histograms = DAILY_STATISTICS
        .iter()
        .zip(rs.iter().zip(&ss))
        .map(|(name, (r, s))| {
            let pooled: Vec<f64> = r.iter().chain(s).copied().collect();
            let (lo, hi) = if pooled.is_empty() { (0.0, 1.0) } else { min_max(&pooled) };
            let edges = Histogram::edges(lo, hi, bins);
            StatHistogram {
                statistic: (*name).into(),
                real_counts: Histogram::with_edges(edges.clone(), r).counts,
                synth_counts: Histogram::with_edges(edges.clone(), s).counts,
                edges,
            }
        })
        .collect();

    let mut labels = Vec::new();
    let mut profiles = Vec::new();
    for (source, ds) in [("real", real), ("synthetic", synth)] {
        for (c, p) in ds.curves.iter().zip(space_vectors(ds, Space::Profile)) {
            labels.push((source, c.meter_id.clone()));
            profiles.push(p);
        }
    }
    let refs: Vec<&[f64]> = profiles.iter().map(|p| p.as_slice()).collect();
    let scatter = match pca_project_2d(&refs) {
        Ok(proj) => labels
            .into_iter()
            .zip(proj.coords)
            .map(|((source, meter_id), [x, y])| ScatterPoint { source: source.into(), meter_id, x, y })
            .collect(),
        Err(_) => Vec::new(),
    };
    PlotTables { real: set_aggregates(real, max_lag), synth: set_aggregates(synth, max_lag), histograms, scatter }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityParams {
    pub encoder: EncoderConfig,
    pub chunking: Chunking,
    pub max_lag: usize,
}

impl Default for FidelityParams {
    fn default() -> Self {
        Self { encoder: EncoderConfig::desk(), chunking: Chunking::Auto, max_lag: DEFAULT_MAX_LAG }
    }
}

/// Fidelity metrics of one category. A metric that cannot be computed is `None`
/// and the reason is recorded in `notes`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FidelityResult {
    pub d_year: Option<f64>,
    pub d_profile: Option<f64>,
    pub context_fid: Option<f64>,
    pub correlation_score: Option<f64>,
    pub n_real: usize,
    pub n_synth: usize,
    pub notes: Vec<String>,
}

/// Subsamples the larger of two sets to the size of the smaller one.
pub fn equalize(real: &AlignedDataset, synth: &AlignedDataset, seed: u64) -> (AlignedDataset, AlignedDataset) {
    let n = real.len().min(synth.len());
    (
        real.select(&subsample_indices(real.len(), n, derive_seed(seed, "equalize/real"))),
        synth.select(&subsample_indices(synth.len(), n, derive_seed(seed, "equalize/synthetic"))),
    )
}

pub fn evaluate_fidelity(real: &AlignedDataset, synth: &AlignedDataset, params: &FidelityParams, seed: u64) -> FidelityResult {
    let mut out = FidelityResult { n_real: real.len(), n_synth: synth.len(), ..Default::default() };
    let (r_eq, s_eq) = equalize(real, synth, seed);
    for (space, slot, label) in [(Space::Year, &mut out.d_year, "d_year"), (Space::Profile, &mut out.d_profile, "d_profile")] {
        let rv = space_vectors(&r_eq, space);
        let sv = space_vectors(&s_eq, space);
        let rr: Vec<&[f64]> = rv.iter().map(|v| v.as_slice()).collect();
        let sr: Vec<&[f64]> = sv.iter().map(|v| v.as_slice()).collect();
        match discriminative_score(&rr, &sr, derive_seed(seed, label)) {
            Ok(v) => *slot = Some(v),
            Err(e) => out.notes.push(format!("{label}: {e}")),
        }
    }
    let mut enc = params.encoder.clone();
    enc.seed = derive_seed(seed, "context_fid");
    match context_fid(real, synth, &enc, params.chunking) {
        Ok(v) => out.context_fid = Some(v.mean),
        Err(e) => out.notes.push(format!("context_fid: {e}")),
    }
    let lag = params.max_lag.min(real.window.n_slots().saturating_sub(1));
    match correlation_score(&real.series(), &synth.series(), lag) {
        Ok(v) => out.correlation_score = Some(v),
        Err(e) => out.notes.push(format!("correlation_score: {e}")),
    }
    out
}

/// Fidelity per category of the real set, plus the `all` row.
pub fn fidelity_by_category(
    real: &AlignedDataset,
    synth: &AlignedDataset,
    params: &FidelityParams,
    seed: u64,
) -> BTreeMap<Category, FidelityResult> {
    let synth_parts = partition_by_category(synth);
    partition_by_category(real)
        .into_iter()
        .map(|(cat, part)| {
            let s = synth_parts.get(&cat).cloned().unwrap_or_else(|| synth.with_curves(Vec::new()));
            let cat_seed = derive_seed(seed, &format!("category/{cat}"));
            (cat, evaluate_fidelity(&part, &s, params, cat_seed))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn cloud(n: usize, d: usize, shift: f64, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..d).map(|_| shift + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut *r)).collect())
            .collect()
    }

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|x| x.as_slice()).collect()
    }

    #[test]
    fn discriminative_separable_is_half() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let real = cloud(40, 10, 0.0, &mut r);
        let synth: Vec<Vec<f64>> = real.iter().map(|v| v.iter().map(|x| x + 1000.0).collect()).collect();
        assert_eq!(discriminative_score(&refs(&real), &refs(&synth), 3).unwrap(), 0.5);
    }

    #[test]
    fn discriminative_same_distribution_is_small() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let mut total = 0.0;
        for seed in 0..20 {
            let real = cloud(200, 5, 0.0, &mut r);
            let synth = cloud(200, 5, 0.0, &mut r);
            let s = discriminative_score(&refs(&real), &refs(&synth), seed).unwrap();
            assert!((0.0..=0.5).contains(&s));
            total += s;
        }
        assert!(total / 20.0 <= 0.1);
    }

    #[test]
    fn discriminative_rejects_mismatch() {
        let a = vec![vec![0.0; 3]; 4];
        let b = vec![vec![0.0; 2]; 4];
        assert!(matches!(discriminative_score(&refs(&a), &refs(&b), 0), Err(Error::DimensionMismatch { .. })));
        assert!(discriminative_score(&refs(&a[..3]), &refs(&a[..3]), 0).is_err());
    }

    fn m1(v: f64) -> Matrix {
        Matrix::from_rows(1, 1, vec![v])
    }

    #[test]
    fn frechet_scalar_cases() {
        assert_eq!(frechet_distance(&[0.0], &m1(1.0), &[1.0], &m1(1.0)).unwrap(), 1.0);
        assert!((frechet_distance(&[0.0], &m1(4.0), &[0.0], &m1(1.0)).unwrap() - 1.0).abs() < 1e-12);
        let mut r = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let (a, b): (f64, f64) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
            let (sa, sb): (f64, f64) = (r.random_range(0.1..3.0), r.random_range(0.1..3.0));
            let got = frechet_distance(&[a], &m1(sa * sa), &[b], &m1(sb * sb)).unwrap();
            let expected = (a - b) * (a - b) + (sa - sb) * (sa - sb);
            assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
        }
    }

    #[test]
    fn frechet_identity_and_symmetry() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        // Rank-deficient covariance: 6 points in 10 dimensions.
        let pts = cloud(6, 10, 0.0, &mut r);
        let (mu, s) = embedding_moments(&pts).unwrap();
        assert!(frechet_distance(&mu, &s, &mu, &s).unwrap() < 1e-9);
        let pts2 = cloud(30, 10, 0.5, &mut r);
        let (mu2, s2) = embedding_moments(&pts2).unwrap();
        let ab = frechet_distance(&mu, &s, &mu2, &s2).unwrap();
        let ba = frechet_distance(&mu2, &s2, &mu, &s).unwrap();
        assert!(ab > 0.1);
        assert!((ab - ba).abs() < 1e-9 * ab.max(1.0));
    }

    #[test]
    fn frechet_commuting_closed_form() {
        // Diagonal covariances commute: tr sqrt(S1 S2) = Σ sqrt(a_i b_i).
        let a = [1.0, 4.0, 0.25];
        let b = [9.0, 1.0, 0.0];
        let got = frechet_distance(&[0.0; 3], &Matrix::diagonal(&a), &[0.0; 3], &Matrix::diagonal(&b)).unwrap();
        let expected: f64 = a.iter().zip(&b).map(|(x, y)| (libm::sqrt(*x) - libm::sqrt(*y)).powi(2)).sum();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn frechet_dimension_mismatch() {
        assert!(frechet_distance(&[0.0, 1.0], &m1(1.0), &[0.0], &m1(1.0)).is_err());
    }

    fn cosine_set(n: usize, t: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let phase: f64 = r.random_range(0.0..core::f64::consts::TAU);
                (0..t).map(|i| libm::cos(core::f64::consts::TAU * i as f64 / 48.0 + phase)).collect()
            })
            .collect()
    }

    #[test]
    fn correlation_identity_and_cosine_vs_noise() {
        let mut r = ChaCha8Rng::seed_from_u64(6);
        let t = 48 * 60;
        let real = cosine_set(10, t, &mut r);
        assert_eq!(correlation_score(&refs(&real), &refs(&real), 96).unwrap(), 0.0);
        let noise = cloud(10, t, 0.0, &mut r);
        let got = correlation_score(&refs(&real), &refs(&noise), 96).unwrap();
        assert!((got - 2.0 / core::f64::consts::PI).abs() < 0.05, "{got}");
    }

    #[test]
    fn correlation_affine_invariant() {
        let mut r = ChaCha8Rng::seed_from_u64(7);
        let real = cosine_set(4, 500, &mut r);
        let noise = cloud(4, 500, 0.0, &mut r);
        let scaled: Vec<Vec<f64>> = noise.iter().map(|v| v.iter().map(|x| 3.0 * x + 7.0).collect()).collect();
        let a = correlation_score(&refs(&real), &refs(&noise), 50).unwrap();
        let b = correlation_score(&refs(&real), &refs(&scaled), 50).unwrap();
        assert!((a - b).abs() < 1e-12);
        let constant = vec![vec![1.0; 500]];
        assert_eq!(correlation_score(&refs(&real), &refs(&constant), 5), Err(Error::ConstantSeries));
    }

    #[test]
    fn chunking_rules() {
        use crate::model::Window;
        use crate::time::Timestamp;
        let w = Window::new(Timestamp::midnight(2022, 10, 1), 365);
        let spans = chunk_spans(&w, Chunking::Auto);
        assert_eq!(spans.len(), 12);
        assert_eq!(spans[0].label, "2022-10");
        assert_eq!(spans.iter().map(|s| s.end_day - s.start_day).sum::<usize>(), 365);
        let w = Window::new(Timestamp::midnight(2022, 10, 1), 28);
        assert_eq!(chunk_spans(&w, Chunking::Auto), vec![ChunkSpan { label: "days-0-28".into(), start_day: 0, end_day: 28 }]);
        let w = Window::new(Timestamp::midnight(2022, 10, 1), 95);
        assert_eq!(chunk_spans(&w, Chunking::Auto).len(), 3);
    }

    #[test]
    fn gaussian_samples_discriminative_bounds() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let n = Normal::new(0.0, 1.0).unwrap();
        let real: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| n.sample(&mut r)).collect()).collect();
        let s = discriminative_score(&refs(&real), &refs(&real), 1).unwrap();
        assert!((0.0..=0.5).contains(&s));
    }
}
