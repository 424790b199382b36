//! Membership inference attacks, the three-sample MMD test and NNDR.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fidelity::{space_vectors, Space};
use crate::linalg::{euclidean, squared_distance};
use crate::model::AlignedDataset;
use crate::seed::{derive_seed, subsample_indices};
use crate::stats::{normal_cdf, quantile_sorted, sorted, Spread};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub meter_id: String,
    pub score: f64,
    pub is_member: bool,
}

/// Attack scores; lower means "more likely a training member".
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttackScoreSet {
    pub entries: Vec<ScoreEntry>,
}

impl AttackScoreSet {
    pub fn from_scores(members: &[f64], non_members: &[f64]) -> Self {
        let tag = |prefix: &str, s: &[f64], m: bool| {
            s.iter()
                .enumerate()
                .map(|(i, &score)| ScoreEntry { meter_id: format!("{prefix}{i}"), score, is_member: m })
                .collect::<Vec<_>>()
        };
        let mut entries = tag("m", members, true);
        entries.extend(tag("n", non_members, false));
        Self { entries }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.entries.iter().find(|e| !e.score.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite score for {}", e.meter_id)));
        }
        let members = self.entries.iter().filter(|e| e.is_member).count();
        if members == 0 || members == self.entries.len() {
            return Err(Error::InvalidArgument("attack scores need at least one member and one non-member".into()));
        }
        Ok(())
    }
}

/// Distance from each target to its nearest synthetic vector.
pub fn min_distances(targets: &[&[f64]], synth: &[&[f64]]) -> Result<Vec<f64>> {
    let first = synth.first().ok_or(Error::EmptySelection("synthetic set is empty"))?;
    let d = first.len();
    if let Some(v) = synth.iter().chain(targets).find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    Ok(targets
        .iter()
        .map(|t| libm::sqrt(synth.iter().map(|s| squared_distance(t, s)).fold(f64::INFINITY, f64::min)))
        .collect())
}

/// Black-box attack: training curves are members, held-out curves non-members.
pub fn blackbox_scores(members: &AlignedDataset, non_members: &AlignedDataset, synth: &AlignedDataset, space: Space) -> Result<AttackScoreSet> {
    let sv = space_vectors(synth, space);
    let sr: Vec<&[f64]> = sv.iter().map(|v| v.as_slice()).collect();
    let mut entries = Vec::with_capacity(members.len() + non_members.len());
    for (ds, is_member) in [(members, true), (non_members, false)] {
        let tv = space_vectors(ds, space);
        let tr: Vec<&[f64]> = tv.iter().map(|v| v.as_slice()).collect();
        for (c, score) in ds.curves.iter().zip(min_distances(&tr, &sr)?) {
            entries.push(ScoreEntry { meter_id: c.meter_id.clone(), score, is_member });
        }
    }
    Ok(AttackScoreSet { entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Thresholds at −∞, midpoints between consecutive distinct scores and +∞;
/// a sample is predicted member when `score < threshold`.
pub fn roc_curve(set: &AttackScoreSet) -> Result<Roc> {
    set.validate()?;
    let mut scored: Vec<(f64, bool)> = set.entries.iter().map(|e| (e.score, e.is_member)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let pos = scored.iter().filter(|e| e.1).count() as f64;
    let neg = scored.len() as f64 - pos;

    let mut points = vec![RocPoint { threshold: f64::NEG_INFINITY, fpr: 0.0, tpr: 0.0 }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let s = scored[i].0;
        while i < scored.len() && scored[i].0 == s {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let threshold = if i < scored.len() { s + (scored[i].0 - s) / 2.0 } else { f64::INFINITY };
        points.push(RocPoint { threshold, fpr: fp as f64 / neg, tpr: tp as f64 / pos });
    }
    let auc = points.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
    Ok(Roc { points, auc })
}

/// Best TPR among thresholds whose FPR does not exceed `fpr_target`.
pub fn tpr_at_fpr(roc: &Roc, fpr_target: f64) -> f64 {
    roc.points.iter().filter(|p| p.fpr <= fpr_target).map(|p| p.tpr).fold(0.0, f64::max)
}

pub const DEFAULT_FPR_TARGET: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub auc: f64,
    pub fpr_target: f64,
    pub tpr_at_fpr: f64,
    pub roc: Roc,
}

pub fn summarize_attack(set: &AttackScoreSet, fpr_target: f64) -> Result<AttackSummary> {
    let roc = roc_curve(set)?;
    Ok(AttackSummary { auc: roc.auc, fpr_target, tpr_at_fpr: tpr_at_fpr(&roc, fpr_target), roc })
}

/// White-box attack from externally computed reconstruction errors.
pub fn whitebox_attack(scores: &AttackScoreSet, fpr_target: f64) -> Result<AttackSummary> {
    summarize_attack(scores, fpr_target)
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    libm::exp(-squared_distance(a, b) * gamma)
}

fn check_sets(sets: &[&[&[f64]]]) -> Result<usize> {
    let d = sets.iter().flat_map(|s| s.iter()).next().map_or(0, |v| v.len());
    for s in sets {
        if s.len() < 2 {
            return Err(Error::InsufficientData { what: "MMD sample", needed: 2, got: s.len() });
        }
        if let Some(v) = s.iter().find(|v| v.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: v.len() });
        }
    }
    Ok(d)
}

/// Unbiased estimate of MMD² with kernel `exp(−‖a−b‖²/(2σ²))`.
pub fn mmd2_unbiased(x: &[&[f64]], y: &[&[f64]], bandwidth: f64) -> Result<f64> {
    check_sets(&[x, y])?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument("kernel bandwidth must be positive".into()));
    }
    let gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    let within = |s: &[&[f64]]| {
        let mut acc = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                acc += 2.0 * rbf(s[i], s[j], gamma);
            }
        }
        acc / (s.len() * (s.len() - 1)) as f64
    };
    let cross: f64 = x.iter().flat_map(|a| y.iter().map(move |b| rbf(a, b, gamma))).sum();
    Ok(within(x) + within(y) - 2.0 * cross / (x.len() * y.len()) as f64)
}

/// Points kept when estimating the median pairwise distance.
pub const BANDWIDTH_SAMPLE_CAP: usize = 1000;

/// Median pairwise distance over the pooled sets. Falls back to the median positive
/// distance, then to 1, when too many points coincide.
pub fn median_bandwidth(sets: &[&[&[f64]]], seed: u64) -> f64 {
    let mut pooled: Vec<&[f64]> = sets.iter().flat_map(|s| s.iter().copied()).collect();
    if pooled.len() > BANDWIDTH_SAMPLE_CAP {
        let keep = subsample_indices(pooled.len(), BANDWIDTH_SAMPLE_CAP, derive_seed(seed, "mmd/bandwidth"));
        pooled = keep.into_iter().map(|i| pooled[i]).collect();
    }
    let mut d = Vec::with_capacity(pooled.len() * pooled.len().saturating_sub(1) / 2);
    for i in 0..pooled.len() {
        for j in i + 1..pooled.len() {
            d.push(euclidean(pooled[i], pooled[j]));
        }
    }
    let d = sorted(&d);
    if d.is_empty() {
        return 1.0;
    }
    let med = quantile_sorted(&d, 0.5);
    if med > 0.0 {
        return med;
    }
    let positive: Vec<f64> = d.into_iter().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        1.0
    } else {
        quantile_sorted(&positive, 0.5)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmdTestResult {
    /// `MMD²(synth, train) − MMD²(synth, test)`.
    pub statistic: f64,
    pub variance: f64,
    /// `Φ(statistic / √variance)`: small when synth is significantly closer to train.
    pub p_value: f64,
    pub bandwidth: f64,
    /// Estimated variance was not positive; the p-value is reported as 0.5.
    pub degenerate: bool,
    /// Whether the second-order variance term was included (equal set sizes only).
    pub second_order: bool,
}

struct KernelBlock {
    /// Row-major kernel values.
    k: Vec<f64>,
    cols_n: usize,
    /// Row sums (over the second index).
    rows: Vec<f64>,
    /// Column sums (over the first index).
    cols: Vec<f64>,
    total: f64,
    /// Sum of squared entries.
    sq: f64,
}

impl KernelBlock {
    fn new(a: &[&[f64]], b: &[&[f64]], gamma: f64, skip_diagonal: bool) -> Self {
        let mut rows = vec![0.0; a.len()];
        let mut cols = vec![0.0; b.len()];
        let mut k = Vec::with_capacity(a.len() * b.len());
        let mut sq = 0.0;
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let v = if skip_diagonal && i == j { 0.0 } else { rbf(x, y, gamma) };
                rows[i] += v;
                cols[j] += v;
                sq += v * v;
                k.push(v);
            }
        }
        let total = rows.iter().sum();
        Self { k, cols_n: b.len(), rows, cols, total, sq }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.cols_n + j]
    }
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

fn sum_prod(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Within-sample moments of a zero-diagonal block: `E[k(a,b)k(a,c)]` and
/// `E[k(a,b)]²`, both averaged over distinct indices only.
fn within_moments(b: &KernelBlock, n: f64) -> (f64, f64) {
    let r2 = sum_sq(&b.rows);
    let shared = (r2 - b.sq) / (n * (n - 1.0) * (n - 2.0));
    let disjoint = (b.total * b.total - 4.0 * r2 + 2.0 * b.sq) / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    (shared, disjoint)
}

/// Cross-sample moments for an `m × n` block: shared first index, shared second
/// index, and the squared mean over disjoint pairs.
fn cross_moments(b: &KernelBlock, m: f64, n: f64) -> (f64, f64, f64) {
    let (r2, c2) = (sum_sq(&b.rows), sum_sq(&b.cols));
    let share_row = (r2 - b.sq) / (m * n * (n - 1.0));
    let share_col = (c2 - b.sq) / (n * m * (m - 1.0));
    let disjoint = (b.total * b.total - r2 - c2 + b.sq) / (m * (m - 1.0) * n * (n - 1.0));
    (share_row, share_col, disjoint)
}

/// Three-sample relative-similarity test of Bounliphone et al. (2016), "A Test of
/// Relative Similarity for Model Selection in Generative Models", with the median
/// heuristic bandwidth.
pub fn mmd_three_sample_test(synth: &[&[f64]], train: &[&[f64]], test: &[&[f64]], seed: u64) -> Result<MmdTestResult> {
    check_sets(&[synth, train, test])?;
    let bandwidth = median_bandwidth(&[synth, train, test], seed);
    mmd_three_sample_test_with_bandwidth(synth, train, test, bandwidth)
}

/// The variance follows the first- plus second-order Hoeffding expansion of the
/// reference implementation, with each moment estimated over distinct indices so
/// that the first-order term is unbiased when all three samples share a distribution.
pub fn mmd_three_sample_test_with_bandwidth(x: &[&[f64]], y: &[&[f64]], z: &[&[f64]], bandwidth: f64) -> Result<MmdTestResult> {
    check_sets(&[x, y, z])?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidArgument("kernel bandwidth must be positive".into()));
    }
    let gamma = 1.0 / (2.0 * bandwidth * bandwidth);
    let (m, n, r) = (x.len() as f64, y.len() as f64, z.len() as f64);
    let yy = KernelBlock::new(y, y, gamma, true);
    let zz = KernelBlock::new(z, z, gamma, true);
    let xy = KernelBlock::new(x, y, gamma, false);
    let xz = KernelBlock::new(x, z, gamma, false);

    let u_yy = yy.total / (n * (n - 1.0));
    let u_zz = zz.total / (r * (r - 1.0));
    let u_xy = xy.total / (m * n);
    let u_xz = xz.total / (m * r);
    let statistic = u_yy - 2.0 * u_xy - (u_zz - 2.0 * u_xz);

    let zeta1 = if x.len() >= 4 && y.len() >= 4 && z.len() >= 4 {
        let (yy_shared, yy_mean2) = within_moments(&yy, n);
        let (zz_shared, zz_mean2) = within_moments(&zz, r);
        let (xy_x, xy_y, xy_mean2) = cross_moments(&xy, m, n);
        let (xz_x, xz_z, xz_mean2) = cross_moments(&xz, m, r);
        let t1 = yy_shared - yy_mean2;
        let t2 = xy_x - xy_mean2;
        let t3 = xy_y - xy_mean2;
        let t4 = zz_shared - zz_mean2;
        let t5 = xz_z - xz_mean2;
        let t6 = xz_x - xz_mean2;
        let a7 = sum_prod(&yy.rows, &xy.cols);
        let t7 = a7 / (n * (n - 1.0) * m) - (yy.total * xy.total - 2.0 * a7) / (n * (n - 1.0) * (n - 2.0) * m);
        let a8 = sum_prod(&xy.rows, &xz.rows);
        let t8 = a8 / (m * n * r) - (xy.total * xz.total - a8) / (m * (m - 1.0) * n * r);
        let a9 = sum_prod(&zz.rows, &xz.cols);
        let t9 = a9 / (r * (r - 1.0) * m) - (zz.total * xz.total - 2.0 * a9) / (r * (r - 1.0) * (r - 2.0) * m);
        t1 + t2 + t3 + t4 + t5 + t6 - 2.0 * (t7 + t8 + t9)
    } else {
        let t1 = sum_sq(&yy.rows) / (n * n * n) - u_yy * u_yy;
        let t2 = sum_sq(&xy.rows) / (n * n * m) - u_xy * u_xy;
        let t3 = sum_sq(&xy.cols) / (n * m * m) - u_xy * u_xy;
        let t4 = sum_sq(&zz.rows) / (r * r * r) - u_zz * u_zz;
        let t5 = sum_sq(&xz.cols) / (r * m * m) - u_xz * u_xz;
        let t6 = sum_sq(&xz.rows) / (r * r * m) - u_xz * u_xz;
        let t7 = sum_prod(&yy.rows, &xy.cols) / (n * n * m) - u_yy * u_xy;
        let t8 = sum_prod(&xy.rows, &xz.rows) / (n * m * r) - u_xz * u_xy;
        let t9 = sum_prod(&zz.rows, &xz.cols) / (r * r * m) - u_zz * u_xz;
        t1 + t2 + t3 + t4 + t5 + t6 - 2.0 * (t7 + t8 + t9)
    };
    // zeta1 is the variance of a projection; sampling noise can push its estimate below zero.
    let mut variance = 4.0 * (m - 2.0) / (m * (m - 1.0)) * zeta1.max(0.0);

    let second_order = x.len() == y.len() && y.len() == z.len();
    if second_order {
        let k = x.len();
        let mut acc = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let h = yy.at(i, j) - zz.at(i, j) - xy.at(j, i) - xy.at(i, j) + xz.at(i, j) + xz.at(j, i);
                    acc += h * h;
                }
            }
        }
        let zeta2 = acc / (m * (m - 1.0)) - statistic * statistic;
        variance += 2.0 / (m * (m - 1.0)) * zeta2;
    }

    let degenerate = !(variance > 0.0 && variance.is_finite());
    let p_value = if degenerate { 0.5 } else { normal_cdf(statistic / libm::sqrt(variance)) };
    Ok(MmdTestResult { statistic, variance: variance.max(0.0), p_value, bandwidth, degenerate, second_order })
}

/// Nearest over second-nearest synthetic distance for each target.
pub fn nndr(targets: &[&[f64]], synth: &[&[f64]]) -> Result<Vec<f64>> {
    if synth.len() < 2 {
        return Err(Error::InsufficientData { what: "NNDR synthetic set", needed: 2, got: synth.len() });
    }
    let d = synth[0].len();
    if let Some(v) = synth.iter().chain(targets).find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    Ok(targets
        .iter()
        .map(|t| {
            let (mut d1, mut d2) = (f64::INFINITY, f64::INFINITY);
            for s in synth {
                let dist = squared_distance(t, s);
                if dist < d1 {
                    d2 = d1;
                    d1 = dist;
                } else if dist < d2 {
                    d2 = dist;
                }
            }
            if d2 == 0.0 {
                1.0
            } else {
                libm::sqrt(d1) / libm::sqrt(d2)
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NgenPoint {
    pub n_gen: usize,
    pub auc: Spread,
    pub tpr_at_fpr: Spread,
}

/// Black-box attack strength as a function of the number of released synthetic
/// samples, averaged over seeded subsamples of the synthetic set.
pub fn ngen_sweep(
    members: &[&[f64]],
    non_members: &[&[f64]],
    synth: &[&[f64]],
    sizes: &[usize],
    repeats: usize,
    fpr_target: f64,
    seed: u64,
) -> Result<Vec<NgenPoint>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &n_gen in sizes {
        if n_gen == 0 {
            return Err(Error::InvalidArgument("n_gen must be positive".into()));
        }
        let reps = if n_gen < synth.len() { repeats.max(1) } else { 1 };
        let (mut aucs, mut tprs) = (Vec::with_capacity(reps), Vec::with_capacity(reps));
        for rep in 0..reps {
            let idx = subsample_indices(synth.len(), n_gen, derive_seed(seed, &format!("ngen/{n_gen}/{rep}")));
            let sub: Vec<&[f64]> = idx.iter().map(|&i| synth[i]).collect();
            let set = AttackScoreSet::from_scores(&min_distances(members, &sub)?, &min_distances(non_members, &sub)?);
            let s = summarize_attack(&set, fpr_target)?;
            aucs.push(s.auc);
            tprs.push(s.tpr_at_fpr);
        }
        out.push(NgenPoint { n_gen: n_gen.min(synth.len()), auc: Spread::of(&aucs), tpr_at_fpr: Spread::of(&tprs) });
    }
    Ok(out)
}
