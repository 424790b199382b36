//! Deterministic feature transforms: normalization, profiles, summary statistics,
//! autocorrelation and a 2-D PCA projection.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::model::{LoadCurve, SLOTS_PER_DAY, SLOTS_PER_WEEK};
use crate::stats::{mean, quantile_sorted, sorted, std_dev};
use crate::time::{CivilDate, Timestamp};

/// A z-normalized series together with the moments that were removed.
#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub series: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl Normalized {
    pub fn denormalize(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }
}

/// Instance-wise z-normalization over the time axis (population std).
pub fn znorm_instance(x: &[f64]) -> Result<Normalized> {
    if x.is_empty() {
        return Err(Error::EmptySelection("series"));
    }
    let m = mean(x);
    let s = std_dev(x);
    if !(s > 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok(Normalized { series: x.iter().map(|v| (v - m) / s).collect(), mean: m, std: s })
}

/// Which days of a curve contribute to a profile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DayFilter {
    All,
    /// November through March.
    Winter,
    /// June through August.
    Summer,
    Month { year: i32, month: u8 },
    /// Day indices `start..end` relative to the curve start.
    Days { start: usize, end: usize },
}

impl DayFilter {
    pub fn accepts(&self, day: usize, date: CivilDate) -> bool {
        match *self {
            Self::All => true,
            Self::Winter => date.is_winter(),
            Self::Summer => date.is_summer(),
            Self::Month { year, month } => date.year == year && date.month == month,
            Self::Days { start, end } => (start..end).contains(&day),
        }
    }
}

/// Mean consumption per half-hour-of-day.
#[derive(Clone, Debug, PartialEq)]
pub struct DailyProfile(pub [f64; SLOTS_PER_DAY]);

impl DailyProfile {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

pub fn daily_profile(values: &[f64], start: Timestamp, filter: DayFilter) -> Result<DailyProfile> {
    let mut acc = [0.0; SLOTS_PER_DAY];
    let mut n = 0usize;
    for (d, day) in values.chunks_exact(SLOTS_PER_DAY).enumerate() {
        if !filter.accepts(d, start.add_days(d as i64).date()) {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(day) {
            *a += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptySelection("no day matches the filter"));
    }
    for a in &mut acc {
        *a /= n as f64;
    }
    Ok(DailyProfile(acc))
}

pub fn curve_profile(curve: &LoadCurve, filter: DayFilter) -> Result<DailyProfile> {
    daily_profile(&curve.values, curve.start, filter)
}

/// Mean slot-of-week consumption over curves and whole weeks; a trailing partial week is dropped.
pub fn weekly_profile(curves: &[&[f64]]) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; SLOTS_PER_WEEK];
    let mut n = 0usize;
    for c in curves {
        if c.len() < SLOTS_PER_WEEK {
            return Err(Error::InsufficientData { what: "weekly profile", needed: SLOTS_PER_WEEK, got: c.len() });
        }
        for week in c.chunks_exact(SLOTS_PER_WEEK) {
            for (a, v) in acc.iter_mut().zip(week) {
                *a += v;
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptySelection("no curves"));
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    Ok(acc)
}

/// Eight summary statistics of a load curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stats8 {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    /// Most frequent slot (0..48) of the daily maximum, lowest slot on ties.
    pub peak_slot_mode: usize,
}

impl Stats8 {
    pub fn to_array(&self) -> [f64; 8] {
        [self.mean, self.std, self.min, self.max, self.median, self.q10, self.q90, self.peak_slot_mode as f64]
    }
}

pub fn stats8(values: &[f64]) -> Stats8 {
    let s = sorted(values);
    let mut peaks = [0usize; SLOTS_PER_DAY];
    for day in values.chunks_exact(SLOTS_PER_DAY) {
        let mut best = 0;
        for (i, v) in day.iter().enumerate() {
            if *v > day[best] {
                best = i;
            }
        }
        peaks[best] += 1;
    }
    let mut mode = 0;
    for (i, c) in peaks.iter().enumerate() {
        if *c > peaks[mode] {
            mode = i;
        }
    }
    Stats8 {
        mean: mean(values),
        std: std_dev(values),
        min: s.first().copied().unwrap_or(f64::NAN),
        max: s.last().copied().unwrap_or(f64::NAN),
        median: quantile_sorted(&s, 0.5),
        q10: quantile_sorted(&s, 0.1),
        q90: quantile_sorted(&s, 0.9),
        peak_slot_mode: mode,
    }
}

pub const FEATURE_DIM: usize = 2 * SLOTS_PER_DAY + 8;

/// Year profile (48), winter profile (48) and [`stats8`] (8): 104 values.
///
/// A window without winter days reuses the year profile for the winter block.
pub fn feature_vector(curve: &LoadCurve) -> Vec<f64> {
    let year = curve_profile(curve, DayFilter::All).map(|p| p.0).unwrap_or([0.0; SLOTS_PER_DAY]);
    let winter = curve_profile(curve, DayFilter::Winter).map(|p| p.0).unwrap_or(year);
    let mut v = Vec::with_capacity(FEATURE_DIM);
    v.extend_from_slice(&year);
    v.extend_from_slice(&winter);
    v.extend_from_slice(&stats8(&curve.values).to_array());
    v
}

/// Biased sample autocorrelation for lags `0..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::InsufficientData { what: "autocorrelation lags", needed: max_lag + 1, got: n });
    }
    let m = mean(x);
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let var: f64 = c.iter().map(|v| v * v).sum();
    if !(var > 0.0) {
        return Err(Error::ConstantSeries);
    }
    Ok((0..=max_lag)
        .map(|l| if l == 0 { 1.0 } else { c[..n - l].iter().zip(&c[l..]).map(|(a, b)| a * b).sum::<f64>() / var })
        .collect())
}

/// A projection of points onto their two leading principal components.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection2d {
    pub coords: Vec<[f64; 2]>,
    pub components: [Vec<f64>; 2],
    /// Share of total variance carried by each component.
    pub explained: [f64; 2],
    /// Numerical rank of the centered point set, capped at 2.
    pub rank: usize,
}

pub fn pca_project_2d(points: &[&[f64]]) -> Result<Projection2d> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData { what: "PCA projection", needed: 3, got: n });
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: p.len() });
    }
    let mut centroid = vec![0.0; d];
    for p in points {
        centroid.iter_mut().zip(p.iter()).for_each(|(c, v)| *c += v);
    }
    centroid.iter_mut().for_each(|c| *c /= n as f64);
    let x = Matrix::from_rows(n, d, points.iter().flat_map(|p| p.iter().zip(&centroid).map(|(v, c)| v - c)).collect());

    // Eigen-decompose whichever of XᵀX (d×d) and XXᵀ (n×n) is smaller.
    let (values, mut comps): (Vec<f64>, [Vec<f64>; 2]) = if d <= n {
        let eig = symmetric_eigen(&x.transpose().matmul(&x))?;
        let col = |k: usize| (0..d).map(|i| if k < d { eig.vectors[(i, k)] } else { 0.0 }).collect();
        (eig.values.clone(), [col(0), col(1)])
    } else {
        let eig = symmetric_eigen(&x.matmul(&x.transpose()))?;
        let xt = x.transpose();
        let comp = |k: usize| -> Vec<f64> {
            let lambda = eig.values[k];
            if lambda <= 0.0 {
                return vec![0.0; d];
            }
            let s = libm::sqrt(lambda);
            (0..d).map(|i| (0..n).map(|j| xt[(i, j)] * eig.vectors[(j, k)]).sum::<f64>() / s).collect()
        };
        (eig.values.clone(), [comp(0), comp(1)])
    };
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let top = values.first().copied().unwrap_or(0.0).max(0.0);
    let second = values.get(1).copied().unwrap_or(0.0).max(0.0);
    let tol = 1e-12 * top.max(f64::MIN_POSITIVE);
    let rank = if top <= tol { 0 } else if second <= tol { 1 } else { 2 };
    for (k, comp) in comps.iter_mut().enumerate() {
        if k >= rank {
            comp.iter_mut().for_each(|c| *c = 0.0);
            continue;
        }
        let mut big = 0;
        for (i, c) in comp.iter().enumerate() {
            if c.abs() > comp[big].abs() {
                big = i;
            }
        }
        if comp[big] < 0.0 {
            comp.iter_mut().for_each(|c| *c = -*c);
        }
    }
    let coords = (0..n)
        .map(|r| {
            let row = x.row(r);
            [crate::linalg::dot(row, &comps[0]), crate::linalg::dot(row, &comps[1])]
        })
        .collect();
    let share = |v: f64| if total > 0.0 { v / total } else { 0.0 };
    Ok(Projection2d {
        coords,
        components: comps,
        explained: [share(top), if rank >= 2 { share(second) } else { 0.0 }],
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContractedPower, TimeOfUse};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn start() -> Timestamp {
        Timestamp::midnight(2022, 10, 1)
    }

    #[test]
    fn znorm_two_points() {
        let z = znorm_instance(&[1.0, 3.0]).unwrap();
        assert_eq!(z.series, [-1.0, 1.0]);
        assert_eq!((z.mean, z.std), (2.0, 1.0));
        assert_eq!(znorm_instance(&[5.0, 5.0, 5.0]), Err(Error::ConstantSeries));
    }

    #[test]
    fn znorm_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..500).map(|_| rng.random_range(0.0..4.0)).collect();
        let once = znorm_instance(&x).unwrap();
        assert!(mean(&once.series).abs() < 1e-12);
        assert!((std_dev(&once.series) - 1.0).abs() < 1e-9);
        let twice = znorm_instance(&once.series).unwrap();
        for (a, b) in once.series.iter().zip(&twice.series) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn daily_profile_averages_days() {
        let mut v = vec![1.0; 48];
        v.extend(vec![3.0; 48]);
        let p = daily_profile(&v, start(), DayFilter::All).unwrap();
        assert!(p.0.iter().all(|x| *x == 2.0));

        let day: Vec<f64> = (0..48).map(f64::from).collect();
        let twice: Vec<f64> = day.iter().chain(&day).copied().collect();
        assert_eq!(daily_profile(&twice, start(), DayFilter::All).unwrap().0.to_vec(), day);

        assert!(daily_profile(&twice, start(), DayFilter::Winter).is_err());
    }

    #[test]
    fn winter_filter_from_october_start() {
        // 2022-10-01 .. 2023-09-30: winter days are Nov 1 .. Mar 31.
        let n_days = 365;
        let values: Vec<f64> = (0..n_days * 48).map(|i| (i / 48) as f64).collect();
        let p = daily_profile(&values, start(), DayFilter::Winter).unwrap();
        // Day index of 2022-11-01 is 31, of 2023-03-31 is 181.
        let expected = (31..=181).map(|d| d as f64).sum::<f64>() / 151.0;
        assert!((p.0[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn weekly_profile_cases() {
        let week: Vec<f64> = (0..336).map(|i| (i % 17) as f64).collect();
        let rep: Vec<f64> = week.iter().chain(&week).copied().collect();
        assert_eq!(weekly_profile(&[&rep]).unwrap(), week);

        let ones = vec![1.0; 336 * 2];
        let threes = vec![3.0; 336 * 2];
        assert!(weekly_profile(&[&ones, &threes]).unwrap().iter().all(|x| *x == 2.0));

        let mut ten: Vec<f64> = vec![1.0; 7 * 48];
        ten.extend(vec![100.0; 3 * 48]);
        assert!(weekly_profile(&[&ten]).unwrap().iter().all(|x| *x == 1.0));
    }

    #[test]
    fn stats8_cases() {
        let s = stats8(&vec![2.0; 96]);
        assert_eq!(s.to_array(), [2.0, 0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0]);

        let alt: Vec<f64> = (0..96).map(|i| (i % 2) as f64).collect();
        let s = stats8(&alt);
        assert_eq!((s.mean, s.min, s.max), (0.5, 0.0, 1.0));
        assert_eq!(s.peak_slot_mode, 1);
    }

    #[test]
    fn stats8_ramp_quantiles_from_order_statistics() {
        // Ramp 0..47 repeated on two days: sorted sample is each value twice.
        let v: Vec<f64> = (0..96).map(|i| (i % 48) as f64).collect();
        let s = stats8(&v);
        // Oracle: with n = 96 sorted values y_k = floor(k / 2), q at h = 95 q.
        let order = |k: usize| (k / 2) as f64;
        let q = |p: f64| {
            let h = 95.0 * p;
            let lo = h.floor() as usize;
            order(lo) + (h - lo as f64) * (order(lo + 1) - order(lo))
        };
        assert!((s.median - q(0.5)).abs() < 1e-12);
        assert!((s.q10 - q(0.1)).abs() < 1e-12);
        assert!((s.q90 - q(0.9)).abs() < 1e-12);
        assert_eq!(s.peak_slot_mode, 47);
    }

    #[test]
    fn feature_vector_dimension() {
        let curve = LoadCurve {
            meter_id: "m".into(),
            start: start(),
            values: (0..14 * 48).map(|i| (i % 48) as f64 * 0.1).collect(),
            power: ContractedPower::Kva6,
            tou: TimeOfUse::Night,
            station_id: "s".into(),
        };
        assert_eq!(feature_vector(&curve).len(), FEATURE_DIM);
        assert_eq!(FEATURE_DIM, 104);
    }

    #[test]
    fn acf_alternating() {
        let x: Vec<f64> = (0..200).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&x, 2).unwrap();
        assert_eq!(a[0], 1.0);
        // Biased estimator: (T - l) / T.
        assert!((a[1] + 199.0 / 200.0).abs() < 1e-12);
        assert!((a[2] - 198.0 / 200.0).abs() < 1e-12);
        assert_eq!(acf(&[1.0; 10], 2), Err(Error::ConstantSeries));
    }

    #[test]
    fn acf_alternating_long_series_is_minus_one() {
        let x: Vec<f64> = (0..1_000_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&x, 2).unwrap();
        assert!((a[1] + 1.0).abs() < 1e-5);
        assert!((a[2] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn acf_white_noise_within_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = 48 * 200;
        let x: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        let a = acf(&x, 48).unwrap();
        assert!(a[48].abs() < 3.0 / (t as f64).sqrt());
    }

    #[test]
    fn pca_plane_reconstructs_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let basis: [Vec<f64>; 2] = [
            (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..10).map(|_| rng.random_range(-1.0..1.0)).collect(),
        ];
        let offset: Vec<f64> = (0..10).map(|_| rng.random_range(-5.0..5.0)).collect();
        let pts: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
                (0..10).map(|i| offset[i] + a * basis[0][i] + b * basis[1][i]).collect()
            })
            .collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let proj = pca_project_2d(&refs).unwrap();
        assert_eq!(proj.rank, 2);
        let centroid: Vec<f64> = (0..10).map(|i| pts.iter().map(|p| p[i]).sum::<f64>() / 30.0).collect();
        for (p, c) in pts.iter().zip(&proj.coords) {
            for i in 0..10 {
                let r = centroid[i] + c[0] * proj.components[0][i] + c[1] * proj.components[1][i];
                assert!((r - p[i]).abs() < 1e-9);
            }
        }
        assert!((proj.explained[0] + proj.explained[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pca_gram_route_matches_covariance_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..6).map(|_| (0..12).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let wide: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let a = pca_project_2d(&wide).unwrap();
        // Pad with duplicates of the centroid-free layout: compare via a tall copy of the same cloud.
        let tall: Vec<Vec<f64>> = pts.iter().cycle().take(18).cloned().collect();
        let tall_refs: Vec<&[f64]> = tall.iter().map(|p| p.as_slice()).collect();
        let b = pca_project_2d(&tall_refs).unwrap();
        for (x, y) in a.coords.iter().zip(&b.coords) {
            assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn pca_isotropic_shares_equal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..20_000).map(|_| (0..2).map(|_| StandardNormal.sample(&mut rng)).collect()).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let proj = pca_project_2d(&refs).unwrap();
        // Eigenvalues of a 2x2 Wishart with n = 20000 differ by O(1/sqrt(n)).
        assert!((proj.explained[0] - 0.5).abs() < 0.03);
        assert!((proj.explained[1] - 0.5).abs() < 0.03);
    }

    #[test]
    fn pca_duplicates_and_degenerate_rank() {
        let pts = [vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 1.0], vec![3.0, 1.0, 1.0]];
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let proj = pca_project_2d(&refs).unwrap();
        assert_eq!(proj.coords[0], proj.coords[2]);

        let line = [vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        let refs: Vec<&[f64]> = line.iter().map(|p| p.as_slice()).collect();
        let proj = pca_project_2d(&refs).unwrap();
        assert_eq!(proj.rank, 1);
        assert!(proj.coords.iter().all(|c| c[1] == 0.0));
    }
}
