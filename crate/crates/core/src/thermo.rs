//! Thermo-sensitivity: winter degree-day regressions per meter and their comparison.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{partition_by_category, AlignedDataset, Category, LoadCurve, DAYS_PER_WEEK, SLOTS_PER_DAY};
use crate::stats::{mean, min_max, sample_std, wasserstein1, Histogram};

pub const DEFAULT_THRESHOLD: f64 = 16.0;
/// Regional heating thresholds in use, °C.
pub const THRESHOLD_RANGE: (f64, f64) = (14.5, 18.0);

/// `max(0, t_thresh - t_day)`.
pub fn degree_day(t_day: f64, t_thresh: f64) -> f64 {
    (t_thresh - t_day).max(0.0)
}

pub fn threshold_in_range(t_thresh: f64) -> bool {
    (THRESHOLD_RANGE.0..=THRESHOLD_RANGE.1).contains(&t_thresh)
}

pub fn daily_totals(values: &[f64]) -> Vec<f64> {
    values.chunks_exact(SLOTS_PER_DAY).map(|d| d.iter().sum()).collect()
}

pub fn daily_mean_temperatures(temps: &[f64]) -> Vec<f64> {
    values_mean_per_day(temps)
}

fn values_mean_per_day(values: &[f64]) -> Vec<f64> {
    values.chunks_exact(SLOTS_PER_DAY).map(|d| d.iter().sum::<f64>() / SLOTS_PER_DAY as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientResult {
    pub meter_id: String,
    /// kWh per degree-day.
    pub gradient: f64,
    pub n_points: usize,
    pub t_thresh: f64,
}

/// Through-origin regression of weekly load deltas on weekly degree-day deltas over
/// winter days `d` (with `d - 7` inside the window).
pub fn thermo_gradient(curve: &LoadCurve, temps: &[f64], t_thresh: f64) -> Result<GradientResult> {
    if temps.len() != curve.values.len() {
        return Err(Error::DimensionMismatch { expected: curve.values.len(), got: temps.len() });
    }
    let load = daily_totals(&curve.values);
    let dju: Vec<f64> = daily_mean_temperatures(temps).iter().map(|&t| degree_day(t, t_thresh)).collect();
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut n_points = 0;
    for d in DAYS_PER_WEEK..load.len() {
        if !curve.day_date(d).is_winter() {
            continue;
        }
        let dl = load[d] - load[d - DAYS_PER_WEEK];
        let dd = dju[d] - dju[d - DAYS_PER_WEEK];
        sxy += dl * dd;
        sxx += dd * dd;
        n_points += 1;
    }
    if n_points == 0 {
        return Err(Error::InsufficientData { what: "winter day pairs", needed: 1, got: 0 });
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedGradient);
    }
    Ok(GradientResult { meter_id: curve.meter_id.clone(), gradient: sxy / sxx, n_points, t_thresh })
}

/// Gradients of every curve; curves without a defined gradient are returned separately.
pub fn dataset_gradients(ds: &AlignedDataset, t_thresh: f64) -> (Vec<GradientResult>, Vec<(String, Error)>) {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for curve in &ds.curves {
        let res = match ds.temperature_for(curve) {
            Some(t) => thermo_gradient(curve, t, t_thresh),
            None => Err(Error::EmptySelection("no temperature series covers the window")),
        };
        match res {
            Ok(g) => ok.push(g),
            Err(e) => failed.push((curve.meter_id.clone(), e)),
        }
    }
    (ok, failed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientComparison {
    pub n_real: usize,
    pub n_synth: usize,
    pub real_mean: f64,
    pub synth_mean: f64,
    pub real_std: f64,
    pub synth_std: f64,
    pub wasserstein1: f64,
    pub edges: Vec<f64>,
    pub real_counts: Vec<u64>,
    pub synth_counts: Vec<u64>,
}

pub fn compare_gradients(real: &[f64], synth: &[f64], bins: usize) -> Result<GradientComparison> {
    for n in [real.len(), synth.len()] {
        if n < 2 {
            return Err(Error::InsufficientData { what: "gradient distribution", needed: 2, got: n });
        }
    }
    let pooled: Vec<f64> = real.iter().chain(synth).copied().collect();
    let (lo, hi) = min_max(&pooled);
    let edges = Histogram::edges(lo, hi, bins);
    Ok(GradientComparison {
        n_real: real.len(),
        n_synth: synth.len(),
        real_mean: mean(real),
        synth_mean: mean(synth),
        real_std: sample_std(real),
        synth_std: sample_std(synth),
        wasserstein1: wasserstein1(real, synth),
        real_counts: Histogram::with_edges(edges.clone(), real).counts,
        synth_counts: Histogram::with_edges(edges.clone(), synth).counts,
        edges,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ThermoComparison {
    pub per_category: BTreeMap<Category, GradientComparison>,
    pub skipped: BTreeMap<Category, String>,
}

/// Per-category gradient histograms on shared bins and Wasserstein-1 distances.
pub fn gradient_distribution_compare(
    real: &AlignedDataset,
    synth: &AlignedDataset,
    t_thresh: f64,
    bins: usize,
) -> ThermoComparison {
    let rg: BTreeMap<String, f64> = dataset_gradients(real, t_thresh).0.into_iter().map(|g| (g.meter_id, g.gradient)).collect();
    let sg: BTreeMap<String, f64> = dataset_gradients(synth, t_thresh).0.into_iter().map(|g| (g.meter_id, g.gradient)).collect();
    let synth_parts = partition_by_category(synth);
    let mut out = ThermoComparison::default();
    for (cat, part) in partition_by_category(real) {
        let r: Vec<f64> = part.curves.iter().filter_map(|c| rg.get(&c.meter_id).copied()).collect();
        let s: Vec<f64> = synth_parts
            .get(&cat)
            .map(|p| p.curves.iter().filter_map(|c| sg.get(&c.meter_id).copied()).collect())
            .unwrap_or_default();
        match compare_gradients(&r, &s, bins) {
            Ok(c) => {
                out.per_category.insert(cat, c);
            }
            Err(e) => {
                out.skipped.insert(cat, format!("{e}"));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffsetCategory {
    pub base_mean_curve: Vec<f64>,
    pub offset_mean_curve: Vec<f64>,
    pub difference: Vec<f64>,
    /// Mean per-slot difference over winter days (Nov–Mar), if any.
    pub winter_uplift: Option<f64>,
    /// Mean per-slot difference over summer days (Jun–Aug), if any.
    pub summer_uplift: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OffsetComparison {
    pub per_category: BTreeMap<Category, OffsetCategory>,
    pub skipped: BTreeMap<Category, String>,
}

fn mean_curve(ds: &AlignedDataset) -> Vec<f64> {
    let mut acc = alloc::vec![0.0; ds.window.n_slots()];
    for c in &ds.curves {
        acc.iter_mut().zip(&c.values).for_each(|(a, v)| *a += v);
    }
    acc.iter_mut().for_each(|a| *a /= ds.len() as f64);
    acc
}

/// Mean annual curves of a base dataset and of one generated under shifted
/// temperatures, with their difference and seasonal uplift summaries.
pub fn offset_compare(base: &AlignedDataset, offset: &AlignedDataset) -> Result<OffsetComparison> {
    if base.window != offset.window {
        return Err(Error::InvalidArgument("offset dataset covers a different window".into()));
    }
    let offset_parts = partition_by_category(offset);
    let mut out = OffsetComparison::default();
    let base_parts = partition_by_category(base);
    for cat in offset_parts.keys().filter(|c| !base_parts.contains_key(c)) {
        out.skipped.insert(*cat, "category absent from the base dataset".into());
    }
    for (cat, part) in base_parts {
        let Some(other) = offset_parts.get(&cat).filter(|p| !p.is_empty()) else {
            out.skipped.insert(cat, "category absent from the offset dataset".into());
            continue;
        };
        if part.is_empty() {
            out.skipped.insert(cat, "category absent from the base dataset".into());
            continue;
        }
        let b = mean_curve(&part);
        let o = mean_curve(other);
        let difference: Vec<f64> = o.iter().zip(&b).map(|(x, y)| x - y).collect();
        let season_mean = |keep: fn(crate::time::CivilDate) -> bool| {
            let vals: Vec<f64> = difference
                .chunks_exact(SLOTS_PER_DAY)
                .enumerate()
                .filter(|(d, _)| keep(base.window.day_date(*d)))
                .flat_map(|(_, day)| day.iter().copied())
                .collect();
            (!vals.is_empty()).then(|| mean(&vals))
        };
        out.per_category.insert(
            cat,
            OffsetCategory {
                winter_uplift: season_mean(|d| d.is_winter()),
                summer_uplift: season_mean(|d| d.is_summer()),
                base_mean_curve: b,
                offset_mean_curve: o,
                difference,
            },
        );
    }
    Ok(out)
}
