//! A conditional statistical load-curve generator used as a test double and for
//! calibrating null hypotheses.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AlignedDataset, ContractedPower, LoadCurve, Role, TemperatureSeries, TimeOfUse, Window, SLOTS_PER_DAY, TEMPERATURE_BOUNDS};
use crate::seed::{derive_seed, derived_rng, rng};
use crate::thermo::{daily_mean_temperatures, degree_day, DEFAULT_THRESHOLD};
use crate::time::{CivilDate, Timestamp};

/// 48-slot daily templates (kWh per slot) for each tariff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Templates {
    pub midday: Vec<f64>,
    pub night: Vec<f64>,
    pub misc: Vec<f64>,
}

impl Templates {
    pub fn get(&self, tou: TimeOfUse) -> &[f64] {
        match tou {
            TimeOfUse::Midday => &self.midday,
            TimeOfUse::Night => &self.night,
            TimeOfUse::Misc => &self.misc,
        }
    }
}

fn bump(hour: f64, from: f64, to: f64, height: f64) -> f64 {
    if hour >= from && hour < to {
        height
    } else {
        0.0
    }
}

impl Default for Templates {
    fn default() -> Self {
        let build = |f: &dyn Fn(f64) -> f64| (0..SLOTS_PER_DAY).map(|s| f(s as f64 / 2.0)).collect();
        let evening = |h: f64| bump(h, 18.0, 21.5, 0.35) + bump(h, 7.0, 8.5, 0.15);
        Self {
            midday: build(&|h| 0.18 + evening(h) + bump(h, 12.0, 16.0, 0.55)),
            night: build(&|h| 0.18 + evening(h) + bump(h, 23.0, 24.0, 0.6) + bump(h, 0.0, 5.0, 0.6)),
            misc: build(&|h| 0.22 + evening(h) + bump(h, 18.0, 22.0, 0.2)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub n_curves: usize,
    pub start: Timestamp,
    pub n_days: usize,
    /// Probabilities of midday, night and misc tariffs.
    pub tou_mix: [f64; 3],
    /// Probabilities of 6, 9 and 12 kVA.
    pub power_mix: [f64; 3],
    /// Template multipliers for 6, 9 and 12 kVA.
    pub power_scale: [f64; 3],
    pub templates: Templates,
    /// Per-curve level multipliers are log-normal with this log-scale spread.
    pub level_spread: f64,
    /// Thermo-sensitivity gradient distribution, kWh per degree-day.
    pub gradient_mean: f64,
    pub gradient_std: f64,
    pub t_thresh: f64,
    /// Standard deviation of the residual noise, kWh per slot.
    pub noise_scale: f64,
    /// Slot-to-slot autocorrelation of the noise pool.
    pub noise_ar: f64,
    pub noise_pool_days: usize,
    /// Bootstrap block length, in days.
    pub block_days: usize,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            n_curves: 100,
            start: Timestamp::midnight(2021, 1, 4),
            n_days: 28,
            tou_mix: [0.3, 0.4, 0.3],
            power_mix: [0.5, 0.3, 0.2],
            power_scale: [1.0, 1.4, 1.8],
            templates: Templates::default(),
            level_spread: 0.2,
            gradient_mean: 2.5,
            gradient_std: 0.8,
            t_thresh: DEFAULT_THRESHOLD,
            noise_scale: 0.05,
            noise_ar: 0.7,
            noise_pool_days: 28,
            block_days: 2,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn window(&self) -> Window {
        Window::new(self.start, self.n_days)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        for (name, mix) in [("tou_mix", &self.tou_mix), ("power_mix", &self.power_mix)] {
            if mix.iter().any(|p| !(*p >= 0.0)) || libm::fabs(mix.iter().sum::<f64>() - 1.0) > 1e-9 {
                return Err(Error::InvalidArgument(format!("{name} must be non-negative and sum to 1")));
            }
        }
        for t in [&self.templates.midday, &self.templates.night, &self.templates.misc] {
            if t.len() != SLOTS_PER_DAY {
                return Err(Error::DimensionMismatch { expected: SLOTS_PER_DAY, got: t.len() });
            }
        }
        if !(self.noise_scale >= 0.0 && self.gradient_std >= 0.0 && self.level_spread >= 0.0) {
            return bad("noise scale and spreads must be non-negative");
        }
        if !(self.noise_ar > -1.0 && self.noise_ar < 1.0) {
            return bad("noise_ar must lie in (-1, 1)");
        }
        if self.block_days == 0 || self.noise_pool_days < self.block_days {
            return bad("block length must be at least 1 day and fit in the noise pool");
        }
        if !self.start.is_slot_aligned() {
            return bad("start must lie on a half-hour boundary");
        }
        Ok(())
    }
}

fn categorical<R: Rng>(r: &mut R, probs: &[f64; 3]) -> usize {
    let u: f64 = r.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Stationary AR(1) noise with standard deviation `scale`, private to one curve.
fn noise_pool(cfg: &SurrogateConfig, curve: usize) -> Vec<f64> {
    let mut r = derived_rng(cfg.seed, &format!("surrogate/noise-pool/{curve}"));
    let n = cfg.noise_pool_days * SLOTS_PER_DAY;
    let phi = cfg.noise_ar;
    let innov = cfg.noise_scale * libm::sqrt(1.0 - phi * phi);
    let mut out = Vec::with_capacity(n);
    let z: f64 = StandardNormal.sample(&mut r);
    let mut e = cfg.noise_scale * z;
    for _ in 0..n {
        out.push(e);
        let z: f64 = StandardNormal.sample(&mut r);
        e = phi * e + innov * z;
    }
    out
}

const TOU: [TimeOfUse; 3] = [TimeOfUse::Midday, TimeOfUse::Night, TimeOfUse::Misc];
const POWER: [ContractedPower; 3] = [ContractedPower::Kva6, ContractedPower::Kva9, ContractedPower::Kva12];

fn generate_role(cfg: &SurrogateConfig, temps: &BTreeMap<String, TemperatureSeries>, role: Role, prefix: &str) -> Result<AlignedDataset> {
    cfg.validate()?;
    let window = cfg.window();
    if temps.is_empty() {
        return Err(Error::EmptySelection("surrogate generation needs at least one temperature series"));
    }
    let mut dju = BTreeMap::new();
    for (id, t) in temps {
        let covered = t
            .covering(&window)
            .ok_or_else(|| Error::InvalidArgument(format!("temperature series `{id}` does not cover the window")))?;
        let daily: Vec<f64> = daily_mean_temperatures(covered).iter().map(|&v| degree_day(v, cfg.t_thresh)).collect();
        dju.insert(id.as_str(), daily);
    }
    let stations: Vec<&str> = dju.keys().copied().collect();
    let block = cfg.block_days * SLOTS_PER_DAY;
    let n_blocks_in_pool = cfg.noise_pool_days - cfg.block_days + 1;

    let mut ds = AlignedDataset::new(role, window);
    ds.temperatures = temps.clone();
    for i in 0..cfg.n_curves {
        // Every draw below is made regardless of the temperatures, so two runs that
        // differ only in temperature share labels, levels and noise.
        let mut r = derived_rng(cfg.seed, &format!("surrogate/curve/{i}"));
        let tou = TOU[categorical(&mut r, &cfg.tou_mix)];
        let p = categorical(&mut r, &cfg.power_mix);
        let station = stations[r.random_range(0..stations.len())];
        let z: f64 = StandardNormal.sample(&mut r);
        let level = cfg.power_scale[p] * libm::exp(cfg.level_spread * z - cfg.level_spread * cfg.level_spread / 2.0);
        let z: f64 = StandardNormal.sample(&mut r);
        let gradient = cfg.gradient_mean + cfg.gradient_std * z;

        let template = cfg.templates.get(tou);
        let days = &dju[station];
        let pool = noise_pool(cfg, i);
        let mut values = Vec::with_capacity(window.n_slots());
        while values.len() < window.n_slots() {
            let from = r.random_range(0..n_blocks_in_pool) * SLOTS_PER_DAY;
            let take = block.min(window.n_slots() - values.len());
            for k in 0..take {
                let t = values.len();
                let base = level * template[t % SLOTS_PER_DAY] + gradient * days[t / SLOTS_PER_DAY] / SLOTS_PER_DAY as f64;
                values.push((base + pool[from + k]).max(0.0));
            }
        }
        ds.curves.push(LoadCurve {
            meter_id: format!("{prefix}{i:05}"),
            start: window.start,
            values,
            power: POWER[p],
            tou,
            station_id: station.into(),
        });
    }
    Ok(ds)
}

/// One surrogate dataset; curves are tiled tariff templates, a linear heating
/// response to degree-days and block-bootstrapped autocorrelated noise.
pub fn generate(cfg: &SurrogateConfig, temps: &BTreeMap<String, TemperatureSeries>) -> Result<AlignedDataset> {
    generate_role(cfg, temps, Role::Train, "m")
}

/// Three independent draws (train, test, synthetic) from one configuration.
pub fn generate_split(cfg: &SurrogateConfig, temps: &BTreeMap<String, TemperatureSeries>) -> Result<(AlignedDataset, AlignedDataset, AlignedDataset)> {
    let with_seed = |label: &str| SurrogateConfig { seed: derive_seed(cfg.seed, label), ..cfg.clone() };
    Ok((
        generate_role(&with_seed("train"), temps, Role::Train, "train-")?,
        generate_role(&with_seed("test"), temps, Role::Test, "test-")?,
        generate_role(&with_seed("synthetic"), temps, Role::Synthetic, "synth-")?,
    ))
}

/// The synthetic member of [`generate_split`] regenerated under other
/// temperatures; labels, levels and noise are unchanged.
pub fn generate_synthetic_under(cfg: &SurrogateConfig, temps: &BTreeMap<String, TemperatureSeries>) -> Result<AlignedDataset> {
    let cfg = SurrogateConfig { seed: derive_seed(cfg.seed, "synthetic"), ..cfg.clone() };
    generate_role(&cfg, temps, Role::Synthetic, "synth-")
}

/// Seasonal temperature model: an annual cosine with its minimum on
/// `coldest_day`, a daily cycle peaking mid-afternoon and AR(1) daily anomalies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureModel {
    pub annual_mean: f64,
    pub annual_amplitude: f64,
    pub coldest_day: f64,
    pub daily_amplitude: f64,
    pub anomaly_std: f64,
    pub anomaly_ar: f64,
}

impl Default for TemperatureModel {
    fn default() -> Self {
        Self { annual_mean: 12.0, annual_amplitude: 8.0, coldest_day: 20.0, daily_amplitude: 3.0, anomaly_std: 3.0, anomaly_ar: 0.7 }
    }
}

pub fn synthetic_temperatures(station_id: &str, window: Window, model: &TemperatureModel, seed: u64) -> TemperatureSeries {
    let mut r = rng(derive_seed(seed, &format!("temperature/{station_id}")));
    let (lo, hi) = TEMPERATURE_BOUNDS;
    let innov = model.anomaly_std * libm::sqrt(1.0 - model.anomaly_ar * model.anomaly_ar);
    let z: f64 = StandardNormal.sample(&mut r);
    let mut anomaly = model.anomaly_std * z;
    let mut values = Vec::with_capacity(window.n_slots());
    for d in 0..window.n_days {
        let date = window.day_date(d);
        let jan1 = CivilDate { year: date.year, month: 1, day: 1 };
        let doy = (date.days_since_epoch() - jan1.days_since_epoch()) as f64;
        let seasonal = model.annual_mean - model.annual_amplitude * libm::cos(2.0 * PI * (doy - model.coldest_day) / 365.25);
        for s in 0..SLOTS_PER_DAY {
            let slot = window.start.add_slots((d * SLOTS_PER_DAY + s) as i64);
            let hour = slot.hour() as f64 + slot.minute() as f64 / 60.0;
            let diurnal = model.daily_amplitude * libm::cos(2.0 * PI * (hour - 15.0) / 24.0);
            values.push((seasonal + anomaly + diurnal).clamp(lo, hi));
        }
        let z: f64 = StandardNormal.sample(&mut r);
        anomaly = model.anomaly_ar * anomaly + innov * z;
    }
    TemperatureSeries { station_id: station_id.into(), start: window.start, values }
}

/// Temperature series for `n_stations` stations named `ST00`, `ST01`, ...
pub fn synthetic_stations(n_stations: usize, window: Window, model: &TemperatureModel, seed: u64) -> BTreeMap<String, TemperatureSeries> {
    (0..n_stations)
        .map(|i| {
            let id = format!("ST{i:02}");
            let series = synthetic_temperatures(&id, window, model, seed);
            (id, series)
        })
        .collect()
}

/// Adds `offset` degrees to every reading.
pub fn offset_temperatures(temps: &BTreeMap<String, TemperatureSeries>, offset: f64) -> BTreeMap<String, TemperatureSeries> {
    temps
        .iter()
        .map(|(k, t)| (k.clone(), TemperatureSeries { values: t.values.iter().map(|v| v + offset).collect(), ..t.clone() }))
        .collect()
}
