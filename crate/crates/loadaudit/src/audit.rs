//! Runs the requested suites over the configured datasets and assembles the
//! report and plot tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use loadaudit_core::encoder::EncoderConfig;
use loadaudit_core::fidelity::{aggregate_plots, evaluate_fidelity, space_vectors, Chunking, FidelityParams, Space, DEFAULT_BINS, DEFAULT_MAX_LAG};
use loadaudit_core::privacy::{
    blackbox_scores, mmd_three_sample_test, ngen_sweep, nndr, summarize_attack, whitebox_attack, AttackSummary, DEFAULT_FPR_TARGET,
};
use loadaudit_core::report::{MetricReport, Provenance, ReportMeta, Suite, SuiteReport};
use loadaudit_core::seed::{derive_seed, subsample_indices};
use loadaudit_core::stats::{mean, Histogram};
use loadaudit_core::thermo::{gradient_distribution_compare, offset_compare, threshold_in_range, DEFAULT_THRESHOLD};
use loadaudit_core::utility::{run_tstr, TstrConfig};
use loadaudit_core::{partition_by_category, AlignedDataset, Category, Role};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{num, read_dataset_from, read_manifest, read_score_file, write_csv, write_report};
use crate::tables::report_tables;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditParams {
    pub encoder: EncoderConfig,
    pub chunking: Chunking,
    pub max_lag: usize,
    pub bins: usize,
    pub t_thresh: f64,
    pub tstr: TstrConfig,
    pub fpr_target: f64,
    /// Synthetic-set sizes for the black-box sweep; empty disables it.
    pub ngen_sizes: Vec<usize>,
    pub ngen_repeats: usize,
    /// Largest per-set size fed to the three-sample MMD test.
    pub mmd_max_samples: usize,
}

impl Default for AuditParams {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::desk(),
            chunking: Chunking::Auto,
            max_lag: DEFAULT_MAX_LAG,
            bins: DEFAULT_BINS,
            t_thresh: DEFAULT_THRESHOLD,
            tstr: TstrConfig::default(),
            fpr_target: DEFAULT_FPR_TARGET,
            ngen_sizes: vec![10, 100, 500, 1000, 2000],
            ngen_repeats: 5,
            mmd_max_samples: 500,
        }
    }
}

fn all_suites() -> Vec<Suite> {
    Suite::ALL.to_vec()
}

/// One JSON document. Manifest and score paths are relative to the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub train: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub synthetic: Option<PathBuf>,
    /// Synthetic curves generated under offset temperatures, for the thermo suite.
    #[serde(default)]
    pub synthetic_offset: Option<PathBuf>,
    /// Externally computed white-box attack scores.
    #[serde(default)]
    pub whitebox_scores: Option<PathBuf>,
    #[serde(default = "all_suites")]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub params: AuditParams,
}

impl AuditConfig {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.train, &mut cfg.test, &mut cfg.synthetic, &mut cfg.synthetic_offset, &mut cfg.whitebox_scores, &mut cfg.out_dir]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn manifest(&self, role: Role) -> Option<&PathBuf> {
        match role {
            Role::Train => self.train.as_ref(),
            Role::Test => self.test.as_ref(),
            Role::Synthetic => self.synthetic.as_ref(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(Error::Config("no suites requested".into()));
        }
        for suite in &self.suites {
            for role in suite.required_roles() {
                if self.manifest(*role).is_none() {
                    return Err(Error::Config(format!("suite `{suite}` needs a `{role}` manifest")));
                }
            }
        }
        let p = &self.params;
        if !threshold_in_range(p.t_thresh) {
            return Err(Error::Config(format!("t_thresh {} is outside the supported range", p.t_thresh)));
        }
        if !(p.fpr_target > 0.0 && p.fpr_target < 1.0) {
            return Err(Error::Config("fpr_target must lie in (0, 1)".into()));
        }
        if p.bins == 0 || p.max_lag == 0 || p.mmd_max_samples < 2 {
            return Err(Error::Config("bins, max_lag and mmd_max_samples must be positive".into()));
        }
        p.encoder.validate()?;
        Ok(())
    }
}

/// A CSV table destined for the output directory.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let header: Vec<&str> = self.header.iter().map(|s| s.as_str()).collect();
        write_csv(&dir.join(&self.name), &header, self.rows.iter().cloned())
    }
}

pub struct AuditOutput {
    pub report: MetricReport,
    pub tables: Vec<Table>,
}

impl AuditOutput {
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_report(&self.report, &dir.join("report.json"))?;
        for t in self.tables.iter().chain(&report_tables(&self.report)) {
            t.write(dir)?;
        }
        Ok(())
    }
}

struct Datasets {
    train: Option<AlignedDataset>,
    test: Option<AlignedDataset>,
    synthetic: Option<AlignedDataset>,
}

fn load(cfg: &AuditConfig) -> Result<Datasets> {
    let needed = |role: Role| cfg.suites.iter().any(|s| s.required_roles().contains(&role));
    let read = |role: Role| -> Result<Option<AlignedDataset>> {
        match cfg.manifest(role).filter(|_| needed(role)) {
            None => Ok(None),
            Some(path) => {
                let m = read_manifest(path)?;
                if m.role != role {
                    return Err(Error::Config(format!("{} declares role `{}` but is configured as `{role}`", path.display(), m.role)));
                }
                read_dataset_from(path).map(Some)
            }
        }
    };
    let ds = Datasets { train: read(Role::Train)?, test: read(Role::Test)?, synthetic: read(Role::Synthetic)? };
    let windows: Vec<_> = [&ds.train, &ds.test, &ds.synthetic].into_iter().flatten().map(|d| d.window).collect();
    if windows.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Alignment("datasets cover different windows".into()));
    }
    Ok(ds)
}

fn get(ds: &Option<AlignedDataset>) -> &AlignedDataset {
    ds.as_ref().expect("required datasets are loaded after validation")
}

fn hist_rows(table: &mut Table, key: &[String], edges: &[f64], a: &[u64], b: &[u64]) {
    for i in 0..a.len() {
        let mut row = key.to_vec();
        row.extend([num(edges[i]), num(edges[i + 1]), a[i].to_string(), b[i].to_string()]);
        table.rows.push(row);
    }
}

/// Runs the configured suites. Each suite draws its randomness from a seed derived
/// from the root seed and its own name, so omitting a suite never changes another.
pub fn run_audit(cfg: &AuditConfig) -> Result<AuditOutput> {
    cfg.validate()?;
    let data = load(cfg)?;
    let mut meta = ReportMeta::new(concat!("loadaudit ", env!("CARGO_PKG_VERSION")), cfg.seed);
    for (role, ds) in [(Role::Train, &data.train), (Role::Test, &data.test), (Role::Synthetic, &data.synthetic)] {
        if let Some(ds) = ds {
            meta.datasets.insert(role.to_string(), ds.len());
            meta.window = Some(ds.window);
        }
    }
    let mut report = MetricReport::new(meta);
    let mut tables = Vec::new();
    let mut suites = cfg.suites.clone();
    suites.sort();
    suites.dedup();
    for suite in suites {
        let seed = derive_seed(cfg.seed, suite.as_str());
        let out = match suite {
            Suite::Fidelity => fidelity_suite(get(&data.test), get(&data.synthetic), &cfg.params, seed, &mut tables),
            Suite::Thermo => thermo_suite(cfg, get(&data.test), get(&data.synthetic), &mut tables)?,
            Suite::Utility => utility_suite(get(&data.train), get(&data.test), get(&data.synthetic), &cfg.params, seed)?,
            Suite::Privacy => privacy_suite(cfg, get(&data.train), get(&data.test), get(&data.synthetic), seed, &mut tables)?,
        };
        report.set_suite(suite, out);
    }
    Ok(AuditOutput { report, tables })
}

/// Runs the audit and writes `report.json` plus tables into `out_dir`.
pub fn run_and_write(cfg: &AuditConfig, out_dir: &Path) -> Result<AuditOutput> {
    let out = run_audit(cfg)?;
    out.write(out_dir)?;
    Ok(out)
}

fn parts(ds: &AlignedDataset) -> BTreeMap<Category, AlignedDataset> {
    partition_by_category(ds)
}

fn fidelity_suite(real: &AlignedDataset, synth: &AlignedDataset, p: &AuditParams, seed: u64, tables: &mut Vec<Table>) -> SuiteReport {
    let params = FidelityParams { encoder: p.encoder.clone(), chunking: p.chunking, max_lag: p.max_lag };
    let roles = [Role::Test, Role::Synthetic];
    let mut out = SuiteReport::default();
    let synth_parts = parts(synth);
    for (cat, part) in parts(real) {
        let s = synth_parts.get(&cat).cloned().unwrap_or_else(|| synth.with_curves(Vec::new()));
        let cat_seed = derive_seed(seed, &format!("category/{cat}"));
        let r = evaluate_fidelity(&part, &s, &params, cat_seed);
        let prov = Provenance::new(&roles, Some(cat_seed));
        out.push(cat, "n_real", r.n_real as f64, None, Provenance::new(&roles, None));
        out.push(cat, "n_synthetic", r.n_synth as f64, None, Provenance::new(&roles, None));
        for (name, v) in [("d_year", r.d_year), ("d_profile", r.d_profile), ("context_fid", r.context_fid), ("correlation_score", r.correlation_score)] {
            if let Some(v) = v {
                out.push(cat, name, v, None, prov.clone());
            }
        }
        out.notes.extend(r.notes.into_iter().map(|n| format!("{cat}: {n}")));
    }

    let plots = aggregate_plots(real, synth, p.max_lag, p.bins);
    let mut t = Table::new("fidelity_mean_curve.csv", &["slot", "real", "synthetic"]);
    for (i, (a, b)) in plots.real.mean_curve.iter().zip(&plots.synth.mean_curve).enumerate() {
        t.rows.push(vec![i.to_string(), num(*a), num(*b)]);
    }
    tables.push(t);
    let mut t = Table::new("fidelity_weekly_profile.csv", &["slot", "real", "synthetic"]);
    for (i, (a, b)) in plots.real.weekly_profile.iter().zip(&plots.synth.weekly_profile).enumerate() {
        t.rows.push(vec![i.to_string(), num(*a), num(*b)]);
    }
    tables.push(t);
    let mut t = Table::new("fidelity_acf.csv", &["lag", "real_mean", "real_std", "synthetic_mean", "synthetic_std"]);
    for i in 0..plots.real.acf_mean.len().min(plots.synth.acf_mean.len()) {
        t.rows.push(vec![
            i.to_string(),
            num(plots.real.acf_mean[i]),
            num(plots.real.acf_std[i]),
            num(plots.synth.acf_mean[i]),
            num(plots.synth.acf_std[i]),
        ]);
    }
    tables.push(t);
    let mut t = Table::new("fidelity_histograms.csv", &["statistic", "bin_lo", "bin_hi", "real", "synthetic"]);
    for h in &plots.histograms {
        hist_rows(&mut t, &[h.statistic.clone()], &h.edges, &h.real_counts, &h.synth_counts);
    }
    tables.push(t);
    let mut t = Table::new("fidelity_scatter.csv", &["source", "meter_id", "x", "y"]);
    for s in &plots.scatter {
        t.rows.push(vec![s.source.clone(), s.meter_id.clone(), num(s.x), num(s.y)]);
    }
    tables.push(t);
    out
}

fn thermo_suite(cfg: &AuditConfig, real: &AlignedDataset, synth: &AlignedDataset, tables: &mut Vec<Table>) -> Result<SuiteReport> {
    let p = &cfg.params;
    let mut out = SuiteReport::default();
    let cmp = gradient_distribution_compare(real, synth, p.t_thresh, p.bins);
    let prov = Provenance::new(&[Role::Test, Role::Synthetic], None);
    let mut t = Table::new("thermo_gradients.csv", &["category", "bin_lo", "bin_hi", "real", "synthetic"]);
    for (cat, c) in &cmp.per_category {
        for (name, v) in [
            ("n_real", c.n_real as f64),
            ("n_synthetic", c.n_synth as f64),
            ("real_mean", c.real_mean),
            ("synthetic_mean", c.synth_mean),
            ("real_std", c.real_std),
            ("synthetic_std", c.synth_std),
            ("wasserstein1", c.wasserstein1),
        ] {
            out.push(*cat, name, v, None, prov.clone());
        }
        hist_rows(&mut t, &[cat.to_string()], &c.edges, &c.real_counts, &c.synth_counts);
    }
    tables.push(t);
    out.notes.extend(cmp.skipped.iter().map(|(cat, why)| format!("{cat}: gradients skipped: {why}")));

    if let Some(path) = &cfg.synthetic_offset {
        let offset = read_dataset_from(path)?;
        let oc = offset_compare(synth, &offset)?;
        let prov = Provenance::new(&[Role::Synthetic], None);
        for (cat, c) in &oc.per_category {
            if let Some(v) = c.winter_uplift {
                out.push(*cat, "offset_winter_uplift", v, None, prov.clone());
            }
            if let Some(v) = c.summer_uplift {
                out.push(*cat, "offset_summer_uplift", v, None, prov.clone());
            }
        }
        out.notes.extend(oc.skipped.iter().map(|(cat, why)| format!("{cat}: offset comparison skipped: {why}")));
        if let Some(all) = oc.per_category.get(&Category::ALL) {
            let mut t = Table::new("thermo_offset.csv", &["slot", "base", "offset", "difference"]);
            for (i, ((b, o), d)) in all.base_mean_curve.iter().zip(&all.offset_mean_curve).zip(&all.difference).enumerate() {
                t.rows.push(vec![i.to_string(), num(*b), num(*o), num(*d)]);
            }
            tables.push(t);
        }
    }
    Ok(out)
}

fn utility_suite(train: &AlignedDataset, test: &AlignedDataset, synth: &AlignedDataset, p: &AuditParams, seed: u64) -> Result<SuiteReport> {
    let mut out = SuiteReport::default();
    let r = run_tstr(synth, train, test, &p.tstr, seed)?;
    let all = Category::ALL;
    let roles = [Role::Train, Role::Test, Role::Synthetic];
    let prov = Provenance::new(&roles, Some(seed));
    let test_only = Provenance::new(&[Role::Test], None);
    out.push(all, "train_size", r.train_size as f64, None, prov.clone());
    for h in &r.horizons {
        let k = |s: &str| format!("forecast_h{}/{s}", h.horizon);
        out.push(all, k("tstr_mse"), h.synthetic.mse.mean, Some(h.synthetic.mse.std), prov.clone());
        out.push(all, k("tstr_mae"), h.synthetic.mae.mean, Some(h.synthetic.mae.std), prov.clone());
        out.push(all, k("trtr_mse"), h.real.mse.mean, Some(h.real.mse.std), prov.clone());
        out.push(all, k("trtr_mae"), h.real.mae.mean, Some(h.real.mae.std), prov.clone());
        if let Some((mse, mae)) = h.baseline {
            out.push(all, k("baseline_mse"), mse, None, test_only.clone());
            out.push(all, k("baseline_mae"), mae, None, test_only.clone());
        }
    }
    let c = |s: &loadaudit_core::stats::Spread| (s.mean, Some(s.std));
    for (name, (v, s)) in [
        ("tou_tstr_accuracy", c(&r.classification_synthetic.accuracy)),
        ("tou_tstr_macro_f1", c(&r.classification_synthetic.macro_f1)),
        ("tou_trtr_accuracy", c(&r.classification_real.accuracy)),
        ("tou_trtr_macro_f1", c(&r.classification_real.macro_f1)),
    ] {
        out.push(all, name, v, s, prov.clone());
    }
    let prov_major = Provenance::new(&[Role::Train, Role::Test], None);
    out.push(all, "tou_majority_accuracy", r.majority_baseline.0, None, prov_major.clone());
    out.push(all, "tou_majority_macro_f1", r.majority_baseline.1, None, prov_major);
    out.notes.extend(r.notes);
    out.note("utility is reported for the all-categories row only");
    Ok(out)
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(|x| x.as_slice()).collect()
}

fn roc_rows(table: &mut Table, attack: &str, s: &AttackSummary) {
    for p in &s.roc.points {
        table.rows.push(vec![attack.into(), num(p.threshold), num(p.fpr), num(p.tpr)]);
    }
}

fn privacy_suite(
    cfg: &AuditConfig,
    train: &AlignedDataset,
    test: &AlignedDataset,
    synth: &AlignedDataset,
    seed: u64,
    tables: &mut Vec<Table>,
) -> Result<SuiteReport> {
    let p = &cfg.params;
    let mut out = SuiteReport::default();
    let all_roles = [Role::Train, Role::Test, Role::Synthetic];
    let prov = Provenance::new(&all_roles, None);
    let (test_parts, synth_parts) = (parts(test), parts(synth));
    let mut roc = Table::new("privacy_roc.csv", &["attack", "threshold", "fpr", "tpr"]);
    let mut nndr_table = Table::new("privacy_nndr.csv", &["space", "targets", "bin_lo", "bin_hi", "count"]);

    for (cat, tr) in parts(train) {
        let (Some(te), Some(sy)) = (test_parts.get(&cat), synth_parts.get(&cat)) else {
            out.note(format!("{cat}: category missing from the test or synthetic set"));
            continue;
        };
        let cat_seed = derive_seed(seed, &format!("category/{cat}"));
        for (space, label) in [(Space::Year, "year"), (Space::Profile, "profile")] {
            match blackbox_scores(&tr, te, sy, space).and_then(|s| summarize_attack(&s, p.fpr_target)) {
                Ok(s) => {
                    out.push(cat, format!("blackbox_{label}/auc"), s.auc, None, prov.clone());
                    out.push(cat, format!("blackbox_{label}/tpr_at_fpr"), s.tpr_at_fpr, None, prov.clone());
                    if cat.is_all() {
                        roc_rows(&mut roc, &format!("blackbox_{label}"), &s);
                    }
                }
                Err(e) => out.note(format!("{cat}: blackbox_{label}: {e}")),
            }
            let tv = space_vectors(&tr, space);
            let hv = space_vectors(te, space);
            let sv = space_vectors(sy, space);
            for (targets, vecs) in [("train", &tv), ("test", &hv)] {
                match nndr(&refs(vecs), &refs(&sv)) {
                    Ok(ratios) => {
                        out.push(cat, format!("nndr_{label}_{targets}/mean"), mean(&ratios), None, prov.clone());
                        if cat.is_all() {
                            let h = Histogram::with_edges(Histogram::edges(0.0, 1.0, p.bins), &ratios);
                            for i in 0..h.counts.len() {
                                nndr_table.rows.push(vec![
                                    label.into(),
                                    targets.into(),
                                    num(h.edges[i]),
                                    num(h.edges[i + 1]),
                                    h.counts[i].to_string(),
                                ]);
                            }
                        }
                    }
                    Err(e) => out.note(format!("{cat}: nndr_{label}_{targets}: {e}")),
                }
            }
        }

        // Equal set sizes keep the second-order variance term of the MMD test.
        let n = tr.len().min(te.len()).min(sy.len()).min(p.mmd_max_samples);
        let pick = |ds: &AlignedDataset, label: &str| {
            let v = space_vectors(ds, Space::Profile);
            let keep = subsample_indices(v.len(), n, derive_seed(cat_seed, &format!("mmd/{label}")));
            keep.into_iter().map(|i| v[i].clone()).collect::<Vec<_>>()
        };
        let (ms, mtr, mte) = (pick(sy, "synthetic"), pick(&tr, "train"), pick(te, "test"));
        let mmd_seed = derive_seed(cat_seed, "mmd");
        match mmd_three_sample_test(&refs(&ms), &refs(&mtr), &refs(&mte), mmd_seed) {
            Ok(r) => {
                let prov = Provenance::new(&all_roles, Some(mmd_seed));
                out.push(cat, "mmd/p_value", r.p_value, None, prov.clone());
                out.push(cat, "mmd/statistic", r.statistic, Some(r.variance.sqrt()), prov.clone());
                out.push(cat, "mmd/bandwidth", r.bandwidth, None, prov.clone());
                out.push(cat, "mmd/n_per_set", n as f64, None, prov);
                if r.degenerate {
                    out.note(format!("{cat}: mmd variance estimate is not positive; p-value reported as 0.5"));
                }
            }
            Err(e) => out.note(format!("{cat}: mmd: {e}")),
        }
    }

    if !p.ngen_sizes.is_empty() {
        let ngen_seed = derive_seed(seed, "ngen");
        let (tv, hv, sv) = (space_vectors(train, Space::Year), space_vectors(test, Space::Year), space_vectors(synth, Space::Year));
        let mut sizes: Vec<usize> = p.ngen_sizes.iter().copied().filter(|&n| n > 0 && n <= sv.len()).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let dropped: Vec<String> = p.ngen_sizes.iter().filter(|&&n| n > sv.len()).map(|n| n.to_string()).collect();
        if !dropped.is_empty() {
            out.note(format!("ngen sweep: sizes {} exceed the {} synthetic curves and were skipped", dropped.join(", "), sv.len()));
        }
        match ngen_sweep(&refs(&tv), &refs(&hv), &refs(&sv), &sizes, p.ngen_repeats, p.fpr_target, ngen_seed) {
            Ok(points) => {
                let prov = Provenance::new(&all_roles, Some(ngen_seed));
                for pt in points {
                    out.push(Category::ALL, format!("ngen_{:05}/auc", pt.n_gen), pt.auc.mean, Some(pt.auc.std), prov.clone());
                    out.push(Category::ALL, format!("ngen_{:05}/tpr_at_fpr", pt.n_gen), pt.tpr_at_fpr.mean, Some(pt.tpr_at_fpr.std), prov.clone());
                }
            }
            Err(e) => out.note(format!("ngen sweep: {e}")),
        }
    }

    if let Some(path) = &cfg.whitebox_scores {
        let scores = read_score_file(path)?;
        let s = whitebox_attack(&scores, p.fpr_target)?;
        let prov = Provenance::new(&[Role::Train, Role::Test], None);
        out.push(Category::ALL, "whitebox/auc", s.auc, None, prov.clone());
        out.push(Category::ALL, "whitebox/tpr_at_fpr", s.tpr_at_fpr, None, prov);
        roc_rows(&mut roc, "whitebox", &s);
    }
    out.note(format!("tpr_at_fpr is measured at a false positive rate of {}", p.fpr_target));
    tables.push(roc);
    tables.push(nndr_table);
    Ok(out)
}
