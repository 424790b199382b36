//! The audit report: one metric list per suite, each value tagged with its
//! category and provenance.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{Category, Role, Window};

pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Fidelity,
    Utility,
    Privacy,
    Thermo,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Fidelity, Suite::Utility, Suite::Privacy, Suite::Thermo];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fidelity => "fidelity",
            Self::Utility => "utility",
            Self::Privacy => "privacy",
            Self::Thermo => "thermo",
        }
    }

    /// Dataset roles the suite reads.
    pub fn required_roles(self) -> &'static [Role] {
        match self {
            Self::Fidelity => &[Role::Test, Role::Synthetic],
            Self::Utility => &[Role::Train, Role::Test, Role::Synthetic],
            Self::Privacy => &[Role::Train, Role::Test, Role::Synthetic],
            Self::Thermo => &[Role::Test, Role::Synthetic],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Suite::ALL
            .into_iter()
            .find(|v| v.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub roles: Vec<Role>,
    /// Seed actually used by the metric (derived from the root seed), if it is random.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(roles: &[Role], seed: Option<u64>) -> Self {
        Self { roles: roles.to_vec(), seed }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub category: Category,
    pub name: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub metrics: Vec<Metric>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl SuiteReport {
    pub fn push(&mut self, category: Category, name: impl Into<String>, value: f64, std: Option<f64>, provenance: Provenance) {
        self.metrics.push(Metric { category, name: name.into(), value, std, provenance });
    }

    pub fn get(&self, category: Category, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.category == category && m.name == name)
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Orders metrics by category, then name; the order is then independent of
    /// how the suite was assembled.
    pub fn canonicalize(&mut self) {
        self.metrics.sort_by(|a, b| a.category.cmp(&b.category).then_with(|| a.name.cmp(&b.name)));
    }

    pub fn categories(&self) -> Vec<Category> {
        let mut c: Vec<Category> = self.metrics.iter().map(|m| m.category).collect();
        c.sort();
        c.dedup();
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub format_version: u32,
    pub tool: String,
    pub seed: u64,
    pub suites: Vec<Suite>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    /// Number of curves per dataset role.
    #[serde(default)]
    pub datasets: BTreeMap<String, usize>,
}

impl ReportMeta {
    pub fn new(tool: impl Into<String>, seed: u64) -> Self {
        Self { format_version: REPORT_FORMAT_VERSION, tool: tool.into(), seed, suites: Vec::new(), window: None, datasets: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub meta: ReportMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<SuiteReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub utility: Option<SuiteReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub privacy: Option<SuiteReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermo: Option<SuiteReport>,
}

impl MetricReport {
    pub fn new(meta: ReportMeta) -> Self {
        Self { meta, fidelity: None, utility: None, privacy: None, thermo: None }
    }

    pub fn suite(&self, suite: Suite) -> Option<&SuiteReport> {
        match suite {
            Suite::Fidelity => self.fidelity.as_ref(),
            Suite::Utility => self.utility.as_ref(),
            Suite::Privacy => self.privacy.as_ref(),
            Suite::Thermo => self.thermo.as_ref(),
        }
    }

    pub fn set_suite(&mut self, suite: Suite, mut report: SuiteReport) {
        report.canonicalize();
        let slot = match suite {
            Suite::Fidelity => &mut self.fidelity,
            Suite::Utility => &mut self.utility,
            Suite::Privacy => &mut self.privacy,
            Suite::Thermo => &mut self.thermo,
        };
        *slot = Some(report);
        if !self.meta.suites.contains(&suite) {
            self.meta.suites.push(suite);
            self.meta.suites.sort();
        }
    }

    pub fn present_suites(&self) -> Vec<Suite> {
        Suite::ALL.into_iter().filter(|s| self.suite(*s).is_some()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContractedPower, TimeOfUse};

    #[test]
    fn suites_parse_and_order() {
        assert_eq!("Privacy".parse::<Suite>().unwrap(), Suite::Privacy);
        assert!("speed".parse::<Suite>().is_err());
        let mut r = MetricReport::new(ReportMeta::new("t", 1));
        r.set_suite(Suite::Thermo, SuiteReport::default());
        r.set_suite(Suite::Fidelity, SuiteReport::default());
        assert_eq!(r.meta.suites, [Suite::Fidelity, Suite::Thermo]);
        assert_eq!(r.present_suites(), [Suite::Fidelity, Suite::Thermo]);
    }

    #[test]
    fn canonical_order_is_assembly_independent() {
        let cat = Category::new(ContractedPower::Kva9, TimeOfUse::Night);
        let p = Provenance::new(&[Role::Test], None);
        let mut a = SuiteReport::default();
        a.push(cat, "b", 1.0, None, p.clone());
        a.push(Category::ALL, "z", 2.0, Some(0.1), p.clone());
        a.push(cat, "a", 3.0, None, p.clone());
        let mut b = SuiteReport::default();
        for m in a.metrics.iter().rev() {
            b.metrics.push(m.clone());
        }
        a.canonicalize();
        b.canonicalize();
        assert_eq!(a, b);
        assert_eq!(a.metrics[0].category, Category::ALL);
        assert_eq!(a.get(cat, "a").unwrap().value, 3.0);
        assert_eq!(a.categories(), [Category::ALL, cat]);
    }
}
