//! Verification cases and the per-run report.

use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// One checked quantity. Names ending in `_control` are negative controls and pass when the
/// residual is at least `tol`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

pub const CONTROL_SUFFIX: &str = "_control";

impl Case {
    /// Passes when `residual <= tol`; NaN fails.
    pub fn within(name: impl Into<String>, inputs: &[(&str, f64)], residual: f64, tol: f64) -> Self {
        Self { name: name.into(), inputs: to_map(inputs), residual, tol, pass: residual <= tol }
    }

    /// Negative control: passes when `residual >= threshold`.
    pub fn control(name: impl Into<String>, inputs: &[(&str, f64)], residual: f64, threshold: f64) -> Self {
        let name = name.into();
        debug_assert!(name.ends_with(CONTROL_SUFFIX));
        Self { name, inputs: to_map(inputs), residual, tol: threshold, pass: residual >= threshold }
    }

    pub fn is_control(&self) -> bool {
        self.name.ends_with(CONTROL_SUFFIX)
    }

    /// Replace the tolerance of an ordinary case and recompute `pass`.
    pub fn with_tol(mut self, tol: f64) -> Self {
        if !self.is_control() {
            self.tol = tol;
            self.pass = self.residual <= tol;
        }
        self
    }
}

fn to_map(inputs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn cmp_inputs(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> Ordering {
    for ((ka, va), (kb, vb)) in a.iter().zip(b) {
        let o = ka.cmp(kb).then(va.total_cmp(vb));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.len().cmp(&b.len())
}

/// Sort by name, then inputs.
pub fn sort_cases(cases: &mut [Case]) {
    cases.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| cmp_inputs(&a.inputs, &b.inputs)));
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReportParams {
    pub q: f64,
    pub r: f64,
    pub c: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: String,
    pub params: ReportParams,
    pub seed: u64,
    pub cases: Vec<Case>,
    pub max_residual: f64,
    pub elapsed_ms: u64,
    pub version: String,
    /// Seconds since the Unix epoch at report assembly.
    pub timestamp: u64,
}

impl Report {
    /// Largest residual over ordinary (non-control) cases.
    pub fn max_of(cases: &[Case]) -> f64 {
        cases.iter().filter(|c| !c.is_control()).map(|c| c.residual).fold(0.0, |m, r| if r.is_nan() || r > m { r } else { m })
    }

    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.cases.iter().filter(|c| !c.pass).count()
    }

    /// `suite,name,residual,tol,pass` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("suite,name,residual,tol,pass\n");
        for c in &self.cases {
            s.push_str(&format!("{},{},{:e},{:e},{}\n", self.suite, csv_field(&c.name), c.residual, c.tol, c.pass));
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
