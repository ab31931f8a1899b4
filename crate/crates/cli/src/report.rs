//! Report and CSV emission. Output is byte-stable: fixed key order, fixed
//! float formatting, no timestamps.

use std::fmt::Write as _;

use pluri_core::Scheme;

use crate::spec_file::FORMAT_VERSION;

/// Human-readable summary followed by a `key = value` block.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    summary: Vec<String>,
    values: Vec<(String, String)>,
}

impl Report {
    pub fn new(mode: &str) -> Self {
        let mut r = Self::default();
        r.text(format!("pluri {mode}"));
        r.str("mode", mode);
        r
    }

    pub fn text(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn str(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.values.push((key.into(), value.into()));
    }

    pub fn int(&mut self, key: impl Into<String>, value: impl ToString) {
        self.values.push((key.into(), value.to_string()));
    }

    pub fn real(&mut self, key: impl Into<String>, value: f64) {
        self.values.push((key.into(), fmt_real(value)));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.summary {
            let _ = writeln!(out, "{line}");
        }
        let _ = writeln!(out, "\n[results]\nformat_version = {FORMAT_VERSION}");
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    format!("{v:.12e}")
}

/// One row per node: coordinates (`x1, y1, …` or `s`), `u`, cone margin and
/// `f̃ − ψ̃`; margin and residual are `nan` on boundary nodes.
pub fn field_csv(scheme: &Scheme<f64>, u: &[f64], psi_tilde: &[f64]) -> String {
    let disc = scheme.as_dyn();
    let p = disc.params().p();
    let mut out = format!("# format_version = {FORMAT_VERSION}\n");
    let header: Vec<String> = match scheme {
        Scheme::Box(b) => (1..=b.grid().n()).flat_map(|j| [format!("x{j}"), format!("y{j}")]).collect(),
        Scheme::Radial(_) => vec!["s".to_string()],
    };
    let _ = writeln!(out, "{},u,margin,residual", header.join(","));
    for k in 0..disc.node_count() {
        let coords: Vec<String> = disc.coords(k).iter().map(|&c| fmt_real(c)).collect();
        let (margin, residual) = if disc.is_equation_node(k) {
            let lam = disc.spectrum(u, k);
            let f = pluri_core::eval_ftilde(lam.values(), disc.params()).unwrap_or(f64::NAN);
            (pluri_core::margin_value(lam.values(), p), f - psi_tilde[k])
        } else {
            (f64::NAN, f64::NAN)
        };
        let _ = writeln!(out, "{},{},{},{}", coords.join(","), fmt_real(u[k]), fmt_real(margin), fmt_real(residual));
    }
    out
}
