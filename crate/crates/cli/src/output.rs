//! Artifact formats.
//!
//! Matrices are comma-separated: the first row holds the column grid centers
//! (after an empty corner cell), the first column the row grid centers, and
//! every value is printed with 9 significant digits.
//!
//! Heatmaps are plain (P2) graymaps scaled so the largest entry maps to 255
//! and zero to 0. Rows of the image are rows of the matrix, top to bottom.
//! Support masks use the same layout with 255 for kept cells.

use std::fmt::Write as _;

use mmot::analysis::{PairProjection, SupportSet};
use mmot::ipfp::SolveReport;

fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn matrix_csv(p: &PairProjection) -> String {
    let mut out = String::new();
    for x in p.grid_col().centers() {
        out.push(',');
        out.push_str(&sig9(*x));
    }
    out.push('\n');
    for (a, y) in p.grid_row().centers().iter().enumerate() {
        out.push_str(&sig9(*y));
        for v in p.row(a) {
            out.push(',');
            out.push_str(&sig9(*v));
        }
        out.push('\n');
    }
    out
}

fn pgm(rows: usize, cols: usize, pixel: impl Fn(usize, usize) -> u8) -> String {
    let mut out = format!("P2\n{cols} {rows}\n255\n");
    for a in 0..rows {
        let line: Vec<String> = (0..cols).map(|b| pixel(a, b).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// The value as it appears in the CSV.
fn written(x: f64) -> f64 {
    sig9(x).parse().expect("formatted float parses")
}

/// Max-normalised heatmap of the values as written to CSV. A cell shows 255
/// exactly when its CSV value is the largest one.
pub fn heatmap_pgm(p: &PairProjection) -> String {
    let values: Vec<f64> = p.matrix().iter().map(|&v| written(v)).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    let cols = p.cols();
    pgm(p.rows(), cols, |a, b| {
        let v = values[a * cols + b];
        if max <= 0.0 || v <= 0.0 {
            0
        } else if v >= max {
            255
        } else {
            // strictly below the maximum never rounds up to 255
            ((v / max * 255.0).round() as u8).min(254)
        }
    })
}

pub fn mask_pgm(support: &SupportSet) -> String {
    let rows = support.grids[0].len();
    let cols = support.grids[1].len();
    let mut keep = vec![false; rows * cols];
    for (idx, _) in &support.entries {
        keep[idx[0] * cols + idx[1]] = true;
    }
    pgm(rows, cols, |a, b| if keep[a * cols + b] { 255 } else { 0 })
}

/// Key/value report. The solver keys come first, in a fixed order; `extra`
/// follows in the order given.
#[derive(Debug, Clone, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    /// With `maximize`, cost and dual are reported with flipped sign; the
    /// solver always minimizes.
    pub fn from_solve(name: &str, r: &SolveReport, maximize: bool) -> Self {
        let sign = if maximize { -1.0 } else { 1.0 };
        let mut rep = Report::default();
        rep.push("cost", sig9(sign * r.primal_cost));
        rep.push("dual", sig9(sign * r.dual_value));
        rep.push("gap", sig9(r.duality_gap));
        rep.push("sweeps", r.sweeps.to_string());
        let errs: Vec<String> = r.marginal_errors.iter().map(|e| sig9(*e)).collect();
        rep.push("marginal_errors", format!("[{}]", errs.join(", ")));
        rep.push("epsilon", sig9(r.epsilon));
        rep.push("runtime_ms", r.runtime_ms.to_string());
        rep.push("name", format!("{name:?}"));
        rep.push("objective", if maximize { "maximize" } else { "minimize" });
        rep.push("converged", r.converged.to_string());
        rep.push("log_domain", r.log_domain.to_string());
        rep.push("entropy", sig9(r.entropy));
        rep.push("kl_objective", sig9(r.kl_objective));
        rep.push("dual_feasibility_violation", sig9(r.dual_feasibility_violation));
        rep
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.lines.push((key.into(), value.into()));
    }

    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, sig9(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.lines.iter().map(|(k, _)| k.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
