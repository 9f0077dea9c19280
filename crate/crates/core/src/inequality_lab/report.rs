//! Ratio tables, per-sweep maxima and trend fits.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::stats::{linear_fit, LinearFit};

/// Trials with `rhs < DEGENERATE_REL (lhs + 1)` are flagged and left out of maxima.
pub const DEGENERATE_REL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub series: String,
    pub x: f64,
    pub trial: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub degenerate: bool,
}

impl TrialRow {
    pub fn new(series: impl Into<String>, x: f64, trial: usize, lhs: f64, rhs: f64) -> Self {
        let degenerate = !(rhs >= DEGENERATE_REL * (lhs.abs() + 1.0));
        let ratio = (!degenerate).then(|| lhs / rhs);
        Self { series: series.into(), x, trial, lhs, rhs, ratio, degenerate }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub series: String,
    pub x: f64,
    pub max_ratio: f64,
    pub trials: usize,
    pub degenerate: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub series: String,
    pub max_ratio: f64,
    /// Largest over smallest per-sweep-point maximum.
    pub spread: f64,
    /// Fit of `log2(max ratio)` against the sweep variable.
    pub trend: Option<LinearFit>,
    pub bound: Option<f64>,
}

impl SeriesSummary {
    pub fn within_bound(&self) -> Option<bool> {
        self.bound.map(|b| self.max_ratio <= b * (1.0 + 1e-12))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub check: String,
    pub params: serde_json::Value,
    pub x_label: String,
    pub rows: Vec<TrialRow>,
    pub sweep: Vec<SweepPoint>,
    pub series: Vec<SeriesSummary>,
    pub degenerate: usize,
    pub max_ratio: f64,
    pub notes: Vec<String>,
}

impl RatioReport {
    pub fn build<P: Serialize>(check: &str, params: &P, x_label: &str, rows: Vec<TrialRow>) -> Result<Self> {
        let mut names: Vec<String> = Vec::new();
        for r in &rows {
            if !names.contains(&r.series) {
                names.push(r.series.clone());
            }
        }
        let mut sweep = Vec::new();
        let mut series = Vec::new();
        for name in &names {
            let mut xs: Vec<f64> = rows.iter().filter(|r| &r.series == name).map(|r| r.x).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            xs.dedup();
            let mut points = Vec::new();
            for &x in &xs {
                let at: Vec<&TrialRow> = rows.iter().filter(|r| &r.series == name && r.x == x).collect();
                let max_ratio = at.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
                points.push(SweepPoint {
                    series: name.clone(),
                    x,
                    max_ratio,
                    trials: at.len(),
                    degenerate: at.iter().filter(|r| r.degenerate).count(),
                });
            }
            let live: Vec<&SweepPoint> = points.iter().filter(|p| p.max_ratio > 0.0).collect();
            let hi = live.iter().map(|p| p.max_ratio).fold(0.0, f64::max);
            let lo = live.iter().map(|p| p.max_ratio).fold(f64::INFINITY, f64::min);
            let spread = if live.is_empty() { f64::NAN } else { hi / lo };
            let px: Vec<f64> = live.iter().map(|p| p.x).collect();
            let py: Vec<f64> = live.iter().map(|p| p.max_ratio.log2()).collect();
            series.push(SeriesSummary {
                series: name.clone(),
                max_ratio: hi,
                spread,
                trend: linear_fit(&px, &py),
                bound: None,
            });
            sweep.extend(points);
        }
        let degenerate = rows.iter().filter(|r| r.degenerate).count();
        let max_ratio = series.iter().map(|s| s.max_ratio).fold(0.0, f64::max);
        Ok(Self {
            check: check.to_string(),
            params: serde_json::to_value(params)?,
            x_label: x_label.to_string(),
            rows,
            sweep,
            series,
            degenerate,
            max_ratio,
            notes: Vec::new(),
        })
    }

    /// Attaches a closed-form bound to one series.
    pub fn with_bound(mut self, series: &str, bound: f64) -> Self {
        if let Some(s) = self.series.iter_mut().find(|s| s.series == series) {
            s.bound = Some(bound);
        }
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn series(&self, name: &str) -> Option<&SeriesSummary> {
        self.series.iter().find(|s| s.series == name)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "series,{},trial,lhs,rhs,ratio,degenerate", self.x_label)?;
        for r in &self.rows {
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{},{},{},{}", r.series, r.x, r.trial, r.lhs, r.rhs, ratio, r.degenerate)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_degeneracy() {
        let rows = vec![
            TrialRow::new("a", 1.0, 0, 2.0, 1.0),
            TrialRow::new("a", 1.0, 1, 3.0, 1.0),
            TrialRow::new("a", 2.0, 0, 12.0, 2.0),
            TrialRow::new("a", 2.0, 1, 0.0, 0.0),
        ];
        let r = RatioReport::build("demo", &(), "x", rows).unwrap();
        assert_eq!(r.degenerate, 1);
        let s = r.series("a").unwrap();
        assert_eq!(s.max_ratio, 6.0);
        assert_eq!(s.spread, 2.0);
        assert!((s.trend.unwrap().slope - 1.0).abs() < 1e-14);
        let r = r.with_bound("a", 5.0);
        assert_eq!(r.series("a").unwrap().within_bound(), Some(false));
    }
}
