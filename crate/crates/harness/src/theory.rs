//! Closed-form overlays written next to simulated results, and the tables
//! printed by the `theory` subcommand.

use census_core::analysis::{
    gradient_cover_bound, gradient_cover_series, gradient_overhead_series, lemma1_threshold, local_bias_cover_series,
    nn_cdf, nn_pdf, per_token_scaling, theta, union_coverage_theory,
};
use serde::Serialize;

use crate::scenario::Scenario;
use crate::HarnessError;

/// Predictions for one grid cell, in transactions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryRow {
    pub cell: usize,
    pub n: usize,
    pub tokens: usize,
    pub density: f64,
    /// Unvisited fraction below which a one-hop neighborhood stops holding an
    /// unvisited node with 95% confidence.
    pub proximity_threshold_h1: f64,
    pub proximity_threshold_h2: f64,
    pub local_cover: f64,
    pub local_cover_per_token: f64,
    pub gradient_cover: f64,
    pub gradient_cover_bound: f64,
    pub gradient_cover_per_token: f64,
    pub gradient_overhead: f64,
    pub union_coverage: Option<f64>,
}

/// One row per grid cell of `scenario`, in cell order.
pub fn theory_rows(scenario: &Scenario) -> Result<Vec<TheoryRow>, HarnessError> {
    let mut rows: Vec<TheoryRow> = Vec::new();
    for spec in scenario.trials()? {
        if rows.last().is_some_and(|r| r.cell == spec.cell) {
            continue;
        }
        let n = spec.config.world.n_nodes;
        let k = spec.config.tokens;
        let d = spec.config.world.density;
        let (nf, kf) = (n as f64, k as f64);
        let union_coverage = match scenario.partial_stop {
            Some(m) => Some(union_coverage_theory(m, scenario.union_size)?),
            None => None,
        };
        rows.push(TheoryRow {
            cell: spec.cell,
            n,
            tokens: k,
            density: d,
            proximity_threshold_h1: lemma1_threshold(0.95, 1.0, d)?,
            proximity_threshold_h2: lemma1_threshold(0.95, 2.0, d)?,
            local_cover: local_bias_cover_series(nf, d),
            local_cover_per_token: per_token_scaling(|x| local_bias_cover_series(x, d), nf, kf),
            gradient_cover: gradient_cover_series(nf, d),
            gradient_cover_bound: gradient_cover_bound(nf, d),
            gradient_cover_per_token: per_token_scaling(|x| gradient_cover_series(x, d), nf, kf),
            gradient_overhead: gradient_overhead_series(nf, d, kf),
            union_coverage,
        });
    }
    Ok(rows)
}

/// Tables available from the `theory` subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    /// Unvisited-fraction thresholds for 1 to 3 hops.
    Lemma1,
    /// Nearest-neighbor distance density and distribution.
    Nn,
    /// Cover-time and gradient-overhead series over network sizes.
    Series,
    /// Union coverage of independent partial trials.
    Union,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableParams {
    pub p: f64,
    pub d: f64,
    pub sizes: Vec<usize>,
    pub tokens: usize,
    pub partial: f64,
    pub trials: u32,
}

impl Default for TableParams {
    fn default() -> Self {
        Self {
            p: 0.95,
            d: 10.0,
            sizes: crate::scenario::FULL_SIZES.to_vec(),
            tokens: 1,
            partial: 0.6,
            trials: 5,
        }
    }
}

/// Renders `table` as CSV text.
pub fn render(table: Table, params: &TableParams) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match table {
        Table::Lemma1 => {
            w.write_record(["p", "theta", "d", "hops", "unvisited_threshold", "coverage_limit"])?;
            let th = theta(params.p)?;
            for h in 1..=3 {
                let z = lemma1_threshold(params.p, f64::from(h), params.d)?;
                w.write_record([
                    params.p.to_string(),
                    format!("{th:.6}"),
                    params.d.to_string(),
                    h.to_string(),
                    format!("{z:.6}"),
                    format!("{:.6}", 1.0 - z),
                ])?;
            }
        }
        Table::Nn => {
            // Unit range at density d: intensity d / pi per unit area.
            let rho = params.d / std::f64::consts::PI;
            w.write_record(["r", "pdf", "cdf"])?;
            for i in 0..=40 {
                let r = f64::from(i) * 0.025;
                w.write_record([format!("{r:.3}"), format!("{:.6}", nn_pdf(rho, r)), format!("{:.6}", nn_cdf(rho, r))])?;
            }
        }
        Table::Series => {
            w.write_record(["n", "d", "tokens", "local_cover", "gradient_cover", "gradient_bound", "gradient_overhead"])?;
            let (d, k) = (params.d, params.tokens as f64);
            for &n in &params.sizes {
                let nf = n as f64;
                w.write_record([
                    n.to_string(),
                    d.to_string(),
                    params.tokens.to_string(),
                    format!("{:.3}", per_token_scaling(|x| local_bias_cover_series(x, d), nf, k)),
                    format!("{:.3}", per_token_scaling(|x| gradient_cover_series(x, d), nf, k)),
                    format!("{:.3}", gradient_cover_bound(nf / k, d)),
                    format!("{:.3}", gradient_overhead_series(nf, d, k)),
                ])?;
            }
        }
        Table::Union => {
            w.write_record(["partial", "trials", "union_coverage"])?;
            for c in 1..=params.trials {
                w.write_record([
                    params.partial.to_string(),
                    c.to_string(),
                    format!("{:.5}", union_coverage_theory(params.partial, c)?),
                ])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io {
        path: "<stdout>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    #[test]
    fn one_row_per_cell() {
        let s = builtin("fig2a", false).unwrap();
        let rows = theory_rows(&s).unwrap();
        assert_eq!(rows.len(), 15);
        assert!(rows.iter().enumerate().all(|(i, r)| r.cell == i));
        assert!(rows.iter().all(|r| r.union_coverage.is_none()));
        let u = theory_rows(&builtin("union", false).unwrap()).unwrap();
        assert!((u[0].union_coverage.unwrap() - 0.98976).abs() < 1e-9);
    }

    #[test]
    fn lemma1_table() {
        let text = render(Table::Lemma1, &TableParams::default()).unwrap();
        let first = text.lines().nth(1).unwrap();
        assert!(first.contains(",1,0.299573,0.700427"), "{first}");
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn union_table_ends_at_requested_trials() {
        let text = render(Table::Union, &TableParams::default()).unwrap();
        assert_eq!(text.lines().last().unwrap(), "0.6,5,0.98976");
    }
}
