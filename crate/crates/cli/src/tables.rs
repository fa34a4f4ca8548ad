//! Rate tables and permutation-search output.

use chebstep::chebyshev::{chebyshev_steps, permutation_search, rate_report};
use chebstep::SpectralBounds;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::output::fmt_f64;

/// One row of the rate table for bounds `(1, κ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub kappa: f64,
    /// `(κ−1)/(κ+1)`.
    pub r_s: f64,
    /// `(√κ−1)/(√κ+1)`.
    pub r_star: f64,
    /// Per-iteration Chebyshev rate for each period.
    pub q_ch: Vec<f64>,
    /// Limit of `q_ch(T)` as `T → ∞`.
    pub q_ch_star: f64,
}

/// `points` log-spaced condition numbers from `lo` to `hi` inclusive.
pub fn kappa_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 1.0 && hi >= lo && points >= 1) {
        return Err(CliError::Usage(format!(
            "kappa grid needs 1 < min <= max and at least one point (got {lo}, {hi}, {points})"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

pub fn rate_table(kappas: &[f64], periods: &[usize]) -> Result<Vec<RateRow>> {
    if periods.is_empty() {
        return Err(CliError::Usage("at least one period is required".into()));
    }
    kappas
        .iter()
        .map(|&kappa| {
            let bounds = SpectralBounds::new(1.0, kappa)?;
            let first = rate_report(&bounds, periods[0])?;
            let q_ch = periods
                .iter()
                .map(|&t| Ok(rate_report(&bounds, t)?.rate_per_iter))
                .collect::<Result<Vec<f64>>>()?;
            Ok(RateRow {
                kappa,
                r_s: first.rate_constant,
                r_star: first.rate_lower_bound,
                q_ch,
                q_ch_star: first.rate_limit,
            })
        })
        .collect()
}

pub fn rate_table_csv(rows: &[RateRow], periods: &[usize]) -> String {
    let mut s = String::from("kappa,R_s,R_star");
    for t in periods {
        s.push_str(&format!(",q_ch_T{t}"));
    }
    s.push_str(",q_ch_star\n");
    for r in rows {
        let mut cells = vec![fmt_f64(r.kappa), fmt_f64(r.r_s), fmt_f64(r.r_star)];
        cells.extend(r.q_ch.iter().map(|&v| fmt_f64(v)));
        cells.push(fmt_f64(r.q_ch_star));
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn rate_table_json(rows: &[RateRow], periods: &[usize]) -> Value {
    json!({
        "periods": periods,
        "rows": rows.iter().map(|r| json!({
            "kappa": r.kappa,
            "R_s": r.r_s,
            "R_star": r.r_star,
            "q_ch": r.q_ch,
            "q_ch_star": r.q_ch_star,
        })).collect::<Vec<_>>(),
    })
}

/// Natural Chebyshev order next to the permutation-search order.
pub fn permsearch_csv(bounds: &SpectralBounds, period: usize, u: f64) -> Result<String> {
    let permuted = permutation_search(bounds, period, u)?;
    let natural = chebyshev_steps(bounds, period)?;
    let mut s = format!(
        "# lambda_min={} lambda_max={} T={period} u={}\nindex,natural,permuted\n",
        fmt_f64(bounds.lambda_min()),
        fmt_f64(bounds.lambda_max()),
        fmt_f64(u)
    );
    for (i, (a, b)) in natural.steps().iter().zip(permuted.steps()).enumerate() {
        s.push_str(&format!("{i},{},{}\n", fmt_f64(*a), fmt_f64(*b)));
    }
    Ok(s)
}
