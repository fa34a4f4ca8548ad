//! Per-iteration error records and their CSV form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::{Error, Result};

/// Error `‖x⁽ᵏ⁾ − x*‖₂` for `k = 0..=K`, plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub errors: Vec<f64>,
    pub method: String,
    pub schedule_kind: String,
    pub seed: u64,
    pub metadata: BTreeMap<String, String>,
}

impl IterationTrace {
    pub fn new(method: impl Into<String>, schedule_kind: impl Into<String>, seed: u64) -> Self {
        Self {
            errors: Vec::new(),
            method: method.into(),
            schedule_kind: schedule_kind.into(),
            seed,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.insert(key.into(), value.to_string());
    }

    pub fn push(&mut self, error: f64) {
        self.errors.push(error);
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn initial_error(&self) -> f64 {
        self.errors[0]
    }

    pub fn final_error(&self) -> f64 {
        *self.errors.last().expect("trace is empty")
    }

    /// First iteration whose error is `≤ target`.
    pub fn first_below(&self, target: f64) -> Option<usize> {
        self.errors.iter().position(|&e| e <= target)
    }

    /// `e[(ℓ+1)T] / e[ℓT]` for every complete period.
    pub fn period_ratios(&self, period: usize) -> Vec<f64> {
        self.errors
            .iter()
            .step_by(period)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[1] / w[0])
            .collect()
    }

    /// Average per-period log-decay of the errors sampled at multiples of
    /// `period`, fitted by least squares over periods `first..last` (exclusive).
    /// Returns `exp(slope)`, i.e. the observed per-period contraction factor.
    pub fn envelope_period_rate(&self, period: usize, first: usize, last: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = (first..last)
            .filter_map(|l| self.errors.get(l * period).map(|&e| (l as f64, e)))
            .filter(|&(_, e)| e > 0.0 && e.is_finite())
            .map(|(l, e)| (l, e.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    }

    /// `#key=value` comment lines, then `iter,error` rows with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#method={}", self.method);
        let _ = writeln!(s, "#schedule_kind={}", self.schedule_kind);
        let _ = writeln!(s, "#seed={}", self.seed);
        for (k, v) in &self.metadata {
            let _ = writeln!(s, "#{k}={v}");
        }
        s.push_str("iter,error\n");
        for (k, e) in self.errors.iter().enumerate() {
            let _ = writeln!(s, "{k},{e:.16e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut trace = IterationTrace::new("", "", 0);
        let mut header_seen = false;
        for line in text.lines() {
            if let Some(kv) = line.strip_prefix('#') {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("bad metadata line {line:?}")))?;
                match k {
                    "method" => trace.method = v.to_string(),
                    "schedule_kind" => trace.schedule_kind = v.to_string(),
                    "seed" => {
                        trace.seed = v.parse().map_err(|e| Error::Parse(format!("seed: {e}")))?
                    }
                    _ => {
                        trace.metadata.insert(k.to_string(), v.to_string());
                    }
                }
            } else if line == "iter,error" {
                header_seen = true;
            } else if !line.is_empty() {
                let (_, e) = line
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
                trace
                    .errors
                    .push(e.parse().map_err(|e| Error::Parse(format!("error value: {e}")))?);
            }
        }
        if !header_seen {
            return Err(Error::Parse("missing iter,error header".into()));
        }
        Ok(trace)
    }
}

/// Element-wise mean of equally long traces.
pub fn average_traces(traces: &[IterationTrace]) -> Option<Vec<f64>> {
    let first = traces.first()?;
    let len = first.len();
    let mut acc = vec![0.0; len];
    for t in traces {
        if t.len() != len {
            return None;
        }
        for (a, e) in acc.iter_mut().zip(&t.errors) {
            *a += e;
        }
    }
    let n = traces.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Some(acc)
}
