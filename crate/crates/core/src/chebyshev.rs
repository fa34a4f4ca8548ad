//! Chebyshev polynomials, step schedules and closed-form rates.
//!
//! A schedule of length `T` whose reciprocals are the Chebyshev nodes mapped
//! onto `[λ_min, λ_max]` makes the one-period damping polynomial
//! `β_T(λ) = ∏ (1 − γ_t λ)` a normalised Chebyshev polynomial, which has the
//! smallest sup-norm on the interval among all such products. Its sup-norm is
//! `sech(T·acosh((κ+1)/(κ−1)))`.

use std::fmt;
use std::fmt::Write as _;

use crate::spectral::{condition_number, SpectralBounds};
use crate::{Error, Result};

/// Largest `T` accepted by [`permutation_search`]; it enumerates `t!`
/// permutations per generation.
pub const PERMUTATION_SEARCH_MAX_T: usize = 10;

/// `C_n(x)`. Three-term recurrence inside `[-1, 1]`, `cosh(n·acosh|x|)` outside.
pub fn cheb_eval(n: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        let (mut prev, mut cur) = (1.0, x);
        if n == 0 {
            return 1.0;
        }
        for _ in 1..n {
            let next = 2.0 * x * cur - prev;
            prev = cur;
            cur = next;
        }
        cur
    } else {
        let mag = (n as f64 * x.abs().acosh()).cosh();
        if x < 0.0 && n % 2 == 1 {
            -mag
        } else {
            mag
        }
    }
}

/// Zeros of `C_n`: `cos((2k+1)π/(2n))`, `k = 0..n`, strictly decreasing.
///
/// Evaluated as `sin((n−1−2k)π/(2n))` so that the set is exactly antisymmetric
/// and the middle node of an odd degree is exactly zero.
pub fn cheb_nodes(n: usize) -> Vec<f64> {
    assert!(n >= 1, "cheb_nodes needs n >= 1");
    let n_f = n as f64;
    (0..n)
        .map(|k| {
            let m = n as i64 - 1 - 2 * k as i64;
            (m as f64 * std::f64::consts::PI / (2.0 * n_f)).sin()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Constant,
    Chebyshev,
    ChebyshevPermuted,
    MomentumAux,
    Custom,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Chebyshev => "chebyshev",
            Self::ChebyshevPermuted => "chebyshev_permuted",
            Self::MomentumAux => "momentum_aux",
            Self::Custom => "custom",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant" => Self::Constant,
            "chebyshev" => Self::Chebyshev,
            "chebyshev_permuted" => Self::ChebyshevPermuted,
            "momentum_aux" => Self::MomentumAux,
            "custom" => Self::Custom,
            other => return Err(Error::Parse(format!("unknown schedule kind {other:?}"))),
        })
    }
}

/// Periodic sequence of positive step sizes (or SOR factors):
/// `step(t) = steps[t mod T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSchedule {
    steps: Vec<f64>,
    kind: ScheduleKind,
    bounds: Option<SpectralBounds>,
}

impl StepSchedule {
    pub fn new(steps: Vec<f64>, kind: ScheduleKind) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidSchedule("schedule must be nonempty".into()));
        }
        if let Some(bad) = steps.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::InvalidSchedule(format!("step {bad} is not finite and positive")));
        }
        Ok(Self {
            steps,
            kind,
            bounds: None,
        })
    }

    pub fn constant(step: f64) -> Result<Self> {
        Self::new(vec![step], ScheduleKind::Constant)
    }

    pub fn with_bounds(mut self, bounds: SpectralBounds) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn period(&self) -> usize {
        self.steps.len()
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn bounds(&self) -> Option<SpectralBounds> {
        self.bounds
    }

    pub fn step(&self, t: usize) -> f64 {
        self.steps[t % self.steps.len()]
    }

    /// Same steps in the order `order[0], order[1], …`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.period()];
        for &i in order {
            if i >= self.period() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSchedule(format!("{order:?} is not a permutation")));
            }
        }
        if order.len() != self.period() {
            return Err(Error::InvalidSchedule(format!("{order:?} is not a permutation")));
        }
        Ok(Self {
            steps: order.iter().map(|&i| self.steps[i]).collect(),
            kind: ScheduleKind::ChebyshevPermuted,
            bounds: self.bounds,
        })
    }

    /// Single `gamma` column with a header comment recording bounds, T and kind.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match self.bounds {
            Some(b) => {
                let _ = writeln!(
                    s,
                    "# lambda_min={:.16e} lambda_max={:.16e} T={} kind={}",
                    b.lambda_min(),
                    b.lambda_max(),
                    self.period(),
                    self.kind
                );
            }
            None => {
                let _ = writeln!(s, "# T={} kind={}", self.period(), self.kind);
            }
        }
        s.push_str("gamma\n");
        for g in &self.steps {
            let _ = writeln!(s, "{g:.16e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut kind = ScheduleKind::Custom;
        let (mut lo, mut hi) = (None, None);
        let mut steps = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(comment) = line.strip_prefix('#') {
                for field in comment.split_whitespace() {
                    let Some((k, v)) = field.split_once('=') else { continue };
                    let num = || v.parse::<f64>().map_err(|e| Error::Parse(format!("{k}: {e}")));
                    match k {
                        "kind" => kind = v.parse()?,
                        "lambda_min" => lo = Some(num()?),
                        "lambda_max" => hi = Some(num()?),
                        _ => {}
                    }
                }
            } else if line != "gamma" {
                steps.push(line.parse::<f64>().map_err(|e| Error::Parse(format!("gamma: {e}")))?);
            }
        }
        let mut sched = Self::new(steps, kind)?;
        if let (Some(lo), Some(hi)) = (lo, hi) {
            sched.bounds = Some(SpectralBounds::new(lo, hi)?);
        }
        Ok(sched)
    }
}

/// Chebyshev steps of length `T`:
/// `γ_t = [λ₊ + λ₋·cos((2t+1)π/(2T))]⁻¹`, `λ± = (λ_max ± λ_min)/2`.
pub fn chebyshev_steps(bounds: &SpectralBounds, period: usize) -> Result<StepSchedule> {
    bounds.require_chebyshev()?;
    if period == 0 {
        return Err(Error::InvalidArgument("schedule length T must be >= 1".into()));
    }
    let (center, half) = (bounds.center(), bounds.half_width());
    let steps = cheb_nodes(period).into_iter().map(|x| 1.0 / (center + half * x)).collect();
    Ok(StepSchedule::new(steps, ScheduleKind::Chebyshev)?.with_bounds(*bounds))
}

/// Chebyshev-PSOR factors: the Chebyshev steps for the spectrum of `B = I − J*`.
pub fn chebyshev_psor_factors(bounds_of_b: &SpectralBounds, period: usize) -> Result<StepSchedule> {
    chebyshev_steps(bounds_of_b, period)
}

/// `β_T(λ) = ∏_t (1 − γ_t·λ)` over one period.
pub fn beta_t(schedule: &StepSchedule, lambda: f64) -> f64 {
    schedule.steps().iter().map(|g| 1.0 - g * lambda).product()
}

// (κ+1)/(κ−1) − 1 = 2/(κ−1); keeping the offset avoids cancellation in acosh for large κ.
fn acosh_ratio(kappa: f64) -> Result<f64> {
    if !(kappa > 1.0) {
        return Err(Error::DegenerateSpectrum(format!("condition number {kappa} must exceed 1")));
    }
    let dz = 2.0 / (kappa - 1.0);
    Ok((dz + (dz * (dz + 2.0)).sqrt()).ln_1p())
}

fn sech(x: f64) -> f64 {
    let e = (-x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `sech(T·acosh((κ+1)/(κ−1)))` for a given condition number.
pub fn rho_upp_kappa(kappa: f64, period: usize) -> Result<f64> {
    Ok(sech(period as f64 * acosh_ratio(kappa)?))
}

/// Sup of `|β_T|` over the bounds for the Chebyshev schedule of length `T`.
pub fn rho_upp(bounds: &SpectralBounds, period: usize) -> Result<f64> {
    rho_upp_kappa(condition_number(bounds)?, period)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub kappa: f64,
    pub period: usize,
    /// Bound on the one-period contraction.
    pub rho_upp_t: f64,
    /// `rho_upp_t^(1/T)`.
    pub rate_per_iter: f64,
    /// `(κ−1)/(κ+1)`, optimal constant step.
    pub rate_constant: f64,
    /// `(√κ−1)/(√κ+1)`, first-order lower bound.
    pub rate_lower_bound: f64,
    /// `exp(−acosh((b+a)/(b−a)))`, the `T → ∞` limit of `rate_per_iter`.
    pub rate_limit: f64,
}

pub fn rate_report(bounds: &SpectralBounds, period: usize) -> Result<RateReport> {
    if period == 0 {
        return Err(Error::InvalidArgument("T must be >= 1".into()));
    }
    let kappa = condition_number(bounds)?;
    let alpha = acosh_ratio(kappa)?;
    let rho = sech(period as f64 * alpha);
    let sk = kappa.sqrt();
    Ok(RateReport {
        kappa,
        period,
        rho_upp_t: rho,
        rate_per_iter: rho.powf(1.0 / period as f64),
        rate_constant: (kappa - 1.0) / (kappa + 1.0),
        rate_lower_bound: (sk - 1.0) / (sk + 1.0),
        rate_limit: (-alpha).exp(),
    })
}

/// `((κ−1)/(κ+1))^T − rho_upp(κ, T)`: how much one Chebyshev period beats
/// `T` optimal constant steps.
pub fn theorem2_margin(bounds: &SpectralBounds, period: usize) -> Result<f64> {
    if period < 2 {
        return Err(Error::InvalidArgument("margin is defined for T >= 2".into()));
    }
    let kappa = condition_number(bounds)?;
    let constant = ((kappa - 1.0) / (kappa + 1.0)).powi(period as i32);
    Ok(constant - rho_upp_kappa(kappa, period)?)
}

/// Orders Chebyshev steps the way incremental training would discover them.
///
/// Generation `t` appends the initial value `u` to the previous generation's
/// steps and picks, among all `t!` orderings of the length-`t` Chebyshev steps,
/// the one closest in Euclidean distance. Ties keep the first ordering in
/// lexicographic order.
pub fn permutation_search(bounds: &SpectralBounds, period: usize, u: f64) -> Result<StepSchedule> {
    if period == 0 {
        return Err(Error::InvalidArgument("T must be >= 1".into()));
    }
    if period > PERMUTATION_SEARCH_MAX_T {
        return Err(Error::SizeLimit {
            what: "T",
            value: period,
            max: PERMUTATION_SEARCH_MAX_T,
        });
    }
    let mut current = chebyshev_steps(bounds, 1)?.steps().to_vec();
    for t in 2..=period {
        let mut target = current.clone();
        target.push(u);
        let fresh = chebyshev_steps(bounds, t)?;
        let candidates = fresh.steps();

        let mut order: Vec<usize> = (0..t).collect();
        let mut best = order.clone();
        let mut best_dist = f64::INFINITY;
        loop {
            let dist: f64 = order
                .iter()
                .zip(&target)
                .map(|(&i, d)| (d - candidates[i]).powi(2))
                .sum();
            if dist < best_dist {
                best_dist = dist;
                best.copy_from_slice(&order);
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
        current = best.iter().map(|&i| candidates[i]).collect();
    }
    let kind = if period == 1 {
        ScheduleKind::Chebyshev
    } else {
        ScheduleKind::ChebyshevPermuted
    };
    Ok(StepSchedule::new(current, kind)?.with_bounds(*bounds))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn b(lo: f64, hi: f64) -> SpectralBounds {
        SpectralBounds::new(lo, hi).unwrap()
    }

    #[test]
    fn cheb_eval_examples() {
        assert_eq!(cheb_eval(0, 0.7), 1.0);
        assert_eq!(cheb_eval(1, 0.3), 0.3);
        assert!((cheb_eval(2, 0.5) + 0.5).abs() < 1e-15);
        assert!((cheb_eval(6, 1.25) - 32.0078125).abs() < 1e-9);
        // Recurrence at x = 1.25 as an independent check of the cosh branch.
        let (mut p, mut c) = (1.0, 1.25);
        for _ in 1..6 {
            let n = 2.5 * c - p;
            p = c;
            c = n;
        }
        assert!((cheb_eval(6, 1.25) - c).abs() < 1e-9);
        assert!((cheb_eval(3, -2.0) - (4.0 * -8.0 + 6.0)).abs() < 1e-9);
    }

    #[test]
    fn cheb_eval_branches_meet_at_unit_boundary() {
        for n in 0..20 {
            for x in [1.0f64, -1.0] {
                let inside = cheb_eval(n, x);
                let outside = cheb_eval(n, x * (1.0 + 1e-15));
                assert!((inside - outside).abs() < 1e-9, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn cheb_nodes_examples() {
        assert_eq!(cheb_nodes(1), vec![0.0]);
        let n2 = cheb_nodes(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((n2[0] - h).abs() < 1e-15 && (n2[1] + h).abs() < 1e-15);
        for n in 1..=32 {
            let nodes = cheb_nodes(n);
            assert!(nodes.windows(2).all(|w| w[0] > w[1]));
            for (k, x) in nodes.iter().enumerate() {
                assert!(cheb_eval(n, *x).abs() <= 1e-12, "n={n}, k={k}");
                let cos_form = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
                assert!((x - cos_form).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn chebyshev_steps_examples() {
        let s1 = chebyshev_steps(&b(1.0, 9.0), 1).unwrap();
        assert_eq!(s1.steps(), &[0.2]);
        let s2 = chebyshev_steps(&b(1.0, 9.0), 2).unwrap();
        assert!((s2.steps()[0] - 0.127739580897).abs() < 1e-11);
        assert!((s2.steps()[1] - 0.46049571322).abs() < 1e-10);
        let s3 = chebyshev_steps(&b(1.0, 9.0), 3).unwrap();
        for (got, want) in s3.steps().iter().zip([0.118146029605, 0.2, 0.651084739626]) {
            assert!((got - want).abs() < 1e-11);
        }
        assert_eq!(s3.kind(), ScheduleKind::Chebyshev);
    }

    #[test]
    fn chebyshev_steps_reject_degenerate_bounds() {
        assert!(matches!(chebyshev_steps(&b(0.0, 1.0), 3), Err(Error::DegenerateSpectrum(_))));
        assert!(matches!(chebyshev_steps(&b(2.0, 2.0), 3), Err(Error::DegenerateSpectrum(_))));
        assert!(chebyshev_steps(&b(1.0, 2.0), 0).is_err());
    }

    #[test]
    fn psor_factor_examples() {
        let f = chebyshev_psor_factors(&b(0.6766, 1.922), 1).unwrap();
        assert!((f.steps()[0] - 0.76964).abs() < 1e-5);
        let f2 = chebyshev_psor_factors(&b(0.626, 1.216), 2).unwrap();
        let mid = 2.0 / (0.626 + 1.216);
        assert!(f2.steps()[0] < mid && mid < f2.steps()[1]);
        assert!((f2.steps()[0] - 0.885271864424).abs() < 1e-11);
        assert!((f2.steps()[1] - 1.40369888782).abs() < 1e-10);
    }

    #[test]
    fn psor_factors_t8_match_high_precision_values() {
        // 30-digit evaluation of the defining formula, rounded to 12 digits.
        let want = [
            1.02847422195,
            1.09578492149,
            1.24652827353,
            1.5196733982,
            1.99217524883,
            2.79507692196,
            4.04183860603,
            5.32805109385,
        ];
        let f = chebyshev_psor_factors(&b(0.18, 0.98), 8).unwrap();
        for (got, w) in f.steps().iter().zip(want) {
            assert!((got - w).abs() < 1e-10, "{got} vs {w}");
            assert!(*got > 1.0 / 0.98 && *got < 1.0 / 0.18);
        }
    }

    #[test]
    fn beta_t_examples() {
        let s = chebyshev_steps(&b(1.0, 9.0), 2).unwrap();
        assert_eq!(beta_t(&s, 0.0), 1.0);
        let c = StepSchedule::constant(0.2).unwrap();
        assert_eq!(beta_t(&c, 5.0), 0.0);
        assert!((beta_t(&s, 1.0).abs() - 8.0 / 17.0).abs() < 1e-12);
    }

    #[test]
    fn rho_upp_examples() {
        let k9 = b(1.0, 9.0);
        assert!((rho_upp(&k9, 1).unwrap() - 0.8).abs() < 1e-15);
        assert!((rho_upp(&k9, 2).unwrap() - 8.0 / 17.0).abs() < 1e-15);
        assert!((rho_upp(&k9, 6).unwrap() - 0.0312423724676593).abs() < 1e-13);
        assert!(0.029 < rho_upp(&k9, 6).unwrap());
        assert!(matches!(rho_upp(&b(3.0, 3.0), 4), Err(Error::DegenerateSpectrum(_))));
    }

    #[test]
    fn rho_upp_is_finite_for_extreme_arguments() {
        let r = rho_upp_kappa(1e12, 10_000).unwrap();
        assert!(r.is_finite() && r > 0.0 && r < 1.0);
        let tiny = rho_upp_kappa(1.0 + 1e-9, 1000).unwrap();
        assert_eq!(tiny, 0.0);
    }

    #[test]
    fn rate_report_examples() {
        let r = rate_report(&b(0.2, 1.0), 4).unwrap();
        assert!((r.rate_limit - 0.381966011250105).abs() < 1e-12);
        assert!((r.rate_limit - (5f64.sqrt() - 1.0) / (5f64.sqrt() + 1.0)).abs() < 1e-12);
        let k9 = rate_report(&b(1.0, 9.0), 3).unwrap();
        assert!((k9.rate_constant - 0.8).abs() < 1e-15);
        assert!((k9.rate_lower_bound - 0.5).abs() < 1e-15);
    }

    #[test]
    fn theorem2_margin_examples() {
        let k9 = b(1.0, 9.0);
        assert!((theorem2_margin(&k9, 6).unwrap() - 0.230901627532341).abs() < 1e-12);
        assert!((theorem2_margin(&k9, 2).unwrap() - 0.169411764705882).abs() < 1e-12);
        let near_one = theorem2_margin(&b(1.0, 1.0 + 1e-6), 3).unwrap();
        assert!((0.0..1e-15).contains(&near_one));
        assert!(theorem2_margin(&k9, 1).is_err());
    }

    #[test]
    fn permutation_search_examples() {
        let k9 = b(1.0, 9.0);
        assert_eq!(permutation_search(&k9, 1, 0.7).unwrap().steps(), &[0.2]);
        let p2 = permutation_search(&k9, 2, 0.3).unwrap();
        assert!((p2.steps()[0] - 0.12774).abs() < 1e-5);
        assert!((p2.steps()[1] - 0.46050).abs() < 1e-5);
        assert!(matches!(
            permutation_search(&k9, 11, 0.3),
            Err(Error::SizeLimit { value: 11, .. })
        ));
    }

    #[test]
    fn permutation_search_t2_is_exhaustive_minimum() {
        let k9 = b(1.0, 9.0);
        let c = chebyshev_steps(&k9, 2).unwrap();
        let d = [0.2, 0.3];
        let keep = (d[0] - c.steps()[0]).powi(2) + (d[1] - c.steps()[1]).powi(2);
        let swap = (d[0] - c.steps()[1]).powi(2) + (d[1] - c.steps()[0]).powi(2);
        assert!((keep - 0.03099).abs() < 5e-5 && (swap - 0.09755).abs() < 5e-5, "{keep} {swap}");
        assert!(keep < swap);
    }

    #[test]
    fn next_permutation_is_lexicographic() {
        let mut p = vec![0, 1, 2];
        let mut seen = vec![p.clone()];
        while next_permutation(&mut p) {
            seen.push(p.clone());
        }
        assert_eq!(
            seen,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
    }

    #[test]
    fn schedule_validation_and_periodicity() {
        assert!(StepSchedule::new(vec![], ScheduleKind::Custom).is_err());
        assert!(StepSchedule::new(vec![0.1, -0.2], ScheduleKind::Custom).is_err());
        assert!(StepSchedule::new(vec![f64::INFINITY], ScheduleKind::Custom).is_err());
        let s = StepSchedule::new(vec![0.1, 0.2, 0.3], ScheduleKind::Custom).unwrap();
        assert_eq!(s.step(4), 0.2);
        assert_eq!(s.permuted(&[2, 0, 1]).unwrap().steps(), &[0.3, 0.1, 0.2]);
        assert!(s.permuted(&[0, 0, 1]).is_err());
    }

    #[test]
    fn schedule_csv_round_trip() {
        let s = chebyshev_steps(&b(1.0, 9.0), 5).unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("# lambda_min="));
        assert_eq!(StepSchedule::from_csv(&text).unwrap(), s);
    }

    #[test]
    fn equioscillation_on_dense_grid() {
        for (lo, hi, t) in [(1.0, 9.0, 6), (0.1, 0.9, 4), (0.0234, 1.0, 8), (2.0, 3.0, 11)] {
            let bounds = b(lo, hi);
            let s = chebyshev_steps(&bounds, t).unwrap();
            let rho = rho_upp(&bounds, t).unwrap();
            for k in 0..=10_000 {
                let lambda = lo + (hi - lo) * k as f64 / 10_000.0;
                assert!(beta_t(&s, lambda).abs() <= rho + 1e-12);
            }
            assert!((beta_t(&s, lo).abs() - rho).abs() < 1e-9);
            assert!((beta_t(&s, hi).abs() - rho).abs() < 1e-9);
            for g in s.steps() {
                assert!(beta_t(&s, 1.0 / g).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn single_step_is_optimal_constant(lo in 1e-3f64..10.0, width in 1e-3f64..100.0) {
            let bounds = b(lo, lo + width);
            let s = chebyshev_steps(&bounds, 1).unwrap();
            prop_assert_eq!(s.steps()[0], 1.0 / bounds.center());
            prop_assert!((s.steps()[0] - 2.0 / (lo + lo + width)).abs() <= 1e-15 * s.steps()[0]);
        }

        #[test]
        fn rho_upp_monotone(kappa in 1.01f64..1e4, t in 1usize..40) {
            let r = rho_upp_kappa(kappa, t).unwrap();
            prop_assert!(r < 1.0);
            prop_assert!(rho_upp_kappa(kappa, t + 1).unwrap() < r);
            prop_assert!(rho_upp_kappa(kappa * 1.01, t).unwrap() > r);
        }

        #[test]
        fn rate_ordering(kappa in 1.0001f64..1e4, t in 1usize..=64) {
            let r = rate_report(&b(1.0, kappa), t).unwrap();
            prop_assert!(r.rate_lower_bound <= r.rate_per_iter + 1e-15);
            prop_assert!(r.rate_per_iter <= r.rate_constant + 1e-15);
            prop_assert!((r.rate_limit - r.rate_lower_bound).abs() < 1e-12);
        }

        #[test]
        fn closed_form_matches_chebyshev_value(kappa in 1.01f64..1e3, t in 1usize..40) {
            let z = (kappa + 1.0) / (kappa - 1.0);
            let direct = 1.0 / cheb_eval(t, -z).abs();
            let closed = rho_upp_kappa(kappa, t).unwrap();
            prop_assert!((direct - closed).abs() <= 1e-9 * closed.max(1e-300));
        }

        #[test]
        fn recurrence_matches_trig_forms(n in 0usize..=64, x in -10.0f64..10.0) {
            let rec = {
                let (mut p, mut c) = (1.0, x);
                if n == 0 { 1.0 } else {
                    for _ in 1..n { let nx = 2.0 * x * c - p; p = c; c = nx; }
                    c
                }
            };
            let closed = cheb_eval(n, x);
            prop_assert!((rec - closed).abs() <= 1e-9 * closed.abs().max(1.0));
        }

        #[test]
        fn permutation_search_permutes_chebyshev_steps(
            lo in 0.1f64..5.0, width in 0.1f64..20.0, t in 1usize..=7, u in 0.0f64..1.0,
        ) {
            let bounds = b(lo, lo + width);
            let mut got = permutation_search(&bounds, t, u).unwrap().steps().to_vec();
            let mut want = chebyshev_steps(&bounds, t).unwrap().steps().to_vec();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() <= 1e-12);
            }
        }
    }
}
