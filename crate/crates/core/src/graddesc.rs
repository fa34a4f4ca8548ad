//! Gradient descent on `f(x) = xᵀAx/2` with periodic step schedules, the
//! heavy-ball and Chebyshev semi-iterative baselines, and exact analysis of the
//! one-period iteration matrix `Q = ∏ (I − γ_t A)`.

use std::collections::BTreeMap;

use crate::chebyshev::{beta_t, StepSchedule};
use crate::rng;
use crate::spectral::{
    condition_number, dot, norm2, sym_eigendecompose, sym_eigenvalues, DenseMatrix,
    Eigendecomposition, SpectralBounds, DEFAULT_EIGEN_TOL,
};
use crate::trace::IterationTrace;
use crate::{Error, Result};

/// Symmetric positive definite quadratic with minimiser at the origin.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub a: DenseMatrix,
    pub bounds: SpectralBounds,
    /// Ascending eigenvalues of `a`.
    pub eigenvalues: Vec<f64>,
    pub decomposition: Option<Eigendecomposition>,
    pub metadata: BTreeMap<String, String>,
}

impl QuadraticProblem {
    /// Computes the exact spectrum of `a`; rejects matrices that are not
    /// symmetric positive definite.
    pub fn new(a: DenseMatrix) -> Result<Self> {
        let eigenvalues = sym_eigenvalues(&a)?;
        if eigenvalues[0] <= 0.0 {
            return Err(Error::DegenerateSpectrum(format!(
                "matrix is not positive definite (lambda_min = {})",
                eigenvalues[0]
            )));
        }
        let bounds = SpectralBounds::new(eigenvalues[0], eigenvalues[eigenvalues.len() - 1])?;
        Ok(Self {
            a,
            bounds,
            eigenvalues,
            decomposition: None,
            metadata: BTreeMap::new(),
        })
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        Self::new(DenseMatrix::from_diag(diag))
    }

    /// Adds eigenvectors (cyclic Jacobi).
    pub fn with_decomposition(mut self) -> Result<Self> {
        let d = sym_eigendecompose(&self.a, DEFAULT_EIGEN_TOL)?;
        self.eigenvalues = d.eigenvalues.clone();
        self.decomposition = Some(d);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn kappa(&self) -> f64 {
        self.bounds.lambda_max() / self.bounds.lambda_min()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.a.matvec(x))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// `A = HᵀH` with `H ∈ R^{m×n}`, entries i.i.d. `N(0, 1/n)`.
///
/// The metadata records the Marchenko–Pastur edges `(1 ± √(m/n))²` that the
/// extreme eigenvalues approach as `n` grows.
pub fn make_gaussian_gram_problem(n: usize, m: usize, seed: u64) -> Result<QuadraticProblem> {
    if n < 2 || m < n {
        return Err(Error::InvalidArgument(format!("need m >= n >= 2, got n={n}, m={m}")));
    }
    let mut r = rng::seeded(seed);
    let h = DenseMatrix::new(m, n, rng::gaussian_vec(&mut r, m * n, (1.0 / n as f64).sqrt()))?;
    let mut p = QuadraticProblem::new(h.gram())?;
    let ratio = (m as f64 / n as f64).sqrt();
    p.metadata.insert("n".into(), n.to_string());
    p.metadata.insert("m".into(), m.to_string());
    p.metadata.insert("seed".into(), seed.to_string());
    p.metadata.insert("mp_lambda_min".into(), format!("{:.16e}", (1.0 - ratio).powi(2)));
    p.metadata.insert("mp_lambda_max".into(), format!("{:.16e}", (1.0 + ratio).powi(2)));
    Ok(p)
}

fn new_trace(p: &QuadraticProblem, method: &str, kind: &str, x0: &[f64]) -> IterationTrace {
    let mut t = IterationTrace::new(method, kind, 0)
        .with_meta("lambda_min", format!("{:.16e}", p.bounds.lambda_min()))
        .with_meta("lambda_max", format!("{:.16e}", p.bounds.lambda_max()));
    t.push(norm2(x0));
    t
}

/// `x ← (I − γ_t A)x` with the periodic schedule; errors are `‖x‖₂`.
pub fn run_gd(
    p: &QuadraticProblem,
    schedule: &StepSchedule,
    x0: &[f64],
    iters: usize,
) -> Result<IterationTrace> {
    p.check_dim(x0)?;
    let mut trace = new_trace(p, "gd", schedule.kind().as_str(), x0).with_meta("T", schedule.period());
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; x.len()];
    for t in 0..iters {
        p.a.matvec_into(&x, &mut ax);
        let g = schedule.step(t);
        for (xi, ai) in x.iter_mut().zip(&ax) {
            *xi -= g * ai;
        }
        trace.push(norm2(&x));
    }
    Ok(trace)
}

/// `x` after one full period of the schedule, i.e. `Q·x0`.
pub fn apply_period(p: &QuadraticProblem, schedule: &StepSchedule, x0: &[f64]) -> Result<Vec<f64>> {
    p.check_dim(x0)?;
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; x.len()];
    for &g in schedule.steps() {
        p.a.matvec_into(&x, &mut ax);
        for (xi, ai) in x.iter_mut().zip(&ax) {
            *xi -= g * ai;
        }
    }
    Ok(x)
}

/// Heavy-ball coefficients `(γ', β)` = `(4/(√λ_min+√λ_max)², ((√κ−1)/(√κ+1))²)`.
pub fn momentum_coefficients(bounds: &SpectralBounds) -> Result<(f64, f64)> {
    bounds.require_chebyshev()?;
    let (lo, hi) = (bounds.lambda_min().sqrt(), bounds.lambda_max().sqrt());
    let sk = condition_number(bounds)?.sqrt();
    Ok((4.0 / (lo + hi).powi(2), ((sk - 1.0) / (sk + 1.0)).powi(2)))
}

/// `x⁺ = (I − γ'A)x + β(x − x⁻)` with `x⁽⁻¹⁾ = 0`.
pub fn run_momentum(p: &QuadraticProblem, x0: &[f64], iters: usize) -> Result<IterationTrace> {
    p.check_dim(x0)?;
    let (gamma, beta) = momentum_coefficients(&p.bounds)?;
    let mut trace = new_trace(p, "momentum", "momentum_aux", x0)
        .with_meta("gamma", format!("{gamma:.16e}"))
        .with_meta("beta", format!("{beta:.16e}"));
    let mut prev = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; x.len()];
    for _ in 0..iters {
        p.a.matvec_into(&x, &mut ax);
        for i in 0..x.len() {
            let next = x[i] - gamma * ax[i] + beta * (x[i] - prev[i]);
            prev[i] = x[i];
            x[i] = next;
        }
        trace.push(norm2(&x));
    }
    Ok(trace)
}

/// Weights `γ'_1, …, γ'_len` of the semi-iterative method with `ξ = 1 − 1/κ`.
pub fn semi_iterative_weights(kappa: f64, len: usize) -> Result<Vec<f64>> {
    if !(kappa > 1.0) {
        return Err(Error::DegenerateSpectrum(format!("condition number {kappa} must exceed 1")));
    }
    let xi2 = (1.0 - 1.0 / kappa).powi(2);
    let mut w = Vec::with_capacity(len);
    for t in 0..len {
        let next = match t {
            0 => 1.0,
            1 => 2.0 / (2.0 - xi2),
            _ => 4.0 / (4.0 - xi2 * w[t - 1]),
        };
        w.push(next);
    }
    Ok(w)
}

/// Chebyshev semi-iterative method
/// `x⁺ = (I − γ'_{t+1}Ã)x + (γ'_{t+1} − 1)(x − x⁻)`, `x⁽⁻¹⁾ = 0`,
/// on the normalised matrix `Ã = A/λ_max` (spectrum in `[1/κ, 1]`).
pub fn run_chebyshev_semi(p: &QuadraticProblem, x0: &[f64], iters: usize) -> Result<IterationTrace> {
    p.check_dim(x0)?;
    let weights = semi_iterative_weights(p.kappa(), iters)?;
    let scale = 1.0 / p.bounds.lambda_max();
    let mut trace = new_trace(p, "chebyshev_semi", "momentum_aux", x0);
    let mut prev = vec![0.0; x0.len()];
    let mut x = x0.to_vec();
    let mut ax = vec![0.0; x.len()];
    for &w in &weights {
        p.a.matvec_into(&x, &mut ax);
        for i in 0..x.len() {
            let next = x[i] - w * scale * ax[i] + (w - 1.0) * (x[i] - prev[i]);
            prev[i] = x[i];
            x[i] = next;
        }
        trace.push(norm2(&x));
    }
    Ok(trace)
}

/// `ρ(Q) = max_i |β_T(λ_i)|` over the exact eigenvalues.
pub fn spectral_radius_qt(p: &QuadraticProblem, schedule: &StepSchedule) -> f64 {
    p.eigenvalues
        .iter()
        .map(|&l| beta_t(schedule, l).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseRadius {
    /// `ρ(Q)`.
    pub rho: f64,
    /// `√(n·Ê L)` from the Monte-Carlo mean.
    pub sqrt_n_l: f64,
    /// `Σ_i β_T(λ_i)²`, the exact value of `n·E L`.
    pub analytic_sum: f64,
    /// Monte-Carlo mean of `‖Q x0‖²`.
    pub mc_mean: f64,
    /// Standard error of `mc_mean`.
    pub mc_stderr: f64,
}

/// Compares `ρ(Q)` with the mean squared one-period output over standard
/// Gaussian inputs: `E‖Q x0‖² = Σ_i β_T(λ_i)² ≥ ρ(Q)²`.
pub fn mse_radius_identity(
    p: &QuadraticProblem,
    schedule: &StepSchedule,
    samples: usize,
    seed: u64,
) -> Result<MseRadius> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let rho = spectral_radius_qt(p, schedule);
    let analytic_sum: f64 = p.eigenvalues.iter().map(|&l| beta_t(schedule, l).powi(2)).sum();
    debug_assert!(rho * rho <= analytic_sum * (1.0 + 1e-12));

    let mut r = rng::seeded(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x0 = rng::gaussian_vec(&mut r, p.dim(), 1.0);
        let out = apply_period(p, schedule, &x0)?;
        let s = dot(&out, &out);
        sum += s;
        sum_sq += s * s;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = if samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MseRadius {
        rho,
        sqrt_n_l: mean.sqrt(),
        analytic_sum,
        mc_mean: mean,
        mc_stderr: (var / n).sqrt(),
    })
}
