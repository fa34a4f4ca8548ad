//! Fixed-point iteration with periodic successive over-relaxation:
//! `x⁽ᵏ⁺¹⁾ = (1 − ω_k)x⁽ᵏ⁾ + ω_k f(x⁽ᵏ⁾)`, `ω_{ℓT+j} = ω_j`.
//!
//! Near a fixed point `x*` the iteration behaves like gradient descent on the
//! matrix `B = I − J*`, so Chebyshev factors built from the bounds of `B`
//! give the same per-period contraction as Chebyshev steps.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use crate::chebyshev::{rate_report, RateReport, StepSchedule};
use crate::spectral::{
    dist2, estimate_bounds, norm2, sym_eigenvalues, BoundsMethod, DenseMatrix, SpectralBounds,
};
use crate::trace::IterationTrace;
use crate::{Error, Result};

pub type VectorMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type MatrixMap = Arc<dyn Fn(&[f64]) -> DenseMatrix + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Plain iterations used to locate an unknown fixed point, as a multiple of
/// the experiment's iteration budget.
pub const REFERENCE_BUDGET_FACTOR: usize = 10;

/// A map `f: Rⁿ → Rⁿ` whose fixed point is sought. Evaluation must be pure.
#[derive(Clone)]
pub struct FixedPointOperator {
    dim: usize,
    eval: VectorMap,
    jacobian: Option<MatrixMap>,
    /// Symmetric matrix similar to the Jacobian at a point, when the operator
    /// knows one.
    symmetric_similar: Option<MatrixMap>,
    known_fixed_point: Option<Vec<f64>>,
}

impl fmt::Debug for FixedPointOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedPointOperator")
            .field("dim", &self.dim)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("known_fixed_point", &self.known_fixed_point.is_some())
            .finish()
    }
}

impl FixedPointOperator {
    pub fn new(dim: usize, eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            jacobian: None,
            symmetric_similar: None,
            known_fixed_point: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&[f64]) -> DenseMatrix + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_symmetric_similar(
        mut self,
        sym: impl Fn(&[f64]) -> DenseMatrix + Send + Sync + 'static,
    ) -> Self {
        self.symmetric_similar = Some(Arc::new(sym));
        self
    }

    /// Rejects points with `‖f(x*) − x*‖ > 1e-8·(1 + ‖x*‖)`.
    pub fn with_fixed_point(mut self, x_star: Vec<f64>) -> Result<Self> {
        let fx = self.eval(&x_star)?;
        let residual = dist2(&fx, &x_star);
        if !(residual <= 1e-8 * (1.0 + norm2(&x_star))) {
            return Err(Error::InvalidArgument(format!(
                "claimed fixed point has residual {residual:e}"
            )));
        }
        self.known_fixed_point = Some(x_star);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn known_fixed_point(&self) -> Option<&[f64]> {
        self.known_fixed_point.as_deref()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: n,
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let y = (self.eval)(x);
        self.check_dim(y.len())?;
        Ok(y)
    }

    /// Analytic Jacobian when present, else central differences.
    pub fn jacobian_at(&self, x: &[f64]) -> Result<DenseMatrix> {
        self.check_dim(x.len())?;
        match &self.jacobian {
            Some(j) => Ok(j(x)),
            None => jacobian_fd(self, x, None),
        }
    }
}

/// Central-difference Jacobian, column `j` = `(f(x+h e_j) − f(x−h e_j))/(2h)`.
/// Default `h = 1e-5·(1 + ‖x‖∞)`.
pub fn jacobian_fd(op: &FixedPointOperator, x: &[f64], h: Option<f64>) -> Result<DenseMatrix> {
    op.check_dim(x.len())?;
    let n = op.dim();
    let h = h.unwrap_or_else(|| 1e-5 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
    let mut jac = DenseMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let fp = op.eval(&xp)?;
        xp[j] = x[j] - h;
        let fm = op.eval(&xp)?;
        xp[j] = x[j];
        for i in 0..n {
            let d = (fp[i] - fm[i]) / (2.0 * h);
            if !d.is_finite() {
                return Err(Error::NonFinite { iteration: j });
            }
            jac[(i, j)] = d;
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsorConfig {
    pub factors: StepSchedule,
    pub max_iters: usize,
    /// Stop once the error drops to this value; `0` runs all iterations.
    pub stop_tol: f64,
}

impl PsorConfig {
    pub fn new(factors: StepSchedule, max_iters: usize) -> Result<Self> {
        if max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        Ok(Self {
            factors,
            max_iters,
            stop_tol: 0.0,
        })
    }

    pub fn with_stop_tol(mut self, tol: f64) -> Self {
        self.stop_tol = tol;
        self
    }

    /// `ω ≡ 1`, i.e. the plain iteration.
    pub fn plain(max_iters: usize) -> Result<Self> {
        Self::new(StepSchedule::constant(1.0)?, max_iters)
    }
}

/// Runs `iters` PSOR updates from `x0`, calling `visit(k, x⁽ᵏ⁾)` for
/// `k = 0..=iters`. Stops early when `visit` returns `false`. Returns the last
/// iterate.
pub fn psor_iterate(
    op: &FixedPointOperator,
    factors: &StepSchedule,
    x0: &[f64],
    iters: usize,
    mut visit: impl FnMut(usize, &[f64]) -> bool,
) -> Result<Vec<f64>> {
    op.check_dim(x0.len())?;
    let mut x = x0.to_vec();
    if !visit(0, &x) {
        return Ok(x);
    }
    for k in 0..iters {
        let fx = op.eval(&x)?;
        let w = factors.step(k);
        if w == 1.0 {
            x = fx;
        } else {
            for (xi, fi) in x.iter_mut().zip(&fx) {
                *xi = (1.0 - w) * *xi + w * fi;
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: k + 1 });
        }
        if !visit(k + 1, &x) {
            break;
        }
    }
    Ok(x)
}

/// Fixed-point estimate from `REFERENCE_BUDGET_FACTOR × budget` plain iterations.
pub fn estimate_reference(op: &FixedPointOperator, x0: &[f64], budget: usize) -> Result<Vec<f64>> {
    let plain = StepSchedule::constant(1.0)?;
    psor_iterate(op, &plain, x0, REFERENCE_BUDGET_FACTOR * budget, |_, _| true)
}

/// PSOR trace measured against `reference`.
pub fn run_psor_against(
    op: &FixedPointOperator,
    cfg: &PsorConfig,
    x0: &[f64],
    reference: &[f64],
) -> Result<IterationTrace> {
    op.check_dim(reference.len())?;
    let mut trace = IterationTrace::new("psor", cfg.factors.kind().as_str(), 0)
        .with_meta("T", cfg.factors.period());
    if let Some(b) = cfg.factors.bounds() {
        trace.set_meta("a", format!("{:.16e}", b.lambda_min()));
        trace.set_meta("b", format!("{:.16e}", b.lambda_max()));
    }
    psor_iterate(op, &cfg.factors, x0, cfg.max_iters, |_, x| {
        let e = dist2(x, reference);
        trace.push(e);
        e > cfg.stop_tol
    })?;
    Ok(trace)
}

fn reference_for(op: &FixedPointOperator, x0: &[f64], budget: usize) -> Result<(Vec<f64>, &'static str)> {
    match op.known_fixed_point() {
        Some(x) => Ok((x.to_vec(), "known")),
        None => Ok((estimate_reference(op, x0, budget)?, "plain_10x")),
    }
}

/// `x ← f(x)`. Errors are measured against the known fixed point, or against a
/// long plain run when none is known.
pub fn run_fixed_point(op: &FixedPointOperator, x0: &[f64], iters: usize) -> Result<IterationTrace> {
    let cfg = PsorConfig::plain(iters)?;
    let (reference, how) = reference_for(op, x0, iters)?;
    let mut t = run_psor_against(op, &cfg, x0, &reference)?;
    t.method = "fixed_point".into();
    t.set_meta("reference", how);
    Ok(t)
}

pub fn run_psor(op: &FixedPointOperator, cfg: &PsorConfig, x0: &[f64]) -> Result<IterationTrace> {
    let (reference, how) = reference_for(op, x0, cfg.max_iters)?;
    let mut t = run_psor_against(op, cfg, x0, &reference)?;
    t.set_meta("reference", how);
    Ok(t)
}

/// Per-period local rate of Chebyshev-PSOR from the bounds `(a, b)` of `B = I − J*`.
pub fn local_rate_report(bounds_of_b: &SpectralBounds, period: usize) -> Result<RateReport> {
    rate_report(bounds_of_b, period)
}

/// `max(|1 − a|, |1 − b|)`: the local rate of the plain iteration when `B` is
/// symmetric.
pub fn plain_local_rate(bounds_of_b: &SpectralBounds) -> f64 {
    (1.0 - bounds_of_b.lambda_min()).abs().max((1.0 - bounds_of_b.lambda_max()).abs())
}

/// `f(x) = g(Ax + b)` with `g` applied component-wise.
#[derive(Clone)]
pub struct AffineCompositeOperator {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    g: ScalarFn,
    g_prime: ScalarFn,
    /// Whether `g′ ≥ 0` is claimed everywhere.
    pub g_prime_nonneg: bool,
}

impl fmt::Debug for AffineCompositeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AffineCompositeOperator")
            .field("dim", &self.a.rows())
            .field("g_prime_nonneg", &self.g_prime_nonneg)
            .finish()
    }
}

impl AffineCompositeOperator {
    pub fn new(
        a: DenseMatrix,
        b: Vec<f64>,
        g: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_prime_nonneg: bool,
    ) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                found: b.len(),
            });
        }
        Ok(Self {
            a,
            b,
            g: Arc::new(g),
            g_prime: Arc::new(g_prime),
            g_prime_nonneg,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// `Ax + b`
    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.a.matvec(x);
        for (zi, bi) in z.iter_mut().zip(&self.b) {
            *zi += bi;
        }
        z
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.pre_activation(x);
        z.iter_mut().for_each(|v| *v = (self.g)(*v));
        z
    }

    /// Diagonal of `Q = diag(g′(Ax + b))`.
    pub fn q_diag(&self, x: &[f64]) -> Vec<f64> {
        self.pre_activation(x).into_iter().map(|v| (self.g_prime)(v)).collect()
    }

    /// `J(x) = Q·A`
    pub fn jacobian(&self, x: &[f64]) -> DenseMatrix {
        let q = self.q_diag(x);
        self.a.scale_rows_cols(&q, &vec![1.0; self.dim()])
    }

    /// `S = Q^{1/2} A Q^{1/2}`, similar to `QA` when `Q ≥ 0`.
    pub fn symmetrized(&self, x: &[f64]) -> DenseMatrix {
        let r: Vec<f64> = self.q_diag(x).iter().map(|q| q.max(0.0).sqrt()).collect();
        self.a.scale_rows_cols(&r, &r)
    }

    pub fn to_operator(&self) -> FixedPointOperator {
        let (e, j, s) = (self.clone(), self.clone(), self.clone());
        let op = FixedPointOperator::new(self.dim(), move |x| e.eval(x))
            .with_jacobian(move |x| j.jacobian(x));
        if self.g_prime_nonneg && self.a.is_symmetric(1e-12) {
            op.with_symmetric_similar(move |x| s.symmetrized(x))
        } else {
            op
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCheck {
    pub traces_match: bool,
    /// Eigenvalues of `J* = Q*A`, ascending (computed from the symmetric `S`).
    pub real_eigs: Vec<f64>,
    /// Largest relative trace discrepancy over the checked powers.
    pub max_rel_error: f64,
    /// Highest power `k` compared.
    pub powers_checked: usize,
}

/// Tolerance on the relative trace discrepancy.
pub const TRACE_MATCH_TOL: f64 = 1e-6;
/// Highest matrix power compared by [`affine_jacobian_spectrum_check`].
pub const TRACE_MAX_POWER: usize = 32;

/// Certifies that `J* = Q*A` has the real spectrum of `S = Q*^{1/2} A Q*^{1/2}`
/// by comparing `tr(J*^k)` with `tr(S^k)` for `k = 1..=min(n, 32)`.
///
/// The discrepancy at power `k` is measured relative to `max(1, Σ|λ_i|^k)`.
pub fn affine_jacobian_spectrum_check(
    op: &AffineCompositeOperator,
    x_star: &[f64],
) -> Result<SpectrumCheck> {
    let n = op.dim();
    if x_star.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x_star.len(),
        });
    }
    let a_eigs = sym_eigenvalues(&op.a)?;
    let scale = a_eigs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smallest = a_eigs.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if scale == 0.0 || smallest <= 1e-12 * scale {
        return Err(Error::SingularMatrix {
            det: a_eigs.iter().product(),
        });
    }
    let q = op.q_diag(x_star);
    if let Some((index, &value)) = q.iter().enumerate().find(|(_, v)| **v < 0.0) {
        return Err(Error::NegativeDerivative { index, value });
    }
    let j = op.jacobian(x_star);
    let s = op.symmetrized(x_star);
    let eigs = sym_eigenvalues(&s)?;

    let powers = n.min(TRACE_MAX_POWER);
    let (mut jk, mut sk) = (j.clone(), s.clone());
    let mut max_rel = 0.0f64;
    for k in 1..=powers {
        if k > 1 {
            jk = jk.matmul(&j)?;
            sk = sk.matmul(&s)?;
        }
        let denom = eigs.iter().map(|l| l.abs().powi(k as i32)).sum::<f64>().max(1.0);
        max_rel = max_rel.max((jk.trace() - sk.trace()).abs() / denom);
    }
    Ok(SpectrumCheck {
        traces_match: max_rel <= TRACE_MATCH_TOL,
        real_eigs: eigs,
        max_rel_error: max_rel,
        powers_checked: powers,
    })
}

/// How the spectrum of `B = I − J` was made symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetrization {
    /// `J` was already symmetric.
    Symmetric,
    /// The operator supplied a symmetric matrix similar to `J`.
    Similar,
    /// `E B E⁻¹` is symmetric for a positive diagonal `E` found from the entries.
    DiagonalScaling,
    /// Fallback: bounds of `(B + Bᵀ)/2`. Not the spectrum of `B`.
    SymmetricPart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsorBounds {
    pub bounds: SpectralBounds,
    pub symmetrization: Symmetrization,
    /// Set when `B` is not known to be similar to a symmetric matrix; a rate
    /// report built from these bounds is then only a lower bound.
    pub lower_bound_only: bool,
}

/// Bounds of `B = I − J(x_ref)`.
pub fn psor_bounds_from_operator(
    op: &FixedPointOperator,
    x_ref: &[f64],
    method: BoundsMethod,
    seed: u64,
) -> Result<PsorBounds> {
    op.check_dim(x_ref.len())?;
    let n = op.dim();
    let (sym_j, how) = match &op.symmetric_similar {
        Some(s) => (s(x_ref), Symmetrization::Similar),
        None => {
            let j = op.jacobian_at(x_ref)?;
            let mut b = j.scaled(-1.0);
            for i in 0..n {
                b[(i, i)] += 1.0;
            }
            let tol = 1e-7 * (1.0 + b.max_abs());
            let (c, how) = if is_symmetric_abs(&b, tol) {
                (b, Symmetrization::Symmetric)
            } else if let Some(c) = diagonal_symmetrize(&b, tol) {
                (c, Symmetrization::DiagonalScaling)
            } else {
                (symmetric_part(&b), Symmetrization::SymmetricPart)
            };
            let bounds = bounds_of(&symmetric_part(&c), method, seed)?;
            return Ok(PsorBounds {
                bounds,
                symmetrization: how,
                lower_bound_only: how == Symmetrization::SymmetricPart,
            });
        }
    };
    let mut b = sym_j.scaled(-1.0);
    for i in 0..n {
        b[(i, i)] += 1.0;
    }
    Ok(PsorBounds {
        bounds: bounds_of(&symmetric_part(&b), method, seed)?,
        symmetrization: how,
        lower_bound_only: false,
    })
}

fn bounds_of(b: &DenseMatrix, method: BoundsMethod, seed: u64) -> Result<SpectralBounds> {
    estimate_bounds(b, method, seed)
}

fn is_symmetric_abs(b: &DenseMatrix, tol: f64) -> bool {
    let n = b.rows();
    (0..n).all(|i| (0..i).all(|j| (b[(i, j)] - b[(j, i)]).abs() <= tol))
}

fn symmetric_part(b: &DenseMatrix) -> DenseMatrix {
    let n = b.rows();
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (b[(i, j)] + b[(j, i)]))
}

/// Finds positive `e` with `e_i b_ij / e_j` symmetric, by propagating
/// `(e_i/e_j)² = b_ji/b_ij` along a spanning forest of the nonzero pattern.
fn diagonal_symmetrize(b: &DenseMatrix, tol: f64) -> Option<DenseMatrix> {
    let n = b.rows();
    let tiny = 1e-300;
    let mut log_e: Vec<Option<f64>> = vec![None; n];
    for root in 0..n {
        if log_e[root].is_some() {
            continue;
        }
        log_e[root] = Some(0.0);
        let mut queue = VecDeque::from([root]);
        while let Some(i) = queue.pop_front() {
            let li = log_e[i].expect("visited");
            for j in 0..n {
                if j == i || log_e[j].is_some() {
                    continue;
                }
                let (bij, bji) = (b[(i, j)], b[(j, i)]);
                if bij.abs() <= tiny && bji.abs() <= tiny {
                    continue;
                }
                if bij * bji <= 0.0 {
                    return None;
                }
                log_e[j] = Some(li - 0.5 * (bji / bij).ln());
                queue.push_back(j);
            }
        }
    }
    let e: Vec<f64> = log_e.iter().map(|l| l.expect("all assigned").exp()).collect();
    let inv: Vec<f64> = e.iter().map(|v| 1.0 / v).collect();
    let c = b.scale_rows_cols(&e, &inv);
    is_symmetric_abs(&c, tol * c.max_abs().max(1.0)).then_some(c)
}
