//! Solvers and problem generators built on the PSOR engine: Jacobi for linear
//! systems, ISTA / Chebyshev-PSOR ISTA / FISTA for the Lasso, modified
//! Richardson iteration for nonlinear deblurring, and the small nonlinear
//! fixed-point examples.

use rand::Rng as _;

use crate::chebyshev::{chebyshev_psor_factors, StepSchedule};
use crate::psor::{
    estimate_reference, psor_bounds_from_operator, psor_iterate, AffineCompositeOperator,
    FixedPointOperator, PsorBounds,
};
use crate::rng;
use crate::spectral::{sym_eigenvalues, BoundsMethod, DenseMatrix, SpectralBounds};
use crate::trace::IterationTrace;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Jacobi

/// `Px = q`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub p: DenseMatrix,
    pub q: Vec<f64>,
}

impl LinearSystem {
    pub fn new(p: DenseMatrix, q: Vec<f64>) -> Result<Self> {
        if !p.is_square() {
            return Err(Error::NotSquare {
                rows: p.rows(),
                cols: p.cols(),
            });
        }
        if q.len() != p.rows() {
            return Err(Error::DimensionMismatch {
                expected: p.rows(),
                found: q.len(),
            });
        }
        Ok(Self { p, q })
    }

    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.p
            .matvec(x)
            .iter()
            .zip(&self.q)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `f(x) = D⁻¹(q − (P − D)x)` with `D = diag(P)`.
///
/// For symmetric `P` with positive diagonal the operator also carries the
/// symmetric matrix `I − D^{-1/2} P D^{-1/2}` similar to its Jacobian.
pub fn jacobi_operator(sys: &LinearSystem) -> Result<FixedPointOperator> {
    let d = sys.p.diag();
    if let Some(index) = d.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroDiagonal { index });
    }
    let n = d.len();
    let inv_d: Vec<f64> = d.iter().map(|v| 1.0 / v).collect();
    let ones = vec![1.0; n];
    // Off-diagonal part of −D⁻¹P, i.e. the (constant) Jacobian.
    let mut jac = sys.p.scale_rows_cols(&inv_d, &ones).scaled(-1.0);
    for i in 0..n {
        jac[(i, i)] = 0.0;
    }
    let c: Vec<f64> = sys.q.iter().zip(&inv_d).map(|(q, i)| q * i).collect();
    let (j_eval, j_out) = (jac.clone(), jac);
    let mut op = FixedPointOperator::new(n, move |x| {
        let mut y = j_eval.matvec(x);
        y.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        y
    })
    .with_jacobian(move |_| j_out.clone());
    if d.iter().all(|&v| v > 0.0) && sys.p.is_symmetric(1e-12) {
        let r: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
        let mut sym = sys.p.scale_rows_cols(&r, &r).scaled(-1.0);
        for i in 0..n {
            sym[(i, i)] += 1.0;
        }
        op = op.with_symmetric_similar(move |_| sym.clone());
    }
    Ok(op)
}

/// `P = I + MᵀM` with `M ∈ R^{n×n}` entries i.i.d. `N(0, std²)`, `q = 0`.
pub fn make_gram_jacobi_system(n: usize, std: f64, seed: u64) -> Result<LinearSystem> {
    let mut r = rng::seeded(seed);
    let m = DenseMatrix::new(n, n, rng::gaussian_vec(&mut r, n * n, std))?;
    let mut p = m.gram();
    for i in 0..n {
        p[(i, i)] += 1.0;
    }
    LinearSystem::new(p, vec![0.0; n])
}

// ---------------------------------------------------------------------------
// Lasso

/// Sparse recovery instance `y = M x_true + w`.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub m_sense: DenseMatrix,
    pub y: Vec<f64>,
    pub x_true: Vec<f64>,
    pub p_sparsity: f64,
    pub sigma: f64,
    /// Gradient step.
    pub gamma: f64,
    /// Shrinkage threshold; the implied ℓ₁ weight is `tau / gamma`.
    pub tau: f64,
    /// Softplus sharpness of the smooth shrinkage.
    pub beta_sp: f64,
    /// `λ_max(MᵀM)`.
    pub lipschitz: f64,
}

pub const DEFAULT_BETA_SP: f64 = 100.0;

impl LassoProblem {
    pub fn n(&self) -> usize {
        self.m_sense.cols()
    }

    pub fn m(&self) -> usize {
        self.m_sense.rows()
    }

    /// `‖x − x_true‖² / n`
    pub fn nmse(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.x_true).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / self.n() as f64
    }

    /// `½‖y − Mx‖² + (τ/γ)‖x‖₁`
    pub fn objective(&self, x: &[f64]) -> f64 {
        let r: f64 = self
            .m_sense
            .matvec(x)
            .iter()
            .zip(&self.y)
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        0.5 * r + self.tau / self.gamma * x.iter().map(|v| v.abs()).sum::<f64>()
    }
}

/// Bernoulli-Gaussian source (nonzero with probability `p`, value `N(0,1)`),
/// `M` with i.i.d. `N(0,1)` entries, noise `N(0, σ²)`. Uses
/// `γ = τ = 1/λ_max(MᵀM)` and `β = 100`.
pub fn make_lasso_problem(n: usize, m: usize, p: f64, sigma: f64, seed: u64) -> Result<LassoProblem> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("sparsity {p} outside [0, 1]")));
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be positive".into()));
    }
    let mut r = rng::seeded(seed);
    let x_true: Vec<f64> = (0..n)
        .map(|_| if r.random::<f64>() < p { rng::gaussian(&mut r) } else { 0.0 })
        .collect();
    let m_sense = DenseMatrix::new(m, n, rng::gaussian_vec(&mut r, m * n, 1.0))?;
    let mut y = m_sense.matvec(&x_true);
    for v in y.iter_mut() {
        *v += sigma * rng::gaussian(&mut r);
    }
    // MMᵀ shares the nonzero spectrum of MᵀM and is the smaller of the two when m < n.
    let small = if m <= n {
        m_sense.transpose().gram()
    } else {
        m_sense.gram()
    };
    let lipschitz = *sym_eigenvalues(&small)?.last().expect("nonempty");
    Ok(LassoProblem {
        m_sense,
        y,
        x_true,
        p_sparsity: p,
        sigma,
        gamma: 1.0 / lipschitz,
        tau: 1.0 / lipschitz,
        beta_sp: DEFAULT_BETA_SP,
        lipschitz,
    })
}

/// `sign(x)·max(|x| − τ, 0)`
pub fn soft_shrink(x: f64, tau: f64) -> f64 {
    x.signum() * (x.abs() - tau).max(0.0)
}

/// `(1/β)·ln(1 + e^{βz})` without overflow.
pub fn softplus(z: f64, beta: f64) -> f64 {
    let u = beta * z;
    (u.max(0.0) + (-u.abs()).exp().ln_1p()) / beta
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Smooth soft shrinkage `s_β(x − τ) − s_β(−(x + τ))`: odd, non-decreasing,
/// 1-Lipschitz, and within `ln2/β` of [`soft_shrink`].
pub fn soft_shrink_smooth(x: f64, tau: f64, beta: f64) -> f64 {
    softplus(x - tau, beta) - softplus(-(x + tau), beta)
}

/// Derivative of [`soft_shrink_smooth`] in `x`, always in `(0, 1]`.
pub fn soft_shrink_smooth_prime(x: f64, tau: f64, beta: f64) -> f64 {
    sigmoid(beta * (x - tau)) + sigmoid(-beta * (x + tau))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shrinkage {
    Exact,
    Smooth,
}

/// ISTA as `x ← η(Ax + b)` with `A = I − γMᵀM`, `b = γMᵀy`, using the smooth
/// shrinkage.
pub fn ista_operator(lp: &LassoProblem) -> Result<AffineCompositeOperator> {
    ista_operator_with(lp, Shrinkage::Smooth)
}

pub fn ista_operator_with(lp: &LassoProblem, shrink: Shrinkage) -> Result<AffineCompositeOperator> {
    let limit = 1.0 / lp.lipschitz;
    if lp.gamma > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge {
            gamma: lp.gamma,
            limit,
        });
    }
    let n = lp.n();
    let mut a = lp.m_sense.gram().scaled(-lp.gamma);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let b: Vec<f64> = lp.m_sense.tr_matvec(&lp.y).iter().map(|v| lp.gamma * v).collect();
    let (tau, beta) = (lp.tau, lp.beta_sp);
    match shrink {
        Shrinkage::Smooth => AffineCompositeOperator::new(
            a,
            b,
            move |v| soft_shrink_smooth(v, tau, beta),
            move |v| soft_shrink_smooth_prime(v, tau, beta),
            true,
        ),
        Shrinkage::Exact => AffineCompositeOperator::new(
            a,
            b,
            move |v| soft_shrink(v, tau),
            move |v| if v.abs() > tau { 1.0 } else { 0.0 },
            true,
        ),
    }
}

fn nmse_trace(lp: &LassoProblem, method: &str, kind: &str) -> IterationTrace {
    IterationTrace::new(method, kind, 0)
        .with_meta("error", "nmse")
        .with_meta("tau", format!("{:.16e}", lp.tau))
        .with_meta("gamma", format!("{:.16e}", lp.gamma))
}

/// Result of a Lasso solver run: NMSE per iteration and the last iterate.
#[derive(Debug, Clone)]
pub struct LassoRun {
    pub trace: IterationTrace,
    pub x: Vec<f64>,
}

/// PSOR on the ISTA operator from `x0 = 0`; `ω ≡ 1` is plain ISTA.
pub fn run_ista_psor(lp: &LassoProblem, factors: &StepSchedule, iters: usize) -> Result<LassoRun> {
    let op = ista_operator(lp)?.to_operator();
    let method = if factors.steps().iter().all(|&w| w == 1.0) {
        "ista"
    } else {
        "chebyshev_psor_ista"
    };
    let mut trace = nmse_trace(lp, method, factors.kind().as_str()).with_meta("T", factors.period());
    let x = psor_iterate(&op, factors, &vec![0.0; lp.n()], iters, |_, x| {
        trace.push(lp.nmse(x));
        true
    })?;
    Ok(LassoRun { trace, x })
}

pub fn run_ista(lp: &LassoProblem, iters: usize) -> Result<LassoRun> {
    run_ista_psor(lp, &StepSchedule::constant(1.0)?, iters)
}

/// Bounds of `B = I − J` for the ISTA operator at `x_ref`, from the symmetric
/// matrix `Q^{1/2} A Q^{1/2}` similar to `J`.
pub fn ista_b_bounds(lp: &LassoProblem, x_ref: &[f64], method: BoundsMethod) -> Result<PsorBounds> {
    let op = ista_operator(lp)?.to_operator();
    psor_bounds_from_operator(&op, x_ref, method, 0)
}

/// Nesterov-accelerated ISTA with the same smooth shrinkage.
pub fn run_fista(lp: &LassoProblem, iters: usize) -> Result<LassoRun> {
    let op = ista_operator(lp)?;
    let n = lp.n();
    let mut trace = nmse_trace(lp, "fista", "custom");
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    trace.push(lp.nmse(&x));
    for k in 0..iters {
        let next = op.eval(&z);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: k + 1 });
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        for i in 0..n {
            z[i] = next[i] + mom * (next[i] - x[i]);
        }
        x = next;
        t = t_next;
        trace.push(lp.nmse(&x));
    }
    Ok(LassoRun { trace, x })
}

/// One Lasso trial: plain ISTA, then Chebyshev-PSOR ISTA with bounds taken at
/// the plain terminal iterate.
#[derive(Debug, Clone)]
pub struct LassoTrial {
    pub plain: IterationTrace,
    pub chebyshev: IterationTrace,
    pub bounds: SpectralBounds,
}

pub fn run_lasso_trial(
    lp: &LassoProblem,
    period: usize,
    plain_iters: usize,
    cheb_iters: usize,
) -> Result<LassoTrial> {
    let plain = run_ista(lp, plain_iters)?;
    let pb = ista_b_bounds(lp, &plain.x, BoundsMethod::Exact)?;
    let factors = chebyshev_psor_factors(&pb.bounds, period)?;
    let cheb = run_ista_psor(lp, &factors, cheb_iters)?;
    Ok(LassoTrial {
        plain: plain.trace,
        chebyshev: cheb.trace,
        bounds: pb.bounds,
    })
}

/// First index `k` with `curve[k] ≤ target·(1 + 1e-9)`.
pub fn first_reach(curve: &[f64], target: f64) -> Option<usize> {
    curve.iter().position(|&v| v <= target * (1.0 + 1e-9))
}

// ---------------------------------------------------------------------------
// Modified Richardson iteration and deblurring

/// `x ← x + ω(y − F(x))`, whose fixed points solve `F(x) = y`.
pub fn richardson_operator(
    forward: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    y_obs: Vec<f64>,
    omega: f64,
) -> Result<FixedPointOperator> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega = {omega} must be positive")));
    }
    let n = y_obs.len();
    Ok(FixedPointOperator::new(n, move |x| {
        let fx = forward(x);
        x.iter()
            .zip(&fx)
            .zip(&y_obs)
            .map(|((xi, fi), yi)| xi + omega * (yi - fi))
            .collect()
    }))
}

pub const BLUR_KERNEL_SIZE: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct BlurModel {
    pub kernel: [[f64; BLUR_KERNEL_SIZE]; BLUR_KERNEL_SIZE],
    pub height: usize,
    pub width: usize,
    pub omega: f64,
}

impl BlurModel {
    /// 0.1 everywhere except 1.5 at the centre.
    pub fn standard(height: usize, width: usize, omega: f64) -> Self {
        let mut kernel = [[0.1; BLUR_KERNEL_SIZE]; BLUR_KERNEL_SIZE];
        kernel[BLUR_KERNEL_SIZE / 2][BLUR_KERNEL_SIZE / 2] = 1.5;
        Self {
            kernel,
            height,
            width,
            omega,
        }
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    /// Same-size correlation with zero padding.
    pub fn convolve(&self, x: &[f64]) -> Vec<f64> {
        let (h, w) = (self.height, self.width);
        let r = (BLUR_KERNEL_SIZE / 2) as isize;
        let mut out = vec![0.0; h * w];
        for i in 0..h as isize {
            for j in 0..w as isize {
                let mut acc = 0.0;
                for di in -r..=r {
                    let ii = i + di;
                    if ii < 0 || ii >= h as isize {
                        continue;
                    }
                    for dj in -r..=r {
                        let jj = j + dj;
                        if jj < 0 || jj >= w as isize {
                            continue;
                        }
                        acc += self.kernel[(di + r) as usize][(dj + r) as usize]
                            * x[ii as usize * w + jj as usize];
                    }
                }
                out[i as usize * w + j as usize] = acc;
            }
        }
        out
    }

    /// The convolution as a dense `hw × hw` matrix.
    pub fn convolution_matrix(&self) -> DenseMatrix {
        let n = self.pixels();
        let mut k = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for col in 0..n {
            e[col] = 1.0;
            for (row, v) in self.convolve(&e).into_iter().enumerate() {
                k[(row, col)] = v;
            }
            e[col] = 0.0;
        }
        k
    }

    /// Symmetric matrix similar to `B = I − J` of the Richardson map at `x`:
    /// `ω·Q^{1/2} K Q^{1/2}` with `Q = diag(sigmoid′(Kx))`.
    pub fn richardson_b_symmetric(&self, k: &DenseMatrix, x: &[f64]) -> DenseMatrix {
        let r: Vec<f64> = k
            .matvec(x)
            .iter()
            .map(|&z| {
                let s = sigmoid(z);
                (s * (1.0 - s)).sqrt()
            })
            .collect();
        k.scale_rows_cols(&r, &r).scaled(self.omega)
    }
}

/// `F(x) = sigmoid(K x)` on the flattened image.
pub fn make_blur_forward(bm: &BlurModel) -> impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static {
    let bm = bm.clone();
    move |x: &[f64]| {
        assert_eq!(x.len(), bm.pixels(), "image has wrong size");
        bm.convolve(x).into_iter().map(sigmoid).collect()
    }
}

/// Seeded image of `strokes` anti-aliased line segments, values in `[0, 1]`.
pub fn synthetic_stroke_image(height: usize, width: usize, strokes: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    let mut img = vec![0.0f64; height * width];
    let margin = 3.0;
    let (hf, wf) = (height as f64, width as f64);
    for _ in 0..strokes {
        let mut pt = || {
            (
                r.random_range(margin..(hf - margin).max(margin + 1.0)),
                r.random_range(margin..(wf - margin).max(margin + 1.0)),
            )
        };
        let (p, q) = (pt(), pt());
        for i in 0..height {
            for j in 0..width {
                let d = segment_distance((i as f64, j as f64), p, q);
                let v = (1.5 - d).clamp(0.0, 1.0);
                let px = &mut img[i * width + j];
                *px = px.max(v);
            }
        }
    }
    img
}

fn segment_distance(x: (f64, f64), p: (f64, f64), q: (f64, f64)) -> f64 {
    let (dx, dy) = (q.0 - p.0, q.1 - p.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((x.0 - p.0) * dx + (x.1 - p.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((x.0 - p.0 - t * dx).powi(2) + (x.1 - p.1 - t * dy).powi(2)).sqrt()
}

/// Deblurring instance: observation `y = F(x_true)` and the Richardson map.
#[derive(Debug, Clone)]
pub struct DeblurProblem {
    pub model: BlurModel,
    pub x_true: Vec<f64>,
    pub y: Vec<f64>,
    pub operator: FixedPointOperator,
}

impl DeblurProblem {
    /// `‖x − x_true‖² / n`
    pub fn mse(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.x_true).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64
    }

    /// Exact bounds of `B` at `x`.
    pub fn b_bounds_at(&self, x: &[f64]) -> Result<SpectralBounds> {
        let k = self.model.convolution_matrix();
        let ev = sym_eigenvalues(&self.model.richardson_b_symmetric(&k, x))?;
        SpectralBounds::new(ev[0], ev[ev.len() - 1])
    }
}

pub fn make_deblur_problem(
    height: usize,
    width: usize,
    omega: f64,
    strokes: usize,
    seed: u64,
) -> Result<DeblurProblem> {
    let model = BlurModel::standard(height, width, omega);
    let x_true = synthetic_stroke_image(height, width, strokes, seed);
    let forward = make_blur_forward(&model);
    let y = forward(&x_true);
    let operator = richardson_operator(forward, y.clone(), omega)?.with_fixed_point(x_true.clone())?;
    Ok(DeblurProblem {
        model,
        x_true,
        y,
        operator,
    })
}

// ---------------------------------------------------------------------------
// Small nonlinear examples

/// `f(x) = y − tanh(x)`: the Richardson iteration with `ω = 1` for `x + tanh(x) = y`.
pub fn tanh_inverse_operator(y: Vec<f64>) -> FixedPointOperator {
    let yj = y.clone();
    let n = y.len();
    FixedPointOperator::new(n, move |x| y.iter().zip(x).map(|(a, b)| a - b.tanh()).collect())
        .with_jacobian(move |x| {
            let d: Vec<f64> = x.iter().map(|v| -1.0 / v.cosh().powi(2)).collect();
            debug_assert_eq!(d.len(), yj.len());
            DenseMatrix::from_diag(&d)
        })
}

/// `f(x₁, x₂) = (x₁^0.2 + x₂^0.5, x₁^0.5 + x₂^0.2)` on the positive quadrant.
pub fn power_map_operator() -> FixedPointOperator {
    FixedPointOperator::new(2, |x| {
        vec![x[0].powf(0.2) + x[1].powf(0.5), x[0].powf(0.5) + x[1].powf(0.2)]
    })
    .with_jacobian(|x| {
        DenseMatrix::from_rows(&[
            vec![0.2 * x[0].powf(-0.8), 0.5 * x[1].powf(-0.5)],
            vec![0.5 * x[0].powf(-0.5), 0.2 * x[1].powf(-0.8)],
        ])
        .expect("2x2")
    })
}

/// `f(x) = tanh(Ax)` with `A = MᵀM`, `M` `n×n` with i.i.d. `N(0, std²)` entries,
/// rescaled so that `λ_max(A) = lambda_max`. The fixed point is the origin and
/// `J* = A`.
pub fn tanh_gram_operator(
    n: usize,
    std: f64,
    lambda_max: f64,
    seed: u64,
) -> Result<(AffineCompositeOperator, Vec<f64>)> {
    let mut r = rng::seeded(seed);
    let m = DenseMatrix::new(n, n, rng::gaussian_vec(&mut r, n * n, std))?;
    let g = m.gram();
    let eig = sym_eigenvalues(&g)?;
    let a = g.scaled(lambda_max / eig[n - 1]);
    let eig: Vec<f64> = eig.iter().map(|v| v * lambda_max / eig[n - 1]).collect();
    let op = AffineCompositeOperator::new(a, vec![0.0; n], f64::tanh, |v| 1.0 / v.cosh().powi(2), true)?;
    Ok((op, eig))
}

/// Fixed point located by a long plain run from `x0`.
pub fn locate_fixed_point(op: &FixedPointOperator, x0: &[f64], budget: usize) -> Result<Vec<f64>> {
    estimate_reference(op, x0, budget)
}
