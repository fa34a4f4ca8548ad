//! Dense real matrices and the spectral tools built on them.
//!
//! Two symmetric eigensolvers are provided. [`sym_eigendecompose`] runs cyclic
//! Jacobi rotation sweeps and returns an orthonormal eigenvector basis;
//! [`sym_eigenvalues`] reduces to tridiagonal form with Householder reflections
//! and finishes with implicit QL, which is several times cheaper at n ≈ 512 and
//! is what bound estimation uses.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use crate::rng;
use crate::{Error, Result};

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_TOL: f64 = 1e-8;
const MAX_JACOBI_SWEEPS: usize = 100;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(r, c, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `|a_ij − a_ji| ≤ tol·max(1, |a_ij|)` for all pairs.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_violation(tol).is_none()
    }

    fn symmetry_violation(&self, tol: f64) -> Option<Error> {
        if !self.is_square() {
            return Some(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let (aij, aji) = (self[(i, j)], self[(j, i)]);
                let dev = (aij - aji).abs();
                if dev > tol * aij.abs().max(1.0) || !dev.is_finite() {
                    return Some(Error::NotSymmetric {
                        row: i,
                        col: j,
                        deviation: dev,
                    });
                }
            }
        }
        None
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.cols, "matvec: input length");
        assert_eq!(y.len(), self.rows, "matvec: output length");
        for (yi, row) in y.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *yi = dot(row, x);
        }
    }

    /// `selfᵀ·x`
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec: input length");
        let mut y = vec![0.0; self.cols];
        for (row, &xi) in self.data.chunks_exact(self.cols).zip(x) {
            axpy(xi, row, &mut y);
        }
        y
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in self.row(i).iter().enumerate() {
                if aik != 0.0 {
                    axpy(aik, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ·self`, exactly symmetric.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for row in self.data.chunks_exact(n) {
            for (i, &ri) in row.iter().enumerate() {
                if ri != 0.0 {
                    axpy(ri, &row[i..], &mut g.data[i * n + i..(i + 1) * n]);
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `diag(left)·self·diag(right)`
    pub fn scale_rows_cols(&self, left: &[f64], right: &[f64]) -> DenseMatrix {
        assert_eq!(left.len(), self.rows);
        assert_eq!(right.len(), self.cols);
        DenseMatrix::from_fn(self.rows, self.cols, |i, j| left[i] * self[(i, j)] * right[j])
    }

    /// Plain-text form: a `rows cols` header line, then one line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let line: Vec<String> = self.row(i).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        };
        let rows = dim("rows")?;
        let cols = dim("cols")?;
        let data = tokens
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("value {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, cols, data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorise the reduction.
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha·x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// Lower and upper eigenvalue bounds of a (positive semi-definite) matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    lambda_min: f64,
    lambda_max: f64,
}

impl SpectralBounds {
    /// Accepts `0 ≤ lambda_min ≤ lambda_max`, both finite.
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_min.is_finite() && lambda_max.is_finite())
            || lambda_min < 0.0
            || lambda_min > lambda_max
        {
            return Err(Error::InvalidBounds {
                lambda_min,
                lambda_max,
            });
        }
        Ok(Self {
            lambda_min,
            lambda_max,
        })
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `(λ_max + λ_min)/2`
    pub fn center(&self) -> f64 {
        0.5 * (self.lambda_max + self.lambda_min)
    }

    /// `(λ_max − λ_min)/2`
    pub fn half_width(&self) -> f64 {
        0.5 * (self.lambda_max - self.lambda_min)
    }

    /// The bounds required by every Chebyshev constructor: `0 < λ_min < λ_max`.
    pub fn require_chebyshev(&self) -> Result<()> {
        if self.lambda_min <= 0.0 {
            return Err(Error::DegenerateSpectrum(format!(
                "lambda_min = {} must be positive",
                self.lambda_min
            )));
        }
        if self.lambda_min == self.lambda_max {
            return Err(Error::DegenerateSpectrum(format!(
                "lambda_min == lambda_max == {}",
                self.lambda_min
            )));
        }
        Ok(())
    }
}

/// `λ_max / λ_min`
pub fn condition_number(b: &SpectralBounds) -> Result<f64> {
    if b.lambda_min <= 0.0 {
        return Err(Error::DegenerateSpectrum(format!(
            "condition number needs lambda_min > 0, got {}",
            b.lambda_min
        )));
    }
    Ok(b.lambda_max / b.lambda_min)
}

#[derive(Debug, Clone)]
pub struct Eigendecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the unit eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DenseMatrix,
}

impl Eigendecomposition {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty")
    }

    /// `U·diag(λ)·Uᵀ`
    pub fn reconstruct(&self) -> DenseMatrix {
        let u = &self.eigenvectors;
        let scaled = u.scale_rows_cols(&vec![1.0; u.rows()], &self.eigenvalues);
        scaled.matmul(&u.transpose()).expect("square factors")
    }
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
///
/// Sweeps continue until the off-diagonal Frobenius mass drops below
/// `tol·‖A‖_F` (and to rounding level where that is reachable).
pub fn sym_eigendecompose(a: &DenseMatrix, tol: f64) -> Result<Eigendecomposition> {
    if let Some(err) = a.symmetry_violation(tol.max(1e-12)) {
        return Err(err);
    }
    let n = a.rows();
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 {
        return Ok(Eigendecomposition {
            eigenvalues: vec![0.0; n],
            eigenvectors: v,
        });
    }
    let target = (tol * scale).max(f64::EPSILON * scale);

    let off_norm = |w: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * w[(i, j)] * w[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&w);
        if off <= target {
            break;
        }
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                estimate: None,
            });
        }
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE
                    || apq.abs() <= 1e-3 * f64::EPSILON * (w[(p, p)].abs() + w[(q, q)].abs())
                {
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut w, &mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
    let eigenvalues = order.iter().map(|&i| w[(i, i)]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigendecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn rotate(w: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = w.rows();
    for k in 0..n {
        let (wkp, wkq) = (w[(k, p)], w[(k, q)]);
        w[(k, p)] = c * wkp - s * wkq;
        w[(k, q)] = s * wkp + c * wkq;
    }
    for k in 0..n {
        let (wpk, wqk) = (w[(p, k)], w[(q, k)]);
        w[(p, k)] = c * wpk - s * wqk;
        w[(q, k)] = s * wpk + c * wqk;
    }
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Ascending eigenvalues of a symmetric matrix via Householder
/// tridiagonalisation and implicit QL.
pub fn sym_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    if let Some(err) = a.symmetry_violation(1e-10) {
        return Err(err);
    }
    let n = a.rows();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

// Householder reduction to tridiagonal form (EISPACK tred2 ordering).
// On exit `d` holds the diagonal and `e[1..]` the sub-diagonal.
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = 0.0;
            }
            for j in 0..i {
                let f = d[j];
                v[j][i] = f;
                let mut g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let (f, g) = (d[j], e[j]);
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }
    // Only the diagonal of the reduced matrix is needed; it sits on v's diagonal.
    for i in 0..n {
        d[i] = v[i][i];
    }
    e[0] = 0.0;
}

fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::NoConvergence {
                        iterations: iter,
                        estimate: None,
                    });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[(l + 2)..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Largest-magnitude eigenvalue by power iteration from a seeded Gaussian
/// start. Stops when successive Rayleigh quotients agree to `tol` relative.
pub fn power_iteration_max(a: &DenseMatrix, max_iters: usize, tol: f64, seed: u64) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if a.max_abs() == 0.0 {
        return Err(Error::InvalidArgument("power iteration on the zero matrix".into()));
    }
    let n = a.rows();
    let mut r = rng::seeded(seed);
    let mut v = rng::gaussian_vec(&mut r, n, 1.0);
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut av = vec![0.0; n];
    let mut lambda = f64::NAN;
    for iter in 1..=max_iters {
        a.matvec_into(&v, &mut av);
        let next = dot(&v, &av);
        let norm = norm2(&av);
        if norm == 0.0 {
            // v landed in the null space; the dominant eigenvalue is not visible from here.
            return Ok(0.0);
        }
        for (vi, &ai) in v.iter_mut().zip(&av) {
            *vi = ai / norm;
        }
        if iter > 1 && (next - lambda).abs() <= tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::NoConvergence {
        iterations: max_iters,
        estimate: Some(lambda),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsMethod {
    /// Full symmetric eigenvalue computation.
    Exact,
    /// `λ_max` by power iteration, then `λ_min = c − λ_max(cI − A)` with `c = λ_max`.
    PowerShift,
}

impl std::str::FromStr for BoundsMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "power_shift" | "power-shift" => Ok(Self::PowerShift),
            other => Err(Error::Parse(format!("unknown bounds method {other:?}"))),
        }
    }
}

/// Iteration budget for [`BoundsMethod::PowerShift`].
pub const POWER_SHIFT_MAX_ITERS: usize = 200_000;
/// Stopping tolerance for [`BoundsMethod::PowerShift`]. Tighter than
/// [`DEFAULT_POWER_TOL`] because the Rayleigh-quotient increment underestimates
/// the remaining error when the spectral gap is small.
pub const POWER_SHIFT_TOL: f64 = 1e-14;

pub fn estimate_bounds(a: &DenseMatrix, method: BoundsMethod, seed: u64) -> Result<SpectralBounds> {
    if let Some(err) = a.symmetry_violation(1e-10) {
        return Err(err);
    }
    match method {
        BoundsMethod::Exact => {
            let ev = sym_eigenvalues(a)?;
            SpectralBounds::new(ev[0], ev[ev.len() - 1])
        }
        BoundsMethod::PowerShift => {
            let top = power_estimate(a, seed)?;
            let n = a.rows();
            let mut shifted = a.scaled(-1.0);
            for i in 0..n {
                shifted[(i, i)] += top;
            }
            let spread = if shifted.max_abs() == 0.0 {
                0.0
            } else {
                power_estimate(&shifted, rng::derive_seed(seed, 1))?
            };
            // Clamp rounding noise so that λ_min ≤ λ_max always holds.
            let bottom = (top - spread).min(top);
            SpectralBounds::new(bottom, top)
        }
    }
}

fn power_estimate(a: &DenseMatrix, seed: u64) -> Result<f64> {
    match power_iteration_max(a, POWER_SHIFT_MAX_ITERS, POWER_SHIFT_TOL, seed) {
        Ok(v) => Ok(v),
        // Rounding can keep the increment just above 1e-14; the estimate is still usable.
        Err(Error::NoConvergence {
            estimate: Some(v), ..
        }) if v.is_finite() => Ok(v),
        Err(e) => Err(e),
    }
}
