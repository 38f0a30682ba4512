//! The φ-functions of exponential integrators and the action
//!
//! ```text
//! e^{kA} b0 + k φ1(kA) b1 + k² φ2(kA) b2 + k³ φ3(kA) b3
//! ```
//!
//! for a fixed operator `A = A_h0` and step `k`, under three strategies:
//! dense precomputation, a Krylov (Arnoldi) process on an augmented
//! operator, and diagonalization by the discrete sine transform on uniform
//! finite-difference grids.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::discretization::Discretization;
use crate::error::{check_len, Error, Result};
use crate::linalg::{expm, Operator};

/// Below this `|z|` the φ-functions are summed from their Taylor series.
pub const TAYLOR_THRESHOLD: f64 = 1.0;
const TAYLOR_TERMS: usize = 30;

pub const DEFAULT_KRYLOV_TOL: f64 = 1e-7;
pub const DEFAULT_KRYLOV_MAX_BASIS: usize = 100;
const ROUNDING_FLOOR: f64 = 64.0 * f64::EPSILON;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `φ_j(z)`, with `φ_0 = exp` and `φ_{j+1}(z) = (φ_j(z) − 1/j!)/z`.
pub fn phi_scalar(j: usize, z: f64) -> f64 {
    if z.abs() < TAYLOR_THRESHOLD {
        // φ_j(z) = Σ_m z^m / (m+j)!, summed from the smallest term
        let mut terms = [0.0; TAYLOR_TERMS];
        let mut term = 1.0 / factorial(j);
        for (m, slot) in terms.iter_mut().enumerate() {
            *slot = term;
            term *= z / (m + j + 1) as f64;
        }
        return terms.iter().rev().sum();
    }
    if j == 0 {
        return z.exp();
    }
    let mut phi = z.exp_m1() / z;
    for i in 1..j {
        phi = (phi - 1.0 / factorial(i)) / z;
    }
    phi
}

/// How φ-function actions are computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiStrategy {
    /// Precomputed `e^{kA}` and `φ_j(kA) C_h` matrices.
    Dense,
    /// Arnoldi on the augmented operator, stopped when the generalized
    /// residual estimate drops below `tol` in the Euclidean norm.
    Krylov { tol: f64, max_basis: usize },
    /// Sine-transform diagonalization of the finite-difference Laplacian.
    Dst,
}

impl PhiStrategy {
    pub fn krylov_default() -> Self {
        PhiStrategy::Krylov { tol: DEFAULT_KRYLOV_TOL, max_basis: DEFAULT_KRYLOV_MAX_BASIS }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhiStrategy::Dense => "dense",
            PhiStrategy::Krylov { .. } => "krylov",
            PhiStrategy::Dst => "dst",
        }
    }
}

impl fmt::Display for PhiStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dense" => Ok(PhiStrategy::Dense),
            "krylov" => Ok(PhiStrategy::krylov_default()),
            "dst" => Ok(PhiStrategy::Dst),
            other => Err(Error::InvalidInput(format!("unknown phi strategy '{other}'"))),
        }
    }
}

/// Evaluates φ-function combinations for a fixed operator and step.
#[derive(Debug)]
pub struct PhiEvaluator {
    k: f64,
    n: usize,
    nb: usize,
    strategy: PhiStrategy,
    c: Operator,
    backend: Backend,
}

#[derive(Debug)]
enum Backend {
    Dense(DenseCache),
    Krylov(Operator),
    Dst(SineDiagonal),
}

#[derive(Debug)]
struct DenseCache {
    scaled: DMatrix<f64>,
    exp: DMatrix<f64>,
    // φ_j(kA)·C_h, j = 1..3
    phi_c: [DMatrix<f64>; 3],
    // φ_j(kA), built on first use with interior inputs
    phi_full: OnceLock<Result<[DMatrix<f64>; 3]>>,
}

/// Exponential of the block matrix `[[M, B, 0, 0], [0, 0, I, 0], [0, 0, 0, I], [0, 0, 0, 0]]`,
/// returning `(e^M, [φ1(M)B, φ2(M)B, φ3(M)B])`.
fn augmented_phi(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, [DMatrix<f64>; 3])> {
    let n = m.nrows();
    let p = b.ncols();
    let bnorm = b.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    // powers of two keep the rescaling exact
    let eta = if bnorm > 1.0 { 2f64.powi(-(bnorm.log2().ceil() as i32)) } else { 1.0 };
    let size = n + 3 * p;
    let mut big = DMatrix::zeros(size, size);
    big.view_mut((0, 0), (n, n)).copy_from(m);
    big.view_mut((0, n), (n, p)).copy_from(&(b * eta));
    for i in 0..p {
        big[(n + i, n + p + i)] = 1.0;
        big[(n + p + i, n + 2 * p + i)] = 1.0;
    }
    let e = expm(&big)?;
    let exp = e.view((0, 0), (n, n)).into_owned();
    let phi = |j: usize| e.view((0, n + j * p), (n, p)).into_owned() / eta;
    Ok((exp, [phi(0), phi(1), phi(2)]))
}

impl DenseCache {
    fn new(a: &DMatrix<f64>, c: &DMatrix<f64>, k: f64) -> Result<Self> {
        let scaled = a * k;
        let (exp, phi_c) = augmented_phi(&scaled, c)?;
        Ok(Self { scaled, exp, phi_c, phi_full: OnceLock::new() })
    }

    fn full(&self) -> Result<&[DMatrix<f64>; 3]> {
        let n = self.scaled.nrows();
        self.phi_full
            .get_or_init(|| augmented_phi(&self.scaled, &DMatrix::identity(n, n)).map(|(_, phi)| phi))
            .as_ref()
            .map_err(|e| Error::Singular(format!("dense phi matrices: {e}")))
    }
}

/// Sine-transform diagonalization of the finite-difference Laplacian.
struct SineDiagonal {
    m: usize,
    dim: usize,
    fft: Arc<dyn Fft<f64>>,
    // k^j φ_j(k λ) for every mode, j = 0..3
    coeff: [Vec<f64>; 4],
}

/// Eigenvalues `−(4/h²) sin²(jπh/2)`, `j = 1..=m`, of the 1D second difference.
pub fn fd_eigenvalues(m: usize) -> Vec<f64> {
    let h = 1.0 / (m + 1) as f64;
    (1..=m).map(|j| -(4.0 / (h * h)) * (j as f64 * std::f64::consts::PI * h / 2.0).sin().powi(2)).collect()
}

impl fmt::Debug for SineDiagonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SineDiagonal").field("m", &self.m).field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl SineDiagonal {
    fn new(m: usize, dim: usize, k: f64) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (m + 1));
        let lam = fd_eigenvalues(m);
        let modes: Vec<f64> = if dim == 1 {
            lam.clone()
        } else {
            lam.iter().flat_map(|ly| lam.iter().map(move |lx| lx + ly)).collect()
        };
        let coeff = std::array::from_fn(|j| modes.iter().map(|&l| k.powi(j as i32) * phi_scalar(j, k * l)).collect());
        Self { m, dim, fft, coeff }
    }

    /// In-place DST-I along contiguous runs of length `m` with the given stride pattern.
    fn dst_lines(&self, data: &mut [f64], stride: usize, starts: impl Iterator<Item = usize>) {
        let m = self.m;
        let len = 2 * (m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); len];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for s in starts {
            buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
            for j in 0..m {
                let v = data[s + j * stride];
                buf[j + 1].re = v;
                buf[len - 1 - j].re = -v;
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..m {
                data[s + j * stride] = -0.5 * buf[j + 1].im;
            }
        }
    }

    /// Unnormalized DST-I over every axis.
    fn transform(&self, data: &mut [f64]) {
        let m = self.m;
        if self.dim == 1 {
            self.dst_lines(data, 1, std::iter::once(0));
        } else {
            self.dst_lines(data, 1, (0..m).map(|r| r * m));
            self.dst_lines(data, m, 0..m);
        }
    }

    fn inverse_scale(&self) -> f64 {
        (2.0 / (self.m + 1) as f64).powi(self.dim as i32)
    }

    fn combine(&self, inputs: [Option<&[f64]>; 4]) -> Vec<f64> {
        let n = self.coeff[0].len();
        let mut acc = vec![0.0; n];
        for (j, b) in inputs.iter().enumerate() {
            if let Some(b) = b {
                let mut hat = b.to_vec();
                self.transform(&mut hat);
                for ((a, h), c) in acc.iter_mut().zip(&hat).zip(&self.coeff[j]) {
                    *a += c * h;
                }
            }
        }
        self.transform(&mut acc);
        let s = self.inverse_scale();
        acc.iter_mut().for_each(|v| *v *= s);
        acc
    }
}

impl PhiEvaluator {
    /// Binds an evaluator to the operator of `d` and step `k`.
    pub fn new(d: &Discretization, strategy: PhiStrategy, k: f64) -> Result<Self> {
        if let PhiStrategy::Dst = strategy {
            if d.kind().is_spectral() {
                return Err(Error::Unsupported(format!(
                    "the sine-transform strategy needs a finite-difference grid, got {}",
                    d.kind()
                )));
            }
            check_step(k)?;
            return Ok(Self {
                k,
                n: d.interior_count(),
                nb: d.boundary_count(),
                strategy,
                c: d.c_h().clone(),
                backend: Backend::Dst(SineDiagonal::new(d.per_axis(), d.dim(), k)),
            });
        }
        Self::for_operator(d.a_h0(), d.c_h(), strategy, k)
    }

    /// Binds an evaluator to an arbitrary square operator and boundary map.
    /// The sine-transform strategy is not available here.
    pub fn for_operator(a: &Operator, c: &Operator, strategy: PhiStrategy, k: f64) -> Result<Self> {
        check_step(k)?;
        if a.nrows() != a.ncols() || c.nrows() != a.nrows() {
            return Err(Error::InvalidInput("operator shapes do not match".into()));
        }
        let backend = match strategy {
            PhiStrategy::Dense => Backend::Dense(DenseCache::new(&a.to_dense(), &c.to_dense(), k)?),
            PhiStrategy::Krylov { tol, max_basis } => {
                if !(tol > 0.0) || max_basis == 0 {
                    return Err(Error::InvalidInput("Krylov tolerance and basis size must be positive".into()));
                }
                Backend::Krylov(a.clone())
            }
            PhiStrategy::Dst => {
                return Err(Error::Unsupported("the sine-transform strategy needs a discretization".into()))
            }
        };
        Ok(Self { k, n: a.nrows(), nb: c.ncols(), strategy, c: c.clone(), backend })
    }

    pub fn step(&self) -> f64 {
        self.k
    }

    pub fn strategy(&self) -> PhiStrategy {
        self.strategy
    }

    pub fn interior_count(&self) -> usize {
        self.n
    }

    /// `e^{kA} b0 + Σ_j k^j φ_j(kA) b_j` for interior vectors `b_j`; `None` is zero.
    pub fn phi_combination(&self, b0: &[f64], b: [Option<&[f64]>; 3]) -> Result<Vec<f64>> {
        check_len(self.n, b0.len())?;
        for v in b.iter().flatten() {
            check_len(self.n, v.len())?;
        }
        match &self.backend {
            Backend::Dense(cache) => {
                let mut out = mat_vec(&cache.exp, b0);
                if b.iter().any(Option::is_some) {
                    let full = cache.full()?;
                    for (j, v) in b.iter().enumerate() {
                        if let Some(v) = v {
                            let scale = self.k.powi(j as i32 + 1);
                            mat_vec_add(&full[j], scale, v, &mut out);
                        }
                    }
                }
                Ok(out)
            }
            Backend::Krylov(a) => {
                let PhiStrategy::Krylov { tol, max_basis } = self.strategy else { unreachable!() };
                krylov_phi(a, self.k, b0, b, tol, max_basis)
            }
            Backend::Dst(sd) => Ok(sd.combine([Some(b0), b[0], b[1], b[2]])),
        }
    }

    /// Same combination with `b_j = C_h g_j` for boundary data `g_j`.
    pub fn phi_combination_boundary(&self, b0: &[f64], g: [Option<&[f64]>; 3]) -> Result<Vec<f64>> {
        for v in g.iter().flatten() {
            check_len(self.nb, v.len())?;
        }
        match &self.backend {
            Backend::Dense(cache) => {
                check_len(self.n, b0.len())?;
                let mut out = mat_vec(&cache.exp, b0);
                for (j, v) in g.iter().enumerate() {
                    if let Some(v) = v {
                        mat_vec_add(&cache.phi_c[j], self.k.powi(j as i32 + 1), v, &mut out);
                    }
                }
                Ok(out)
            }
            _ => {
                let lifted: Vec<Option<Vec<f64>>> =
                    g.iter().map(|v| v.map(|v| self.c.apply(v)).transpose()).collect::<Result<_>>()?;
                let refs = [lifted[0].as_deref(), lifted[1].as_deref(), lifted[2].as_deref()];
                self.phi_combination(b0, refs)
            }
        }
    }
}

fn check_step(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("step must be positive, got {k}")))
    }
}

fn mat_vec(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.nrows()];
    mat_vec_add(m, 1.0, x, &mut out);
    out
}

fn mat_vec_add(m: &DMatrix<f64>, alpha: f64, x: &[f64], out: &mut [f64]) {
    for (j, col) in m.column_iter().enumerate() {
        let xj = alpha * x[j];
        if xj != 0.0 {
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += v * xj;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Arnoldi approximation of `exp(kÃ) ṽ` with `Ã = [[A, ηW], [0, J]]`,
/// `W = [b_p, …, b_1]`, `J` the upper shift and `ṽ = [b0; e_p/η]`.
fn krylov_phi(
    a: &Operator,
    k: f64,
    b0: &[f64],
    b: [Option<&[f64]>; 3],
    tol: f64,
    max_basis: usize,
) -> Result<Vec<f64>> {
    let n = b0.len();
    let p = b.iter().rposition(Option::is_some).map_or(0, |i| i + 1);
    let cols: Vec<&[f64]> = (0..p).map(|i| b[p - 1 - i].unwrap_or(&[])).collect();
    let wnorm = cols.iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let anorm = a.norm1();
    let eta = if p > 0 && wnorm > 0.0 {
        let target = anorm.max(1.0) / wnorm;
        2f64.powi(target.log2().round() as i32)
    } else {
        1.0
    };
    let size = n + p;

    let apply = |x: &[f64], y: &mut [f64]| {
        y.iter_mut().for_each(|v| *v = 0.0);
        a.apply_add(1.0, &x[..n], &mut y[..n]);
        for (i, col) in cols.iter().enumerate() {
            let s = eta * x[n + i];
            if s != 0.0 && !col.is_empty() {
                for (yv, cv) in y[..n].iter_mut().zip(col.iter()) {
                    *yv += s * cv;
                }
            }
        }
        for i in 0..p.saturating_sub(1) {
            y[n + i] = x[n + i + 1];
        }
        if p > 0 {
            y[n + p - 1] = 0.0;
        }
    };

    let mut v0 = vec![0.0; size];
    v0[..n].copy_from_slice(b0);
    if p > 0 {
        v0[size - 1] = 1.0 / eta;
    }
    let beta = norm2(&v0);
    if beta == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let max_basis = max_basis.min(size);
    let mut basis: Vec<Vec<f64>> = vec![v0.iter().map(|v| v / beta).collect()];
    let mut hess = DMatrix::<f64>::zeros(max_basis + 1, max_basis);
    let mut w = vec![0.0; size];
    let breakdown_tol = 1e-14 * anorm.max(1.0);
    let mut last_estimate = f64::INFINITY;

    for j in 0..max_basis {
        apply(&basis[j], &mut w);
        for (i, vi) in basis.iter().enumerate() {
            let hij = dot(&w, vi);
            hess[(i, j)] = hij;
            w.iter_mut().zip(vi).for_each(|(wv, v)| *wv -= hij * v);
        }
        let hnext = norm2(&w);
        hess[(j + 1, j)] = hnext;
        let m = j + 1;
        let happy = hnext <= breakdown_tol;
        let check = happy || m == max_basis || m <= 8 || m % 4 == 0;
        if check {
            // [[kH, e1], [0, 0]] gives exp(kH) e1 and φ1(kH) e1 at once
            let mut aug = DMatrix::zeros(m + 1, m + 1);
            aug.view_mut((0, 0), (m, m)).copy_from(&(hess.view((0, 0), (m, m)) * k));
            aug[(0, m)] = 1.0;
            let e = expm(&aug)?;
            let estimate = beta * k * hnext * e[(m - 1, m)].abs();
            last_estimate = estimate;
            // absolute, with a floor at what rounding lets the basis resolve
            if happy || estimate <= tol.max(ROUNDING_FLOOR * beta) {
                let mut out = vec![0.0; n];
                for (i, vi) in basis.iter().enumerate().take(m) {
                    let c = beta * e[(i, 0)];
                    out.iter_mut().zip(&vi[..n]).for_each(|(o, v)| *o += c * v);
                }
                return Ok(out);
            }
        }
        if m == max_basis {
            break;
        }
        basis.push(w.iter().map(|v| v / hnext).collect());
    }
    Err(Error::KrylovNoConvergence { basis: max_basis, estimate: last_estimate })
}
