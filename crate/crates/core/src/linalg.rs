//! Small linear-algebra layer: a CSR matrix for the finite-difference
//! operators, a common [`Operator`] wrapper over dense and sparse storage,
//! factorizations of `c0·I + c1·A`, and the dense matrix exponential.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets. Duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over the stored entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.nrows)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

/// A linear operator stored either densely (collocation) or sparsely
/// (finite differences).
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(DMatrix<f64>),
    Sparse(CsrMatrix),
}

impl Operator {
    pub fn nrows(&self) -> usize {
        match self {
            Operator::Dense(m) => m.nrows(),
            Operator::Sparse(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Operator::Dense(m) => m.ncols(),
            Operator::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Operator::Sparse(_))
    }

    /// `y += alpha * A x`
    pub fn apply_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols());
        debug_assert_eq!(y.len(), self.nrows());
        match self {
            Operator::Dense(m) => {
                for j in 0..m.ncols() {
                    let xj = alpha * x[j];
                    if xj == 0.0 {
                        continue;
                    }
                    for (yi, aij) in y.iter_mut().zip(m.column(j).iter()) {
                        *yi += aij * xj;
                    }
                }
            }
            Operator::Sparse(m) => {
                for (i, yi) in y.iter_mut().enumerate() {
                    let s: f64 = m.row(i).map(|(j, v)| v * x[j]).sum();
                    *yi += alpha * s;
                }
            }
        }
    }

    /// Returns `A x`, checking sizes.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.ncols(), x.len())?;
        let mut y = vec![0.0; self.nrows()];
        self.apply_add(1.0, x, &mut y);
        Ok(y)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Operator::Dense(m) => m.clone(),
            Operator::Sparse(m) => m.to_dense(),
        }
    }

    /// Induced 1-norm (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        match self {
            Operator::Dense(m) => m
                .column_iter()
                .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            Operator::Sparse(m) => {
                let mut sums = vec![0.0; m.ncols()];
                for i in 0..m.nrows() {
                    for (j, v) in m.row(i) {
                        sums[j] += v.abs();
                    }
                }
                sums.into_iter().fold(0.0, f64::max)
            }
        }
    }
}

/// LU factorization of a banded matrix without pivoting.
///
/// Only used on shifted discrete Laplacians, which are diagonally dominant.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    bw: usize,
    // row-major, row i holds columns i-bw ..= i+bw
    band: Vec<f64>,
}

impl BandedLu {
    fn width(&self) -> usize {
        2 * self.bw + 1
    }

    fn at(&self, i: usize, j: usize) -> usize {
        i * self.width() + (j + self.bw - i)
    }

    /// Factorizes `c0·I + c1·A`.
    pub fn factor_shifted(a: &CsrMatrix, c0: f64, c1: f64) -> Result<Self> {
        let n = a.nrows();
        let bw = a.bandwidth();
        let mut lu = Self { n, bw, band: vec![0.0; n * (2 * bw + 1)] };
        for i in 0..n {
            for (j, v) in a.row(i) {
                let idx = lu.at(i, j);
                lu.band[idx] += c1 * v;
            }
            let idx = lu.at(i, i);
            lu.band[idx] += c0;
        }
        for k in 0..n {
            let pivot = lu.band[lu.at(k, k)];
            if pivot.abs() < f64::MIN_POSITIVE * 1e4 || !pivot.is_finite() {
                return Err(Error::Singular(format!("zero pivot in banded LU at row {k}")));
            }
            let last = (k + bw + 1).min(n);
            for i in k + 1..last {
                let ik = lu.at(i, k);
                let l = lu.band[ik] / pivot;
                if l == 0.0 {
                    continue;
                }
                lu.band[ik] = l;
                for j in k + 1..last {
                    let kj = lu.at(k, j);
                    let ij = lu.at(i, j);
                    lu.band[ij] -= l * lu.band[kj];
                }
            }
        }
        Ok(lu)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(bw)..i {
                s -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + bw + 1).min(n) {
                s -= self.band[self.at(i, j)] * x[j];
            }
            x[i] = s / self.band[self.at(i, i)];
        }
    }
}

/// A factorization of `c0·I + c1·A` for either operator storage.
#[derive(Debug, Clone)]
pub enum ShiftedFactor {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Banded(BandedLu),
}

impl ShiftedFactor {
    pub fn new(a: &Operator, c0: f64, c1: f64) -> Result<Self> {
        match a {
            Operator::Dense(m) => {
                let n = m.nrows();
                let shifted = DMatrix::identity(n, n) * c0 + m * c1;
                let lu = shifted.lu();
                if !lu.is_invertible() {
                    return Err(Error::Singular("dense LU of shifted operator".into()));
                }
                Ok(ShiftedFactor::Dense(lu))
            }
            Operator::Sparse(m) => Ok(ShiftedFactor::Banded(BandedLu::factor_shifted(m, c0, c1)?)),
        }
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        match self {
            ShiftedFactor::Dense(lu) => {
                let mut b = DVector::from_column_slice(x);
                if !lu.solve_mut(&mut b) {
                    return Err(Error::Singular("dense LU solve".into()));
                }
                x.copy_from_slice(b.as_slice());
                Ok(())
            }
            ShiftedFactor::Banded(lu) => {
                lu.solve_in_place(x);
                Ok(())
            }
        }
    }
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(f64, usize); 4] = [
    (1.495585217958292e-2, 3),
    (2.53939833006323e-1, 5),
    (9.504178996162932e-1, 7),
    (2.097847961257068e0, 9),
];
const THETA13: f64 = 5.371920351148152;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3, 5, 7, 9 or 13 (Higham 2005).
pub fn expm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    assert!(a.is_square(), "expm of a non-square matrix");
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let nrm = norm1(a);
    if !nrm.is_finite() {
        return Err(Error::InvalidInput("expm of a non-finite matrix".into()));
    }

    for &(theta, m) in &THETA {
        if nrm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let a2 = a * a;
            let mut power = ident.clone();
            let mut u = DMatrix::zeros(n, n);
            let mut v = DMatrix::zeros(n, n);
            for (i, &c) in coeffs.iter().enumerate() {
                if i % 2 == 0 {
                    v += &power * c;
                } else {
                    u += &power * c;
                    power = &power * &a2;
                }
            }
            let u = a * u;
            return pade_quotient(&u, &v);
        }
    }

    let s = ((nrm / THETA13).log2().ceil()).max(0.0) as i32;
    let scaled = a * 2f64.powi(-s);
    let b = &PADE13;
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &scaled * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];
    let mut r = pade_quotient(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn pade_quotient(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Singular("denominator of the Padé approximant".into()))
}
