//! Spatial discretizations of the Dirichlet Laplacian on `[0,1]^dim`.
//!
//! Every discretization is described by the interior operator `A_h0`, the
//! boundary-to-interior map `C_h`, and nodal restriction as projection, so
//! that the discrete elliptic problem reads `A_h0·R + C_h·g = F`.
//!
//! Two-dimensional unknowns are stored row-major (x fastest). Boundary nodes
//! are walked bottom (`y = 0`), top (`y = 1`), left (`x = 0`), right
//! (`x = 1`); the corners belong to the bottom and top edges. In 1D the
//! boundary order is `[x = 0, x = 1]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{check_len, Error, Result};
use crate::linalg::{CsrMatrix, Operator, ShiftedFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiscKind {
    Spectral1D,
    Spectral2D,
    FD1D,
    FD2D,
}

impl DiscKind {
    pub fn dim(self) -> usize {
        match self {
            DiscKind::Spectral1D | DiscKind::FD1D => 1,
            DiscKind::Spectral2D | DiscKind::FD2D => 2,
        }
    }

    pub fn is_spectral(self) -> bool {
        matches!(self, DiscKind::Spectral1D | DiscKind::Spectral2D)
    }

    /// Picks the kind for a family ("spectral" or "fd") and dimension.
    pub fn from_family(family: &str, dim: usize) -> Result<Self> {
        match (family.trim().to_ascii_lowercase().as_str(), dim) {
            ("spectral", 1) => Ok(DiscKind::Spectral1D),
            ("spectral", 2) => Ok(DiscKind::Spectral2D),
            ("fd", 1) => Ok(DiscKind::FD1D),
            ("fd", 2) => Ok(DiscKind::FD2D),
            (f, d) => Err(Error::InvalidInput(format!("no discretization '{f}' in dimension {d}"))),
        }
    }

    pub fn family(self) -> &'static str {
        if self.is_spectral() {
            "spectral"
        } else {
            "fd"
        }
    }
}

impl fmt::Display for DiscKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DiscKind::Spectral1D => "spectral1d",
            DiscKind::Spectral2D => "spectral2d",
            DiscKind::FD1D => "fd1d",
            DiscKind::FD2D => "fd2d",
        };
        f.write_str(s)
    }
}

impl FromStr for DiscKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spectral1d" => Ok(DiscKind::Spectral1D),
            "spectral2d" => Ok(DiscKind::Spectral2D),
            "fd1d" => Ok(DiscKind::FD1D),
            "fd2d" => Ok(DiscKind::FD2D),
            other => Err(Error::InvalidInput(format!("unknown discretization '{other}'"))),
        }
    }
}

/// An immutable spatial discretization.
#[derive(Debug, Clone)]
pub struct Discretization {
    kind: DiscKind,
    resolution: f64,
    per_axis: usize,
    mesh_width: Option<f64>,
    axis: Vec<f64>,
    interior_nodes: Vec<[f64; 2]>,
    boundary_nodes: Vec<[f64; 2]>,
    a_h0: Operator,
    c_h: Operator,
}

// Full 1D second-derivative operator on nodes 0..=n, stored by rows; rows 0
// and n (the boundary) are left empty.
struct FullAxis {
    nodes: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl FullAxis {
    fn last(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Chebyshev–Gauss–Lobatto points `sin²(jπ/2n)` on `[0,1]`, `j = 0..=n`.
pub fn chebyshev_lobatto_nodes(n: usize) -> Vec<f64> {
    (0..=n).map(|j| (j as f64 * PI / (2.0 * n as f64)).sin().powi(2)).collect()
}

/// First-derivative collocation matrix on the Chebyshev–Lobatto nodes of
/// `[0,1]`, diagonal from the negative-sum rule.
pub fn chebyshev_first_derivative(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let weight = |j: usize| {
        let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        if j == 0 || j == n {
            0.5 * sign
        } else {
            sign
        }
    };
    // ξ_i − ξ_j without cancellation
    let diff = |i: usize, j: usize| {
        ((i + j) as f64 * PI / (2.0 * nf)).sin() * ((i as f64 - j as f64) * PI / (2.0 * nf)).sin()
    };
    let mut d = DMatrix::zeros(n + 1, n + 1);
    for i in 0..=n {
        let mut sum = 0.0;
        for j in 0..=n {
            if i != j {
                let v = weight(j) / weight(i) / diff(i, j);
                d[(i, j)] = v;
                sum += v;
            }
        }
        d[(i, i)] = -sum;
    }
    d
}

/// Second-derivative collocation matrix `D·D` on `[0,1]`, with the diagonal
/// reset so that every row sums to zero.
pub fn chebyshev_second_derivative(n: usize) -> DMatrix<f64> {
    let d = chebyshev_first_derivative(n);
    let mut d2 = &d * &d;
    for i in 0..=n {
        let off: f64 = (0..=n).filter(|&j| j != i).map(|j| d2[(i, j)]).sum();
        d2[(i, i)] = -off;
    }
    d2
}

fn spectral_axis(m: usize) -> FullAxis {
    let n = m + 1;
    let d2 = chebyshev_second_derivative(n);
    let rows = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                Vec::new()
            } else {
                (0..=n).map(|j| (j, d2[(i, j)])).collect()
            }
        })
        .collect();
    FullAxis { nodes: chebyshev_lobatto_nodes(n), rows }
}

fn fd_axis(n: usize) -> FullAxis {
    let h = 1.0 / n as f64;
    let c = 1.0 / (h * h);
    let rows = (0..=n)
        .map(|i| {
            if i == 0 || i == n {
                Vec::new()
            } else {
                vec![(i - 1, c), (i, -2.0 * c), (i + 1, c)]
            }
        })
        .collect();
    FullAxis { nodes: (0..=n).map(|i| i as f64 * h).collect(), rows }
}

struct Assembled {
    interior_nodes: Vec<[f64; 2]>,
    boundary_nodes: Vec<[f64; 2]>,
    a: Vec<(usize, usize, f64)>,
    c: Vec<(usize, usize, f64)>,
}

fn assemble_1d(ax: &FullAxis) -> Assembled {
    let n = ax.last();
    let mut a = Vec::new();
    let mut c = Vec::new();
    for i in 1..n {
        for &(j, v) in &ax.rows[i] {
            match j {
                0 => c.push((i - 1, 0, v)),
                j if j == n => c.push((i - 1, 1, v)),
                j => a.push((i - 1, j - 1, v)),
            }
        }
    }
    Assembled {
        interior_nodes: (1..n).map(|i| [ax.nodes[i], 0.0]).collect(),
        boundary_nodes: vec![[ax.nodes[0], 0.0], [ax.nodes[n], 0.0]],
        a,
        c,
    }
}

fn assemble_2d(ax: &FullAxis) -> Assembled {
    let n = ax.last();
    let m = n - 1;
    let bottom = |i: usize| i;
    let top = |i: usize| n + 1 + i;
    let left = |j: usize| 2 * (n + 1) + (j - 1);
    let right = |j: usize| 2 * (n + 1) + (n - 1) + (j - 1);

    let mut boundary_nodes = Vec::with_capacity(4 * n);
    boundary_nodes.extend((0..=n).map(|i| [ax.nodes[i], 0.0]));
    boundary_nodes.extend((0..=n).map(|i| [ax.nodes[i], 1.0]));
    boundary_nodes.extend((1..n).map(|j| [0.0, ax.nodes[j]]));
    boundary_nodes.extend((1..n).map(|j| [1.0, ax.nodes[j]]));

    let mut interior_nodes = Vec::with_capacity(m * m);
    let mut a = Vec::new();
    let mut c = Vec::new();
    for iy in 1..n {
        for ix in 1..n {
            let row = (iy - 1) * m + (ix - 1);
            interior_nodes.push([ax.nodes[ix], ax.nodes[iy]]);
            for &(j, v) in &ax.rows[ix] {
                match j {
                    0 => c.push((row, left(iy), v)),
                    j if j == n => c.push((row, right(iy), v)),
                    j => a.push((row, (iy - 1) * m + (j - 1), v)),
                }
            }
            for &(j, v) in &ax.rows[iy] {
                match j {
                    0 => c.push((row, bottom(ix), v)),
                    j if j == n => c.push((row, top(ix), v)),
                    j => a.push((row, (j - 1) * m + (ix - 1), v)),
                }
            }
        }
    }
    Assembled { interior_nodes, boundary_nodes, a, c }
}

impl Discretization {
    /// Builds a discretization.
    ///
    /// `resolution` is the number of interior nodes per axis for the spectral
    /// kinds and the mesh width `h` for the finite-difference kinds; `1/h`
    /// must be an integer.
    pub fn build(kind: DiscKind, resolution: f64) -> Result<Self> {
        let (axis, mesh_width) = if kind.is_spectral() {
            if resolution.fract() != 0.0 || !(2.0..=4096.0).contains(&resolution) {
                return Err(Error::InvalidInput(format!(
                    "spectral resolution must be an integer node count >= 2, got {resolution}"
                )));
            }
            (spectral_axis(resolution as usize), None)
        } else {
            if !(resolution > 0.0 && resolution < 0.5) {
                return Err(Error::InvalidInput(format!("mesh width must lie in (0, 0.5), got {resolution}")));
            }
            let n = (1.0 / resolution).round();
            if (n * resolution - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!("1/h must be an integer, got h = {resolution}")));
            }
            let n = n as usize;
            (fd_axis(n), Some(1.0 / n as f64))
        };

        let per_axis = axis.last() - 1;
        let asm = if kind.dim() == 1 { assemble_1d(&axis) } else { assemble_2d(&axis) };
        let ni = asm.interior_nodes.len();
        let nb = asm.boundary_nodes.len();
        let a = CsrMatrix::from_triplets(ni, ni, &asm.a);
        let c = CsrMatrix::from_triplets(ni, nb, &asm.c);
        let (a_h0, c_h) = if kind.is_spectral() {
            (Operator::Dense(a.to_dense()), Operator::Dense(c.to_dense()))
        } else {
            (Operator::Sparse(a), Operator::Sparse(c))
        };
        let axis_interior = axis.nodes[1..axis.last()].to_vec();
        Ok(Self {
            kind,
            resolution,
            per_axis,
            mesh_width,
            axis: axis_interior,
            interior_nodes: asm.interior_nodes,
            boundary_nodes: asm.boundary_nodes,
            a_h0,
            c_h,
        })
    }

    pub fn kind(&self) -> DiscKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// The value passed to [`Discretization::build`].
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    /// Interior nodes per axis.
    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    /// Uniform mesh width for finite-difference kinds.
    pub fn mesh_width(&self) -> Option<f64> {
        self.mesh_width
    }

    /// Interior coordinates along one axis.
    pub fn axis_nodes(&self) -> &[f64] {
        &self.axis
    }

    pub fn interior_nodes(&self) -> &[[f64; 2]] {
        &self.interior_nodes
    }

    pub fn boundary_nodes(&self) -> &[[f64; 2]] {
        &self.boundary_nodes
    }

    pub fn interior_count(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_nodes.len()
    }

    pub fn a_h0(&self) -> &Operator {
        &self.a_h0
    }

    pub fn c_h(&self) -> &Operator {
        &self.c_h
    }

    /// `C_h·g` as an interior vector.
    pub fn lift_boundary(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.c_h.apply(g)
    }

    /// `A_h0·U + C_h·g`
    pub fn apply_operator(&self, u: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_len(self.interior_count(), u.len())?;
        check_len(self.boundary_count(), g.len())?;
        let mut out = self.a_h0.apply(u)?;
        self.c_h.apply_add(1.0, g, &mut out);
        Ok(out)
    }

    /// Solves `A_h0·R + C_h·g = F` for `R`.
    pub fn elliptic_project(&self, f: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        check_len(self.interior_count(), f.len())?;
        check_len(self.boundary_count(), g.len())?;
        let mut rhs = f.to_vec();
        self.c_h.apply_add(-1.0, g, &mut rhs);
        let lu = ShiftedFactor::new(&self.a_h0, 0.0, 1.0)?;
        lu.solve_in_place(&mut rhs)?;
        Ok(rhs)
    }
}
