//! Continuous reaction-diffusion problems `u_t = Δu + f(t, x, u)` on the unit
//! interval or square with time-dependent Dirichlet data, and the boundary
//! traces that the splitting schemes feed into their corrections.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::discretization::Discretization;
use crate::error::{check_len, Error, Result};
use crate::schemes::boundary_ux_nd;

/// Closed-form partial derivatives of the reaction term at one point.
///
/// `f_x`, `f_xx` and `f_xu` are per axis; the second entry is unused in 1D.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReactionPartials {
    pub f_t: f64,
    pub f_u: f64,
    pub f_uu: f64,
    pub f_x: [f64; 2],
    pub f_xx: [f64; 2],
    pub f_xu: [f64; 2],
}

/// A reaction-diffusion initial-boundary-value problem on `[0,1]^dim` with
/// the Laplacian as diffusion operator.
///
/// Points are passed as slices of length [`Problem::dim`].
pub trait Problem: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Spatial dimension, 1 or 2.
    fn dim(&self) -> usize;

    /// Final time of the integration.
    fn horizon(&self) -> f64 {
        0.2
    }

    fn reaction(&self, t: f64, x: &[f64], u: f64) -> f64;

    fn reaction_partials(&self, t: f64, x: &[f64], u: f64) -> ReactionPartials;

    /// Dirichlet data `g(t, x)` and its first two time derivatives.
    fn boundary(&self, t: f64, x: &[f64]) -> f64;
    fn boundary_dt(&self, t: f64, x: &[f64]) -> f64;
    fn boundary_dtt(&self, t: f64, x: &[f64]) -> f64;

    fn initial(&self, x: &[f64]) -> f64;

    fn exact(&self, _t: f64, _x: &[f64]) -> Option<f64> {
        None
    }
}

/// The built-in test problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProblemId {
    /// 1D, exact solution `e^{t+x³}`.
    P1D,
    /// 2D, exact solution `e^{t+x³+y³}`.
    P2DA,
    /// 2D, exact solution `e^t (x²+y²)`.
    P2DB,
}

impl ProblemId {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::P1D => "p1d",
            ProblemId::P2DA => "p2da",
            ProblemId::P2DB => "p2db",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1d" => Ok(ProblemId::P1D),
            "p2da" => Ok(ProblemId::P2DA),
            "p2db" => Ok(ProblemId::P2DB),
            other => Err(Error::InvalidInput(format!("unknown problem id '{other}'"))),
        }
    }
}

/// Returns one of the built-in problems.
pub fn builtin_problem(id: ProblemId) -> Arc<dyn Problem> {
    match id {
        ProblemId::P1D => Arc::new(CubicExp1d),
        ProblemId::P2DA => Arc::new(CubicExp2d),
        ProblemId::P2DB => Arc::new(Quadratic2d),
    }
}

/// `u_t = u_xx + u² − e^{t+x³}(9x⁴ + 6x + e^{t+x³} − 1)` with exact solution `e^{t+x³}`.
#[derive(Debug, Clone, Copy)]
pub struct CubicExp1d;

impl Problem for CubicExp1d {
    fn name(&self) -> &str {
        "p1d"
    }

    fn dim(&self) -> usize {
        1
    }

    fn reaction(&self, t: f64, x: &[f64], u: f64) -> f64 {
        let x = x[0];
        let e = (t + x.powi(3)).exp();
        u * u - e * (9.0 * x.powi(4) + 6.0 * x + e - 1.0)
    }

    fn reaction_partials(&self, t: f64, x: &[f64], u: f64) -> ReactionPartials {
        let x = x[0];
        let e = (t + x.powi(3)).exp();
        let p = 9.0 * x.powi(4) + 6.0 * x - 1.0;
        let px = 36.0 * x.powi(3) + 6.0;
        let pxx = 108.0 * x * x;
        let ex = 3.0 * x * x * e;
        let exx = (6.0 * x + 9.0 * x.powi(4)) * e;
        // f = u² − e·p − e²
        ReactionPartials {
            f_t: -e * p - 2.0 * e * e,
            f_u: 2.0 * u,
            f_uu: 2.0,
            f_x: [-(ex * p + e * px + 2.0 * e * ex), 0.0],
            f_xx: [-(exx * p + 2.0 * ex * px + e * pxx + 2.0 * ex * ex + 2.0 * e * exx), 0.0],
            f_xu: [0.0, 0.0],
        }
    }

    fn boundary(&self, t: f64, x: &[f64]) -> f64 {
        (t + x[0].powi(3)).exp()
    }

    fn boundary_dt(&self, t: f64, x: &[f64]) -> f64 {
        self.boundary(t, x)
    }

    fn boundary_dtt(&self, t: f64, x: &[f64]) -> f64 {
        self.boundary(t, x)
    }

    fn initial(&self, x: &[f64]) -> f64 {
        x[0].powi(3).exp()
    }

    fn exact(&self, t: f64, x: &[f64]) -> Option<f64> {
        Some((t + x[0].powi(3)).exp())
    }
}

/// Two-dimensional analogue of [`CubicExp1d`], exact solution `e^{t+x³+y³}`.
#[derive(Debug, Clone, Copy)]
pub struct CubicExp2d;

impl Problem for CubicExp2d {
    fn name(&self) -> &str {
        "p2da"
    }

    fn dim(&self) -> usize {
        2
    }

    fn reaction(&self, t: f64, x: &[f64], u: f64) -> f64 {
        let (x, y) = (x[0], x[1]);
        let e = (t + x.powi(3) + y.powi(3)).exp();
        u * u - e * (9.0 * (x.powi(4) + y.powi(4)) + 6.0 * (x + y) + e - 1.0)
    }

    fn reaction_partials(&self, t: f64, x: &[f64], u: f64) -> ReactionPartials {
        let e = (t + x[0].powi(3) + x[1].powi(3)).exp();
        let p = 9.0 * (x[0].powi(4) + x[1].powi(4)) + 6.0 * (x[0] + x[1]) - 1.0;
        let axis = |s: f64| {
            let ps = 36.0 * s.powi(3) + 6.0;
            let pss = 108.0 * s * s;
            let es = 3.0 * s * s * e;
            let ess = (6.0 * s + 9.0 * s.powi(4)) * e;
            let fs = -(es * p + e * ps + 2.0 * e * es);
            let fss = -(ess * p + 2.0 * es * ps + e * pss + 2.0 * es * es + 2.0 * e * ess);
            (fs, fss)
        };
        let (fx, fxx) = axis(x[0]);
        let (fy, fyy) = axis(x[1]);
        ReactionPartials {
            f_t: -e * p - 2.0 * e * e,
            f_u: 2.0 * u,
            f_uu: 2.0,
            f_x: [fx, fy],
            f_xx: [fxx, fyy],
            f_xu: [0.0, 0.0],
        }
    }

    fn boundary(&self, t: f64, x: &[f64]) -> f64 {
        (t + x[0].powi(3) + x[1].powi(3)).exp()
    }

    fn boundary_dt(&self, t: f64, x: &[f64]) -> f64 {
        self.boundary(t, x)
    }

    fn boundary_dtt(&self, t: f64, x: &[f64]) -> f64 {
        self.boundary(t, x)
    }

    fn initial(&self, x: &[f64]) -> f64 {
        (x[0].powi(3) + x[1].powi(3)).exp()
    }

    fn exact(&self, t: f64, x: &[f64]) -> Option<f64> {
        Some(self.boundary(t, x))
    }
}

/// `u_t = Δu + u² − e^{2t}(x²+y²)² + e^t(x²+y²−4)`, exact solution `e^t(x²+y²)`.
#[derive(Debug, Clone, Copy)]
pub struct Quadratic2d;

impl Problem for Quadratic2d {
    fn name(&self) -> &str {
        "p2db"
    }

    fn dim(&self) -> usize {
        2
    }

    fn reaction(&self, t: f64, x: &[f64], u: f64) -> f64 {
        let s = x[0] * x[0] + x[1] * x[1];
        u * u - (2.0 * t).exp() * s * s + t.exp() * (s - 4.0)
    }

    fn reaction_partials(&self, t: f64, x: &[f64], u: f64) -> ReactionPartials {
        let s = x[0] * x[0] + x[1] * x[1];
        let (e1, e2) = (t.exp(), (2.0 * t).exp());
        let fs = |c: f64| -4.0 * c * s * e2 + 2.0 * c * e1;
        let fss = |c: f64| -e2 * (4.0 * s + 8.0 * c * c) + 2.0 * e1;
        ReactionPartials {
            f_t: -2.0 * e2 * s * s + e1 * (s - 4.0),
            f_u: 2.0 * u,
            f_uu: 2.0,
            f_x: [fs(x[0]), fs(x[1])],
            f_xx: [fss(x[0]), fss(x[1])],
            f_xu: [0.0, 0.0],
        }
    }

    fn boundary(&self, t: f64, x: &[f64]) -> f64 {
        t.exp() * (x[0] * x[0] + x[1] * x[1])
    }

    fn boundary_dt(&self, t: f64, x: &[f64]) -> f64 {
        self.boundary(t, x)
    }

    fn boundary_dtt(&self, t: f64, x: &[f64]) -> f64 {
        self.boundary(t, x)
    }

    fn initial(&self, x: &[f64]) -> f64 {
        x[0] * x[0] + x[1] * x[1]
    }

    fn exact(&self, t: f64, x: &[f64]) -> Option<f64> {
        Some(self.boundary(t, x))
    }
}

/// One value per boundary node, in the column order of `C_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace(pub Vec<f64>);

impl BoundaryTrace {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &BoundaryTrace) -> BoundaryTrace {
        BoundaryTrace(self.0.iter().zip(&other.0).map(|(a, b)| a + alpha * b).collect())
    }

    pub fn scaled(&self, alpha: f64) -> BoundaryTrace {
        BoundaryTrace(self.0.iter().map(|a| alpha * a).collect())
    }
}

impl std::ops::Deref for BoundaryTrace {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Quantities that can be traced on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceQuantity {
    /// `g`
    G,
    /// `g'`
    Gt,
    /// `g''`
    Gtt,
    /// `f(t, x_b, g)`
    F,
    /// `f_t(t, x_b, g)`
    Ft,
    /// `f_u(t, x_b, g)`
    Fu,
    /// `Δu` on the boundary, `g' − f`.
    AU,
    /// `Δf(t, u)` on the boundary with `u_x` from one-sided differences of the state.
    AfNd,
    /// `Δ²u` on the boundary, `g'' − (f_t + f_u g') − Δf`.
    A2uNd,
}

fn trace_with(d: &Discretization, dim: usize, mut eval: impl FnMut(&[f64]) -> f64) -> BoundaryTrace {
    BoundaryTrace(d.boundary_nodes().iter().map(|x| eval(&x[..dim])).collect())
}

/// Evaluates a boundary trace of `q` at time `t`.
///
/// The numerically differentiated quantities need the interior `state`
/// and are only available on one-dimensional finite-difference grids.
pub fn boundary_trace(
    p: &dyn Problem,
    d: &Discretization,
    q: TraceQuantity,
    t: f64,
    state: Option<&[f64]>,
) -> Result<BoundaryTrace> {
    let dim = p.dim();
    if dim != d.dim() {
        return Err(Error::InvalidInput(format!(
            "problem has dimension {dim} but the discretization has dimension {}",
            d.dim()
        )));
    }
    let trace = match q {
        TraceQuantity::G => trace_with(d, dim, |x| p.boundary(t, x)),
        TraceQuantity::Gt => trace_with(d, dim, |x| p.boundary_dt(t, x)),
        TraceQuantity::Gtt => trace_with(d, dim, |x| p.boundary_dtt(t, x)),
        TraceQuantity::F => trace_with(d, dim, |x| p.reaction(t, x, p.boundary(t, x))),
        TraceQuantity::Ft => trace_with(d, dim, |x| p.reaction_partials(t, x, p.boundary(t, x)).f_t),
        TraceQuantity::Fu => trace_with(d, dim, |x| p.reaction_partials(t, x, p.boundary(t, x)).f_u),
        TraceQuantity::AU => trace_with(d, dim, |x| p.boundary_dt(t, x) - p.reaction(t, x, p.boundary(t, x))),
        TraceQuantity::AfNd | TraceQuantity::A2uNd => {
            let state = state.ok_or_else(|| {
                Error::InvalidInput(format!("{q:?} needs the interior state for u_x"))
            })?;
            if dim != 1 {
                return Err(Error::Unsupported(format!("{q:?} is only available in one dimension")));
            }
            check_len(d.interior_count(), state.len())?;
            let g = boundary_trace(p, d, TraceQuantity::G, t, None)?;
            let ux = boundary_ux_nd(d, state, &g)?;
            let af = boundary_af_with_ux(p, d, t, ux)?;
            if q == TraceQuantity::AfNd {
                af
            } else {
                boundary_a2u_from_af(p, d, t, &af)
            }
        }
    };
    Ok(trace)
}

/// `Δf(t, u)` on the boundary of a 1D problem, given `u_x` at `x = 0` and `x = 1`:
/// `f_xx + 2 f_xu u_x + f_uu u_x² + f_u u_xx` with `u_xx = g' − f`.
pub fn boundary_af_with_ux(p: &dyn Problem, d: &Discretization, t: f64, ux: [f64; 2]) -> Result<BoundaryTrace> {
    if p.dim() != 1 || d.dim() != 1 {
        return Err(Error::Unsupported("boundary Δf from u_x is only available in one dimension".into()));
    }
    let values = d
        .boundary_nodes()
        .iter()
        .zip(ux)
        .map(|(x, ux)| {
            let x = &x[..1];
            let g = p.boundary(t, x);
            let uxx = p.boundary_dt(t, x) - p.reaction(t, x, g);
            let fp = p.reaction_partials(t, x, g);
            fp.f_xx[0] + 2.0 * fp.f_xu[0] * ux + fp.f_uu * ux * ux + fp.f_u * uxx
        })
        .collect();
    Ok(BoundaryTrace(values))
}

fn boundary_a2u_from_af(p: &dyn Problem, d: &Discretization, t: f64, af: &BoundaryTrace) -> BoundaryTrace {
    let dim = p.dim();
    let values = d
        .boundary_nodes()
        .iter()
        .zip(af.values())
        .map(|(x, af)| {
            let x = &x[..dim];
            let g = p.boundary(t, x);
            let gt = p.boundary_dt(t, x);
            let fp = p.reaction_partials(t, x, g);
            p.boundary_dtt(t, x) - (fp.f_t + fp.f_u * gt) - af
        })
        .collect();
    BoundaryTrace(values)
}

/// Samples a function of the node coordinates at the interior nodes.
pub fn sample_interior(d: &Discretization, dim: usize, mut eval: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    d.interior_nodes().iter().map(|x| eval(&x[..dim])).collect()
}

/// The initial state `u₀` restricted to the interior nodes.
pub fn initial_state(p: &dyn Problem, d: &Discretization) -> Vec<f64> {
    sample_interior(d, p.dim(), |x| p.initial(x))
}

/// The exact solution at the interior nodes, if the problem has one.
pub fn exact_state(p: &dyn Problem, d: &Discretization, t: f64) -> Result<Vec<f64>> {
    d.interior_nodes()
        .iter()
        .map(|x| p.exact(t, &x[..p.dim()]).ok_or_else(|| Error::NoExactSolution(p.name().to_string())))
        .collect()
}

/// Maximum nodal error over the interior nodes at time `t`.
pub fn max_error(u: &[f64], d: &Discretization, p: &dyn Problem, t: f64) -> Result<f64> {
    check_len(d.interior_count(), u.len())?;
    let exact = exact_state(p, d, t)?;
    Ok(u.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
