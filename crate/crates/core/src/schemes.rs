//! Strang splitting steppers that avoid order reduction under
//! time-dependent Dirichlet data.
//!
//! Two families are implemented:
//!
//! * **EO**: a function `q(t)` that agrees with `f(t, u)` on the boundary is
//!   moved from the reaction subproblem into the diffusion subproblem, so the
//!   reaction flow is compatible with the boundary and the diffusion flow
//!   sees the physical data `g(t)`. `EO1` runs reaction–diffusion–reaction,
//!   `EO2` runs diffusion–reaction–diffusion.
//! * **ACR**: the diffusion subproblem is solved exactly with φ-functions
//!   and boundary values built from a Taylor expansion of the traces at
//!   `t_n`. `ACR1` runs reaction–diffusion–reaction, `ACR2` the reverse.
//!
//! The `ND` variants use one-sided differences for `u_x` on the boundary to
//! raise the accuracy of the boundary corrections (1D finite differences
//! only).

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::discretization::{DiscKind, Discretization};
use crate::error::{check_len, Error, Result};
use crate::expfuncs::PhiEvaluator;
use crate::integrators::{integrate_affine, integrate_nonstiff, OdeStats, ToleranceProfile};
use crate::problems::{boundary_af_with_ux, boundary_trace, BoundaryTrace, Problem, TraceQuantity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemeId {
    EO1,
    EO2,
    EO2ND,
    ACR1,
    ACR2,
    ACR2ND,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] =
        [SchemeId::EO1, SchemeId::EO2, SchemeId::EO2ND, SchemeId::ACR1, SchemeId::ACR2, SchemeId::ACR2ND];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::EO1 => "eo1",
            SchemeId::EO2 => "eo2",
            SchemeId::EO2ND => "eo2nd",
            SchemeId::ACR1 => "acr1",
            SchemeId::ACR2 => "acr2",
            SchemeId::ACR2ND => "acr2nd",
        }
    }

    pub fn is_acr(self) -> bool {
        matches!(self, SchemeId::ACR1 | SchemeId::ACR2 | SchemeId::ACR2ND)
    }

    pub fn is_nd(self) -> bool {
        matches!(self, SchemeId::EO2ND | SchemeId::ACR2ND)
    }

    /// Step the φ-evaluator must be bound to, for a splitting step `k`.
    pub fn evaluator_step(self, k: f64) -> Option<f64> {
        match self {
            SchemeId::ACR1 => Some(k),
            SchemeId::ACR2 | SchemeId::ACR2ND => Some(0.5 * k),
            _ => None,
        }
    }

    /// Checks that the scheme can run on this problem and grid.
    pub fn validate(self, p: &dyn Problem, d: &Discretization) -> Result<()> {
        if p.dim() != d.dim() {
            return Err(Error::InvalidInput(format!(
                "problem {} is {}D but the grid is {}D",
                p.name(),
                p.dim(),
                d.dim()
            )));
        }
        if self.is_nd() && d.kind() != DiscKind::FD1D {
            return Err(Error::Unsupported(format!(
                "{self} needs a one-dimensional finite-difference grid, got {}",
                d.kind()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        SchemeId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme '{s}'")))
    }
}

/// Result of one splitting step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub stats: OdeStats,
    pub wall: Duration,
}

/// Result of a full trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub state: Vec<f64>,
    pub steps: usize,
    pub stats: OdeStats,
    pub wall: Duration,
}

/// One-sided second-order approximations of `u_x` at `x = 0` and `x = 1`.
pub fn boundary_ux_nd(d: &Discretization, u: &[f64], g: &[f64]) -> Result<[f64; 2]> {
    if d.kind() != DiscKind::FD1D {
        return Err(Error::Unsupported(format!("boundary u_x needs a uniform 1D grid, got {}", d.kind())));
    }
    let n = d.interior_count();
    if n < 2 {
        return Err(Error::InvalidInput("boundary u_x needs at least two interior nodes".into()));
    }
    check_len(n, u.len())?;
    check_len(2, g.len())?;
    let h = d.mesh_width().expect("finite-difference grids have a mesh width");
    let left = (-1.5 * g[0] + 2.0 * u[0] - 0.5 * u[1]) / h;
    let right = (1.5 * g[1] - 2.0 * u[n - 1] + 0.5 * u[n - 2]) / h;
    Ok([left, right])
}

/// The EO correction `q(t)` sampled on the interior nodes, with the
/// largest mismatch between `q` and `f(t, g)` over the boundary nodes.
#[derive(Debug, Clone)]
pub struct QValues {
    pub interior: Vec<f64>,
    pub boundary_mismatch: f64,
}

/// How `q(t)` is formed for an EO step.
#[derive(Debug, Clone, Copy)]
enum QForm {
    /// Straight line between `f(t, 0, g)` and `f(t, 1, g)`.
    Line,
    /// `r(t,x) f(t,1,y,g) + s(t,x) f(t,0,y,g)` with the 2×2 corner system.
    Bilinear,
    /// Cubic matching `f` and `Δf` at both ends, `u_x` frozen at the step start.
    Cubic { ux: [f64; 2] },
}

struct QBuilder<'a> {
    p: &'a dyn Problem,
    d: &'a Discretization,
    form: QForm,
}

impl<'a> QBuilder<'a> {
    fn new(p: &'a dyn Problem, d: &'a Discretization, form: QForm) -> Self {
        Self { p, d, form }
    }

    fn f_on_boundary(&self, t: f64, x: &[f64]) -> f64 {
        self.p.reaction(t, x, self.p.boundary(t, x))
    }

    fn ends(&self, t: f64) -> (f64, f64) {
        (self.f_on_boundary(t, &[0.0]), self.f_on_boundary(t, &[1.0]))
    }

    fn cubic(&self, t: f64, ux: [f64; 2]) -> Result<impl Fn(f64) -> f64> {
        let (f0, f1) = self.ends(t);
        let af = boundary_af_with_ux(self.p, self.d, t, ux)?;
        let (a0, a1) = (af[0], af[1]);
        let c1 = f1 - f0 - a0 / 3.0 - a1 / 6.0;
        Ok(move |x: f64| a0 * (x * x / 2.0 - x.powi(3) / 6.0) + a1 * x.powi(3) / 6.0 + f0 + c1 * x)
    }

    fn corner_inverse(&self, t: f64) -> Result<[[f64; 2]; 2]> {
        let f = |x: f64, y: f64| self.f_on_boundary(t, &[x, y]);
        let m = [[f(1.0, 0.0), f(0.0, 0.0)], [f(1.0, 1.0), f(0.0, 1.0)]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(Error::Singular(format!("corner system for q is singular at t = {t}")));
        }
        Ok([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]])
    }

    fn bilinear_at(&self, t: f64, inv: &[[f64; 2]; 2], x: f64, y: f64) -> f64 {
        let (r, s) = self.rs(t, inv, x);
        r * self.f_on_boundary(t, &[1.0, y]) + s * self.f_on_boundary(t, &[0.0, y])
    }

    fn rs(&self, t: f64, inv: &[[f64; 2]; 2], x: f64) -> (f64, f64) {
        let b0 = self.f_on_boundary(t, &[x, 0.0]);
        let b1 = self.f_on_boundary(t, &[x, 1.0]);
        (inv[0][0] * b0 + inv[0][1] * b1, inv[1][0] * b0 + inv[1][1] * b1)
    }

    /// Writes `q(t)` at the interior nodes into `out`.
    fn interior(&self, t: f64, out: &mut [f64]) -> Result<()> {
        match self.form {
            QForm::Line => {
                let (f0, f1) = self.ends(t);
                for (o, x) in out.iter_mut().zip(self.d.interior_nodes()) {
                    *o = f0 + x[0] * (f1 - f0);
                }
            }
            QForm::Cubic { ux } => {
                let q = self.cubic(t, ux)?;
                for (o, x) in out.iter_mut().zip(self.d.interior_nodes()) {
                    *o = q(x[0]);
                }
            }
            QForm::Bilinear => {
                let inv = self.corner_inverse(t)?;
                let axis = self.d.axis_nodes();
                let m = axis.len();
                let rs: Vec<(f64, f64)> = axis.iter().map(|&x| self.rs(t, &inv, x)).collect();
                let right: Vec<f64> = axis.iter().map(|&y| self.f_on_boundary(t, &[1.0, y])).collect();
                let left: Vec<f64> = axis.iter().map(|&y| self.f_on_boundary(t, &[0.0, y])).collect();
                for iy in 0..m {
                    for ix in 0..m {
                        let (r, s) = rs[ix];
                        out[iy * m + ix] = r * right[iy] + s * left[iy];
                    }
                }
            }
        }
        Ok(())
    }

    fn at(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(match self.form {
            QForm::Line => {
                let (f0, f1) = self.ends(t);
                f0 + x[0] * (f1 - f0)
            }
            QForm::Cubic { ux } => self.cubic(t, ux)?(x[0]),
            QForm::Bilinear => self.bilinear_at(t, &self.corner_inverse(t)?, x[0], x[1]),
        })
    }

    fn values(&self, t: f64) -> Result<QValues> {
        let mut interior = vec![0.0; self.d.interior_count()];
        self.interior(t, &mut interior)?;
        let dim = self.p.dim();
        let mut mismatch: f64 = 0.0;
        for x in self.d.boundary_nodes() {
            let x = &x[..dim];
            mismatch = mismatch.max((self.at(t, x)? - self.f_on_boundary(t, x)).abs());
        }
        Ok(QValues { interior, boundary_mismatch: mismatch })
    }
}

fn default_q_form(p: &dyn Problem) -> Result<QForm> {
    match p.dim() {
        1 => Ok(QForm::Line),
        2 => Ok(QForm::Bilinear),
        d => Err(Error::Unsupported(format!("no q construction in dimension {d}"))),
    }
}

/// The EO function `q(t)`: the straight line between the boundary values of
/// `f` in 1D, and the `r/s` combination from the corner system in 2D.
pub fn build_q(p: &dyn Problem, d: &Discretization, t: f64) -> Result<QValues> {
    QBuilder::new(p, d, default_q_form(p)?).values(t)
}

/// A `q` for the numerically differentiated EO variant, built at the step
/// start `t_n` from the state `u`. Evaluate it at any `t` in the step with
/// [`NdQ::values`].
#[derive(Debug, Clone, Copy)]
pub struct NdQ {
    ux: [f64; 2],
}

impl NdQ {
    /// The frozen boundary derivatives `u_x(0), u_x(1)`.
    pub fn ux(&self) -> [f64; 2] {
        self.ux
    }

    pub fn values(&self, p: &dyn Problem, d: &Discretization, t: f64) -> Result<QValues> {
        QBuilder::new(p, d, QForm::Cubic { ux: self.ux }).values(t)
    }

    /// `q_xx` at `x = 0` and `x = 1`.
    pub fn second_derivative_ends(&self, p: &dyn Problem, d: &Discretization, t: f64) -> Result<[f64; 2]> {
        let af = boundary_af_with_ux(p, d, t, self.ux)?;
        Ok([af[0], af[1]])
    }
}

pub fn build_q_nd_1d(p: &dyn Problem, d: &Discretization, t_n: f64, u: &[f64]) -> Result<NdQ> {
    SchemeId::EO2ND.validate(p, d)?;
    let g = boundary_trace(p, d, TraceQuantity::G, t_n, None)?;
    Ok(NdQ { ux: boundary_ux_nd(d, u, &g)? })
}

// Runs `integrate_*` with a fallible callback; the first failure wins.
struct Failure(Option<Error>);

impl Failure {
    fn record(&mut self, r: Result<()>) {
        if let Err(e) = r {
            self.0.get_or_insert(e);
        }
    }

    fn finish<T>(self, r: Result<T>) -> Result<T> {
        match self.0 {
            Some(e) => Err(e),
            None => r,
        }
    }
}

fn reaction_flow(
    p: &dyn Problem,
    d: &Discretization,
    q: Option<&QBuilder<'_>>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: &ToleranceProfile,
) -> Result<(Vec<f64>, OdeStats)> {
    let dim = p.dim();
    let nodes = d.interior_nodes();
    let mut qbuf = vec![0.0; y0.len()];
    let mut failure = Failure(None);
    let rhs = |t: f64, w: &[f64], dw: &mut [f64]| {
        for ((dv, wv), x) in dw.iter_mut().zip(w).zip(nodes) {
            *dv = p.reaction(t, &x[..dim], *wv);
        }
        if let Some(q) = q {
            failure.record(q.interior(t, &mut qbuf));
            dw.iter_mut().zip(&qbuf).for_each(|(dv, qv)| *dv -= qv);
        }
    };
    let r = integrate_nonstiff(rhs, t0, y0, t1, tol);
    failure.finish(r)
}

fn diffusion_flow(
    p: &dyn Problem,
    d: &Discretization,
    q: &QBuilder<'_>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: &ToleranceProfile,
) -> Result<(Vec<f64>, OdeStats)> {
    let dim = p.dim();
    let mut g = vec![0.0; d.boundary_count()];
    let mut failure = Failure(None);
    let source = |t: f64, out: &mut [f64]| {
        failure.record(q.interior(t, out));
        for (gv, x) in g.iter_mut().zip(d.boundary_nodes()) {
            *gv = p.boundary(t, &x[..dim]);
        }
        d.c_h().apply_add(1.0, &g, out);
    };
    let r = integrate_affine(d.a_h0(), source, t0, y0, t1, tol);
    failure.finish(r)
}

fn timed<F: FnOnce() -> Result<(Vec<f64>, OdeStats)>>(f: F) -> Result<StepOutcome> {
    let start = Instant::now();
    let (state, stats) = f()?;
    Ok(StepOutcome { state, stats, wall: start.elapsed() })
}

fn eo_step(
    p: &dyn Problem,
    d: &Discretization,
    q: &QBuilder<'_>,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
    reaction_outside: bool,
) -> Result<(Vec<f64>, OdeStats)> {
    let mid = t_n + 0.5 * k;
    let end = t_n + k;
    let mut stats = OdeStats::default();
    let out = if reaction_outside {
        let (w1, s1) = reaction_flow(p, d, Some(q), state, t_n, mid, tol)?;
        let (v, s2) = diffusion_flow(p, d, q, &w1, t_n, end, tol)?;
        let (w2, s3) = reaction_flow(p, d, Some(q), &v, mid, end, tol)?;
        stats += s1;
        stats += s2;
        stats += s3;
        w2
    } else {
        let (v1, s1) = diffusion_flow(p, d, q, state, t_n, mid, tol)?;
        let (w, s2) = reaction_flow(p, d, Some(q), &v1, t_n, end, tol)?;
        let (v2, s3) = diffusion_flow(p, d, q, &w, mid, end, tol)?;
        stats += s1;
        stats += s2;
        stats += s3;
        v2
    };
    Ok((out, stats))
}

/// EO1: reaction (`f − q`) over `[t_n, t_n+k/2]`, diffusion with source `q`
/// and data `g(t)` over `[t_n, t_n+k]`, reaction over `[t_n+k/2, t_n+k]`.
pub fn step_eo1(
    p: &dyn Problem,
    d: &Discretization,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    SchemeId::EO1.validate(p, d)?;
    check_len(d.interior_count(), state.len())?;
    let q = QBuilder::new(p, d, default_q_form(p)?);
    timed(|| eo_step(p, d, &q, state, t_n, k, tol, true))
}

/// EO2: diffusion over `[t_n, t_n+k/2]`, reaction over `[t_n, t_n+k]`,
/// diffusion over `[t_n+k/2, t_n+k]`.
pub fn step_eo2(
    p: &dyn Problem,
    d: &Discretization,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    SchemeId::EO2.validate(p, d)?;
    check_len(d.interior_count(), state.len())?;
    let q = QBuilder::new(p, d, default_q_form(p)?);
    timed(|| eo_step(p, d, &q, state, t_n, k, tol, false))
}

/// EO2 with the cubic `q` that also matches `Δf` on the boundary.
pub fn step_eo2_nd(
    p: &dyn Problem,
    d: &Discretization,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    check_len(d.interior_count(), state.len())?;
    let start = Instant::now();
    let nd = build_q_nd_1d(p, d, t_n, state)?;
    let q = QBuilder::new(p, d, QForm::Cubic { ux: nd.ux });
    let (state, stats) = eo_step(p, d, &q, state, t_n, k, tol, false)?;
    Ok(StepOutcome { state, stats, wall: start.elapsed() })
}

fn check_evaluator(ev: &PhiEvaluator, d: &Discretization, expected: f64) -> Result<()> {
    check_len(d.interior_count(), ev.interior_count())?;
    if (ev.step() - expected).abs() > 1e-12 * expected {
        return Err(Error::InvalidInput(format!(
            "evaluator bound to step {} but the scheme needs {expected}",
            ev.step()
        )));
    }
    Ok(())
}

fn trace(p: &dyn Problem, d: &Discretization, q: TraceQuantity, t: f64) -> Result<BoundaryTrace> {
    boundary_trace(p, d, q, t, None)
}

/// ACR1 with an evaluator bound to `k`.
pub fn step_acr1(
    p: &dyn Problem,
    d: &Discretization,
    ev: &PhiEvaluator,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    SchemeId::ACR1.validate(p, d)?;
    check_len(d.interior_count(), state.len())?;
    check_evaluator(ev, d, k)?;
    timed(|| {
        let mid = t_n + 0.5 * k;
        let (v, s1) = reaction_flow(p, d, None, state, t_n, mid, tol)?;
        let g = trace(p, d, TraceQuantity::G, t_n)?;
        let gt = trace(p, d, TraceQuantity::Gt, t_n)?;
        let f = trace(p, d, TraceQuantity::F, t_n)?;
        let b1 = g.axpy(0.5 * k, &f);
        let b2 = gt.axpy(-1.0, &f);
        let w = ev.phi_combination_boundary(&v, [Some(&b1), Some(&b2), None])?;
        let (u, s2) = reaction_flow(p, d, None, &w, mid, t_n + k, tol)?;
        let mut stats = s1;
        stats += s2;
        Ok((u, stats))
    })
}

/// ACR2 with an evaluator bound to `k/2`.
pub fn step_acr2(
    p: &dyn Problem,
    d: &Discretization,
    ev2: &PhiEvaluator,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    SchemeId::ACR2.validate(p, d)?;
    check_len(d.interior_count(), state.len())?;
    check_evaluator(ev2, d, 0.5 * k)?;
    timed(|| {
        let g = trace(p, d, TraceQuantity::G, t_n)?;
        let f = trace(p, d, TraceQuantity::F, t_n)?;
        let au = trace(p, d, TraceQuantity::AU, t_n)?;
        let w = ev2.phi_combination_boundary(state, [Some(&g), Some(&au), None])?;
        let (v, stats) = reaction_flow(p, d, None, &w, t_n, t_n + k, tol)?;
        let b1 = g.axpy(0.5 * k, &au).axpy(k, &f);
        let u = ev2.phi_combination_boundary(&v, [Some(&b1), Some(&au), None])?;
        Ok((u, stats))
    })
}

/// ACR2 with second-order boundary corrections from numerical differentiation.
pub fn step_acr2_nd(
    p: &dyn Problem,
    d: &Discretization,
    ev2: &PhiEvaluator,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    SchemeId::ACR2ND.validate(p, d)?;
    check_len(d.interior_count(), state.len())?;
    check_evaluator(ev2, d, 0.5 * k)?;
    timed(|| {
        let g = trace(p, d, TraceQuantity::G, t_n)?;
        let f = trace(p, d, TraceQuantity::F, t_n)?;
        let ft = trace(p, d, TraceQuantity::Ft, t_n)?;
        let fu = trace(p, d, TraceQuantity::Fu, t_n)?;
        let au = trace(p, d, TraceQuantity::AU, t_n)?;
        let af = boundary_trace(p, d, TraceQuantity::AfNd, t_n, Some(state))?;
        let a2u = boundary_trace(p, d, TraceQuantity::A2uNd, t_n, Some(state))?;

        let w = ev2.phi_combination_boundary(state, [Some(&g), Some(&au), Some(&a2u)])?;
        let (v, stats) = reaction_flow(p, d, None, &w, t_n, t_n + k, tol)?;

        // ∂[u + k(Au/2 + f) + k²(A²u/8 + f_u Au/2 + (f_t + f_u f)/2)]
        let b1: Vec<f64> = (0..g.len())
            .map(|i| {
                g[i] + k * (0.5 * au[i] + f[i])
                    + k * k * (a2u[i] / 8.0 + 0.5 * fu[i] * au[i] + 0.5 * (ft[i] + fu[i] * f[i]))
            })
            .collect();
        // ∂[Au + (k/2) A²u + k Af]
        let b2 = au.axpy(0.5 * k, &a2u).axpy(k, &af);
        let u = ev2.phi_combination_boundary(&v, [Some(&b1), Some(&b2), Some(&a2u)])?;
        Ok((u, stats))
    })
}

/// Advances one step of `scheme`. ACR schemes need an evaluator bound to
/// [`SchemeId::evaluator_step`].
#[allow(clippy::too_many_arguments)]
pub fn step(
    scheme: SchemeId,
    p: &dyn Problem,
    d: &Discretization,
    ev: Option<&PhiEvaluator>,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<StepOutcome> {
    let need = || Error::InvalidInput(format!("{scheme} needs a phi evaluator"));
    match scheme {
        SchemeId::EO1 => step_eo1(p, d, state, t_n, k, tol),
        SchemeId::EO2 => step_eo2(p, d, state, t_n, k, tol),
        SchemeId::EO2ND => step_eo2_nd(p, d, state, t_n, k, tol),
        SchemeId::ACR1 => step_acr1(p, d, ev.ok_or_else(need)?, state, t_n, k, tol),
        SchemeId::ACR2 => step_acr2(p, d, ev.ok_or_else(need)?, state, t_n, k, tol),
        SchemeId::ACR2ND => step_acr2_nd(p, d, ev.ok_or_else(need)?, state, t_n, k, tol),
    }
}

/// Number of whole steps of size `k` in `[0, horizon]`.
pub fn step_count(horizon: f64, k: f64) -> Result<usize> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {k}")));
    }
    let n = (horizon / k).round();
    if n < 1.0 || (n * k - horizon).abs() > 1e-9 * horizon {
        return Err(Error::InvalidInput(format!("horizon {horizon} is not a whole number of steps {k}")));
    }
    Ok(n as usize)
}

/// Integrates from `t = 0` to the problem horizon with constant step `k`.
#[allow(clippy::too_many_arguments)]
pub fn integrate(
    scheme: SchemeId,
    p: &dyn Problem,
    d: &Discretization,
    ev: Option<&PhiEvaluator>,
    initial: &[f64],
    k: f64,
    tol: &ToleranceProfile,
) -> Result<Trajectory> {
    scheme.validate(p, d)?;
    let steps = step_count(p.horizon(), k)?;
    let mut state = initial.to_vec();
    let mut stats = OdeStats::default();
    let mut wall = Duration::ZERO;
    for n in 0..steps {
        let out = step(scheme, p, d, ev, &state, n as f64 * k, k, tol)?;
        state = out.state;
        stats += out.stats;
        wall += out.wall;
    }
    Ok(Trajectory { state, steps, stats, wall })
}
