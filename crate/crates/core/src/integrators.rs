//! Adaptive time integrators for the split subproblems: an embedded
//! Dormand–Prince 5(4) pair for the smooth nonlinear flows, and TR-BDF2 for
//! the stiff affine flows `v' = A v + s(t)`.

use std::ops::AddAssign;

use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::linalg::{Operator, ShiftedFactor};
use crate::problems::BoundaryTrace;

/// Relative and absolute tolerances for the adaptive integrators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceProfile {
    pub rtol: f64,
    pub atol: f64,
}

impl ToleranceProfile {
    pub fn new(rtol: f64, atol: f64) -> Result<Self> {
        if !(rtol >= 1e-14) || !(atol >= 1e-16) {
            return Err(Error::InvalidInput(format!(
                "tolerances too small or invalid: rtol = {rtol:e}, atol = {atol:e}"
            )));
        }
        Ok(Self { rtol, atol })
    }

    /// `rtol = 1e-12`, `atol = 1e-15`: the regime used with spectral collocation.
    pub fn tight() -> Self {
        Self { rtol: 1e-12, atol: 1e-15 }
    }

    /// `rtol = 1e-7`, `atol = 1e-8`: the regime used with finite differences.
    pub fn moderate() -> Self {
        Self { rtol: 1e-7, atol: 1e-8 }
    }

    fn weight(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }
}

/// Work counters of an integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: u64,
    pub rejected: u64,
    pub rhs_evals: u64,
    pub lin_solves: u64,
    pub factorizations: u64,
}

impl AddAssign for OdeStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.rhs_evals += o.rhs_evals;
        self.lin_solves += o.lin_solves;
        self.factorizations += o.factorizations;
    }
}

const MIN_STEP_FRACTION: f64 = 1e-14;

fn underflow(t: f64, h: f64, t0: f64, t1: f64) -> Result<()> {
    if h < MIN_STEP_FRACTION * (t1 - t0) {
        Err(Error::StepUnderflow { t, h })
    } else {
        Ok(())
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if t1 > t0 && t0.is_finite() && t1.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("integration interval [{t0}, {t1}] is empty")))
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Dopri<F> {
    rhs: F,
    k: [Vec<f64>; 7],
    stage: Vec<f64>,
    evals: u64,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Dopri<F> {
    fn new(rhs: F, n: usize) -> Self {
        Self { rhs, k: std::array::from_fn(|_| vec![0.0; n]), stage: vec![0.0; n], evals: 0 }
    }

    fn eval(&mut self, t: f64, y: &[f64], slot: usize) {
        self.evals += 1;
        (self.rhs)(t, y, &mut self.k[slot]);
    }

    fn combine(&mut self, y: &[f64], h: f64, coeffs: &[(usize, f64)]) {
        for i in 0..y.len() {
            let mut s = 0.0;
            for &(j, a) in coeffs {
                s += a * self.k[j][i];
            }
            self.stage[i] = y[i] + h * s;
        }
    }

    /// One step from `(t, y)` with `k[0] = f(t, y)`; writes the fifth-order
    /// solution to `y_new`, the embedded error to `err`, and leaves
    /// `f(t+h, y_new)` in `k[6]`.
    fn step(&mut self, t: f64, y: &[f64], h: f64, y_new: &mut [f64], err: &mut [f64]) {
        self.combine(y, h, &[(0, A21)]);
        let s = std::mem::take(&mut self.stage);
        self.eval(t + C2 * h, &s, 1);
        self.stage = s;
        let stages: [(f64, &[(usize, f64)], usize); 4] = [
            (C3, &[(0, A31), (1, A32)], 2),
            (C4, &[(0, A41), (1, A42), (2, A43)], 3),
            (C5, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4),
            (1.0, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5),
        ];
        for (c, coeffs, slot) in stages {
            self.combine(y, h, coeffs);
            let s = std::mem::take(&mut self.stage);
            self.eval(t + c * h, &s, slot);
            self.stage = s;
        }
        self.combine(y, h, &[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)]);
        y_new.copy_from_slice(&self.stage);
        self.eval(t + h, y_new, 6);
        for i in 0..y.len() {
            err[i] = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
        }
    }
}

fn scaled_max(err: &[f64], y: &[f64], y_new: &[f64], tol: &ToleranceProfile) -> f64 {
    err.iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| e.abs() / tol.weight(*a, *b))
        .fold(0.0, f64::max)
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1` with Dormand–Prince 5(4)
/// and a PI step-size controller. The last step lands on `t1` exactly.
pub fn integrate_nonstiff<F>(
    rhs: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: &ToleranceProfile,
) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_interval(t0, t1)?;
    let n = y0.len();
    let mut dp = Dopri::new(rhs, n);
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut t = t0;
    dp.eval(t, &y, 0);

    // initial step from the size of y and y' (Hairer, Nørsett, Wanner II.4)
    let sc: Vec<f64> = y.iter().map(|v| tol.weight(*v, *v)).collect();
    let norm = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / n.max(1) as f64).sqrt();
    let d0 = norm(&y);
    let d1 = norm(&dp.k[0]);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(t1 - t0);
    let probe: Vec<f64> = y.iter().zip(&dp.k[0]).map(|(a, f)| a + h0 * f).collect();
    dp.eval(t + h0, &probe, 1);
    let diff: Vec<f64> = dp.k[1].iter().zip(&dp.k[0]).map(|(a, b)| a - b).collect();
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    let mut h = (100.0 * h0).min(h1).min(t1 - t0);

    const BETA: f64 = 0.04;
    const EXPO1: f64 = 0.2 - BETA * 0.75;
    const SAFE: f64 = 0.9;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        underflow(t, h, t0, t1)?;
        let last = t + h * 1.000_000_1 >= t1;
        if last {
            h = t1 - t;
        }
        dp.step(t, &y, h, &mut y_new, &mut err);
        let e = scaled_max(&err, &y, &y_new, tol);
        let fac11 = e.max(1e-300).powf(EXPO1);
        if e <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            dp.k.swap(0, 6);
            if last {
                break;
            }
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFE).clamp(0.1, 5.0);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            facold = e.max(1e-4);
            last_rejected = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h /= (fac11 / SAFE).min(5.0);
        }
        if !e.is_finite() {
            return Err(Error::StepUnderflow { t, h });
        }
    }
    stats.rhs_evals = dp.evals;
    Ok((y, stats))
}

/// Dormand–Prince fifth-order solution with `steps` equal steps.
pub fn dopri5_fixed<F>(rhs: F, t0: f64, y0: &[f64], t1: f64, steps: usize) -> (Vec<f64>, OdeStats)
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut dp = Dopri::new(rhs, n);
    let mut y = y0.to_vec();
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let h = (t1 - t0) / steps as f64;
    dp.eval(t0, &y, 0);
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        dp.step(t, &y, h, &mut y_new, &mut err);
        std::mem::swap(&mut y, &mut y_new);
        dp.k.swap(0, 6);
    }
    let stats = OdeStats { accepted: steps as u64, rhs_evals: dp.evals, ..Default::default() };
    (y, stats)
}

const GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;
const REFACTOR_BAND: f64 = 0.2;

/// Integrates the affine system `v' = A v + source(t)` with adaptive TR-BDF2.
///
/// Both implicit stages share the matrix `I − (γ/2) h A`; it is refactored
/// only after a rejection, for the final step, or when the controller asks
/// for a step more than 20% away from the factored one.
pub fn integrate_affine<S>(
    a: &Operator,
    mut source: S,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: &ToleranceProfile,
) -> Result<(Vec<f64>, OdeStats)>
where
    S: FnMut(f64, &mut [f64]),
{
    check_interval(t0, t1)?;
    let n = y0.len();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::SizeMismatch { expected: a.nrows(), got: n });
    }
    let d = GAMMA / 2.0;
    let w1 = 1.0 / (GAMMA * (2.0 - GAMMA));
    let w0 = (1.0 - GAMMA).powi(2) / (GAMMA * (2.0 - GAMMA));
    let err_const = (-3.0 * GAMMA * GAMMA + 4.0 * GAMMA - 2.0) / (12.0 * (2.0 - GAMMA));

    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut factored: Option<(f64, ShiftedFactor)> = None;

    let mut s_buf = vec![0.0; n];
    let mut f_n = vec![0.0; n];
    source(t, &mut f_n);
    stats.rhs_evals += 1;
    a.apply_add(1.0, &y, &mut f_n);
    let mut y_g = vec![0.0; n];

    // initial step from a finite-difference estimate of y'' (order 2)
    let mut h = {
        let norm = |v: &[f64]| v.iter().zip(&y).map(|(x, yi)| x.abs() / tol.weight(*yi, *yi)).fold(0.0, f64::max);
        let (d0, d1) = (norm(&y), norm(&f_n));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(t1 - t0);
        for i in 0..n {
            y_g[i] = y[i] + h0 * f_n[i];
        }
        source(t + h0, &mut s_buf);
        stats.rhs_evals += 1;
        a.apply_add(1.0, &y_g, &mut s_buf);
        let d2 = s_buf.iter().zip(&f_n).zip(&y).map(|((f1, f0), yi)| (f1 - f0).abs() / tol.weight(*yi, *yi)).fold(0.0, f64::max) / h0;
        let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).cbrt() };
        (100.0 * h0).min(h1).min(t1 - t0)
    };
    let mut y_new = vec![0.0; n];
    let mut f_new = vec![0.0; n];
    let mut est = vec![0.0; n];

    loop {
        underflow(t, h, t0, t1)?;
        let last = t + h * 1.000_000_1 >= t1;
        let h_step = if last { t1 - t } else { h };
        let refactor = match &factored {
            Some((hf, _)) => *hf != h_step,
            None => true,
        };
        if refactor {
            factored = Some((h_step, ShiftedFactor::new(a, 1.0, -d * h_step)?));
            stats.factorizations += 1;
        }
        let lu = &factored.as_ref().unwrap().1;

        // trapezoidal stage to t + γh
        source(t + GAMMA * h_step, &mut s_buf);
        stats.rhs_evals += 1;
        for i in 0..n {
            y_g[i] = y[i] + d * h_step * (f_n[i] + s_buf[i]);
        }
        lu.solve_in_place(&mut y_g)?;
        // BDF2 stage to t + h
        source(t + h_step, &mut s_buf);
        stats.rhs_evals += 1;
        for i in 0..n {
            y_new[i] = w1 * y_g[i] - w0 * y[i] + d * h_step * s_buf[i];
        }
        lu.solve_in_place(&mut y_new)?;
        stats.lin_solves += 2;

        f_new.copy_from_slice(&s_buf);
        a.apply_add(1.0, &y_new, &mut f_new);
        // second divided difference of f over (t, t+γh, t+h), filtered by the iteration matrix
        for i in 0..n {
            let f_g = (y_g[i] - y[i]) / (d * h_step) - f_n[i];
            let f01 = (f_g - f_n[i]) / (GAMMA * h_step);
            let f12 = (f_new[i] - f_g) / ((1.0 - GAMMA) * h_step);
            est[i] = 2.0 * err_const * h_step * h_step * (f12 - f01);
        }
        lu.solve_in_place(&mut est)?;
        stats.lin_solves += 1;
        let e = scaled_max(&est, &y, &y_new, tol);
        if !e.is_finite() {
            return Err(Error::StepUnderflow { t, h: h_step });
        }

        let ratio = (0.9 * e.max(1e-12).powf(-1.0 / 3.0)).clamp(0.2, 5.0);
        if e <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + h_step };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut f_n, &mut f_new);
            if last {
                break;
            }
            if (ratio - 1.0).abs() > REFACTOR_BAND {
                h = h_step * ratio;
            }
        } else {
            stats.rejected += 1;
            h = h_step * ratio.min(0.8);
        }
    }
    Ok((y, stats))
}

/// Integrates `v' = A_h0 v + C_h g(t) + forcing(t)` on the interior nodes of `d`.
pub fn integrate_stiff_linear<F, G>(
    d: &Discretization,
    mut forcing: F,
    mut g: G,
    t0: f64,
    y0: &[f64],
    t1: f64,
    tol: &ToleranceProfile,
) -> Result<(Vec<f64>, OdeStats)>
where
    F: FnMut(f64) -> Vec<f64>,
    G: FnMut(f64) -> BoundaryTrace,
{
    let c = d.c_h();
    let nb = d.boundary_count();
    let mut failure = None;
    let source = |t: f64, out: &mut [f64]| {
        let f = forcing(t);
        let gt = g(t);
        if f.len() != out.len() || gt.len() != nb {
            failure.get_or_insert(Error::SizeMismatch {
                expected: out.len(),
                got: if f.len() != out.len() { f.len() } else { gt.len() },
            });
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        out.copy_from_slice(&f);
        c.apply_add(1.0, &gt, out);
    };
    let result = integrate_affine(d.a_h0(), source, t0, y0, t1, tol);
    match failure {
        Some(e) => Err(e),
        None => result,
    }
}
