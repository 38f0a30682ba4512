#![allow(dead_code)]

use strang_split::integrators::integrate_nonstiff;
use strang_split::prelude::*;

/// Plain Strang splitting: reaction half steps with `f`, and a diffusion
/// step that only sees the boundary data frozen at the midpoint.
pub fn naive_strang_step(
    p: &dyn Problem,
    d: &Discretization,
    ev: &PhiEvaluator,
    state: &[f64],
    t_n: f64,
    k: f64,
    tol: &ToleranceProfile,
) -> Result<Vec<f64>> {
    let nodes = d.interior_nodes();
    let dim = p.dim();
    let reaction = |t: f64, w: &[f64], dw: &mut [f64]| {
        for ((dv, wv), x) in dw.iter_mut().zip(w).zip(nodes) {
            *dv = p.reaction(t, &x[..dim], *wv);
        }
    };
    let mid = t_n + 0.5 * k;
    let (v, _) = integrate_nonstiff(reaction, t_n, state, mid, tol)?;
    let g = boundary_trace(p, d, TraceQuantity::G, mid, None)?;
    let w = ev.phi_combination_boundary(&v, [Some(&g), None, None])?;
    let (u, _) = integrate_nonstiff(reaction, mid, &w, t_n + k, tol)?;
    Ok(u)
}

pub fn naive_strang_solution(p: &dyn Problem, d: &Discretization, k: f64, tol: &ToleranceProfile) -> Result<Vec<f64>> {
    let ev = PhiEvaluator::new(d, PhiStrategy::Dense, k)?;
    let steps = (p.horizon() / k).round() as usize;
    let mut u = initial_state(p, d);
    for n in 0..steps {
        u = naive_strang_step(p, d, &ev, &u, n as f64 * k, k, tol)?;
    }
    Ok(u)
}

pub fn naive_strang_error(p: &dyn Problem, d: &Discretization, k: f64, tol: &ToleranceProfile) -> Result<f64> {
    let u = naive_strang_solution(p, d, k, tol)?;
    max_error(&u, d, p, p.horizon())
}

/// Least-squares slope of log `e` against log `k`.
pub fn loglog_slope(k: &[f64], e: &[f64]) -> f64 {
    let n = k.len() as f64;
    let xs: Vec<f64> = k.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Double-double arithmetic, enough for a φ-function reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let (hi, lo) = quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::from(q3))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// `e^z` by halving until `|z| < 2^-10`, a Taylor series, and squaring back.
pub fn dd_exp(z: f64) -> Dd {
    if z < -800.0 {
        return Dd::ZERO;
    }
    let mut s = 0;
    let mut r = z;
    while r.abs() > 1.0 / 1024.0 {
        r /= 2.0;
        s += 1;
    }
    let r = Dd::from(r);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    for i in 1..20 {
        term = term.mul(r).div(Dd::from(i as f64));
        sum = sum.add(term);
    }
    for _ in 0..s {
        sum = sum.mul(sum);
    }
    sum
}

/// Reference `φ_j(z)` in double-double: Taylor series for `|z| ≤ 1`,
/// `(e^z − Σ_{i<j} z^i/i!)/z^j` otherwise.
pub fn phi_reference(j: usize, z: f64) -> f64 {
    let zd = Dd::from(z);
    if z.abs() <= 1.0 {
        // Σ z^i / (i+j)!
        let mut fact = Dd::ONE;
        for i in 1..=j {
            fact = fact.mul(Dd::from(i as f64));
        }
        let mut term = Dd::ONE.div(fact);
        let mut sum = term;
        for i in 1..60 {
            term = term.mul(zd).div(Dd::from((i + j) as f64));
            sum = sum.add(term);
        }
        return sum.to_f64();
    }
    let mut poly = Dd::ZERO;
    let mut term = Dd::ONE;
    let mut zj = Dd::ONE;
    for i in 0..j {
        poly = poly.add(term);
        term = term.mul(zd).div(Dd::from((i + 1) as f64));
        zj = zj.mul(zd);
    }
    dd_exp(z).sub(poly).div(zj).to_f64()
}
