//! Convergence and efficiency sweeps over (scheme, step size) grids.
//!
//! A [`SweepConfig`] names a problem, a grid, a list of schemes with their
//! step sizes, and integrator settings. [`run_sweep`] produces one
//! [`RunRecord`] per (scheme, k) in a deterministic order. Records round-trip
//! through CSV with a fixed header.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::discretization::{DiscKind, Discretization};
use crate::error::{Error, Result};
use crate::expfuncs::{PhiEvaluator, PhiStrategy, DEFAULT_KRYLOV_MAX_BASIS, DEFAULT_KRYLOV_TOL};
use crate::integrators::ToleranceProfile;
use crate::problems::{builtin_problem, initial_state, max_error, ProblemId};
use crate::schemes::{integrate, step_count, SchemeId};

/// Environment variable capping worker threads for untimed sweeps.
pub const THREADS_ENV: &str = "STRANG_BENCH_THREADS";

pub const CSV_HEADER: [&str; 11] = [
    "scheme",
    "problem",
    "disc",
    "resolution",
    "k",
    "max_error",
    "wall_seconds",
    "setup_seconds",
    "steps",
    "rhs_evals",
    "lin_solves",
];

const FAILED_PREFIX: &str = "failed: ";

/// Step sizes for one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRuns {
    pub scheme: SchemeId,
    pub steps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub problem: ProblemId,
    pub disc: DiscKind,
    /// Interior nodes per axis for spectral grids, mesh width for finite differences.
    pub resolution: f64,
    pub runs: Vec<SchemeRuns>,
    pub tol: ToleranceProfile,
    pub phi: PhiStrategy,
    /// Timed repetitions per point; the median wall time is reported.
    pub repetitions: usize,
    /// Untimed sweeps may run points concurrently.
    pub timed: bool,
    pub out: Option<PathBuf>,
}

fn halvings(first: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| first / f64::powi(2.0, i as i32)).collect()
}

fn runs(entries: &[(&[SchemeId], &[f64])]) -> Vec<SchemeRuns> {
    entries
        .iter()
        .flat_map(|(ids, steps)| ids.iter().map(|&scheme| SchemeRuns { scheme, steps: steps.to_vec() }))
        .collect()
}

impl SweepConfig {
    pub const PRESETS: [&'static str; 4] = ["fig1", "fig2", "fig3", "fig4"];

    /// The step-size studies shipped with the harness.
    pub fn preset(name: &str) -> Result<Self> {
        use SchemeId::*;
        let cfg = |problem, disc, resolution, runs, tol, phi| SweepConfig {
            problem,
            disc,
            resolution,
            runs,
            tol,
            phi,
            repetitions: 3,
            timed: true,
            out: None,
        };
        let eo: &[SchemeId] = &[EO1, EO2];
        let acr: &[SchemeId] = &[ACR1, ACR2];
        Ok(match name.trim().to_ascii_lowercase().as_str() {
            "fig1" => cfg(
                ProblemId::P1D,
                DiscKind::Spectral1D,
                16.0,
                runs(&[(eo, &halvings(1e-3, 5)), (acr, &halvings(1e-3, 6))]),
                ToleranceProfile::tight(),
                PhiStrategy::Dense,
            ),
            "fig2" => cfg(
                ProblemId::P2DA,
                DiscKind::Spectral2D,
                16.0,
                runs(&[(eo, &halvings(2e-2, 7)), (acr, &halvings(2.5e-3, 8))]),
                ToleranceProfile::tight(),
                PhiStrategy::Dense,
            ),
            "fig3" => cfg(
                ProblemId::P1D,
                DiscKind::FD1D,
                5e-4,
                runs(&[
                    (&[EO1], &halvings(1e-3, 3)),
                    (&[EO2], &halvings(1e-3, 2)),
                    (&[EO2ND], &halvings(2e-3, 2)),
                    (&[ACR1, ACR2, ACR2ND], &halvings(1e-3, 4)),
                ]),
                ToleranceProfile::moderate(),
                PhiStrategy::Dst,
            ),
            "fig4" => cfg(
                ProblemId::P2DB,
                DiscKind::FD2D,
                2e-2,
                runs(&[(eo, &halvings(1e-2, 5)), (acr, &halvings(1.25e-3, 5))]),
                ToleranceProfile::moderate(),
                PhiStrategy::krylov_default(),
            ),
            other => return Err(Error::InvalidInput(format!("unknown preset '{other}'"))),
        })
    }

    /// Builds a config from `key = value` settings applied in order.
    ///
    /// Recognised keys: `preset`, `problem`, `disc` (`spectral` or `fd`),
    /// `resolution` (alias `nodes`, `h`), `schemes`, `stepsizes`,
    /// `stepsizes.<scheme>`, `rtol`, `atol`, `phi`, `krylov_tol`,
    /// `krylov_max_basis`, `repetitions`, `timed`, `out`. A `preset` entry is
    /// applied first wherever it appears.
    pub fn from_settings(settings: &[(String, String)]) -> Result<Self> {
        let preset = settings.iter().rev().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str());
        let mut b = match preset {
            Some(name) => Builder::from(Self::preset(name)?),
            None => Builder::default(),
        };
        for (key, value) in settings.iter().filter(|(k, _)| k != "preset") {
            b.set(key, value)?;
        }
        b.finish()
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1))
            })?;
            out.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        Ok(out)
    }

    /// File settings first, then `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut settings = match path {
            Some(p) => Self::parse_settings(&fs::read_to_string(p)?)?,
            None => Vec::new(),
        };
        settings.extend_from_slice(overrides);
        Self::from_settings(&settings)
    }

    pub fn validate(&self) -> Result<()> {
        let p = builtin_problem(self.problem);
        if p.dim() != self.disc.dim() {
            return Err(Error::InvalidInput(format!("{} is {}D but {} is {}D", self.problem, p.dim(), self.disc, self.disc.dim())));
        }
        if self.disc.is_spectral() && self.phi == PhiStrategy::Dst {
            return Err(Error::Unsupported("the sine transform needs a finite-difference grid".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidInput("repetitions must be at least 1".into()));
        }
        if self.runs.is_empty() {
            return Err(Error::InvalidInput("no schemes selected".into()));
        }
        for r in &self.runs {
            if r.scheme.is_nd() && self.disc != DiscKind::FD1D {
                return Err(Error::Unsupported(format!("{} needs a 1D finite-difference grid", r.scheme)));
            }
            if r.steps.is_empty() {
                return Err(Error::InvalidInput(format!("no step sizes for {}", r.scheme)));
            }
            if r.steps.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::InvalidInput(format!("step sizes for {} must be strictly decreasing", r.scheme)));
            }
            for &k in &r.steps {
                step_count(p.horizon(), k)?;
            }
        }
        Ok(())
    }

    /// Number of (scheme, k) points.
    pub fn point_count(&self) -> usize {
        self.runs.iter().map(|r| r.steps.len()).sum()
    }
}

#[derive(Debug, Default)]
struct Builder {
    problem: Option<ProblemId>,
    family: Option<String>,
    resolution: Option<f64>,
    schemes: Option<Vec<SchemeId>>,
    steps: Option<Vec<f64>>,
    per_scheme: BTreeMap<SchemeId, Vec<f64>>,
    rtol: Option<f64>,
    atol: Option<f64>,
    phi: Option<String>,
    krylov_tol: Option<f64>,
    krylov_max_basis: Option<usize>,
    repetitions: Option<usize>,
    timed: Option<bool>,
    out: Option<PathBuf>,
}

impl From<SweepConfig> for Builder {
    fn from(c: SweepConfig) -> Self {
        let (phi, krylov_tol, krylov_max_basis) = match c.phi {
            PhiStrategy::Krylov { tol, max_basis } => ("krylov".to_string(), Some(tol), Some(max_basis)),
            other => (other.name().to_string(), None, None),
        };
        Builder {
            problem: Some(c.problem),
            family: Some(c.disc.family().to_string()),
            resolution: Some(c.resolution),
            schemes: Some(c.runs.iter().map(|r| r.scheme).collect()),
            steps: None,
            per_scheme: c.runs.into_iter().map(|r| (r.scheme, r.steps)).collect(),
            rtol: Some(c.tol.rtol),
            atol: Some(c.tol.atol),
            phi: Some(phi),
            krylov_tol,
            krylov_max_basis,
            repetitions: Some(c.repetitions),
            timed: Some(c.timed),
            out: c.out,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::InvalidInput(format!("{key}: cannot parse '{v}'")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split([',', ' ']).filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidInput(format!("{key}: expected a boolean, got '{v}'"))),
    }
}

impl Builder {
    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "problem" => self.problem = Some(v.parse()?),
            "disc" => {
                let family = v.trim().to_ascii_lowercase();
                if family != "spectral" && family != "fd" {
                    return Err(Error::InvalidInput(format!("disc must be 'spectral' or 'fd', got '{v}'")));
                }
                if self.family.as_deref() != Some(family.as_str()) {
                    self.resolution = None;
                }
                self.family = Some(family);
            }
            "resolution" | "nodes" | "h" => self.resolution = Some(parse_num(key, v)?),
            "schemes" | "scheme" => self.schemes = Some(parse_list(key, v)?),
            "stepsizes" | "k" => self.steps = Some(parse_list(key, v)?),
            "rtol" => self.rtol = Some(parse_num(key, v)?),
            "atol" => self.atol = Some(parse_num(key, v)?),
            "phi" => self.phi = Some(v.trim().to_ascii_lowercase()),
            "krylov_tol" => self.krylov_tol = Some(parse_num(key, v)?),
            "krylov_max_basis" => self.krylov_max_basis = Some(parse_num(key, v)?),
            "repetitions" => self.repetitions = Some(parse_num(key, v)?),
            "timed" => self.timed = Some(parse_bool(key, v)?),
            "out" => self.out = Some(PathBuf::from(v.trim())),
            _ => match key.strip_prefix("stepsizes.") {
                Some(s) => {
                    self.per_scheme.insert(s.parse()?, parse_list(key, v)?);
                }
                None => return Err(Error::InvalidInput(format!("unknown setting '{key}'"))),
            },
        }
        Ok(())
    }

    fn finish(self) -> Result<SweepConfig> {
        let problem = self.problem.ok_or_else(|| Error::InvalidInput("no problem given".into()))?;
        let dim = builtin_problem(problem).dim();
        let family = self.family.unwrap_or_else(|| "spectral".into());
        let disc = DiscKind::from_family(&family, dim)?;
        let resolution = self.resolution.unwrap_or(if disc.is_spectral() { 16.0 } else { 0.01 });
        let schemes = match self.schemes {
            Some(s) => s,
            None if self.per_scheme.is_empty() => {
                SchemeId::ALL.into_iter().filter(|s| !s.is_nd() || disc == DiscKind::FD1D).collect()
            }
            None => self.per_scheme.keys().copied().collect(),
        };
        let runs = schemes
            .into_iter()
            .map(|scheme| {
                let steps = self
                    .steps
                    .clone()
                    .or_else(|| self.per_scheme.get(&scheme).cloned())
                    .ok_or_else(|| Error::InvalidInput(format!("no step sizes for {scheme}")))?;
                Ok(SchemeRuns { scheme, steps })
            })
            .collect::<Result<Vec<_>>>()?;
        let defaults = if disc.is_spectral() { ToleranceProfile::tight() } else { ToleranceProfile::moderate() };
        let tol = ToleranceProfile::new(self.rtol.unwrap_or(defaults.rtol), self.atol.unwrap_or(defaults.atol))?;
        let phi = match self.phi.as_deref().unwrap_or("dense") {
            "krylov" => PhiStrategy::Krylov {
                tol: self.krylov_tol.unwrap_or(DEFAULT_KRYLOV_TOL),
                max_basis: self.krylov_max_basis.unwrap_or(DEFAULT_KRYLOV_MAX_BASIS),
            },
            other => other.parse()?,
        };
        let cfg = SweepConfig {
            problem,
            disc,
            resolution,
            runs,
            tol,
            phi,
            repetitions: self.repetitions.unwrap_or(3),
            timed: self.timed.unwrap_or(true),
            out: self.out,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One (scheme, k) result.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scheme: SchemeId,
    pub problem: ProblemId,
    pub disc: DiscKind,
    pub resolution: f64,
    pub k: f64,
    /// Interior max-norm error at the horizon; NaN for failed runs.
    pub max_error: f64,
    /// Median trajectory time, evaluator construction excluded.
    pub wall_seconds: f64,
    pub setup_seconds: f64,
    pub steps: usize,
    pub rhs_evals: u64,
    pub lin_solves: u64,
    pub failure: Option<String>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    fn fields(&self) -> [String; 11] {
        let err = match &self.failure {
            Some(msg) => format!("{FAILED_PREFIX}{}", msg.replace(['\n', '\r'], " ")),
            None => self.max_error.to_string(),
        };
        [
            self.scheme.to_string(),
            self.problem.to_string(),
            self.disc.to_string(),
            self.resolution.to_string(),
            self.k.to_string(),
            err,
            self.wall_seconds.to_string(),
            self.setup_seconds.to_string(),
            self.steps.to_string(),
            self.rhs_evals.to_string(),
            self.lin_solves.to_string(),
        ]
    }

    fn from_fields(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != CSV_HEADER.len() {
            return Err(Error::InvalidInput(format!("expected {} columns, got {}", CSV_HEADER.len(), rec.len())));
        }
        let (max_error, failure) = match rec[5].strip_prefix(FAILED_PREFIX) {
            Some(msg) => (f64::NAN, Some(msg.to_string())),
            None => (parse_num("max_error", &rec[5])?, None),
        };
        Ok(RunRecord {
            scheme: rec[0].parse()?,
            problem: rec[1].parse()?,
            disc: rec[2].parse()?,
            resolution: parse_num("resolution", &rec[3])?,
            k: parse_num("k", &rec[4])?,
            max_error,
            wall_seconds: parse_num("wall_seconds", &rec[6])?,
            setup_seconds: parse_num("setup_seconds", &rec[7])?,
            steps: parse_num("steps", &rec[8])?,
            rhs_evals: parse_num("rhs_evals", &rec[9])?,
            lin_solves: parse_num("lin_solves", &rec[10])?,
            failure,
        })
    }
}

pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::InvalidInput(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    r.records().map(|rec| RunRecord::from_fields(&rec?)).collect()
}

pub fn write_csv_file(records: &[RunRecord], path: &Path) -> Result<()> {
    write_csv(records, fs::File::create(path)?)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<RunRecord>> {
    read_csv(fs::File::open(path)?)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2
    }
}

fn run_point(
    cfg: &SweepConfig,
    scheme: SchemeId,
    k: f64,
    disc: &Discretization,
    setup_hook: &(dyn Fn(SchemeId, f64) + Sync),
) -> RunRecord {
    let p = builtin_problem(cfg.problem);
    let mut rec = RunRecord {
        scheme,
        problem: cfg.problem,
        disc: cfg.disc,
        resolution: cfg.resolution,
        k,
        max_error: f64::NAN,
        wall_seconds: 0.0,
        setup_seconds: 0.0,
        steps: 0,
        rhs_evals: 0,
        lin_solves: 0,
        failure: None,
    };
    let outcome = (|| -> Result<()> {
        let setup = Instant::now();
        let ev = match scheme.evaluator_step(k) {
            Some(kk) => Some(PhiEvaluator::new(disc, cfg.phi, kk)?),
            None => None,
        };
        setup_hook(scheme, k);
        rec.setup_seconds = setup.elapsed().as_secs_f64();

        let u0 = initial_state(p.as_ref(), disc);
        let reps = if cfg.timed { cfg.repetitions } else { 1 };
        let mut walls = Vec::with_capacity(reps);
        let mut last = None;
        for _ in 0..reps {
            let start = Instant::now();
            let traj = integrate(scheme, p.as_ref(), disc, ev.as_ref(), &u0, k, &cfg.tol)?;
            walls.push(start.elapsed());
            last = Some(traj);
        }
        let traj = last.expect("at least one repetition");
        rec.wall_seconds = median(walls).as_secs_f64();
        rec.steps = traj.steps;
        rec.rhs_evals = traj.stats.rhs_evals;
        rec.lin_solves = traj.stats.lin_solves;
        rec.max_error = max_error(&traj.state, disc, p.as_ref(), p.horizon())?;
        Ok(())
    })();
    if let Err(e) = outcome {
        log::warn!("{scheme} at k = {k} failed: {e}");
        rec.max_error = f64::NAN;
        rec.failure = Some(e.to_string());
    }
    rec
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

/// Runs every (scheme, k) point of `cfg`. Rows follow the config order.
/// Failed points are kept as rows with [`RunRecord::failure`] set.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<RunRecord>> {
    run_sweep_with_hook(cfg, &|_, _| {})
}

/// [`run_sweep`] with a callback invoked inside the setup timing window of
/// every point, after the evaluator is built.
pub fn run_sweep_with_hook(cfg: &SweepConfig, setup_hook: &(dyn Fn(SchemeId, f64) + Sync)) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let disc = Discretization::build(cfg.disc, cfg.resolution)?;
    let points: Vec<(SchemeId, f64)> =
        cfg.runs.iter().flat_map(|r| r.steps.iter().map(move |&k| (r.scheme, k))).collect();
    if cfg.timed {
        return Ok(points.iter().map(|&(s, k)| run_point(cfg, s, k, &disc, setup_hook)).collect());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    Ok(pool.install(|| points.par_iter().map(|&(s, k)| run_point(cfg, s, k, &disc, setup_hook)).collect()))
}

/// Slopes of log error against log k.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    /// Slopes between consecutive step sizes, largest k first.
    pub pairwise: Vec<f64>,
    /// Least-squares slope over all usable points.
    pub regression: f64,
    /// Points dropped for a zero, negative or NaN error.
    pub excluded: usize,
}

pub fn observed_order(records: &[RunRecord]) -> Result<OrderReport> {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut excluded = 0;
    for r in records {
        if r.max_error > 0.0 && r.max_error.is_finite() && r.k > 0.0 {
            pts.push((r.k, r.max_error));
        } else {
            log::warn!("{} at k = {}: error {} excluded from order fit", r.scheme, r.k, r.max_error);
            excluded += 1;
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidInput(format!("need at least two usable points, got {}", pts.len())));
    }
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let pairwise = pts.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(k, e)| (k.ln(), e.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all step sizes are equal".into()));
    }
    Ok(OrderReport { pairwise, regression: sxy / sxx, excluded })
}

/// Records grouped by scheme, in first-appearance order.
pub fn by_scheme(records: &[RunRecord]) -> Vec<(SchemeId, Vec<RunRecord>)> {
    let mut out: Vec<(SchemeId, Vec<RunRecord>)> = Vec::new();
    for r in records {
        match out.iter_mut().find(|(s, _)| *s == r.scheme) {
            Some((_, v)) => v.push(r.clone()),
            None => out.push((r.scheme, vec![r.clone()])),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRanking {
    /// The smallest error reached by every scheme.
    pub error_level: f64,
    /// Wall seconds needed to reach `error_level`, fastest first.
    pub entries: Vec<(SchemeId, f64)>,
}

impl fmt::Display for EfficiencyRanking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ranking at error {:.3e}:", self.error_level)?;
        for (i, (s, w)) in self.entries.iter().enumerate() {
            writeln!(f, "  {}. {s:<7} {w:.4e} s", i + 1)?;
        }
        Ok(())
    }
}

// Wall time at `level` by log-log interpolation along the k-ordered runs.
fn wall_at(runs: &[(f64, f64, f64)], level: f64) -> f64 {
    let (le, lw) = (level.ln(), |w: f64| w.max(1e-9).ln());
    for w in runs.windows(2) {
        let ((_, e0, t0), (_, e1, t1)) = (w[0], w[1]);
        let (lo, hi) = (e0.min(e1), e0.max(e1));
        if lo <= level && level <= hi {
            if e0 == e1 {
                return t0.min(t1);
            }
            let s = (le - e0.ln()) / (e1.ln() - e0.ln());
            return (lw(t0) + s * (lw(t1) - lw(t0))).exp();
        }
    }
    // Every run is already at or below the level: the cheapest one qualifies.
    runs.iter()
        .filter(|r| r.1 <= level)
        .map(|r| r.2)
        .fold(f64::INFINITY, f64::min)
}

/// Ranks schemes by the wall time needed to reach the smallest error level
/// attained by all of them.
pub fn efficiency_ranking(records: &[RunRecord]) -> Result<EfficiencyRanking> {
    let groups: Vec<(SchemeId, Vec<(f64, f64, f64)>)> = by_scheme(records)
        .into_iter()
        .map(|(s, rs)| {
            let mut pts: Vec<(f64, f64, f64)> = rs
                .iter()
                .filter(|r| !r.failed() && r.max_error > 0.0 && r.max_error.is_finite())
                .map(|r| (r.k, r.max_error, r.wall_seconds))
                .collect();
            pts.sort_by(|a, b| b.0.total_cmp(&a.0));
            (s, pts)
        })
        .collect();
    if groups.is_empty() {
        return Err(Error::InvalidInput("no records".into()));
    }
    if let Some((s, _)) = groups.iter().find(|(_, p)| p.is_empty()) {
        return Err(Error::InvalidInput(format!("{s} has no usable runs")));
    }
    let level = groups
        .iter()
        .map(|(_, p)| p.iter().map(|r| r.1).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let mut entries: Vec<(SchemeId, f64)> = groups.iter().map(|(s, p)| (*s, wall_at(p, level))).collect();
    entries.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(EfficiencyRanking { error_level: level, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn record(scheme: SchemeId, k: f64, err: f64, wall: f64) -> RunRecord {
        RunRecord {
            scheme,
            problem: ProblemId::P1D,
            disc: DiscKind::FD1D,
            resolution: 0.01,
            k,
            max_error: err,
            wall_seconds: wall,
            setup_seconds: 0.0,
            steps: (0.2 / k).round() as usize,
            rhs_evals: 10,
            lin_solves: 3,
            failure: None,
        }
    }

    #[test]
    fn presets_are_valid() {
        for name in SweepConfig::PRESETS {
            let c = SweepConfig::preset(name).unwrap();
            c.validate().unwrap();
        }
        let c = SweepConfig::preset("fig2").unwrap();
        let acr = c.runs.iter().find(|r| r.scheme == SchemeId::ACR2).unwrap();
        assert_eq!(*acr.steps.last().unwrap(), 1.953125e-5);
        assert_eq!(SweepConfig::preset("fig1").unwrap().point_count(), 22);
        assert!(SweepConfig::preset("fig9").is_err());
    }

    #[test]
    fn settings_override_preset() {
        let text = "preset = fig1\n# comment\nschemes = acr2, eo1\nstepsizes = 1e-2, 5e-3\n";
        let mut s = SweepConfig::parse_settings(text).unwrap();
        s.push(("rtol".into(), "1e-9".into()));
        let c = SweepConfig::from_settings(&s).unwrap();
        assert_eq!(c.problem, ProblemId::P1D);
        assert_eq!(c.runs.len(), 2);
        assert_eq!(c.runs[0].steps, vec![1e-2, 5e-3]);
        assert_eq!(c.tol.rtol, 1e-9);
        assert_eq!(c.tol.atol, 1e-15);
    }

    #[test]
    fn switching_family_resets_resolution() {
        let s: Vec<(String, String)> =
            [("preset", "fig1"), ("disc", "fd"), ("phi", "dst")].iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let c = SweepConfig::from_settings(&s).unwrap();
        assert_eq!(c.disc, DiscKind::FD1D);
        assert_eq!(c.resolution, 0.01);
    }

    #[test]
    fn invalid_settings_rejected() {
        let bad = |pairs: &[(&str, &str)]| {
            let s: Vec<(String, String)> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
            SweepConfig::from_settings(&s).is_err()
        };
        assert!(bad(&[("problem", "p1d"), ("stepsizes", "1e-3, 2e-3")]));
        assert!(bad(&[("problem", "p1d"), ("stepsizes", "3e-2")]));
        assert!(bad(&[("problem", "p1d"), ("stepsizes", "1e-2"), ("phi", "dst")]));
        assert!(bad(&[("problem", "p2db"), ("disc", "fd"), ("h", "0.1"), ("schemes", "eo2nd"), ("stepsizes", "1e-2")]));
        assert!(bad(&[("problem", "p1d"), ("colour", "red")]));
        assert!(bad(&[("stepsizes", "1e-2")]));
        assert!(SweepConfig::parse_settings("no equals sign").is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut recs = vec![
            record(SchemeId::ACR2, 1e-3, 1.234_567_890_123_456_7e-7, 0.1 + 0.2),
            record(SchemeId::EO2ND, 2e-3, 3.0e-300, 1e-9),
        ];
        recs[1].failure = Some("step size underflow, at t=0.1".into());
        recs[1].max_error = f64::NAN;
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&CSV_HEADER.join(",")));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0], recs[0]);
        assert_eq!(back[1].failure, recs[1].failure);
        assert!(back[1].max_error.is_nan());
    }

    #[test]
    fn read_rejects_foreign_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn order_arithmetic() {
        let r = observed_order(&[record(SchemeId::EO1, 1e-3, 1e-4, 1.0), record(SchemeId::EO1, 5e-4, 2.5e-5, 1.0)])
            .unwrap();
        assert!((r.regression - 2.0).abs() < 1e-12);
        assert!((r.pairwise[0] - 2.0).abs() < 1e-12);
        let flat: Vec<RunRecord> = [1e-3, 5e-4, 2.5e-4].iter().map(|&k| record(SchemeId::EO1, k, 1e-5, 1.0)).collect();
        assert!(observed_order(&flat).unwrap().regression.abs() < 1e-12);
        let mut with_zero = flat.clone();
        with_zero[0].max_error = 0.0;
        assert_eq!(observed_order(&with_zero).unwrap().excluded, 1);
        assert!(observed_order(&with_zero[..2]).is_err());
    }

    #[test]
    fn ranking_interpolates_at_common_level() {
        // fast: error 1e-4 at 1s, 1e-6 at 10s; slow: error 1e-4 at 10s, 1e-5 at 100s
        let recs = vec![
            record(SchemeId::ACR2, 1e-2, 1e-4, 1.0),
            record(SchemeId::ACR2, 1e-3, 1e-6, 10.0),
            record(SchemeId::EO1, 1e-2, 1e-4, 10.0),
            record(SchemeId::EO1, 1e-3, 1e-5, 100.0),
        ];
        let r = efficiency_ranking(&recs).unwrap();
        assert_eq!(r.error_level, 1e-5);
        assert_eq!(r.entries[0].0, SchemeId::ACR2);
        assert!((r.entries[0].1 - 10f64.sqrt()).abs() < 1e-9);
        assert!((r.entries[1].1 - 100.0).abs() < 1e-9);
    }

    #[test]
    fn sweep_rows_and_timing_exclusion() {
        let cfg = SweepConfig {
            problem: ProblemId::P1D,
            disc: DiscKind::FD1D,
            resolution: 0.05,
            runs: vec![
                SchemeRuns { scheme: SchemeId::ACR2, steps: vec![0.02, 0.01] },
                SchemeRuns { scheme: SchemeId::EO1, steps: vec![0.01] },
            ],
            tol: ToleranceProfile::moderate(),
            phi: PhiStrategy::Dst,
            repetitions: 1,
            timed: true,
            out: None,
        };
        let calls = AtomicUsize::new(0);
        let pause = Duration::from_millis(30);
        let recs = run_sweep_with_hook(&cfg, &|_, _| {
            calls.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(pause);
        })
        .unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        let order: Vec<(SchemeId, f64)> = recs.iter().map(|r| (r.scheme, r.k)).collect();
        assert_eq!(order, vec![(SchemeId::ACR2, 0.02), (SchemeId::ACR2, 0.01), (SchemeId::EO1, 0.01)]);
        for r in &recs {
            assert!(!r.failed(), "{r:?}");
            assert!(r.setup_seconds >= pause.as_secs_f64());
            assert!(r.max_error > 0.0 && r.max_error < 5e-2, "{r:?}");
        }
        // the pause sits in the setup window, so it must not leak into the trajectory time
        let untimed = SweepConfig { timed: false, ..cfg.clone() };
        let plain = run_sweep(&untimed).unwrap();
        for (a, b) in recs.iter().zip(&plain) {
            assert_eq!(a.max_error.to_bits(), b.max_error.to_bits());
            assert!(a.wall_seconds < a.setup_seconds + b.wall_seconds * 10.0);
        }
    }
}
