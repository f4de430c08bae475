//! Random instances, direction sweeps and the inequality checks built on
//! them, with Monte Carlo cross-checks and report output.

mod oracle;
mod report;
mod sweep;

pub use oracle::{mc_oracle, McEstimate, OracleTarget, Quantity};
pub use report::{emit_report, CheckKind, ReportFormat, SkipRecord, Summary, TrialRow, VerificationReport};
pub use sweep::{direction_grid, sweep_min, SweepConfig, SweepResult};

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::{functional_bound, grunbaum_bound, theorem_bound};
use crate::gammafn::GammaFunction;
use crate::geom::{random_gaussian, random_unit, Subspace, Vector};
use crate::polytope::{Halfspace, VPolytope};
use crate::transforms::{ratio_from, transform_chain, ChainRatios};

#[cfg(test)]
mod tests;

const BODY_RETRIES: usize = 10;
const BODY_CENTER_TOL: f64 = 1e-10;
const FUNCTION_CENTER_TOL: f64 = 1e-8;
const RECENTER_STEPS: usize = 40;

/// Parameters of a randomized verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n: usize,
    pub k: usize,
    pub gamma: Option<f64>,
    pub num_bodies: usize,
    /// Points per random body; `None` picks 2n + 4.
    pub num_points: Option<usize>,
    pub seed: u64,
    pub theta_grid_size: usize,
    /// Random k-frames E per instance (ignored when k = n).
    pub frames: usize,
    pub refine_iters: usize,
    /// Monte Carlo samples for the per-trial cross-check; 0 disables it.
    pub mc_samples: usize,
    pub tolerance: f64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            n: 3,
            k: 2,
            gamma: None,
            num_bodies: 200,
            num_points: None,
            seed: 42,
            theta_grid_size: 64,
            frames: 3,
            refine_iters: 40,
            mc_samples: 0,
            tolerance: 1e-6,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self, check: CheckKind) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got n = {}, k = {}", self.n, self.k)));
        }
        if check.needs_gamma() {
            match self.gamma {
                Some(g) if g > 0.0 && g.is_finite() => {}
                _ => return Err(Error::InvalidParameter("this check needs a finite γ > 0".into())),
            }
        }
        if matches!(check, CheckKind::Chain) && self.n < 2 {
            return Err(Error::InvalidParameter("the transform chain needs n ≥ 2".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be nonnegative".into()));
        }
        if self.theta_grid_size == 0 {
            return Err(Error::InvalidParameter("theta grid must be nonempty".into()));
        }
        if let Some(p) = self.num_points {
            if p < self.n + 1 {
                return Err(Error::InvalidParameter(format!("need at least n + 1 = {} points", self.n + 1)));
            }
        }
        Ok(())
    }

    pub fn sweep(&self) -> SweepConfig {
        SweepConfig { frames: self.frames.max(1), theta_grid: self.theta_grid_size, refine_iters: self.refine_iters }
    }

    fn points(&self) -> usize {
        self.num_points.unwrap_or(2 * self.n + 4)
    }
}

/// Seed for trial `index` of a run with master seed `seed`.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.random()
}

/// Hull of `num_points` Gaussian points, translated so g(K) = o.
pub fn random_body(n: usize, num_points: usize, seed: u64) -> Result<VPolytope> {
    if n == 0 || num_points < n + 1 {
        return Err(Error::InvalidParameter(format!("need n ≥ 1 and at least n + 1 points, got {num_points}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..BODY_RETRIES {
        let pts: Vec<Vector> = (0..num_points).map(|_| random_gaussian(n, &mut rng)).collect();
        let Ok(body) = VPolytope::hull(&pts) else { continue };
        if !body.is_full_dimensional() {
            continue;
        }
        return recenter_body(body);
    }
    Err(Error::Degenerate(format!("no full-dimensional hull after {BODY_RETRIES} draws")))
}

fn recenter_body(mut body: VPolytope) -> Result<VPolytope> {
    for _ in 0..3 {
        let g = body.centroid()?;
        if g.norm() < BODY_CENTER_TOL {
            break;
        }
        body = body.translate(&-g);
    }
    Ok(body)
}

/// Random body with a random concave PL profile (lower envelope of a few
/// affine forms at the vertices), translated until |g(f)| < 1e-8. A single
/// form gives an affine profile.
pub fn random_gamma_function(n: usize, gamma: f64, seed: u64) -> Result<GammaFunction> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("γ must be finite and positive, got {gamma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = rng.random_range(n + 2..=3 * n + 3);
    let body = random_body(n, points, rng.random())?;
    let forms: Vec<(Vector, f64)> =
        (0..rng.random_range(1..=3)).map(|_| (random_gaussian(n, &mut rng) * 0.3, 1.5 + rng.random::<f64>())).collect();
    let values: Vec<f64> = body
        .vertices()
        .iter()
        .map(|v| forms.iter().map(|(a, b)| (a.dot(v) + b).max(0.0)).fold(f64::INFINITY, f64::min))
        .collect();
    let scale = 0.5 + rng.random::<f64>();
    let f = match forms.as_slice() {
        [(a, b)] if values.iter().all(|&v| v > 0.0) => GammaFunction::from_affine(gamma, scale, &body, a, *b)?,
        _ => GammaFunction::from_vertex_values(gamma, scale, &body, &values)?,
    };
    recenter_function(f)
}

/// Translates f by -g(f) until |g(f)| < 1e-8.
pub fn recenter_function(mut f: GammaFunction) -> Result<GammaFunction> {
    for _ in 0..RECENTER_STEPS {
        let g = f.centroid()?;
        if g.norm() < FUNCTION_CENTER_TOL {
            return Ok(f);
        }
        f = f.translate(&-g)?;
    }
    Err(Error::Inconsistent(format!("recentering did not converge in {RECENTER_STEPS} steps")))
}

/// One evaluated instance of an inequality.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub ratio: f64,
    pub bound: f64,
    pub margin: f64,
    pub frame: Subspace,
    pub theta: Vector,
    pub chain: Option<ChainRatios>,
}

impl Measurement {
    fn plain(ratio: f64, bound: f64, frame: Subspace, theta: Vector) -> Self {
        Self { ratio, bound, margin: ratio - bound, frame, theta, chain: None }
    }

    fn from_sweep(s: SweepResult, bound: f64) -> Self {
        Self::plain(s.min_ratio, bound, s.frame, s.theta)
    }
}

/// vol_k(K ∩ E ∩ θ⁺) / vol_k(K ∩ E), or `None` if the section is null.
pub fn section_ratio(body: &VPolytope, e: &Subspace, theta: &Vector) -> Option<f64> {
    let sec = body.section_linear(e).ok()?;
    halved_ratio(&sec, e, theta)
}

/// vol_k((K|E) ∩ θ⁺) / vol_k(K|E).
pub fn projection_ratio(body: &VPolytope, e: &Subspace, theta: &Vector) -> Option<f64> {
    let proj = body.project(e).ok()?;
    halved_ratio(&proj, e, theta)
}

fn halved_ratio(p: &VPolytope, e: &Subspace, theta: &Vector) -> Option<f64> {
    if p.intrinsic_dim() != Some(e.dim()) {
        return None;
    }
    let whole = p.intrinsic_measure();
    if !(whole > 0.0) {
        return None;
    }
    if e.dim() == 1 {
        let t = e.coords_of_projection(theta)[0];
        let hi = p.support(&DVector::from_element(1, t)).ok()?;
        let lo = -p.support(&DVector::from_element(1, -t)).ok()?;
        return Some((hi.max(0.0) / (hi - lo)).clamp(0.0, 1.0));
    }
    let t = e.coords_of_projection(theta);
    let half = p.clip(&Halfspace::through_origin(&t).ok()?);
    let part = if half.intrinsic_dim() == Some(e.dim()) { half.intrinsic_measure() } else { 0.0 };
    Some(part / whole)
}

/// Minimum over θ of vol(K ∩ θ⁺)/vol(K) against (n/(n+1))^n.
pub fn check_grunbaum<R: Rng + ?Sized>(body: &VPolytope, cfg: &SweepConfig, rng: &mut R) -> Result<Measurement> {
    let n = body.ambient_dim();
    let full = Subspace::full(n);
    let s = sweep_min(n, n, cfg, rng, |_, th| section_ratio(body, &full, th))?;
    Ok(Measurement::from_sweep(s, grunbaum_bound(n, n)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MinkradMode {
    /// h_K(θ) / (h_K(-θ) + h_K(θ)).
    Support,
    /// ρ_K(θ) / (ρ_K(-θ) + ρ_K(θ)).
    Radial,
}

pub fn minkrad_ratio(body: &VPolytope, theta: &Vector, mode: MinkradMode) -> Option<f64> {
    let f = |u: &Vector| match mode {
        MinkradMode::Support => body.support(u).ok(),
        MinkradMode::Radial => body.radial(u).ok(),
    };
    let (a, b) = (f(theta)?, f(&-theta)?);
    (a + b > 0.0).then(|| a / (a + b))
}

/// Minimum over θ of the support or radial ratio against 1/(n+1).
pub fn check_minkrad<R: Rng + ?Sized>(body: &VPolytope, mode: MinkradMode, cfg: &SweepConfig, rng: &mut R) -> Result<Measurement> {
    let n = body.ambient_dim();
    let s = sweep_min(n, n, cfg, rng, |_, th| minkrad_ratio(body, th, mode))?;
    Ok(Measurement::from_sweep(s, grunbaum_bound(n, 1)?))
}

/// Minimum over k-frames E and θ ∈ E of the projection ratio.
pub fn check_projection<R: Rng + ?Sized>(body: &VPolytope, k: usize, cfg: &SweepConfig, rng: &mut R) -> Result<Measurement> {
    let n = body.ambient_dim();
    let s = sweep_min(n, k, cfg, rng, |e, th| projection_ratio(body, e, th))?;
    Ok(Measurement::from_sweep(s, grunbaum_bound(n, k)?))
}

/// Near-worst (E, θ) for the section ratio; the minimum found is an
/// evaluation at an actual instance, so it bounds the true minimum above.
pub fn sweep_min_ratio<R: Rng + ?Sized>(body: &VPolytope, k: usize, cfg: &SweepConfig, rng: &mut R) -> Result<SweepResult> {
    let n = body.ambient_dim();
    sweep_min(n, k, cfg, rng, |e, th| section_ratio(body, e, th))
}

pub fn check_sections<R: Rng + ?Sized>(body: &VPolytope, k: usize, cfg: &SweepConfig, rng: &mut R) -> Result<Measurement> {
    let n = body.ambient_dim();
    Ok(Measurement::from_sweep(sweep_min_ratio(body, k, cfg, rng)?, grunbaum_bound(n, k)?))
}

/// ∫_{E∩θ⁺} f / ∫_E f against the functional bound.
pub fn check_functional(f: &GammaFunction, e: &Subspace, theta: &Vector) -> Result<Measurement> {
    let ratio = f.halfspace_mass_ratio(e, theta)?;
    Ok(Measurement::plain(ratio, functional_bound(f.dim(), e.dim(), f.gamma())?, e.clone(), theta.clone()))
}

/// Minimum of the functional ratio over a (small) sweep of E and θ.
pub fn sweep_functional<R: Rng + ?Sized>(f: &GammaFunction, k: usize, cfg: &SweepConfig, rng: &mut R) -> Result<Measurement> {
    let n = f.dim();
    let s = sweep_min(n, k, cfg, rng, |e, th| f.halfspace_mass_ratio(e, th).ok())?;
    Ok(Measurement::from_sweep(s, functional_bound(n, k, f.gamma())?))
}

/// ∫_0^∞ f(sθ) ds / ∫ f(sθ) ds against the theorem's constant.
pub fn check_theorem(f: &GammaFunction, theta: &Vector) -> Result<Measurement> {
    let n = f.dim();
    let ratio = ratio_from(0.0, f, theta)?;
    Ok(Measurement::plain(ratio, theorem_bound(n, f.gamma())?, Subspace::full(n), theta.clone()))
}

/// The three chain ratios; the margin is the smaller of (last - bound)
/// and the largest increase along the chain with its sign flipped.
pub fn check_transform_chain(f: &GammaFunction, theta: &Vector) -> Result<Measurement> {
    let n = f.dim();
    let chain = transform_chain(f, theta)?;
    let bound = theorem_bound(n, f.gamma())?;
    let margin = (chain.cone - bound).min(-chain.worst_increase());
    Ok(Measurement { ratio: chain.cone, bound, margin, frame: Subspace::full(n), theta: theta.clone(), chain: Some(chain) })
}

/// Thread pool honouring GRUNBAUM_THREADS.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GRUNBAUM_THREADS") {
        let threads: usize =
            v.trim().parse().map_err(|_| Error::InvalidParameter(format!("GRUNBAUM_THREADS must be a positive integer, got {v:?}")))?;
        if threads == 0 {
            return Err(Error::InvalidParameter("GRUNBAUM_THREADS must be positive".into()));
        }
        builder = builder.num_threads(threads);
    }
    builder.build().map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

enum Instance {
    Body(VPolytope),
    Function(GammaFunction),
}

fn make_instance(check: CheckKind, cfg: &TrialConfig, seed: u64) -> Result<Instance> {
    if check.needs_gamma() {
        let gamma = cfg.gamma.expect("validated");
        Ok(Instance::Function(random_gamma_function(cfg.n, gamma, seed)?))
    } else {
        Ok(Instance::Body(random_body(cfg.n, cfg.points(), seed)?))
    }
}

fn measure(check: CheckKind, cfg: &TrialConfig, inst: &Instance, rng: &mut ChaCha8Rng) -> Result<Measurement> {
    let sweep = cfg.sweep();
    match (check, inst) {
        (CheckKind::Grunbaum, Instance::Body(b)) => check_grunbaum(b, &sweep, rng),
        (CheckKind::MinkradSupport, Instance::Body(b)) => check_minkrad(b, MinkradMode::Support, &sweep, rng),
        (CheckKind::MinkradRadial, Instance::Body(b)) => check_minkrad(b, MinkradMode::Radial, &sweep, rng),
        (CheckKind::Projection, Instance::Body(b)) => check_projection(b, cfg.k, &sweep, rng),
        (CheckKind::Section, Instance::Body(b)) => check_sections(b, cfg.k, &sweep, rng),
        (CheckKind::Functional, Instance::Function(f)) => sweep_functional(f, cfg.k, &sweep, rng),
        (CheckKind::Theorem, Instance::Function(f)) => {
            let s = sweep_min(cfg.n, cfg.n, &sweep, rng, |_, th| ratio_from(0.0, f, th).ok())?;
            Ok(Measurement::from_sweep(s, theorem_bound(cfg.n, f.gamma())?))
        }
        (CheckKind::Chain, Instance::Function(f)) => check_transform_chain(f, &random_unit(cfg.n, rng)),
        _ => unreachable!("instance kind follows the check"),
    }
}

fn mc_delta(inst: &Instance, samples: usize, seed: u64) -> Result<f64> {
    let (target, exact) = match inst {
        Instance::Body(b) => (OracleTarget::Body(b), b.volume()),
        Instance::Function(f) => (OracleTarget::Function(f), f.integrate()),
    };
    let quantity = if matches!(inst, Instance::Body(_)) { Quantity::Volume } else { Quantity::Integral };
    let est = mc_oracle(&target, &quantity, samples, seed)?;
    Ok((est.estimate[0] - exact) / est.sigma[0].max(f64::MIN_POSITIVE))
}

enum Outcome {
    Row(Box<TrialRow>),
    Skip(SkipRecord),
}

fn run_trial(check: CheckKind, cfg: &TrialConfig, index: usize) -> Outcome {
    let seed = trial_seed(cfg.seed, index);
    let result = (|| -> Result<TrialRow> {
        let inst = make_instance(check, cfg, seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let m = measure(check, cfg, &inst, &mut rng)?;
        let mc = if cfg.mc_samples > 0 { Some(mc_delta(&inst, cfg.mc_samples, seed)?) } else { None };
        Ok(TrialRow::new(index, check, cfg, &m, mc, seed))
    })();
    match result {
        Ok(row) => Outcome::Row(Box::new(row)),
        Err(e) => {
            log::warn!("{check:?} trial {index} (seed {seed}) skipped: {e}");
            Outcome::Skip(SkipRecord { trial_id: index, seed, reason: e.to_string() })
        }
    }
}

/// Runs `cfg.num_bodies` independent trials of `check` in parallel.
pub fn run_check(check: CheckKind, cfg: &TrialConfig) -> Result<VerificationReport> {
    cfg.validate(check)?;
    let start = Instant::now();
    let outcomes: Vec<Outcome> =
        thread_pool()?.install(|| (0..cfg.num_bodies).into_par_iter().map(|i| run_trial(check, cfg, i)).collect());
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Row(r) => rows.push(*r),
            Outcome::Skip(s) => skipped.push(s),
        }
    }
    Ok(VerificationReport::new(check, cfg.clone(), rows, skipped, start.elapsed().as_secs_f64()))
}
