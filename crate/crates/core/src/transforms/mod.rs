//! The two ratio-decreasing constructions behind the one-dimensional
//! section bound: γ-affine slices along θ, then a cone in place of the
//! support.

mod cone;

pub use cone::{cone_centroid_decomposition, coneify, ConeData, ConeProfile};

use std::sync::OnceLock;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gammafn::GammaFunction;
use crate::geom::{Subspace, Vector};
use crate::mesh;
use crate::polytope::VPolytope;
use crate::quadrature::simplex_integral;

/// |g(f)| / diam accepted as "centred".
pub const CENTER_TOL: f64 = 1e-7;
/// Sample spacing (fraction of the diameter of K_f|θ^⊥) for H̃.
pub const DEFAULT_SPACING: f64 = 0.1;
pub const DEFAULT_MAX_SAMPLES: usize = 400;

const GRID: usize = 32;
const GOLDEN_TOL: f64 = 1e-10;
/// Extra samples at this distance (relative to the diameter) pin the
/// supergradient at o.
const PIN_RADIUS: f64 = 1e-5;
const LP_SLACK: f64 = 1e-11;
const MAJORANT_TOL: f64 = 1e-7;
const ORIGIN_TOL: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-9;
const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: usize = 12;

pub(crate) fn check_unit(theta: &Vector, n: usize) -> Result<()> {
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
    }
    if (theta.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("θ must be a unit vector, |θ| = {}", theta.norm())));
    }
    Ok(())
}

pub(crate) fn check_centered(f: &GammaFunction) -> Result<()> {
    let g = f.centroid()?;
    let diam = f.support().diameter();
    if g.norm() > CENTER_TOL * diam.max(1.0) {
        return Err(Error::Inconsistent(format!("centroid is {:.3e} away from the origin", g.norm())));
    }
    Ok(())
}

/// ∫_{t0}^∞ f(sθ) ds / ∫_ℝ f(sθ) ds.
pub fn ratio_from(t0: f64, f: &GammaFunction, theta: &Vector) -> Result<f64> {
    check_unit(theta, f.dim())?;
    let total = f.ray_integral(theta, f64::NEG_INFINITY);
    if !(total > 0.0) {
        return Err(Error::ZeroIntegral);
    }
    Ok((f.ray_integral(theta, t0) / total).min(1.0))
}

/// β = γ f_o^{γ+1}(0) / ((γ+1) ∫_0^∞ f_o), for centred f.
pub fn compute_beta(f: &GammaFunction, theta: &Vector) -> Result<f64> {
    check_unit(theta, f.dim())?;
    check_centered(f)?;
    let f0 = f.evaluate(&DVector::zeros(f.dim()));
    let forward = f.ray_integral(theta, 0.0);
    if !(f0 > 0.0 && forward > 0.0) {
        return Err(Error::Inconsistent("f(o) or the forward mass along θ vanishes".into()));
    }
    let g = f.gamma();
    Ok(g * f0.powf(g + 1.0) / ((g + 1.0) * forward))
}

/// H̃(x') = max over a in supp f_{x'} of
/// [β(γ+1)/γ ∫_a^∞ f_{x'}]^{γ/(γ+1)} + βa.
///
/// The bracket is concave in a, so a grid search followed by golden-section
/// refinement finds the maximum.
pub fn h_tilde(f: &GammaFunction, theta: &Vector, xprime: &Vector, beta: f64) -> Result<f64> {
    let (lo, hi) = f.line_support(xprime, theta).ok_or_else(|| Error::Degenerate("empty slice".into()))?;
    let g = f.gamma();
    let c = beta * (g + 1.0) / g;
    let e = g / (g + 1.0);
    let phi = |a: f64| (c * f.line_integral(xprime, theta, a)).powf(e) + beta * a;
    let step = (hi - lo) / GRID as f64;
    let (mut best_i, mut best) = (0, f64::NEG_INFINITY);
    for i in 0..=GRID {
        let v = phi(lo + step * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = lo + step * (best_i + 1).min(GRID) as f64;
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (b - r * (b - a), a + r * (b - a));
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = phi(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = phi(x1);
        }
    }
    Ok(best.max(f1).max(f2))
}

/// Linear L with h0 + L(x') ≥ H̃(x') at every sample, minimizing the total
/// slack. Samples are (coordinates in θ^⊥, H̃); a sample at the origin is
/// checked against h0.
pub fn affine_majorant(samples: &[(Vector, f64)], h0: f64) -> Result<Vector> {
    let d = samples.first().map_or(0, |(x, _)| x.len());
    let scale = h0.abs().max(f64::MIN_POSITIVE);
    let (origin, rest): (Vec<_>, Vec<_>) = samples.iter().partition(|(x, _)| x.iter().all(|c| *c == 0.0));
    if let Some((_, h)) = origin.iter().find(|(_, h)| h - h0 > MAJORANT_TOL * scale) {
        return Err(Error::Inconsistent(format!("H̃(o) = {h} exceeds h0 = {h0}")));
    }
    if d == 0 || rest.is_empty() {
        return Ok(DVector::zeros(d));
    }
    let mut sum = DVector::zeros(d);
    for (x, _) in &rest {
        sum += x;
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..d).map(|j| lp.add_var(sum[j], (f64::NEG_INFINITY, f64::INFINITY))).collect();
    for (x, h) in &rest {
        let expr: Vec<_> = vars.iter().zip(x.iter()).map(|(v, c)| (*v, *c)).collect();
        lp.add_constraint(expr, ComparisonOp::Ge, h - h0 - LP_SLACK * scale);
    }
    let sol = lp.solve().map_err(|e| match e {
        microlp::Error::Unbounded => Error::Degenerate("samples do not surround the origin".into()),
        other => Error::Inconsistent(format!("no affine majorant: {other}")),
    })?;
    let l = DVector::from_iterator(d, vars.iter().map(|v| *sol.var_value(*v)));
    let worst = rest.iter().map(|(x, h)| h - h0 - l.dot(x)).fold(f64::NEG_INFINITY, f64::max);
    if worst > MAJORANT_TOL * scale {
        return Err(Error::Inconsistent(format!("affine majorant violated by {worst:.3e}")));
    }
    Ok(l)
}

/// F(x) = χ_{K_F}(x) (-β<x,θ> + H(x'))^{1/γ}, H = h0 + L affine on θ^⊥,
/// with K_F cut from below by Ψ so that every line parallel to θ carries
/// the same mass under F as under the source f. Evaluated exactly.
#[derive(Clone, Debug)]
pub struct AffineSlices {
    source: GammaFunction,
    theta: Vector,
    frame: Subspace,
    base: Option<VPolytope>,
    beta: f64,
    h0: f64,
    linear: Vector,
    moments: OnceLock<(f64, Vector)>,
}

impl AffineSlices {
    pub fn gamma(&self) -> f64 {
        self.source.gamma()
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// H(o) = f^γ(o).
    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// L in coordinates of θ^⊥.
    pub fn linear(&self) -> &Vector {
        &self.linear
    }

    /// θ^⊥ with the basis used for coordinates.
    pub fn frame(&self) -> &Subspace {
        &self.frame
    }

    pub fn h(&self, y: &Vector) -> f64 {
        self.h0 + self.linear.dot(y)
    }

    /// ∫ f(x' + sθ) ds for x' with coordinates y.
    pub fn fiber_mass(&self, y: &Vector) -> f64 {
        self.source.line_integral(&self.frame.lift_unchecked(y), &self.theta, f64::NEG_INFINITY)
    }

    /// H(y) - βΨ(y) = (β(γ+1)/γ · mass)^{γ/(γ+1)}.
    fn spread(&self, y: &Vector) -> f64 {
        let g = self.gamma();
        (self.beta * (g + 1.0) / g * self.fiber_mass(y)).powf(g / (g + 1.0))
    }

    pub fn psi(&self, y: &Vector) -> f64 {
        (self.h(y) - self.spread(y)) / self.beta
    }

    /// Affine profile a·x + h0 of F on K_F.
    pub fn affine_form(&self) -> (Vector, f64) {
        (self.frame.lift_unchecked(&self.linear) - &self.theta * self.beta, self.h0)
    }

    pub fn value(&self, x: &Vector) -> f64 {
        let y = self.frame.coords_of_projection(x);
        if let Some(base) = &self.base {
            if !base.contains(&y, 1e-12 * base.diameter()) {
                return 0.0;
            }
        }
        let u = self.spread(&y);
        let h = self.h(&y);
        let s = x.dot(&self.theta);
        let slack = BOUNDARY_TOL * u / self.beta;
        if u <= 0.0 || s < (h - u) / self.beta - slack || s > h / self.beta + slack {
            return 0.0;
        }
        (h - self.beta * s).max(0.0).powf(1.0 / self.gamma())
    }

    fn moments(&self) -> &(f64, Vector) {
        self.moments.get_or_init(|| {
            let p = 1.0 / self.gamma();
            let beta = self.beta;
            // ∫ (H/β - s) F_y(s) ds = U^{p+2} / (β²(p+2)).
            let tail = |y: &Vector| self.spread(y).powf(p + 2.0) / (beta * beta * (p + 2.0));
            // F has the fibre masses of f, so its mass and the θ^⊥ part of
            // its first moment are those of f.
            let mass = self.source.integrate();
            let first = match self.source.centroid() {
                Ok(g) => self.frame.coords_of_projection(&g) * mass,
                Err(_) => DVector::zeros(self.frame.dim()),
            };
            let below = match &self.base {
                None => tail(&DVector::zeros(0)),
                Some(base) => base
                    .simplices()
                    .iter()
                    .map(|s| {
                        let verts: Vec<Vector> = s.iter().map(|&i| base.vertices()[i].clone()).collect();
                        simplex_integral(&verts, &tail, REL_TOL, MAX_DEPTH)
                    })
                    .sum(),
            };
            let along = ((self.h0 * mass + self.linear.dot(&first)) / beta - below) / mass;
            let perp = if mass > 0.0 { self.frame.lift_unchecked(&(&first / mass)) } else { DVector::zeros(self.dim()) };
            (mass, perp + &self.theta * along)
        })
    }

    pub fn integrate(&self) -> f64 {
        self.moments().0
    }

    pub fn centroid(&self) -> Result<Vector> {
        let (mass, g) = self.moments();
        if !(*mass > 0.0) {
            return Err(Error::ZeroIntegral);
        }
        Ok(g.clone())
    }

    /// (Ψ(o), H(o)/β): the support of F on the θ-axis.
    pub fn axis(&self) -> (f64, f64) {
        let o = DVector::zeros(self.frame.dim());
        (self.psi(&o), self.h0 / self.beta)
    }

    /// ∫_{t0}^∞ F(sθ) ds / ∫_ℝ F(sθ) ds, in closed form.
    pub fn ratio_from(&self, t0: f64) -> f64 {
        let (lo, hi) = self.axis();
        let t = t0.max(lo);
        if t >= hi {
            return 0.0;
        }
        ((hi - t) / (hi - lo)).powf(1.0 / self.gamma() + 1.0)
    }

    /// Fiber endpoints over a sample of K_f|θ^⊥.
    pub fn support_points(&self, spacing: f64, max_nodes: usize) -> Vec<Vector> {
        let nodes = match &self.base {
            None => vec![DVector::zeros(0)],
            Some(base) => mesh::sample_nodes(base, spacing * base.diameter(), max_nodes),
        };
        let mut pts = Vec::with_capacity(2 * nodes.len());
        for y in &nodes {
            let x = self.frame.lift_unchecked(y);
            let top = self.h(y) / self.beta;
            pts.push(&x + &self.theta * self.psi(y));
            pts.push(x + &self.theta * top);
        }
        pts
    }

    /// Polytopal approximation: the same affine profile on the hull of
    /// sampled fiber endpoints. Exact on sampled fibers; lower boundary
    /// error O(spacing²) elsewhere.
    pub fn to_gamma_function(&self, spacing: f64, max_nodes: usize) -> Result<GammaFunction> {
        let hull = VPolytope::hull_lenient(&self.support_points(spacing, max_nodes))?;
        let (a, b) = self.affine_form();
        GammaFunction::from_affine(self.gamma(), 1.0, &hull, &a, b)
    }

    /// η-profile of the cone built from q(x) = F(x + g(F)).
    pub fn cone_profile(&self) -> Result<ConeProfile> {
        let g = self.centroid()?;
        let t = g.dot(&self.theta);
        let (a, _) = self.affine_form();
        let norm = a.norm();
        let cos = self.beta / norm;
        let (lo, _) = self.axis();
        Ok(ConeProfile { n: self.dim(), gamma: self.gamma(), cos, a: -(t - lo) * cos, b: (self.h0 - self.beta * t) / norm })
    }
}

#[derive(Clone, Debug)]
pub struct AffinizationData {
    pub beta: f64,
    /// (x' in coordinates of θ^⊥, H̃(x')).
    pub htilde_samples: Vec<(Vector, f64)>,
    pub linear: Vector,
    pub h0: f64,
    /// Ψ at each sample.
    pub psi: Vec<f64>,
    pub function: AffineSlices,
}

impl AffinizationData {
    /// min over samples of H - H̃.
    pub fn majorant_gap(&self) -> f64 {
        self.htilde_samples.iter().map(|(y, h)| self.function.h(y) - h).fold(f64::INFINITY, f64::min)
    }

    /// max over samples of Ψ - H/β.
    pub fn psi_excess(&self) -> f64 {
        self.htilde_samples
            .iter()
            .zip(&self.psi)
            .map(|((y, _), p)| p - self.function.h(y) / self.beta)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// θ-ratios measured from the centroid at each stage of the chain: f, the
/// affinized F, and the cone built from F.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRatios {
    pub original: f64,
    pub affinized: f64,
    pub cone: f64,
}

impl ChainRatios {
    pub fn as_array(&self) -> [f64; 3] {
        [self.original, self.affinized, self.cone]
    }

    /// Largest increase between consecutive stages (≤ 0 when monotone).
    pub fn worst_increase(&self) -> f64 {
        (self.affinized - self.original).max(self.cone - self.affinized)
    }
}

/// Runs the chain on a centred f.
pub fn transform_chain(f: &GammaFunction, theta: &Vector) -> Result<ChainRatios> {
    let original = ratio_from(0.0, f, theta)?;
    let data = affinize(f, theta)?;
    let t = data.function.centroid()?.dot(theta);
    let affinized = data.function.ratio_from(t);
    let cone = data.function.cone_profile()?.ratio();
    Ok(ChainRatios { original, affinized, cone })
}

pub fn affinize(f: &GammaFunction, theta: &Vector) -> Result<AffinizationData> {
    affinize_with(f, theta, DEFAULT_SPACING, DEFAULT_MAX_SAMPLES)
}

/// Replaces each slice of a centred f along θ by a γ-affine slice of the
/// same mass, with H̃ sampled at spacing `spacing`·diam.
pub fn affinize_with(f: &GammaFunction, theta: &Vector, spacing: f64, max_samples: usize) -> Result<AffinizationData> {
    let beta = compute_beta(f, theta)?;
    let n = f.dim();
    let frame = Subspace::line(theta)?.complement();
    let h0 = f.evaluate(&DVector::zeros(n)).powf(f.gamma());
    let base = if n == 1 { None } else { Some(f.support().project(&frame)?) };
    let mut nodes = vec![DVector::zeros(n - 1)];
    if let Some(base) = &base {
        let diam = base.diameter();
        for j in 0..n - 1 {
            for sign in [1.0, -1.0] {
                let mut y = DVector::zeros(n - 1);
                y[j] = sign * PIN_RADIUS * diam;
                nodes.push(y);
            }
        }
        nodes.extend(mesh::sample_nodes(base, spacing * diam, max_samples));
    }
    let mut samples = Vec::with_capacity(nodes.len());
    for y in nodes {
        match h_tilde(f, theta, &frame.lift_unchecked(&y), beta) {
            Ok(h) => samples.push((y, h)),
            Err(Error::Degenerate(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let at_origin = samples[0].1;
    if (at_origin - h0).abs() > ORIGIN_TOL * h0 {
        return Err(Error::Inconsistent(format!("H̃(o) = {at_origin} but f^γ(o) = {h0}")));
    }
    let linear = affine_majorant(&samples, h0)?;
    let function = AffineSlices {
        source: f.clone(),
        theta: theta.clone(),
        frame,
        base,
        beta,
        h0,
        linear: linear.clone(),
        moments: OnceLock::new(),
    };
    let psi = samples.iter().map(|(y, _)| function.psi(y)).collect();
    Ok(AffinizationData { beta, htilde_samples: samples, linear, h0, psi, function })
}
