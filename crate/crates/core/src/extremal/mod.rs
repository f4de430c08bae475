//! Sharp constants and the bodies and functions that attain them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gammafn::GammaFunction;
use crate::geom::{orthonormalize, Subspace, Vector};
use crate::polytope::{ball_approximant, VPolytope};
use crate::quadrature::beta_integral;


/// Vertex counts of ball approximants and the tolerances that go with them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximantConfig {
    /// Vertices per ball factor (a regular polygon in 2-D, a quasi-uniform
    /// sphere sample above).
    pub vertices: usize,
    /// Tolerance on ratios built from these balls.
    pub ratio_tol: f64,
    /// Tolerance on centroids built from these balls.
    pub centroid_tol: f64,
}

pub const POLYTOPAL: ApproximantConfig = ApproximantConfig { vertices: 4, ratio_tol: 1e-6, centroid_tol: 1e-6 };
pub const BALLS_COARSE: ApproximantConfig = ApproximantConfig { vertices: 64, ratio_tol: 5e-3, centroid_tol: 1e-4 };
pub const BALLS_FINE: ApproximantConfig = ApproximantConfig { vertices: 256, ratio_tol: 5e-3, centroid_tol: 1e-4 };

const MEMBER_TOL: f64 = 1e-9;

/// (n, k, γ) with γ = ∞ standing for indicator functions of bodies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub n: usize,
    pub k: usize,
    pub gamma: f64,
}

impl BoundSpec {
    pub fn new(n: usize, k: usize, gamma: f64) -> Result<Self> {
        check_nk(n, k)?;
        check_gamma(gamma)?;
        Ok(Self { n, k, gamma })
    }

    pub fn value(&self) -> f64 {
        // With p = 1/γ the constant is ((k+p)/(n+1+p))^{k+p}, which stays
        // finite at both ends of γ's range.
        let p = 1.0 / self.gamma;
        let k = self.k as f64 + p;
        (k / (self.n as f64 + 1.0 + p)).powf(k)
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
    }
    Ok(())
}

/// (k/(n+1))^k.
pub fn grunbaum_bound(n: usize, k: usize) -> Result<f64> {
    Ok(BoundSpec::new(n, k, f64::INFINITY)?.value())
}

/// ((kγ+1)/((n+1)γ+1))^{(kγ+1)/γ}; γ = ∞ gives grunbaum_bound.
pub fn functional_bound(n: usize, k: usize, gamma: f64) -> Result<f64> {
    Ok(BoundSpec::new(n, k, gamma)?.value())
}

/// ((γ+1)/(γn+γ+1))^{(γ+1)/γ}.
pub fn theorem_bound(n: usize, gamma: f64) -> Result<f64> {
    functional_bound(n, 1, gamma)
}

/// θ-coordinate of the centroid of m·χ(-<x,ξ> + r1<θ,ξ>)^{1/γ} on
/// conv(r0θ, r1θ + D).
pub fn closed_form_centroid(n: usize, gamma: f64, r0: f64, r1: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(r0 < r1) {
        return Err(Error::InvalidParameter(format!("need r0 < r1, got {r0} ≥ {r1}")));
    }
    let (nf, g) = (n as f64, gamma);
    Ok((nf * g * r1 + (g + 1.0) * r0) / ((nf + 1.0) * g + 1.0))
}

/// m·χ_K(x)·(-<x,ξ> + r1<θ,ξ>)^{1/γ} on the cone K = conv(r0θ, r1θ + D),
/// with closed forms for its mass, centroid and θ-ratios.
#[derive(Clone, Debug)]
pub struct ConeAffineFunction {
    gamma: f64,
    m: f64,
    theta: Vector,
    xi: Vector,
    r0: f64,
    r1: f64,
    base: VPolytope,
    function: GammaFunction,
}

impl ConeAffineFunction {
    /// `base` is D, an (n-1)-dimensional body in ξ^⊥ given in R^n with its
    /// centroid at o (a single point when n = 1).
    pub fn new(gamma: f64, m: f64, theta: &Vector, xi: &Vector, r0: f64, r1: f64, base: &VPolytope) -> Result<Self> {
        check_gamma(gamma)?;
        if !gamma.is_finite() || !(m > 0.0) {
            return Err(Error::InvalidParameter("need finite γ and m > 0".into()));
        }
        let n = theta.len();
        check_unit(theta, n)?;
        check_unit(xi, n)?;
        if theta.dot(xi) <= 0.0 {
            return Err(Error::InvalidParameter(format!("<θ, ξ> = {} is not positive", theta.dot(xi))));
        }
        if !(r0 < r1) {
            return Err(Error::InvalidParameter(format!("need r0 < r1, got {r0} ≥ {r1}")));
        }
        if base.ambient_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: base.ambient_dim() });
        }
        let scale = base.diameter().max(1.0);
        if base.intrinsic_dim() != Some(n - 1) || base.vertices().iter().any(|v| v.dot(xi).abs() > MEMBER_TOL * scale) {
            return Err(Error::InvalidParameter("D must be an (n-1)-dimensional body in ξ^⊥".into()));
        }
        let g = base.centroid()?;
        if g.norm() > MEMBER_TOL * scale {
            return Err(Error::InvalidParameter(format!("D is not centred (|g(D)| = {:.3e})", g.norm())));
        }
        let mut pts: Vec<Vector> = base.vertices().iter().map(|v| theta * r1 + v).collect();
        pts.push(theta * r0);
        let support = VPolytope::hull(&pts)?;
        let function = GammaFunction::cone_affine(gamma, m, &support, xi, r1, theta)?;
        Ok(Self { gamma, m, theta: theta.clone(), xi: xi.clone(), r0, r1, base: base.clone(), function })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn xi(&self) -> &Vector {
        &self.xi
    }

    pub fn radii(&self) -> (f64, f64) {
        (self.r0, self.r1)
    }

    pub fn base(&self) -> &VPolytope {
        &self.base
    }

    pub fn function(&self) -> &GammaFunction {
        &self.function
    }

    pub fn into_function(self) -> GammaFunction {
        self.function
    }

    /// m((r1-r0)<θ,ξ>)^{1/γ+1} vol(D) B(n, 1/γ+1).
    pub fn integral(&self) -> f64 {
        let p = 1.0 / self.gamma;
        let n = self.dim();
        let h = (self.r1 - self.r0) * self.theta.dot(&self.xi);
        let b = beta_integral(n as f64, p + 1.0).expect("positive arguments");
        self.m * h.powf(p + 1.0) * self.base.intrinsic_measure() * b
    }

    /// g(T); the vertex and the centroid of the base are on the θ-axis.
    pub fn centroid(&self) -> Vector {
        let t = closed_form_centroid(self.dim(), self.gamma, self.r0, self.r1).expect("checked in new");
        &self.theta * t
    }

    /// ∫_{t0}^∞ T(sθ) ds / ∫ T(sθ) ds = ((r1 - t0)/(r1 - r0))^{1/γ+1}.
    pub fn ratio_from(&self, t0: f64) -> f64 {
        let u = ((self.r1 - t0) / (self.r1 - self.r0)).clamp(0.0, 1.0);
        u.powf(1.0 / self.gamma + 1.0)
    }
}

fn check_unit(v: &Vector, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    if (v.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("expected a unit vector, |v| = {}", v.norm())));
    }
    Ok(())
}

/// The equality case of the theorem: r0 = -(nγ/(γ+1))r.
pub fn theorem_equality_function(
    n: usize,
    gamma: f64,
    theta: &Vector,
    xi: &Vector,
    m: f64,
    r: f64,
    d: &VPolytope,
) -> Result<ConeAffineFunction> {
    check_gamma(gamma)?;
    if theta.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be positive, got {r}")));
    }
    let r0 = -(n as f64 * gamma / (gamma + 1.0)) * r;
    ConeAffineFunction::new(gamma, m, theta, xi, r0, r, d)
}

/// E ∩ θ^⊥ for a unit θ ∈ E.
pub fn section_complement(e: &Subspace, theta: &Vector) -> Result<Subspace> {
    let n = e.ambient_dim();
    check_unit(theta, n)?;
    if !e.contains(theta, MEMBER_TOL) {
        return Err(Error::NotInSubspace((theta - e.project(theta)?).norm()));
    }
    let mut spanning = vec![theta.clone()];
    spanning.extend(e.basis().iter().cloned());
    let frame = orthonormalize(&spanning)?;
    Subspace::from_orthonormal(n, frame.basis()[1..].to_vec())
}

/// Vertices of a ball approximant with `m` vertices in `subspace`, recentred
/// so that the body (not the vertex set) has its centroid at o.
pub fn ball_in(subspace: &Subspace, m: usize) -> Result<VPolytope> {
    let n = subspace.ambient_dim();
    if subspace.dim() == 0 {
        return VPolytope::hull_lenient(&[DVector::zeros(n)]);
    }
    let pts: Vec<Vector> = ball_approximant(subspace.dim(), m).iter().map(|c| subspace.lift_unchecked(c)).collect();
    VPolytope::hull_lenient(&pts)?.recentered()
}

/// The standard cube [-1,1]^d in `subspace`.
pub fn cube_in(subspace: &Subspace) -> Result<VPolytope> {
    let (n, d) = (subspace.ambient_dim(), subspace.dim());
    let pts: Vec<Vector> = (0..1usize << d)
        .map(|mask| {
            let c = DVector::from_fn(d, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 });
            subspace.lift_unchecked(&c)
        })
        .collect();
    if d == 0 {
        return VPolytope::hull_lenient(&[DVector::zeros(n)]);
    }
    VPolytope::hull_lenient(&pts)
}

/// conv(-((n-k+1)/k)z + D0, z + D1) for the k-dimensional E ∋ θ.
///
/// D0 is a (k-1)-dimensional body in E ∩ θ^⊥ and D1 an (n-k)-dimensional
/// body with g(D1) = o whose span is complementary to E.
pub fn sections_equality_body(e: &Subspace, theta: &Vector, z: &Vector, d0: &VPolytope, d1: &VPolytope) -> Result<VPolytope> {
    let (n, k) = (e.ambient_dim(), e.dim());
    check_nk(n, k)?;
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: z.len() });
    }
    if !e.contains(z, MEMBER_TOL) {
        return Err(Error::InvalidParameter("z is not in E".into()));
    }
    if z.dot(theta) <= 0.0 {
        return Err(Error::InvalidParameter("<z, θ> must be positive".into()));
    }
    let etp = section_complement(e, theta)?;
    if d0.ambient_dim() != n || d1.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d0.ambient_dim().min(d1.ambient_dim()) });
    }
    let scale = d0.diameter().max(d1.diameter()).max(1.0);
    if d0.intrinsic_dim() != Some(k - 1) || d0.vertices().iter().any(|v| !etp.contains(v, MEMBER_TOL * scale)) {
        return Err(Error::DimensionMismatch { expected: k - 1, got: d0.intrinsic_dim().unwrap_or(0) });
    }
    if d1.intrinsic_dim() != Some(n - k) {
        return Err(Error::DimensionMismatch { expected: n - k, got: d1.intrinsic_dim().unwrap_or(0) });
    }
    let g1 = d1.centroid()?;
    if g1.norm() > MEMBER_TOL * scale {
        return Err(Error::InvalidParameter(format!("D1 is not centred (|g(D1)| = {:.3e})", g1.norm())));
    }
    if n > k {
        let mut spanning = e.basis().to_vec();
        spanning.extend(d1.affine_frame().1.basis().iter().cloned());
        if orthonormalize(&spanning)?.dim() != n {
            return Err(Error::InvalidParameter("span(E, D1) is not all of R^n".into()));
        }
    }
    let c = (n - k + 1) as f64 / k as f64;
    let mut pts: Vec<Vector> = d0.vertices().iter().map(|v| v - z * c).collect();
    pts.extend(d1.vertices().iter().map(|v| z + v));
    VPolytope::hull(&pts)
}

/// E = span(e_1..e_k), θ = e_1, z = θ; D0 and D1 are cubes when `config`
/// is [`POLYTOPAL`] and ball approximants otherwise.
pub fn standard_sections_body(n: usize, k: usize, config: &ApproximantConfig) -> Result<(VPolytope, Subspace, Vector)> {
    check_nk(n, k)?;
    let e = Subspace::axes(n, &(0..k).collect::<Vec<_>>());
    let theta = e.basis()[0].clone();
    let d0_space = Subspace::axes(n, &(1..k).collect::<Vec<_>>());
    let d1_space = Subspace::axes(n, &(k..n).collect::<Vec<_>>());
    let factor = |s: &Subspace| if *config == POLYTOPAL { cube_in(s) } else { ball_in(s, config.vertices) };
    let body = sections_equality_body(&e, &theta, &theta, &factor(&d0_space)?, &factor(&d1_space)?)?;
    Ok((body, e, theta))
}

/// conv(-(1 - k/(n+1))θ + B^{k-1}, (k/(n+1))θ + B^{n-k}) with the balls in
/// E ∩ θ^⊥ and E^⊥ replaced by approximants with `m` vertices.
pub fn projections_equality_body(e: &Subspace, theta: &Vector, m: usize) -> Result<VPolytope> {
    let (n, k) = (e.ambient_dim(), e.dim());
    check_nk(n, k)?;
    let etp = section_complement(e, theta)?;
    let b0 = ball_in(&etp, m)?;
    let b1 = ball_in(&e.complement(), m)?;
    let t = k as f64 / (n as f64 + 1.0);
    let mut pts: Vec<Vector> = b0.vertices().iter().map(|v| v - theta * (1.0 - t)).collect();
    pts.extend(b1.vertices().iter().map(|v| theta * t + v));
    VPolytope::hull(&pts)
}

/// f = χ_K(-<x,θ> + 1)^{1/γ} on K = conv(-cθ + δB^{k-1}, θ + B^{n-k}) with
/// c = (n-k+1)γ/(kγ+1) and δ = (1+c)·vol(B^{k-1})^{-1/(k-1)}, the volume
/// being that of the approximant actually used.
pub fn corollary_equality_function(e: &Subspace, theta: &Vector, gamma: f64, m: usize) -> Result<GammaFunction> {
    check_gamma(gamma)?;
    let (n, k) = (e.ambient_dim(), e.dim());
    check_nk(n, k)?;
    let etp = section_complement(e, theta)?;
    let (kf, g) = (k as f64, gamma);
    let c = (n - k + 1) as f64 * g / (kf * g + 1.0);
    let b0 = ball_in(&etp, m)?;
    let delta = if k == 1 { 1.0 } else { (1.0 + c) * b0.intrinsic_measure().powf(-1.0 / (kf - 1.0)) };
    let b1 = ball_in(&e.complement(), m)?;
    let mut pts: Vec<Vector> = b0.vertices().iter().map(|v| v * delta - theta * c).collect();
    pts.extend(b1.vertices().iter().map(|v| theta + v));
    let support = VPolytope::hull(&pts)?;
    GammaFunction::from_affine(gamma, 1.0, &support, &-theta, 1.0)
}

/// E = span(e_1..e_k), θ = e_1.
pub fn standard_corollary_function(n: usize, k: usize, gamma: f64, m: usize) -> Result<(GammaFunction, Subspace, Vector)> {
    check_nk(n, k)?;
    let e = Subspace::axes(n, &(0..k).collect::<Vec<_>>());
    let theta = e.basis()[0].clone();
    Ok((corollary_equality_function(&e, &theta, gamma, m)?, e, theta))
}
