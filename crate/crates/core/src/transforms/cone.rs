//! Replacing the support of a γ-affine function by a cone with the same
//! vertex on the θ-axis and the same η-width.

use crate::error::{Error, Result};
use crate::gammafn::GammaFunction;
use crate::geom::Vector;
use crate::polytope::VPolytope;

use super::{check_centered, check_unit};

/// Profile of a γ-affine function on a cone with vertex -ρθ, constant on
/// the sections {<x,η> = t} and vanishing on the base {<x,η> = b}. The
/// section volumes grow like (t - a)^{n-1}, which fixes the centroid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeProfile {
    pub n: usize,
    pub gamma: f64,
    /// <θ, η>.
    pub cos: f64,
    /// <vertex, η>.
    pub a: f64,
    pub b: f64,
}

impl ConeProfile {
    /// ρ(-θ) of the cone.
    pub fn rho(&self) -> f64 {
        -self.a / self.cos
    }

    /// Where the θ-axis meets the base.
    pub fn top(&self) -> f64 {
        self.b / self.cos
    }

    /// Weight of the vertex in g(Q) = λ₀·vertex + (1-λ₀)·g(base).
    pub fn lambda0(&self) -> f64 {
        let p = 1.0 / self.gamma;
        (p + 1.0) / (self.n as f64 + p + 1.0)
    }

    /// <g(Q), θ>.
    pub fn centroid(&self) -> f64 {
        let l = self.lambda0();
        (l * self.a + (1.0 - l) * self.b) / self.cos
    }

    /// ∫_{<g(Q),θ>}^∞ Q(sθ) ds / ∫_ℝ Q(sθ) ds.
    pub fn ratio(&self) -> f64 {
        let (top, c) = (self.top(), self.centroid());
        ((top - c) / (top + self.rho())).clamp(0.0, 1.0).powf(1.0 / self.gamma + 1.0)
    }
}

#[derive(Clone, Debug)]
pub struct ConeData {
    /// Outward normal of the zero set of q.
    pub eta: Vector,
    pub a: f64,
    pub b: f64,
    pub vertex: Vector,
    /// K_q ∩ η^⊥.
    pub section: VPolytope,
    /// C, spanned by the vertex and K_q ∩ η^⊥.
    pub cone: VPolytope,
    /// Base of K_Q, centred on the θ-axis.
    pub base: VPolytope,
    pub kq: VPolytope,
    pub q: GammaFunction,
    /// λ₀ read off the quadrature centroid of Q.
    pub lambda0: f64,
    pub profile: ConeProfile,
    source: VPolytope,
}

fn section_area(body: &VPolytope, eta: &Vector, t: f64) -> f64 {
    let s = body.slice(eta, t);
    if s.intrinsic_dim() == Some(body.ambient_dim() - 1) {
        s.intrinsic_measure()
    } else {
        0.0
    }
}

impl ConeData {
    /// min over an evenly spaced grid of t in [-h(-η), b] of
    /// A_{K_q}(t) - A_C(t) for t ≤ 0 and A_C(t) - A_{K_q}(t) for t ≥ 0,
    /// relative to A(0).
    pub fn section_dominance(&self, points: usize) -> f64 {
        let lo = -self.source.support(&-&self.eta).unwrap_or(self.a);
        let a0 = self.section.intrinsic_measure();
        let mut worst = f64::INFINITY;
        for i in 0..points {
            let t = lo + (self.b - lo) * i as f64 / (points - 1).max(1) as f64;
            let (ak, ac) = (section_area(&self.source, &self.eta, t), section_area(&self.cone, &self.eta, t));
            let slack = if t <= 0.0 { ak - ac } else { ac - ak };
            worst = worst.min(slack / a0);
        }
        worst
    }
}

/// Cone-ification of a centred γ-affine q whose zero set is the facet of
/// K_q in direction η, where <θ, η> > 0.
pub fn coneify(q: &GammaFunction, theta: &Vector) -> Result<ConeData> {
    let n = q.dim();
    check_unit(theta, n)?;
    if n < 2 {
        return Err(Error::InvalidParameter("coneify needs n ≥ 2".into()));
    }
    let (avec, c) = q.affine_form().ok_or_else(|| Error::InvalidParameter("coneify needs a γ-affine profile".into()))?;
    let norm = avec.norm();
    if norm <= 0.0 {
        return Err(Error::Degenerate("constant profile has no zero set".into()));
    }
    let eta = -&avec / norm;
    let cos = theta.dot(&eta);
    if cos <= 1e-10 {
        return Err(Error::Degenerate(format!("<θ, η> = {cos:.3e}")));
    }
    check_centered(q)?;
    let k = q.support();
    let diam = k.diameter();
    let b = k.support(&eta)?;
    if (b - c / norm).abs() > 1e-9 * diam {
        return Err(Error::Inconsistent("q does not vanish on the facet of K_q in direction η".into()));
    }
    let rho = k.radial(&-theta)?;
    let vertex = theta * -rho;
    let a = vertex.dot(&eta);
    let section = k.slice(&eta, 0.0);
    let stretch = (b - a) / -a;
    let top: Vec<Vector> = section.vertices().iter().map(|s| &vertex + (s - &vertex) * stretch).collect();
    let mut pts = top.clone();
    pts.push(vertex.clone());
    let cone = VPolytope::hull_lenient(&pts)?;
    let top_body = VPolytope::hull_lenient(&top)?;
    let shift = theta * (b / cos) - top_body.centroid()?;
    let base = top_body.translate(&shift);
    let mut pts: Vec<Vector> = base.vertices().to_vec();
    pts.push(vertex.clone());
    let kq = VPolytope::hull(&pts)?;
    let qq = GammaFunction::from_affine(q.gamma(), q.scale(), &kq, &avec, c)?;
    let lambda0 = cone_centroid_decomposition(&qq, &vertex, &base)?;
    Ok(ConeData {
        eta,
        a,
        b,
        vertex,
        section,
        cone,
        base,
        kq,
        q: qq,
        lambda0,
        profile: ConeProfile { n, gamma: q.gamma(), cos, a, b },
        source: k.clone(),
    })
}

/// λ₀ with g(f) = λ₀·vertex + (1-λ₀)·g(base), for f supported on the cone
/// conv(vertex, base).
pub fn cone_centroid_decomposition(f: &GammaFunction, vertex: &Vector, base: &VPolytope) -> Result<f64> {
    let mut pts = base.vertices().to_vec();
    pts.push(vertex.clone());
    let cone = VPolytope::hull(&pts)?;
    let vol = f.support().volume();
    if !cone.is_full_dimensional() || (cone.volume() - vol).abs() > 1e-9 * vol {
        return Err(Error::Degenerate("support is not the cone over the base".into()));
    }
    let g = f.centroid()?;
    let gb = base.centroid()?;
    let d = vertex - &gb;
    let lambda = (&g - &gb).dot(&d) / d.norm_squared();
    let residual = (&g - &gb - &d * lambda).norm();
    if residual > 1e-6 * d.norm() {
        return Err(Error::Inconsistent(format!("centroid is {residual:.3e} off the vertex-base line")));
    }
    Ok(lambda)
}
