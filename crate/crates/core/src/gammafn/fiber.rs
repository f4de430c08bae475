//! Functions on a subspace Ẽ obtained by integrating over the fibers
//! y + Ẽ^⊥: marginals of γ-concave functions and section functions of
//! convex bodies.

use std::sync::OnceLock;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geom::{Subspace, Vector};
use crate::mesh;
use crate::polytope::VPolytope;
use crate::quadrature::{simplex_moments, Moments};

use super::GammaFunction;

const REL_TOL: f64 = 1e-10;
const MAX_DEPTH: usize = 12;

/// γ/((k-1)γ + 1): concavity exponent of a marginal over (k-1)-dimensional
/// fibers.
pub fn marginal_gamma(gamma: f64, k: usize) -> f64 {
    gamma / ((k as f64 - 1.0) * gamma + 1.0)
}

#[derive(Clone, Debug)]
enum Source {
    Function(GammaFunction),
    Body(VPolytope),
}

#[derive(Clone, Debug)]
pub struct FiberFunction {
    source: Source,
    subspace: Subspace,
    fibers: Subspace,
    base: VPolytope,
    gamma: f64,
    moments: OnceLock<Moments>,
}

impl FiberFunction {
    /// F(y) = ∫_{Ẽ^⊥} f(z + y) dz on Ẽ, concave of order γ/((k-1)γ+1)
    /// where k - 1 = dim Ẽ^⊥.
    pub fn marginal(f: &GammaFunction, etilde: &Subspace) -> Result<Self> {
        let n = f.dim();
        if etilde.ambient_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: etilde.ambient_dim() });
        }
        if etilde.dim() == 0 {
            return Err(Error::InvalidParameter("marginal onto the zero subspace".into()));
        }
        let k = n - etilde.dim() + 1;
        let base = f.support().project(etilde)?;
        if !base.is_full_dimensional() {
            return Err(Error::Degenerate("projection of the support is degenerate".into()));
        }
        Ok(Self {
            source: Source::Function(f.clone()),
            subspace: etilde.clone(),
            fibers: etilde.complement(),
            base,
            gamma: marginal_gamma(f.gamma(), k),
            moments: OnceLock::new(),
        })
    }

    /// A_{K,Ẽ}(y) = vol_{k-1}(K ∩ (y + Ẽ^⊥)), concave of order 1/(k-1)
    /// (infinite for k = 1, where it is the indicator of K ∩ Ẽ).
    pub fn section_function(body: &VPolytope, etilde: &Subspace) -> Result<Self> {
        let n = body.ambient_dim();
        if etilde.ambient_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: etilde.ambient_dim() });
        }
        if etilde.dim() == 0 || !body.is_full_dimensional() {
            return Err(Error::Degenerate("section function needs a body and a nonzero subspace".into()));
        }
        let k = n - etilde.dim() + 1;
        let base = body.project(etilde)?;
        Ok(Self {
            source: Source::Body(body.clone()),
            subspace: etilde.clone(),
            fibers: etilde.complement(),
            base,
            gamma: if k == 1 { f64::INFINITY } else { 1.0 / (k as f64 - 1.0) },
            moments: OnceLock::new(),
        })
    }

    /// A_{K,Ẽ} for Ẽ = span(E^⊥, θ), after translating K so that its
    /// centroid lies in E ∩ θ^⊥.
    pub fn section_profile(body: &VPolytope, theta: &Vector, e: &Subspace) -> Result<Self> {
        if !e.contains(theta, 1e-9) {
            return Err(Error::NotInSubspace((theta - e.project(theta)?).norm()));
        }
        let etilde = e.complement().span_with(theta)?;
        let g = body.centroid()?;
        let shift = etilde.project(&g)?;
        Self::section_function(&body.translate(&-shift), &etilde)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// Projection of the support onto Ẽ, in its coordinates.
    pub fn base(&self) -> &VPolytope {
        &self.base
    }

    /// Exact fiber integral at y (coordinates of Ẽ).
    pub fn value(&self, y: &Vector) -> f64 {
        let point = self.subspace.lift_unchecked(y);
        let fdim = self.fibers.dim();
        match &self.source {
            Source::Function(f) => match fdim {
                0 => f.evaluate(&point),
                1 => f.line_integral(&point, &self.fibers.basis()[0], f64::NEG_INFINITY),
                _ => f.restrict(&point, &self.fibers).map(|g| g.integrate()).unwrap_or(0.0),
            },
            Source::Body(body) => match body.section(&point, &self.fibers) {
                Ok(s) if fdim == 0 => {
                    if s.is_empty() {
                        0.0
                    } else {
                        1.0
                    }
                }
                Ok(s) if s.intrinsic_dim() == Some(fdim) => s.volume(),
                _ => 0.0,
            },
        }
    }

    fn moments(&self) -> &Moments {
        self.moments.get_or_init(|| {
            let mut total = Moments::zero(self.base.ambient_dim());
            let f = |y: &Vector| self.value(y);
            for s in self.base.simplices() {
                let verts: Vec<Vector> = s.iter().map(|&i| self.base.vertices()[i].clone()).collect();
                total.add(&simplex_moments(&verts, &f, REL_TOL, MAX_DEPTH));
            }
            total
        })
    }

    /// ∫_Ẽ F by adaptive quadrature of exact fiber values.
    pub fn integrate(&self) -> f64 {
        self.moments().mass
    }

    /// Centroid in coordinates of Ẽ.
    pub fn centroid(&self) -> Result<Vector> {
        let m = self.moments();
        if m.mass <= 0.0 {
            return Err(Error::ZeroIntegral);
        }
        Ok(&m.first / m.mass)
    }

    /// F(λy₁ + (1-λ)y₂)^γ̃ - [λF(y₁)^γ̃ + (1-λ)F(y₂)^γ̃].
    pub fn bbl_midpoint_check(&self, y1: &Vector, y2: &Vector, lambda: f64) -> f64 {
        let mid = y1 * lambda + y2 * (1.0 - lambda);
        let (a, b, c) = (self.value(y1), self.value(y2), self.value(&mid));
        if self.gamma.is_infinite() {
            return c.min(1.0) - a.min(b).min(1.0);
        }
        let g = self.gamma;
        c.powf(g) - (lambda * a.powf(g) + (1.0 - lambda) * b.powf(g))
    }

    /// PL approximation: exact values at sample nodes of the base with
    /// spacing `spacing`·diam, F^γ̃ interpolated by its concave envelope.
    /// Exact when F^γ̃ is piecewise linear on the node set; otherwise the
    /// error is O(spacing²).
    pub fn sampled(&self, spacing: f64, max_nodes: usize) -> Result<GammaFunction> {
        let nodes = mesh::sample_nodes(&self.base, spacing * self.base.diameter(), max_nodes);
        let values: Vec<f64> = nodes.iter().map(|y| self.value(y)).collect();
        let top = values.iter().copied().fold(0.0, f64::max);
        if top <= 0.0 {
            return Err(Error::ZeroIntegral);
        }
        if self.gamma.is_infinite() {
            let ones: Vec<f64> = values.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
            return GammaFunction::from_node_values(1.0, 1.0, &nodes, &ones);
        }
        let p: Vec<f64> = values.iter().map(|v| (v / top).powf(self.gamma)).collect();
        GammaFunction::from_node_values(self.gamma, top, &nodes, &p)
    }

    /// Sampled approximation with the default mesh.
    pub fn sampled_default(&self) -> Result<GammaFunction> {
        self.sampled(mesh::DEFAULT_SPACING, mesh::DEFAULT_MAX_NODES)
    }

    /// Coordinates in Ẽ of an ambient vector.
    pub fn coords(&self, x: &Vector) -> Vector {
        self.subspace.coords_of_projection(x)
    }

    pub fn zero(&self) -> Vector {
        DVector::zeros(self.subspace.dim())
    }
}
