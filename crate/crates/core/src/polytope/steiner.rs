//! Steiner symmetrization of a polytope with respect to a subspace E: every
//! fiber y + E^⊥ is replaced by a centred (n-k)-ball of the same volume.

use crate::error::{Error, Result};
use crate::geom::{unit_ball_volume, Subspace, Vector};
use crate::quadrature::{simplex_moments, Moments};

use super::VPolytope;

/// Quadrature tolerance for volume and centroid of the symmetral.
const REL_TOL: f64 = 1e-9;
const MAX_DEPTH: usize = 12;

#[derive(Clone, Debug)]
pub struct SteinerBody {
    body: VPolytope,
    subspace: Subspace,
    fibers: Subspace,
    base: VPolytope,
    ball: f64,
}

impl SteinerBody {
    /// Symmetral of a full-dimensional `body` with respect to `subspace`
    /// (0 < k < n).
    pub fn new(body: &VPolytope, subspace: &Subspace) -> Result<Self> {
        let n = body.ambient_dim();
        if subspace.ambient_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: subspace.ambient_dim() });
        }
        let k = subspace.dim();
        if k == 0 || k >= n {
            return Err(Error::InvalidParameter(format!("symmetrization needs 0 < k < n, got k = {k}, n = {n}")));
        }
        if !body.is_full_dimensional() {
            return Err(Error::Degenerate("symmetrization of a lower-dimensional body".into()));
        }
        Ok(Self {
            body: body.clone(),
            subspace: subspace.clone(),
            fibers: subspace.complement(),
            base: body.project(subspace)?,
            ball: unit_ball_volume(n - k),
        })
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// K|E in coordinates of E.
    pub fn base(&self) -> &VPolytope {
        &self.base
    }

    /// vol_{n-k}(K ∩ (y + E^⊥)) for y in coordinates of E.
    pub fn fiber_volume(&self, y: &Vector) -> f64 {
        let point = self.subspace.lift_unchecked(y);
        match self.body.section(&point, &self.fibers) {
            Ok(s) if s.is_full_dimensional() => s.volume(),
            _ => 0.0,
        }
    }

    /// Radius of the ball replacing the fiber over y.
    pub fn radius(&self, y: &Vector) -> f64 {
        (self.fiber_volume(y) / self.ball).powf(1.0 / self.fibers.dim() as f64)
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let y = self.subspace.coords_of_projection(x);
        if !self.base.contains(&y, tol) {
            return false;
        }
        let off = self.fibers.coords_of_projection(x).norm();
        off <= self.radius(&y) + tol
    }

    /// ∫_{K|E} (1, y) ω r(y)^{n-k} dy, with y in E coordinates.
    fn moments(&self) -> Moments {
        let k = self.subspace.dim();
        let mut total = Moments::zero(k);
        let f = |y: &Vector| self.ball * self.radius(y).powi(self.fibers.dim() as i32);
        for s in self.base.simplices() {
            let verts: Vec<Vector> = s.iter().map(|&i| self.base.vertices()[i].clone()).collect();
            total.add(&simplex_moments(&verts, &f, REL_TOL, MAX_DEPTH));
        }
        total
    }

    pub fn volume(&self) -> f64 {
        self.moments().mass
    }

    /// Centroid in ambient coordinates; it lies in E.
    pub fn centroid(&self) -> Result<Vector> {
        let m = self.moments();
        if m.mass <= 0.0 {
            return Err(Error::ZeroIntegral);
        }
        Ok(self.subspace.lift_unchecked(&(&m.first / m.mass)))
    }

    /// ρ of the slice K̃ ∩ E in the direction `u` (E coordinates, unit),
    /// found by bisecting on whether the fiber of K is empty.
    pub fn radial_in_subspace(&self, u: &Vector) -> Result<f64> {
        if u.len() != self.subspace.dim() {
            return Err(Error::DimensionMismatch { expected: self.subspace.dim(), got: u.len() });
        }
        let nonempty = |t: f64| {
            let point = self.subspace.lift_unchecked(&(u * t));
            self.body.section(&point, &self.fibers).map(|s| !s.is_empty()).unwrap_or(false)
        };
        if !nonempty(0.0) {
            return Err(Error::OriginNotInterior);
        }
        let (mut lo, mut hi) = (0.0, self.body.diameter().max(1e-300));
        while nonempty(hi) {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if nonempty(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// K̃ ∩ E in coordinates of E. A ball of radius r(y) >= 0 sits over y
    /// exactly when the fiber is nonempty, so this is K|E.
    pub fn slice_by_subspace(&self) -> &VPolytope {
        &self.base
    }
}
