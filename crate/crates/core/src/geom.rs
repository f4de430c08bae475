//! Ambient linear algebra: points, orthonormal frames and the maps between
//! a subspace and its coordinates.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point or direction in R^n.
pub type Vector = DVector<f64>;

/// Residual norm below which a spanning vector counts as dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Tolerance for `coords_in` membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

/// Standard basis vector `e_i` of R^n (zero-based).
pub fn unit(n: usize, i: usize) -> Vector {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

/// A linear subspace of R^n held as an ordered orthonormal frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vector>,
}

impl Subspace {
    /// The zero subspace of R^n.
    pub fn zero(n: usize) -> Self {
        Self { ambient_dim: n, basis: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self { ambient_dim: n, basis: (0..n).map(|i| unit(n, i)).collect() }
    }

    /// Span of the given standard axes.
    pub fn axes(n: usize, axes: &[usize]) -> Self {
        Self { ambient_dim: n, basis: axes.iter().map(|&i| unit(n, i)).collect() }
    }

    pub fn line(theta: &Vector) -> Result<Self> {
        orthonormalize(std::slice::from_ref(theta))
    }

    /// Builds a subspace from vectors that are already orthonormal. The frame
    /// is re-orthonormalized, so small defects are repaired.
    pub fn from_orthonormal(n: usize, basis: Vec<Vector>) -> Result<Self> {
        if basis.is_empty() {
            return Ok(Self::zero(n));
        }
        let s = orthonormalize(&basis)?;
        if s.dim() != basis.len() {
            return Err(Error::Degenerate("frame is rank deficient".into()));
        }
        Ok(s)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim, got: x.len() });
        }
        Ok(())
    }

    /// Orthogonal projection of `x` onto the subspace, in ambient coordinates.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        let mut out = DVector::zeros(self.ambient_dim);
        for b in &self.basis {
            out.axpy(x.dot(b), b, 1.0);
        }
        out
    }

    /// Coordinates of the projection of `x` in this frame, without checking
    /// membership.
    pub fn coords_of_projection(&self, x: &Vector) -> Vector {
        DVector::from_iterator(self.dim(), self.basis.iter().map(|b| x.dot(b)))
    }

    /// Coordinates of a point that lies in the subspace.
    pub fn coords_in(&self, x: &Vector) -> Result<Vector> {
        self.check_dim(x)?;
        let c = self.coords_of_projection(x);
        let off = (x - self.lift_unchecked(&c)).norm();
        if off > MEMBERSHIP_TOL * x.norm().max(1.0) {
            return Err(Error::NotInSubspace(off));
        }
        Ok(c)
    }

    pub fn lift(&self, c: &Vector) -> Result<Vector> {
        if c.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: c.len() });
        }
        Ok(self.lift_unchecked(c))
    }

    pub(crate) fn lift_unchecked(&self, c: &Vector) -> Vector {
        let mut out = DVector::zeros(self.ambient_dim);
        for (ci, b) in c.iter().zip(&self.basis) {
            out.axpy(*ci, b, 1.0);
        }
        out
    }

    /// Orthogonal complement.
    pub fn complement(&self) -> Subspace {
        let n = self.ambient_dim;
        let mut basis = self.basis.clone();
        let k = basis.len();
        for i in 0..n {
            if basis.len() == n {
                break;
            }
            if let Some(v) = residual(&basis, &unit(n, i)) {
                basis.push(v);
            }
        }
        Subspace { ambient_dim: n, basis: basis.split_off(k) }
    }

    /// span(E ∪ {theta}).
    pub fn span_with(&self, theta: &Vector) -> Result<Subspace> {
        self.check_dim(theta)?;
        let mut basis = self.basis.clone();
        if let Some(v) = residual(&basis, theta) {
            basis.push(v);
        }
        Ok(Subspace { ambient_dim: self.ambient_dim, basis })
    }

    /// True when `x` lies in the subspace within `tol` (relative to |x|).
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        (x - self.project_unchecked(x)).norm() <= tol * x.norm().max(1.0)
    }

    /// Projector matrix P = Σ b bᵀ; used to compare subspaces.
    pub fn projector(&self) -> nalgebra::DMatrix<f64> {
        let n = self.ambient_dim;
        let mut p = nalgebra::DMatrix::zeros(n, n);
        for b in &self.basis {
            p += b * b.transpose();
        }
        p
    }

    /// Uniformly random k-dimensional subspace of R^n.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Subspace {
        loop {
            let vs: Vec<Vector> = (0..k).map(|_| random_gaussian(n, rng)).collect();
            if let Ok(s) = orthonormalize(&vs) {
                if s.dim() == k {
                    return s;
                }
            }
        }
    }
}

/// Volume of the unit Euclidean ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

pub fn random_gaussian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vector {
    loop {
        let v = random_gaussian(n, rng);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Component of `v` orthogonal to the orthonormal `basis`, normalized, or
/// `None` when it is numerically dependent. Two Gram–Schmidt passes.
fn residual(basis: &[Vector], v: &Vector) -> Option<Vector> {
    let scale = v.norm();
    let mut r = v.clone();
    for _ in 0..2 {
        for b in basis {
            let c = r.dot(b);
            r.axpy(-c, b, 1.0);
        }
    }
    let norm = r.norm();
    if norm < RANK_TOL * scale.max(1.0) {
        None
    } else {
        Some(r / norm)
    }
}

/// Modified Gram–Schmidt with re-orthogonalization; dependent vectors are
/// dropped.
pub fn orthonormalize(spanning: &[Vector]) -> Result<Subspace> {
    let first = spanning.first().ok_or(Error::EmptyInput("no spanning vectors"))?;
    let n = first.len();
    let mut basis: Vec<Vector> = Vec::new();
    for v in spanning {
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        if basis.len() == n {
            break;
        }
        if let Some(r) = residual(&basis, v) {
            basis.push(r);
        }
    }
    if basis.is_empty() {
        return Err(Error::Degenerate("all spanning vectors are numerically zero".into()));
    }
    Ok(Subspace { ambient_dim: n, basis })
}
