//! Convex polytopes in vertex representation.
//!
//! A [`VPolytope`] keeps its extreme points in ambient coordinates together
//! with an affine frame for its own affine hull. Triangulation, facet
//! hyperplanes, measure and centroid are computed once at construction.
//! Lower-dimensional polytopes are ordinary values: they carry their
//! intrinsic dimension and their measure in that dimension, and
//! [`VPolytope::volume`] reports zero for them.

mod hull;
mod steiner;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Subspace, Vector};

pub(crate) use hull::{factorial, lower_hull_cells, simplex_measure};
pub use hull::HULL_EPS;
pub use steiner::SteinerBody;

/// The closed halfspace {x : <x, normal> >= offset}.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    normal: Vector,
    offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        let norm = normal.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter("halfspace normal must be nonzero".into()));
        }
        Ok(Self { normal: normal / norm, offset: offset / norm })
    }

    /// θ⁺ = {x : <x, θ> >= 0}.
    pub fn through_origin(theta: &Vector) -> Result<Self> {
        Self::new(theta.clone(), 0.0)
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn flipped(&self) -> Self {
        Self { normal: -&self.normal, offset: -self.offset }
    }

    pub fn signed_distance(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

/// Facet inequality <normal, y> <= offset in intrinsic coordinates.
#[derive(Clone, Debug)]
pub(crate) struct Facet {
    pub normal: Vector,
    pub offset: f64,
}

#[derive(Clone, Debug)]
pub struct VPolytope {
    ambient_dim: usize,
    vertices: Vec<Vector>,
    origin: Vector,
    frame: Subspace,
    simplices: Vec<Vec<usize>>,
    simplex_measures: Vec<f64>,
    facets: Vec<Facet>,
    measure: f64,
    centroid: Option<Vector>,
}

/// Wire format of a body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodyJson {
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl VPolytope {
    pub fn empty(n: usize) -> Self {
        Self {
            ambient_dim: n,
            vertices: Vec::new(),
            origin: DVector::zeros(n),
            frame: Subspace::zero(n),
            simplices: Vec::new(),
            simplex_measures: Vec::new(),
            facets: Vec::new(),
            measure: 0.0,
            centroid: None,
        }
    }

    /// Convex hull of at least two distinct points.
    pub fn hull(points: &[Vector]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptyInput("hull needs at least two points"));
        }
        let p = Self::hull_lenient(points)?;
        if p.intrinsic_dim() == Some(0) {
            return Err(Error::Degenerate("all points coincide".into()));
        }
        Ok(p)
    }

    /// Convex hull accepting empty and single-point inputs.
    pub fn hull_lenient(points: &[Vector]) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptyInput("no points"));
        };
        let n = first.len();
        for p in points {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidParameter("non-finite coordinate".into()));
            }
        }
        let tol = hull::hull_tolerance(points);
        let (origin, frame, _) = hull::affine_frame(points, tol);
        let d = frame.dim();
        if d == 0 {
            return Ok(Self::from_parts(n, vec![first.clone()], first.clone(), frame, vec![vec![0]], Vec::new()));
        }
        // Work in ambient coordinates directly when full-dimensional.
        let (origin, frame) = if d == n { (DVector::zeros(n), Subspace::full(n)) } else { (origin, frame) };
        let local: Vec<Vector> = points.iter().map(|p| frame.coords_of_projection(&(p - &origin))).collect();

        if d == 1 {
            let lo = (0..local.len()).min_by(|&a, &b| local[a][0].total_cmp(&local[b][0])).unwrap();
            let hi = (0..local.len()).max_by(|&a, &b| local[a][0].total_cmp(&local[b][0])).unwrap();
            let vertices = vec![points[lo].clone(), points[hi].clone()];
            let facets = vec![
                Facet { normal: DVector::from_element(1, -1.0), offset: -local[lo][0] },
                Facet { normal: DVector::from_element(1, 1.0), offset: local[hi][0] },
            ];
            return Ok(Self::from_parts(n, vertices, origin, frame, vec![vec![0, 1]], facets));
        }

        let h = hull::full_dim_hull(&local)
            .ok_or_else(|| Error::Degenerate("convex hull construction failed".into()))?;
        let mut index = vec![usize::MAX; points.len()];
        let mut vertices = Vec::with_capacity(h.vertices.len());
        let mut local_vertices = Vec::with_capacity(h.vertices.len());
        let mut order = h.vertices.clone();
        order.sort_unstable();
        for &i in &order {
            index[i] = vertices.len();
            vertices.push(points[i].clone());
            local_vertices.push(local[i].clone());
        }

        // Pulling triangulation from the vertex nearest the vertex mean.
        let mean = local_vertices.iter().fold(DVector::zeros(d), |a, v| a + v) / local_vertices.len() as f64;
        let apex = (0..local_vertices.len())
            .min_by(|&a, &b| (&local_vertices[a] - &mean).norm().total_cmp(&(&local_vertices[b] - &mean).norm()))
            .unwrap();
        let local_tol = tol;
        let mut simplices = Vec::new();
        for f in &h.facets {
            let verts: Vec<usize> = f.verts.iter().map(|&v| index[v]).collect();
            if verts.contains(&usize::MAX) {
                return Err(Error::Degenerate("hull facet references a non-extreme point".into()));
            }
            if verts.contains(&apex) || f.plane.dist(&local_vertices[apex]).abs() <= 10.0 * local_tol {
                continue;
            }
            let mut s = vec![apex];
            s.extend(verts);
            simplices.push(s);
        }

        let mut facets: Vec<Facet> = Vec::new();
        for f in &h.facets {
            let dup = facets.iter().any(|g| {
                (&g.normal - &f.plane.normal).norm() < 1e-9 && (g.offset - f.plane.offset).abs() <= 10.0 * local_tol
            });
            if !dup {
                facets.push(Facet { normal: f.plane.normal.clone(), offset: f.plane.offset });
            }
        }
        Ok(Self::from_parts(n, vertices, origin, frame, simplices, facets))
    }

    fn from_parts(
        n: usize,
        vertices: Vec<Vector>,
        origin: Vector,
        frame: Subspace,
        simplices: Vec<Vec<usize>>,
        facets: Vec<Facet>,
    ) -> Self {
        let d = frame.dim();
        let local: Vec<Vector> = vertices.iter().map(|v| frame.coords_of_projection(&(v - &origin))).collect();
        let simplex_measures: Vec<f64> = simplices.iter().map(|s| simplex_measure(&local, s)).collect();
        let measure = pairwise_sum(&simplex_measures);
        let centroid = if vertices.is_empty() {
            None
        } else if measure > 0.0 {
            let mut acc = DVector::zeros(n);
            for (s, &m) in simplices.iter().zip(&simplex_measures) {
                let c = s.iter().fold(DVector::zeros(n), |a, &i| a + &vertices[i]) / s.len() as f64;
                acc.axpy(m, &c, 1.0);
            }
            Some(acc / measure)
        } else {
            Some(vertices[0].clone())
        };
        let _ = d;
        Self { ambient_dim: n, vertices, origin, frame, simplices, simplex_measures, facets, measure, centroid }
    }

    /// A single simplex; no hull computation.
    pub fn simplex(vertices: Vec<Vector>) -> Result<Self> {
        let n = vertices[0].len();
        if vertices.len() != n + 1 {
            return Err(Error::InvalidParameter("simplex needs n+1 vertices".into()));
        }
        let local = &vertices;
        let m = simplex_measure(local, &(0..=n).collect::<Vec<_>>());
        if !(m > 0.0) {
            return Err(Error::Degenerate("flat simplex".into()));
        }
        let centroid = vertices.iter().fold(DVector::zeros(n), |a, v| a + v) / (n + 1) as f64;
        let mut facets = Vec::with_capacity(n + 1);
        if n >= 2 {
            let idx: Vec<usize> = (0..=n).collect();
            for skip in 0..=n {
                let verts: Vec<usize> = idx.iter().copied().filter(|&i| i != skip).collect();
                let pts: Vec<Vector> = verts.iter().map(|&i| vertices[i].clone()).collect();
                let (normal, offset) = plane_normal(&pts, &centroid);
                facets.push(Facet { normal, offset });
            }
        } else {
            let (a, b) = (vertices[0][0].min(vertices[1][0]), vertices[0][0].max(vertices[1][0]));
            facets.push(Facet { normal: DVector::from_element(1, -1.0), offset: -a });
            facets.push(Facet { normal: DVector::from_element(1, 1.0), offset: b });
        }
        Ok(Self {
            ambient_dim: n,
            vertices,
            origin: DVector::zeros(n),
            frame: Subspace::full(n),
            simplices: vec![(0..=n).collect()],
            simplex_measures: vec![m],
            facets,
            measure: m,
            centroid: Some(centroid),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `None` for the empty polytope.
    pub fn intrinsic_dim(&self) -> Option<usize> {
        (!self.is_empty()).then(|| self.frame.dim())
    }

    pub fn is_full_dimensional(&self) -> bool {
        self.intrinsic_dim() == Some(self.ambient_dim)
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn simplex_measures(&self) -> &[f64] {
        &self.simplex_measures
    }

    /// Affine frame of the affine hull: intrinsic coordinates are
    /// `frame.coords(x - origin)`.
    pub fn affine_frame(&self) -> (&Vector, &Subspace) {
        (&self.origin, &self.frame)
    }

    /// Measure in the intrinsic dimension (a point has measure 1).
    pub fn intrinsic_measure(&self) -> f64 {
        self.measure
    }

    /// n-dimensional volume; zero unless full-dimensional.
    pub fn volume(&self) -> f64 {
        if self.is_full_dimensional() { self.measure } else { 0.0 }
    }

    pub fn centroid(&self) -> Result<Vector> {
        self.centroid.clone().ok_or(Error::EmptyInput("centroid of the empty polytope"))
    }

    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max((a - b).norm());
            }
        }
        best
    }

    /// Unique edges of the triangulation.
    pub fn triangulation_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for s in &self.simplices {
            for (i, &a) in s.iter().enumerate() {
                for &b in &s[i + 1..] {
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges
    }

    /// Facet halfspaces {x : <normal, x> <= offset} in ambient coordinates;
    /// only available for full-dimensional polytopes.
    pub fn facet_inequalities(&self) -> Vec<(Vector, f64)> {
        if !self.is_full_dimensional() {
            return Vec::new();
        }
        self.facets.iter().map(|f| (f.normal.clone(), f.offset)).collect()
    }

    /// Membership test with absolute slack `tol` (full-dimensional only).
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if !self.is_full_dimensional() {
            return false;
        }
        self.facets.iter().all(|f| f.normal.dot(x) <= f.offset + tol)
    }

    pub fn translate(&self, t: &Vector) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += t;
        }
        if let Some(c) = &mut out.centroid {
            *c += t;
        }
        if self.is_full_dimensional() {
            for f in &mut out.facets {
                f.offset += f.normal.dot(t);
            }
        } else {
            out.origin += t;
        }
        out
    }

    /// Image under x ↦ s·x (s > 0).
    pub fn scale(&self, s: f64) -> Result<Self> {
        let pts: Vec<Vector> = self.vertices.iter().map(|v| v * s).collect();
        Self::hull_lenient(&pts)
    }

    /// Translate so that the centroid sits at the origin.
    pub fn recentered(&self) -> Result<Self> {
        let c = self.centroid()?;
        Ok(self.translate(&-c))
    }

    /// Support function h_P(u) = max_v <u, v>.
    pub fn support(&self, u: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        self.vertices
            .iter()
            .map(|v| v.dot(u))
            .reduce(f64::max)
            .ok_or(Error::EmptyInput("support of the empty polytope"))
    }

    /// Radial function ρ_P(u) = max{t >= 0 : t u ∈ P}; requires the origin in
    /// the interior.
    pub fn radial(&self, u: &Vector) -> Result<f64> {
        self.check_dim(u)?;
        if !self.is_full_dimensional() || self.facets.iter().any(|f| f.offset <= 0.0) {
            return Err(Error::OriginNotInterior);
        }
        let mut t = f64::INFINITY;
        for f in &self.facets {
            let rate = f.normal.dot(u);
            if rate > 0.0 {
                t = t.min(f.offset / rate);
            }
        }
        Ok(t)
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.ambient_dim {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim, got: x.len() });
        }
        Ok(())
    }

    fn slack(&self) -> f64 {
        hull::hull_tolerance(&self.vertices) * 10.0
    }

    /// P ∩ H. The result is the hull of the vertices inside H and the
    /// crossings of triangulation edges with the boundary of H.
    pub fn clip(&self, h: &Halfspace) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        let tol = self.slack();
        let dist: Vec<f64> = self.vertices.iter().map(|v| h.signed_distance(v)).collect();
        if dist.iter().all(|&d| d >= -tol) {
            return self.clone();
        }
        let mut pts: Vec<Vector> =
            self.vertices.iter().zip(&dist).filter(|(_, &d)| d >= -tol).map(|(v, _)| v.clone()).collect();
        for (a, b) in self.triangulation_edges() {
            let (da, db) = (dist[a], dist[b]);
            if (da > tol && db < -tol) || (da < -tol && db > tol) {
                let t = da / (da - db);
                pts.push(&self.vertices[a] + (&self.vertices[b] - &self.vertices[a]) * t);
            }
        }
        if pts.is_empty() {
            return Self::empty(self.ambient_dim);
        }
        Self::hull_lenient(&pts).unwrap_or_else(|_| Self::empty(self.ambient_dim))
    }

    /// P ∩ {x : <x, normal> = offset}, in ambient coordinates.
    pub fn slice(&self, normal: &Vector, offset: f64) -> Self {
        if self.is_empty() {
            return self.clone();
        }
        let tol = self.slack() * normal.norm();
        let dist: Vec<f64> = self.vertices.iter().map(|v| v.dot(normal) - offset).collect();
        if dist.iter().all(|d| d.abs() <= tol) {
            return self.clone();
        }
        let mut pts: Vec<Vector> =
            self.vertices.iter().zip(&dist).filter(|(_, &d)| d.abs() <= tol).map(|(v, _)| v.clone()).collect();
        for (a, b) in self.triangulation_edges() {
            let (da, db) = (dist[a], dist[b]);
            if (da > tol && db < -tol) || (da < -tol && db > tol) {
                let t = da / (da - db);
                pts.push(&self.vertices[a] + (&self.vertices[b] - &self.vertices[a]) * t);
            }
        }
        // Snap everything onto the hyperplane so the result is flat at the
        // scale of its own (possibly much smaller) hull tolerance.
        let nn = normal.norm_squared();
        for p in &mut pts {
            let err = p.dot(normal) - offset;
            p.axpy(-err / nn, normal, 1.0);
        }
        if pts.is_empty() {
            return Self::empty(self.ambient_dim);
        }
        Self::hull_lenient(&pts).unwrap_or_else(|_| Self::empty(self.ambient_dim))
    }

    /// Section by the affine subspace `point + subspace`, expressed in the
    /// subspace's coordinates relative to `point`.
    pub fn section(&self, point: &Vector, subspace: &Subspace) -> Result<Self> {
        self.check_dim(point)?;
        let m = subspace.dim();
        let mut cur = self.clone();
        for u in subspace.complement().basis() {
            if cur.is_empty() {
                break;
            }
            cur = cur.slice(u, u.dot(point));
        }
        if cur.is_empty() {
            return Ok(Self::empty(m));
        }
        if m == 0 {
            return Ok(Self::hull_lenient(&[DVector::zeros(0)]).unwrap_or_else(|_| Self::empty(0)));
        }
        let coords: Vec<Vector> = cur.vertices.iter().map(|v| subspace.coords_of_projection(&(v - point))).collect();
        Self::hull_lenient(&coords)
    }

    /// Section by a linear subspace.
    pub fn section_linear(&self, subspace: &Subspace) -> Result<Self> {
        self.section(&DVector::zeros(self.ambient_dim), subspace)
    }

    /// Orthogonal projection onto `subspace`, in its coordinates.
    pub fn project(&self, subspace: &Subspace) -> Result<Self> {
        if subspace.ambient_dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim, got: subspace.ambient_dim() });
        }
        if self.is_empty() {
            return Ok(Self::empty(subspace.dim()));
        }
        let coords: Vec<Vector> = self.vertices.iter().map(|v| subspace.coords_of_projection(v)).collect();
        Self::hull_lenient(&coords)
    }

    /// Image of a polytope given in `subspace` coordinates, placed in the
    /// ambient space as `point + lift(coords)`.
    pub fn lift_from(&self, point: &Vector, subspace: &Subspace) -> Result<Self> {
        let pts: Vec<Vector> = self.vertices.iter().map(|c| point + subspace.lift_unchecked(c)).collect();
        Self::hull_lenient(&pts)
    }

    pub fn to_json(&self) -> BodyJson {
        BodyJson { n: self.ambient_dim, vertices: self.vertices.iter().map(|v| v.iter().copied().collect()).collect() }
    }

    pub fn from_json(body: &BodyJson) -> Result<Self> {
        let pts: Vec<Vector> = body.vertices.iter().map(|v| DVector::from_column_slice(v)).collect();
        if let Some(bad) = pts.iter().find(|p| p.len() != body.n) {
            return Err(Error::DimensionMismatch { expected: body.n, got: bad.len() });
        }
        Self::hull(&pts)
    }
}

/// Outward unit normal and offset of the hyperplane through `pts` (n points
/// in R^n), oriented away from `inside`.
fn plane_normal(pts: &[Vector], inside: &Vector) -> (Vector, f64) {
    let edges: Vec<Vector> = pts[1..].iter().map(|p| p - &pts[0]).collect();
    let mut normal = crate::geom::orthonormalize(&edges)
        .map(|s| s.complement())
        .ok()
        .and_then(|c| c.basis().first().cloned())
        .unwrap_or_else(|| DVector::zeros(inside.len()));
    if normal.dot(&(inside - &pts[0])) > 0.0 {
        normal = -normal;
    }
    let offset = normal.dot(&pts[0]);
    (normal, offset)
}

/// Sum with a fixed pairwise reduction order.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Regular polygon / geodesic approximant of the unit ball of dimension `d`
/// with roughly `m` vertices, in coordinates of that dimension.
pub fn ball_approximant(d: usize, m: usize) -> Vec<Vector> {
    match d {
        0 => vec![DVector::zeros(0)],
        1 => vec![DVector::from_element(1, -1.0), DVector::from_element(1, 1.0)],
        2 => (0..m)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                DVector::from_column_slice(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => fibonacci_sphere(d, m),
    }
}

/// Quasi-uniform points on S^{d-1}: a Fibonacci lattice for d = 3 and a
/// deterministic low-discrepancy construction otherwise.
pub fn fibonacci_sphere(d: usize, m: usize) -> Vec<Vector> {
    if d == 3 {
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..m)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                let r = (1.0 - z * z).sqrt();
                let a = golden * i as f64;
                DVector::from_column_slice(&[r * a.cos(), r * a.sin(), z])
            })
            .collect();
    }
    // Cross-polytope plus a deterministic quasi-random fill.
    let mut pts: Vec<Vector> = Vec::new();
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut v = DVector::zeros(d);
            v[i] = s;
            pts.push(v);
        }
    }
    let primes = [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    let mut k = 1usize;
    while pts.len() < m.max(2 * d) {
        let v = DVector::from_iterator(d, (0..d).map(|j| {
            let u = halton(k, primes[j % primes.len()] as usize);
            statrs::function::erf::erf_inv(2.0 * u - 1.0)
        }));
        k += 1;
        let norm = v.norm();
        if norm > 1e-6 && norm.is_finite() {
            pts.push(v / norm);
        }
    }
    pts
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
