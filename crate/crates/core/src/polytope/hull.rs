//! Incremental convex hull in R^d with simplicial facets, plus regular
//! triangulations obtained as the lower hull of lifted points.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::geom::{Subspace, Vector};

/// Relative tolerance for coplanarity and affine rank decisions.
pub const HULL_EPS: f64 = 1e-10;

#[derive(Clone, Debug)]
pub(crate) struct Plane {
    pub normal: Vector,
    pub offset: f64,
}

impl Plane {
    pub fn dist(&self, x: &Vector) -> f64 {
        self.normal.dot(x) - self.offset
    }
}

#[derive(Clone, Debug)]
pub(crate) struct SimplicialFacet {
    pub verts: Vec<usize>,
    pub plane: Plane,
}

#[derive(Clone, Debug)]
pub(crate) struct Hull {
    /// Indices (into the input) of the extreme points.
    pub vertices: Vec<usize>,
    pub facets: Vec<SimplicialFacet>,
}

/// Coordinates of magnitude |x| carry rounding of about this times |x|.
const ROUNDOFF: f64 = 1e3 * f64::EPSILON;

/// Distance below which points count as coplanar: relative to the spread of
/// the input, but never below the rounding in its coordinates.
pub(crate) fn hull_tolerance(points: &[Vector]) -> f64 {
    let size = points.iter().map(|p| p.amax()).fold(0.0, f64::max);
    (HULL_EPS * scale_of(points)).max(ROUNDOFF * size).max(f64::MIN_POSITIVE)
}

pub(crate) fn scale_of(points: &[Vector]) -> f64 {
    let Some(first) = points.first() else { return 1.0 };
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        for i in 0..p.len() {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (hi - lo).norm().max(f64::MIN_POSITIVE)
}

/// Greedy affine frame: origin plus orthonormal directions spanning the
/// affine hull of `points` up to `tol` (absolute). Returns the indices that
/// realised each new direction.
pub(crate) fn affine_frame(points: &[Vector], tol: f64) -> (Vector, Subspace, Vec<usize>) {
    let n = points[0].len();
    let mean = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / points.len() as f64;
    let start = argmax(points.iter().map(|p| (p - &mean).norm()));
    let origin = points[start].clone();
    let mut chosen = vec![start];
    let mut basis: Vec<Vector> = Vec::new();
    while basis.len() < n {
        let resid = |p: &Vector| {
            let mut r = p - &origin;
            for _ in 0..2 {
                for b in &basis {
                    let c = r.dot(b);
                    r.axpy(-c, b, 1.0);
                }
            }
            r
        };
        let best = argmax(points.iter().map(|p| resid(p).norm()));
        let r = resid(&points[best]);
        let norm = r.norm();
        if norm <= tol {
            break;
        }
        basis.push(r / norm);
        chosen.push(best);
    }
    let frame = Subspace::from_orthonormal(n, basis.clone()).unwrap_or_else(|_| Subspace::zero(n));
    (origin, frame, chosen)
}

fn argmax<I: Iterator<Item = f64>>(it: I) -> usize {
    let mut best = 0;
    let mut val = f64::NEG_INFINITY;
    for (i, v) in it.enumerate() {
        if v > val {
            val = v;
            best = i;
        }
    }
    best
}

/// Hyperplane through `verts` oriented so that `interior` is strictly on the
/// negative side. `None` when the vertices are affinely dependent.
fn plane_through(points: &[Vector], verts: &[usize], interior: &Vector, tol: f64) -> Option<Plane> {
    let d = interior.len();
    let v0 = &points[verts[0]];
    let mut basis: Vec<Vector> = Vec::with_capacity(d - 1);
    for &vi in &verts[1..] {
        let mut r = &points[vi] - v0;
        let scale = r.norm();
        for _ in 0..2 {
            for b in &basis {
                let c = r.dot(b);
                r.axpy(-c, b, 1.0);
            }
        }
        let norm = r.norm();
        if norm <= 1e-12 * scale.max(tol) || norm <= tol * 1e-3 {
            return None;
        }
        basis.push(r / norm);
    }
    let mut w = interior - v0;
    for _ in 0..2 {
        for b in &basis {
            let c = w.dot(b);
            w.axpy(-c, b, 1.0);
        }
    }
    let norm = w.norm();
    if norm <= tol * 1e-3 {
        return None;
    }
    let normal = -w / norm;
    let offset = normal.dot(v0);
    Some(Plane { normal, offset })
}

/// Convex hull of points spanning R^d (d >= 2). The caller guarantees full
/// affine rank.
pub(crate) fn full_dim_hull(points: &[Vector]) -> Option<Hull> {
    let d = points[0].len();
    debug_assert!(d >= 2);
    let tol = hull_tolerance(points);
    let mut active: Vec<usize> = (0..points.len()).collect();
    for _ in 0..4 {
        let sub: Vec<Vector> = active.iter().map(|&i| points[i].clone()).collect();
        let hull = incremental(&sub, tol)?;
        let extreme = extreme_vertices(&sub, &hull, tol);
        let used = used_vertices(&hull);
        // Slivers can fail the normal-rank test everywhere; keep the hull as built.
        let extreme = if extreme.len() <= d { used.clone() } else { extreme };
        if extreme.len() == used.len() {
            return Some(Hull {
                vertices: extreme.iter().map(|&i| active[i]).collect(),
                facets: hull
                    .facets
                    .into_iter()
                    .map(|f| SimplicialFacet {
                        verts: f.verts.iter().map(|&i| active[i]).collect(),
                        plane: f.plane,
                    })
                    .collect(),
            });
        }
        active = extreme.iter().map(|&i| active[i]).collect();
    }
    None
}

fn used_vertices(hull: &Hull) -> Vec<usize> {
    let mut used: Vec<usize> = hull.facets.iter().flat_map(|f| f.verts.iter().copied()).collect();
    used.sort_unstable();
    used.dedup();
    used
}

/// Vertices of the simplicial boundary that are extreme points: the normals
/// of the facet planes through them have full rank.
fn extreme_vertices(points: &[Vector], hull: &Hull, tol: f64) -> Vec<usize> {
    let d = points[0].len();
    used_vertices(hull)
        .into_iter()
        .filter(|&v| {
            let mut basis: Vec<Vector> = Vec::new();
            for f in &hull.facets {
                if basis.len() == d {
                    break;
                }
                if f.plane.dist(&points[v]).abs() > 10.0 * tol {
                    continue;
                }
                let mut r = f.plane.normal.clone();
                for _ in 0..2 {
                    for b in &basis {
                        let c = r.dot(b);
                        r.axpy(-c, b, 1.0);
                    }
                }
                let norm = r.norm();
                if norm > 1e-9 {
                    basis.push(r / norm);
                }
            }
            basis.len() == d
        })
        .collect()
}

fn incremental(points: &[Vector], tol: f64) -> Option<Hull> {
    let d = points.first()?.len();
    if points.len() <= d {
        return None;
    }
    let (_, frame, seed) = affine_frame(points, tol);
    if frame.dim() < d {
        return None;
    }
    let interior = seed.iter().fold(DVector::zeros(d), |acc, &i| acc + &points[i]) / (d + 1) as f64;

    let mut facets: Vec<Option<SimplicialFacet>> = Vec::new();
    for skip in 0..=d {
        let verts: Vec<usize> = seed.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v).collect();
        let plane = plane_through(points, &verts, &interior, tol)?;
        facets.push(Some(SimplicialFacet { verts, plane }));
    }

    let mut order: Vec<usize> = (0..points.len()).filter(|i| !seed.contains(i)).collect();
    order.sort_by(|&a, &b| {
        let da = (&points[a] - &interior).norm();
        let db = (&points[b] - &interior).norm();
        db.total_cmp(&da).then(a.cmp(&b))
    });

    let mut ridge_count: HashMap<Vec<usize>, u32> = HashMap::new();
    for p in order {
        let x = &points[p];
        let visible: Vec<usize> = facets
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.as_ref().filter(|f| f.plane.dist(x) > tol).map(|_| i))
            .collect();
        if visible.is_empty() {
            continue;
        }
        ridge_count.clear();
        for &fi in &visible {
            let f = facets[fi].as_ref().unwrap();
            for skip in 0..d {
                let mut ridge: Vec<usize> =
                    f.verts.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v).collect();
                ridge.sort_unstable();
                *ridge_count.entry(ridge).or_insert(0) += 1;
            }
        }
        let mut fresh = Vec::new();
        let mut ok = true;
        for (ridge, &count) in &ridge_count {
            if count != 1 {
                continue;
            }
            let mut verts = ridge.clone();
            verts.push(p);
            match plane_through(points, &verts, &interior, tol) {
                Some(plane) => fresh.push(SimplicialFacet { verts, plane }),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            log::debug!("hull: skipped point {p} producing a degenerate facet");
            continue;
        }
        for fi in visible {
            facets[fi] = None;
        }
        facets.extend(fresh.into_iter().map(Some));
        if facets.len() > 4 * facets.iter().filter(|f| f.is_some()).count() + 64 {
            facets.retain(|f| f.is_some());
        }
    }
    let mut facets: Vec<SimplicialFacet> = facets.into_iter().flatten().collect();
    for f in &mut facets {
        f.verts.sort_unstable();
    }
    facets.sort_by(|a, b| a.verts.cmp(&b.verts));
    let vertices = used_vertices(&Hull { vertices: vec![], facets: facets.clone() });
    Some(Hull { vertices, facets })
}

/// Cells of the regular subdivision induced by lifting `points` (full rank in
/// R^d, d >= 1) to heights `w`: the projections of the lower facets of the
/// lifted hull. Non-simplicial cells come out triangulated.
pub(crate) fn lower_hull_cells(points: &[Vector], w: &[f64]) -> Vec<Vec<usize>> {
    let d = points[0].len();
    let npts = points.len();
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let wmax = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread = scale_of(points);
    let roof = wmax + (wmax - wmin).max(spread).max(1.0);
    let mut lifted: Vec<Vector> = Vec::with_capacity(2 * npts);
    for (p, &h) in points.iter().zip(w) {
        lifted.push(DVector::from_iterator(d + 1, p.iter().copied().chain(std::iter::once(h))));
    }
    for p in points {
        lifted.push(DVector::from_iterator(d + 1, p.iter().copied().chain(std::iter::once(roof))));
    }
    let Some(hull) = full_dim_hull(&lifted) else { return Vec::new() };
    let cell_tol = (HULL_EPS * spread).powi(d as i32).max(1e-300);
    hull.facets
        .into_iter()
        .filter(|f| f.plane.normal[d] < -1e-9 && f.verts.iter().all(|&v| v < npts))
        .map(|f| f.verts)
        .filter(|cell| simplex_measure(points, cell) > cell_tol)
        .collect()
}

/// d-volume of the simplex with the given vertex indices (points in R^d).
pub(crate) fn simplex_measure(points: &[Vector], cell: &[usize]) -> f64 {
    let d = cell.len() - 1;
    if d == 0 {
        return 1.0;
    }
    let v0 = &points[cell[0]];
    let m = nalgebra::DMatrix::from_fn(d, d, |r, c| points[cell[c + 1]][r] - v0[r]);
    m.determinant().abs() / factorial(d)
}

pub(crate) fn factorial(d: usize) -> f64 {
    (1..=d).map(|i| i as f64).product()
}
