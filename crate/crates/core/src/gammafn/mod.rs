//! γ-concave functions f = m·χ_K·p^{1/γ} with p concave and piecewise
//! linear on a polytope K.
//!
//! Every profile is stored as values at a set of nodes whose concave
//! envelope is p; the envelope's cells are the simplices on which p is
//! affine. Per-vertex input values are therefore read as their envelope.

mod fiber;

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Subspace, Vector};
use crate::polytope::{lower_hull_cells, BodyJson, Halfspace, VPolytope};
use crate::quadrature::{simplex_power_moments, Moments};

pub use fiber::{marginal_gamma, FiberFunction};

/// Vertex values may dip this far below zero before being rejected.
pub const NEGATIVE_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
struct Cell {
    verts: Vec<Vector>,
    values: Vec<f64>,
    grad: Vector,
    offset: f64,
    /// Maps x - verts[0] to the last n barycentric coordinates.
    inv: DMatrix<f64>,
}

impl Cell {
    fn new(verts: Vec<Vector>, values: Vec<f64>) -> Option<Self> {
        let n = verts[0].len();
        let t = DMatrix::from_fn(n, n, |r, c| verts[c + 1][r] - verts[0][r]);
        let inv = t.clone().try_inverse()?;
        let dp = DVector::from_iterator(n, (1..=n).map(|i| values[i] - values[0]));
        let grad = inv.transpose() * dp;
        let offset = values[0] - grad.dot(&verts[0]);
        Some(Self { verts, values, grad, offset, inv })
    }

    fn p(&self, x: &Vector) -> f64 {
        self.grad.dot(x) + self.offset
    }

    /// Barycentric coordinates of `x + s·dir` are `b0 + s·db`.
    fn bary_line(&self, x: &Vector, dir: &Vector) -> (Vec<f64>, Vec<f64>) {
        let rest = &self.inv * (x - &self.verts[0]);
        let drest = &self.inv * dir;
        let mut b = vec![1.0 - rest.sum()];
        b.extend(rest.iter());
        let mut db = vec![-drest.sum()];
        db.extend(drest.iter());
        (b, db)
    }
}

/// How the profile was specified; kept for JSON output.
#[derive(Clone, Debug, PartialEq)]
pub enum ProfileKind {
    /// Values at the vertices of the support.
    Values,
    /// p(x) = <a, x> + b.
    Affine { a: Vector, b: f64 },
    /// Values at arbitrary nodes in the support.
    Nodes,
}

#[derive(Clone, Debug)]
pub struct GammaFunction {
    gamma: f64,
    scale: f64,
    support: VPolytope,
    nodes: Vec<Vector>,
    values: Vec<f64>,
    kind: ProfileKind,
    cells: Vec<Cell>,
    moments: OnceLock<Moments>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineJson {
    pub a: Vec<f64>,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileJson {
    Values { values: Vec<f64> },
    Affine { affine: AffineJson },
    Nodes { nodes: Vec<Vec<f64>>, node_values: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionJson {
    pub gamma: f64,
    pub scale: f64,
    pub support: BodyJson,
    pub profile: ProfileJson,
}

fn check_params(gamma: f64, scale: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma must be positive and finite, got {gamma}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive and finite, got {scale}")));
    }
    Ok(())
}

fn check_values(values: &[f64]) -> Result<Vec<f64>> {
    let top = values.iter().copied().fold(0.0, f64::max);
    for &v in values {
        if !v.is_finite() || v < -NEGATIVE_TOL * top.max(1.0) {
            return Err(Error::InvalidParameter(format!("profile value {v} is negative or not finite")));
        }
    }
    Ok(values.iter().map(|v| v.max(0.0)).collect())
}

/// Merge nodes closer than `tol`, keeping the larger value.
fn dedup_nodes(nodes: Vec<Vector>, values: Vec<f64>, tol: f64) -> (Vec<Vector>, Vec<f64>) {
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a][0].total_cmp(&nodes[b][0]));
    let mut out_n: Vec<Vector> = Vec::with_capacity(nodes.len());
    let mut out_v: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut start = 0;
    for &i in &order {
        while start < out_n.len() && out_n[start][0] < nodes[i][0] - tol {
            start += 1;
        }
        match (start..out_n.len()).find(|&j| (&out_n[j] - &nodes[i]).amax() <= tol) {
            Some(j) => out_v[j] = out_v[j].max(values[i]),
            None => {
                out_n.push(nodes[i].clone());
                out_v.push(values[i]);
            }
        }
    }
    (out_n, out_v)
}

impl GammaFunction {
    fn build(gamma: f64, scale: f64, support: VPolytope, nodes: Vec<Vector>, values: Vec<f64>, kind: ProfileKind) -> Result<Self> {
        if !support.is_full_dimensional() || support.ambient_dim() == 0 {
            return Err(Error::Degenerate("support must be a full-dimensional body".into()));
        }
        let n = support.ambient_dim();
        let cells: Vec<Cell> = if n == 1 {
            let mut order: Vec<usize> = (0..nodes.len()).collect();
            order.sort_by(|&a, &b| nodes[a][0].total_cmp(&nodes[b][0]));
            let upper = upper_chain(&nodes, &values, &order);
            upper
                .windows(2)
                .filter_map(|w| Cell::new(vec![nodes[w[0]].clone(), nodes[w[1]].clone()], vec![values[w[0]], values[w[1]]]))
                .collect()
        } else {
            let w: Vec<f64> = values.iter().map(|v| -v).collect();
            lower_hull_cells(&nodes, &w)
                .into_iter()
                .filter_map(|c| {
                    Cell::new(c.iter().map(|&i| nodes[i].clone()).collect(), c.iter().map(|&i| values[i]).collect())
                })
                .collect()
        };
        if cells.is_empty() {
            return Err(Error::Degenerate("profile triangulation is empty".into()));
        }
        Ok(Self { gamma, scale, support, nodes, values, kind, cells, moments: OnceLock::new() })
    }

    /// Profile given by its values at the vertices of `support`.
    pub fn from_vertex_values(gamma: f64, scale: f64, support: &VPolytope, values: &[f64]) -> Result<Self> {
        check_params(gamma, scale)?;
        if values.len() != support.vertices().len() {
            return Err(Error::DimensionMismatch { expected: support.vertices().len(), got: values.len() });
        }
        let values = check_values(values)?;
        Self::build(gamma, scale, support.clone(), support.vertices().to_vec(), values, ProfileKind::Values)
    }

    /// Profile given by values at nodes; the support is their convex hull.
    pub fn from_node_values(gamma: f64, scale: f64, nodes: &[Vector], values: &[f64]) -> Result<Self> {
        check_params(gamma, scale)?;
        if values.len() != nodes.len() {
            return Err(Error::DimensionMismatch { expected: nodes.len(), got: values.len() });
        }
        let values = check_values(values)?;
        let support = VPolytope::hull(nodes)?;
        let tol = 1e-12 * support.diameter();
        let (nodes, values) = dedup_nodes(nodes.to_vec(), values, tol);
        Self::build(gamma, scale, support, nodes, values, ProfileKind::Nodes)
    }

    /// p(x) = <a, x> + b, which must be nonnegative on `support`.
    pub fn from_affine(gamma: f64, scale: f64, support: &VPolytope, a: &Vector, b: f64) -> Result<Self> {
        check_params(gamma, scale)?;
        if a.len() != support.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: support.ambient_dim(), got: a.len() });
        }
        let values: Vec<f64> = support.vertices().iter().map(|v| a.dot(v) + b).collect();
        let values = check_values(&values)?;
        Self::build(
            gamma,
            scale,
            support.clone(),
            support.vertices().to_vec(),
            values,
            ProfileKind::Affine { a: a.clone(), b },
        )
    }

    /// m·χ_K(x)·(-<x, ξ> + r<θ, ξ>)^{1/γ}.
    pub fn cone_affine(gamma: f64, m: f64, support: &VPolytope, xi: &Vector, r: f64, theta: &Vector) -> Result<Self> {
        Self::from_affine(gamma, m, support, &-xi, r * theta.dot(xi))
    }

    /// m·χ_K for a convex body K.
    pub fn indicator(support: &VPolytope, m: f64) -> Result<Self> {
        Self::from_affine(1.0, m, support, &DVector::zeros(support.ambient_dim()), 1.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn dim(&self) -> usize {
        self.support.ambient_dim()
    }

    pub fn support(&self) -> &VPolytope {
        &self.support
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn nodes(&self) -> &[Vector] {
        &self.nodes
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// (a, b) when the profile is a single affine form.
    pub fn affine_form(&self) -> Option<(Vector, f64)> {
        if let ProfileKind::Affine { a, b } = &self.kind {
            return Some((a.clone(), *b));
        }
        let first = &self.cells[0];
        let scale = self.support.diameter().max(1.0);
        let top = self.values.iter().copied().fold(0.0, f64::max).max(1e-300);
        self.cells
            .iter()
            .all(|c| (&c.grad - &first.grad).norm() * scale + (c.offset - first.offset).abs() <= 1e-9 * top)
            .then(|| (first.grad.clone(), first.offset))
    }

    /// Number of affine pieces of the profile.
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// The profile p at x (zero outside the support).
    pub fn profile(&self, x: &Vector) -> f64 {
        if x.len() != self.dim() || !self.support.contains(x, 1e-12 * self.support.diameter()) {
            return 0.0;
        }
        self.cells.iter().map(|c| c.p(x)).fold(f64::INFINITY, f64::min).max(0.0)
    }

    pub fn evaluate(&self, x: &Vector) -> f64 {
        let p = self.profile(x);
        if p <= 0.0 {
            0.0
        } else {
            self.scale * p.powf(1.0 / self.gamma)
        }
    }

    /// {s : x + s·dir ∈ K_f} as an interval, if it has positive length.
    pub fn line_support(&self, x: &Vector, dir: &Vector) -> Option<(f64, f64)> {
        self.cells.iter().filter_map(|c| line_interval(c, x, dir)).reduce(|(a, b), (lo, hi)| (a.min(lo), b.max(hi)))
    }

    /// ∫_{t0}^∞ f(x + s·dir) ds.
    pub fn line_integral(&self, x: &Vector, dir: &Vector, t0: f64) -> f64 {
        let hits: Vec<(f64, f64, &Cell)> =
            self.cells.iter().filter_map(|c| line_interval(c, x, dir).map(|(lo, hi)| (lo, hi, c))).collect();
        if hits.is_empty() {
            return 0.0;
        }
        let mut breaks: Vec<f64> = hits.iter().flat_map(|&(lo, hi, _)| [lo, hi]).collect();
        breaks.sort_by(f64::total_cmp);
        let span = breaks[breaks.len() - 1] - breaks[0];
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let (a, b) = (w[0].max(t0), w[1]);
            if b - a <= 1e-14 * span.max(1e-300) {
                continue;
            }
            let m = 0.5 * (a + b);
            let mid = x + dir * m;
            // The profile is the minimum over the cells crossed here.
            let Some(cell) = hits
                .iter()
                .filter(|&&(lo, hi, _)| lo <= m && m <= hi)
                .map(|&(_, _, c)| c)
                .min_by(|c, d| c.p(&mid).total_cmp(&d.p(&mid)))
            else {
                continue;
            };
            let alpha = cell.grad.dot(dir);
            let beta = cell.p(x);
            total += self.piece_integral(alpha, beta, a, b);
        }
        total
    }

    /// m ∫_a^b (αs + β)_+^{1/γ} ds.
    fn piece_integral(&self, alpha: f64, beta: f64, a: f64, b: f64) -> f64 {
        let g = self.gamma;
        let (ua, ub) = ((alpha * a + beta).max(0.0), (alpha * b + beta).max(0.0));
        let top = ua.max(ub);
        if top <= 0.0 {
            return 0.0;
        }
        if alpha.abs() * (b - a) <= 1e-6 * top {
            // Nearly constant: 4-point Gauss–Legendre.
            const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
            const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
            let (h, c) = (0.5 * (b - a), 0.5 * (a + b));
            let s: f64 = X.iter().zip(&W).map(|(x, w)| w * (alpha * (c + h * x) + beta).max(0.0).powf(1.0 / g)).sum();
            return self.scale * h * s;
        }
        let e = (g + 1.0) / g;
        self.scale * g / ((g + 1.0) * alpha) * (ub.powf(e) - ua.powf(e))
    }

    /// ∫_{t0}^∞ f(sθ) ds.
    pub fn ray_integral(&self, theta: &Vector, t0: f64) -> f64 {
        self.line_integral(&DVector::zeros(self.dim()), theta, t0)
    }

    fn moments(&self) -> &Moments {
        self.moments.get_or_init(|| {
            let mut total = Moments::zero(self.dim());
            for c in &self.cells {
                total.add(&simplex_power_moments(&c.verts, &c.values, 1.0 / self.gamma));
            }
            total.mass *= self.scale;
            total.first *= self.scale;
            total
        })
    }

    pub fn integrate(&self) -> f64 {
        self.moments().mass
    }

    /// ∫ x f / ∫ f.
    pub fn centroid(&self) -> Result<Vector> {
        let m = self.moments();
        if m.mass <= 0.0 {
            return Err(Error::ZeroIntegral);
        }
        Ok(&m.first / m.mass)
    }

    /// The function x ↦ f(x - t).
    pub fn translate(&self, t: &Vector) -> Result<Self> {
        let kind = match &self.kind {
            ProfileKind::Affine { a, b } => ProfileKind::Affine { a: a.clone(), b: b - a.dot(t) },
            k => k.clone(),
        };
        let nodes: Vec<Vector> = self.nodes.iter().map(|v| v + t).collect();
        Self::build(self.gamma, self.scale, self.support.translate(t), nodes, self.values.clone(), kind)
    }

    /// Same function with a different scale m.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        check_params(self.gamma, scale)?;
        let mut out = self.clone();
        out.scale = scale;
        out.moments = OnceLock::new();
        Ok(out)
    }

    /// Restriction to `point + subspace`, in the subspace's coordinates.
    pub fn restrict(&self, point: &Vector, subspace: &Subspace) -> Result<Self> {
        let k = subspace.dim();
        if k == 0 {
            return Err(Error::InvalidParameter("restriction to a point".into()));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for c in &self.cells {
            let piece = VPolytope::simplex(c.verts.clone())?.section(point, subspace)?;
            if piece.intrinsic_dim() != Some(k) {
                continue;
            }
            for y in piece.vertices() {
                nodes.push(y.clone());
                values.push(c.p(&(point + subspace.lift(y)?)).max(0.0));
            }
        }
        if nodes.is_empty() {
            return Err(Error::Degenerate("section misses the support".into()));
        }
        let out = Self::from_node_values(self.gamma, self.scale, &nodes, &values)?;
        Ok(match &self.kind {
            ProfileKind::Affine { a, b } => {
                let a_sub = DVector::from_iterator(k, subspace.basis().iter().map(|u| u.dot(a)));
                Self { kind: ProfileKind::Affine { a: a_sub, b: b + a.dot(point) }, ..out }
            }
            _ => out,
        })
    }

    /// f·χ_H.
    pub fn clip(&self, h: &Halfspace) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for c in &self.cells {
            let piece = VPolytope::simplex(c.verts.clone())?.clip(h);
            if !piece.is_full_dimensional() {
                continue;
            }
            for y in piece.vertices() {
                nodes.push(y.clone());
                values.push(c.p(y).max(0.0));
            }
        }
        if nodes.is_empty() {
            return Err(Error::Degenerate("halfspace misses the support".into()));
        }
        let out = Self::from_node_values(self.gamma, self.scale, &nodes, &values)?;
        Ok(match &self.kind {
            ProfileKind::Affine { .. } => Self { kind: self.kind.clone(), ..out },
            _ => out,
        })
    }

    /// ∫_{E∩θ⁺} f / ∫_E f for θ ∈ E.
    pub fn halfspace_mass_ratio(&self, subspace: &Subspace, theta: &Vector) -> Result<f64> {
        let n = self.dim();
        if subspace.ambient_dim() != n || theta.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: theta.len() });
        }
        let t = subspace.coords_in(theta)?;
        let g = self.restrict(&DVector::zeros(n), subspace)?;
        let whole = if g.dim() == 1 { g.ray_integral(&t, f64::NEG_INFINITY) } else { g.integrate() };
        if whole <= 0.0 {
            return Err(Error::ZeroIntegral);
        }
        let part = if g.dim() == 1 {
            g.ray_integral(&t, 0.0)
        } else {
            match g.clip(&Halfspace::through_origin(&t)?) {
                Ok(h) => h.integrate(),
                Err(Error::Degenerate(_)) => 0.0,
                Err(e) => return Err(e),
            }
        };
        Ok(part / whole)
    }

    /// min over random pairs in the support of p(mid) - (p(x) + p(y))/2.
    pub fn concavity_slack<R: Rng + ?Sized>(&self, pairs: usize, rng: &mut R) -> f64 {
        let mut worst = f64::INFINITY;
        for _ in 0..pairs {
            let x = random_point(&self.support, rng);
            let y = random_point(&self.support, rng);
            let mid = (&x + &y) * 0.5;
            worst = worst.min(self.profile(&mid) - 0.5 * (self.profile(&x) + self.profile(&y)));
        }
        worst
    }

    pub fn to_json(&self) -> FunctionJson {
        let profile = match &self.kind {
            ProfileKind::Values => ProfileJson::Values { values: self.values.clone() },
            ProfileKind::Affine { a, b } => ProfileJson::Affine { affine: AffineJson { a: a.iter().copied().collect(), b: *b } },
            ProfileKind::Nodes => ProfileJson::Nodes {
                nodes: self.nodes.iter().map(|v| v.iter().copied().collect()).collect(),
                node_values: self.values.clone(),
            },
        };
        FunctionJson { gamma: self.gamma, scale: self.scale, support: self.support.to_json(), profile }
    }

    pub fn from_json(json: &FunctionJson) -> Result<Self> {
        let support = VPolytope::from_json(&json.support)?;
        match &json.profile {
            ProfileJson::Values { values } => {
                // Values are listed per input vertex; hull order may differ.
                if values.len() != json.support.vertices.len() {
                    return Err(Error::DimensionMismatch { expected: json.support.vertices.len(), got: values.len() });
                }
                let nodes: Vec<Vector> = json.support.vertices.iter().map(|v| DVector::from_column_slice(v)).collect();
                let mut f = Self::from_node_values(json.gamma, json.scale, &nodes, values)?;
                f.kind = ProfileKind::Values;
                f.nodes = support.vertices().to_vec();
                f.values = f.nodes.iter().map(|v| f.profile(v)).collect();
                Ok(f)
            }
            ProfileJson::Affine { affine } => {
                Self::from_affine(json.gamma, json.scale, &support, &DVector::from_column_slice(&affine.a), affine.b)
            }
            ProfileJson::Nodes { nodes, node_values } => {
                let nodes: Vec<Vector> = nodes.iter().map(|v| DVector::from_column_slice(v)).collect();
                Self::from_node_values(json.gamma, json.scale, &nodes, node_values)
            }
        }
    }
}

/// Upper concave chain of 1-D nodes sorted by coordinate.
fn upper_chain(nodes: &[Vector], values: &[f64], order: &[usize]) -> Vec<usize> {
    let mut chain: Vec<usize> = Vec::new();
    for &i in order {
        if let Some(&last) = chain.last() {
            if (nodes[i][0] - nodes[last][0]).abs() <= 1e-14 * (1.0 + nodes[i][0].abs()) {
                if values[i] > values[last] {
                    chain.pop();
                } else {
                    continue;
                }
            }
        }
        while chain.len() >= 2 {
            let (a, b) = (chain[chain.len() - 2], chain[chain.len() - 1]);
            let cross = (nodes[b][0] - nodes[a][0]) * (values[i] - values[a]) - (values[b] - values[a]) * (nodes[i][0] - nodes[a][0]);
            if cross >= 0.0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(i);
    }
    chain
}

/// Parameter interval of the line x + s·dir inside a cell.
fn line_interval(c: &Cell, x: &Vector, dir: &Vector) -> Option<(f64, f64)> {
    let (b, db) = c.bary_line(x, dir);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let tol = 1e-12;
    for (bi, dbi) in b.iter().zip(&db) {
        if dbi.abs() <= 1e-15 {
            if *bi < -tol {
                return None;
            }
            continue;
        }
        let s = -bi / dbi;
        if *dbi > 0.0 {
            lo = lo.max(s);
        } else {
            hi = hi.min(s);
        }
    }
    (lo.is_finite() && hi.is_finite() && hi > lo).then_some((lo, hi))
}

/// A random point of a full-dimensional polytope: Dirichlet weights on a
/// random simplex of its triangulation, chosen by measure.
pub fn random_point<R: Rng + ?Sized>(body: &VPolytope, rng: &mut R) -> Vector {
    let measures = body.simplex_measures();
    let total: f64 = measures.iter().sum();
    let mut pick = rng.random::<f64>() * total;
    let mut idx = 0;
    for (i, m) in measures.iter().enumerate() {
        idx = i;
        if pick < *m {
            break;
        }
        pick -= m;
    }
    let simplex = &body.simplices()[idx];
    let weights: Vec<f64> = simplex.iter().map(|_| -rng.random::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
    let sum: f64 = weights.iter().sum();
    let mut x = DVector::zeros(body.ambient_dim());
    for (w, &v) in weights.iter().zip(simplex) {
        x.axpy(w / sum, &body.vertices()[v], 1.0);
    }
    x
}

#[cfg(test)]
mod tests;
