//! Sample nodes filling a full-dimensional polytope: its vertices, points
//! along its edges and a jittered interior grid.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::Vector;
use crate::polytope::VPolytope;

/// Default spacing as a fraction of the diameter.
pub const DEFAULT_SPACING: f64 = 0.05;
pub const DEFAULT_MAX_NODES: usize = 2000;

/// Nodes with spacing about `h`, coarsened until at most `max_nodes` remain.
/// Deterministic for a given polytope.
pub fn sample_nodes(body: &VPolytope, h: f64, max_nodes: usize) -> Vec<Vector> {
    let d = body.ambient_dim();
    let mut h = h.max(1e-12 * body.diameter());
    loop {
        let nodes = nodes_at(body, d, h);
        if nodes.len() <= max_nodes.max(body.vertices().len()) {
            return nodes;
        }
        h *= 1.25;
    }
}

fn nodes_at(body: &VPolytope, d: usize, h: f64) -> Vec<Vector> {
    let mut nodes: Vec<Vector> = body.vertices().to_vec();
    if d == 1 {
        let (a, b) = (nodes[0][0].min(nodes[1][0]), nodes[0][0].max(nodes[1][0]));
        let steps = ((b - a) / h).ceil().max(1.0) as usize;
        for i in 1..steps {
            nodes.push(DVector::from_element(1, a + (b - a) * i as f64 / steps as f64));
        }
        return nodes;
    }
    // Points along the edges of the boundary triangulation.
    for (i, j) in body.triangulation_edges() {
        let (p, q) = (&body.vertices()[i], &body.vertices()[j]);
        let steps = ((p - q).norm() / h).ceil() as usize;
        for s in 1..steps {
            nodes.push(p + (q - p) * (s as f64 / steps as f64));
        }
    }
    let facets = body.facet_inequalities();
    let lo: Vec<f64> = (0..d).map(|i| body.vertices().iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..d).map(|i| body.vertices().iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max)).collect();
    let counts: Vec<usize> = (0..d).map(|i| ((hi[i] - lo[i]) / h).ceil().max(1.0) as usize).collect();
    let total: usize = counts.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_7368);
    let margin = 0.25 * h;
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let x = DVector::from_iterator(
            d,
            (0..d).map(|i| lo[i] + h * (idx[i] as f64 + 0.5 + 0.2 * (rng.random::<f64>() - 0.5))),
        );
        if facets.iter().all(|(n, c)| n.dot(&x) <= c - margin) {
            nodes.push(x);
        }
        for i in 0..d {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    nodes
}
