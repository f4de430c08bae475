//! Hit-or-miss Monte Carlo over the bounding box, as an oracle independent
//! of the triangulation and quadrature code.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gammafn::GammaFunction;
use crate::geom::{unit, Subspace, Vector};
use crate::polytope::VPolytope;

type Weight<'a> = Box<dyn Fn(&Vector) -> f64 + 'a>;

pub enum OracleTarget<'a> {
    Body(&'a VPolytope),
    Function(&'a GammaFunction),
}

pub enum Quantity {
    /// vol(K), or vol(K_f) for a function.
    Volume,
    /// g(K) or g(f), one entry per coordinate.
    Centroid,
    /// ∫ f (the volume for a body).
    Integral,
    /// vol(K ∩ (point + subspace)) or ∫_{point + subspace} f.
    Fiber { point: Vector, subspace: Subspace },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: Vec<f64>,
    /// Standard error per entry.
    pub sigma: Vec<f64>,
    pub samples: usize,
}

/// Monte Carlo estimate with standard errors, deterministic per seed.
pub fn mc_oracle(target: &OracleTarget, quantity: &Quantity, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    match quantity {
        Quantity::Fiber { point, subspace } => fiber(target, point, subspace, samples, seed),
        _ => {
            let (support, weight): (&VPolytope, Weight) = match target {
                OracleTarget::Body(b) => (*b, Box::new(|x: &Vector| if b.contains(x, 0.0) { 1.0 } else { 0.0 })),
                OracleTarget::Function(f) => {
                    let w: Weight = match quantity {
                        Quantity::Volume => Box::new(|x: &Vector| if f.support().contains(x, 0.0) { 1.0 } else { 0.0 }),
                        _ => Box::new(|x: &Vector| f.evaluate(x)),
                    };
                    (f.support(), w)
                }
            };
            let centroid = matches!(quantity, Quantity::Centroid);
            sample(support, &*weight, centroid, samples, seed)
        }
    }
}

fn bounding_box(body: &VPolytope) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n = body.ambient_dim();
    if body.is_empty() {
        return Err(Error::Degenerate("empty body".into()));
    }
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    for i in 0..n {
        let e = unit(n, i);
        hi.push(body.support(&e)?);
        lo.push(-body.support(&-e)?);
    }
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
    if !(vol > 0.0) {
        return Err(Error::Degenerate("bounding box has zero volume".into()));
    }
    Ok((lo, hi, vol))
}

fn sample(support: &VPolytope, weight: &dyn Fn(&Vector) -> f64, centroid: bool, samples: usize, seed: u64) -> Result<McEstimate> {
    let n = support.ambient_dim();
    let (lo, hi, vol) = bounding_box(support)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DVector::zeros(n);
    let (mut s, mut s2) = (0.0, 0.0);
    let mut sx = vec![0.0; n];
    let mut sxx = vec![0.0; n];
    let mut swx = vec![0.0; n];
    for _ in 0..samples {
        for i in 0..n {
            x[i] = rng.random_range(lo[i]..hi[i]);
        }
        let w = weight(&x);
        s += w;
        s2 += w * w;
        if centroid {
            for i in 0..n {
                sx[i] += w * x[i];
                sxx[i] += w * w * x[i] * x[i];
                swx[i] += w * w * x[i];
            }
        }
    }
    let m = samples as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean).max(0.0);
    if !centroid {
        return Ok(McEstimate { estimate: vec![vol * mean], sigma: vec![vol * (var / m).sqrt()], samples });
    }
    if !(s > 0.0) {
        return Err(Error::ZeroIntegral);
    }
    // Ratio estimator c = Σwx/Σw; delta-method variance of w(x - c).
    let mut est = Vec::with_capacity(n);
    let mut sig = Vec::with_capacity(n);
    for i in 0..n {
        let c = sx[i] / s;
        let e2 = (sxx[i] - 2.0 * c * swx[i] + c * c * s2) / m;
        est.push(c);
        sig.push((e2.max(0.0) / m).sqrt() / mean);
    }
    Ok(McEstimate { estimate: est, sigma: sig, samples })
}

fn fiber(target: &OracleTarget, point: &Vector, subspace: &Subspace, samples: usize, seed: u64) -> Result<McEstimate> {
    match target {
        OracleTarget::Body(b) => {
            let sec = b.section(point, subspace)?;
            if sec.intrinsic_dim() != Some(subspace.dim()) {
                return Ok(McEstimate { estimate: vec![0.0], sigma: vec![0.0], samples });
            }
            let weight = |x: &Vector| if sec.contains(x, 0.0) { 1.0 } else { 0.0 };
            sample(&sec, &weight, false, samples, seed)
        }
        OracleTarget::Function(f) => {
            let g = match f.restrict(point, subspace) {
                Ok(g) => g,
                Err(Error::Degenerate(_)) => return Ok(McEstimate { estimate: vec![0.0], sigma: vec![0.0], samples }),
                Err(e) => return Err(e),
            };
            let weight = |x: &Vector| g.evaluate(x);
            sample(g.support(), &weight, false, samples, seed)
        }
    }
}
