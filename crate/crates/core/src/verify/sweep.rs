//! Coarse direction grids over random k-frames, refined by Nelder–Mead on a
//! chart of (E, θ).

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{orthonormalize, Subspace, Vector};
use crate::polytope::fibonacci_sphere;

/// Chart step of the initial Nelder–Mead simplex.
const SIMPLEX_STEP: f64 = 0.05;
/// Stand-in cost for charts where the ratio is undefined.
const PENALTY: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub frames: usize,
    pub theta_grid: usize,
    pub refine_iters: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { frames: 3, theta_grid: 64, refine_iters: 40 }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub min_ratio: f64,
    pub frame: Subspace,
    pub theta: Vector,
    pub evaluations: usize,
}

/// About `m` unit vectors of R^k: ±1 for k = 1, a regular polygon for
/// k = 2 and a quasi-uniform sphere sample above.
pub fn direction_grid(k: usize, m: usize) -> Vec<Vector> {
    match k {
        1 => vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)],
        2 => (0..m.max(3))
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / m.max(3) as f64;
                DVector::from_column_slice(&[a.cos(), a.sin()])
            })
            .collect(),
        _ => fibonacci_sphere(k, m),
    }
}

/// (E, θ) from chart coordinates: θ ∝ b_1 + w_1 and E = span(b_i + w_i).
fn chart(base: &[Vector], w: &[f64], n: usize) -> Option<(Subspace, Vector)> {
    let vs: Vec<Vector> = base.iter().enumerate().map(|(i, b)| b + DVector::from_column_slice(&w[i * n..(i + 1) * n])).collect();
    let frame = orthonormalize(&vs).ok()?;
    if frame.dim() != base.len() {
        return None;
    }
    let theta = frame.basis()[0].clone();
    Some((frame, theta))
}

struct ChartCost<'a, F> {
    base: &'a [Vector],
    n: usize,
    eval: &'a F,
}

impl<F: Fn(&Subspace, &Vector) -> Option<f64>> CostFunction for ChartCost<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, w: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        Ok(chart(self.base, w, self.n).and_then(|(e, th)| (self.eval)(&e, &th)).filter(|r| r.is_finite()).unwrap_or(PENALTY))
    }
}

/// Minimum of `eval(E, θ)` over random k-frames E of R^n (only R^n itself
/// when k = n) and a direction grid in each, then Nelder–Mead from the best
/// grid point. The result is always an actual evaluation.
pub fn sweep_min<R, F>(n: usize, k: usize, cfg: &SweepConfig, rng: &mut R, eval: F) -> Result<SweepResult>
where
    R: Rng + ?Sized,
    F: Fn(&Subspace, &Vector) -> Option<f64>,
{
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    let frames = if k == n { 1 } else { cfg.frames.max(1) };
    let grid = direction_grid(k, cfg.theta_grid);
    let mut best: Option<SweepResult> = None;
    let mut evaluations = 0;
    for _ in 0..frames {
        let e = if k == n { Subspace::full(n) } else { Subspace::random(n, k, rng) };
        for d in &grid {
            let theta = e.lift(d)?;
            evaluations += 1;
            if let Some(r) = eval(&e, &theta).filter(|r| r.is_finite()) {
                if best.as_ref().is_none_or(|b| r < b.min_ratio) {
                    best = Some(SweepResult { min_ratio: r, frame: e.clone(), theta, evaluations: 0 });
                }
            }
        }
    }
    let mut best = best.ok_or_else(|| Error::Degenerate("every (E, θ) on the grid gave a null section".into()))?;
    if cfg.refine_iters > 0 {
        // Frame vectors θ, then the rest of E; only θ moves when k = n.
        let mut spanning = vec![best.theta.clone()];
        spanning.extend(best.frame.basis().iter().cloned());
        let base: Vec<Vector> = orthonormalize(&spanning)?.basis().to_vec();
        let base = if k == n { base[..1].to_vec() } else { base };
        let dim = base.len() * n;
        let mut simplex = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut v = vec![0.0; dim];
            v[i] = SIMPLEX_STEP;
            simplex.push(v);
        }
        let cost = ChartCost { base: &base, n, eval: &eval };
        let solver = NelderMead::new(simplex).with_sd_tolerance(1e-12).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let res = Executor::new(cost, solver)
            .configure(|s| s.max_iters(cfg.refine_iters as u64))
            .run()
            .map_err(|e| Error::Degenerate(format!("refinement failed: {e}")))?;
        evaluations += res.state().get_func_counts().get("cost_count").copied().unwrap_or(0) as usize;
        if let Some(w) = res.state().best_param.as_ref() {
            if let Some((e, th)) = chart(&base, w, n) {
                let (e, th) = if k == n { (Subspace::full(n), th) } else { (e, th) };
                evaluations += 1;
                if let Some(r) = eval(&e, &th).filter(|r| r.is_finite() && *r < best.min_ratio) {
                    best = SweepResult { min_ratio: r, frame: e, theta: th, evaluations: 0 };
                }
            }
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}
