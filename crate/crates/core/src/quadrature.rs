//! Numerical integration: Gauss–Jacobi rules, conical-product rules on
//! simplices for powers of affine functions, double-exponential 1-D
//! quadrature and the Beta function.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::geom::Vector;

/// Nodes and weights on [0, 1] for the weight (1-u)^alpha u^beta.
#[derive(Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

thread_local! {
    static RULES: RefCell<HashMap<(usize, u64, u64), Rc<Rule>>> = RefCell::new(HashMap::new());
}

/// Golub–Welsch Gauss–Jacobi rule with `m` points, mapped to [0, 1].
pub fn gauss_jacobi(m: usize, alpha: f64, beta: f64) -> Rc<Rule> {
    let key = (m, alpha.to_bits(), beta.to_bits());
    if let Some(r) = RULES.with(|c| c.borrow().get(&key).cloned()) {
        return r;
    }
    let rule = Rc::new(golub_welsch(m, alpha, beta));
    RULES.with(|c| c.borrow_mut().insert(key, rule.clone()));
    rule
}

fn golub_welsch(m: usize, a: f64, b: f64) -> Rule {
    let mut jac = DMatrix::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jac[(k, k)] = if k == 0 { (b - a) / (a + b + 2.0) } else { (b * b - a * a) / (s * (s + 2.0)) };
        if k + 1 < m {
            let j = kf + 1.0;
            let s = 2.0 * j + a + b;
            let num = 4.0 * j * (j + a) * (j + b) * (j + a + b);
            let den = s * s * (s + 1.0) * (s - 1.0);
            let off = (num / den).sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mu0_ln = (a + b + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0) - ln_gamma(a + b + 2.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (x, mu0_ln.exp() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    // Eigenvector weights carry a few ulps of error; pin their sum to B(b+1, a+1).
    let total = beta_unchecked(b + 1.0, a + 1.0);
    let raw: f64 = pairs.iter().map(|p| p.1).sum();
    Rule {
        nodes: pairs.iter().map(|p| 0.5 * (1.0 + p.0)).collect(),
        weights: pairs.iter().map(|p| p.1 * total / raw).collect(),
    }
}

/// Orders compared by the simplex integrator; the lower one is exact for
/// polynomials of total degree 7.
pub const LOW_ORDER: usize = 4;
pub const HIGH_ORDER: usize = 6;
pub const REL_TOL: f64 = 1e-8;
pub const MAX_SPLITS: usize = 3;

/// Zeroth and first moments of an integrand over a region.
#[derive(Clone, Debug)]
pub struct Moments {
    pub mass: f64,
    pub first: Vector,
}

impl Moments {
    pub fn zero(n: usize) -> Self {
        Self { mass: 0.0, first: DVector::zeros(n) }
    }

    pub fn add(&mut self, other: &Moments) {
        self.mass += other.mass;
        self.first += &other.first;
    }
}

/// ∫_S p(x)^power dx and ∫_S x p(x)^power dx over the simplex `verts`
/// (n+1 points in R^n) where p is affine with vertex values `values`
/// (clamped at zero).
pub fn simplex_power_moments(verts: &[Vector], values: &[f64], power: f64) -> Moments {
    let n = verts[0].len();
    let vol = crate::polytope::simplex_measure(verts, &(0..=n).collect::<Vec<_>>());
    let values: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    simplex_adaptive(verts, &values, power, vol, 0)
}

fn simplex_adaptive(verts: &[Vector], values: &[f64], power: f64, vol: f64, depth: usize) -> Moments {
    let n = verts[0].len();
    let pmax = values.iter().copied().fold(0.0, f64::max);
    if pmax <= 0.0 || vol <= 0.0 {
        return Moments::zero(n);
    }
    if n == 0 {
        let c = values[0].powf(power);
        return Moments { mass: c, first: DVector::zeros(0) };
    }
    let zero_tol = 1e-13 * pmax;
    let positive: Vec<usize> = (0..=n).filter(|&i| values[i] > zero_tol).collect();
    if power == 0.0 || positive.len() == 1 {
        // p = p_top (1 - u_1) exactly: the singular factor goes into the weight.
        let top = positive[0];
        let mut order = vec![top];
        order.extend((0..=n).filter(|&i| i != top));
        return conical(verts, values, power, vol, &order, 2, true);
    }
    if positive.len() <= n {
        return join(verts, values, power, vol, &positive);
    }
    let mut order = positive.clone();
    order.extend((0..=n).filter(|i| !positive.contains(i)));
    let lo = conical(verts, values, power, vol, &order, LOW_ORDER, false);
    let hi = conical(verts, values, power, vol, &order, HIGH_ORDER, false);
    let scale = verts.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let close = (lo.mass - hi.mass).abs() <= REL_TOL * hi.mass.abs()
        && (&lo.first - &hi.first).norm() <= REL_TOL * hi.mass.abs() * scale;
    if close || depth >= MAX_SPLITS {
        return hi;
    }
    // Bisect the longest edge.
    let (mut ia, mut ib, mut best) = (0, 1, -1.0);
    for i in 0..=n {
        for j in i + 1..=n {
            let l = (&verts[i] - &verts[j]).norm_squared();
            if l > best {
                best = l;
                ia = i;
                ib = j;
            }
        }
    }
    let mid = (&verts[ia] + &verts[ib]) * 0.5;
    let pmid = 0.5 * (values[ia] + values[ib]);
    let mut out = Moments::zero(n);
    for replace in [ia, ib] {
        let mut v = verts.to_vec();
        let mut p = values.to_vec();
        v[replace] = mid.clone();
        p[replace] = pmid;
        out.add(&simplex_adaptive(&v, &p, power, 0.5 * vol, depth + 1));
    }
    out
}

/// p vanishes on the face Z spanned by the zero vertices. Writing
/// λ = ((1-u)ζ, uη) with ζ on Z and η on the positive face N splits the
/// integral into a Beta integral in u and a smooth integral over N.
fn join(verts: &[Vector], values: &[f64], power: f64, vol: f64, positive: &[usize]) -> Moments {
    let n = verts[0].len();
    let zero: Vec<usize> = (0..=n).filter(|i| !positive.contains(i)).collect();
    let (k, m) = (zero.len(), positive.len() - 1);
    // N in barycentric coordinates: the standard m-simplex.
    let mut std_verts = vec![DVector::zeros(m)];
    for j in 0..m {
        let mut e = DVector::zeros(m);
        e[j] = 1.0;
        std_verts.push(e);
    }
    let face_values: Vec<f64> = positive.iter().map(|&i| values[i]).collect();
    let std_vol = 1.0 / crate::polytope::factorial(m);
    let face = simplex_adaptive(&std_verts, &face_values, power, std_vol, 0);
    let mut face_first = &verts[positive[0]] * (face.mass - face.first.sum());
    for j in 0..m {
        face_first.axpy(face.first[j], &verts[positive[j + 1]], 1.0);
    }
    let jac = vol * crate::polytope::factorial(n);
    let zfac = 1.0 / crate::polytope::factorial(k - 1);
    let e = power + m as f64;
    let mass = jac * beta_unchecked(e + 1.0, k as f64) * zfac * face.mass;
    let mut zbar = DVector::zeros(n);
    for &i in &zero {
        zbar += &verts[i];
    }
    zbar /= k as f64;
    let mut first = zbar * (jac * beta_unchecked(e + 1.0, k as f64 + 1.0) * zfac * face.mass);
    first.axpy(jac * beta_unchecked(e + 2.0, k as f64) * zfac, &face_first, 1.0);
    Moments { mass, first }
}

/// Conical-product (collapsed coordinate) rule with `m` points per axis.
fn conical(verts: &[Vector], values: &[f64], power: f64, vol: f64, order: &[usize], m: usize, absorb: bool) -> Moments {
    let n = verts[0].len();
    let rules: Vec<Rc<Rule>> = (1..=n)
        .map(|j| {
            let alpha = if absorb && j == 1 { power } else { 0.0 };
            gauss_jacobi(m, alpha, (n - j) as f64)
        })
        .collect();
    let jac = vol * crate::polytope::factorial(n);
    let ptop = values[order[0]];
    let mut out = Moments::zero(n);
    let mut idx = vec![0usize; n];
    let mut lambda = vec![0.0; n + 1];
    loop {
        let mut w = jac;
        let mut rem = 1.0;
        for j in 0..n {
            let u = rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
            lambda[j] = rem * (1.0 - u);
            rem *= u;
        }
        lambda[n] = rem;
        let f = if absorb {
            if power == 0.0 { 1.0 } else { ptop.powf(power) }
        } else {
            let p: f64 = (0..=n).map(|j| lambda[j] * values[order[j]]).sum();
            p.max(0.0).powf(power)
        };
        let wf = w * f;
        out.mass += wf;
        for j in 0..=n {
            out.first.axpy(wf * lambda[j], &verts[order[j]], 1.0);
        }
        // Advance the multi-index.
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Points and weights of the `m`-per-axis conical-product rule on a simplex
/// (n+1 vertices in R^n); exact for polynomials of degree 2m-1.
pub fn simplex_rule(verts: &[Vector], m: usize) -> Vec<(Vector, f64)> {
    let n = verts[0].len();
    let vol = crate::polytope::simplex_measure(verts, &(0..=n).collect::<Vec<_>>());
    if n == 0 {
        return vec![(verts[0].clone(), 1.0)];
    }
    let rules: Vec<Rc<Rule>> = (1..=n).map(|j| gauss_jacobi(m, 0.0, (n - j) as f64)).collect();
    let jac = vol * crate::polytope::factorial(n);
    let mut out = Vec::with_capacity(m.pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        let mut w = jac;
        let mut rem = 1.0;
        let mut x = DVector::zeros(n);
        for j in 0..n {
            let u = rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
            x.axpy(rem * (1.0 - u), &verts[j], 1.0);
            rem *= u;
        }
        x.axpy(rem, &verts[n], 1.0);
        out.push((x, w));
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Moments of a general nonnegative integrand over a simplex: orders 5 and
/// 8 are compared and the longest edge is bisected while they disagree by
/// more than `rel_tol` (at most `max_depth` levels).
pub fn simplex_moments<F: Fn(&Vector) -> f64>(verts: &[Vector], f: &F, rel_tol: f64, max_depth: usize) -> Moments {
    let n = verts[0].len();
    let apply = |m: usize| {
        let mut out = Moments::zero(n);
        for (x, w) in simplex_rule(verts, m) {
            let v = w * f(&x);
            out.mass += v;
            out.first.axpy(v, &x, 1.0);
        }
        out
    };
    let lo = apply(5);
    let hi = apply(8);
    let scale = verts.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let tol = rel_tol * hi.mass.abs().max(1e-300);
    if max_depth == 0 || ((lo.mass - hi.mass).abs() <= tol && (&lo.first - &hi.first).norm() <= tol * scale) {
        return hi;
    }
    let (mut ia, mut ib, mut best) = (0, 1, -1.0);
    for i in 0..=n {
        for j in i + 1..=n {
            let l = (&verts[i] - &verts[j]).norm_squared();
            if l > best {
                best = l;
                ia = i;
                ib = j;
            }
        }
    }
    let mid = (&verts[ia] + &verts[ib]) * 0.5;
    let mut out = Moments::zero(n);
    for replace in [ia, ib] {
        let mut v = verts.to_vec();
        v[replace] = mid.clone();
        out.add(&simplex_moments(&v, f, rel_tol, max_depth - 1));
    }
    out
}

/// Integral of a nonnegative `f` over a simplex; as [`simplex_moments`]
/// without the first moment.
pub fn simplex_integral<F: Fn(&Vector) -> f64>(verts: &[Vector], f: &F, rel_tol: f64, max_depth: usize) -> f64 {
    let apply = |m: usize| simplex_rule(verts, m).iter().map(|(x, w)| w * f(x)).sum::<f64>();
    let (lo, hi) = (apply(5), apply(8));
    if max_depth == 0 || (lo - hi).abs() <= rel_tol * hi.abs().max(1e-300) {
        return hi;
    }
    let n = verts[0].len();
    let (mut ia, mut ib, mut best) = (0, 1, -1.0);
    for i in 0..=n {
        for j in i + 1..=n {
            let l = (&verts[i] - &verts[j]).norm_squared();
            if l > best {
                best = l;
                ia = i;
                ib = j;
            }
        }
    }
    let mid = (&verts[ia] + &verts[ib]) * 0.5;
    [ia, ib]
        .iter()
        .map(|&replace| {
            let mut v = verts.to_vec();
            v[replace] = mid.clone();
            simplex_integral(&v, f, rel_tol, max_depth - 1)
        })
        .sum()
}

/// Double-exponential (tanh-sinh) quadrature of a function on [a, b];
/// tolerant of integrable endpoint singularities.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let pi2 = std::f64::consts::FRAC_PI_2;
    let eval = |t: f64| -> f64 {
        let s = pi2 * t.sinh();
        let c = s.cosh();
        let x = s.tanh();
        // Distance from the endpoints computed without cancellation.
        let dist = 1.0 / (s.abs().exp() * c);
        let w = pi2 * t.cosh() / (c * c);
        let xp = if x >= 0.0 { b - half * dist } else { a + half * dist };
        if !(xp > a && xp < b) || w < 1e-300 {
            return 0.0;
        }
        w * f(xp)
    };
    let tmax = 3.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while (k as f64) * h <= tmax {
        let t = k as f64 * h;
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * h * half;
    for _ in 0..10 {
        h *= 0.5;
        let mut extra = 0.0;
        let mut k = 1;
        while (k as f64) * h <= tmax {
            let t = k as f64 * h;
            extra += eval(t) + eval(-t);
            k += 2;
        }
        sum += extra;
        let next = sum * h * half;
        let done = (next - estimate).abs() <= tol * next.abs().max(1e-300);
        estimate = next;
        if done {
            break;
        }
    }
    estimate
}

/// B(u, v) = Γ(u)Γ(v)/Γ(u+v) = ∫_0^1 t^{u-1}(1-t)^{v-1} dt.
pub fn beta_integral(u: f64, v: f64) -> Result<f64> {
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::InvalidParameter(format!("beta arguments must be positive, got ({u}, {v})")));
    }
    Ok(beta_unchecked(u, v))
}

/// Exact rising-factorial form when one argument is a small integer,
/// log-gamma otherwise.
fn beta_unchecked(u: f64, v: f64) -> f64 {
    let (x, k) = if v.fract() == 0.0 && v <= 64.0 {
        (u, v)
    } else if u.fract() == 0.0 && u <= 64.0 {
        (v, u)
    } else {
        return (ln_gamma(u) + ln_gamma(v) - ln_gamma(u + v)).exp();
    };
    // B(x, k) = (k-1)! / (x (x+1) ... (x+k-1))
    let mut out = 1.0;
    for i in 0..k as usize {
        let num = if i == 0 { 1.0 } else { i as f64 };
        out *= num / (x + i as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vector;

    #[test]
    fn gauss_jacobi_integrates_monomials() {
        // ∫_0^1 u^3 (1-u)^{0.5} u^2 du = B(6, 1.5)
        let r = gauss_jacobi(5, 0.5, 2.0);
        let approx: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(3)).sum();
        assert!((approx - beta_integral(6.0, 1.5).unwrap()).abs() < 1e-14);
        let r = gauss_jacobi(4, 0.0, 0.0);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simplex_integral_matches_moments_on_a_kink() {
        let verts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        let f = |x: &Vector| (x[0] - 0.3).abs() + 1.0;
        let a = simplex_integral(&verts, &f, 1e-10, 12);
        let b = simplex_moments(&verts, &f, 1e-10, 12).mass;
        let exact = tanh_sinh(|x| ((x - 0.3f64).abs() + 1.0) * (1.0 - x), 0.0, 1.0, 1e-15);
        assert!((a - exact).abs() < 1e-7 && (b - exact).abs() < 1e-7, "{a} {b} {exact}");
    }

    #[test]
    fn simplex_rule_is_exact_for_polynomials() {
        // ∫ x^a y^b over the unit triangle = a! b! / (a+b+2)!
        let verts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        let rule = simplex_rule(&verts, 4);
        let v: f64 = rule.iter().map(|(x, w)| w * x[0].powi(4) * x[1].powi(3)).sum();
        assert!((v - 24.0 * 6.0 / 362880.0).abs() < 1e-16);
        let m = simplex_moments(&verts, &|x: &Vector| (x[0] - 0.3).abs(), 1e-10, 12);
        // ∫ |x - 0.3| (1 - x) dx over [0, 1]
        let exact = tanh_sinh(|x| (x - 0.3f64).abs() * (1.0 - x), 0.0, 1.0, 1e-15);
        assert!((m.mass - exact).abs() < 1e-7, "{} vs {}", m.mass, exact);
    }

    #[test]
    fn beta_integer_argument_is_exact() {
        // B(3, 1.5) = 2 / (1.5 · 2.5 · 3.5) and symmetric.
        let exact = 2.0 / (1.5 * 2.5 * 3.5);
        assert_eq!(beta_integral(3.0, 1.5).unwrap(), beta_integral(1.5, 3.0).unwrap());
        assert!((beta_integral(3.0, 1.5).unwrap() - exact).abs() <= 1e-16);
        // Non-integer arguments fall back to log-gamma: B(1/2, 1/2) = π.
        assert!((beta_integral(0.5, 0.5).unwrap() - std::f64::consts::PI).abs() < 1e-13);
    }

    #[test]
    fn beta_examples() {
        assert!((beta_integral(2.0, 2.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((beta_integral(1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(beta_integral(0.0, 1.0).is_err());
        assert!(beta_integral(1.0, -2.0).is_err());
    }

    #[test]
    fn beta_matches_direct_quadrature() {
        // ∫ t^3 (1-t) dt = 1/20 and the centroid quotient B(n+1,v)/B(n,v).
        let direct = tanh_sinh(|t| t.powi(3) * (1.0 - t), 0.0, 1.0, 1e-14);
        assert!((direct - 0.05).abs() < 1e-13);
        assert!((beta_integral(4.0, 2.0).unwrap() - direct).abs() < 1e-13);
        let (n, g) = (3.0, 1.0);
        let q = beta_integral(n + 1.0, 1.0 / g + 1.0).unwrap() / beta_integral(n, 1.0 / g + 1.0).unwrap();
        assert!((q - n * g / ((n + 1.0) * g + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        let v = tanh_sinh(|t| t.sqrt(), 0.0, 1.0, 1e-13);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        let v = tanh_sinh(|t| 1.0 / t.sqrt(), 0.0, 4.0, 1e-12);
        assert!((v - 4.0).abs() < 1e-9);
    }

    #[test]
    fn unit_triangle_moments() {
        let verts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        let m = simplex_power_moments(&verts, &[1.0, 1.0, 1.0], 1.0);
        assert!((m.mass - 0.5).abs() < 1e-15, "{:e}", m.mass - 0.5);
        assert!((&m.first / m.mass - vector(&[1.0 / 3.0, 1.0 / 3.0])).norm() < 1e-15);
    }

    #[test]
    fn vertex_zero_power_is_exact() {
        // p = x + y on the unit triangle; sections {x + y = t} have length t√2.
        let verts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        for alpha in [0.3, 0.5, 2.0, 7.5] {
            let m = simplex_power_moments(&verts, &[0.0, 1.0, 1.0], alpha);
            assert!((m.mass - 1.0 / (alpha + 2.0)).abs() < 1e-14, "{alpha}");
            let fx = 0.5 / (alpha + 3.0);
            assert!((&m.first - vector(&[fx, fx])).norm() < 1e-14, "{alpha}");
        }
        // p = 1 - x - y vanishes on an edge of the unit tetrahedron.
        let tet = vec![vector(&[0.0, 0.0, 0.0]), vector(&[1.0, 0.0, 0.0]), vector(&[0.0, 1.0, 0.0]), vector(&[0.0, 0.0, 1.0])];
        let m = simplex_power_moments(&tet, &[1.0, 0.0, 0.0, 1.0], 0.5);
        // ∫ (1-x-y)^{1/2} (1-x-y) over the unit triangle = ∫_0^1 (1-s)^{3/2} s ds.
        let exact = beta_integral(2.0, 2.5).unwrap();
        assert!((m.mass - exact).abs() < 1e-14, "{:e}", m.mass - exact);
    }

    #[test]
    fn cone_power_is_exact() {
        // p = 1 - x on the triangle with apex at x = 0 and base on x = 1:
        // ∫ (1-x)^{1/2} · 2x dx over [0,1] (section length 2x).
        let verts = vec![vector(&[0.0, 0.0]), vector(&[1.0, -1.0]), vector(&[1.0, 1.0])];
        let m = simplex_power_moments(&verts, &[1.0, 0.0, 0.0], 0.5);
        let exact = 2.0 * beta_integral(2.0, 1.5).unwrap();
        assert!((m.mass - exact).abs() < 1e-14);
        let exact_x = 2.0 * beta_integral(3.0, 1.5).unwrap();
        assert!((m.first[0] - exact_x).abs() < 1e-14);
    }

    #[test]
    fn smooth_power_converges() {
        // p = 1 + x + y on the unit triangle, power 1/2, against tanh-sinh.
        let verts = vec![vector(&[0.0, 0.0]), vector(&[1.0, 0.0]), vector(&[0.0, 1.0])];
        let m = simplex_power_moments(&verts, &[1.0, 2.0, 2.0], 0.5);
        let exact = tanh_sinh(|x| tanh_sinh(|y| (1.0 + x + y).sqrt(), 0.0, 1.0 - x, 1e-14), 0.0, 1.0, 1e-13);
        assert!((m.mass - exact).abs() < 1e-11, "{} vs {}", m.mass, exact);
    }

    #[test]
    fn degree_seven_polynomial_in_3d() {
        // p^7 with p = x on the standard 3-simplex: ∫ x^7 = 7! 2! / 10! · ... via Dirichlet.
        let verts = vec![
            vector(&[0.0, 0.0, 0.0]),
            vector(&[1.0, 0.0, 0.0]),
            vector(&[0.0, 1.0, 0.0]),
            vector(&[0.0, 0.0, 1.0]),
        ];
        // Values: p = 1 + x, so p^7 is a degree 7 polynomial and never zero.
        let m = simplex_power_moments(&verts, &[1.0, 2.0, 1.0, 1.0], 7.0);
        // ∫_simplex (1+x)^7 = ∫_0^1 (1+x)^7 (1-x)^2/2 dx
        let exact = tanh_sinh(|x| (1.0 + x).powi(7) * (1.0 - x).powi(2) / 2.0, 0.0, 1.0, 1e-15);
        assert!((m.mass - exact).abs() < 1e-12 * exact);
    }
}
