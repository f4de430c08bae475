use super::*;
use crate::geom::{random_gaussian, random_unit, unit, vector};
use crate::quadrature::tanh_sinh;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// (1 - s)_+ on [-1/2, 1], γ = 1.
fn tent() -> GammaFunction {
    let seg = VPolytope::hull(&[vector(&[-0.5]), vector(&[1.0])]).unwrap();
    GammaFunction::from_affine(1.0, 1.0, &seg, &vector(&[-1.0]), 1.0).unwrap()
}

fn cube(lo: f64, hi: f64, n: usize) -> VPolytope {
    let pts: Vec<Vector> = (0..1usize << n)
        .map(|mask| DVector::from_iterator(n, (0..n).map(|i| if mask >> i & 1 == 1 { hi } else { lo })))
        .collect();
    VPolytope::hull(&pts).unwrap()
}

/// Support from Gaussian points, profile the minimum of positive affine
/// forms at the vertices.
fn random_function(n: usize, gamma: f64, seed: u64) -> GammaFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(n + 2..=4 * n + 2);
    let body = loop {
        let pts: Vec<Vector> = (0..count).map(|_| random_gaussian(n, &mut rng)).collect();
        if let Ok(p) = VPolytope::hull(&pts) {
            if p.is_full_dimensional() && p.volume() > 1e-2 {
                break p;
            }
        }
    };
    let forms: Vec<(Vector, f64)> = (0..rng.random_range(1..=4))
        .map(|_| (random_gaussian(n, &mut rng) * 0.3, 1.5 + rng.random::<f64>()))
        .collect();
    let values: Vec<f64> = body
        .vertices()
        .iter()
        .map(|v| forms.iter().map(|(a, b)| (a.dot(v) + b).max(0.0)).fold(f64::INFINITY, f64::min))
        .collect();
    GammaFunction::from_vertex_values(gamma, 1.0 + rng.random::<f64>(), &body, &values).unwrap()
}

#[test]
fn evaluate_examples() {
    let f = tent();
    assert_eq!(f.evaluate(&vector(&[0.0])), 1.0);
    assert_eq!(f.evaluate(&vector(&[1.5])), 0.0);
    assert_eq!(f.evaluate(&vector(&[-0.6])), 0.0);
    let sq = cube(0.0, 1.0, 2);
    let g = GammaFunction::from_affine(2.0, 3.0, &sq, &DVector::zeros(2), 4.0).unwrap();
    assert!((g.evaluate(&vector(&[0.5, 0.5])) - 6.0).abs() < 1e-15);
}

#[test]
fn ray_integral_examples() {
    let f = tent();
    let th = unit(1, 0);
    assert!((f.ray_integral(&th, 0.0) - 0.5).abs() < 1e-15);
    let total = f.ray_integral(&th, f64::NEG_INFINITY);
    assert!((total - 9.0 / 8.0).abs() < 1e-15);
    // Independent 1-D oracle for both integrals.
    let oracle_half = tanh_sinh(|s| 1.0 - s, 0.0, 1.0, 1e-15);
    let oracle_all = tanh_sinh(|s| 1.0 - s, -0.5, 1.0, 1e-15);
    assert!((f.ray_integral(&th, 0.0) / total - oracle_half / oracle_all).abs() < 1e-14);
    let (n, g): (f64, f64) = (1.0, 1.0);
    let bound = ((g + 1.0) / (g * n + g + 1.0)).powf((g + 1.0) / g);
    assert!((f.ray_integral(&th, 0.0) / total - bound).abs() < 1e-14);
    assert!((bound - 4.0 / 9.0).abs() < 1e-15);
    assert_eq!(f.ray_integral(&th, 2.0), 0.0);
    assert_eq!(f.ray_integral(&-th, 2.0), 0.0);
}

#[test]
fn ray_integral_of_power_matches_oracle() {
    // p = 1 - x1 on a triangle, γ = 1/3: along θ the integrand is (1 - s cosφ)^3.
    let tri = VPolytope::hull(&[vector(&[-1.0, -1.0]), vector(&[1.0, 0.0]), vector(&[-1.0, 1.0])]).unwrap();
    let f = GammaFunction::from_affine(1.0 / 3.0, 2.0, &tri, &vector(&[-1.0, 0.0]), 1.0).unwrap();
    let phi: f64 = 0.2;
    let th = vector(&[phi.cos(), phi.sin()]);
    let r = tri.radial(&th).unwrap();
    let oracle = tanh_sinh(|s| 2.0 * (1.0 - s * phi.cos()).powi(3), 0.1, r, 1e-15);
    assert!((f.ray_integral(&th, 0.1) - oracle).abs() < 1e-13);
}

#[test]
fn integrate_examples() {
    let c = GammaFunction::indicator(&cube(0.0, 1.0, 3), 1.0).unwrap();
    assert!((c.integrate() - 1.0).abs() < 1e-14);
    assert!((c.centroid().unwrap() - vector(&[0.5, 0.5, 0.5])).norm() < 1e-14);
    let f = tent();
    assert!((f.integrate() - 9.0 / 8.0).abs() < 1e-14);
    assert!(f.centroid().unwrap()[0].abs() < 1e-14);
    let zero = GammaFunction::from_affine(1.0, 1.0, &cube(0.0, 1.0, 2), &DVector::zeros(2), 0.0).unwrap();
    assert!(matches!(zero.centroid(), Err(Error::ZeroIntegral)));
}

#[test]
fn cone_function_centroid_at_origin() {
    // r0 = -(nγ/(γ+1)) r1 puts the centroid at the origin.
    for (theta, gamma) in [(vector(&[1.0, 0.0]), 1.0), (vector(&[0.3f64.cos(), 0.3f64.sin()]), 2.0)] {
        let (n, r1) = (2.0, 1.0);
        let r0 = -(n * gamma / (gamma + 1.0)) * r1;
        let xi = unit(2, 0);
        let d = [vector(&[0.0, -1.0]), vector(&[0.0, 1.0])];
        let k = VPolytope::hull(&[&theta * r0, &theta * r1 + &d[0], &theta * r1 + &d[1]]).unwrap();
        let t = GammaFunction::cone_affine(gamma, 1.5, &k, &xi, r1, &theta).unwrap();
        assert!(t.centroid().unwrap().norm() < 1e-12, "{:?}", t.centroid());
    }
}

#[test]
fn vertex_values_are_read_as_concave_envelope() {
    // Square with a single raised corner: the envelope splits along the
    // diagonal through that corner's neighbours.
    let sq = cube(0.0, 1.0, 2);
    let values: Vec<f64> = sq.vertices().iter().map(|v| if v[0] == 1.0 && v[1] == 1.0 { 2.0 } else { 1.0 }).collect();
    let f = GammaFunction::from_vertex_values(1.0, 1.0, &sq, &values).unwrap();
    assert_eq!(f.cell_count(), 2);
    // The envelope uses the diagonal through the raised corner: p = 1 + min(x, y).
    assert!((f.profile(&vector(&[0.9, 0.8])) - 1.8).abs() < 1e-14);
    assert!((f.profile(&vector(&[0.2, 0.1])) - 1.1).abs() < 1e-14);
    assert!((f.profile(&vector(&[0.1, 0.7])) - 1.1).abs() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(f.concavity_slack(200, &mut rng) >= -1e-12);
}

#[test]
fn constructors_reject_bad_input() {
    let sq = cube(0.0, 1.0, 2);
    assert!(GammaFunction::from_vertex_values(0.0, 1.0, &sq, &[1.0; 4]).is_err());
    assert!(GammaFunction::from_vertex_values(1.0, -1.0, &sq, &[1.0; 4]).is_err());
    assert!(GammaFunction::from_vertex_values(1.0, 1.0, &sq, &[1.0; 3]).is_err());
    assert!(GammaFunction::from_vertex_values(1.0, 1.0, &sq, &[1.0, 1.0, -0.1, 1.0]).is_err());
    assert!(GammaFunction::from_affine(1.0, 1.0, &sq, &vector(&[-2.0, 0.0]), 1.0).is_err());
    // Tiny negative noise is clamped.
    assert!(GammaFunction::from_vertex_values(1.0, 1.0, &sq, &[1.0, 1.0, -1e-14, 1.0]).is_ok());
}

#[test]
fn affine_profile_is_detected() {
    let f = random_function(2, 1.0, 3);
    let sq = cube(-1.0, 1.0, 2);
    let a = vector(&[0.2, -0.1]);
    let values: Vec<f64> = sq.vertices().iter().map(|v| a.dot(v) + 1.0).collect();
    let g = GammaFunction::from_vertex_values(1.0, 1.0, &sq, &values).unwrap();
    let (ga, gb) = g.affine_form().unwrap();
    assert!((ga - a).norm() < 1e-14 && (gb - 1.0).abs() < 1e-14);
    if f.cell_count() > 1 {
        let (fa, fb) = (f.cells[0].grad.clone(), f.cells[0].offset);
        let differs = f.cells.iter().any(|c| (&c.grad - &fa).norm() + (c.offset - fb).abs() > 1e-6);
        assert_eq!(f.affine_form().is_none(), differs);
    }
}

#[test]
fn halfspace_mass_ratio_examples() {
    let sym = GammaFunction::indicator(&cube(-1.0, 1.0, 3), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 1..=3 {
        let e = Subspace::random(3, k, &mut rng);
        let th = e.lift(&random_unit(k, &mut rng)).unwrap();
        assert!((sym.halfspace_mass_ratio(&e, &th).unwrap() - 0.5).abs() < 1e-12, "k={k}");
    }
    // k = 1 agrees with the ray integrals of the restriction.
    let f = random_function(2, 1.0, 5);
    let c = f.centroid().unwrap();
    let f = f.translate(&-c).unwrap();
    let th = random_unit(2, &mut rng);
    let e = Subspace::line(&th).unwrap();
    let ratio = f.halfspace_mass_ratio(&e, &th).unwrap();
    let direct = f.ray_integral(&th, 0.0) / (f.ray_integral(&th, 0.0) + f.ray_integral(&-&th, 0.0));
    assert!((ratio - direct).abs() < 1e-12);
    let off = vector(&[1.0, 1.0]);
    assert!(f.halfspace_mass_ratio(&e, &off).is_err());
}

#[test]
fn restriction_and_clip() {
    let f = random_function(3, 2.0, 6);
    let full = f.restrict(&DVector::zeros(3), &Subspace::full(3)).unwrap();
    assert!((full.integrate() - f.integrate()).abs() < 1e-10 * f.integrate());
    let h = Halfspace::new(vector(&[0.3, -0.5, 0.2]), 0.1).unwrap();
    let total = f.clip(&h).unwrap().integrate() + f.clip(&h.flipped()).unwrap().integrate();
    assert!((total - f.integrate()).abs() < 1e-9 * f.integrate());
    // Restriction of an affine profile stays affine.
    let cone = GammaFunction::from_affine(1.0, 1.0, &cube(-1.0, 1.0, 3), &vector(&[-0.2, 0.1, 0.0]), 1.0).unwrap();
    let plane = Subspace::axes(3, &[0, 1]);
    let r = cone.restrict(&vector(&[0.0, 0.0, 0.3]), &plane).unwrap();
    assert!(matches!(r.kind(), ProfileKind::Affine { .. }));
    let y = vector(&[0.4, -0.2]);
    assert!((r.evaluate(&y) - cone.evaluate(&vector(&[0.4, -0.2, 0.3]))).abs() < 1e-14);
}

#[test]
fn json_round_trips() {
    let sq = cube(-1.0, 1.0, 2);
    let fs = vec![
        GammaFunction::from_vertex_values(0.5, 2.0, &sq, &[1.0, 2.0, 1.5, 1.2]).unwrap(),
        GammaFunction::from_affine(1.0, 1.0, &sq, &vector(&[0.1, 0.2]), 1.0).unwrap(),
        random_function(2, 1.0, 7).clip(&Halfspace::new(unit(2, 0), 0.0).unwrap()).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for f in fs {
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = GammaFunction::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        let again = GammaFunction::from_json(&back.to_json()).unwrap();
        assert_eq!(again.to_json(), back.to_json());
        for _ in 0..20 {
            let x = random_point(f.support(), &mut rng);
            assert!((back.evaluate(&x) - f.evaluate(&x)).abs() < 1e-14);
        }
    }
    let bad = r#"{"gamma": 1.0, "scale": 1.0, "support": {"n": 1, "vertices": [[0.0], [1.0]]}, "profile": {"values": [1.0]}}"#;
    assert!(GammaFunction::from_json(&serde_json::from_str(bad).unwrap()).is_err());
}

#[test]
fn integral_matches_monte_carlo() {
    for (n, gamma, seed) in [(2, 0.5, 11u64), (3, 2.0, 12)] {
        let f = random_function(n, gamma, seed);
        let body = f.support();
        let lo: Vec<f64> = (0..n).map(|i| -body.support(&-unit(n, i)).unwrap()).collect();
        let hi: Vec<f64> = (0..n).map(|i| body.support(&unit(n, i)).unwrap()).collect();
        let box_vol: f64 = (0..n).map(|i| hi[i] - lo[i]).product();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            let x = DVector::from_iterator(n, (0..n).map(|i| rng.random_range(lo[i]..hi[i])));
            let v = f.evaluate(&x);
            s1 += v;
            s2 += v * v;
        }
        let mean = s1 / samples as f64;
        let sd = box_vol * ((s2 / samples as f64 - mean * mean) / samples as f64).sqrt();
        let mc = box_vol * mean;
        assert!((f.integrate() - mc).abs() <= 4.0 * sd, "n={n}: {} vs {mc} ± {sd}", f.integrate());
    }
}

#[test]
fn marginal_preserves_mass_and_centroid() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (n, d, gamma, seed) in [(3, 2, 1.0, 14u64), (3, 1, 0.5, 15), (2, 1, 2.0, 16)] {
        let f = random_function(n, gamma, seed);
        let et = Subspace::random(n, d, &mut rng);
        let m = FiberFunction::marginal(&f, &et).unwrap();
        assert_eq!(m.gamma(), marginal_gamma(gamma, n - d + 1));
        let (a, b) = (m.integrate(), f.integrate());
        assert!((a - b).abs() < 1e-6 * b, "n={n} d={d}: {a} vs {b}");
        let g = et.coords_of_projection(&f.centroid().unwrap());
        let diam = f.support().diameter();
        assert!((m.centroid().unwrap() - g).norm() < 1e-6 * diam, "n={n} d={d}");
    }
}

#[test]
fn marginal_onto_whole_space_is_the_function() {
    let f = random_function(2, 1.0, 17);
    let m = FiberFunction::marginal(&f, &Subspace::full(2)).unwrap();
    assert_eq!(m.gamma(), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let x = random_point(f.support(), &mut rng);
        assert_eq!(m.value(&x), f.evaluate(&x));
    }
    assert_eq!(marginal_gamma(1.0, 2), 0.5);
}

#[test]
fn marginal_satisfies_bbl() {
    let f = random_function(3, 1.0, 18);
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let et = Subspace::random(3, 2, &mut rng);
    let m = FiberFunction::marginal(&f, &et).unwrap();
    let y = random_point(m.base(), &mut rng);
    assert!(m.bbl_midpoint_check(&y, &y, 0.3).abs() < 1e-12);
    let z = random_point(m.base(), &mut rng);
    assert!(m.bbl_midpoint_check(&y, &z, 1.0).abs() < 1e-12);
    assert!(m.bbl_midpoint_check(&y, &z, 0.0).abs() < 1e-12);
    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let (a, b) = (random_point(m.base(), &mut rng), random_point(m.base(), &mut rng));
        worst = worst.min(m.bbl_midpoint_check(&a, &b, rng.random()));
    }
    assert!(worst >= -1e-7, "{worst}");
    let sampled = m.sampled_default().unwrap();
    assert!(sampled.concavity_slack(200, &mut rng) >= -1e-9);
}

#[test]
fn section_profile_of_simplex() {
    let simplex = VPolytope::hull(&[
        vector(&[0.0, 0.0, 0.0]),
        vector(&[1.0, 0.0, 0.0]),
        vector(&[0.0, 1.0, 0.0]),
        vector(&[0.0, 0.0, 1.0]),
    ])
    .unwrap();
    let theta = unit(3, 0);
    let e = Subspace::axes(3, &[0, 1]);
    let a = FiberFunction::section_profile(&simplex, &theta, &e).unwrap();
    assert_eq!(a.gamma(), 1.0);
    // Chords along e2 have length (1 - x - z)_+; F is affine so sampling is exact.
    let shift = a.subspace().project(&simplex.centroid().unwrap()).unwrap();
    let sampled = a.sampled(0.1, 500).unwrap();
    for y in sampled.nodes() {
        let p = a.subspace().lift(y).unwrap() + &shift;
        let direct = (1.0 - p[0] - p[2]).max(0.0);
        assert!((a.value(y) - direct).abs() < 1e-12, "{} vs {direct}", a.value(y));
        assert!((sampled.evaluate(y) - direct).abs() < 1e-12);
    }
    // Centroid of A_{K,Ẽ} is the origin after centering.
    assert!(a.centroid().unwrap().norm() < 1e-8);
    assert!((a.integrate() - simplex.volume()).abs() < 1e-8);
}

#[test]
fn section_profile_with_k_equal_n_is_the_slice_function() {
    let c = cube(-1.0, 1.0, 3);
    let th = unit(3, 2);
    let a = FiberFunction::section_profile(&c, &th, &Subspace::full(3)).unwrap();
    assert_eq!(a.subspace().dim(), 1);
    assert!((a.gamma() - 0.5).abs() < 1e-15);
    for t in [-0.9, 0.0, 0.4] {
        assert!((a.value(&vector(&[t])) - 4.0).abs() < 1e-12);
    }
    assert_eq!(a.value(&vector(&[1.1])), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn profile_is_concave(seed in any::<u64>(), n in 1usize..=3, gamma in 0.2f64..5.0) {
        let f = random_function(n, gamma, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(f.concavity_slack(200, &mut rng) >= -1e-9);
    }

    #[test]
    fn ray_integral_is_additive(seed in any::<u64>(), n in 1usize..=3, t in -1.0f64..1.0, u in 0.0f64..1.0) {
        let f = random_function(n, 1.5, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let th = random_unit(n, &mut rng);
        let t1 = t + u;
        let whole = f.ray_integral(&th, t);
        let head = f.ray_integral(&th, t) - f.ray_integral(&th, t1);
        // ∫_t^{t1} computed independently along the shifted line.
        let piece = f.line_integral(&(&th * t), &th, 0.0) - f.line_integral(&(&th * t1), &th, 0.0);
        prop_assert!((head - piece).abs() < 1e-12 * (1.0 + whole));
        prop_assert!(whole >= 0.0);
    }

    #[test]
    fn centroid_is_interior(seed in any::<u64>(), n in 1usize..=3, gamma in 0.3f64..3.0) {
        let f = random_function(n, gamma, seed);
        let c = f.centroid().unwrap();
        let g = f.translate(&-&c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unit(n, &mut rng);
        prop_assert!(g.support().radial(&u).unwrap() > 0.0);
        prop_assert!(g.centroid().unwrap().norm() < 1e-10 * (1.0 + c.norm()));
    }
}
