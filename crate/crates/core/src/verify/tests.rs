use super::*;
use crate::extremal::{
    ball_in, grunbaum_bound, projections_equality_body, standard_sections_body, theorem_equality_function, POLYTOPAL,
};
use crate::gammafn::ProfileKind;
use crate::geom::{unit, vector};
use proptest::prelude::*;

fn small_sweep() -> SweepConfig {
    SweepConfig { frames: 2, theta_grid: 32, refine_iters: 30 }
}

fn cube(n: usize) -> VPolytope {
    let pts: Vec<Vector> = (0..1usize << n)
        .map(|mask| DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }))
        .collect();
    VPolytope::hull(&pts).unwrap()
}

/// conv(o, e_1, .., e_n) moved so its centroid is o.
fn centered_simplex(n: usize) -> VPolytope {
    let mut pts = vec![DVector::zeros(n)];
    pts.extend((0..n).map(|i| unit(n, i)));
    let g = DVector::from_element(n, 1.0 / (n as f64 + 1.0));
    VPolytope::hull(&pts.iter().map(|p| p - &g).collect::<Vec<_>>()).unwrap()
}

#[test]
fn trial_seeds_are_distinct_and_stable() {
    let a: Vec<u64> = (0..50).map(|i| trial_seed(42, i)).collect();
    let b: Vec<u64> = (0..50).map(|i| trial_seed(42, i)).collect();
    assert_eq!(a, b);
    let mut sorted = a.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), 50);
    assert_ne!(trial_seed(42, 0), trial_seed(43, 0));
}

#[test]
fn random_body_is_deterministic_and_centered() {
    let a = random_body(3, 12, 7).unwrap();
    let b = random_body(3, 12, 7).unwrap();
    assert_eq!(a.vertices(), b.vertices());
    assert!(a.centroid().unwrap().norm() < 1e-10);
    let big = random_body(3, 30, 11).unwrap();
    assert_eq!(big.intrinsic_dim(), Some(3));
    assert!(big.centroid().unwrap().norm() < 1e-10);
}

#[test]
fn random_body_rejects_too_few_points() {
    assert!(matches!(random_body(3, 3, 1), Err(Error::InvalidParameter(_))));
    assert!(random_body(0, 5, 1).is_err());
}

#[test]
fn random_gamma_function_is_centered_and_concave() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (i, &(n, g)) in [(1, 1.0), (2, 0.5), (2, 2.0), (3, 1.0)].iter().enumerate() {
        let f = random_gamma_function(n, g, 100 + i as u64).unwrap();
        assert!(f.centroid().unwrap().norm() < 1e-8);
        assert_eq!(f.gamma(), g);
        assert!(f.concavity_slack(200, &mut rng) >= -1e-9);
    }
    assert!(random_gamma_function(2, 0.0, 1).is_err());
    assert!(random_gamma_function(2, f64::INFINITY, 1).is_err());
}

#[test]
fn single_affine_form_gives_affine_profile() {
    let mut affine = 0;
    for seed in 0..30 {
        let f = random_gamma_function(2, 1.0, seed).unwrap();
        if let ProfileKind::Affine { a, b } = f.kind() {
            affine += 1;
            let v = &f.support().vertices()[0];
            assert!((f.profile(v) - (a.dot(v) + b)).abs() < 1e-12);
        }
    }
    assert!(affine > 0);
}

#[test]
fn direction_grid_shapes() {
    assert_eq!(direction_grid(1, 64).len(), 2);
    let g2 = direction_grid(2, 64);
    assert_eq!(g2.len(), 64);
    assert!(g2.iter().all(|d| (d.norm() - 1.0).abs() < 1e-12));
    let g3 = direction_grid(3, 64);
    assert!(g3.iter().all(|d| d.len() == 3 && (d.norm() - 1.0).abs() < 1e-9));
}

#[test]
fn sweep_rejects_bad_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(sweep_min(3, 0, &small_sweep(), &mut rng, |_, _| Some(1.0)).is_err());
    assert!(sweep_min(3, 4, &small_sweep(), &mut rng, |_, _| Some(1.0)).is_err());
    assert!(matches!(sweep_min(3, 2, &small_sweep(), &mut rng, |_, _| None), Err(Error::Degenerate(_))));
}

#[test]
fn sweep_result_is_an_actual_evaluation() {
    let body = random_body(3, 10, 21).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = sweep_min_ratio(&body, 2, &small_sweep(), &mut rng).unwrap();
    assert!(s.frame.orthonormality_defect() < 1e-9);
    assert!(s.frame.contains(&s.theta, 1e-9));
    assert_eq!(s.min_ratio, section_ratio(&body, &s.frame, &s.theta).unwrap());
    assert!(s.evaluations > 0);
}

#[test]
fn refinement_never_worsens_the_grid_minimum() {
    let body = random_body(3, 10, 22).unwrap();
    let coarse = SweepConfig { refine_iters: 0, ..small_sweep() };
    let fine = small_sweep();
    let a = sweep_min_ratio(&body, 2, &coarse, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = sweep_min_ratio(&body, 2, &fine, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert!(b.min_ratio <= a.min_ratio);
}

#[test]
fn ball_sweep_is_near_one_half() {
    let ball = ball_in(&Subspace::full(3), 128).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in 1..=3 {
        let s = sweep_min_ratio(&ball, k, &small_sweep(), &mut rng).unwrap();
        assert!((s.min_ratio - 0.5).abs() < 0.02, "k = {k}: {}", s.min_ratio);
    }
}

#[test]
fn sections_body_sweep_finds_the_constant() {
    let (body, e, theta) = standard_sections_body(3, 2, &POLYTOPAL).unwrap();
    let bound = grunbaum_bound(3, 2).unwrap();
    assert!((section_ratio(&body, &e, &theta).unwrap() - bound).abs() < 1e-9);
    // Sweeping inside the constructed E only.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = sweep_min(3, 2, &SweepConfig { frames: 1, theta_grid: 64, refine_iters: 40 }, &mut rng, |_, th| {
        section_ratio(&body, &e, th)
    })
    .unwrap();
    assert!((s.min_ratio - bound).abs() < 1e-4, "{}", s.min_ratio);
    assert!(s.min_ratio >= bound - 1e-9);
    let th = e.lift(&e.coords_of_projection(&s.theta)).unwrap().normalize();
    assert!(th.dot(&theta) > 0.9);
}

#[test]
fn cube_margins_are_positive() {
    let c = cube(3);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = small_sweep();
    let g = check_grunbaum(&c, &cfg, &mut rng).unwrap();
    assert!(g.ratio >= 0.5 - 1e-12 && g.margin > 0.0);
    for mode in [MinkradMode::Support, MinkradMode::Radial] {
        let m = check_minkrad(&c, mode, &cfg, &mut rng).unwrap();
        assert!((m.ratio - 0.5).abs() < 1e-12 && m.margin > 0.0);
    }
    for k in 1..=3 {
        let p = check_projection(&c, k, &cfg, &mut rng).unwrap();
        assert!(p.margin > 0.0);
        let s = check_sections(&c, k, &cfg, &mut rng).unwrap();
        assert!(s.margin > 0.0);
    }
}

#[test]
fn simplex_is_the_support_equality_case() {
    for n in 2..=4 {
        let s = centered_simplex(n);
        let theta = DVector::from_element(n, 1.0 / (n as f64).sqrt());
        let r = minkrad_ratio(&s, &theta, MinkradMode::Support).unwrap();
        assert!((r - 1.0 / (n as f64 + 1.0)).abs() < 1e-9, "n = {n}: {r}");
        let m = check_minkrad(&s, MinkradMode::Support, &small_sweep(), &mut ChaCha8Rng::seed_from_u64(n as u64)).unwrap();
        assert!(m.margin >= -1e-9 && m.margin < 0.02);
    }
}

#[test]
fn projection_margin_on_equality_body_shrinks() {
    let e = Subspace::axes(3, &[0, 1]);
    let theta = unit(3, 0);
    let bound = grunbaum_bound(3, 2).unwrap();
    let margins: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&m| {
            let body = projections_equality_body(&e, &theta, m).unwrap();
            projection_ratio(&body, &e, &theta).unwrap() - bound
        })
        .collect();
    for w in margins.windows(2) {
        assert!(w[1].abs() <= w[0].abs().max(1e-12));
    }
    assert!(margins[1].abs() < 5e-3);
}

#[test]
fn functional_checks() {
    // Symmetric: the indicator of a cube.
    let f = GammaFunction::indicator(&cube(2), 1.0).unwrap();
    let e = Subspace::full(2);
    let m = check_functional(&f, &e, &unit(2, 0)).unwrap();
    assert!((m.ratio - 0.5).abs() < 1e-9);
    let (g, e, theta) = crate::extremal::standard_corollary_function(3, 2, 1.0, 64).unwrap();
    let m = check_functional(&g, &e, &theta).unwrap();
    assert!(m.margin.abs() < 5e-3, "{}", m.margin);
}

#[test]
fn chain_on_equality_function_is_tight() {
    let th = unit(2, 0);
    let seg = ball_in(&Subspace::line(&unit(2, 1)).unwrap(), 2).unwrap();
    let t = theorem_equality_function(2, 1.0, &th, &th, 1.0, 1.0, &seg).unwrap();
    let m = check_transform_chain(t.function(), &th).unwrap();
    assert!(m.margin.abs() < 1e-6, "{m:?}");
    let c = m.chain.unwrap();
    assert!((c.original - c.cone).abs() < 1e-6);
    let m = check_theorem(t.function(), &th).unwrap();
    assert!(m.margin.abs() < 1e-6);
}

#[test]
fn validate_rejects_bad_configs() {
    let ok = TrialConfig::default();
    assert!(ok.validate(CheckKind::Section).is_ok());
    assert!(ok.validate(CheckKind::Functional).is_err());
    let with_gamma = TrialConfig { gamma: Some(1.0), ..ok.clone() };
    assert!(with_gamma.validate(CheckKind::Functional).is_ok());
    assert!(TrialConfig { k: 4, ..ok.clone() }.validate(CheckKind::Section).is_err());
    assert!(TrialConfig { num_points: Some(3), ..ok.clone() }.validate(CheckKind::Section).is_err());
    assert!(TrialConfig { theta_grid_size: 0, ..ok.clone() }.validate(CheckKind::Section).is_err());
    assert!(TrialConfig { tolerance: f64::NAN, ..ok.clone() }.validate(CheckKind::Section).is_err());
    assert!(TrialConfig { n: 1, k: 1, gamma: Some(1.0), ..ok }.validate(CheckKind::Chain).is_err());
}

fn quick_config() -> TrialConfig {
    TrialConfig { num_bodies: 6, theta_grid_size: 16, frames: 1, refine_iters: 10, ..TrialConfig::default() }
}

#[test]
fn run_check_is_deterministic_across_thread_counts() {
    let cfg = quick_config();
    let a = run_check(CheckKind::Section, &cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| run_check(CheckKind::Section, &cfg)).unwrap();
    assert_eq!(a.rows, b.rows);
    assert_eq!(a.skipped, b.skipped);
    assert!(a.passed());
    assert_eq!(a.summary.trials + a.summary.skipped, cfg.num_bodies);
}

#[test]
fn run_check_records_mc_deltas() {
    let cfg = TrialConfig { n: 2, k: 1, num_bodies: 3, mc_samples: 20_000, ..quick_config() };
    let r = run_check(CheckKind::Grunbaum, &cfg).unwrap();
    for row in &r.rows {
        let d = row.mc_delta.unwrap();
        assert!(d.abs() < 5.0, "{d}");
        assert_eq!(row.k, 2);
        assert_eq!(row.gamma, None);
    }
}

#[test]
fn run_check_functional_kinds() {
    let cfg = TrialConfig { n: 2, k: 1, gamma: Some(1.0), num_bodies: 3, ..quick_config() };
    for check in [CheckKind::Functional, CheckKind::Theorem, CheckKind::Chain] {
        let r = run_check(check, &cfg).unwrap();
        assert!(r.passed(), "{check:?}: {:?}", r.summary);
        assert!(r.rows.iter().all(|row| row.gamma == Some(1.0)));
    }
    let chain = run_check(CheckKind::Chain, &cfg).unwrap();
    assert!(chain.rows.iter().all(|row| row.chain.is_some()));
}

#[test]
fn mc_cube_volume() {
    let c = cube(3);
    let est = mc_oracle(&OracleTarget::Body(&c), &Quantity::Volume, 1_000_000, 1).unwrap();
    assert!((est.estimate[0] - 8.0).abs() <= 4.0 * est.sigma[0]);
    // The bounding box is the cube, so every sample hits.
    assert_eq!(est.sigma[0], 0.0);
    let unit_cube = cube(3).scale(0.5).unwrap().translate(&DVector::from_element(3, 0.5));
    let s = centered_simplex(3);
    let est = mc_oracle(&OracleTarget::Body(&s), &Quantity::Volume, 1_000_000, 2).unwrap();
    assert!((est.estimate[0] - 1.0 / 6.0).abs() < 4.0 * est.sigma[0]);
    assert!((unit_cube.volume() - 1.0).abs() < 1e-12);
}

#[test]
fn mc_triangle_centroid() {
    let t = centered_simplex(2);
    let est = mc_oracle(&OracleTarget::Body(&t), &Quantity::Centroid, 1_000_000, 3).unwrap();
    for i in 0..2 {
        assert!(est.estimate[i].abs() < 4.0 * est.sigma[i], "{est:?}");
    }
}

#[test]
fn mc_equality_function_integral() {
    let th = unit(2, 0);
    let seg = ball_in(&Subspace::line(&unit(2, 1)).unwrap(), 2).unwrap();
    let t = theorem_equality_function(2, 1.0, &th, &th, 1.0, 1.0, &seg).unwrap();
    let f = t.function();
    let est = mc_oracle(&OracleTarget::Function(f), &Quantity::Integral, 1_000_000, 4).unwrap();
    assert!((est.estimate[0] - t.integral()).abs() < 4.0 * est.sigma[0], "{est:?} vs {}", t.integral());
    let g = mc_oracle(&OracleTarget::Function(f), &Quantity::Centroid, 1_000_000, 5).unwrap();
    let exact = t.centroid();
    for i in 0..2 {
        assert!((g.estimate[i] - exact[i]).abs() < 4.0 * g.sigma[i]);
    }
}

#[test]
fn mc_fiber_hexagon() {
    let c = cube(3).scale(0.5).unwrap().translate(&DVector::from_element(3, 0.5));
    let normal = DVector::from_element(3, 1.0 / 3f64.sqrt());
    let plane = Subspace::line(&normal).unwrap().complement();
    let point = DVector::from_element(3, 0.5);
    let est = mc_oracle(&OracleTarget::Body(&c), &Quantity::Fiber { point, subspace: plane }, 200_000, 6).unwrap();
    // Regular hexagon with side 1/√2.
    let area = 3.0 * 3f64.sqrt() / 2.0 * 0.5;
    assert!((est.estimate[0] - area).abs() < 0.01 * area, "{est:?}");
}

#[test]
fn mc_rejects_degenerate_input() {
    let c = cube(2);
    assert!(mc_oracle(&OracleTarget::Body(&c), &Quantity::Volume, 1, 0).is_err());
    let flat = VPolytope::hull_lenient(&[vector(&[0.0, 0.0]), vector(&[1.0, 0.0])]).unwrap();
    assert!(matches!(mc_oracle(&OracleTarget::Body(&flat), &Quantity::Volume, 100, 0), Err(Error::Degenerate(_))));
}

#[test]
fn mc_is_deterministic_per_seed() {
    let s = centered_simplex(2);
    let a = mc_oracle(&OracleTarget::Body(&s), &Quantity::Centroid, 10_000, 9).unwrap();
    let b = mc_oracle(&OracleTarget::Body(&s), &Quantity::Centroid, 10_000, 9).unwrap();
    assert_eq!(a, b);
}

fn sample_report(rows: usize) -> VerificationReport {
    let cfg = TrialConfig { num_bodies: rows, ..quick_config() };
    let rows: Vec<TrialRow> = (0..rows)
        .map(|i| {
            let ratio = 0.3 + 0.01 * ((i * 7) % 11) as f64;
            let m = Measurement::plain(ratio, 0.25, Subspace::axes(3, &[0, 1]), unit(3, 0));
            TrialRow::new(i, CheckKind::Section, &cfg, &m, None, trial_seed(cfg.seed, i))
        })
        .collect();
    VerificationReport::new(CheckKind::Section, cfg, rows, vec![], 0.5)
}

#[test]
fn empty_report_is_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    emit_report(&sample_report(0), &path, ReportFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.trim_end(), "trial_id,n,k,gamma,ratio,bound,margin,mc_delta,seed");
}

#[test]
fn csv_has_one_line_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let r = sample_report(5);
    emit_report(&r, &path, ReportFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let recs: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 5);
    assert_eq!(recs[2][0].parse::<usize>().unwrap(), 2);
    assert_eq!(recs[2][6].parse::<f64>().unwrap(), r.rows[2].margin);
}

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let r = sample_report(4);
    emit_report(&r, &path, ReportFormat::Json).unwrap();
    let back: VerificationReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn emit_report_names_the_path_on_failure() {
    let path = std::path::Path::new("/nonexistent-dir/r.json");
    let err = emit_report(&sample_report(1), path, ReportFormat::Json).unwrap_err();
    assert!(err.to_string().contains("nonexistent-dir"), "{err}");
}

#[test]
fn summary_min_margin_matches_rows() {
    let r = sample_report(200);
    let min = r.rows.iter().map(|x| x.margin).fold(f64::INFINITY, f64::min);
    assert_eq!(r.summary.min_margin, Some(min));
    assert_eq!(r.rows[r.summary.argmin.unwrap()].margin, min);
    assert_eq!(r.summary.violations, 0);
    let empty = sample_report(0);
    assert_eq!(empty.summary.min_margin, None);
    assert!(empty.passed());
}

#[test]
fn violations_count_margins_below_tolerance() {
    let cfg = TrialConfig { tolerance: 1e-6, ..quick_config() };
    let rows: Vec<TrialRow> = [0.1, -5e-7, -2e-6, -1.0]
        .iter()
        .enumerate()
        .map(|(i, &margin)| {
            let m = Measurement::plain(0.25 + margin, 0.25, Subspace::full(3), unit(3, 0));
            TrialRow::new(i, CheckKind::Grunbaum, &cfg, &m, None, 0)
        })
        .collect();
    let r = VerificationReport::new(CheckKind::Grunbaum, cfg, rows, vec![], 0.0);
    assert_eq!(r.summary.violations, 2);
    assert_eq!(r.summary.argmin, Some(3));
    assert!(!r.passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_sections_respect_the_bound(seed in 0u64..10_000, n in 2usize..=4, k_off in 0usize..4) {
        let k = 1 + k_off % n;
        let body = random_body(n, 2 * n + 4, seed).unwrap();
        let cfg = SweepConfig { frames: 1, theta_grid: 16, refine_iters: 10 };
        let m = check_sections(&body, k, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(m.margin >= -1e-6, "n={} k={} margin={}", n, k, m.margin);
    }

    #[test]
    fn minkrad_ratios_respect_the_bound(seed in 0u64..10_000, n in 1usize..=4) {
        let body = random_body(n, 2 * n + 4, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (n as f64 + 1.0);
        for _ in 0..20 {
            let th = random_unit(n, &mut rng);
            for mode in [MinkradMode::Support, MinkradMode::Radial] {
                prop_assert!(minkrad_ratio(&body, &th, mode).unwrap() >= bound - 1e-9);
            }
        }
    }

    #[test]
    fn ratio_and_its_complement_sum_to_one(seed in 0u64..10_000) {
        let body = random_body(3, 9, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Subspace::random(3, 2, &mut rng);
        let th = e.lift(&random_unit(2, &mut rng)).unwrap();
        let a = section_ratio(&body, &e, &th).unwrap();
        let b = section_ratio(&body, &e, &-&th).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-9);
    }
}
