//! Randomized property tests for the algebraic invariants the library
//! is built on: semi-inner-product axioms, duality, factorization
//! residuals, semigroup laws, and the dissipativity/coercivity
//! machinery.

use proptest::prelude::*;

use semigen_core::blockops::{
    assemble_ext, build_as, resolvent_via_extension, Closure, ResolventMode, ResolventQuery,
};
use semigen_core::dissipativity::{
    coercivity_report, dissipativity_margin, norm_dissipativity_check,
};
use semigen_core::evolve::implicit_euler_trace;
use semigen_core::linalg::{expm, holder_interpolation_bound, lu_solve, op_pnorm, Matrix, C64};
use semigen_core::sampler::Sampler;
use semigen_core::sip::{duality_functional, lp_sip, DiscreteFunction, GridSpace, Space};
use semigen_core::tol::Tolerances;

fn tol() -> Tolerances {
    Tolerances::default()
}

// ── Strategies ───────────────────────────────────────────────────────────

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(1.0),
        Just(1.5),
        Just(2.0),
        Just(2.5),
        Just(3.0)
    ]
}

fn mesh() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(0.5), Just(0.125), Just(0.01)]
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n)
        .prop_map(|pairs| pairs.into_iter().map(|(re, im)| C64::new(re, im)).collect())
}

fn real_matrix(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(prop::collection::vec(-2.0..2.0f64, n), n)
        .prop_map(Matrix::from_real_rows)
}

fn space_from(p: f64, h: f64, n: usize) -> GridSpace {
    let mut s = GridSpace::plain(p, n);
    s.h = h;
    s
}

fn norm_of(space: &GridSpace, v: &[C64]) -> f64 {
    space.norm(v)
}

// ── Semi-inner-product axioms ────────────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sip_is_additive_in_the_first_slot(
        p in exponent(),
        h in mesh(),
        (f, g, w) in (2usize..8).prop_flat_map(|n| (complex_vec(n), complex_vec(n), complex_vec(n)))
    ) {
        let space = space_from(p, h, f.len());
        let t = tol();
        let fw = lp_sip(
            &DiscreteFunction::new(space, f.clone()).unwrap(),
            &DiscreteFunction::new(space, w.clone()).unwrap(),
            &t,
        ).unwrap();
        let gw = lp_sip(
            &DiscreteFunction::new(space, g.clone()).unwrap(),
            &DiscreteFunction::new(space, w.clone()).unwrap(),
            &t,
        ).unwrap();
        let sum: Vec<C64> = f.iter().zip(&g).map(|(a, b)| a + b).collect();
        let sw = lp_sip(
            &DiscreteFunction::new(space, sum).unwrap(),
            &DiscreteFunction::new(space, w.clone()).unwrap(),
            &t,
        ).unwrap();
        let scale = 1.0 + fw.norm() + gw.norm();
        prop_assert!((sw - (fw + gw)).norm() <= 1e-12 * scale);
    }

    #[test]
    fn sip_is_homogeneous_in_the_first_slot(
        p in exponent(),
        h in mesh(),
        (re, im) in (-2.0..2.0f64, -2.0..2.0f64),
        (f, w) in (2usize..8).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
    ) {
        let space = space_from(p, h, f.len());
        let t = tol();
        let alpha = C64::new(re, im);
        let fw = lp_sip(
            &DiscreteFunction::new(space, f.clone()).unwrap(),
            &DiscreteFunction::new(space, w.clone()).unwrap(),
            &t,
        ).unwrap();
        let scaled: Vec<C64> = f.iter().map(|v| alpha * v).collect();
        let sw = lp_sip(
            &DiscreteFunction::new(space, scaled).unwrap(),
            &DiscreteFunction::new(space, w).unwrap(),
            &t,
        ).unwrap();
        prop_assert!((sw - alpha * fw).norm() <= 1e-12 * (1.0 + (alpha * fw).norm()));
    }

    #[test]
    fn sip_scales_positively_in_the_anchor_slot(
        p in exponent(),
        h in mesh(),
        c in 0.1..10.0f64,
        (f, g) in (2usize..8).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
    ) {
        let space = space_from(p, h, f.len());
        let t = tol();
        let fg = lp_sip(
            &DiscreteFunction::new(space, f.clone()).unwrap(),
            &DiscreteFunction::new(space, g.clone()).unwrap(),
            &t,
        ).unwrap();
        let scaled: Vec<C64> = g.iter().map(|v| c * v).collect();
        let fs = lp_sip(
            &DiscreteFunction::new(space, f).unwrap(),
            &DiscreteFunction::new(space, scaled).unwrap(),
            &t,
        ).unwrap();
        prop_assert!((fs - c * fg).norm() <= 1e-10 * (1.0 + (c * fg).norm()));
    }

    #[test]
    fn sip_with_itself_is_the_squared_norm(
        p in exponent(),
        h in mesh(),
        g in (2usize..8).prop_flat_map(complex_vec)
    ) {
        let space = space_from(p, h, g.len());
        let t = tol();
        let gg = lp_sip(
            &DiscreteFunction::new(space, g.clone()).unwrap(),
            &DiscreteFunction::new(space, g.clone()).unwrap(),
            &t,
        ).unwrap();
        let n2 = norm_of(&space, &g).powi(2);
        prop_assert!(gg.im.abs() <= 1e-12 * (1.0 + n2));
        prop_assert!((gg.re - n2).abs() <= 1e-12 * (1.0 + n2));
    }

    #[test]
    fn cauchy_schwarz_holds(
        p in exponent(),
        h in mesh(),
        (f, g) in (2usize..8).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
    ) {
        let space = space_from(p, h, f.len());
        let t = tol();
        let fg = lp_sip(
            &DiscreteFunction::new(space, f.clone()).unwrap(),
            &DiscreteFunction::new(space, g.clone()).unwrap(),
            &t,
        ).unwrap();
        let bound = norm_of(&space, &f) * norm_of(&space, &g);
        prop_assert!(fg.norm() <= bound * (1.0 + 1e-10) + 1e-14);
    }

    #[test]
    fn duality_functional_represents_the_sip(
        p in exponent(),
        h in mesh(),
        (f, g) in (2usize..8).prop_flat_map(|n| (complex_vec(n), complex_vec(n)))
    ) {
        let space = space_from(p, h, f.len());
        let t = tol();
        let gf = DiscreteFunction::new(space, g.clone()).unwrap();
        prop_assume!(gf.norm() > 1e-6);
        let w = duality_functional(&gf, &t);

        // pairing f against w reproduces [f, g]
        let sip = lp_sip(&DiscreteFunction::new(space, f.clone()).unwrap(), &gf, &t).unwrap();
        let paired = w.pair(&f);
        prop_assert!((paired - sip).norm() <= 1e-11 * (1.0 + sip.norm()));

        // normalization: <g, w> = ||g||^2 and ||w||_dual = ||g||
        let ng = gf.norm();
        prop_assert!((w.pair(&g) - C64::new(ng * ng, 0.0)).norm() <= 1e-10 * (1.0 + ng * ng));
        prop_assert!((w.dual_norm() - ng).abs() <= 1e-10 * (1.0 + ng));
    }
}

// ── Linear algebra kernels ───────────────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lu_solve_leaves_small_residuals(
        n in 2usize..8,
        seed in 0u64..1000
    ) {
        let mut sampler = Sampler::new(seed);
        // diagonally dominant => safely nonsingular
        let mut a = Matrix::from_fn(n, n, |_, _| sampler.complex_scalar());
        for i in 0..n {
            let row_sum: f64 = (0..n).map(|j| a.get(i, j).norm()).sum();
            a.set(i, i, a.get(i, i) + C64::new(row_sum + 1.0, 0.0));
        }
        let b = sampler.complex_vector(n);
        let report = lu_solve(&a, &b, &tol()).unwrap();
        let bnorm: f64 = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(report.residual_norm <= 1e-10 * (1.0 + bnorm));
    }

    #[test]
    fn expm_satisfies_the_semigroup_law(
        a in real_matrix(4),
        s in 0.05..1.0f64,
        t in 0.05..1.0f64
    ) {
        let tl = tol();
        prop_assume!(a.one_norm() * (s + t) <= 10.0);
        let est = expm(&a, s + t, &tl).unwrap();
        let es = expm(&a, s, &tl).unwrap();
        let et = expm(&a, t, &tl).unwrap();
        let product = es.mul(&et);
        let scale = 1.0 + est.max_abs();
        prop_assert!(est.max_entry_diff(&product) <= 1e-8 * scale);
    }

    #[test]
    fn op_pnorm_stays_within_the_interpolation_bound(
        p in exponent(),
        n in 2usize..7,
        seed in 0u64..1000
    ) {
        let mut sampler = Sampler::new(seed);
        let a = Matrix::from_fn(n, n, |_, _| sampler.complex_scalar());
        let w = vec![1.0; n];
        let est = op_pnorm(&a, p, &w, &w, &mut sampler);
        let bound = holder_interpolation_bound(&a, p, &w, &w);
        prop_assert!(est.value <= bound * (1.0 + 1e-9) + 1e-12);

        // any concrete vector certifies a lower bound below the estimate's
        // upper envelope (the interpolation bound)
        let x = sampler.complex_vector(n);
        let space = space_from(p, 1.0, n);
        let ratio = norm_of(&space, &a.matvec(&x)) / norm_of(&space, &x).max(1e-300);
        prop_assert!(ratio <= bound * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn diagonal_op_pnorm_dominates_every_rayleigh_ratio(
        p in exponent(),
        n in 2usize..7,
        seed in 0u64..1000
    ) {
        let mut sampler = Sampler::new(seed);
        let d: Vec<f64> = (0..n).map(|_| sampler.uniform(0.1, 4.0)).collect();
        let a = Matrix::from_real_diag(&d);
        let w = vec![1.0; n];
        let est = op_pnorm(&a, p, &w, &w, &mut sampler);
        prop_assert!(est.exact);
        let x = sampler.complex_vector(n);
        let space = space_from(p, 1.0, n);
        let ratio = norm_of(&space, &a.matvec(&x)) / norm_of(&space, &x).max(1e-300);
        prop_assert!(ratio <= est.value * (1.0 + 1e-9));
    }
}

// ── Dissipativity and evolution ──────────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn shifted_matrices_pass_the_norm_dissipativity_check(
        a in real_matrix(4),
        seed in 0u64..1000
    ) {
        let t = tol();
        let space = Space::Grid(GridSpace::plain(2.0, 4));
        let mut sampler = Sampler::new(seed);
        let margin = dissipativity_margin(&a, &space, 0, &mut sampler, &t);
        // A - (margin + 0.01) I has margin exactly -0.01
        let shifted = a.sub(&Matrix::identity(4).scale(C64::new(margin.value + 0.01, 0.0)));
        let report = norm_dissipativity_check(
            &shifted,
            &space,
            &[0.05, 0.5, 5.0],
            25,
            &mut sampler,
            &t,
        );
        prop_assert!(report.holds, "min ratio {}", report.min_ratio);
    }

    #[test]
    fn implicit_euler_contracts_for_dissipative_generators(
        a in real_matrix(4),
        seed in 0u64..1000
    ) {
        let t = tol();
        let space = Space::Grid(GridSpace::plain(2.0, 4));
        let mut sampler = Sampler::new(seed);
        let margin = dissipativity_margin(&a, &space, 0, &mut sampler, &t);
        let shifted = a.sub(&Matrix::identity(4).scale(C64::new(margin.value, 0.0)));
        let x0 = sampler.complex_vector(4);
        let trace =
            implicit_euler_trace(&shifted, &x0, 0.5, 0.05, &space, false, &t).unwrap();
        prop_assert!(trace.is_non_increasing(1e-10), "growth {}", trace.max_step_growth());
    }
}

proptest! {
    // each case runs a bordered solve plus a dense solve
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn resolvent_via_extension_matches_the_direct_solve(
        n1 in 1usize..5,
        n2 in 1usize..5,
        lambda in 0.01..0.1f64,
        seed in 0u64..1000
    ) {
        let t = tol();
        let mut sampler = Sampler::new(seed);
        let x1 = GridSpace::plain(2.0, n1);
        let x2 = GridSpace::plain(2.0, n2);
        let a1 = Matrix::from_fn(n1, n1 + n2, |_, _| sampler.complex_scalar());
        let a2 = Matrix::from_fn(n2, n1, |_, _| sampler.complex_scalar());
        let ext = assemble_ext(a1, a2, x1, x2).unwrap();
        let diag: Vec<f64> = (0..n2).map(|_| sampler.uniform(0.5, 3.0)).collect();
        let closure = Closure::new(Matrix::from_real_diag(&diag), &t).unwrap();
        let g = sampler.complex_vector(n1);
        let query = ResolventQuery { lambda, g: g.clone(), mode: ResolventMode::Exploratory };
        let sol = match resolvent_via_extension(&ext, &closure, 1.0, &query, &t) {
            Ok(sol) => sol,
            // random data can land near a resolvent pole; nothing to check
            Err(_) => return Ok(()),
        };
        prop_assume!(sol.condition_estimate <= 1e8);

        let a_s = build_as(&ext, &closure).unwrap();
        let shifted = Matrix::identity(n1).scale(C64::new(lambda, 0.0)).sub(&a_s);
        let direct = match lu_solve(&shifted, &g, &t) {
            Ok(report) => report.solution,
            Err(_) => return Ok(()),
        };
        let denom = direct.iter().map(|v| v.norm()).fold(0.0f64, f64::max).max(1e-12);
        for (a, b) in sol.x1.iter().zip(&direct) {
            prop_assert!((a - b).norm() <= 1e-6 * denom);
        }
        prop_assert!(sol.closure_defect_rel <= 1e-6);
    }
}

proptest! {
    // the sampled coercivity search is the expensive part of each case
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_diagonal_closures_stay_coercive_off_p2(
        p in prop_oneof![Just(1.5), Just(3.0)],
        n in 2usize..6,
        seed in 0u64..1000
    ) {
        let t = tol();
        let mut sampler = Sampler::new(seed);
        let diag: Vec<f64> = (0..n).map(|_| sampler.uniform(0.2, 5.0)).collect();
        let s = Matrix::from_real_diag(&diag);
        let space = GridSpace::plain(p, n);
        let report = coercivity_report(&s, &space, 30, &mut sampler, &t).unwrap();
        prop_assert!(report.m2 > 0.0);
        prop_assert!(!report.m2_exact);
        // the operator norm of a positive diagonal is its largest entry
        let max = diag.iter().cloned().fold(0.0f64, f64::max);
        prop_assert!((report.s_norm - max).abs() <= 1e-12 * max);
    }
}
