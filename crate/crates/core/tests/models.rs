mod common;

use common::*;
use proptest::prelude::*;
use rdsurf::bifurcate::{solve_continuation_param, solve_continuation_param_in, ModeRule};
use rdsurf::models::*;
use rdsurf::Error;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn homogeneous_states_are_reaction_zeros() {
    let m = murray();
    for s in m.homogeneous_states(10.0) {
        let (f, g) = m.reaction(s.a, s.b, 10.0);
        assert!(f.abs() < 1e-14 && g.abs() < 1e-14);
    }
    let p = primary_state(&m, 10.0).unwrap();
    assert_eq!((p.a, p.b), (1.0, 0.5));

    let b = Brusselator::default();
    let s = primary_state(&b, 0.76).unwrap();
    let (f, g) = b.reaction(s.a, s.b, 0.76);
    assert!(f.abs() < 1e-14 && g.abs() < 1e-14);
    assert!(b.homogeneous_states(0.0).is_empty());
    assert!(matches!(linearize_primary(&b, 0.0), Err(Error::NoRealSolution(_))));
}

#[test]
fn murray_coefficients() {
    let c = linearize_primary(&murray(), 13.0).unwrap();
    let want = [0.25, -13.0, 0.0, 1.0, -1.522, 0.0, 0.25, -1.0];
    let got = [c.u_du, c.u_dv, c.v_du, c.v_dv, c.u_ku, c.u_kv, c.v_ku, c.v_kv];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-14, "{got:?}");
    }
    assert_eq!(stability_preconditions(&c), Stability::Satisfied);
}

#[test]
fn non_homogeneous_state_is_rejected() {
    assert!(matches!(linearize(&murray(), (0.5, 0.5), 10.0), Err(Error::NotHomogeneous(_))));
}

#[test]
fn murray_closed_form() {
    let m = murray();
    for lam in [0.5, 2.467, PI * PI, 30.0] {
        let a = solve_continuation_param(&m, lam, ModeRule::NonExclusive).unwrap();
        let want = lam + 7.088 + 6.088 / lam;
        assert!(close(a, want, 1e-12), "{a} vs {want}");
        // The generic root search agrees with the closed form.
        let g = solve_continuation_param_in(&m, lam, ModeRule::NonExclusive, Some((want - 1.0, want + 1.0))).unwrap();
        assert!(close(g, want, 1e-9), "{g} vs {want}");
    }
    // Mode (0,1) of the 1 x 4 rectangle.
    let a = solve_continuation_param(&m, PI * PI, ModeRule::NonExclusive).unwrap();
    assert!((a - 17.574).abs() < 1e-3);
}

#[test]
fn growth_rate_vanishes_at_the_marginal_parameter() {
    let m = murray();
    for lam in [1.0, 2.467, 9.0] {
        let a = solve_continuation_param(&m, lam, ModeRule::NonExclusive).unwrap();
        let c = linearize_primary(&m, a).unwrap();
        assert!(growth_rate(&c, lam).abs() < 1e-10);
        assert!(growth_rate(&linearize_primary(&m, a + 0.1).unwrap(), lam) > 0.0);
        assert!(growth_rate(&linearize_primary(&m, a - 0.1).unwrap(), lam) < 0.0);
    }
    // Without diffusion the state is stable.
    assert!(growth_rate(&linearize_primary(&m, 15.0).unwrap(), 0.0) < 0.0);
}

#[test]
fn dispersion_onset() {
    let m = murray();
    // Minimum of Λ + 7.088 + 6.088/Λ is at Λ = √6.088.
    let lmin = 6.088f64.sqrt();
    let amin = 7.088 + 2.0 * lmin;
    let eig = [0.0, lmin, 2.0 * lmin, 4.0 * lmin];
    let below = dispersion_curve(&linearize_primary(&m, amin - 0.01).unwrap(), (0.0, 20.0), 101, &eig, 1e-12);
    assert!(below.unstable.is_empty());
    assert!(below.samples.iter().all(|&(_, xi)| xi < 0.0));
    let above = dispersion_curve(&linearize_primary(&m, amin + 0.01).unwrap(), (0.0, 20.0), 101, &eig, 1e-12);
    let idx: Vec<usize> = above.unstable.iter().map(|u| u.0).collect();
    assert_eq!(idx, vec![1]);
    assert_eq!(above.samples.len(), 101);
}

#[test]
fn preconditions() {
    let mut lm = LinearModel::pure_diffusion(1.0, 1.0);
    lm.k = [0.5, 1.0, -1.0, 0.2];
    let c = linearize_primary(&lm, 0.0).unwrap();
    assert_eq!(stability_preconditions(&c), Stability::ViolatedTrace);
    lm.k = [-2.0, 1.0, 1.0, -0.25];
    let c = linearize_primary(&lm, 0.0).unwrap();
    assert_eq!(stability_preconditions(&c), Stability::ViolatedDeterminant);
    assert!(matches!(
        solve_continuation_param(&lm, 1.0, ModeRule::NonExclusive),
        Err(Error::PreconditionsViolated(_)) | Err(Error::NoRealSolution(_))
    ));
}

#[test]
fn marginal_curve_identities() {
    let b = Brusselator::default();
    let lam = 72.563;
    let direct = b.closed_form_parameter(lam).unwrap().unwrap();
    let curve = marginal_curve(&b, lam, &[1.0, 2.0], ScaleKind::Radius).unwrap();
    assert!(close(*curve[0].1.as_ref().unwrap(), direct, 1e-12));
    // Doubling the radius is the unit domain with a quarter of the eigenvalue.
    let quarter = b.closed_form_parameter(lam / 4.0).unwrap().unwrap();
    assert!(close(*curve[1].1.as_ref().unwrap(), quarter, 1e-12));
    // A perimeter of 2π is γ = 1.
    let p = marginal_curve(&b, lam, &[2.0 * PI], ScaleKind::Perimeter).unwrap();
    assert!(close(*p[0].1.as_ref().unwrap(), direct, 1e-12));
    // Murray has no growth factor and rescales Λ instead.
    let m = marginal_curve(&murray(), PI * PI, &[2.0], ScaleKind::Radius).unwrap();
    let want = solve_continuation_param(&murray(), PI * PI / 4.0, ModeRule::NonExclusive).unwrap();
    assert!(close(*m[0].1.as_ref().unwrap(), want, 1e-12));
    assert!(marginal_curve(&b, 0.0, &[1.0], ScaleKind::Radius).is_err());
}

#[test]
fn lookup_by_name() {
    let m = model_from_name("murray", &[("alpha".into(), 12.5)]).unwrap();
    assert_eq!(m.alpha(), 12.5);
    assert_eq!(m.continuation_parameter(), "alpha");
    let b = model_from_name("brusselator", &[]).unwrap();
    assert_eq!(b.continuation_parameter(), "Astar");
    assert_eq!(b.boundary(), BoundaryKind::Dirichlet);
    assert!(matches!(model_from_name("gray-scott", &[]), Err(Error::Config(_))));
    assert!(model_from_name("murray", &[("Q".into(), 1.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn analytic_linearisation_matches_differences(
        d in 0.05f64..2.0, c in 0.5f64..3.0, n in 0.5f64..2.0, s in 0.5f64..2.0, alpha in 1.0f64..30.0,
    ) {
        let m = Murray { d, c, n, s, alpha };
        let a = linearize_primary(&m, alpha).unwrap();
        let st = primary_state(&m, alpha).unwrap();
        let f = linearize_finite_difference(&m, (st.a, st.b), alpha).unwrap();
        for (x, y) in [(a.u_ku, f.u_ku), (a.u_kv, f.u_kv), (a.v_ku, f.v_ku), (a.v_kv, f.v_kv)] {
            prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0));
        }
    }

    #[test]
    fn brusselator_linearisation_matches_differences(astar in 0.2f64..2.0, gamma in 0.5f64..4.0) {
        let b = Brusselator { gamma, ..Brusselator::default() };
        let a = linearize_primary(&b, astar).unwrap();
        let st = primary_state(&b, astar).unwrap();
        let f = linearize_finite_difference(&b, (st.a, st.b), astar).unwrap();
        for (x, y) in [(a.u_ku, f.u_ku), (a.u_kv, f.u_kv), (a.v_ku, f.v_ku), (a.v_kv, f.v_kv)] {
            prop_assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0));
        }
    }

    #[test]
    fn closed_form_root_is_a_quadratic_root(lam in 0.1f64..200.0) {
        let m = murray();
        let a = solve_continuation_param(&m, lam, ModeRule::NonExclusive).unwrap();
        let c = linearize_primary(&m, a).unwrap();
        let (c2, c1, c0) = c.quadratic();
        let scale = (c2 * lam * lam).abs() + (c1 * lam).abs() + c0.abs();
        prop_assert!(c.quadratic_at(lam).abs() <= 1e-10 * scale);
    }

    #[test]
    fn growth_rate_is_an_eigenvalue(lam in 0.0f64..50.0, alpha in 1.0f64..30.0) {
        let c = linearize_primary(&murray(), alpha).unwrap();
        let xi = growth_rate(&c, lam);
        let m = c.mode_matrix(lam);
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        // ξ is the real part of a root of μ² − tr μ + det.
        if 0.25 * tr * tr >= det {
            prop_assert!((xi * xi - tr * xi + det).abs() <= 1e-8 * (tr * tr + det.abs()).max(1.0));
        } else {
            prop_assert!((xi - 0.5 * tr).abs() < 1e-12);
        }
    }
}
