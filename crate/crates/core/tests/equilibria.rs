mod common;

use common::{eigen_real_parts, fd_jacobian, oracle_axis, oracle_interior, random_strict};
use patchdyn::equilibria::{
    all_equilibria, boundary_equilibria, classify_equilibrium, derived_thresholds,
    positive_equilibria, regime_report, AxisRoot, EquilibriumKind, GlobalVerdict, PositiveRoot,
    RegimeCase, Sector, Stability,
};
use patchdyn::model::rhs_nonlinear;
use patchdyn::OdeParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn strict_params() -> impl Strategy<Value = OdeParams> {
    (0.01f64..2.0, 0.01f64..0.99, 0.2f64..2.0, 0.01f64..2.0, 0.1f64..2.0)
        .prop_map(|(m, e, h, d, s)| OdeParams::strict(m, e, h, d, s).unwrap())
}

#[test]
fn closed_form_matches_scan_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..2000 {
        let p = random_strict(&mut rng);
        let oracle = oracle_interior(&p);
        let closed = positive_equilibria(&p);
        assert_eq!(closed.len(), oracle.len(), "{p:?}: {closed:?} vs {oracle:?}");
        for eq in &closed {
            let hit = oracle
                .iter()
                .any(|o| (o.u - eq.state.u).abs() < 1e-10 && (o.v - eq.state.v).abs() < 1e-10);
            assert!(hit, "{p:?}: {:?} not found among {oracle:?}", eq.state);
        }
        let axis: Vec<f64> = boundary_equilibria(&p)
            .iter()
            .filter(|e| matches!(e.kind, EquilibriumKind::BoundaryU(_)))
            .map(|e| e.state.u)
            .collect();
        let axis_oracle = oracle_axis(&p);
        assert_eq!(axis.len(), axis_oracle.len(), "{p:?}");
        for u in axis {
            assert!(axis_oracle.iter().any(|o| (o - u).abs() < 1e-10));
        }
    }
}

#[test]
fn theorem_labels_agree_with_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let p = random_strict(&mut rng);
        for eq in all_equilibria(&p).iter().filter(|e| !e.degenerate) {
            let (lo, hi) = eigen_real_parts(fd_jacobian(&p, eq.state));
            let label = classify_equilibrium(&p, eq).unwrap();
            match label {
                Stability::StableNode | Stability::StableFocus => assert!(hi < 0.0, "{p:?} {eq:?}"),
                Stability::Saddle => assert!(lo < 0.0 && hi > 0.0, "{p:?} {eq:?}"),
                Stability::UnstableNode | Stability::UnstableFocus => assert!(lo > 0.0),
                other => panic!("unexpected non-hyperbolic label {other} for {eq:?}"),
            }
        }
    }
}

#[test]
fn degenerate_branches_are_labelled() {
    let base = OdeParams::strict(0.5, 0.1, 0.9, 0.1, 0.9).unwrap();
    let d = derived_thresholds(&base);

    let at_m0 = base.with_m(d.m0);
    let u3 = boundary_equilibria(&at_m0)
        .into_iter()
        .find(|e| e.kind == EquilibriumKind::BoundaryU(AxisRoot::Double))
        .unwrap();
    assert_eq!(classify_equilibrium(&at_m0, &u3).unwrap(), Stability::RepellingSaddleNode);

    let at_mstar = base.with_m(d.mstar.unwrap());
    let e3 = positive_equilibria(&at_mstar)
        .into_iter()
        .find(|e| e.kind == EquilibriumKind::Positive(PositiveRoot::Double))
        .unwrap();
    assert_eq!(
        classify_equilibrium(&at_mstar, &e3).unwrap(),
        Stability::AttractingSaddleNode { sector: None }
    );

    for (m, expect) in [
        (1.5, Some(Sector::ParabolicRight)),
        (0.5, Some(Sector::HyperbolicRight)),
    ] {
        let p = OdeParams::strict(m, 0.09, 0.9, 0.1, 0.9).unwrap();
        let ev = boundary_equilibria(&p)[1];
        assert_eq!(
            classify_equilibrium(&p, &ev).unwrap(),
            Stability::AttractingSaddleNode { sector: expect }
        );
    }
}

#[test]
fn regime_atlas_cases() {
    let fig = |e: f64, m: f64| OdeParams::strict(m, e, 0.9, 0.1, 0.9).unwrap();
    let d = derived_thresholds(&fig(0.1, 0.5));
    let cases = [
        (fig(0.05, 2.0), RegimeCase::A, GlobalVerdict::E1Gas),
        (fig(0.09, 1.5), RegimeCase::B, GlobalVerdict::Undetermined),
        (fig(0.09, 1.0 / 0.99), RegimeCase::C, GlobalVerdict::Undetermined),
        (fig(0.09, 0.5), RegimeCase::D, GlobalVerdict::E1Gas),
        (fig(0.1, 0.4), RegimeCase::E, GlobalVerdict::Bistable),
        (fig(0.1, d.m0), RegimeCase::F, GlobalVerdict::Bistable),
        (fig(0.1, 0.5), RegimeCase::G, GlobalVerdict::Bistable),
        (fig(0.1, d.mstar.unwrap()), RegimeCase::H, GlobalVerdict::Undetermined),
        (fig(0.1, 0.9), RegimeCase::I, GlobalVerdict::EvGas),
    ];
    for (p, case, verdict) in cases {
        let r = regime_report(&p).unwrap();
        assert_eq!((r.case, r.verdict), (case, verdict), "{p:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn residuals_vanish(p in strict_params()) {
        for eq in all_equilibria(&p) {
            prop_assert!(rhs_nonlinear(&p, eq.state).max_norm() < 1e-10);
            prop_assert!(eq.state.u >= 0.0 && eq.state.v >= 0.0);
        }
    }

    #[test]
    fn count_law_and_ordering(p in strict_params()) {
        let d = derived_thresholds(&p);
        let pos = positive_equilibria(&p);
        match d.e_vs_b() {
            std::cmp::Ordering::Less => prop_assert_eq!(pos.len(), 1),
            std::cmp::Ordering::Equal => prop_assert!(pos.len() <= 1),
            std::cmp::Ordering::Greater => {
                let mstar = d.mstar.unwrap();
                let expected = if p.m < mstar { 2 } else { 0 };
                prop_assert_eq!(pos.len(), expected);
                if pos.len() == 2 {
                    let cap = (1.0 + d.b - p.e) / d.h_plus_b;
                    let (u1, u2) = (pos[0].state.u, pos[1].state.u);
                    prop_assert!(0.0 < u2 && u2 < u1 && u1 < cap);
                }
            }
        }
        for eq in &pos {
            let v = (p.s + p.delta * eq.state.u) / (p.s + p.delta);
            prop_assert!((eq.state.v - v).abs() < 1e-14);
        }
    }

    #[test]
    fn threshold_invariants(p in strict_params()) {
        let d = derived_thresholds(&p);
        prop_assert!(d.m0 < d.axis_cutoff && d.axis_cutoff < d.m1);
        prop_assert!(d.disc1(d.m0).abs() < 1e-12);
        if let (Some(ms), Some(m1s)) = (d.mstar, d.m1star) {
            let mid = (1.0 + d.b - p.e) / d.h_plus_b;
            prop_assert!(ms < mid && mid < m1s);
            prop_assert!(d.disc3(ms).abs() < 1e-12);
            prop_assert!(ms > d.m0);
        }
    }
}
