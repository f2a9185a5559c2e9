mod common;

use common::{oracle_interior, random_strict};
use patchdyn::bifurcation::{abundance_sensitivity, sotomayor_check, sweep_allee, FoldSite};
use patchdyn::equilibria::{EquilibriumKind, PositiveRoot};
use patchdyn::{Error, OdeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn b_of(p: &OdeParams) -> f64 {
    p.s * p.delta / (p.s + p.delta)
}

/// Random parameters with `B + 1e-3 < e < 0.95`.
fn fold_params(rng: &mut ChaCha8Rng) -> OdeParams {
    loop {
        let p = random_strict(rng);
        let b = b_of(&p);
        if p.e > b + 1e-3 && p.e < 0.95 {
            return p;
        }
    }
}

fn fold_m(p: &OdeParams) -> f64 {
    let b = b_of(p);
    (1.0 - (p.e - b).sqrt()).powi(2) / (p.h + b)
}

#[test]
fn sweep_marker_brackets_the_fold() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let p = fold_params(&mut rng);
        let mstar = fold_m(&p);
        let (lo, hi, steps) = (0.05 * mstar, 1.3 * mstar, 200);
        let step = (hi - lo) / (steps - 1) as f64;
        let diagram = sweep_allee(&p, lo, hi, steps, false).unwrap();
        let markers: Vec<_> = diagram.markers().collect();
        assert_eq!(markers.len(), 1, "{p:?}");
        let marker = markers[0].m;
        assert!((marker - mstar).abs() <= step, "{marker} vs {mstar}");

        // Counts on the grid either side, from the scan oracle.
        let before = lo + step * ((marker - lo) / step).floor();
        let after = before + step;
        assert_eq!(oracle_interior(&p.with_m(before)).len(), 2, "{p:?} at {before}");
        assert_eq!(oracle_interior(&p.with_m(after)).len(), 0, "{p:?} at {after}");

        let stable: Vec<f64> = diagram
            .branch(EquilibriumKind::Positive(PositiveRoot::Upper))
            .map(|r| r.u)
            .collect();
        assert!(stable.windows(2).all(|w| w[1] < w[0]));
        assert!(diagram
            .branch(EquilibriumKind::Positive(PositiveRoot::Upper))
            .all(|r| r.stability.is_stable()));
        assert!(diagram
            .branch(EquilibriumKind::Positive(PositiveRoot::Lower))
            .all(|r| !r.stability.is_stable()));
    }
}

#[test]
fn interior_transversality_matches_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let p = fold_params(&mut rng);
        let b = b_of(&p);
        let k = p.h + b;
        let m = fold_m(&p);
        let u = (1.0 + b - p.e - m * k) / (2.0 * k);
        let r = sotomayor_check(&p, FoldSite::Interior).unwrap();

        assert!((r.m - m).abs() < 1e-12 * m.max(1.0));
        assert!((r.state.u - u).abs() < 1e-9, "{} vs {u}", r.state.u);
        assert!((r.alpha.v - p.delta / (p.s + p.delta)).abs() < 1e-9);
        assert!((r.beta.v - p.delta * u / (p.s + p.delta * u)).abs() < 1e-9);

        let fm = -u * u / ((m + u) * (m + u));
        assert!((r.eta_fm - fm).abs() <= 1e-6 * fm.abs());
        let d2 = -2.0 * (p.e - b).sqrt() * k;
        assert!((r.eta_d2 - d2).abs() <= 1e-6 * d2.abs(), "{} vs {d2} at {p:?}", r.eta_d2);
        assert!(r.nonzero_eigenvalue < 0.0);
        assert!(r.certified);
    }
}

#[test]
fn boundary_transversality_is_repelling() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let p = random_strict(&mut rng);
        let k = p.h + p.delta;
        let m0 = (1.0 - p.e.sqrt()).powi(2) / k;
        // The second-difference step is 1e-4; folds much closer to m = 0
        // curve on a smaller scale than that.
        if m0 < 0.01 {
            continue;
        }
        let r = sotomayor_check(&p, FoldSite::Boundary).unwrap();
        assert!((r.m - m0).abs() < 1e-12 * m0.max(1.0));
        assert!((r.state.u - p.e.sqrt() * (1.0 - p.e.sqrt()) / k).abs() < 1e-9, "{p:?}");
        assert!(r.nonzero_eigenvalue > 0.0);
        assert!((r.eta_d2 - r.closed_form_eta_d2).abs() <= 1e-6 * r.closed_form_eta_d2.abs(), "{r:?} {p:?}");
        let q0 = -k * p.e.sqrt() / (1.0 - p.e.sqrt());
        assert!((r.q0.unwrap() - q0).abs() < 1e-12 * q0.abs());
        assert!(r.certified);
    }
}

#[test]
fn no_interior_fold_when_e_below_b() {
    let p = OdeParams::strict(0.5, 0.05, 0.9, 0.1, 0.9).unwrap();
    assert!(matches!(
        sotomayor_check(&p, FoldSite::Interior),
        Err(Error::Precondition(_))
    ));
}

fn oracle_u1(p: &OdeParams, m: f64) -> f64 {
    let roots = oracle_interior(&p.with_m(m));
    assert_eq!(roots.len(), 1, "{p:?} m = {m}");
    roots[0].u
}

#[test]
fn sensitivity_sign_law_and_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut checked = 0;
    while checked < 1000 {
        let p = random_strict(&mut rng);
        if p.e >= b_of(&p) {
            continue;
        }
        let m = rng.gen_range(0.05..2.0);
        let r = abundance_sensitivity(&p, m).unwrap();
        assert!(r.c > 0.0);
        assert!(r.du1_dm < 0.0 && r.dv1_dm < 0.0 && r.dtotal_dm < 0.0);
        let ratio = r.dv1_dm / r.du1_dm;
        assert!((ratio - p.delta / (p.s + p.delta)).abs() < 1e-12);

        let step = 1e-5;
        let fd = (oracle_u1(&p, m + step) - oracle_u1(&p, m - step)) / (2.0 * step);
        // The oracle root carries an absolute error near ε/C from cancellation
        // in the scalar equation, which the quotient divides by the step.
        let oracle_floor = 4.0 * f64::EPSILON / (r.c * step);
        assert!(
            (fd - r.du1_dm).abs() <= 1e-6 * r.du1_dm.abs() + oracle_floor,
            "{p:?} m={m}: {fd} vs {}",
            r.du1_dm
        );
        checked += 1;
    }
}

#[test]
fn sensitivity_refuses_bistable_regime() {
    let p = OdeParams::strict(0.5, 0.1, 0.9, 0.1, 0.9).unwrap();
    assert!(matches!(abundance_sensitivity(&p, 0.5), Err(Error::Domain(_))));
}
