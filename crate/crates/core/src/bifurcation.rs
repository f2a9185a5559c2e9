//! Saddle-node transversality checks, Allee-constant sweeps and the
//! sensitivity of total abundance to the Allee constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::{
    all_equilibria, derived_thresholds, positive_equilibria, regime_case, EquilibriumKind,
    PositiveRoot, RegimeCase, Stability, AxisRoot,
};
use crate::error::{Error, Result};
use crate::model::{jacobian_nonlinear, rhs_dm, rhs_nonlinear, OdeParams, State};

/// Which fold is being checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldSite {
    /// The interior fold at `m = m*`, where `E₁` and `E₂` merge into `E₃`.
    Interior,
    /// The axis fold at `m = m₀`, where `ū₁` and `ū₂` merge into `ū₃`.
    Boundary,
}

/// Transversality data for a saddle-node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SotomayorReport {
    pub site: FoldSite,
    /// Allee constant at the fold.
    pub m: f64,
    /// The double equilibrium.
    pub state: State,
    /// Eigenvalue closest to zero.
    pub zero_eigenvalue: f64,
    pub nonzero_eigenvalue: f64,
    /// Right null vector of the Jacobian, first component 1.
    pub alpha: State,
    /// Left null vector of the Jacobian, first component 1.
    pub beta: State,
    /// `βᵀ F_m`.
    pub eta_fm: f64,
    /// `βᵀ D²F(α, α)`, assembled from central second differences with one
    /// Richardson extrapolation.
    pub eta_d2: f64,
    /// Closed form of `βᵀ F_m`: `-u²/(m+u)²`.
    pub closed_form_eta_fm: f64,
    /// Closed form of `βᵀ D²F(α, α)` obtained by differentiating `F₁` twice
    /// along `α`: `2(m²/(m+u)³ - k)` with `k = h+B` (interior) or `h+δ`
    /// (axis).
    pub closed_form_eta_d2: f64,
    /// `-(h+δ)√e / (1-√e)`, reported for the axis fold only.
    pub q0: Option<f64>,
    pub certified: bool,
}

const TRANSVERSALITY_FLOOR: f64 = 1e-8;
const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Null vectors, `F_m` and the second directional derivative at the fold
/// selected by `site`. `p.m` is ignored; the fold value of `m` is used.
pub fn sotomayor_check(p: &OdeParams, site: FoldSite) -> Result<SotomayorReport> {
    let d = derived_thresholds(p);
    let (m, state, k) = match site {
        FoldSite::Interior => {
            let mstar = d.mstar.ok_or_else(|| {
                Error::Precondition(format!(
                    "interior fold needs B < e < 1 (e = {}, B = {})",
                    p.e, d.b
                ))
            })?;
            let q = p.with_m(mstar);
            let e3 = positive_equilibria(&q)
                .into_iter()
                .find(|eq| eq.kind == EquilibriumKind::Positive(PositiveRoot::Double))
                .ok_or_else(|| Error::Precondition(format!("no double interior root at m* = {mstar}")))?;
            (mstar, e3.state, d.h_plus_b)
        }
        FoldSite::Boundary => {
            let u = (1.0 - p.e - d.m0 * d.h_plus_delta) / (2.0 * d.h_plus_delta);
            (d.m0, State::new(u, 0.0), d.h_plus_delta)
        }
    };
    let q = p.with_m(m);
    let j = jacobian_nonlinear(&q, state);
    let ev = j.eigenvalues();
    let (zero, other) = if ev[0].norm() <= ev[1].norm() {
        (ev[0], ev[1])
    } else {
        (ev[1], ev[0])
    };
    if zero.norm() > ZERO_EIGENVALUE_TOL * j.trace().abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "Jacobian at m = {m} has no zero eigenvalue (smallest is {zero})"
        )));
    }

    // j22 = -(s + δu) at the interior fold and s + δū on the axis: never zero.
    let alpha = State::new(1.0, -j.j21 / j.j22);
    let beta = State::new(1.0, -j.j12 / j.j22);

    let fm = rhs_dm(&q, state);
    let step = 1e-4 * state.norm().max(1.0);
    let second_difference = |h: f64| {
        let plus = rhs_nonlinear(&q, state + alpha * h);
        let mid = rhs_nonlinear(&q, state);
        let minus = rhs_nonlinear(&q, state - alpha * h);
        (plus - mid * 2.0 + minus) * (1.0 / (h * h))
    };
    // One Richardson level cancels the O(h²) term, which otherwise reaches
    // 1e-6 relative when the fold sits close to m = 0.
    let d2 = (second_difference(0.5 * step) * 4.0 - second_difference(step)) * (1.0 / 3.0);

    let eta_fm = beta.dot(fm);
    let eta_d2 = beta.dot(d2);
    let mu = m + state.u;
    let closed_form_eta_fm = -state.u * state.u / (mu * mu);
    let closed_form_eta_d2 = 2.0 * (m * m / (mu * mu * mu) - k);
    let q0 = match site {
        FoldSite::Boundary => {
            let root_e = p.e.sqrt();
            Some(-d.h_plus_delta * root_e / (1.0 - root_e))
        }
        FoldSite::Interior => None,
    };

    Ok(SotomayorReport {
        site,
        m,
        state,
        zero_eigenvalue: zero.re,
        nonzero_eigenvalue: other.re,
        alpha,
        beta,
        eta_fm,
        eta_d2,
        closed_form_eta_fm,
        closed_form_eta_d2,
        q0,
        certified: eta_fm.abs() > TRANSVERSALITY_FLOOR && eta_d2.abs() > TRANSVERSALITY_FLOOR,
    })
}

/// One equilibrium at one value of `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramRow {
    pub m: f64,
    pub branch: EquilibriumKind,
    pub u: f64,
    pub v: f64,
    pub stability: Stability,
    pub is_sn_marker: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationDiagram {
    pub rows: Vec<DiagramRow>,
}

impl BifurcationDiagram {
    pub fn markers(&self) -> impl Iterator<Item = &DiagramRow> {
        self.rows.iter().filter(|r| r.is_sn_marker)
    }

    /// Rows of one branch in sweep order.
    pub fn branch(&self, kind: EquilibriumKind) -> impl Iterator<Item = &DiagramRow> {
        self.rows
            .iter()
            .filter(move |r| r.branch == kind && !r.is_sn_marker)
    }
}

fn count_positive(p: &OdeParams, m: f64) -> usize {
    positive_equilibria(&p.with_m(m)).len()
}

fn count_axis(p: &OdeParams, m: f64) -> usize {
    all_equilibria(&p.with_m(m))
        .iter()
        .filter(|e| matches!(e.kind, EquilibriumKind::BoundaryU(_)))
        .count()
}

/// Shrinks `[lo, hi]` around the switch of `count` from `count(lo)` until the
/// bracket is narrower than `1e-12·max(1, hi)`.
fn refine_fold(lo: f64, hi: f64, count: impl Fn(f64) -> usize) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let below = count(lo);
    while hi - lo > 1e-12 * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count(mid) == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn rows_at(p: &OdeParams, m: f64, include_boundary: bool) -> Vec<DiagramRow> {
    let q = p.with_m(m);
    let eqs = if include_boundary {
        all_equilibria(&q)
    } else {
        positive_equilibria(&q)
    };
    eqs.into_iter()
        .map(|eq| DiagramRow {
            m,
            branch: eq.kind,
            u: eq.state.u,
            v: eq.state.v,
            stability: eq.stability,
            is_sn_marker: false,
        })
        .collect()
}

/// Equilibria of the nonlinear model on `steps` evenly spaced values of `m`
/// in `[m_lo, m_hi]`, with saddle-node markers inserted where branch pairs
/// appear or vanish.
pub fn sweep_allee(
    p: &OdeParams,
    m_lo: f64,
    m_hi: f64,
    steps: usize,
    include_boundary: bool,
) -> Result<BifurcationDiagram> {
    if !(m_lo > 0.0 && m_lo.is_finite()) {
        return Err(Error::Validation {
            param: "m_lo",
            bound: "m_lo > 0",
            value: m_lo,
        });
    }
    if !(m_hi > m_lo && m_hi.is_finite()) {
        return Err(Error::Validation {
            param: "m_hi",
            bound: "m_hi > m_lo",
            value: m_hi,
        });
    }
    if steps < 2 {
        return Err(Error::Validation {
            param: "steps",
            bound: "steps >= 2",
            value: steps as f64,
        });
    }

    let grid: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                m_hi
            } else {
                m_lo + (m_hi - m_lo) * i as f64 / (steps - 1) as f64
            }
        })
        .collect();

    let per_m: Vec<Vec<DiagramRow>> = grid
        .par_iter()
        .map(|&m| rows_at(p, m, include_boundary))
        .collect();

    let mut rows = Vec::new();
    for (i, block) in per_m.into_iter().enumerate() {
        if i > 0 {
            let (a, b) = (grid[i - 1], grid[i]);
            let mut markers = Vec::new();
            if count_positive(p, a) != count_positive(p, b) && derived_thresholds(p).mstar.is_some() {
                let m = refine_fold(a, b, |m| count_positive(p, m));
                let d = derived_thresholds(p);
                let u = (1.0 + d.b - p.e - m * d.h_plus_b) / (2.0 * d.h_plus_b);
                markers.push(DiagramRow {
                    m,
                    branch: EquilibriumKind::Positive(PositiveRoot::Double),
                    u,
                    v: (p.s + p.delta * u) / (p.s + p.delta),
                    stability: Stability::AttractingSaddleNode { sector: None },
                    is_sn_marker: true,
                });
            }
            if include_boundary && count_axis(p, a) != count_axis(p, b) {
                let m = refine_fold(a, b, |m| count_axis(p, m));
                let d = derived_thresholds(p);
                markers.push(DiagramRow {
                    m,
                    branch: EquilibriumKind::BoundaryU(AxisRoot::Double),
                    u: (1.0 - p.e - m * d.h_plus_delta) / (2.0 * d.h_plus_delta),
                    v: 0.0,
                    stability: Stability::RepellingSaddleNode,
                    is_sn_marker: true,
                });
            }
            markers.sort_by(|x, y| x.m.total_cmp(&y.m));
            rows.extend(markers);
        }
        rows.extend(block);
    }
    Ok(BifurcationDiagram { rows })
}

/// Derivatives of the stable equilibrium and of total abundance
/// `T = u₁ + v₁` with respect to `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub m: f64,
    pub u1: f64,
    pub v1: f64,
    pub total: f64,
    /// `(h+B) - m/(m+u₁)²`; positive in the regime where this is defined.
    pub c: f64,
    pub du1_dm: f64,
    pub dv1_dm: f64,
    pub dtotal_dm: f64,
}

/// Closed-form sensitivity at Allee constant `m`. Defined only when `E₁` is
/// globally stable (`e < B`, or `e = B` with `m < 1/(h+B)`).
pub fn abundance_sensitivity(p: &OdeParams, m: f64) -> Result<SensitivityReport> {
    let q = p.with_m(m);
    let case = regime_case(&q);
    if !matches!(case, RegimeCase::A | RegimeCase::D) {
        return Err(Error::Domain(format!(
            "abundance sensitivity needs e < B, or e = B with m < 1/(h+B); got case {}",
            case.label()
        )));
    }
    let e1 = positive_equilibria(&q)
        .into_iter()
        .find(|eq| eq.kind == EquilibriumKind::Positive(PositiveRoot::Upper))
        .ok_or_else(|| Error::Numeric(format!("no stable interior equilibrium at m = {m}")))?;
    let State { u: u1, v: v1 } = e1.state;
    let d = derived_thresholds(&q);
    let mu = m + u1;
    let c = d.h_plus_b - m / (mu * mu);
    let du1_dm = -u1 / (c * mu * mu);
    let dv1_dm = q.delta / (q.s + q.delta) * du1_dm;
    Ok(SensitivityReport {
        m,
        u1,
        v1,
        total: u1 + v1,
        c,
        du1_dm,
        dv1_dm,
        dtotal_dm: du1_dm + dv1_dm,
    })
}
