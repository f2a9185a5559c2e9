//! Adaptive Dormand–Prince 5(4) integrator for autonomous or
//! non-autonomous systems `y' = f(t, y)` of any dimension.
//!
//! The step controller follows Hairer, Nørsett & Wanner (*Solving ODEs I*,
//! §II.4): a mixed absolute/relative RMS error norm, a PI controller and the
//! usual automatic initial step. Two additions serve the population models:
//! a per-state step ceiling supplied by the system (used for the explicit
//! diffusion stability limit) and optional rejection of any step whose
//! proposal has a negative component.

/// A system of first-order ODEs.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Writes `f(t, y)` into `dy`.
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Largest step the system tolerates from state `y`.
    fn max_step(&self, _y: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Returned by an observer after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_step: f64,
    /// Steps below `min_step_rel · max(1, |t|)` count as a failure.
    pub min_step_rel: f64,
    pub max_steps: usize,
    /// Reject any step that would produce a negative component.
    pub nonnegative: bool,
}

impl Options {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }
}

impl Default for Options {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-8,
            initial_step: None,
            max_step: f64::INFINITY,
            min_step_rel: 1e-14,
            max_steps: 50_000_000,
            nonnegative: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// `t_end` was reached.
    Reached,
    /// The observer asked to stop.
    Stopped,
    /// The step size collapsed or the step budget ran out.
    StepFailure { reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    /// Subset of `rejected` caused by a negative component.
    pub negativity_rejections: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub t: f64,
    pub y: Vec<f64>,
    /// Step the controller would try next; useful to resume integration.
    pub next_step: f64,
    pub outcome: Outcome,
    pub stats: Stats,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

struct Work {
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_stage: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

fn error_norm(y: &[f64], y_new: &[f64], err: &[f64], opts: &Options) -> f64 {
    let sum: f64 = y
        .iter()
        .zip(y_new)
        .zip(err)
        .map(|((a, b), e)| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / y.len().max(1) as f64).sqrt()
}

fn initial_step<S: OdeSystem + ?Sized>(
    sys: &S,
    t: f64,
    y: &[f64],
    f0: &[f64],
    direction_span: f64,
    opts: &Options,
    stats: &mut Stats,
) -> f64 {
    let n = y.len().max(1) as f64;
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(direction_span).min(opts.max_step);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, f)| v + h0 * f).collect();
    let mut f1 = vec![0.0; y.len()];
    sys.rhs(t + h0, &y1, &mut f1);
    stats.rhs_evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(direction_span).min(opts.max_step)
}

/// Integrates from `(t0, y0)` to `t_end > t0`. The observer sees the initial
/// point and every accepted step, and may stop the integration early.
pub fn integrate<S, F>(
    sys: &S,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &Options,
    mut observer: F,
) -> Solution
where
    S: OdeSystem + ?Sized,
    F: FnMut(f64, &[f64]) -> StepControl,
{
    let n = sys.dim();
    assert_eq!(y0.len(), n, "initial state has the wrong dimension");
    let mut stats = Stats::default();
    let mut t = t0;
    let mut y = y0.to_vec();
    let finish = |t: f64, y: Vec<f64>, next_step: f64, outcome: Outcome, stats: Stats| Solution {
        t,
        y,
        next_step,
        outcome,
        stats,
    };

    let h_given = opts.initial_step.unwrap_or(f64::NAN);
    if observer(t, &y) == StepControl::Stop {
        return finish(t, y, h_given, Outcome::Stopped, stats);
    }
    if t_end <= t0 {
        return finish(t, y, h_given, Outcome::Reached, stats);
    }

    let mut w = Work::new(n);
    sys.rhs(t, &y, &mut w.k[0]);
    stats.rhs_evaluations += 1;

    let mut h = match opts.initial_step {
        Some(h) => h,
        None => initial_step(sys, t, &y, &w.k[0].clone(), t_end - t, opts, &mut stats),
    };
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return finish(
                t,
                y,
                h,
                Outcome::StepFailure {
                    reason: format!("step budget of {} exhausted at t = {t}", opts.max_steps),
                },
                stats,
            );
        }
        let ceiling = opts.max_step.min(sys.max_step(&y));
        h = h.min(ceiling);
        let h_min = opts.min_step_rel * t.abs().max(1.0);
        if h < h_min || !h.is_finite() {
            return finish(
                t,
                y,
                h,
                Outcome::StepFailure {
                    reason: format!("step size {h:e} fell below the minimum {h_min:e} at t = {t}"),
                },
                stats,
            );
        }
        let mut is_last = false;
        let h_before_clip = h;
        if t + h >= t_end || t + 1.01 * h >= t_end {
            h = t_end - t;
            is_last = true;
        }

        step(sys, t, &y, h, &mut w);
        stats.rhs_evaluations += 6;

        let err_vec: Vec<f64> = (0..n)
            .map(|i| {
                h * (E1 * w.k[0][i]
                    + E3 * w.k[2][i]
                    + E4 * w.k[3][i]
                    + E5 * w.k[4][i]
                    + E6 * w.k[5][i]
                    + E7 * w.k[6][i])
            })
            .collect();
        let err = error_norm(&y, &w.y_new, &err_vec, opts);

        let negative = opts.nonnegative && w.y_new.iter().any(|&v| v < 0.0);
        if negative {
            stats.rejected += 1;
            stats.negativity_rejections += 1;
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        if !err.is_finite() {
            stats.rejected += 1;
            h *= FAC_MIN;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            let err_c = err.max(1e-10);
            let mut fac = SAFETY * err_c.powf(-EXPO) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = err_c;
            stats.accepted += 1;
            t = if is_last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut w.y_new);
            // First-same-as-last: the seventh stage is f at the new point.
            w.k.swap(0, 6);
            last_rejected = false;
            let h_next = if is_last && h_before_clip > h { h_before_clip } else { h * fac };
            if observer(t, &y) == StepControl::Stop {
                return finish(t, y, h_next, Outcome::Stopped, stats);
            }
            if is_last {
                return finish(t, y, h_next, Outcome::Reached, stats);
            }
            h = h_next;
        } else {
            stats.rejected += 1;
            let fac = (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
            h *= fac;
            last_rejected = true;
        }
    }
}

fn step<S: OdeSystem + ?Sized>(sys: &S, t: f64, y: &[f64], h: f64, w: &mut Work) {
    let n = y.len();
    let Work { k, y_stage, y_new } = w;

    macro_rules! stage {
        ($dst:expr, $c:expr, $($coef:expr => $src:expr),+) => {{
            for i in 0..n {
                y_stage[i] = y[i] + h * (0.0 $(+ $coef * k[$src][i])+);
            }
            let (head, tail) = k.split_at_mut($dst);
            let _ = head;
            sys.rhs(t + $c * h, y_stage, &mut tail[0]);
        }};
    }

    stage!(1, C2, A21 => 0);
    stage!(2, C3, A31 => 0, A32 => 1);
    stage!(3, C4, A41 => 0, A42 => 1, A43 => 2);
    stage!(4, C5, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
    stage!(5, 1.0, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
    for i in 0..n {
        y_new[i] = y[i]
            + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
    }
    let (_, tail) = k.split_at_mut(6);
    sys.rhs(t + h, y_new, &mut tail[0]);
}
