//! Time integration and semigroup diagnostics.
//!
//! Three flows for `x' = A x` — implicit Euler, Crank-Nicolson, and the
//! dense exponential — each recording the discrete l^p norm of the state
//! at every step.  Implicit Euler is the resolvent iterate
//! `x+ = (I - dt*A)^-1 x`, so a dissipative `A` makes the trace
//! non-increasing step by step: that is the norm form of the dissipativity
//! inequality at shift 1/dt, and the tests assert it literally.
//! Crank-Nicolson is the Cayley transform, a 2-norm contraction whenever
//! the symmetric part of `A` is negative semidefinite.
//!
//! [`isometry_deviation`] measures two-sided norm preservation under the
//! exponential flow, and [`growth_bound_fit`] produces constants (M, w)
//! with `||exp(tA)|| <= M*e^(w*t)` on the sampled grid.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{expm, spectral_norm_weighted, LuFactors, Matrix, C64};
use crate::sampler::Sampler;
use crate::sip::Space;
use crate::tol::Tolerances;

/// Integrator tag recorded in traces and CSV exports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
    Expm,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit-euler",
            Scheme::CrankNicolson => "crank-nicolson",
            Scheme::Expm => "expm",
        }
    }
}

/// Snapshot cap: norms are recorded at every step, full states only at a
/// stride chosen so at most this many snapshots are kept.
const MAX_SNAPSHOTS: usize = 512;

/// Norm history of one integration run.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub scheme: Scheme,
    /// t = 0 first, then one entry per step, strictly increasing.
    pub times: Vec<f64>,
    /// Discrete l^p norm of the state at each time.
    pub norms: Vec<f64>,
    /// Optional state snapshots (subsampled when the run is long), stored
    /// as (time index, state) pairs.
    pub states: Option<Vec<(usize, Vec<C64>)>>,
    /// Final state regardless of snapshot stride.
    pub final_state: Vec<C64>,
}

impl EvolutionTrace {
    /// Largest relative per-step growth `(n_k+1 - n_k) / n_k`; a
    /// contraction trace stays at or below the contraction slack.
    pub fn max_step_growth(&self) -> f64 {
        self.norms
            .windows(2)
            .map(|w| {
                if w[0] > 0.0 {
                    (w[1] - w[0]) / w[0]
                } else {
                    0.0
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.max_step_growth() <= slack
    }

    /// CSV with header `time,norm,scheme`, one row per recorded time.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time,norm,scheme\n");
        for (t, n) in self.times.iter().zip(&self.norms) {
            out.push_str(&format!("{t:.12e},{n:.12e},{}\n", self.scheme.label()));
        }
        out
    }

    /// CSV matrix of snapshots: first column the time, then one column per
    /// state component (real part; imaginary written only if present).
    pub fn states_csv_string(&self) -> Option<String> {
        let states = self.states.as_ref()?;
        let has_imag = states
            .iter()
            .any(|(_, s)| s.iter().any(|z| z.im != 0.0));
        let mut out = String::from("time");
        if let Some((_, first)) = states.first() {
            for j in 0..first.len() {
                out.push_str(&format!(",x{j}"));
                if has_imag {
                    out.push_str(&format!(",x{j}_im"));
                }
            }
        }
        out.push('\n');
        for (idx, state) in states {
            out.push_str(&format!("{:.12e}", self.times[*idx]));
            for z in state {
                out.push_str(&format!(",{:.12e}", z.re));
                if has_imag {
                    out.push_str(&format!(",{:.12e}", z.im));
                }
            }
            out.push('\n');
        }
        Some(out)
    }
}

fn snapshot_stride(steps: usize) -> usize {
    (steps / MAX_SNAPSHOTS).max(1)
}

fn step_count(t_end: f64, dt: f64) -> usize {
    ((t_end / dt).round() as usize).max(1)
}

struct TraceBuilder {
    scheme: Scheme,
    space: Space,
    times: Vec<f64>,
    norms: Vec<f64>,
    states: Option<Vec<(usize, Vec<C64>)>>,
    stride: usize,
    steps: usize,
}

impl TraceBuilder {
    fn new(scheme: Scheme, space: Space, steps: usize, record_states: bool, x0: &[C64]) -> Self {
        let mut b = TraceBuilder {
            scheme,
            space,
            times: Vec::with_capacity(steps + 1),
            norms: Vec::with_capacity(steps + 1),
            states: if record_states { Some(Vec::new()) } else { None },
            stride: snapshot_stride(steps),
            steps,
        };
        b.record(0, 0.0, x0);
        b
    }

    fn record(&mut self, k: usize, t: f64, x: &[C64]) {
        self.times.push(t);
        self.norms.push(self.space.norm(x));
        if let Some(states) = self.states.as_mut() {
            if k % self.stride == 0 || k == self.steps {
                states.push((k, x.to_vec()));
            }
        }
    }

    fn finish(self, final_state: Vec<C64>) -> EvolutionTrace {
        EvolutionTrace {
            scheme: self.scheme,
            times: self.times,
            norms: self.norms,
            states: self.states,
            final_state,
        }
    }
}

/// Implicit Euler trace: `x+ = (I - dt*A)^-1 x`, factored once and reused.
pub fn implicit_euler_trace(
    a: &Matrix,
    x0: &[C64],
    t_end: f64,
    dt: f64,
    space: &Space,
    record_states: bool,
    tol: &Tolerances,
) -> Result<EvolutionTrace> {
    assert!(dt > 0.0 && t_end >= dt, "need dt > 0 and t_end >= dt");
    assert_eq!(a.rows(), x0.len(), "state length mismatch");
    let steps = step_count(t_end, dt);
    let stepper = Matrix::identity(a.rows()).sub(&a.scale(C64::new(dt, 0.0)));
    let factors =
        LuFactors::new(&stepper, tol).map_err(|_| Error::SingularStep { step: 0, dt })?;

    let mut builder = TraceBuilder::new(Scheme::ImplicitEuler, *space, steps, record_states, x0);
    let mut x = x0.to_vec();
    for k in 1..=steps {
        x = factors.solve(&x);
        builder.record(k, k as f64 * dt, &x);
    }
    Ok(builder.finish(x))
}

/// Crank-Nicolson trace: `x+ = (I - dt/2*A)^-1 (I + dt/2*A) x`.
pub fn crank_nicolson_trace(
    a: &Matrix,
    x0: &[C64],
    t_end: f64,
    dt: f64,
    space: &Space,
    record_states: bool,
    tol: &Tolerances,
) -> Result<EvolutionTrace> {
    assert!(dt > 0.0 && t_end >= dt, "need dt > 0 and t_end >= dt");
    assert_eq!(a.rows(), x0.len(), "state length mismatch");
    let steps = step_count(t_end, dt);
    let half = C64::new(0.5 * dt, 0.0);
    let ident = Matrix::identity(a.rows());
    let implicit = ident.sub(&a.scale(half));
    let explicit = ident.add(&a.scale(half));
    let factors =
        LuFactors::new(&implicit, tol).map_err(|_| Error::SingularStep { step: 0, dt })?;

    let mut builder = TraceBuilder::new(Scheme::CrankNicolson, *space, steps, record_states, x0);
    let mut x = x0.to_vec();
    for k in 1..=steps {
        x = factors.solve(&explicit.matvec(&x));
        builder.record(k, k as f64 * dt, &x);
    }
    Ok(builder.finish(x))
}

/// Exponential trace: `x(k*dt) = exp(dt*A)^k x0`, with the exponential
/// evaluated once on the step and then iterated.
pub fn expm_trace(
    a: &Matrix,
    x0: &[C64],
    t_end: f64,
    dt: f64,
    space: &Space,
    record_states: bool,
    tol: &Tolerances,
) -> Result<EvolutionTrace> {
    assert!(dt > 0.0 && t_end >= dt, "need dt > 0 and t_end >= dt");
    assert_eq!(a.rows(), x0.len(), "state length mismatch");
    let steps = step_count(t_end, dt);
    let step_op = expm(a, dt, tol)?;

    let mut builder = TraceBuilder::new(Scheme::Expm, *space, steps, record_states, x0);
    let mut x = x0.to_vec();
    for k in 1..=steps {
        x = step_op.matvec(&x);
        builder.record(k, k as f64 * dt, &x);
    }
    Ok(builder.finish(x))
}

/// Max relative deviation of `||exp(tA)x||` from `||x||` over the listed
/// times (positive and negative) and random draws; an isometric group
/// keeps this at rounding level.
pub fn isometry_deviation(
    a: &Matrix,
    t_list: &[f64],
    samples: usize,
    space: &Space,
    sampler: &mut Sampler,
    tol: &Tolerances,
) -> Result<f64> {
    assert_eq!(a.rows(), space.dim(), "operator does not act on the space");
    let mut worst = 0.0f64;
    for &t in t_list {
        let flow = expm(a, t, tol)?;
        for _ in 0..samples {
            let x = sampler.complex_vector(a.rows());
            let nx = space.norm(&x);
            if nx == 0.0 {
                continue;
            }
            let ny = space.norm(&flow.matvec(&x));
            worst = worst.max((ny - nx).abs() / nx);
        }
    }
    Ok(worst)
}

/// Fit `||exp(tA)|| <= M e^(w t)` on a positive time grid.
///
/// The norm is the weighted operator 2-norm.  (M, w) come from a least
/// squares fit of `log ||exp(tA)||` against t with M clamped to at least
/// 1 (a semigroup starts at the identity), after which w is raised just
/// enough that the bound dominates every measured sample.
pub fn growth_bound_fit(
    a: &Matrix,
    t_grid: &[f64],
    weights: &[f64],
    tol: &Tolerances,
) -> Result<(f64, f64)> {
    assert!(!t_grid.is_empty() && t_grid.iter().all(|&t| t > 0.0));
    assert!(t_grid.windows(2).all(|w| w[0] < w[1]), "grid must increase");

    // A uniform grid starting at its own spacing lets us take one
    // exponential and accumulate powers instead of re-evaluating.
    let dt = t_grid[0];
    let uniform = t_grid
        .iter()
        .enumerate()
        .all(|(k, &t)| (t - (k + 1) as f64 * dt).abs() <= 1e-12 * t.abs());

    let mut norms = Vec::with_capacity(t_grid.len());
    if uniform {
        let e1 = expm(a, dt, tol)?;
        let mut ek = e1.clone();
        norms.push(spectral_norm_weighted(&ek, weights, tol)?);
        for _ in 1..t_grid.len() {
            ek = ek.mul(&e1);
            norms.push(spectral_norm_weighted(&ek, weights, tol)?);
        }
    } else {
        for &t in t_grid {
            let e = expm(a, t, tol)?;
            norms.push(spectral_norm_weighted(&e, weights, tol)?);
        }
    }

    // least squares on log norms
    let n = t_grid.len() as f64;
    let logs: Vec<f64> = norms.iter().map(|&v| v.max(1e-300).ln()).collect();
    let st: f64 = t_grid.iter().sum();
    let sl: f64 = logs.iter().sum();
    let stt: f64 = t_grid.iter().map(|t| t * t).sum();
    let stl: f64 = t_grid.iter().zip(&logs).map(|(t, l)| t * l).sum();
    let denom = n * stt - st * st;
    let slope = if denom.abs() > 0.0 {
        (n * stl - st * sl) / denom
    } else {
        0.0
    };
    let intercept = (sl - slope * st) / n;

    let m = intercept.exp().max(1.0);
    // raise the rate until M*e^(w t) dominates the measurements
    let mut omega = slope;
    for (&t, &l) in t_grid.iter().zip(&logs) {
        omega = omega.max((l - m.ln()) / t);
    }
    Ok((m, omega))
}

// ── Tests ────────────────────────────────────────────────────────────────
