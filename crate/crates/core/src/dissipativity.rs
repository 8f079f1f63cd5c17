//! Dissipativity margins, coercivity reports, and generation certificates.
//!
//! An operator A on a space with semi-inner product [.,.] is dissipative
//! when `Re[Ax, x] <= 0` for all x.  The margin reported here is
//! `sup_x Re[Ax, x] / ||x||^2`:
//!
//! * at p = 2 it is the largest eigenvalue of the Hermitian part of the
//!   weight-conjugated operator — exact up to the eigensolver;
//! * at p != 2 it is the best value found by seeded sampling plus
//!   derivative-free coordinate ascent, flagged as a lower bound.
//!
//! The same machinery certifies the closure operator S: the coercivity
//! constant `m2 = inf_x Re[x, Sx] / ||x||^2`, the operator norm `||S||`,
//! the guaranteed shift window `(0, m2/||S||^2]`, and the largest shift
//! constant `m` with `m*I - S^-1` dissipative (equivalently
//! `inf_x Re[S^-1 x, x] / ||x||^2`).
//!
//! A generation certificate bundles desk-scale evidence that A generates
//! a contraction semigroup: the margin, relative residuals of resolvent
//! solves `(lambda*I - A)x = g` over canonical and seeded probes, and a
//! growth-bound fit (M, w) for `||exp(tA)||`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::growth_bound_fit;
use crate::linalg::{hermitian_eigvals, invert, op_pnorm, vec_norm2, vec_sub, LuFactors, Matrix, C64};
use crate::sampler::Sampler;
use crate::sip::{GridSpace, Space};
use crate::tol::Tolerances;

/// Upper cap on coordinate-ascent sweeps used to refine sampled extrema.
const REFINE_SWEEPS: usize = 200;

/// A measured extremum of a Rayleigh-type quotient.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginEstimate {
    pub value: f64,
    /// True when the value came from an eigensolve (p = 2) rather than
    /// sampling; sampled suprema are lower bounds, sampled infima upper
    /// bounds.
    pub exact: bool,
    /// Number of random draws behind a sampled estimate (0 when exact).
    pub samples: usize,
}

/// `W^(1/2) A W^(-1/2)` for the diagonal weight matrix W.
fn weight_conjugate(a: &Matrix, w: &[f64]) -> Matrix {
    assert_eq!(a.rows(), w.len());
    Matrix::from_fn(a.rows(), a.cols(), |i, j| {
        a.get(i, j) * (w[i].sqrt() / w[j].sqrt())
    })
}

/// Hermitian part `(B + B^H)/2`; bitwise Hermitian by construction.
fn hermitian_part(b: &Matrix) -> Matrix {
    Matrix::from_fn(b.rows(), b.rows(), |i, j| {
        (b.get(i, j) + b.get(j, i).conj()) * 0.5
    })
}

/// Largest eigenvalue of the Hermitian part of A in the weighted 2-inner
/// product; the exact dissipativity margin at p = 2.
fn hilbert_margin(a: &Matrix, w: &[f64], tol: &Tolerances) -> f64 {
    let h = hermitian_part(&weight_conjugate(a, w));
    let vals = hermitian_eigvals(&h, tol)
        .expect("hermitian part is Hermitian by construction");
    *vals.last().expect("nonempty spectrum")
}

/// Derivative-free coordinate search maximizing (or minimizing) a
/// scale-invariant objective, starting from `x0`.  Deterministic: fixed
/// sweep order, shrinking step, at most [`REFINE_SWEEPS`] sweeps.
fn coordinate_refine(
    obj: &dyn Fn(&[C64]) -> f64,
    x0: &[C64],
    maximize: bool,
) -> (f64, Vec<C64>) {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut x = x0.to_vec();
    let mut best = sign * obj(&x);
    let mut delta = 0.25;
    for _ in 0..REFINE_SWEEPS {
        let mut improved = false;
        for i in 0..x.len() {
            for (dre, dim) in [(delta, 0.0), (-delta, 0.0), (0.0, delta), (0.0, -delta)] {
                let saved = x[i];
                x[i] += Complex64::new(dre, dim);
                let v = sign * obj(&x);
                if v > best * (1.0 + 1e-14) + 1e-300 {
                    best = v;
                    improved = true;
                } else {
                    x[i] = saved;
                }
            }
        }
        if !improved {
            delta *= 0.5;
            if delta < 1e-9 {
                break;
            }
        }
    }
    (sign * best, x)
}

/// Sampled extremum of `quotient` over normalized complex draws, refined
/// by coordinate search from the best draw.
fn sampled_extremum(
    quotient: &dyn Fn(&[C64]) -> f64,
    dim: usize,
    samples: usize,
    maximize: bool,
    sampler: &mut Sampler,
) -> f64 {
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut best = f64::NEG_INFINITY;
    let mut best_x = vec![C64::new(1.0, 0.0); dim];
    // deterministic probes first: coordinate directions and the ones vector
    let mut probes: Vec<Vec<C64>> = Vec::with_capacity(dim + 1 + samples);
    for i in 0..dim {
        let mut e = vec![C64::new(0.0, 0.0); dim];
        e[i] = C64::new(1.0, 0.0);
        probes.push(e);
    }
    probes.push(vec![C64::new(1.0, 0.0); dim]);
    for _ in 0..samples {
        probes.push(sampler.complex_vector(dim));
    }
    for x in probes {
        let v = sign * quotient(&x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    let (refined, _) = coordinate_refine(quotient, &best_x, maximize);
    if maximize {
        refined.max(sign * best)
    } else {
        refined.min(sign * best)
    }
}

/// Dissipativity margin `sup_x Re[Ax, x] / ||x||^2` on the given space.
///
/// Exact (eigensolve) at p = 2; sampled lower bound otherwise, using
/// `samples` seeded draws plus coordinate ascent.
pub fn dissipativity_margin(
    a: &Matrix,
    space: &Space,
    samples: usize,
    sampler: &mut Sampler,
    tol: &Tolerances,
) -> MarginEstimate {
    assert!(a.is_square() && a.rows() == space.dim(), "operator/space mismatch");
    if space.is_hilbert() {
        return MarginEstimate {
            value: hilbert_margin(a, &space.weights(), tol),
            exact: true,
            samples: 0,
        };
    }
    let quotient = |x: &[C64]| -> f64 {
        let nx = space.norm(x);
        if nx == 0.0 {
            return f64::NEG_INFINITY;
        }
        let ax = a.matvec(x);
        space.sip(&ax, x, tol).re / (nx * nx)
    };
    MarginEstimate {
        value: sampled_extremum(&quotient, space.dim(), samples, true, sampler),
        exact: false,
        samples,
    }
}

// ── Norm form of dissipativity ───────────────────────────────────────────

/// Outcome of testing `lambda*||x|| <= ||(lambda*I - A)x||` over samples.
#[derive(Debug, Clone, Serialize)]
pub struct NormDissipativityReport {
    pub lambdas: Vec<f64>,
    /// Smallest observed `||(lambda*I - A)x|| / (lambda*||x||)`; values
    /// below 1 violate the inequality.
    pub min_ratio: f64,
    pub worst_lambda: f64,
    /// Number of (lambda, x) pairs violating beyond the slack.
    pub violations: usize,
    pub holds: bool,
    /// Witness achieving the minimum ratio (real/imag interleaved is not
    /// used; plain component list).
    #[serde(skip)]
    pub witness: Vec<C64>,
}

/// Check the norm inequality that characterizes dissipativity, over the
/// given shifts, canonical probes, and seeded random draws.
pub fn norm_dissipativity_check(
    a: &Matrix,
    space: &Space,
    lambdas: &[f64],
    samples: usize,
    sampler: &mut Sampler,
    tol: &Tolerances,
) -> NormDissipativityReport {
    assert!(a.is_square() && a.rows() == space.dim(), "operator/space mismatch");
    assert!(lambdas.iter().all(|&l| l > 0.0), "shifts must be positive");
    let n = space.dim();

    let mut probes: Vec<Vec<C64>> = Vec::with_capacity(n + 1 + samples);
    for i in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[i] = C64::new(1.0, 0.0);
        probes.push(e);
    }
    probes.push(vec![C64::new(1.0, 0.0); n]);
    for _ in 0..samples {
        probes.push(sampler.complex_vector(n));
    }

    let mut min_ratio = f64::INFINITY;
    let mut worst_lambda = lambdas.first().copied().unwrap_or(1.0);
    let mut witness = probes[0].clone();
    let mut violations = 0usize;
    for &lambda in lambdas {
        for x in &probes {
            let nx = space.norm(x);
            if nx == 0.0 {
                continue;
            }
            let ax = a.matvec(x);
            let shifted: Vec<C64> = x
                .iter()
                .zip(&ax)
                .map(|(xi, axi)| lambda * xi - axi)
                .collect();
            let ratio = space.norm(&shifted) / (lambda * nx);
            if ratio < min_ratio {
                min_ratio = ratio;
                worst_lambda = lambda;
                witness = x.clone();
            }
            if ratio < 1.0 - tol.contraction_slack {
                violations += 1;
            }
        }
    }
    NormDissipativityReport {
        lambdas: lambdas.to_vec(),
        min_ratio,
        worst_lambda,
        violations,
        holds: violations == 0,
        witness,
    }
}

// ── Coercivity of the closure operator ───────────────────────────────────

/// Certified constants of a coercive operator S on one grid space.
#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    /// Norm exponent of the space the constants refer to.
    pub p: f64,
    /// Coercivity constant `inf_x Re[x, Sx] / ||x||^2` (exact at p = 2,
    /// sampled upper bound otherwise).
    pub m2: f64,
    pub m2_exact: bool,
    /// Operator p-norm of S (exact for diagonal S and at p = 1).
    pub s_norm: f64,
    pub s_norm_exact: bool,
    /// Upper end of the guaranteed shift window `(0, m2 / ||S||^2]`.
    pub lambda_window: f64,
    /// Largest shift `m` with `m*I - S^-1` dissipative, i.e.
    /// `inf_x Re[S^-1 x, x] / ||x||^2`.
    pub shift_constant: f64,
    pub shift_exact: bool,
    /// Random draws used for sampled constants (0 when everything is
    /// exact).
    pub samples: usize,
}

impl CoercivityReport {
    pub fn window_contains(&self, lambda: f64) -> bool {
        lambda > 0.0 && lambda <= self.lambda_window
    }
}

/// Measure the coercivity data of S on a grid space.
///
/// Errors with [`Error::NotCoercive`] when the measured constant is not
/// bounded away from zero and with [`Error::SingularMatrix`] when S
/// cannot be inverted for the shift constant.
pub fn coercivity_report(
    s: &Matrix,
    space: &GridSpace,
    samples: usize,
    sampler: &mut Sampler,
    tol: &Tolerances,
) -> Result<CoercivityReport> {
    if !s.is_square() || s.rows() != space.n {
        return Err(Error::DimensionMismatch {
            expected: (space.n, space.n),
            got: s.shape(),
        });
    }
    let w = space.weights();
    let s_inv = invert(s, tol)?;
    let wrap = Space::Grid(*space);

    let exact = space.is_hilbert();
    let (m2, shift_constant, used_samples) = if exact {
        // inf Re<x, Sx> = inf Re<Sx, x>: smallest eigenvalue of the
        // weighted Hermitian part, for both constants.
        let m2 = *hermitian_eigvals(&hermitian_part(&weight_conjugate(s, &w)), tol)
            .expect("Hermitian by construction")
            .first()
            .expect("nonempty spectrum");
        let shift = *hermitian_eigvals(&hermitian_part(&weight_conjugate(&s_inv, &w)), tol)
            .expect("Hermitian by construction")
            .first()
            .expect("nonempty spectrum");
        (m2, shift, 0)
    } else {
        let m2_quotient = |x: &[C64]| -> f64 {
            let nx = wrap.norm(x);
            if nx == 0.0 {
                return f64::INFINITY;
            }
            let sx = s.matvec(x);
            wrap.sip(x, &sx, tol).re / (nx * nx)
        };
        let m2 = sampled_extremum(&m2_quotient, space.n, samples, false, sampler);
        let shift_quotient = |x: &[C64]| -> f64 {
            let nx = wrap.norm(x);
            if nx == 0.0 {
                return f64::INFINITY;
            }
            let six = s_inv.matvec(x);
            wrap.sip(&six, x, tol).re / (nx * nx)
        };
        let shift = sampled_extremum(&shift_quotient, space.n, samples, false, sampler);
        (m2, shift, samples)
    };

    if m2 <= tol.coercive_min {
        return Err(Error::NotCoercive { m2 });
    }

    let s_norm = op_pnorm(s, space.p, &w, &w, sampler);
    Ok(CoercivityReport {
        p: space.p,
        m2,
        m2_exact: exact,
        s_norm: s_norm.value,
        s_norm_exact: s_norm.exact,
        lambda_window: m2 / (s_norm.value * s_norm.value),
        shift_constant,
        shift_exact: exact,
        samples: used_samples,
    })
}

/// Hilbert-space coercivity constant: the smallest eigenvalue of
/// `S + S^*` in the weighted 2-inner product.  The coercivity constant at
/// p = 2 equals half of this.
pub fn hilbert_coercivity(s: &Matrix, space: &GridSpace, tol: &Tolerances) -> f64 {
    assert!(space.is_hilbert(), "hilbert_coercivity requires p = 2");
    assert!(s.is_square() && s.rows() == space.n);
    let sw = weight_conjugate(s, &space.weights());
    let sum = sw.add(&sw.adjoint());
    *hermitian_eigvals(&hermitian_part(&sum), tol)
        .expect("Hermitian by construction")
        .first()
        .expect("nonempty spectrum")
}

// ── Generation certificate ───────────────────────────────────────────────

/// Desk-scale evidence that A generates a contraction semigroup: a
/// dissipativity margin, resolvent-solve residuals over probe right-hand
/// sides, and a growth-bound fit.
#[derive(Debug, Clone, Serialize)]
pub struct GenerationCertificate {
    pub margin: MarginEstimate,
    /// Worst relative residual of `(lambda*I - A)x = g` over canonical
    /// basis vectors plus seeded random probes.
    pub range_max_residual: f64,
    pub lambda_used: f64,
    /// (M, w) with `||exp(tA)|| <= M e^(w t)` on the sampled grid; absent
    /// when the exponential refused the argument (norm too large), with
    /// the reason recorded.
    pub growth_bound: Option<(f64, f64)>,
    pub growth_bound_error: Option<String>,
    /// True iff margin <= margin tolerance and all range residuals pass.
    pub pass: bool,
}

/// Number of seeded random right-hand sides added to the canonical basis
/// when probing the range condition.
const RANGE_PROBES: usize = 8;

/// Time grid for the growth-bound fit.
fn growth_grid() -> Vec<f64> {
    (1..=20).map(|k| 0.1 * k as f64).collect()
}

pub fn generation_certificate(
    a: &Matrix,
    space: &Space,
    lambda: f64,
    samples: usize,
    sampler: &mut Sampler,
    tol: &Tolerances,
) -> Result<GenerationCertificate> {
    assert!(lambda > 0.0, "the range condition uses a positive shift");
    assert!(a.is_square() && a.rows() == space.dim(), "operator/space mismatch");
    let n = a.rows();

    let margin = dissipativity_margin(a, space, samples, sampler, tol);

    let shifted = Matrix::identity(n)
        .scale(C64::new(lambda, 0.0))
        .sub(a);
    let factors = LuFactors::new(&shifted, tol)?;
    let mut probes: Vec<Vec<C64>> = Vec::with_capacity(n + RANGE_PROBES);
    for i in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[i] = C64::new(1.0, 0.0);
        probes.push(e);
    }
    for _ in 0..RANGE_PROBES {
        probes.push(sampler.complex_vector(n));
    }
    let mut range_max_residual = 0.0f64;
    for g in &probes {
        let x = factors.solve(g);
        let residual = vec_norm2(&vec_sub(&shifted.matvec(&x), g)) / vec_norm2(g);
        range_max_residual = range_max_residual.max(residual);
    }

    let (growth_bound, growth_bound_error) =
        match growth_bound_fit(a, &growth_grid(), &space.weights(), tol) {
            Ok(pair) => (Some(pair), None),
            Err(e) => (None, Some(e.to_string())),
        };

    let pass =
        margin.value <= tol.margin_pass && range_max_residual <= tol.range_residual_rel;
    Ok(GenerationCertificate {
        margin,
        range_max_residual,
        lambda_used: lambda,
        growth_bound,
        growth_bound_error,
        pass,
    })
}

// ── Tests ────────────────────────────────────────────────────────────────
