//! Concrete models on the staggered unit-interval grid: a first-order
//! wave system with reflection boundary conditions, the diffusion
//! operator obtained from it by closing the flux component, and the
//! coefficient profiles shared by both.
//!
//! Grid layout for `N` cells on [0, 1] with `h = 1/N`:
//!
//! * nodes `xi_i = i*h`, `i = 0..=N` — the displacement-derivative
//!   component lives here;
//! * midpoints `xi_{j+1/2} = (j + 1/2)*h`, `j = 0..N` — the velocity /
//!   flux component lives here.
//!
//! Boundary conditions are parameterized by reflection coefficients
//! `K1` (right end) and `K2` (left end) in [-1, 1]:
//!
//! * `K = +1` is a hard (Dirichlet) condition: the boundary node is
//!   removed from the first component's space;
//! * `|K| < 1` couples the boundary node to itself through
//!   `gamma1 = (1 + K1)/(K1 - 1) <= 0` on the right and
//!   `gamma2 = (1 + K2)/(1 - K2) >= 0` on the left, which makes the
//!   energy rate `gamma1*f1(1)^2 - gamma2*f1(0)^2 <= 0` exactly;
//! * `K = -1` gives `gamma = 0` (free condition).
//!
//! Closing the wave extension with a positive diagonal multiplication
//! operator built from a coefficient profile produces, entry for entry,
//! the same matrix as the directly assembled diffusion stencil
//! [`heat_direct`]; the two assembly paths share their floating-point
//! accumulation order, so the match is exact, not merely close.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::blockops::{assemble_ext, BlockExt, Closure};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, C64};
use crate::sip::GridSpace;
use crate::tol::Tolerances;

// ── Coefficient profiles ─────────────────────────────────────────────────

/// Diffusion/stiffness coefficient profile on [0, 1] with closed-form
/// extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LambdaProfile {
    /// `lambda(xi) = a`
    Constant(f64),
    /// `lambda(xi) = a + b*xi`
    Affine { a: f64, b: f64 },
    /// `lambda(xi) = a + b*sin(pi*xi)`
    Sinusoid { a: f64, b: f64 },
}

impl LambdaProfile {
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            LambdaProfile::Constant(a) => a,
            LambdaProfile::Affine { a, b } => a + b * xi,
            LambdaProfile::Sinusoid { a, b } => a + b * (std::f64::consts::PI * xi).sin(),
        }
    }

    /// Exact (min, max) over [0, 1]: affine profiles attain extrema at the
    /// endpoints, and `sin(pi*xi)` spans exactly [0, 1] there.
    pub fn min_max(&self) -> (f64, f64) {
        match *self {
            LambdaProfile::Constant(a) => (a, a),
            LambdaProfile::Affine { a, b } | LambdaProfile::Sinusoid { a, b } => {
                if b >= 0.0 {
                    (a, a + b)
                } else {
                    (a + b, a)
                }
            }
        }
    }

    /// `lambda_min^2 / lambda_max`, the guaranteed coercivity constant of
    /// the induced multiplication closure at p = 2.
    pub fn coercivity_bound(&self) -> f64 {
        let (lo, hi) = self.min_max();
        lo * lo / hi
    }

    /// Reject profiles that are not strictly positive on [0, 1].
    pub fn validate(&self) -> Result<()> {
        let (lo, _) = self.min_max();
        if lo <= 0.0 {
            return Err(Error::NonPositiveCoefficient { min: lo });
        }
        Ok(())
    }

    /// Profile values at the `n` cell midpoints `(j + 1/2)/n`.
    pub fn samples_at_midpoints(&self, n: usize) -> Vec<f64> {
        let h = 1.0 / n as f64;
        (0..n).map(|j| self.eval((j as f64 + 0.5) * h)).collect()
    }
}

impl fmt::Display for LambdaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LambdaProfile::Constant(a) => write!(f, "{a}"),
            LambdaProfile::Affine { a, b } => {
                if b >= 0.0 {
                    write!(f, "{a}+{b}*xi")
                } else {
                    write!(f, "{a}-{}*xi", -b)
                }
            }
            LambdaProfile::Sinusoid { a, b } => {
                if b >= 0.0 {
                    write!(f, "{a}+{b}*sin")
                } else {
                    write!(f, "{a}-{}*sin", -b)
                }
            }
        }
    }
}

impl FromStr for LambdaProfile {
    type Err = String;

    /// Accepts `"<a>"`, `"<a>+<b>*sin"`, `"<a>-<b>*sin"`, `"<a>+sin"`,
    /// and the same forms with `xi` in place of `sin` (e.g. `"2"`,
    /// `"2+sin"`, `"2-0.3*sin"`, `"1+0.5*xi"`).
    fn from_str(text: &str) -> std::result::Result<Self, String> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err("empty profile".into());
        }
        // split at the first +/- after the leading number (index >= 1)
        let split = t
            .char_indices()
            .skip(1)
            .find(|&(i, c)| {
                (c == '+' || c == '-')
                    && !matches!(t.as_bytes()[i - 1], b'e' | b'E')
            })
            .map(|(i, _)| i);
        let Some(pos) = split else {
            let a: f64 = t.parse().map_err(|_| format!("bad constant: {t}"))?;
            return Ok(LambdaProfile::Constant(a));
        };
        let a: f64 = t[..pos]
            .parse()
            .map_err(|_| format!("bad base value: {}", &t[..pos]))?;
        let sign = if t.as_bytes()[pos] == b'+' { 1.0 } else { -1.0 };
        let rest = &t[pos + 1..];
        let (b_text, kind) = if let Some(stripped) = rest.strip_suffix("sin") {
            (stripped, "sin")
        } else if let Some(stripped) = rest.strip_suffix("xi") {
            (stripped, "xi")
        } else {
            return Err(format!("expected 'sin' or 'xi' term, got: {rest}"));
        };
        let b_mag: f64 = if b_text.is_empty() {
            1.0
        } else {
            b_text
                .strip_suffix('*')
                .ok_or_else(|| format!("expected '<b>*' before term: {rest}"))?
                .parse()
                .map_err(|_| format!("bad amplitude: {b_text}"))?
        };
        let b = sign * b_mag;
        Ok(match kind {
            "sin" => LambdaProfile::Sinusoid { a, b },
            _ => LambdaProfile::Affine { a, b },
        })
    }
}

// ── Staggered derivative pair ────────────────────────────────────────────

/// Forward difference node -> midpoint and its interior adjoint
/// midpoint -> interior node.
#[derive(Debug, Clone)]
pub struct StaggeredPair {
    /// `N x (N+1)`: `(D_plus f)_j = (f_{j+1} - f_j)/h`.
    pub d_plus: Matrix,
    /// `(N-1) x N`: `(D_minus g)_i = (g_{i+1/2} - g_{i-1/2})/h` at the
    /// interior nodes `i = 1..N-1`.
    pub d_minus: Matrix,
    pub h: f64,
}

/// Build the staggered derivative pair for `n_cells` cells.
pub fn staggered_derivatives(n_cells: usize) -> StaggeredPair {
    assert!(n_cells >= 2, "need at least two cells");
    let n = n_cells;
    let inv_h = n as f64;
    let mut d_plus = Matrix::zeros(n, n + 1);
    for j in 0..n {
        d_plus.set(j, j, C64::new(-inv_h, 0.0));
        d_plus.set(j, j + 1, C64::new(inv_h, 0.0));
    }
    let mut d_minus = Matrix::zeros(n - 1, n);
    for i in 1..n {
        d_minus.set(i - 1, i - 1, C64::new(-inv_h, 0.0));
        d_minus.set(i - 1, i, C64::new(inv_h, 0.0));
    }
    StaggeredPair {
        d_plus,
        d_minus,
        h: 1.0 / n as f64,
    }
}

// ── Wave extension ───────────────────────────────────────────────────────

/// First-order wave system on the staggered grid, as a block extension.
#[derive(Debug, Clone)]
pub struct WaveModel {
    pub k1: f64,
    pub k2: f64,
    pub n_cells: usize,
    /// The extension blocks: X1 holds the retained node values, X2 the
    /// midpoint values.
    pub blocks: BlockExt,
    /// The 2x2 rotation `(1/sqrt(2)) [[1, 1], [-1, 1]]` that
    /// block-diagonalizes the free two-speed system (see
    /// [`q_diagonalize`]).
    pub q: Matrix,
    /// Original indices (0..=N) of the nodes kept in X1; a boundary node
    /// is dropped exactly when its reflection coefficient equals 1.
    pub retained_nodes: Vec<usize>,
}

impl WaveModel {
    /// Grid coordinates of the retained nodes.
    pub fn node_xi(&self) -> Vec<f64> {
        let h = 1.0 / self.n_cells as f64;
        self.retained_nodes.iter().map(|&i| i as f64 * h).collect()
    }

    /// Grid coordinates of the midpoints.
    pub fn midpoint_xi(&self) -> Vec<f64> {
        let h = 1.0 / self.n_cells as f64;
        (0..self.n_cells).map(|j| (j as f64 + 0.5) * h).collect()
    }
}

/// Left-end coupling coefficient `gamma2 = (1 + K2)/(1 - K2) >= 0`.
fn gamma_left(k2: f64) -> f64 {
    (1.0 + k2) / (1.0 - k2)
}

/// Right-end coupling coefficient `gamma1 = (1 + K1)/(K1 - 1) <= 0`.
fn gamma_right(k1: f64) -> f64 {
    (1.0 + k1) / (k1 - 1.0)
}

/// Assemble the wave extension for `n_cells` cells with reflection
/// coefficients `k1` (right) and `k2` (left) on l^p component spaces.
///
/// Errors with [`Error::InvalidBoundary`] when a coefficient leaves
/// [-1, 1].
pub fn wave_ext(n_cells: usize, k1: f64, k2: f64, p: f64) -> Result<WaveModel> {
    assert!(n_cells >= 2, "need at least two cells");
    for &k in &[k1, k2] {
        if !(-1.0..=1.0).contains(&k) || !k.is_finite() {
            return Err(Error::InvalidBoundary { k });
        }
    }
    let n = n_cells;
    let inv_h = n as f64;
    // a reflection coefficient of exactly 1 is the hard condition: the
    // boundary value is pinned to zero and its node leaves the space
    let drop_left = k2 == 1.0;
    let drop_right = k1 == 1.0;
    let retained: Vec<usize> = (0..=n)
        .filter(|&i| !(i == 0 && drop_left) && !(i == n && drop_right))
        .collect();
    let n1 = retained.len();
    let n2 = n;
    let x1 = GridSpace::nodes(p, n).with_dim(n1);
    let x2 = GridSpace::midpoints(p, n);

    // A2 : nodes -> midpoints, the forward difference with dropped
    // columns (a removed node contributes zero).
    let mut a2 = Matrix::zeros(n2, n1);
    for (col, &node) in retained.iter().enumerate() {
        // node appears in midpoint rows node-1 (coefficient +1/h) and
        // node (coefficient -1/h)
        if node >= 1 {
            a2.set(node - 1, col, C64::new(inv_h, 0.0));
        }
        if node <= n - 1 {
            a2.set(node, col, C64::new(-inv_h, 0.0));
        }
    }

    // A1 = [A11 | A12] : X1 x X2 -> X1
    let mut a1 = Matrix::zeros(n1, n1 + n2);
    for (row, &node) in retained.iter().enumerate() {
        if node == 0 {
            // (A1 f)_0 = (f2_{1/2} - gamma2 * f1_0) / h
            a1.set(row, row, C64::new(-(gamma_left(k2) * inv_h), 0.0));
            a1.set(row, n1, C64::new(inv_h, 0.0));
        } else if node == n {
            // (A1 f)_N = (gamma1 * f1_N - f2_{N-1/2}) / h
            a1.set(row, row, C64::new(gamma_right(k1) * inv_h, 0.0));
            a1.set(row, n1 + n - 1, C64::new(-inv_h, 0.0));
        } else {
            // interior: (A1 f)_i = (f2_{i+1/2} - f2_{i-1/2}) / h
            a1.set(row, n1 + node - 1, C64::new(-inv_h, 0.0));
            a1.set(row, n1 + node, C64::new(inv_h, 0.0));
        }
    }

    let blocks = assemble_ext(a1, a2, x1, x2)?;
    let r = 0.5f64.sqrt();
    let q = Matrix::from_real_rows(vec![vec![r, r], vec![-r, r]]);
    Ok(WaveModel {
        k1,
        k2,
        n_cells,
        blocks,
        q,
        retained_nodes: retained,
    })
}

// ── Characteristic diagonalization ───────────────────────────────────────

/// Result of conjugating the free two-speed system by `Q (x) I`.
#[derive(Debug, Clone)]
pub struct QDiagReport {
    /// `(Q (x) I) M (Q^T (x) I)` for `M = [[0, C], [C, 0]]`.
    pub d: Matrix,
    /// Largest off-diagonal-block magnitude of `d` (exactly zero: the
    /// two contributions to each off-block entry are the same product
    /// with opposite signs).
    pub off_diagonal_max: f64,
    /// The one-sided transport block C used in the construction.
    pub transport: Matrix,
}

/// Conjugate the free wave system by the characteristic rotation.
///
/// C is the one-sided transport realization on the node grid (forward
/// difference, last row zero), M couples two copies of it
/// off-diagonally, and the rotation produces `blockdiag(C, -C)`.
pub fn q_diagonalize(model: &WaveModel) -> QDiagReport {
    let n = model.n_cells;
    let s = n as f64;
    let m_dim = n + 1;
    let mut c = Matrix::zeros(m_dim, m_dim);
    for i in 0..n {
        c.set(i, i, C64::new(-s, 0.0));
        c.set(i, i + 1, C64::new(s, 0.0));
    }
    let zero = Matrix::zeros(m_dim, m_dim);
    let m = zero
        .hstack(&c)
        .vstack(&c.hstack(&zero));
    // Q (x) I
    let mut r = Matrix::zeros(2 * m_dim, 2 * m_dim);
    for br in 0..2 {
        for bc in 0..2 {
            let qv = model.q.get(br, bc);
            if qv.re == 0.0 && qv.im == 0.0 {
                continue;
            }
            for i in 0..m_dim {
                r.set(br * m_dim + i, bc * m_dim + i, qv);
            }
        }
    }
    let d = r.mul(&m).mul(&r.transpose());
    let off = d
        .block(0, m_dim, m_dim, 2 * m_dim)
        .max_abs()
        .max(d.block(m_dim, 0, 2 * m_dim, m_dim).max_abs());
    QDiagReport {
        d,
        off_diagonal_max: off,
        transport: c,
    }
}

// ── Multiplication closure ───────────────────────────────────────────────

/// Diagonal multiplication closure from strictly positive midpoint
/// samples; the inverse is the exact entrywise reciprocal.
pub fn multiplication_s(samples: &[f64], tol: &Tolerances) -> Result<Closure> {
    assert!(!samples.is_empty(), "empty coefficient sample list");
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonPositiveCoefficient { min });
    }
    let s = Matrix::from_real_diag(samples);
    let inv: Vec<f64> = samples.iter().map(|&v| 1.0 / v).collect();
    let s_inv = Matrix::from_real_diag(&inv);
    let residual = s
        .mul(&s_inv)
        .sub(&Matrix::identity(samples.len()))
        .max_abs();
    if residual > tol.closure_inverse_rel * (1.0 + s.max_abs()) {
        return Err(Error::InverseCheck {
            residual,
            threshold: tol.closure_inverse_rel * (1.0 + s.max_abs()),
        });
    }
    Ok(Closure {
        s,
        s_inv,
        inverse_residual: residual,
    })
}

// ── Direct diffusion stencil ─────────────────────────────────────────────

/// Directly assembled diffusion operator, for comparison against the
/// closure of the wave extension.
#[derive(Debug, Clone)]
pub struct HeatModel {
    pub lambda_samples: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub k1: f64,
    pub k2: f64,
    pub n_cells: usize,
    /// The stencil on the retained nodes.
    pub direct: Matrix,
    pub retained_nodes: Vec<usize>,
}

/// Assemble the diffusion stencil with midpoint coefficients
/// `lambda_samples` and the same boundary treatment as [`wave_ext`].
///
/// The assembly reproduces, term order included, the floating-point
/// accumulation of `A1 * [I; S*A2]`, so the result matches the closed
/// wave extension bit for bit:
///
/// * `c_j = (1/h) * (lambda_j * (1/h))` — inner product first, exactly
///   as the diagonal closure scales the forward difference before the
///   divergence row multiplies by 1/h again;
/// * boundary diagonals add their gamma term before the flux terms;
/// * interior diagonals accumulate `(-c_{j-1}) + (-c_j)` left to right.
pub fn heat_direct(
    n_cells: usize,
    lambda_samples: &[f64],
    k1: f64,
    k2: f64,
) -> Result<HeatModel> {
    assert!(n_cells >= 2, "need at least two cells");
    for &k in &[k1, k2] {
        if !(-1.0..=1.0).contains(&k) || !k.is_finite() {
            return Err(Error::InvalidBoundary { k });
        }
    }
    if lambda_samples.len() != n_cells {
        return Err(Error::DimensionMismatch {
            expected: (n_cells, 1),
            got: (lambda_samples.len(), 1),
        });
    }
    let min = lambda_samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = lambda_samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(min > 0.0) {
        return Err(Error::NonPositiveCoefficient { min });
    }

    let n = n_cells;
    let inv_h = n as f64;
    let c = |j: usize| inv_h * (lambda_samples[j] * inv_h);
    let drop_left = k2 == 1.0;
    let drop_right = k1 == 1.0;
    let retained: Vec<usize> = (0..=n)
        .filter(|&i| !(i == 0 && drop_left) && !(i == n && drop_right))
        .collect();
    let n1 = retained.len();
    let col_of = |node: usize| -> Option<usize> {
        if node == 0 && drop_left {
            None
        } else if node == n && drop_right {
            None
        } else {
            Some(node - usize::from(drop_left))
        }
    };

    let mut m = Matrix::zeros(n1, n1);
    for (row, &node) in retained.iter().enumerate() {
        let mut diag = 0.0f64;
        if node == 0 {
            diag = -(gamma_left(k2) * inv_h);
        } else if node == n {
            diag = gamma_right(k1) * inv_h;
        }
        if node >= 1 {
            // flux through the left midpoint node-1
            diag += -c(node - 1);
            if let Some(col) = col_of(node - 1) {
                m.set(row, col, C64::new(c(node - 1), 0.0));
            }
        }
        if node <= n - 1 {
            // flux through the right midpoint node
            diag += -c(node);
            if let Some(col) = col_of(node + 1) {
                m.set(row, col, C64::new(c(node), 0.0));
            }
        }
        m.set(row, row, C64::new(diag, 0.0));
    }

    Ok(HeatModel {
        lambda_samples: lambda_samples.to_vec(),
        lambda_min: min,
        lambda_max: max,
        k1,
        k2,
        n_cells,
        direct: m,
        retained_nodes: retained,
    })
}

// ── Tests ────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockops::build_as;
    use crate::dissipativity::dissipativity_margin;
    use crate::linalg::sym_eig;
    use crate::sampler::{Sampler, DEFAULT_SEED};
    use crate::sip::Space;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn profile_parsing_round_trips() {
        let cases: Vec<(&str, LambdaProfile)> = vec![
            ("2", LambdaProfile::Constant(2.0)),
            ("3.5", LambdaProfile::Constant(3.5)),
            ("2+sin", LambdaProfile::Sinusoid { a: 2.0, b: 1.0 }),
            ("2+0.5*sin", LambdaProfile::Sinusoid { a: 2.0, b: 0.5 }),
            ("2-0.3*sin", LambdaProfile::Sinusoid { a: 2.0, b: -0.3 }),
            ("1+xi", LambdaProfile::Affine { a: 1.0, b: 1.0 }),
            ("1+0.5*xi", LambdaProfile::Affine { a: 1.0, b: 0.5 }),
            ("1-0.25*xi", LambdaProfile::Affine { a: 1.0, b: -0.25 }),
            (" 2 + 0.5 * sin ", LambdaProfile::Sinusoid { a: 2.0, b: 0.5 }),
        ];
        for (text, expected) in cases {
            let parsed: LambdaProfile = text.parse().unwrap();
            assert_eq!(parsed, expected, "parsing {text:?}");
        }
        assert!("".parse::<LambdaProfile>().is_err());
        assert!("2+cos".parse::<LambdaProfile>().is_err());
        assert!("sin".parse::<LambdaProfile>().is_err());
    }

    #[test]
    fn profile_extrema_are_exact() {
        let p: LambdaProfile = "2+sin".parse().unwrap();
        assert_eq!(p.min_max(), (2.0, 3.0));
        assert_relative_eq!(p.coercivity_bound(), 4.0 / 3.0, max_relative = 1e-15);

        let q: LambdaProfile = "1-0.25*xi".parse().unwrap();
        assert_eq!(q.min_max(), (0.75, 1.0));

        let bad: LambdaProfile = "1-2*xi".parse().unwrap();
        assert!(matches!(
            bad.validate(),
            Err(Error::NonPositiveCoefficient { min }) if min == -1.0
        ));
    }

    #[test]
    fn staggered_differences_are_exact_on_linears() {
        let pair = staggered_derivatives(8);
        let nodes: Vec<C64> = (0..=8)
            .map(|i| C64::new(2.0 + 3.0 * (i as f64 / 8.0), 0.0))
            .collect();
        for v in pair.d_plus.matvec(&nodes) {
            assert_relative_eq!(v.re, 3.0, max_relative = 1e-14);
        }
        let mids: Vec<C64> = (0..8)
            .map(|j| C64::new(-1.0 + 0.5 * ((j as f64 + 0.5) / 8.0), 0.0))
            .collect();
        for v in pair.d_minus.matvec(&mids) {
            assert_relative_eq!(v.re, 0.5, max_relative = 1e-13);
        }
    }

    #[test]
    fn staggered_differences_converge_at_second_order() {
        let error_at = |n: usize| -> f64 {
            let pair = staggered_derivatives(n);
            let nodes: Vec<C64> = (0..=n)
                .map(|i| C64::new((i as f64 / n as f64).sin(), 0.0))
                .collect();
            let deriv = pair.d_plus.matvec(&nodes);
            let mut worst = 0.0f64;
            for (j, v) in deriv.iter().enumerate() {
                let xi = (j as f64 + 0.5) / n as f64;
                worst = worst.max((v.re - xi.cos()).abs());
            }
            worst
        };
        let ratio = error_at(16) / error_at(32);
        assert!((3.5..4.5).contains(&ratio), "convergence ratio {ratio}");
    }

    #[test]
    fn staggered_pair_satisfies_summation_by_parts() {
        // sum_j (D+ f)_j g_j + sum_i f_i (D- g)_{i-1} telescopes to the
        // boundary terms f_N g_{N-1/2} - f_0 g_{1/2} exactly
        let n = 10;
        let pair = staggered_derivatives(n);
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let f = sampler.complex_vector(n + 1);
        let g = sampler.complex_vector(n);
        let dpf = pair.d_plus.matvec(&f);
        let dmg = pair.d_minus.matvec(&g);
        let mut total = C64::new(0.0, 0.0);
        for j in 0..n {
            total += dpf[j] * g[j];
        }
        for i in 1..n {
            total += f[i] * dmg[i - 1];
        }
        let boundary = (f[n] * g[n - 1] - f[0] * g[0]) / pair.h;
        assert!(
            (total - boundary).norm() <= 1e-10 * (1.0 + boundary.norm()),
            "telescoping defect {}",
            (total - boundary).norm()
        );
    }

    #[test]
    fn wave_ext_rejects_out_of_range_coefficients() {
        assert!(matches!(
            wave_ext(8, 1.5, 0.0, 2.0),
            Err(Error::InvalidBoundary { k }) if k == 1.5
        ));
        assert!(matches!(
            wave_ext(8, 0.0, -2.0, 2.0),
            Err(Error::InvalidBoundary { k }) if k == -2.0
        ));
        assert!(wave_ext(8, f64::NAN, 0.0, 2.0).is_err());
    }

    #[test]
    fn hard_reflection_removes_the_boundary_node() {
        let n = 8;
        for (k1, k2, expect_n1) in [
            (0.0, 0.0, n + 1),
            (1.0, 0.0, n),
            (0.0, 1.0, n),
            (1.0, 1.0, n - 1),
        ] {
            let model = wave_ext(n, k1, k2, 2.0).unwrap();
            assert_eq!(model.blocks.x1.n, expect_n1, "K=({k1},{k2})");
            assert_eq!(model.retained_nodes.len(), expect_n1);
            assert_eq!(model.blocks.a2.shape(), (n, expect_n1));
            assert_eq!(model.blocks.a1.shape(), (expect_n1, expect_n1 + n));
        }
    }

    #[test]
    fn wave_energy_rate_is_the_boundary_flux() {
        // h * <A_ext z, z> = gamma1 * f1(1)^2 - gamma2 * f1(0)^2 for real
        // data: the interior telescopes away exactly.
        let n = 16;
        let (k1, k2) = (0.25, -0.5);
        let model = wave_ext(n, k1, k2, 2.0).unwrap();
        let mut sampler = Sampler::new(DEFAULT_SEED);
        let space = Space::Product(model.blocks.space());
        for _ in 0..20 {
            let zr = sampler.real_vector(2 * n + 1);
            let z: Vec<C64> = zr.iter().map(|&v| C64::new(v, 0.0)).collect();
            let az = model.blocks.assembled.matvec(&z);
            let rate = space.sip(&az, &z, &tol()).re;
            let f1_right = zr[n];
            let f1_left = zr[0];
            let expected = gamma_right(k1) * f1_right * f1_right
                - gamma_left(k2) * f1_left * f1_left;
            assert_relative_eq!(rate, expected, epsilon = 1e-10, max_relative = 1e-9);
        }
    }

    #[test]
    fn wave_extension_is_dissipative_across_reflections() {
        let mut sampler = Sampler::new(DEFAULT_SEED);
        for &(k1, k2) in &[(0.5, -1.0), (1.0, 1.0), (0.0, 0.0), (-1.0, 0.75)] {
            let model = wave_ext(16, k1, k2, 2.0).unwrap();
            let space = Space::Product(model.blocks.space());
            let margin =
                dissipativity_margin(&model.blocks.assembled, &space, 0, &mut sampler, &tol());
            assert!(
                margin.value <= 1e-10,
                "K=({k1},{k2}) margin {}",
                margin.value
            );
        }
    }

    #[test]
    fn hard_reflection_gives_an_antisymmetric_extension() {
        let model = wave_ext(8, 1.0, 1.0, 2.0).unwrap();
        let a12 = model.blocks.a12();
        let neg_a2t = model
            .blocks
            .a2
            .transpose()
            .scale(C64::new(-1.0, 0.0));
        assert_eq!(a12.max_entry_diff(&neg_a2t), 0.0);
        assert_eq!(model.blocks.a11().max_abs(), 0.0);
        // A + A^T vanishes identically, so exp(tA) is an isometry
        let skew_defect = model
            .blocks
            .assembled
            .add(&model.blocks.assembled.transpose())
            .max_abs();
        assert_eq!(skew_defect, 0.0);
    }

    #[test]
    fn q_rotation_block_diagonalizes_the_free_system() {
        let model = wave_ext(8, 0.0, 0.0, 2.0).unwrap();
        let report = q_diagonalize(&model);
        assert_eq!(report.off_diagonal_max, 0.0);
        let md = report.transport.rows();
        let upper = report.d.block(0, 0, md, md);
        let lower = report.d.block(md, md, 2 * md, 2 * md);
        assert!(upper.max_entry_diff(&report.transport) <= 1e-12 * 8.0);
        let neg = report.transport.scale(C64::new(-1.0, 0.0));
        assert!(lower.max_entry_diff(&neg) <= 1e-12 * 8.0);
    }

    #[test]
    fn multiplication_closure_requires_positivity() {
        assert!(matches!(
            multiplication_s(&[1.0, -0.5, 2.0], &tol()),
            Err(Error::NonPositiveCoefficient { min }) if min == -0.5
        ));
        let closure = multiplication_s(&[1.0, 2.0, 4.0], &tol()).unwrap();
        assert_eq!(closure.inverse_residual, 0.0);
    }

    #[test]
    fn heat_stencil_is_exactly_symmetric() {
        let profile: LambdaProfile = "2+sin".parse().unwrap();
        for &(k1, k2) in &[(1.0, 1.0), (-1.0, -1.0), (0.5, 0.0), (0.25, -0.75)] {
            let samples = profile.samples_at_midpoints(16);
            let heat = heat_direct(16, &samples, k1, k2).unwrap();
            assert_eq!(heat.direct.max_asymmetry(), 0.0, "K=({k1},{k2})");
        }
    }

    #[test]
    fn neumann_stencil_annihilates_constants() {
        let samples = LambdaProfile::Constant(1.0).samples_at_midpoints(16);
        let heat = heat_direct(16, &samples, -1.0, -1.0).unwrap();
        let ones = vec![C64::new(1.0, 0.0); heat.direct.rows()];
        let image = heat.direct.matvec(&ones);
        let scale = heat.direct.max_abs();
        for v in image {
            assert!(v.norm() <= 1e-12 * scale, "row sum {v}");
        }
    }

    #[test]
    fn dirichlet_spectrum_matches_the_discrete_formula() {
        // K1 = K2 = 1, lambda = 1: the stencil is the classical
        // second-difference matrix with eigenvalues
        // -4 N^2 sin^2(k pi / (2N)), k = 1..N-1
        let n = 16;
        let samples = LambdaProfile::Constant(1.0).samples_at_midpoints(n);
        let heat = heat_direct(n, &samples, 1.0, 1.0).unwrap();
        let eig = sym_eig(&heat.direct, &tol()).unwrap();
        let mut expected: Vec<f64> = (1..n)
            .map(|k| {
                let s = (k as f64 * std::f64::consts::PI / (2.0 * n as f64)).sin();
                -4.0 * (n as f64) * (n as f64) * s * s
            })
            .collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in eig.values.iter().zip(&expected) {
            assert_relative_eq!(got, want, max_relative = 1e-10);
        }
    }

    #[test]
    fn closing_the_wave_extension_reproduces_the_heat_stencil_bitwise() {
        let profiles: Vec<LambdaProfile> = vec![
            "2".parse().unwrap(),
            "1+0.5*xi".parse().unwrap(),
            "2+sin".parse().unwrap(),
        ];
        for profile in profiles {
            for &(k1, k2) in &[(1.0, 1.0), (-1.0, -1.0), (0.5, 0.0), (1.0, -1.0), (0.0, 1.0)] {
                let n = 16;
                let samples = profile.samples_at_midpoints(n);
                let model = wave_ext(n, k1, k2, 2.0).unwrap();
                let closure = multiplication_s(&samples, &tol()).unwrap();
                let a_s = build_as(&model.blocks, &closure).unwrap();
                let heat = heat_direct(n, &samples, k1, k2).unwrap();
                assert_eq!(
                    a_s.max_entry_diff(&heat.direct),
                    0.0,
                    "profile {profile}, K=({k1},{k2})"
                );
            }
        }
    }

    #[test]
    fn retained_node_coordinates_follow_the_grid() {
        let model = wave_ext(4, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(model.retained_nodes, vec![0, 1, 2, 3]);
        let xi = model.node_xi();
        assert_relative_eq!(xi[0], 0.0);
        assert_relative_eq!(xi[3], 0.75);
        let mid = model.midpoint_xi();
        assert_relative_eq!(mid[0], 0.125);
        assert_relative_eq!(mid[3], 0.875);
    }
}
