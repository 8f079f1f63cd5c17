//! Block extension operators and the generator they induce.
//!
//! The central object is a block operator on a product space X1 x X2,
//!
//! ```text
//! A_ext = [ A1 ]            A1 : X1 x X2 -> X1   (stored as one wide block)
//!         [ A2  0 ]         A2 : X1 -> X2
//! ```
//!
//! together with a coercive closure S on X2.  Coupling the components by
//! `x2 = S A2 x1` collapses the extension to the square operator
//!
//! ```text
//! A_S x = A1 (x, S A2 x),        A_S = A1 * [I; S*A2]  on X1,
//! ```
//!
//! which inherits dissipativity from A_ext through the identity
//!
//! ```text
//! [A_S x, x]_1 = [A_ext z, z] - [A2 x, S A2 x]_2,    z = (x, S A2 x).
//! ```
//!
//! Resolvent solves for A_S are performed on the extension: for a shift
//! lambda in the window certified by the closure's coercivity report, the
//! bordered system `(lambda*I - A_ext - P(lambda)) z = (g, 0)` with the
//! perturbation `P(lambda) = blockdiag(0, lambda*I - S^-1)` has a unique
//! solution whose first component solves `(lambda*I - A_S) x1 = g` and
//! whose second component reproduces the coupling `x2 = S A2 x1` exactly.

use serde::Serialize;

use crate::dissipativity::{dissipativity_margin, norm_dissipativity_check, NormDissipativityReport};
use crate::error::{Error, Result};
use crate::linalg::{invert, LuFactors, Matrix, C64};
use crate::sampler::Sampler;
use crate::sip::{GridSpace, ProductSpace, Space};
use crate::tol::Tolerances;

// ── Extension operator ───────────────────────────────────────────────────

/// A block extension operator with its component spaces.
#[derive(Debug, Clone)]
pub struct BlockExt {
    /// Wide top block `A1 : X1 x X2 -> X1`, shape n1 x (n1 + n2).
    pub a1: Matrix,
    /// Coupling block `A2 : X1 -> X2`, shape n2 x n1.
    pub a2: Matrix,
    /// Assembled square operator `[[A1], [A2, 0]]` on the product space.
    pub assembled: Matrix,
    pub x1: GridSpace,
    pub x2: GridSpace,
}

impl BlockExt {
    pub fn space(&self) -> ProductSpace {
        ProductSpace::new(self.x1, self.x2)
    }

    /// Left part of A1 (columns acting on X1).
    pub fn a11(&self) -> Matrix {
        self.a1.block(0, 0, self.a1.rows(), self.x1.n)
    }

    /// Right part of A1 (columns acting on X2).
    pub fn a12(&self) -> Matrix {
        self.a1.block(0, self.x1.n, self.a1.rows(), self.a1.cols())
    }
}

/// Assemble the extension from its blocks, checking shapes.
pub fn assemble_ext(
    a1: Matrix,
    a2: Matrix,
    x1: GridSpace,
    x2: GridSpace,
) -> Result<BlockExt> {
    let (n1, n2) = (x1.n, x2.n);
    if a1.shape() != (n1, n1 + n2) {
        return Err(Error::DimensionMismatch {
            expected: (n1, n1 + n2),
            got: a1.shape(),
        });
    }
    if a2.shape() != (n2, n1) {
        return Err(Error::DimensionMismatch {
            expected: (n2, n1),
            got: a2.shape(),
        });
    }
    let bottom = a2.hstack(&Matrix::zeros(n2, n2));
    let assembled = a1.vstack(&bottom);
    Ok(BlockExt {
        a1,
        a2,
        assembled,
        x1,
        x2,
    })
}

// ── Closure operator ─────────────────────────────────────────────────────

/// A closure operator S together with its checked inverse.
#[derive(Debug, Clone)]
pub struct Closure {
    pub s: Matrix,
    pub s_inv: Matrix,
    /// Max-entry residual of `S * S_inv - I`.
    pub inverse_residual: f64,
}

impl Closure {
    /// Invert S and verify the inverse to the configured residual.
    pub fn new(s: Matrix, tol: &Tolerances) -> Result<Self> {
        assert!(s.is_square(), "closure operator must be square");
        let s_inv = invert(&s, tol)?;
        let residual = s
            .mul(&s_inv)
            .sub(&Matrix::identity(s.rows()))
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

    pub fn dim(&self) -> usize {
        self.s.rows()
    }
}

// ── Induced generator ────────────────────────────────────────────────────

/// `A_S = A1 * [I; S*A2]`, the square operator induced on X1.
pub fn build_as(ext: &BlockExt, closure: &Closure) -> Result<Matrix> {
    if closure.dim() != ext.x2.n {
        return Err(Error::DimensionMismatch {
            expected: (ext.x2.n, ext.x2.n),
            got: closure.s.shape(),
        });
    }
    let n1 = ext.x1.n;
    let coupling = Matrix::identity(n1).vstack(&closure.s.mul(&ext.a2));
    Ok(ext.a1.mul(&coupling))
}

/// Relative defect of the dissipation identity at one point x in X1:
///
/// ```text
/// [A_S x, x]_1  vs  [A_ext z, z] - [A2 x, S A2 x]_2,   z = (x, S A2 x),
/// ```
///
/// normalized by `1 + |lhs| + |[A_ext z, z]|`.
pub fn dissipation_identity_residual(
    ext: &BlockExt,
    closure: &Closure,
    x: &[C64],
    tol: &Tolerances,
) -> Result<f64> {
    if x.len() != ext.x1.n {
        return Err(Error::DimensionMismatch {
            expected: (ext.x1.n, 1),
            got: (x.len(), 1),
        });
    }
    let a_s = build_as(ext, closure)?;
    let a2x = ext.a2.matvec(x);
    let sa2x = closure.s.matvec(&a2x);

    let mut z = x.to_vec();
    z.extend_from_slice(&sa2x);
    let space = ext.space();

    let lhs = crate::sip::sip_slices(&a_s.matvec(x), x, ext.x1.p, ext.x1.h, tol);
    let ext_term = space.sip(&ext.assembled.matvec(&z), &z, tol);
    let closure_term =
        crate::sip::sip_slices(&a2x, &sa2x, ext.x2.p, ext.x2.h, tol);
    let rhs = ext_term - closure_term;
    Ok((lhs - rhs).norm() / (1.0 + lhs.norm() + ext_term.norm()))
}

/// Diagonal perturbation `P(lambda) = blockdiag(0 on X1, lambda*I - S^-1)`
/// used by the resolvent construction.
pub fn perturbation_p(ext: &BlockExt, closure: &Closure, lambda: f64) -> Matrix {
    let (n1, n2) = (ext.x1.n, ext.x2.n);
    let lower = Matrix::identity(n2)
        .scale(C64::new(lambda, 0.0))
        .sub(&closure.s_inv);
    Matrix::from_fn(n1 + n2, n1 + n2, |i, j| {
        if i >= n1 && j >= n1 {
            lower.get(i - n1, j - n1)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

// ── Resolvent via the extension ──────────────────────────────────────────

/// Whether a resolvent query insists on the certified shift window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ResolventMode {
    /// Refuse shifts outside the certified window `(0, m2/||S||^2]`.
    Certified,
    /// Attempt the solve anyway and report diagnostics.
    Exploratory,
}

/// One resolvent request `(lambda*I - A_S) x1 = g`.
#[derive(Debug, Clone)]
pub struct ResolventQuery {
    pub lambda: f64,
    pub g: Vec<C64>,
    pub mode: ResolventMode,
}

/// Solution of a resolvent query, with coupling and residual diagnostics.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub x1: Vec<C64>,
    pub x2: Vec<C64>,
    /// Relative defect `||x2 - S A2 x1|| / max(||x2||, ||S A2 x1||)`.
    pub closure_defect_rel: f64,
    /// Relative residual `||(lambda*I - A_S) x1 - g|| / ||g||`.
    pub resolvent_residual_rel: f64,
    /// Whether lambda lies in the certified window that was supplied.
    pub in_window: bool,
    /// One-norm condition estimate of the bordered extension system.
    pub condition_estimate: f64,
}

/// Solve `(lambda*I - A_S) x1 = g` through the bordered extension system
/// `(lambda*I - A_ext - P(lambda)) z = (g, 0)`.
///
/// `window` is the certified upper end of the admissible shift interval
/// (from a coercivity report of S).  Certified queries outside it fail
/// with [`Error::WindowViolation`]; a singular bordered system fails with
/// [`Error::SingularExtension`].
pub fn resolvent_via_extension(
    ext: &BlockExt,
    closure: &Closure,
    window: f64,
    query: &ResolventQuery,
    tol: &Tolerances,
) -> Result<ResolventSolution> {
    let (n1, n2) = (ext.x1.n, ext.x2.n);
    if query.g.len() != n1 {
        return Err(Error::DimensionMismatch {
            expected: (n1, 1),
            got: (query.g.len(), 1),
        });
    }
    let in_window = query.lambda > 0.0 && query.lambda <= window;
    if query.mode == ResolventMode::Certified && !in_window {
        return Err(Error::WindowViolation {
            lambda: query.lambda,
            window,
        });
    }

    // lambda*I - A_ext - P(lambda) = [[lambda*I - A11, -A12], [-A2, S^-1]]
    let n = n1 + n2;
    let system = Matrix::identity(n)
        .scale(C64::new(query.lambda, 0.0))
        .sub(&ext.assembled)
        .sub(&perturbation_p(ext, closure, query.lambda));
    let factors = match LuFactors::new(&system, tol) {
        Ok(f) => f,
        Err(_) => {
            return Err(Error::SingularExtension {
                lambda: query.lambda,
            })
        }
    };
    let mut rhs = query.g.clone();
    rhs.extend(std::iter::repeat(C64::new(0.0, 0.0)).take(n2));
    let z = factors.solve(&rhs);
    let (x1, x2) = (z[..n1].to_vec(), z[n1..].to_vec());

    let sa2x1 = closure.s.matvec(&ext.a2.matvec(&x1));
    let defect_num: f64 = ext
        .x2
        .norm(&x2.iter().zip(&sa2x1).map(|(a, b)| a - b).collect::<Vec<_>>());
    let defect_den = ext.x2.norm(&x2).max(ext.x2.norm(&sa2x1)).max(1e-300);

    let a_s = build_as(ext, closure)?;
    let asx1 = a_s.matvec(&x1);
    let residual: Vec<C64> = x1
        .iter()
        .zip(&asx1)
        .zip(&query.g)
        .map(|((xi, axi), gi)| query.lambda * xi - axi - gi)
        .collect();
    let g_norm = ext.x1.norm(&query.g).max(1e-300);

    Ok(ResolventSolution {
        x1,
        x2,
        closure_defect_rel: defect_num / defect_den,
        resolvent_residual_rel: ext.x1.norm(&residual) / g_norm,
        in_window,
        condition_estimate: factors.condition_estimate(&system),
    })
}

// ── Square of the coupled off-diagonal operator ──────────────────────────

/// The operator `[[0, A12], [S*A21, 0]]` and its square, which is block
/// diagonal with blocks `A12*S*A21` and `S*A21*A12`.
#[derive(Debug, Clone)]
pub struct SquareGroup {
    pub cal_a: Matrix,
    pub square: Matrix,
    /// Upper-left block of the square: `A12 * (S * A21)`.
    pub ul: Matrix,
    /// Lower-right block of the square: `(S * A21) * A12`.
    pub lr: Matrix,
    /// Largest off-diagonal-block entry of the square (exactly zero in
    /// exact arithmetic, and bitwise zero here because the matrix product
    /// skips zero entries of the left factor).
    pub off_diag_max: f64,
}

/// Form the coupled off-diagonal operator and its square.
pub fn square_group_op(a12: &Matrix, a21: &Matrix, s: &Matrix) -> Result<SquareGroup> {
    let n1 = a12.rows();
    let n2 = a12.cols();
    if a21.shape() != (n2, n1) {
        return Err(Error::DimensionMismatch {
            expected: (n2, n1),
            got: a21.shape(),
        });
    }
    if s.shape() != (n2, n2) {
        return Err(Error::DimensionMismatch {
            expected: (n2, n2),
            got: s.shape(),
        });
    }
    let sa21 = s.mul(a21);
    let top = Matrix::zeros(n1, n1).hstack(a12);
    let bottom = sa21.hstack(&Matrix::zeros(n2, n2));
    let cal_a = top.vstack(&bottom);
    let square = cal_a.mul(&cal_a);
    let off_ul = square.block(0, n1, n1, n1 + n2).max_abs();
    let off_lr = square.block(n1, 0, n1 + n2, n1).max_abs();
    Ok(SquareGroup {
        ul: a12.mul(&sa21),
        lr: sa21.mul(a12),
        square,
        cal_a,
        off_diag_max: off_ul.max(off_lr),
    })
}

// ── Counterexample fixture ───────────────────────────────────────────────

/// The smallest extension whose assembled operator is *not* dissipative
/// while the induced operator A_S is: X1 = X2 = C with A1 = [0 0],
/// A2 = [1], S = [1].
#[derive(Debug, Clone)]
pub struct CounterexampleReport {
    pub ext: BlockExt,
    pub closure: Closure,
    /// A_S (the 1x1 zero operator).
    pub a_s: Matrix,
    /// Exact dissipativity margin of the assembled extension (+1/2).
    pub ext_margin: f64,
    /// `[A_ext z, z]` at the witness z = (1, 1); equals 1 > 0.
    pub witness_sip: C64,
    /// Margin of A_S (zero: A_S is dissipative).
    pub a_s_margin: f64,
    /// Norm-inequality check of the assembled extension at lambda = 1,
    /// where the witness direction (1, 1) violates it.
    pub norm_report: NormDissipativityReport,
}

/// Build the counterexample and evaluate all its certificates.
pub fn counterexample_fixture(tol: &Tolerances) -> CounterexampleReport {
    let x1 = GridSpace::plain(2.0, 1);
    let x2 = GridSpace::plain(2.0, 1);
    let a1 = Matrix::from_real_rows(vec![vec![0.0, 0.0]]);
    let a2 = Matrix::from_real_rows(vec![vec![1.0]]);
    let ext = assemble_ext(a1, a2, x1, x2).expect("fixture shapes are valid");
    let closure = Closure::new(Matrix::identity(1), tol).expect("identity closure");
    let a_s = build_as(&ext, &closure).expect("fixture dimensions agree");

    let mut sampler = Sampler::new(crate::sampler::DEFAULT_SEED);
    let product = Space::Product(ext.space());
    let ext_margin = dissipativity_margin(&ext.assembled, &product, 0, &mut sampler, tol);
    let a_s_margin = dissipativity_margin(&a_s, &Space::Grid(ext.x1), 0, &mut sampler, tol);

    let z = vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
    let witness_sip = ext.space().sip(&ext.assembled.matvec(&z), &z, tol);

    let norm_report =
        norm_dissipativity_check(&ext.assembled, &product, &[1.0], 25, &mut sampler, tol);

    CounterexampleReport {
        a_s,
        ext_margin: ext_margin.value,
        witness_sip,
        a_s_margin: a_s_margin.value,
        norm_report,
        ext,
        closure,
    }
}

// ── Tests ────────────────────────────────────────────────────────────────
