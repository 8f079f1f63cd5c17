//! Central tolerance configuration.
//!
//! Every numerical check in the crate reads its threshold from one
//! [`Tolerances`] value threaded through the call tree, so an experiment can
//! tighten or relax individual gates without touching code.  The defaults
//! are calibrated for f64 arithmetic at problem sizes up to a few hundred
//! unknowns and are intentionally conservative: exact algebraic identities
//! sit close to machine precision, iterative estimates get three to four
//! orders of slack.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    /// LU elimination declares a matrix singular when a pivot magnitude
    /// drops below `pivot_rel * max|a_ij|`.
    pub pivot_rel: f64,
    /// Post-solve check: `||Ax - b||` must not exceed
    /// `solve_residual_rel * (||A||*||x|| + ||b||)`.
    pub solve_residual_rel: f64,
    /// Symmetric eigensolves reject inputs whose asymmetry (or imaginary
    /// content) exceeds `asymmetry_rel * max|a_ij|`.
    pub asymmetry_rel: f64,
    /// Eigenpair residual gate `||Av - lambda*v|| <= eig_pair_rel * ||A||`.
    pub eig_pair_rel: f64,
    /// The matrix exponential refuses arguments with `||tA|| > expm_limit`
    /// instead of silently losing accuracy.
    pub expm_limit: f64,
    /// Self-check for the exponential: `||expm(A,t) * expm(A,-t) - I||`.
    pub expm_inverse_rel: f64,
    /// Closure constructor gate `||S * S_inv - I|| <= closure_inverse_rel`.
    pub closure_inverse_rel: f64,
    /// A dissipativity margin at or below this value counts as dissipative.
    pub margin_pass: f64,
    /// Range-condition probes must solve with relative residual below this.
    pub range_residual_rel: f64,
    /// Dissipation identity residual gate, relative to the identity's scale.
    pub identity_residual_rel: f64,
    /// Resolvent diagnostics: closure defect and resolvent residual,
    /// relative to the solution/right-hand-side scale.
    pub resolvent_defect_rel: f64,
    /// Entrywise matrix equality gate, relative to `1 + |a| + |b|` per entry.
    pub matrix_equality_rel: f64,
    /// Semi-inner-product terms treat `|g_i|` below this as exactly zero,
    /// which keeps `|g_i|^(p-2)` finite for p < 2.
    pub sip_zero: f64,
    /// `[x,x] = ||x||^2` must hold to this relative accuracy.
    pub definiteness_rel: f64,
    /// First-slot linearity residual gate (scale-normalized).
    pub linearity: f64,
    /// Cauchy-Schwarz slack: `|[x,y]|^2 <= [x,x][y,y] + slack * scale`.
    pub cauchy_schwarz_slack: f64,
    /// Coercivity reports fail with `NotCoercive` below this m2.
    pub coercive_min: f64,
    /// Per-step norm growth allowed for a contraction trace.
    pub contraction_slack: f64,
    /// Maximum relative norm deviation for a flow claimed isometric.
    pub isometry: f64,
    /// Growth bound fit must dominate measured norms up to this slack.
    pub growth_bound_slack: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pivot_rel: 1e-13,
            solve_residual_rel: 1e-10,
            asymmetry_rel: 1e-12,
            eig_pair_rel: 1e-9,
            expm_limit: 1e3,
            expm_inverse_rel: 1e-8,
            closure_inverse_rel: 1e-10,
            margin_pass: 1e-10,
            range_residual_rel: 1e-10,
            identity_residual_rel: 1e-10,
            resolvent_defect_rel: 1e-8,
            matrix_equality_rel: 1e-12,
            sip_zero: 1e-300,
            definiteness_rel: 1e-12,
            linearity: 1e-10,
            cauchy_schwarz_slack: 1e-10,
            coercive_min: 1e-12,
            contraction_slack: 1e-10,
            isometry: 1e-8,
            growth_bound_slack: 1e-6,
        }
    }
}

impl Tolerances {
    /// Set a field by name, returning false when the name is unknown.
    /// This backs config-file and command-line overrides.
    pub fn set_by_name(&mut self, name: &str, value: f64) -> bool {
        match name {
            "pivot_rel" => self.pivot_rel = value,
            "solve_residual_rel" => self.solve_residual_rel = value,
            "asymmetry_rel" => self.asymmetry_rel = value,
            "eig_pair_rel" => self.eig_pair_rel = value,
            "expm_limit" => self.expm_limit = value,
            "expm_inverse_rel" => self.expm_inverse_rel = value,
            "closure_inverse_rel" => self.closure_inverse_rel = value,
            "margin_pass" => self.margin_pass = value,
            "range_residual_rel" => self.range_residual_rel = value,
            "identity_residual_rel" => self.identity_residual_rel = value,
            "resolvent_defect_rel" => self.resolvent_defect_rel = value,
            "matrix_equality_rel" => self.matrix_equality_rel = value,
            "sip_zero" => self.sip_zero = value,
            "definiteness_rel" => self.definiteness_rel = value,
            "linearity" => self.linearity = value,
            "cauchy_schwarz_slack" => self.cauchy_schwarz_slack = value,
            "coercive_min" => self.coercive_min = value,
            "contraction_slack" => self.contraction_slack = value,
            "isometry" => self.isometry = value,
            "growth_bound_slack" => self.growth_bound_slack = value,
            _ => return false,
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_by_name_hits_known_fields() {
        let mut tol = Tolerances::default();
        assert!(tol.set_by_name("margin_pass", 1e-6));
        assert_eq!(tol.margin_pass, 1e-6);
        assert!(!tol.set_by_name("no_such_field", 1.0));
    }
}
