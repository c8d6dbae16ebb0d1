//! Construction and numerical verification of trivial Beltrami coefficients.
//!
//! A Beltrami coefficient is a measurable function `mu` on the unit disk with
//! `||mu||_inf < 1`. It is *trivial* when the normalized quasiconformal
//! solution of the Beltrami equation `f_zbar = mu f_z` fixes every point of
//! the unit circle. Deciding triviality for a concrete coefficient is hard in
//! general; this crate works with a constructive class for which it holds:
//! coefficients whose circular slices
//!
//! ```text
//! U_t(zeta) = zeta^-2 mu(e^-t zeta),    |zeta| = 1,  t >= 0,
//! ```
//!
//! are boundary values of bounded holomorphic functions `psi_t` with a
//! uniform bound `k < 1`. For such data the boundary-fixing map is produced
//! by an inverse Loewner chain driven by the Herglotz family
//! `q = (1 + psi)/(1 - psi)`, and the crate verifies the construction with
//! four independent checks:
//!
//! * closed-form oracles for constant driving families,
//! * finite-difference recovery of the complex dilatation of the built map,
//! * Bergman-space pairing integrals (infinitesimal triviality),
//! * an FFT principal-solution solver for the plane Beltrami equation.
//!
//! The [`expr`] and [`beltrami`] modules define the coefficient class,
//! [`loewner`] evaluates the chain, [`qcmap`] assembles the disk map,
//! [`oracle`] is the independent plane solver, and [`verify`] orchestrates
//! the whole suite behind the `tb` command line tool.
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! snippets are compiled and executed as doc-tests through [`guide`].

pub mod beltrami;
pub mod expr;
mod fft;
pub mod guide;
pub mod loewner;
pub mod oracle;
pub mod presets;
pub mod qcmap;
pub mod render;
pub mod verify;

pub use beltrami::{slice_of_spec, slice_fourier, BeltramiSpec, BoundarySlice, BudgetReport, PsiFamily, SpecError, SumTerm};
pub use expr::{CoeffForm, ExprError, ExprNode, HoloExpr, Piece, SupNormReport, TimeCoefficient};
pub use loewner::{ChainError, ChainEvaluator, HerglotzFamily, OdeStats};
// TEMP pub use oracle::{beurling_selftest, principal_solution, triviality_residual, Convention, OracleError, PlaneGrid, PrincipalSolution, Residuals};
// TEMP pub use qcmap::{dilatation_target, orientation_check, FieldSample, MapError, OrientationReport, PolarGrid, QcMap, Triangulation};
// TEMP pub use verify::{infinitesimal_defect, infinitesimal_defect_spec, run_suite, CheckKind, InfinitesimalReport, RunConfig, SuiteError, VerificationReport};

use serde::Serialize;

/// Serialize any value as canonical JSON: UTF-8, two-space indent, object
/// keys sorted, trailing newline. All file and stdout JSON goes through
/// here so reports are byte-reproducible.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // Routing through Value sorts map keys (serde_json's map is a BTreeMap).
    let v = serde_json::to_value(value).expect("value serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value prints");
    s.push('\n');
    s
}
