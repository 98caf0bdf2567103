//! Localized solutions of the Dirac equation in the field of a traveling
//! circularly polarized electromagnetic wave plus a constant magnetic field.
//!
//! The crate builds the exact ground-state wave packet for this field
//! configuration, certifies it against the Dirac operator itself, and
//! evaluates every closed-form observable (localization, uncertainty
//! saturation, energy, momentum, spin) as a function of the fermion
//! g-factor.
//!
//! Pipeline, bottom to top:
//!
//! * [`units`] — physical constants, the dimensionless normalization, and
//!   g-factor / resonance-condition conversions.
//! * [`characteristic`] — the third-order characteristic equation, its
//!   singular root pair, and the special rotating-frame momentum.
//! * [`wavefunction`] — envelope parameters, normalization, the constant
//!   ground spinor, and pointwise evaluation of the full wave function.
//! * [`residual`] — applies the Dirac operator numerically to certify an
//!   assembled state and audits the operator sign conventions.
//! * [`observables`] — Gauss–Hermite expectation values compared against
//!   the closed-form targets.
//!
//! All quantities are dimensionless unless a function name or field says
//! otherwise: lengths in units of the reduced Compton wavelength, energies
//! in `mc^2`, momenta in `mc`, spin in `hbar` (see [`units`]).

pub mod characteristic;
pub mod matrices;
pub mod observables;
pub mod quadrature;
pub mod residual;
pub mod units;
pub mod wavefunction;

pub use characteristic::{
    classify_roots, singular_energy, singular_momentum, singular_series, solve_characteristic,
    BranchLabel, CharacteristicProblem, SeriesExpansion, SolutionBranch,
};
pub use observables::{
    dynamical_expectations, localization_report, spin_momentum_ratio, suppression_exponent,
    ClosedFormTargets, DynamicalReport, LocalizationReport, QuadratureSpec, RatioReport,
    SuppressionReport,
};
pub use residual::{
    convention_audit, dirac_residual, AuditTable, ConventionSpec, DerivativeMode, GridSpec,
    ResidualReport,
};
pub use units::{resonance_convert, GFactorValue, NormalizedParams, ResonancePoint, UnitsContext};
pub use wavefunction::{
    envelope_params, ground_spinor, normalization_constant, FieldPoint, GaussianEnvelope,
    PsiGradient, PsiSample, WaveState,
};
