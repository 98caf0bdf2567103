//! Assembles the full lab-frame wave function from a classified root and
//! evaluates it (with analytic first derivatives) at spacetime points.
//!
//! The state has the structure
//!
//! ```text
//! Psi = exp(-i E t + i p z + D) * R(phi) * psi,      phi = Omega (t - z),
//! D   = -(d/2) r^2 - i d2 x~ + d2 y~,
//! ```
//!
//! where `(x~, y~)` are the transverse coordinates co-rotating with the
//! wave, `psi` is a constant four-spinor, and in the Dirac–Pauli
//! representation the rotation factor `R` is the component-wise phase
//! `diag(e^{-i phi/2}, e^{+i phi/2}, e^{-i phi/2}, e^{+i phi/2})`.
//!
//! Normalization is carried in log space throughout: at real
//! magnetic-resonance scales the envelope exponent `d2^2/d` is of order
//! 1e9, so the normalization constant is not a representable float even
//! though the wave function's values inside its own support are.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::characteristic::{BranchLabel, SolutionBranch};
use crate::matrices::Spinor4;
use crate::units::NormalizedParams;

/// Fixed matrix representation tag carried by every report.
pub const REPRESENTATION: &str = "dirac-pauli";

/// ln of the smallest positive normal f64; beyond this a materialized
/// normalization constant would flush to zero.
const LOG_RANGE: f64 = 700.0;

#[derive(Debug, Error)]
pub enum WavefunctionError {
    #[error("envelope singular: root coincides with the resonance parameter while the wave amplitude {wave_amp} > 0 (pole of the tilt parameter)")]
    EnvelopeSingular { wave_amp: f64 },
    #[error("degenerate branch at zero wave amplitude: the envelope tilt sign is ambiguous; construct an explicit singular limit instead")]
    DegenerateLimit,
    #[error("null spinor: the normalization bracket vanishes for root {root}")]
    NullSpinor { root: f64 },
    #[error(
        "normalization constant not representable: envelope exponent d2^2/d = {exponent:.3e} \
         exceeds the floating-point log range; this is the exponential suppression regime — \
         work with log-space quantities or desk-scale parameters"
    )]
    NormalizationOverflow { exponent: f64 },
    #[error("non-finite input: {what}")]
    NonFinite { what: &'static str },
}

/// Gaussian envelope parameters of one assembled state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianEnvelope {
    /// Inverse-length-squared width parameter `d = -Hz/2 > 0`.
    pub width: f64,
    /// Inverse-length tilt parameter `d2` displacing the packet to
    /// `y~ = d2/d`.
    pub tilt: f64,
}

impl GaussianEnvelope {
    /// Packet center offset along `y~`.
    pub fn center_offset(&self) -> f64 {
        self.tilt / self.width
    }

    /// Transverse 1-sigma width `1/sqrt(2d)`.
    pub fn sigma(&self) -> f64 {
        1.0 / (2.0 * self.width).sqrt()
    }

    /// Dimensionless envelope exponent `d2^2 / d` entering the
    /// normalization and the suppression factor.
    pub fn exponent(&self) -> f64 {
        self.tilt * self.tilt / self.width
    }
}

/// Envelope parameters for a classified branch: `d = -Hz/2` and
/// `d2 = e0 h / (2 (eps - e0))`.
///
/// On a singular branch at `h = 0` the tilt is returned at its limit value
/// `+-sqrt(e0^2+1)/2`; the sign follows the branch label.
pub fn envelope_params(
    params: &NormalizedParams,
    branch: &SolutionBranch,
) -> Result<GaussianEnvelope, WavefunctionError> {
    let width = params.gaussian_width();
    let e0 = params.resonance();
    let h = params.wave_amp();
    if !branch.root.is_finite() {
        return Err(WavefunctionError::NonFinite {
            what: "branch root",
        });
    }
    let tilt = if h == 0.0 {
        match branch.label {
            BranchLabel::SingularPlus => 0.5 * (e0 * e0 + 1.0).sqrt(),
            BranchLabel::SingularMinus => -0.5 * (e0 * e0 + 1.0).sqrt(),
            _ if branch.root == e0 => return Err(WavefunctionError::DegenerateLimit),
            _ => 0.0,
        }
    } else {
        let denom = branch.root - e0;
        if denom == 0.0 {
            return Err(WavefunctionError::EnvelopeSingular { wave_amp: h });
        }
        let t = e0 * h / (2.0 * denom);
        if !t.is_finite() {
            return Err(WavefunctionError::EnvelopeSingular { wave_amp: h });
        }
        t
    };
    Ok(GaussianEnvelope { width, tilt })
}

/// Normalization bracket `h^2 eps^2 + (eps^2 + 1)(eps - e0)^2`; the summed
/// squares of the bare spinor components equal twice this value.
fn bracket(wave_amp: f64, root: f64, resonance: f64) -> f64 {
    let shift = root - resonance;
    wave_amp * wave_amp * root * root + (root * root + 1.0) * shift * shift
}

/// `ln N` of the unit-norm constant:
/// `N^2 * 2 [h^2 eps^2 + (eps^2+1)(eps-e0)^2] * (pi/d) * exp(d2^2/d) = 1`.
///
/// Always representable; the suppression exponent only shifts the
/// logarithm.
pub fn log_normalization(
    wave_amp: f64,
    root: f64,
    resonance: f64,
    envelope: &GaussianEnvelope,
) -> Result<f64, WavefunctionError> {
    let b = bracket(wave_amp, root, resonance);
    if b <= 0.0 {
        return Err(WavefunctionError::NullSpinor { root });
    }
    Ok(
        -0.5 * ((2.0 * b).ln()
            + (std::f64::consts::PI / envelope.width).ln()
            + envelope.exponent()),
    )
}

/// The normalization constant itself, materialized.
///
/// Errors when the envelope exponent pushes `N` outside the representable
/// floating-point range — the exponentially suppressed physical regime.
pub fn normalization_constant(
    wave_amp: f64,
    root: f64,
    resonance: f64,
    envelope: &GaussianEnvelope,
) -> Result<f64, WavefunctionError> {
    let log_n = log_normalization(wave_amp, root, resonance, envelope)?;
    if log_n.abs() > LOG_RANGE {
        return Err(WavefunctionError::NormalizationOverflow {
            exponent: envelope.exponent(),
        });
    }
    Ok(log_n.exp())
}

/// The constant ground spinor
/// `N * (h eps, -(eps+1)(eps-e0), h eps, -(eps-1)(eps-e0))`; all components
/// real in the Dirac–Pauli representation.
pub fn ground_spinor(wave_amp: f64, root: f64, resonance: f64, norm: f64) -> [f64; 4] {
    let shift = root - resonance;
    [
        norm * wave_amp * root,
        -norm * (root + 1.0) * shift,
        norm * wave_amp * root,
        -norm * (root - 1.0) * shift,
    ]
}

/// One spacetime sample point, normalized coordinates (lengths in Compton
/// units, `c = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FieldPoint {
    pub fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    pub fn origin() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    /// Wave phase `phi = Omega (t - z)`.
    pub fn phase(&self, omega: f64) -> f64 {
        omega * (self.t - self.z)
    }

    /// Co-rotating transverse coordinates
    /// `x~ = x cos(phi) + y sin(phi)`, `y~ = -x sin(phi) + y cos(phi)`.
    pub fn tilde(&self, omega: f64) -> (f64, f64) {
        let phi = self.phase(omega);
        let (s, c) = phi.sin_cos();
        (self.x * c + self.y * s, -self.x * s + self.y * c)
    }
}

/// Wave-function values at one point.
pub type PsiSample = Spinor4;

/// Analytic first derivatives at one point.
#[derive(Debug, Clone, Copy)]
pub struct PsiGradient {
    pub dt: Spinor4,
    pub dx: Spinor4,
    pub dy: Spinor4,
    pub dz: Spinor4,
}

/// Fully assembled localized state.
///
/// Immutable after assembly; evaluation is pure and thread-safe. The
/// spinor is stored as a direction plus a log-scale so that states deep in
/// the suppression regime still evaluate correctly inside their support.
#[derive(Debug, Clone, Serialize)]
pub struct WaveState {
    params: NormalizedParams,
    branch: SolutionBranch,
    envelope: GaussianEnvelope,
    direction: [f64; 4],
    log_scale: f64,
}

/// Half-angle phase signs per component: `Psi_k` carries
/// `exp(i * HALF_SIGN[k] * phi / 2)`.
const HALF_SIGN: [f64; 4] = [-1.0, 1.0, -1.0, 1.0];

impl WaveState {
    /// Builds the state for a classified branch.
    ///
    /// Singular branches at `h = 0` assemble through their analytic limit
    /// (finite tilt, unit spinor direction); everything else goes through
    /// the ground spinor and the unit-norm constant in log space.
    pub fn assemble(
        params: &NormalizedParams,
        branch: &SolutionBranch,
    ) -> Result<Self, WavefunctionError> {
        let envelope = envelope_params(params, branch)?;
        let e0 = params.resonance();
        let h = params.wave_amp();
        let singular_limit = h == 0.0
            && matches!(
                branch.label,
                BranchLabel::SingularPlus | BranchLabel::SingularMinus
            );
        let (direction, log_scale) = if singular_limit {
            let sign = if branch.label == BranchLabel::SingularPlus {
                1.0
            } else {
                -1.0
            };
            let e1 = sign * e0 / (e0 * e0 + 1.0).sqrt();
            let dir = [
                0.5,
                -0.5 * (e0 + 1.0) * e1 / e0,
                0.5,
                -0.5 * (e0 - 1.0) * e1 / e0,
            ];
            let log_scale =
                -0.5 * ((std::f64::consts::PI / envelope.width).ln() + envelope.exponent());
            (dir, log_scale)
        } else {
            let bare = ground_spinor(h, branch.root, e0, 1.0);
            let log_n = log_normalization(h, branch.root, e0, &envelope)?;
            (bare, log_n)
        };
        Ok(Self {
            params: *params,
            branch: *branch,
            envelope,
            direction,
            log_scale,
        })
    }

    pub fn params(&self) -> &NormalizedParams {
        &self.params
    }

    pub fn branch(&self) -> &SolutionBranch {
        &self.branch
    }

    pub fn envelope(&self) -> &GaussianEnvelope {
        &self.envelope
    }

    pub fn representation(&self) -> &'static str {
        REPRESENTATION
    }

    /// Stored spinor direction (not normalized) and its log scale:
    /// `psi_k = direction_k * exp(log_scale)`.
    pub fn spinor_direction(&self) -> ([f64; 4], f64) {
        (self.direction, self.log_scale)
    }

    /// The constant spinor with normalization folded in. Errors in the
    /// suppression regime where the components are not representable.
    pub fn spinor(&self) -> Result<[f64; 4], WavefunctionError> {
        if self.log_scale.abs() > LOG_RANGE {
            return Err(WavefunctionError::NormalizationOverflow {
                exponent: self.envelope.exponent(),
            });
        }
        let scale = self.log_scale.exp();
        Ok(self.direction.map(|c| c * scale))
    }

    /// `Psi(point)`.
    pub fn evaluate(&self, point: &FieldPoint) -> PsiSample {
        self.eval_impl(point, 0.0, false).0
    }

    /// `Psi(point)` and its analytic first derivatives.
    pub fn evaluate_with_gradient(&self, point: &FieldPoint) -> (PsiSample, PsiGradient) {
        let (v, g) = self.eval_impl(point, 0.0, true);
        (v, g.expect("gradient requested"))
    }

    /// `exp(extra_log) * Psi(point)` with the extra factor folded into the
    /// exponent before exponentiation. This is the hook Gaussian-weighted
    /// quadrature uses to cancel the envelope against the weight without
    /// leaving the representable range.
    pub fn evaluate_scaled(&self, point: &FieldPoint, extra_log: f64) -> (PsiSample, PsiGradient) {
        let (v, g) = self.eval_impl(point, extra_log, true);
        (v, g.expect("gradient requested"))
    }

    fn eval_impl(
        &self,
        point: &FieldPoint,
        extra_log: f64,
        with_gradient: bool,
    ) -> (PsiSample, Option<PsiGradient>) {
        let omega = self.params.omega();
        let d = self.envelope.width;
        let d2 = self.envelope.tilt;
        let energy = self.branch.energy;
        let momentum = self.branch.momentum;

        let phi = point.phase(omega);
        let (sin_phi, cos_phi) = phi.sin_cos();
        let xt = point.x * cos_phi + point.y * sin_phi;
        let yt = -point.x * sin_phi + point.y * cos_phi;

        let re_exp = self.log_scale + extra_log - 0.5 * d * (point.x * point.x + point.y * point.y)
            + d2 * yt;
        let im_exp = -energy * point.t + momentum * point.z - d2 * xt;
        let magnitude = re_exp.exp();

        let mut value = [Complex64::new(0.0, 0.0); 4];
        for k in 0..4 {
            let theta = im_exp + HALF_SIGN[k] * 0.5 * phi;
            value[k] = Complex64::from_polar(magnitude * self.direction[k], theta);
        }

        if !with_gradient {
            return (value, None);
        }

        // common envelope-phase derivative factors
        let i = Complex64::new(0.0, 1.0);
        let dx_fac = Complex64::new(-d * point.x - d2 * sin_phi, -d2 * cos_phi);
        let dy_fac = Complex64::new(-d * point.y + d2 * cos_phi, -d2 * sin_phi);
        // d/dt of D: -Omega d2 (x~ + i y~); d/dz is its negative
        let dt_env = Complex64::new(-omega * d2 * xt, -omega * d2 * yt);

        let mut grad = PsiGradient {
            dt: [Complex64::new(0.0, 0.0); 4],
            dx: [Complex64::new(0.0, 0.0); 4],
            dy: [Complex64::new(0.0, 0.0); 4],
            dz: [Complex64::new(0.0, 0.0); 4],
        };
        for k in 0..4 {
            let half = HALF_SIGN[k] * 0.5;
            let dt_fac = -i * energy + dt_env + i * (half * omega);
            let dz_fac = i * momentum - dt_env - i * (half * omega);
            grad.dt[k] = dt_fac * value[k];
            grad.dz[k] = dz_fac * value[k];
            grad.dx[k] = dx_fac * value[k];
            grad.dy[k] = dy_fac * value[k];
        }
        (value, Some(grad))
    }

    /// Serializable summary of the assembled state.
    pub fn report(&self) -> WaveStateReport {
        WaveStateReport {
            representation: REPRESENTATION,
            omega: self.params.omega(),
            wave_amp: self.params.wave_amp(),
            hz: self.params.hz(),
            resonance: self.params.resonance(),
            g_factor: self.params.g_factor(),
            branch: self.branch,
            envelope: self.envelope,
            log_norm: self.log_scale,
            spinor_direction: self.direction,
            spinor: self.spinor().ok(),
        }
    }
}

/// JSON-facing snapshot of a [`WaveState`].
#[derive(Debug, Clone, Serialize)]
pub struct WaveStateReport {
    pub representation: &'static str,
    pub omega: f64,
    pub wave_amp: f64,
    pub hz: f64,
    pub resonance: f64,
    pub g_factor: f64,
    pub branch: SolutionBranch,
    pub envelope: GaussianEnvelope,
    /// ln of the scale multiplying `spinor_direction`.
    pub log_norm: f64,
    pub spinor_direction: [f64; 4],
    /// Materialized spinor; absent in the suppression regime.
    pub spinor: Option<[f64; 4]>,
}
