//! Physical constants, the dimensionless normalization, and g-factor
//! conversions.
//!
//! Everything physical is Gaussian CGS: lengths in cm, magnetic fields in
//! gauss, energies in erg. The dimensionless map divides lengths by the
//! reduced Compton wavelength, multiplies potentials and fields by
//! `e lambda_bar / (c hbar)` and `e lambda_bar^2 / (c hbar)` (charge
//! `e = -|e|` folded in), and measures energies in `mc^2`, momenta in `mc`.
//!
//! After the map the wave is characterized by the dimensionless propagation
//! constant `Omega = 2 pi lambda_bar / lambda`, the wave amplitude
//! `h = H / Omega`, the constant field `Hz < 0`, and the resonance
//! parameter `e0 = -Hz / Omega = 2 / g`.

use serde::Serialize;
use thiserror::Error;

/// Pinned constants snapshot: CODATA 2018, Gaussian CGS.
pub mod constants {
    /// Reduced Planck constant (erg s).
    pub const HBAR: f64 = 1.054_571_817e-27;
    /// Speed of light (cm/s).
    pub const C: f64 = 2.997_924_58e10;
    /// Electron mass (g).
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-28;
    /// Elementary charge magnitude (statC).
    pub const ELEMENTARY_CHARGE: f64 = 4.803_204_712_57e-10;
    /// Which table these numbers were pinned from.
    pub const SNAPSHOT: &str = "CODATA 2018 (Gaussian CGS)";
}

#[derive(Debug, Error, PartialEq)]
pub enum UnitsError {
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error(
        "non-localizable configuration: normalized Hz = {hz} gives d = -Hz/2 <= 0; \
         with charge e = -|e| folded into the field normalization, a transversely \
         bound state needs Hz < 0 (physical Hz > 0 along +z)"
    )]
    NonLocalizable { hz: f64 },
}

/// Pinned constants plus the wave scale; converts physical values to the
/// dimensionless set and back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UnitsContext {
    hbar: f64,
    speed_of_light: f64,
    mass: f64,
    charge: f64,
    /// Canonical stored form of the wave scale (cm); frequency is derived.
    wavelength: f64,
    compton: f64,
    magneton: f64,
}

/// Overridable constants for [`UnitsContext`] construction; `None` keeps
/// the pinned CODATA value.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantsOverride {
    pub hbar: Option<f64>,
    pub c: Option<f64>,
    pub mass: Option<f64>,
}

impl UnitsContext {
    /// Context for a given wavelength (cm) and fermion mass (g).
    pub fn from_wavelength(wavelength_cm: f64, mass_g: f64) -> Result<Self, UnitsError> {
        Self::with_overrides(
            wavelength_cm,
            ConstantsOverride {
                mass: Some(mass_g),
                ..Default::default()
            },
        )
    }

    /// Context for a given frequency (Hz) and fermion mass (g). The
    /// wavelength `c / f` is stored; frequency is always derived from it.
    pub fn from_frequency(frequency_hz: f64, mass_g: f64) -> Result<Self, UnitsError> {
        check_positive("frequency", frequency_hz)?;
        Self::from_wavelength(constants::C / frequency_hz, mass_g)
    }

    /// Electron context for a given wavelength (cm).
    pub fn electron(wavelength_cm: f64) -> Result<Self, UnitsError> {
        Self::from_wavelength(wavelength_cm, constants::ELECTRON_MASS)
    }

    /// Full constructor with constant overrides (config-file path).
    pub fn with_overrides(wavelength_cm: f64, over: ConstantsOverride) -> Result<Self, UnitsError> {
        let hbar = over.hbar.unwrap_or(constants::HBAR);
        let c = over.c.unwrap_or(constants::C);
        let mass = over.mass.unwrap_or(constants::ELECTRON_MASS);
        check_positive("hbar", hbar)?;
        check_positive("c", c)?;
        check_positive("mass", mass)?;
        check_positive("wavelength", wavelength_cm)?;
        let compton = hbar / (mass * c);
        let magneton = constants::ELEMENTARY_CHARGE * hbar / (2.0 * mass * c);
        Ok(Self {
            hbar,
            speed_of_light: c,
            mass,
            charge: constants::ELEMENTARY_CHARGE,
            wavelength: wavelength_cm,
            compton,
            magneton,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Reduced Compton wavelength `hbar / (m c)` (cm).
    pub fn compton_wavelength(&self) -> f64 {
        self.compton
    }

    /// `|e| hbar / (2 m c)` (erg/G).
    pub fn bohr_magneton(&self) -> f64 {
        self.magneton
    }

    /// Wave wavelength (cm), the stored canonical scale.
    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Wave frequency `c / lambda` (Hz), derived.
    pub fn frequency(&self) -> f64 {
        self.speed_of_light / self.wavelength
    }

    /// Angular frequency `2 pi c / lambda` (rad/s), derived.
    pub fn angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.frequency()
    }

    /// Dimensionless propagation constant `Omega = 2 pi lambda_bar / lambda`.
    pub fn propagation_constant(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.compton / self.wavelength
    }

    /// Field normalization factor `|e| lambda_bar^2 / (c hbar)` (1/G).
    fn field_scale(&self) -> f64 {
        self.charge * self.compton * self.compton / (self.speed_of_light * self.hbar)
    }

    /// Maps physical fields (gauss) to the dimensionless parameter set.
    ///
    /// The charge sign `e = -|e|` is folded in, so a physical `Hz > 0`
    /// yields normalized `Hz < 0` (localizable). The wave amplitude is
    /// stored as `h = |H| / Omega >= 0`; its sign is a phase convention of
    /// the circular wave, not a physical degree of freedom.
    pub fn normalize_fields(
        &self,
        hz_gauss: f64,
        h_gauss: f64,
    ) -> Result<NormalizedParams, UnitsError> {
        if !hz_gauss.is_finite() || !h_gauss.is_finite() {
            return Err(UnitsError::NonPositive {
                field: "field",
                value: if hz_gauss.is_finite() {
                    h_gauss
                } else {
                    hz_gauss
                },
            });
        }
        let omega = self.propagation_constant();
        let hz = -self.field_scale() * hz_gauss;
        let wave_amp = (self.field_scale() * h_gauss / omega).abs();
        NormalizedParams::new(omega, wave_amp, hz)
    }

    /// Inverse of [`normalize_fields`]: physical `(Hz, H)` in gauss.
    pub fn denormalize_fields(&self, params: &NormalizedParams) -> (f64, f64) {
        let scale = self.field_scale();
        (
            -params.hz() / scale,
            params.wave_amp() * params.omega() / scale,
        )
    }

    /// Resonance parameter computed directly in physical units,
    /// `2 mu Hz / (hbar Omega_phys)`.
    pub fn resonance_from_physical(&self, hz_gauss: f64) -> f64 {
        2.0 * self.magneton * hz_gauss / (self.hbar * self.angular_frequency())
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<(), UnitsError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(UnitsError::NonPositive { field, value })
    }
}

/// The dimensionless field set defining one physical configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedParams {
    omega: f64,
    wave_amp: f64,
    hz: f64,
    resonance: f64,
}

impl NormalizedParams {
    /// Validates `omega > 0`, `wave_amp >= 0` and the localizability
    /// condition `d = -hz/2 > 0`.
    pub fn new(omega: f64, wave_amp: f64, hz: f64) -> Result<Self, UnitsError> {
        check_positive("omega", omega)?;
        if !(wave_amp.is_finite() && wave_amp >= 0.0) {
            return Err(UnitsError::NonPositive {
                field: "wave_amp",
                value: wave_amp,
            });
        }
        if !(hz.is_finite() && hz < 0.0) {
            return Err(UnitsError::NonLocalizable { hz });
        }
        Ok(Self {
            omega,
            wave_amp,
            hz,
            resonance: -hz / omega,
        })
    }

    /// Builds the set from the resonance parameter instead of `Hz`.
    pub fn from_resonance(resonance: f64, wave_amp: f64, omega: f64) -> Result<Self, UnitsError> {
        check_positive("resonance", resonance)?;
        Self::new(omega, wave_amp, -resonance * omega)
    }

    /// Dimensionless propagation constant.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Dimensionless wave amplitude `h = H / Omega`.
    pub fn wave_amp(&self) -> f64 {
        self.wave_amp
    }

    /// Normalized constant magnetic field (negative).
    pub fn hz(&self) -> f64 {
        self.hz
    }

    /// Resonance parameter `e0 = -Hz / Omega = 2 d / Omega`.
    pub fn resonance(&self) -> f64 {
        self.resonance
    }

    /// Gaussian envelope width parameter `d = -Hz / 2 = e0 Omega / 2`.
    pub fn gaussian_width(&self) -> f64 {
        -self.hz / 2.0
    }

    /// `g = 2 / e0`.
    pub fn g_factor(&self) -> f64 {
        2.0 / self.resonance
    }
}

/// Input to [`resonance_convert`]: either side of `g * e0 = 2`.
#[derive(Debug, Clone, Copy)]
pub enum GFactorValue {
    GFactor(f64),
    Resonance(f64),
}

/// One point on the magnetic-resonance condition `hbar Omega = g mu Hz`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ResonancePoint {
    /// g-factor.
    pub g: f64,
    /// Resonance parameter `e0 = 2 / g`.
    pub resonance: f64,
    /// Physical constant field satisfying the resonance condition at the
    /// context's frequency (gauss).
    pub hz_gauss: f64,
    /// Physical angular frequency (rad/s).
    pub angular_frequency: f64,
    /// Dimensionless propagation constant.
    pub omega: f64,
    /// Normalized constant field `-e0 * Omega`.
    pub hz_normalized: f64,
}

/// Converts between the g-factor and the resonance parameter (`g e0 = 2`
/// exactly) and reports the physical `(Hz, Omega)` pair satisfying the
/// resonance condition for the given context.
pub fn resonance_convert(
    value: GFactorValue,
    ctx: &UnitsContext,
) -> Result<ResonancePoint, UnitsError> {
    let (g, resonance) = match value {
        GFactorValue::GFactor(g) => {
            check_positive("g", g)?;
            (g, 2.0 / g)
        }
        GFactorValue::Resonance(e0) => {
            check_positive("resonance", e0)?;
            (2.0 / e0, e0)
        }
    };
    let angular_frequency = ctx.angular_frequency();
    let hz_gauss = ctx.hbar() * angular_frequency / (g * ctx.bohr_magneton());
    let omega = ctx.propagation_constant();
    Ok(ResonancePoint {
        g,
        resonance,
        hz_gauss,
        angular_frequency,
        omega,
        hz_normalized: -resonance * omega,
    })
}
