//! Spatial averages over the transverse plane by Gauss–Hermite quadrature,
//! compared against the closed-form targets.
//!
//! Every integrand here is a low-degree polynomial (or trigonometric
//! constant) times the squared Gaussian envelope, so the tensor rule
//! converges to machine precision at modest orders; the residual
//! differences against the closed forms are the genuine `O(h) + O(Omega)`
//! physics, not quadrature error.
//!
//! The quadrature substitutes the co-rotating coordinates recentered at
//! the envelope maximum, folding the Gauss–Hermite weight into the
//! envelope exponent in log space, so states deep in the suppression
//! regime integrate as cleanly as desk-scale ones.
//!
//! Operator ambiguities are resolved empirically and reported, never
//! silently chosen: the mean energy is computed both as `i d/dt` and as
//! the Hamiltonian form, the momentum both as `-i grad` (canonical) and
//! `-i grad - A` (kinetic), each paired with a match flag against the
//! closed forms.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::matrices::{alpha_x, alpha_y, alpha_z, beta, inner, sigma_x, sigma_y, sigma_z, Spinor4};
use crate::quadrature::{pairwise_sum, pairwise_sum_complex, GaussHermite, QuadratureError};
use crate::units::UnitsContext;
use crate::wavefunction::{FieldPoint, GaussianEnvelope, PsiGradient, WaveState};

#[derive(Debug, Error)]
pub enum ObservablesError {
    #[error("quadrature order {got} below the minimum {min} for this report")]
    OrderTooLow { got: usize, min: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("transverse momentum vanishes; no spin–momentum ratio is defined")]
    ZeroTransverseMomentum,
    #[error(
        "envelope tilt {tilt} is not at its singular-branch value {expected:.6} \
         (resonance parameter {resonance:.6}); the suppression exponent closed form \
         only applies to singular-branch envelopes"
    )]
    NotSingularEnvelope {
        tilt: f64,
        expected: f64,
        resonance: f64,
    },
}

/// Gauss–Hermite tensor order for the transverse integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuadratureSpec {
    pub order: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { order: 48 }
    }
}

/// Closed-form targets as functions of the g-factor alone.
///
/// `ratio_identity_error` checks the algebraic consistency of the spin,
/// momentum and ratio entries independently of any quadrature.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClosedFormTargets {
    pub g: f64,
    /// Localization diameter in wavelength units: `sqrt(1 + (g/2)^2) / pi`.
    pub diameter_lambda: f64,
    /// Mean energy in `mc^2`: `g/2 + 2/g`.
    pub energy: f64,
    /// Transverse momentum amplitude in `mc`: `sqrt(4 + g^2) / (2g)`.
    pub transverse_momentum: f64,
    /// Longitudinal momentum in `mc`: `g/2`.
    pub longitudinal_momentum: f64,
    /// Transverse spin amplitude in `hbar`: `g / (2 sqrt(4 + g^2))`.
    pub spin_amplitude: f64,
    /// Longitudinal spin: zero.
    pub spin_z: f64,
    /// Spin–momentum ratio in Compton-wavelength units: `g^2 / (4 + g^2)`.
    pub spin_momentum_ratio: f64,
}

impl ClosedFormTargets {
    pub fn for_g(g: f64) -> Self {
        let root = (4.0 + g * g).sqrt();
        Self {
            g,
            diameter_lambda: (1.0 + (g / 2.0) * (g / 2.0)).sqrt() / std::f64::consts::PI,
            energy: g / 2.0 + 2.0 / g,
            transverse_momentum: root / (2.0 * g),
            longitudinal_momentum: g / 2.0,
            spin_amplitude: g / (2.0 * root),
            spin_z: 0.0,
            spin_momentum_ratio: g * g / (4.0 + g * g),
        }
    }

    /// `|ratio - spin_amplitude / transverse_momentum|`; identically zero
    /// in exact arithmetic for any `g`.
    pub fn ratio_identity_error(&self) -> f64 {
        (self.spin_momentum_ratio - self.spin_amplitude / self.transverse_momentum).abs()
    }
}

/// Per-node samples of the state on the recentered quadrature lattice.
struct NodeSet {
    /// Measure factor `w_i w_j / d` per node.
    weights: Vec<f64>,
    values: Vec<Spinor4>,
    grads: Vec<PsiGradient>,
    xt: Vec<f64>,
    yt: Vec<f64>,
    lab_x: Vec<f64>,
    lab_y: Vec<f64>,
    ax: Vec<f64>,
    ay: Vec<f64>,
}

fn sample_nodes(state: &WaveState, phase: f64, order: usize) -> Result<NodeSet, ObservablesError> {
    let rule = GaussHermite::new(order)?;
    let env = state.envelope();
    let d = env.width;
    let h = state.params().wave_amp();
    let omega = state.params().omega();
    let center = env.center_offset();
    let inv_sqrt_d = 1.0 / d.sqrt();

    let t = phase / omega;
    let z = 0.0;
    let (sin_phi, cos_phi) = phase.sin_cos();

    let n = order * order;
    let mut set = NodeSet {
        weights: Vec::with_capacity(n),
        values: Vec::with_capacity(n),
        grads: Vec::with_capacity(n),
        xt: Vec::with_capacity(n),
        yt: Vec::with_capacity(n),
        lab_x: Vec::with_capacity(n),
        lab_y: Vec::with_capacity(n),
        ax: Vec::with_capacity(n),
        ay: Vec::with_capacity(n),
    };
    for (i, &u) in rule.nodes().iter().enumerate() {
        for (j, &v) in rule.nodes().iter().enumerate() {
            let xt = u * inv_sqrt_d;
            let yt = center + v * inv_sqrt_d;
            // lab coordinates from co-rotating ones
            let x = xt * cos_phi - yt * sin_phi;
            let y = xt * sin_phi + yt * cos_phi;
            let point = FieldPoint::new(t, x, y, z);
            // Gauss–Hermite weight exp(-u^2-v^2) cancelled in log space
            let (value, grad) = state.evaluate_scaled(&point, 0.5 * (u * u + v * v));
            set.weights.push(rule.weights()[i] * rule.weights()[j] / d);
            set.values.push(value);
            set.grads.push(grad);
            set.xt.push(xt);
            set.yt.push(yt);
            set.lab_x.push(x);
            set.lab_y.push(y);
            set.ax.push(d * y + h * cos_phi);
            set.ay.push(-d * x + h * sin_phi);
        }
    }
    Ok(set)
}

impl NodeSet {
    fn integrate(&self, f: impl Fn(usize) -> f64) -> f64 {
        let terms: Vec<f64> = (0..self.weights.len())
            .map(|k| self.weights[k] * f(k))
            .collect();
        pairwise_sum(&terms)
    }

    fn integrate_complex(&self, f: impl Fn(usize) -> Complex64) -> Complex64 {
        let terms: Vec<Complex64> = (0..self.weights.len())
            .map(|k| self.weights[k] * f(k))
            .collect();
        pairwise_sum_complex(&terms)
    }

    fn density(&self, k: usize) -> f64 {
        self.values[k].iter().map(|c| c.norm_sqr()).sum()
    }

    fn norm(&self) -> f64 {
        self.integrate(|k| self.density(k))
    }
}

/// Norm, center, variances, localization diameter and uncertainty
/// products of one state.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LocalizationReport {
    pub order: usize,
    /// Quadrature norm; 1 for a correctly normalized state.
    pub norm: f64,
    /// Packet center in co-rotating coordinates (`<x~>, <y~>`).
    pub center: (f64, f64),
    /// Transverse variances (`Var x~, Var y~`).
    pub variances: (f64, f64),
    /// Second moment about the beam axis, `<x^2 + y^2>`.
    pub second_moment: f64,
    /// `2 sqrt(<x^2 + y^2>)` in normalized length units.
    pub diameter: f64,
    /// The same diameter in wavelength units (`x Omega / 2 pi`).
    pub diameter_lambda: f64,
    /// Uncertainty products (normalized `hbar = 1`); 1/2 at saturation.
    pub sigma_x_px: f64,
    pub sigma_y_py: f64,
    /// Largest relative change of any entry when the order is doubled.
    pub doubling_delta: f64,
    /// False when the order-doubling check moved some entry by more than
    /// 1e-8.
    pub converged: bool,
}

fn localization_pass(
    state: &WaveState,
    order: usize,
) -> Result<LocalizationReport, ObservablesError> {
    // moments are phase-independent; evaluate on the default slice
    let nodes = sample_nodes(state, 0.0, order)?;
    let norm = nodes.norm();
    let mean = |f: &dyn Fn(usize) -> f64| nodes.integrate(|k| f(k) * nodes.density(k)) / norm;
    let cx = mean(&|k| nodes.xt[k]);
    let cy = mean(&|k| nodes.yt[k]);
    let var_x = mean(&|k| nodes.xt[k] * nodes.xt[k]) - cx * cx;
    let var_y = mean(&|k| nodes.yt[k] * nodes.yt[k]) - cy * cy;
    let r2 = mean(&|k| nodes.lab_x[k] * nodes.lab_x[k] + nodes.lab_y[k] * nodes.lab_y[k]);

    // momentum variances from first derivatives: <p^2> = int |dPsi|^2
    let px = nodes.integrate_complex(|k| inner(&nodes.values[k], &mul_i(&nodes.grads[k].dx, -1.0)))
        / norm;
    let py = nodes.integrate_complex(|k| inner(&nodes.values[k], &mul_i(&nodes.grads[k].dy, -1.0)))
        / norm;
    let px2 = nodes.integrate(|k| norm_sqr4(&nodes.grads[k].dx)) / norm;
    let py2 = nodes.integrate(|k| norm_sqr4(&nodes.grads[k].dy)) / norm;
    let var_px = px2 - px.re * px.re;
    let var_py = py2 - py.re * py.re;

    let omega = state.params().omega();
    let diameter = 2.0 * r2.sqrt();
    Ok(LocalizationReport {
        order,
        norm,
        center: (cx, cy),
        variances: (var_x, var_y),
        second_moment: r2,
        diameter,
        diameter_lambda: diameter * omega / (2.0 * std::f64::consts::PI),
        sigma_x_px: (var_x * var_px).sqrt(),
        sigma_y_py: (var_y * var_py).sqrt(),
        doubling_delta: 0.0,
        converged: true,
    })
}

/// Localization report with an order-doubling convergence check.
pub fn localization_report(
    state: &WaveState,
    spec: &QuadratureSpec,
) -> Result<LocalizationReport, ObservablesError> {
    if spec.order < 32 {
        return Err(ObservablesError::OrderTooLow {
            got: spec.order,
            min: 32,
        });
    }
    let mut report = localization_pass(state, spec.order)?;
    let check = localization_pass(state, spec.order * 2)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
    let delta = [
        rel(report.norm, check.norm),
        rel(report.second_moment, check.second_moment),
        rel(report.sigma_x_px, check.sigma_x_px),
        rel(report.sigma_y_py, check.sigma_y_py),
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    report.doubling_delta = delta;
    report.converged = delta <= 1e-8;
    Ok(report)
}

fn mul_i(v: &Spinor4, sign: f64) -> Spinor4 {
    let i = Complex64::new(0.0, sign);
    v.map(|c| i * c)
}

/// `a - scale * b`, componentwise.
fn sub_scaled(a: &Spinor4, b: &Spinor4, scale: f64) -> Spinor4 {
    let mut out = *a;
    for (o, bk) in out.iter_mut().zip(b) {
        *o -= scale * bk;
    }
    out
}

fn norm_sqr4(v: &Spinor4) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Which operator definition reproduced the closed form within budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorMatch {
    First,
    Second,
    Both,
    Neither,
}

/// Energy, momentum and spin averages at one wave phase.
#[derive(Debug, Clone, Serialize)]
pub struct DynamicalReport {
    pub phase: f64,
    pub order: usize,
    /// `<i d/dt>` (mc^2).
    pub energy_time_deriv: f64,
    /// `<alpha . (-i grad - A) + beta>` (mc^2).
    pub energy_hamiltonian: f64,
    /// `<-i grad>` components (mc).
    pub momentum_canonical: [f64; 3],
    /// `<-i grad - A>` components (mc).
    pub momentum_kinetic: [f64; 3],
    pub transverse_momentum_canonical: f64,
    pub transverse_momentum_kinetic: f64,
    /// Spin components (hbar).
    pub spin: [f64; 3],
    pub spin_amplitude: f64,
    /// Comparison budget `10 (h + Omega)`, relative.
    pub budget: f64,
    pub targets: ClosedFormTargets,
    /// Time-derivative vs Hamiltonian energy against the closed form.
    pub energy_match: OperatorMatch,
    /// Canonical vs kinetic momentum against the closed forms.
    pub momentum_match: OperatorMatch,
    /// Whether the measured spin amplitude sits within budget of the
    /// closed-form target (it does at g = 2; deviations at other g are
    /// reported, not hidden).
    pub spin_within_budget: bool,
    /// Largest imaginary part leaked into any nominally real expectation.
    pub imaginary_residual: f64,
}

/// Computes the dynamical block at wave phase `phi` (the slice
/// `t = phi / Omega, z = 0`).
pub fn dynamical_expectations(
    state: &WaveState,
    phase: f64,
    spec: &QuadratureSpec,
) -> Result<DynamicalReport, ObservablesError> {
    if spec.order < 8 {
        return Err(ObservablesError::OrderTooLow {
            got: spec.order,
            min: 8,
        });
    }
    let nodes = sample_nodes(state, phase, spec.order)?;
    let norm = nodes.norm();
    let mut max_im = 0.0f64;
    let mut real = |c: Complex64| -> f64 {
        max_im = max_im.max(c.im.abs());
        c.re
    };

    // canonical momentum -i grad
    let p_can_c = [
        nodes.integrate_complex(|k| inner(&nodes.values[k], &mul_i(&nodes.grads[k].dx, -1.0)))
            / norm,
        nodes.integrate_complex(|k| inner(&nodes.values[k], &mul_i(&nodes.grads[k].dy, -1.0)))
            / norm,
        nodes.integrate_complex(|k| inner(&nodes.values[k], &mul_i(&nodes.grads[k].dz, -1.0)))
            / norm,
    ];
    let mean_ax = nodes.integrate(|k| nodes.ax[k] * nodes.density(k)) / norm;
    let mean_ay = nodes.integrate(|k| nodes.ay[k] * nodes.density(k)) / norm;
    let momentum_canonical = [real(p_can_c[0]), real(p_can_c[1]), real(p_can_c[2])];
    let momentum_kinetic = [
        momentum_canonical[0] - mean_ax,
        momentum_canonical[1] - mean_ay,
        momentum_canonical[2], // no longitudinal potential component
    ];

    // energy, both operator readings
    let energy_time_deriv = real(
        nodes.integrate_complex(|k| inner(&nodes.values[k], &mul_i(&nodes.grads[k].dt, 1.0)))
            / norm,
    );
    let energy_hamiltonian = real(
        nodes.integrate_complex(|k| {
            let v = &nodes.values[k];
            let g = &nodes.grads[k];
            let pix = sub_scaled(&mul_i(&g.dx, -1.0), v, nodes.ax[k]);
            let piy = sub_scaled(&mul_i(&g.dy, -1.0), v, nodes.ay[k]);
            let piz = mul_i(&g.dz, -1.0);
            let mut hv = alpha_x(&pix);
            let a2 = alpha_y(&piy);
            let a3 = alpha_z(&piz);
            let b = beta(v);
            for (i, c) in hv.iter_mut().enumerate() {
                *c += a2[i] + a3[i] + b[i];
            }
            inner(v, &hv)
        }) / norm,
    );

    // spin s_n = (1/2) <Sigma_n>
    let spin = [
        0.5 * real(
            nodes.integrate_complex(|k| inner(&nodes.values[k], &sigma_x(&nodes.values[k]))) / norm,
        ),
        0.5 * real(
            nodes.integrate_complex(|k| inner(&nodes.values[k], &sigma_y(&nodes.values[k]))) / norm,
        ),
        0.5 * real(
            nodes.integrate_complex(|k| inner(&nodes.values[k], &sigma_z(&nodes.values[k]))) / norm,
        ),
    ];

    let params = state.params();
    let budget = 10.0 * (params.wave_amp() + params.omega());
    let targets = ClosedFormTargets::for_g(params.g_factor());

    let rel = |value: f64, target: f64| (value - target).abs() / target.abs().max(1e-12);
    let energy_match = match (
        rel(energy_time_deriv, targets.energy) <= budget,
        rel(energy_hamiltonian, targets.energy) <= budget,
    ) {
        (true, true) => OperatorMatch::Both,
        (true, false) => OperatorMatch::First,
        (false, true) => OperatorMatch::Second,
        (false, false) => OperatorMatch::Neither,
    };

    let transverse_momentum_canonical = momentum_canonical[0].hypot(momentum_canonical[1]);
    let transverse_momentum_kinetic = momentum_kinetic[0].hypot(momentum_kinetic[1]);
    let can_ok = rel(transverse_momentum_canonical, targets.transverse_momentum) <= budget
        && rel(momentum_canonical[2], targets.longitudinal_momentum) <= budget;
    let kin_ok = rel(transverse_momentum_kinetic, targets.transverse_momentum) <= budget
        && rel(momentum_kinetic[2], targets.longitudinal_momentum) <= budget;
    let momentum_match = match (can_ok, kin_ok) {
        (true, true) => OperatorMatch::Both,
        (true, false) => OperatorMatch::First,
        (false, true) => OperatorMatch::Second,
        (false, false) => OperatorMatch::Neither,
    };

    let spin_amplitude = spin[0].hypot(spin[1]);
    let spin_within_budget =
        rel(spin_amplitude, targets.spin_amplitude) <= budget && spin[2].abs() <= budget;

    Ok(DynamicalReport {
        phase,
        order: spec.order,
        energy_time_deriv,
        energy_hamiltonian,
        momentum_canonical,
        momentum_kinetic,
        transverse_momentum_canonical,
        transverse_momentum_kinetic,
        spin,
        spin_amplitude,
        budget,
        targets,
        energy_match,
        momentum_match,
        spin_within_budget,
        imaginary_residual: max_im,
    })
}

/// Spin–momentum ratio from a dynamical report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioReport {
    /// `s_1 / p_x` (Compton units); skipped at a phase node of the x
    /// components.
    pub ratio_x: Option<f64>,
    /// `s_2 / p_y`.
    pub ratio_y: Option<f64>,
    /// The usable ratio (mean of the defined components).
    pub ratio: f64,
    /// Closed-form target `g^2 / (4 + g^2)`.
    pub target: f64,
    /// `|ratio_x - ratio_y|` when both are defined.
    pub component_spread: Option<f64>,
    /// Relative deviation of `ratio` from `target`.
    pub target_delta: f64,
}

/// Computes `s_1 / p_x` and `s_2 / p_y` (canonical momentum), checks their
/// mutual consistency, and compares to the closed form. A component whose
/// momentum sits at a phase node (`cos` or `sin` vanishing) is skipped.
pub fn spin_momentum_ratio(
    report: &DynamicalReport,
    g: f64,
) -> Result<RatioReport, ObservablesError> {
    let amp = report.transverse_momentum_canonical;
    if amp <= 0.0 {
        return Err(ObservablesError::ZeroTransverseMomentum);
    }
    let node_gate = 1e-6 * amp;
    let ratio_of = |s: f64, p: f64| -> Option<f64> {
        if p.abs() < node_gate {
            None
        } else {
            Some(s / p)
        }
    };
    let ratio_x = ratio_of(report.spin[0], report.momentum_canonical[0]);
    let ratio_y = ratio_of(report.spin[1], report.momentum_canonical[1]);
    let ratio = match (ratio_x, ratio_y) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => return Err(ObservablesError::ZeroTransverseMomentum),
    };
    let target = ClosedFormTargets::for_g(g).spin_momentum_ratio;
    Ok(RatioReport {
        ratio_x,
        ratio_y,
        ratio,
        target,
        component_spread: match (ratio_x, ratio_y) {
            (Some(a), Some(b)) => Some((a - b).abs()),
            _ => None,
        },
        target_delta: (ratio - target).abs() / target.abs().max(1e-12),
    })
}

/// The suppression exponent `2 d2^2 / d`, directly and by its closed form.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SuppressionReport {
    /// `2 tilt^2 / width` from the envelope itself.
    pub direct: f64,
    /// `(e0^2 + 1)/e0 * lambda / (2 pi lambda_bar)` from the context.
    pub closed_form: f64,
    /// Resonance parameter implied by the envelope and context.
    pub resonance: f64,
}

/// Evaluates the suppression exponent for a singular-branch envelope at
/// the physical scale set by the context. The two routes agree to `O(h)`.
pub fn suppression_exponent(
    envelope: &GaussianEnvelope,
    ctx: &UnitsContext,
) -> Result<SuppressionReport, ObservablesError> {
    let omega = ctx.propagation_constant();
    let resonance = 2.0 * envelope.width / omega;
    let expected_tilt = 0.5 * (resonance * resonance + 1.0).sqrt();
    if (envelope.tilt.abs() - expected_tilt).abs() > 0.2 * expected_tilt {
        return Err(ObservablesError::NotSingularEnvelope {
            tilt: envelope.tilt,
            expected: expected_tilt,
            resonance,
        });
    }
    let wavelength_ratio = ctx.wavelength() / ctx.compton_wavelength();
    Ok(SuppressionReport {
        direct: 2.0 * envelope.tilt * envelope.tilt / envelope.width,
        closed_form: (resonance * resonance + 1.0) / resonance * wavelength_ratio
            / (2.0 * std::f64::consts::PI),
        resonance,
    })
}
