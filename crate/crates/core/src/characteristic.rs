//! The third-order characteristic equation selecting valid solutions.
//!
//! A constant spinor works only when the shifted energy `eps = E - p`
//! satisfies
//!
//! ```text
//! eps (eps + 2p - Omega) - 1 - eps h^2 / (eps - e0) = 0
//! ```
//!
//! Clearing the pole at `eps = e0` gives the monic cubic
//!
//! ```text
//! eps^3 + (a - e0) eps^2 - (1 + a e0 + h^2) eps + e0 = 0,   a = 2p - Omega.
//! ```
//!
//! For generic momenta the roots move in powers of `h^2`. At the special
//! momentum `p = (1/e0 - e0)/2 + Omega/2` a pair of roots splits from `e0`
//! linearly in `h` (the "singular" pair); those states carry the
//! localization and spin structure the rest of the crate measures.
//!
//! The primary solver is companion-matrix eigenvalue extraction polished by
//! Newton iteration; the closed-form resolvent is kept as a cross-check
//! only, because the interesting regime sits at a near-double root where
//! the resolvent is numerically fragile.

use nalgebra::Matrix3;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CharacteristicError {
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("cubic coefficients are not finite: {0:?}")]
    NonFiniteCoefficients([f64; 3]),
    #[error("wave amplitude {wave_amp} too large to resolve the singular pair (limit {limit})")]
    AmplitudeTooLarge { wave_amp: f64, limit: f64 },
}

/// One characteristic problem: fields plus the rotating-frame momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicProblem {
    /// Resonance parameter `e0 = 2d / Omega > 0`.
    pub resonance: f64,
    /// Dimensionless wave amplitude `h >= 0`.
    pub wave_amp: f64,
    /// Rotating-frame momentum `p` (units of `mc`).
    pub momentum: f64,
    /// Dimensionless propagation constant.
    pub omega: f64,
}

impl CharacteristicProblem {
    pub fn new(
        resonance: f64,
        wave_amp: f64,
        momentum: f64,
        omega: f64,
    ) -> Result<Self, CharacteristicError> {
        if !(resonance.is_finite() && resonance > 0.0) {
            return Err(CharacteristicError::NonPositive {
                field: "resonance",
                value: resonance,
            });
        }
        if !(wave_amp.is_finite() && wave_amp >= 0.0) {
            return Err(CharacteristicError::NonPositive {
                field: "wave_amp",
                value: wave_amp,
            });
        }
        if !momentum.is_finite() || !omega.is_finite() {
            return Err(CharacteristicError::NonPositive {
                field: "momentum/omega",
                value: if momentum.is_finite() {
                    omega
                } else {
                    momentum
                },
            });
        }
        let problem = Self {
            resonance,
            wave_amp,
            momentum,
            omega,
        };
        let c = problem.monic_coefficients();
        if c.iter().any(|x| !x.is_finite()) {
            return Err(CharacteristicError::NonFiniteCoefficients(c));
        }
        Ok(problem)
    }

    /// Problem pinned at the singular momentum for the given fields.
    pub fn at_singular_momentum(
        resonance: f64,
        wave_amp: f64,
        omega: f64,
    ) -> Result<Self, CharacteristicError> {
        Self::new(
            resonance,
            wave_amp,
            singular_momentum(resonance, omega),
            omega,
        )
    }

    /// Coefficients `[c2, c1, c0]` of the monic cleared cubic
    /// `eps^3 + c2 eps^2 + c1 eps + c0`.
    pub fn monic_coefficients(&self) -> [f64; 3] {
        let a = 2.0 * self.momentum - self.omega;
        [
            a - self.resonance,
            -(1.0 + a * self.resonance + self.wave_amp * self.wave_amp),
            self.resonance,
        ]
    }

    /// Value of the cleared cubic at `eps`.
    pub fn cleared_residual(&self, eps: f64) -> f64 {
        let [c2, c1, c0] = self.monic_coefficients();
        ((eps + c2) * eps + c1) * eps + c0
    }

    /// Value of the original equation (with the pole term) at `eps`.
    /// Meaningful only away from `eps = e0`.
    pub fn characteristic_residual(&self, eps: f64) -> f64 {
        let a = 2.0 * self.momentum - self.omega;
        eps * (eps + a) - 1.0 - eps * self.wave_amp * self.wave_amp / (eps - self.resonance)
    }
}

/// Branch classification of one root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchLabel {
    /// Upper member of the singular pair (`eps > e0`).
    SingularPlus,
    /// Lower member of the singular pair (`eps < e0`).
    SingularMinus,
    /// Ordinary root (expansion in powers of `h^2`).
    Regular,
    /// Clustered roots that cannot be told apart (e.g. the exact double
    /// root at `h = 0`).
    Degenerate,
}

impl BranchLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BranchLabel::SingularPlus => "singular+",
            BranchLabel::SingularMinus => "singular-",
            BranchLabel::Regular => "regular",
            BranchLabel::Degenerate => "degenerate",
        }
    }
}

/// One root of the cleared cubic before classification.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CubicRoot {
    pub value: f64,
    /// Cleared-cubic residual after polishing.
    pub residual: f64,
    /// Whether polishing reached `|residual| <= 1e-12 max(1, |eps|^3)`.
    pub converged: bool,
}

/// A classified root with its rotating-frame kinematics attached.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolutionBranch {
    /// Root `eps = E - p` of the characteristic equation (units `mc^2`).
    pub root: f64,
    pub label: BranchLabel,
    /// Rotating-frame momentum the problem was solved at.
    pub momentum: f64,
    /// Rotating-frame energy `E = eps + p`.
    pub energy: f64,
    /// Cleared-cubic residual at the root.
    pub root_residual: f64,
    pub converged: bool,
}

impl SolutionBranch {
    /// The exact `h = 0` limit of a singular branch: root at `e0`, momentum
    /// and energy pinned by the closed forms. `plus` selects the branch
    /// whose root approaches `e0` from above as `h -> 0`.
    pub fn singular_limit(resonance: f64, plus: bool, omega: f64) -> Self {
        let momentum = singular_momentum(resonance, omega);
        Self {
            root: resonance,
            label: if plus {
                BranchLabel::SingularPlus
            } else {
                BranchLabel::SingularMinus
            },
            momentum,
            energy: resonance + momentum,
            root_residual: 0.0,
            converged: true,
        }
    }
}

/// Special rotating-frame momentum `p = (1/e0 - e0)/2 + Omega/2` at which
/// the singular pair exists.
pub fn singular_momentum(resonance: f64, omega: f64) -> f64 {
    0.5 * (1.0 / resonance - resonance) + 0.5 * omega
}

/// Rotating-frame energy of the singular pair in the `h -> 0` limit,
/// `E = e0 + p = (1/e0 + e0)/2 + Omega/2`.
pub fn singular_energy(resonance: f64, omega: f64) -> f64 {
    0.5 * (1.0 / resonance + resonance) + 0.5 * omega
}

// The cleared cubic always has three real roots for a valid problem
// (e0 > 0, h >= 0): writing f(eps) = (eps^2 + a eps - 1)(eps - e0) - h^2 eps,
// the sign chain f(-inf) < 0, f(0) = e0 > 0, f(e0) = -h^2 e0 <= 0,
// f(+inf) > 0 forces roots interlaced as r1 < 0 < r2 <= e0 <= r3.

const ROOT_TOL: f64 = 1e-12;

fn newton_polish(c: &[f64; 3], start: f64) -> CubicRoot {
    let f = |x: f64| ((x + c[0]) * x + c[1]) * x + c[2];
    let fp = |x: f64| (3.0 * x + 2.0 * c[0]) * x + c[1];
    let mut x = start;
    for _ in 0..40 {
        let fx = f(x);
        let fpx = fp(x);
        if fpx == 0.0 {
            break;
        }
        let step = fx / fpx;
        let next = x - step;
        if !next.is_finite() {
            break;
        }
        x = next;
        if step.abs() <= f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    let residual = f(x);
    let converged = residual.abs() <= ROOT_TOL * x.abs().max(1.0).powi(3);
    CubicRoot {
        value: x,
        residual,
        converged,
    }
}

/// Solves the cleared cubic: companion-matrix eigenvalues, then Newton
/// polishing. Roots are returned in ascending order (all three are real,
/// see the interlacing argument above).
pub fn solve_characteristic(
    problem: &CharacteristicProblem,
) -> Result<[CubicRoot; 3], CharacteristicError> {
    let c = problem.monic_coefficients();
    let eig = companion_eigenvalues(&c);
    let mut starts = [eig[0].re, eig[1].re, eig[2].re];
    starts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    // A real near-double root can come back from the eigensolver as a
    // complex pair collapsed onto its midpoint. Split such starts with the
    // local quadratic model before polishing.
    let scale = starts.iter().fold(1.0f64, |m, s| m.max(s.abs()));
    for (i, j) in [(0usize, 1usize), (1, 2)] {
        if (starts[j] - starts[i]).abs() < 1e-7 * scale {
            let m = 0.5 * (starts[i] + starts[j]);
            let f = ((m + c[0]) * m + c[1]) * m + c[2];
            let fpp_half = 3.0 * m + c[0]; // f''(m) / 2
            let delta2 = -f / fpp_half;
            if delta2 > 0.0 {
                let delta = delta2.sqrt();
                starts[i] = m - delta;
                starts[j] = m + delta;
            }
        }
    }

    let mut roots = starts.map(|s| newton_polish(&c, s));
    roots.sort_by(|a, b| a.value.partial_cmp(&b.value).unwrap());
    // internal sanity net; coarse because a double root is only located
    // to sqrt(eps), which shifts the symmetric functions by ~1e-8
    debug_assert!(
        {
            let (r0, r1, r2) = (roots[0].value, roots[1].value, roots[2].value);
            let ok = |lhs: f64, rhs: f64| (lhs - rhs).abs() <= 1e-6 * rhs.abs().max(1.0);
            ok(r0 + r1 + r2, -c[0])
                && ok(r0 * r1 + r0 * r2 + r1 * r2, c[1])
                && ok(r0 * r1 * r2, -c[2])
        },
        "Vieta check failed for {c:?}: {roots:?}"
    );
    Ok(roots)
}

fn companion_eigenvalues(c: &[f64; 3]) -> [num_complex::Complex64; 3] {
    let m = Matrix3::new(
        0.0, 0.0, -c[2], //
        1.0, 0.0, -c[1], //
        0.0, 1.0, -c[0],
    );
    let eig = m.complex_eigenvalues();
    [
        num_complex::Complex64::new(eig[0].re, eig[0].im),
        num_complex::Complex64::new(eig[1].re, eig[1].im),
        num_complex::Complex64::new(eig[2].re, eig[2].im),
    ]
}

/// Attaches branch labels and rotating-frame energies to solved roots.
///
/// The singular pair is recognized only when the problem's momentum matches
/// the special value to relative `1e-9`; otherwise every root is regular.
/// Roots near `e0` that cannot be resolved into a split pair (the `h = 0`
/// double root) are labeled degenerate rather than guessed.
pub fn classify_roots(
    roots: &[CubicRoot; 3],
    problem: &CharacteristicProblem,
) -> [SolutionBranch; 3] {
    let e0 = problem.resonance;
    let h = problem.wave_amp;
    let p_special = singular_momentum(e0, problem.omega);
    let p_matches = (problem.momentum - p_special).abs() <= 1e-9 * p_special.abs().max(1.0);

    let mut labels = [BranchLabel::Regular; 3];
    if p_matches {
        let near_window = (10.0 * h).max(1e-9);
        let near: Vec<usize> = (0..3)
            .filter(|&i| (roots[i].value - e0).abs() < near_window)
            .collect();
        match near.len() {
            3 => labels = [BranchLabel::Degenerate; 3],
            2 => {
                let (lo, hi) = if roots[near[0]].value <= roots[near[1]].value {
                    (near[0], near[1])
                } else {
                    (near[1], near[0])
                };
                let first_order_split = h * e0 / (e0 * e0 + 1.0).sqrt();
                let gate = first_order_split.max(1e-9);
                if roots[hi].value - roots[lo].value >= gate {
                    labels[hi] = BranchLabel::SingularPlus;
                    labels[lo] = BranchLabel::SingularMinus;
                } else {
                    labels[hi] = BranchLabel::Degenerate;
                    labels[lo] = BranchLabel::Degenerate;
                }
            }
            _ => {}
        }
    }

    let mk = |i: usize| SolutionBranch {
        root: roots[i].value,
        label: labels[i],
        momentum: problem.momentum,
        energy: roots[i].value + problem.momentum,
        root_residual: roots[i].residual,
        converged: roots[i].converged,
    };
    [mk(0), mk(1), mk(2)]
}

/// Convenience: solve and classify in one call.
pub fn solve_and_classify(
    problem: &CharacteristicProblem,
) -> Result<[SolutionBranch; 3], CharacteristicError> {
    let roots = solve_characteristic(problem)?;
    Ok(classify_roots(&roots, problem))
}

/// Truncated expansion of a singular root in powers of the wave amplitude:
/// `eps(h) = e0 + c[0] h + c[1] h^2 + ...`.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesExpansion {
    /// Expansion point (the resonance parameter).
    pub base: f64,
    /// Coefficients of `h^1, h^2, ...`.
    pub coefficients: Vec<f64>,
    /// How many coefficients the numerical extrapolation actually
    /// certified; `< coefficients.len()` means the tail was truncated.
    pub converged_order: usize,
}

impl SeriesExpansion {
    pub fn eval(&self, wave_amp: f64) -> f64 {
        let mut acc = self.base;
        let mut hk = 1.0;
        for c in &self.coefficients {
            hk *= wave_amp;
            acc += c * hk;
        }
        acc
    }
}

/// Expansions of the two singular roots around `e0`.
///
/// The linear coefficient is the closed form `+-e0 / sqrt(e0^2 + 1)`;
/// higher coefficients are estimated by Richardson extrapolation of the
/// exact roots as `h -> 0`. The two returned expansions (plus branch
/// first) differ by the sign of the odd coefficients.
pub fn singular_series(
    resonance: f64,
    wave_amp: f64,
    order: usize,
) -> Result<[SeriesExpansion; 2], CharacteristicError> {
    if !(resonance.is_finite() && resonance > 0.0) {
        return Err(CharacteristicError::NonPositive {
            field: "resonance",
            value: resonance,
        });
    }
    let limit = 0.1 * resonance;
    if !(wave_amp.is_finite() && wave_amp >= 0.0) || wave_amp >= limit {
        return Err(CharacteristicError::AmplitudeTooLarge { wave_amp, limit });
    }
    let order = order.max(1);
    let e1 = resonance / (resonance * resonance + 1.0).sqrt();

    // exact singular roots at a ladder of amplitudes (Omega drops out of
    // the cubic when the momentum is pinned at the singular value)
    let h_base = 0.01 * resonance.min(1.0);
    let ladder: Vec<f64> = (0..5).map(|j| h_base / f64::powi(2.0, j)).collect();
    let mut plus_roots = Vec::with_capacity(ladder.len());
    let mut minus_roots = Vec::with_capacity(ladder.len());
    for &hj in &ladder {
        let problem = CharacteristicProblem::at_singular_momentum(resonance, hj, 0.0)?;
        let branches = solve_and_classify(&problem)?;
        let plus = branches
            .iter()
            .find(|b| b.label == BranchLabel::SingularPlus)
            .map(|b| b.root);
        let minus = branches
            .iter()
            .find(|b| b.label == BranchLabel::SingularMinus)
            .map(|b| b.root);
        match (plus, minus) {
            (Some(p), Some(m)) => {
                plus_roots.push(p);
                minus_roots.push(m);
            }
            _ => {
                return Err(CharacteristicError::AmplitudeTooLarge {
                    wave_amp: hj,
                    limit,
                })
            }
        }
    }

    let build = |sign: f64, roots: &[f64]| -> SeriesExpansion {
        let mut coefficients = vec![sign * e1];
        let mut converged_order = 1;
        for k in 2..=order {
            match extrapolate_coefficient(resonance, &ladder, roots, &coefficients, k) {
                Some(c) => {
                    coefficients.push(c);
                    if converged_order == k - 1 {
                        converged_order = k;
                    }
                }
                None => break,
            }
        }
        SeriesExpansion {
            base: resonance,
            coefficients,
            converged_order,
        }
    };

    Ok([build(1.0, &plus_roots), build(-1.0, &minus_roots)])
}

/// Richardson-extrapolates coefficient `k` of the expansion from exact
/// roots on a halving amplitude ladder. Returns `None` when the
/// extrapolants fail to settle.
fn extrapolate_coefficient(
    base: f64,
    ladder: &[f64],
    roots: &[f64],
    known: &[f64],
    k: usize,
) -> Option<f64> {
    // g(h) = (root(h) - base - sum_{j<k} c_j h^j) / h^k = c_k + O(h)
    let g: Vec<f64> = ladder
        .iter()
        .zip(roots)
        .map(|(&h, &r)| {
            let mut rem = r - base;
            let mut hj = 1.0;
            for c in known {
                hj *= h;
                rem -= c * hj;
            }
            rem / h.powi(k as i32)
        })
        .collect();
    // first Richardson level kills the O(h) term, second the O(h^2) term
    let l1: Vec<f64> = g.windows(2).map(|w| 2.0 * w[1] - w[0]).collect();
    let l2: Vec<f64> = l1.windows(2).map(|w| (4.0 * w[1] - w[0]) / 3.0).collect();
    let last = *l2.last()?;
    let prev = l2[l2.len() - 2];
    let tol = (1e-4 * last.abs()).max(1e-6);
    if (last - prev).abs() <= tol {
        Some(last)
    } else {
        None
    }
}

/// Roots of a monic cubic by the closed-form resolvent; cross-check for
/// the companion-matrix path on well-separated roots.
#[derive(Debug, Clone, Copy)]
pub enum CubicRoots {
    ThreeReal([f64; 3]),
    OneReal { real: f64, pair: (f64, f64) },
}

pub fn cubic_resolvent(c2: f64, c1: f64, c0: f64) -> CubicRoots {
    // depress: x = t - c2/3
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    if disc >= 0.0 && p < 0.0 {
        // three real roots, trigonometric form
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        let mut roots = [0.0; 3];
        for (k, r) in roots.iter_mut().enumerate() {
            *r = m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift;
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        CubicRoots::ThreeReal(roots)
    } else {
        // one real root, Cardano
        let half_q = q / 2.0;
        let inner = (half_q * half_q + p * p * p / 27.0).max(0.0).sqrt();
        let u = (-half_q + inner).cbrt();
        let v = (-half_q - inner).cbrt();
        let real = u + v - shift;
        let re = -0.5 * (u + v) - shift;
        let im = 0.5 * 3.0f64.sqrt() * (u - v);
        CubicRoots::OneReal {
            real,
            pair: (re, im.abs()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sorted3(mut v: [f64; 3]) -> [f64; 3] {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn zero_amplitude_factored_roots() {
        // h = 0, e0 = 1, p = Omega/2: cubic factors as (x-1)^2 (x+1)
        let omega = 0.05;
        let problem = CharacteristicProblem::new(1.0, 0.0, omega / 2.0, omega).unwrap();
        let roots = solve_characteristic(&problem).unwrap();
        let vals = sorted3([roots[0].value, roots[1].value, roots[2].value]);
        assert!((vals[0] + 1.0).abs() < 1e-9);
        assert!((vals[1] - 1.0).abs() < 1e-7);
        assert!((vals[2] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn small_amplitude_pair_splits_linearly() {
        let h = 1e-3;
        let problem = CharacteristicProblem::at_singular_momentum(1.0, h, 0.02).unwrap();
        let roots = solve_characteristic(&problem).unwrap();
        let vals = [roots[0].value, roots[1].value, roots[2].value];
        // expected: {1 - h/sqrt2, 1 + h/sqrt2, -1} to O(h^2)
        let split = h / 2f64.sqrt();
        assert!((vals[0] + 1.0).abs() < 1e-6);
        assert!((vals[1] - (1.0 - split)).abs() < 3e-7, "{}", vals[1]);
        assert!((vals[2] - (1.0 + split)).abs() < 3e-7, "{}", vals[2]);
        for r in &roots {
            assert!(r.converged);
            assert!(r.residual.abs() < 1e-12 * r.value.abs().max(1.0).powi(3));
        }
    }

    #[test]
    fn singular_momentum_values() {
        let omega = 0.1;
        assert!((singular_momentum(1.0, omega) - omega / 2.0).abs() < 1e-16);
        assert!((singular_momentum(2.0, 0.0) + 0.75).abs() < 1e-16);
        // electron: g/2 = 1.0011659
        let e0 = 2.0 / 2.0023318;
        let p = singular_momentum(e0, 0.0);
        assert!((p.abs() - 1.165e-3).abs() < 1e-6, "p = {p}");
        // the value is positive as written; the magnitude is the physical claim
        assert!(p > 0.0);
    }

    #[test]
    fn singular_energy_electron_value() {
        let g_half = 1.0011659;
        let e0 = 1.0 / g_half;
        let energy = singular_energy(e0, 0.0);
        let expected = 0.5 * (g_half + 1.0 / g_half);
        assert!((energy - expected).abs() < 1e-15);
        assert!((energy - 1.0000007).abs() < 1e-7);
    }

    #[test]
    #[allow(clippy::approx_constant)] // frozen reference digits
    fn series_linear_coefficients() {
        let [plus, minus] = singular_series(1.0, 1e-3, 2).unwrap();
        assert!((plus.coefficients[0] - 0.7071068).abs() < 1e-7);
        assert!((minus.coefficients[0] + 0.7071068).abs() < 1e-7);
        let [plus2, _] = singular_series(2.0, 1e-3, 1).unwrap();
        assert!((plus2.coefficients[0] - 0.8944272).abs() < 1e-7);
    }

    #[test]
    fn series_quadratic_coefficient_matches_perturbation_oracle() {
        // independent oracle: expanding the factored cubic around e0 gives
        // c2 = e0 / (2 (e0^2 + 1)^2), identical for both branches
        for e0 in [0.5, 1.0, 2.0] {
            let oracle = e0 / (2.0 * f64::powi(e0 * e0 + 1.0, 2));
            let [plus, minus] = singular_series(e0, 1e-3, 2).unwrap();
            assert_eq!(plus.converged_order, 2);
            assert!(
                (plus.coefficients[1] - oracle).abs() < 1e-5 * oracle.abs().max(1.0),
                "e0 = {e0}: {} vs {oracle}",
                plus.coefficients[1]
            );
            assert!((minus.coefficients[1] - oracle).abs() < 1e-5);
        }
    }

    #[test]
    fn series_truncation_matches_exact_roots_to_cubic_order() {
        let [plus, _] = singular_series(1.0, 1e-2, 2).unwrap();
        for h in [1e-2, 1e-3, 1e-4] {
            let problem = CharacteristicProblem::at_singular_momentum(1.0, h, 0.0).unwrap();
            let branches = solve_and_classify(&problem).unwrap();
            let exact = branches
                .iter()
                .find(|b| b.label == BranchLabel::SingularPlus)
                .unwrap()
                .root;
            let err = (plus.eval(h) - exact).abs();
            assert!(err <= 1.0 * h * h * h, "h = {h}: err = {err}");
        }
    }

    #[test]
    fn classify_labels_singular_pair_and_energies() {
        let problem = CharacteristicProblem::at_singular_momentum(1.0, 1e-4, 0.05).unwrap();
        let branches = solve_and_classify(&problem).unwrap();
        let labels: Vec<_> = branches.iter().map(|b| b.label).collect();
        assert!(labels.contains(&BranchLabel::SingularPlus));
        assert!(labels.contains(&BranchLabel::SingularMinus));
        assert!(labels.contains(&BranchLabel::Regular));
        for b in &branches {
            assert!((b.energy - (b.root + b.momentum)).abs() < 1e-15);
        }
    }

    #[test]
    fn classify_double_root_as_degenerate() {
        let problem = CharacteristicProblem::at_singular_momentum(1.0, 0.0, 0.05).unwrap();
        let branches = solve_and_classify(&problem).unwrap();
        let degenerate = branches
            .iter()
            .filter(|b| b.label == BranchLabel::Degenerate)
            .count();
        assert_eq!(degenerate, 2);
    }

    #[test]
    fn classify_off_momentum_as_all_regular() {
        let p = singular_momentum(1.0, 0.05) * 1.1;
        let problem = CharacteristicProblem::new(1.0, 1e-4, p, 0.05).unwrap();
        let branches = solve_and_classify(&problem).unwrap();
        assert!(branches.iter().all(|b| b.label == BranchLabel::Regular));
    }

    #[test]
    fn resolvent_agrees_with_companion_path() {
        let problem = CharacteristicProblem::new(1.3, 0.04, -0.7, 0.08).unwrap();
        let [c2, c1, c0] = problem.monic_coefficients();
        let roots = solve_characteristic(&problem).unwrap();
        match cubic_resolvent(c2, c1, c0) {
            CubicRoots::ThreeReal(rs) => {
                for (a, b) in rs.iter().zip(roots.iter()) {
                    assert!((a - b.value).abs() < 1e-9 * a.abs().max(1.0));
                }
            }
            CubicRoots::OneReal { .. } => panic!("expected three real roots"),
        }
    }

    #[test]
    fn roots_interlace_around_zero_and_resonance() {
        // r1 < 0 < r2 <= e0 <= r3 whenever h > 0
        for (e0, p, h) in [
            (0.1, -60.0, 0.3),
            (2.0, 10.0, 1.5),
            (1.0, 0.0, 0.7),
            (0.5, -0.3, 0.05),
        ] {
            let problem = CharacteristicProblem::new(e0, h, p, 0.01).unwrap();
            let roots = solve_characteristic(&problem).unwrap();
            assert!(roots[0].value < 0.0, "{roots:?}");
            assert!(
                roots[1].value > 0.0 && roots[1].value <= e0 + 1e-12,
                "{roots:?}"
            );
            assert!(roots[2].value >= e0 - 1e-12, "{roots:?}");
        }
    }

    #[test]
    fn original_equation_residual_small_away_from_pole() {
        let problem = CharacteristicProblem::at_singular_momentum(1.2, 1e-2, 0.03).unwrap();
        let branches = solve_and_classify(&problem).unwrap();
        for b in &branches {
            if (b.root - problem.resonance).abs() > 1e-6 {
                let res = problem.characteristic_residual(b.root);
                assert!(res.abs() < 1e-10, "residual {res} at root {}", b.root);
            }
        }
    }

    #[test]
    fn singular_pair_slope_converges_first_order() {
        // (eps+ - eps-) / (2h) -> e0/sqrt(e0^2+1), error O(h^2); midpoint
        // drift from e0 is O(h^2)
        let e0 = 1.4;
        let target = e0 / f64::sqrt(e0 * e0 + 1.0);
        let mut errs = Vec::new();
        for h in [2e-3, 1e-3] {
            let problem = CharacteristicProblem::at_singular_momentum(e0, h, 0.0).unwrap();
            let branches = solve_and_classify(&problem).unwrap();
            let plus = branches
                .iter()
                .find(|b| b.label == BranchLabel::SingularPlus)
                .unwrap();
            let minus = branches
                .iter()
                .find(|b| b.label == BranchLabel::SingularMinus)
                .unwrap();
            let slope = (plus.root - minus.root) / (2.0 * h);
            errs.push((slope - target).abs());
            let midpoint_drift = (0.5 * (plus.root + minus.root) - e0).abs();
            assert!(
                midpoint_drift < 2.0 * h * h,
                "drift {midpoint_drift} at h={h}"
            );
        }
        // halving h divides the slope error by ~4
        let ratio = errs[0] / errs[1];
        assert!((2.5..6.0).contains(&ratio), "ratio {ratio}, errs {errs:?}");
    }

    #[test]
    fn amplitude_gate_for_series() {
        assert!(matches!(
            singular_series(1.0, 0.2, 2),
            Err(CharacteristicError::AmplitudeTooLarge { .. })
        ));
    }

    proptest! {
        #[test]
        fn vieta_identities_hold(
            e0 in 0.5..2.0f64,
            h in 0.0..0.05f64,
            omega in 1e-3..0.1f64,
        ) {
            let problem = CharacteristicProblem::at_singular_momentum(e0, h, omega).unwrap();
            let roots = solve_characteristic(&problem).unwrap();
            let [c2, c1, c0] = problem.monic_coefficients();
            let (r0, r1, r2) = (roots[0].value, roots[1].value, roots[2].value);
            let sum = r0 + r1 + r2;
            let pair = r0 * r1 + r0 * r2 + r1 * r2;
            let prod = r0 * r1 * r2;
            prop_assert!((sum + c2).abs() <= 1e-10 * c2.abs().max(1.0));
            prop_assert!((pair - c1).abs() <= 1e-10 * c1.abs().max(1.0));
            prop_assert!((prod + c0).abs() <= 1e-10 * c0.abs().max(1.0));
            // product of roots = -e0
            prop_assert!((prod + e0).abs() <= 1e-10 * e0.max(1.0));
        }

        #[test]
        fn roots_satisfy_cleared_cubic(
            e0 in 0.5..2.0f64,
            h in 0.0..0.05f64,
            p_scale in -2.0..2.0f64,
            omega in 1e-3..0.1f64,
        ) {
            let p = singular_momentum(e0, omega) + p_scale;
            let problem = CharacteristicProblem::new(e0, h, p, omega).unwrap();
            if let Ok(roots) = solve_characteristic(&problem) {
                for r in &roots {
                    prop_assert!(
                        r.residual.abs() <= 1e-11 * r.value.abs().max(1.0).powi(3),
                        "residual {} at {}", r.residual, r.value
                    );
                }
            }
        }
    }
}
