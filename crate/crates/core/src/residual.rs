//! Certifies an assembled state against the Dirac operator itself and
//! audits the operator sign conventions.
//!
//! The operator is applied pointwise on a sample grid:
//!
//! ```text
//! O = s_t (-i d/dt) + s_x (-i alpha . grad) + s_A (-(alpha . A)) + s_m (beta)
//! ```
//!
//! with four sign flags `s_*`. Multiplying the whole operator by -1 maps
//! one flag pattern onto another without changing the kernel, so the 16
//! patterns fall into 8 equivalence classes. The audit measures the
//! relative residual of every pattern on a certified state and reports
//! which class actually annihilates it; that class is then the canonical
//! convention for the artifact. Residual reductions use a fixed pairwise
//! order, so results are independent of evaluation interleaving.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::matrices::{alpha_x, alpha_y, alpha_z, beta, Spinor4};
use crate::quadrature::pairwise_sum;
use crate::wavefunction::{FieldPoint, PsiGradient, WaveState};

#[derive(Debug, Error)]
pub enum ResidualError {
    #[error("grid produced no finite sample points")]
    EmptyGrid,
    #[error("state density vanished on the whole grid; grid is outside the envelope support")]
    ZeroDensity,
    #[error(
        "no sign convention annihilates the state (best residual {best:.3e}); \
         the assembly upstream is inconsistent"
    )]
    NoConventionPasses { best: f64 },
}

/// One of the two signs of an operator term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Sign pattern of the four operator terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConventionSpec {
    /// Sign of the `-i d/dt` term.
    pub time: Sign,
    /// Sign of the `-i alpha . grad` term.
    pub space: Sign,
    /// Sign of the `-(alpha . A)` coupling term.
    pub coupling: Sign,
    /// Sign of the `beta` mass term.
    pub mass: Sign,
}

impl ConventionSpec {
    /// The sign pattern as printed in the source operator (all plus).
    pub fn printed() -> Self {
        Self {
            time: Sign::Plus,
            space: Sign::Plus,
            coupling: Sign::Plus,
            mass: Sign::Plus,
        }
    }

    /// All 16 sign patterns, fixed enumeration order.
    pub fn all() -> Vec<ConventionSpec> {
        let signs = [Sign::Plus, Sign::Minus];
        let mut out = Vec::with_capacity(16);
        for &time in &signs {
            for &space in &signs {
                for &coupling in &signs {
                    for &mass in &signs {
                        out.push(ConventionSpec {
                            time,
                            space,
                            coupling,
                            mass,
                        });
                    }
                }
            }
        }
        out
    }

    /// Global-sign flip (same kernel, same equivalence class).
    pub fn global_flip(self) -> Self {
        Self {
            time: self.time.flip(),
            space: self.space.flip(),
            coupling: self.coupling.flip(),
            mass: self.mass.flip(),
        }
    }

    /// Canonical representative of the equivalence class: time sign fixed
    /// to plus.
    pub fn class_representative(self) -> Self {
        if self.time == Sign::Minus {
            self.global_flip()
        } else {
            self
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}{}{}{}",
            self.time.as_char(),
            self.space.as_char(),
            self.coupling.as_char(),
            self.mass.as_char()
        )
    }
}

/// How derivatives are obtained for the operator application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum DerivativeMode {
    /// Closed-form derivatives from the state itself.
    Analytic,
    /// Second-order central differences with the given step, in units of
    /// the envelope width.
    FiniteDifference { step_widths: f64 },
}

/// Sample grid: transverse points in co-rotating coordinates around the
/// envelope center, longitudinal/time points over one wave period.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub nz: usize,
    /// Transverse half-extent in envelope widths; keep at or below 6 to
    /// stay inside the support.
    pub extent_widths: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nx: 5,
            ny: 5,
            nt: 3,
            nz: 3,
            extent_widths: 2.0,
        }
    }
}

impl GridSpec {
    /// Materializes the sample points for a state.
    pub fn points(&self, state: &WaveState) -> Vec<FieldPoint> {
        let env = state.envelope();
        let omega = state.params().omega();
        let sigma = env.sigma();
        let center = env.center_offset();
        let period = 2.0 * std::f64::consts::PI / omega;

        let axis = |n: usize, half: f64| -> Vec<f64> {
            if n <= 1 {
                vec![0.0]
            } else {
                (0..n)
                    .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
                    .collect()
            }
        };
        let xs = axis(self.nx, self.extent_widths * sigma);
        let ys = axis(self.ny, self.extent_widths * sigma);
        let ts: Vec<f64> = (0..self.nt.max(1))
            .map(|i| period * i as f64 / self.nt.max(1) as f64)
            .collect();
        let zs: Vec<f64> = (0..self.nz.max(1))
            .map(|i| period * i as f64 / self.nz.max(1) as f64)
            .collect();

        let mut points = Vec::with_capacity(xs.len() * ys.len() * ts.len() * zs.len());
        for &t in &ts {
            for &z in &zs {
                let phi = omega * (t - z);
                let (s, c) = phi.sin_cos();
                for &xt in &xs {
                    for &dy in &ys {
                        let yt = center + dy;
                        // lab coordinates from co-rotating ones
                        let x = xt * c - yt * s;
                        let y = xt * s + yt * c;
                        points.push(FieldPoint::new(t, x, y, z));
                    }
                }
            }
        }
        points
    }
}

/// Residual of one sample point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PointResidual {
    pub point: FieldPoint,
    /// `|O Psi|` at the point.
    pub residual: f64,
    /// `|Psi|` at the point.
    pub amplitude: f64,
}

/// Outcome of one operator application over a grid.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub convention: ConventionSpec,
    pub mode: DerivativeMode,
    /// `||O Psi|| / ||Psi||` over the grid (fixed-order pairwise sums).
    pub relative_norm: f64,
    pub pointwise: Vec<PointResidual>,
    /// For finite differences: observed order from halving the step once
    /// (`log2` of the residual ratio); `None` in analytic mode.
    pub convergence_order: Option<f64>,
    /// Set when the requested step had to be raised to avoid cancellation.
    pub cancellation_guard: bool,
    /// Set when the grid extends beyond the trusted envelope support.
    pub support_warning: bool,
}

/// Normalized potential components at a point: the constant-field part
/// plus the circular wave, charge sign folded in.
fn potential(state: &WaveState, point: &FieldPoint) -> (f64, f64) {
    let d = state.envelope().width;
    let h = state.params().wave_amp();
    let phi = point.phase(state.params().omega());
    let (s, c) = phi.sin_cos();
    (d * point.y + h * c, -d * point.x + h * s)
}

fn apply_operator(
    state: &WaveState,
    point: &FieldPoint,
    value: &Spinor4,
    grad: &PsiGradient,
    convention: &ConventionSpec,
) -> Spinor4 {
    let (ax, ay) = potential(state, point);
    let i = Complex64::new(0.0, 1.0);
    let st = convention.time.as_f64();
    let sx = convention.space.as_f64();
    let sa = convention.coupling.as_f64();
    let sm = convention.mass.as_f64();

    let a1 = alpha_x(&grad.dx);
    let a2 = alpha_y(&grad.dy);
    let a3 = alpha_z(&grad.dz);
    let c1 = alpha_x(value);
    let c2 = alpha_y(value);
    let b = beta(value);

    let mut out = [Complex64::new(0.0, 0.0); 4];
    for k in 0..4 {
        out[k] = st * (-i) * grad.dt[k]
            + sx * (-i) * (a1[k] + a2[k] + a3[k])
            + sa * (-(ax * c1[k] + ay * c2[k]))
            + sm * b[k];
    }
    out
}

fn fd_gradient(state: &WaveState, point: &FieldPoint, step: f64) -> PsiGradient {
    let diff = |plus: Spinor4, minus: Spinor4| -> Spinor4 {
        let mut g = [Complex64::new(0.0, 0.0); 4];
        for k in 0..4 {
            g[k] = (plus[k] - minus[k]) / (2.0 * step);
        }
        g
    };
    let at = |dt: f64, dx: f64, dy: f64, dz: f64| -> Spinor4 {
        state.evaluate(&FieldPoint::new(
            point.t + dt,
            point.x + dx,
            point.y + dy,
            point.z + dz,
        ))
    };
    PsiGradient {
        dt: diff(at(step, 0.0, 0.0, 0.0), at(-step, 0.0, 0.0, 0.0)),
        dx: diff(at(0.0, step, 0.0, 0.0), at(0.0, -step, 0.0, 0.0)),
        dy: diff(at(0.0, 0.0, step, 0.0), at(0.0, 0.0, -step, 0.0)),
        dz: diff(at(0.0, 0.0, 0.0, step), at(0.0, 0.0, 0.0, -step)),
    }
}

fn relative_residual_over(
    state: &WaveState,
    points: &[FieldPoint],
    convention: &ConventionSpec,
    mode: DerivativeMode,
) -> Result<(f64, Vec<PointResidual>, bool), ResidualError> {
    if points.is_empty() {
        return Err(ResidualError::EmptyGrid);
    }
    let mut guard_engaged = false;
    let mut res2 = Vec::with_capacity(points.len());
    let mut amp2 = Vec::with_capacity(points.len());
    let mut pointwise = Vec::with_capacity(points.len());
    for p in points {
        let (value, grad) = match mode {
            DerivativeMode::Analytic => state.evaluate_with_gradient(p),
            DerivativeMode::FiniteDifference { step_widths } => {
                let sigma = state.envelope().sigma();
                let coord_scale = [p.t.abs(), p.x.abs(), p.y.abs(), p.z.abs(), 1.0]
                    .into_iter()
                    .fold(0.0f64, f64::max);
                let requested = step_widths * sigma;
                let floor = f64::EPSILON.cbrt() * coord_scale;
                let step = if requested < floor {
                    guard_engaged = true;
                    floor
                } else {
                    requested
                };
                (state.evaluate(p), fd_gradient(state, p, step))
            }
        };
        let op = apply_operator(state, p, &value, &grad, convention);
        let r2: f64 = op.iter().map(|c| c.norm_sqr()).sum();
        let a2: f64 = value.iter().map(|c| c.norm_sqr()).sum();
        res2.push(r2);
        amp2.push(a2);
        pointwise.push(PointResidual {
            point: *p,
            residual: r2.sqrt(),
            amplitude: a2.sqrt(),
        });
    }
    let total_amp = pairwise_sum(&amp2);
    if total_amp <= 0.0 {
        return Err(ResidualError::ZeroDensity);
    }
    let rel = (pairwise_sum(&res2) / total_amp).sqrt();
    Ok((rel, pointwise, guard_engaged))
}

/// Applies the Dirac operator to the state on the grid and reports
/// pointwise and aggregate relative residuals.
///
/// In finite-difference mode the report also carries an observed
/// convergence order from one step halving.
pub fn dirac_residual(
    state: &WaveState,
    grid: &GridSpec,
    convention: &ConventionSpec,
    mode: DerivativeMode,
) -> Result<ResidualReport, ResidualError> {
    let points = grid.points(state);
    let (relative_norm, pointwise, guard) =
        relative_residual_over(state, &points, convention, mode)?;
    let convergence_order = match mode {
        DerivativeMode::FiniteDifference { step_widths } => {
            let halved = DerivativeMode::FiniteDifference {
                step_widths: step_widths / 2.0,
            };
            let (half_norm, _, _) = relative_residual_over(state, &points, convention, halved)?;
            Some((relative_norm / half_norm).log2())
        }
        DerivativeMode::Analytic => None,
    };
    Ok(ResidualReport {
        convention: *convention,
        mode,
        relative_norm,
        pointwise,
        convergence_order,
        cancellation_guard: guard,
        support_warning: grid.extent_widths > 6.0,
    })
}

/// One audit row: a sign pattern and its relative residual.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AuditRow {
    pub convention: ConventionSpec,
    pub relative_residual: f64,
}

/// Ranked outcome of the 16-pattern audit.
#[derive(Debug, Clone, Serialize)]
pub struct AuditTable {
    /// All 16 rows, most annihilating first.
    pub rows: Vec<AuditRow>,
    /// Residual threshold a convention must beat to count as passing.
    pub pass_threshold: f64,
    /// Residual every non-passing class must exceed.
    pub fail_threshold: f64,
}

impl AuditTable {
    /// The winning convention, normalized to its class representative.
    pub fn winner(&self) -> ConventionSpec {
        self.rows[0].convention.class_representative()
    }

    /// Number of sign-equivalence classes passing the threshold.
    pub fn passing_classes(&self) -> usize {
        let mut reps: Vec<String> = self
            .rows
            .iter()
            .filter(|r| r.relative_residual < self.pass_threshold)
            .map(|r| r.convention.class_representative().label())
            .collect();
        reps.sort();
        reps.dedup();
        reps.len()
    }

    /// True when exactly one class passes and every other class fails
    /// loudly.
    pub fn is_decisive(&self) -> bool {
        let winner = self.winner().label();
        self.passing_classes() == 1
            && self
                .rows
                .iter()
                .filter(|r| r.convention.class_representative().label() != winner)
                .all(|r| r.relative_residual > self.fail_threshold)
    }

    /// CSV rendering: four sign flags plus the residual norm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,space,coupling,mass,relative_residual\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                row.convention.time.as_char(),
                row.convention.space.as_char(),
                row.convention.coupling.as_char(),
                row.convention.mass.as_char(),
                row.relative_residual
            ));
        }
        out
    }
}

/// Evaluates every sign pattern on the state (analytic derivatives) and
/// returns the ranked table. Errors when nothing annihilates the state —
/// that means the assembly upstream is broken, not the audit.
pub fn convention_audit(state: &WaveState, grid: &GridSpec) -> Result<AuditTable, ResidualError> {
    let points = grid.points(state);
    let mut rows = Vec::with_capacity(16);
    for convention in ConventionSpec::all() {
        let (rel, _, _) =
            relative_residual_over(state, &points, &convention, DerivativeMode::Analytic)?;
        rows.push(AuditRow {
            convention,
            relative_residual: rel,
        });
    }
    rows.sort_by(|a, b| {
        a.relative_residual
            .partial_cmp(&b.relative_residual)
            .unwrap()
    });
    let table = AuditTable {
        rows,
        pass_threshold: 1e-8,
        fail_threshold: 1e-2,
    };
    if table.rows[0].relative_residual >= table.pass_threshold {
        return Err(ResidualError::NoConventionPasses {
            best: table.rows[0].relative_residual,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristic::{
        solve_and_classify, BranchLabel, CharacteristicProblem, SolutionBranch,
    };
    use crate::units::NormalizedParams;
    use crate::wavefunction::WaveState;

    fn desk_state(e0: f64, h: f64, omega: f64, label: BranchLabel) -> WaveState {
        let params = NormalizedParams::from_resonance(e0, h, omega).unwrap();
        let problem = CharacteristicProblem::at_singular_momentum(e0, h, omega).unwrap();
        let branches = solve_and_classify(&problem).unwrap();
        let branch = branches.iter().find(|b| b.label == label).unwrap();
        WaveState::assemble(&params, branch).unwrap()
    }

    #[test]
    fn certified_state_annihilated_in_analytic_mode() {
        let state = desk_state(1.0, 1e-2, 0.05, BranchLabel::SingularPlus);
        let report = dirac_residual(
            &state,
            &GridSpec::default(),
            &ConventionSpec::printed(),
            DerivativeMode::Analytic,
        )
        .unwrap();
        assert!(
            report.relative_norm < 1e-8,
            "residual {}",
            report.relative_norm
        );
        assert!(report.convergence_order.is_none());
        assert!(!report.support_warning);
    }

    #[test]
    fn all_branches_certified() {
        for label in [
            BranchLabel::SingularPlus,
            BranchLabel::SingularMinus,
            BranchLabel::Regular,
        ] {
            let state = desk_state(1.2, 5e-3, 0.08, label);
            let report = dirac_residual(
                &state,
                &GridSpec::default(),
                &ConventionSpec::printed(),
                DerivativeMode::Analytic,
            )
            .unwrap();
            assert!(
                report.relative_norm < 1e-8,
                "{label:?}: {}",
                report.relative_norm
            );
        }
    }

    #[test]
    fn zero_amplitude_singular_limit_certified() {
        let params = NormalizedParams::from_resonance(1.0, 0.0, 0.1).unwrap();
        for plus in [true, false] {
            let branch = SolutionBranch::singular_limit(1.0, plus, 0.1);
            let state = WaveState::assemble(&params, &branch).unwrap();
            let report = dirac_residual(
                &state,
                &GridSpec::default(),
                &ConventionSpec::printed(),
                DerivativeMode::Analytic,
            )
            .unwrap();
            assert!(
                report.relative_norm < 1e-10,
                "plus={plus}: {}",
                report.relative_norm
            );
        }
    }

    #[test]
    fn finite_differences_converge_at_second_order() {
        let state = desk_state(1.0, 1e-2, 0.05, BranchLabel::SingularPlus);
        let report = dirac_residual(
            &state,
            &GridSpec::default(),
            &ConventionSpec::printed(),
            DerivativeMode::FiniteDifference { step_widths: 1e-3 },
        )
        .unwrap();
        let order = report.convergence_order.unwrap();
        // residual ratio 4 +- 0.5 on halving, i.e. order ~ 2
        let ratio = 2f64.powf(order);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        assert!(!report.cancellation_guard);
    }

    #[test]
    fn residual_linear_in_root_perturbation() {
        let e0 = 1.0;
        let (h, omega) = (1e-2, 0.05);
        let params = NormalizedParams::from_resonance(e0, h, omega).unwrap();
        let problem = CharacteristicProblem::at_singular_momentum(e0, h, omega).unwrap();
        let branches = solve_and_classify(&problem).unwrap();
        let base = *branches
            .iter()
            .find(|b| b.label == BranchLabel::SingularPlus)
            .unwrap();
        let residual_at = |delta: f64| -> f64 {
            let mut b = base;
            b.root += delta;
            b.energy = b.root + b.momentum;
            let state = WaveState::assemble(&params, &b).unwrap();
            dirac_residual(
                &state,
                &GridSpec::default(),
                &ConventionSpec::printed(),
                DerivativeMode::Analytic,
            )
            .unwrap()
            .relative_norm
        };
        let r1 = residual_at(1e-4);
        let r2 = residual_at(5e-5);
        let ratio = r1 / r2;
        assert!((1.6..2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn audit_finds_exactly_one_class() {
        let state = desk_state(1.0, 1e-2, 0.05, BranchLabel::SingularPlus);
        let table = convention_audit(&state, &GridSpec::default()).unwrap();
        assert_eq!(table.rows.len(), 16);
        assert_eq!(table.passing_classes(), 1);
        assert!(table.is_decisive());
        assert_eq!(table.winner(), ConventionSpec::printed());
        // global-sign pairs produce identical residuals
        let all_minus = ConventionSpec::printed().global_flip();
        let r_plus = table
            .rows
            .iter()
            .find(|r| r.convention == ConventionSpec::printed())
            .unwrap()
            .relative_residual;
        let r_minus = table
            .rows
            .iter()
            .find(|r| r.convention == all_minus)
            .unwrap()
            .relative_residual;
        assert!((r_plus - r_minus).abs() <= 1e-12 * r_plus.max(1e-300));
    }

    #[test]
    fn coupling_flip_fails_loudly() {
        let state = desk_state(1.0, 1e-2, 0.05, BranchLabel::SingularPlus);
        let mut convention = ConventionSpec::printed();
        convention.coupling = Sign::Minus;
        let report = dirac_residual(
            &state,
            &GridSpec::default(),
            &convention,
            DerivativeMode::Analytic,
        )
        .unwrap();
        assert!(
            report.relative_norm > 1e-2,
            "flipped coupling residual {}",
            report.relative_norm
        );
    }

    #[test]
    fn residual_invariant_under_slice_shift() {
        // t -> t + delta, z -> z + delta leaves phi unchanged; relative
        // residual must follow
        let state = desk_state(1.0, 1e-2, 0.05, BranchLabel::SingularPlus);
        let grid = GridSpec::default();
        let base_points = grid.points(&state);
        let convention = ConventionSpec::printed();
        let base =
            relative_residual_over(&state, &base_points, &convention, DerivativeMode::Analytic)
                .unwrap()
                .0;
        for delta in [0.37, 5.0, -2.2] {
            let shifted: Vec<FieldPoint> = base_points
                .iter()
                .map(|p| FieldPoint::new(p.t + delta, p.x, p.y, p.z + delta))
                .collect();
            let rel =
                relative_residual_over(&state, &shifted, &convention, DerivativeMode::Analytic)
                    .unwrap()
                    .0;
            assert!((rel - base).abs() < 1e-10, "delta {delta}: {rel} vs {base}");
        }
    }

    #[test]
    fn audit_csv_shape() {
        let state = desk_state(1.0, 1e-2, 0.05, BranchLabel::SingularPlus);
        let table = convention_audit(&state, &GridSpec::default()).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 17); // header + 16 rows
        assert_eq!(lines[0], "time,space,coupling,mass,relative_residual");
    }

    #[test]
    fn equivalence_classes_count_eight() {
        let mut reps: Vec<String> = ConventionSpec::all()
            .into_iter()
            .map(|c| c.class_representative().label())
            .collect();
        reps.sort();
        reps.dedup();
        assert_eq!(reps.len(), 8);
    }
}
