//! `spintrap` — build, certify and measure localized Dirac states, and
//! run g-factor sweep experiments over the field-ratio grid.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use spintrap_cli::{extract_g, parse_key_values, run_sweep, SweepConfig};
use spintrap_core::characteristic::{
    singular_momentum, solve_and_classify, BranchLabel, CharacteristicProblem,
};
use spintrap_core::observables::{
    dynamical_expectations, localization_report, spin_momentum_ratio, suppression_exponent,
    QuadratureSpec,
};
use spintrap_core::residual::{
    convention_audit, dirac_residual, ConventionSpec, DerivativeMode, GridSpec,
};
use spintrap_core::units::{NormalizedParams, UnitsContext};
use spintrap_core::wavefunction::WaveState;

#[derive(Parser)]
#[command(
    name = "spintrap",
    version,
    about = "Localized Dirac states in a circularly polarized wave: solve, certify, measure, sweep"
)]
struct Cli {
    /// Flat key-value config file (sweep parameters, constants overrides).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for tabular reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Compute quadrature columns (sweep) at the desk-scale omega instead
    /// of the physical one.
    #[arg(long, global = true)]
    desk_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// One dimensionless state specification shared by several subcommands.
#[derive(Args, Clone)]
struct StateArgs {
    /// Resonance parameter e0 = 2/g (defaults to 1 when neither --e0 nor
    /// --g is given).
    #[arg(long)]
    e0: Option<f64>,
    /// g-factor; alternative to --e0.
    #[arg(long, conflicts_with = "e0")]
    g: Option<f64>,
    /// Dimensionless wave amplitude h.
    #[arg(long, default_value_t = 1e-3)]
    wave_amp: f64,
    /// Dimensionless propagation constant Omega.
    #[arg(long, default_value_t = 1e-3)]
    omega: f64,
    /// Rotating-frame momentum; defaults to the singular value.
    #[arg(long)]
    momentum: Option<f64>,
}

impl StateArgs {
    fn resonance(&self) -> f64 {
        match (self.e0, self.g) {
            (Some(e0), _) => e0,
            (None, Some(g)) => 2.0 / g,
            (None, None) => 1.0,
        }
    }

    fn problem(&self) -> Result<CharacteristicProblem> {
        let e0 = self.resonance();
        let p = self
            .momentum
            .unwrap_or_else(|| singular_momentum(e0, self.omega));
        Ok(CharacteristicProblem::new(
            e0,
            self.wave_amp,
            p,
            self.omega,
        )?)
    }

    fn params(&self) -> Result<NormalizedParams> {
        Ok(NormalizedParams::from_resonance(
            self.resonance(),
            self.wave_amp,
            self.omega,
        )?)
    }

    fn state(&self, branch: &str) -> Result<WaveState> {
        let want = parse_branch(branch)?;
        let branches = solve_and_classify(&self.problem()?)?;
        let solution = branches.iter().find(|b| b.label == want).ok_or_else(|| {
            anyhow!(
                "branch {branch:?} not present; labels here: {}",
                branches
                    .iter()
                    .map(|b| b.label.as_str())
                    .collect::<Vec<_>>()
                    .join("/")
            )
        })?;
        Ok(WaveState::assemble(&self.params()?, solution)?)
    }
}

fn parse_branch(s: &str) -> Result<BranchLabel> {
    match s {
        "singular+" | "singular-plus" => Ok(BranchLabel::SingularPlus),
        "singular-" | "singular-minus" => Ok(BranchLabel::SingularMinus),
        "regular" => Ok(BranchLabel::Regular),
        other => bail!("unknown branch {other:?} (singular+, singular-, regular)"),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the characteristic cubic and classify its roots.
    Solve(StateArgs),
    /// Assemble a state and emit its full report.
    Wavefunction {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value = "singular+")]
        branch: String,
    },
    /// Apply the Dirac operator over a sample grid.
    Residual {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value = "singular+")]
        branch: String,
        /// analytic | fd
        #[arg(long, default_value = "analytic")]
        mode: String,
        /// Finite-difference step in envelope widths.
        #[arg(long, default_value_t = 1e-3)]
        step_widths: f64,
        #[arg(long, default_value_t = 5)]
        grid_nx: usize,
        #[arg(long, default_value_t = 5)]
        grid_ny: usize,
        #[arg(long, default_value_t = 3)]
        grid_nt: usize,
        #[arg(long, default_value_t = 3)]
        grid_nz: usize,
        /// Transverse half-extent in envelope widths.
        #[arg(long, default_value_t = 2.0)]
        extent: f64,
    },
    /// Rank all 16 operator sign conventions on a state.
    Audit {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value = "singular+")]
        branch: String,
    },
    /// Quadrature expectation values against the closed forms.
    Observe {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value = "singular+")]
        branch: String,
        /// Wave phase(s) to evaluate at; repeatable.
        #[arg(long = "phase", default_values_t = [std::f64::consts::FRAC_PI_4])]
        phases: Vec<f64>,
        #[arg(long, default_value_t = 48)]
        order: usize,
        /// Physical wavelength (cm); adds the suppression-exponent block.
        #[arg(long)]
        wavelength_cm: Option<f64>,
    },
    /// Run the ratio sweep from the config file (flags override).
    Sweep {
        #[arg(long)]
        e0_min: Option<f64>,
        #[arg(long)]
        e0_max: Option<f64>,
        #[arg(long)]
        e0_count: Option<usize>,
        #[arg(long)]
        wave_amp: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        wavelength_cm: Option<f64>,
        #[arg(long)]
        branch: Option<String>,
        #[arg(long)]
        quad_order: Option<usize>,
    },
    /// Invert a monotone sweep column to a g-factor estimate.
    ExtractG {
        /// Sweep CSV produced by `spintrap sweep`.
        #[arg(long)]
        csv: PathBuf,
        /// Column to invert.
        #[arg(long)]
        column: String,
        /// Observed value of that column.
        #[arg(long)]
        value: f64,
        /// Restrict to one branch label when the CSV mixes branches.
        #[arg(long)]
        branch: Option<String>,
    },
}

fn emit(cli_out: &Option<PathBuf>, text: &str) -> Result<()> {
    match cli_out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn pretty(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve(state) => {
            let problem = state.problem()?;
            let branches = solve_and_classify(&problem)?;
            match cli.format {
                Format::Json => emit(
                    &cli.out,
                    &pretty(&json!({"problem": problem, "branches": branches}))?,
                )?,
                Format::Csv => {
                    let mut csv =
                        String::from("branch,root,momentum,energy,root_residual,converged\n");
                    for b in &branches {
                        csv.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            b.label.as_str(),
                            b.root,
                            b.momentum,
                            b.energy,
                            b.root_residual,
                            b.converged
                        ));
                    }
                    emit(&cli.out, &csv)?;
                }
            }
            Ok(0)
        }
        Command::Wavefunction { state, branch } => {
            if cli.format == Format::Csv {
                bail!("wavefunction reports are JSON only");
            }
            let st = state.state(&branch)?;
            emit(&cli.out, &pretty(&st.report())?)?;
            Ok(0)
        }
        Command::Residual {
            state,
            branch,
            mode,
            step_widths,
            grid_nx,
            grid_ny,
            grid_nt,
            grid_nz,
            extent,
        } => {
            if cli.format == Format::Csv {
                bail!("residual reports are JSON only");
            }
            let st = state.state(&branch)?;
            let grid = GridSpec {
                nx: grid_nx,
                ny: grid_ny,
                nt: grid_nt,
                nz: grid_nz,
                extent_widths: extent,
            };
            let mode = match mode.as_str() {
                "analytic" => DerivativeMode::Analytic,
                "fd" => DerivativeMode::FiniteDifference { step_widths },
                other => bail!("unknown mode {other:?} (analytic, fd)"),
            };
            let report = dirac_residual(&st, &grid, &ConventionSpec::printed(), mode)?;
            emit(&cli.out, &pretty(&report)?)?;
            Ok(0)
        }
        Command::Audit { state, branch } => {
            let st = state.state(&branch)?;
            let table = convention_audit(&st, &GridSpec::default())?;
            match cli.format {
                Format::Json => emit(&cli.out, &pretty(&table)?)?,
                Format::Csv => emit(&cli.out, &table.to_csv())?,
            }
            Ok(0)
        }
        Command::Observe {
            state,
            branch,
            phases,
            order,
            wavelength_cm,
        } => {
            let st = state.state(&branch)?;
            let spec = QuadratureSpec { order };
            let localization = localization_report(&st, &spec)?;
            let g = st.params().g_factor();
            let mut blocks = Vec::new();
            for &phase in &phases {
                let dynamical = dynamical_expectations(&st, phase, &spec)?;
                let ratio = spin_momentum_ratio(&dynamical, g).ok();
                blocks.push((phase, dynamical, ratio));
            }
            let suppression = match wavelength_cm {
                Some(lambda) => {
                    let ctx = UnitsContext::electron(lambda)?;
                    // physical-scale envelope for the same resonance and
                    // branch sign
                    let omega = ctx.propagation_constant();
                    let params = NormalizedParams::from_resonance(
                        st.params().resonance(),
                        st.params().wave_amp(),
                        omega,
                    )?;
                    let problem = CharacteristicProblem::at_singular_momentum(
                        params.resonance(),
                        params.wave_amp(),
                        omega,
                    )?;
                    let branches = solve_and_classify(&problem)?;
                    let want = st.branch().label;
                    branches
                        .iter()
                        .find(|b| b.label == want)
                        .map(|b| {
                            spintrap_core::wavefunction::envelope_params(&params, b)
                                .map_err(anyhow::Error::from)
                                .and_then(|env| {
                                    suppression_exponent(&env, &ctx).map_err(anyhow::Error::from)
                                })
                        })
                        .transpose()?
                }
                None => None,
            };
            match cli.format {
                Format::Json => {
                    let report = json!({
                        "state": st.report(),
                        "localization": localization,
                        "dynamical": blocks.iter().map(|(phase, d, r)| json!({
                            "phase": phase,
                            "expectations": d,
                            "spin_momentum_ratio": r,
                        })).collect::<Vec<_>>(),
                        "suppression": suppression,
                    });
                    emit(&cli.out, &pretty(&report)?)?;
                }
                Format::Csv => {
                    let mut csv = String::from(
                        "e0,g,branch,phase,order,norm,center_xt,center_yt,var_xt,var_yt,\
                         diameter,diameter_lambda,sigma_x_px,sigma_y_py,energy_time_deriv,\
                         energy_hamiltonian,px_canonical,py_canonical,pz_canonical,px_kinetic,\
                         py_kinetic,pz_kinetic,transverse_canonical,transverse_kinetic,\
                         s1,s2,s3,spin_amplitude,ratio,ratio_target,budget\n",
                    );
                    for (phase, d, r) in &blocks {
                        csv.push_str(&format!(
                            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                            st.params().resonance(),
                            g,
                            st.branch().label.as_str(),
                            phase,
                            order,
                            localization.norm,
                            localization.center.0,
                            localization.center.1,
                            localization.variances.0,
                            localization.variances.1,
                            localization.diameter,
                            localization.diameter_lambda,
                            localization.sigma_x_px,
                            localization.sigma_y_py,
                            d.energy_time_deriv,
                            d.energy_hamiltonian,
                            d.momentum_canonical[0],
                            d.momentum_canonical[1],
                            d.momentum_canonical[2],
                            d.momentum_kinetic[0],
                            d.momentum_kinetic[1],
                            d.momentum_kinetic[2],
                            d.transverse_momentum_canonical,
                            d.transverse_momentum_kinetic,
                            d.spin[0],
                            d.spin[1],
                            d.spin[2],
                            d.spin_amplitude,
                            r.as_ref().map(|x| x.ratio.to_string()).unwrap_or_default(),
                            r.as_ref().map(|x| x.target.to_string()).unwrap_or_default(),
                            d.budget,
                        ));
                    }
                    emit(&cli.out, &csv)?;
                }
            }
            Ok(0)
        }
        Command::Sweep {
            e0_min,
            e0_max,
            e0_count,
            wave_amp,
            omega,
            wavelength_cm,
            branch,
            quad_order,
        } => {
            let mut config = match &cli.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    SweepConfig::from_map(&parse_key_values(&text)?)?
                }
                None => SweepConfig::default(),
            };
            // flags win over the file
            if let Some(v) = e0_min {
                config.e0_min = v;
            }
            if let Some(v) = e0_max {
                config.e0_max = v;
            }
            if let Some(v) = e0_count {
                config.e0_count = v;
            }
            if let Some(v) = wave_amp {
                config.wave_amp = v;
            }
            if let Some(v) = omega {
                config.omega = v;
            }
            if let Some(v) = wavelength_cm {
                config.wavelength_cm = v;
            }
            if let Some(v) = branch {
                config.branch = v.parse().map_err(|e: String| anyhow!(e))?;
            }
            if let Some(v) = quad_order {
                config.quad_order = v;
            }
            if cli.desk_scale {
                config.desk_scale = true;
            }
            config.validate()?;
            let out = run_sweep(&config)?;
            emit(&cli.out, &out.csv)?;
            // summary goes to stderr so piped CSV stays clean
            eprintln!("{}", serde_json::to_string_pretty(&out.summary)?);
            Ok(if out.failures > 0 { 2 } else { 0 })
        }
        Command::ExtractG {
            csv,
            column,
            value,
            branch,
        } => {
            let text = std::fs::read_to_string(&csv)
                .with_context(|| format!("reading {}", csv.display()))?;
            let got = extract_g(&text, &column, value, branch.as_deref())?;
            emit(&cli.out, &pretty(&got)?)?;
            Ok(0)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
