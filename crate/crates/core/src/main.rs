#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tfns::fem::ElementPair;
use tfns::frac_quadrature::compute_weights;
use tfns::harness::export::{export_fields, ExportFormat};
use tfns::harness::{run_space_study, run_time_study, ErrorReport, StudySettings, TimeErrorMeasure};
use tfns::saddle::DEFAULT_LINEAR_TOL;
use tfns::stepper::{diagnostics_csv, ForcingMode, SolverConfig, Stepper};
use tfns::{Error, Result};

/// Time-fractional Navier–Stokes solver and verification harness.
#[derive(Parser, Debug)]
#[command(name = "tfns", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration and export diagnostics and fields.
    #[command(args_override_self = true)]
    Run {
        #[command(flatten)]
        common: Common,
        /// manufactured, zero or free-decay
        #[arg(long, default_value = "manufactured")]
        forcing: ForcingMode,
    },
    /// Mesh refinement study at a fixed time step.
    #[command(args_override_self = true)]
    ConvergeSpace {
        #[command(flatten)]
        common: Common,
        /// Cells per side at each level.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        levels: Vec<usize>,
    },
    /// Time-step refinement study on a fixed mesh.
    #[command(args_override_self = true)]
    ConvergeTime {
        #[command(flatten)]
        common: Common,
        /// Step counts at each level.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        steps: Vec<usize>,
        /// `exact`, or the refinement factor of the reference run.
        #[arg(long, default_value = "16")]
        time_reference: TimeErrorMeasure,
    },
    /// Print `k,w_k,partial_sum` for the convolution weights.
    #[command(args_override_self = true)]
    Weights {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.5)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    t_final: f64,
    /// Number of time steps.
    #[arg(long)]
    nt: Option<usize>,
    /// Cells per side of the mesh.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    picard_tol: f64,
    #[arg(long, default_value_t = 50)]
    picard_max: usize,
    #[arg(long, default_value_t = DEFAULT_LINEAR_TOL)]
    linear_tol: f64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// vtk or csv
    #[arg(long, default_value = "vtk")]
    format: ExportFormat,
    /// Time step; takes precedence over `--nt`.
    #[arg(long)]
    tau_override: Option<f64>,
    /// iso-p2p1 or taylor-hood
    #[arg(long, default_value = "iso-p2p1")]
    element: ElementPair,
    /// key=value file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> StudySettings {
        StudySettings {
            nu: self.nu,
            t_final: self.t_final,
            picard_tol: self.picard_tol,
            picard_max: self.picard_max,
            linear_tol: self.linear_tol,
            element: self.element,
            ..StudySettings::default()
        }
    }

    fn steps(&self, default: usize) -> Result<usize> {
        match (self.tau_override, self.nt) {
            (Some(tau), _) => {
                let steps = (self.t_final / tau).round();
                if !(tau > 0.0) || steps < 1.0 || (steps * tau - self.t_final).abs() > 1e-9 * self.t_final {
                    return Err(Error::Config(format!(
                        "--tau-override {tau} does not divide --t-final {}",
                        self.t_final
                    )));
                }
                Ok(steps as usize)
            }
            (None, Some(nt)) => Ok(nt),
            (None, None) => Ok(default),
        }
    }
}

/// Turns `key = value` lines into `--key value` arguments.
fn config_args(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "{}:{}: expected key=value, got '{line}'",
                path.display(),
                i + 1
            )));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(Error::Config(format!("{}: nested config files are not supported", path.display())));
        }
        out.push(format!("--{key}"));
        out.push(value.trim().to_string());
    }
    Ok(out)
}

/// Splices config-file entries in front of the command-line flags.
fn expand_args(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else if a == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    if args.len() < 2 {
        return Ok(args);
    }
    let mut out = args[..2].to_vec();
    out.extend(config_args(&path)?);
    out.extend_from_slice(&args[2..]);
    Ok(out)
}

fn write(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn report_out(common: &Common, report: &ErrorReport, name: &str) -> Result<()> {
    prepare_dir(&common.out_dir)?;
    let csv = report.to_csv();
    write(&common.out_dir.join(name), &csv)?;
    print!("{csv}");
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, forcing } => {
            let config = SolverConfig {
                alpha: common.alpha,
                nu: common.nu,
                t_final: common.t_final,
                steps: common.steps(8)?,
                cells: common.n.unwrap_or(8),
                picard_tol: common.picard_tol,
                picard_max: common.picard_max,
                linear_tol: common.linear_tol,
                forcing,
                element: common.element,
            };
            let mut stepper = Stepper::new(config)?;
            stepper.run_to_end()?;
            prepare_dir(&common.out_dir)?;
            write(
                &common.out_dir.join("diagnostics.csv"),
                &diagnostics_csv(&stepper.diagnostics),
            )?;
            let ext = common.format.extension();
            let ledger = &stepper.ledger;
            export_fields(
                &ledger.initial,
                &stepper.space,
                &common.out_dir.join(format!("fields_initial.{ext}")),
                common.format,
            )?;
            export_fields(
                ledger.latest(),
                &stepper.space,
                &common.out_dir.join(format!("fields_final.{ext}")),
                common.format,
            )?;
            if let Some(last) = stepper.diagnostics.last() {
                println!(
                    "steps={} t={} picard_iters={} u_norm={:e} div_norm={:e}",
                    last.step, last.time, last.picard_iterations, last.velocity_norm, last.divergence_norm
                );
            }
            if forcing == ForcingMode::Manufactured {
                let e = stepper.manufactured_error(ledger.len());
                println!("err_u1={:e} err_u2={:e} err_p={:e}", e[0], e[1], e[2]);
            }
            Ok(())
        }
        Command::ConvergeSpace { common, levels } => {
            let steps = common.steps((8.0 * common.t_final).round().max(1.0) as usize)?;
            let tau = common.t_final / steps as f64;
            let report = run_space_study(common.alpha, &levels, tau, &common.settings())?;
            report_out(&common, &report, "report_space.csv")
        }
        Command::ConvergeTime {
            common,
            steps,
            time_reference,
        } => {
            let settings = StudySettings {
                time_measure: time_reference,
                ..common.settings()
            };
            let report = run_time_study(common.alpha, &steps, common.n.unwrap_or(16), &settings)?;
            report_out(&common, &report, "report_time.csv")
        }
        Command::Weights { alpha, count, .. } => {
            let w = compute_weights(alpha, count, 1.0)?;
            let mut out = String::from("k,w_k,partial_sum\n");
            for (k, (wk, s)) in w.weights.iter().zip(w.partial_sums()).enumerate() {
                out.push_str(&format!("{k},{wk:?},{s:?}\n"));
            }
            print!("{out}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(args);
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
