//! Convergence studies against the manufactured solution.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fem::{ElementPair, FieldCoefficients, MixedSpace};
use crate::saddle::DEFAULT_LINEAR_TOL;
use crate::stepper::{ForcingMode, SolverConfig, Stepper};

pub const REPORT_HEADER: &str = "level,h_or_tau,err_u1,err_u2,err_p,rate_u1,rate_u2,rate_p";

/// `|ln(e_f / e_c) / ln(N_f / N_c)|`
pub fn convergence_rate(e_fine: f64, e_coarse: f64, n_fine: f64, n_coarse: f64) -> Result<f64> {
    if !(e_fine > 0.0 && e_coarse > 0.0 && n_fine > 0.0 && n_coarse > 0.0) {
        return Err(Error::Domain(format!(
            "rate inputs must be positive (errors {e_fine}, {e_coarse}; sizes {n_fine}, {n_coarse})"
        )));
    }
    Ok(((e_fine / e_coarse).ln() / (n_fine / n_coarse).ln()).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyAxis {
    /// Levels are mesh cells per side.
    Space,
    /// Levels are time-step counts.
    Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyLevel {
    pub level: usize,
    pub h_or_tau: f64,
    /// Final-time `[u₁, u₂, p]` L² errors.
    pub errors: [f64; 3],
    pub max_picard: usize,
    /// `max_n ‖B uⁿ‖ / ‖uⁿ‖` over the run (coefficient norms).
    pub max_divergence_ratio: f64,
    /// `max_n |mᵀpⁿ| / ‖pⁿ‖` over the run.
    pub max_mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub axis: StudyAxis,
    pub alpha: f64,
    pub levels: Vec<StudyLevel>,
    /// Rates between consecutive levels, `[u₁, u₂, p]`.
    pub rates: Vec<[f64; 3]>,
}

impl ErrorReport {
    pub fn new(axis: StudyAxis, alpha: f64) -> Self {
        Self {
            axis,
            alpha,
            levels: Vec::new(),
            rates: Vec::new(),
        }
    }

    pub fn push(&mut self, level: StudyLevel) -> Result<()> {
        if let Some(prev) = self.levels.last() {
            let mut rate = [0.0; 3];
            for (k, r) in rate.iter_mut().enumerate() {
                *r = convergence_rate(level.errors[k], prev.errors[k], level.level as f64, prev.level as f64)?;
            }
            self.rates.push(rate);
        }
        self.levels.push(level);
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for (i, l) in self.levels.iter().enumerate() {
            let _ = write!(
                s,
                "{},{:?},{:e},{:e},{:e}",
                l.level, l.h_or_tau, l.errors[0], l.errors[1], l.errors[2]
            );
            match i.checked_sub(1).map(|k| self.rates[k]) {
                Some(r) => {
                    let _ = writeln!(s, ",{:.4},{:.4},{:.4}", r[0], r[1], r[2]);
                }
                None => s.push_str(",,,\n"),
            }
        }
        s
    }
}

/// What temporal errors are measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeErrorMeasure {
    /// The manufactured solution; includes the spatial error of the mesh.
    Exact,
    /// A run on the same mesh with `factor` times the finest step count.
    Reference { factor: usize },
}

impl Default for TimeErrorMeasure {
    fn default() -> Self {
        Self::Reference { factor: 16 }
    }
}

impl std::str::FromStr for TimeErrorMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Self::Exact);
        }
        match s.parse::<usize>() {
            Ok(factor) if factor >= 2 => Ok(Self::Reference { factor }),
            _ => Err(Error::Config(format!(
                "time reference must be 'exact' or a refinement factor ≥ 2, got '{s}'"
            ))),
        }
    }
}

/// Parameters shared by both studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub nu: f64,
    pub t_final: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linear_tol: f64,
    pub element: ElementPair,
    pub time_measure: TimeErrorMeasure,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            nu: 1.5,
            t_final: 1.0,
            picard_tol: 1e-10,
            picard_max: 50,
            linear_tol: DEFAULT_LINEAR_TOL,
            element: ElementPair::default(),
            time_measure: TimeErrorMeasure::default(),
        }
    }
}

fn run_level(config: SolverConfig) -> Result<Stepper> {
    let mut stepper = Stepper::new(config)?;
    stepper.run_to_end()?;
    Ok(stepper)
}

fn summarize(stepper: &Stepper, errors: [f64; 3], level: usize, h_or_tau: f64) -> StudyLevel {
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    let d = &stepper.diagnostics;
    StudyLevel {
        level,
        h_or_tau,
        errors,
        max_picard: d.iter().map(|s| s.picard_iterations).max().unwrap_or(0),
        max_divergence_ratio: d
            .iter()
            .map(|s| ratio(s.divergence_norm, s.velocity_coeff_norm))
            .fold(0.0, f64::max),
        max_mean_ratio: d
            .iter()
            .map(|s| ratio(s.pressure_mean.abs(), s.pressure_coeff_norm))
            .fold(0.0, f64::max),
    }
}

fn final_error(stepper: &Stepper) -> [f64; 3] {
    stepper.manufactured_error(stepper.ledger.len())
}

/// Component L² norms of the difference of two fields on one space.
fn field_difference(space: &MixedSpace, a: &FieldCoefficients, b: &FieldCoefficients) -> [f64; 3] {
    let sub = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect();
    let diff = FieldCoefficients {
        velocity: sub(&a.velocity, &b.velocity),
        pressure: sub(&a.pressure, &b.pressure),
        time: a.time,
    };
    crate::fem::l2_error(space, &diff, |_, _| [0.0; 3])
}

fn steps_for(t_final: f64, tau: f64) -> Result<usize> {
    let steps = (t_final / tau).round();
    if !(tau > 0.0) || steps < 1.0 || ((steps * tau) - t_final).abs() > 1e-9 * t_final {
        return Err(Error::Config(format!(
            "time step {tau} does not divide the final time {t_final}"
        )));
    }
    Ok(steps as usize)
}

fn base_config(alpha: f64, s: &StudySettings) -> SolverConfig {
    SolverConfig {
        alpha,
        nu: s.nu,
        t_final: s.t_final,
        picard_tol: s.picard_tol,
        picard_max: s.picard_max,
        linear_tol: s.linear_tol,
        forcing: ForcingMode::Manufactured,
        element: s.element,
        ..SolverConfig::default()
    }
}

/// Mesh refinement at a fixed time step.
pub fn run_space_study(alpha: f64, levels: &[usize], tau: f64, settings: &StudySettings) -> Result<ErrorReport> {
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("mesh levels must be strictly increasing".into()));
    }
    let steps = steps_for(settings.t_final, tau)?;
    let mut report = ErrorReport::new(StudyAxis::Space, alpha);
    for &n in levels {
        let config = SolverConfig {
            cells: n,
            steps,
            ..base_config(alpha, settings)
        };
        let h = 2f64.sqrt() / n as f64;
        let stepper = run_level(config)?;
        report.push(summarize(&stepper, final_error(&stepper), n, h))?;
    }
    Ok(report)
}

/// Time-step refinement on a fixed mesh, measured per `settings.time_measure`.
pub fn run_time_study(
    alpha: f64,
    step_counts: &[usize],
    cells: usize,
    settings: &StudySettings,
) -> Result<ErrorReport> {
    if step_counts.windows(2).any(|w| w[1] <= w[0]) || step_counts.first() == Some(&0) {
        return Err(Error::Config("step counts must be positive and strictly increasing".into()));
    }
    let config = |steps| SolverConfig {
        cells,
        steps,
        ..base_config(alpha, settings)
    };
    let reference = match settings.time_measure {
        TimeErrorMeasure::Exact => None,
        TimeErrorMeasure::Reference { factor } => {
            let finest = step_counts.last().copied().unwrap_or(1);
            Some(run_level(config(factor * finest))?)
        }
    };
    let mut report = ErrorReport::new(StudyAxis::Time, alpha);
    for &steps in step_counts {
        let stepper = run_level(config(steps))?;
        let errors = match &reference {
            None => final_error(&stepper),
            Some(r) => field_difference(&stepper.space, stepper.ledger.latest(), r.ledger.latest()),
        };
        let tau = settings.t_final / steps as f64;
        report.push(summarize(&stepper, errors, steps, tau))?;
    }
    Ok(report)
}
