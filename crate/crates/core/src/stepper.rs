//! Fully discrete time stepping.
//!
//! Applying the fractional integral to the semi-discrete problem and
//! discretising it with the convolution weights gives, at every step `n`,
//!
//! ```text
//! M uⁿ + β₀w₀ [A uⁿ + N(uⁿ)uⁿ − Bᵀpⁿ] = M u⁰ + β₀ Σ_{k=0}^{n-1} w_k Fⁿ⁻ᵏ − β₀ Σ_{k=1}^{n-1} w_k rⁿ⁻ᵏ
//! B uⁿ = 0,   mᵀpⁿ = 0
//! ```
//!
//! where `rʲ = A uʲ + N(uʲ)uʲ − Bᵀpʲ` is frozen when step `j` is accepted.
//! The implicit convection term is resolved by Picard iteration with a lagged
//! transport field.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_convection, assemble_forcing, assemble_operators, interpolate, l2_norm_velocity,
    AssembledOperators, CsrMatrix, ElementPair, FieldCoefficients, MixedSpace, TripletBuilder,
};
use crate::frac_quadrature::{compute_weights, QuadratureWeights};
use crate::geometry::build_structured_mesh;
use crate::harness::manufactured::{velocity_profile, ManufacturedSolution};
use crate::saddle::{self, SaddleSystem, DEFAULT_LINEAR_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingMode {
    /// Manufactured forcing and manufactured initial velocity.
    Manufactured,
    /// No forcing, zero initial velocity.
    Zero,
    /// No forcing; the manufactured velocity is used as the initial field.
    FreeDecay,
}

impl std::str::FromStr for ForcingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manufactured" => Ok(Self::Manufactured),
            "zero" => Ok(Self::Zero),
            "free-decay" | "none" => Ok(Self::FreeDecay),
            other => Err(Error::Config(format!("unknown forcing mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub nu: f64,
    pub t_final: f64,
    pub steps: usize,
    pub cells: usize,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub linear_tol: f64,
    pub forcing: ForcingMode,
    pub element: ElementPair,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            nu: 1.5,
            t_final: 1.0,
            steps: 8,
            cells: 8,
            picard_tol: 1e-10,
            picard_max: 50,
            linear_tol: DEFAULT_LINEAR_TOL,
            forcing: ForcingMode::Manufactured,
            element: ElementPair::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(what.to_string()));
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0, 1]");
        }
        if !(self.nu > 0.0) {
            return bad("nu must be positive");
        }
        if !(self.t_final > 0.0) {
            return bad("final time must be positive");
        }
        if self.cells == 0 {
            return bad("mesh needs at least one cell per side");
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return bad("Picard tolerance and iteration cap must be positive");
        }
        if !(self.linear_tol > 0.0) {
            return bad("linear tolerance must be positive");
        }
        Ok(())
    }

    pub fn tau(&self) -> f64 {
        self.t_final / self.steps.max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct AcceptedStep {
    pub field: FieldCoefficients,
    /// `A u + N(u)u − Bᵀp` with Dirichlet rows zeroed; never recomputed.
    pub residual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct HistoryLedger {
    pub initial: FieldCoefficients,
    steps: Vec<AcceptedStep>,
}

impl HistoryLedger {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `u^j` for `j = 0..=len`.
    pub fn field(&self, j: usize) -> &FieldCoefficients {
        if j == 0 {
            &self.initial
        } else {
            &self.steps[j - 1].field
        }
    }

    pub fn step(&self, j: usize) -> &AcceptedStep {
        &self.steps[j - 1]
    }

    pub fn latest(&self) -> &FieldCoefficients {
        self.field(self.len())
    }

    pub fn steps(&self) -> &[AcceptedStep] {
        &self.steps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    pub picard_iterations: usize,
    pub linear_residual: f64,
    /// `‖uⁿ‖_{L²}`
    pub velocity_norm: f64,
    /// Euclidean norm of `B uⁿ`.
    pub divergence_norm: f64,
    /// Euclidean norms of the coefficient vectors.
    pub velocity_coeff_norm: f64,
    pub pressure_coeff_norm: f64,
    pub pressure_mean: f64,
    /// Frozen residual vectors folded into this step's right-hand side.
    pub history_accumulations: usize,
}

pub const DIAGNOSTICS_HEADER: &str = "n,t_n,picard_iters,linear_residual,u_norm,div_norm";

impl StepDiagnostics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:e},{:e},{:e}",
            self.step,
            self.time,
            self.picard_iterations,
            self.linear_residual,
            self.velocity_norm,
            self.divergence_norm
        )
    }
}

pub fn diagnostics_csv(rows: &[StepDiagnostics]) -> String {
    let mut s = String::from(DIAGNOSTICS_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Constrained L² projection of `u0` onto the discretely divergence-free
/// subspace with homogeneous boundary values.
pub fn initialize(
    config: &SolverConfig,
    space: &MixedSpace,
    ops: &AssembledOperators,
    u0: impl Fn(f64, f64) -> [f64; 2],
) -> Result<HistoryLedger> {
    let rhs = assemble_forcing(space, u0);
    let system = SaddleSystem {
        velocity_block: ops.mass.clone(),
        coupling: &ops.divergence,
        coupling_scale: 1.0,
        mean: Some(&ops.mean),
        space,
        rhs_momentum: rhs,
        rhs_continuity: vec![0.0; space.pressure_dofs()],
    };
    let sol = saddle::solve(&system, config.linear_tol)?;
    let mut velocity = sol.velocity;
    space.apply_dirichlet(&mut velocity);
    Ok(HistoryLedger {
        initial: FieldCoefficients {
            velocity,
            pressure: vec![0.0; space.pressure_dofs()],
            time: 0.0,
        },
        steps: Vec::new(),
    })
}

/// Per-run state: operators, weights, cached loads and the ledger.
pub struct Stepper {
    pub config: SolverConfig,
    pub space: MixedSpace,
    pub ops: AssembledOperators,
    pub weights: QuadratureWeights,
    pub ledger: HistoryLedger,
    pub diagnostics: Vec<StepDiagnostics>,
    manufactured: Option<ManufacturedSolution>,
    /// `M u⁰`
    initial_mass: Vec<f64>,
    /// Load vectors `Fʲ`, index `j − 1`.
    loads: Vec<Vec<f64>>,
}

impl Stepper {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let mesh = Arc::new(build_structured_mesh(config.cells));
        let space = MixedSpace::with_element(mesh, config.element);
        let ops = assemble_operators(&space, config.nu);
        let manufactured = match config.forcing {
            ForcingMode::Manufactured => Some(ManufacturedSolution::new(config.alpha, config.nu)?),
            _ => None,
        };
        let ledger = match config.forcing {
            ForcingMode::Zero => initialize(&config, &space, &ops, |_, _| [0.0, 0.0])?,
            _ => initialize(&config, &space, &ops, velocity_profile)?,
        };
        Self::with_ledger(config, space, ops, ledger, manufactured)
    }

    /// Starts from an externally prepared ledger holding only `u⁰`.
    pub fn with_ledger(
        config: SolverConfig,
        space: MixedSpace,
        ops: AssembledOperators,
        ledger: HistoryLedger,
        manufactured: Option<ManufacturedSolution>,
    ) -> Result<Self> {
        config.validate()?;
        let weights = compute_weights(config.alpha, config.steps.max(1), config.tau())?;
        let initial_mass = ops.mass.matvec(&ledger.initial.velocity);
        Ok(Self {
            config,
            space,
            ops,
            weights,
            ledger,
            diagnostics: Vec::new(),
            manufactured,
            initial_mass,
            loads: Vec::new(),
        })
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.weights.tau
    }

    fn load(&mut self, j: usize) -> Result<&[f64]> {
        while self.loads.len() < j {
            let idx = self.loads.len() + 1;
            let t = self.time(idx);
            let load = match &self.manufactured {
                Some(ms) => assemble_forcing(&self.space, ms.forcing_at(t)?),
                None => vec![0.0; self.space.velocity_dofs()],
            };
            self.loads.push(load);
        }
        Ok(&self.loads[j - 1])
    }

    /// Right-hand side of step `n` and the number of residuals accumulated.
    fn history_rhs(&mut self, n: usize) -> Result<(Vec<f64>, usize)> {
        let beta0 = self.weights.beta0;
        let mut rhs = self.initial_mass.clone();
        for k in 0..n {
            let w = beta0 * self.weights.weights[k];
            let load = self.load(n - k)?;
            rhs.iter_mut().zip(load).for_each(|(r, f)| *r += w * f);
        }
        let mut count = 0;
        for k in 1..n {
            let w = beta0 * self.weights.weights[k];
            let r = &self.ledger.step(n - k).residual;
            rhs.iter_mut().zip(r).for_each(|(acc, v)| *acc -= w * v);
            count += 1;
        }
        self.space.apply_dirichlet(&mut rhs);
        Ok((rhs, count))
    }

    fn velocity_block(&self, convection: &CsrMatrix, c: f64) -> CsrMatrix {
        let n = self.space.velocity_dofs();
        let mut t = TripletBuilder::with_capacity(
            n,
            n,
            self.ops.mass.nnz() + self.ops.stiffness.nnz() + convection.nnz(),
        );
        for (i, j, v) in self.ops.mass.triplets() {
            t.push(i, j, v);
        }
        for (i, j, v) in self.ops.stiffness.triplets() {
            t.push(i, j, c * v);
        }
        for (i, j, v) in convection.triplets() {
            t.push(i, j, c * v);
        }
        t.build()
    }

    fn momentum_residual(&self, field: &FieldCoefficients) -> Vec<f64> {
        let n = assemble_convection(&self.space, &field.velocity);
        let mut r = self.ops.stiffness.matvec(&field.velocity);
        n.matvec_acc(&field.velocity, 1.0, &mut r);
        let bt = self.ops.divergence.transpose_matvec(&field.pressure);
        r.iter_mut().zip(&bt).for_each(|(a, b)| *a -= b);
        self.space.apply_dirichlet(&mut r);
        r
    }

    /// Computes and accepts step `len + 1`.
    pub fn advance(&mut self) -> Result<&StepDiagnostics> {
        let n = self.ledger.len() + 1;
        if n > self.weights.len() {
            return Err(Error::Domain(format!(
                "step {n} exceeds the {} precomputed weights",
                self.weights.len()
            )));
        }
        let (rhs, history_accumulations) = self.history_rhs(n)?;
        let c = self.weights.beta0 * self.weights.weights[0];
        let mut iterate = self.ledger.latest().velocity.clone();
        let mut accepted = None;
        let mut increment = f64::INFINITY;
        for iteration in 1..=self.config.picard_max {
            let convection = assemble_convection(&self.space, &iterate);
            let system = SaddleSystem {
                velocity_block: self.velocity_block(&convection, c),
                coupling: &self.ops.divergence,
                coupling_scale: c,
                mean: Some(&self.ops.mean),
                space: &self.space,
                rhs_momentum: rhs.clone(),
                rhs_continuity: vec![0.0; self.space.pressure_dofs()],
            };
            let sol = saddle::solve(&system, self.config.linear_tol)?;
            let diff: Vec<f64> = sol.velocity.iter().zip(&iterate).map(|(a, b)| a - b).collect();
            let size = norm(&sol.velocity);
            increment = if size > 0.0 { norm(&diff) / size } else { norm(&diff) };
            iterate = sol.velocity.clone();
            if increment < self.config.picard_tol {
                accepted = Some((sol, iteration));
                break;
            }
        }
        let Some((sol, picard_iterations)) = accepted else {
            return Err(Error::PicardNonConvergence {
                iterations: self.config.picard_max,
                increment,
            });
        };
        let mut field = FieldCoefficients {
            velocity: sol.velocity,
            pressure: sol.pressure,
            time: self.time(n),
        };
        self.space.apply_dirichlet(&mut field.velocity);
        let residual = self.momentum_residual(&field);
        let diag = StepDiagnostics {
            step: n,
            time: field.time,
            picard_iterations,
            linear_residual: sol.relative_residual,
            velocity_norm: l2_norm_velocity(&self.ops, &field.velocity),
            divergence_norm: norm(&self.ops.divergence.matvec(&field.velocity)),
            velocity_coeff_norm: norm(&field.velocity),
            pressure_coeff_norm: norm(&field.pressure),
            pressure_mean: self.space.pressure_mean(&field.pressure),
            history_accumulations,
        };
        self.ledger.steps.push(AcceptedStep { field, residual });
        self.diagnostics.push(diag);
        Ok(self.diagnostics.last().unwrap())
    }

    /// Advances until `config.steps` steps are accepted.
    pub fn run_to_end(&mut self) -> Result<()> {
        while self.ledger.len() < self.config.steps {
            let step = self.ledger.len() + 1;
            self.advance().map_err(|e| Error::Step {
                step,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }

    /// Norm of `Σ_{k=0}^{n-1} w_k B u^{n-k}`, the summed continuity residual.
    pub fn summed_constraint_residual(&self, n: usize) -> f64 {
        let mut acc = vec![0.0; self.space.pressure_dofs()];
        for k in 0..n {
            let w = self.weights.weights[k];
            self.ops
                .divergence
                .matvec_acc(&self.ledger.field(n - k).velocity, w, &mut acc);
        }
        norm(&acc)
    }

    /// `‖u^j − u(t_j)‖`, `‖p^j − p(t_j)‖` per component against the manufactured pair.
    pub fn manufactured_error(&self, j: usize) -> [f64; 3] {
        let field = self.ledger.field(j);
        let t = self.time(j);
        crate::fem::l2_error(&self.space, field, |x, y| {
            let (a, b, c) = crate::harness::manufactured_fields(x, y, t);
            [a, b, c]
        })
    }
}

/// Result of a full run.
pub struct Trajectory {
    pub stepper: Stepper,
}

impl Trajectory {
    pub fn ledger(&self) -> &HistoryLedger {
        &self.stepper.ledger
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.stepper.diagnostics
    }
}

pub fn run(config: SolverConfig) -> Result<Trajectory> {
    let mut stepper = Stepper::new(config)?;
    stepper.run_to_end()?;
    Ok(Trajectory { stepper })
}

/// Interpolated manufactured field at time `t`, for diagnostics and tests.
pub fn manufactured_interpolant(space: &MixedSpace, t: f64) -> FieldCoefficients {
    let e = (-t).exp();
    interpolate(
        space,
        |x, y| velocity_profile(x, y).map(|v| v * e),
        |x, y| (x * x - y * y) * e,
        t,
    )
}
