//! Closed-form manufactured solution on the unit square.
//!
//! With `g(s) = s²(s−1)²` the velocity is the curl of the stream function
//! `ψ = g(x) g(y)`:
//!
//! ```text
//! u₁ = g(x) g'(y) e^{−t},   u₂ = −g'(x) g(y) e^{−t},   p = (x² − y²) e^{−t}
//! ```

use crate::error::Result;
use crate::frac_quadrature::CaputoOracle;

/// Accuracy demanded of the Caputo factor when synthesising forcing.
pub const FORCING_ORACLE_TOL: f64 = 1e-12;

fn g(s: f64) -> f64 {
    let q = s * (s - 1.0);
    q * q
}

fn g1(s: f64) -> f64 {
    2.0 * s * (s - 1.0) * (2.0 * s - 1.0)
}

fn g2(s: f64) -> f64 {
    12.0 * s * s - 12.0 * s + 2.0
}

fn g3(s: f64) -> f64 {
    24.0 * s - 12.0
}

/// Spatial velocity profile `U(x, y)`.
pub fn velocity_profile(x: f64, y: f64) -> [f64; 2] {
    [g(x) * g1(y), -g1(x) * g(y)]
}

pub fn pressure_profile(x: f64, y: f64) -> f64 {
    x * x - y * y
}

/// Velocity gradient `[[∂ₓU₁, ∂ᵧU₁], [∂ₓU₂, ∂ᵧU₂]]`.
pub fn velocity_gradient(x: f64, y: f64) -> [[f64; 2]; 2] {
    [
        [g1(x) * g1(y), g(x) * g2(y)],
        [-g2(x) * g(y), -g1(x) * g1(y)],
    ]
}

pub fn velocity_laplacian(x: f64, y: f64) -> [f64; 2] {
    [
        g2(x) * g1(y) + g(x) * g3(y),
        -g3(x) * g(y) - g1(x) * g2(y),
    ]
}

/// `(U·∇)U`
pub fn convection_profile(x: f64, y: f64) -> [f64; 2] {
    let u = velocity_profile(x, y);
    let d = velocity_gradient(x, y);
    [
        u[0] * d[0][0] + u[1] * d[0][1],
        u[0] * d[1][0] + u[1] * d[1][1],
    ]
}

pub fn pressure_gradient(x: f64, y: f64) -> [f64; 2] {
    [2.0 * x, -2.0 * y]
}

/// Exact `(u₁, u₂, p)` at `(x, y, t)`.
pub fn manufactured_fields(x: f64, y: f64, t: f64) -> (f64, f64, f64) {
    let e = (-t).exp();
    let u = velocity_profile(x, y);
    (u[0] * e, u[1] * e, pressure_profile(x, y) * e)
}

/// Spatial forcing at one time level given the Caputo factor `D(t)`.
pub fn forcing_with_factor(nu: f64, caputo: f64, t: f64, x: f64, y: f64) -> [f64; 2] {
    let e = (-t).exp();
    let u = velocity_profile(x, y);
    let c = convection_profile(x, y);
    let l = velocity_laplacian(x, y);
    let gp = pressure_gradient(x, y);
    [0, 1].map(|k| u[k] * caputo + e * e * c[k] - nu * e * l[k] + e * gp[k])
}

/// `f = ᶜD_t^α u + (u·∇)u − νΔu + ∇p` for the manufactured pair.
pub fn manufactured_forcing(alpha: f64, nu: f64, x: f64, y: f64, t: f64) -> Result<(f64, f64)> {
    let d = CaputoOracle::new(alpha, FORCING_ORACLE_TOL)?.decay_factor(t)?;
    let [f1, f2] = forcing_with_factor(nu, d, t, x, y);
    Ok((f1, f2))
}

/// The manufactured problem for one `(α, ν)` pair; holds the Caputo oracle so
/// repeated time levels reuse the same quadrature rules.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    pub nu: f64,
    oracle: CaputoOracle,
}

impl ManufacturedSolution {
    pub fn new(alpha: f64, nu: f64) -> Result<Self> {
        Ok(Self {
            nu,
            oracle: CaputoOracle::new(alpha, FORCING_ORACLE_TOL)?,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.oracle.alpha()
    }

    pub fn exact(&self, t: f64) -> impl Fn(f64, f64) -> [f64; 3] {
        move |x, y| {
            let (a, b, c) = manufactured_fields(x, y, t);
            [a, b, c]
        }
    }

    /// The forcing field at time `t` with the Caputo factor evaluated once.
    pub fn forcing_at(&self, t: f64) -> Result<impl Fn(f64, f64) -> [f64; 2]> {
        let d = self.oracle.decay_factor(t)?;
        let nu = self.nu;
        Ok(move |x, y| forcing_with_factor(nu, d, t, x, y))
    }
}
