//! Closed-form thermodynamics of the infinite chain.
//!
//! Every observable is a function of the dominant eigenvalue and the ratio
//!
//! ```text
//! r = (q-1) e^x / (1 + (q-1) e^x),    x = 2(h + J*beta)
//! ```
//!
//! which is a logistic function of `y = x + ln(q-1)`. Working from `y` keeps
//! all five functions finite far beyond the range where `e^x` overflows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, ThermoState};
use crate::transfer::log_lambda_max;

/// Stable representation of the logistic ratio shared by all observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableCore {
    /// `x = 2(h + J*beta)`.
    pub x: f64,
    /// `y = x + ln(q-1)`; `r = 1/2` exactly when `y = 0`.
    pub y: f64,
    pub r: f64,
    pub one_minus_r: f64,
    /// `ln(r (1 - r))`, finite for every finite `y`.
    pub log_r_one_minus_r: f64,
}

impl StableCore {
    pub fn new(params: &ModelParams, state: ThermoState) -> Self {
        let x = 2.0 * params.bond_exponent(state);
        let y = x + f64::from(params.q() - 1).ln();
        let t = (-y.abs()).exp();
        let (small, large) = (t / (1.0 + t), 1.0 / (1.0 + t));
        let (r, one_minus_r) = if y >= 0.0 {
            (large, small)
        } else {
            (small, large)
        };
        Self {
            x,
            y,
            r,
            one_minus_r,
            log_r_one_minus_r: -y.abs() - 2.0 * t.ln_1p(),
        }
    }

    /// `2r - 1`, evaluated as `tanh(y/2)` to avoid cancellation near `r = 1/2`.
    pub fn polarization(&self) -> f64 {
        (0.5 * self.y).tanh()
    }
}

/// All five observables at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoPoint {
    pub f: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub m: f64,
    pub chi: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl ThermoPoint {
    pub fn evaluate(params: &ModelParams, state: ThermoState) -> Self {
        Self {
            f: free_energy(params, state),
            s: entropy(params, state),
            m: magnetization(params, state),
            chi: susceptibility(params, state),
            c: heat_capacity(params, state),
        }
    }
}

/// Free energy per site, `-ln(lambda_max) / beta`.
pub fn free_energy(params: &ModelParams, state: ThermoState) -> f64 {
    -log_lambda_max(params.q(), params.bond_exponent(state)) / state.beta()
}

/// Entropy per site, `ln lambda_max + J beta (1 - 2r)`.
pub fn entropy(params: &ModelParams, state: ThermoState) -> f64 {
    let core = StableCore::new(params, state);
    let beta = state.beta();
    log_lambda_max(params.q(), params.bond_exponent(state))
        - params.coupling() * beta * core.polarization()
}

/// Magnetization per spin, `(2r - 1) / beta`.
pub fn magnetization(params: &ModelParams, state: ThermoState) -> f64 {
    StableCore::new(params, state).polarization() / state.beta()
}

/// Field `h*` at which the magnetization vanishes and the susceptibility peaks.
pub fn magnetization_zero_point(params: &ModelParams, state: ThermoState) -> f64 {
    -(state.beta() * params.coupling() + 0.5 * f64::from(params.q() - 1).ln())
}

/// `ln chi`, finite wherever the parameters are.
pub fn log_susceptibility(params: &ModelParams, state: ThermoState) -> f64 {
    4f64.ln() + StableCore::new(params, state).log_r_one_minus_r - state.beta().ln()
}

/// Susceptibility, `4 r (1 - r) / beta`.
pub fn susceptibility(params: &ModelParams, state: ThermoState) -> f64 {
    log_susceptibility(params, state).exp()
}

/// `ln C`; `-inf` when `J = 0`.
pub fn log_heat_capacity(params: &ModelParams, state: ThermoState) -> f64 {
    let j = params.coupling();
    if j == 0.0 {
        return f64::NEG_INFINITY;
    }
    let beta = state.beta();
    4f64.ln()
        + 2.0 * j.abs().ln()
        + 2.0 * beta.ln()
        + StableCore::new(params, state).log_r_one_minus_r
}

/// Specific heat per site, `4 J^2 beta^2 r (1 - r)`.
pub fn heat_capacity(params: &ModelParams, state: ThermoState) -> f64 {
    log_heat_capacity(params, state).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limit {
    ZeroTemperature,
    InfiniteTemperature,
}

/// Limiting entropy as `T -> 0` or `T -> infinity`.
///
/// The zero-temperature value depends on the sign of `J`: `h + ln(q-1)` for
/// `J > 0`, `-h` for `J < 0`. With `J = 0` the entropy does not depend on
/// temperature and both limits return `ln((1 + (q-1)e^{2h}) / e^h)`.
pub fn asymptotic_entropy_limit(params: &ModelParams, direction: Limit) -> f64 {
    let (q, j, h) = (params.q(), params.coupling(), params.field());
    let high_temperature = log_lambda_max(q, h);
    match direction {
        Limit::InfiniteTemperature => high_temperature,
        Limit::ZeroTemperature if j > 0.0 => h + f64::from(q - 1).ln(),
        Limit::ZeroTemperature if j < 0.0 => -h,
        Limit::ZeroTemperature => high_temperature,
    }
}

pub const FD_FIRST_TOLERANCE: f64 = 1e-6;
pub const FD_SECOND_TOLERANCE: f64 = 1e-5;
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// One closed form checked against its finite-difference counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdCheck {
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl FdCheck {
    fn new(analytic: f64, numeric: f64, noise: f64, tolerance: f64) -> Self {
        let relative_error = relative_error(analytic, numeric, noise);
        Self {
            analytic,
            numeric,
            relative_error,
            tolerance,
            passed: relative_error < tolerance,
        }
    }
}

/// `|a - b| / max(|a|, |b|)`, or zero when both sit inside the stencil's
/// rounding noise.
fn relative_error(analytic: f64, numeric: f64, noise: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale <= noise {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdReport {
    pub entropy: FdCheck,
    pub magnetization: FdCheck,
    pub susceptibility: FdCheck,
    pub heat_capacity: FdCheck,
}

impl FdReport {
    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    pub fn checks(&self) -> [FdCheck; 4] {
        [
            self.entropy,
            self.magnetization,
            self.susceptibility,
            self.heat_capacity,
        ]
    }

    pub fn max_relative_error(&self) -> f64 {
        self.checks()
            .iter()
            .fold(0.0, |m, c| m.max(c.relative_error))
    }
}

/// Checks S, m, chi and C against central differences of the free energy.
///
/// First derivatives use the step `step * max(1, |param|)`, second
/// derivatives ten times that. S and m must agree to 1e-6, chi and C to 1e-5.
pub fn fd_verify(params: &ModelParams, state: ThermoState, step: f64) -> Result<FdReport> {
    let temperature = state.temperature();
    let h = params.field();
    let first_t = step * temperature.max(1.0);
    let second_t = 10.0 * first_t;
    if !(step > 0.0) || temperature - second_t <= 0.0 {
        return Err(Error::StepTooLarge {
            param: "T",
            value: temperature,
            step: second_t,
        });
    }
    let first_h = step * h.abs().max(1.0);
    let second_h = 10.0 * first_h;

    let f_at_t = |t: f64| {
        free_energy(
            params,
            ThermoState::from_beta(1.0 / t).expect("positive temperature"),
        )
    };
    let f_at_h = |field: f64| free_energy(&params.with_field(field).expect("finite field"), state);

    let (fp, fm) = (f_at_t(temperature + first_t), f_at_t(temperature - first_t));
    let entropy_fd = -(fp - fm) / (2.0 * first_t);
    let entropy_check = FdCheck::new(
        entropy(params, state),
        entropy_fd,
        first_noise(fp, fm, first_t),
        FD_FIRST_TOLERANCE,
    );

    let (fp, fm) = (f_at_h(h + first_h), f_at_h(h - first_h));
    let magnetization_fd = -(fp - fm) / (2.0 * first_h);
    let magnetization_check = FdCheck::new(
        magnetization(params, state),
        magnetization_fd,
        first_noise(fp, fm, first_h),
        FD_FIRST_TOLERANCE,
    );

    let f0 = free_energy(params, state);
    let (fp, fm) = (f_at_h(h + second_h), f_at_h(h - second_h));
    let susceptibility_fd = -(fp - 2.0 * f0 + fm) / (second_h * second_h);
    let susceptibility_check = FdCheck::new(
        susceptibility(params, state),
        susceptibility_fd,
        second_noise(fp, f0, fm, second_h),
        FD_SECOND_TOLERANCE,
    );

    let (fp, fm) = (
        f_at_t(temperature + second_t),
        f_at_t(temperature - second_t),
    );
    let heat_capacity_fd = -temperature * (fp - 2.0 * f0 + fm) / (second_t * second_t);
    let heat_capacity_check = FdCheck::new(
        heat_capacity(params, state),
        heat_capacity_fd,
        temperature * second_noise(fp, f0, fm, second_t),
        FD_SECOND_TOLERANCE,
    );

    Ok(FdReport {
        entropy: entropy_check,
        magnetization: magnetization_check,
        susceptibility: susceptibility_check,
        heat_capacity: heat_capacity_check,
    })
}

fn first_noise(fp: f64, fm: f64, step: f64) -> f64 {
    4.0 * f64::EPSILON * (fp.abs() + fm.abs()) / (2.0 * step)
}

fn second_noise(fp: f64, f0: f64, fm: f64, step: f64) -> f64 {
    4.0 * f64::EPSILON * (fp.abs() + 2.0 * f0.abs() + fm.abs()) / (step * step)
}
