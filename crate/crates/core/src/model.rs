//! Model parameters, spin chains and Boltzmann bond weights.
//!
//! Spins take 1-based labels in `1..=q`. Neighbouring spins interact through
//! `cos(pi * delta(s, s'))`, which is `-1` for equal spins and `+1` otherwise.
//! The field `h` couples to the same bond agreement term and enters the
//! Boltzmann factor without a `beta` prefactor, so a bond contributes the
//! weight `exp((beta*J + h) * cos(pi * delta))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spin label in `1..=q`.
pub type Spin = u32;

/// The model instance `(q, J, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    q: u32,
    #[serde(rename = "J")]
    coupling: f64,
    #[serde(rename = "h")]
    field: f64,
}

impl ModelParams {
    pub fn new(q: u32, coupling: f64, field: f64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidSpinCount(q.into()));
        }
        if !coupling.is_finite() {
            return Err(Error::NonFinite {
                name: "J",
                value: coupling,
            });
        }
        if !field.is_finite() {
            return Err(Error::NonFinite {
                name: "h",
                value: field,
            });
        }
        Ok(Self { q, coupling, field })
    }

    /// Number of spin states.
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Coupling constant `J`.
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// Field parameter `h`.
    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn with_q(self, q: u32) -> Result<Self> {
        Self::new(q, self.coupling, self.field)
    }

    pub fn with_coupling(self, coupling: f64) -> Result<Self> {
        Self::new(self.q, coupling, self.field)
    }

    pub fn with_field(self, field: f64) -> Result<Self> {
        Self::new(self.q, self.coupling, field)
    }

    /// Exponent `h + J*beta` carried by every bond weight.
    pub fn bond_exponent(&self, state: ThermoState) -> f64 {
        self.field + self.coupling * state.beta()
    }

    pub(crate) fn check_spin(&self, spin: Spin) -> Result<()> {
        if spin == 0 || spin > self.q {
            Err(Error::SpinOutOfRange { spin, q: self.q })
        } else {
            Ok(())
        }
    }
}

/// Inverse temperature, with `k_B = 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct ThermoState {
    beta: f64,
}

impl ThermoState {
    pub fn from_beta(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self { beta })
        } else {
            Err(Error::InvalidBeta(beta))
        }
    }

    pub fn from_temperature(temperature: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidTemperature(temperature));
        }
        Self::from_beta(1.0 / temperature)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn temperature(&self) -> f64 {
        1.0 / self.beta
    }
}

/// A periodic chain of spins; site `N + 1` is identified with site 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    sites: Vec<Spin>,
}

impl SpinConfig {
    pub fn new(sites: Vec<Spin>, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidSpinCount(q.into()));
        }
        if sites.len() < 2 {
            return Err(Error::ChainTooShort(sites.len()));
        }
        if let Some(&spin) = sites.iter().find(|&&s| s == 0 || s > q) {
            return Err(Error::SpinOutOfRange { spin, q });
        }
        Ok(Self { sites })
    }

    pub fn sites(&self) -> &[Spin] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// The `N` periodic bonds `(s_i, s_{i+1})`, wrapping the last site to the first.
    pub fn bonds(&self) -> impl Iterator<Item = (Spin, Spin)> + '_ {
        let n = self.sites.len();
        (0..n).map(move |i| (self.sites[i], self.sites[(i + 1) % n]))
    }

    /// Sum of `cos(pi * delta)` over all periodic bonds.
    pub fn bond_sum(&self) -> f64 {
        self.bonds().map(|(a, b)| agreement(a, b)).sum()
    }
}

#[inline]
pub(crate) fn agreement(s1: Spin, s2: Spin) -> f64 {
    if s1 == s2 {
        -1.0
    } else {
        1.0
    }
}

/// `cos(pi * delta(s1, s2))`: `-1` when the spins agree, `+1` otherwise.
pub fn kronecker_interaction(s1: Spin, s2: Spin, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::InvalidSpinCount(q.into()));
    }
    for s in [s1, s2] {
        if s == 0 || s > q {
            return Err(Error::SpinOutOfRange { spin: s, q });
        }
    }
    Ok(agreement(s1, s2))
}

/// Energy `E = -J * sum cos(pi*delta) - (h/beta) * sum cos(pi*delta)` of a periodic chain.
///
/// Spins in `config` must lie in `1..=params.q()`.
pub fn config_energy(config: &SpinConfig, params: &ModelParams, state: ThermoState) -> Result<f64> {
    for &s in config.sites() {
        params.check_spin(s)?;
    }
    let sum = config.bond_sum();
    Ok(-params.coupling() * sum - params.field() / state.beta() * sum)
}

/// Boltzmann weight `exp((beta*J + h) * cos(pi*delta))` of a single bond.
pub fn bond_weight(s1: Spin, s2: Spin, params: &ModelParams, state: ThermoState) -> Result<f64> {
    params.check_spin(s1)?;
    params.check_spin(s2)?;
    Ok((params.bond_exponent(state) * agreement(s1, s2)).exp())
}
