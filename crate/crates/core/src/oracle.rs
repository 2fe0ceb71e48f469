//! Independent routes to the periodic partition function.
//!
//! Three computations of `ln Z_N` that share nothing beyond the bond weight:
//! exhaustive enumeration of all `q^N` chains, the trace of the `N`-th power
//! of the dense transfer matrix, and the eigenvalue power sum.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{agreement, ModelParams, Spin, ThermoState};
use crate::transfer::{build_matrix, partition_function};

/// Largest number of configurations [`enumerate_partition`] will visit.
pub const ENUMERATION_CAP: u64 = 2_000_000;

/// Fixed chunk count so the merge order does not depend on the thread pool.
const ENUMERATION_CHUNKS: u64 = 64;

/// Running `ln(sum exp(v))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, value: f64) {
        if value <= self.max {
            self.sum += (value - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - value).exp() + 1.0;
            self.max = value;
        }
    }

    pub fn merge(self, other: Self) -> Self {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        let max = self.max.max(other.max);
        Self {
            max,
            sum: self.sum * (self.max - max).exp() + other.sum * (other.max - max).exp(),
        }
    }

    pub fn value(&self) -> f64 {
        self.max + self.sum.ln()
    }
}

/// Number of periodic configurations, or `None` past `u64`.
fn configuration_count(q: u32, n: usize) -> Option<u64> {
    u32::try_from(n)
        .ok()
        .and_then(|n| u64::from(q).checked_pow(n))
}

/// `ln Z_N` by summing `exp(-beta E)` over every periodic chain of `n` sites.
pub fn enumerate_partition(params: &ModelParams, state: ThermoState, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidChainLength { n, min: 2 });
    }
    let q = params.q();
    let total = match configuration_count(q, n) {
        Some(total) if total <= ENUMERATION_CAP => total,
        _ => {
            return Err(Error::EnumerationCap {
                configs: f64::from(q).powi(n as i32),
                cap: ENUMERATION_CAP,
            })
        }
    };
    let beta = state.beta();
    let (coupling, field) = (params.coupling(), params.field());

    let chunk = total.div_ceil(ENUMERATION_CHUNKS);
    let partials: Vec<LogSumExp> = (0..ENUMERATION_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let start = (c * chunk).min(total);
            let end = ((c + 1) * chunk).min(total);
            let mut acc = LogSumExp::default();
            if start == end {
                return acc;
            }
            let mut digits = decode(start, q, n);
            for _ in start..end {
                let sum: f64 = (0..n)
                    .map(|i| agreement(digits[i], digits[(i + 1) % n]))
                    .sum();
                let energy = -coupling * sum - field / beta * sum;
                acc.push(-beta * energy);
                increment(&mut digits, q);
            }
            acc
        })
        .collect();
    Ok(partials
        .into_iter()
        .fold(LogSumExp::default(), LogSumExp::merge)
        .value())
}

/// Mixed-radix digits of `index`, least significant site first, as 1-based spins.
fn decode(mut index: u64, q: u32, n: usize) -> Vec<Spin> {
    let base = u64::from(q);
    (0..n)
        .map(|_| {
            let d = index % base;
            index /= base;
            d as Spin + 1
        })
        .collect()
}

fn increment(digits: &mut [Spin], q: u32) {
    for d in digits.iter_mut() {
        if *d < q {
            *d += 1;
            return;
        }
        *d = 1;
    }
}

/// `ln Tr(M^N)` by repeated dense multiplication, rescaling after each product.
pub fn trace_power_partition(params: &ModelParams, state: ThermoState, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidChainLength { n, min: 1 });
    }
    let mut base = build_matrix(params, state).to_dense()?;
    let base_scale = base.max_abs();
    base.scale(1.0 / base_scale);
    let mut log_scale = n as f64 * base_scale.ln();

    let mut power = base.clone();
    for _ in 1..n {
        power = power.matmul(&base);
        let s = power.max_abs();
        power.scale(1.0 / s);
        log_scale += s.ln();
    }
    Ok(power.trace().ln() + log_scale)
}

/// Which computation of `ln Z_N` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Enumeration,
    TracePower,
    Eigen,
}

/// `f_N = -ln Z_N / (beta N)`.
pub fn finite_n_free_energy(
    params: &ModelParams,
    state: ThermoState,
    n: usize,
    route: Route,
) -> Result<f64> {
    let log_z = match route {
        Route::Enumeration => enumerate_partition(params, state, n)?,
        Route::TracePower => trace_power_partition(params, state, n)?,
        Route::Eigen => partition_function(params, state, n)?,
    };
    Ok(-log_z / (state.beta() * n as f64))
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish.
pub fn relative_discrepancy(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub ln_z_enumeration: f64,
    pub ln_z_trace_power: f64,
    pub ln_z_eigen: f64,
    pub finite_n_free_energy: f64,
    /// Largest pairwise relative difference among the three `ln Z` values.
    pub max_relative_discrepancy: f64,
}

/// Runs all three routes at one point.
pub fn oracle_report(params: &ModelParams, state: ThermoState, n: usize) -> Result<OracleReport> {
    let enumeration = enumerate_partition(params, state, n)?;
    let trace = trace_power_partition(params, state, n)?;
    let eigen = partition_function(params, state, n)?;
    let max_relative_discrepancy = relative_discrepancy(enumeration, trace)
        .max(relative_discrepancy(enumeration, eigen))
        .max(relative_discrepancy(trace, eigen));
    Ok(OracleReport {
        n,
        ln_z_enumeration: enumeration,
        ln_z_trace_power: trace,
        ln_z_eigen: eigen,
        finite_n_free_energy: -eigen / (state.beta() * n as f64),
        max_relative_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{config_energy, SpinConfig};
    use approx::assert_relative_eq;

    fn setup(q: u32, j: f64, h: f64, beta: f64) -> (ModelParams, ThermoState) {
        (
            ModelParams::new(q, j, h).unwrap(),
            ThermoState::from_beta(beta).unwrap(),
        )
    }

    #[test]
    fn log_sum_exp_merge_is_order_free() {
        let values = [-3.0, 700.0, 2.5, -1e3, 699.0, 0.0];
        let mut all = LogSumExp::default();
        values.iter().for_each(|&v| all.push(v));
        let mut left = LogSumExp::default();
        let mut right = LogSumExp::default();
        values[..2].iter().for_each(|&v| left.push(v));
        values[2..].iter().for_each(|&v| right.push(v));
        assert_relative_eq!(all.value(), right.merge(left).value(), max_relative = 1e-15);
        let direct = 700.0 + values.iter().map(|v| (v - 700.0).exp()).sum::<f64>().ln();
        assert_relative_eq!(all.value(), direct, max_relative = 1e-15);
        assert_eq!(LogSumExp::default().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn mixed_radix_visits_every_configuration_once() {
        let (q, n) = (3, 4);
        let mut digits = decode(0, q, n);
        let mut seen = std::collections::HashSet::new();
        for i in 0..81 {
            assert_eq!(digits, decode(i, q, n));
            assert!(seen.insert(digits.clone()));
            increment(&mut digits, q);
        }
        assert_eq!(digits, vec![1; 4]);
    }

    #[test]
    fn enumeration_examples() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        assert_relative_eq!(
            enumerate_partition(&p, s, 3).unwrap(),
            8f64.ln(),
            max_relative = 1e-15
        );

        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let ln_z = enumerate_partition(&p, s, 4).unwrap();
        assert_relative_eq!(ln_z, 2487.7684377137734f64.ln(), max_relative = 1e-14);

        let (p, s) = setup(2, 1.0, 0.0, 1.0);
        let four_terms = (2.0 * 2f64.exp() + 2.0 * (-2f64).exp()).ln();
        assert_relative_eq!(
            enumerate_partition(&p, s, 2).unwrap(),
            four_terms,
            max_relative = 1e-15
        );
        assert_relative_eq!(four_terms, 2.711297108477755, max_relative = 1e-14);
    }

    #[test]
    fn enumeration_matches_config_energy_sum() {
        let (p, s) = setup(3, -0.4, 0.9, 1.3);
        let n = 5;
        let mut direct = 0.0;
        for idx in 0..3u64.pow(5) {
            let c = SpinConfig::new(decode(idx, 3, n), 3).unwrap();
            direct += (-s.beta() * config_energy(&c, &p, s).unwrap()).exp();
        }
        assert_relative_eq!(
            enumerate_partition(&p, s, n).unwrap(),
            direct.ln(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn enumeration_cap() {
        let (p, s) = setup(5, 1.0, 0.0, 1.0);
        assert!(enumerate_partition(&p, s, 9).is_ok()); // 1,953,125 configurations
        let err = enumerate_partition(&p, s, 10).unwrap_err();
        assert!(matches!(
            err,
            Error::EnumerationCap {
                cap: ENUMERATION_CAP,
                ..
            }
        ));
        assert!(err.to_string().contains("2000000"));
        let (p, s) = setup(1000, 1.0, 0.0, 1.0);
        assert!(matches!(
            enumerate_partition(&p, s, 100),
            Err(Error::EnumerationCap { .. })
        ));
        assert!(matches!(
            enumerate_partition(&p, s, 1),
            Err(Error::InvalidChainLength { .. })
        ));
    }

    #[test]
    fn trace_power_examples() {
        for (q, j, h, b) in [(3, 1.0, 0.5, 0.7), (6, -1.0, 2.0, 0.5), (2, 0.0, 0.0, 1.0)] {
            let (p, s) = setup(q, j, h, b);
            let direct = f64::from(q).ln() - p.bond_exponent(s);
            assert_relative_eq!(
                trace_power_partition(&p, s, 1).unwrap(),
                direct,
                max_relative = 1e-14,
                epsilon = 1e-15
            );
        }
        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        assert_relative_eq!(
            trace_power_partition(&p, s, 4).unwrap(),
            enumerate_partition(&p, s, 4).unwrap(),
            max_relative = 1e-12
        );
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        assert_relative_eq!(
            trace_power_partition(&p, s, 5).unwrap(),
            32f64.ln(),
            max_relative = 1e-15
        );
        let (p, s) = setup(2, 12.0, 3.0, 30.0);
        assert!(matches!(
            trace_power_partition(&p, s, 5),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn finite_n_free_energy_examples() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        for route in [Route::Enumeration, Route::TracePower, Route::Eigen] {
            assert_relative_eq!(
                finite_n_free_energy(&p, s, 3, route).unwrap(),
                -(2f64.ln()),
                max_relative = 1e-14
            );
        }
        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let f12 = finite_n_free_energy(&p, s, 12, Route::Eigen).unwrap();
        assert_relative_eq!(f12, -2.7678787968702214, max_relative = 1e-13);
        assert!((f12 - crate::thermo::free_energy(&p, s)).abs() < 0.157);
    }

    #[test]
    fn report_agrees() {
        let (p, s) = setup(4, -0.7, 1.1, 2.0);
        let report = oracle_report(&p, s, 6).unwrap();
        assert!(report.max_relative_discrepancy < 1e-12, "{report:?}");
    }
}
