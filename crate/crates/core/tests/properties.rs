use approx::assert_relative_eq;
use proptest::prelude::*;

use qpotts_core::thermo::{log_heat_capacity, log_susceptibility};
use qpotts_core::{
    bond_weight, closed_form_spectrum, config_energy, entropy, enumerate_partition, free_energy,
    magnetization, partition_function, susceptibility, trace_power_partition, ModelParams,
    SpinConfig, ThermoState,
};

fn model() -> impl Strategy<Value = (ModelParams, ThermoState)> {
    (2u32..=12, -4.0..4.0f64, -6.0..6.0f64, 0.05..5.0f64).prop_map(|(q, j, h, b)| {
        (
            ModelParams::new(q, j, h).unwrap(),
            ThermoState::from_beta(b).unwrap(),
        )
    })
}

fn chain() -> impl Strategy<Value = (u32, Vec<u32>)> {
    (2u32..=5).prop_flat_map(|q| (Just(q), prop::collection::vec(1..=q, 2..=9)))
}

proptest! {
    #[test]
    fn interaction_is_symmetric(q in 2u32..20, a in 1u32..20, b in 1u32..20) {
        let (a, b) = (a.min(q), b.min(q));
        let p = ModelParams::new(q, 0.7, -0.2).unwrap();
        let s = ThermoState::from_beta(1.3).unwrap();
        prop_assert_eq!(bond_weight(a, b, &p, s).unwrap(), bond_weight(b, a, &p, s).unwrap());
    }

    #[test]
    fn energy_is_invariant_under_relabeling((q, sites) in chain(), shift in 0u32..5) {
        let p = ModelParams::new(q, 1.1, 0.4).unwrap();
        let s = ThermoState::from_beta(0.8).unwrap();
        let relabeled: Vec<u32> = sites.iter().map(|&x| (x - 1 + shift) % q + 1).collect();
        let e0 = config_energy(&SpinConfig::new(sites, q).unwrap(), &p, s).unwrap();
        let e1 = config_energy(&SpinConfig::new(relabeled, q).unwrap(), &p, s).unwrap();
        prop_assert_eq!(e0, e1);
    }

    #[test]
    fn energy_is_invariant_under_rotation_and_reversal((q, sites) in chain(), k in 0usize..9) {
        let p = ModelParams::new(q, -0.6, 1.2).unwrap();
        let s = ThermoState::from_beta(2.0).unwrap();
        let mut rotated = sites.clone();
        rotated.rotate_left(k % sites.len());
        let mut reversed = sites.clone();
        reversed.reverse();
        let e = |v: Vec<u32>| config_energy(&SpinConfig::new(v, q).unwrap(), &p, s).unwrap();
        let e0 = e(sites);
        prop_assert!((e(rotated) - e0).abs() <= 1e-12 * e0.abs().max(1.0));
        prop_assert!((e(reversed) - e0).abs() <= 1e-12 * e0.abs().max(1.0));
    }

    #[test]
    fn boltzmann_factor_is_product_of_weights((q, sites) in chain(), (p, s) in model()) {
        let p = p.with_q(q).unwrap();
        let c = SpinConfig::new(sites, q).unwrap();
        let log_product: f64 = c.bonds().map(|(a, b)| bond_weight(a, b, &p, s).unwrap().ln()).sum();
        let log_boltzmann = -s.beta() * config_energy(&c, &p, s).unwrap();
        prop_assert!((log_product - log_boltzmann).abs() <= 1e-10 * log_boltzmann.abs().max(1.0));
    }

    #[test]
    fn lambda_max_dominates((p, s) in model()) {
        let sp = closed_form_spectrum(&p, s);
        prop_assert!(sp.log_abs_ratio < 0.0);
        prop_assert!(sp.log_abs_lambda_minor <= sp.log_lambda_max);
    }

    #[test]
    fn heat_capacity_and_susceptibility_identity((p, s) in model()) {
        prop_assume!(p.coupling().abs() > 1e-3);
        let lhs = log_heat_capacity(&p, s);
        let rhs = 2.0 * p.coupling().abs().ln() + 3.0 * s.beta().ln() + log_susceptibility(&p, s);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{} vs {}", lhs, rhs);
    }

    #[test]
    fn magnetization_is_bounded_and_increasing((p, s) in model(), dh in 1e-3..2.0f64) {
        let m0 = magnetization(&p, s);
        let m1 = magnetization(&p.with_field(p.field() + dh).unwrap(), s);
        prop_assert!(m0.abs() <= 1.0 / s.beta());
        prop_assert!(m1 >= m0);
    }

    #[test]
    fn susceptibility_is_bounded_by_inverse_beta((p, s) in model()) {
        let chi_beta = susceptibility(&p, s) * s.beta();
        prop_assert!(chi_beta >= 0.0 && chi_beta <= 1.0 + 1e-15);
    }

    #[test]
    fn entropy_is_beta_squared_df_dbeta((p, s) in model()) {
        let b = s.beta();
        let eps = 1e-5 * b;
        let f = |x: f64| free_energy(&p, ThermoState::from_beta(x).unwrap());
        let slope = (f(b + eps) - f(b - eps)) / (2.0 * eps);
        let analytic = entropy(&p, s);
        let noise = 4.0 * f64::EPSILON * f(b).abs() / (2.0 * eps) * b * b;
        prop_assert!(
            (analytic - b * b * slope).abs() <= 1e-5 * analytic.abs() + noise + 1e-9,
            "{} vs {}", analytic, b * b * slope
        );
    }

    #[test]
    fn enumeration_matches_eigen_sum((p, s) in model(), n in 2usize..=6) {
        prop_assume!(p.q() <= 5);
        let e = enumerate_partition(&p, s, n).unwrap();
        let z = partition_function(&p, s, n).unwrap();
        prop_assert!((e - z).abs() <= 1e-10 * e.abs().max(1.0));
    }

    #[test]
    fn trace_power_matches_eigen_sum((p, s) in model(), n in 1usize..=12) {
        prop_assume!(p.q() <= 6);
        let t = trace_power_partition(&p, s, n).unwrap();
        let z = partition_function(&p, s, n).unwrap();
        prop_assert!((t - z).abs() <= 1e-10 * t.abs().max(1.0));
    }

    #[test]
    fn even_chains_obey_finite_size_bound((p, s) in model(), half in 1usize..=10) {
        let n = 2 * half;
        let gap = (-partition_function(&p, s, n).unwrap() / (s.beta() * n as f64) - free_energy(&p, s)).abs();
        prop_assert!(gap <= f64::from(p.q()).ln() / (s.beta() * n as f64) * (1.0 + 1e-12));
    }
}

#[test]
fn zero_coupling_and_field_is_free_spins() {
    let p = ModelParams::new(4, 0.0, 0.0).unwrap();
    let s = ThermoState::from_beta(1.7).unwrap();
    assert_relative_eq!(free_energy(&p, s), -(4f64.ln()) / 1.7, max_relative = 1e-15);
    assert_relative_eq!(entropy(&p, s), 4f64.ln(), max_relative = 1e-15);
}
