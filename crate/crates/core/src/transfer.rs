//! Transfer matrix, its closed-form spectrum and the periodic partition function.
//!
//! The `q x q` transfer matrix has the constant diagonal `exp(-a)` and the
//! constant off-diagonal `exp(a)` with `a = h + J*beta`. Its spectrum has two
//! distinct values:
//!
//! ```text
//! lambda_minor = exp(-a) * (1 - exp(2a))            multiplicity q - 1
//! lambda_max   = exp(-a) * (1 + (q - 1) exp(2a))    multiplicity 1
//! ```
//!
//! so the periodic partition function is `Z_N = (q-1) lambda_minor^N + lambda_max^N`.
//! Everything here is carried in log form; dense entries are only produced
//! when `|a| <= DENSE_EXPONENT_LIMIT`.

use crate::error::{Error, Result};
use crate::model::{ModelParams, ThermoState};

/// Largest `|h + J*beta|` for which dense matrix entries are materialized.
pub const DENSE_EXPONENT_LIMIT: f64 = 300.0;

/// Above this value of `2(h + J*beta)` the dominant log-eigenvalue switches
/// to the form that factors out `exp(2a)`.
pub const LOG_BRANCH_THRESHOLD: f64 = 40.0;

pub const DEFAULT_POWER_TOL: f64 = 1e-12;
pub const DEFAULT_POWER_MAX_ITER: usize = 10_000;

/// The structured transfer matrix, stored as its dimension and bond exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    q: u32,
    exponent: f64,
}

impl TransferMatrix {
    pub fn new(params: &ModelParams, state: ThermoState) -> Self {
        Self {
            q: params.q(),
            exponent: params.bond_exponent(state),
        }
    }

    pub fn dimension(&self) -> u32 {
        self.q
    }

    /// `a = h + J*beta`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// `exp(-a)`; may underflow or overflow outside the dense range.
    pub fn diag(&self) -> f64 {
        (-self.exponent).exp()
    }

    /// `exp(a)`; always the reciprocal of [`diag`](Self::diag).
    pub fn offdiag(&self) -> f64 {
        self.exponent.exp()
    }

    pub fn log_diag(&self) -> f64 {
        -self.exponent
    }

    pub fn log_offdiag(&self) -> f64 {
        self.exponent
    }

    /// Materializes the dense symmetric matrix.
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        if self.exponent.abs() > DENSE_EXPONENT_LIMIT {
            return Err(Error::Overflow {
                exponent: self.exponent.abs(),
                limit: DENSE_EXPONENT_LIMIT,
            });
        }
        let n = self.q as usize;
        let (d, o) = (self.diag(), self.offdiag());
        let data = (0..n * n)
            .map(|k| if k / n == k % n { d } else { o })
            .collect();
        Ok(DenseMatrix { n, data })
    }
}

/// Builds the transfer matrix for `(params, state)`.
pub fn build_matrix(params: &ModelParams, state: ThermoState) -> TransferMatrix {
    TransferMatrix::new(params, state)
}

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Panics if `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "expected {} entries", n * n);
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        let data = (0..n * n)
            .map(|k| if k / n == k % n { 1.0 } else { 0.0 })
            .collect();
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        DenseMatrix { n, data }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// The two distinct eigenvalues of the transfer matrix.
///
/// The linear values overflow to infinity once `|h + J*beta|` is large; the
/// log fields stay finite for every finite input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSpectrum {
    pub q: u32,
    /// Eigenvalue of multiplicity `q - 1`; zero when `h + J*beta = 0`.
    pub lambda_minor: f64,
    pub lambda_max: f64,
    pub log_lambda_max: f64,
    /// `ln |lambda_minor|`, `-inf` when it vanishes.
    pub log_abs_lambda_minor: f64,
    /// `ln(|lambda_minor| / lambda_max)`, computed without cancellation.
    pub log_abs_ratio: f64,
    /// `ln((q - 1) |lambda_minor| / lambda_max)`, the single-site correction.
    pub log_weighted_ratio: f64,
}

impl EigenSpectrum {
    pub fn minor_is_negative(&self) -> bool {
        self.lambda_minor < 0.0
    }

    /// `lambda_minor / lambda_max`, always in `(-1, 1)` in exact arithmetic.
    pub fn ratio(&self) -> f64 {
        let mag = self.log_abs_ratio.exp();
        if self.minor_is_negative() {
            -mag
        } else {
            mag
        }
    }
}

/// `ln lambda_max` with the two-branch evaluation.
pub fn log_lambda_max(q: u32, exponent: f64) -> f64 {
    let x = 2.0 * exponent;
    let degeneracy = f64::from(q - 1);
    if x > LOG_BRANCH_THRESHOLD {
        exponent + degeneracy.ln() + ((-x).exp() / degeneracy).ln_1p()
    } else {
        -exponent + (degeneracy * x.exp()).ln_1p()
    }
}

/// Closed-form spectrum for `(params, state)`.
pub fn closed_form_spectrum(params: &ModelParams, state: ThermoState) -> EigenSpectrum {
    spectrum_for_exponent(params.q(), params.bond_exponent(state))
}

/// `ln(1 - e^{-t})` for `t >= 0`.
fn log_one_minus_exp_neg(t: f64) -> f64 {
    if t < std::f64::consts::LN_2 {
        (-(-t).exp_m1()).ln()
    } else {
        (-(-t).exp()).ln_1p()
    }
}

pub(crate) fn spectrum_for_exponent(q: u32, a: f64) -> EigenSpectrum {
    let x = 2.0 * a;
    let degeneracy = f64::from(q - 1);
    let log_max = log_lambda_max(q, a);

    // |1 - e^x| and 1 + (q-1) e^x with the e^x factor pulled out for x > 0.
    let small = log_one_minus_exp_neg(x.abs());
    // Each branch computes directly the field that can be tiny there.
    let (log_abs_minor, log_ratio, log_weighted) = if x > 0.0 {
        let weighted = small - ((-x).exp() / degeneracy).ln_1p();
        (a + small, weighted - degeneracy.ln(), weighted)
    } else {
        let ratio = small - (degeneracy * x.exp()).ln_1p();
        (-a + small, ratio, ratio + degeneracy.ln())
    };
    let sign = if x > 0.0 { -1.0 } else { 1.0 };
    let lambda_minor = if x == 0.0 {
        0.0
    } else {
        sign * log_abs_minor.exp()
    };
    EigenSpectrum {
        q,
        lambda_minor,
        lambda_max: log_max.exp(),
        log_lambda_max: log_max,
        log_abs_lambda_minor: log_abs_minor,
        log_abs_ratio: log_ratio,
        log_weighted_ratio: log_weighted,
    }
}

/// Dominant eigenvalue of an entrywise-positive matrix by power iteration.
///
/// Starts from the all-ones vector and stops once the Rayleigh quotient
/// changes by less than `tol * max(1, |rho|)` between iterations.
pub fn numeric_dominant_eigenvalue(matrix: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    let mut v = vec![1.0; matrix.dim()];
    let mut previous: Option<f64> = None;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let w = matrix.matvec(&v);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rho = vw / vv;
        if let Some(prev) = previous {
            residual = (rho - prev).abs();
            if residual < tol * rho.abs().max(1.0) {
                return Ok(rho);
            }
        }
        previous = Some(rho);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Partial partition sums `Z_s^{(N)}` for every end spin `s`.
///
/// In normalized form the true components are `components * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialPartitionVector {
    components: Vec<f64>,
    log_scale: f64,
}

impl PartialPartitionVector {
    /// All components equal to one.
    pub fn uniform(q: u32) -> Self {
        Self {
            components: vec![1.0; q as usize],
            log_scale: 0.0,
        }
    }

    pub fn from_components(components: Vec<f64>) -> Self {
        Self {
            components,
            log_scale: 0.0,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `ln Z_s` for every component.
    pub fn log_components(&self) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.ln() + self.log_scale)
            .collect()
    }
}

/// Whether [`iterate_partial_partition`] renormalizes after each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scaling {
    Unscaled,
    Normalized,
}

/// One step of `Z^{(N)} = M Z^{(N-1)}`.
///
/// `Unscaled` multiplies the raw entries and reports an overflow error when
/// they are not representable. `Normalized` divides by the largest component
/// and accumulates the log of that factor, so it never overflows.
pub fn iterate_partial_partition(
    v: &PartialPartitionVector,
    params: &ModelParams,
    state: ThermoState,
    scaling: Scaling,
) -> Result<PartialPartitionVector> {
    let a = params.bond_exponent(state);
    let total: f64 = v.components.iter().sum();
    match scaling {
        Scaling::Unscaled => {
            let overflow = Error::Overflow {
                exponent: a.abs(),
                limit: DENSE_EXPONENT_LIMIT,
            };
            if a.abs() > DENSE_EXPONENT_LIMIT {
                return Err(overflow);
            }
            let (d, o) = ((-a).exp(), a.exp());
            let components: Vec<f64> = v
                .components
                .iter()
                .map(|&c| d * c + o * (total - c))
                .collect();
            if components.iter().any(|c| !c.is_finite()) {
                return Err(overflow);
            }
            Ok(PartialPartitionVector {
                components,
                log_scale: v.log_scale,
            })
        }
        Scaling::Normalized => {
            // Factor exp(|a|) out so both weights lie in (0, 1].
            let shift = a.abs();
            let (d, o) = ((-a - shift).exp(), (a - shift).exp());
            let raw: Vec<f64> = v
                .components
                .iter()
                .map(|&c| d * c + o * (total - c))
                .collect();
            let peak = raw.iter().copied().fold(0.0, f64::max);
            Ok(PartialPartitionVector {
                components: raw.into_iter().map(|c| c / peak).collect(),
                log_scale: v.log_scale + shift + peak.ln(),
            })
        }
    }
}

/// `ln Z_N` of the periodic chain from the spectrum.
///
/// Evaluates `N ln lambda_max + ln(1 + (q-1) (lambda_minor/lambda_max)^N)`,
/// keeping the sign of the correction for negative `lambda_minor` and odd `N`.
pub fn log_partition_from_spectrum(spectrum: &EigenSpectrum, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidChainLength { n, min: 1 });
    }
    let nf = n as f64;
    let log_correction = if n == 1 {
        spectrum.log_weighted_ratio
    } else {
        nf * spectrum.log_weighted_ratio - (nf - 1.0) * f64::from(spectrum.q - 1).ln()
    };
    let tail = if spectrum.minor_is_negative() && n % 2 == 1 {
        (-log_correction.exp_m1()).ln()
    } else {
        log_correction.exp().ln_1p()
    };
    Ok(nf * spectrum.log_lambda_max + tail)
}

/// `ln Z_N` for a periodic chain of `n` sites.
pub fn partition_function(params: &ModelParams, state: ThermoState, n: usize) -> Result<f64> {
    log_partition_from_spectrum(&closed_form_spectrum(params, state), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn setup(q: u32, j: f64, h: f64, beta: f64) -> (ModelParams, ThermoState) {
        (
            ModelParams::new(q, j, h).unwrap(),
            ThermoState::from_beta(beta).unwrap(),
        )
    }

    #[test]
    fn dense_entries() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        let m = build_matrix(&p, s).to_dense().unwrap();
        assert!((0..2).all(|i| (0..2).all(|j| m.get(i, j) == 1.0)));

        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let tm = build_matrix(&p, s);
        assert_relative_eq!(tm.diag(), 0.301194, epsilon = 1e-6);
        assert_relative_eq!(tm.offdiag(), 3.320117, epsilon = 1e-6);
        assert_relative_eq!(tm.diag() * tm.offdiag(), 1.0, max_relative = 1e-15);
        let m = tm.to_dense().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
                assert!(m.get(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn dense_overflow_is_reported() {
        let (p, s) = setup(3, 12.0, 3.0, 30.0);
        let err = build_matrix(&p, s).to_dense().unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
        assert!(err.to_string().contains("log-domain"));
    }

    #[test]
    fn spectrum_zero_exponent() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        let sp = closed_form_spectrum(&p, s);
        assert_eq!(sp.lambda_minor, 0.0);
        assert_relative_eq!(sp.lambda_max, 2.0, max_relative = 1e-15);
        assert_eq!(sp.log_abs_ratio, f64::NEG_INFINITY);
    }

    #[test]
    fn spectrum_reference_point() {
        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let sp = closed_form_spectrum(&p, s);
        assert_relative_eq!(sp.lambda_minor, -3.018921, epsilon = 1e-5);
        assert_relative_eq!(sp.lambda_max, 6.941426, epsilon = 1e-5);
        assert_relative_eq!(
            sp.lambda_max - sp.lambda_minor,
            3.0 * 1.2f64.exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            sp.ratio(),
            sp.lambda_minor / sp.lambda_max,
            max_relative = 1e-14
        );
    }

    #[test]
    fn log_branches_meet_at_threshold() {
        for q in [2u32, 3, 7, 50] {
            let degeneracy = f64::from(q - 1);
            let a = LOG_BRANCH_THRESHOLD / 2.0;
            let x = 2.0 * a;
            let low = -a + (degeneracy * x.exp()).ln_1p();
            let high = a + degeneracy.ln() + ((-x).exp() / degeneracy).ln_1p();
            assert_relative_eq!(low, high, max_relative = 1e-12);
        }
    }

    #[test]
    fn huge_exponent_stays_finite() {
        let (p, s) = setup(16, 12.0, 3.0, 30.0);
        let sp = closed_form_spectrum(&p, s);
        assert!(sp.log_lambda_max.is_finite());
        assert_relative_eq!(sp.log_lambda_max, 363.0 + 15f64.ln(), max_relative = 1e-14);
        assert!(sp.log_abs_ratio < 0.0);
        assert!(partition_function(&p, s, 7).unwrap().is_finite());
    }

    #[test]
    fn power_iteration_examples() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        let m = build_matrix(&p, s).to_dense().unwrap();
        let ev = numeric_dominant_eigenvalue(&m, 1e-12, 100).unwrap();
        assert_relative_eq!(ev, 2.0, epsilon = 1e-12);

        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let m = build_matrix(&p, s).to_dense().unwrap();
        let ev = numeric_dominant_eigenvalue(&m, 1e-12, DEFAULT_POWER_MAX_ITER).unwrap();
        assert_relative_eq!(
            ev,
            closed_form_spectrum(&p, s).lambda_max,
            max_relative = 1e-12
        );

        let (p, s) = setup(5, -2.0, 1.0, 0.3);
        let m = build_matrix(&p, s).to_dense().unwrap();
        let ev = numeric_dominant_eigenvalue(&m, 1e-12, DEFAULT_POWER_MAX_ITER).unwrap();
        assert_relative_eq!(
            ev,
            closed_form_spectrum(&p, s).lambda_max,
            max_relative = 1e-12
        );
    }

    #[test]
    fn power_iteration_on_generic_matrix() {
        // Eigenvalues (5 +/- sqrt 5) / 2; the start vector is not an eigenvector.
        let m = DenseMatrix::from_row_major(2, vec![2.0, 1.0, 1.0, 3.0]);
        let ev = numeric_dominant_eigenvalue(&m, 1e-13, 10_000).unwrap();
        assert_relative_eq!(ev, (5.0 + 5f64.sqrt()) / 2.0, max_relative = 1e-12);
    }

    #[test]
    fn power_iteration_failures() {
        let m = DenseMatrix::from_row_major(2, vec![2.0, 1.0, 1.0, 3.0]);
        assert!(matches!(
            numeric_dominant_eigenvalue(&m, 1e-300, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
        assert_eq!(
            numeric_dominant_eigenvalue(&m, 0.0, 3),
            Err(Error::InvalidTolerance(0.0))
        );
    }

    #[test]
    fn partial_partition_step() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        let v = iterate_partial_partition(
            &PartialPartitionVector::uniform(2),
            &p,
            s,
            Scaling::Unscaled,
        )
        .unwrap();
        assert_eq!(v.components(), &[2.0, 2.0]);

        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let v = iterate_partial_partition(
            &PartialPartitionVector::uniform(3),
            &p,
            s,
            Scaling::Unscaled,
        )
        .unwrap();
        let tm = build_matrix(&p, s);
        for &c in v.components() {
            assert_relative_eq!(c, tm.diag() + 2.0 * tm.offdiag(), max_relative = 1e-15);
            assert_relative_eq!(
                c,
                closed_form_spectrum(&p, s).lambda_max,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn partial_partition_matches_dense_matvec() {
        let (p, s) = setup(4, -0.6, 0.9, 1.3);
        let start = PartialPartitionVector::from_components(vec![0.5, 2.0, 1.0, 3.5]);
        let v = iterate_partial_partition(&start, &p, s, Scaling::Unscaled).unwrap();
        let dense = build_matrix(&p, s)
            .to_dense()
            .unwrap()
            .matvec(start.components());
        for (a, b) in v.components().iter().zip(&dense) {
            assert_relative_eq!(a, b, max_relative = 1e-14);
        }
        let scaled = iterate_partial_partition(&start, &p, s, Scaling::Normalized).unwrap();
        for (a, b) in scaled.log_components().iter().zip(&dense) {
            assert_relative_eq!(*a, b.ln(), max_relative = 1e-13);
        }
    }

    #[test]
    fn scaled_recursion_accumulates_log_lambda_max() {
        let (p, s) = setup(6, 12.0, 3.0, 30.0);
        let n = 500;
        let mut v = PartialPartitionVector::uniform(6);
        for _ in 0..n {
            v = iterate_partial_partition(&v, &p, s, Scaling::Normalized).unwrap();
        }
        let expected = n as f64 * closed_form_spectrum(&p, s).log_lambda_max;
        assert!((v.log_scale() - expected).abs() <= 1e-10 * expected.abs());
        assert!(matches!(
            iterate_partial_partition(
                &PartialPartitionVector::uniform(6),
                &p,
                s,
                Scaling::Unscaled
            ),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn unscaled_recursion_overflow_is_detected() {
        let (p, s) = setup(3, 1.0, 0.0, 250.0);
        let mut v = PartialPartitionVector::uniform(3);
        let mut failed = false;
        for _ in 0..10 {
            match iterate_partial_partition(&v, &p, s, Scaling::Unscaled) {
                Ok(next) => v = next,
                Err(Error::Overflow { .. }) => {
                    failed = true;
                    break;
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(failed);
    }

    #[test]
    fn partition_function_examples() {
        let (p, s) = setup(2, 0.0, 0.0, 1.0);
        assert_relative_eq!(
            partition_function(&p, s, 3).unwrap(),
            8f64.ln(),
            max_relative = 1e-15
        );

        let (p, s) = setup(3, 1.0, 0.5, 0.7);
        let z = partition_function(&p, s, 4).unwrap().exp();
        assert_relative_eq!(z, 2487.8, epsilon = 0.1);

        for (q, j, h, b) in [
            (3, 1.0, 0.5, 0.7),
            (2, 3.0, 1.0, 4.0),
            (5, -2.0, 0.3, 1.1),
            (7, 0.0, 0.0, 1.0),
        ] {
            let (p, s) = setup(q, j, h, b);
            let a = p.bond_exponent(s);
            let trace = f64::from(q).ln() - a;
            assert_relative_eq!(
                partition_function(&p, s, 1).unwrap(),
                trace,
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
        assert_eq!(
            partition_function(&p, s, 0),
            Err(Error::InvalidChainLength { n: 0, min: 1 })
        );
    }

    #[test]
    fn odd_chain_with_negative_minor_eigenvalue() {
        // q = 2, a > 0: lambda_minor = -2 sinh a, lambda_max = 2 cosh a.
        let (p, s) = setup(2, 1.0, 0.0, 5.0);
        let a: f64 = 5.0;
        for n in [1usize, 3, 5] {
            let exact = ((2.0 * a.cosh()).powi(n as i32) - (2.0 * a.sinh()).powi(n as i32)).ln();
            assert_relative_eq!(
                partition_function(&p, s, n).unwrap(),
                exact,
                max_relative = 1e-9
            );
        }
    }
}
