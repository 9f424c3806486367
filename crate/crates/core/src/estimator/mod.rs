//! Sparse recovery of `υ` from `y = Υ·υ + n`.
//!
//! * [`jt_estimate`]: exhaustive δ-joint-typicality search over `L`-subsets
//!   of columns of `Υ`.
//! * [`genie_ls`]: least squares on the true support.
//! * [`omp_estimate`]: greedy orthogonal matching pursuit baseline.
//! * [`crlb`] and the bound calculators in [`bounds`].
//!
//! A subset `J` is δ-jointly typical with `y` when `rank(Υ_J) = L` and
//! `|‖Π⊥_J·y‖²/(KN_s) − σ²·(KN_s − L)/(KN_s)| < δ`.

pub mod bounds;
mod omp;

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{full_rank_qr, ComplexMatrix, ComplexVector, Qr};

pub use bounds::{
    expected_crlb, mse_upper_bound, term1_bound, term3_bound, BoundReport, TERM3_MAX_SUBSETS,
};
pub use omp::omp_estimate;

/// How [`jt_estimate`] picks among typical subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOrder {
    /// First typical subset in lexicographic order.
    #[default]
    LexicographicFirst,
    /// Typical subset with the smallest deviation over the full scan.
    BestStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityConfig {
    pub delta: f64,
    pub sparsity: usize,
    pub search_order: SearchOrder,
    pub max_subsets: Option<u128>,
}

impl TypicalityConfig {
    pub fn new(delta: f64, sparsity: usize) -> Result<Self> {
        let cfg = Self {
            delta,
            sparsity,
            search_order: SearchOrder::default(),
            max_subsets: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_order(mut self, order: SearchOrder) -> Self {
        self.search_order = order;
        self
    }

    pub fn with_max_subsets(mut self, cap: Option<u128>) -> Self {
        self.max_subsets = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config("delta", "must be positive"));
        }
        if self.sparsity == 0 {
            return Err(Error::config("sparsity", "must be at least 1"));
        }
        Ok(())
    }

    /// Threshold `δ′ = δ·KN_s/(KN_s − L)`.
    pub fn delta_prime(&self, kns: usize) -> f64 {
        self.delta * kns as f64 / (kns - self.sparsity) as f64
    }
}

/// `4σ²·√(KN_s − L)/(KN_s)`: four standard deviations of the centred
/// residual energy under the true support.
pub fn default_delta(noise_var: f64, kns: usize, sparsity: usize) -> f64 {
    4.0 * noise_var * ((kns.saturating_sub(sparsity)) as f64).sqrt() / kns as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    /// Recovered support, ascending; empty on failure.
    pub support: Vec<usize>,
    /// Recovered vector; all zeros on failure.
    pub upsilon_hat: ComplexVector,
    /// Typicality deviation of the returned set. On failure, the smallest
    /// deviation seen (`INFINITY` if no subset was full rank). For OMP, the
    /// final residual energy per observation entry.
    pub statistic: f64,
    pub subsets_examined: u64,
    /// No typical subset was found.
    pub failed: bool,
    /// OMP only: selected columns became dependent and the search stopped early.
    pub degenerate: bool,
}

impl EstimateResult {
    fn failure(dim: usize, statistic: f64, subsets_examined: u64) -> Self {
        Self {
            support: Vec::new(),
            upsilon_hat: ComplexVector::zeros(dim),
            statistic,
            subsets_examined,
            failed: true,
            degenerate: false,
        }
    }
}

/// Signed residual-energy deviation `‖Π⊥y‖²/(KN_s) − σ²(KN_s − L)/(KN_s)`.
fn centred_energy(residual: f64, kns: usize, noise_var: f64, l: usize) -> f64 {
    let kns_f = kns as f64;
    residual / kns_f - (kns_f - l as f64) / kns_f * noise_var
}

/// Like [`typicality_statistic`] but without the absolute value.
pub fn signed_typicality_deviation(
    y: &[Complex64],
    sub: &ComplexMatrix,
    noise_var: f64,
    l: usize,
) -> Result<f64> {
    if y.len() != sub.rows() {
        return Err(Error::dims(format!(
            "observation length {} vs {} rows",
            y.len(),
            sub.rows()
        )));
    }
    if sub.cols() != l {
        return Err(Error::dims(format!("{} columns for sparsity {l}", sub.cols())));
    }
    let qr = full_rank_qr(sub)?;
    Ok(centred_energy(qr.residual_energy(y), y.len(), noise_var, l))
}

/// δ-joint-typicality deviation of `y` against the span of `sub`.
pub fn typicality_statistic(
    y: &[Complex64],
    sub: &ComplexMatrix,
    noise_var: f64,
    l: usize,
) -> Result<f64> {
    signed_typicality_deviation(y, sub, noise_var, l).map(f64::abs)
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn scatter(dim: usize, support: &[usize], coef: &[Complex64]) -> ComplexVector {
    let mut v = ComplexVector::zeros(dim);
    for (&k, &c) in support.iter().zip(coef) {
        v[k] = c;
    }
    v
}

/// Exhaustive joint-typicality estimator.
///
/// Subsets are enumerated lexicographically; rank-deficient subsets are
/// counted as examined and treated as non-typical.
pub fn jt_estimate(
    y: &[Complex64],
    upsilon_mat: &ComplexMatrix,
    cfg: &TypicalityConfig,
    noise_var: f64,
) -> Result<EstimateResult> {
    cfg.validate()?;
    let (kns, dim) = upsilon_mat.shape();
    let l = cfg.sparsity;
    if y.len() != kns {
        return Err(Error::dims(format!("observation length {} vs {kns} rows", y.len())));
    }
    if l > dim {
        return Err(Error::invalid(format!("sparsity {l} exceeds dimension {dim}")));
    }
    let required = binomial(dim, l);
    if let Some(cap) = cfg.max_subsets {
        if required > cap {
            return Err(Error::SearchBudgetExceeded { required, cap });
        }
    }

    let mut examined = 0u64;
    let mut least_seen = f64::INFINITY;
    let mut best: Option<(Vec<usize>, Qr, f64)> = None;
    for subset in (0..dim).combinations(l) {
        examined += 1;
        let sub = upsilon_mat.select_columns(&subset)?;
        let qr = Qr::new(&sub)?;
        if qr.rank() < l {
            continue;
        }
        let stat = centred_energy(qr.residual_energy(y), kns, noise_var, l).abs();
        least_seen = least_seen.min(stat);
        if stat >= cfg.delta {
            continue;
        }
        match cfg.search_order {
            SearchOrder::LexicographicFirst => {
                best = Some((subset, qr, stat));
                break;
            }
            SearchOrder::BestStatistic => {
                if best.as_ref().is_none_or(|(_, _, s)| stat < *s) {
                    best = Some((subset, qr, stat));
                }
            }
        }
    }

    Ok(match best {
        Some((support, qr, statistic)) => {
            let (coef, _) = qr.solve(y);
            EstimateResult {
                upsilon_hat: scatter(dim, &support, &coef),
                support,
                statistic,
                subsets_examined: examined,
                failed: false,
                degenerate: false,
            }
        }
        None => EstimateResult::failure(dim, least_seen, examined),
    })
}

fn check_support(support: &[usize], dim: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::invalid("empty support"));
    }
    if let Some(&bad) = support.iter().find(|&&k| k >= dim) {
        return Err(Error::dims(format!("support index {bad} out of range {dim}")));
    }
    if support.iter().duplicates().next().is_some() {
        return Err(Error::invalid("support has repeated indices"));
    }
    Ok(())
}

/// Least squares restricted to a known support; zeros elsewhere.
pub fn genie_ls(y: &[Complex64], upsilon_mat: &ComplexMatrix, support: &[usize]) -> Result<ComplexVector> {
    check_support(support, upsilon_mat.cols())?;
    if y.len() != upsilon_mat.rows() {
        return Err(Error::dims(format!(
            "observation length {} vs {} rows",
            y.len(),
            upsilon_mat.rows()
        )));
    }
    let qr = full_rank_qr(&upsilon_mat.select_columns(support)?)?;
    let (coef, _) = qr.solve(y);
    Ok(scatter(upsilon_mat.cols(), support, &coef))
}

/// `σ²·Tr[(Υ_Iᴴ·Υ_I)⁻¹]`, computed as `σ²·‖R⁻¹‖²_F` from `Υ_I = Q·R`.
pub fn crlb(upsilon_mat: &ComplexMatrix, support: &[usize], noise_var: f64) -> Result<f64> {
    check_support(support, upsilon_mat.cols())?;
    let qr = full_rank_qr(&upsilon_mat.select_columns(support)?)?;
    let r = qr.r();
    let n = r.cols();
    // columns of R⁻¹ by back substitution against unit vectors
    let mut frob = 0.0;
    for col in 0..n {
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..=col).rev() {
            let mut acc = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for j in i + 1..=col {
                acc -= r[(i, j)] * x[j];
            }
            x[i] = acc / r[(i, i)];
        }
        frob += x.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    Ok(noise_var * frob)
}

/// `‖estimate − truth‖²`.
pub fn squared_error(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::dims(format!(
            "estimate length {} vs truth length {}",
            estimate.len(),
            truth.len()
        )));
    }
    Ok(estimate.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dft_matrix;
    use crate::random::SimRng;
    use crate::sensing::{gen_pilots, measurement_matrix, PilotConfig};
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fig3_upsilon(seed: u64, k: usize) -> ComplexMatrix {
        measurement_matrix(&gen_pilots(&PilotConfig::new(5, k, seed).unwrap()), 5).unwrap()
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(25, 1), 25);
        assert_eq!(binomial(25, 3), 2300);
        assert_eq!(binomial(3, 4), 0);
        assert_eq!(binomial(10, 0), 1);
        assert_eq!(binomial(200, 100), u128::MAX);
    }

    #[test]
    fn statistic_for_in_span_and_zero_observation() {
        let ups = fig3_upsilon(1, 8);
        let sub = ups.select_columns(&[3, 17]).unwrap();
        let y = sub.mul_vec(&[c(1.0, -0.5), c(0.2, 2.0)]).unwrap();
        let sigma2 = 0.3;
        let expected = (40.0 - 2.0) / 40.0 * sigma2;
        let stat = typicality_statistic(&y, &sub, sigma2, 2).unwrap();
        assert!((stat - expected).abs() < 1e-12);
        let zero = vec![c(0.0, 0.0); 40];
        assert!((typicality_statistic(&zero, &sub, sigma2, 2).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn statistic_rejects_dependent_columns() {
        let ups = fig3_upsilon(1, 8);
        let dup = ups.select_columns(&[4, 4]).unwrap();
        assert!(matches!(
            typicality_statistic(&vec![c(1.0, 0.0); 40], &dup, 1.0, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn jt_noiseless_recovery() {
        let ups = fig3_upsilon(2, 20);
        let mut truth = ComplexVector::zeros(25);
        truth[13] = c(0.6, -0.8);
        let y = ups.mul_vec(&truth).unwrap();
        let sigma2 = 1e-3;
        let delta = 2.0 * (100.0 - 1.0) / 100.0 * sigma2;
        let cfg = TypicalityConfig::new(delta, 1).unwrap();
        let est = jt_estimate(&y, &ups, &cfg, sigma2).unwrap();
        assert!(!est.failed);
        assert_eq!(est.support, vec![13]);
        assert!(squared_error(&est.upsilon_hat, &truth).unwrap().sqrt() < 1e-9);
        assert!(est.subsets_examined <= 25);
    }

    #[test]
    fn jt_tiny_delta_fails() {
        let ups = fig3_upsilon(3, 20);
        let mut rng = SimRng::seed_from_u64(3);
        let y: Vec<Complex64> = (0..100)
            .map(|_| crate::random::complex_gaussian(&mut rng, 1.0))
            .collect();
        let cfg = TypicalityConfig::new(1e-300, 1).unwrap();
        let est = jt_estimate(&y, &ups, &cfg, 1.0).unwrap();
        assert!(est.failed);
        assert!(est.support.is_empty());
        assert!(est.upsilon_hat.iter().all(|z| *z == c(0.0, 0.0)));
        assert_eq!(est.subsets_examined, 25);
    }

    #[test]
    fn jt_budget_cap() {
        let ups = fig3_upsilon(3, 20);
        let cfg = TypicalityConfig::new(1.0, 3).unwrap().with_max_subsets(Some(1000));
        assert!(matches!(
            jt_estimate(&vec![c(0.0, 0.0); 100], &ups, &cfg, 1.0),
            Err(Error::SearchBudgetExceeded { required: 2300, cap: 1000 })
        ));
    }

    #[test]
    fn jt_skips_rank_deficient_subsets() {
        // columns 0 and 1 identical; with L = 2 the pair {0, 1} must be skipped
        let col = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
        let other = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let a = ComplexMatrix::from_fn(3, 3, |i, j| if j < 2 { col[i] } else { other[i] });
        let cfg = TypicalityConfig::new(10.0, 2).unwrap();
        let est = jt_estimate(&[c(0.0, 0.0); 3], &a, &cfg, 0.0).unwrap();
        assert_eq!(est.support, vec![0, 2]);
        assert_eq!(est.subsets_examined, 2);
    }

    #[test]
    fn genie_examples() {
        let ups = fig3_upsilon(4, 12);
        let mut truth = ComplexVector::zeros(25);
        truth[2] = c(1.0, 1.0);
        truth[20] = c(-0.5, 0.0);
        let y = ups.mul_vec(&truth).unwrap();
        let est = genie_ls(&y, &ups, &[2, 20]).unwrap();
        assert!(squared_error(&est, &truth).unwrap() < 1e-20);

        // singleton support: scalar least squares
        let mut rng = SimRng::seed_from_u64(10);
        let y: Vec<Complex64> = (0..60)
            .map(|_| crate::random::complex_gaussian(&mut rng, 1.0))
            .collect();
        let est = genie_ls(&y, &ups, &[7]).unwrap();
        let col = ups.column(7);
        let expected = col.dot(&y) / col.norm_sqr();
        assert!((est[7] - expected).norm() < 1e-12);

        assert!(genie_ls(&y, &ups, &[]).is_err());
        assert!(genie_ls(&y, &ups, &[25]).is_err());
        assert!(genie_ls(&y, &ups, &[3, 3]).is_err());
    }

    #[test]
    fn crlb_examples() {
        let u = dft_matrix(6).unwrap();
        assert!((crlb(&u, &[0, 2, 5], 0.4).unwrap() - 1.2).abs() < 1e-12);

        let ups = fig3_upsilon(5, 20);
        let col = ups.column(9);
        assert!((crlb(&ups, &[9], 2.0).unwrap() - 2.0 / col.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn crlb_matches_explicit_gram_inverse() {
        // 2×2 Gram inverse by the adjugate formula
        let ups = fig3_upsilon(6, 9);
        let sub = ups.select_columns(&[1, 6]).unwrap();
        let g = sub.adjoint().matmul(&sub).unwrap();
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        let trace_inv = ((g[(0, 0)] + g[(1, 1)]) / det).re;
        assert!((crlb(&ups, &[1, 6], 1.0).unwrap() - trace_inv).abs() < 1e-12);
    }

    #[test]
    fn squared_error_examples() {
        let truth = vec![c(0.0, 0.0); 4];
        assert_eq!(squared_error(&truth, &truth).unwrap(), 0.0);
        let mut e = truth.clone();
        e[2] = c(1.0, 0.0);
        assert_eq!(squared_error(&e, &truth).unwrap(), 1.0);
        let t2 = vec![c(1.0, 1.0), c(0.0, 2.0)];
        assert_eq!(squared_error(&[c(0.0, 0.0); 2], &t2).unwrap(), 6.0);
        assert!(squared_error(&e, &t2).is_err());
    }

    #[test]
    fn default_delta_shrinks_with_kns() {
        let a = default_delta(1.0, 40, 1);
        let b = default_delta(1.0, 400, 1);
        assert!(b < a);
        assert!((a - 4.0 * 39f64.sqrt() / 40.0).abs() < 1e-15);
    }
}
