//! Analytic MSE upper bound of the joint-typicality estimator:
//! `CRLB + term1 + term3`, where term1 weights the no-typical-set event and
//! term3 sums the wrong-support events over every `L`-subset `J ≠ I`.

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{binomial, check_support, crlb};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Enumeration cap for [`term3_bound`].
pub const TERM3_MAX_SUBSETS: u128 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub crlb: f64,
    pub term1: f64,
    pub term3: f64,
    pub upper_bound: f64,
}

impl BoundReport {
    pub fn new(crlb: f64, term1: f64, term3: f64) -> Self {
        Self {
            crlb,
            term1,
            term3,
            upper_bound: crlb + term1 + term3,
        }
    }
}

fn check_kns(kns: usize, l: usize) -> Result<()> {
    if kns <= l {
        return Err(Error::invalid(format!("KN_s = {kns} must exceed L = {l}")));
    }
    Ok(())
}

/// `2‖υ‖²·exp(−(δ²/(4σ⁴))·(KN_s)²/(KN_s − L + 2δKN_s/σ²))`.
///
/// Returns 0 for `σ² = 0`, the limit of the formula.
pub fn term1_bound(truth_energy: f64, noise_var: f64, delta: f64, kns: usize, l: usize) -> Result<f64> {
    check_kns(kns, l)?;
    if truth_energy == 0.0 {
        return Ok(0.0);
    }
    if noise_var == 0.0 {
        return Ok(0.0);
    }
    let kns_f = kns as f64;
    let ratio = delta / noise_var;
    let exponent = -(ratio * ratio / 4.0) * kns_f * kns_f / (kns_f - l as f64 + 2.0 * ratio * kns_f);
    Ok(2.0 * truth_energy * exponent.exp())
}

/// `(Lσ² + ‖υ‖²)·Σ_{J≠I, |J|=L} exp(((L − KN_s)/4)·((m_J − δ′)/(m_J + σ²))²)`
/// with `m_J = Σ_{k∈I∖J} |υ_k|²` and `δ′ = δ·KN_s/(KN_s − L)`.
///
/// The sum runs over all `L`-subsets of `0..truth.len()` other than `I`
/// (`I` must have exactly `L` entries). The squared fraction is evaluated as
/// written even when `m_J < δ′`.
pub fn term3_bound(
    truth: &[Complex64],
    support: &[usize],
    noise_var: f64,
    delta: f64,
    kns: usize,
    l: usize,
) -> Result<f64> {
    check_kns(kns, l)?;
    let dim = truth.len();
    check_support(support, dim)?;
    if support.len() != l {
        return Err(Error::invalid(format!(
            "support has {} entries, expected L = {l}",
            support.len()
        )));
    }
    let required = binomial(dim, l);
    if required > TERM3_MAX_SUBSETS {
        return Err(Error::SearchBudgetExceeded {
            required,
            cap: TERM3_MAX_SUBSETS,
        });
    }

    let mut on_support = vec![false; dim];
    for &k in support {
        on_support[k] = true;
    }
    let support_energy: Vec<f64> = support.iter().map(|&k| truth[k].norm_sqr()).collect();
    let total_energy: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    let kns_f = kns as f64;
    let delta_prime = delta * kns_f / (kns_f - l as f64);
    let rate = (l as f64 - kns_f) / 4.0;

    let mut in_j = vec![false; dim];
    let mut sum = 0.0;
    for subset in (0..dim).combinations(l) {
        if subset.iter().all(|&k| on_support[k]) {
            continue; // J == I
        }
        for &k in &subset {
            in_j[k] = true;
        }
        let missed: f64 = support
            .iter()
            .zip(&support_energy)
            .filter(|(k, _)| !in_j[**k])
            .map(|(_, e)| e)
            .sum();
        for &k in &subset {
            in_j[k] = false;
        }
        let frac = (missed - delta_prime) / (missed + noise_var);
        sum += (rate * frac * frac).exp();
    }
    Ok((l as f64 * noise_var + total_energy) * sum)
}

/// Per-realization bound: `crlb(Υ, I, σ²) + term1 + term3`, with
/// `KN_s = rows(Υ)` and `L = |I|`.
pub fn mse_upper_bound(
    truth: &[Complex64],
    support: &[usize],
    upsilon_mat: &ComplexMatrix,
    noise_var: f64,
    delta: f64,
) -> Result<BoundReport> {
    if truth.len() != upsilon_mat.cols() {
        return Err(Error::dims(format!(
            "truth length {} vs {} columns of Υ",
            truth.len(),
            upsilon_mat.cols()
        )));
    }
    let kns = upsilon_mat.rows();
    let l = support.len();
    let energy: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    Ok(BoundReport::new(
        crlb(upsilon_mat, support, noise_var)?,
        term1_bound(energy, noise_var, delta, kns, l)?,
        term3_bound(truth, support, noise_var, delta, kns, l)?,
    ))
}

/// CRLB averaged over i.i.d. `CN(0, 1)` pilots, in closed form.
///
/// Support columns sharing the identity index `k mod N_s` form a block
/// whose Gram matrix is complex Wishart with `K` degrees of freedom; blocks
/// are mutually orthogonal. A `p`-column block contributes
/// `E Tr[W⁻¹] = p/(K − p)`.
pub fn expected_crlb(support: &[usize], n_s: usize, k: usize, noise_var: f64) -> Result<f64> {
    if support.is_empty() || n_s == 0 {
        return Err(Error::invalid("empty support or zero n_s"));
    }
    let counts = support.iter().map(|&c| c % n_s).counts();
    let mut total = 0.0;
    for (_, p) in counts {
        if k <= p {
            return Err(Error::invalid(format!(
                "K = {k} must exceed the {p} support columns sharing a receive index"
            )));
        }
        total += p as f64 / (k - p) as f64;
    }
    Ok(noise_var * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn term1_limits() {
        assert_eq!(term1_bound(0.0, 1.0, 0.1, 40, 1).unwrap(), 0.0);
        let tiny = term1_bound(3.0, 1.0, 1e-12, 40, 1).unwrap();
        assert!((tiny - 6.0).abs() < 1e-9);
        assert!(term1_bound(1.0, 1.0, 0.1, 1, 1).is_err());
    }

    #[test]
    fn term1_decreases_with_kns() {
        for &delta in &[0.01, 0.1, 1.0] {
            for &kns in &[10usize, 40, 100, 400] {
                let a = term1_bound(1.0, 0.5, delta, kns, 2).unwrap();
                let b = term1_bound(1.0, 0.5, delta, 2 * kns, 2).unwrap();
                assert!(b < a, "delta {delta} kns {kns}: {b} !< {a}");
            }
        }
    }

    #[test]
    fn term3_single_term() {
        let truth = [c(1.0, 0.0), c(0.0, 0.0)];
        let sigma2 = 0.1;
        let delta = 0.05;
        let kns = 8;
        let got = term3_bound(&truth, &[0], sigma2, delta, kns, 1).unwrap();
        let dp = delta * 8.0 / 7.0;
        let frac: f64 = (1.0 - dp) / (1.0 + sigma2);
        let expected = (sigma2 + 1.0) * ((1.0 - 8.0) / 4.0 * frac * frac).exp();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn term3_symmetry_l1() {
        let mut truth = vec![c(0.0, 0.0); 25];
        truth[11] = c(0.0, 2.0);
        let (sigma2, delta, kns) = (0.01, 0.002, 60);
        let got = term3_bound(&truth, &[11], sigma2, delta, kns, 1).unwrap();
        let dp = delta * 60.0 / 59.0;
        let frac: f64 = (4.0 - dp) / (4.0 + sigma2);
        let expected = (sigma2 + 4.0) * 24.0 * ((1.0 - 60.0) / 4.0 * frac * frac).exp();
        assert!((got - expected).abs() < 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn term3_decreases_with_kns() {
        let truth = [c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.5), c(0.0, 0.0), c(0.0, 0.0)];
        for &kns in &[10usize, 20, 50] {
            let a = term3_bound(&truth, &[0, 2], 0.1, 0.01, kns, 2).unwrap();
            let b = term3_bound(&truth, &[0, 2], 0.1, 0.01, 2 * kns, 2).unwrap();
            assert!(b < a);
        }
    }

    #[test]
    fn term3_rejects_bad_support() {
        let truth = [c(1.0, 0.0); 4];
        assert!(term3_bound(&truth, &[0], 0.1, 0.1, 8, 2).is_err());
        assert!(term3_bound(&truth, &[0, 9], 0.1, 0.1, 8, 2).is_err());
    }

    #[test]
    fn expected_crlb_blocks() {
        assert!((expected_crlb(&[3], 5, 20, 1.0).unwrap() - 1.0 / 19.0).abs() < 1e-15);
        // columns 1 and 6 share receive index 1; column 2 stands alone
        let v = expected_crlb(&[1, 2, 6], 5, 10, 2.0).unwrap();
        assert!((v - 2.0 * (2.0 / 8.0 + 1.0 / 9.0)).abs() < 1e-15);
        assert!(expected_crlb(&[0, 5], 5, 2, 1.0).is_err());
    }

    #[test]
    fn report_sums_terms() {
        let r = BoundReport::new(0.1, 0.2, 0.3);
        assert!((r.upper_bound - 0.6).abs() < 1e-15);
        assert!(r.upper_bound >= r.crlb);
    }
}
