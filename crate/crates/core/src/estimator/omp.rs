use num_complex::Complex64;

use super::{scatter, EstimateResult};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, ComplexVector, Qr};

/// Orthogonal matching pursuit with `l` greedy steps.
///
/// Each step picks the unselected column maximising
/// `|a_cᴴ·r| / ‖a_c‖` (ties to the lowest index), refits least squares on the
/// selection, and updates the residual. If a new column makes the selection
/// rank deficient the search stops and the result is flagged `degenerate`,
/// keeping the last full-rank fit.
pub fn omp_estimate(y: &[Complex64], upsilon_mat: &ComplexMatrix, l: usize) -> Result<EstimateResult> {
    let (rows, dim) = upsilon_mat.shape();
    if y.len() != rows {
        return Err(Error::dims(format!("observation length {} vs {rows} rows", y.len())));
    }
    if l == 0 || l > dim {
        return Err(Error::invalid(format!("OMP sparsity {l} must lie in 1..={dim}")));
    }
    let columns: Vec<ComplexVector> = (0..dim).map(|j| upsilon_mat.column(j)).collect();
    let norms: Vec<f64> = columns.iter().map(|c| c.norm()).collect();

    let mut selected: Vec<usize> = Vec::with_capacity(l);
    let mut chosen = vec![false; dim];
    let mut coef = ComplexVector::zeros(0);
    let mut residual = y.to_vec();
    let mut degenerate = false;

    for _ in 0..l {
        let mut pick = None;
        let mut best = f64::NEG_INFINITY;
        for j in 0..dim {
            if chosen[j] || norms[j] == 0.0 {
                continue;
            }
            let score = columns[j].dot(&residual).norm() / norms[j];
            if score > best {
                best = score;
                pick = Some(j);
            }
        }
        let Some(j) = pick else {
            degenerate = true;
            break;
        };
        selected.push(j);
        chosen[j] = true;

        let qr = Qr::new(&upsilon_mat.select_columns(&selected)?)?;
        if qr.rank() < selected.len() {
            selected.pop();
            degenerate = true;
            break;
        }
        let (c, _) = qr.solve(y);
        let fit = upsilon_mat.select_columns(&selected)?.mul_vec(&c)?;
        residual = y.iter().zip(fit.iter()).map(|(a, b)| a - b).collect();
        coef = c;
    }

    let mut order: Vec<usize> = (0..selected.len()).collect();
    order.sort_by_key(|&i| selected[i]);
    let support: Vec<usize> = order.iter().map(|&i| selected[i]).collect();
    let sorted_coef: Vec<Complex64> = order.iter().map(|&i| coef[i]).collect();
    let statistic = residual.iter().map(|z| z.norm_sqr()).sum::<f64>() / rows as f64;

    Ok(EstimateResult {
        upsilon_hat: scatter(dim, &support, &sorted_coef),
        support,
        statistic,
        subsets_examined: selected.len() as u64,
        failed: false,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::squared_error;
    use crate::numerics::least_squares;
    use crate::sensing::{gen_pilots, measurement_matrix, PilotConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn upsilon(seed: u64) -> ComplexMatrix {
        measurement_matrix(&gen_pilots(&PilotConfig::new(5, 20, seed).unwrap()), 5).unwrap()
    }

    #[test]
    fn noiseless_single_column() {
        let ups = upsilon(1);
        for k in [0, 7, 24] {
            let mut truth = ComplexVector::zeros(25);
            truth[k] = c(-1.0, 0.3);
            let y = ups.mul_vec(&truth).unwrap();
            let est = omp_estimate(&y, &ups, 1).unwrap();
            assert_eq!(est.support, vec![k]);
            assert!(squared_error(&est.upsilon_hat, &truth).unwrap() < 1e-20);
        }
    }

    #[test]
    fn zero_observation_picks_lowest_indices() {
        let ups = upsilon(2);
        let est = omp_estimate(&[c(0.0, 0.0); 100], &ups, 3).unwrap();
        assert_eq!(est.support, vec![0, 1, 2]);
        assert!(est.upsilon_hat.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn full_selection_is_least_squares() {
        let ups = upsilon(3);
        let mut rng = <crate::random::SimRng as rand::SeedableRng>::seed_from_u64(4);
        let y: Vec<Complex64> = (0..100)
            .map(|_| crate::random::complex_gaussian(&mut rng, 1.0))
            .collect();
        let est = omp_estimate(&y, &ups, 25).unwrap();
        let ls = least_squares(&ups, &y).unwrap();
        assert_eq!(est.support, (0..25).collect::<Vec<_>>());
        assert!(squared_error(&est.upsilon_hat, &ls).unwrap() < 1e-18);
    }

    #[test]
    fn dependent_columns_flag_degenerate() {
        let col = [c(1.0, 0.0), c(1.0, 1.0), c(0.0, 2.0)];
        let a = ComplexMatrix::from_fn(3, 2, |i, _| col[i]);
        let est = omp_estimate(&col, &a, 2).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.support, vec![0]);
        assert!((est.upsilon_hat[0] - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_sparsity() {
        let ups = upsilon(5);
        assert!(omp_estimate(&[c(0.0, 0.0); 100], &ups, 0).is_err());
        assert!(omp_estimate(&[c(0.0, 0.0); 100], &ups, 26).is_err());
    }
}
