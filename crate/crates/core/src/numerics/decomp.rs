//! Householder QR and one-sided Jacobi singular values for complex matrices.

use num_complex::Complex64;

use super::matrix::{ComplexMatrix, ComplexVector};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Householder QR factorisation `A = Q·R` of a tall (`rows ≥ cols`) matrix.
///
/// `Q` is kept implicitly as the sequence of reflectors `I − 2·v·vᴴ`.
#[derive(Debug, Clone)]
pub struct Qr {
    rows: usize,
    cols: usize,
    reflectors: Vec<Vec<Complex64>>,
    r: ComplexMatrix,
}

impl Qr {
    pub fn new(a: &ComplexMatrix) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::RankDeficient { rank: m, cols: n });
        }
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(n);
        for k in 0..n {
            let x: Vec<Complex64> = (k..m).map(|i| work[(i, k)]).collect();
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            let phase = if x[0].norm() > 0.0 {
                x[0] / x[0].norm()
            } else {
                Complex64::new(1.0, 0.0)
            };
            let alpha = -phase * norm;
            let mut v = x;
            v[0] -= alpha;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if vnorm == 0.0 {
                reflectors.push(Vec::new());
                continue;
            }
            v.iter_mut().for_each(|z| *z /= vnorm);
            for j in k..n {
                let s: Complex64 = (k..m).map(|i| v[i - k].conj() * work[(i, j)]).sum();
                for i in k..m {
                    work[(i, j)] -= 2.0 * v[i - k] * s;
                }
            }
            reflectors.push(v);
        }
        let r = ComplexMatrix::from_fn(n, n, |i, j| if i <= j { work[(i, j)] } else { ZERO });
        Ok(Self {
            rows: m,
            cols: n,
            reflectors,
            r,
        })
    }

    /// Upper-triangular factor (`cols x cols`).
    pub fn r(&self) -> &ComplexMatrix {
        &self.r
    }

    /// Overwrites `y` with `Qᴴ·y`.
    pub fn apply_qh(&self, y: &mut [Complex64]) {
        debug_assert_eq!(y.len(), self.rows);
        for (k, v) in self.reflectors.iter().enumerate() {
            if v.is_empty() {
                continue;
            }
            let s: Complex64 = v.iter().zip(&y[k..]).map(|(a, b)| a.conj() * b).sum();
            for (yi, vi) in y[k..].iter_mut().zip(v) {
                *yi -= 2.0 * vi * s;
            }
        }
    }

    /// Overwrites `y` with `Q·y`.
    pub fn apply_q(&self, y: &mut [Complex64]) {
        debug_assert_eq!(y.len(), self.rows);
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            if v.is_empty() {
                continue;
            }
            let s: Complex64 = v.iter().zip(&y[k..]).map(|(a, b)| a.conj() * b).sum();
            for (yi, vi) in y[k..].iter_mut().zip(v) {
                *yi -= 2.0 * vi * s;
            }
        }
    }

    /// Numeric rank of the factored matrix; `R` shares its singular values.
    pub fn rank(&self) -> usize {
        let sv = singular_values(&self.r);
        count_above(&sv, default_tolerance(self.rows, self.cols, &sv))
    }

    /// Least-squares coefficients and the residual energy `‖y − A·v‖²`.
    ///
    /// Assumes the rank has been checked; a zero pivot yields a non-finite
    /// coefficient.
    pub fn solve(&self, y: &[Complex64]) -> (ComplexVector, f64) {
        let mut z = y.to_vec();
        self.apply_qh(&mut z);
        let residual = z[self.cols..].iter().map(|c| c.norm_sqr()).sum();
        let n = self.cols;
        let mut coef = vec![ZERO; n];
        for i in (0..n).rev() {
            let mut acc = z[i];
            for j in i + 1..n {
                acc -= self.r[(i, j)] * coef[j];
            }
            coef[i] = acc / self.r[(i, i)];
        }
        (ComplexVector::from_iter(coef), residual)
    }

    /// Energy of `y` left after projecting out the column span, `‖Π⊥·y‖²`.
    pub fn residual_energy(&self, y: &[Complex64]) -> f64 {
        let mut z = y.to_vec();
        self.apply_qh(&mut z);
        z[self.cols..].iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Singular values of `a` in descending order (one-sided Jacobi).
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    // Orthogonalise the columns of whichever of A / Aᴴ has fewer of them.
    let work = if a.rows() >= a.cols() { a.clone() } else { a.adjoint() };
    let (m, n) = work.shape();
    let mut cols: Vec<Vec<Complex64>> = (0..n).map(|j| work.column(j).into_inner()).collect();

    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 =
                    cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = gamma / g;
                for i in 0..m {
                    let xp = cols[p][i];
                    let xq = cols[q][i] * phase.conj();
                    cols[p][i] = c * xp - s * xq;
                    cols[q][i] = (s * xp + c * xq) * phase;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

fn default_tolerance(rows: usize, cols: usize, sv: &[f64]) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * sv.first().copied().unwrap_or(0.0)
}

fn count_above(sv: &[f64], tol: f64) -> usize {
    sv.iter().filter(|&&s| s > tol).count()
}

/// Number of singular values above `tol`.
///
/// `None` selects `max(rows, cols) · ε · σ_max`.
pub fn numeric_rank(a: &ComplexMatrix, tol: Option<f64>) -> usize {
    let sv = singular_values(a);
    let tol = tol.unwrap_or_else(|| default_tolerance(a.rows(), a.cols(), &sv));
    count_above(&sv, tol)
}

/// QR of `a`, rejecting matrices without full column rank.
pub fn full_rank_qr(a: &ComplexMatrix) -> Result<Qr> {
    let qr = Qr::new(a)?;
    let rank = qr.rank();
    if rank < a.cols() {
        return Err(Error::RankDeficient {
            rank,
            cols: a.cols(),
        });
    }
    Ok(qr)
}

/// Minimiser of `‖y − a·v‖²` for full-column-rank `a`, via Householder QR.
pub fn least_squares(a: &ComplexMatrix, y: &[Complex64]) -> Result<ComplexVector> {
    if y.len() != a.rows() {
        return Err(Error::dims(format!(
            "observation length {} vs {} rows",
            y.len(),
            a.rows()
        )));
    }
    Ok(full_rank_qr(a)?.solve(y).0)
}

/// Orthogonal-complement projector `I − a(aᴴa)⁻¹aᴴ`.
pub fn projector_complement(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let qr = full_rank_qr(a)?;
    let m = a.rows();
    let n = a.cols();
    // Q₁ columns, then Π⊥ = I − Q₁Q₁ᴴ
    let mut q1 = ComplexMatrix::zeros(m, n);
    for k in 0..n {
        let mut e = vec![ZERO; m];
        e[k] = Complex64::new(1.0, 0.0);
        qr.apply_q(&mut e);
        for i in 0..m {
            q1[(i, k)] = e[i];
        }
    }
    ComplexMatrix::identity(m).sub(&q1.matmul(&q1.adjoint())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn singular_values_of_diagonal() {
        let d = ComplexMatrix::diag(&[c(3.0, 0.0), c(0.0, -5.0), c(1.0, 0.0)]);
        let sv = singular_values(&d);
        assert!((sv[0] - 5.0).abs() < 1e-14);
        assert!((sv[1] - 3.0).abs() < 1e-14);
        assert!((sv[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn wide_matrix_uses_adjoint() {
        let a = ComplexMatrix::new(1, 3, vec![c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)]).unwrap();
        let sv = singular_values(&a);
        assert_eq!(sv.len(), 1);
        assert!((sv[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rank_deficiency_reported() {
        let col = [c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0)];
        let a = ComplexMatrix::from_fn(3, 2, |i, j| col[i] * (j as f64 + 1.0));
        assert_eq!(numeric_rank(&a, None), 1);
        assert_eq!(
            least_squares(&a, &col).unwrap_err(),
            Error::RankDeficient { rank: 1, cols: 2 }
        );
    }

    #[test]
    fn wide_least_squares_rejected() {
        let a = ComplexMatrix::zeros(1, 2);
        assert!(matches!(
            least_squares(&a, &[c(1.0, 0.0)]),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        assert_eq!(numeric_rank(&ComplexMatrix::zeros(3, 3), None), 0);
    }

    #[test]
    fn explicit_tolerance() {
        let d = ComplexMatrix::diag(&[c(1.0, 0.0), c(1e-3, 0.0)]);
        assert_eq!(numeric_rank(&d, Some(1e-2)), 1);
        assert_eq!(numeric_rank(&d, Some(0.0)), 2);
    }
}
