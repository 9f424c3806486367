//! Quick invariant checks behind the `selftest` subcommand.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};

use crate::channel::{angular_transform, cascade_from_sparse, Geometry};
use crate::estimator::{crlb, genie_ls, signed_typicality_deviation, squared_error};
use crate::numerics::{dft_matrix, kron, numeric_rank, projector_complement, ComplexMatrix};
use crate::random::{complex_gaussian, SimRng};
use crate::sensing::{gen_pilots, measurement_matrix, PilotConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn gaussian_matrix(rng: &mut SimRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

fn dft_unitarity() -> CheckOutcome {
    let mut worst = 0.0f64;
    for n in 1..=64 {
        let u = dft_matrix(n).expect("n ≥ 1");
        let g = u.adjoint().matmul(&u).expect("square");
        worst = worst.max(g.max_abs_diff(&ComplexMatrix::identity(n)));
    }
    outcome("dft unitarity", worst < 1e-10, format!("max |UᴴU − I| = {worst:.3e}"))
}

fn vectorization_identity(rng: &mut SimRng) -> CheckOutcome {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (p, q, r) = (rng.random_range(1..7), rng.random_range(1..7), rng.random_range(1..7));
        let m = gaussian_matrix(rng, p, q);
        let x = gaussian_matrix(rng, q, r);
        let lhs = m.matmul(&x).expect("chain").vec();
        let rhs = kron(&x.transpose(), &ComplexMatrix::identity(p))
            .mul_vec(&m.vec())
            .expect("shape");
        let dev = lhs.iter().zip(rhs.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    outcome("vec(MX) = (Xᵀ⊗I)vec(M)", worst < 1e-10, format!("max deviation {worst:.3e}"))
}

fn kron_rank(rng: &mut SimRng) -> CheckOutcome {
    let mut ok = true;
    for (ra, rb) in [(1, 2), (2, 2), (3, 1)] {
        let a = gaussian_matrix(rng, 5, ra).matmul(&gaussian_matrix(rng, ra, 4)).expect("chain");
        let b = gaussian_matrix(rng, 3, rb).matmul(&gaussian_matrix(rng, rb, 3)).expect("chain");
        ok &= numeric_rank(&kron(&a, &b), None) == ra * rb;
    }
    outcome("rank(A⊗B) = rank(A)·rank(B)", ok, String::new())
}

fn projector(rng: &mut SimRng) -> CheckOutcome {
    let a = gaussian_matrix(rng, 30, 4);
    let p = projector_complement(&a).expect("full rank");
    let idem = p.matmul(&p).expect("square").max_abs_diff(&p);
    let herm = p.adjoint().max_abs_diff(&p);
    let annih = p.matmul(&a).expect("chain").max_abs();
    let trace = (p.trace() - Complex64::new(26.0, 0.0)).norm();
    let worst = idem.max(herm).max(annih).max(trace);
    outcome(
        "projector idempotent/hermitian/annihilating",
        worst < 1e-9,
        format!("worst deviation {worst:.3e}"),
    )
}

fn measurement_rank(rng: &mut SimRng) -> CheckOutcome {
    let mut full = 0;
    let draws = 100;
    for _ in 0..draws {
        let x = gen_pilots(&PilotConfig { n_d: 5, k: 20, seed: rng.random() });
        let ups = measurement_matrix(&x, 5).expect("n_s ≥ 1");
        if numeric_rank(&ups, None) == 25 {
            full += 1;
        }
    }
    outcome("Υ full column rank for K > N_d", full == draws, format!("{full}/{draws} draws"))
}

fn crlb_oracle(rng: &mut SimRng) -> CheckOutcome {
    let draws = 4000;
    let k = 20;
    let mut acc = 0.0;
    for _ in 0..draws {
        let x = gen_pilots(&PilotConfig { n_d: 5, k, seed: rng.random() });
        let ups = measurement_matrix(&x, 5).expect("n_s ≥ 1");
        acc += crlb(&ups, &[rng.random_range(0..25)], 1.0).expect("full rank");
    }
    let mean = acc / draws as f64;
    let target = 1.0 / (k as f64 - 1.0);
    let rel = (mean / target - 1.0).abs();
    outcome("mean CRLB ≈ σ²/(K−1)", rel < 0.05, format!("{mean:.5} vs {target:.5}"))
}

fn genie_and_centering(rng: &mut SimRng) -> CheckOutcome {
    let x = gen_pilots(&PilotConfig { n_d: 5, k: 12, seed: rng.random() });
    let ups = measurement_matrix(&x, 5).expect("n_s ≥ 1");
    let support = [7usize];
    let sigma2 = 0.01;
    let bound = crlb(&ups, &support, sigma2).expect("full rank");
    let sub = ups.select_columns(&support).expect("in range");
    let mut truth = vec![Complex64::new(0.0, 0.0); 25];
    truth[7] = Complex64::new(0.6, 0.8);
    let clean = ups.mul_vec(&truth).expect("shape");
    let n = 4000;
    let (mut se, mut dev) = (0.0, 0.0);
    for _ in 0..n {
        let y: Vec<Complex64> = clean.iter().map(|c| c + complex_gaussian(rng, sigma2)).collect();
        let est = genie_ls(&y, &ups, &support).expect("full rank");
        se += squared_error(&est, &truth).expect("lengths");
        dev += signed_typicality_deviation(&y, &sub, sigma2, 1).expect("full rank");
    }
    let ratio = se / n as f64 / bound;
    let centre = (dev / n as f64) / sigma2;
    outcome(
        "genie MSE ≈ CRLB, typicality centred",
        (ratio - 1.0).abs() < 0.08 && centre.abs() < 0.05,
        format!("MSE/CRLB = {ratio:.4}, mean deviation/σ² = {centre:.2e}"),
    )
}

fn angular_roundtrip(rng: &mut SimRng) -> CheckOutcome {
    let g = Geometry::new(6, 4, 2, 3, 0.5).expect("valid geometry");
    let h = gaussian_matrix(rng, 4, 6);
    let (_, v) = angular_transform(&h, &g).expect("shape");
    let back = cascade_from_sparse(&v, &g).expect("shape");
    let dev = back.max_abs_diff(&h).max((v.norm() - h.frobenius_norm()).abs());
    outcome("angular transform round trip", dev < 1e-10, format!("deviation {dev:.3e}"))
}

/// Runs every check with a fixed internal seed.
pub fn run_selftest() -> Vec<CheckOutcome> {
    let mut rng = SimRng::seed_from_u64(0x5e1f_7e57);
    vec![
        dft_unitarity(),
        vectorization_identity(&mut rng),
        kron_rank(&mut rng),
        projector(&mut rng),
        angular_roundtrip(&mut rng),
        measurement_rank(&mut rng),
        crlb_oracle(&mut rng),
        genie_and_centering(&mut rng),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for c in super::run_selftest() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
