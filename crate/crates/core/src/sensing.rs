//! Pilot generation, the Kronecker measurement matrix `Υ = Xᵀ ⊗ I_{N_s}`,
//! and noisy reception `y = Υ·υ + n`.

use num_complex::Complex64;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{kron, ComplexMatrix, ComplexVector};
use crate::random::{complex_gaussian, SimRng};

/// Pilot block parameters. Entries are i.i.d. `CN(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PilotConfig {
    pub n_d: usize,
    pub k: usize,
    pub seed: u64,
}

impl PilotConfig {
    pub fn new(n_d: usize, k: usize, seed: u64) -> Result<Self> {
        if n_d == 0 {
            return Err(Error::invalid("n_d must be at least 1"));
        }
        if k == 0 {
            return Err(Error::invalid("time-slot count K must be at least 1"));
        }
        let cfg = Self { n_d, k, seed };
        if !cfg.full_rank_expected() {
            log::warn!("K = {k} does not exceed N_d = {n_d}; Υ is not guaranteed full column rank");
        }
        Ok(cfg)
    }

    /// `K > N_d`, the condition under which `Υ` has full column rank with
    /// probability one.
    pub fn full_rank_expected(&self) -> bool {
        self.k > self.n_d
    }

    /// Expected per-slot transmit power `E{xᴴx}` under unit-variance entries.
    pub fn p_ms(&self) -> f64 {
        self.n_d as f64
    }
}

/// `N_d x K` pilot block, deterministic in `cfg.seed`.
pub fn gen_pilots(cfg: &PilotConfig) -> ComplexMatrix {
    let mut rng = SimRng::seed_from_u64(cfg.seed);
    ComplexMatrix::from_fn(cfg.n_d, cfg.k, |_, _| complex_gaussian(&mut rng, 1.0))
}

/// `Υ = Xᵀ ⊗ I_{n_s}`, of shape `(K·n_s) x (N_d·n_s)`.
///
/// Column `j·n_s + i` holds pilot row `j` on the rows `i, i + n_s, …`, so it
/// has exactly `K` structural nonzeros.
pub fn measurement_matrix(pilots: &ComplexMatrix, n_s: usize) -> Result<ComplexMatrix> {
    if n_s == 0 {
        return Err(Error::invalid("n_s must be at least 1"));
    }
    Ok(kron(&pilots.transpose(), &ComplexMatrix::identity(n_s)))
}

/// Pilots, the measurement matrix they induce, and the noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub pilots: ComplexMatrix,
    pub upsilon_mat: ComplexMatrix,
    /// Per complex entry, `E|n|² = σ²`.
    pub noise_var: f64,
    n_s: usize,
}

impl MeasurementModel {
    pub fn new(pilots: ComplexMatrix, n_s: usize, noise_var: f64) -> Result<Self> {
        check_noise_var(noise_var)?;
        let upsilon_mat = measurement_matrix(&pilots, n_s)?;
        Ok(Self {
            pilots,
            upsilon_mat,
            noise_var,
            n_s,
        })
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Result<Self> {
        check_noise_var(noise_var)?;
        self.noise_var = noise_var;
        Ok(self)
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_d(&self) -> usize {
        self.pilots.rows()
    }

    /// Time-slot count `K`.
    pub fn k(&self) -> usize {
        self.pilots.cols()
    }

    /// Observation length `K·N_s`.
    pub fn kns(&self) -> usize {
        self.upsilon_mat.rows()
    }
}

fn check_noise_var(noise_var: f64) -> Result<()> {
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!("noise variance {noise_var} must be ≥ 0")));
    }
    Ok(())
}

/// One noisy reception together with the truth that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: ComplexVector,
    pub truth: ComplexVector,
    pub support: Vec<usize>,
    pub noise_var: f64,
}

/// `y = Υ·truth + n` with `n ~ CN(0, σ²·I)`.
pub fn observe<R: rand::Rng + ?Sized>(
    model: &MeasurementModel,
    truth: &ComplexVector,
    support: &[usize],
    rng: &mut R,
) -> Result<Observation> {
    if truth.len() != model.upsilon_mat.cols() {
        return Err(Error::dims(format!(
            "truth length {} vs {} columns of Υ",
            truth.len(),
            model.upsilon_mat.cols()
        )));
    }
    let mut y = model.upsilon_mat.mul_vec(truth)?;
    if model.noise_var > 0.0 {
        for z in y.as_mut_slice() {
            *z += complex_gaussian(rng, model.noise_var);
        }
    }
    Ok(Observation {
        y,
        truth: truth.clone(),
        support: support.to_vec(),
        noise_var: model.noise_var,
    })
}

/// Noise variance giving the requested SNR, where SNR is the average
/// received signal energy per observation entry over `σ²`:
/// `σ² = (‖υ‖²/N_s)·10^(−snr_db/10)`, using `E‖Υυ‖² = K‖υ‖²`.
pub fn snr_to_noise_var(snr_db: f64, n_s: usize, truth: &[Complex64]) -> Result<f64> {
    if !snr_db.is_finite() {
        return Err(Error::invalid("SNR must be finite"));
    }
    let energy: f64 = truth.iter().map(|z| z.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::invalid("SNR is undefined for an all-zero truth"));
    }
    Ok(energy / n_s as f64 * 10f64.powf(-snr_db / 10.0))
}
