use std::time::Instant;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EstimatorKind, ExperimentConfig};
use super::seed::trial_seed;
use crate::channel::{
    random_hop, realize_physical, synth_sparse_signal, GroundTruth, HopSide, TruthMode,
};
use crate::error::{Error, Result};
use crate::estimator::{
    crlb, default_delta, genie_ls, jt_estimate, omp_estimate, squared_error, term1_bound,
    term3_bound, EstimateResult,
};
use crate::numerics::ComplexVector;
use crate::random::SimRng;
use crate::sensing::{gen_pilots, observe, snr_to_noise_var, MeasurementModel, PilotConfig};

/// Outcome of one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub k: usize,
    pub snr_db: f64,
    pub trial_index: usize,
    pub seed: u64,
    pub squared_error: f64,
    /// `σ²·Tr[(Υ_Iᴴ·Υ_I)⁻¹]` for this trial's pilots; NaN if `Υ_I` was rank deficient.
    pub crlb_value: f64,
    pub failed: bool,
    pub subsets_examined: u64,
    pub support_correct: bool,
    /// Sparsity handed to the estimator.
    pub sparsity: usize,
    pub noise_var: f64,
    pub delta: f64,
    /// Estimator error, if one was raised; the trial then counts as failed
    /// with a zero estimate.
    pub error: Option<String>,
}

/// Aggregates at one `(K, SNR)` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub snr_db: f64,
    pub mse: f64,
    pub crlb: f64,
    pub upper_bound: f64,
    pub term1: f64,
    pub term3: f64,
    pub fail_rate: f64,
    pub trials: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Per-trial records in `(K, SNR, trial)` order.
    pub records: Vec<TrialRecord>,
}

/// Ground truth for one trial, drawn from `rng`.
pub fn generate_truth(cfg: &ExperimentConfig, rng: &mut SimRng) -> Result<GroundTruth> {
    let geometry = cfg.geometry();
    match cfg.mode {
        TruthMode::Synthetic => {
            let (sparse_vec, support) =
                synth_sparse_signal(geometry.sparse_dim(), cfg.sparsity, rng, cfg.magnitude)?;
            Ok(GroundTruth::Synthetic { sparse_vec, support })
        }
        mode => {
            let on_grid = mode == TruthMode::PhysicalOnGrid;
            let hop1 = random_hop(
                &geometry,
                HopSide::BsToRis,
                cfg.paths_bs_ris,
                cfg.path_loss_bs_ris(),
                on_grid,
                rng,
            )?;
            let hop2 = random_hop(
                &geometry,
                HopSide::RisToMs,
                cfg.paths_ris_ms,
                cfg.path_loss_ris_ms(),
                on_grid,
                rng,
            )?;
            let r = realize_physical(&geometry, &hop1, &hop2, None, rng)?;
            if r.support.is_empty() {
                return Err(Error::invalid("physical channel realised an all-zero cascade"));
            }
            Ok(GroundTruth::Physical(Box::new(r)))
        }
    }
}

struct TrialSetup {
    seed: u64,
    truth: GroundTruth,
    model: MeasurementModel,
    y: ComplexVector,
    delta: f64,
}

fn setup_trial(cfg: &ExperimentConfig, k: usize, snr_db: f64, trial_index: usize) -> Result<TrialSetup> {
    let seed = trial_seed(cfg.master_seed, k, snr_db, trial_index);
    let mut rng = SimRng::seed_from_u64(seed);
    let truth = generate_truth(cfg, &mut rng)?;
    let pilots = gen_pilots(&PilotConfig::new(cfg.n_d, k, rng.random())?);
    let noise_var = snr_to_noise_var(snr_db, cfg.n_s, truth.sparse_vec())?;
    let model = MeasurementModel::new(pilots, cfg.n_s, noise_var)?;
    let obs = observe(&model, truth.sparse_vec(), truth.support(), &mut rng)?;
    let sparsity = truth.support().len();
    let delta = cfg
        .delta
        .unwrap_or_else(|| default_delta(noise_var, model.kns(), sparsity));
    Ok(TrialSetup {
        seed,
        truth,
        model,
        y: obs.y,
        delta,
    })
}

fn run_estimator(cfg: &ExperimentConfig, s: &TrialSetup) -> Result<EstimateResult> {
    let ups = &s.model.upsilon_mat;
    let l = s.truth.support().len();
    match cfg.estimator {
        EstimatorKind::Jt => jt_estimate(&s.y, ups, &cfg.typicality(s.delta, l)?, s.model.noise_var),
        EstimatorKind::Omp => omp_estimate(&s.y, ups, l),
        EstimatorKind::Genie => {
            let upsilon_hat = genie_ls(&s.y, ups, s.truth.support())?;
            Ok(EstimateResult {
                support: s.truth.support().to_vec(),
                upsilon_hat,
                statistic: f64::NAN,
                subsets_examined: 1,
                failed: false,
                degenerate: false,
            })
        }
    }
}

/// Runs one trial. Setup errors (bad geometry, unreachable grid points)
/// are returned; estimator errors are recorded in the trial.
pub fn run_trial(cfg: &ExperimentConfig, k: usize, snr_db: f64, trial_index: usize) -> Result<TrialRecord> {
    let s = setup_trial(cfg, k, snr_db, trial_index)?;
    let truth = s.truth.sparse_vec();
    let support = s.truth.support();
    let noise_var = s.model.noise_var;
    let crlb_value = crlb(&s.model.upsilon_mat, support, noise_var).unwrap_or(f64::NAN);

    let (squared_error, failed, subsets_examined, support_correct, error) =
        match run_estimator(cfg, &s) {
            Ok(est) => (
                squared_error(&est.upsilon_hat, truth)?,
                est.failed,
                est.subsets_examined,
                !est.failed && est.support == support,
                None,
            ),
            Err(e) => (truth.norm_sqr(), true, 0, false, Some(e.to_string())),
        };

    Ok(TrialRecord {
        k,
        snr_db,
        trial_index,
        seed: s.seed,
        squared_error,
        crlb_value,
        failed,
        subsets_examined,
        support_correct,
        sparsity: support.len(),
        noise_var,
        delta: s.delta,
        error,
    })
}

/// `term1` and `term3` at one point, evaluated on the truth of trial 0.
///
/// For synthetic truths both terms depend only on `L`, the magnitude and the
/// noise level, so every trial gives the same values.
pub fn point_bound_terms(cfg: &ExperimentConfig, k: usize, snr_db: f64) -> Result<(f64, f64)> {
    let s = setup_trial(cfg, k, snr_db, 0)?;
    let truth = s.truth.sparse_vec();
    let support = s.truth.support();
    let kns = s.model.kns();
    let l = support.len();
    let noise_var = s.model.noise_var;
    Ok((
        term1_bound(truth.norm_sqr(), noise_var, s.delta, kns, l)?,
        term3_bound(truth, support, noise_var, s.delta, kns, l)?,
    ))
}

/// Thread pool with the requested size; `None` uses rayon's default.
pub fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::config("--threads", e.to_string()))
}

/// Full `K × SNR × trials` sweep.
///
/// Trials run in parallel on `pool`; records are collected in trial order
/// and means are summed sequentially in that order, so results do not
/// depend on the thread count.
pub fn run_sweep_in(cfg: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<SweepResult> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut records = Vec::with_capacity(cfg.k_values.len() * cfg.snr_db_values.len() * cfg.trials);
    for &k in &cfg.k_values {
        for &snr_db in &cfg.snr_db_values {
            let start = Instant::now();
            let point: Vec<TrialRecord> = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_trial(cfg, k, snr_db, t))
                    .collect::<Result<Vec<_>>>()
            })?;
            let (term1, term3) = point_bound_terms(cfg, k, snr_db)?;
            let n = point.len() as f64;
            let mse = point.iter().map(|r| r.squared_error).sum::<f64>() / n;
            let crlb = point.iter().map(|r| r.crlb_value).sum::<f64>() / n;
            let fail_rate = point.iter().filter(|r| r.failed).count() as f64 / n;
            rows.push(SweepRow {
                k,
                snr_db,
                mse,
                crlb,
                upper_bound: crlb + term1 + term3,
                term1,
                term3,
                fail_rate,
                trials: point.len(),
                wall_time_s: start.elapsed().as_secs_f64(),
            });
            records.extend(point);
        }
    }
    Ok(SweepResult { rows, records })
}

pub fn run_sweep(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult> {
    run_sweep_in(cfg, &thread_pool(threads)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            k_values: vec![20],
            snr_db_values: vec![30.0],
            trials: 4,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = small_cfg();
        assert_eq!(run_trial(&cfg, 20, 30.0, 3).unwrap(), run_trial(&cfg, 20, 30.0, 3).unwrap());
        assert_ne!(
            run_trial(&cfg, 20, 30.0, 3).unwrap().seed,
            run_trial(&cfg, 20, 30.0, 2).unwrap().seed
        );
    }

    #[test]
    fn genie_never_fails() {
        let cfg = ExperimentConfig {
            estimator: EstimatorKind::Genie,
            ..small_cfg()
        };
        for t in 0..10 {
            let r = run_trial(&cfg, 8, 0.0, t).unwrap();
            assert!(!r.failed);
            assert!(r.support_correct);
        }
    }

    #[test]
    fn estimator_errors_become_flagged_records() {
        let cfg = ExperimentConfig {
            max_subsets: Some(1),
            ..small_cfg()
        };
        let r = run_trial(&cfg, 20, 30.0, 0).unwrap();
        assert!(r.failed);
        assert!(r.error.as_deref().unwrap().contains("subsets"));
        assert!((r.squared_error - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_sweep() {
        let cfg = ExperimentConfig {
            trials: 1,
            ..small_cfg()
        };
        let res = run_sweep(&cfg, Some(1)).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert_eq!(res.records.len(), 1);
        let row = &res.rows[0];
        assert_eq!(row.mse, res.records[0].squared_error);
        assert!(row.upper_bound >= row.crlb);
    }

    #[test]
    fn physical_modes_run() {
        for mode in [TruthMode::PhysicalOnGrid, TruthMode::PhysicalOffGrid] {
            let cfg = ExperimentConfig {
                mode,
                estimator: EstimatorKind::Omp,
                ..small_cfg()
            };
            let r = run_trial(&cfg, 20, 30.0, 0).unwrap();
            assert!(r.sparsity >= 1);
            assert!(r.crlb_value > 0.0);
        }
    }
}
