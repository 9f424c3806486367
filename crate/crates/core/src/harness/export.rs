//! CSV / JSON writers and the angular-domain magnitude map.
//!
//! CSV files are UTF-8 with LF line endings; floats are printed in
//! scientific notation with 17 significant digits.

use std::io::{self, Write};

use rand::SeedableRng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::sweep::{generate_truth, SweepResult, TrialRecord};
use crate::channel::{
    dft_column, predicted_support, random_hop, realize_physical, sparse_index, ula_param,
    GroundTruth, HopSide, TruthMode,
};
use crate::error::{Error, Result};
use crate::random::SimRng;

pub const SWEEP_HEADER: &str = "k,snr_db,mse,crlb,upper_bound,fail_rate,trials";
pub const TRIALS_HEADER: &str =
    "k,snr_db,trial_index,seed,squared_error,crlb,failed,subsets_examined,support_correct";
pub const BOUNDS_HEADER: &str = "k,snr_db,noise_var,delta,crlb,term1,term3,upper_bound";

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.snr_db),
            fmt_f64(r.mse),
            fmt_f64(r.crlb),
            fmt_f64(r.upper_bound),
            fmt_f64(r.fail_rate),
            r.trials
        )?;
    }
    Ok(())
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRIALS_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.snr_db),
            r.trial_index,
            r.seed,
            fmt_f64(r.squared_error),
            fmt_f64(r.crlb_value),
            r.failed,
            r.subsets_examined,
            r.support_correct
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    config: &'a ExperimentConfig,
    master_seed: u64,
    threads: Option<usize>,
    conventions: Conventions,
    rows: &'a [super::sweep::SweepRow],
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<&'a [TrialRecord]>,
}

#[derive(Serialize)]
struct Conventions {
    snr: &'static str,
    delta: String,
    seed: &'static str,
    upper_bound: &'static str,
    summation: &'static str,
}

/// JSON mirror of a sweep with the full config and conventions embedded.
pub fn write_sweep_json<W: Write>(
    cfg: &ExperimentConfig,
    result: &SweepResult,
    threads: Option<usize>,
    per_trial: bool,
    out: W,
) -> io::Result<()> {
    let doc = SweepDocument {
        config: cfg,
        master_seed: cfg.master_seed,
        threads,
        conventions: Conventions {
            snr: "10*log10(E||Y v||^2 / (K N_s sigma^2)) with E||Y v||^2 = K ||v||^2, i.e. sigma^2 = (||v||^2/N_s) 10^(-snr/10)",
            delta: match cfg.delta {
                Some(d) => format!("fixed delta = {d}"),
                None => "delta = 4 sigma^2 sqrt(K N_s - L) / (K N_s) per point".into(),
            },
            seed: "splitmix64 chain of (master_seed, K, snr_db bits, trial_index)",
            upper_bound: "mean per-trial CRLB + term1 + term3 evaluated on the trial-0 truth",
            summation: "sequential in trial order",
        },
        rows: &result.rows,
        trials: per_trial.then_some(result.records.as_slice()),
    };
    serde_json::to_writer_pretty(out, &doc).map_err(io::Error::other)
}

/// `|H̃|` on the angular grid: `magnitudes[d][s]` is the magnitude at MS
/// bin `d` (row of `H̃`) and BS bin `s` (column of `H̃`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularMap {
    pub n_d: usize,
    pub n_s: usize,
    pub magnitudes: Vec<Vec<f64>>,
    /// `(ms_bin, bs_bin)` cells predicted from the path directions.
    pub predicted_cells: Vec<(usize, usize)>,
    /// Predicted `(ms_bin, bs_bin)` cell of each (BS path, MS path) pair.
    pub path_cells: Vec<(usize, usize)>,
}

impl AngularMap {
    pub fn peak(&self) -> f64 {
        self.magnitudes.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Cells whose magnitude exceeds `fraction · peak`.
    pub fn dominant_cells(&self, fraction: f64) -> Vec<(usize, usize)> {
        let thr = fraction * self.peak();
        let mut cells = Vec::new();
        for (d, row) in self.magnitudes.iter().enumerate() {
            for (s, &m) in row.iter().enumerate() {
                if m > thr {
                    cells.push((d, s));
                }
            }
        }
        cells
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_m = f64::NEG_INFINITY;
        for (d, row) in self.magnitudes.iter().enumerate() {
            for (s, &m) in row.iter().enumerate() {
                if m > best_m {
                    best_m = m;
                    best = (d, s);
                }
            }
        }
        best
    }
}

/// Draws one physical channel from `seed` and returns its angular map.
pub fn export_angular_map(cfg: &ExperimentConfig, seed: u64) -> Result<AngularMap> {
    if !cfg.mode.is_physical() {
        return Err(Error::config("mode", "angular maps need a physical mode (on-grid or off-grid)"));
    }
    cfg.validate()?;
    let g = cfg.geometry();
    let on_grid = cfg.mode == TruthMode::PhysicalOnGrid;
    let mut rng = SimRng::seed_from_u64(seed);
    let hop1 = random_hop(&g, HopSide::BsToRis, cfg.paths_bs_ris, cfg.path_loss_bs_ris(), on_grid, &mut rng)?;
    let hop2 = random_hop(&g, HopSide::RisToMs, cfg.paths_ris_ms, cfg.path_loss_ris_ms(), on_grid, &mut rng)?;
    let r = realize_physical(&g, &hop1, &hop2, None, &mut rng)?;

    let magnitudes = (0..g.n_d)
        .map(|d| (0..g.n_s).map(|s| r.angular[(d, s)].norm()).collect())
        .collect();
    let predicted_cells = predicted_support(&g, &hop1, &hop2)
        .into_iter()
        .map(|idx| (idx / g.n_s, idx % g.n_s))
        .collect();
    let mut path_cells = Vec::new();
    for p in &hop1.paths {
        let s = dft_column(ula_param(p.aod_elev, p.aod_azim, g.spacing_ratio), g.n_s);
        for q in &hop2.paths {
            let d = dft_column(ula_param(q.aoa_elev, q.aoa_azim, g.spacing_ratio), g.n_d);
            debug_assert!(sparse_index(s, d, g.n_s) < g.sparse_dim());
            path_cells.push((d, s));
        }
    }
    Ok(AngularMap {
        n_d: g.n_d,
        n_s: g.n_s,
        magnitudes,
        predicted_cells,
        path_cells,
    })
}

/// Dense grid CSV: header `ms_bin,bs_0,…,bs_{N_s−1}`, one row per MS bin.
pub fn write_angular_csv<W: Write>(map: &AngularMap, mut out: W) -> io::Result<()> {
    let header: Vec<String> = (0..map.n_s).map(|s| format!("bs_{s}")).collect();
    writeln!(out, "ms_bin,{}", header.join(","))?;
    for (d, row) in map.magnitudes.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&m| fmt_f64(m)).collect();
        writeln!(out, "{d},{}", cells.join(","))?;
    }
    Ok(())
}

/// One row of the analytic bound table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub k: usize,
    pub snr_db: f64,
    pub noise_var: f64,
    pub delta: f64,
    pub crlb: f64,
    pub term1: f64,
    pub term3: f64,
    pub upper_bound: f64,
}

/// CRLB and upper-bound terms per `(K, SNR)` without Monte Carlo: the
/// CRLB is the closed-form pilot average and the bound terms use the
/// truth drawn for trial 0 of each point.
pub fn bound_table(cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    use crate::estimator::{default_delta, expected_crlb, term1_bound, term3_bound};
    use crate::sensing::snr_to_noise_var;

    cfg.validate()?;
    let mut rows = Vec::new();
    for &k in &cfg.k_values {
        for &snr_db in &cfg.snr_db_values {
            let seed = super::seed::trial_seed(cfg.master_seed, k, snr_db, 0);
            let truth: GroundTruth = generate_truth(cfg, &mut SimRng::seed_from_u64(seed))?;
            let v = truth.sparse_vec();
            let support = truth.support();
            let l = support.len();
            let kns = k * cfg.n_s;
            let noise_var = snr_to_noise_var(snr_db, cfg.n_s, v)?;
            let delta = cfg.delta.unwrap_or_else(|| default_delta(noise_var, kns, l));
            let crlb = expected_crlb(support, cfg.n_s, k, noise_var)?;
            let term1 = term1_bound(v.norm_sqr(), noise_var, delta, kns, l)?;
            let term3 = term3_bound(v, support, noise_var, delta, kns, l)?;
            rows.push(BoundRow {
                k,
                snr_db,
                noise_var,
                delta,
                crlb,
                term1,
                term3,
                upper_bound: crlb + term1 + term3,
            });
        }
    }
    Ok(rows)
}

pub fn write_bounds_csv<W: Write>(rows: &[BoundRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{BOUNDS_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.k,
            fmt_f64(r.snr_db),
            fmt_f64(r.noise_var),
            fmt_f64(r.delta),
            fmt_f64(r.crlb),
            fmt_f64(r.term1),
            fmt_f64(r.term3),
            fmt_f64(r.upper_bound)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(1.0 / 19.0).len(), "5.2631578947368418e-2".len());
        let x = 0.05263157894736842_f64;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn angular_map_rejects_synthetic() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(
            export_angular_map(&cfg, 1),
            Err(Error::Config { field, .. }) if field == "mode"
        ));
    }

    #[test]
    fn single_on_grid_pair_has_one_dominant_cell() {
        let cfg = ExperimentConfig {
            mode: TruthMode::PhysicalOnGrid,
            ..ExperimentConfig::default()
        };
        for seed in 0..5 {
            let map = export_angular_map(&cfg, seed).unwrap();
            assert_eq!(map.dominant_cells(0.01), map.predicted_cells);
            assert_eq!(map.predicted_cells.len(), 1);
        }
    }

    #[test]
    fn angular_csv_shape() {
        let cfg = ExperimentConfig {
            mode: TruthMode::PhysicalOffGrid,
            n_s: 3,
            n_d: 2,
            ..ExperimentConfig::default()
        };
        let map = export_angular_map(&cfg, 7).unwrap();
        let mut buf = Vec::new();
        write_angular_csv(&map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ms_bin,bs_0,bs_1,bs_2");
        assert_eq!(lines.len(), 3);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn bound_table_matches_closed_form_crlb() {
        let cfg = ExperimentConfig {
            k_values: vec![20],
            snr_db_values: vec![0.0],
            ..ExperimentConfig::default()
        };
        let rows = bound_table(&cfg).unwrap();
        // ‖υ‖² = 1, N_s = 5 at 0 dB → σ² = 0.2
        assert!((rows[0].noise_var - 0.2).abs() < 1e-15);
        assert!((rows[0].crlb - 0.2 / 19.0).abs() < 1e-15);
        assert!(rows[0].upper_bound >= rows[0].crlb);
    }
}
