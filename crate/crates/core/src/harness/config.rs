use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{Geometry, TruthMode};
use crate::error::{Error, Result};
use crate::estimator::{binomial, SearchOrder, TypicalityConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    #[default]
    Jt,
    Genie,
    Omp,
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jt" => Ok(Self::Jt),
            "genie" => Ok(Self::Genie),
            "omp" => Ok(Self::Omp),
            other => Err(Error::config("estimator", format!("unknown estimator `{other}`"))),
        }
    }
}

/// Experiment description. Serialised as a flat TOML table whose keys are
/// the field names below; absent keys take the [`Default`] values, which
/// describe the 5×5 antenna, 2×5 RIS, single-path-per-hop setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_s: usize,
    pub n_d: usize,
    pub n_r_h: usize,
    pub n_r_w: usize,
    pub spacing_ratio: f64,

    pub paths_bs_ris: usize,
    pub paths_ris_ms: usize,
    /// `ρ′`; defaults to `N_s·N_r`.
    pub path_loss_bs_ris: Option<f64>,
    /// `ρ″`; defaults to `N_r·N_d`.
    pub path_loss_ris_ms: Option<f64>,

    pub mode: TruthMode,
    /// Sparsity `L` of synthetic truths. Physical modes use the realised
    /// support size instead.
    pub sparsity: usize,
    /// Modulus of each synthetic nonzero.
    pub magnitude: f64,

    pub k_values: Vec<usize>,
    pub snr_db_values: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,

    pub estimator: EstimatorKind,
    /// Typicality threshold; `None` selects `4σ²·√(KN_s − L)/(KN_s)` per point.
    pub delta: Option<f64>,
    pub search_order: SearchOrder,
    pub max_subsets: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_s: 5,
            n_d: 5,
            n_r_h: 2,
            n_r_w: 5,
            spacing_ratio: 0.5,
            paths_bs_ris: 1,
            paths_ris_ms: 1,
            path_loss_bs_ris: None,
            path_loss_ris_ms: None,
            mode: TruthMode::Synthetic,
            sparsity: 1,
            magnitude: 1.0,
            k_values: vec![8, 12, 16, 20, 28, 40, 60, 80],
            snr_db_values: vec![20.0, 30.0, 40.0],
            trials: 1000,
            master_seed: 42,
            estimator: EstimatorKind::Jt,
            delta: None,
            search_order: SearchOrder::LexicographicFirst,
            max_subsets: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a config file's text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config {
            field: toml_error_key(&e, text).unwrap_or_else(|| "<file>".into()),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            field: "--config".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config { field, message } => Error::Config {
                field,
                message: format!("{message} (in {})", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises to TOML")
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            n_s: self.n_s,
            n_d: self.n_d,
            n_r_h: self.n_r_h,
            n_r_w: self.n_r_w,
            spacing_ratio: self.spacing_ratio,
        }
    }

    pub fn path_loss_bs_ris(&self) -> f64 {
        self.path_loss_bs_ris
            .unwrap_or((self.n_s * self.n_r_h * self.n_r_w) as f64)
    }

    pub fn path_loss_ris_ms(&self) -> f64 {
        self.path_loss_ris_ms
            .unwrap_or((self.n_r_h * self.n_r_w * self.n_d) as f64)
    }

    /// Typicality settings at one sweep point.
    pub fn typicality(&self, delta: f64, sparsity: usize) -> Result<TypicalityConfig> {
        Ok(TypicalityConfig::new(delta, sparsity)?
            .with_order(self.search_order)
            .with_max_subsets(self.max_subsets.map(u128::from)))
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry().validate()?;
        if self.paths_bs_ris == 0 {
            return Err(Error::config("paths_bs_ris", "must be at least 1"));
        }
        if self.paths_ris_ms == 0 {
            return Err(Error::config("paths_ris_ms", "must be at least 1"));
        }
        for (name, v) in [
            ("path_loss_bs_ris", self.path_loss_bs_ris),
            ("path_loss_ris_ms", self.path_loss_ris_ms),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::config(name, "must be positive"));
                }
            }
        }
        let dim = self.n_s * self.n_d;
        if self.sparsity == 0 || self.sparsity > dim {
            return Err(Error::config("sparsity", format!("must lie in 1..={dim}")));
        }
        if !(self.magnitude.is_finite() && self.magnitude > 0.0) {
            return Err(Error::config("magnitude", "must be positive"));
        }
        if self.k_values.is_empty() {
            return Err(Error::config("k_values", "needs at least one entry"));
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k == 0) {
            return Err(Error::config("k_values", format!("K = {k} is invalid")));
        }
        for &k in &self.k_values {
            if k <= self.n_d {
                log::warn!("k_values: K = {k} does not exceed n_d = {}", self.n_d);
            }
        }
        if self.snr_db_values.is_empty() {
            return Err(Error::config("snr_db_values", "needs at least one entry"));
        }
        if self.snr_db_values.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_db_values", "entries must be finite"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::config("delta", "must be positive"));
            }
        }
        if let (Some(cap), EstimatorKind::Jt, TruthMode::Synthetic) =
            (self.max_subsets, self.estimator, self.mode)
        {
            let need = binomial(dim, self.sparsity);
            if need > u128::from(cap) {
                return Err(Error::config(
                    "max_subsets",
                    format!("search needs {need} subsets, over the cap of {cap}"),
                ));
            }
        }
        Ok(())
    }
}

fn toml_error_key(e: &toml::de::Error, text: &str) -> Option<String> {
    // unknown keys are reported as "... `name` ..."; type errors only carry a span
    let msg = e.message();
    if let Some(start) = msg.find('`').map(|i| i + 1) {
        if let Some(len) = msg[start..].find('`') {
            return Some(msg[start..start + len].to_string());
        }
    }
    let at = e.span()?.start.min(text.len());
    let line_start = text[..at].rfind('\n').map_or(0, |i| i + 1);
    let line = &text[line_start..];
    let key = line[..line.find('=')?].trim();
    (!key.is_empty()).then(|| key.to_string())
}
