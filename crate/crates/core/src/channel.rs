//! Physical BS–RIS–MS channel synthesis and its angular-domain sparse form.
//!
//! A hop is a sum of rank-one path terms `gain · a_rx · a_txᴴ` scaled by
//! `√(N_tx·N_rx/ρ)`. The cascade `H = G″·diag(e^{jϱ})·G′` is moved to the
//! angular domain with unitary DFT bases, `H̃ = U_dᴴ·H·U_s`, and the sparse
//! unknown is `υ = vec(H̃ᴴ)` (column-stacked, length `N_d·N_s`).
//!
//! Index conventions: all bins and vector positions are 0-based. Entry
//! `(s, d)` of `H̃ᴴ` sits at `υ[d·N_s + s]`.
//!
//! With the DFT sign convention `U[p, q] = e^{−j2πpq/N}/√N`, a steering
//! vector with directional parameter `u = 2π·m/N` is proportional to the
//! conjugate of column `m`, i.e. to column `(N − m) mod N`. [`dominant_bin`]
//! reports the grid point nearest to `u`; [`dft_column`] reports the column
//! of `U` carrying the energy.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, kron_vec, ComplexMatrix, ComplexVector};
use crate::random::{random_phase, uniform_direction, uniform_phase};

/// Entries of a physical-mode `υ` below this fraction of the peak are
/// treated as off-support.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Array sizes and element spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n_s: usize,
    pub n_d: usize,
    pub n_r_h: usize,
    pub n_r_w: usize,
    /// Element spacing over wavelength, `d/λ`.
    pub spacing_ratio: f64,
}

impl Geometry {
    pub fn new(n_s: usize, n_d: usize, n_r_h: usize, n_r_w: usize, spacing_ratio: f64) -> Result<Self> {
        let g = Self {
            n_s,
            n_d,
            n_r_h,
            n_r_w,
            spacing_ratio,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_s", self.n_s),
            ("n_d", self.n_d),
            ("n_r_h", self.n_r_h),
            ("n_r_w", self.n_r_w),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return Err(Error::config("spacing_ratio", "must be a positive finite number"));
        }
        Ok(())
    }

    /// RIS element count `N_r = N_r,h · N_r,w`.
    pub fn n_r(&self) -> usize {
        self.n_r_h * self.n_r_w
    }

    /// Length of the sparse unknown, `N_d · N_s`.
    pub fn sparse_dim(&self) -> usize {
        self.n_d * self.n_s
    }
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            n_s: 5,
            n_d: 5,
            n_r_h: 2,
            n_r_w: 5,
            spacing_ratio: 0.5,
        }
    }
}

/// Departure/arrival directions and complex gain of one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub aod_elev: f64,
    pub aod_azim: f64,
    pub aoa_elev: f64,
    pub aoa_azim: f64,
    pub gain: Complex64,
}

impl PathParams {
    pub fn validate(&self) -> Result<()> {
        for (name, elev) in [("aod_elev", self.aod_elev), ("aoa_elev", self.aoa_elev)] {
            if !(0.0..=PI).contains(&elev) {
                return Err(Error::invalid(format!("{name} = {elev} outside [0, π]")));
            }
        }
        for (name, azim) in [("aod_azim", self.aod_azim), ("aoa_azim", self.aoa_azim)] {
            if !(-PI..=PI).contains(&azim) {
                return Err(Error::invalid(format!("{name} = {azim} outside [−π, π]")));
            }
        }
        if !self.gain.is_finite() {
            return Err(Error::invalid("path gain is not finite"));
        }
        Ok(())
    }
}

/// Paths and average path loss of one hop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopModel {
    pub paths: Vec<PathParams>,
    pub path_loss: f64,
}

impl HopModel {
    pub fn new(paths: Vec<PathParams>, path_loss: f64) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::invalid("a hop needs at least one path"));
        }
        if !(path_loss.is_finite() && path_loss > 0.0) {
            return Err(Error::invalid(format!("path loss {path_loss} must be positive")));
        }
        for p in &paths {
            p.validate()?;
        }
        Ok(Self { paths, path_loss })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopSide {
    BsToRis,
    RisToMs,
}

/// How the ground-truth sparse vector is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMode {
    /// Exactly `L`-sparse random vector.
    #[default]
    #[serde(alias = "synth")]
    Synthetic,
    /// Physical channel with BS/MS directions snapped onto DFT grid points.
    #[serde(alias = "on-grid", alias = "on_grid")]
    PhysicalOnGrid,
    /// Physical channel with unconstrained directions.
    #[serde(alias = "off-grid", alias = "off_grid")]
    PhysicalOffGrid,
}

impl TruthMode {
    pub fn is_physical(self) -> bool {
        !matches!(self, TruthMode::Synthetic)
    }
}

impl std::str::FromStr for TruthMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "synthetic" | "synth" => Ok(Self::Synthetic),
            "on-grid" | "on_grid" | "physical_on_grid" => Ok(Self::PhysicalOnGrid),
            "off-grid" | "off_grid" | "physical_off_grid" => Ok(Self::PhysicalOffGrid),
            other => Err(Error::config("mode", format!("unknown mode `{other}`"))),
        }
    }
}

/// Everything produced for one physical channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `G′`, `N_r x N_s`.
    pub g_bs_ris: ComplexMatrix,
    /// `G″`, `N_d x N_r`.
    pub g_ris_ms: ComplexMatrix,
    /// RIS phase shifts `ϱ` in radians.
    pub ris_phases: Vec<f64>,
    /// `H`, `N_d x N_s`.
    pub cascade: ComplexMatrix,
    /// `H̃ = U_dᴴ·H·U_s`, `N_d x N_s`.
    pub angular: ComplexMatrix,
    /// `υ = vec(H̃ᴴ)`.
    pub sparse_vec: ComplexVector,
    /// Entries of `υ` above `SUPPORT_THRESHOLD · max|υ|`, ascending.
    pub support: Vec<usize>,
}

/// Ground truth for one trial.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    Synthetic {
        sparse_vec: ComplexVector,
        support: Vec<usize>,
    },
    Physical(Box<ChannelRealization>),
}

impl GroundTruth {
    pub fn sparse_vec(&self) -> &ComplexVector {
        match self {
            GroundTruth::Synthetic { sparse_vec, .. } => sparse_vec,
            GroundTruth::Physical(r) => &r.sparse_vec,
        }
    }

    pub fn support(&self) -> &[usize] {
        match self {
            GroundTruth::Synthetic { support, .. } => support,
            GroundTruth::Physical(r) => &r.support,
        }
    }
}

/// Directional parameter of a linear array, `2π·(d/λ)·sin(elev)·cos(azim)`.
pub fn ula_param(elev: f64, azim: f64, spacing_ratio: f64) -> f64 {
    TAU * spacing_ratio * elev.sin() * azim.cos()
}

/// Per-axis directional parameters `(u_h, u_w)` of the planar RIS.
pub fn upa_params(elev: f64, azim: f64, spacing_ratio: f64) -> (f64, f64) {
    (
        TAU * spacing_ratio * elev.cos(),
        TAU * spacing_ratio * elev.sin() * azim.cos(),
    )
}

/// Phase ramp `[e^{j·0·u}, …, e^{j(n−1)u}]`.
pub fn phase_ramp(n: usize, u: f64) -> ComplexVector {
    (0..n)
        .map(|k| {
            // wrap before evaluating so large k·u keeps full precision
            Complex64::from_polar(1.0, (k as f64 * u).rem_euclid(TAU))
        })
        .collect()
}

/// Linear-array steering vector.
pub fn ula_response(n: usize, elev: f64, azim: f64, spacing_ratio: f64) -> ComplexVector {
    phase_ramp(n, ula_param(elev, azim, spacing_ratio))
}

/// Planar-array steering vector, `ramp(u_h) ⊗ ramp(u_w)`.
pub fn upa_response(n_h: usize, n_w: usize, elev: f64, azim: f64, spacing_ratio: f64) -> ComplexVector {
    let (u_h, u_w) = upa_params(elev, azim, spacing_ratio);
    kron_vec(&phase_ramp(n_h, u_h), &phase_ramp(n_w, u_w))
}

/// Channel matrix of one hop.
///
/// `BsToRis` gives `G′ = √(N_s·N_r/ρ′) Σ αᵢ a_r(aoa) a_sᴴ(aod)` (`N_r x N_s`);
/// `RisToMs` gives `G″ = √(N_r·N_d/ρ″) Σ βᵢ a_d(aoa) a_rᴴ(aod)` (`N_d x N_r`).
pub fn build_hop(geometry: &Geometry, hop: &HopModel, side: HopSide) -> Result<ComplexMatrix> {
    geometry
        .validate()
        .map_err(|e| Error::dims(format!("geometry: {e}")))?;
    if hop.paths.is_empty() {
        return Err(Error::invalid("a hop needs at least one path"));
    }
    let g = geometry;
    let (n_rx, n_tx) = match side {
        HopSide::BsToRis => (g.n_r(), g.n_s),
        HopSide::RisToMs => (g.n_d, g.n_r()),
    };
    let scale = ((n_tx * n_rx) as f64 / hop.path_loss).sqrt();
    let mut out = ComplexMatrix::zeros(n_rx, n_tx);
    for p in &hop.paths {
        let (rx, tx) = match side {
            HopSide::BsToRis => (
                upa_response(g.n_r_h, g.n_r_w, p.aoa_elev, p.aoa_azim, g.spacing_ratio),
                ula_response(g.n_s, p.aod_elev, p.aod_azim, g.spacing_ratio),
            ),
            HopSide::RisToMs => (
                ula_response(g.n_d, p.aoa_elev, p.aoa_azim, g.spacing_ratio),
                upa_response(g.n_r_h, g.n_r_w, p.aod_elev, p.aod_azim, g.spacing_ratio),
            ),
        };
        if rx.len() != n_rx || tx.len() != n_tx {
            return Err(Error::dims("steering vector length disagrees with geometry"));
        }
        out = out.add(&rx.outer(&tx).scale(p.gain * scale))?;
    }
    Ok(out)
}

/// Cascade `H = G″·diag(e^{jϱ})·G′` with unit reflection amplitudes.
pub fn compose_cascade(
    g_bs_ris: &ComplexMatrix,
    ris_phases: &[f64],
    g_ris_ms: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let n_r = ris_phases.len();
    if g_ris_ms.cols() != n_r || g_bs_ris.rows() != n_r {
        return Err(Error::dims(format!(
            "cannot chain {:?} · diag({n_r}) · {:?}",
            g_ris_ms.shape(),
            g_bs_ris.shape()
        )));
    }
    // scale the columns of G″ rather than forming diag(e^{jϱ})
    let phased = ComplexMatrix::from_fn(g_ris_ms.rows(), n_r, |i, k| {
        g_ris_ms[(i, k)] * Complex64::from_polar(1.0, ris_phases[k])
    });
    phased.matmul(g_bs_ris)
}

/// Angular-domain form of an `N_d x N_s` cascade: returns `H̃ = U_dᴴ·H·U_s`
/// and `υ = vec(H̃ᴴ)`.
pub fn angular_transform(h: &ComplexMatrix, geometry: &Geometry) -> Result<(ComplexMatrix, ComplexVector)> {
    if h.shape() != (geometry.n_d, geometry.n_s) {
        return Err(Error::dims(format!(
            "cascade is {:?}, geometry expects {}x{}",
            h.shape(),
            geometry.n_d,
            geometry.n_s
        )));
    }
    let u_s = dft_matrix(geometry.n_s)?;
    let u_d = dft_matrix(geometry.n_d)?;
    let angular = u_d.adjoint().matmul(h)?.matmul(&u_s)?;
    let sparse = angular.adjoint().vec();
    Ok((angular, sparse))
}

/// Inverse of [`angular_transform`]: `H = U_d·H̃·U_sᴴ` with `H̃ᴴ = unvec(υ)`.
pub fn cascade_from_sparse(sparse: &[Complex64], geometry: &Geometry) -> Result<ComplexMatrix> {
    let angular_h = ComplexMatrix::unvec(sparse, geometry.n_s, geometry.n_d)?;
    let u_s = dft_matrix(geometry.n_s)?;
    let u_d = dft_matrix(geometry.n_d)?;
    u_d.matmul(&angular_h.adjoint())?.matmul(&u_s.adjoint())
}

fn wrapped_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Grid index `m ∈ 0..n` minimising the wrapped distance `|u − 2πm/n|`.
///
/// Ties go to the lower index.
pub fn dominant_bin(u: f64, n: usize) -> usize {
    assert!(n >= 1, "grid size must be at least 1");
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for m in 0..n {
        let d = wrapped_distance(u, TAU * m as f64 / n as f64);
        if d < best_d {
            best = m;
            best_d = d;
        }
    }
    best
}

/// Column of the `n`-point DFT basis a steering vector with parameter `u`
/// concentrates on.
pub fn dft_column(u: f64, n: usize) -> usize {
    (n - dominant_bin(u, n)) % n
}

/// Position of angular cell `(bs_col, ms_col)` inside `υ`.
pub fn sparse_index(bs_col: usize, ms_col: usize, n_s: usize) -> usize {
    ms_col * n_s + bs_col
}

/// Angles realising the directional parameter `2π·bin/n` on a linear array.
///
/// The grid value is wrapped into `(−π, π]`; then `azim = 0` (or `π` for a
/// negative value) and `elev = asin(|u| / (2π·d/λ))` on the `[0, π/2]` branch.
pub fn on_grid_angles(bin: usize, n: usize, spacing_ratio: f64) -> Result<(f64, f64)> {
    let mut u = TAU * (bin % n) as f64 / n as f64;
    if u > PI {
        u -= TAU;
    }
    let s = u.abs() / (TAU * spacing_ratio);
    if s > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "grid point {bin}/{n} unreachable with spacing ratio {spacing_ratio}"
        )));
    }
    let elev = s.min(1.0).asin();
    let azim = if u < 0.0 { PI } else { 0.0 };
    Ok((elev, azim))
}

/// Exactly `sparsity`-sparse vector: uniformly chosen support, each nonzero
/// of the given magnitude with uniform random phase.
pub fn synth_sparse_signal<R: Rng + ?Sized>(
    dim: usize,
    sparsity: usize,
    rng: &mut R,
    magnitude: f64,
) -> Result<(ComplexVector, Vec<usize>)> {
    if sparsity == 0 || sparsity > dim {
        return Err(Error::invalid(format!(
            "sparsity {sparsity} must lie in 1..={dim}"
        )));
    }
    if !(magnitude.is_finite() && magnitude > 0.0) {
        return Err(Error::invalid("magnitude must be positive"));
    }
    let mut support = index::sample(rng, dim, sparsity).into_vec();
    support.sort_unstable();
    let mut v = ComplexVector::zeros(dim);
    for &k in &support {
        v[k] = random_phase(rng, magnitude);
    }
    Ok((v, support))
}

/// Draws a hop with `n_paths` random paths and unit-modulus random-phase gains.
///
/// With `on_grid`, the directions at the BS (for `BsToRis`) or at the MS
/// (for `RisToMs`) are snapped so their directional parameter hits a DFT
/// grid point drawn uniformly at random.
pub fn random_hop<R: Rng + ?Sized>(
    geometry: &Geometry,
    side: HopSide,
    n_paths: usize,
    path_loss: f64,
    on_grid: bool,
    rng: &mut R,
) -> Result<HopModel> {
    let mut paths = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let (mut aod_elev, mut aod_azim) = uniform_direction(rng);
        let (mut aoa_elev, mut aoa_azim) = uniform_direction(rng);
        if on_grid {
            match side {
                HopSide::BsToRis => {
                    let bin = rng.random_range(0..geometry.n_s);
                    (aod_elev, aod_azim) = on_grid_angles(bin, geometry.n_s, geometry.spacing_ratio)?;
                }
                HopSide::RisToMs => {
                    let bin = rng.random_range(0..geometry.n_d);
                    (aoa_elev, aoa_azim) = on_grid_angles(bin, geometry.n_d, geometry.spacing_ratio)?;
                }
            }
        }
        paths.push(PathParams {
            aod_elev,
            aod_azim,
            aoa_elev,
            aoa_azim,
            gain: random_phase(rng, 1.0),
        });
    }
    HopModel::new(paths, path_loss)
}

/// Support a physical channel is expected to occupy: one angular cell per
/// (BS-side path, MS-side path) pair, ascending and deduplicated.
pub fn predicted_support(geometry: &Geometry, hop_bs_ris: &HopModel, hop_ris_ms: &HopModel) -> Vec<usize> {
    let g = geometry;
    let mut cells: Vec<usize> = hop_bs_ris
        .paths
        .iter()
        .flat_map(|p| {
            let s = dft_column(ula_param(p.aod_elev, p.aod_azim, g.spacing_ratio), g.n_s);
            hop_ris_ms.paths.iter().map(move |q| {
                let d = dft_column(ula_param(q.aoa_elev, q.aoa_azim, g.spacing_ratio), g.n_d);
                sparse_index(s, d, g.n_s)
            })
        })
        .collect();
    cells.sort_unstable();
    cells.dedup();
    cells
}

/// Builds the full physical realization. Phases are drawn uniformly on
/// `[0, 2π)` when not supplied.
pub fn realize_physical<R: Rng + ?Sized>(
    geometry: &Geometry,
    hop_bs_ris: &HopModel,
    hop_ris_ms: &HopModel,
    ris_phases: Option<Vec<f64>>,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let g_bs_ris = build_hop(geometry, hop_bs_ris, HopSide::BsToRis)?;
    let g_ris_ms = build_hop(geometry, hop_ris_ms, HopSide::RisToMs)?;
    let ris_phases = match ris_phases {
        Some(p) => p,
        None => (0..geometry.n_r()).map(|_| uniform_phase(rng)).collect(),
    };
    let cascade = compose_cascade(&g_bs_ris, &ris_phases, &g_ris_ms)?;
    let (angular, sparse_vec) = angular_transform(&cascade, geometry)?;
    let peak = sparse_vec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let support = sparse_vec
        .iter()
        .enumerate()
        .filter(|(_, z)| peak > 0.0 && z.norm() > SUPPORT_THRESHOLD * peak)
        .map(|(k, _)| k)
        .collect();
    Ok(ChannelRealization {
        g_bs_ris,
        g_ris_ms,
        ris_phases,
        cascade,
        angular,
        sparse_vec,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{kron, numeric_rank};
    use crate::random::SimRng;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).norm() < tol)
    }

    #[test]
    fn ula_examples() {
        assert!(close(&ula_response(4, 0.0, 1.3, 0.5), &[c(1.0, 0.0); 4], 1e-15));
        assert!(close(&ula_response(1, 0.7, -2.0, 0.5), &[c(1.0, 0.0)], 1e-15));
        let v = ula_response(2, PI / 2.0, 0.0, 0.5);
        assert!(close(&v, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-12));
        assert!(ula_response(7, 1.1, 0.4, 0.5).iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn upa_examples() {
        assert!(close(&upa_response(1, 1, 0.3, 0.2, 0.5), &[c(1.0, 0.0)], 1e-15));
        let flat = upa_response(3, 4, PI / 2.0, PI / 2.0, 0.5);
        assert!(close(&flat, &[c(1.0, 0.0); 12], 1e-12));

        let (u_h, u_w) = upa_params(PI / 3.0, 0.0, 0.5);
        let rh = ComplexMatrix::new(2, 1, phase_ramp(2, u_h).into_inner()).unwrap();
        let rw = ComplexMatrix::new(2, 1, phase_ramp(2, u_w).into_inner()).unwrap();
        let expected = kron(&rh, &rw).column(0);
        assert!(close(&upa_response(2, 2, PI / 3.0, 0.0, 0.5), &expected, 1e-14));
    }

    fn geometry() -> Geometry {
        Geometry::new(4, 3, 2, 3, 0.5).unwrap()
    }

    fn path(aod: (f64, f64), aoa: (f64, f64), gain: Complex64) -> PathParams {
        PathParams {
            aod_elev: aod.0,
            aod_azim: aod.1,
            aoa_elev: aoa.0,
            aoa_azim: aoa.1,
            gain,
        }
    }

    #[test]
    fn single_path_scaling_cancels() {
        let g = geometry();
        let p = path((0.4, 0.3), (1.2, -0.8), c(1.0, 0.0));
        let hop = HopModel::new(vec![p], (g.n_s * g.n_r()) as f64).unwrap();
        let m = build_hop(&g, &hop, HopSide::BsToRis).unwrap();
        let a_r = upa_response(g.n_r_h, g.n_r_w, p.aoa_elev, p.aoa_azim, 0.5);
        let a_s = ula_response(g.n_s, p.aod_elev, p.aod_azim, 0.5);
        assert!(m.max_abs_diff(&a_r.outer(&a_s)) < 1e-14);
        assert_eq!(numeric_rank(&m, None), 1);
    }

    #[test]
    fn two_on_grid_paths_rank_two() {
        let g = geometry();
        let (e0, a0) = on_grid_angles(0, g.n_s, 0.5).unwrap();
        let (e1, a1) = on_grid_angles(1, g.n_s, 0.5).unwrap();
        let hop = HopModel::new(
            vec![
                path((e0, a0), (0.5, 0.1), c(1.0, 0.0)),
                path((e1, a1), (2.0, -1.0), c(0.0, 1.0)),
            ],
            1.0,
        )
        .unwrap();
        let m = build_hop(&g, &hop, HopSide::BsToRis).unwrap();
        assert_eq!(numeric_rank(&m, None), 2);
    }

    #[test]
    fn ris_to_ms_dimensions() {
        let g = geometry();
        let hop = HopModel::new(vec![path((0.3, 0.3), (0.9, 0.0), c(1.0, 0.0))], 2.0).unwrap();
        let m = build_hop(&g, &hop, HopSide::RisToMs).unwrap();
        assert_eq!(m.shape(), (g.n_d, g.n_r()));
    }

    #[test]
    fn hop_validation() {
        assert!(HopModel::new(vec![], 1.0).is_err());
        let p = path((0.3, 0.3), (0.9, 0.0), c(1.0, 0.0));
        assert!(HopModel::new(vec![p], 0.0).is_err());
        let bad = path((-0.1, 0.0), (0.9, 0.0), c(1.0, 0.0));
        assert!(HopModel::new(vec![bad], 1.0).is_err());
    }

    #[test]
    fn cascade_examples() {
        let mut rng = SimRng::seed_from_u64(1);
        let g1 = ComplexMatrix::from_fn(3, 2, |_, _| random_phase(&mut rng, 1.0));
        let g2 = ComplexMatrix::from_fn(4, 3, |_, _| random_phase(&mut rng, 1.0));
        let h0 = compose_cascade(&g1, &[0.0; 3], &g2).unwrap();
        assert!(h0.max_abs_diff(&g2.matmul(&g1).unwrap()) < 1e-14);

        let a = ComplexMatrix::new(1, 1, vec![c(2.0, 1.0)]).unwrap();
        let b = ComplexMatrix::new(1, 1, vec![c(0.5, -1.0)]).unwrap();
        let h = compose_cascade(&a, &[0.7], &b).unwrap();
        let expected = c(0.5, -1.0) * Complex64::from_polar(1.0, 0.7) * c(2.0, 1.0);
        assert!((h[(0, 0)] - expected).norm() < 1e-14);

        assert!(compose_cascade(&g1, &[0.0; 2], &g2).is_err());
    }

    #[test]
    fn cascade_norm_invariant_under_global_phase() {
        let mut rng = SimRng::seed_from_u64(2);
        let g1 = ComplexMatrix::from_fn(6, 3, |_, _| random_phase(&mut rng, 1.3));
        let g2 = ComplexMatrix::from_fn(2, 6, |_, _| random_phase(&mut rng, 0.7));
        let phases: Vec<f64> = (0..6).map(|_| uniform_phase(&mut rng)).collect();
        let shifted: Vec<f64> = phases.iter().map(|p| p + 1.234).collect();
        let n0 = compose_cascade(&g1, &phases, &g2).unwrap().frobenius_norm();
        let n1 = compose_cascade(&g1, &shifted, &g2).unwrap().frobenius_norm();
        assert!((n0 - n1).abs() < 1e-12);
    }

    #[test]
    fn angular_transform_selectivity() {
        let g = geometry();
        let (_, zero) = angular_transform(&ComplexMatrix::zeros(g.n_d, g.n_s), &g).unwrap();
        assert!(zero.iter().all(|z| z.norm() == 0.0));

        let u_s = dft_matrix(g.n_s).unwrap();
        let u_d = dft_matrix(g.n_d).unwrap();
        for (n, m) in [(0, 0), (2, 1), (1, 3)] {
            let h = u_d.column(n).outer(&u_s.column(m));
            let (_, v) = angular_transform(&h, &g).unwrap();
            let idx = sparse_index(m, n, g.n_s);
            for (k, z) in v.iter().enumerate() {
                if k == idx {
                    assert!((z - c(1.0, 0.0)).norm() < 1e-12);
                } else {
                    assert!(z.norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn angular_roundtrip() {
        let g = geometry();
        let mut rng = SimRng::seed_from_u64(3);
        let h = ComplexMatrix::from_fn(g.n_d, g.n_s, |_, _| random_phase(&mut rng, 1.0));
        let (_, v) = angular_transform(&h, &g).unwrap();
        let back = cascade_from_sparse(&v, &g).unwrap();
        assert!(back.max_abs_diff(&h) < 1e-12);
        assert!((v.norm() - h.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn dominant_bin_examples() {
        assert_eq!(dominant_bin(0.0, 8), 0);
        assert_eq!(dominant_bin(TAU * 3.0 / 8.0, 8), 3);
        assert_eq!(dominant_bin(TAU * 3.4 / 8.0, 8), 3);
        // wraps: slightly below 2π is nearest to bin 0
        assert_eq!(dominant_bin(TAU - 0.01, 8), 0);
        assert_eq!(dominant_bin(-TAU / 8.0, 8), 7);
        assert_eq!(dominant_bin(123.0, 1), 0);
    }

    #[test]
    fn steering_lands_on_mirrored_column() {
        let n = 8;
        let u_mat = dft_matrix(n).unwrap();
        for m in 0..n {
            let (elev, azim) = on_grid_angles(m, n, 0.5).unwrap();
            let a = ula_response(n, elev, azim, 0.5);
            let energy = u_mat.adjoint().mul_vec(&a).unwrap();
            let col = dft_column(ula_param(elev, azim, 0.5), n);
            assert_eq!(col, (n - m) % n);
            assert!((energy[col].norm() - (n as f64).sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn unreachable_grid_point() {
        // with d/λ = 0.1 the largest |u| is 0.2π
        assert!(on_grid_angles(2, 4, 0.1).is_err());
        assert!(on_grid_angles(0, 4, 0.1).is_ok());
    }

    #[test]
    fn synth_sparse_examples() {
        let mut rng = SimRng::seed_from_u64(4);
        let (v, s) = synth_sparse_signal(6, 6, &mut rng, 1.0).unwrap();
        assert_eq!(s, (0..6).collect::<Vec<_>>());
        assert!((v.norm_sqr() - 6.0).abs() < 1e-12);

        let a = synth_sparse_signal(25, 1, &mut SimRng::seed_from_u64(9), 2.0).unwrap();
        let b = synth_sparse_signal(25, 1, &mut SimRng::seed_from_u64(9), 2.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1.len(), 1);
        assert!((a.0.norm_sqr() - 4.0).abs() < 1e-12);
        for k in 0..25 {
            if k != a.1[0] {
                assert_eq!(a.0[k], c(0.0, 0.0));
            }
        }

        assert!(synth_sparse_signal(3, 4, &mut rng, 1.0).is_err());
        assert!(synth_sparse_signal(3, 0, &mut rng, 1.0).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("on-grid".parse::<TruthMode>().unwrap(), TruthMode::PhysicalOnGrid);
        assert_eq!("off-grid".parse::<TruthMode>().unwrap(), TruthMode::PhysicalOffGrid);
        assert!("nope".parse::<TruthMode>().is_err());
    }
}
