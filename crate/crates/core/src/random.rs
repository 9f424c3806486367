//! Seeded generators and the complex Gaussian / unit-phase draws shared by
//! the channel and measurement generators.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator used for every stochastic draw in the crate.
pub type SimRng = ChaCha8Rng;

/// Circularly-symmetric complex Gaussian with `E|z|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `magnitude · e^{jψ}` with `ψ` uniform on `[0, 2π)`.
pub fn random_phase<R: Rng + ?Sized>(rng: &mut R, magnitude: f64) -> Complex64 {
    Complex64::from_polar(magnitude, rng.random::<f64>() * TAU)
}

/// Uniform on `[0, 2π)`.
pub fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// Elevation uniform on `[0, π]`, azimuth uniform on `[−π, π]`.
pub fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let elev = rng.random::<f64>() * PI;
    let azim = rng.random::<f64>() * TAU - PI;
    (elev, azim)
}
