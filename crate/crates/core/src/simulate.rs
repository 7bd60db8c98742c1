// SPDX-License-Identifier: MIT OR Apache-2.0

//! Seeded generators for single scale-change series.
//!
//! All randomness comes from xoshiro256++ seeded through SplitMix64, so a
//! `(seed, stream)` pair pins a series on every platform.

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp1, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type SimRng = Xoshiro256PlusPlus;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a path of identifiers into one seed. Order matters; execution order
/// does not.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, &[stream]))
}

/// Symmetric alpha-stable law with characteristic function
/// `exp(-gamma^alpha |t|^alpha)`, sampled by Chambers-Mallows-Stuck.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricStable {
    alpha: f64,
    gamma: f64,
}

impl SymmetricStable {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidGamma(gamma));
        }
        Ok(Self { alpha, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Uniform on the open interval (-pi/2, pi/2).
fn open_half_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return (u - 0.5) * PI;
        }
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        if a == 2.0 {
            // exp(-gamma^2 t^2) is N(0, 2 gamma^2).
            let z: f64 = StandardNormal.sample(rng);
            return self.gamma * SQRT_2 * z;
        }
        let v = open_half_angle(rng);
        if a == 1.0 {
            return self.gamma * v.tan();
        }
        let w: f64 = Exp1.sample(rng);
        let x = (a * v).sin() / v.cos().powf(1.0 / a) * (((1.0 - a) * v).cos() / w).powf((1.0 - a) / a);
        self.gamma * x
    }
}

pub fn sample_symmetric_stable<R: Rng + ?Sized>(alpha: f64, gamma: f64, rng: &mut R) -> Result<f64> {
    Ok(SymmetricStable::new(alpha, gamma)?.sample(rng))
}

/// Series with ground truth. `cp` is the one-based first index of regime 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSeries {
    pub values: Vec<f64>,
    pub cp: usize,
}

impl SyntheticSeries {
    /// Regime of the observation at one-based `i`: 1 before `cp`, 2 from it.
    pub fn regime(&self, i: usize) -> u8 {
        if i < self.cp {
            1
        } else {
            2
        }
    }
}

fn check_layout(len: usize, cp: usize) -> Result<()> {
    if len < 3 {
        return Err(Error::Config(format!("series length {len} too short; need at least 3")));
    }
    if !(2..len).contains(&cp) {
        return Err(Error::Config(format!("change point {cp} outside 2..={}", len - 1)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableSpec {
    pub alpha: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub len: usize,
    pub cp: usize,
    pub seed: u64,
}

impl StableSpec {
    /// `gamma1 = 1` and the change point in the middle.
    pub fn new(alpha: f64, gamma2: f64, len: usize, seed: u64) -> Self {
        Self { alpha, gamma1: 1.0, gamma2, len, cp: len / 2, seed }
    }

    pub fn validate(&self) -> Result<()> {
        SymmetricStable::new(self.alpha, self.gamma1)?;
        SymmetricStable::new(self.alpha, self.gamma2)?;
        check_layout(self.len, self.cp)
    }
}

pub fn gen_stable_series(spec: &StableSpec) -> Result<SyntheticSeries> {
    spec.validate()?;
    let first = SymmetricStable::new(spec.alpha, spec.gamma1)?;
    let second = SymmetricStable::new(spec.alpha, spec.gamma2)?;
    let mut rng = stream_rng(spec.seed, 0);
    let values =
        (1..=spec.len).map(|i| if i < spec.cp { first.sample(&mut rng) } else { second.sample(&mut rng) }).collect();
    Ok(SyntheticSeries { values, cp: spec.cp })
}

/// Gaussian series (std 1, then `omega2`) plus spikes `U * K` with
/// `U ~ Uniform(0, nu)` and `K` equal to +1 or -1 with probability `p` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub omega2: f64,
    pub nu: f64,
    pub p: f64,
    pub len: usize,
    pub cp: usize,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn new(omega2: f64, nu: f64, p: f64, len: usize, seed: u64) -> Self {
        Self { omega2, nu, p, len, cp: len / 2, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega2 > 0.0 && self.omega2.is_finite()) {
            return Err(Error::Config(format!("omega2={} must be positive", self.omega2)));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Config(format!("nu={} must be positive", self.nu)));
        }
        // p = 0 is accepted so the spike-free limit can be exercised.
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::Config(format!("p={} outside [0, 0.5)", self.p)));
        }
        check_layout(self.len, self.cp)
    }
}

pub fn gen_mixture_series(spec: &MixtureSpec) -> Result<SyntheticSeries> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, 0);
    let values = (1..=spec.len)
        .map(|i| {
            let sd = if i < spec.cp { 1.0 } else { spec.omega2 };
            let z: f64 = StandardNormal.sample(&mut rng);
            let amp = spec.nu * rng.gen::<f64>();
            let k = rng.gen::<f64>();
            let sign = if k < spec.p {
                1.0
            } else if k < 2.0 * spec.p {
                -1.0
            } else {
                0.0
            };
            sd * z + amp * sign
        })
        .collect();
    Ok(SyntheticSeries { values, cp: spec.cp })
}
