use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimError;

/// Ratio between straight-line heading drift and relative step error.
pub const DRIFT_PER_MOVE: f64 = 0.1;

/// Standard deviations of every noise source plus the seed that fixes all
/// random draws.
///
/// `sigma_move` and `sigma_scale` are unitless, `sigma_rot` and `sigma_drift`
/// are radians and `sigma_jitter` is meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub sigma_move: f64,
    pub sigma_rot: f64,
    pub sigma_drift: f64,
    pub sigma_scale: f64,
    pub sigma_jitter: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Actuation noise with the drift coupled to the step error.
    pub fn actuation(sigma_move: f64, sigma_rot: f64, seed: u64) -> Self {
        Self {
            sigma_move,
            sigma_rot,
            sigma_drift: DRIFT_PER_MOVE * sigma_move,
            seed,
            ..Self::default()
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_move == 0.0
            && self.sigma_rot == 0.0
            && self.sigma_drift == 0.0
            && self.sigma_scale == 0.0
            && self.sigma_jitter == 0.0
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("sigma_move", self.sigma_move),
            ("sigma_rot", self.sigma_rot),
            ("sigma_drift", self.sigma_drift),
            ("sigma_scale", self.sigma_scale),
            ("sigma_jitter", self.sigma_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::InvalidNoise(format!("{name} = {v}")));
            }
        }
        Ok(())
    }
}

/// Independent consumers of the random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u32)]
pub enum NoiseDomain {
    Episode = 1,
    Actuation = 2,
    Jitter = 3,
    Policy = 4,
    Ablation = 5,
}

/// Actuation draw slots within one step.
pub mod slot {
    pub const SCALE: u32 = 0;
    pub const ROT: u32 = 1;
    pub const MOVE: u32 = 2;
    pub const DRIFT: u32 = 3;
}

/// Counter-based generator: every draw is a pure function of
/// `(seed, domain, index, slot)`, so adding or skipping a draw never shifts
/// any other draw.
pub fn keyed_rng(seed: u64, domain: NoiseDomain, index: u64, slot: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&(domain as u32).to_le_bytes());
    key[12..16].copy_from_slice(&slot.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// One standard normal draw for the given key.
pub fn standard_normal(seed: u64, domain: NoiseDomain, index: u64, slot: u32) -> f64 {
    StandardNormal.sample(&mut keyed_rng(seed, domain, index, slot))
}

/// Mixes two 64-bit values into a well-spread seed (splitmix64 finalizer).
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_keyed() {
        let a = standard_normal(7, NoiseDomain::Actuation, 3, slot::MOVE);
        let b = standard_normal(7, NoiseDomain::Actuation, 3, slot::MOVE);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(a, standard_normal(7, NoiseDomain::Actuation, 3, slot::ROT));
        assert_ne!(a, standard_normal(7, NoiseDomain::Actuation, 4, slot::MOVE));
        assert_ne!(a, standard_normal(8, NoiseDomain::Actuation, 3, slot::MOVE));
        assert_ne!(a, standard_normal(7, NoiseDomain::Jitter, 3, slot::MOVE));
    }

    #[test]
    fn actuation_couples_drift() {
        let n = NoiseConfig::actuation(0.3, 0.1, 1);
        assert!((n.sigma_drift - 0.03).abs() < 1e-15);
        assert!(NoiseConfig::noiseless(0).is_noiseless());
        assert!(NoiseConfig {
            sigma_rot: -1.0,
            ..NoiseConfig::default()
        }
        .validate()
        .is_err());
    }
}
