//! Standard normal quantiles and seeded Gaussian streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

// Wichura's PPND16 (Applied Statistics algorithm AS 241), ~1e-16 relative accuracy.
const A: [f64; 8] = [
    3.387_132_872_796_366_608_0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083_0e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061_0e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561_0e3,
];
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_90,
    5.769_497_221_460_691_405_50,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_70e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_40e-4,
];
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_40,
    6.897_673_349_851_000_045_50e-1,
    1.481_039_764_274_800_745_90e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946_00e-4,
    1.050_750_071_644_416_843_24e-9,
];
const E: [f64; 8] = [
    6.657_904_643_501_103_777_20,
    5.463_784_911_164_114_369_90,
    1.784_826_539_917_291_335_80,
    2.965_605_718_285_048_912_30e-1,
    2.653_218_952_657_612_309_30e-2,
    1.242_660_947_388_078_438_60e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_90e-1,
    1.369_298_809_227_358_053_10e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591_00e-4,
    1.846_318_317_510_054_681_80e-5,
    1.421_511_758_316_445_888_70e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner<T: Scalar>(coef: &[f64; 8], x: T) -> T {
    coef.iter().rev().fold(T::zero(), |acc, &c| acc * x + T::c(c))
}

/// Quantile of the standard normal distribution: returns `z` with `Φ(z) = p`.
pub fn inverse_normal_cdf<T: Scalar>(p: T) -> Result<T> {
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::Domain(p.to_f64_lossy()));
    }
    let half = T::c(0.5);
    let q = p - half;
    if q.abs() <= T::c(0.425) {
        let r = T::c(0.180_625) - q * q;
        return Ok(q * horner(&A, r) / horner(&B, r));
    }
    let tail = if q < T::zero() { p } else { T::one() - p };
    let mut r = (-tail.ln()).sqrt();
    let z = if r <= T::c(5.0) {
        r = r - T::c(1.6);
        horner(&C, r) / horner(&D, r)
    } else {
        r = r - T::c(5.0);
        horner(&E, r) / horner(&F, r)
    };
    Ok(if q < T::zero() { -z } else { z })
}

/// Upper-tail quantile `z_a` with `P(Z > z_a) = a`.
///
/// Tail probabilities at or above one half map to `0`, so the squared
/// critical value of a test at level `α ≥ 1` degenerates to zero.
pub fn upper_quantile<T: Scalar>(tail: T) -> Result<T> {
    if !(tail > T::zero()) || tail.is_nan() {
        return Err(Error::Domain(tail.to_f64_lossy()));
    }
    if tail >= T::c(0.5) {
        return Ok(T::zero());
    }
    // Φ⁻¹(1 - a) = -Φ⁻¹(a), and the lower tail keeps full precision.
    Ok(-inverse_normal_cdf(tail)?)
}

/// Squared two-sided critical value `z²_{α/2}` for a test at level `alpha`.
pub fn two_sided_critical_sq<T: Scalar>(alpha: T) -> Result<T> {
    let z = upper_quantile(alpha / T::c(2.0))?;
    Ok(z * z)
}

/// Descriptor of an independent, reproducible Gaussian stream.
///
/// Backed by ChaCha20: the seed fixes the key and the stream id selects one
/// of 2^64 non-overlapping keystreams, so sequences for distinct stream ids
/// share no prefix. The descriptor is a plain value and may be shared across
/// threads; each worker builds its own generator from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Derive a child stream keyed by `key` (e.g. a replication index).
    pub fn substream(&self, key: u64) -> Self {
        Self {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(key.wrapping_add(0x5851_F42D_4C95_7F2D))),
        }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn normals(&self) -> NormalStream {
        NormalStream { rng: self.rng() }
    }
}

/// Iterator of standard normal variates drawn from one [`RandomSource`].
pub struct NormalStream {
    rng: ChaCha20Rng,
}

impl NormalStream {
    pub fn uniform(&mut self, low: f64, high: f64) -> f64 {
        self.rng.random_range(low..high)
    }
}

impl Iterator for NormalStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.rng.sample(StandardNormal))
    }
}

pub fn standard_normal_draws<T: Scalar>(source: RandomSource, count: usize) -> Vec<T> {
    source.normals().take(count).map(T::c).collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}
