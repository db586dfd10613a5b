//! Keyed, counter-based random streams.
//!
//! Every random draw in a run comes from a ChaCha8 stream whose 256-bit key
//! is the tuple `(seed, epoch, step, worker_index)` and whose stream id names
//! the purpose of the draw. Two lanes never share a generator, so the values
//! a lane sees do not depend on which thread runs it or in what order.
//!
//! Gaussian variates use the inverse-CDF transform of Wichura's algorithm
//! AS 241 (`PPND16`), which is accurate to about 1e-16 and uses only
//! rational functions, `ln` and `sqrt`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Purpose tag that separates streams sharing a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum StreamDomain {
    Noise = 0,
    Shuffle = 1,
    Init = 2,
    Data = 3,
    Split = 4,
    Attack = 5,
}

/// Key of one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseStreamKey {
    pub seed: u64,
    pub epoch: u64,
    pub step: u64,
    pub worker_index: u64,
}

impl NoiseStreamKey {
    pub fn new(seed: u64, epoch: u64, step: u64, worker_index: u64) -> Self {
        Self {
            seed,
            epoch,
            step,
            worker_index,
        }
    }

    /// Key for draws that are not tied to a training step.
    pub fn root(seed: u64) -> Self {
        Self::new(seed, 0, 0, 0)
    }

    pub fn rng(&self, domain: StreamDomain) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        for (chunk, word) in
            key.chunks_exact_mut(8)
                .zip([self.seed, self.epoch, self.step, self.worker_index])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(domain as u64);
        rng
    }

    pub fn gaussian(&self, domain: StreamDomain) -> GaussianStream<ChaCha8Rng> {
        GaussianStream::new(self.rng(domain))
    }
}

/// Uniform draw on the open interval (0, 1): the midpoint of one of 2⁵² cells.
#[inline]
pub fn open_unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard normal variates by inverse-CDF transform of open-unit uniforms.
#[derive(Debug, Clone)]
pub struct GaussianStream<R> {
    rng: R,
}

impl<R: RngCore> GaussianStream<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }

    #[inline]
    pub fn next_standard(&mut self) -> f64 {
        standard_normal_quantile(open_unit(&mut self.rng))
    }
}

#[inline]
fn poly(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387_132_872_796_366_608,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34,
    4.630_337_846_156_545_295_9,
    5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04,
    1.270_458_252_452_368_382_58,
    2.417_807_251_774_506_117_7e-1,
    2.272_384_498_926_918_458_33e-2,
    7.745_450_142_783_414_076_4e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.053_191_626_637_758_821_87,
    1.676_384_830_183_803_849_4,
    6.897_673_349_851_000_045_5e-1,
    1.481_039_764_274_800_745_9e-1,
    1.519_866_656_361_645_719_66e-2,
    5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2,
    5.463_784_911_164_114_369_9,
    1.784_826_539_917_291_335_8,
    2.965_605_718_285_048_912_3e-1,
    2.653_218_952_657_612_309_3e-2,
    1.242_660_947_388_078_438_6e-3,
    2.711_555_568_743_487_578_15e-5,
    2.010_334_399_292_288_132_65e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879_376_9e-1,
    1.369_298_809_227_358_053_1e-1,
    1.487_536_129_085_061_485_25e-2,
    7.868_691_311_456_132_591e-4,
    1.846_318_317_510_054_681_8e-5,
    1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

/// Quantile function of the standard normal distribution (AS 241).
///
/// `p` must lie in the open interval (0, 1).
pub fn standard_normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0, "quantile argument {p} outside (0, 1)");
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        r -= 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}
