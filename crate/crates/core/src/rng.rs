//! Counter-based random numbers (Philox4x32-10).
//!
//! Every uniform is a pure function of `(key, counter)`, so values can be
//! produced for any edge in any order, on any thread.

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

#[inline(always)]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Ten rounds of Philox4x32 on `ctr` under `key`.
#[inline]
pub fn philox4x32(mut ctr: [u32; 4], mut key: [u32; 2]) -> [u32; 4] {
    for round in 0..10 {
        if round > 0 {
            key[0] = key[0].wrapping_add(W0);
            key[1] = key[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, ctr[0]);
        let (hi1, lo1) = mulhilo(M1, ctr[2]);
        ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
    }
    ctr
}

/// SplitMix64 finaliser; used to fold `(seed, stream)` into a Philox key.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A keyed counter-based generator of uniforms in [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: [u32; 2],
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let k = mix64(seed ^ mix64(stream.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        CounterRng { key: [k as u32, (k >> 32) as u32] }
    }

    /// 64 random bits for the 128-bit counter `(a, b)`.
    #[inline]
    pub fn bits(&self, a: u64, b: u64) -> u64 {
        let out = philox4x32([a as u32, (a >> 32) as u32, b as u32, (b >> 32) as u32], self.key);
        (out[0] as u64) | ((out[1] as u64) << 32)
    }

    /// A uniform in [0, 1) with 53 random bits.
    #[inline]
    pub fn uniform(&self, a: u64, b: u64) -> f64 {
        (self.bits(a, b) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}
