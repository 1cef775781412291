//! Seeded random states and unitaries.

use crate::linalg::{CMatrix, C64};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic stream for a named consumer under a global seed.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    // FNV-1a keeps stream ids stable across platforms and releases.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(h);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state of dimension `d`.
pub fn haar_state(d: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = crate::linalg::norm_sqr(&v).sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Haar-random unitary via QR with the phase convention fixed.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let ph = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}
