//! Seeded randomness and the Gaussian multiple-access channel
//! `y = Σ h_l x_l + z`, `z ~ CN(0, I)`.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Relative slack on the per-packet power check.
pub const POWER_TOLERANCE: f64 = 0.01;

/// Deterministic random stream for simulations.
#[derive(Clone, Debug)]
pub struct SimRng(ChaCha8Rng);

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream number `index` under `master`; the same pair always
    /// gives the same stream, whichever thread asks for it.
    pub fn stream(master: u64, index: u64) -> Self {
        Self::new(splitmix64(
            master ^ splitmix64(index.wrapping_add(0x51_7c_c1_b7)),
        ))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: u64) -> u64 {
        crate::ffield::uniform_below(&mut self.0, n)
    }

    /// Circularly symmetric `CN(0, 1)` sample by Box–Muller.
    pub fn complex_gaussian(&mut self) -> Complex64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-u1.ln()).sqrt();
        Complex64::from_polar(r, std::f64::consts::TAU * u2)
    }
}

impl RngCore for SimRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// SplitMix64 finalizer, used to spread seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `count` i.i.d. `CN(0, 1)` fading coefficients.
pub fn sample_rayleigh(count: usize, rng: &mut SimRng) -> Vec<Complex64> {
    (0..count).map(|_| rng.complex_gaussian()).collect()
}

/// Superposes `Σ h_l x_l` and adds unit-variance complex noise when an rng
/// is given.
///
/// Every packet must satisfy `(1/n)‖x_l‖² ≤ power_limit·(1 + 1%)`; a
/// violation is reported as [`Error::PowerConstraint`].
pub fn transmit(
    xs: &[Vec<Complex64>],
    h: &[Complex64],
    power_limit: f64,
    noise: Option<&mut SimRng>,
) -> Result<Vec<Complex64>> {
    if xs.is_empty() || xs.len() != h.len() {
        return Err(Error::Dimension(format!(
            "{} packets for {} channel coefficients",
            xs.len(),
            h.len()
        )));
    }
    let n = xs[0].len();
    if xs.iter().any(|x| x.len() != n) {
        return Err(Error::Dimension("packets of unequal length".into()));
    }
    let limit = power_limit * (1.0 + POWER_TOLERANCE);
    for x in xs {
        let power = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / n.max(1) as f64;
        if power > limit {
            return Err(Error::PowerConstraint { power, limit });
        }
    }
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for (x, &hl) in xs.iter().zip(h) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += hl * xi;
        }
    }
    if let Some(rng) = noise {
        for yi in y.iter_mut() {
            *yi += rng.complex_gaussian();
        }
    }
    Ok(y)
}
