//! Compute-and-forward at a single receiver.
//!
//! For channel `h` and integer coefficients `a`, define
//! `f(a) = ‖a‖² − SNR·|h·a†|² / (1 + SNR‖h‖²)`. The computation rate is
//! `max(log₂(1/f(a)), 0)` and the MMSE-scaled receiver sees effective noise
//! of variance `SNR·f(a)` per complex dimension. Coefficient selection
//! minimizes `f`, a positive definite quadratic form, by exact enumeration.
//!
//! ```
//! use num_complex::Complex64;
//! use pnc::cfwd::{computation_rate, select_coefficients, ChannelVector};
//! use pnc::gint::GaussInt;
//!
//! let one = Complex64::new(1.0, 0.0);
//! let ch = ChannelVector::new(vec![one, one], 10.0)?;
//! let a = select_coefficients(&ch)?;
//! assert_eq!(a.0, vec![GaussInt::ONE, GaussInt::ONE]);
//! assert!((computation_rate(&ch, &a)? - (21.0f64 / 2.0).log2()).abs() < 1e-12);
//! # Ok::<(), pnc::Error>(())
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ffield::{FieldElem, FieldSpec};
use crate::gint::GaussInt;
use crate::lattice::{gc, LatticeScheme};

/// Largest number of users handled by [`select_coefficients`].
pub const MAX_USERS: usize = 4;

/// Channel gains seen by one receiver, with the per-user SNR.
///
/// An infinite SNR models a noiseless receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelVector {
    pub h: Vec<Complex64>,
    pub snr: f64,
}

impl ChannelVector {
    pub fn new(h: Vec<Complex64>, snr: f64) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidArgument("channel vector is empty".into()));
        }
        if snr.is_nan() || snr <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "SNR must be positive, got {snr}"
            )));
        }
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "channel gains must be finite".into(),
            ));
        }
        Ok(ChannelVector { h, snr })
    }

    pub fn from_db(h: Vec<Complex64>, snr_db: f64) -> Result<Self> {
        Self::new(h, 10f64.powf(snr_db / 10.0))
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.h.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `β = SNR / (1 + SNR‖h‖²)`, or `1/‖h‖²` at infinite SNR.
    fn beta(&self) -> f64 {
        if self.snr.is_infinite() {
            1.0 / self.norm_sqr()
        } else {
            self.snr / (1.0 + self.snr * self.norm_sqr())
        }
    }
}

/// Integer coefficient vector `a`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CoeffVector(pub Vec<GaussInt>);

impl CoeffVector {
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|g| g.is_zero())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|g| g.norm() as f64).sum()
    }
}

impl std::fmt::Display for CoeffVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{g}")?;
        }
        write!(f, ")")
    }
}

/// `h·a† = Σ h_l·conj(a_l)`.
fn inner(h: &[Complex64], a: &[GaussInt]) -> Complex64 {
    h.iter().zip(a).map(|(hl, al)| hl * gc(*al).conj()).sum()
}

fn check_len(ch: &ChannelVector, a: &CoeffVector) -> Result<()> {
    if ch.len() != a.0.len() {
        return Err(Error::Dimension(format!(
            "channel has {} users, coefficient vector {}",
            ch.len(),
            a.0.len()
        )));
    }
    Ok(())
}

/// `f(a) = ‖a‖² − β|h·a†|²`, the effective noise variance per unit SNR.
pub fn effective_noise_factor(ch: &ChannelVector, a: &CoeffVector) -> Result<f64> {
    check_len(ch, a)?;
    Ok(a.norm_sqr() - ch.beta() * inner(&ch.h, &a.0).norm_sqr())
}

/// Computation rate in bits per complex dimension.
pub fn computation_rate(ch: &ChannelVector, a: &CoeffVector) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::ZeroCoefficients);
    }
    let f = effective_noise_factor(ch, a)?;
    if f <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 / f).log2().max(0.0))
}

/// The scalar `α` minimizing `E|αy − Σ a_l x_l|²`.
pub fn mmse_alpha(ch: &ChannelVector, a: &CoeffVector) -> Result<Complex64> {
    check_len(ch, a)?;
    Ok(inner(&ch.h, &a.0).conj() * ch.beta())
}

/// The coefficient vector of maximal computation rate.
///
/// Among equal rates the choice is: first nonzero entry in canonical form
/// (`re > 0, im ≥ 0`), then smaller `‖a‖²`, then lexicographic order on
/// `(re, im)` pairs.
pub fn select_coefficients(ch: &ChannelVector) -> Result<CoeffVector> {
    let l = ch.len();
    if l > MAX_USERS {
        return Err(Error::InvalidArgument(format!(
            "coefficient search supports at most {MAX_USERS} users, got {l}"
        )));
    }
    if !ch.snr.is_finite() {
        return Err(Error::InvalidArgument(
            "coefficient selection needs a finite SNR".into(),
        ));
    }
    // Real form over z = (Re a, Im a): f = zᵀ M z, M = I − β(w₁w₁ᵀ + w₂w₂ᵀ)
    // with w₁ = (Re h, Im h), w₂ = (Im h, −Re h).
    let beta = ch.beta();
    let n = 2 * l;
    let w1: Vec<f64> = (0..n)
        .map(|i| if i < l { ch.h[i].re } else { ch.h[i - l].im })
        .collect();
    let w2: Vec<f64> = (0..n)
        .map(|i| if i < l { ch.h[i].im } else { -ch.h[i - l].re })
        .collect();
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - beta * (w1[i] * w1[j] + w2[i] * w2[j])
    });
    let chol = m.clone().cholesky().ok_or_else(|| {
        Error::InvalidArgument("coefficient form is not positive definite".into())
    })?;
    let r = chol.l().transpose();

    let mut search = MinSearch {
        r: &r,
        z: vec![0; n],
        best: m[(0, 0)] * (1.0 + 1e-9) + 1e-12,
        found: Vec::new(),
    };
    search.descend(n - 1, 0.0);

    let to_coeffs =
        |z: &[i64]| CoeffVector((0..l).map(|i| GaussInt::new(z[i], z[l + i])).collect());
    let fmin = search
        .found
        .iter()
        .map(|(d, _)| *d)
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * fmin.max(1e-12);
    let best = search
        .found
        .iter()
        .filter(|(d, _)| *d <= fmin + tol)
        .map(|(_, z)| to_coeffs(z))
        .filter(|a| leading_is_canonical(&a.0))
        .min_by(|a, b| tie_key(a).cmp(&tie_key(b)))
        .expect("e₁ always lies inside the initial radius");
    Ok(best)
}

fn leading_is_canonical(a: &[GaussInt]) -> bool {
    a.iter()
        .find(|g| !g.is_zero())
        .is_some_and(|g| g.re > 0 && g.im >= 0)
}

fn tie_key(a: &CoeffVector) -> (u128, Vec<(i64, i64)>) {
    (
        a.0.iter().map(|g| g.norm()).sum(),
        a.0.iter().map(|g| (g.re, g.im)).collect(),
    )
}

/// Enumerates nonzero `z` with `‖Rz‖² ≤ best`, shrinking `best` as it goes
/// and keeping every candidate that was within the radius when found.
struct MinSearch<'a> {
    r: &'a DMatrix<f64>,
    z: Vec<i64>,
    best: f64,
    found: Vec<(f64, Vec<i64>)>,
}

impl MinSearch<'_> {
    fn descend(&mut self, level: usize, dist: f64) {
        let n = self.z.len();
        let s: f64 = (level + 1..n)
            .map(|j| self.r[(level, j)] * self.z[j] as f64)
            .sum();
        let rll = self.r[(level, level)];
        let center = -s / rll;
        // All integers c with dist + (rll(c − center))² ≤ best.
        let room = self.best - dist;
        if room < 0.0 {
            return;
        }
        let half = (room.sqrt() / rll.abs()) + 1e-9;
        let lo = (center - half).ceil() as i64;
        let hi = (center + half).floor() as i64;
        for c in lo..=hi {
            let d = dist + (rll * (c as f64 - center)).powi(2);
            if d > self.best * (1.0 + 1e-9) + 1e-15 {
                continue;
            }
            self.z[level] = c;
            if level == 0 {
                if self.z.iter().any(|&v| v != 0) {
                    self.found.push((d, self.z.clone()));
                    if d < self.best {
                        self.best = d * (1.0 + 1e-9) + 1e-15;
                    }
                }
            } else {
                self.descend(level - 1, d);
            }
        }
        self.z[level] = 0;
    }
}

/// Componentwise σ(a_l).
pub fn map_coeffs_to_field(a: &CoeffVector, spec: &FieldSpec) -> Vec<FieldElem> {
    a.0.iter().map(|&g| spec.sigma(g)).collect()
}

/// How the transmit signals relate to the codewords.
#[derive(Clone, Copy, Debug)]
pub struct DecodeContext<'a> {
    /// Transmitters send `scale·x_l`, with `x_l` the scheme's codeword.
    pub scale: f64,
    /// Per-user dithers, or `None` for all-zero dithers.
    pub dithers: Option<&'a [Vec<Complex64>]>,
}

impl Default for DecodeContext<'_> {
    fn default() -> Self {
        DecodeContext {
            scale: 1.0,
            dithers: None,
        }
    }
}

/// Estimate `û` of the combination `Σ σ(a_l)·w_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinationEstimate {
    pub u: Vec<FieldElem>,
    /// Lattice coefficients returned by the quantizer.
    pub coeffs: Vec<GaussInt>,
    pub budget_limited: bool,
}

/// Decodes `Σ σ(a_l) w_l` from the channel output `y`.
///
/// Forms `g(y) = (α/scale)·y − Σ a_l d_l`, quantizes it with the scheme's
/// decoder and maps the first `k` coefficients through σ.
pub fn decode_combination(
    y: &[Complex64],
    ch: &ChannelVector,
    a: &CoeffVector,
    scheme: &dyn LatticeScheme,
    ctx: &DecodeContext<'_>,
) -> Result<CombinationEstimate> {
    if a.is_zero() {
        return Err(Error::ZeroCoefficients);
    }
    check_len(ch, a)?;
    let n = scheme.block_len();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "received block has length {}, expected {n}",
            y.len()
        )));
    }
    if !(ctx.scale > 0.0 && ctx.scale.is_finite()) {
        return Err(Error::InvalidArgument(
            "transmit scale must be positive".into(),
        ));
    }
    let alpha = mmse_alpha(ch, a)? / ctx.scale;
    let mut g: Vec<Complex64> = y.iter().map(|v| alpha * v).collect();
    if let Some(dithers) = ctx.dithers {
        if dithers.len() != a.0.len() || dithers.iter().any(|d| d.len() != n) {
            return Err(Error::Dimension(
                "dither shape does not match the users".into(),
            ));
        }
        for (al, d) in a.0.iter().zip(dithers) {
            let c = gc(*al);
            for (gi, di) in g.iter_mut().zip(d) {
                *gi -= c * di;
            }
        }
    }
    let noise_var = if ch.snr.is_finite() {
        effective_noise_factor(ch, a)?.max(0.0) * ch.snr / (ctx.scale * ctx.scale)
    } else {
        0.0
    };
    let q = scheme.quantize(&g, noise_var)?;
    let spec = scheme.field();
    let k = scheme.message_len();
    Ok(CombinationEstimate {
        u: q.coeffs[..k].iter().map(|&r| spec.sigma(r)).collect(),
        coeffs: q.coeffs,
        budget_limited: q.budget_limited,
    })
}
