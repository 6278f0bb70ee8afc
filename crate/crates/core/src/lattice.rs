//! ℤ[i]-lattices and lattice partitions `Λ/Λ′`.
//!
//! A [`Lattice`] is the set `{ r·G : r ∈ ℤ[i]ⁿ }` for an `n × m` complex
//! generator `G` of full row rank (`m ≥ n`). A [`LatticePartition`] pairs a
//! fine lattice with the sublattice generated by `J·G` and keeps both in the
//! diagonal form given by the Smith normal form of `J`, so that the labeling
//! φ reads off the first `k` coefficients.
//!
//! ```
//! use nalgebra::DMatrix;
//! use num_complex::Complex64;
//! use pnc::gint::GaussInt;
//! use pnc::lattice::build_partition;
//! use pnc::snf::GMatrix;
//!
//! let g = DMatrix::<Complex64>::identity(2, 2);
//! let j = GMatrix::diagonal(&[GaussInt::new(3, 0), GaussInt::new(3, 0)]);
//! let part = build_partition(&g, &j)?;
//! assert_eq!(part.index(), 81);
//! assert_eq!(part.is_vector_space()?, Some((9, 2)));
//! # Ok::<(), pnc::Error>(())
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ffield::{FieldElem, FieldSpec};
use crate::gint::GaussInt;
use crate::snf::{det, smith_normal_form, GMatrix, SnfResult};

/// Relative tolerance for the rank test on generators.
pub const RANK_TOL: f64 = 1e-9;
/// Distance from ℤ[i] below which a recovered coefficient counts as integral.
pub const MEMBERSHIP_TOL: f64 = 1e-6;
/// Largest complex dimension handled by the exhaustive sphere search.
pub const MAX_EXACT_DIM: usize = 8;
/// Largest index for which cosets are enumerated.
pub const MAX_ENUMERATED_INDEX: u128 = 10_000;

/// Converts a Gaussian-integer matrix to a complex one.
pub fn to_complex(m: &GMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let g = m[(i, j)];
        Complex64::new(g.re as f64, g.im as f64)
    })
}

/// Complex image of a Gaussian integer.
pub fn gc(g: GaussInt) -> Complex64 {
    Complex64::new(g.re as f64, g.im as f64)
}

/// `Σ r_i · rows(G)_i`.
fn row_combination(r: &[GaussInt], g: &DMatrix<Complex64>) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); g.ncols()];
    for (i, &ri) in r.iter().enumerate() {
        if ri.is_zero() {
            continue;
        }
        let c = gc(ri);
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += c * g[(i, j)];
        }
    }
    x
}

/// A ℤ[i]-lattice with an `n × m` generator.
#[derive(Clone, Debug)]
pub struct Lattice {
    g: DMatrix<Complex64>,
    /// Right inverse `Gᴴ(GGᴴ)⁻¹`.
    pinv: DMatrix<Complex64>,
}

impl Lattice {
    pub fn new(g: DMatrix<Complex64>) -> Result<Self> {
        let (n, m) = g.shape();
        if n == 0 || m < n {
            return Err(Error::Dimension(format!(
                "generator must be n x m with 1 <= n <= m, got {n}x{m}"
            )));
        }
        if g.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite generator entry".into()));
        }
        let sv = g.clone().svd(false, false).singular_values;
        let smax = sv.max();
        if smax == 0.0 || sv.min() <= RANK_TOL * smax {
            return Err(Error::RankDeficient);
        }
        let gh = g.adjoint();
        let gram_inv = (&g * &gh).try_inverse().ok_or(Error::RankDeficient)?;
        let pinv = gh * gram_inv;
        Ok(Lattice { g, pinv })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged generator rows".into()));
        }
        Self::new(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }

    pub fn generator(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    /// Number of generator rows `n`.
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// Ambient complex dimension `m`.
    pub fn ambient_dim(&self) -> usize {
        self.g.ncols()
    }

    /// The point `r·G`.
    pub fn point(&self, r: &[GaussInt]) -> Result<Vec<Complex64>> {
        if r.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "coefficient vector has length {}, lattice has rank {}",
                r.len(),
                self.dim()
            )));
        }
        Ok(row_combination(r, &self.g))
    }

    /// Real-valued coefficients `x·G⁺`.
    pub fn real_coefficients(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Dimension(format!(
                "point has length {}, lattice lives in dimension {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        Ok((0..self.dim())
            .map(|i| {
                x.iter()
                    .enumerate()
                    .map(|(j, &xj)| xj * self.pinv[(j, i)])
                    .sum()
            })
            .collect())
    }

    /// Exact coefficients of a lattice point.
    ///
    /// Fails with [`Error::NotALatticePoint`] when `x` is off the lattice
    /// (either a coefficient is not near ℤ[i] or `x` leaves the row span).
    pub fn coefficients(&self, x: &[Complex64]) -> Result<Vec<GaussInt>> {
        let c = self.real_coefficients(x)?;
        let r: Vec<GaussInt> = c.iter().map(|z| GaussInt::round_from(z.re, z.im)).collect();
        let dev = c
            .iter()
            .zip(&r)
            .map(|(z, g)| (z - gc(*g)).norm())
            .fold(0.0, f64::max);
        if dev > MEMBERSHIP_TOL {
            return Err(Error::NotALatticePoint(dev));
        }
        let back = row_combination(&r, &self.g);
        let scale = 1.0 + x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let resid = back
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if resid > MEMBERSHIP_TOL * scale {
            return Err(Error::NotALatticePoint(resid));
        }
        Ok(r)
    }

    pub fn contains(&self, x: &[Complex64]) -> bool {
        self.coefficients(x).is_ok()
    }

    /// Nearest lattice point to `x` and its coefficients, by exhaustive
    /// Schnorr–Euchner search. Limited to `n <= MAX_EXACT_DIM`.
    pub fn quantize_nearest(&self, x: &[Complex64]) -> Result<(Vec<Complex64>, Vec<GaussInt>)> {
        let n = self.dim();
        let m = self.ambient_dim();
        if n > MAX_EXACT_DIM {
            return Err(Error::UseStructuredDecoder {
                dim: n,
                bound: MAX_EXACT_DIM,
            });
        }
        if x.len() != m {
            return Err(Error::Dimension(format!(
                "point has length {}, lattice lives in dimension {m}",
                x.len()
            )));
        }
        // Real model: coefficients (Re r, Im r), basis vectors as columns.
        let basis = DMatrix::<f64>::from_fn(2 * m, 2 * n, |row, col| {
            let (i, imag_coeff) = (col % n, col >= n);
            let (j, imag_out) = (row % m, row >= m);
            let z = self.g[(i, j)];
            match (imag_coeff, imag_out) {
                (false, false) => z.re,
                (false, true) => z.im,
                (true, false) => -z.im,
                (true, true) => z.re,
            }
        });
        let t = nalgebra::DVector::<f64>::from_fn(2 * m, |row, _| {
            if row < m {
                x[row].re
            } else {
                x[row - m].im
            }
        });
        let qr = basis.qr();
        let (q, r) = (qr.q(), qr.r());
        let y = q.transpose() * t;
        let mut search = SphereSearch {
            r: &r,
            y: y.as_slice(),
            z: vec![0; 2 * n],
            best: f64::INFINITY,
            best_z: vec![0; 2 * n],
        };
        search.descend(2 * n - 1, 0.0);
        let coeffs: Vec<GaussInt> = (0..n)
            .map(|i| GaussInt::new(search.best_z[i], search.best_z[n + i]))
            .collect();
        Ok((row_combination(&coeffs, &self.g), coeffs))
    }
}

struct SphereSearch<'a> {
    r: &'a DMatrix<f64>,
    y: &'a [f64],
    z: Vec<i64>,
    best: f64,
    best_z: Vec<i64>,
}

impl SphereSearch<'_> {
    fn descend(&mut self, level: usize, dist: f64) {
        let n = self.z.len();
        let mut s = self.y[level];
        for j in level + 1..n {
            s -= self.r[(level, j)] * self.z[j] as f64;
        }
        let rll = self.r[(level, level)];
        let center = s / rll;
        let first = center.round();
        let toward = if center >= first { 1.0 } else { -1.0 };
        // Zig-zag around the center so partial distances never decrease.
        for step in 0i64.. {
            let off = if step % 2 == 1 {
                (step + 1) / 2
            } else {
                -(step / 2)
            };
            let cand = first + toward * off as f64;
            let d = dist + (rll * (cand - center)).powi(2);
            if d >= self.best {
                break;
            }
            self.z[level] = cand as i64;
            if level == 0 {
                self.best = d;
                self.best_z.clone_from(&self.z);
            } else {
                self.descend(level - 1, d);
            }
        }
    }
}

/// A partition `Λ/Λ′` with `G_Λ′ = J·G_Λ`, stored in diagonal form.
#[derive(Clone, Debug)]
pub struct LatticePartition {
    fine: Lattice,
    coarse: Lattice,
    j: GMatrix,
    snf: SnfResult<GaussInt>,
    /// Diagonal of the normalized relation, nonunits first.
    dbar: Vec<GaussInt>,
    field: Option<FieldSpec>,
}

/// Builds `Λ/Λ′` from the fine generator and the relation matrix `J`.
///
/// Both generators are rewritten with the Smith normal form witnesses,
/// `G_Λ ← Π·Q⁻¹·G_Λ` and `G_Λ′ ← D̄·G_Λ`, where the permutation `Π` moves
/// the nonunit invariant factors to the front. The lattices are unchanged.
pub fn build_partition(g_fine: &DMatrix<Complex64>, j: &GMatrix) -> Result<LatticePartition> {
    let n = g_fine.nrows();
    if !j.is_square() || j.rows() != n {
        return Err(Error::Dimension(format!(
            "J must be {n}x{n} to match the generator, got {}x{}",
            j.rows(),
            j.cols()
        )));
    }
    Lattice::new(g_fine.clone())?;
    let snf = match smith_normal_form(j) {
        Ok(s) => s,
        Err(Error::Singular) => return Err(Error::InfiniteIndex),
        Err(e) => return Err(e),
    };
    let units = snf.unit_count();
    let k = snf.invariant_factors.len();
    // Row i of the normalized basis is row perm[i] of Q⁻¹·G.
    let perm: Vec<usize> = (units..n).chain(0..units).collect();
    let qg = to_complex(&snf.q_inv) * g_fine;
    let fine_g = DMatrix::from_fn(n, g_fine.ncols(), |i, c| qg[(perm[i], c)]);
    let mut dbar = snf.invariant_factors.clone();
    dbar.resize(n, GaussInt::ONE);
    let coarse_g = DMatrix::from_fn(n, g_fine.ncols(), |i, c| gc(dbar[i]) * fine_g[(i, c)]);

    let annihilator = snf.annihilator();
    let field = if k > 0 && annihilator.is_prime() {
        FieldSpec::new(annihilator).ok()
    } else {
        None
    };
    Ok(LatticePartition {
        fine: Lattice::new(fine_g)?,
        coarse: Lattice::new(coarse_g)?,
        j: j.clone(),
        snf,
        dbar,
        field,
    })
}

impl LatticePartition {
    /// Fine lattice Λ in normalized form.
    pub fn fine(&self) -> &Lattice {
        &self.fine
    }

    /// Coarse lattice Λ′ in normalized form.
    pub fn coarse(&self) -> &Lattice {
        &self.coarse
    }

    pub fn relation(&self) -> &GMatrix {
        &self.j
    }

    pub fn snf(&self) -> &SnfResult<GaussInt> {
        &self.snf
    }

    /// Diagonal `D̄` of the normalized relation `G_Λ′ = D̄·G_Λ`.
    pub fn normalized_diagonal(&self) -> &[GaussInt] {
        &self.dbar
    }

    pub fn field(&self) -> Option<&FieldSpec> {
        self.field.as_ref()
    }

    /// Number of nonunit invariant factors.
    pub fn k(&self) -> usize {
        self.snf.invariant_factors.len()
    }

    /// `|Λ : Λ′| = N(det J)`.
    pub fn index(&self) -> u128 {
        self.snf
            .invariant_factors
            .iter()
            .map(|d| d.norm())
            .product()
    }

    /// `N(det J)` computed directly from `J`.
    pub fn index_from_det(&self) -> Result<u128> {
        Ok(det(&self.j)?.norm())
    }

    /// `Some((q, k))` when `Λ/Λ′ ≅ F_qᵏ`: the annihilator is squarefree and
    /// all of its prime factors share the norm `q`. A trivial partition
    /// gives `None`.
    pub fn is_vector_space(&self) -> Result<Option<(u64, usize)>> {
        if self.k() == 0 {
            return Ok(None);
        }
        let fac = self.snf.annihilator().factor()?;
        let Some(q) = fac.common_prime_norm() else {
            return Ok(None);
        };
        let mut dim = 0usize;
        let mut rest = self.index();
        while rest > 1 {
            if !rest.is_multiple_of(q) {
                return Ok(None);
            }
            rest /= q;
            dim += 1;
        }
        Ok(Some((q as u64, dim)))
    }

    fn require_field(&self) -> Result<&FieldSpec> {
        self.field.as_ref().ok_or(Error::NoField)
    }

    /// The labeling φ: Λ → F_qᵏ, σ of the first `k` coefficients.
    pub fn phi(&self, lambda: &[Complex64]) -> Result<Vec<FieldElem>> {
        let spec = *self.require_field()?;
        let r = self.fine.coefficients(lambda)?;
        Ok(r[..self.k()].iter().map(|&x| spec.sigma(x)).collect())
    }

    /// The lift `φ⁻¹(w) = σ⁻¹(w)·[I_k 0]·G_Λ`.
    pub fn phi_inv(&self, w: &[FieldElem]) -> Result<Vec<Complex64>> {
        self.require_field()?;
        if w.len() != self.k() {
            return Err(Error::Dimension(format!(
                "message has length {}, partition carries {} symbols",
                w.len(),
                self.k()
            )));
        }
        let mut r: Vec<GaussInt> = w.iter().map(FieldElem::lift).collect();
        r.resize(self.fine.dim(), GaussInt::ZERO);
        self.fine.point(&r)
    }

    /// One representative per coset of Λ′ in Λ.
    pub fn enumerate_cosets(&self) -> Result<Vec<Vec<Complex64>>> {
        let idx = self.index();
        if idx > MAX_ENUMERATED_INDEX {
            return Err(Error::Capacity {
                what: "partition index",
                value: idx,
                bound: MAX_ENUMERATED_INDEX,
            });
        }
        let n = self.fine.dim();
        let mut coeff_sets: Vec<Vec<GaussInt>> = vec![vec![GaussInt::ZERO; n]];
        for (i, d) in self.snf.invariant_factors.iter().enumerate() {
            let res = residues(*d);
            coeff_sets = coeff_sets
                .into_iter()
                .flat_map(|base| {
                    res.iter().map(move |&r| {
                        let mut v = base.clone();
                        v[i] = r;
                        v
                    })
                })
                .collect();
        }
        coeff_sets.iter().map(|r| self.fine.point(r)).collect()
    }
}

/// A complete residue system of ℤ[i]/(d).
///
/// The ideal `(d)`, `d = a+bi`, has Hermite basis `(N/g, 0)`, `(c, g)` with
/// `N = a²+b²` and `g = gcd(a, b)`, so a centered `N/g × g` box of points is
/// a fundamental domain.
pub fn residues(d: GaussInt) -> Vec<GaussInt> {
    let n = d.norm() as i64;
    let g = gcd_i64(d.re, d.im);
    let (w, h) = (n / g, g);
    let mut out = Vec::with_capacity(n as usize);
    for y in 0..h {
        for x in 0..w {
            out.push(GaussInt::new(x - (w - 1) / 2, y - (h - 1) / 2));
        }
    }
    out
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Output of a lattice quantizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantized {
    /// Coefficients of the decoded point with respect to the fine basis.
    pub coeffs: Vec<GaussInt>,
    /// Set when a search budget ran out before the search completed.
    pub budget_limited: bool,
}

/// What compute-and-forward needs from a lattice code.
pub trait LatticeScheme: Send + Sync {
    fn field(&self) -> &FieldSpec;
    /// Message length `k` in field symbols.
    fn message_len(&self) -> usize;
    /// Block length `n` in complex dimensions.
    fn block_len(&self) -> usize;
    /// Codeword for `w` with the given dither (length `n`).
    fn encode(&self, w: &[FieldElem], dither: &[Complex64]) -> Result<Vec<Complex64>>;
    /// Decodes a noisy combination to lattice coefficients. `noise_var` is
    /// the effective noise variance per complex dimension.
    fn quantize(&self, v: &[Complex64], noise_var: f64) -> Result<Quantized>;
    /// Upper bound on the per-dimension power `(1/n)‖x‖²` of any codeword.
    fn peak_power(&self) -> f64;
}

/// [`LatticeScheme`] backed by a [`LatticePartition`].
///
/// An identity fine basis over `pℤ[i]ⁿ` is the uncoded QAM baseline and is
/// quantized coordinate by coordinate; anything else uses the exact sphere
/// search and is limited to small dimensions.
#[derive(Clone, Debug)]
pub struct PartitionScheme {
    part: LatticePartition,
    spec: FieldSpec,
    separable_modulus: Option<i64>,
    peak: f64,
}

impl PartitionScheme {
    pub fn new(part: LatticePartition) -> Result<Self> {
        let spec = *part.field().ok_or(Error::NoField)?;
        let n = part.fine().dim();
        let identity = part.fine().ambient_dim() == n
            && part.fine().generator().iter().enumerate().all(|(idx, z)| {
                *z == Complex64::new(if idx % (n + 1) == 0 { 1.0 } else { 0.0 }, 0.0)
            });
        let modulus = spec.modulus();
        let separable_modulus = (identity
            && modulus.im == 0
            && part.normalized_diagonal().iter().all(|&d| d == modulus))
        .then_some(modulus.re);
        let peak = match separable_modulus {
            Some(p) => {
                let h = ((p - 1) / 2) as f64;
                2.0 * h * h
            }
            None => {
                // Largest lift over the residue system, spread over n dims.
                let reps = part.enumerate_cosets()?;
                let m = part.fine().ambient_dim() as f64;
                reps.iter()
                    .map(|x| x.iter().map(|z| z.norm_sqr()).sum::<f64>() / m)
                    .fold(0.0, f64::max)
            }
        };
        Ok(PartitionScheme {
            part,
            spec,
            separable_modulus,
            peak,
        })
    }

    /// The uncoded `ℤ[i]ⁿ/pℤ[i]ⁿ` scheme.
    pub fn qam(n: usize, p: i64) -> Result<Self> {
        let spec = FieldSpec::inert(p)?;
        let j = GMatrix::diagonal(&vec![spec.modulus(); n]);
        Self::new(build_partition(&DMatrix::identity(n, n), &j)?)
    }

    pub fn partition(&self) -> &LatticePartition {
        &self.part
    }

    fn reduce_mod_coarse(&self, x: Vec<Complex64>) -> Result<Vec<Complex64>> {
        if let Some(p) = self.separable_modulus {
            let p = p as f64;
            let c = |v: f64| v - p * (v / p).round();
            return Ok(x
                .into_iter()
                .map(|z| Complex64::new(c(z.re), c(z.im)))
                .collect());
        }
        let (q, _) = self.part.coarse().quantize_nearest(&x)?;
        Ok(x.iter().zip(&q).map(|(a, b)| a - b).collect())
    }
}

impl LatticeScheme for PartitionScheme {
    fn field(&self) -> &FieldSpec {
        &self.spec
    }

    fn message_len(&self) -> usize {
        self.part.k()
    }

    fn block_len(&self) -> usize {
        self.part.fine().ambient_dim()
    }

    fn encode(&self, w: &[FieldElem], dither: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = self.part.phi_inv(w)?;
        if dither.len() != x.len() {
            return Err(Error::Dimension(
                "dither length differs from block length".into(),
            ));
        }
        if dither.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
            return Ok(x);
        }
        for (xi, d) in x.iter_mut().zip(dither) {
            *xi += d;
        }
        self.reduce_mod_coarse(x)
    }

    fn quantize(&self, v: &[Complex64], _noise_var: f64) -> Result<Quantized> {
        let coeffs = if self.separable_modulus.is_some() {
            if v.len() != self.block_len() {
                return Err(Error::Dimension("received block has wrong length".into()));
            }
            v.iter().map(|z| GaussInt::round_from(z.re, z.im)).collect()
        } else {
            self.part.fine().quantize_nearest(v)?.1
        };
        Ok(Quantized {
            coeffs,
            budget_limited: false,
        })
    }

    fn peak_power(&self) -> f64 {
        self.peak
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};
    use std::collections::HashSet;

    fn g(re: i64, im: i64) -> GaussInt {
        GaussInt::new(re, im)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn unif(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn small(rng: &mut ChaCha8Rng, b: i64) -> GaussInt {
        let w = (2 * b + 1) as u64;
        g(
            (rng.next_u64() % w) as i64 - b,
            (rng.next_u64() % w) as i64 - b,
        )
    }

    fn three(n: usize) -> GMatrix {
        GMatrix::diagonal(&vec![g(3, 0); n])
    }

    #[test]
    fn rank_check() {
        let bad =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(-1.0, 0.0)]);
        assert_eq!(Lattice::new(bad).unwrap_err(), Error::RankDeficient);
        assert!(Lattice::new(DMatrix::zeros(2, 1)).is_err());
        assert!(Lattice::new(DMatrix::identity(2, 3)).is_ok());
    }

    #[test]
    fn partition_examples() {
        let id = DMatrix::identity(2, 2);
        let p = build_partition(&id, &three(2)).unwrap();
        assert_eq!(p.index(), 81);
        assert_eq!(p.field().unwrap().q(), 9);

        let triv = build_partition(&id, &GMatrix::identity(2)).unwrap();
        assert_eq!(triv.index(), 1);
        assert_eq!(triv.is_vector_space().unwrap(), None);
        assert_eq!(triv.enumerate_cosets().unwrap().len(), 1);

        let j = GMatrix::from_rows(vec![vec![g(3, 0), g(-1, 0)], vec![g(0, 0), g(1, 0)]]).unwrap();
        let p = build_partition(&id, &j).unwrap();
        assert_eq!(p.index(), 9);
        assert_eq!(p.index_from_det().unwrap(), 9);
        assert_eq!(p.enumerate_cosets().unwrap().len(), 9);
        assert_eq!(p.is_vector_space().unwrap(), Some((9, 1)));

        let sing =
            GMatrix::from_rows(vec![vec![g(1, 0), g(2, 0)], vec![g(2, 0), g(4, 0)]]).unwrap();
        assert_eq!(
            build_partition(&id, &sing).unwrap_err(),
            Error::InfiniteIndex
        );
    }

    #[test]
    fn vector_space_verdicts() {
        let one = DMatrix::identity(1, 1);
        let p2 = build_partition(&one, &GMatrix::diagonal(&[g(2, 0)])).unwrap();
        assert_eq!(p2.is_vector_space().unwrap(), None);
        let p5 = build_partition(&one, &GMatrix::diagonal(&[g(5, 0)])).unwrap();
        assert_eq!(p5.is_vector_space().unwrap(), Some((5, 2)));
        assert!(p5.field().is_none());
        // ℤ[i]/(5): 25 residues, and the pair of reductions mod 2±i is a
        // bijection onto F₅ × F₅.
        let res = residues(g(5, 0));
        assert_eq!(res.len(), 25);
        let (fa, fb) = (
            FieldSpec::new(g(2, 1)).unwrap(),
            FieldSpec::new(g(2, -1)).unwrap(),
        );
        let images: HashSet<_> = res.iter().map(|&r| (fa.sigma(r), fb.sigma(r))).collect();
        assert_eq!(images.len(), 25);
    }

    #[test]
    fn residues_are_distinct() {
        for d in [
            g(3, 0),
            g(2, 1),
            g(1, 1),
            g(2, 2),
            g(4, 2),
            g(5, 0),
            g(3, 3),
            g(7, 1),
        ] {
            let res = residues(d);
            assert_eq!(res.len() as u128, d.norm());
            for (i, a) in res.iter().enumerate() {
                for b in &res[i + 1..] {
                    assert!((*a - *b).divmod(d).unwrap().1 != GaussInt::ZERO);
                }
            }
        }
    }

    #[test]
    fn nine_qam_cosets_distinct_under_phi() {
        let p = build_partition(&DMatrix::identity(2, 2), &three(2)).unwrap();
        let reps = p.enumerate_cosets().unwrap();
        assert_eq!(reps.len(), 81);
        let labels: HashSet<Vec<FieldElem>> = reps.iter().map(|x| p.phi(x).unwrap()).collect();
        assert_eq!(labels.len(), 81);
        for (i, a) in reps.iter().enumerate() {
            for b in &reps[i + 1..] {
                let d: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                assert!(!p.coarse().contains(&d));
            }
        }
    }

    #[test]
    fn phi_on_identity_basis() {
        let p = build_partition(&DMatrix::identity(3, 3), &three(3)).unwrap();
        let f = *p.field().unwrap();
        let w = vec![f.sigma(g(1, 1)), f.zero(), f.zero()];
        assert_eq!(
            p.phi_inv(&w).unwrap(),
            vec![c(1.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]
        );
        assert_eq!(p.phi(&[c(0.0, 0.0); 3]).unwrap(), vec![f.zero(); 3]);
        assert!(matches!(
            p.phi(&[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(Error::NotALatticePoint(_))
        ));
    }

    #[test]
    fn normalization_with_nontrivial_transforms() {
        // A skewed generator and a non-diagonal J: φ must still be a
        // homomorphism with kernel Λ′.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gf = DMatrix::from_row_slice(
            2,
            2,
            &[c(1.0, 0.2), c(0.3, -0.1), c(-0.2, 0.4), c(1.1, 0.0)],
        );
        let j = GMatrix::from_rows(vec![vec![g(3, 0), g(-1, 1)], vec![g(0, 0), g(1, 0)]]).unwrap();
        let p = build_partition(&gf, &j).unwrap();
        assert_eq!(p.normalized_diagonal(), &[g(3, 0), g(1, 0)]);
        let orig_fine = Lattice::new(gf.clone()).unwrap();
        let orig_coarse = Lattice::new(to_complex(&j) * &gf).unwrap();
        for _ in 0..200 {
            let r = [small(&mut rng, 4), small(&mut rng, 4)];
            let x = orig_fine.point(&r).unwrap();
            assert!(p.fine().contains(&x));
            let label = p.phi(&x).unwrap();
            assert_eq!(label[0].is_zero(), orig_coarse.contains(&x));
            let y = orig_coarse.point(&r).unwrap();
            assert!(p.coarse().contains(&y));
            assert!(p.phi(&y).unwrap()[0].is_zero());
        }
    }

    #[test]
    fn quantize_examples() {
        let z2 = Lattice::new(DMatrix::identity(2, 2)).unwrap();
        let (pt, r) = z2.quantize_nearest(&[c(0.4, 0.6), c(-1.2, 0.0)]).unwrap();
        assert_eq!(r, vec![g(0, 1), g(-1, 0)]);
        assert_eq!(pt, vec![c(0.0, 1.0), c(-1.0, 0.0)]);
        let big = Lattice::new(DMatrix::identity(9, 9)).unwrap();
        assert!(matches!(
            big.quantize_nearest(&[c(0.0, 0.0); 9]),
            Err(Error::UseStructuredDecoder { dim: 9, bound: 8 })
        ));
    }

    #[test]
    fn quantize_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let gauss = |rng: &mut ChaCha8Rng| c(unif(rng) - 0.5, unif(rng) - 0.5);
        for _ in 0..30 {
            let gm = DMatrix::from_fn(2, 2, |i, j| {
                gauss(&mut rng) + if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }
            });
            let lat = Lattice::new(gm.clone()).unwrap();
            let x = [gauss(&mut rng) * 4.0, gauss(&mut rng) * 4.0];
            let (pt, r) = lat.quantize_nearest(&x).unwrap();
            let d = |p: &[Complex64]| {
                p.iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
            };
            let mut best = f64::INFINITY;
            for a in -8..=8 {
                for b in -8..=8 {
                    for cc in -8..=8 {
                        for dd in -8..=8 {
                            best = best.min(d(&lat.point(&[g(a, b), g(cc, dd)]).unwrap()));
                        }
                    }
                }
            }
            assert!((d(&pt) - best).abs() < 1e-9, "{} vs {best}", d(&pt));
            assert_eq!(lat.point(&r).unwrap(), pt);
        }
    }

    #[test]
    fn rectangular_quantizer_returns_input_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let gm = DMatrix::from_fn(3, 5, |i, j| match j as i64 - i as i64 {
            0 => c(1.0, 0.0),
            1 => c(0.7, 0.4),
            2 => c(-0.2, 0.3),
            _ => c(0.0, 0.0),
        });
        let lat = Lattice::new(gm).unwrap();
        for _ in 0..50 {
            let r: Vec<GaussInt> = (0..3).map(|_| small(&mut rng, 5)).collect();
            let x = lat.point(&r).unwrap();
            assert_eq!(lat.coefficients(&x).unwrap(), r);
            assert_eq!(lat.quantize_nearest(&x).unwrap().1, r);
        }
    }

    #[test]
    fn qam_scheme_round_trip() {
        let s = PartitionScheme::qam(4, 3).unwrap();
        assert_eq!((s.message_len(), s.block_len()), (4, 4));
        assert_eq!(s.peak_power(), 2.0);
        let f = *s.field();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let w = f.random_vec(4, &mut rng);
            let x = s.encode(&w, &[c(0.0, 0.0); 4]).unwrap();
            let q = s.quantize(&x, 0.0).unwrap();
            let back: Vec<FieldElem> = q.coeffs.iter().map(|&r| f.sigma(r)).collect();
            assert_eq!(back, w);

            let dither: Vec<Complex64> = (0..4)
                .map(|_| c(unif(&mut rng) * 3.0, unif(&mut rng) * 3.0))
                .collect();
            let xd = s.encode(&w, &dither).unwrap();
            assert!(xd.iter().all(|z| z.re.abs() <= 1.5 && z.im.abs() <= 1.5));
            let undither: Vec<Complex64> = xd.iter().zip(&dither).map(|(a, b)| a - b).collect();
            assert_eq!(s.partition().phi(&undither).unwrap(), w);
        }
    }

    #[test]
    fn generic_scheme_uses_sphere_search() {
        let gf =
            DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.5), c(0.0, 0.0), c(1.0, 0.0)]);
        let part = build_partition(&gf, &three(2)).unwrap();
        let s = PartitionScheme::new(part).unwrap();
        let f = *s.field();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let w = f.random_vec(2, &mut rng);
            let x = s.encode(&w, &[c(0.0, 0.0); 2]).unwrap();
            let q = s.quantize(&x, 0.0).unwrap();
            let back: Vec<FieldElem> = q.coeffs[..2].iter().map(|&r| f.sigma(r)).collect();
            assert_eq!(back, w);
        }
    }
}
