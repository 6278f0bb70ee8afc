//! Signal codes: lattices generated by a monic FIR filter.
//!
//! The generator of a signal code with taps `f₁…f_m` and `k` message symbols
//! is the `k × (k+m)` banded Toeplitz matrix whose row `i` holds `1` at
//! column `i` and `f_j` at column `i+j`. Encoding uses Tomlinson–Harashima
//! shaping: each symbol is shifted by a multiple of `p` so the filter output
//! stays in the box `[-p/2, p/2)²`. Decoding is a best-first stack search over
//! the filter trellis.
//!
//! The `m` tail outputs are reduced modulo `p` as well, which keeps their
//! power bounded; the decoder accounts for this with a mod-`p` metric on the
//! tail, so transmitted blocks live in `Λ + p·(0 ⊕ ℤ[i]^m)`.
//!
//! ```
//! use num_complex::Complex64;
//! use pnc::sigcode::SignalCode;
//!
//! let code = SignalCode::from_polar(&[(1.96, std::f64::consts::FRAC_PI_8)], 3, 3)?;
//! let f = *code.field();
//! let w = vec![f.one(), f.zero(), f.one()];
//! let cw = code.encode_th(&w, &[Complex64::new(0.0, 0.0); 4])?;
//! assert!(cw.signal.iter().all(|x| x.re.abs() <= 1.5 && x.im.abs() <= 1.5));
//! let q = code.stack_decode(&cw.signal, 0.0)?;
//! assert_eq!(code.to_message(&q.coeffs), w);
//! # Ok::<(), pnc::Error>(())
//! ```

use std::cmp::Ordering;
use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ffield::{FieldElem, FieldSpec};
use crate::gint::GaussInt;
use crate::lattice::{build_partition, gc, LatticePartition, LatticeScheme, Quantized};
use crate::snf::GMatrix;

/// Taps `1.96·e^{iπ/8}` and `0.98²·e^{iπ/4}` as `(magnitude, phase)`,
/// i.e. the filter `(1 + 0.98·e^{iπ/8} z⁻¹)²`.
pub const REFERENCE_TAPS: [(f64, f64); 2] = [
    (1.96, std::f64::consts::FRAC_PI_8),
    (0.9604, std::f64::consts::FRAC_PI_4),
];

/// Knobs of the stack decoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    /// Most open paths kept; the worst are evicted beyond this.
    pub heap_capacity: usize,
    /// Children per node: the nearest Gaussian integers to the zero-forcing
    /// estimate, at most 25.
    pub branch_width: usize,
    /// Per-symbol metric credit in units of the noise variance. Zero gives
    /// plain best-first search; larger values favor deep paths.
    pub bias: f64,
    /// Node expansions before the search gives up and completes the best
    /// open path greedily.
    pub max_expansions: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            heap_capacity: 100_000,
            branch_width: 9,
            bias: 0.0,
            max_expansions: 1_000_000,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.heap_capacity == 0 {
            return Err(Error::Config("heap_capacity must be positive".into()));
        }
        if !(1..=25).contains(&self.branch_width) {
            return Err(Error::Config("branch_width must be in 1..=25".into()));
        }
        if !self.bias.is_finite() || self.bias < 0.0 {
            return Err(Error::Config("bias must be finite and nonnegative".into()));
        }
        if self.max_expansions == 0 {
            return Err(Error::Config("max_expansions must be positive".into()));
        }
        Ok(())
    }
}

/// A signal code with monic filter `1 + f₁z⁻¹ + … + f_m z⁻ᵐ`.
#[derive(Clone, Debug)]
pub struct SignalCode {
    taps: Vec<Complex64>,
    k: usize,
    p: i64,
    spec: FieldSpec,
    decoder: DecoderConfig,
}

/// Output of [`SignalCode::encode_th`].
#[derive(Clone, Debug, PartialEq)]
pub struct ThCodeword {
    /// Transmitted block, length `k + m`.
    pub signal: Vec<Complex64>,
    /// Shaped coefficients `r′ = σ⁻¹(w) + p·b`.
    pub coeffs: Vec<GaussInt>,
    /// Tail shifts `t`: `signal = r′·G + dither − p·(0, t)`.
    pub tail_offset: Vec<GaussInt>,
}

impl SignalCode {
    pub fn new(taps: Vec<Complex64>, k: usize, p: i64) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidArgument(
                "a signal code needs at least one tap".into(),
            ));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(Error::InvalidArgument("taps must be finite".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument(
                "message length must be positive".into(),
            ));
        }
        let spec = FieldSpec::inert(p)?;
        Ok(SignalCode {
            taps,
            k,
            p,
            spec,
            decoder: DecoderConfig::default(),
        })
    }

    /// Taps given as `(magnitude, phase)` pairs.
    pub fn from_polar(taps: &[(f64, f64)], k: usize, p: i64) -> Result<Self> {
        Self::new(
            taps.iter()
                .map(|&(r, th)| Complex64::from_polar(r, th))
                .collect(),
            k,
            p,
        )
    }

    pub fn with_decoder(mut self, decoder: DecoderConfig) -> Result<Self> {
        decoder.validate()?;
        self.decoder = decoder;
        Ok(self)
    }

    pub fn decoder(&self) -> &DecoderConfig {
        &self.decoder
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Memory `m`.
    pub fn m(&self) -> usize {
        self.taps.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn field(&self) -> &FieldSpec {
        &self.spec
    }

    /// The `k × (k+m)` generator.
    pub fn generator_matrix(&self) -> DMatrix<Complex64> {
        let (k, m) = (self.k, self.m());
        DMatrix::from_fn(k, k + m, |i, c| match c.checked_sub(i) {
            Some(0) => Complex64::new(1.0, 0.0),
            Some(j) if j <= m => self.taps[j - 1],
            _ => Complex64::new(0.0, 0.0),
        })
    }

    /// The partition `Λ/pΛ`.
    pub fn partition(&self) -> Result<LatticePartition> {
        let j = GMatrix::diagonal(&vec![GaussInt::from(self.p); self.k]);
        build_partition(&self.generator_matrix(), &j)
    }

    /// `Σ_{j=1..m} f_j c_{n-j}`, the filter state seen at position `n`.
    fn state(&self, n: usize, c: impl Fn(usize) -> Complex64) -> Complex64 {
        self.taps
            .iter()
            .enumerate()
            .filter(|&(j, _)| n > j && n - (j + 1) < self.k)
            .map(|(j, f)| f * c(n - (j + 1)))
            .sum()
    }

    /// `r·G` for coefficient vector `r`.
    pub fn lattice_point(&self, r: &[GaussInt]) -> Vec<Complex64> {
        (0..self.k + self.m())
            .map(|n| {
                let own = if n < self.k {
                    gc(r[n])
                } else {
                    Complex64::new(0.0, 0.0)
                };
                own + self.state(n, |i| gc(r[i]))
            })
            .collect()
    }

    /// Tomlinson–Harashima encoding of `w`.
    pub fn encode_th(&self, w: &[FieldElem], dither: &[Complex64]) -> Result<ThCodeword> {
        let (k, m) = (self.k, self.m());
        if w.len() != k {
            return Err(Error::Dimension(format!(
                "message has length {}, code expects {k}",
                w.len()
            )));
        }
        if w.iter().any(|x| x.spec() != &self.spec) {
            return Err(Error::InvalidArgument(
                "message field does not match the code".into(),
            ));
        }
        if dither.len() != k + m {
            return Err(Error::Dimension(format!(
                "dither has length {}, block length is {}",
                dither.len(),
                k + m
            )));
        }
        let p = self.p;
        let pf = p as f64;
        // Shift that brings a coordinate into [-p/2, p/2).
        let shift = |v: f64| -> i64 { ((v + pf / 2.0) / pf).floor() as i64 };
        let mut coeffs = Vec::with_capacity(k);
        let mut tail_offset = Vec::with_capacity(m);
        let mut signal = Vec::with_capacity(k + m);
        for n in 0..k + m {
            let rest = self.state(n, |i| gc(coeffs[i])) + dither[n];
            if n < k {
                let u = w[n].lift();
                let v = gc(u) + rest;
                let b = GaussInt::new(-shift(v.re), -shift(v.im));
                let shaped = u + b * GaussInt::from(p);
                coeffs.push(shaped);
                signal.push(v + gc(b) * pf);
            } else {
                let t = GaussInt::new(shift(rest.re), shift(rest.im));
                tail_offset.push(t);
                signal.push(rest - gc(t) * pf);
            }
        }
        Ok(ThCodeword {
            signal,
            coeffs,
            tail_offset,
        })
    }

    /// σ of the coefficient vector: the message carried by a decoded point.
    pub fn to_message(&self, coeffs: &[GaussInt]) -> Vec<FieldElem> {
        coeffs.iter().map(|&c| self.spec.sigma(c)).collect()
    }

    /// Squared distance from `v` to the nearest point of `pℤ[i]`.
    fn mod_p_dist(&self, v: Complex64) -> f64 {
        let pf = self.p as f64;
        let c = |x: f64| x - pf * (x / pf).round();
        c(v.re).powi(2) + c(v.im).powi(2)
    }

    /// Metric of a full coefficient vector against `y`.
    pub fn path_metric(&self, y: &[Complex64], r: &[GaussInt]) -> f64 {
        let x = self.lattice_point(r);
        (0..self.k + self.m())
            .map(|n| {
                if n < self.k {
                    (y[n] - x[n]).norm_sqr()
                } else {
                    self.mod_p_dist(y[n] - x[n])
                }
            })
            .sum()
    }

    /// Stack decoding of `y`, approximating the nearest `r` under
    /// [`SignalCode::path_metric`]. `noise_var` scales the bias.
    pub fn stack_decode(&self, y: &[Complex64], noise_var: f64) -> Result<Quantized> {
        let (k, m) = (self.k, self.m());
        if y.len() != k + m {
            return Err(Error::Dimension(format!(
                "received block has length {}, expected {}",
                y.len(),
                k + m
            )));
        }
        let cfg = &self.decoder;
        let credit = cfg.bias * noise_var.max(0.0);
        let mut arena: Vec<Node> = vec![Node {
            parent: u32::MAX,
            sym: GaussInt::ZERO,
            depth: 0,
            dist: 0.0,
        }];
        let mut open = BTreeSet::new();
        open.insert(Key(0.0, 0));
        let mut expansions = 0usize;
        let mut history = vec![GaussInt::ZERO; m];

        while let Some(Key(_, id)) = open.pop_first() {
            let node = arena[id as usize];
            if node.depth as usize == k + 1 {
                // Leaf with tail metric folded in.
                return Ok(Quantized {
                    coeffs: self.trace(&arena, id),
                    budget_limited: false,
                });
            }
            if expansions >= cfg.max_expansions {
                let coeffs = self.greedy_complete(&arena, id, y);
                return Ok(Quantized {
                    coeffs,
                    budget_limited: true,
                });
            }
            expansions += 1;
            let depth = node.depth as usize;
            self.recent(&arena, id, &mut history);
            let center = y[depth] - self.state_from_history(&history);
            for sym in nearest_gaussians(center, cfg.branch_width) {
                let mut dist = node.dist + (center - gc(sym)).norm_sqr();
                let mut child_depth = depth + 1;
                if child_depth == k {
                    dist += self.tail_metric(&history, sym, y);
                    child_depth = k + 1;
                }
                let cid = arena.len() as u32;
                arena.push(Node {
                    parent: id,
                    sym,
                    depth: child_depth as u32,
                    dist,
                });
                let decided = child_depth.min(k) as f64;
                open.insert(Key(dist - credit * decided, cid));
            }
            while open.len() > cfg.heap_capacity {
                open.pop_last();
            }
        }
        unreachable!("the open set always holds the children of the last expansion")
    }

    /// Last `m` symbols on the path ending at `id`, newest first, zero
    /// before the start of the block.
    fn recent(&self, arena: &[Node], mut id: u32, out: &mut [GaussInt]) {
        for slot in out.iter_mut() {
            if id == 0 || id == u32::MAX {
                *slot = GaussInt::ZERO;
                continue;
            }
            let node = arena[id as usize];
            *slot = node.sym;
            id = node.parent;
        }
    }

    fn state_from_history(&self, history: &[GaussInt]) -> Complex64 {
        self.taps.iter().zip(history).map(|(f, &s)| f * gc(s)).sum()
    }

    /// Tail metric once the last message symbol `last` is fixed.
    fn tail_metric(&self, history: &[GaussInt], last: GaussInt, y: &[Complex64]) -> f64 {
        let (k, m) = (self.k, self.m());
        // window[j] = c_{k-1-j}
        let mut window = Vec::with_capacity(m);
        window.push(last);
        window.extend_from_slice(&history[..m - 1]);
        (0..m)
            .map(|t| {
                // Output k+t sees c_{k+t-j} for j = t+1..=m.
                let s: Complex64 = (t + 1..=m)
                    .map(|j| self.taps[j - 1] * gc(window[j - t - 1]))
                    .sum();
                self.mod_p_dist(y[k + t] - s)
            })
            .sum()
    }

    fn trace(&self, arena: &[Node], mut id: u32) -> Vec<GaussInt> {
        let mut out = Vec::with_capacity(self.k);
        while id != 0 {
            let node = arena[id as usize];
            out.push(node.sym);
            id = node.parent;
        }
        out.reverse();
        out
    }

    /// Finishes the path at `id` by rounding the zero-forcing estimates.
    fn greedy_complete(&self, arena: &[Node], id: u32, y: &[Complex64]) -> Vec<GaussInt> {
        let mut coeffs = self.trace(arena, id);
        while coeffs.len() < self.k {
            let n = coeffs.len();
            let center = y[n] - self.state(n, |i| gc(coeffs[i]));
            coeffs.push(GaussInt::round_from(center.re, center.im));
        }
        coeffs
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    parent: u32,
    sym: GaussInt,
    /// Symbols decided so far; `k + 1` marks a finished path.
    depth: u32,
    dist: f64,
}

/// Open-set key: metric, then arena id for a deterministic order.
#[derive(Clone, Copy, Debug)]
struct Key(f64, u32);

impl PartialEq for Key {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Key {
    fn cmp(&self, o: &Self) -> Ordering {
        self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
    }
}

/// The `count` Gaussian integers nearest to `z` (from the 5×5 block around
/// its rounding), ordered by distance then `(re, im)`.
pub fn nearest_gaussians(z: Complex64, count: usize) -> Vec<GaussInt> {
    let base = GaussInt::round_from(z.re, z.im);
    let mut cands: Vec<(f64, GaussInt)> = (-2..=2)
        .flat_map(|a| (-2..=2).map(move |b| base + GaussInt::new(a, b)))
        .map(|g| ((z - gc(g)).norm_sqr(), g))
        .collect();
    cands.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then((a.1.re, a.1.im).cmp(&(b.1.re, b.1.im)))
    });
    cands.into_iter().take(count).map(|(_, g)| g).collect()
}

impl LatticeScheme for SignalCode {
    fn field(&self) -> &FieldSpec {
        &self.spec
    }

    fn message_len(&self) -> usize {
        self.k
    }

    fn block_len(&self) -> usize {
        self.k + self.m()
    }

    fn encode(&self, w: &[FieldElem], dither: &[Complex64]) -> Result<Vec<Complex64>> {
        Ok(self.encode_th(w, dither)?.signal)
    }

    fn quantize(&self, v: &[Complex64], noise_var: f64) -> Result<Quantized> {
        self.stack_decode(v, noise_var)
    }

    fn peak_power(&self) -> f64 {
        let h = self.p as f64 / 2.0;
        2.0 * h * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference(k: usize) -> SignalCode {
        SignalCode::from_polar(&REFERENCE_TAPS, k, 3).unwrap()
    }

    fn zeros(n: usize) -> Vec<Complex64> {
        vec![c(0.0, 0.0); n]
    }

    #[test]
    fn generator_shapes() {
        let code = SignalCode::new(vec![c(0.5, 0.0), c(0.0, 0.25)], 1, 3).unwrap();
        let g = code.generator_matrix();
        assert_eq!(g.shape(), (1, 3));
        assert_eq!(
            g.row(0).iter().copied().collect::<Vec<_>>(),
            vec![c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.25)]
        );

        let code = reference(2);
        let g = code.generator_matrix();
        let (f1, f2) = (code.taps()[0], code.taps()[1]);
        assert!((f1 - Complex64::from_polar(1.96, std::f64::consts::PI / 8.0)).norm() < 1e-15);
        assert!(
            (f2 - Complex64::from_polar(0.98 * 0.98, std::f64::consts::PI / 4.0)).norm() < 1e-15
        );
        let row0: Vec<_> = g.row(0).iter().copied().collect();
        let row1: Vec<_> = g.row(1).iter().copied().collect();
        assert_eq!(row0, vec![c(1.0, 0.0), f1, f2, c(0.0, 0.0)]);
        assert_eq!(row1, vec![c(0.0, 0.0), c(1.0, 0.0), f1, f2]);
        // The taps are the square of 1 + 0.98e^{iπ/8} z⁻¹.
        let a = Complex64::from_polar(0.98, std::f64::consts::PI / 8.0);
        assert!((f1 - 2.0 * a).norm() < 1e-12 && (f2 - a * a).norm() < 1e-12);

        let degenerate = SignalCode::new(vec![c(0.0, 0.0)], 3, 3)
            .unwrap()
            .generator_matrix();
        assert_eq!(degenerate, DMatrix::identity(3, 4));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SignalCode::new(vec![], 3, 3).is_err());
        assert!(SignalCode::new(vec![c(1.0, 0.0)], 0, 3).is_err());
        assert!(SignalCode::new(vec![c(1.0, 0.0)], 3, 5).is_err());
        let bad = DecoderConfig {
            branch_width: 0,
            ..DecoderConfig::default()
        };
        assert!(reference(2).with_decoder(bad).is_err());
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let code = reference(5);
        let w = vec![code.field().zero(); 5];
        let cw = code.encode_th(&w, &zeros(7)).unwrap();
        assert_eq!(cw.signal, zeros(7));
        assert!(cw.coeffs.iter().all(|g| g.is_zero()));
    }

    #[test]
    fn encoder_output_in_box_and_on_lattice() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 1..=6 {
            let code = reference(k);
            let part = code.partition().unwrap();
            let f = *code.field();
            for _ in 0..40 {
                let w = f.random_vec(k, &mut rng);
                let dither: Vec<Complex64> = (0..k + 2)
                    .map(|_| {
                        c(
                            (rng.next_u32() % 100) as f64 / 37.0,
                            (rng.next_u32() % 100) as f64 / 41.0,
                        )
                    })
                    .collect();
                let cw = code.encode_th(&w, &dither).unwrap();
                assert!(cw
                    .signal
                    .iter()
                    .all(|x| x.re.abs() <= 1.5 && x.im.abs() <= 1.5));
                // x − dither + p·(0, t) is the lattice point r′G with φ = w.
                let mut lam: Vec<Complex64> =
                    cw.signal.iter().zip(&dither).map(|(x, d)| x - d).collect();
                for (t, off) in cw.tail_offset.iter().enumerate() {
                    lam[k + t] += gc(*off) * 3.0;
                }
                assert_eq!(part.fine().coefficients(&lam).unwrap(), cw.coeffs);
                assert_eq!(part.phi(&lam).unwrap(), w);
            }
        }
    }

    #[test]
    fn noiseless_decoding_exhaustive_k3() {
        let code = reference(3);
        let f = *code.field();
        let elems = f.elements();
        for a in &elems {
            for b in &elems {
                for d in &elems {
                    let w = vec![*a, *b, *d];
                    let cw = code.encode_th(&w, &zeros(5)).unwrap();
                    let q = code.stack_decode(&cw.signal, 0.0).unwrap();
                    assert!(!q.budget_limited);
                    assert_eq!(q.coeffs, cw.coeffs);
                    assert_eq!(code.to_message(&q.coeffs), w);
                }
            }
        }
    }

    #[test]
    fn decodes_zero_and_exact_points() {
        let code = reference(8);
        let q = code.stack_decode(&zeros(10), 0.1).unwrap();
        assert_eq!(q.coeffs, vec![GaussInt::ZERO; 8]);
        let r: Vec<GaussInt> = (0..8).map(|i| GaussInt::new(i - 4, 3 - i)).collect();
        let y = code.lattice_point(&r);
        assert_eq!(code.stack_decode(&y, 0.0).unwrap().coeffs, r);
    }

    #[test]
    fn path_metric_matches_decoder_result() {
        // With zero bias the first finished path is optimal among the paths
        // the branching rule generates; its metric must be the one reported
        // by the independent full-vector evaluation.
        let code = reference(4);
        let f = *code.field();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..100 {
            let w = f.random_vec(4, &mut rng);
            let cw = code.encode_th(&w, &zeros(6)).unwrap();
            let y: Vec<Complex64> = cw
                .signal
                .iter()
                .map(|x| {
                    x + c(
                        (rng.next_u32() % 61) as f64 / 100.0 - 0.3,
                        (rng.next_u32() % 61) as f64 / 100.0 - 0.3,
                    )
                })
                .collect();
            let q = code.stack_decode(&y, 0.05).unwrap();
            assert!(code.path_metric(&y, &q.coeffs) <= code.path_metric(&y, &cw.coeffs) + 1e-9);
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let code = reference(30)
            .with_decoder(DecoderConfig {
                max_expansions: 5,
                ..DecoderConfig::default()
            })
            .unwrap();
        let y: Vec<Complex64> = (0..32)
            .map(|i| c((i as f64 * 0.7).sin() * 1.4, (i as f64).cos()))
            .collect();
        let q = code.stack_decode(&y, 1.0).unwrap();
        assert!(q.budget_limited);
        assert_eq!(q.coeffs.len(), 30);
    }

    #[test]
    fn nearest_gaussians_order() {
        let n = nearest_gaussians(c(0.1, 0.0), 3);
        assert_eq!(n, vec![GaussInt::ZERO, GaussInt::ONE, GaussInt::new(0, -1)]);
        assert_eq!(nearest_gaussians(c(2.4, -0.6), 25).len(), 25);
    }

    #[test]
    fn partition_is_f9_vector_space() {
        let part = reference(3).partition().unwrap();
        assert_eq!(part.index(), 729);
        assert_eq!(part.is_vector_space().unwrap(), Some((9, 3)));
    }
}
