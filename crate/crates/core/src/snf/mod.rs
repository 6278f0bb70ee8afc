//! Smith normal form over a Euclidean domain.
//!
//! [`smith_normal_form`] returns unimodular `P`, `Q` (and their inverses) with
//! `P·J·Q = D`, `D` diagonal, leading unit entries normalized to exactly one
//! and the remaining entries `d₁ | d₂ | … | d_k` in canonical form.
//!
//! ```
//! use pnc::gint::GaussInt;
//! use pnc::snf::{smith_normal_form, GMatrix};
//!
//! let j = GMatrix::from_rows(vec![
//!     vec![GaussInt::new(3, 0), GaussInt::new(-1, 0)],
//!     vec![GaussInt::new(0, 0), GaussInt::new(1, 0)],
//! ])?;
//! let s = smith_normal_form(&j)?;
//! assert_eq!(s.d.diag(), vec![GaussInt::ONE, GaussInt::new(3, 0)]);
//! assert_eq!(s.invariant_factors, vec![GaussInt::new(3, 0)]);
//! # Ok::<(), pnc::Error>(())
//! ```

mod matrix;
mod wide;

pub use matrix::{det, unimodular_inverse, GMatrix, Matrix};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gint::{EuclideanDomain, GaussInt};

use wide::Wide;

/// Output of [`smith_normal_form`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnfResult<R: EuclideanDomain + Serialize> {
    #[serde(rename = "P")]
    pub p: Matrix<R>,
    #[serde(rename = "D")]
    pub d: Matrix<R>,
    #[serde(rename = "Q")]
    pub q: Matrix<R>,
    #[serde(skip)]
    pub p_inv: Matrix<R>,
    #[serde(skip)]
    pub q_inv: Matrix<R>,
    /// Nonunit diagonal entries of `D`, in divisibility order.
    pub invariant_factors: Vec<R>,
}

impl<R: EuclideanDomain + Serialize> SnfResult<R> {
    /// Generator of the annihilator ideal: the last invariant factor, or one
    /// for a trivial quotient.
    pub fn annihilator(&self) -> R {
        self.invariant_factors
            .last()
            .copied()
            .unwrap_or_else(R::one)
    }

    /// Number of leading unit entries on the diagonal.
    pub fn unit_count(&self) -> usize {
        self.d.rows() - self.invariant_factors.len()
    }
}

/// See [`SnfResult::annihilator`].
pub fn annihilator<R: EuclideanDomain + Serialize>(s: &SnfResult<R>) -> R {
    s.annihilator()
}

/// Transforms are reduced between stages once an entry's norm passes this.
const REDUCE_ABOVE: u128 = 1 << 16;

/// Elementary operations applied to `D` while keeping `P`, `Q` and their
/// inverses in step.
#[derive(Clone)]
struct Reduction<R: EuclideanDomain> {
    d: Matrix<R>,
    p: Matrix<R>,
    p_inv: Matrix<R>,
    q: Matrix<R>,
    q_inv: Matrix<R>,
}

impl<R: EuclideanDomain> Reduction<R> {
    fn swap_rows(&mut self, a: usize, b: usize) {
        self.d.swap_rows(a, b);
        self.p.swap_rows(a, b);
        self.p_inv.swap_cols(a, b);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        self.d.swap_cols(a, b);
        self.q.swap_cols(a, b);
        self.q_inv.swap_rows(a, b);
    }

    /// row[dst] += c·row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: R) -> Result<()> {
        self.d.add_row_multiple(dst, src, c)?;
        self.p.add_row_multiple(dst, src, c)?;
        self.p_inv.add_col_multiple(src, dst, -c)
    }

    /// col[dst] += c·col[src]
    fn add_col(&mut self, dst: usize, src: usize, c: R) -> Result<()> {
        self.d.add_col_multiple(dst, src, c)?;
        self.q.add_col_multiple(dst, src, c)?;
        self.q_inv.add_row_multiple(src, dst, -c)
    }

    fn scale_row(&mut self, i: usize, u: R, u_inv: R) -> Result<()> {
        self.d.scale_row(i, u)?;
        self.p.scale_row(i, u)?;
        self.p_inv.scale_col(i, u_inv)
    }

    fn largest_transform_entry(&self) -> u128 {
        [&self.p, &self.q, &self.p_inv, &self.q_inv]
            .iter()
            .flat_map(|m| {
                (0..m.rows()).flat_map(move |i| m.row(i).iter().map(EuclideanDomain::norm))
            })
            .max()
            .unwrap_or(0)
    }

    /// The smallest state, by largest transform entry, seen over a fixed
    /// sequence of reduction passes.
    ///
    /// Reducing `Q⁻¹` also bounds the final columns of `P⁻¹`, which equal
    /// `J·q_j/d_j`; the unfinished columns of `P⁻¹` reduce among
    /// themselves without touching `Q⁻¹`. Full passes on either side can
    /// push growth onto the other, hence the snapshots.
    fn reduced(self, fixed: usize) -> Self {
        let passes = [
            Pass::Lll(Side::Columns, 0),
            Pass::Lll(Side::Rows, fixed),
            Pass::Pairwise(Side::Columns),
            Pass::Lll(Side::Rows, 0),
            Pass::Pairwise(Side::Rows),
            Pass::Lll(Side::Columns, 0),
            Pass::Lll(Side::Rows, 0),
        ];
        let mut best = self.clone();
        let mut cur = self;
        for _ in 0..4 {
            let before = best.largest_transform_entry();
            for pass in passes {
                let ok = match pass {
                    Pass::Lll(side, start) => cur.lll(side, fixed, start),
                    Pass::Pairwise(side) => cur.pairwise(side, fixed),
                };
                if ok.is_err() {
                    return best;
                }
                if cur.largest_transform_entry() < best.largest_transform_entry() {
                    best = cur.clone();
                }
            }
            if best.largest_transform_entry() == before {
                break;
            }
        }
        best
    }

    /// Greedy pairwise reduction that also lets a final vector absorb later
    /// final vectors `j > i`, with multipliers restricted to multiples of
    /// `d_j/d_i` so that the cleanup in [`Self::reduce_vector`] divides
    /// exactly.
    fn pairwise(&mut self, side: Side, fixed: usize) -> Result<()> {
        let n = self.d.rows();
        for _ in 0..8 {
            let mut changed = false;
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i && (j < i || j < fixed)) {
                    let m = if j < i {
                        R::one()
                    } else {
                        exact_quotient(self.d[(j, j)], self.d[(i, i)])?
                    };
                    let bi = self.basis_vector(side, i);
                    let (mr, mi) = m.approx();
                    let bj: Vec<(f64, f64)> = self
                        .basis_vector(side, j)
                        .into_iter()
                        .map(|(a, b)| (a * mr - b * mi, a * mi + b * mr))
                        .collect();
                    let (zr, zi) = ratio(inner(&bi, &bj), inner(&bj, &bj).0);
                    if zr.abs() <= 0.5 && zi.abs() <= 0.5 {
                        continue;
                    }
                    let z = R::nearest(zr, zi).ok_or(Error::Overflow("lattice reduction"))?;
                    let c = m.try_mul(&z).ok_or(Error::Overflow("lattice reduction"))?;
                    self.reduce_vector(side, i, j, c, fixed)?;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(())
    }

    /// Vector `i` of the basis being reduced: row `i` of `Q⁻¹`, or column
    /// `i` of `P⁻¹`.
    fn basis_vector(&self, side: Side, i: usize) -> Vec<(f64, f64)> {
        let n = self.d.rows();
        match side {
            Side::Columns => self
                .q_inv
                .row(i)
                .iter()
                .map(EuclideanDomain::approx)
                .collect(),
            Side::Rows => (0..n).map(|k| self.p_inv[(k, i)].approx()).collect(),
        }
    }

    /// Basis vector `i` loses `c` times vector `j`, with `D` restored when
    /// `j` is a final index.
    ///
    /// On the `Q⁻¹` side this is `col[j] += c·col[i]` of `D`, which only
    /// writes into column `j`. For final `j`, `d_j` divides every entry
    /// that can land there (for `j > i` because `d_j/d_i` divides `c`), so
    /// row operations with row `j = d_j·e_j` clear it. The `P⁻¹` side is
    /// the transpose.
    fn reduce_vector(&mut self, side: Side, i: usize, j: usize, c: R, fixed: usize) -> Result<()> {
        let n = self.d.rows();
        let dj = self.d[(j, j)];
        match side {
            Side::Columns => {
                self.add_col(j, i, c)?;
                if j < fixed {
                    for s in (0..n).filter(|&s| s != j) {
                        let x = self.d[(s, j)];
                        if !x.is_zero() {
                            self.add_row(s, j, -exact_quotient(x, dj)?)?;
                        }
                    }
                }
            }
            Side::Rows => {
                self.add_row(j, i, c)?;
                if j < fixed {
                    for s in (0..n).filter(|&s| s != j) {
                        let x = self.d[(j, s)];
                        if !x.is_zero() {
                            self.add_col(s, j, -exact_quotient(x, dj)?)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// LLL reduction (δ = 3/4) of the `Q⁻¹` rows or `P⁻¹` columns with
    /// index at least `start`, keeping `D` unchanged on the final indices
    /// `0..fixed`.
    ///
    /// Vectors only absorb multiples of earlier vectors, and only the
    /// unfinished block, or a run of equal final entries, is reordered.
    fn lll(&mut self, side: Side, fixed: usize, start: usize) -> Result<()> {
        let n = self.d.rows();
        let mut k = start + 1;
        let mut steps = 0;
        while k < n && steps < 64 * n * n {
            steps += 1;
            for j in (start..k).rev() {
                let gs = self.gram_schmidt(side, start, k + 1);
                let mu = gs.mu(k - start, j - start);
                if mu.0.abs() > 0.5 || mu.1.abs() > 0.5 {
                    let c = R::nearest(mu.0, mu.1).ok_or(Error::Overflow("lattice reduction"))?;
                    self.reduce_vector(side, k, j, c, fixed)?;
                }
            }
            let gs = self.gram_schmidt(side, start, k + 1);
            let (i, mu) = (k - start, gs.mu(k - start, k - start - 1));
            let lovasz = gs.norm(i) >= (0.75 - (mu.0 * mu.0 + mu.1 * mu.1)) * gs.norm(i - 1);
            let free = k > fixed;
            let tied = k < fixed && self.d[(k - 1, k - 1)] == self.d[(k, k)];
            if (free || tied) && !lovasz {
                match side {
                    Side::Columns => self.swap_cols(k - 1, k),
                    Side::Rows => self.swap_rows(k - 1, k),
                }
                // Equal final entries: the matching swap on the other side
                // puts D back on the diagonal.
                if tied {
                    match side {
                        Side::Columns => self.swap_rows(k - 1, k),
                        Side::Rows => self.swap_cols(k - 1, k),
                    }
                }
                k = (k - 1).max(start + 1);
            } else {
                k += 1;
            }
        }
        Ok(())
    }

    /// Gram–Schmidt data of basis vectors `start..end`.
    fn gram_schmidt(&self, side: Side, start: usize, end: usize) -> GramSchmidt {
        let b: Vec<Vec<(f64, f64)>> = (start..end).map(|i| self.basis_vector(side, i)).collect();
        let mut star: Vec<Vec<(f64, f64)>> = Vec::with_capacity(b.len());
        for v0 in &b {
            let mut v = v0.clone();
            for s in &star {
                let (re, im) = ratio(inner(v0, s), inner(s, s).0);
                for (x, y) in v.iter_mut().zip(s) {
                    x.0 -= re * y.0 - im * y.1;
                    x.1 -= re * y.1 + im * y.0;
                }
            }
            star.push(v);
        }
        GramSchmidt { b, star }
    }
}
#[derive(Clone, Copy)]
enum Pass {
    /// LLL on one side from the given index on.
    Lll(Side, usize),
    Pairwise(Side),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    /// Rows of `Q⁻¹`, changed by column operations on `D`.
    Columns,
    /// Columns of `P⁻¹`, changed by row operations on `D`.
    Rows,
}

struct GramSchmidt {
    b: Vec<Vec<(f64, f64)>>,
    star: Vec<Vec<(f64, f64)>>,
}

impl GramSchmidt {
    /// `μ_kj = ⟨b_k, b*_j⟩ / ‖b*_j‖²`.
    fn mu(&self, k: usize, j: usize) -> (f64, f64) {
        ratio(inner(&self.b[k], &self.star[j]), self.norm(j))
    }

    fn norm(&self, j: usize) -> f64 {
        inner(&self.star[j], &self.star[j]).0
    }
}

/// `⟨u, v⟩ = Σ u_k·conj(v_k)`.
fn inner(u: &[(f64, f64)], v: &[(f64, f64)]) -> (f64, f64) {
    u.iter().zip(v).fold((0.0, 0.0), |(re, im), (a, b)| {
        (re + a.0 * b.0 + a.1 * b.1, im + a.1 * b.0 - a.0 * b.1)
    })
}

fn ratio(z: (f64, f64), den: f64) -> (f64, f64) {
    if den == 0.0 {
        (0.0, 0.0)
    } else {
        (z.0 / den, z.1 / den)
    }
}

fn exact_quotient<R: EuclideanDomain>(x: R, d: R) -> Result<R> {
    let (q, r) = x.div_rem(&d)?;
    debug_assert!(r.is_zero(), "pivot must divide the entries it clears");
    Ok(q)
}

/// Smith normal form of a square nonsingular matrix.
///
/// Pivots on a minimal-norm entry, clears its row and column with Euclidean
/// steps, and folds in any row holding an entry the pivot does not divide
/// until the pivot divides the whole trailing block. The work runs on
/// 128-bit entries with LLL reduction of the transforms between pivots and
/// once more at the end, which keeps dense inputs from overflowing; the
/// result is [`Error::Overflow`] only if the final transforms leave `i64`.
pub fn smith_normal_form(j: &GMatrix) -> Result<SnfResult<GaussInt>> {
    if !j.is_square() {
        return Err(Error::Dimension(format!(
            "Smith normal form needs a square matrix, got {}x{}",
            j.rows(),
            j.cols()
        )));
    }
    let n = j.rows();
    let wide = Matrix::from_rows(
        j.to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(Wide::from).collect())
            .collect(),
    )?;
    let mut st = eliminate(&wide)?;
    if st.largest_transform_entry() > REDUCE_ABOVE {
        st = st.reduced(n);
    }
    let narrow = |m: &Matrix<Wide>| -> Result<GMatrix> {
        let rows: Result<Vec<Vec<GaussInt>>> = m
            .to_rows()
            .into_iter()
            .map(|r| r.into_iter().map(Wide::narrow).collect())
            .collect();
        Matrix::from_rows(rows?)
    };
    let d = narrow(&st.d)?;
    let invariant_factors = d.diag().into_iter().filter(|x| !x.is_unit()).collect();
    Ok(SnfResult {
        p: narrow(&st.p)?,
        q: narrow(&st.q)?,
        p_inv: narrow(&st.p_inv)?,
        q_inv: narrow(&st.q_inv)?,
        d,
        invariant_factors,
    })
}

fn eliminate<R: EuclideanDomain>(j: &Matrix<R>) -> Result<Reduction<R>> {
    let n = j.rows();
    let mut st = Reduction {
        d: j.clone(),
        p: Matrix::identity(n),
        p_inv: Matrix::identity(n),
        q: Matrix::identity(n),
        q_inv: Matrix::identity(n),
    };

    for t in 0..n {
        loop {
            let mut pivot: Option<(usize, usize, u128)> = None;
            for i in t..n {
                for k in t..n {
                    let v = st.d[(i, k)];
                    if !v.is_zero() && pivot.is_none_or(|(_, _, best)| v.norm() < best) {
                        pivot = Some((i, k, v.norm()));
                    }
                }
            }
            let Some((pi, pk, _)) = pivot else {
                return Err(Error::Singular);
            };
            st.swap_rows(t, pi);
            st.swap_cols(t, pk);

            let mut remainder = false;
            for i in t + 1..n {
                let v = st.d[(i, t)];
                if v.is_zero() {
                    continue;
                }
                let (q, r) = v.div_rem(&st.d[(t, t)])?;
                st.add_row(i, t, -q)?;
                remainder |= !r.is_zero();
            }
            for k in t + 1..n {
                let v = st.d[(t, k)];
                if v.is_zero() {
                    continue;
                }
                let (q, r) = v.div_rem(&st.d[(t, t)])?;
                st.add_col(k, t, -q)?;
                remainder |= !r.is_zero();
            }
            if remainder {
                continue;
            }

            let pivot = st.d[(t, t)];
            let offending =
                (t + 1..n).find(|&i| (t + 1..n).any(|k| !R::divides(&pivot, &st.d[(i, k)])));
            match offending {
                Some(i) => st.add_row(t, i, R::one())?,
                None => break,
            }
        }
        let (_, u) = st.d[(t, t)].canonical();
        if u != R::one() {
            let u_inv = u.unit_inverse().expect("canonical() returns a unit");
            st.scale_row(t, u_inv, u)?;
        }
        if st.largest_transform_entry() > REDUCE_ABOVE {
            st = st.reduced(t + 1);
        }
    }

    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gint::GaussInt;
    use proptest::prelude::*;

    fn g(re: i64, im: i64) -> GaussInt {
        GaussInt::new(re, im)
    }

    fn check(j: &GMatrix, s: &SnfResult<GaussInt>) {
        let n = j.rows();
        assert_eq!(s.p.mul(j).unwrap().mul(&s.q).unwrap(), s.d);
        assert!(s.d.is_diagonal());
        assert!(det(&s.p).unwrap().is_unit());
        assert!(det(&s.q).unwrap().is_unit());
        assert_eq!(s.p.mul(&s.p_inv).unwrap(), GMatrix::identity(n));
        assert_eq!(s.q_inv.mul(&s.q).unwrap(), GMatrix::identity(n));
        let diag = s.d.diag();
        let units = s.unit_count();
        assert!(diag[..units].iter().all(|&x| x == GaussInt::ONE));
        for w in diag[units..].windows(2) {
            assert!(
                GaussInt::divides(&w[0], &w[1]),
                "{:?} does not divide {:?}",
                w[0],
                w[1]
            );
        }
        for &x in &diag[units..] {
            assert_eq!(x, x.canonical_associate());
            assert!(!x.is_unit());
        }
        assert_eq!(det(&s.d).unwrap().norm(), det(j).unwrap().norm());
    }

    #[test]
    fn already_diagonal() {
        let j = GMatrix::diagonal(&[g(3, 0), g(3, 0)]);
        let s = smith_normal_form(&j).unwrap();
        assert_eq!(s.d, j);
        assert_eq!(s.invariant_factors, vec![g(3, 0), g(3, 0)]);
        assert_eq!(s.annihilator(), g(3, 0));
    }

    #[test]
    fn construction_a_toy() {
        let j = GMatrix::from_rows(vec![vec![g(3, 0), g(-1, 0)], vec![g(0, 0), g(1, 0)]]).unwrap();
        let s = smith_normal_form(&j).unwrap();
        check(&j, &s);
        assert_eq!(s.d, GMatrix::diagonal(&[g(1, 0), g(3, 0)]));
        assert_eq!(annihilator(&s), g(3, 0));
    }

    #[test]
    fn identity_has_trivial_annihilator() {
        let s = smith_normal_form(&GMatrix::identity(4)).unwrap();
        assert!(s.invariant_factors.is_empty());
        assert_eq!(s.annihilator(), GaussInt::ONE);
    }

    #[test]
    fn normalizes_units_and_associates() {
        let j = GMatrix::diagonal(&[g(0, -1), g(0, 3), g(-2, -1)]);
        let s = smith_normal_form(&j).unwrap();
        check(&j, &s);
        // gcd(3, 2+i) = 1, so the quotient is cyclic: D = diag(1, 1, 3(2+i)).
        assert_eq!(s.invariant_factors.len(), 1);
        assert_eq!(
            s.invariant_factors[0],
            (g(3, 0) * g(2, 1)).canonical_associate()
        );
    }

    #[test]
    fn divisibility_repair() {
        // diag(2, 3) is not in Smith form: gcd 1, lcm 6.
        let j = GMatrix::diagonal(&[g(2, 0), g(3, 0)]);
        let s = smith_normal_form(&j).unwrap();
        check(&j, &s);
        assert_eq!(s.d.diag(), vec![g(1, 0), g(6, 0)]);
    }

    #[test]
    fn singular_is_rejected() {
        let j = GMatrix::from_rows(vec![vec![g(1, 1), g(2, 0)], vec![g(1, 0), g(1, -1)]]).unwrap();
        assert_eq!(smith_normal_form(&j), Err(Error::Singular));
        let r = GMatrix::zeros(2, 3);
        assert!(matches!(smith_normal_form(&r), Err(Error::Dimension(_))));
    }

    #[test]
    fn idempotent_on_its_output() {
        let j = GMatrix::from_rows(vec![
            vec![g(4, 2), g(1, -3), g(0, 5)],
            vec![g(2, 2), g(-6, 0), g(1, 1)],
            vec![g(3, -1), g(2, 2), g(-4, 4)],
        ])
        .unwrap();
        let s = smith_normal_form(&j).unwrap();
        check(&j, &s);
        let again = smith_normal_form(&s.d).unwrap();
        assert_eq!(again.d, s.d);
    }

    fn square_matrix(max_n: usize, c: i64) -> impl Strategy<Value = GMatrix> {
        (1..=max_n).prop_flat_map(move |n| {
            prop::collection::vec((-c..=c, -c..=c), n * n).prop_map(move |v| {
                Matrix::new(n, n, v.into_iter().map(|(a, b)| g(a, b)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn random_matrices(j in square_matrix(4, 5)) {
            prop_assume!(!det(&j).unwrap().is_zero());
            let s = smith_normal_form(&j).unwrap();
            check(&j, &s);
        }

        #[test]
        fn inverse_of_transforms(j in square_matrix(4, 5)) {
            prop_assume!(!det(&j).unwrap().is_zero());
            let s = smith_normal_form(&j).unwrap();
            let p_inv = unimodular_inverse(&s.p).unwrap();
            prop_assert_eq!(s.p.mul(&p_inv).unwrap(), GMatrix::identity(j.rows()));
            prop_assert_eq!(&p_inv, &s.p_inv);
        }
    }
}
