use std::fmt;
use std::ops::{Index, IndexMut};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::gint::{EuclideanDomain, GaussInt};

/// Dense row-major matrix over a Euclidean domain.
///
/// Serializes as an array of rows.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

/// Matrix over ℤ[i].
pub type GMatrix = Matrix<GaussInt>;

const OVERFLOW: Error = Error::Overflow("matrix arithmetic");

/// `a + b·c` with overflow reported as an error.
pub(crate) fn fma<R: EuclideanDomain>(a: R, b: R, c: R) -> Result<R> {
    b.try_mul(&c).and_then(|bc| a.try_add(&bc)).ok_or(OVERFLOW)
}

impl<R: EuclideanDomain> Matrix<R> {
    pub fn new(rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix must be nonempty".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::new(n, m, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![R::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = R::one();
        }
        m
    }

    pub fn diagonal(diag: &[R]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[R] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<R>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<R> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = fma(out[(i, j)], a, b)?;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// `row[dst] += c · row[src]`
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, c: R) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        for j in 0..self.cols {
            let s = self[(src, j)];
            if !s.is_zero() {
                self[(dst, j)] = fma(self[(dst, j)], c, s)?;
            }
        }
        Ok(())
    }

    /// `col[dst] += c · col[src]`
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, c: R) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        for i in 0..self.rows {
            let s = self[(i, src)];
            if !s.is_zero() {
                self[(i, dst)] = fma(self[(i, dst)], c, s)?;
            }
        }
        Ok(())
    }

    pub fn scale_row(&mut self, i: usize, c: R) -> Result<()> {
        for j in 0..self.cols {
            self[(i, j)] = c.try_mul(&self[(i, j)]).ok_or(OVERFLOW)?;
        }
        Ok(())
    }

    pub fn scale_col(&mut self, j: usize, c: R) -> Result<()> {
        for i in 0..self.rows {
            self[(i, j)] = self[(i, j)].try_mul(&c).ok_or(OVERFLOW)?;
        }
        Ok(())
    }

    pub fn map<S, F: Fn(&R) -> S>(&self, f: F) -> Vec<Vec<S>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(&f).collect())
            .collect()
    }
}

impl<R> Index<(usize, usize)> for Matrix<R> {
    type Output = R;
    fn index(&self, (i, j): (usize, usize)) -> &R {
        &self.data[i * self.cols + j]
    }
}

impl<R> IndexMut<(usize, usize)> for Matrix<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut R {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: fmt::Debug> fmt::Debug for Matrix<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

impl<R: Serialize + EuclideanDomain> Serialize for Matrix<R> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de, R: Deserialize<'de> + EuclideanDomain> Deserialize<'de> for Matrix<R> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<R>>::deserialize(d)?;
        Matrix::from_rows(rows).map_err(D::Error::custom)
    }
}

/// Exact determinant: cofactor expansion up to 4×4, fraction-free Bareiss
/// elimination above.
pub fn det<R: EuclideanDomain>(m: &Matrix<R>) -> Result<R> {
    if !m.is_square() {
        return Err(Error::Dimension(
            "determinant of a non-square matrix".into(),
        ));
    }
    if m.rows() <= 4 {
        let rows = m.to_rows();
        let idx: Vec<usize> = (0..m.rows()).collect();
        cofactor_det(&rows, 0, &idx)
    } else {
        bareiss_det(m)
    }
}

fn cofactor_det<R: EuclideanDomain>(rows: &[Vec<R>], r: usize, cols: &[usize]) -> Result<R> {
    if cols.len() == 1 {
        return Ok(rows[r][cols[0]]);
    }
    let mut acc = R::zero();
    for (k, &c) in cols.iter().enumerate() {
        let a = rows[r][c];
        if a.is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = cofactor_det(rows, r + 1, &rest)?;
        let sign = if k % 2 == 0 { R::one() } else { -R::one() };
        acc = fma(acc, sign.try_mul(&a).ok_or(OVERFLOW)?, minor)?;
    }
    Ok(acc)
}

fn bareiss_det<R: EuclideanDomain>(m: &Matrix<R>) -> Result<R> {
    let n = m.rows();
    let mut a = m.clone();
    let mut negate = false;
    let mut prev = R::one();
    for k in 0..n - 1 {
        if a[(k, k)].is_zero() {
            match (k + 1..n).find(|&i| !a[(i, k)].is_zero()) {
                Some(i) => {
                    a.swap_rows(i, k);
                    negate = !negate;
                }
                None => return Ok(R::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let left = a[(i, j)].try_mul(&a[(k, k)]).ok_or(OVERFLOW)?;
                let num = fma(left, -a[(i, k)], a[(k, j)])?;
                let (q, r) = num.div_rem(&prev)?;
                debug_assert!(r.is_zero(), "Bareiss division must be exact");
                a[(i, j)] = q;
            }
            a[(i, k)] = R::zero();
        }
        prev = a[(k, k)];
    }
    let d = a[(n - 1, n - 1)];
    Ok(if negate { -d } else { d })
}

/// Inverse over the ring of a matrix whose determinant is a unit.
///
/// Gauss–Jordan elimination with Euclidean pivoting; every step is a
/// unimodular row operation so entries stay in the ring.
pub fn unimodular_inverse<R: EuclideanDomain>(m: &Matrix<R>) -> Result<Matrix<R>> {
    if !m.is_square() {
        return Err(Error::Dimension("inverse of a non-square matrix".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    for c in 0..n {
        loop {
            let pivot = (c..n)
                .filter(|&r| !a[(r, c)].is_zero())
                .min_by_key(|&r| a[(r, c)].norm());
            let Some(pr) = pivot else {
                return Err(Error::NotUnimodular);
            };
            a.swap_rows(pr, c);
            inv.swap_rows(pr, c);
            let mut clean = true;
            for r in c + 1..n {
                if a[(r, c)].is_zero() {
                    continue;
                }
                let (q, rem) = a[(r, c)].div_rem(&a[(c, c)])?;
                a.add_row_multiple(r, c, -q)?;
                inv.add_row_multiple(r, c, -q)?;
                clean &= rem.is_zero();
            }
            if clean {
                break;
            }
        }
        let u_inv = a[(c, c)].unit_inverse().ok_or(Error::NotUnimodular)?;
        a.scale_row(c, u_inv)?;
        inv.scale_row(c, u_inv)?;
    }
    for c in (0..n).rev() {
        for r in 0..c {
            let f = a[(r, c)];
            if !f.is_zero() {
                a.add_row_multiple(r, c, -f)?;
                inv.add_row_multiple(r, c, -f)?;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gm(rows: &[&[(i64, i64)]]) -> GMatrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&(a, b)| GaussInt::new(a, b)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn det_examples() {
        assert_eq!(det(&GMatrix::identity(3)).unwrap(), GaussInt::ONE);
        assert_eq!(det(&GMatrix::identity(7)).unwrap(), GaussInt::ONE);
        let d = GMatrix::diagonal(&[GaussInt::new(3, 0), GaussInt::new(3, 0)]);
        assert_eq!(det(&d).unwrap(), GaussInt::new(9, 0));
        let j = gm(&[&[(3, 0), (-1, 0)], &[(0, 0), (1, 0)]]);
        assert_eq!(det(&j).unwrap(), GaussInt::new(3, 0));
    }

    #[test]
    fn cofactor_and_bareiss_agree() {
        // 5x5 forces Bareiss; compare against the 4x4 cofactor path on a
        // block-diagonal extension.
        let j = gm(&[
            &[(2, 1), (0, -1), (3, 0), (1, 1)],
            &[(1, 0), (4, 2), (-1, 1), (0, 0)],
            &[(0, 3), (1, -1), (2, 0), (5, -2)],
            &[(-2, 0), (0, 1), (1, 1), (3, 3)],
        ]);
        let small = det(&j).unwrap();
        let mut big = GMatrix::identity(5);
        for i in 0..4 {
            for k in 0..4 {
                big[(i + 1, k + 1)] = j[(i, k)];
            }
        }
        big[(0, 0)] = GaussInt::new(1, 1);
        assert_eq!(bareiss_det(&big).unwrap(), small * GaussInt::new(1, 1));
        assert_eq!(bareiss_det(&j).unwrap(), small);
    }

    #[test]
    fn singular_det_is_zero() {
        let j = gm(&[
            &[(1, 0), (2, 0), (0, 0), (1, 0), (0, 0)],
            &[(2, 0), (4, 0), (0, 0), (2, 0), (0, 0)],
            &[(0, 1), (0, 0), (1, 0), (0, 0), (0, 0)],
            &[(0, 0), (0, 0), (0, 0), (1, 0), (0, 0)],
            &[(0, 0), (0, 0), (0, 0), (0, 0), (1, 0)],
        ]);
        assert_eq!(det(&j).unwrap(), GaussInt::ZERO);
    }

    #[test]
    fn inverse_examples() {
        let id = GMatrix::identity(3);
        assert_eq!(unimodular_inverse(&id).unwrap(), id);
        let e = gm(&[&[(1, 0), (1, 0)], &[(0, 0), (1, 0)]]);
        assert_eq!(
            unimodular_inverse(&e).unwrap(),
            gm(&[&[(1, 0), (-1, 0)], &[(0, 0), (1, 0)]])
        );
        let m = gm(&[&[(0, 1), (2, 1)], &[(1, 0), (1, 1)]]);
        // det = i(1+i) - (2+i) = -3 + 0i... not a unit
        assert_eq!(unimodular_inverse(&m), Err(Error::NotUnimodular));
        let u = gm(&[&[(1, 1), (2, 0)], &[(1, 0), (1, -1)]]);
        // det = (1+i)(1-i) - 2 = 0
        assert_eq!(unimodular_inverse(&u), Err(Error::NotUnimodular));
    }

    #[test]
    fn serde_shape() {
        let j = gm(&[&[(3, 0), (-1, 2)], &[(0, 0), (1, 0)]]);
        let s = serde_json::to_string(&j).unwrap();
        assert_eq!(s, "[[[3,0],[-1,2]],[[0,0],[1,0]]]");
        let back: GMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);
        assert!(serde_json::from_str::<GMatrix>("[[[1,0]],[[1,0],[2,0]]]").is_err());
    }
}
