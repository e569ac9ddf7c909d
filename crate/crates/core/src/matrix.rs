use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Dense matrix of exact rationals, row major.
///
/// Determinant and inverse run fraction-free (Bareiss) elimination over the
/// integers after clearing row denominators, which bounds intermediate
/// coefficient growth on the larger block models.
#[derive(Clone, PartialEq, Eq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RatMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(RatMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(RatMatrix {
            rows: r,
            cols: c,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    /// Convenience constructor from integer literals, used heavily in tests.
    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&n| Rational::from_int(n)).collect())
                .collect(),
        )
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Rational::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = Rational::one();
        }
        RatMatrix { rows: n, cols: n, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMatrix {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
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

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == RatMatrix::identity(self.rows)
    }

    /// True when the matrix is `t * I` for some scalar `t`.
    pub fn is_scalar(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let t = self.get(0, 0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let want = if i == j { t.clone() } else { Rational::zero() };
                if *self.get(i, j) != want {
                    return false;
                }
            }
        }
        true
    }

    pub fn mul(&self, rhs: &RatMatrix) -> Result<RatMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = RatMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = Rational::zero();
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * rhs.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Exact determinant via fraction-free elimination.
    pub fn det(&self) -> Result<Rational> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "determinant of {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let (mut m, scale) = self.cleared_rows(0);
        let n = self.rows;
        let mut sign = 1i64;
        let mut prev = BigInt::one();
        for k in 0..n {
            let pivot = (k..n).find(|&r| !m[r][k].is_zero());
            let pivot = match pivot {
                Some(p) => p,
                None => return Ok(Rational::zero()),
            };
            if pivot != k {
                m.swap(pivot, k);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[k][k] * &m[i][j] - &m[i][k] * &m[k][j];
                    m[i][j] = exact_div(num, &prev);
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        let det_scaled = Rational::from_int(m[n - 1][n - 1].clone() * sign);
        det_scaled.div(&Rational::from_int(scale))
    }

    /// Exact inverse. `Err(Error::Singular)` when the determinant vanishes.
    pub fn inv(&self) -> Result<RatMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "inverse of {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        // Augment with the row scalings so the result solves A X = I directly.
        let (mut m, _) = self.cleared_rows(n);
        let mut prev = BigInt::one();
        for k in 0..n {
            let pivot = (k..n)
                .find(|&r| !m[r][k].is_zero())
                .ok_or(Error::Singular)?;
            if pivot != k {
                m.swap(pivot, k);
            }
            for i in k + 1..n {
                for j in k + 1..2 * n {
                    let num = &m[k][k] * &m[i][j] - &m[i][k] * &m[k][j];
                    m[i][j] = exact_div(num, &prev);
                }
                m[i][k] = BigInt::zero();
            }
            prev = m[k][k].clone();
        }
        // Back substitution on the triangularized system, now over rationals.
        let mut out = RatMatrix::zeros(n, n);
        for col in 0..n {
            for i in (0..n).rev() {
                let mut acc = Rational::from_int(m[i][n + col].clone());
                for j in i + 1..n {
                    acc = acc - &Rational::from_int(m[i][j].clone()) * out.get(j, col);
                }
                let x = acc.div(&Rational::from_int(m[i][i].clone()))?;
                out.set(i, col, x);
            }
        }
        Ok(out)
    }

    /// Splits a `2n x 2n` matrix into its four `n x n` corner blocks,
    /// returned as (top-left, top-right, bottom-left, bottom-right).
    pub fn block_split(&self, n: usize) -> Result<(RatMatrix, RatMatrix, RatMatrix, RatMatrix)> {
        if self.rows != 2 * n || self.cols != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "block split of {}x{} with block size {n}",
                self.rows, self.cols
            )));
        }
        let sub = |r0: usize, c0: usize| {
            let mut b = RatMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    b.set(i, j, self.get(r0 + i, c0 + j).clone());
                }
            }
            b
        };
        Ok((sub(0, 0), sub(0, n), sub(n, 0), sub(n, n)))
    }

    /// Reassembles four equally sized square blocks into one matrix.
    pub fn from_blocks(
        a: &RatMatrix,
        b: &RatMatrix,
        c: &RatMatrix,
        d: &RatMatrix,
    ) -> Result<RatMatrix> {
        let n = a.rows;
        for m in [a, b, c, d] {
            if m.rows != n || m.cols != n {
                return Err(Error::DimensionMismatch("blocks must be equal square".into()));
            }
        }
        let mut out = RatMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, a.get(i, j).clone());
                out.set(i, n + j, b.get(i, j).clone());
                out.set(n + i, j, c.get(i, j).clone());
                out.set(n + i, n + j, d.get(i, j).clone());
            }
        }
        Ok(out)
    }

    /// Clears denominators row by row and appends `extra` augmentation
    /// columns holding the per-row multipliers on the diagonal. Returns the
    /// integer working matrix and the product of the multipliers.
    fn cleared_rows(&self, extra: usize) -> (Vec<Vec<BigInt>>, BigInt) {
        let n = self.rows;
        let mut scale = BigInt::one();
        let mut m = Vec::with_capacity(n);
        for i in 0..n {
            let mut lcm = BigInt::one();
            for j in 0..self.cols {
                lcm = lcm.lcm(self.get(i, j).denom());
            }
            let mut row: Vec<BigInt> = Vec::with_capacity(self.cols + extra);
            for j in 0..self.cols {
                let e = self.get(i, j);
                row.push(e.numer() * (&lcm / e.denom()));
            }
            for j in 0..extra {
                row.push(if i == j { lcm.clone() } else { BigInt::zero() });
            }
            scale *= &lcm;
            m.push(row);
        }
        (m, scale)
    }
}

fn exact_div(num: BigInt, den: &BigInt) -> BigInt {
    debug_assert!(!den.is_zero() && (&num % den).is_zero(), "Bareiss division must be exact");
    num / den
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<Rational>>,
}

impl Serialize for RatMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).clone()).collect())
            .collect();
        MatrixRepr { rows: self.rows, cols: self.cols, entries }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RatMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(deserializer)?;
        if repr.entries.len() != repr.rows || repr.entries.iter().any(|r| r.len() != repr.cols) {
            return Err(serde::de::Error::custom("matrix shape does not match entries"));
        }
        RatMatrix::from_rows(repr.entries).map_err(serde::de::Error::custom)
    }
}
