use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::RatMatrix;
use crate::rational::Rational;

/// Families of irreducible root systems. Cartan matrices are provided for
/// the simply laced families carrying a nontrivial diagram involution
/// (`A_n`, `D_n`, `E_6`); the remaining families are representable so that
/// the splitting dimensions can be queried, but carry no matrix data and
/// report `UnsupportedType` from [`cartan_matrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DynkinFamily {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl fmt::Display for DynkinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            DynkinFamily::A => 'A',
            DynkinFamily::B => 'B',
            DynkinFamily::C => 'C',
            DynkinFamily::D => 'D',
            DynkinFamily::E => 'E',
            DynkinFamily::F => 'F',
            DynkinFamily::G => 'G',
        };
        write!(f, "{c}")
    }
}

impl FromStr for DynkinFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(DynkinFamily::A),
            "B" | "b" => Ok(DynkinFamily::B),
            "C" | "c" => Ok(DynkinFamily::C),
            "D" | "d" => Ok(DynkinFamily::D),
            "E" | "e" => Ok(DynkinFamily::E),
            "F" | "f" => Ok(DynkinFamily::F),
            "G" | "g" => Ok(DynkinFamily::G),
            other => Err(Error::InvalidInput(format!("unknown family {other:?}"))),
        }
    }
}

/// A validated family-and-rank pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DynkinType {
    pub family: DynkinFamily,
    pub rank: usize,
}

impl DynkinType {
    pub fn new(family: DynkinFamily, rank: usize) -> Result<Self> {
        let ok = match family {
            DynkinFamily::A => rank >= 1,
            DynkinFamily::B | DynkinFamily::C => rank >= 1,
            DynkinFamily::D => rank >= 3,
            DynkinFamily::E => (6..=8).contains(&rank),
            DynkinFamily::F => rank == 4,
            DynkinFamily::G => rank == 2,
        };
        if !ok {
            return Err(Error::InvalidInput(format!("invalid rank {rank} for family {family}")));
        }
        Ok(DynkinType { family, rank })
    }
}

impl fmt::Display for DynkinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.family, self.rank)
    }
}

fn int_matrix(rows: Vec<Vec<i64>>) -> RatMatrix {
    RatMatrix::from_rows(
        rows.into_iter()
            .map(|r| r.into_iter().map(Rational::from_int).collect())
            .collect(),
    )
    .expect("well-formed matrix")
}

/// The Cartan matrix in the enumeration fixed here: `A_n` is the chain
/// `1 - 2 - ... - n`; `D_n` is the chain `1 - ... - (n-2)` with both `n-1`
/// and `n` attached to `n-2`; `E_6` is the chain `1 - 2 - 3`, with `4` and
/// `5` attached to `3` and `6` attached to `5`.
pub fn cartan_matrix(t: DynkinType) -> Result<RatMatrix> {
    let n = t.rank;
    match t.family {
        DynkinFamily::A => {
            let mut rows = vec![vec![0i64; n]; n];
            for (i, row) in rows.iter_mut().enumerate() {
                row[i] = 2;
                if i + 1 < n {
                    row[i + 1] = -1;
                }
                if i > 0 {
                    row[i - 1] = -1;
                }
            }
            Ok(int_matrix(rows))
        }
        DynkinFamily::D => {
            let mut rows = vec![vec![0i64; n]; n];
            for (i, row) in rows.iter_mut().enumerate() {
                row[i] = 2;
            }
            // Chain through vertex n-2, then the two fork tines.
            for i in 0..n.saturating_sub(3) {
                rows[i][i + 1] = -1;
                rows[i + 1][i] = -1;
            }
            rows[n - 3][n - 2] = -1;
            rows[n - 2][n - 3] = -1;
            rows[n - 3][n - 1] = -1;
            rows[n - 1][n - 3] = -1;
            Ok(int_matrix(rows))
        }
        DynkinFamily::E if n == 6 => Ok(int_matrix(vec![
            vec![2, -1, 0, 0, 0, 0],
            vec![-1, 2, -1, 0, 0, 0],
            vec![0, -1, 2, -1, -1, 0],
            vec![0, 0, -1, 2, 0, 0],
            vec![0, 0, -1, 0, 2, -1],
            vec![0, 0, 0, 0, -1, 2],
        ])),
        _ => Err(Error::UnsupportedType(format!(
            "no Cartan matrix data for type {t}"
        ))),
    }
}

/// The order-two diagram involution through which the longest Weyl group
/// element acts on simple coroots. One-based vertex indices.
///
/// `A_n`: `i -> n+1-i`. `D_n`: swaps the two fork vertices `n-1` and `n`.
/// `E_6`: swaps the two long arms, `1 <-> 6` and `2 <-> 5` in the
/// enumeration of [`cartan_matrix`]. All other families: the identity.
pub fn tau(t: DynkinType, i: usize) -> Result<usize> {
    if i < 1 || i > t.rank {
        return Err(Error::IndexOutOfRange(format!(
            "vertex {i} outside 1..={} for type {t}",
            t.rank
        )));
    }
    let n = t.rank;
    Ok(match t.family {
        DynkinFamily::A => n + 1 - i,
        DynkinFamily::D => {
            if i == n - 1 {
                n
            } else if i == n {
                n - 1
            } else {
                i
            }
        }
        DynkinFamily::E if n == 6 => match i {
            1 => 6,
            6 => 1,
            2 => 5,
            5 => 2,
            _ => i,
        },
        _ => i,
    })
}

/// Dimensions `(dim h0, dim h')` of the splitting of the Cartan subalgebra
/// under the longest Weyl group element: `h0` is the subspace on which it
/// acts as `-1`, and `h'`, `h''` are swapped. Always satisfies
/// `dim h0 + 2 dim h' = rank`.
pub fn h_decomposition_dims(t: DynkinType) -> (usize, usize) {
    let n = t.rank;
    match t.family {
        DynkinFamily::A => match n % 2 {
            0 => (0, n / 2),
            _ => (1, n / 2),
        },
        DynkinFamily::D => (n - 2, 1),
        DynkinFamily::E if n == 6 => (2, 2),
        _ => (n, 0),
    }
}
