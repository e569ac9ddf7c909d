use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::RatMatrix;
use crate::rational::Rational;

/// Default bound for random rational coordinates: numerators in `[-B, B]`,
/// denominators in `[1, B]`.
pub const DEFAULT_SAMPLE_BOUND: u32 = 10;

/// Resampling cap before a sampler gives up.
pub const MAX_SAMPLE_ATTEMPTS: u32 = 1000;

/// Deterministic random source. Shard `k` of a run seeded with `s` uses the
/// ChaCha stream `(s, k)`, so adding shards never perturbs the points an
/// existing shard draws.
pub struct SeedStream {
    rng: ChaCha8Rng,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self::shard(seed, 0)
    }

    pub fn shard(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        SeedStream { rng }
    }

    /// Random rational with numerator in `[-bound, bound]` and denominator
    /// in `[1, bound]`.
    pub fn rational(&mut self, bound: u32) -> Rational {
        let b = bound.max(1) as i64;
        let num = self.rng.random_range(-b..=b);
        let den = self.rng.random_range(1..=b);
        Rational::new(num, den).expect("positive denominator")
    }

    pub fn nonzero_rational(&mut self, bound: u32) -> Result<Rational> {
        for _ in 0..MAX_SAMPLE_ATTEMPTS {
            let r = self.rational(bound);
            if !r.is_zero() {
                return Ok(r);
            }
        }
        Err(Error::SamplingExhausted(MAX_SAMPLE_ATTEMPTS))
    }
}

/// Validated exponent triple for the four-coordinate triangular model.
///
/// The triple must satisfy `s1 + s2 + s3 = 0` and `s2 (s3 - s1) != 0`, and
/// every exponent the coordinate formulas raise to (the entries themselves,
/// their pairwise differences, and `1/(s2 (s3 - s1))`) must be an integer,
/// which keeps all maps rational and exactly computable. Integrality of the
/// reciprocal forces `s2 (s3 - s1) = ±1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SExponents {
    s: [i64; 3],
}

impl SExponents {
    pub fn new(s1: &Rational, s2: &Rational, s3: &Rational) -> Result<Self> {
        let sum = &(s1 + s2) + s3;
        if !sum.is_zero() {
            return Err(Error::InvalidModel(format!(
                "exponent triple must sum to zero, got {s1},{s2},{s3}"
            )));
        }
        let prod = s2 * &(s3 - s1);
        if prod.is_zero() {
            return Err(Error::InvalidModel(
                "exponent triple must satisfy s2*(s3-s1) != 0".into(),
            ));
        }
        let ints: Vec<i64> = [s1, s2, s3]
            .iter()
            .map(|r| {
                r.to_i64().ok_or_else(|| {
                    Error::InvalidModel(format!(
                        "exponent triple must be integral, got {s1},{s2},{s3}"
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if !(prod.is_one() || prod == Rational::from_int(-1)) {
            return Err(Error::InvalidModel(format!(
                "1/(s2*(s3-s1)) must be an integer, got s2*(s3-s1) = {prod}"
            )));
        }
        Ok(SExponents { s: [ints[0], ints[1], ints[2]] })
    }

    pub fn from_i64(s: [i64; 3]) -> Result<Self> {
        let r: Vec<Rational> = s.iter().map(|&v| Rational::from_int(v)).collect();
        Self::new(&r[0], &r[1], &r[2])
    }

    /// The default triple `(0, -1, 1)`.
    pub fn standard() -> Self {
        SExponents { s: [0, -1, 1] }
    }

    /// `s_i`, one-based.
    pub fn s(&self, i: usize) -> i64 {
        self.s[i - 1]
    }

    /// `s_i - s_j`, one-based.
    pub fn diff(&self, i: usize, j: usize) -> i64 {
        self.s[i - 1] - self.s[j - 1]
    }

    /// `1/(s2*(s3-s1))`, an integer equal to `s2*(s3-s1)` since that
    /// product is `±1`.
    pub fn recip_s2s31(&self) -> i64 {
        self.s(2) * self.diff(3, 1)
    }

    pub fn as_rationals(&self) -> [Rational; 3] {
        [
            Rational::from_int(self.s[0]),
            Rational::from_int(self.s[1]),
            Rational::from_int(self.s[2]),
        ]
    }
}

/// One of the three concrete group models.
///
/// * `Tri2`: pairs `(x1, x2)` with `x1 != 0`, the upper triangular
///   `[[x1, x2], [0, 1]]` matrices under multiplication.
/// * `Sl3s`: quadruples `(x0, x1, x2, x3)` with `x0 != 0`, upper
///   triangular unimodular 3x3 matrices with diagonal
///   `(x0^s1, x0^s2, x0^s3)`.
/// * `Block2n`: invertible `2N x 2N` matrices viewed through their
///   `N x N` corner blocks.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupModel {
    Tri2,
    Sl3s(SExponents),
    Block2n { n: usize },
}

impl GroupModel {
    pub fn tri2() -> Self {
        GroupModel::Tri2
    }

    pub fn sl3s(s: SExponents) -> Self {
        GroupModel::Sl3s(s)
    }

    pub fn sl3s_standard() -> Self {
        GroupModel::Sl3s(SExponents::standard())
    }

    pub fn block2n(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidModel("block size must be at least 1".into()));
        }
        Ok(GroupModel::Block2n { n })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroupModel::Tri2 => "tri2",
            GroupModel::Sl3s(_) => "sl3s",
            GroupModel::Block2n { .. } => "block2n",
        }
    }

    /// JSON description used in reports: `{"model": "...", ...params}`.
    pub fn describe(&self) -> serde_json::Value {
        match self {
            GroupModel::Tri2 => serde_json::json!({ "model": "tri2" }),
            GroupModel::Sl3s(s) => serde_json::json!({
                "model": "sl3s",
                "s": s.as_rationals(),
            }),
            GroupModel::Block2n { n } => serde_json::json!({ "model": "block2n", "n": n }),
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupModel::Tri2 => GroupElement {
                model: self.clone(),
                coords: Coords::Tri2(Rational::one(), Rational::zero()),
            },
            GroupModel::Sl3s(_) => GroupElement {
                model: self.clone(),
                coords: Coords::Sl3s([
                    Rational::one(),
                    Rational::zero(),
                    Rational::zero(),
                    Rational::zero(),
                ]),
            },
            GroupModel::Block2n { n } => GroupElement {
                model: self.clone(),
                coords: Coords::Block(RatMatrix::identity(2 * n)),
            },
        }
    }

    /// Random element with all model invariants satisfied; resamples on a
    /// violation and gives up with `SamplingExhausted` after a fixed cap.
    pub fn sample(&self, stream: &mut SeedStream, bound: u32) -> Result<GroupElement> {
        match self {
            GroupModel::Tri2 => {
                let x1 = stream.nonzero_rational(bound)?;
                let x2 = stream.rational(bound);
                GroupElement::tri2(x1, x2)
            }
            GroupModel::Sl3s(_) => {
                let x0 = stream.nonzero_rational(bound)?;
                let rest = [
                    stream.rational(bound),
                    stream.rational(bound),
                    stream.rational(bound),
                ];
                GroupElement::sl3s(self.clone(), [x0, rest[0].clone(), rest[1].clone(), rest[2].clone()])
            }
            GroupModel::Block2n { n } => {
                let m = sample_invertible(stream, 2 * n, bound)?;
                GroupElement::block(*n, m)
            }
        }
    }
}

/// Random square matrix with nonzero determinant.
pub(crate) fn sample_invertible(
    stream: &mut SeedStream,
    dim: usize,
    bound: u32,
) -> Result<RatMatrix> {
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let mut m = RatMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, stream.rational(bound));
            }
        }
        if !m.det()?.is_zero() {
            return Ok(m);
        }
    }
    Err(Error::SamplingExhausted(MAX_SAMPLE_ATTEMPTS))
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Coords {
    Tri2(Rational, Rational),
    Sl3s([Rational; 4]),
    Block(RatMatrix),
}

/// Element of one of the group models, tagged with its model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    model: GroupModel,
    coords: Coords,
}

impl GroupElement {
    pub fn tri2(x1: Rational, x2: Rational) -> Result<Self> {
        if x1.is_zero() {
            return Err(Error::InvalidElement(
                "tri2 first coordinate must be nonzero".into(),
            ));
        }
        Ok(GroupElement {
            model: GroupModel::Tri2,
            coords: Coords::Tri2(x1, x2),
        })
    }

    pub fn sl3s(model: GroupModel, x: [Rational; 4]) -> Result<Self> {
        if !matches!(model, GroupModel::Sl3s(_)) {
            return Err(Error::ModelMismatch("expected an sl3s model".into()));
        }
        if x[0].is_zero() {
            return Err(Error::InvalidElement(
                "sl3s leading coordinate must be nonzero".into(),
            ));
        }
        Ok(GroupElement { model, coords: Coords::Sl3s(x) })
    }

    pub fn block(n: usize, m: RatMatrix) -> Result<Self> {
        if m.rows() != 2 * n || m.cols() != 2 * n {
            return Err(Error::DimensionMismatch(format!(
                "block model of size {n} needs a {0}x{0} matrix, got {1}x{2}",
                2 * n,
                m.rows(),
                m.cols()
            )));
        }
        if m.det()?.is_zero() {
            return Err(Error::InvalidElement("block element must be invertible".into()));
        }
        Ok(GroupElement {
            model: GroupModel::Block2n { n },
            coords: Coords::Block(m),
        })
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn tri2_coords(&self) -> Option<(&Rational, &Rational)> {
        match &self.coords {
            Coords::Tri2(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn sl3s_coords(&self) -> Option<&[Rational; 4]> {
        match &self.coords {
            Coords::Sl3s(x) => Some(x),
            _ => None,
        }
    }

    pub fn block_matrix(&self) -> Option<&RatMatrix> {
        match &self.coords {
            Coords::Block(m) => Some(m),
            _ => None,
        }
    }

    /// Coordinates as a flat list (block elements flatten row major).
    pub fn coord_list(&self) -> Vec<Rational> {
        match &self.coords {
            Coords::Tri2(a, b) => vec![a.clone(), b.clone()],
            Coords::Sl3s(x) => x.to_vec(),
            Coords::Block(m) => {
                let mut v = Vec::with_capacity(m.rows() * m.cols());
                for i in 0..m.rows() {
                    for j in 0..m.cols() {
                        v.push(m.get(i, j).clone());
                    }
                }
                v
            }
        }
    }

    /// The scalar the pull-back test functions read off: the first
    /// coordinate for the tuple models, the top-left entry for matrices.
    pub fn first_coordinate(&self) -> Rational {
        match &self.coords {
            Coords::Tri2(a, _) => a.clone(),
            Coords::Sl3s(x) => x[0].clone(),
            Coords::Block(m) => m.get(0, 0).clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == self.model.identity()
    }

    /// Group product in coordinates.
    pub fn mul(&self, rhs: &GroupElement) -> Result<GroupElement> {
        if self.model != rhs.model {
            return Err(Error::ModelMismatch(format!(
                "cannot multiply {} element by {} element",
                self.model.name(),
                rhs.model.name()
            )));
        }
        match (&self.coords, &rhs.coords) {
            (Coords::Tri2(x1, x2), Coords::Tri2(y1, y2)) => {
                let z = crate::maps::formulas::tri2_dot(&[x1.clone(), x2.clone()], &[y1.clone(), y2.clone()]);
                GroupElement::tri2(z[0].clone(), z[1].clone())
            }
            (Coords::Sl3s(x), Coords::Sl3s(y)) => {
                let s = match &self.model {
                    GroupModel::Sl3s(s) => *s,
                    _ => unreachable!(),
                };
                let z = crate::maps::formulas::sl3s_dot(&s, x, y)?;
                GroupElement::sl3s(self.model.clone(), z)
            }
            (Coords::Block(a), Coords::Block(b)) => {
                let m = a.mul(b)?;
                Ok(GroupElement { model: self.model.clone(), coords: Coords::Block(m) })
            }
            _ => unreachable!("model equality guarantees matching coordinates"),
        }
    }

    /// Group inverse; total on the model carrier.
    pub fn inv(&self) -> GroupElement {
        match &self.coords {
            Coords::Tri2(x1, x2) => {
                let z = crate::maps::formulas::tri2_inv(&[x1.clone(), x2.clone()])
                    .expect("tri2 invariant: x1 nonzero");
                GroupElement {
                    model: GroupModel::Tri2,
                    coords: Coords::Tri2(z[0].clone(), z[1].clone()),
                }
            }
            Coords::Sl3s(x) => {
                let s = match &self.model {
                    GroupModel::Sl3s(s) => *s,
                    _ => unreachable!(),
                };
                let z = crate::maps::formulas::sl3s_inv(&s, x).expect("sl3s invariant: x0 nonzero");
                GroupElement { model: self.model.clone(), coords: Coords::Sl3s(z) }
            }
            Coords::Block(m) => GroupElement {
                model: self.model.clone(),
                coords: Coords::Block(m.inv().expect("block invariant: invertible")),
            },
        }
    }

    /// Multiplication-preserving matrix realization of the element.
    pub fn to_matrix(&self) -> RatMatrix {
        match &self.coords {
            Coords::Tri2(x1, x2) => RatMatrix::from_rows(vec![
                vec![x1.clone(), x2.clone()],
                vec![Rational::zero(), Rational::one()],
            ])
            .expect("2x2 shape"),
            Coords::Sl3s(x) => {
                let s = match &self.model {
                    GroupModel::Sl3s(s) => *s,
                    _ => unreachable!(),
                };
                sl3s_plus_matrix(&s, x).expect("sl3s invariant: x0 nonzero")
            }
            Coords::Block(m) => m.clone(),
        }
    }
}

/// Upper triangular matrix realization of an `sl3s` coordinate tuple.
pub(crate) fn sl3s_plus_matrix(s: &SExponents, x: &[Rational; 4]) -> Result<RatMatrix> {
    let d1 = x[0].pow(s.s(1))?;
    let d2 = x[0].pow(s.s(2))?;
    let d3 = x[0].pow(s.s(3))?;
    RatMatrix::from_rows(vec![
        vec![d1.clone(), &d1 * &x[1], &d1 * &x[2]],
        vec![Rational::zero(), d2.clone(), &d2 * &x[3]],
        vec![Rational::zero(), Rational::zero(), d3],
    ])
}

/// Lower triangular matrix realization of a minus-chart tuple
/// `(y0, y1, y2, y3)`: diagonal `(y0^s3, y0^s2, y0^s1)` with subdiagonal
/// entries `y0^s2 y3`, `y0^s1 y2`, `y0^s1 y1`.
pub(crate) fn sl3s_minus_matrix(s: &SExponents, y: &[Rational; 4]) -> Result<RatMatrix> {
    let d3 = y[0].pow(s.s(3))?;
    let d2 = y[0].pow(s.s(2))?;
    let d1 = y[0].pow(s.s(1))?;
    RatMatrix::from_rows(vec![
        vec![d3, Rational::zero(), Rational::zero()],
        vec![&d2 * &y[3], d2.clone(), Rational::zero()],
        vec![&d1 * &y[2], &d1 * &y[1], d1.clone()],
    ])
}

// --- JSON form -------------------------------------------------------------
//
// {"model":"tri2","coords":["2","3"]}
// {"model":"sl3s","s":["0","-1","1"],"coords":["2","1","1","1"]}
// {"model":"block2n","n":2,"matrix":{"rows":4,"cols":4,"entries":[...]}}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    s: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<RatMatrix>,
}

impl Serialize for GroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match (&self.model, &self.coords) {
            (GroupModel::Tri2, Coords::Tri2(a, b)) => ElementRepr {
                model: "tri2".into(),
                s: None,
                coords: Some(vec![a.clone(), b.clone()]),
                n: None,
                matrix: None,
            },
            (GroupModel::Sl3s(s), Coords::Sl3s(x)) => ElementRepr {
                model: "sl3s".into(),
                s: Some(s.as_rationals().to_vec()),
                coords: Some(x.to_vec()),
                n: None,
                matrix: None,
            },
            (GroupModel::Block2n { n }, Coords::Block(m)) => ElementRepr {
                model: "block2n".into(),
                s: None,
                coords: None,
                n: Some(*n),
                matrix: Some(m.clone()),
            },
            _ => unreachable!(),
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = ElementRepr::deserialize(deserializer)?;
        element_from_repr(repr).map_err(serde::de::Error::custom)
    }
}

fn element_from_repr(repr: ElementRepr) -> Result<GroupElement> {
    match repr.model.as_str() {
        "tri2" => {
            let c = repr
                .coords
                .ok_or_else(|| Error::InvalidInput("tri2 element needs coords".into()))?;
            if c.len() != 2 {
                return Err(Error::InvalidInput("tri2 element needs 2 coordinates".into()));
            }
            GroupElement::tri2(c[0].clone(), c[1].clone())
        }
        "sl3s" => {
            let s = match repr.s {
                Some(v) if v.len() == 3 => SExponents::new(&v[0], &v[1], &v[2])?,
                Some(_) => {
                    return Err(Error::InvalidInput("sl3s element needs a 3-part exponent triple".into()))
                }
                None => SExponents::standard(),
            };
            let c = repr
                .coords
                .ok_or_else(|| Error::InvalidInput("sl3s element needs coords".into()))?;
            if c.len() != 4 {
                return Err(Error::InvalidInput("sl3s element needs 4 coordinates".into()));
            }
            GroupElement::sl3s(
                GroupModel::Sl3s(s),
                [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()],
            )
        }
        "block2n" => {
            let n = repr
                .n
                .ok_or_else(|| Error::InvalidInput("block2n element needs n".into()))?;
            let m = repr
                .matrix
                .ok_or_else(|| Error::InvalidInput("block2n element needs a matrix".into()))?;
            GroupElement::block(n, m)
        }
        other => Err(Error::InvalidInput(format!("unknown model {other:?}"))),
    }
}
