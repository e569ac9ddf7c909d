use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::factorize::Theta;
use crate::maps::formulas;
use crate::model::{GroupElement, GroupModel, SExponents};
use crate::rational::Rational;

/// Element of the symmetrically factorized partial group built over a base
/// model with an involutive conjugating element: either a pair of base
/// elements, or the adjoined conjugating symbol.
///
/// JSON form: `{"theta": true}` or `{"pair": [element, element]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AlmostGroupElement {
    Theta,
    Pair(GroupElement, GroupElement),
}

impl AlmostGroupElement {
    pub fn pair(a: GroupElement, b: GroupElement) -> Result<Self> {
        if a.model() != b.model() {
            return Err(Error::ModelMismatch("pair components must share one model".into()));
        }
        Ok(AlmostGroupElement::Pair(a, b))
    }
}

#[derive(Serialize, Deserialize)]
struct AlmostRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pair: Option<(GroupElement, GroupElement)>,
}

impl Serialize for AlmostGroupElement {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            AlmostGroupElement::Theta => AlmostRepr { theta: Some(true), pair: None },
            AlmostGroupElement::Pair(a, b) => AlmostRepr {
                theta: None,
                pair: Some((a.clone(), b.clone())),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for AlmostGroupElement {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = AlmostRepr::deserialize(deserializer)?;
        match (repr.theta, repr.pair) {
            (Some(true), None) => Ok(AlmostGroupElement::Theta),
            (None, Some((a, b))) => {
                AlmostGroupElement::pair(a, b).map_err(serde::de::Error::custom)
            }
            _ => Err(serde::de::Error::custom(
                "expected {\"theta\": true} or {\"pair\": [element, element]}",
            )),
        }
    }
}

/// The partial group on `(M x M) ∪ {theta}` rebuilt from an involutive `j`.
///
/// Products follow the multiplication table
///
/// ```text
/// (x1,x2)(y1,y2) = (x1 j(x2 j(y1)), k(k(x2) y1) y2)
/// theta(x1,x2)   = (j(x1), k(x1) x2)
/// (x1,x2)theta   = (x1 j(x2), k(x2))
/// theta^2        = (1, 1)
/// ```
///
/// Intermediate evaluations use the closed coordinate forms on their widest
/// domains (for the two-coordinate base this passes through points outside
/// the carrier, which the formulas continue across); a product is defined
/// exactly when every intermediate step and the final pair are. Points where
/// some step is undefined raise a domain error, which callers count as
/// exclusions. The base unit itself sits on the boundary of j's domain, so
/// identities quantified over literal units are checkable only partially.
#[derive(Clone, Debug)]
pub struct AlmostGroup {
    base: Base,
}

#[derive(Clone, Debug)]
enum Base {
    Tri2 { b: Rational, c: Rational },
    Sl3s { s: SExponents, b: Rational },
}

impl AlmostGroup {
    /// Builds the structure over a base model and an involutive conjugating
    /// element for it.
    pub fn new(model: &GroupModel, theta: &Theta) -> Result<Self> {
        if !theta.model_matches(model) {
            return Err(Error::ModelMismatch("theta does not fit the base model".into()));
        }
        if !theta.is_unipotent() {
            return Err(Error::ThetaNotUnipotent(
                "the almost-group construction needs an involutive conjugating element".into(),
            ));
        }
        match (model, theta) {
            (GroupModel::Tri2, Theta::Tri2 { b, c }) => Ok(AlmostGroup {
                base: Base::Tri2 { b: b.clone(), c: c.clone() },
            }),
            (GroupModel::Sl3s(s), Theta::Sl3s { b, .. }) => Ok(AlmostGroup {
                base: Base::Sl3s { s: *s, b: b.clone() },
            }),
            _ => Err(Error::UnsupportedType(
                "the almost-group runs over the tuple models".into(),
            )),
        }
    }

    pub fn model(&self) -> GroupModel {
        match &self.base {
            Base::Tri2 { .. } => GroupModel::Tri2,
            Base::Sl3s { s, .. } => GroupModel::Sl3s(*s),
        }
    }

    /// The pair of base units, the unit of the structure.
    pub fn unit(&self) -> AlmostGroupElement {
        let e = self.model().identity();
        AlmostGroupElement::Pair(e.clone(), e)
    }

    fn coords(&self, x: &GroupElement) -> Result<Vec<Rational>> {
        if x.model() != &self.model() {
            return Err(Error::ModelMismatch("element of a different base model".into()));
        }
        Ok(x.coord_list())
    }

    fn lift(&self, raw: &[Rational]) -> Result<GroupElement> {
        let outside = || Error::Domain("product leaves the base carrier".into());
        match &self.base {
            Base::Tri2 { .. } => {
                GroupElement::tri2(raw[0].clone(), raw[1].clone()).map_err(|_| outside())
            }
            Base::Sl3s { s, .. } => GroupElement::sl3s(
                GroupModel::Sl3s(*s),
                [raw[0].clone(), raw[1].clone(), raw[2].clone(), raw[3].clone()],
            )
            .map_err(|_| outside()),
        }
    }

    // Raw base operations on coordinate tuples, maximal domains.

    fn dot(&self, x: &[Rational], y: &[Rational]) -> Result<Vec<Rational>> {
        match &self.base {
            Base::Tri2 { .. } => Ok(formulas::tri2_dot(
                &[x[0].clone(), x[1].clone()],
                &[y[0].clone(), y[1].clone()],
            )
            .to_vec()),
            Base::Sl3s { s, .. } => {
                if y[0].is_zero() {
                    return Err(Error::Domain("product undefined at vanishing leading coordinate".into()));
                }
                Ok(formulas::sl3s_dot(
                    s,
                    &[x[0].clone(), x[1].clone(), x[2].clone(), x[3].clone()],
                    &[y[0].clone(), y[1].clone(), y[2].clone(), y[3].clone()],
                )?
                .to_vec())
            }
        }
    }

    fn inv(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        match &self.base {
            Base::Tri2 { .. } => Ok(formulas::tri2_inv(&[x[0].clone(), x[1].clone()])?.to_vec()),
            Base::Sl3s { s, .. } => {
                if x[0].is_zero() {
                    return Err(Error::Domain("inverse undefined at vanishing leading coordinate".into()));
                }
                Ok(formulas::sl3s_inv(s, &[x[0].clone(), x[1].clone(), x[2].clone(), x[3].clone()])?.to_vec())
            }
        }
    }

    fn j(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        match &self.base {
            Base::Tri2 { b, c } => {
                if x[1].is_zero() {
                    return Err(Error::Domain("j undefined: second coordinate vanishes".into()));
                }
                Ok(formulas::tri2_j(b, c, &[x[0].clone(), x[1].clone()])?.to_vec())
            }
            Base::Sl3s { s, b } => {
                if x[0].is_zero() {
                    return Err(Error::Domain("j undefined at vanishing leading coordinate".into()));
                }
                Ok(formulas::sl3s_j(b, b, s, &[x[0].clone(), x[1].clone(), x[2].clone(), x[3].clone()])?.to_vec())
            }
        }
    }

    fn k(&self, x: &[Rational]) -> Result<Vec<Rational>> {
        match &self.base {
            Base::Tri2 { b, .. } => Ok(formulas::tri2_k(b, &[x[0].clone(), x[1].clone()])?.to_vec()),
            Base::Sl3s { s, b } => {
                Ok(formulas::sl3s_k(b, s, &[x[0].clone(), x[1].clone(), x[2].clone(), x[3].clone()])?.to_vec())
            }
        }
    }

    /// Product from the multiplication table.
    pub fn mul(&self, p: &AlmostGroupElement, q: &AlmostGroupElement) -> Result<AlmostGroupElement> {
        match (p, q) {
            (AlmostGroupElement::Theta, AlmostGroupElement::Theta) => Ok(self.unit()),
            (AlmostGroupElement::Theta, AlmostGroupElement::Pair(y1, y2)) => {
                let y1c = self.coords(y1)?;
                let first = self.j(&y1c)?;
                let second = self.dot(&self.k(&y1c)?, &self.coords(y2)?)?;
                Ok(AlmostGroupElement::Pair(self.lift(&first)?, self.lift(&second)?))
            }
            (AlmostGroupElement::Pair(x1, x2), AlmostGroupElement::Theta) => {
                let x2c = self.coords(x2)?;
                let first = self.dot(&self.coords(x1)?, &self.j(&x2c)?)?;
                let second = self.k(&x2c)?;
                Ok(AlmostGroupElement::Pair(self.lift(&first)?, self.lift(&second)?))
            }
            (AlmostGroupElement::Pair(x1, x2), AlmostGroupElement::Pair(y1, y2)) => {
                let x1c = self.coords(x1)?;
                let x2c = self.coords(x2)?;
                let y1c = self.coords(y1)?;
                let y2c = self.coords(y2)?;
                // (x1 j(x2 j(y1)), k(k(x2) y1) y2)
                let first = self.dot(&x1c, &self.j(&self.dot(&x2c, &self.j(&y1c)?)?)?)?;
                let second = self.dot(&self.k(&self.dot(&self.k(&x2c)?, &y1c)?)?, &y2c)?;
                Ok(AlmostGroupElement::Pair(self.lift(&first)?, self.lift(&second)?))
            }
        }
    }

    /// Inverse: `(x1,x2)^{-1} = (i k(k(x1) x2), i j(x1 j(x2)))`; the adjoined
    /// symbol is its own inverse.
    pub fn inv_element(&self, p: &AlmostGroupElement) -> Result<AlmostGroupElement> {
        match p {
            AlmostGroupElement::Theta => Ok(AlmostGroupElement::Theta),
            AlmostGroupElement::Pair(x1, x2) => {
                let x1c = self.coords(x1)?;
                let x2c = self.coords(x2)?;
                let first = self.inv(&self.k(&self.dot(&self.k(&x1c)?, &x2c)?)?)?;
                let second = self.inv(&self.j(&self.dot(&x1c, &self.j(&x2c)?)?)?)?;
                Ok(AlmostGroupElement::Pair(self.lift(&first)?, self.lift(&second)?))
            }
        }
    }
}
