use crate::error::{Error, Result};
use crate::factorize::FactorizationContext;
use crate::model::{GroupElement, GroupModel, SeedStream};
use crate::rational::Rational;

/// Closed-form coordinate expressions for the two tuple models.
///
/// These run on raw coordinate tuples with the widest domain on which each
/// expression makes sense, so they can also serve as the birational
/// continuations needed by the partial group structure in [`crate::almost`]
/// (where intermediate points may leave the model carrier). The wrappers on
/// [`PentagonSolution`] re-impose the carrier invariants on the results.
pub(crate) mod formulas {
    use super::*;
    use crate::model::SExponents;

    pub fn tri2_dot(x: &[Rational; 2], y: &[Rational; 2]) -> [Rational; 2] {
        [&x[0] * &y[0], &(&x[0] * &y[1]) + &x[1]]
    }

    pub fn tri2_inv(x: &[Rational; 2]) -> Result<[Rational; 2]> {
        let r = x[0].recip()?;
        Ok([r.clone(), -&(&r * &x[1])])
    }

    /// `rho(x) = (-x2/(b x1), 1/(c x1))`, the inverse of the plus part of
    /// `theta x` for the antidiagonal conjugating element `[[0,b],[c,0]]`.
    pub fn tri2_rho(b: &Rational, c: &Rational, x: &[Rational; 2]) -> Result<[Rational; 2]> {
        let d = (&x[0] * b).recip()?;
        Ok([-&(&x[1] * &d), (&x[0] * c).recip()?])
    }

    /// `j = i o rho`, pointwise: `(-b x1/x2, b/(c x2))`.
    pub fn tri2_j(b: &Rational, c: &Rational, x: &[Rational; 2]) -> Result<[Rational; 2]> {
        let r = x[1].recip()?;
        Ok([-&(&(b * &x[0]) * &r), b.div(&(c * &x[1]))?])
    }

    /// `k = i o j o i` in closed form for involutive parameters (`bc = 1`):
    /// `(x2/b, b x1)`, total on the extended chart.
    pub fn tri2_k(b: &Rational, x: &[Rational; 2]) -> Result<[Rational; 2]> {
        Ok([x[1].div(b)?, b * &x[0]])
    }

    /// Closed form of the star operation; depends only on `c`.
    pub fn tri2_star(c: &Rational, x: &[Rational; 2], y: &[Rational; 2]) -> Result<[Rational; 2]> {
        let den = &(&x[0] * &y[1]) + &x[1];
        let dinv = den.recip()?;
        Ok([&(&y[0] * &x[1]) * &dinv, y[1].div(&(c * &den))?])
    }

    /// Closed form of the companion product; depends only on `c`.
    pub fn tri2_odot(c: &Rational, x: &[Rational; 2], y: &[Rational; 2]) -> [Rational; 2] {
        let cx2 = c * &x[1];
        [&(&cx2 * &y[0]) + &x[0], &cx2 * &y[1]]
    }

    pub fn sl3s_dot(s: &SExponents, x: &[Rational; 4], y: &[Rational; 4]) -> Result<[Rational; 4]> {
        let p21 = y[0].pow(s.diff(2, 1))?;
        let p31 = y[0].pow(s.diff(3, 1))?;
        let p32 = y[0].pow(s.diff(3, 2))?;
        Ok([
            &x[0] * &y[0],
            &(&x[1] * &p21) + &y[1],
            &(&(&x[2] * &p31) + &y[2]) + &(&(&x[1] * &y[3]) * &p21),
            &(&x[3] * &p32) + &y[3],
        ])
    }

    /// Determinant of the top-right 2x2 block of the coordinate matrix,
    /// normalized: `x1 x3 - x2`. Its vanishing locus is where the plus part
    /// of `theta x` degenerates.
    pub fn sl3s_corner_minor(x: &[Rational; 4]) -> Rational {
        &(&x[1] * &x[3]) - &x[2]
    }

    pub fn sl3s_inv(s: &SExponents, x: &[Rational; 4]) -> Result<[Rational; 4]> {
        let x4 = sl3s_corner_minor(x);
        Ok([
            x[0].recip()?,
            -&(&x[0].pow(s.diff(1, 2))? * &x[1]),
            &x[0].pow(s.diff(1, 3))? * &x4,
            -&(&x[0].pow(s.diff(2, 3))? * &x[3]),
        ])
    }

    /// The displayed closed form of `rho` for conjugation parameters
    /// `(a, b)`; defined away from `x2 = 0` and `x1 x3 - x2 = 0`.
    pub fn sl3s_rho(
        a: &Rational,
        b: &Rational,
        s: &SExponents,
        x: &[Rational; 4],
    ) -> Result<[Rational; 4]> {
        let x4 = sl3s_corner_minor(x);
        if x[2].is_zero() || x4.is_zero() {
            return Err(Error::Domain("rho undefined: x2 or x1*x3-x2 vanishes".into()));
        }
        let e = s.recip_s2s31();
        let z0 = &x[2].div(a)?.pow(s.s(3) * e)? * &x4.div(b)?.pow(s.s(1) * e)?;
        let binv = b.recip()?;
        let z1 = &(&(&a.recip()? * &(b * b)) * &x[0].pow(s.diff(3, 2))?) * &x[1].div(&x4)?;
        let z2 = &(a * b) * &x[0].pow(s.diff(3, 1))?.div(&x4)?;
        let z3 = &(&(&(a * a) * &binv) * &x[0].pow(s.diff(2, 1))?) * &x[3].div(&x[2])?;
        Ok([z0, z1, z2, z3])
    }

    /// The displayed closed form of `k` for involutive parameters (`a = b`).
    pub fn sl3s_k(b: &Rational, s: &SExponents, x: &[Rational; 4]) -> Result<[Rational; 4]> {
        let x4 = sl3s_corner_minor(x);
        if x[2].is_zero() || x4.is_zero() {
            return Err(Error::Domain("k undefined: x2 or x1*x3-x2 vanishes".into()));
        }
        let e = s.recip_s2s31();
        let z0 = &x[0] * &(&(&b.pow(s.s(2) * e)? * &x[2].pow(s.s(1) * e)?) * &x4.pow(s.s(3) * e)?);
        Ok([
            z0,
            -((b * &x[1]).div(&x[2])?),
            (b * b).div(&x[2])?,
            -((b * &x[3]).div(&x4)?),
        ])
    }

    /// `j = i o rho` in closed form.
    pub fn sl3s_j(
        a: &Rational,
        b: &Rational,
        s: &SExponents,
        x: &[Rational; 4],
    ) -> Result<[Rational; 4]> {
        let r = sl3s_rho(a, b, s, x)?;
        sl3s_inv(s, &r)
    }
}

/// The set-theoretical solution attached to a factorization context: the
/// map bundle (`rho`, `sigma`, group inverse `i`, `j`, `k`), the derived
/// binary operations, and the pair transformation `s(x, y) = (x y, x * y)`
/// together with its inverse and companion.
///
/// The solution lives on the plus subgroup of the ambient group. For the
/// two tuple models that is the whole coordinate carrier; for the block
/// model it is the subgroup of block upper unitriangular matrices, and maps
/// reject arguments outside it with a domain error.
///
/// A degenerate control mode replaces `rho` by the group inverse, which
/// collapses the star operation to `x * y = y`.
#[derive(Clone, Debug)]
pub struct PentagonSolution {
    model: GroupModel,
    kind: SolutionKind,
}

#[derive(Clone, Debug)]
enum SolutionKind {
    Factorized {
        ctx: FactorizationContext,
        unipotent: bool,
        square_central: bool,
    },
    GroupInverse,
}

impl PentagonSolution {
    pub fn new(ctx: FactorizationContext) -> Self {
        let unipotent = ctx.theta().is_unipotent();
        let square_central = ctx.theta().square_is_central();
        PentagonSolution {
            model: ctx.model().clone(),
            kind: SolutionKind::Factorized { ctx, unipotent, square_central },
        }
    }

    /// The control solution with `rho(x) = x^{-1}`, hence `x * y = y`.
    pub fn degenerate(model: GroupModel) -> Self {
        PentagonSolution { model, kind: SolutionKind::GroupInverse }
    }

    pub fn model(&self) -> &GroupModel {
        &self.model
    }

    pub fn context(&self) -> Option<&FactorizationContext> {
        match &self.kind {
            SolutionKind::Factorized { ctx, .. } => Some(ctx),
            SolutionKind::GroupInverse => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self.kind, SolutionKind::GroupInverse)
    }

    pub fn theta_unipotent(&self) -> bool {
        matches!(self.kind, SolutionKind::Factorized { unipotent: true, .. })
    }

    pub fn theta_square_central(&self) -> bool {
        matches!(self.kind, SolutionKind::Factorized { square_central: true, .. })
    }

    /// Random point of the solution carrier.
    pub fn sample_point(&self, stream: &mut SeedStream, bound: u32) -> Result<GroupElement> {
        match &self.model {
            GroupModel::Tri2 | GroupModel::Sl3s(_) => self.model.sample(stream, bound),
            GroupModel::Block2n { n } => {
                let ctx = self.require_ctx()?;
                let m = ctx.sample_plus(stream, bound)?;
                GroupElement::block(*n, m)
            }
        }
    }

    fn require_ctx(&self) -> Result<&FactorizationContext> {
        self.context().ok_or_else(|| {
            Error::Domain("operation needs a conjugating element, not the degenerate mode".into())
        })
    }

    /// Checks the argument lies in the solution carrier.
    fn check_point(&self, x: &GroupElement) -> Result<()> {
        if x.model() != &self.model {
            return Err(Error::ModelMismatch(format!(
                "element of model {} in solution over {}",
                x.model().name(),
                self.model.name()
            )));
        }
        if let (GroupModel::Block2n { .. }, Some(ctx)) = (&self.model, self.context()) {
            let m = x.block_matrix().expect("block element");
            if !ctx.plus_membership(m) {
                return Err(Error::Domain("block element outside the plus subgroup".into()));
            }
        }
        Ok(())
    }

    pub fn dot(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        x.mul(y)
    }

    /// `rho(x)`: the inverse of the plus part of `theta x`, computed through
    /// the factorization. In degenerate mode, the group inverse.
    pub fn rho(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check_point(x)?;
        match &self.kind {
            SolutionKind::GroupInverse => Ok(x.inv()),
            SolutionKind::Factorized { ctx, .. } => {
                let tm = ctx.theta_mul(&ctx.embed(x)?)?;
                let plus = ctx.plus_part(&tm)?;
                ctx.plus_coords(&plus.inv().map_err(|_| {
                    Error::Domain("plus part of theta*x is not invertible".into())
                })?)
            }
        }
    }

    /// `rho^{-1}(x)`: the plus part of `theta^{-1} x^{-1}`.
    pub fn rho_inv(&self, x: &GroupElement) -> Result<GroupElement> {
        self.check_point(x)?;
        match &self.kind {
            SolutionKind::GroupInverse => Ok(x.inv()),
            SolutionKind::Factorized { ctx, .. } => {
                let tm = ctx.theta_inv_matrix().mul(&ctx.embed(&x.inv())?)?;
                let plus = ctx.plus_part(&tm)?;
                ctx.plus_coords(&plus)
            }
        }
    }

    pub fn has_closed_rho(&self) -> bool {
        !self.is_degenerate() && !matches!(self.model, GroupModel::Block2n { .. })
    }

    /// The displayed closed form of `rho`, available on the tuple models.
    pub fn rho_closed(&self, x: &GroupElement) -> Result<GroupElement> {
        let ctx = self.require_ctx()?;
        self.check_point(x)?;
        match (ctx.theta(), &self.model) {
            (crate::factorize::Theta::Tri2 { b, c }, GroupModel::Tri2) => {
                let (x1, x2) = x.tri2_coords().expect("tri2 coords");
                let z = formulas::tri2_rho(b, c, &[x1.clone(), x2.clone()])?;
                GroupElement::tri2(z[0].clone(), z[1].clone())
                    .map_err(|_| Error::Domain("rho lands outside the carrier".into()))
            }
            (crate::factorize::Theta::Sl3s { a, b }, GroupModel::Sl3s(s)) => {
                let z = formulas::sl3s_rho(a, b, s, x.sl3s_coords().expect("sl3s coords"))?;
                GroupElement::sl3s(self.model.clone(), z)
                    .map_err(|_| Error::Domain("rho lands outside the carrier".into()))
            }
            _ => Err(Error::UnsupportedType(
                "no closed form of rho for this model".into(),
            )),
        }
    }

    /// `sigma(x)` computed with an explicit witness:
    /// `(rho(y))^{-1} rho(x * y)`. Independence of the witness is one of the
    /// verified identities.
    pub fn sigma(&self, x: &GroupElement, y_witness: &GroupElement) -> Result<GroupElement> {
        let sxy = self.star(x, y_witness)?;
        let ry = self.rho(y_witness)?;
        ry.inv().mul(&self.rho(&sxy)?)
    }

    /// `x * y = rho(x) (rho(x y))^{-1}`.
    pub fn star(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let rx = self.rho(x)?;
        let rxy = self.rho(&x.mul(y)?)?;
        rx.mul(&rxy.inv())
    }

    /// The star operation recomputed through the closed form of `rho`.
    pub fn star_closed(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let rx = self.rho_closed(x)?;
        let rxy = self.rho_closed(&x.mul(y)?)?;
        rx.mul(&rxy.inv())
    }

    /// `s(x, y) = (x y, x * y)`.
    pub fn s_map(&self, x: &GroupElement, y: &GroupElement) -> Result<(GroupElement, GroupElement)> {
        Ok((x.mul(y)?, self.star(x, y)?))
    }

    /// `s^{-1}(u, v) = (rho^{-1}(v rho(u)), (rho^{-1}(v rho(u)))^{-1} u)`.
    pub fn s_inv(&self, u: &GroupElement, v: &GroupElement) -> Result<(GroupElement, GroupElement)> {
        let w = self.rho_inv(&v.mul(&self.rho(u)?)?)?;
        let second = w.inv().mul(u)?;
        Ok((w, second))
    }

    fn require_unipotent(&self) -> Result<&FactorizationContext> {
        let ctx = self.require_ctx()?;
        if !self.theta_unipotent() {
            return Err(Error::ThetaNotUnipotent(
                "the conjugating element must square to the identity".into(),
            ));
        }
        Ok(ctx)
    }

    /// `j(x)`: the plus part of `theta x`; involutive when the conjugating
    /// element squares to the identity, which is required here.
    pub fn j_map(&self, x: &GroupElement) -> Result<GroupElement> {
        let ctx = self.require_unipotent()?;
        self.check_point(x)?;
        let tm = ctx.theta_mul(&ctx.embed(x)?)?;
        ctx.plus_coords(&ctx.plus_part(&tm)?)
    }

    /// `j` through the closed form of `rho`: `j = i o rho` pointwise.
    pub fn j_closed(&self, x: &GroupElement) -> Result<GroupElement> {
        self.require_unipotent()?;
        Ok(self.rho_closed(x)?.inv())
    }

    /// `k = i o j o i`.
    pub fn k_map(&self, x: &GroupElement) -> Result<GroupElement> {
        Ok(self.j_map(&x.inv())?.inv())
    }

    /// `k` through the other composition order, `j o i o j`.
    pub fn k_alt(&self, x: &GroupElement) -> Result<GroupElement> {
        self.j_map(&self.j_map(x)?.inv())
    }

    /// The displayed closed form of `k` (tuple models, involutive theta).
    pub fn k_closed(&self, x: &GroupElement) -> Result<GroupElement> {
        let ctx = self.require_unipotent()?;
        self.check_point(x)?;
        match (ctx.theta(), &self.model) {
            (crate::factorize::Theta::Tri2 { b, .. }, GroupModel::Tri2) => {
                let (x1, x2) = x.tri2_coords().expect("tri2 coords");
                let z = formulas::tri2_k(b, &[x1.clone(), x2.clone()])?;
                GroupElement::tri2(z[0].clone(), z[1].clone())
                    .map_err(|_| Error::Domain("k lands outside the carrier".into()))
            }
            (crate::factorize::Theta::Sl3s { b, .. }, GroupModel::Sl3s(s)) => {
                let z = formulas::sl3s_k(b, s, x.sl3s_coords().expect("sl3s coords"))?;
                GroupElement::sl3s(self.model.clone(), z)
                    .map_err(|_| Error::Domain("k lands outside the carrier".into()))
            }
            _ => Err(Error::UnsupportedType("no closed form of k for this model".into())),
        }
    }

    /// First component of the companion transformation: `x (.) y`, read from
    /// the inverse of the flipped pair map.
    pub fn odot(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        Ok(self.s_inv(y, x)?.1)
    }

    /// Second component of the companion transformation: `x (*) y`.
    pub fn circledast(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        Ok(self.s_inv(y, x)?.0)
    }

    /// The companion product through the map composition
    /// `x (.) y = i j(j(y) i(x)) y` (involutive theta only).
    pub fn odot_composed(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let inner = self.j_map(y)?.mul(&x.inv())?;
        self.j_map(&inner)?.inv().mul(y)
    }

    /// The companion product conjugated through `k`: `k(k(x) k(y))`.
    pub fn odot_conjugated(&self, x: &GroupElement, y: &GroupElement) -> Result<GroupElement> {
        let prod = self.k_map(x)?.mul(&self.k_map(y)?)?;
        self.k_map(&prod)
    }

    /// Evaluates a scalar function at the transformed pair: `f(s(x, y))`.
    pub fn pullback_apply<F>(&self, f: F, x: &GroupElement, y: &GroupElement) -> Result<Rational>
    where
        F: Fn(&GroupElement, &GroupElement) -> Rational,
    {
        let (u, v) = self.s_map(x, y)?;
        Ok(f(&u, &v))
    }

    /// The exponent pairs `(p, q)` of the six monomials of total degree at
    /// most two used as pull-back test functions on first coordinates.
    pub fn monomial_exponents() -> [(i64, i64); 6] {
        [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    }

    /// Applies the pair map to components 1 and 2 of a triple.
    pub fn s12(&self, t: &[GroupElement; 3]) -> Result<[GroupElement; 3]> {
        let (a, b) = self.s_map(&t[0], &t[1])?;
        Ok([a, b, t[2].clone()])
    }

    /// Applies the pair map to components 1 and 3 of a triple.
    pub fn s13(&self, t: &[GroupElement; 3]) -> Result<[GroupElement; 3]> {
        let (a, c) = self.s_map(&t[0], &t[2])?;
        Ok([a, t[1].clone(), c])
    }

    /// Applies the pair map to components 2 and 3 of a triple.
    pub fn s23(&self, t: &[GroupElement; 3]) -> Result<[GroupElement; 3]> {
        let (b, c) = self.s_map(&t[1], &t[2])?;
        Ok([t[0].clone(), b, c])
    }

    /// The composition law for the pair transformation, checked exactly at
    /// one triple: `s23 o s13 o s12 = s12 o s23`.
    pub fn pentagon_check(&self, x: &GroupElement, y: &GroupElement, z: &GroupElement) -> Result<bool> {
        let t = [x.clone(), y.clone(), z.clone()];
        let lhs = self.s23(&self.s13(&self.s12(&t)?)?)?;
        let rhs = self.s12(&self.s23(&t)?)?;
        Ok(lhs == rhs)
    }

    /// The three defining equations of the binary-operation system plus
    /// constructive invertibility of the pair map, at one triple.
    pub fn prop1_check(&self, x: &GroupElement, y: &GroupElement, z: &GroupElement) -> Result<bool> {
        let xy = x.mul(y)?;
        let assoc = xy.mul(z)? == x.mul(&y.mul(z)?)?;
        let sxy = self.star(x, y)?;
        let sxyz = self.star(&xy, z)?;
        let eq2 = sxy.mul(&sxyz)? == self.star(x, &y.mul(z)?)?;
        let eq3 = self.star(&sxy, &sxyz)? == self.star(y, z)?;
        let (u, w) = self.s_inv(x, y)?;
        let inv_constructive = self.s_map(&u, &w)? == (x.clone(), y.clone())
            && self.s_inv(&xy, &sxy)? == (x.clone(), y.clone());
        Ok(assoc && eq2 && eq3 && inv_constructive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::Theta;
    use crate::model::DEFAULT_SAMPLE_BOUND;
    use crate::rational::rat;

    fn tri2(a: &str, b: &str) -> GroupElement {
        GroupElement::tri2(rat(a), rat(b)).unwrap()
    }

    fn sl3s(x: [&str; 4]) -> GroupElement {
        GroupElement::sl3s(
            GroupModel::sl3s_standard(),
            [rat(x[0]), rat(x[1]), rat(x[2]), rat(x[3])],
        )
        .unwrap()
    }

    fn tri2_solution(b: &str, c: &str) -> PentagonSolution {
        PentagonSolution::new(
            FactorizationContext::new(GroupModel::Tri2, Theta::tri2(rat(b), rat(c)).unwrap())
                .unwrap(),
        )
    }

    fn sl3s_solution(a: &str, b: &str) -> PentagonSolution {
        PentagonSolution::new(
            FactorizationContext::new(
                GroupModel::sl3s_standard(),
                Theta::sl3s(rat(a), rat(b)).unwrap(),
            )
            .unwrap(),
        )
    }

    fn block_solution(n: usize) -> PentagonSolution {
        PentagonSolution::new(
            FactorizationContext::new(
                GroupModel::block2n(n).unwrap(),
                Theta::block_scalar(n, rat("1")).unwrap(),
            )
            .unwrap(),
        )
    }

    fn all_solutions() -> Vec<PentagonSolution> {
        vec![
            tri2_solution("-1", "1"),
            tri2_solution("2", "1/2"),
            tri2_solution("1", "1"),
            sl3s_solution("1", "1"),
            sl3s_solution("2", "2"),
            block_solution(1),
            block_solution(2),
        ]
    }

    #[test]
    fn rho_pinned_values() {
        let sol = tri2_solution("-1", "1");
        assert_eq!(sol.rho(&tri2("2", "3")).unwrap(), tri2("3/2", "1/2"));
        assert_eq!(sol.rho_closed(&tri2("2", "3")).unwrap(), tri2("3/2", "1/2"));

        let sol = tri2_solution("2", "1/2");
        assert_eq!(sol.rho(&tri2("2", "3")).unwrap(), tri2("-3/4", "1"));
        assert_eq!(sol.rho_closed(&tri2("2", "3")).unwrap(), tri2("-3/4", "1"));

        let sol = sl3s_solution("1", "1");
        let x = sl3s(["2", "1", "3", "1"]);
        let want = sl3s(["1/3", "-2", "-1", "1/6"]);
        assert_eq!(sol.rho(&x).unwrap(), want);
        assert_eq!(sol.rho_closed(&x).unwrap(), want);
    }

    #[test]
    fn rho_bad_locus() {
        let sol = tri2_solution("-1", "1");
        assert!(matches!(sol.rho(&tri2("2", "0")), Err(e) if e.is_rejection()));
        let sol = sl3s_solution("1", "1");
        // x2 = 0 and x1*x3 - x2 = 0 are both off the domain.
        assert!(matches!(sol.rho(&sl3s(["2", "1", "0", "1"])), Err(e) if e.is_rejection()));
        assert!(matches!(sol.rho(&sl3s(["2", "1", "1", "1"])), Err(e) if e.is_rejection()));
    }

    #[test]
    fn rho_inverse_and_order_three() {
        for sol in all_solutions() {
            let mut stream = SeedStream::new(31);
            let mut checked = 0;
            while checked < 100 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let run = || -> Result<()> {
                    let r = sol.rho(&x)?;
                    assert_eq!(sol.rho_inv(&r)?, x, "rho_inv o rho = id");
                    if sol.theta_square_central() {
                        let r3 = sol.rho(&sol.rho(&r)?)?;
                        assert_eq!(r3, x, "rho has order three");
                        assert_eq!(sol.rho(&r)?, sol.rho_inv(&x)?, "rho squared inverts rho");
                    }
                    Ok(())
                };
                match run() {
                    Ok(()) => checked += 1,
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn rho_routes_agree() {
        for sol in [
            tri2_solution("-1", "1"),
            tri2_solution("2", "1/2"),
            tri2_solution("3", "5"),
            sl3s_solution("1", "1"),
            sl3s_solution("2", "3"),
        ] {
            let mut stream = SeedStream::new(37);
            let mut checked = 0;
            while checked < 100 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                match (sol.rho(&x), sol.rho_closed(&x)) {
                    (Ok(a), Ok(b)) => {
                        assert_eq!(a, b, "route disagreement");
                        checked += 1;
                    }
                    (Err(a), Err(b)) if a.is_rejection() && b.is_rejection() => continue,
                    (a, b) => panic!("routes disagree on definedness: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn star_pinned_and_closed_form() {
        let sol = tri2_solution("-1", "1");
        let want = tri2("15/17", "7/17");
        assert_eq!(sol.star(&tri2("2", "3"), &tri2("5", "7")).unwrap(), want);
        assert_eq!(sol.star_closed(&tri2("2", "3"), &tri2("5", "7")).unwrap(), want);

        // The closed star expression in coordinates agrees with the rho route
        // for every parameter pair, including c != 1.
        for (b, c) in [("-1", "1"), ("2", "1/2"), ("3", "4")] {
            let sol = tri2_solution(b, c);
            let mut stream = SeedStream::new(41);
            let mut checked = 0;
            while checked < 100 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                match sol.star(&x, &y) {
                    Ok(got) => {
                        let xc = x.tri2_coords().unwrap();
                        let yc = y.tri2_coords().unwrap();
                        let z = formulas::tri2_star(
                            &rat(c),
                            &[xc.0.clone(), xc.1.clone()],
                            &[yc.0.clone(), yc.1.clone()],
                        )
                        .unwrap();
                        assert_eq!(got, GroupElement::tri2(z[0].clone(), z[1].clone()).unwrap());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn degenerate_star_is_projection() {
        for model in [GroupModel::Tri2, GroupModel::sl3s_standard()] {
            let sol = PentagonSolution::degenerate(model.clone());
            let mut stream = SeedStream::new(43);
            for _ in 0..100 {
                let x = model.sample(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = model.sample(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                assert_eq!(sol.star(&x, &y).unwrap(), y);
                assert!(sol.prop1_check(&x, &y, &x).unwrap());
            }
        }
    }

    #[test]
    fn s_map_pinned_and_inverse() {
        let sol = tri2_solution("-1", "1");
        let (u, v) = sol.s_map(&tri2("2", "3"), &tri2("5", "7")).unwrap();
        assert_eq!(u, tri2("10", "17"));
        assert_eq!(v, tri2("15/17", "7/17"));
        assert_eq!(
            sol.s_inv(&u, &v).unwrap(),
            (tri2("2", "3"), tri2("5", "7"))
        );
    }

    #[test]
    fn pentagon_holds_on_samples() {
        for sol in all_solutions() {
            let mut stream = SeedStream::new(47);
            let mut checked = 0;
            while checked < 60 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let z = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                match sol.pentagon_check(&x, &y, &z) {
                    Ok(ok) => {
                        assert!(ok, "pentagon failed on {}", sol.model().name());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn sigma_is_witness_independent_and_inverts_rho() {
        for sol in all_solutions() {
            let mut stream = SeedStream::new(53);
            let mut checked = 0;
            while checked < 60 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y1 = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y2 = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let run = || -> Result<bool> {
                    let s1 = sol.sigma(&x, &y1)?;
                    let s2 = sol.sigma(&x, &y2)?;
                    if s1 != s2 {
                        return Ok(false);
                    }
                    if sol.theta_square_central() && s1 != sol.rho_inv(&x)? {
                        return Ok(false);
                    }
                    Ok(true)
                };
                match run() {
                    Ok(ok) => {
                        assert!(ok, "sigma identity failed on {}", sol.model().name());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn j_and_k_pinned_values() {
        let sol = tri2_solution("1", "1");
        assert_eq!(sol.j_map(&tri2("2", "3")).unwrap(), tri2("-2/3", "1/3"));
        assert_eq!(sol.j_closed(&tri2("2", "3")).unwrap(), tri2("-2/3", "1/3"));
        assert_eq!(sol.j_map(&sol.j_map(&tri2("2", "3")).unwrap()).unwrap(), tri2("2", "3"));
        assert_eq!(sol.k_map(&tri2("2", "3")).unwrap(), tri2("3", "2"));
        assert_eq!(sol.k_closed(&tri2("2", "3")).unwrap(), tri2("3", "2"));

        // j needs an involutive conjugating element.
        let sol = tri2_solution("1", "2");
        assert!(matches!(
            sol.j_map(&tri2("2", "3")),
            Err(Error::ThetaNotUnipotent(_))
        ));
    }

    #[test]
    fn j_k_identities_on_samples() {
        for sol in [
            tri2_solution("1", "1"),
            tri2_solution("2", "1/2"),
            sl3s_solution("1", "1"),
            sl3s_solution("3", "3"),
            block_solution(1),
            block_solution(2),
        ] {
            let mut stream = SeedStream::new(59);
            let mut checked = 0;
            while checked < 60 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let run = || -> Result<bool> {
                    // Involution, both composition orders of k, order three of
                    // i o j, and the product rule for j.
                    if sol.j_map(&sol.j_map(&x)?)? != x {
                        return Ok(false);
                    }
                    let k1 = sol.k_map(&x)?;
                    if k1 != sol.k_alt(&x)? {
                        return Ok(false);
                    }
                    if sol.has_closed_rho() && k1 != sol.k_closed(&x)? {
                        return Ok(false);
                    }
                    let ij = |e: &GroupElement| -> Result<GroupElement> { Ok(sol.j_map(e)?.inv()) };
                    if ij(&ij(&ij(&x)?)?)? != x {
                        return Ok(false);
                    }
                    let lhs = sol.j_map(&x.mul(&y)?)?;
                    let rhs = sol.j_map(&x)?.mul(&sol.j_map(&k1.mul(&sol.j_map(&y)?)?)?)?;
                    Ok(lhs == rhs)
                };
                match run() {
                    Ok(ok) => {
                        assert!(ok, "j/k identity failed on {}", sol.model().name());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn odot_pinned_and_relations() {
        let sol = tri2_solution("-1", "1");
        assert_eq!(sol.odot(&tri2("2", "3"), &tri2("5", "7")).unwrap(), tri2("17", "21"));

        for sol in all_solutions() {
            let mut stream = SeedStream::new(61);
            let mut checked = 0;
            while checked < 50 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let z = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let run = || -> Result<bool> {
                    let sxy = sol.star(&x, &y)?;
                    let dxy = x.mul(&y)?;
                    // Pair/companion exchange relations.
                    if sol.odot(&sxy, &dxy)? != y || sol.circledast(&sxy, &dxy)? != x {
                        return Ok(false);
                    }
                    let od = sol.odot(&x, &y)?;
                    let ca = sol.circledast(&x, &y)?;
                    if ca.mul(&od)? != y || sol.star(&ca, &od)? != x {
                        return Ok(false);
                    }
                    // Associativity of the companion product.
                    let lhs = sol.odot(&sol.odot(&x, &y)?, &z)?;
                    let rhs = sol.odot(&x, &sol.odot(&y, &z)?)?;
                    if lhs != rhs {
                        return Ok(false);
                    }
                    if sol.theta_unipotent() {
                        if od != sol.odot_composed(&x, &y)? {
                            return Ok(false);
                        }
                        if od != sol.odot_conjugated(&x, &y)? {
                            return Ok(false);
                        }
                        // Partial-group identities for the companion product.
                        let a = sol.odot(&sol.odot(&y, &x)?, &sol.j_map(&x)?)?;
                        let b = sol.odot(&sol.j_map(&z)?, &sol.odot(&z, &y)?)?;
                        if a != y || b != y {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                };
                match run() {
                    Ok(ok) => {
                        assert!(ok, "odot identity failed on {}", sol.model().name());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn tri2_odot_closed_form_matches() {
        for (b, c) in [("-1", "1"), ("1", "1"), ("2", "1/2"), ("3", "4")] {
            let sol = tri2_solution(b, c);
            let mut stream = SeedStream::new(67);
            let mut checked = 0;
            while checked < 100 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                match sol.odot(&x, &y) {
                    Ok(got) => {
                        let xc = x.tri2_coords().unwrap();
                        let yc = y.tri2_coords().unwrap();
                        let z = formulas::tri2_odot(
                            &rat(c),
                            &[xc.0.clone(), xc.1.clone()],
                            &[yc.0.clone(), yc.1.clone()],
                        );
                        assert_eq!(got, GroupElement::tri2(z[0].clone(), z[1].clone()).unwrap());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }

    #[test]
    fn rho_rescaling_yields_same_star() {
        // Post-composing rho with right multiplication by a fixed element
        // leaves the star operation unchanged.
        for sol in [tri2_solution("-1", "1"), sl3s_solution("1", "1")] {
            let mut stream = SeedStream::new(71);
            let a = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
            let star_tilde = |x: &GroupElement, y: &GroupElement| -> Result<GroupElement> {
                let rx = sol.rho(x)?.mul(&a)?;
                let rxy = sol.rho(&x.mul(y)?)?.mul(&a)?;
                rx.mul(&rxy.inv())
            };
            let mut checked = 0;
            while checked < 100 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                match (sol.star(&x, &y), star_tilde(&x, &y)) {
                    (Ok(s1), Ok(s2)) => {
                        assert_eq!(s1, s2);
                        checked += 1;
                    }
                    _ => continue,
                }
            }
        }
    }

    #[test]
    fn pullback_examples() {
        let sol = tri2_solution("-1", "1");
        let one = |_: &GroupElement, _: &GroupElement| Rational::one();
        assert_eq!(
            sol.pullback_apply(one, &tri2("2", "3"), &tri2("5", "7")).unwrap(),
            Rational::one()
        );
        let first = |u: &GroupElement, _: &GroupElement| u.first_coordinate();
        assert_eq!(
            sol.pullback_apply(first, &tri2("2", "3"), &tri2("5", "7")).unwrap(),
            rat("10")
        );
    }

    #[test]
    fn prop1_checks() {
        for sol in all_solutions() {
            let mut stream = SeedStream::new(73);
            let mut checked = 0;
            while checked < 60 {
                let x = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let y = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                let z = sol.sample_point(&mut stream, DEFAULT_SAMPLE_BOUND).unwrap();
                match sol.prop1_check(&x, &y, &z) {
                    Ok(ok) => {
                        assert!(ok, "prop1 failed on {}", sol.model().name());
                        checked += 1;
                    }
                    Err(e) if e.is_rejection() => continue,
                    Err(e) => panic!("unexpected error: {e}"),
                }
            }
        }
    }
}
