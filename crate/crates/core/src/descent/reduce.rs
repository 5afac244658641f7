//! Block reduction via the eigenvalue-one vector and Witt completion.

use crate::error::{Error, Result};
use crate::matrices::{
    from_y_frame, invert_level, j_matrix, membership, theta_level, to_y_frame, MatrixE, Shape,
};
use crate::residue::{field, FMat};
use crate::ring::{solve_unit_norm, teichmuller_lift, EElement, Oe, RingContext, Valuation};
use crate::twisted::{TwistedElement, ORDER_CAP};

/// The doubled space `V + V'` carrying `rho(g) = diag(g, theta(g))` and
/// `rho(g x| theta) = [[0, g], [theta(g), 0]]`.
#[derive(Clone, Copy, Debug)]
pub struct RhoSpace {
    ctx: RingContext,
    n: usize,
    m: u32,
}

impl RhoSpace {
    pub fn new(ctx: &RingContext, n: usize, m: u32) -> Self {
        RhoSpace { ctx: *ctx, n, m }
    }

    pub fn dim(&self) -> usize {
        2 * (2 * self.n + 1)
    }

    pub fn labels(&self) -> Vec<String> {
        let n = self.n as i64;
        let e = (-n..=n).map(|i| format!("e{i}"));
        let f = (-n..=n).rev().map(|i| format!("f{i}"));
        e.chain(f).collect()
    }

    /// `-m` on `e_{-n}..e_{-1}` and `f_n..f_1`, zero elsewhere: the lattice
    /// is spanned by `p^{x_i} b_i`.
    pub fn lattice_exponents(&self) -> Vec<i32> {
        let big = 2 * self.n + 1;
        (0..2 * big).map(|i| if i % big < self.n { -(self.m as i32) } else { 0 }).collect()
    }

    /// Gram matrix `G` with `<u, v> = v^* G u`.
    pub fn gram(&self) -> MatrixE {
        let big = 2 * self.n + 1;
        let j = j_matrix(&self.ctx, big);
        MatrixE::from_fn(&self.ctx, 2 * big, 2 * big, |a, b| match (a < big, b < big) {
            (true, false) => j.get(a, b - big),
            (false, true) => j.get(a - big, b),
            _ => self.ctx.zero(),
        })
    }

    pub fn pairing(&self, u: &[EElement], v: &[EElement]) -> EElement {
        let g = self.gram();
        let mut acc = self.ctx.zero();
        for a in 0..u.len() {
            for b in 0..u.len() {
                let gab = g.get(a, b);
                if !gab.is_zero() {
                    acc = acc + v[a].conj() * gab * u[b];
                }
            }
        }
        acc
    }

    pub fn rho(&self, g: &MatrixE) -> Result<MatrixE> {
        Ok(block_diag(g, &theta_level(g, self.m)?))
    }

    pub fn rho_twisted(&self, dt: &TwistedElement) -> Result<MatrixE> {
        let s = &dt.delta;
        let ts = theta_level(s, self.m)?;
        let big = s.n();
        Ok(MatrixE::from_fn(&self.ctx, 2 * big, 2 * big, |a, b| match (a < big, b < big) {
            (true, false) => s.get(a, b - big),
            (false, true) => ts.get(a - big, b),
            _ => self.ctx.zero(),
        }))
    }

    /// `a^* G a = G` at precision.
    pub fn preserves_pairing(&self, a: &MatrixE) -> bool {
        let g = self.gram();
        (&(&a.star() * &g) * a).eq_at_prec(&g)
    }

    /// Whether `a` maps the lattice into itself.
    pub fn preserves_lattice(&self, a: &MatrixE) -> bool {
        let x = self.lattice_exponents();
        (0..a.rows()).all(|i| (0..a.cols()).all(|j| a.get(i, j).valuation().lower_bound() + x[j] - x[i] >= 0))
    }
}

fn block_diag(a: &MatrixE, b: &MatrixE) -> MatrixE {
    let (na, nb) = (a.n(), b.n());
    MatrixE::from_fn(a.ctx(), na + nb, na + nb, |i, j| match (i < na, j < na) {
        (true, true) => a.get(i, j),
        (false, false) => b.get(i - na, j - na),
        _ => a.ctx().zero(),
    })
}

/// `(1/r) sum_{i<r} y^i` for an integral `y` with `y^r = I`, `r` prime to `p`.
fn averaging_frame(y: &MatrixE) -> Result<MatrixE> {
    let ctx = *y.ctx();
    if !y.is_integral() {
        return Err(Error::NotInCompact("entry valuation below the lattice bound".into()));
    }
    let r = FMat::of(y)?.order(&field(&ctx), ORDER_CAP)?;
    if r % ctx.p() == 0 {
        return Err(Error::NotTopSemisimple);
    }
    let id = MatrixE::identity(&ctx, y.n());
    let mut acc = MatrixE::zeros(&ctx, y.n(), y.n());
    let mut pw = id.clone();
    for _ in 0..r {
        acc = &acc + &pw;
        pw = &pw * y;
    }
    if !pw.eq_at_prec(&id) {
        return Err(Error::NotTopSemisimple);
    }
    Ok(acc.scale(ctx.int(r as i64).inv()?))
}

/// Projector onto the eigenvalue-one space of a topologically semisimple
/// element of the level-`m` group: the average of its powers.
pub fn eigen_projector(x: &MatrixE, m: u32) -> Result<MatrixE> {
    Ok(from_y_frame(&averaging_frame(&to_y_frame(x, m))?, m))
}

/// `v = e_0 mod p^m L` where `L` has `p^{-m}` on the top block.
fn close_to_e0(v: &[EElement], n: usize, m: u32) -> Result<bool> {
    let c = *v[0].ctx();
    for (i, x) in v.iter().enumerate() {
        let ok = match i.cmp(&n) {
            std::cmp::Ordering::Less => x.valuation().lower_bound() >= 0,
            std::cmp::Ordering::Equal => x.congruent_mod(&c.one(), m as i32)?,
            std::cmp::Ordering::Greater => x.valuation().lower_bound() >= m as i32,
        };
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `b^* J a`.
fn form(a: &[EElement], b: &[EElement]) -> EElement {
    let big = a.len();
    let mut acc = a[0].ctx().zero();
    for i in 0..big {
        let x = b[big - 1 - i].conj() * a[i];
        acc = if i % 2 == 0 { acc + x } else { acc - x };
    }
    acc
}

fn scale_vec(c: EElement, v: &[EElement]) -> Vec<EElement> {
    v.iter().map(|x| c * *x).collect()
}

fn sub_e0(v: &[EElement], n: usize) -> Vec<EElement> {
    let mut w = v.to_vec();
    w[n] = w[n] - v[n].ctx().one();
    w
}

fn sign(i: usize) -> i64 {
    if i.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `(1 + a eps p^m) / (1 - a eps p^m)`, a norm-one principal unit.
fn z_twist(ctx: &RingContext, a: Oe, m: u32) -> Result<EElement> {
    let x = EElement::from_oe(ctx, ctx.eps().mul(&a, ctx)).mul_p_pow(m as i32);
    (ctx.one() + x).div(&(ctx.one() - x))
}

/// Candidates for the twist: none first, then the Teichmuller units of `F_p`.
fn twist_candidates(ctx: &RingContext) -> Vec<Option<Oe>> {
    let f = field(ctx);
    let mut out = vec![None];
    for a in 1..ctx.p() {
        out.push(Some(teichmuller_lift(ctx, Oe::new(&f, a, 0))));
    }
    out
}

fn has_valuation(x: &EElement, v: i32) -> bool {
    x.valuation() == Valuation::Finite(v)
}

fn check_reduction_params(ctx: &RingContext, m: u32) -> Result<()> {
    if m == 0 {
        return Err(Error::ConfigInvalid("block reduction needs level m >= 1".into()));
    }
    if ctx.k() < 2 * m + 2 {
        return Err(Error::ConfigInvalid(format!(
            "block reduction needs k >= 2m + 2 (k = {}, m = {m})",
            ctx.k()
        )));
    }
    Ok(())
}

/// Conjugates a topologically semisimple `t` in the level-`m` unitary group
/// into block shape: returns `(k, k^{-1} t k)` with `k` in the same group.
pub fn block_reduce_h(t: &MatrixE, m: u32) -> Result<(MatrixE, MatrixE)> {
    let ctx = *t.ctx();
    check_reduction_params(&ctx, m)?;
    if !membership(t, Shape::KmH(m))? {
        return Err(Error::NotInShape("input is not in the level-m unitary group".into()));
    }
    let big = t.n();
    let n = big / 2;
    if membership(t, Shape::Reduced(m))? {
        return Ok((MatrixE::identity(&ctx, big), t.clone()));
    }
    let proj = eigen_projector(t, m)?;
    let v0 = proj.column(n);
    if !close_to_e0(&v0, n, m)? {
        return Err(Error::MiddleEigenvalueMissing);
    }
    let h = form(&v0, &v0);
    let target = ctx.int(sign(n)).div(&h)?;
    let z = solve_unit_norm(&target).map_err(|e| Error::NormEquationFailure(e.to_string()))?;
    let e0 = scale_vec(z, &v0);

    let mut chosen = None;
    for a in twist_candidates(&ctx) {
        let cand = match a {
            None => e0.clone(),
            Some(a) => scale_vec(z_twist(&ctx, a, m)?, &e0),
        };
        if has_valuation(&(cand[n] - ctx.one()), m as i32) {
            chosen = Some(cand);
            break;
        }
    }
    let e0 =
        chosen.ok_or_else(|| Error::NormEquationFailure("no twist meets the valuation condition".into()))?;

    let w = sub_e0(&e0, n);
    let denom = w[n].conj().scale_int(sign(n));
    let mut k = MatrixE::zeros(&ctx, big, big);
    for j in 0..big {
        let col = if j == n {
            e0.clone()
        } else {
            let c = w[big - 1 - j].conj().scale_int(sign(j)).div(&denom)?;
            let mut col = scale_vec(c, &w);
            col[j] = col[j] + ctx.one();
            col
        };
        k.set_column(j, &col);
    }
    let reduced = conjugate_level(&k, t, m)?;
    verify_h_reduction(&k, &reduced, m)?;
    Ok((k, reduced))
}

/// `k^{-1} x k` computed in the integral frame.
pub(crate) fn conjugate_level(k: &MatrixE, x: &MatrixE, m: u32) -> Result<MatrixE> {
    let yk = to_y_frame(k, m);
    let y = &(&yk.invert()? * &to_y_frame(x, m)) * &yk;
    Ok(from_y_frame(&y, m))
}

fn verify_h_reduction(k: &MatrixE, reduced: &MatrixE, m: u32) -> Result<()> {
    if !membership(k, Shape::KmH(m))? {
        return Err(Error::NotInShape("conjugator left the level-m unitary group".into()));
    }
    if !membership(reduced, Shape::Reduced(m))? {
        return Err(Error::NotInShape("conjugate is not in block shape".into()));
    }
    Ok(())
}

/// Result of the twisted block reduction.
#[derive(Clone, Debug)]
pub struct TwistedReduction {
    pub k: MatrixE,
    /// `k^{-1} s theta(k)`: the conjugate `k^{-1} (s x| theta) k`.
    pub reduced: TwistedElement,
    /// The new basis `f'` of `V'`; equals `theta(k)`.
    pub f_basis: MatrixE,
}

/// Conjugates a topologically semisimple `s x| theta` with `s` in the
/// level-`m` group into block shape.
pub fn block_reduce_twisted(st: &TwistedElement, m: u32) -> Result<TwistedReduction> {
    let s = &st.delta;
    let ctx = *s.ctx();
    check_reduction_params(&ctx, m)?;
    if !membership(s, Shape::Km(m))? {
        return Err(Error::NotInShape("input is not in the level-m group".into()));
    }
    let big = s.n();
    let n = big / 2;
    let ts = theta_level(s, m)?;
    if membership(s, Shape::Reduced(m))? {
        return Ok(TwistedReduction {
            k: MatrixE::identity(&ctx, big),
            reduced: st.clone(),
            f_basis: MatrixE::identity(&ctx, big),
        });
    }
    let ys = to_y_frame(s, m);
    let yns = &ys * &to_y_frame(&ts, m);
    let proj = from_y_frame(&averaging_frame(&yns)?, m);
    let v0 = proj.column(n);
    if !close_to_e0(&v0, n, m)? {
        return Err(Error::MiddleEigenvalueMissing);
    }
    let v0p: Vec<EElement> =
        (0..big).map(|i| (0..big).fold(ctx.zero(), |acc, j| acc + ts.get(i, j) * v0[j])).collect();
    if !close_to_e0(&v0p, n, m)? {
        return Err(Error::MiddleEigenvalueMissing);
    }
    let c = form(&v0, &v0p).scale_int(sign(n));
    if !c.is_rational() || !c.congruent_mod(&ctx.one(), m as i32)? {
        return Err(Error::NormEquationFailure(format!("(-1)^n <v0, v0'> = {c} is not 1 mod p^{m} in o_F")));
    }
    let z = solve_unit_norm(&c.inv()?).map_err(|e| Error::NormEquationFailure(e.to_string()))?;
    let (e0, f0) = (scale_vec(z, &v0), scale_vec(z, &v0p));

    let mut chosen = None;
    for a in twist_candidates(&ctx) {
        let za = match a {
            None => ctx.one(),
            Some(a) => z_twist(&ctx, a, m)?,
        };
        let (ce, cf) = (scale_vec(za, &e0), scale_vec(za, &f0));
        if has_valuation(&(ce[n] - ctx.one()), m as i32) && has_valuation(&(cf[n] - ctx.one()), m as i32) {
            chosen = Some((ce, cf));
            break;
        }
    }
    let (e0, f0) =
        chosen.ok_or_else(|| Error::NormEquationFailure("no twist meets the valuation condition".into()))?;

    let de = sub_e0(&e0, n);
    let df = sub_e0(&f0, n);
    let denom_e = df[n].conj().scale_int(sign(n));
    let denom_f = de[n].conj().scale_int(sign(n));
    let mut k = MatrixE::zeros(&ctx, big, big);
    let mut fb = MatrixE::zeros(&ctx, big, big);
    for j in 0..big {
        if j == n {
            k.set_column(j, &e0);
            fb.set_column(j, &f0);
            continue;
        }
        let ce = df[big - 1 - j].conj().scale_int(sign(j)).div(&denom_e)?;
        let mut col = scale_vec(ce, &de);
        col[j] = col[j] + ctx.one();
        k.set_column(j, &col);
        let cf = de[big - 1 - j].conj().scale_int(sign(j)).div(&denom_f)?;
        let mut col = scale_vec(cf, &df);
        col[j] = col[j] + ctx.one();
        fb.set_column(j, &col);
    }

    let j = j_matrix(&ctx, big);
    if !(&(&fb.star() * &j) * &k).eq_at_prec(&j) {
        return Err(Error::NotInShape("Witt basis does not keep the pairing".into()));
    }
    if !membership(&k, Shape::Km(m))? {
        return Err(Error::NotInShape("conjugator left the level-m group".into()));
    }
    let reduced = &(&invert_level(&k, m)? * s) * &fb;
    if !membership(&reduced, Shape::Reduced(m))? {
        return Err(Error::NotInShape("conjugate is not in block shape".into()));
    }
    Ok(TwistedReduction { k, reduced: TwistedElement::new(reduced), f_basis: fb })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_km, random_kmh, random_teichmuller, torus_element};
    use crate::twisted::{tjd, twisted_conjugate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> RingContext {
        RingContext::new(3, 6).unwrap()
    }

    #[test]
    fn projector_examples() {
        let c = ctx();
        let id = MatrixE::identity(&c, 3);
        assert!(eigen_projector(&id, 1).unwrap().eq_at_prec(&id));
        let neg = -&id;
        assert!(eigen_projector(&neg, 1).unwrap().is_zero());
        let u = c.residue_units().into_iter().find(|u| u.residue_order(&c) == 8).unwrap();
        let t = torus_element(&c, &[teichmuller_lift(&c, u)]);
        let expected = MatrixE::diag(&c, &[c.zero(), c.one(), c.zero()]);
        assert!(eigen_projector(&t, 1).unwrap().eq_at_prec(&expected));
    }

    #[test]
    fn rho_keeps_pairing_and_lattice() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sp = RhoSpace::new(&c, 1, 1);
        for _ in 0..5 {
            let g = random_km(&c, 1, 1, &mut rng);
            let r = sp.rho_twisted(&TwistedElement::new(g.clone())).unwrap();
            assert!(sp.preserves_pairing(&r));
            assert!(sp.preserves_lattice(&r));
            assert!(sp.preserves_lattice(&sp.rho(&g).unwrap()));
        }
        assert_eq!(sp.labels()[0], "e-1");
        assert_eq!(sp.labels()[5], "f-1");
    }

    #[test]
    fn h_reduction_round_trip() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let t0 = tjd(&random_kmh(&c, 1, 1, &mut rng), 1).unwrap().ss;
            let k0 = random_kmh(&c, 1, 1, &mut rng);
            let t = conjugate_level(&invert_level(&k0, 1).unwrap(), &t0, 1).unwrap();
            let (k, red) = block_reduce_h(&t, 1).unwrap();
            assert!(membership(&red, Shape::Reduced(1)).unwrap());
            assert!(crate::norms::multiset_eq(&red.charpoly(), &t.charpoly()));
            assert!(conjugate_level(&k, &t, 1).unwrap().eq_at_prec(&red));
        }
    }

    #[test]
    fn reduced_input_is_fixed() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = torus_element(&c, &[random_teichmuller(&c, &mut rng)]);
        let (k, red) = block_reduce_h(&t, 1).unwrap();
        assert!(k.eq_at_prec(&MatrixE::identity(&c, 3)));
        assert!(red.eq_at_prec(&t));
    }

    #[test]
    fn twisted_reduction_round_trip() {
        let c = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut done = 0;
        while done < 10 {
            let g = random_km(&c, 1, 1, &mut rng);
            let s = crate::twisted::tjd_twisted(&TwistedElement::new(g), 1).unwrap().ss;
            let k0 = random_km(&c, 1, 1, &mut rng);
            let st = twisted_conjugate(&k0, &TwistedElement::new(s)).unwrap();
            let r = block_reduce_twisted(&st, 1).unwrap();
            assert!(membership(&r.reduced.delta, Shape::Reduced(1)).unwrap());
            assert!(r.f_basis.eq_at_prec(&theta_level(&r.k, 1).unwrap()));
            done += 1;
        }
    }
}
