//! The residue group of the level-`m` unitary group, read in the integral
//! frame: middle row `e_mid`, outer block unitary for the outer part of
//! the form, middle column free. Elements lift back through a unitarized
//! outer block times a Cayley factor carrying the middle column.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrices::{from_y_frame, j_matrix, membership, theta_frame, to_y_frame, MatrixE, Shape};
use crate::residue::{field, poly_residue, FMat};
use crate::ring::{EElement, Oe, RingContext};
use crate::sample::{cayley, random_kmh_frame};
use crate::twisted::{is_conj_self_reciprocal, is_top_semisimple_twisted, tjd, TwistedElement, ORDER_CAP};

fn outer_indices(big: usize) -> Vec<usize> {
    let n = big / 2;
    (0..big).filter(|&i| i != n).collect()
}

/// The outer part of `J_N` on the `2n` indices other than the middle.
fn outer_form_matrix(ctx: &RingContext, n: usize) -> MatrixE {
    outer_of(&j_matrix(ctx, 2 * n + 1))
}

pub(crate) fn outer_of(x: &MatrixE) -> MatrixE {
    let idx = outer_indices(x.n());
    MatrixE::from_fn(x.ctx(), idx.len(), idx.len(), |a, b| x.get(idx[a], idx[b]))
}

fn signed_outer_form(n: usize, f: &RingContext) -> FMat {
    FMat::of(&outer_form_matrix(f, n)).expect("integral form")
}

/// Outer block (indices other than the middle) of an `N x N` residue.
pub fn outer_block(r: &FMat) -> FMat {
    let idx = outer_indices(r.n);
    let mut h = FMat::zeros(idx.len());
    for (a, &i) in idx.iter().enumerate() {
        for (b, &l) in idx.iter().enumerate() {
            h.set(a, b, r.get(i, l));
        }
    }
    h
}

/// `diag`-embedding of an outer block with `1` in the middle.
pub fn embed_outer(h: &FMat) -> FMat {
    let big = h.n + 1;
    let idx = outer_indices(big);
    let mut r = FMat::identity(big);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &l) in idx.iter().enumerate() {
            r.set(i, l, h.get(a, b));
        }
    }
    r
}

fn is_outer_unitary(h: &FMat, f: &RingContext) -> bool {
    let n = h.n / 2;
    let j = signed_outer_form(n, f);
    h.mul(&j, f).mul(&h.star(f), f) == j
}

/// All unitary `2 x 2` residues for the outer form (so `n = 1`).
pub fn outer_unitary_residues(ctx: &RingContext) -> Vec<FMat> {
    let f = field(ctx);
    let units: Vec<Oe> = std::iter::once(Oe::zero()).chain(ctx.residue_units()).collect();
    let mut out = Vec::new();
    for &a in &units {
        for &b in &units {
            for &c in &units {
                for &d in &units {
                    let h = FMat { n: 2, data: vec![a, b, c, d] };
                    if is_outer_unitary(&h, &f) {
                        out.push(h);
                    }
                }
            }
        }
    }
    out
}

/// Every element of the residue group for `n = 1`.
pub fn residue_group(ctx: &RingContext) -> Vec<FMat> {
    let outer = outer_unitary_residues(ctx);
    let all: Vec<Oe> = std::iter::once(Oe::zero()).chain(ctx.residue_units()).collect();
    let mut out = Vec::with_capacity(outer.len() * all.len() * all.len());
    for h in &outer {
        let base = embed_outer(h);
        for &b in &all {
            for &e in &all {
                let mut r = base.clone();
                r.set(0, 1, b);
                r.set(2, 1, e);
                out.push(r);
            }
        }
    }
    out
}

/// Whether a residue lies in the residue group.
pub fn in_residue_group(r: &FMat, f: &RingContext) -> bool {
    let n = r.n / 2;
    (0..r.n).all(|j| r.get(n, j) == if j == n { Oe::one() } else { Oe::zero() })
        && is_outer_unitary(&outer_block(r), f)
}

/// Whether the residue order is prime to `p`.
pub fn prime_to_p(r: &FMat, ctx: &RingContext) -> Result<bool> {
    Ok(r.order(&field(ctx), ORDER_CAP)? % ctx.p() != 0)
}

/// `c` in `group` with `c a = b c`.
pub fn find_residue_conjugator(a: &FMat, b: &FMat, group: &[FMat], f: &RingContext) -> Option<FMat> {
    group.iter().find(|c| c.mul(a, f) == b.mul(c, f)).cloned()
}

/// Lifts an outer unitary residue to an exactly unitary integral block:
/// `E^{-1/2} H0` with `E = H0 J H0^* J^{-1}`.
fn unitarize_outer(h: &FMat, ctx: &RingContext) -> Result<MatrixE> {
    let n2 = h.n;
    let h0 = h.lift(ctx);
    let jo = outer_form_matrix(ctx, n2 / 2);
    let e = &(&(&h0 * &jo) * &h0.star()) * &jo.invert()?;
    if !FMat::of(&e)?.is_identity() {
        return Err(Error::NotInCompact("outer block residue is not unitary".into()));
    }
    let half = (ctx.p().pow(ctx.k()) - 1) / 2;
    let out = &e.pow(half) * &h0;
    if !(&(&out * &jo) * &out.star()).eq_at_prec(&jo) {
        return Err(Error::NotInShape("unitarized block does not keep the form".into()));
    }
    Ok(out)
}

/// Unitary Lie element in the integral frame whose only residue is the
/// outer part `x` of the middle column.
fn middle_column_lie(ctx: &RingContext, x: &[Oe], big: usize, m: u32) -> MatrixE {
    let n = big / 2;
    let idx = outer_indices(big);
    let mut a = MatrixE::zeros(ctx, big, big);
    let sn: i64 = if n.is_multiple_of(2) { 1 } else { -1 };
    for (t, &i) in idx.iter().enumerate() {
        a.set(i, n, EElement::from_oe(ctx, x[t]));
    }
    for &b in &idx {
        let bp = big - 1 - b;
        let t = idx.iter().position(|&i| i == bp).unwrap();
        let sb: i64 = if bp.is_multiple_of(2) { 1 } else { -1 };
        let v = EElement::from_oe(ctx, x[t]).conj().mul_p_pow(m as i32).scale_int(-sn * sb);
        a.set(n, b, v);
    }
    a
}

/// An element of the level-`m` unitary group whose frame residue is `r`.
pub fn lift_to_kmh(r: &FMat, ctx: &RingContext, m: u32) -> Result<MatrixE> {
    let f = field(ctx);
    if !in_residue_group(r, &f) {
        return Err(Error::NotInShape("residue is outside the residue group".into()));
    }
    let big = r.n;
    let n = big / 2;
    let h = outer_block(r);
    let hi = h.inverse(&f).ok_or(Error::NonUnitDeterminant)?;
    let idx = outer_indices(big);
    let col: Vec<Oe> = idx.iter().map(|&i| r.get(i, n)).collect();
    let x: Vec<Oe> = (0..h.n)
        .map(|a| (0..h.n).fold(Oe::zero(), |s, b| s.add(&hi.get(a, b).mul(&col[b], &f), &f)))
        .collect();
    let hb = unitarize_outer(&h, ctx)?;
    let mut y = MatrixE::identity(ctx, big);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &l) in idx.iter().enumerate() {
            y.set(i, l, hb.get(a, b));
        }
    }
    let x: Vec<Oe> = x.iter().map(|v| Oe::new(ctx, v.a0, v.a1)).collect();
    let u = cayley(&middle_column_lie(ctx, &x, big, m))?;
    let y = &y * &u;
    let out = from_y_frame(&y, m);
    if FMat::of(&y)? != *r || !membership(&out, Shape::KmH(m))? {
        return Err(Error::NotInShape("lift is not a level-m unitary element over the residue".into()));
    }
    Ok(out)
}

/// Seeded random residues of block shape (outer unitary, middle trivial),
/// for sizes where enumeration is out of reach.
pub fn random_block_residues(
    ctx: &RingContext,
    n: usize,
    m: u32,
    seed: u64,
    count: usize,
) -> Result<Vec<FMat>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let y = random_kmh_frame(ctx, n, m, &mut rng);
        out.push(embed_outer(&outer_block(&FMat::of(&y)?)));
    }
    Ok(out)
}

/// Seed of the residue search for `n >= 2`.
pub const NORM_SEARCH_SEED: u64 = 0x5eed_0071;
/// Cap on random residues tried for `n >= 2`.
pub const NORM_SEARCH_CAP: usize = 20_000;

fn charpolys_equal(a: &[EElement], b: &[EElement]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.eq_at_prec(y))
}

/// A topologically semisimple `t` in the level-`m` unitary group with the
/// characteristic polynomial of `N(s)`.
///
/// The residue search runs over block-shaped residues of prime-to-`p`
/// order (exhaustive for `n = 1`, seeded random for larger `n`); the hit is
/// lifted and replaced by its semisimple part, whose characteristic
/// polynomial is the Teichmuller lift of the residue one.
pub fn find_norm_in_h(st: &TwistedElement, m: u32) -> Result<MatrixE> {
    let s = &st.delta;
    let ctx = *s.ctx();
    let f = field(&ctx);
    if !is_top_semisimple_twisted(st, m)? {
        return Err(Error::NotTopSemisimple);
    }
    let ys = to_y_frame(s, m);
    let target = (&ys * &theta_frame(&ys, m)?).charpoly();
    if !is_conj_self_reciprocal(&target)? {
        return Err(Error::ResidueSearchExhausted);
    }
    let fbar = poly_residue(&target);
    let n = s.n() / 2;
    let candidates: Vec<FMat> = if n == 1 {
        outer_unitary_residues(&ctx).iter().map(embed_outer).collect()
    } else {
        random_block_residues(&ctx, n, m, NORM_SEARCH_SEED, NORM_SEARCH_CAP)?
    };
    for r in candidates {
        if r.charpoly(&f) != fbar || !prime_to_p(&r, &ctx)? {
            continue;
        }
        let t = tjd(&lift_to_kmh(&r, &ctx, m)?, m)?.ss;
        if !charpolys_equal(&to_y_frame(&t, m).charpoly(), &target) {
            return Err(Error::NotInShape("semisimple lift does not carry the norm's charpoly".into()));
        }
        return Ok(t);
    }
    Err(Error::ResidueSearchExhausted)
}

/// Outcome of the residue conjugacy check inside the residue group.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct ResidueSuiteReport {
    pub group_order: usize,
    pub prime_to_p: usize,
    pub charpoly_classes: usize,
    pub orbits: usize,
    /// Characteristic polynomials whose prime-to-`p` elements split into
    /// more than one orbit.
    pub split_classes: Vec<String>,
}

/// Enumerates the residue group for `n = 1`, groups its prime-to-`p`
/// elements by characteristic polynomial and computes conjugation orbits.
pub fn residue_conjugacy_suite(ctx: &RingContext) -> Result<ResidueSuiteReport> {
    use std::collections::HashMap;
    let f = field(ctx);
    let group = residue_group(ctx);
    let inverses: Vec<FMat> =
        group.iter().map(|g| g.inverse(&f).ok_or(Error::NonUnitDeterminant)).collect::<Result<_>>()?;
    let mut index: HashMap<FMat, usize> = HashMap::new();
    let mut classes: HashMap<Vec<Oe>, Vec<usize>> = HashMap::new();
    for (i, g) in group.iter().enumerate() {
        if prime_to_p(g, ctx)? {
            index.insert(g.clone(), i);
            classes.entry(g.charpoly(&f)).or_default().push(i);
        }
    }
    let mut orbit_of = vec![usize::MAX; group.len()];
    let mut orbits = 0;
    for &start in index.values() {
        if orbit_of[start] != usize::MAX {
            continue;
        }
        for (c, ci) in group.iter().zip(&inverses) {
            let x = c.mul(&group[start], &f).mul(ci, &f);
            orbit_of[index[&x]] = orbits;
        }
        orbits += 1;
    }
    let mut split: Vec<String> = classes
        .iter()
        .filter(|(_, members)| {
            let o = orbit_of[members[0]];
            members.iter().any(|&i| orbit_of[i] != o)
        })
        .map(|(cp, _)| cp.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
        .collect();
    split.sort();
    Ok(ResidueSuiteReport {
        group_order: group.len(),
        prime_to_p: index.len(),
        charpoly_classes: classes.len(),
        orbits,
        split_classes: split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_order_at_three() {
        let c = RingContext::new(3, 4).unwrap();
        assert_eq!(outer_unitary_residues(&c).len(), 96);
        let g = residue_group(&c);
        assert_eq!(g.len(), 7776);
        let f = field(&c);
        assert!(g.iter().take(200).all(|r| in_residue_group(r, &f)));
    }

    #[test]
    fn lifts_land_on_the_residue() {
        let c = RingContext::new(3, 4).unwrap();
        let g = residue_group(&c);
        for r in g.iter().step_by(613) {
            let x = lift_to_kmh(r, &c, 1).unwrap();
            assert!(membership(&x, Shape::KmH(1)).unwrap());
        }
    }

    #[test]
    fn residue_suite_at_three() {
        let c = RingContext::new(3, 4).unwrap();
        let r = residue_conjugacy_suite(&c).unwrap();
        assert_eq!(r.group_order, 7776);
        assert_eq!(r.prime_to_p, 3808);
        assert_eq!(r.orbits, r.charpoly_classes);
        assert!(r.split_classes.is_empty(), "{:?}", r.split_classes);
    }

    #[test]
    fn norm_in_h_matches_charpoly() {
        let c = RingContext::new(3, 6).unwrap();
        let st = TwistedElement::new(MatrixE::identity(&c, 3));
        let t = find_norm_in_h(&st, 1).unwrap();
        assert!(t.eq_at_prec(&MatrixE::identity(&c, 3)));
    }
}
