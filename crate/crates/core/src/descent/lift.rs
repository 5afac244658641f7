//! Hensel lifting of conjugators, one `p`-adic digit per sweep.
//!
//! Both variants run in the integral frame. The correction at level `j`
//! solves a linear system over `F_p` obtained by applying the linearized
//! conjugation to a `Z_p`-basis of the tangent lattice and reading
//! residues, so no derivative is written out by hand.

use crate::error::{Error, Result};
use crate::matrices::{from_y_frame, invert_level, j_matrix, to_y_frame, MatrixE};
use crate::residue::FMat;
use crate::ring::{EElement, Oe, RingContext};
use crate::sample::cayley;
use crate::twisted::TwistedElement;
use crate::zpk::{solve_mod_p, ZMat};

use super::group::{lift_to_kmh, outer_of};
use super::reduce::block_reduce_twisted;

/// The two conjugacy problems: `g t g^{-1} = t2` inside the level-`m`
/// unitary group, and `g s theta(g)^{-1} = s2` inside the level-`m` group.
#[derive(Clone, Copy, Debug)]
pub enum ConjugacyPair<'a> {
    Plain { t: &'a MatrixE, t2: &'a MatrixE },
    Twisted { s: &'a TwistedElement, s2: &'a TwistedElement },
}

#[derive(Clone, Debug)]
pub struct LiftOutcome {
    pub g: MatrixE,
    pub sweeps: u32,
    /// Index of the residue candidate that lifted.
    pub candidate: usize,
}

/// `Z_p`-basis of the unitary tangent lattice in the frame:
/// `A_{i,j} = U_{i,N-1-j} (-1)^{N-1-j} p^{m [i = mid]}` with `U` running
/// over a basis of integral skew-hermitian matrices.
fn unitary_tangent_basis(ctx: &RingContext, big: usize, m: u32) -> Vec<MatrixE> {
    let n = big / 2;
    let mut skews = Vec::new();
    for i in 0..big {
        for l in i..big {
            if i == l {
                skews.push(vec![(i, i, EElement::from_oe(ctx, ctx.eps()))]);
                continue;
            }
            for x in [ctx.one(), ctx.w()] {
                skews.push(vec![(i, l, x), (l, i, -x.conj())]);
            }
        }
    }
    skews
        .into_iter()
        .map(|entries| {
            let mut a = MatrixE::zeros(ctx, big, big);
            for (i, l, x) in entries {
                let j = big - 1 - l;
                let s = if l % 2 == 0 { x } else { -x };
                a.set(i, j, s.mul_p_pow(if i == n { m as i32 } else { 0 }));
            }
            a
        })
        .collect()
}

fn residue_coords(r: &FMat) -> Vec<u64> {
    r.data.iter().flat_map(|x| [x.a0, x.a1]).collect()
}

fn linear_system(images: &[FMat]) -> ZMat {
    let rows = 2 * images[0].n * images[0].n;
    let mut a = ZMat::zeros(rows, images.len());
    for (c, img) in images.iter().enumerate() {
        for (r, v) in residue_coords(img).into_iter().enumerate() {
            a.set(r, c, v);
        }
    }
    a
}

fn combine(ctx: &RingContext, basis: &[MatrixE], coeffs: &[u64]) -> MatrixE {
    let big = basis[0].n();
    let mut x = MatrixE::zeros(ctx, big, big);
    for (b, &c) in basis.iter().zip(coeffs) {
        if c != 0 {
            x = &x + &b.scale(EElement::from_oe(ctx, Oe::new(ctx, c, 0)));
        }
    }
    x
}

/// `err / p^j` read mod `p`, with `j` the valuation of `err`.
fn leading_digit(err: &MatrixE) -> Result<(u32, FMat)> {
    let j = err.min_valuation();
    if j < 1 {
        return Err(Error::LiftObstruction(0));
    }
    Ok((j as u32, FMat::of(&err.mul_p_pow(-j))?))
}

fn negate_coords(v: Vec<u64>, p: u64) -> Vec<u64> {
    v.into_iter().map(|x| (p - x % p) % p).collect()
}

fn lift_plain(t: &MatrixE, t2: &MatrixE, g0: &MatrixE, m: u32) -> Result<(MatrixE, u32)> {
    let ctx = *t.ctx();
    let big = t.n();
    let (yt, yt2) = (to_y_frame(t, m), to_y_frame(t2, m));
    let yt2i = yt2.invert()?;
    let basis = unitary_tangent_basis(&ctx, big, m);
    let images: Vec<FMat> =
        basis.iter().map(|b| FMat::of(&(b - &(&(&yt2 * b) * &yt2i)))).collect::<Result<_>>()?;
    let a = linear_system(&images);
    let id = MatrixE::identity(&ctx, big);
    let mut g = to_y_frame(g0, m);
    let mut sweeps = 0;
    loop {
        let err = &(&(&(&g * &yt) * &g.invert()?) * &yt2i) - &id;
        if err.is_zero() {
            return Ok((from_y_frame(&g, m), sweeps));
        }
        let (j, e) = leading_digit(&err)?;
        if sweeps + 1 >= ctx.k() {
            return Err(Error::LiftObstruction(j));
        }
        let rhs = negate_coords(residue_coords(&e), ctx.p());
        let c = solve_mod_p(&a, &rhs, ctx.p()).ok_or(Error::LiftObstruction(j))?;
        let x = combine(&ctx, &basis, &c).mul_p_pow(j as i32);
        g = &cayley(&x)? * &g;
        sweeps += 1;
    }
}

/// `J_o X^* J_o` with `J_o` the outer part of the form (an involution).
fn sigma_outer(x: &MatrixE, jo: &MatrixE) -> MatrixE {
    &(jo * &x.star()) * jo
}

fn general_basis(ctx: &RingContext, size: usize) -> Vec<MatrixE> {
    let mut out = Vec::with_capacity(2 * size * size);
    for i in 0..size {
        for j in 0..size {
            for x in [ctx.one(), ctx.w()] {
                let mut a = MatrixE::zeros(ctx, size, size);
                a.set(i, j, x);
                out.push(a);
            }
        }
    }
    out
}

/// Newton for `h d1 sigma_o(h) = d2` in `GL_{2n}(o_E)`, starting from `h`.
fn lift_outer_twisted(d1: &MatrixE, d2: &MatrixE, mut h: MatrixE, jo: &MatrixE) -> Result<(MatrixE, u32)> {
    let ctx = *d1.ctx();
    let basis = general_basis(&ctx, d1.n());
    let images: Vec<FMat> =
        basis.iter().map(|b| FMat::of(&(&(b * d2) + &(d2 * &sigma_outer(b, jo))))).collect::<Result<_>>()?;
    let a = linear_system(&images);
    let id = MatrixE::identity(&ctx, d1.n());
    let mut sweeps = 0;
    loop {
        let err = &(&(&h * d1) * &sigma_outer(&h, jo)) - d2;
        if err.is_zero() {
            return Ok((h, sweeps));
        }
        let (j, e) = leading_digit(&err)?;
        if sweeps + 1 >= ctx.k() {
            return Err(Error::LiftObstruction(j));
        }
        let rhs = negate_coords(residue_coords(&e), ctx.p());
        let c = solve_mod_p(&a, &rhs, ctx.p()).ok_or(Error::LiftObstruction(j))?;
        let x = combine(&ctx, &basis, &c).mul_p_pow(j as i32);
        h = &(&id + &x) * &h;
        sweeps += 1;
    }
}

fn twisted_residue_ok(h: &FMat, d1: &FMat, d2: &FMat, jo: &FMat, f: &RingContext) -> bool {
    h.mul(d1, f).mul(&jo.mul(&h.star(f), f).mul(jo, f), f) == *d2
}

/// Residue candidates for the outer twisted problem: the supplied guess
/// first, then (for `n = 1`) an exhaustive scan of `GL_2(F_{q^2})`.
fn outer_residue_candidates(
    guess: Option<FMat>,
    d1: &FMat,
    d2: &FMat,
    jo: &FMat,
    f: &RingContext,
) -> Vec<FMat> {
    let mut out = Vec::new();
    if let Some(g) = guess {
        if !g.det(f).is_zero() && twisted_residue_ok(&g, d1, d2, jo, f) {
            out.push(g);
        }
    }
    if d1.n == 2 {
        let all: Vec<Oe> = std::iter::once(Oe::zero()).chain(residue_units_of(f)).collect();
        for &a in &all {
            for &b in &all {
                for &c in &all {
                    for &d in &all {
                        let h = FMat { n: 2, data: vec![a, b, c, d] };
                        if !h.det(f).is_zero() && twisted_residue_ok(&h, d1, d2, jo, f) {
                            out.push(h);
                            if out.len() >= 8 {
                                return out;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn residue_units_of(f: &RingContext) -> Vec<Oe> {
    f.residue_units()
}

/// Twisted conjugator through block shape: both sides are reduced, the
/// outer blocks are matched in `GL_{2n}(o_E)` (where the twisted
/// centralizer is smooth and residue Newton converges), and the result is
/// conjugated back.
fn lift_twisted(s: &TwistedElement, s2: &TwistedElement, g0: &MatrixE, m: u32) -> Result<(MatrixE, u32)> {
    let ctx = *s.delta.ctx();
    let f = crate::residue::field(&ctx);
    let r1 = block_reduce_twisted(s, m)?;
    let r2 = block_reduce_twisted(s2, m)?;
    let d1 = outer_of(&to_y_frame(&r1.reduced.delta, m));
    let d2 = outer_of(&to_y_frame(&r2.reduced.delta, m));
    let jo = outer_of(&j_matrix(&ctx, s.delta.n()));
    let (fd1, fd2, fjo) = (FMat::of(&d1)?, FMat::of(&d2)?, FMat::of(&jo)?);
    let guess = to_y_frame(&(&(&invert_level(&r2.k, m)? * g0) * &r1.k), m);
    let guess = if guess.is_integral() { Some(outer_residue(&FMat::of(&guess)?)) } else { None };
    let mut last = Error::LiftObstruction(0);
    for h0 in outer_residue_candidates(guess, &fd1, &fd2, &fjo, &f) {
        match lift_outer_twisted(&d1, &d2, h0.lift(&ctx), &jo) {
            Ok((h, sweeps)) => {
                let yh = from_y_frame(&embed_outer_matrix(&h), m);
                let g = &(&r2.k * &yh) * &invert_level(&r1.k, m)?;
                return Ok((g, sweeps));
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn outer_residue(r: &FMat) -> FMat {
    super::group::outer_block(r)
}

fn embed_outer_matrix(h: &MatrixE) -> MatrixE {
    let big = h.n() + 1;
    let n = big / 2;
    let src = |i: usize| {
        if i < n {
            Some(i)
        } else if i == n {
            None
        } else {
            Some(i - 1)
        }
    };
    MatrixE::from_fn(h.ctx(), big, big, |i, j| match (src(i), src(j)) {
        (Some(a), Some(b)) => h.get(a, b),
        (None, None) => h.ctx().one(),
        _ => h.ctx().zero(),
    })
}

/// Starting conjugator for the unitary problem from a frame residue.
pub fn plain_start(r: &FMat, ctx: &RingContext, m: u32) -> Result<MatrixE> {
    lift_to_kmh(r, ctx, m)
}

/// Starting conjugator for the twisted problem: `g` read mod `p` in the
/// frame except the middle row, kept mod `p^{m+1}`. The residue of
/// `g s theta(g)^{-1}` depends on exactly these digits.
pub fn twisted_start(g: &MatrixE, m: u32) -> MatrixE {
    let ctx = *g.ctx();
    let y = to_y_frame(g, m);
    let n = y.n() / 2;
    let cut = |x: EElement, e: u32| {
        let u = x.numerator().reduce(e, &ctx);
        EElement::from_oe(&ctx, u)
    };
    let y = MatrixE::from_fn(&ctx, y.n(), y.n(), |i, j| cut(y.get(i, j), if i == n { m + 1 } else { 1 }));
    from_y_frame(&y, m)
}

/// Refines starting conjugators (from [`plain_start`] or
/// [`twisted_start`]) to a conjugator at full precision, trying them in
/// order.
pub fn conjugator_lift(pair: ConjugacyPair<'_>, starts: &[MatrixE], m: u32) -> Result<LiftOutcome> {
    let mut last = Error::LiftObstruction(0);
    for (idx, g0) in starts.iter().enumerate() {
        let attempt = match pair {
            ConjugacyPair::Plain { t, t2 } => lift_plain(t, t2, g0, m),
            ConjugacyPair::Twisted { s, s2 } => lift_twisted(s, s2, g0, m),
        };
        match attempt {
            Ok((g, sweeps)) => return Ok(LiftOutcome { g, sweeps, candidate: idx }),
            Err(e) => last = e,
        }
    }
    Err(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{invert_level, membership, sigma_frame, Shape};
    use crate::sample::{random_km, random_kmh};
    use crate::twisted::{tjd, tjd_twisted, twisted_conjugate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tangent_basis_is_unitary_lie() {
        let c = RingContext::new(3, 5).unwrap();
        let jm = crate::matrices::j_frame(&c, 3, 1);
        let basis = unitary_tangent_basis(&c, 3, 1);
        assert_eq!(basis.len(), 9);
        for a in &basis {
            assert!((&(a * &jm) + &(&jm * &a.star())).is_zero());
        }
    }

    #[test]
    fn identity_pair_needs_no_sweep() {
        let c = RingContext::new(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = tjd(&random_kmh(&c, 1, 1, &mut rng), 1).unwrap().ss;
        let start = plain_start(&FMat::identity(3), &c, 1).unwrap();
        let out = conjugator_lift(ConjugacyPair::Plain { t: &t, t2: &t }, &[start], 1).unwrap();
        assert_eq!(out.sweeps, 0);
        assert!(out.g.eq_at_prec(&MatrixE::identity(&c, 3)));
    }

    #[test]
    fn plain_round_trip() {
        let c = RingContext::new(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let t = tjd(&random_kmh(&c, 1, 1, &mut rng), 1).unwrap().ss;
            let k0 = random_kmh(&c, 1, 1, &mut rng);
            let t2 = from_y_frame(
                &(&(&to_y_frame(&k0, 1) * &to_y_frame(&t, 1)) * &to_y_frame(&k0, 1).invert().unwrap()),
                1,
            );
            let r = FMat::of(&to_y_frame(&k0, 1)).unwrap();
            let start = plain_start(&r, &c, 1).unwrap();
            let out = conjugator_lift(ConjugacyPair::Plain { t: &t, t2: &t2 }, &[start], 1).unwrap();
            assert!(out.sweeps <= 3);
            assert!(membership(&out.g, Shape::KmH(1)).unwrap());
            let back = &(&(&to_y_frame(&out.g, 1) * &to_y_frame(&t, 1))
                * &to_y_frame(&out.g, 1).invert().unwrap())
                - &to_y_frame(&t2, 1);
            assert!(back.is_zero());
        }
    }

    #[test]
    fn twisted_round_trip() {
        let c = RingContext::new(3, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let s = tjd_twisted(&TwistedElement::new(random_km(&c, 1, 1, &mut rng)), 1).unwrap().ss;
            let st = TwistedElement::new(s);
            let k0 = random_km(&c, 1, 1, &mut rng);
            let yk = to_y_frame(&k0, 1);
            let st2 = TwistedElement::new(from_y_frame(
                &(&(&yk * &to_y_frame(&st.delta, 1)) * &sigma_frame(&yk, 1)),
                1,
            ));
            let _ = twisted_conjugate(&k0, &st).unwrap();
            let start = twisted_start(&k0, 1);
            let out = conjugator_lift(ConjugacyPair::Twisted { s: &st, s2: &st2 }, &[start], 1).unwrap();
            assert!(out.sweeps <= 5);
            assert!(membership(&out.g, Shape::Km(1)).unwrap());
            let ys = to_y_frame(&st.delta, 1);
            let yg = to_y_frame(&out.g, 1);
            let back = &(&(&yg * &ys) * &sigma_frame(&yg, 1)) - &to_y_frame(&st2.delta, 1);
            assert!(back.is_zero());
            let _ = invert_level(&out.g, 1).unwrap();
        }
    }
}
