//! Random elements of the compact groups, for tests and campaigns.
//!
//! Unitary elements are built in the integral frame as Cayley transforms
//! of Lie algebra elements times diagonal torus elements; everything is
//! exact at the storage precision.

use rand::Rng;

use crate::error::Result;
use crate::matrices::{block_of, from_y_frame, j_frame, MatrixE};
use crate::ring::{EElement, Oe, RingContext};

pub fn random_oe<R: Rng + ?Sized>(ctx: &RingContext, rng: &mut R) -> Oe {
    let m = ctx.modulus();
    Oe::new(ctx, rng.gen_range(0..m), rng.gen_range(0..m))
}

pub fn random_unit<R: Rng + ?Sized>(ctx: &RingContext, rng: &mut R) -> Oe {
    loop {
        let x = random_oe(ctx, rng);
        if x.is_unit(ctx) {
            return x;
        }
    }
}

/// Random element of `o_F = Z_p / p^k`.
pub fn random_zp<R: Rng + ?Sized>(ctx: &RingContext, rng: &mut R) -> Oe {
    Oe::new(ctx, rng.gen_range(0..ctx.modulus()), 0)
}

pub fn random_teichmuller<R: Rng + ?Sized>(ctx: &RingContext, rng: &mut R) -> Oe {
    let units = ctx.residue_units();
    units[rng.gen_range(0..units.len())].teichmuller(ctx)
}

fn elt(ctx: &RingContext, x: Oe) -> EElement {
    EElement::from_oe(ctx, x)
}

/// Random integral matrix in the integral frame of the level-`m` group:
/// middle row congruent to `e_mid` mod `p^m`, unit determinant.
pub fn random_km_frame<R: Rng + ?Sized>(ctx: &RingContext, n: usize, m: u32, rng: &mut R) -> MatrixE {
    let big = 2 * n + 1;
    loop {
        let y = MatrixE::from_fn(ctx, big, big, |i, j| {
            let x = random_oe(ctx, rng);
            if i == n {
                let base = if j == n { Oe::one() } else { Oe::zero() };
                elt(ctx, base.add(&x.mul_p_pow(m, ctx), ctx))
            } else {
                elt(ctx, x)
            }
        });
        if y.det().is_unit() {
            return y;
        }
    }
}

/// Random element of the level-`m` group of `GL_N(E)`.
pub fn random_km<R: Rng + ?Sized>(ctx: &RingContext, n: usize, m: u32, rng: &mut R) -> MatrixE {
    from_y_frame(&random_km_frame(ctx, n, m, rng), m)
}

/// Random skew-hermitian integral matrix with the middle row and column
/// divisible by `p^m` (middle entry by `p^{2m}`).
fn random_skew<R: Rng + ?Sized>(ctx: &RingContext, big: usize, m: u32, scale: u32, rng: &mut R) -> MatrixE {
    let n = big / 2;
    let eps = ctx.eps();
    let mut s = MatrixE::zeros(ctx, big, big);
    for i in 0..big {
        for j in i..big {
            let x = if i == j { eps.mul(&random_zp(ctx, rng), ctx) } else { random_oe(ctx, rng) };
            let bump = (block_of(i, n) == 1) as u32 * m + (block_of(j, n) == 1) as u32 * m + scale;
            let x = elt(ctx, x.mul_p_pow(bump, ctx));
            s.set(i, j, x);
            if i != j {
                s.set(j, i, -x.conj());
            }
        }
    }
    s
}

/// Random element `Y` of the unitary Lie algebra in the integral frame:
/// `Y Jm + Jm Y^* = 0`, `Y` integral with middle row `0 mod p^m`.
/// With `scale > 0` the element is divisible by `p^scale`.
pub fn random_lie_frame<R: Rng + ?Sized>(
    ctx: &RingContext,
    n: usize,
    m: u32,
    scale: u32,
    rng: &mut R,
) -> MatrixE {
    let big = 2 * n + 1;
    let s = random_skew(ctx, big, m, scale, rng);
    let jm_inv = j_frame(ctx, big, m).invert().expect("form is invertible");
    &s * &jm_inv
}

/// `(I + A/2)(I - A/2)^{-1}`.
pub fn cayley(a: &MatrixE) -> Result<MatrixE> {
    let c = *a.ctx();
    let half = a.scale(c.int(2).inv()?);
    let id = MatrixE::identity(&c, a.n());
    if a.is_integral() && !(&id - &half).det().is_unit() {
        return Err(crate::error::Error::NonUnitDeterminant);
    }
    Ok(&(&id + &half) * &(&id - &half).invert()?)
}

/// `diag(u, ..., 1, ..., conj(u)^{-1})` with independent units on the top
/// block, mirrored to keep the form.
pub fn torus_element(ctx: &RingContext, units: &[Oe]) -> MatrixE {
    let n = units.len();
    let big = 2 * n + 1;
    let mut d = vec![ctx.one(); big];
    for (i, u) in units.iter().enumerate() {
        let u = elt(ctx, *u);
        d[i] = u;
        d[big - 1 - i] = u.conj().inv().expect("unit");
    }
    MatrixE::diag(ctx, &d)
}

/// Random element of the level-`m` unitary group, in the integral frame.
pub fn random_kmh_frame<R: Rng + ?Sized>(ctx: &RingContext, n: usize, m: u32, rng: &mut R) -> MatrixE {
    let units: Vec<Oe> = (0..n).map(|_| random_unit(ctx, rng)).collect();
    let t = torus_element(ctx, &units);
    let a = loop {
        let y = random_lie_frame(ctx, n, m, 0, rng);
        if let Ok(c) = cayley(&y) {
            break c;
        }
    };
    let b = loop {
        let y = random_lie_frame(ctx, n, m, 0, rng);
        if let Ok(c) = cayley(&y) {
            break c;
        }
    };
    &(&a * &t) * &b
}

pub fn random_kmh<R: Rng + ?Sized>(ctx: &RingContext, n: usize, m: u32, rng: &mut R) -> MatrixE {
    from_y_frame(&random_kmh_frame(ctx, n, m, rng), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::{invert_level, is_unitary, membership, theta, to_y_frame, Shape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_members_are_members() {
        let ctx = RingContext::new(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in 1..=2 {
            for _ in 0..10 {
                let x = random_km(&ctx, 1, m, &mut rng);
                assert!(membership(&x, Shape::Km(m)).unwrap());
                let h = random_kmh(&ctx, 1, m, &mut rng);
                assert!(membership(&h, Shape::KmH(m)).unwrap(), "{h}");
            }
        }
    }

    #[test]
    fn inversion_keeps_the_level() {
        let ctx = RingContext::new(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = 2;
        for _ in 0..10 {
            let x = random_km(&ctx, 1, m, &mut rng);
            let plain = x.invert().unwrap();
            let framed = invert_level(&x, m).unwrap();
            let id = MatrixE::identity(&ctx, 3);
            assert!((&x * &plain).eq_at_prec(&id));
            assert!((&x * &framed).eq_at_prec(&id));
            assert!(membership(&framed, Shape::Km(m)).unwrap());
            assert!(to_y_frame(&framed, m).prec() >= 8 - 2 * m as i32, "{}", framed.prec());
        }
    }

    #[test]
    fn unitary_elements_are_theta_fixed() {
        let ctx = RingContext::new(5, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_kmh(&ctx, 1, 1, &mut rng);
        assert!(is_unitary(&h).unwrap());
        assert!(theta(&h).unwrap().eq_at_prec(&h));
    }
}
