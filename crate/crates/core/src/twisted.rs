//! The twisted space `G x| theta`: twisted conjugation, the norm map,
//! powers, and the topological Jordan decomposition.
//!
//! Group-theoretic work on compact elements happens in the integral frame
//! of the level-`m` group (see [`crate::matrices::to_y_frame`]), where
//! powers and inverses cost no precision.

use crate::error::{Error, Result};
use crate::matrices::{from_y_frame, theta, theta_frame, to_y_frame, MatrixE};
use crate::residue::{field, FMat};
use crate::ring::RingContext;

/// Default cap on the number of multiplications spent finding a residue
/// order.
pub const ORDER_CAP: u64 = 1_000_000;

/// `delta x| theta`.
#[derive(Clone, Debug)]
pub struct TwistedElement {
    pub delta: MatrixE,
}

impl TwistedElement {
    pub fn new(delta: MatrixE) -> Self {
        TwistedElement { delta }
    }

    /// `(s x| theta)^{-1} = theta(s)^{-1} x| theta`.
    pub fn inverse(&self) -> Result<TwistedElement> {
        Ok(TwistedElement::new(theta(&self.delta)?.invert()?))
    }
}

/// `(g delta theta(g)^{-1}) x| theta`.
pub fn twisted_conjugate(g: &MatrixE, dt: &TwistedElement) -> Result<TwistedElement> {
    let tg = theta(g)?.invert()?;
    Ok(TwistedElement::new(&(g * &dt.delta) * &tg))
}

/// Twisted conjugation computed in the integral frame of the level-`m`
/// group, where `theta(g)^{-1}` is `sigma` and needs no inversion.
pub fn twisted_conjugate_level(g: &MatrixE, dt: &TwistedElement, m: u32) -> TwistedElement {
    let yg = to_y_frame(g, m);
    let y = &(&yg * &to_y_frame(&dt.delta, m)) * &crate::matrices::sigma_frame(&yg, m);
    TwistedElement::new(from_y_frame(&y, m))
}

/// `N(delta) = delta theta(delta)`, the square of `delta x| theta`.
pub fn norm_of(dt: &TwistedElement) -> Result<MatrixE> {
    Ok(&dt.delta * &theta(&dt.delta)?)
}

/// A power of a twisted element: even powers are plain group elements.
#[derive(Clone, Debug)]
pub enum TwistedPower {
    Plain(MatrixE),
    Twisted(TwistedElement),
}

impl TwistedPower {
    pub fn matrix(&self) -> &MatrixE {
        match self {
            TwistedPower::Plain(m) => m,
            TwistedPower::Twisted(t) => &t.delta,
        }
    }
}

/// `dt^j`: `N(delta)^i` for `j = 2i`, `N(delta)^i delta x| theta` for
/// `j = 2i + 1`.
pub fn twisted_power(dt: &TwistedElement, j: u64) -> Result<TwistedPower> {
    let nd = norm_of(dt)?;
    let half = nd.pow(j / 2);
    Ok(if j.is_multiple_of(2) {
        TwistedPower::Plain(half)
    } else {
        TwistedPower::Twisted(TwistedElement::new(&half * &dt.delta))
    })
}

/// Topological Jordan decomposition `x = ss * unip`.
#[derive(Clone, Debug)]
pub struct Tjd {
    /// Semisimple part; for a twisted input this is `s` in `s x| theta`.
    pub ss: MatrixE,
    pub unip: MatrixE,
    /// Order of the semisimple part, prime to `p` (for twisted inputs this
    /// counts the `theta` factor, so it is even).
    pub order_prime_to_p: u64,
    /// Exponent `c` used: `ss = x^{p^c}`.
    pub exponent: u32,
}

fn split_p(mut r: u64, p: u64) -> (u64, u32) {
    let mut a = 0;
    while r.is_multiple_of(p) {
        r /= p;
        a += 1;
    }
    (r, a)
}

/// Multiplicative order of `p` modulo `r`.
fn order_mod(p: u64, r: u64) -> u32 {
    if r == 1 {
        return 1;
    }
    let (mut x, mut c) = (p % r, 1);
    while x != 1 {
        x = x * p % r;
        c += 1;
    }
    c
}

/// Smallest `c >= a + k + 1` with `p^c = 1 mod r'`.
pub fn tjd_exponent(p: u64, r_prime: u64, a: u32, k: u32, extra: u32) -> u32 {
    let ord = order_mod(p, r_prime);
    let need = a + k + 1 + extra;
    need.div_ceil(ord) * ord
}

fn compact_frame_check(y: &MatrixE) -> Result<FMat> {
    if !y.is_integral() {
        return Err(Error::NotInCompact("entry valuation below the lattice bound".into()));
    }
    let r = FMat::of(y)?;
    if r.det(&field(y.ctx())).is_zero() {
        return Err(Error::NotInCompact("residue is singular".into()));
    }
    Ok(r)
}

fn p_power_iterate(y: &MatrixE, p: u64, c: u32) -> MatrixE {
    let mut s = y.clone();
    for _ in 0..c {
        s = s.pow(p);
    }
    s
}

/// TJD of an integral matrix with invertible residue (an element of the
/// integral frame). `extra` enlarges the exponent beyond the minimum.
pub fn tjd_frame(y: &MatrixE, extra: u32) -> Result<Tjd> {
    let ctx: RingContext = *y.ctx();
    let f = field(&ctx);
    let r = compact_frame_check(y)?.order(&f, ORDER_CAP)?;
    let (r_prime, a) = split_p(r, ctx.p());
    let c = tjd_exponent(ctx.p(), r_prime, a, ctx.k(), extra);
    let ss = p_power_iterate(y, ctx.p(), c);
    let unip = &ss.invert()? * y;
    Ok(Tjd { ss, unip, order_prime_to_p: r_prime, exponent: c })
}

/// TJD of an element of the level-`m` group (`m = 0`: `GL_N(o_E)`).
pub fn tjd(x: &MatrixE, m: u32) -> Result<Tjd> {
    let t = tjd_frame(&to_y_frame(x, m), 0)?;
    Ok(Tjd { ss: from_y_frame(&t.ss, m), unip: from_y_frame(&t.unip, m), ..t })
}

/// `(s x| theta)^p` in the integral frame.
fn twisted_p_power_frame(s: &MatrixE, p: u64, m: u32) -> Result<MatrixE> {
    let ns = s * &theta_frame(s, m)?;
    Ok(&ns.pow((p - 1) / 2) * s)
}

/// Twisted TJD in the integral frame: `delta x| theta = (s x| theta) u`
/// with `u = theta(s^{-1} delta)` topologically unipotent.
pub fn tjd_twisted_frame(y: &MatrixE, m: u32, extra: u32) -> Result<Tjd> {
    let ctx = *y.ctx();
    let f = field(&ctx);
    compact_frame_check(y)?;
    let ny = y * &theta_frame(y, m)?;
    let r = compact_frame_check(&ny)?.order(&f, ORDER_CAP)?;
    let (r_prime, a) = split_p(r, ctx.p());
    // the residue of delta x| theta has order dividing 2 r' p^a, not r' p^a
    let c = tjd_exponent(ctx.p(), 2 * r_prime, a, ctx.k(), extra);
    let mut s = y.clone();
    for _ in 0..c {
        s = twisted_p_power_frame(&s, ctx.p(), m)?;
    }
    let unip = theta_frame(&(&s.invert()? * y), m)?;
    Ok(Tjd { ss: s, unip, order_prime_to_p: 2 * r_prime, exponent: c })
}

pub fn tjd_twisted(dt: &TwistedElement, m: u32) -> Result<Tjd> {
    let t = tjd_twisted_frame(&to_y_frame(&dt.delta, m), m, 0)?;
    Ok(Tjd { ss: from_y_frame(&t.ss, m), unip: from_y_frame(&t.unip, m), ..t })
}

/// Whether the residue of `x` (read in the level-`m` frame) is unipotent,
/// equivalently `x^{p^c} -> 1`.
pub fn is_top_unipotent(x: &MatrixE, m: u32) -> Result<bool> {
    let y = to_y_frame(x, m);
    let r = compact_frame_check(&y)?;
    Ok(r.is_unipotent(&field(x.ctx())))
}

/// Whether the unipotent part of the TJD is trivial at precision.
pub fn is_top_semisimple(x: &MatrixE, m: u32) -> Result<bool> {
    let t = tjd_frame(&to_y_frame(x, m), 0)?;
    Ok(t.unip.eq_at_prec(&MatrixE::identity(x.ctx(), x.n())))
}

pub fn is_top_semisimple_twisted(dt: &TwistedElement, m: u32) -> Result<bool> {
    let t = tjd_twisted_frame(&to_y_frame(&dt.delta, m), m, 0)?;
    Ok(t.unip.eq_at_prec(&MatrixE::identity(dt.delta.ctx(), dt.delta.n())))
}

/// Square root of a topologically unipotent element: `v^e` with
/// `2e = 1 mod p^c` and `v^{p^c} = 1` at precision.
pub fn unipotent_sqrt(v: &MatrixE, m: u32) -> Result<MatrixE> {
    let ctx = *v.ctx();
    let y = to_y_frame(v, m);
    let r = compact_frame_check(&y)?;
    let f = field(&ctx);
    if !r.is_unipotent(&f) {
        return Err(Error::NotTopUnipotent);
    }
    let p = ctx.p() as u128;
    let order = r.order(&f, ORDER_CAP)?;
    let (_, a) = split_p(order, ctx.p());
    let c = a + ctx.k();
    let pc = p.pow(c);
    let e = pc.div_ceil(2);
    Ok(from_y_frame(&pow_u128(&y, e), m))
}

fn pow_u128(x: &MatrixE, mut e: u128) -> MatrixE {
    let mut r = MatrixE::identity(x.ctx(), x.n());
    let mut b = x.clone();
    while e > 0 {
        if e & 1 == 1 {
            r = &r * &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    r
}

/// Whether a monic polynomial (ascending coefficients) has root multiset
/// stable under `lambda -> conj(lambda)^{-1}`: `c_j = conj(c_{N-j}) /
/// conj(c_0)` for all `j`.
pub fn is_conj_self_reciprocal(f: &[crate::ring::EElement]) -> Result<bool> {
    let n = f.len() - 1;
    let c0 = f[0].conj().inv()?;
    Ok((0..=n).all(|j| f[j].eq_at_prec(&(f[n - j].conj() * c0))))
}
