//! Truncated arithmetic in `Z_p` and in the ring of integers of the
//! unramified quadratic extension `E = Q_p(w)`, `g(w) = 0`.
//!
//! Integral values live in [`Oe`]: pairs `a0 + a1*w` with coordinates in
//! `Z/p^k`. Field values are [`EElement`]s `p^-d * u` that carry their own
//! absolute precision, so that every identity checked downstream is
//! checked only at the digits that are actually known.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default precision floor: fewer trusted digits than this is an error.
pub const DEFAULT_FLOOR: i32 = 2;

/// Largest modulus we accept; keeps every product inside `u64`.
const MAX_MODULUS: u64 = 1 << 31;

pub(crate) fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Inverse of `a` modulo `m`, if it exists.
pub(crate) fn mod_inv(a: u64, m: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 && !(m == 1) {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

fn is_square_mod_p(a: u64, p: u64) -> bool {
    let a = a % p;
    a == 0 || pow_mod(a, (p - 1) / 2, p) == 1
}

/// The ambient truncated world: odd prime `p`, storage precision `k`
/// (everything integral is known mod `p^k`), and the defining quadratic
/// `g(w) = w^2 + g1*w + g0`, irreducible mod `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingContext {
    p: u64,
    k: u32,
    modulus: u64,
    g1: u64,
    g0: u64,
    floor: i32,
}

impl RingContext {
    /// Context with the default quadratic: `w^2 + 1` when `p = 3 mod 4`,
    /// otherwise `w^2 - r` for the least non-residue `r`.
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::ConfigInvalid(format!("p = {p} is not an odd prime")));
        }
        let g0 = if p % 4 == 3 {
            1
        } else {
            let r = (2..p).find(|&r| !is_square_mod_p(r, p)).unwrap();
            Self::modulus_for(p, k)? - r
        };
        Self::with_quadratic(p, k, 0, g0)
    }

    /// Context for an explicit monic quadratic `w^2 + g1*w + g0`.
    pub fn with_quadratic(p: u64, k: u32, g1: u64, g0: u64) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::ConfigInvalid(format!("p = {p} is not an odd prime")));
        }
        if k == 0 {
            return Err(Error::ConfigInvalid("precision k must be positive".into()));
        }
        let modulus = Self::modulus_for(p, k)?;
        let (g1, g0) = (g1 % modulus, g0 % modulus);
        // discriminant g1^2 - 4 g0 must be a non-residue mod p
        let disc = (g1 * g1 % p + 4 * (p - g0 % p)) % p;
        if is_square_mod_p(disc, p) {
            return Err(Error::ConfigInvalid(format!("w^2 + {g1}w + {g0} is not irreducible mod {p}")));
        }
        Ok(Self { p, k, modulus, g1, g0, floor: DEFAULT_FLOOR })
    }

    fn modulus_for(p: u64, k: u32) -> Result<u64> {
        let mut m: u64 = 1;
        for _ in 0..k {
            m = m.checked_mul(p).filter(|&m| m < MAX_MODULUS).ok_or_else(|| {
                Error::ConfigInvalid(format!("p^k = {p}^{k} exceeds the supported modulus"))
            })?;
        }
        Ok(m)
    }

    pub fn with_floor(mut self, floor: i32) -> Self {
        self.floor = floor;
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn modulus(&self) -> u64 {
        self.modulus
    }
    pub fn floor(&self) -> i32 {
        self.floor
    }
    /// Residue field size of `F = Q_p`.
    pub fn q(&self) -> u64 {
        self.p
    }
    /// Coefficients `(g1, g0)` of the defining quadratic.
    pub fn quadratic(&self) -> (u64, u64) {
        (self.g1, self.g0)
    }

    pub fn pow_p(&self, e: u32) -> u64 {
        if e >= self.k {
            return 0;
        }
        self.p.pow(e)
    }

    #[inline]
    pub(crate) fn red(&self, x: u64) -> u64 {
        x % self.modulus
    }
    #[inline]
    pub(crate) fn add_z(&self, a: u64, b: u64) -> u64 {
        (a + b) % self.modulus
    }
    #[inline]
    pub(crate) fn sub_z(&self, a: u64, b: u64) -> u64 {
        (a + self.modulus - b) % self.modulus
    }
    #[inline]
    pub(crate) fn mul_z(&self, a: u64, b: u64) -> u64 {
        a * b % self.modulus
    }

    /// `p`-adic valuation of an integer residue, capped at `k`.
    pub fn val_z(&self, a: u64) -> u32 {
        let a = a % self.modulus;
        if a == 0 {
            return self.k;
        }
        let mut v = 0;
        let mut a = a;
        while a.is_multiple_of(self.p) {
            a /= self.p;
            v += 1;
        }
        v
    }

    /// The conjugate root `wbar = -g1 - w` of `g`.
    pub fn wbar(&self) -> Oe {
        Oe::new(self, self.modulus - self.g1, self.modulus - 1)
    }

    /// `eps = w - wbar`, a unit with `conj(eps) = -eps`.
    pub fn eps(&self) -> Oe {
        Oe::new(self, self.g1, 2)
    }

    pub fn zero(&self) -> EElement {
        EElement::from_oe(self, Oe::zero())
    }
    pub fn one(&self) -> EElement {
        EElement::from_oe(self, Oe::one())
    }
    pub fn int(&self, a: i64) -> EElement {
        EElement::from_oe(self, Oe::from_int(self, a))
    }
    pub fn elt(&self, a0: i64, a1: i64) -> EElement {
        EElement::from_oe(self, Oe::from_ints(self, a0, a1))
    }
    /// `p^e` as a field element; negative `e` gives a denominator.
    pub fn p_power(&self, e: i32) -> EElement {
        if e >= 0 {
            self.one().shl(e as u32)
        } else {
            EElement::with_denominator(self, (-e) as u32, Oe::one())
        }
    }
    pub fn w(&self) -> EElement {
        EElement::from_oe(self, Oe::new(self, 0, 1))
    }

    /// Every nonzero residue class of `F_{q^2}`, in a fixed order.
    pub fn residue_units(&self) -> Vec<Oe> {
        let p = self.p;
        let mut out = Vec::with_capacity((p * p - 1) as usize);
        for a1 in 0..p {
            for a0 in 0..p {
                if a0 == 0 && a1 == 0 {
                    continue;
                }
                out.push(Oe::new(self, a0, a1));
            }
        }
        out
    }

    /// Parses `"a0+a1*w mod p^k"` or `"p^-d*(a0+a1*w mod p^k)@prec"`.
    pub fn parse_element(&self, s: &str) -> Result<EElement> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("p^-") {
            let (d, rest) =
                rest.split_once("*(").ok_or_else(|| Error::Parse(format!("missing '*(' in {s:?}")))?;
            let (inner, prec) =
                rest.rsplit_once(")@").ok_or_else(|| Error::Parse(format!("missing ')@' in {s:?}")))?;
            let d: u32 = d.parse().map_err(|_| Error::Parse(format!("bad exponent {d:?}")))?;
            let prec: i32 = prec.parse().map_err(|_| Error::Parse(format!("bad precision {prec:?}")))?;
            let u = self.parse_oe(inner)?;
            if prec + d as i32 > self.k as i32 {
                return Err(Error::Parse(format!("precision {prec} exceeds storage")));
            }
            Ok(EElement { ctx: *self, d, u, prec }.normalized())
        } else {
            Ok(EElement::from_oe(self, self.parse_oe(s)?))
        }
    }

    pub fn parse_oe(&self, s: &str) -> Result<Oe> {
        let parsed: OeLiteral = s.parse()?;
        if parsed.p != self.p || parsed.k != self.k {
            return Err(Error::Parse(format!(
                "literal is mod {}^{}, context is mod {}^{}",
                parsed.p, parsed.k, self.p, self.k
            )));
        }
        Ok(Oe::new(self, parsed.a0, parsed.a1))
    }
}

/// An integer of `o_E` modulo `p^k`, written `a0 + a1*w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Oe {
    pub a0: u64,
    pub a1: u64,
}

impl Oe {
    pub fn new(ctx: &RingContext, a0: u64, a1: u64) -> Self {
        Oe { a0: ctx.red(a0), a1: ctx.red(a1) }
    }
    pub fn zero() -> Self {
        Oe { a0: 0, a1: 0 }
    }
    pub fn one() -> Self {
        Oe { a0: 1, a1: 0 }
    }
    pub fn from_int(ctx: &RingContext, a: i64) -> Self {
        Self::from_ints(ctx, a, 0)
    }
    pub fn from_ints(ctx: &RingContext, a0: i64, a1: i64) -> Self {
        let m = ctx.modulus as i64;
        Oe { a0: a0.rem_euclid(m) as u64, a1: a1.rem_euclid(m) as u64 }
    }
    pub fn is_zero(&self) -> bool {
        self.a0 == 0 && self.a1 == 0
    }
    pub fn add(&self, o: &Oe, c: &RingContext) -> Oe {
        Oe { a0: c.add_z(self.a0, o.a0), a1: c.add_z(self.a1, o.a1) }
    }
    pub fn sub(&self, o: &Oe, c: &RingContext) -> Oe {
        Oe { a0: c.sub_z(self.a0, o.a0), a1: c.sub_z(self.a1, o.a1) }
    }
    pub fn neg(&self, c: &RingContext) -> Oe {
        Oe::zero().sub(self, c)
    }
    pub fn scale(&self, z: u64, c: &RingContext) -> Oe {
        Oe { a0: c.mul_z(self.a0, z), a1: c.mul_z(self.a1, z) }
    }
    pub fn mul(&self, o: &Oe, c: &RingContext) -> Oe {
        // w^2 = -g1 w - g0
        let t = c.mul_z(self.a1, o.a1);
        let a0 = c.sub_z(c.mul_z(self.a0, o.a0), c.mul_z(t, c.g0));
        let a1 = c.sub_z(c.add_z(c.mul_z(self.a0, o.a1), c.mul_z(self.a1, o.a0)), c.mul_z(t, c.g1));
        Oe { a0, a1 }
    }
    pub fn conj(&self, c: &RingContext) -> Oe {
        // a0 + a1 * (-g1 - w)
        Oe { a0: c.sub_z(self.a0, c.mul_z(self.a1, c.g1)), a1: c.sub_z(0, self.a1) }
    }
    /// `x * conj(x)`, an element of `Z/p^k`.
    pub fn norm(&self, c: &RingContext) -> u64 {
        let n = self.mul(&self.conj(c), c);
        debug_assert_eq!(n.a1, 0);
        n.a0
    }
    pub fn trace(&self, c: &RingContext) -> u64 {
        self.add(&self.conj(c), c).a0
    }
    pub fn pow(&self, mut e: u64, c: &RingContext) -> Oe {
        let mut r = Oe::one();
        let mut b = *self;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b, c);
            }
            b = b.mul(&b, c);
            e >>= 1;
        }
        r
    }
    /// `p`-adic valuation, capped at `k`.
    pub fn val(&self, c: &RingContext) -> u32 {
        c.val_z(self.a0).min(c.val_z(self.a1))
    }
    pub fn is_unit(&self, c: &RingContext) -> bool {
        self.val(c) == 0
    }
    /// Exact division by `p^e`; the caller guarantees divisibility.
    pub fn div_p_pow(&self, e: u32, c: &RingContext) -> Oe {
        let d = c.p.pow(e);
        Oe { a0: self.a0 / d, a1: self.a1 / d }
    }
    pub fn mul_p_pow(&self, e: u32, c: &RingContext) -> Oe {
        self.scale(c.pow_p(e), c)
    }
    pub fn inv(&self, c: &RingContext) -> Option<Oe> {
        let n = mod_inv(self.norm(c), c.modulus)?;
        Some(self.conj(c).scale(n, c))
    }
    /// Reduction mod `p^e`.
    pub fn reduce(&self, e: u32, c: &RingContext) -> Oe {
        let m = c.pow_p(e).max(1);
        if e >= c.k {
            return *self;
        }
        Oe { a0: self.a0 % m, a1: self.a1 % m }
    }
    /// Residue in `F_{q^2}`, as an `Oe` with coordinates in `[0, p)`.
    pub fn residue(&self, c: &RingContext) -> Oe {
        Oe { a0: self.a0 % c.p, a1: self.a1 % c.p }
    }

    /// The Teichmuller lift of the residue of `self`: the unique root of
    /// unity of order dividing `q^2 - 1` congruent to it mod `p`.
    pub fn teichmuller(&self, c: &RingContext) -> Oe {
        let r = self.residue(c);
        if r.is_zero() {
            return r;
        }
        let q2 = c.q() * c.q();
        let mut x = r;
        for _ in 0..=c.k {
            let y = x.pow(q2, c);
            if y == x {
                return x;
            }
            x = y;
        }
        x
    }

    /// Multiplicative order of a residue-field unit.
    pub fn residue_order(&self, c: &RingContext) -> u64 {
        let rc = residue_ctx(c);
        let r = self.residue(c);
        let mut x = r;
        let mut n = 1;
        while x != Oe::one() {
            x = x.mul(&r, &rc);
            n += 1;
        }
        n
    }
}

/// The same quadratic, truncated to precision 1.
pub fn residue_ctx(c: &RingContext) -> RingContext {
    RingContext { p: c.p, k: 1, modulus: c.p, g1: c.g1 % c.p, g0: c.g0 % c.p, floor: 0 }
}

pub fn teichmuller_lift(ctx: &RingContext, r: Oe) -> Oe {
    r.teichmuller(ctx)
}

impl fmt::Display for Oe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}*w", self.a0, self.a1)
    }
}

struct OeLiteral {
    a0: u64,
    a1: u64,
    p: u64,
    k: u32,
}

impl FromStr for OeLiteral {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected 'a0+a1*w mod p^k', got {s:?}"));
        let (val, modp) = s.trim().split_once(" mod ").ok_or_else(bad)?;
        let (p, k) = modp.split_once('^').ok_or_else(bad)?;
        let (a0, a1) = val.split_once('+').ok_or_else(bad)?;
        let a1 = a1.strip_suffix("*w").ok_or_else(bad)?;
        Ok(OeLiteral {
            a0: a0.parse().map_err(|_| bad())?,
            a1: a1.parse().map_err(|_| bad())?,
            p: p.parse().map_err(|_| bad())?,
            k: k.parse().map_err(|_| bad())?,
        })
    }
}

/// Valuation of a truncated value: exact, or only a lower bound when the
/// value vanishes at the available precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Valuation {
    Finite(i32),
    AtLeast(i32),
}

impl Valuation {
    pub fn lower_bound(&self) -> i32 {
        match *self {
            Valuation::Finite(v) | Valuation::AtLeast(v) => v,
        }
    }
    pub fn finite(&self) -> Option<i32> {
        match *self {
            Valuation::Finite(v) => Some(v),
            Valuation::AtLeast(_) => None,
        }
    }
}

/// A value `p^-d * u` of `E`, known modulo `p^prec` (absolute precision).
///
/// Invariant: `prec + d <= k`, and the representation is normalized so
/// that `d > 0` implies `p` does not divide `u`.
#[derive(Clone, Copy, Debug)]
pub struct EElement {
    ctx: RingContext,
    d: u32,
    u: Oe,
    prec: i32,
}

impl EElement {
    pub fn from_oe(ctx: &RingContext, u: Oe) -> Self {
        EElement { ctx: *ctx, d: 0, u, prec: ctx.k as i32 }
    }

    pub fn with_denominator(ctx: &RingContext, d: u32, u: Oe) -> Self {
        EElement { ctx: *ctx, d, u, prec: ctx.k as i32 - d as i32 }.normalized()
    }

    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }
    pub fn denom_exp(&self) -> u32 {
        self.d
    }
    pub fn numerator(&self) -> Oe {
        self.u
    }
    pub fn prec(&self) -> i32 {
        self.prec
    }

    /// Same value with the absolute precision lowered to `prec` (never raised).
    pub fn truncate_prec(mut self, prec: i32) -> Self {
        self.prec = self.prec.min(prec);
        self
    }

    fn normalized(mut self) -> Self {
        let c = self.ctx;
        let cap = c.k as i32 - self.d as i32;
        if self.prec > cap {
            self.prec = cap;
        }
        while self.d > 0 && self.u.a0.is_multiple_of(c.p) && self.u.a1.is_multiple_of(c.p) {
            self.u = Oe { a0: self.u.a0 / c.p, a1: self.u.a1 / c.p };
            self.d -= 1;
        }
        // digits of u above p^(prec+d) are unknown; keep them zero so that
        // equal values have equal representations
        let known = self.prec + self.d as i32;
        if known <= 0 {
            self.u = Oe::zero();
        } else if (known as u32) < c.k {
            self.u = self.u.reduce(known as u32, &c);
        }
        self
    }

    pub fn valuation(&self) -> Valuation {
        let known = self.prec + self.d as i32;
        let v = self.u.val(&self.ctx) as i32;
        if known <= 0 || v >= known {
            Valuation::AtLeast(self.prec)
        } else {
            Valuation::Finite(v - self.d as i32)
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.valuation(), Valuation::AtLeast(_))
    }

    pub fn is_integral(&self) -> bool {
        self.valuation().lower_bound() >= 0
    }

    /// Unit of `o_E` at the available precision.
    pub fn is_unit(&self) -> bool {
        self.valuation() == Valuation::Finite(0)
    }

    pub fn conj(&self) -> Self {
        EElement { u: self.u.conj(&self.ctx), ..*self }
    }

    /// `x * conj(x)`.
    pub fn norm(&self) -> Self {
        *self * self.conj()
    }

    pub fn trace(&self) -> Self {
        *self + self.conj()
    }

    /// Whether `conj(x) = x` at precision, i.e. `x` lies in `F`.
    pub fn is_rational(&self) -> bool {
        (*self - self.conj()).is_zero()
    }

    /// Rational part `a0` when `x` is in `o_F`.
    pub fn rational_residue(&self) -> u64 {
        self.u.a0
    }

    /// Multiplication by `p^e`.
    pub fn shl(&self, e: u32) -> Self {
        if self.d >= e {
            EElement { d: self.d - e, ..*self }.normalized_keep(e as i32)
        } else {
            let extra = e - self.d;
            EElement {
                ctx: self.ctx,
                d: 0,
                u: self.u.mul_p_pow(extra, &self.ctx),
                prec: self.prec + e as i32,
            }
            .normalized()
        }
    }

    /// Multiplication by `p^e` for any sign of `e`; exact, no digits lost
    /// beyond those shifted out of storage.
    pub fn mul_p_pow(&self, e: i32) -> Self {
        if e >= 0 {
            self.shl(e as u32)
        } else {
            let e = (-e) as u32;
            EElement { d: self.d + e, prec: self.prec - e as i32, ..*self }.normalized()
        }
    }

    fn normalized_keep(mut self, gain: i32) -> Self {
        self.prec += gain;
        self.normalized()
    }

    pub fn scale_int(&self, z: i64) -> Self {
        *self * EElement::from_oe(&self.ctx, Oe::from_int(&self.ctx, z))
    }

    /// `x^-1`; fails only when `x` vanishes at the available precision.
    pub fn inv(&self) -> Result<Self> {
        let c = self.ctx;
        match self.valuation() {
            Valuation::AtLeast(_) => Err(Error::NonUnit),
            Valuation::Finite(v) => {
                if v <= 0 {
                    // d = -v > 0 or v = 0 with d = 0: u is a unit
                    let ui = self.u.inv(&c).ok_or(Error::NonUnit)?;
                    let dd = (-v) as u32;
                    let u = ui.mul_p_pow(dd, &c);
                    let prec = self.prec - 2 * v;
                    Ok(EElement { ctx: c, d: 0, u, prec }.normalized())
                } else {
                    let e = v as u32;
                    let u0 = self.u.div_p_pow(e, &c);
                    let ui = u0.inv(&c).ok_or(Error::NonUnit)?;
                    let prec = self.prec - 2 * v;
                    Ok(EElement { ctx: c, d: e, u: ui, prec }.normalized())
                }
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(*self * other.inv()?)
    }

    pub fn pow(&self, e: u64) -> Self {
        let mut r = self.ctx.one();
        let mut b = *self;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b;
            }
            b = b * b;
            e >>= 1;
        }
        r
    }

    /// Congruence at the lesser of the two precisions.
    pub fn eq_at_prec(&self, other: &Self) -> bool {
        (*self - *other).is_zero()
    }

    /// Congruence modulo `p^e`; errors when `e` exceeds what is known.
    pub fn congruent_mod(&self, other: &Self, e: i32) -> Result<bool> {
        let diff = *self - *other;
        if diff.prec < e {
            return Err(Error::PrecisionExhausted { available: diff.prec, floor: e });
        }
        Ok(diff.valuation().lower_bound() >= e)
    }

    /// Errors when fewer than `floor` digits are trusted.
    pub fn check(&self) -> Result<()> {
        if self.prec < self.ctx.floor {
            Err(Error::PrecisionExhausted { available: self.prec, floor: self.ctx.floor })
        } else {
            Ok(())
        }
    }

    /// Residue class of an integral element.
    pub fn residue(&self) -> Oe {
        if self.d > 0 {
            // only called on integral values; a genuine denominator has no residue
            return Oe::zero();
        }
        self.u.residue(&self.ctx)
    }

    /// Integral value as an element of `o_E / p^k` (precision dropped).
    pub fn to_oe(&self) -> Option<Oe> {
        if self.d == 0 {
            Some(self.u)
        } else {
            None
        }
    }
}

impl PartialEq for EElement {
    fn eq(&self, other: &Self) -> bool {
        self.eq_at_prec(other)
    }
}

impl Add for EElement {
    type Output = EElement;
    fn add(self, o: EElement) -> EElement {
        debug_assert_eq!(self.ctx, o.ctx, "mixed ring contexts");
        let c = self.ctx;
        let d = self.d.max(o.d);
        let a = self.u.mul_p_pow(d - self.d, &c);
        let b = o.u.mul_p_pow(d - o.d, &c);
        EElement { ctx: c, d, u: a.add(&b, &c), prec: self.prec.min(o.prec) }.normalized()
    }
}

impl Sub for EElement {
    type Output = EElement;
    fn sub(self, o: EElement) -> EElement {
        self + (-o)
    }
}

impl Neg for EElement {
    type Output = EElement;
    fn neg(self) -> EElement {
        EElement { u: self.u.neg(&self.ctx), ..self }
    }
}

impl Mul for EElement {
    type Output = EElement;
    fn mul(self, o: EElement) -> EElement {
        debug_assert_eq!(self.ctx, o.ctx, "mixed ring contexts");
        let c = self.ctx;
        let prec = (self.prec + o.valuation().lower_bound()).min(o.prec + self.valuation().lower_bound());
        EElement { ctx: c, d: self.d + o.d, u: self.u.mul(&o.u, &c), prec }.normalized()
    }
}

impl fmt::Display for EElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.ctx;
        if self.d == 0 && self.prec == c.k as i32 {
            write!(f, "{} mod {}^{}", self.u, c.p, c.k)
        } else {
            write!(f, "p^-{}*({} mod {}^{})@{}", self.d, self.u, c.p, c.k, self.prec)
        }
    }
}

/// Solves `z * conj(z) = target` with `z = 1 mod p^j`, where `target` is a
/// conj-fixed element of `1 + p^j o_F`, `j >= 1`. Digit by digit: at each
/// level the correction solves a residue trace equation.
pub fn solve_unit_norm(target: &EElement) -> Result<EElement> {
    let c = *target.ctx();
    if !target.is_integral() || !target.is_rational() {
        return Err(Error::NotPrincipalUnit(format!("{target} is not in o_F")));
    }
    let one = c.one();
    let j = (*target - one).valuation().lower_bound();
    if j < 1 {
        return Err(Error::NotPrincipalUnit(format!("{target} is not 1 mod p")));
    }
    let prec = target.prec();
    let half = mod_inv(2, c.modulus()).unwrap();
    let mut z = Oe::one();
    let t = target.numerator();
    for level in j.max(1)..prec {
        let level = level as u32;
        let r = c.sub_z(t.a0, z.norm(&c));
        if r == 0 {
            break;
        }
        if c.val_z(r) > level {
            continue;
        }
        // r = p^level * digit; correction y = digit / (2 conj(z))
        let digit = (r / c.pow_p(level)) % c.p;
        let y = z.conj(&c).inv(&c).ok_or(Error::NonUnit)?.scale(c.mul_z(digit, half), &c);
        z = z.add(&y.mul_p_pow(level, &c), &c);
    }
    Ok(EElement::from_oe(&c, z).truncate_prec(prec))
}
