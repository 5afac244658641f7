//! The norm correspondence: eigenvalue matching, norm sections, and the
//! integral Hilbert 90 construction of a section inside `o_E[t]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrices::{
    from_y_frame, j_matrix, membership, sigma_frame, theta_frame, to_y_frame, MatrixE, Shape,
};
use crate::residue::{field, poly, FMat};
use crate::ring::{EElement, Oe, RingContext};
use crate::twisted::{is_top_semisimple, norm_of, TwistedElement};
use crate::zpk::{kernel, smith, ZMat};

/// Default cap on unit-search trials in the Hilbert 90 kernel.
pub const UNIT_SEARCH_CAP: usize = 10_000;

/// `{x_i / conj(x_{N+1-i})}`.
pub fn aa_map(x: &[EElement]) -> Result<Vec<EElement>> {
    let n = x.len();
    (0..n).map(|i| x[i].div(&x[n - 1 - i].conj())).collect()
}

/// Order-insensitive comparison at precision.
pub fn multiset_eq(a: &[EElement], b: &[EElement]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    'outer: for x in a {
        for (j, y) in b.iter().enumerate() {
            if !used[j] && x.eq_at_prec(y) {
                used[j] = true;
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Accepts `x` (read in the level-`m` frame) as semisimple when its residue
/// characteristic polynomial is squarefree or it is topologically
/// semisimple.
pub fn certify_semisimple(x: &MatrixE, m: u32) -> Result<()> {
    let y = to_y_frame(x, m);
    let f = field(x.ctx());
    if y.is_integral() {
        let cp = FMat::of(&y)?.charpoly(&f);
        if poly::is_squarefree(&cp, &f) {
            return Ok(());
        }
    }
    match is_top_semisimple(x, m) {
        Ok(true) => Ok(()),
        Ok(false) | Err(Error::NotInCompact(_)) => Err(Error::NotCertifiedSemisimple),
        Err(e) => Err(e),
    }
}

/// Whether `gamma` and `N(delta)` have the same characteristic polynomial,
/// which for semisimple elements is conjugacy over the algebraic closure.
pub fn is_norm(gamma: &MatrixE, dt: &TwistedElement) -> Result<bool> {
    let a = gamma.charpoly();
    let b = norm_of(dt)?.charpoly();
    for c in a.iter().chain(&b) {
        c.check()?;
    }
    Ok(a.iter().zip(&b).all(|(x, y)| x.eq_at_prec(y)))
}

/// Deterministic ladder of units: Teichmuller representatives of
/// `F_{q^2}^x` in a fixed order, then the same times `1 + j p`.
pub fn alpha_ladder(ctx: &RingContext, depth: u64) -> Vec<EElement> {
    let reps: Vec<EElement> =
        ctx.residue_units().iter().map(|r| EElement::from_oe(ctx, r.teichmuller(ctx))).collect();
    let mut out = Vec::new();
    for j in 0..depth {
        let f = ctx.one() + ctx.p_power(1).scale_int(j as i64);
        out.extend(reps.iter().map(|r| *r * f));
    }
    out
}

/// `delta = alpha I + conj(alpha) gamma` for the first ladder `alpha`
/// with invertible `delta` (units first); then `gamma = delta theta(delta)`.
pub fn norm_section(gamma: &MatrixE) -> Result<TwistedElement> {
    let ctx = *gamma.ctx();
    let n = gamma.n();
    let ladder = alpha_ladder(&ctx, 3);
    let id = MatrixE::identity(&ctx, n);
    let build = |a: &EElement| &id.scale(*a) + &gamma.scale(a.conj());
    let pick = ladder
        .iter()
        .map(build)
        .find(|d| d.det().is_unit())
        .or_else(|| ladder.iter().map(build).find(|d| !d.det().is_zero()))
        .ok_or(Error::SectionSearchExhausted)?;
    let dt = TwistedElement::new(pick);
    let back = norm_of(&dt)?;
    back.check()?;
    if !back.eq_at_prec(gamma) {
        return Err(Error::SectionSearchExhausted);
    }
    Ok(dt)
}

/// `B = o_E[t]` in the integral frame of level `m`, with the involution
/// `sigma(x) = J x^* J^{-1}`.
#[derive(Clone, Debug)]
pub struct AlgebraB {
    pub t: MatrixE,
    pub m: u32,
    pub basis: Vec<MatrixE>,
}

impl AlgebraB {
    /// `t` is given in the integral frame.
    pub fn new(t: &MatrixE, m: u32) -> Self {
        let n = t.n();
        let mut basis = vec![MatrixE::identity(t.ctx(), n)];
        for i in 1..n {
            basis.push(&basis[i - 1] * t);
        }
        AlgebraB { t: t.clone(), m, basis }
    }

    pub fn sigma(&self, y: &MatrixE) -> MatrixE {
        sigma_frame(y, self.m)
    }

    /// `sum c_i t^i`.
    pub fn element(&self, coeffs: &[Oe]) -> MatrixE {
        let ctx = *self.t.ctx();
        let n = self.t.n();
        coeffs
            .iter()
            .zip(&self.basis)
            .fold(MatrixE::zeros(&ctx, n, n), |acc, (c, b)| &acc + &b.scale(EElement::from_oe(&ctx, *c)))
    }
}

/// `(a0, a1)` coordinates of an integral element, reduced mod `p^prec`.
fn coords(x: &EElement, modulus: u64) -> Result<(u64, u64)> {
    let u = x
        .to_oe()
        .filter(|_| x.is_integral())
        .ok_or_else(|| Error::NotInShape(format!("non-integral entry {x}")))?;
    Ok((u.a0 % modulus, u.a1 % modulus))
}

/// Flattens a list of integral matrices into the columns of an integer
/// matrix (two coordinates per entry) modulo `p^prec`.
fn columns_to_zmat(cols: &[MatrixE], modulus: u64) -> Result<ZMat> {
    let rows = 2 * cols[0].rows() * cols[0].cols();
    let mut z = ZMat::zeros(rows, cols.len());
    for (j, m) in cols.iter().enumerate() {
        for (i, e) in m.entries().iter().enumerate() {
            let (a0, a1) = coords(e, modulus)?;
            z.set(2 * i, j, a0);
            z.set(2 * i + 1, j, a1);
        }
    }
    Ok(z)
}

/// `y` in `B`, a unit, with `sigma(y) x = y`, i.e. `x = y / sigma(y)`.
/// `x` must satisfy `x sigma(x) = 1`.
pub fn hilbert90_kernel(b: &AlgebraB, x: &MatrixE) -> Result<MatrixE> {
    hilbert90_kernel_seeded(b, x, 0x5eed_0090, UNIT_SEARCH_CAP)
}

pub fn hilbert90_kernel_seeded(b: &AlgebraB, x: &MatrixE, seed: u64, cap: usize) -> Result<MatrixE> {
    let ctx = *x.ctx();
    let n = x.n();
    let id = MatrixE::identity(&ctx, n);
    if !(&b.sigma(x) * x).eq_at_prec(&id) {
        return Err(Error::NotPrincipalUnit("x sigma(x) != 1".into()));
    }
    let w = EElement::from_oe(&ctx, Oe::new(&ctx, 0, 1));
    let mut images = Vec::with_capacity(2 * n);
    for t_i in &b.basis {
        for part in [t_i.clone(), t_i.scale(w)] {
            images.push(&(&b.sigma(&part) * x) - &part);
        }
    }
    let prec = images.iter().map(|m| m.prec()).min().unwrap_or(0).min(x.prec());
    if prec < ctx.floor() {
        return Err(Error::PrecisionExhausted { available: prec, floor: ctx.floor() });
    }
    let prec_u = prec as u32;
    let modulus = ctx.p().pow(prec_u);
    let lmat = columns_to_zmat(&images, modulus)?;
    let gens = kernel(&lmat, ctx.p(), prec_u);
    let to_elt = |v: &[u64]| -> MatrixE {
        let coeffs: Vec<Oe> = (0..n).map(|i| Oe::new(&ctx, v[2 * i], v[2 * i + 1])).collect();
        b.element(&coeffs).truncate_prec(prec)
    };
    let accept = |y: &MatrixE| y.det().is_unit() && (&b.sigma(y) * x).eq_at_prec(y);

    let mut trials = 0usize;
    let elts: Vec<MatrixE> = gens.iter().map(|g| to_elt(g)).collect();
    for y in &elts {
        trials += 1;
        if accept(y) {
            return Ok(y.clone());
        }
    }
    let ladder: Vec<EElement> =
        (1..ctx.p()).map(|a| EElement::from_oe(&ctx, Oe::new(&ctx, a, 0).teichmuller(&ctx))).collect();
    for i in 0..elts.len() {
        for j in (i + 1)..elts.len() {
            for c in &ladder {
                trials += 1;
                if trials > cap {
                    return Err(Error::NoUnitInKernel(cap));
                }
                let y = &elts[i] + &elts[j].scale(*c);
                if accept(&y) {
                    return Ok(y);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while trials < cap && !gens.is_empty() {
        trials += 1;
        let mut v = vec![0u64; 2 * n];
        for g in &gens {
            let r = rng.gen_range(0..modulus);
            for (vi, gi) in v.iter_mut().zip(g) {
                *vi = (*vi + r * gi) % modulus;
            }
        }
        let y = to_elt(&v);
        if accept(&y) {
            return Ok(y);
        }
    }
    Err(Error::NoUnitInKernel(trials))
}

/// Which construction produced an integral norm section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SectionPath {
    /// `(alpha I + conj(alpha) t) / (alpha + conj(alpha))`, available when
    /// `q > N`.
    Fast,
    /// Hilbert 90 in `o_E[t]` followed by a rescaling by `o_F^x`.
    General,
}

/// Fast path in the integral frame.
fn fast_section_frame(ty: &MatrixE) -> Result<MatrixE> {
    let ctx = *ty.ctx();
    let n = ty.n();
    if ctx.q() <= n as u64 {
        return Err(Error::FastPathUnavailable { q: ctx.q(), n });
    }
    let f = field(&ctx);
    let phi = FMat::of(ty)?.charpoly(&f);
    for r in ctx.residue_units() {
        let a = EElement::from_oe(&ctx, r.teichmuller(&ctx));
        let tr = a + a.conj();
        if !tr.is_unit() {
            continue;
        }
        let point = (-a).div(&a.conj())?.residue();
        if poly::eval(&phi, point, &f).is_zero() {
            continue;
        }
        let id = MatrixE::identity(&ctx, n);
        return Ok((&id.scale(a) + &ty.scale(a.conj())).scale(tr.inv()?));
    }
    Err(Error::SectionSearchExhausted)
}

/// General path in the integral frame.
fn general_section_frame(ty: &MatrixE, m: u32) -> Result<MatrixE> {
    let ctx = *ty.ctx();
    let b = AlgebraB::new(ty, m);
    let s0 = hilbert90_kernel(&b, ty)?;
    let mid = ty.n() / 2;
    let u = s0.get(mid, mid);
    if !u.is_unit() {
        return Err(Error::NotInShape("middle entry of the Hilbert 90 solution is not a unit".into()));
    }
    if m > 0 && !u.congruent_mod(&u.conj(), m as i32)? {
        return Err(Error::NotInShape("middle entry is not rational mod p^m".into()));
    }
    let z = ctx.int(u.rational_residue() as i64).inv()?;
    Ok(s0.scale(z))
}

/// A section `s in o_E[t]`, `s` in the level-`m` group, with
/// `t = s theta(s)`. `path = None` picks the fast path when `q > N`.
pub fn integral_norm_section(
    t: &MatrixE,
    m: u32,
    path: Option<SectionPath>,
) -> Result<(TwistedElement, SectionPath)> {
    let ty = to_y_frame(t, m);
    if !membership(t, Shape::KmH(m))? {
        return Err(Error::NotInCompact("t is not in the level-m unitary group".into()));
    }
    certify_semisimple(t, m)?;
    let q_big = t.ctx().q() > t.n() as u64;
    let (sy, used) = match path {
        Some(SectionPath::Fast) => (fast_section_frame(&ty)?, SectionPath::Fast),
        Some(SectionPath::General) => (general_section_frame(&ty, m)?, SectionPath::General),
        None if q_big => match fast_section_frame(&ty) {
            Ok(s) => (s, SectionPath::Fast),
            Err(_) => (general_section_frame(&ty, m)?, SectionPath::General),
        },
        None => (general_section_frame(&ty, m)?, SectionPath::General),
    };
    verify_section_frame(&sy, &ty, m)?;
    Ok((TwistedElement::new(from_y_frame(&sy, m)), used))
}

fn verify_section_frame(sy: &MatrixE, ty: &MatrixE, m: u32) -> Result<()> {
    let n_s = sy * &theta_frame(sy, m)?;
    n_s.check()?;
    if !n_s.eq_at_prec(ty) {
        return Err(Error::NotInShape("s theta(s) != t".into()));
    }
    if !(sy * ty).eq_at_prec(&(ty * sy)) {
        return Err(Error::NotInShape("s does not commute with t".into()));
    }
    if !membership(&from_y_frame(sy, m), Shape::Km(m))? {
        return Err(Error::NotInShape("s is not in the level-m group".into()));
    }
    Ok(())
}

/// Dimensions over `Q_p` of the two centralizer Lie algebras.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CentralizerRanks {
    pub rank_h: usize,
    pub rank_g_twisted: usize,
    pub equal: bool,
}

/// Kernel dimension over `Q_p` of a real-linear map `X -> (f_1(X), ...)`
/// on `M_N(E)`, evaluated on the `2N^2` coordinate directions.
fn kernel_dim(ctx: &RingContext, n: usize, f: impl Fn(&MatrixE) -> Vec<MatrixE>) -> Result<usize> {
    let w = EElement::from_oe(ctx, Oe::new(ctx, 0, 1));
    let mut cols: Vec<MatrixE> = Vec::with_capacity(2 * n * n);
    for i in 0..n {
        for j in 0..n {
            for c in [ctx.one(), w] {
                let mut x = MatrixE::zeros(ctx, n, n);
                x.set(i, j, c);
                let parts = f(&x);
                // stack all parts into one tall matrix
                let rows: usize = parts.iter().map(|p| p.rows()).sum();
                let mut st = MatrixE::zeros(ctx, rows, n);
                let mut r0 = 0;
                for p in &parts {
                    for a in 0..p.rows() {
                        for b in 0..p.cols() {
                            st.set(r0 + a, b, p.get(a, b));
                        }
                    }
                    r0 += p.rows();
                }
                cols.push(st);
            }
        }
    }
    // clear denominators uniformly; the kernel is unchanged
    let d = cols.iter().map(|c| c.d_max()).max().unwrap_or(0) as i32;
    let cols: Vec<MatrixE> = cols.iter().map(|c| c.mul_p_pow(d)).collect();
    let prec = cols.iter().map(|c| c.prec()).min().unwrap_or(0);
    if prec < ctx.floor() {
        return Err(Error::PrecisionExhausted { available: prec, floor: ctx.floor() });
    }
    let prec = prec as u32;
    let z = columns_to_zmat(&cols, ctx.p().pow(prec))?;
    let (diag, _) = smith(&z, ctx.p(), prec);
    let rank = diag.iter().filter(|&&e| e < prec).count();
    Ok(2 * n * n - rank)
}

/// Compares `Lie(H_gamma)` with the Lie algebra of the twisted centralizer
/// of `delta x| theta`:
/// `{X : X gamma = gamma X, X J + J X^* = 0}` against
/// `{X : X delta + delta J X^* J^{-1} = 0}`.
pub fn centralizer_rank_check(gamma: &MatrixE, dt: &TwistedElement) -> Result<CentralizerRanks> {
    let ctx = *gamma.ctx();
    let n = gamma.n();
    let j = j_matrix(&ctx, n);
    let ji = j.invert()?;
    let rank_h = kernel_dim(&ctx, n, |x| vec![&(x * gamma) - &(gamma * x), &(x * &j) + &(&j * &x.star())])?;
    let d = &dt.delta;
    let rank_g = kernel_dim(&ctx, n, |x| vec![&(x * d) + &(&(&(d * &j) * &x.star()) * &ji)])?;
    Ok(CentralizerRanks { rank_h, rank_g_twisted: rank_g, equal: rank_h == rank_g })
}
