//! Dense matrices over `E` with per-entry precision, the involutions
//! `theta` and `theta'`, the structural matrices `J_N`, `J'_{2n}`, the
//! embeddings `iota`, `kappa`, and membership in the compact open shapes.
//!
//! Indices are split into three blocks of sizes `n, 1, n`: the top block
//! `0..n`, the middle index `n` and the bottom block `n+1..2n+1`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::ring::{EElement, Oe, RingContext, Valuation};

#[derive(Clone, Debug)]
pub struct MatrixE {
    ctx: RingContext,
    rows: usize,
    cols: usize,
    data: Vec<EElement>,
}

impl MatrixE {
    pub fn zeros(ctx: &RingContext, rows: usize, cols: usize) -> Self {
        MatrixE { ctx: *ctx, rows, cols, data: vec![ctx.zero(); rows * cols] }
    }

    pub fn identity(ctx: &RingContext, n: usize) -> Self {
        let mut m = Self::zeros(ctx, n, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_fn(
        ctx: &RingContext,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> EElement,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        MatrixE { ctx: *ctx, rows, cols, data }
    }

    /// Integer matrix given row by row.
    pub fn from_ints(ctx: &RingContext, rows: &[&[i64]]) -> Self {
        Self::from_fn(ctx, rows.len(), rows[0].len(), |i, j| ctx.int(rows[i][j]))
    }

    pub fn from_oe(ctx: &RingContext, rows: &[Vec<Oe>]) -> Self {
        Self::from_fn(ctx, rows.len(), rows[0].len(), |i, j| EElement::from_oe(ctx, rows[i][j]))
    }

    pub fn diag(ctx: &RingContext, d: &[EElement]) -> Self {
        let mut m = Self::zeros(ctx, d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m.set(i, i, *x);
        }
        m
    }

    pub fn column_vector(ctx: &RingContext, v: &[EElement]) -> Self {
        Self::from_fn(ctx, v.len(), 1, |i, _| v[i])
    }

    pub fn ctx(&self) -> &RingContext {
        &self.ctx
    }
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    /// Size of a square matrix.
    pub fn n(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> EElement {
        self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: EElement) {
        self.data[i * self.cols + j] = v;
    }
    pub fn entries(&self) -> &[EElement] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<EElement> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
    pub fn set_column(&mut self, j: usize, v: &[EElement]) {
        for (i, x) in v.iter().enumerate() {
            self.set(i, j, *x);
        }
    }

    /// Matrix-level absolute precision: the minimum over entries.
    pub fn prec(&self) -> i32 {
        self.data.iter().map(|x| x.prec()).min().unwrap_or(self.ctx.k() as i32)
    }

    /// Largest denominator exponent among the entries.
    pub fn d_max(&self) -> u32 {
        self.data.iter().map(|x| x.denom_exp()).max().unwrap_or(0)
    }

    pub fn check(&self) -> Result<()> {
        let prec = self.prec();
        if prec < self.ctx.floor() {
            Err(Error::PrecisionExhausted { available: prec, floor: self.ctx.floor() })
        } else {
            Ok(())
        }
    }

    pub fn truncate_prec(&self, prec: i32) -> Self {
        self.map(|x| x.truncate_prec(prec))
    }

    pub fn map(&self, f: impl Fn(EElement) -> EElement) -> Self {
        MatrixE { data: self.data.iter().map(|x| f(*x)).collect(), ..self.clone() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(&self.ctx, self.cols, self.rows, |i, j| self.get(j, i))
    }
    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }
    /// Conjugate transpose.
    pub fn star(&self) -> Self {
        Self::from_fn(&self.ctx, self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: EElement) -> Self {
        self.map(|x| x * c)
    }
    pub fn mul_p_pow(&self, e: i32) -> Self {
        self.map(|x| x.mul_p_pow(e))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }
    pub fn eq_at_prec(&self, o: &MatrixE) -> bool {
        self.rows == o.rows && self.cols == o.cols && (self - o).is_zero()
    }
    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integral())
    }

    /// Minimum valuation lower bound over entries.
    pub fn min_valuation(&self) -> i32 {
        self.data.iter().map(|x| x.valuation().lower_bound()).min().unwrap_or(0)
    }

    /// Residue matrix of an integral matrix.
    pub fn residue(&self) -> Result<Vec<Vec<Oe>>> {
        if !self.is_integral() {
            return Err(Error::NotInCompact("residue of a non-integral matrix".into()));
        }
        Ok((0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).residue()).collect()).collect())
    }

    pub fn try_mul(&self, o: &MatrixE) -> Result<MatrixE> {
        if self.cols != o.rows {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, o.rows, o.cols
            )));
        }
        Ok(self * o)
    }

    pub fn pow(&self, mut e: u64) -> MatrixE {
        let mut r = Self::identity(&self.ctx, self.n());
        let mut b = self.clone();
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

    /// Inverse by Gauss-Jordan elimination with full pivoting on the entry
    /// of least valuation (ties broken in row-major order).
    pub fn invert(&self) -> Result<MatrixE> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch("inverse of a non-square matrix".into()));
        }
        let n = self.n();
        let mut a = self.clone();
        let mut inv = Self::identity(&self.ctx, n);
        let mut perm: Vec<usize> = (0..n).collect();
        for t in 0..n {
            let mut best: Option<(i32, usize, usize)> = None;
            for i in t..n {
                for j in t..n {
                    if let Valuation::Finite(v) = a.get(i, j).valuation() {
                        if best.is_none_or(|(bv, _, _)| v < bv) {
                            best = Some((v, i, j));
                        }
                    }
                }
            }
            let (_, pi, pj) = best.ok_or(Error::NonUnitDeterminant)?;
            a.swap_rows(t, pi);
            inv.swap_rows(t, pi);
            a.swap_cols(t, pj);
            perm.swap(t, pj);
            let piv = a.get(t, t).inv()?;
            for j in 0..n {
                a.set(t, j, a.get(t, j) * piv);
                inv.set(t, j, inv.get(t, j) * piv);
            }
            for i in 0..n {
                if i == t {
                    continue;
                }
                let f = a.get(i, t);
                for j in 0..n {
                    a.set(i, j, a.get(i, j) - f * a.get(t, j));
                    inv.set(i, j, inv.get(i, j) - f * inv.get(t, j));
                }
            }
        }
        // row t of the result belongs to original column perm[t]
        let mut out = Self::zeros(&self.ctx, n, n);
        for t in 0..n {
            for j in 0..n {
                out.set(perm[t], j, inv.get(t, j));
            }
        }
        Ok(out)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for i in 0..self.rows {
                self.data.swap(i * self.cols + a, i * self.cols + b);
            }
        }
    }

    /// Characteristic polynomial `det(X - A)`, coefficients in ascending
    /// degree, by the division-free Berkowitz recursion.
    pub fn charpoly(&self) -> Vec<EElement> {
        let n = self.n();
        let c = self.ctx;
        // descending coefficients of det(X - A_k) for the leading k x k block
        let mut p = vec![c.one()];
        for j in 0..n {
            // t = [1, -a_jj, -R C, -R M C, ..., -R M^{j-1} C]
            let mut t = Vec::with_capacity(j + 2);
            t.push(c.one());
            t.push(-self.get(j, j));
            let mut v: Vec<EElement> = (0..j).map(|i| self.get(i, j)).collect();
            for _ in 0..j {
                let rv = (0..j).fold(c.zero(), |s, l| s + self.get(j, l) * v[l]);
                t.push(-rv);
                v = (0..j).map(|i| (0..j).fold(c.zero(), |s, l| s + self.get(i, l) * v[l])).collect();
            }
            let mut q = vec![c.zero(); j + 2];
            for (i, qi) in q.iter_mut().enumerate() {
                for (l, pl) in p.iter().enumerate() {
                    if i >= l && i - l < t.len() {
                        *qi = *qi + t[i - l] * *pl;
                    }
                }
            }
            p = q;
        }
        p.reverse();
        p
    }

    pub fn det(&self) -> EElement {
        let cp = self.charpoly();
        if self.n().is_multiple_of(2) {
            cp[0]
        } else {
            -cp[0]
        }
    }

    pub fn trace(&self) -> EElement {
        (0..self.n()).fold(self.ctx.zero(), |s, i| s + self.get(i, i))
    }

    /// Row-major entry strings, for report files.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).to_string()).collect()).collect()
    }

    pub fn parse(ctx: &RingContext, rows: &[Vec<String>]) -> Result<MatrixE> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if r == 0 || rows.iter().any(|x| x.len() != c) {
            return Err(Error::Parse("ragged or empty matrix literal".into()));
        }
        let mut m = Self::zeros(ctx, r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                m.set(i, j, ctx.parse_element(s)?);
            }
        }
        Ok(m)
    }
}

impl<'a> Mul<&'a MatrixE> for &'a MatrixE {
    type Output = MatrixE;
    fn mul(self, o: &MatrixE) -> MatrixE {
        assert_eq!(self.cols, o.rows, "matrix product shape mismatch");
        let c = self.ctx;
        MatrixE::from_fn(&c, self.rows, o.cols, |i, j| {
            (0..self.cols).fold(c.zero(), |s, l| s + self.get(i, l) * o.get(l, j))
        })
    }
}

impl<'a> Add<&'a MatrixE> for &'a MatrixE {
    type Output = MatrixE;
    fn add(self, o: &MatrixE) -> MatrixE {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix sum shape mismatch");
        MatrixE::from_fn(&self.ctx, self.rows, self.cols, |i, j| self.get(i, j) + o.get(i, j))
    }
}

impl<'a> Sub<&'a MatrixE> for &'a MatrixE {
    type Output = MatrixE;
    fn sub(self, o: &MatrixE) -> MatrixE {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols), "matrix difference shape mismatch");
        MatrixE::from_fn(&self.ctx, self.rows, self.cols, |i, j| self.get(i, j) - o.get(i, j))
    }
}

impl Neg for &MatrixE {
    type Output = MatrixE;
    fn neg(self) -> MatrixE {
        self.map(|x| -x)
    }
}

impl fmt::Display for MatrixE {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// `J_N`: alternating signs on the anti-diagonal, starting with `+1` in
/// the top-right corner.
pub fn j_matrix(ctx: &RingContext, n: usize) -> MatrixE {
    let mut m = MatrixE::zeros(ctx, n, n);
    for i in 0..n {
        m.set(i, n - 1 - i, ctx.int(if i % 2 == 0 { 1 } else { -1 }));
    }
    m
}

/// `J'_{2n} = [[0, J_n], [tJ_n, 0]]`.
pub fn j_prime(ctx: &RingContext, n: usize) -> MatrixE {
    let jn = j_matrix(ctx, n);
    let mut m = MatrixE::zeros(ctx, 2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, n + j, jn.get(i, j));
            m.set(n + i, j, jn.get(j, i));
        }
    }
    m
}

/// `J x^{-*} J^{-1}` for a structural matrix `J`.
fn involution(j: &MatrixE, x: &MatrixE) -> Result<MatrixE> {
    if x.n() != j.n() {
        return Err(Error::ShapeMismatch(format!("size {} against form of size {}", x.n(), j.n())));
    }
    let xi = x.star().invert()?;
    Ok(&(j * &xi) * &j.invert()?)
}

pub fn theta(x: &MatrixE) -> Result<MatrixE> {
    involution(&j_matrix(x.ctx(), x.n()), x)
}

pub fn theta_prime(x: &MatrixE) -> Result<MatrixE> {
    if !x.n().is_multiple_of(2) {
        return Err(Error::ShapeMismatch("theta' needs even size".into()));
    }
    involution(&j_prime(x.ctx(), x.n() / 2), x)
}

/// Inserts a middle row and column carrying a single `1`.
pub fn iota(x: &MatrixE) -> MatrixE {
    let n2 = x.n();
    let n = n2 / 2;
    let c = *x.ctx();
    let idx = |i: usize| {
        if i < n {
            Some(i)
        } else if i == n {
            None
        } else {
            Some(i - 1)
        }
    };
    MatrixE::from_fn(&c, n2 + 1, n2 + 1, |i, j| match (idx(i), idx(j)) {
        (Some(a), Some(b)) => x.get(a, b),
        (None, None) => c.one(),
        _ => c.zero(),
    })
}

/// Inverse of `iota` on matrices whose middle row and column are trivial.
pub fn iota_inverse(x: &MatrixE) -> Result<MatrixE> {
    let n = x.n() / 2;
    let c = *x.ctx();
    for t in 0..x.n() {
        let expected = if t == n { c.one() } else { c.zero() };
        if !x.get(n, t).eq_at_prec(&expected) || !x.get(t, n).eq_at_prec(&expected) {
            return Err(Error::NotInShape("middle row/column is not trivial".into()));
        }
    }
    let src = |i: usize| if i < n { i } else { i + 1 };
    Ok(MatrixE::from_fn(&c, 2 * n, 2 * n, |i, j| x.get(src(i), src(j))))
}

/// `kappa = diag(eps I_n, I_n)`.
pub fn kappa(ctx: &RingContext, n: usize) -> MatrixE {
    let eps = EElement::from_oe(ctx, ctx.eps());
    let d: Vec<EElement> = (0..2 * n).map(|i| if i < n { eps } else { ctx.one() }).collect();
    MatrixE::diag(ctx, &d)
}

/// Block of an index in `n, 1, n` splitting: 0 top, 1 middle, 2 bottom.
#[inline]
pub fn block_of(i: usize, n: usize) -> usize {
    if i < n {
        0
    } else if i == n {
        1
    } else {
        2
    }
}

/// The compact open shapes and subgroups tested by [`membership`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `GL_N(o_E)`.
    K0,
    /// The level-`m` group (with `m = 0` meaning `K0`).
    Km(u32),
    /// Its intersection with the unitary group.
    KmH(u32),
    /// Same valuation bounds, middle entry only integral, no determinant
    /// condition.
    Algebra(u32),
    /// Level-`m` bounds with middle row and column `e_mid`.
    Reduced(u32),
}

/// Lower bound on the valuation of entry `(i, j)` in the level-`m` shape.
pub fn shape_bound(i: usize, j: usize, n: usize, m: u32) -> i32 {
    let m = m as i32;
    match (block_of(i, n), block_of(j, n)) {
        (0, 2) => -m,
        (1, 0) | (2, 0) | (2, 1) => m,
        _ => 0,
    }
}

fn at_least(x: &EElement, bound: i32) -> Result<bool> {
    match x.valuation() {
        Valuation::Finite(v) => Ok(v >= bound),
        Valuation::AtLeast(a) if a >= bound => Ok(true),
        Valuation::AtLeast(a) => Err(Error::PrecisionExhausted { available: a, floor: bound }),
    }
}

/// Whether `x` lies in the given shape; errors instead of guessing when a
/// required congruence is finer than the available precision.
pub fn membership(x: &MatrixE, which: Shape) -> Result<bool> {
    if !x.is_square() || x.n().is_multiple_of(2) {
        return Err(Error::ShapeMismatch("membership needs odd size".into()));
    }
    let big_n = x.n();
    let n = big_n / 2;
    let c = *x.ctx();
    let m = match which {
        Shape::K0 => 0,
        Shape::Km(m) | Shape::KmH(m) | Shape::Algebra(m) | Shape::Reduced(m) => m,
    };
    for i in 0..big_n {
        for j in 0..big_n {
            let e = x.get(i, j);
            if i == n && j == n {
                match which {
                    Shape::Reduced(_) => {
                        if !e.congruent_mod(&c.one(), e.prec().max(1))? {
                            return Ok(false);
                        }
                    }
                    Shape::Km(m) | Shape::KmH(m) if m > 0 => {
                        if !at_least(&e, 0)? || !e.congruent_mod(&c.one(), m as i32)? {
                            return Ok(false);
                        }
                    }
                    _ => {
                        if !at_least(&e, 0)? {
                            return Ok(false);
                        }
                    }
                }
                continue;
            }
            if matches!(which, Shape::Reduced(_)) && (i == n || j == n) {
                if !e.is_zero() {
                    return Ok(false);
                }
                continue;
            }
            if !at_least(&e, shape_bound(i, j, n, m))? {
                return Ok(false);
            }
        }
    }
    match which {
        Shape::Algebra(_) | Shape::Reduced(_) => Ok(true),
        _ => {
            if !x.det().is_unit() {
                return Ok(false);
            }
            if let Shape::KmH(_) = which {
                return is_unitary(x);
            }
            Ok(true)
        }
    }
}

/// `x J x^* = J` at precision.
pub fn is_unitary(x: &MatrixE) -> Result<bool> {
    let j = j_matrix(x.ctx(), x.n());
    let lhs = &(x * &j) * &x.star();
    Ok(lhs.eq_at_prec(&j))
}

/// `D = diag(I_n, 1, p^m I_n)`; the level-`m` group is `D K'_m D^{-1}`
/// with `K'_m` integral.
pub fn to_y_frame(x: &MatrixE, m: u32) -> MatrixE {
    let n = x.n() / 2;
    let m = m as i32;
    let dexp = |i: usize| if block_of(i, n) == 2 { m } else { 0 };
    MatrixE::from_fn(x.ctx(), x.n(), x.n(), |i, j| x.get(i, j).mul_p_pow(dexp(j) - dexp(i)))
}

pub fn from_y_frame(y: &MatrixE, m: u32) -> MatrixE {
    let n = y.n() / 2;
    let m = m as i32;
    let dexp = |i: usize| if block_of(i, n) == 2 { m } else { 0 };
    MatrixE::from_fn(y.ctx(), y.n(), y.n(), |i, j| y.get(i, j).mul_p_pow(dexp(i) - dexp(j)))
}

/// The form in the integral frame: `p^m D^{-1} J D^{-1}`, i.e. `J_N` with
/// the middle entry scaled by `p^m`.
pub fn j_frame(ctx: &RingContext, n_total: usize, m: u32) -> MatrixE {
    let mut j = j_matrix(ctx, n_total);
    let mid = n_total / 2;
    j.set(mid, mid, j.get(mid, mid).mul_p_pow(m as i32));
    j
}

/// `theta` read in the integral frame: `Jm y^{-*} Jm^{-1}`. Both forms are
/// anti-diagonal, so this is a signed reversal of `y^{-*}` with entries
/// `(i, mid)` divided by `p^m` and `(mid, j)` multiplied by `p^m`.
pub fn theta_frame(y: &MatrixE, m: u32) -> Result<MatrixE> {
    let big = y.n();
    let n = big / 2;
    let yi = y.star().invert()?;
    let j = j_matrix(y.ctx(), big);
    let m = m as i32;
    Ok(MatrixE::from_fn(y.ctx(), big, big, |a, b| {
        let (ar, br) = (big - 1 - a, big - 1 - b);
        // J^{-1} = tJ, so (J^{-1})_{br, b} = J_{b, br}
        let v = j.get(a, ar) * yi.get(ar, br) * j.get(b, br);
        let e = if a == n { m } else { 0 } - if b == n { m } else { 0 };
        v.mul_p_pow(e)
    }))
}

/// `sigma(y) = J y^* J^{-1}` read in the integral frame.
pub fn sigma_frame(y: &MatrixE, m: u32) -> MatrixE {
    let big = y.n();
    let n = big / 2;
    let j = j_matrix(y.ctx(), big);
    let m = m as i32;
    MatrixE::from_fn(y.ctx(), big, big, |a, b| {
        let (ar, br) = (big - 1 - a, big - 1 - b);
        let v = j.get(a, ar) * y.get(br, ar).conj() * j.get(b, br);
        let e = if a == n { m } else { 0 } - if b == n { m } else { 0 };
        v.mul_p_pow(e)
    })
}

/// `theta` on the level-`m` group, computed through the integral frame.
pub fn theta_level(x: &MatrixE, m: u32) -> Result<MatrixE> {
    Ok(from_y_frame(&theta_frame(&to_y_frame(x, m), m)?, m))
}

/// Inverse of a matrix in the level-`m` group, computed in the integral
/// frame so that no pivot has positive valuation.
pub fn invert_level(x: &MatrixE, m: u32) -> Result<MatrixE> {
    Ok(from_y_frame(&to_y_frame(x, m).invert()?, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> RingContext {
        RingContext::new(3, 6).unwrap()
    }

    #[test]
    fn j3_explicit_and_square() {
        let c = ctx();
        let j = j_matrix(&c, 3);
        let expected = MatrixE::from_ints(&c, &[&[0, 0, 1], &[0, -1, 0], &[1, 0, 0]]);
        assert!(j.eq_at_prec(&expected));
        assert!((&j * &j).eq_at_prec(&MatrixE::identity(&c, 3)));
    }

    #[test]
    fn j_prime_matches_display() {
        let c = ctx();
        let jp = j_prime(&c, 2);
        let expected =
            MatrixE::from_ints(&c, &[&[0, 0, 0, 1], &[0, 0, -1, 0], &[0, -1, 0, 0], &[1, 0, 0, 0]]);
        assert!(jp.eq_at_prec(&expected));
    }

    #[test]
    fn theta_of_diagonal() {
        let c = ctx();
        let (x1, x2, x3) = (c.elt(1, 1), c.elt(2, 0), c.elt(4, 3));
        let t = theta(&MatrixE::diag(&c, &[x1, x2, x3])).unwrap();
        let inv = |x: EElement| x.conj().inv().unwrap();
        let expected = MatrixE::diag(&c, &[inv(x3), inv(x2), inv(x1)]);
        assert!(t.eq_at_prec(&expected));
    }

    #[test]
    fn iota_and_kappa_identities() {
        let c = ctx();
        assert!(iota(&MatrixE::identity(&c, 2)).eq_at_prec(&MatrixE::identity(&c, 3)));
        let k = kappa(&c, 1);
        let eps = EElement::from_oe(&c, c.eps());
        let lhs = j_prime(&c, 1).scale(eps);
        let rhs = &(&k * &j_matrix(&c, 2)) * &k.star();
        assert!(lhs.eq_at_prec(&rhs));
    }

    #[test]
    fn charpoly_of_diagonal() {
        let c = ctx();
        let (a, b, d) = (c.int(2), c.elt(1, 1), c.int(5));
        let cp = MatrixE::diag(&c, &[a, b, d]).charpoly();
        // (X-a)(X-b)(X-d)
        assert!(cp[3].eq_at_prec(&c.one()));
        assert!(cp[2].eq_at_prec(&-(a + b + d)));
        assert!(cp[1].eq_at_prec(&(a * b + a * d + b * d)));
        assert!(cp[0].eq_at_prec(&-(a * b * d)));
        let id = MatrixE::identity(&c, 3).charpoly();
        let expected = [-1, 3, -3, 1];
        for (x, e) in id.iter().zip(expected) {
            assert!(x.eq_at_prec(&c.int(e)));
        }
    }

    #[test]
    fn inverse_of_torus_element() {
        let c = ctx();
        let u = c.elt(2, 1);
        let t = MatrixE::diag(&c, &[u, c.one(), u.conj().inv().unwrap()]);
        let ti = t.invert().unwrap();
        let expected = MatrixE::diag(&c, &[u.inv().unwrap(), c.one(), u.conj()]);
        assert!(ti.eq_at_prec(&expected));
        assert!(membership(&t, Shape::KmH(2)).unwrap());
    }

    #[test]
    fn membership_examples() {
        let c = ctx();
        for m in 0..3 {
            assert!(membership(&MatrixE::identity(&c, 3), Shape::Km(m)).unwrap());
        }
        let mut x = MatrixE::identity(&c, 3);
        x.set(1, 1, c.one() + c.p_power(1));
        assert!(!membership(&x, Shape::Km(2)).unwrap());
        assert!(membership(&x, Shape::Km(1)).unwrap());
        // top-right may carry p^-m
        let mut y = MatrixE::identity(&c, 3);
        y.set(0, 2, c.p_power(-1));
        assert!(membership(&y, Shape::Km(1)).unwrap());
        assert!(!membership(&y, Shape::K0).unwrap());
        // a zero entry known only mod p cannot certify valuation >= 2
        let mut z = MatrixE::identity(&c, 3);
        z.set(2, 0, c.zero().truncate_prec(1));
        assert!(membership(&z, Shape::Km(2)).is_err());
    }

    #[test]
    fn theta_frame_agrees_with_theta() {
        let c = ctx();
        let mut x = MatrixE::identity(&c, 3);
        x.set(0, 2, c.p_power(-1) * c.elt(1, 2));
        x.set(2, 0, c.p_power(1) * c.int(5));
        x.set(1, 0, c.p_power(1) * c.elt(2, 2));
        x.set(0, 1, c.elt(4, 1));
        let direct = theta(&x).unwrap();
        let framed = theta_level(&x, 1).unwrap();
        assert!(direct.eq_at_prec(&framed));
        assert!(framed.prec() >= direct.prec());
    }

    #[test]
    fn frame_round_trip() {
        let c = ctx();
        let mut x = MatrixE::identity(&c, 3);
        x.set(0, 2, c.p_power(-2) * c.elt(1, 2));
        x.set(2, 0, c.p_power(2) * c.int(5));
        let y = to_y_frame(&x, 2);
        assert!(y.is_integral());
        assert!(from_y_frame(&y, 2).eq_at_prec(&x));
    }
}
