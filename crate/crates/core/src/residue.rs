//! Matrices over the residue field `F_{q^2}`.

use crate::error::{Error, Result};
use crate::matrices::MatrixE;
use crate::ring::{residue_ctx, EElement, Oe, RingContext};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FMat {
    pub n: usize,
    pub data: Vec<Oe>,
}

impl FMat {
    pub fn zeros(n: usize) -> Self {
        FMat { n, data: vec![Oe::zero(); n * n] }
    }
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Oe::one());
        }
        m
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Oe {
        self.data[i * self.n + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Oe) {
        self.data[i * self.n + j] = v;
    }

    /// Residue of an integral square matrix.
    pub fn of(x: &MatrixE) -> Result<Self> {
        let rows = x.residue()?;
        Ok(FMat { n: x.n(), data: rows.into_iter().flatten().collect() })
    }

    /// Teichmuller-free lift: entries with coordinates in `[0, p)`.
    pub fn lift(&self, ctx: &RingContext) -> MatrixE {
        MatrixE::from_fn(ctx, self.n, self.n, |i, j| {
            let x = self.get(i, j);
            EElement::from_oe(ctx, Oe::new(ctx, x.a0, x.a1))
        })
    }

    pub fn mul(&self, o: &FMat, f: &RingContext) -> FMat {
        let n = self.n;
        let mut out = FMat::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.get(i, l);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j).add(&a.mul(&o.get(l, j), f), f);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
    pub fn add(&self, o: &FMat, f: &RingContext) -> FMat {
        FMat { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a.add(b, f)).collect() }
    }
    pub fn sub(&self, o: &FMat, f: &RingContext) -> FMat {
        FMat { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| a.sub(b, f)).collect() }
    }
    pub fn scale(&self, c: Oe, f: &RingContext) -> FMat {
        FMat { n: self.n, data: self.data.iter().map(|a| a.mul(&c, f)).collect() }
    }
    pub fn star(&self, f: &RingContext) -> FMat {
        let mut out = FMat::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out.set(i, j, self.get(j, i).conj(f));
            }
        }
        out
    }
    pub fn is_identity(&self) -> bool {
        *self == FMat::identity(self.n)
    }
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn pow(&self, mut e: u64, f: &RingContext) -> FMat {
        let mut r = FMat::identity(self.n);
        let mut b = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul(&b, f);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b, f);
            }
        }
        r
    }

    /// Multiplicative order by power iteration, failing past `cap`.
    pub fn order(&self, f: &RingContext, cap: u64) -> Result<u64> {
        let mut x = self.clone();
        let mut r = 1;
        while !x.is_identity() {
            if r >= cap {
                return Err(Error::OrderOverflow(cap));
            }
            x = x.mul(self, f);
            r += 1;
        }
        Ok(r)
    }

    /// Reduced row echelon form; returns (rank, determinant, reduced
    /// matrix, pivot columns).
    fn eliminate(&self, f: &RingContext, rhs: Option<&mut FMat>) -> (usize, Oe, FMat, Vec<usize>) {
        let n = self.n;
        let mut a = self.clone();
        let mut det = Oe::one();
        let mut rank = 0;
        let mut pivots = Vec::new();
        let mut rhs = rhs;
        for col in 0..n {
            let Some(pr) = (rank..n).find(|&i| !a.get(i, col).is_zero()) else {
                det = Oe::zero();
                continue;
            };
            if pr != rank {
                for j in 0..n {
                    a.data.swap(rank * n + j, pr * n + j);
                }
                if let Some(r) = rhs.as_deref_mut() {
                    for j in 0..r.n {
                        r.data.swap(rank * r.n + j, pr * r.n + j);
                    }
                }
                det = det.neg(f);
            }
            let piv = a.get(rank, col);
            det = det.mul(&piv, f);
            let inv = piv.inv(f).expect("nonzero residue is invertible");
            for j in 0..n {
                a.set(rank, j, a.get(rank, j).mul(&inv, f));
            }
            if let Some(r) = rhs.as_deref_mut() {
                for j in 0..r.n {
                    r.set(rank, j, r.get(rank, j).mul(&inv, f));
                }
            }
            for i in 0..n {
                if i == rank || a.get(i, col).is_zero() {
                    continue;
                }
                let c = a.get(i, col);
                for j in 0..n {
                    a.set(i, j, a.get(i, j).sub(&c.mul(&a.get(rank, j), f), f));
                }
                if let Some(r) = rhs.as_deref_mut() {
                    for j in 0..r.n {
                        r.set(i, j, r.get(i, j).sub(&c.mul(&r.get(rank, j), f), f));
                    }
                }
            }
            pivots.push(col);
            rank += 1;
        }
        (rank, det, a, pivots)
    }

    pub fn rank(&self, f: &RingContext) -> usize {
        self.eliminate(f, None).0
    }
    pub fn det(&self, f: &RingContext) -> Oe {
        self.eliminate(f, None).1
    }
    pub fn inverse(&self, f: &RingContext) -> Option<FMat> {
        let mut r = FMat::identity(self.n);
        let (rank, ..) = self.eliminate(f, Some(&mut r));
        (rank == self.n).then_some(r)
    }

    /// Basis of the right null space.
    pub fn kernel(&self, f: &RingContext) -> Vec<Vec<Oe>> {
        let n = self.n;
        let (_, _, a, pivots) = self.eliminate(f, None);
        let mut out = Vec::new();
        for free in (0..n).filter(|c| !pivots.contains(c)) {
            let mut v = vec![Oe::zero(); n];
            v[free] = Oe::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = a.get(r, free).neg(f);
            }
            out.push(v);
        }
        out
    }

    /// Characteristic polynomial `det(X - A)`, ascending coefficients.
    pub fn charpoly(&self, f: &RingContext) -> Vec<Oe> {
        let n = self.n;
        let mut p = vec![Oe::one()];
        for j in 0..n {
            let mut t = vec![Oe::one(), self.get(j, j).neg(f)];
            let mut v: Vec<Oe> = (0..j).map(|i| self.get(i, j)).collect();
            for _ in 0..j {
                let rv = (0..j).fold(Oe::zero(), |s, l| s.add(&self.get(j, l).mul(&v[l], f), f));
                t.push(rv.neg(f));
                v = (0..j)
                    .map(|i| (0..j).fold(Oe::zero(), |s, l| s.add(&self.get(i, l).mul(&v[l], f), f)))
                    .collect();
            }
            let mut q = vec![Oe::zero(); j + 2];
            for (i, qi) in q.iter_mut().enumerate() {
                for (l, pl) in p.iter().enumerate() {
                    if i >= l && i - l < t.len() {
                        *qi = qi.add(&t[i - l].mul(pl, f), f);
                    }
                }
            }
            p = q;
        }
        p.reverse();
        p
    }

    /// Whether `(A - I)^n = 0`.
    pub fn is_unipotent(&self, f: &RingContext) -> bool {
        self.sub(&FMat::identity(self.n), f).pow(self.n as u64, f).is_zero()
    }
}

/// Residue context of `ctx` (shorthand).
pub fn field(ctx: &RingContext) -> RingContext {
    residue_ctx(ctx)
}

/// Residue classes of a polynomial with integral coefficients.
pub fn poly_residue(coeffs: &[EElement]) -> Vec<Oe> {
    coeffs.iter().map(|c| c.residue()).collect()
}

/// Polynomials over `F_{q^2}`, ascending coefficients.
pub mod poly {
    use crate::ring::{Oe, RingContext};

    pub fn trim(mut a: Vec<Oe>) -> Vec<Oe> {
        while a.last().is_some_and(|c| c.is_zero()) {
            a.pop();
        }
        a
    }

    pub fn eval(a: &[Oe], x: Oe, f: &RingContext) -> Oe {
        a.iter().rev().fold(Oe::zero(), |acc, c| acc.mul(&x, f).add(c, f))
    }

    pub fn derivative(a: &[Oe], f: &RingContext) -> Vec<Oe> {
        trim(a.iter().enumerate().skip(1).map(|(i, c)| c.scale(i as u64 % f.p(), f)).collect())
    }

    pub fn rem(a: &[Oe], b: &[Oe], f: &RingContext) -> Vec<Oe> {
        let b = trim(b.to_vec());
        let mut r = trim(a.to_vec());
        let lead = b.last().expect("division by zero polynomial").inv(f).unwrap();
        while r.len() >= b.len() {
            let shift = r.len() - b.len();
            let c = r.last().unwrap().mul(&lead, f);
            for (i, bi) in b.iter().enumerate() {
                r[shift + i] = r[shift + i].sub(&c.mul(bi, f), f);
            }
            r = trim(r);
        }
        r
    }

    pub fn gcd(a: &[Oe], b: &[Oe], f: &RingContext) -> Vec<Oe> {
        let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
        while !b.is_empty() {
            let r = rem(&a, &b, f);
            a = b;
            b = r;
        }
        if let Some(l) = a.last().copied() {
            let li = l.inv(f).unwrap();
            a = a.iter().map(|c| c.mul(&li, f)).collect();
        }
        a
    }

    pub fn is_squarefree(a: &[Oe], f: &RingContext) -> bool {
        gcd(a, &derivative(a, f), f).len() <= 1
    }

    /// Product of two polynomials.
    pub fn mul(a: &[Oe], b: &[Oe], f: &RingContext) -> Vec<Oe> {
        if a.is_empty() || b.is_empty() {
            return vec![];
        }
        let mut out = vec![Oe::zero(); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] = out[i + j].add(&x.mul(y, f), f);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_inverse() {
        let ctx = RingContext::new(3, 4).unwrap();
        let f = field(&ctx);
        // w has order 4 in F_9^x when w^2 = -1
        let mut a = FMat::identity(3);
        a.set(0, 0, Oe::new(&f, 0, 1));
        assert_eq!(a.order(&f, 100).unwrap(), 4);
        let ai = a.inverse(&f).unwrap();
        assert!(a.mul(&ai, &f).is_identity());
        let mut u = FMat::identity(3);
        u.set(0, 1, Oe::one());
        assert!(u.is_unipotent(&f));
        assert_eq!(u.order(&f, 100).unwrap(), 3);
        assert!(matches!(u.order(&f, 2), Err(Error::OrderOverflow(2))));
    }

    #[test]
    fn kernel_and_charpoly() {
        let ctx = RingContext::new(5, 2).unwrap();
        let f = field(&ctx);
        let mut a = FMat::zeros(3);
        a.set(0, 1, Oe::one());
        a.set(1, 2, Oe::one());
        let k = a.kernel(&f);
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![Oe::one(), Oe::zero(), Oe::zero()]);
        assert_eq!(a.rank(&f), 2);
        // nilpotent: charpoly X^3
        let cp = a.charpoly(&f);
        assert_eq!(cp, vec![Oe::zero(), Oe::zero(), Oe::zero(), Oe::one()]);
        assert!(!poly::is_squarefree(&cp, &f));
        // X^2 - 1 = (X - 1)(X + 1)
        let q = vec![Oe::new(&f, 4, 0), Oe::zero(), Oe::one()];
        assert!(poly::is_squarefree(&q, &f));
        assert!(poly::eval(&q, Oe::new(&f, 4, 0), &f).is_zero());
    }
}
