//! Linear algebra over `Z/p^k` (Smith form, kernels) and over `F_p`.

/// Dense integer matrix with entries reduced mod `modulus`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl ZMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ZMat { rows, cols, data: vec![0; rows * cols] }
    }
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }
    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }
}

fn val(a: u64, p: u64, k: u32) -> u32 {
    if a == 0 {
        return k;
    }
    let (mut a, mut v) = (a, 0);
    while a % p == 0 {
        a /= p;
        v += 1;
    }
    v
}

/// Smith normal form of `a` over `Z/p^k`: returns the exponents `a_i` of
/// the diagonal `p^{a_i}` (with `k` for zero) and the column transform `V`
/// such that `U a V` is diagonal for some invertible `U`.
pub fn smith(a: &ZMat, p: u64, k: u32) -> (Vec<u32>, ZMat) {
    let modulus = p.pow(k);
    let mut a = a.clone();
    let (r, c) = (a.rows, a.cols);
    let mut v = ZMat::identity(c);
    let mut diag = Vec::new();
    for t in 0..r.min(c) {
        let mut best: Option<(u32, usize, usize)> = None;
        for i in t..r {
            for j in t..c {
                let e = val(a.get(i, j), p, k);
                if e < k && best.is_none_or(|(b, _, _)| e < b) {
                    best = Some((e, i, j));
                }
            }
        }
        let Some((e, pi, pj)) = best else { break };
        // move pivot to (t, t)
        for j in 0..c {
            a.data.swap(t * c + j, pi * c + j);
        }
        for i in 0..r {
            a.data.swap(i * c + t, i * c + pj);
        }
        for i in 0..c {
            v.data.swap(i * c + t, i * c + pj);
        }
        let pe = p.pow(e);
        let unit = a.get(t, t) / pe;
        let uinv = crate::ring::mod_inv(unit, modulus).expect("pivot cofactor is a unit");
        for j in 0..c {
            a.set(t, j, a.get(t, j) * uinv % modulus);
        }
        for i in 0..r {
            if i == t || a.get(i, t) == 0 {
                continue;
            }
            let f = a.get(i, t) / pe;
            for j in 0..c {
                let x = (a.get(i, j) + modulus - f * a.get(t, j) % modulus) % modulus;
                a.set(i, j, x);
            }
        }
        for j in 0..c {
            if j == t || a.get(t, j) == 0 {
                continue;
            }
            let f = a.get(t, j) / pe;
            for i in 0..r {
                let x = (a.get(i, j) + modulus - f * a.get(i, t) % modulus) % modulus;
                a.set(i, j, x);
            }
            for i in 0..c {
                let x = (v.get(i, j) + modulus - f * v.get(i, t) % modulus) % modulus;
                v.set(i, j, x);
            }
        }
        diag.push(e);
    }
    while diag.len() < c {
        diag.push(k);
    }
    (diag, v)
}

/// Generators of `{x : a x = 0}` over `Z/p^k`: the columns
/// `p^{k - a_i} V e_i` for each Smith exponent `a_i > 0`, plus `V e_i` past
/// the diagonal.
pub fn kernel(a: &ZMat, p: u64, k: u32) -> Vec<Vec<u64>> {
    let modulus = p.pow(k);
    let (diag, v) = smith(a, p, k);
    let mut out = Vec::new();
    for (i, &e) in diag.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let s = p.pow(k - e.min(k));
        out.push(v.column(i).iter().map(|x| x * s % modulus).collect());
    }
    // columns beyond the diagonal are unconstrained
    out.extend((diag.len()..a.cols).map(|i| v.column(i)));
    out
}

/// Number of Smith exponents below `bound`: the rank of `a` read with
/// `bound` digits of precision.
pub fn rank_at(a: &ZMat, p: u64, k: u32, bound: u32) -> usize {
    smith(a, p, k).0.iter().filter(|&&e| e < bound).count()
}

/// Reduced row echelon solve of `a x = b` over `F_p`; returns one solution.
pub fn solve_mod_p(a: &ZMat, b: &[u64], p: u64) -> Option<Vec<u64>> {
    let (r, c) = (a.rows, a.cols);
    let mut m: Vec<Vec<u64>> = (0..r)
        .map(|i| {
            let mut row: Vec<u64> = (0..c).map(|j| a.get(i, j) % p).collect();
            row.push(b[i] % p);
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..c {
        let Some(pr) = (row..r).find(|&i| m[i][col] != 0) else { continue };
        m.swap(row, pr);
        let inv = crate::ring::mod_inv(m[row][col], p).unwrap();
        for x in m[row].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..r {
            if i != row && m[i][col] != 0 {
                let f = m[i][col];
                for j in 0..=c {
                    m[i][j] = (m[i][j] + p * p - f * m[row][j] % p) % p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == r {
            break;
        }
    }
    if m[row..].iter().any(|rw| rw[c] != 0) {
        return None;
    }
    let mut x = vec![0; c];
    for (i, &col) in pivots.iter().enumerate() {
        x[col] = m[i][c];
    }
    Some(x)
}

pub fn rank_mod_p(a: &ZMat, p: u64) -> usize {
    rank_at(a, p, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[u64]]) -> ZMat {
        let mut m = ZMat::zeros(rows.len(), rows[0].len());
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    fn apply(a: &ZMat, x: &[u64], modulus: u64) -> Vec<u64> {
        (0..a.rows).map(|i| (0..a.cols).map(|j| a.get(i, j) * x[j]).sum::<u64>() % modulus).collect()
    }

    #[test]
    fn smith_exponents() {
        // diag(3, 9) up to unimodular change, over Z/27
        let a = mat(&[&[3, 6], &[6, 21]]);
        let (d, _) = smith(&a, 3, 3);
        let mut d = d;
        d.sort();
        assert_eq!(d, vec![1, 2]);
    }

    #[test]
    fn kernel_vectors_are_killed() {
        let a = mat(&[&[3, 6, 1], &[6, 12, 2]]);
        let ker = kernel(&a, 3, 3);
        assert!(!ker.is_empty());
        for x in &ker {
            assert!(apply(&a, x, 27).iter().all(|&y| y == 0));
        }
        // (1, 1, -9) is in the kernel; it must be a combination of the
        // generators, so the kernel has full rank 2 mod 3 in this case
        assert_eq!(ker.len(), 2);
    }

    #[test]
    fn solve_over_fp() {
        let a = mat(&[&[1, 2], &[2, 4]]);
        let x = solve_mod_p(&a, &[1, 2], 5).unwrap();
        assert_eq!(apply(&a, &x, 5), vec![1, 2]);
        assert!(solve_mod_p(&a, &[1, 1], 5).is_none());
        assert_eq!(rank_mod_p(&a, 5), 1);
    }
}
