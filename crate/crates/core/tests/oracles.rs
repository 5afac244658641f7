//! Brute-force references, independent of the library's algorithms, on
//! rings small enough to enumerate.

use endoscopy_core::descent::{outer_unitary_residues, residue_group};
use endoscopy_core::twisted::{tjd, unipotent_sqrt};
use endoscopy_core::zpk::{kernel, smith, solve_mod_p, ZMat};
use endoscopy_core::{EElement, MatrixE, Oe, RingContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `a0 + a1 w` with `w^2 = -g1 w - g0`, in plain integers.
fn naive_mul(c: &RingContext, x: (u64, u64), y: (u64, u64)) -> (u64, u64) {
    let m = c.modulus() as i128;
    let (g1, g0) = c.quadratic();
    let (x0, x1, y0, y1) = (x.0 as i128, x.1 as i128, y.0 as i128, y.1 as i128);
    let t = x1 * y1;
    let a0 = x0 * y0 - t * g0 as i128;
    let a1 = x0 * y1 + x1 * y0 - t * g1 as i128;
    (a0.rem_euclid(m) as u64, a1.rem_euclid(m) as u64)
}

fn all_elements(c: &RingContext) -> Vec<Oe> {
    let q = c.modulus();
    (0..q).flat_map(|a1| (0..q).map(move |a0| (a0, a1))).map(|(a0, a1)| Oe::new(c, a0, a1)).collect()
}

#[test]
fn ring_matches_schoolbook_arithmetic() {
    for (p, k) in [(3, 2), (5, 2), (7, 1)] {
        let c = RingContext::new(p, k).unwrap();
        let els = all_elements(&c);
        let (g1, _) = c.quadratic();
        for x in &els {
            // conj(w) = -g1 - w
            let conj = Oe::from_ints(&c, x.a0 as i64 - (x.a1 * g1) as i64, -(x.a1 as i64));
            assert_eq!(x.conj(&c), conj);
            let n = naive_mul(&c, (x.a0, x.a1), (conj.a0, conj.a1));
            assert_eq!((x.norm(&c), 0), n);
            for y in &els {
                let z = x.mul(y, &c);
                assert_eq!((z.a0, z.a1), naive_mul(&c, (x.a0, x.a1), (y.a0, y.a1)));
            }
            let inverse = els.iter().find(|y| x.mul(y, &c) == Oe::one()).copied();
            assert_eq!(x.inv(&c), inverse, "p = {p}, x = {x:?}");
        }
    }
}

#[test]
fn teichmuller_is_the_unique_root_of_unity_in_its_class() {
    let c = RingContext::new(3, 3).unwrap();
    let q2 = c.q() * c.q() - 1;
    let els = all_elements(&c);
    for r in c.residue_units() {
        let roots: Vec<Oe> = els
            .iter()
            .filter(|x| x.residue(&c) == r.residue(&c) && x.pow(q2, &c) == Oe::one())
            .copied()
            .collect();
        assert_eq!(roots, vec![r.teichmuller(&c)]);
    }
}

fn scalar(c: &RingContext, x: Oe) -> MatrixE {
    MatrixE::diag(c, &[EElement::from_oe(c, x)])
}

#[test]
fn scalar_tjd_and_sqrt_against_search() {
    let c = RingContext::new(3, 3).unwrap();
    let els = all_elements(&c);
    let q2 = c.q() * c.q() - 1;
    let principal: Vec<Oe> = els.iter().filter(|x| x.sub(&Oe::one(), &c).val(&c) >= 1).copied().collect();
    for x in els.iter().filter(|x| x.is_unit(&c)) {
        let t = els.iter().find(|t| t.pow(q2, &c) == Oe::one() && t.residue(&c) == x.residue(&c)).unwrap();
        let got = tjd(&scalar(&c, *x), 0).unwrap();
        assert!(got.ss.eq_at_prec(&scalar(&c, *t)), "x = {x:?}");
    }
    for v in &principal {
        let roots: Vec<&Oe> = principal.iter().filter(|u| u.mul(u, &c) == *v).collect();
        assert_eq!(roots.len(), 1);
        let got = unipotent_sqrt(&scalar(&c, *v), 0).unwrap();
        assert!(got.eq_at_prec(&scalar(&c, *roots[0])));
    }
}

fn laplace_det(a: &[Vec<EElement>], zero: EElement) -> EElement {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut acc = zero;
    for j in 0..n {
        let minor: Vec<Vec<EElement>> = a[1..]
            .iter()
            .map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, x)| *x).collect())
            .collect();
        let term = a[0][j] * laplace_det(&minor, zero);
        acc = if j % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

#[test]
fn charpoly_against_cofactor_expansion() {
    let c = RingContext::new(5, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 1..=4 {
        for _ in 0..10 {
            let a = MatrixE::from_fn(&c, n, n, |_, _| {
                EElement::from_oe(&c, Oe::new(&c, rng.gen_range(0..625), rng.gen_range(0..625)))
            });
            let cp = a.charpoly();
            for _ in 0..3 {
                let lam = EElement::from_oe(&c, Oe::new(&c, rng.gen_range(0..625), rng.gen_range(0..625)));
                let rows: Vec<Vec<EElement>> = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| if i == j { lam - a.get(i, j) } else { c.zero() - a.get(i, j) })
                            .collect()
                    })
                    .collect();
                let horner = cp.iter().rev().fold(c.zero(), |acc, co| acc * lam + *co);
                assert!(horner.eq_at_prec(&laplace_det(&rows, c.zero())), "n = {n}");
            }
        }
    }
}

#[test]
fn unitary_group_orders() {
    // |U_2(F_q)| = q (q^2 - 1)(q + 1)
    for p in [3u64, 5] {
        let c = RingContext::new(p, 2).unwrap();
        assert_eq!(outer_unitary_residues(&c).len() as u64, p * (p * p - 1) * (p + 1));
    }
    // the middle column adds two free entries of F_{q^2}
    let c = RingContext::new(3, 2).unwrap();
    assert_eq!(residue_group(&c).len(), 96 * 81);
}

fn apply(a: &ZMat, x: &[u64], modulus: u64) -> Vec<u64> {
    (0..a.rows).map(|i| (0..a.cols).map(|j| a.get(i, j) * x[j] % modulus).sum::<u64>() % modulus).collect()
}

fn vectors(len: usize, modulus: u64) -> impl Iterator<Item = Vec<u64>> {
    (0..modulus.pow(len as u32)).map(move |mut i| {
        (0..len)
            .map(|_| {
                let d = i % modulus;
                i /= modulus;
                d
            })
            .collect()
    })
}

#[test]
fn smith_kernel_against_enumeration() {
    let (p, k) = (3u64, 2u32);
    let modulus = p.pow(k);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..40 {
        let (r, cdim) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let mut a = ZMat::zeros(r, cdim);
        for i in 0..r {
            for j in 0..cdim {
                // bias toward p-divisible entries so torsion shows up
                let x = if rng.gen_bool(0.5) { p * rng.gen_range(0..p) } else { rng.gen_range(0..modulus) };
                a.set(i, j, x);
            }
        }
        let ker: Vec<Vec<u64>> =
            vectors(cdim, modulus).filter(|x| apply(&a, x, modulus).iter().all(|&y| y == 0)).collect();
        let (diag, _) = smith(&a, p, k);
        let free = cdim - diag.len();
        let predicted: u64 =
            diag.iter().map(|&e| p.pow(e.min(k))).product::<u64>() * modulus.pow(free as u32);
        assert_eq!(ker.len() as u64, predicted, "{a:?}");
        // the generators span exactly the kernel
        let gens = kernel(&a, p, k);
        let mut span = std::collections::HashSet::from([vec![0u64; cdim]]);
        loop {
            let before = span.len();
            let next: Vec<Vec<u64>> = span
                .iter()
                .flat_map(|v| {
                    gens.iter().map(move |g| v.iter().zip(g).map(|(x, y)| (x + y) % modulus).collect())
                })
                .collect();
            span.extend(next);
            if span.len() == before {
                break;
            }
        }
        assert_eq!(span.len(), ker.len(), "{a:?}");
        assert!(span.iter().all(|v| ker.contains(v)));
    }
}

#[test]
fn solve_mod_p_against_enumeration() {
    let p = 5u64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let mut a = ZMat::zeros(3, 3);
        for x in a.data.iter_mut() {
            *x = if rng.gen_bool(0.3) { 0 } else { rng.gen_range(0..p) };
        }
        let b: Vec<u64> = (0..3).map(|_| rng.gen_range(0..p)).collect();
        let solvable = vectors(3, p).any(|x| apply(&a, &x, p) == b);
        match solve_mod_p(&a, &b, p) {
            Some(x) => assert_eq!(apply(&a, &x, p), b),
            None => assert!(!solvable, "{a:?} {b:?}"),
        }
    }
}
