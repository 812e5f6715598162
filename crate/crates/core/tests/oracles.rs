//! Library results against independent, deliberately naive oracles.

use motivec::arith::{binom, gauss_binom, vp, vp_binom, Natural, Prime, QPoly};
use motivec::csa::dim_flag;
use motivec::split::{schubert_cells, split_flag_poincare, split_grassmannian_motive};
use num_traits::Zero;

fn pascal(rows: usize) -> Vec<Vec<Natural>> {
    let mut t: Vec<Vec<Natural>> = vec![vec![Natural::from(1u32)]];
    for n in 1..=rows {
        let prev = &t[n - 1];
        let row = (0..=n)
            .map(|k| {
                let left = if k > 0 {
                    prev[k - 1].clone()
                } else {
                    Natural::zero()
                };
                let right = prev.get(k).cloned().unwrap_or_default();
                left + right
            })
            .collect();
        t.push(row);
    }
    t
}

fn brute_vp(mut x: Natural, p: u64) -> u32 {
    let p = Natural::from(p);
    let mut e = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        e += 1;
    }
    e
}

// Sum of q^{inversions} over binary words with k ones and n - k zeros.
fn inversion_q_binomial(n: u32, k: u32) -> QPoly {
    let mut coeffs = vec![0u64; (k * (n - k) + 1) as usize];
    for word in 0u32..(1 << n) {
        if word.count_ones() != k {
            continue;
        }
        let mut inversions = 0;
        let mut ones_seen = 0;
        for bit in (0..n).rev() {
            if word & (1 << bit) != 0 {
                ones_seen += 1;
            } else {
                inversions += ones_seen;
            }
        }
        coeffs[inversions as usize] += 1;
    }
    QPoly::from_u64s(&coeffs)
}

#[test]
fn binom_matches_pascal_triangle() {
    let t = pascal(80);
    for n in 0..=80u64 {
        for k in -2..=(n as i64 + 2) {
            let expected = if (0..=n as i64).contains(&k) {
                t[n as usize][k as usize].clone()
            } else {
                Natural::zero()
            };
            assert_eq!(binom(n, k), expected, "binom({n}, {k})");
        }
    }
}

#[test]
fn vp_matches_repeated_division() {
    for p in [2u64, 3, 5, 7, 11] {
        let prime = Prime::new(p).unwrap();
        for x in 1u64..3000 {
            assert_eq!(
                vp(&Natural::from(x), prime).unwrap(),
                brute_vp(Natural::from(x), p)
            );
        }
        let big = Natural::from(p).pow(70) * Natural::from(p + 1);
        assert_eq!(vp(&big, prime).unwrap(), brute_vp(big.clone(), p));
    }
}

#[test]
fn kummer_matches_brute_force() {
    let t = pascal(200);
    for p in [2u64, 3, 5, 7] {
        let prime = Prime::new(p).unwrap();
        for n in 0..=200u64 {
            for k in 0..=n {
                let expected = brute_vp(t[n as usize][k as usize].clone(), p);
                assert_eq!(
                    vp_binom(n, k, prime).unwrap(),
                    expected,
                    "v_{p} binom({n},{k})"
                );
            }
        }
    }
}

#[test]
fn q_binomial_matches_inversion_count() {
    for n in 0..=12u32 {
        for k in 0..=n {
            assert_eq!(
                gauss_binom(n as u64, k as i64),
                inversion_q_binomial(n, k),
                "[{n} {k}]"
            );
        }
    }
}

#[test]
fn q_pascal_and_symmetry() {
    for n in 1..=12u64 {
        for k in 0..=n as i64 {
            let lhs = gauss_binom(n, k);
            let a = gauss_binom(n - 1, k - 1);
            let b = gauss_binom(n - 1, k).shift(k as usize);
            assert_eq!(lhs, &a + &b, "q-Pascal at ({n}, {k})");
            assert_eq!(lhs, gauss_binom(n, n as i64 - k));
            // palindromic coefficients
            let c = lhs.coeffs();
            assert!(c.iter().eq(c.iter().rev()));
            assert_eq!(lhs.eval1(), binom(n, k));
        }
    }
}

#[test]
fn schubert_cells_match_motive_shifts() {
    for d in 1..=10u64 {
        for k in 0..=d {
            let shifts: Vec<u64> = split_grassmannian_motive(d, k, Prime::TWO)
                .unwrap()
                .expanded()
                .iter()
                .map(|t| t.shift)
                .collect();
            assert_eq!(schubert_cells(d, k).as_slice(), shifts.as_slice());
        }
    }
}

// A flag of type (i_1 < ... < i_r) in d has d! / prod of block factorials
// points over the field with one element: the q = 1 value.
#[test]
fn flag_rank_is_multinomial() {
    let fact = |n: u64| (1..=n).fold(Natural::from(1u32), |acc, i| acc * Natural::from(i));
    for d in 2..=9u64 {
        for mask in 1u32..(1 << (d - 1)) {
            let dims: Vec<u64> = (1..d).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let mut blocks = Vec::new();
            let mut prev = 0;
            for &i in dims.iter().chain(std::iter::once(&d)) {
                blocks.push(i - prev);
                prev = i;
            }
            let denom = blocks
                .iter()
                .fold(Natural::from(1u32), |acc, &b| acc * fact(b));
            let poly = split_flag_poincare(d, &dims).unwrap();
            assert_eq!(poly.eval1(), fact(d) / denom);
            assert_eq!(poly.degree(), Some(dim_flag(d, &dims).unwrap() as usize));
        }
    }
}
