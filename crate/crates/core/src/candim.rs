//! Canonical p-dimension of varieties in the class of products of flag
//! varieties of a central simple algebra.
//!
//! With `n = v_p(ind A)` and `m = v_p(ind A_{F(X)})`, the canonical
//! p-dimension of `X` equals `p^m (p^n - p^m)`, the dimension of `X(p^m; D)`
//! for the p-primary division part `D`. `X` is p-incompressible exactly when
//! this number is `dim X`.

use serde::{Deserialize, Serialize};

use crate::arith::{vp_u64, Prime};
use crate::csa::{AlgebraClass, FlagDescriptor, PPrimaryDivision, ProductVariety};
use crate::error::{Error, Result};
use crate::serde_dec::{dec, dec_vec_vec};

/// The variety a report is about: one dimension list per factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarietyDescriptor {
    pub algebra: AlgebraClass,
    #[serde(with = "dec_vec_vec")]
    pub factors: Vec<Vec<u64>>,
}

impl From<&ProductVariety> for VarietyDescriptor {
    fn from(product: &ProductVariety) -> Self {
        VarietyDescriptor {
            algebra: product.algebra(),
            factors: product
                .factors()
                .iter()
                .map(|f| f.dims().to_vec())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanDimReport {
    pub variety: VarietyDescriptor,
    pub p: Prime,
    #[serde(with = "dec")]
    pub n: u32,
    #[serde(with = "dec")]
    pub m: u32,
    #[serde(with = "dec")]
    pub cdim_p: u64,
    #[serde(with = "dec")]
    pub dim: u64,
    pub incompressible: bool,
}

/// `p^m (p^n - p^m)`.
pub fn grassmannian_cdim(p: Prime, n: u32, m: u32) -> Result<u64> {
    let (pn, pm) = (p.pow(n)?, p.pow(m)?);
    pm.checked_mul(pn - pm)
        .ok_or_else(|| Error::Overflow(format!("p^{m}(p^{n} - p^{m}) for p = {p}")))
}

pub fn cdim_p(product: &ProductVariety) -> Result<CanDimReport> {
    let alg = product.algebra();
    let p = alg.p();
    let n = alg.index_valuation();
    let m = vp_u64(product.generic_index(), p)?;
    let cdim = grassmannian_cdim(p, n, m)?;
    let dim = product.dimension()?;
    Ok(CanDimReport {
        variety: product.into(),
        p,
        n,
        m,
        cdim_p: cdim,
        dim,
        incompressible: cdim == dim,
    })
}

/// Reports for `X(p^m; D)`, `m = 0, ..., n`, with `deg D = p^n`. The row
/// `m = n` is the point `X(p^n; D)`.
pub fn incompressibility_table(p: Prime, n: u32) -> Result<Vec<CanDimReport>> {
    let d = PPrimaryDivision::new(p, n).algebra()?;
    (0..=n)
        .map(|m| {
            let i = p.pow(m)?;
            if i == d.degree() {
                return Ok(CanDimReport {
                    variety: VarietyDescriptor {
                        algebra: d,
                        factors: vec![vec![i]],
                    },
                    p,
                    n,
                    m,
                    cdim_p: 0,
                    dim: 0,
                    incompressible: true,
                });
            }
            cdim_p(&ProductVariety::single(FlagDescriptor::grassmannian(d, i)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csa::dim_flag;

    fn product(alg: AlgebraClass, factors: Vec<Vec<u64>>) -> ProductVariety {
        ProductVariety::from_dims(alg, factors).unwrap()
    }

    #[test]
    fn report_examples() {
        let d8 = AlgebraClass::division(8, Prime::TWO).unwrap();
        let r = cdim_p(&product(d8, vec![vec![2]])).unwrap();
        assert_eq!(
            (r.n, r.m, r.cdim_p, r.dim, r.incompressible),
            (3, 1, 12, 12, true)
        );

        let split = AlgebraClass::split(5, Prime::TWO).unwrap();
        let r = cdim_p(&product(split, vec![vec![1]])).unwrap();
        assert_eq!((r.cdim_p, r.incompressible), (0, false));

        let r = cdim_p(&product(d8, vec![vec![2], vec![2]])).unwrap();
        assert_eq!((r.m, r.cdim_p, r.dim, r.incompressible), (1, 12, 24, false));
    }

    #[test]
    fn non_primary_index_uses_p_part() {
        let a = AlgebraClass::new(12, 4, Prime::TWO).unwrap();
        let r = cdim_p(&product(a, vec![vec![6]])).unwrap();
        assert_eq!((r.n, r.m, r.cdim_p, r.dim), (2, 1, 4, 36));
        let r3 = cdim_p(&product(
            AlgebraClass::new(12, 4, Prime::THREE).unwrap(),
            vec![vec![6]],
        ))
        .unwrap();
        assert_eq!((r3.n, r3.m, r3.cdim_p), (0, 0, 0));
    }

    #[test]
    fn table_examples() {
        let t = incompressibility_table(Prime::TWO, 2).unwrap();
        let cdims: Vec<u64> = t.iter().map(|r| r.cdim_p).collect();
        assert_eq!(cdims, vec![3, 4, 0]);
        assert!(t.iter().all(|r| r.incompressible && r.cdim_p == r.dim));
        let t = incompressibility_table(Prime::THREE, 1).unwrap();
        assert_eq!(t[0].cdim_p, 2);
        let t = incompressibility_table(Prime::FIVE, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].cdim_p, t[0].dim), (0, 0));
    }

    #[test]
    fn grassmannian_incompressibility_by_enumeration() {
        for (p, n) in [
            (2, 1),
            (2, 2),
            (2, 3),
            (2, 4),
            (3, 1),
            (3, 2),
            (3, 3),
            (5, 1),
            (5, 2),
        ] {
            let p = Prime::new(p).unwrap();
            let d = AlgebraClass::division(p.pow(n).unwrap(), p).unwrap();
            for i in 1..d.degree() {
                let r = cdim_p(&product(d, vec![vec![i]])).unwrap();
                let m = vp_u64(i, p).unwrap().min(n);
                let pm = p.pow(m).unwrap();
                assert_eq!(r.m, m);
                assert!(r.cdim_p <= r.dim);
                assert_eq!(
                    r.incompressible,
                    pm * (d.degree() - pm) == i * (d.degree() - i)
                );
                assert_eq!(r.dim, dim_flag(d.degree(), &[i]).unwrap());
            }
        }
    }

    #[test]
    fn extra_factors_never_raise_cdim() {
        let d = AlgebraClass::division(27, Prime::THREE).unwrap();
        for i in 1..27 {
            let one = cdim_p(&product(d, vec![vec![i]])).unwrap();
            for j in 1..27 {
                let two = cdim_p(&product(d, vec![vec![i], vec![j]])).unwrap();
                assert!(two.m <= one.m);
                assert!(two.cdim_p <= two.dim);
                assert_eq!(
                    two.cdim_p,
                    grassmannian_cdim(Prime::THREE, 3, two.m).unwrap()
                );
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let d8 = AlgebraClass::division(8, Prime::TWO).unwrap();
        let r = cdim_p(&product(d8, vec![vec![2, 4], vec![1]])).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["cdim_p"], "7");
        assert_eq!(
            v["variety"]["factors"],
            serde_json::json!([["2", "4"], ["1"]])
        );
        assert_eq!(serde_json::from_value::<CanDimReport>(v).unwrap(), r);
    }
}
