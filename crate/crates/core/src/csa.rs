//! Central simple algebras reduced to their (degree, index, p) data, flag
//! varieties of right ideals and finite products of them.
//!
//! Everything here depends only on degree and index: over the function field
//! of `X(i_1, ..., i_r; A)` the index of `A` drops to `gcd(i_1, ..., i_r, ind A)`,
//! and the degrees of closed points on that variety have gcd
//! `ind A / gcd(i_1, ..., i_r, ind A)`.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{vp_u64, Prime};
use crate::error::{domain, Error, Result};
use crate::serde_dec::{dec, dec_vec};

/// A central simple algebra up to the data every formula here depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawAlgebra", into = "RawAlgebra")]
pub struct AlgebraClass {
    degree: u64,
    index: u64,
    p: Prime,
}

#[derive(Serialize, Deserialize)]
struct RawAlgebra {
    #[serde(with = "dec")]
    degree: u64,
    #[serde(with = "dec")]
    index: u64,
    #[serde(with = "dec")]
    p: u64,
}

impl TryFrom<RawAlgebra> for AlgebraClass {
    type Error = Error;

    fn try_from(raw: RawAlgebra) -> Result<Self> {
        AlgebraClass::new(raw.degree, raw.index, Prime::new(raw.p)?)
    }
}

impl From<AlgebraClass> for RawAlgebra {
    fn from(a: AlgebraClass) -> Self {
        RawAlgebra {
            degree: a.degree,
            index: a.index,
            p: a.p.get(),
        }
    }
}

impl AlgebraClass {
    pub fn new(degree: u64, index: u64, p: Prime) -> Result<Self> {
        if degree == 0 || index == 0 {
            return domain("degree and index must be positive");
        }
        if !degree.is_multiple_of(index) {
            return domain(format!("index {index} does not divide degree {degree}"));
        }
        Ok(AlgebraClass { degree, index, p })
    }

    /// The matrix algebra of the given degree.
    pub fn split(degree: u64, p: Prime) -> Result<Self> {
        Self::new(degree, 1, p)
    }

    /// A division algebra of the given degree.
    pub fn division(degree: u64, p: Prime) -> Result<Self> {
        Self::new(degree, degree, p)
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn p(&self) -> Prime {
        self.p
    }

    /// `v_p(ind A)`, the exponent of the p-primary part of the index.
    pub fn index_valuation(&self) -> u32 {
        vp_u64(self.index, self.p).expect("index is positive")
    }

    /// The exponent `n` with `index = p^n`, if the index is a power of p.
    pub fn index_exponent(&self) -> Option<u32> {
        let n = self.index_valuation();
        (self.p.pow(n).ok() == Some(self.index)).then_some(n)
    }
}

impl fmt::Display for AlgebraClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "A(deg {}, ind {}, p={})",
            self.degree, self.index, self.p
        )
    }
}

/// A central division algebra `D` of degree `p^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PPrimaryDivision {
    pub p: Prime,
    pub n: u32,
}

impl PPrimaryDivision {
    pub fn new(p: Prime, n: u32) -> Self {
        PPrimaryDivision { p, n }
    }

    pub fn degree(&self) -> Result<u64> {
        self.p.pow(self.n)
    }

    pub fn algebra(&self) -> Result<AlgebraClass> {
        AlgebraClass::division(self.degree()?, self.p)
    }
}

fn check_dims(degree: u64, dims: &[u64]) -> Result<()> {
    if dims.is_empty() {
        return domain("flag dimensions must be nonempty");
    }
    if let Some(&bad) = dims.iter().find(|&&i| i == 0 || i >= degree) {
        return domain(format!(
            "reduced dimension {bad} outside the open interval (0, {degree})"
        ));
    }
    Ok(())
}

fn check_flag(degree: u64, dims: &[u64]) -> Result<()> {
    check_dims(degree, dims)?;
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return domain(format!("flag dimensions {dims:?} not strictly increasing"));
    }
    Ok(())
}

/// The flag variety `X(i_1, ..., i_r; A)` of right ideals of the given
/// reduced dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFlag", into = "RawFlag")]
pub struct FlagDescriptor {
    algebra: AlgebraClass,
    dims: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawFlag {
    algebra: AlgebraClass,
    #[serde(with = "dec_vec")]
    dims: Vec<u64>,
}

impl TryFrom<RawFlag> for FlagDescriptor {
    type Error = Error;

    fn try_from(raw: RawFlag) -> Result<Self> {
        FlagDescriptor::new(raw.algebra, raw.dims)
    }
}

impl From<FlagDescriptor> for RawFlag {
    fn from(f: FlagDescriptor) -> Self {
        RawFlag {
            algebra: f.algebra,
            dims: f.dims,
        }
    }
}

impl FlagDescriptor {
    /// Dimensions are sorted; repeated entries are rejected.
    pub fn new(algebra: AlgebraClass, mut dims: Vec<u64>) -> Result<Self> {
        dims.sort_unstable();
        check_flag(algebra.degree, &dims)?;
        Ok(FlagDescriptor { algebra, dims })
    }

    /// The generalized Severi-Brauer variety `X(i; A)`.
    pub fn grassmannian(algebra: AlgebraClass, i: u64) -> Result<Self> {
        Self::new(algebra, vec![i])
    }

    pub fn algebra(&self) -> AlgebraClass {
        self.algebra
    }

    pub fn dims(&self) -> &[u64] {
        &self.dims
    }

    pub fn dimension(&self) -> Result<u64> {
        dim_flag(self.algebra.degree, &self.dims)
    }

    pub fn index_reduction(&self) -> u64 {
        gcd_with(self.algebra.index, &self.dims)
    }

    pub fn closed_point_gcd(&self) -> u64 {
        self.algebra.index / self.index_reduction()
    }
}

impl fmt::Display for FlagDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.dims.iter().map(u64::to_string).collect();
        write!(f, "X({}; {})", dims.join(","), self.algebra)
    }
}

/// A finite product of flag varieties of one algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<FlagDescriptor>", into = "Vec<FlagDescriptor>")]
pub struct ProductVariety {
    factors: Vec<FlagDescriptor>,
}

impl TryFrom<Vec<FlagDescriptor>> for ProductVariety {
    type Error = Error;

    fn try_from(factors: Vec<FlagDescriptor>) -> Result<Self> {
        ProductVariety::new(factors)
    }
}

impl From<ProductVariety> for Vec<FlagDescriptor> {
    fn from(p: ProductVariety) -> Self {
        p.factors
    }
}

impl ProductVariety {
    pub fn new(factors: Vec<FlagDescriptor>) -> Result<Self> {
        let Some(first) = factors.first() else {
            return domain("a product needs at least one factor");
        };
        let algebra = first.algebra;
        if let Some(other) = factors.iter().find(|f| f.algebra != algebra) {
            return Err(Error::ContextMismatch {
                left: algebra,
                right: other.algebra,
            });
        }
        Ok(ProductVariety { factors })
    }

    /// Build a product from one dimension list per factor.
    pub fn from_dims(algebra: AlgebraClass, factors: Vec<Vec<u64>>) -> Result<Self> {
        let factors = factors
            .into_iter()
            .map(|dims| FlagDescriptor::new(algebra, dims))
            .collect::<Result<Vec<_>>>()?;
        Self::new(factors)
    }

    pub fn single(flag: FlagDescriptor) -> Self {
        ProductVariety {
            factors: vec![flag],
        }
    }

    pub fn algebra(&self) -> AlgebraClass {
        self.factors[0].algebra
    }

    pub fn factors(&self) -> &[FlagDescriptor] {
        &self.factors
    }

    pub fn generic_index(&self) -> u64 {
        generic_index(self)
    }

    /// gcd of the degrees of closed points on the product.
    pub fn closed_point_gcd(&self) -> u64 {
        self.algebra().index / self.generic_index()
    }

    pub fn dimension(&self) -> Result<u64> {
        dim_product(self)
    }
}

impl fmt::Display for ProductVariety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|flag| {
                let dims: Vec<String> = flag.dims.iter().map(u64::to_string).collect();
                format!("X({};A)", dims.join(","))
            })
            .collect();
        write!(f, "{} with {}", parts.join(" x "), self.algebra())
    }
}

fn gcd_with(start: u64, dims: &[u64]) -> u64 {
    dims.iter().fold(start, |g, &i| g.gcd(&i))
}

/// Index of `A` over the function field of `X(dims; A)`.
pub fn index_reduction(alg: &AlgebraClass, dims: &[u64]) -> Result<u64> {
    check_dims(alg.degree, dims)?;
    Ok(gcd_with(alg.index, dims))
}

/// Index of `A` over the function field of the whole product, obtained by
/// adjoining the function fields of the factors one after the other.
pub fn generic_index(product: &ProductVariety) -> u64 {
    product
        .factors
        .iter()
        .fold(product.algebra().index, |ind, flag| {
            gcd_with(ind, &flag.dims)
        })
}

/// gcd of the degrees of the closed points on `X(dims; A)`.
pub fn closed_point_gcd(alg: &AlgebraClass, dims: &[u64]) -> Result<u64> {
    Ok(alg.index / index_reduction(alg, dims)?)
}

/// Dimension of the variety of flags of ideals of the given reduced
/// dimensions in an algebra of the given degree.
pub fn dim_flag(degree: u64, dims: &[u64]) -> Result<u64> {
    check_flag(degree, dims)?;
    let overflow = || Error::Overflow(format!("dimension of flag {dims:?} in degree {degree}"));
    let mut total = 0u64;
    for (j, &i) in dims.iter().enumerate() {
        let next = dims.get(j + 1).copied().unwrap_or(degree);
        let term = i.checked_mul(next - i).ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    Ok(total)
}

pub fn dim_product(product: &ProductVariety) -> Result<u64> {
    product.factors.iter().try_fold(0u64, |acc, flag| {
        acc.checked_add(flag.dimension()?)
            .ok_or_else(|| Error::Overflow(format!("dimension of {product}")))
    })
}

/// The dual flag `(d - i_r, ..., d - i_1)`.
pub fn transpose_dims(degree: u64, dims: &[u64]) -> Vec<u64> {
    dims.iter().rev().map(|&i| degree - i).collect()
}
