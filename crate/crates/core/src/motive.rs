//! Formal direct sums of shifted indecomposable motives.
//!
//! Complete decompositions are unique up to permutation of the summands, so
//! a motive is stored as a multiset of `(label, shift)` pairs. The multiset
//! is kept in a `BTreeMap` from term to multiplicity; iteration order is the
//! canonical order `(shift, label)`.
//!
//! Labels other than [`Label::Tate`] are only meaningful relative to the
//! context algebra of the expression:
//!
//! * `Upper { l }` is the upper indecomposable summand `M_l` of the motive of
//!   `X(p^l; D)`, where `D` is the division algebra of degree `ind` in the
//!   context class.
//! * `Product { parts }` is the (not yet decomposed) motive of a product of
//!   generalized Severi-Brauer varieties `X(i_1; C_1) x ... x X(i_k; C_k)`.
//!
//! Ranks of `Upper` labels are taken in hypothesis mode: `M_l` is identified
//! with the whole motive of `X(p^l; D)`, whose rank is `binom(p^n, p^l)`.
//! Results computed that way are conditional on that identification.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith::{binom, gauss_binom, to_u64, vp, vp_u64, Natural, QPoly};
use crate::csa::AlgebraClass;
use crate::error::{domain, Error, Result};
use crate::serde_dec::dec;

/// One factor `X(dim; C)` of a product label, with `C` given by its degree
/// and index at the context prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GrassmannPart {
    #[serde(with = "dec")]
    pub dim: u64,
    #[serde(with = "dec")]
    pub degree: u64,
    #[serde(with = "dec")]
    pub index: u64,
}

impl GrassmannPart {
    pub fn new(dim: u64, degree: u64, index: u64) -> Self {
        GrassmannPart { dim, degree, index }
    }

    /// `X(dim; C)` for a division algebra `C` of the given degree.
    pub fn division(dim: u64, degree: u64) -> Self {
        Self::new(dim, degree, degree)
    }

    fn validate(&self) -> Result<()> {
        if self.degree == 0 || self.index == 0 || !self.degree.is_multiple_of(self.index) {
            return domain(format!(
                "invalid algebra (degree {}, index {}) in product part",
                self.degree, self.index
            ));
        }
        if self.dim > self.degree {
            return domain(format!(
                "reduced dimension {} exceeds degree {}",
                self.dim, self.degree
            ));
        }
        Ok(())
    }

    fn is_point(&self) -> bool {
        self.dim == 0 || self.dim == self.degree
    }
}

/// An indecomposable (or, for `Product`, not yet decomposed) summand type.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Label {
    Tate,
    Upper {
        #[serde(with = "dec")]
        l: u32,
    },
    Product {
        parts: Vec<GrassmannPart>,
    },
}

impl Label {
    /// Normalized product label: point factors (`i = 0` or `i = deg C`) are
    /// dropped, the remaining factors sorted, and an empty product is the
    /// Tate motive.
    pub fn product(parts: impl IntoIterator<Item = GrassmannPart>) -> Result<Label> {
        let mut kept = Vec::new();
        for part in parts {
            part.validate()?;
            if !part.is_point() {
                kept.push(part);
            }
        }
        if kept.is_empty() {
            return Ok(Label::Tate);
        }
        kept.sort_unstable();
        Ok(Label::Product { parts: kept })
    }

    pub fn is_tate(&self) -> bool {
        matches!(self, Label::Tate)
    }

    /// Whether the label stands for the motive of a point.
    pub fn is_point(&self, context: &AlgebraClass) -> bool {
        self.parts(context).iter().all(GrassmannPart::is_point)
    }

    fn normalized(&self, context: &AlgebraClass) -> Result<Label> {
        match self {
            Label::Tate => Ok(Label::Tate),
            Label::Upper { l } => {
                let n = context.index_exponent().ok_or_else(|| {
                    Error::Domain(format!(
                        "upper labels need a prime-power index, got {context}"
                    ))
                })?;
                if *l > n {
                    return domain(format!("UPPER({l}) requires p^{l} <= index of {context}"));
                }
                Ok(self.clone())
            }
            Label::Product { parts } => Label::product(parts.iter().copied()),
        }
    }

    /// Factors of the underlying variety in hypothesis mode.
    fn parts(&self, context: &AlgebraClass) -> Vec<GrassmannPart> {
        match self {
            Label::Tate => Vec::new(),
            Label::Upper { l } => vec![GrassmannPart::division(
                upper_dim(context, *l),
                context.index(),
            )],
            Label::Product { parts } => parts.clone(),
        }
    }

    /// Rank (hypothesis mode for `Upper`).
    pub fn rank(&self, context: &AlgebraClass) -> Natural {
        self.parts(context)
            .iter()
            .map(|part| binom(part.degree, part.dim as i64))
            .product()
    }

    /// Poincare polynomial after splitting (hypothesis mode for `Upper`).
    pub fn hypothesis_poincare(&self, context: &AlgebraClass) -> QPoly {
        self.parts(context)
            .iter()
            .map(|part| gauss_binom(part.degree, part.dim as i64))
            .product()
    }

    /// Lower bound on `v_p` of the rank of any summand of the underlying
    /// variety: `v_p` of the gcd of the degrees of its closed points.
    pub fn vp_rank_bound(&self, context: &AlgebraClass) -> u32 {
        let p = context.p();
        self.parts(context)
            .iter()
            .map(|part| {
                let n = vp_u64(part.index, p).expect("index is positive");
                // parts are normalized, so dim > 0; v_p(gcd(dim, index)) = min(v_p(dim), n)
                n - vp_u64(part.dim, p).expect("dim is positive").min(n)
            })
            .max()
            .unwrap_or(0)
    }
}

fn upper_dim(context: &AlgebraClass, l: u32) -> u64 {
    context
        .p()
        .pow(l)
        .expect("p^l <= index checked at construction")
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Tate => write!(f, "TATE"),
            Label::Upper { l } => write!(f, "UPPER({l})"),
            Label::Product { parts } => {
                let parts: Vec<String> = parts.iter().map(|p| format!("({})", p.dim)).collect();
                write!(f, "PRODUCT[{}]", parts.join(","))
            }
        }
    }
}

/// A shifted label; ordered by shift first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub shift: u64,
    pub label: Label,
}

impl Term {
    pub fn new(label: Label, shift: u64) -> Self {
        Term { shift, label }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.label, self.shift)
    }
}

/// A finite direct sum of shifted indecomposables over a context algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "MotiveExprRepr", into = "MotiveExprRepr")]
pub struct MotiveExpr {
    context: AlgebraClass,
    terms: BTreeMap<Term, u64>,
}

impl MotiveExpr {
    pub fn empty(context: AlgebraClass) -> Self {
        MotiveExpr {
            context,
            terms: BTreeMap::new(),
        }
    }

    pub fn tate(context: AlgebraClass, shift: u64) -> Self {
        let mut e = Self::empty(context);
        e.terms.insert(Term::new(Label::Tate, shift), 1);
        e
    }

    /// Build from `(label, shift)` pairs; repeated pairs add multiplicity.
    pub fn new(
        context: AlgebraClass,
        terms: impl IntoIterator<Item = (Label, u64)>,
    ) -> Result<Self> {
        let mut e = Self::empty(context);
        for (label, shift) in terms {
            e.insert(label.normalized(&context)?, shift, 1)?;
        }
        Ok(e)
    }

    /// The split motive whose Tate multiplicities are the coefficients of `poly`.
    pub fn from_poincare(context: AlgebraClass, poly: &QPoly) -> Result<Self> {
        let mut e = Self::empty(context);
        for (shift, c) in poly.coeffs().iter().enumerate() {
            if !c.is_zero() {
                e.insert(Label::Tate, shift as u64, to_u64(c)?)?;
            }
        }
        Ok(e)
    }

    fn insert(&mut self, label: Label, shift: u64, mult: u64) -> Result<()> {
        let slot = self.terms.entry(Term::new(label, shift)).or_insert(0);
        *slot = slot
            .checked_add(mult)
            .ok_or_else(|| Error::Overflow("term multiplicity".into()))?;
        Ok(())
    }

    pub fn context(&self) -> AlgebraClass {
        self.context
    }

    /// Distinct terms with their multiplicities, in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&Term, u64)> + '_ {
        self.terms.iter().map(|(t, &m)| (t, m))
    }

    /// Every summand listed once per copy, in canonical order.
    pub fn expanded(&self) -> Vec<Term> {
        self.iter()
            .flat_map(|(t, m)| std::iter::repeat_n(t.clone(), m as usize))
            .collect()
    }

    pub fn multiplicity(&self, label: &Label, shift: u64) -> u64 {
        self.terms
            .get(&Term::new(label.clone(), shift))
            .copied()
            .unwrap_or(0)
    }

    /// Number of summands counted with multiplicity.
    pub fn len(&self) -> u64 {
        self.terms.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_split(&self) -> bool {
        self.terms.keys().all(|t| t.label.is_tate())
    }

    pub fn top_shift(&self) -> Option<u64> {
        self.terms.keys().map(|t| t.shift).max()
    }

    fn same_context(&self, other: &MotiveExpr) -> Result<()> {
        if self.context != other.context {
            return Err(Error::ContextMismatch {
                left: self.context,
                right: other.context,
            });
        }
        Ok(())
    }

    fn require_split(&self) -> Result<()> {
        match self.terms.keys().find(|t| !t.label.is_tate()) {
            Some(t) => Err(Error::NotSplit(format!("contains {t}"))),
            None => Ok(()),
        }
    }

    pub fn direct_sum(&self, other: &MotiveExpr) -> Result<MotiveExpr> {
        self.same_context(other)?;
        let mut out = self.clone();
        for (t, m) in other.iter() {
            out.insert(t.label.clone(), t.shift, m)?;
        }
        Ok(out)
    }

    /// Tensor product: point labels (Tate, or `UPPER(l)` with `p^l` equal to
    /// the index) only shift, two other labels give the product label of the
    /// concatenated factors.
    pub fn tensor(&self, other: &MotiveExpr) -> Result<MotiveExpr> {
        self.same_context(other)?;
        let mut out = Self::empty(self.context);
        for (a, ma) in self.iter() {
            for (b, mb) in other.iter() {
                let ctx = &self.context;
                let label = match (a.label.is_point(ctx), b.label.is_point(ctx)) {
                    // point factors act as units; of two, UPPER(n) beats TATE
                    (true, true) => a.label.clone().max(b.label.clone()),
                    (true, false) => b.label.clone(),
                    (false, true) => a.label.clone(),
                    (false, false) => {
                        let mut parts = a.label.parts(ctx);
                        parts.extend(b.label.parts(ctx));
                        Label::product(parts)?
                    }
                };
                let shift = a
                    .shift
                    .checked_add(b.shift)
                    .ok_or_else(|| Error::Overflow("shift".into()))?;
                let mult = ma
                    .checked_mul(mb)
                    .ok_or_else(|| Error::Overflow("term multiplicity".into()))?;
                out.insert(label, shift, mult)?;
            }
        }
        Ok(out)
    }

    pub fn shift_by(&self, s: u64) -> MotiveExpr {
        MotiveExpr {
            context: self.context,
            terms: self
                .terms
                .iter()
                .map(|(t, &m)| (Term::new(t.label.clone(), t.shift + s), m))
                .collect(),
        }
    }

    /// Total rank; `Upper` labels count in hypothesis mode.
    pub fn rank(&self) -> Natural {
        self.iter()
            .map(|(t, m)| t.label.rank(&self.context) * m)
            .sum()
    }

    pub fn vp_rank(&self) -> Result<u32> {
        let r = self.rank();
        if r.is_zero() {
            return domain("rank 0 has no valuation");
        }
        vp(&r, self.context.p())
    }

    /// Constraint-mode information: the smallest per-term lower bound on
    /// `v_p` of the rank, or `None` for the zero motive.
    pub fn vp_rank_bound(&self) -> Option<u32> {
        self.terms
            .keys()
            .map(|t| t.label.vp_rank_bound(&self.context))
            .min()
    }

    /// Equality of complete decompositions up to permutation of summands.
    pub fn krull_schmidt_equal(&self, other: &MotiveExpr) -> Result<bool> {
        self.same_context(other)?;
        Ok(self.terms == other.terms)
    }

    /// Transpose of a split motive inside a variety of dimension `d`.
    pub fn dual(&self, d: u64) -> Result<MotiveExpr> {
        self.require_split()?;
        if let Some(top) = self.top_shift().filter(|&s| s > d) {
            return domain(format!("shift {top} exceeds dimension {d}"));
        }
        Ok(MotiveExpr {
            context: self.context,
            terms: self
                .terms
                .iter()
                .map(|(t, &m)| (Term::new(Label::Tate, d - t.shift), m))
                .collect(),
        })
    }

    /// A split summand is upper iff it contains `Λ`.
    pub fn is_upper(&self) -> Result<bool> {
        self.require_split()?;
        Ok(self.multiplicity(&Label::Tate, 0) > 0)
    }

    /// A split summand of a `d`-dimensional variety is lower iff it contains `Λ(d)`.
    pub fn is_lower(&self, d: u64) -> Result<bool> {
        self.require_split()?;
        Ok(self.multiplicity(&Label::Tate, d) > 0)
    }

    pub fn is_outer(&self, d: u64) -> Result<bool> {
        Ok(self.is_upper()? && self.is_lower(d)?)
    }

    pub fn poincare(&self) -> Result<QPoly> {
        self.require_split()?;
        Ok(self.hypothesis_poincare())
    }

    /// Poincare polynomial after extending scalars to a splitting field,
    /// with `Upper` labels replaced by the whole grassmannian.
    pub fn hypothesis_poincare(&self) -> QPoly {
        self.iter()
            .map(|(t, m)| {
                t.label
                    .hypothesis_poincare(&self.context)
                    .shift(t.shift as usize)
                    .scale(&Natural::from(m))
            })
            .sum()
    }
}

impl fmt::Display for MotiveExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self.expanded().iter().map(Term::to_string).collect();
        write!(f, "{}", terms.join(" + "))
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    label: Label,
    #[serde(with = "dec")]
    shift: u64,
    #[serde(with = "dec")]
    rank_hypothesis: Natural,
}

#[derive(Serialize, Deserialize)]
struct MotiveExprRepr {
    context: AlgebraClass,
    terms: Vec<TermRepr>,
}

impl From<MotiveExpr> for MotiveExprRepr {
    fn from(e: MotiveExpr) -> Self {
        let terms = e
            .expanded()
            .into_iter()
            .map(|t| TermRepr {
                rank_hypothesis: t.label.rank(&e.context),
                label: t.label,
                shift: t.shift,
            })
            .collect();
        MotiveExprRepr {
            context: e.context,
            terms,
        }
    }
}

impl TryFrom<MotiveExprRepr> for MotiveExpr {
    type Error = Error;

    fn try_from(repr: MotiveExprRepr) -> Result<Self> {
        let context = repr.context;
        for t in &repr.terms {
            let label = t.label.normalized(&context)?;
            if label.rank(&context) != t.rank_hypothesis {
                return Err(Error::Malformed(format!(
                    "rank {} recorded for {label}",
                    t.rank_hypothesis
                )));
            }
        }
        MotiveExpr::new(context, repr.terms.into_iter().map(|t| (t.label, t.shift)))
    }
}
