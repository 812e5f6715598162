//! One generic-splitting step for `X(p^m; D)`, `deg D = p^n`.
//!
//! Over `L = F(X(p^{n-1}; D))` the algebra `D` becomes Brauer-equivalent to a
//! division algebra `C` of degree `p^{n-1}`, and the motive of `X(p^m; D)`
//! splits into shifted motives of products `X(i_1; C) x ... x X(i_p; C)`
//! indexed by compositions `i_1 + ... + i_p = p^m`. The shift of the term
//! for `(i_1, ..., i_p)` is `sum_{j < j'} i_{j'} (p^{n-1} - i_j)`; summing
//! the resulting Poincare polynomials reproduces `[p^n choose p^m]_q`
//! (iterated q-Vandermonde), which is how the shifts are checked.
//!
//! [`verify_basic2`] replays the counting argument showing that the upper
//! summand `M_{m,D}` is outer with `v_p(rk M_{m,D}) = n - m`: the `p` sources
//! of `M_{m,C}`, the cyclic orbits of the remaining compositions of
//! valuation `m - 1`, and the valuation of the diagonal term.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::arith::{binom, gauss_binom, vp, vp_binom, vp_u64, Natural, Prime, QPoly};
use crate::csa::{closed_point_gcd, AlgebraClass, FlagDescriptor, ProductVariety};
use crate::error::{domain, Error, Result};
use crate::motive::{GrassmannPart, Label, MotiveExpr};
use crate::serde_dec::{dec, dec_vec};

/// An ordered tuple of non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Composition {
    #[serde(with = "dec_vec")]
    parts: Vec<u64>,
}

impl Composition {
    pub fn new(parts: Vec<u64>) -> Self {
        Composition { parts }
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn target(&self) -> u64 {
        self.parts.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.parts.windows(2).all(|w| w[0] == w[1])
    }

    /// `(i_{k+1}, ..., i_p, i_1, ..., i_k)`.
    pub fn rotate(&self, k: usize) -> Composition {
        let mut parts = self.parts.clone();
        if !parts.is_empty() {
            parts.rotate_left(k % self.parts.len());
        }
        Composition { parts }
    }

    /// Distinct cyclic rotations, starting with `self`.
    pub fn rotations(&self) -> Vec<Composition> {
        let mut out: Vec<Composition> = Vec::new();
        for k in 0..self.parts.len().max(1) {
            let r = self.rotate(k);
            if !out.contains(&r) {
                out.push(r);
            }
        }
        out
    }

    /// The position and value of the only nonzero part, if there is exactly one.
    pub fn single_nonzero(&self) -> Option<(usize, u64)> {
        single_nonzero(&self.parts)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn single_nonzero(parts: &[u64]) -> Option<(usize, u64)> {
    let mut found = None;
    for (j, &x) in parts.iter().enumerate() {
        if x != 0 {
            if found.is_some() {
                return None;
            }
            found = Some((j, x));
        }
    }
    found
}

/// Lexicographic enumeration of `p`-tuples in `[0, cap]` with a fixed sum.
#[derive(Debug, Clone)]
pub struct Compositions {
    parts: Vec<u64>,
    cap: u64,
    started: bool,
    done: bool,
}

/// All length-`p` tuples of integers in `[0, cap]` summing to `target`, in
/// lexicographic order.
pub fn compositions(p: Prime, target: u64, cap: u64) -> Compositions {
    let len = p.get() as usize;
    let feasible = (len as u128) * (cap as u128) >= target as u128;
    let mut parts = vec![0; len];
    if feasible {
        fill_from_right(&mut parts, 0, target, cap);
    }
    Compositions {
        parts,
        cap,
        started: false,
        done: !feasible,
    }
}

// Smallest lexicographic filling of parts[from..] with the given sum.
fn fill_from_right(parts: &mut [u64], from: usize, mut sum: u64, cap: u64) {
    for slot in parts[from..].iter_mut().rev() {
        *slot = sum.min(cap);
        sum -= *slot;
    }
}

impl Compositions {
    /// Advance and borrow the next tuple without allocating.
    pub fn next_slice(&mut self) -> Option<&[u64]> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(&self.parts)
    }

    fn advance(&mut self) -> bool {
        let len = self.parts.len();
        let mut suffix = 0u64;
        for i in (0..len.saturating_sub(1)).rev() {
            suffix += self.parts[i + 1];
            if self.parts[i] < self.cap && suffix > 0 {
                self.parts[i] += 1;
                fill_from_right(&mut self.parts, i + 1, suffix - 1, self.cap);
                return true;
            }
        }
        false
    }
}

impl Iterator for Compositions {
    type Item = Composition;

    fn next(&mut self) -> Option<Composition> {
        self.next_slice().map(|s| Composition::new(s.to_vec()))
    }
}

fn shift_rule_parts(parts: &[u64], d: u64) -> Result<u64> {
    if let Some(&bad) = parts.iter().find(|&&i| i > d) {
        return domain(format!("part {bad} exceeds degree {d}"));
    }
    let overflow = || Error::Overflow("shift".into());
    let mut codims_before = 0u64;
    let mut shift = 0u64;
    for &i in parts {
        shift = i
            .checked_mul(codims_before)
            .and_then(|t| shift.checked_add(t))
            .ok_or_else(overflow)?;
        codims_before = codims_before.checked_add(d - i).ok_or_else(overflow)?;
    }
    Ok(shift)
}

/// Tate shift `sum_{j < j'} i_{j'} (d - i_j)` of the composition term.
pub fn shift_rule(c: &Composition, d: u64) -> Result<u64> {
    shift_rule_parts(&c.parts, d)
}

/// The decomposition of `M(X(p^m; D))` over `L`, keeping the composition
/// behind every term.
#[derive(Debug, Clone)]
pub struct OneStepDecomposition {
    p: Prime,
    n: u32,
    m: u32,
    terms: Vec<(Composition, u64)>,
    expr: MotiveExpr,
}

impl OneStepDecomposition {
    pub fn p(&self) -> Prime {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `(composition, shift)` in lexicographic order of compositions.
    pub fn terms(&self) -> &[(Composition, u64)] {
        &self.terms
    }

    /// The decomposition as a motive over the degree-`p^{n-1}` division
    /// algebra `C`.
    pub fn expr(&self) -> &MotiveExpr {
        &self.expr
    }

    fn find(&self, position: usize) -> Result<(Composition, u64)> {
        let target = self.p.pow(self.m)?;
        self.terms
            .iter()
            .find(|(c, _)| c.single_nonzero() == Some((position, target)))
            .cloned()
            .ok_or_else(|| Error::Malformed(format!("no term concentrated at position {position}")))
    }
}

/// Decompose `X(p^m; D)`, `deg D = p^n`, over the function field of
/// `X(p^{n-1}; D)`.
pub fn one_step(p: Prime, n: u32, m: u32) -> Result<OneStepDecomposition> {
    if n == 0 || m >= n {
        return domain(format!("one_step needs 0 <= m < n, got n={n}, m={m}"));
    }
    let d = p.pow(n - 1)?;
    let context = AlgebraClass::division(d, p)?;
    let mut terms = Vec::new();
    let mut labelled = Vec::new();
    for c in compositions(p, p.pow(m)?, d) {
        let shift = shift_rule(&c, d)?;
        let label = Label::product(c.parts.iter().map(|&i| GrassmannPart::division(i, d)))?;
        labelled.push((label, shift));
        terms.push((c, shift));
    }
    let expr = MotiveExpr::new(context, labelled)?;
    Ok(OneStepDecomposition {
        p,
        n,
        m,
        terms,
        expr,
    })
}

/// The term `(p^m, 0, ..., 0)` carrying the upper summand; its shift is 0.
pub fn upper_term(step: &OneStepDecomposition) -> Result<(Composition, u64)> {
    step.find(0)
}

/// The term `(0, ..., 0, p^m)` carrying the lower summand.
pub fn lower_term(step: &OneStepDecomposition) -> Result<(Composition, u64)> {
    step.find(step.p.get() as usize - 1)
}

/// Check the shift rule against the q-binomial it must reproduce:
/// `sum_c q^{shift(c)} prod_j [p^{n-1} choose c_j] = [p^n choose p^m]`.
pub fn shift_rule_identity(p: Prime, n: u32, m: u32) -> Result<bool> {
    if n == 0 || m >= n {
        return domain(format!(
            "shift rule identity needs 0 <= m < n, got n={n}, m={m}"
        ));
    }
    let d = p.pow(n - 1)?;
    let target = p.pow(m)?;
    let row: Vec<QPoly> = (0..=d).map(|k| gauss_binom(d, k as i64)).collect();
    let mut lhs = QPoly::zero();
    for c in compositions(p, target, d) {
        let shift = shift_rule(&c, d)?;
        let product: QPoly = c.parts().iter().map(|&k| &row[k as usize]).product();
        lhs = &lhs + &product.shift(shift as usize);
    }
    Ok(lhs == gauss_binom(p.pow(n)?, target as i64))
}

/// An orbit of compositions under cyclic rotation of the entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitClass {
    /// Lexicographically smallest rotation.
    pub representative: Composition,
    /// Rotations of the representative present in the input.
    pub members: Vec<Composition>,
    /// Number of distinct rotations of the representative.
    #[serde(with = "dec")]
    pub size: u64,
}

/// Group compositions by cyclic rotation, ordered by representative.
pub fn cyclic_orbits(comps: &[Composition]) -> Vec<OrbitClass> {
    let mut groups: BTreeMap<Composition, Vec<Composition>> = BTreeMap::new();
    for c in comps {
        let rep = c
            .rotations()
            .into_iter()
            .min()
            .expect("at least one rotation");
        let members = groups.entry(rep).or_default();
        if !members.contains(c) {
            members.push(c.clone());
        }
    }
    groups
        .into_iter()
        .map(|(representative, mut members)| {
            members.sort();
            let size = representative.rotations().len() as u64;
            OrbitClass {
                representative,
                members,
                size,
            }
        })
        .collect()
}

fn valuation_parts(parts: &[u64], p: Prime, n: u32) -> Option<u32> {
    let cap = n.saturating_sub(1);
    parts
        .iter()
        .filter(|&&i| i != 0)
        .map(|&i| vp_u64(i, p).expect("nonzero").min(cap))
        .min()
}

/// `v_p` of the index of `C` over the function field of the product term:
/// the minimum of `min(v_p(i_j), n - 1)` over nonzero parts.
pub fn comp_valuation(c: &Composition, p: Prime, n: u32) -> Result<u32> {
    valuation_parts(&c.parts, p, n)
        .ok_or_else(|| Error::Domain("valuation of the zero composition".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// The check on one cyclic orbit of non-diagonal compositions of valuation
/// `m - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitCheck {
    pub orbit: OrbitClass,
    #[serde(with = "dec")]
    pub valuation: u32,
    /// The orbit has exactly `p` members.
    pub divisible: bool,
}

/// The diagonal term `(p^{m-1}, ..., p^{m-1})`, i.e. `X(p^{m-1}; C)^{x r}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagonalCheck {
    pub composition: Composition,
    #[serde(with = "dec")]
    pub copies: u64,
    /// `v_p` of the rank of the diagonal product, computed from the rank.
    #[serde(with = "dec")]
    pub rank_valuation: u32,
    /// `r (n - m)`.
    #[serde(with = "dec")]
    pub expected: u32,
    /// `n - m`.
    #[serde(with = "dec")]
    pub bound: u32,
    pub exceeds: bool,
}

/// Base of the induction: the Severi-Brauer variety has rank `p^n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseCaseCheck {
    #[serde(with = "dec")]
    pub rank: Natural,
    #[serde(with = "dec")]
    pub expected: Natural,
    pub holds: bool,
}

/// Everything checked for one value of `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRecord {
    #[serde(with = "dec")]
    pub m: u32,
    /// Number of compositions of `p^m` into `p` parts bounded by `p^{n-1}`.
    #[serde(with = "dec")]
    pub compositions: u64,
    /// Compositions with a single nonzero entry `p^m`: the sources of `M_{m,C}`.
    pub sources: Vec<Composition>,
    pub sources_hold: bool,
    pub base_case: Option<BaseCaseCheck>,
    pub orbits: Vec<OrbitCheck>,
    /// Total size of the orbits above.
    #[serde(with = "dec")]
    pub second_type_count: u64,
    pub second_type_divisible: bool,
    pub diagonal: Option<DiagonalCheck>,
    /// `v_p(binom(p^n, p^m))`.
    #[serde(with = "dec")]
    pub hypothesis_valuation: u32,
    pub hypothesis_holds: bool,
    /// `n - m`.
    #[serde(with = "dec")]
    pub concluded_valuation: u32,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTrace {
    pub p: Prime,
    #[serde(with = "dec")]
    pub n: u32,
    pub records: Vec<LevelRecord>,
    pub verdict: Verdict,
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// `v_p` of the rank of `X(i; C)^{x r}` with `deg C = d`.
fn power_rank_valuation(d: u64, i: u64, r: u64, p: Prime) -> Result<u32> {
    let rank = binom(d, i as i64).pow(r as u32);
    vp(&rank, p)
}

fn level_record(p: Prime, n: u32, m: u32) -> Result<LevelRecord> {
    let d = p.pow(n - 1)?;
    let target = p.pow(m)?;
    let len = p.get() as usize;

    let mut total = 0u64;
    let mut sources = Vec::new();
    let mut second_type = Vec::new();
    let mut diagonal = None;
    let mut iter = compositions(p, target, d);
    while let Some(parts) = iter.next_slice() {
        total += 1;
        if single_nonzero(parts).is_some_and(|(_, x)| x == target) {
            sources.push(Composition::new(parts.to_vec()));
            continue;
        }
        if m == 0 || valuation_parts(parts, p, n) != Some(m - 1) {
            continue;
        }
        let c = Composition::new(parts.to_vec());
        if c.is_constant() {
            diagonal = Some(c);
        } else {
            second_type.push(c);
        }
    }

    let sources_hold = sources.len() == len;
    let hypothesis_valuation = vp_binom(p.pow(n)?, target, p)?;
    let hypothesis_holds = hypothesis_valuation == n - m;

    let (base_case, orbits, second_type_count, second_type_divisible, diagonal) = if m == 0 {
        let rank = binom(p.pow(n)?, 1);
        let expected = Natural::from(p.pow(n)?);
        let holds = rank == expected;
        let base = BaseCaseCheck {
            rank,
            expected,
            holds,
        };
        (Some(base), Vec::new(), 0, true, None)
    } else {
        let orbits: Vec<OrbitCheck> = cyclic_orbits(&second_type)
            .into_iter()
            .map(|orbit| {
                let valuation = comp_valuation(&orbit.representative, p, n)?;
                let divisible = orbit.size == p.get() && orbit.members.len() as u64 == orbit.size;
                Ok(OrbitCheck {
                    orbit,
                    valuation,
                    divisible,
                })
            })
            .collect::<Result<_>>()?;
        let count: u64 = orbits.iter().map(|o| o.orbit.members.len() as u64).sum();
        let divisible = count.is_multiple_of(p.get()) && orbits.iter().all(|o| o.divisible);
        let diagonal = diagonal
            .map(|c| {
                let r = len as u64;
                let rank_valuation = power_rank_valuation(d, c.parts[0], r, p)?;
                let expected = r as u32 * (n - m);
                Ok(DiagonalCheck {
                    composition: c,
                    copies: r,
                    rank_valuation,
                    expected,
                    bound: n - m,
                    exceeds: rank_valuation == expected && rank_valuation > n - m,
                })
            })
            .transpose()?;
        (None, orbits, count, divisible, diagonal)
    };

    let ok = sources_hold
        && hypothesis_holds
        && second_type_divisible
        && base_case.as_ref().is_none_or(|b| b.holds)
        && (m == 0 || diagonal.as_ref().is_some_and(|dg| dg.exceeds));

    Ok(LevelRecord {
        m,
        compositions: total,
        sources,
        sources_hold,
        base_case,
        orbits,
        second_type_count,
        second_type_divisible,
        diagonal,
        hypothesis_valuation,
        hypothesis_holds,
        concluded_valuation: n - m,
        verdict: verdict(ok),
    })
}

// Total number of compositions at level `m` and the number of non-diagonal
// ones of valuation `m - 1` that are not sources.
fn level_census(p: Prime, n: u32, m: u32, d: u64, target: u64) -> (u64, u64) {
    let mut total = 0;
    let mut second = 0;
    let mut iter = compositions(p, target, d);
    while let Some(parts) = iter.next_slice() {
        total += 1;
        if m == 0 || single_nonzero(parts).is_some() {
            continue;
        }
        let constant = parts.iter().all(|&x| x == parts[0]);
        if !constant && valuation_parts(parts, p, n) == Some(m - 1) {
            second += 1;
        }
    }
    (total, second)
}

/// Replay the induction step for every `m < n`.
pub fn verify_basic2(p: Prime, n: u32) -> Result<ProofTrace> {
    if n == 0 {
        return domain("verify_basic2 needs n >= 1");
    }
    let records = (0..n)
        .map(|m| level_record(p, n, m))
        .collect::<Result<Vec<_>>>()?;
    let ok = records.iter().all(|r| r.verdict == Verdict::Pass);
    Ok(ProofTrace {
        p,
        n,
        records,
        verdict: verdict(ok),
    })
}

impl LevelRecord {
    /// Re-derive every verdict in the record from its recorded inputs.
    pub fn recheck(&self, p: Prime, n: u32) -> bool {
        let (Ok(target), Ok(d), Ok(full)) = (p.pow(self.m), p.pow(n - 1), p.pow(n)) else {
            return false;
        };
        let len = p.get() as usize;
        let m = self.m;

        let positions: BTreeSet<usize> = self
            .sources
            .iter()
            .filter(|c| c.len() == len)
            .filter_map(|c| c.single_nonzero())
            .filter(|&(_, x)| x == target)
            .map(|(j, _)| j)
            .collect();
        let sources_hold = self.sources.len() == len && positions.len() == len;

        let orbits_hold = self.orbits.iter().all(|o| {
            let rots = o.orbit.representative.rotations();
            let members_are_rotations = o.orbit.members.iter().all(|c| rots.contains(c));
            let divisible = rots.len() as u64 == p.get()
                && o.orbit.size == rots.len() as u64
                && o.orbit.members.len() == rots.len();
            members_are_rotations
                && o.divisible == divisible
                && o.orbit.members.iter().all(|c| {
                    c.target() == target
                        && !c.is_constant()
                        && comp_valuation(c, p, n).ok() == Some(o.valuation)
                        && m >= 1
                        && o.valuation == m - 1
                })
        });
        let count: u64 = self
            .orbits
            .iter()
            .map(|o| o.orbit.members.len() as u64)
            .sum();
        let second_type_divisible =
            count.is_multiple_of(p.get()) && self.orbits.iter().all(|o| o.divisible);
        // the orbits must partition the second-type compositions exactly
        let distinct: BTreeSet<&Composition> =
            self.orbits.iter().flat_map(|o| &o.orbit.members).collect();
        let census = level_census(p, n, m, d, target);
        let covered = distinct.len() as u64 == count
            && census == (self.compositions, if m == 0 { 0 } else { count });

        let diagonal_holds = match (&self.diagonal, m) {
            (None, 0) => true,
            (Some(dg), m) if m >= 1 => {
                let part = target / p.get();
                let valuation = power_rank_valuation(d, part, dg.copies, p).ok();
                dg.composition == Composition::new(vec![part; len])
                    && dg.copies == len as u64
                    && valuation == Some(dg.rank_valuation)
                    && dg.expected == dg.copies as u32 * (n - m)
                    && dg.bound == n - m
                    && dg.exceeds == (dg.rank_valuation == dg.expected && dg.expected > dg.bound)
            }
            _ => false,
        };

        let base_holds = match (&self.base_case, m) {
            (Some(b), 0) => {
                b.rank == binom(full, 1)
                    && b.expected == Natural::from(full)
                    && b.holds == (b.rank == b.expected)
            }
            (None, m) => m >= 1,
            _ => false,
        };

        let hypothesis = vp_binom(full, target, p).ok();
        let hypothesis_holds = hypothesis == Some(self.hypothesis_valuation)
            && self.hypothesis_holds == (self.hypothesis_valuation == n - m);

        let ok = self.sources_hold
            && self.hypothesis_holds
            && self.second_type_divisible
            && self.base_case.as_ref().is_none_or(|b| b.holds)
            && (m == 0 || self.diagonal.as_ref().is_some_and(|dg| dg.exceeds));

        sources_hold == self.sources_hold
            && orbits_hold
            && covered
            && count == self.second_type_count
            && second_type_divisible == self.second_type_divisible
            && diagonal_holds
            && base_holds
            && hypothesis_holds
            && self.concluded_valuation == n - m
            && self.verdict == verdict(ok)
    }
}

impl ProofTrace {
    /// Re-derive all recorded checks and the overall verdict.
    pub fn recheck(&self) -> bool {
        let levels_ok = self.records.len() == self.n as usize
            && self
                .records
                .iter()
                .enumerate()
                .all(|(m, r)| r.m as usize == m && r.recheck(self.p, self.n));
        let ok = self.records.iter().all(|r| r.verdict == Verdict::Pass);
        levels_ok && self.verdict == verdict(ok)
    }
}

/// Which variety of a degree-`2^n` division algebra to decompose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variety22n {
    /// `X(1; D)`.
    X1,
    /// `X(2; D)`.
    X2,
}

/// Complete decompositions over `L` of `X(1; D)` and `X(2; D)` for a
/// division algebra `D` of degree `2^n`, in terms of the upper motives of
/// `C` (degree `2^{n-1}`). The middle term `M(X(1;C)) (x) M(X(1;C))`
/// resolves into `M_{0,C}(k)` for `k = 0, ..., 2^{n-1} - 1`.
pub fn decomposition_2_2n(n: u32, which: Variety22n) -> Result<MotiveExpr> {
    let min_n = match which {
        Variety22n::X1 => 1,
        Variety22n::X2 => 2,
    };
    if n < min_n {
        return domain(format!(
            "{which:?} decomposition needs n >= {min_n}, got {n}"
        ));
    }
    let half = Prime::TWO.pow(n - 1)?;
    let context = AlgebraClass::division(half, Prime::TWO)?;
    let m0 = Label::Upper { l: 0 };
    let terms: Vec<(Label, u64)> = match which {
        Variety22n::X1 => vec![(m0.clone(), 0), (m0, half)],
        Variety22n::X2 => {
            let m1 = Label::Upper { l: 1 };
            let mut terms = vec![(m1.clone(), 0)];
            terms.extend((half - 1..=2 * half - 2).map(|k| (m0.clone(), k)));
            terms.push((m1, 2 * half));
            terms
        }
    };
    MotiveExpr::new(context, terms)
}

/// `v_p` of the gcd of the flag's dimensions and the index: the label `l`
/// of the upper summand `M_{l,D}` of the flag variety.
pub fn upper_label(flag: &FlagDescriptor) -> u32 {
    let alg = flag.algebra();
    let g = flag.dims().iter().fold(alg.index(), |g, &i| g.gcd(&i));
    vp_u64(g, alg.p()).expect("gcd is positive")
}

/// Labels `l` such that shifts of `M_{l,D}` may occur in the complete
/// decomposition of the product: `0 <= l <= v_p(generic index)`.
pub fn upper_labels_allowed(product: &ProductVariety) -> BTreeSet<u32> {
    let alg = product.algebra();
    let top = vp_u64(product.generic_index(), alg.p()).expect("index is positive");
    (0..=top).collect()
}

fn rank_degree_holds(point_gcd: u64, claimed: &Natural, p: Prime) -> Result<bool> {
    if claimed == &Natural::from(0u32) {
        return domain("claimed rank must be positive");
    }
    Ok(vp_u64(point_gcd, p)? <= vp(claimed, p)?)
}

/// Necessary condition for `claimed` to be the rank of a summand of
/// `X(dims; A)`: `v_p(d) <= v_p(rank)` with `d` the closed-point gcd.
pub fn validate_rank_degree(alg: &AlgebraClass, dims: &[u64], claimed: &Natural) -> Result<bool> {
    rank_degree_holds(closed_point_gcd(alg, dims)?, claimed, alg.p())
}

/// [`validate_rank_degree`] for a product variety.
pub fn validate_rank_degree_product(product: &ProductVariety, claimed: &Natural) -> Result<bool> {
    rank_degree_holds(product.closed_point_gcd(), claimed, product.algebra().p())
}

/// The variety whose whole motive a label stands for in hypothesis mode, or
/// `None` for a Tate motive.
fn label_variety(label: &Label, context: &AlgebraClass) -> Result<Option<ProductVariety>> {
    let p = context.p();
    match label {
        Label::Tate => Ok(None),
        Label::Upper { l } => {
            let d = AlgebraClass::division(context.index(), p)?;
            let i = p.pow(*l)?;
            if i == d.degree() {
                return Ok(None);
            }
            Ok(Some(ProductVariety::from_dims(d, vec![vec![i]])?))
        }
        Label::Product { parts } => {
            let first = parts[0];
            let alg = AlgebraClass::new(first.degree, first.index, p)?;
            let factors = parts.iter().map(|part| vec![part.dim]).collect();
            // mixed algebras are rejected by the product constructor
            Ok(Some(ProductVariety::from_dims(alg, factors)?))
        }
    }
}

/// Check every term's hypothesis-mode rank against the closed-point bound
/// of its underlying variety.
pub fn rank_degree_consistent(expr: &MotiveExpr) -> Result<bool> {
    let context = expr.context();
    for (term, _) in expr.iter() {
        if let Some(variety) = label_variety(&term.label, &context)? {
            if !validate_rank_degree_product(&variety, &term.label.rank(&context))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_rule_reproduces_q_binomial() {
        for (p, n) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1)] {
            let p = Prime::new(p).unwrap();
            for m in 0..n {
                assert!(shift_rule_identity(p, n, m).unwrap());
            }
        }
        assert!(shift_rule_identity(Prime::TWO, 2, 2).is_err());
    }

    fn comp(parts: &[u64]) -> Composition {
        Composition::new(parts.to_vec())
    }

    #[test]
    fn composition_examples() {
        let c: Vec<_> = compositions(Prime::TWO, 2, 2).collect();
        assert_eq!(c, vec![comp(&[0, 2]), comp(&[1, 1]), comp(&[2, 0])]);
        let c: Vec<_> = compositions(Prime::TWO, 1, 2).collect();
        assert_eq!(c, vec![comp(&[0, 1]), comp(&[1, 0])]);
        assert_eq!(compositions(Prime::THREE, 3, 3).count(), 10);
        assert_eq!(compositions(Prime::TWO, 5, 2).count(), 0);
        assert_eq!(
            compositions(Prime::THREE, 0, 4).collect::<Vec<_>>(),
            vec![comp(&[0, 0, 0])]
        );
    }

    #[test]
    fn compositions_respect_cap_and_order() {
        let all: Vec<_> = compositions(Prime::THREE, 5, 2).collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert!(all
            .iter()
            .all(|c| c.target() == 5 && c.parts().iter().all(|&x| x <= 2)));
        // (1,2,2), (2,1,2), (2,2,1)
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn shift_rule_examples() {
        for n in 2..8u32 {
            let d = 1u64 << (n - 1);
            assert_eq!(shift_rule(&comp(&[1, 1]), d).unwrap(), d - 1);
            assert_eq!(shift_rule(&comp(&[0, 2]), d).unwrap(), 1 << n);
        }
        assert_eq!(shift_rule(&comp(&[9, 0, 0]), 9).unwrap(), 0);
        assert!(shift_rule(&comp(&[3, 0]), 2).is_err());
    }

    #[test]
    fn one_step_two_two_one() {
        let step = one_step(Prime::TWO, 2, 1).unwrap();
        let shifts: Vec<u64> = step.terms().iter().map(|(_, s)| *s).collect();
        // lexicographic: (0,2), (1,1), (2,0)
        assert_eq!(shifts, vec![4, 1, 0]);
        let e = step.expr();
        let c = AlgebraClass::division(2, Prime::TWO).unwrap();
        let pair = Label::product([GrassmannPart::division(1, 2); 2]).unwrap();
        let expected = MotiveExpr::new(c, [(Label::Tate, 0), (pair, 1), (Label::Tate, 4)]).unwrap();
        assert_eq!(e, &expected);
        assert_eq!(e.rank(), binom(4, 2));
    }

    #[test]
    fn one_step_severi_brauer() {
        for n in 1..6 {
            let step = one_step(Prime::TWO, n, 0).unwrap();
            let half = 1u64 << (n - 1);
            let shifts: Vec<u64> = step.terms().iter().map(|(_, s)| *s).collect();
            assert_eq!(shifts, vec![half, 0]);
            let c = AlgebraClass::division(half, Prime::TWO).unwrap();
            let sb = Label::product([GrassmannPart::division(1, half)]).unwrap();
            let expected = MotiveExpr::new(c, [(sb.clone(), 0), (sb, half)]).unwrap();
            assert_eq!(step.expr(), &expected);
        }
    }

    #[test]
    fn one_step_rejects_bad_levels() {
        assert!(one_step(Prime::TWO, 2, 2).is_err());
        assert!(one_step(Prime::TWO, 0, 0).is_err());
    }

    #[test]
    fn upper_and_lower_terms() {
        let step = one_step(Prime::TWO, 2, 1).unwrap();
        assert_eq!(upper_term(&step).unwrap(), (comp(&[2, 0]), 0));
        assert_eq!(lower_term(&step).unwrap(), (comp(&[0, 2]), 4));
        for p in [Prime::TWO, Prime::THREE] {
            for n in 1..=3 {
                for m in 0..n {
                    let step = one_step(p, n, m).unwrap();
                    let (pm, pn, pn1) =
                        (p.pow(m).unwrap(), p.pow(n).unwrap(), p.pow(n - 1).unwrap());
                    let (_, lower) = lower_term(&step).unwrap();
                    assert_eq!(lower, pm * (pn - pn1));
                    assert_eq!(lower, pm * (pn - pm) - pm * (pn1 - pm));
                    assert_eq!(upper_term(&step).unwrap().1, 0);
                    // the extreme shifts of the decomposition are the upper and lower terms
                    let top = step.terms().iter().map(|(_, s)| *s).max().unwrap();
                    assert_eq!(top, lower);
                    if m == 0 {
                        assert_eq!(lower, (p.get() - 1) * pn1);
                        if p == Prime::TWO {
                            assert_eq!(lower, pn1);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn orbit_examples() {
        let comps: Vec<_> = compositions(Prime::TWO, 2, 2).collect();
        let orbits = cyclic_orbits(&comps);
        assert_eq!(orbits.len(), 2);
        assert_eq!(orbits[0].representative, comp(&[0, 2]));
        assert_eq!(orbits[0].size, 2);
        assert_eq!(orbits[1].representative, comp(&[1, 1]));
        assert_eq!(orbits[1].size, 1);

        let c = comp(&[1, 2, 0]);
        assert_eq!(cyclic_orbits(&c.rotations())[0].size, 3);

        let all: Vec<_> = compositions(Prime::FIVE, 5, 5).collect();
        let orbits = cyclic_orbits(&all);
        assert_eq!(orbits.iter().map(|o| o.size).sum::<u64>(), all.len() as u64);
        for o in &orbits {
            assert_eq!(o.size == 1, o.representative.is_constant());
            assert!(o.size == 1 || o.size == 5);
        }
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(comp_valuation(&comp(&[1, 1]), Prime::TWO, 3).unwrap(), 0);
        assert_eq!(comp_valuation(&comp(&[2, 0]), Prime::TWO, 2).unwrap(), 1);
        assert_eq!(
            comp_valuation(&comp(&[2, 2, 2]), Prime::THREE, 3).unwrap(),
            0
        );
        assert!(comp_valuation(&comp(&[0, 0]), Prime::TWO, 2).is_err());
    }

    #[test]
    fn verify_small_cases() {
        let t = verify_basic2(Prime::TWO, 2).unwrap();
        assert_eq!(t.verdict, Verdict::Pass);
        let r1 = &t.records[1];
        assert_eq!(r1.sources, vec![comp(&[0, 2]), comp(&[2, 0])]);
        assert!(r1.orbits.is_empty());
        assert_eq!(r1.diagonal.as_ref().unwrap().composition, comp(&[1, 1]));
        assert_eq!(r1.concluded_valuation, 1);
        assert!(t.recheck());

        let t = verify_basic2(Prime::TWO, 1).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.verdict, Verdict::Pass);
        assert!(t.records[0].base_case.as_ref().unwrap().holds);

        let t = verify_basic2(Prime::THREE, 3).unwrap();
        assert_eq!(t.verdict, Verdict::Pass);
        assert!(t.recheck());
        assert!(verify_basic2(Prime::TWO, 0).is_err());
    }

    #[test]
    fn tampered_trace_fails_recheck() {
        let mut t = verify_basic2(Prime::THREE, 2).unwrap();
        assert!(t.recheck());
        t.records[1].orbits[0].orbit.members.pop();
        assert!(!t.recheck());

        let mut t = verify_basic2(Prime::THREE, 2).unwrap();
        t.records[1].diagonal.as_mut().unwrap().rank_valuation += 1;
        assert!(!t.recheck());
    }

    #[test]
    fn two_two_n_fixtures() {
        let c2 = AlgebraClass::division(2, Prime::TWO).unwrap();
        let m0 = Label::Upper { l: 0 };
        let m1 = Label::Upper { l: 1 };
        assert_eq!(
            decomposition_2_2n(2, Variety22n::X1).unwrap(),
            MotiveExpr::new(c2, [(m0.clone(), 0), (m0.clone(), 2)]).unwrap()
        );
        let x2 = decomposition_2_2n(2, Variety22n::X2).unwrap();
        assert_eq!(
            x2,
            MotiveExpr::new(c2, [(m1.clone(), 0), (m0.clone(), 1), (m0, 2), (m1, 4)]).unwrap()
        );
        assert_eq!(x2.rank(), binom(4, 2));
        assert_eq!(
            decomposition_2_2n(3, Variety22n::X2).unwrap().rank(),
            binom(8, 2)
        );
        assert!(decomposition_2_2n(1, Variety22n::X2).is_err());
        assert!(decomposition_2_2n(0, Variety22n::X1).is_err());
    }

    #[test]
    fn resolved_x2_matches_one_step() {
        for n in 2..=5 {
            let resolved = decomposition_2_2n(n, Variety22n::X2).unwrap();
            let step = one_step(Prime::TWO, n, 1).unwrap();
            assert_eq!(
                resolved.hypothesis_poincare(),
                step.expr().hypothesis_poincare()
            );
            assert_eq!(resolved.hypothesis_poincare(), gauss_binom(1 << n, 2));
        }
    }

    #[test]
    fn classifier_examples() {
        let a = AlgebraClass::division(8, Prime::TWO).unwrap();
        let flag = FlagDescriptor::new(a, vec![2, 4]).unwrap();
        assert_eq!(upper_label(&flag), 1);
        assert_eq!(
            upper_labels_allowed(&ProductVariety::single(flag)),
            BTreeSet::from([0, 1])
        );
        let sb = FlagDescriptor::grassmannian(a, 1).unwrap();
        assert_eq!(upper_label(&sb), 0);
        assert_eq!(
            upper_labels_allowed(&ProductVariety::single(sb)),
            BTreeSet::from([0])
        );

        let b = AlgebraClass::new(12, 4, Prime::TWO).unwrap();
        assert_eq!(upper_label(&FlagDescriptor::grassmannian(b, 6).unwrap()), 1);

        for p in [Prime::TWO, Prime::THREE] {
            let n = 3;
            let d = AlgebraClass::division(p.pow(n).unwrap(), p).unwrap();
            for m in 0..n {
                let x = FlagDescriptor::grassmannian(d, p.pow(m).unwrap()).unwrap();
                assert_eq!(
                    upper_labels_allowed(&ProductVariety::single(x)),
                    (0..=m).collect::<BTreeSet<_>>()
                );
            }
        }
    }

    #[test]
    fn rank_degree_examples() {
        let p = Prime::TWO;
        for n in 1..6 {
            let d = AlgebraClass::division(1 << n, p).unwrap();
            assert!(validate_rank_degree(&d, &[1], &Natural::from(1u64 << n)).unwrap());
            for k in 0..n {
                let claimed = Natural::from(3u64 << k);
                assert!(!validate_rank_degree(&d, &[1], &claimed).unwrap());
            }
        }
        let split = AlgebraClass::split(8, p).unwrap();
        assert!(validate_rank_degree(&split, &[3], &Natural::from(7u32)).unwrap());
        let d8 = AlgebraClass::division(8, p).unwrap();
        assert!(!validate_rank_degree(&d8, &[2], &Natural::from(2u32)).unwrap());
        assert!(validate_rank_degree(&d8, &[2], &Natural::from(4u32)).unwrap());
        assert!(validate_rank_degree(&d8, &[2], &Natural::from(0u32)).is_err());
    }

    #[test]
    fn engine_outputs_satisfy_rank_degree() {
        for p in [Prime::TWO, Prime::THREE] {
            for n in 1..=3 {
                for m in 0..n {
                    assert!(rank_degree_consistent(one_step(p, n, m).unwrap().expr()).unwrap());
                }
            }
        }
        for n in 2..=5 {
            for which in [Variety22n::X1, Variety22n::X2] {
                assert!(rank_degree_consistent(&decomposition_2_2n(n, which).unwrap()).unwrap());
            }
        }
    }
}
