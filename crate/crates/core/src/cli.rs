//! Command-line front end.
//!
//! Every command produces a [`Response`]; the JSON form is canonical (sorted
//! keys, compact, all numbers as decimal strings) and the text form is a
//! rendering of the same payload. [`run`] does no I/O so it can be tested
//! directly; the binary only prints its [`Outcome`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::arith::{binom, vp_binom, Natural, Prime};
use crate::candim::{cdim_p, CanDimReport, VarietyDescriptor};
use crate::csa::{closed_point_gcd, dim_flag, AlgebraClass, FlagDescriptor, ProductVariety};
use crate::error::{Error, Result};
use crate::motive::MotiveExpr;
use crate::serde_dec::{dec, dec_opt, dec_vec};
use crate::split::split_flag_poincare;
use crate::tower::{
    decomposition_2_2n, one_step, shift_rule_identity, upper_label, upper_labels_allowed,
    verify_basic2, ProofTrace, Variety22n, Verdict,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const CONDITIONAL: &str =
    "conditional: ranks assume each upper motive M_{l,D} is the whole motive of X(p^l; D)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Poincare,
    Decompose,
    Candim,
    Classify,
    Verify,
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Onestep,
    #[value(name = "2-2n-X1")]
    TwoX1,
    #[value(name = "2-2n-X2")]
    TwoX2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Basic2,
    PoincareIdentity,
    Kummer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Hypothesis,
    Constraint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// Motives of flag varieties of central simple algebras.
#[derive(Debug, Parser)]
#[command(name = "motivec", version)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub degree: Option<u64>,
    /// Defaults to the degree (a division algebra).
    #[arg(long)]
    pub index: Option<u64>,
    /// Comma-separated reduced dimensions of one flag, e.g. `1,3`.
    #[arg(long)]
    pub dims: Option<String>,
    /// Semicolon-separated flags of a product, e.g. `2;1,3`.
    #[arg(long)]
    pub factors: Option<String>,
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    #[arg(long, value_enum)]
    pub check: Option<Check>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

/// A validated request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Poincare {
        degree: u64,
        dims: Vec<u64>,
    },
    Rank {
        degree: u64,
        dims: Vec<u64>,
        algebra: Option<AlgebraClass>,
        mode: Mode,
    },
    Decompose {
        p: Prime,
        n: u32,
        variant: DecomposeVariant,
        mode: Mode,
    },
    Candim {
        product: ProductVariety,
    },
    Classify {
        product: ProductVariety,
        mode: Mode,
    },
    Verify {
        p: Prime,
        n: u32,
        check: Check,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeVariant {
    OneStep { m: u32 },
    TwoToTheN(Variety22n),
}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

fn parse_list(flag: &str, raw: &str) -> Result<Vec<u64>> {
    raw.split(',')
        .map(|s| {
            s.trim().parse::<u64>().map_err(|_| {
                Error::Domain(format!("--{flag}: {s:?} is not a non-negative integer"))
            })
        })
        .collect()
}

fn parse_factors(raw: &str) -> Result<Vec<Vec<u64>>> {
    raw.split(';').map(|f| parse_list("factors", f)).collect()
}

impl Args {
    fn given(&self) -> Vec<&'static str> {
        let flags = [
            ("p", self.p.is_some()),
            ("n", self.n.is_some()),
            ("m", self.m.is_some()),
            ("degree", self.degree.is_some()),
            ("index", self.index.is_some()),
            ("dims", self.dims.is_some()),
            ("factors", self.factors.is_some()),
            ("variant", self.variant.is_some()),
            ("check", self.check.is_some()),
            ("mode", self.mode.is_some()),
        ];
        flags
            .iter()
            .filter(|(_, on)| *on)
            .map(|(name, _)| *name)
            .collect()
    }

    fn accepted(&self) -> &'static [&'static str] {
        match self.command {
            Command::Poincare => &["degree", "dims"],
            Command::Rank => &["degree", "dims", "p", "index", "mode"],
            Command::Decompose => &["p", "n", "m", "variant", "mode"],
            Command::Candim => &["p", "degree", "index", "factors"],
            Command::Classify => &["p", "degree", "index", "factors", "mode"],
            Command::Verify => &["p", "n", "check"],
        }
    }

    fn require<T: Copy>(&self, name: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| Error::Domain(format!("{} requires --{name}", self.command_name())))
    }

    fn command_name(&self) -> &'static str {
        command_name(self.command)
    }

    fn prime(&self) -> Result<Prime> {
        Prime::new(self.require("p", self.p)?)
    }

    fn algebra(&self) -> Result<AlgebraClass> {
        let degree = self.require("degree", self.degree)?;
        AlgebraClass::new(degree, self.index.unwrap_or(degree), self.prime()?)
    }

    fn product(&self) -> Result<ProductVariety> {
        let raw = self
            .factors
            .as_deref()
            .ok_or_else(|| Error::Domain(format!("{} requires --factors", self.command_name())))?;
        ProductVariety::from_dims(self.algebra()?, parse_factors(raw)?)
    }

    fn flag_dims(&self) -> Result<(u64, Vec<u64>)> {
        let degree = self.require("degree", self.degree)?;
        let raw = self
            .dims
            .as_deref()
            .ok_or_else(|| Error::Domain(format!("{} requires --dims", self.command_name())))?;
        let mut dims = parse_list("dims", raw)?;
        dims.sort_unstable();
        if dims.windows(2).any(|w| w[0] == w[1]) {
            return usage(format!("--dims has a repeated entry: {raw}"));
        }
        dim_flag(degree, &dims)?;
        Ok((degree, dims))
    }

    /// Check the parameter set and build the request.
    pub fn validate(&self) -> Result<Request> {
        let accepted = self.accepted();
        if let Some(extra) = self.given().into_iter().find(|f| !accepted.contains(f)) {
            return usage(format!("{} does not take --{extra}", self.command_name()));
        }
        let mode = self.mode.unwrap_or(Mode::Hypothesis);
        Ok(match self.command {
            Command::Poincare => {
                let (degree, dims) = self.flag_dims()?;
                Request::Poincare { degree, dims }
            }
            Command::Rank => {
                let (degree, dims) = self.flag_dims()?;
                let algebra = match (self.p, self.index) {
                    (None, None) if mode == Mode::Hypothesis => None,
                    (None, _) => {
                        return usage("rank with --index or --mode constraint requires --p")
                    }
                    _ => Some(self.algebra()?),
                };
                Request::Rank {
                    degree,
                    dims,
                    algebra,
                    mode,
                }
            }
            Command::Decompose => {
                let p = self.prime()?;
                let n = self.require("n", self.n)?;
                let variant = match self.variant.unwrap_or(Variant::Onestep) {
                    Variant::Onestep => DecomposeVariant::OneStep {
                        m: self.require("m", self.m)?,
                    },
                    v => {
                        if p != Prime::TWO {
                            return usage(format!("variant 2-2n needs p = 2, got p = {p}"));
                        }
                        if self.m.is_some() {
                            return usage("variant 2-2n does not take --m");
                        }
                        DecomposeVariant::TwoToTheN(if v == Variant::TwoX1 {
                            Variety22n::X1
                        } else {
                            Variety22n::X2
                        })
                    }
                };
                Request::Decompose {
                    p,
                    n,
                    variant,
                    mode,
                }
            }
            Command::Candim => Request::Candim {
                product: self.product()?,
            },
            Command::Classify => Request::Classify {
                product: self.product()?,
                mode,
            },
            Command::Verify => Request::Verify {
                p: self.prime()?,
                n: self.require("n", self.n)?,
                check: self.check.unwrap_or(Check::Basic2),
            },
        })
    }

    /// The parameters as given, normalized, with the mode made explicit for
    /// commands that use it.
    pub fn params(&self) -> BTreeMap<String, String> {
        let mut out = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.insert(k.to_string(), v);
            }
        };
        let strip = |s: &Option<String>| s.as_ref().map(|s| s.replace(' ', ""));
        put("p", self.p.map(|v| v.to_string()));
        put("n", self.n.map(|v| v.to_string()));
        put("m", self.m.map(|v| v.to_string()));
        put("degree", self.degree.map(|v| v.to_string()));
        put("index", self.index.map(|v| v.to_string()));
        put("dims", strip(&self.dims));
        put("factors", strip(&self.factors));
        put("variant", self.variant.map(|v| value_name(&v)));
        put("check", self.check.map(|v| value_name(&v)));
        if self.accepted().contains(&"mode") {
            put(
                "mode",
                Some(value_name(&self.mode.unwrap_or(Mode::Hypothesis))),
            );
        }
        out
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|pv| pv.get_name().to_string())
        .unwrap_or_default()
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Poincare => "poincare",
        Command::Decompose => "decompose",
        Command::Candim => "candim",
        Command::Classify => "classify",
        Command::Verify => "verify",
        Command::Rank => "rank",
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoincarePayload {
    #[serde(with = "dec")]
    pub degree: u64,
    #[serde(with = "dec_vec")]
    pub dims: Vec<u64>,
    #[serde(with = "dec_vec")]
    pub coefficients: Vec<Natural>,
    #[serde(with = "dec")]
    pub rank: Natural,
    #[serde(with = "dec")]
    pub dimension: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPayload {
    #[serde(with = "dec")]
    pub degree: u64,
    #[serde(with = "dec_vec")]
    pub dims: Vec<u64>,
    pub mode: Mode,
    /// Number of Tate summands over a splitting field.
    #[serde(with = "dec")]
    pub rank: Natural,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraClass>,
    /// `l` of the upper summand `M_{l,D}`.
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub upper_label: Option<u32>,
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub upper_rank_hypothesis: Option<Natural>,
    /// Every summand's rank has at least this p-adic valuation.
    #[serde(default, with = "dec_opt", skip_serializing_if = "Option::is_none")]
    pub min_summand_valuation: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyPayload {
    pub variety: VarietyDescriptor,
    pub mode: Mode,
    #[serde(with = "dec")]
    pub generic_index: u64,
    /// Labels `l` of the upper motives `M_{l,D}` that may occur.
    #[serde(with = "dec_vec")]
    pub labels: Vec<u32>,
    /// The label of each factor's own upper summand.
    #[serde(with = "dec_vec")]
    pub factor_labels: Vec<u32>,
    /// Hypothesis mode: rank of `M_{l,D}` for each label.
    #[serde(default, with = "dec_vec", skip_serializing_if = "Vec::is_empty")]
    pub ranks_hypothesis: Vec<Natural>,
    /// Constraint mode: lower bound on `v_p` of the rank for each label.
    #[serde(default, with = "dec_vec", skip_serializing_if = "Vec::is_empty")]
    pub min_rank_valuations: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftRuleCase {
    #[serde(with = "dec")]
    pub m: u32,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KummerCase {
    #[serde(with = "dec")]
    pub m: u32,
    #[serde(with = "dec")]
    pub valuation: u32,
    #[serde(with = "dec")]
    pub expected: u32,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport<C> {
    pub check: String,
    pub p: Prime,
    #[serde(with = "dec")]
    pub n: u32,
    pub cases: Vec<C>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Poincare(PoincarePayload),
    Rank(RankPayload),
    Decompose(MotiveExpr),
    Candim(CanDimReport),
    Classify(ClassifyPayload),
    Basic2(ProofTrace),
    ShiftRule(CheckReport<ShiftRuleCase>),
    Kummer(CheckReport<KummerCase>),
}

impl Payload {
    pub fn to_json(&self) -> Value {
        let v = match self {
            Payload::Poincare(x) => serde_json::to_value(x),
            Payload::Rank(x) => serde_json::to_value(x),
            Payload::Decompose(x) => serde_json::to_value(x),
            Payload::Candim(x) => serde_json::to_value(x),
            Payload::Classify(x) => serde_json::to_value(x),
            Payload::Basic2(x) => serde_json::to_value(x),
            Payload::ShiftRule(x) => serde_json::to_value(x),
            Payload::Kummer(x) => serde_json::to_value(x),
        };
        v.expect("payloads serialize to JSON")
    }

    /// Verdict of a verification payload.
    pub fn verdict(&self) -> Option<Verdict> {
        match self {
            Payload::Basic2(t) => Some(t.verdict),
            Payload::ShiftRule(r) => Some(r.verdict),
            Payload::Kummer(r) => Some(r.verdict),
            _ => None,
        }
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        match self {
            Payload::Poincare(x) => render_poincare(&mut s, x),
            Payload::Rank(x) => render_rank(&mut s, x),
            Payload::Decompose(x) => render_expr(&mut s, x),
            Payload::Candim(x) => render_candim(&mut s, x),
            Payload::Classify(x) => render_classify(&mut s, x),
            Payload::Basic2(x) => render_trace(&mut s, x),
            Payload::ShiftRule(r) => {
                render_check_header(&mut s, r);
                for c in &r.cases {
                    let _ = writeln!(
                        s,
                        "  m={}: {}",
                        c.m,
                        if c.holds { "holds" } else { "fails" }
                    );
                }
            }
            Payload::Kummer(r) => {
                render_check_header(&mut s, r);
                for c in &r.cases {
                    let _ = writeln!(
                        s,
                        "  m={}: v_{}(binom) = {}, expected {}",
                        c.m, r.p, c.valuation, c.expected
                    );
                }
            }
        }
        s
    }
}

fn render_poincare(s: &mut String, x: &PoincarePayload) {
    let poly = crate::arith::QPoly::from_coeffs(x.coefficients.clone());
    let _ = writeln!(s, "flag ({}) in dimension {}", join(&x.dims), x.degree);
    let _ = writeln!(s, "P(q) = {poly}");
    let _ = writeln!(s, "rank {}", x.rank);
    let _ = writeln!(s, "dimension {}", x.dimension);
}

fn render_rank(s: &mut String, x: &RankPayload) {
    let _ = writeln!(s, "flag ({}) in dimension {}", join(&x.dims), x.degree);
    let _ = writeln!(s, "rank {}", x.rank);
    if let Some(alg) = &x.algebra {
        let _ = writeln!(s, "algebra {alg}");
    }
    if let (Some(l), Some(r)) = (x.upper_label, &x.upper_rank_hypothesis) {
        let _ = writeln!(s, "upper summand UPPER({l}), rank {r} (conditional)");
    }
    if let Some(v) = x.min_summand_valuation {
        let _ = writeln!(s, "every summand has v_p(rank) >= {v}");
    }
}

fn render_expr(s: &mut String, x: &MotiveExpr) {
    let ctx = x.context();
    let _ = writeln!(s, "over {ctx}");
    for t in x.expanded() {
        let _ = writeln!(s, "  {t}  rank {}", t.label.rank(&ctx));
    }
    let _ = writeln!(s, "total rank {}", x.rank());
}

fn render_candim(s: &mut String, x: &CanDimReport) {
    let _ = writeln!(s, "{}", describe(&x.variety));
    let _ = writeln!(s, "n = {}, m = {}", x.n, x.m);
    let _ = writeln!(s, "cdim_{} = {}", x.p, x.cdim_p);
    let _ = writeln!(s, "dim = {}", x.dim);
    let verdict = if x.incompressible { "yes" } else { "no" };
    let _ = writeln!(s, "{}-incompressible: {verdict}", x.p);
}

fn render_classify(s: &mut String, x: &ClassifyPayload) {
    let _ = writeln!(s, "{}", describe(&x.variety));
    let _ = writeln!(s, "generic index {}", x.generic_index);
    let _ = writeln!(s, "factor labels {}", join(&x.factor_labels));
    let _ = writeln!(s, "allowed labels {}", join(&x.labels));
    for (l, r) in x.labels.iter().zip(&x.ranks_hypothesis) {
        let _ = writeln!(s, "  UPPER({l}) rank {r} (conditional)");
    }
    for (l, v) in x.labels.iter().zip(&x.min_rank_valuations) {
        let _ = writeln!(s, "  UPPER({l}) v_p(rank) >= {v}");
    }
}

fn render_trace(s: &mut String, t: &ProofTrace) {
    let _ = writeln!(s, "basic2 p={} n={}: {}", t.p, t.n, t.verdict);
    for r in &t.records {
        let diagonal = match &r.diagonal {
            Some(d) => format!("diagonal v_p = {} > {}", d.rank_valuation, d.bound),
            None => "no diagonal".to_string(),
        };
        let _ = writeln!(
            s,
            "  m={}: {} compositions, {} sources, {} orbits of size {} ({} terms), {}, v_p(rank) = {}: {}",
            r.m,
            r.compositions,
            r.sources.len(),
            r.orbits.len(),
            t.p,
            r.second_type_count,
            diagonal,
            r.concluded_valuation,
            r.verdict
        );
    }
}

fn render_check_header<C>(s: &mut String, r: &CheckReport<C>) {
    let _ = writeln!(s, "{} p={} n={}: {}", r.check, r.p, r.n, r.verdict);
}

fn describe(v: &VarietyDescriptor) -> String {
    let factors: Vec<String> = v
        .factors
        .iter()
        .map(|f| format!("X({})", join(f)))
        .collect();
    format!("{} over {}", factors.join(" x "), v.algebra)
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Execute a validated request. The diagnostics are appended to `diag`.
pub fn dispatch(req: &Request, diag: &mut Vec<String>) -> Result<Payload> {
    match req {
        Request::Poincare { degree, dims } => {
            let poly = split_flag_poincare(*degree, dims)?;
            Ok(Payload::Poincare(PoincarePayload {
                degree: *degree,
                dims: dims.clone(),
                coefficients: poly.coeffs().to_vec(),
                rank: poly.eval1(),
                dimension: dim_flag(*degree, dims)?,
            }))
        }
        Request::Rank {
            degree,
            dims,
            algebra,
            mode,
        } => {
            let mut out = RankPayload {
                degree: *degree,
                dims: dims.clone(),
                mode: *mode,
                rank: split_flag_poincare(*degree, dims)?.eval1(),
                algebra: *algebra,
                upper_label: None,
                upper_rank_hypothesis: None,
                min_summand_valuation: None,
            };
            if let Some(alg) = algebra {
                let flag = FlagDescriptor::new(*alg, dims.clone())?;
                let l = upper_label(&flag);
                out.upper_label = Some(l);
                match mode {
                    Mode::Hypothesis => {
                        let pn = alg.p().pow(alg.index_valuation())?;
                        out.upper_rank_hypothesis = Some(binom(pn, alg.p().pow(l)? as i64));
                        diag.push(CONDITIONAL.to_string());
                    }
                    Mode::Constraint => {
                        let gcd = closed_point_gcd(alg, dims)?;
                        out.min_summand_valuation = Some(crate::arith::vp_u64(gcd, alg.p())?);
                    }
                }
            }
            Ok(Payload::Rank(out))
        }
        Request::Decompose {
            p,
            n,
            variant,
            mode,
        } => {
            let expr = match variant {
                DecomposeVariant::OneStep { m } => one_step(*p, *n, *m)?.expr().clone(),
                DecomposeVariant::TwoToTheN(which) => decomposition_2_2n(*n, *which)?,
            };
            diag.push(CONDITIONAL.to_string());
            if *mode == Mode::Constraint {
                let ctx = expr.context();
                let mut seen = Vec::new();
                for t in expr.expanded() {
                    if !t.label.is_tate() && !seen.contains(&t.label) {
                        diag.push(format!(
                            "constraint: {} has v_{}(rank) >= {}",
                            t.label,
                            p,
                            t.label.vp_rank_bound(&ctx)
                        ));
                        seen.push(t.label);
                    }
                }
            }
            Ok(Payload::Decompose(expr))
        }
        Request::Candim { product } => Ok(Payload::Candim(cdim_p(product)?)),
        Request::Classify { product, mode } => {
            let alg = product.algebra();
            let p = alg.p();
            let n = alg.index_valuation();
            let labels: Vec<u32> = upper_labels_allowed(product).into_iter().collect();
            let mut out = ClassifyPayload {
                variety: product.into(),
                mode: *mode,
                generic_index: product.generic_index(),
                labels: labels.clone(),
                factor_labels: product.factors().iter().map(upper_label).collect(),
                ranks_hypothesis: Vec::new(),
                min_rank_valuations: Vec::new(),
            };
            match mode {
                Mode::Hypothesis => {
                    let pn = p.pow(n)?;
                    out.ranks_hypothesis = labels
                        .iter()
                        .map(|&l| Ok(binom(pn, p.pow(l)? as i64)))
                        .collect::<Result<_>>()?;
                    diag.push(CONDITIONAL.to_string());
                }
                Mode::Constraint => {
                    out.min_rank_valuations = labels.iter().map(|&l| n - l.min(n)).collect();
                }
            }
            Ok(Payload::Classify(out))
        }
        Request::Verify { p, n, check } => match check {
            Check::Basic2 => {
                let trace = verify_basic2(*p, *n)?;
                if !trace.recheck() {
                    diag.push("recheck: recorded checks do not re-derive".to_string());
                    let mut failed = trace;
                    failed.verdict = Verdict::Fail;
                    return Ok(Payload::Basic2(failed));
                }
                Ok(Payload::Basic2(trace))
            }
            Check::PoincareIdentity => {
                let cases = (0..*n)
                    .map(|m| {
                        Ok(ShiftRuleCase {
                            m,
                            holds: shift_rule_identity(*p, *n, m)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if cases.is_empty() {
                    return usage("poincare-identity requires n >= 1");
                }
                let ok = cases.iter().all(|c| c.holds);
                Ok(Payload::ShiftRule(CheckReport {
                    check: "poincare-identity".into(),
                    p: *p,
                    n: *n,
                    cases,
                    verdict: if ok { Verdict::Pass } else { Verdict::Fail },
                }))
            }
            Check::Kummer => {
                let pn = p.pow(*n)?;
                let cases = (0..=*n)
                    .map(|m| {
                        let valuation = vp_binom(pn, p.pow(m)?, *p)?;
                        Ok(KummerCase {
                            m,
                            valuation,
                            expected: n - m,
                            holds: valuation == n - m,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let ok = cases.iter().all(|c| c.holds);
                Ok(Payload::Kummer(CheckReport {
                    check: "kummer".into(),
                    p: *p,
                    n: *n,
                    cases,
                    verdict: if ok { Verdict::Pass } else { Verdict::Fail },
                }))
            }
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub status: Status,
    pub command: &'static str,
    pub params: BTreeMap<String, String>,
    pub payload: Option<Payload>,
    pub diagnostics: Vec<String>,
}

impl Response {
    pub fn exit_code(&self) -> i32 {
        match (
            self.status,
            self.payload.as_ref().and_then(Payload::verdict),
        ) {
            (Status::Error, _) => EXIT_USAGE,
            (Status::Ok, Some(Verdict::Fail)) => EXIT_FAIL,
            (Status::Ok, _) => EXIT_OK,
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "status": self.status,
            "command": self.command,
            "params": self.params,
            "payload": self.payload.as_ref().map_or(Value::Null, Payload::to_json),
            "diagnostics": self.diagnostics,
        })
    }

    /// Compact JSON with sorted keys.
    pub fn to_canonical_json(&self) -> String {
        // serde_json's map is a BTreeMap, so keys come out sorted
        serde_json::to_string(&self.to_json()).expect("JSON values serialize")
    }

    pub fn render_text(&self) -> String {
        let mut s = match &self.payload {
            Some(p) => p.render_text(),
            None => String::new(),
        };
        for d in &self.diagnostics {
            let prefix = if self.status == Status::Error {
                "error"
            } else {
                "note"
            };
            let _ = writeln!(s, "{prefix}: {d}");
        }
        s
    }
}

/// Validate and execute parsed arguments.
pub fn respond(args: &Args) -> Response {
    let mut diagnostics = Vec::new();
    let result = args
        .validate()
        .and_then(|req| dispatch(&req, &mut diagnostics));
    let (status, payload) = match result {
        Ok(payload) => {
            if payload.verdict() == Some(Verdict::Fail) {
                diagnostics.push("verification failed".to_string());
            }
            (Status::Ok, Some(payload))
        }
        Err(e) => {
            diagnostics.push(e.to_string());
            (Status::Error, None)
        }
    };
    Response {
        status,
        command: args.command_name(),
        params: args.params(),
        payload,
        diagnostics,
    }
}

/// What the binary prints and returns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: rendered,
                    code: EXIT_USAGE,
                }
            } else {
                Outcome {
                    stdout: rendered,
                    stderr: String::new(),
                    code: EXIT_OK,
                }
            };
        }
    };
    let response = respond(&args);
    let code = response.exit_code();
    match args.format {
        Format::Json => Outcome {
            stdout: response.to_canonical_json() + "\n",
            stderr: String::new(),
            code,
        },
        Format::Text if response.status == Status::Error => Outcome {
            stdout: String::new(),
            stderr: response.render_text(),
            code,
        },
        Format::Text => Outcome {
            stdout: response.render_text(),
            stderr: String::new(),
            code,
        },
    }
}
