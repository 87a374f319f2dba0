//! Laws of the maximum drawdown and drawdown duration of the pieces of a
//! path split at its supremum and infimum over an independent exponential
//! horizon `T ~ Exp(gamma)`.
//!
//! Notation: `S_T`, `I_T` are the supremum and infimum on `[0, T]`, `H_S`,
//! `H_I` their (first) times, and `M_{u,v}` the largest peak-to-trough drop
//! on `[u, v]`. Every function reads `gamma` from the table it is given.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::exit_identities::gamma_over_phi;
use crate::scale_functions::ScaleTable;

/// Below this argument the removable singularities at the origin are
/// evaluated from their first-order expansion.
const ORIGIN_GUARD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Cdf,
    SurvivalFunction,
    LaplaceTransform,
    HFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    SupCdf,
    JointInfSup,
    PreSupMddCdf,
    PostSupMddSf,
    PostInfMddSf,
    PostInfSupCdf,
    IntermediateMddCdf,
    PostSupMddCdfCond,
    DurationLtPostSup,
    DurationLtPostSupCond,
    DurationLtAtAlpha,
    HPreSup,
    HPostSup,
    HPostInf,
    HIntermediate,
    HPostSupCond,
    HPostKappa,
}

impl FormulaId {
    pub fn as_str(self) -> &'static str {
        match self {
            FormulaId::SupCdf => "sup_cdf",
            FormulaId::JointInfSup => "joint_inf_sup",
            FormulaId::PreSupMddCdf => "pre_sup_mdd_cdf",
            FormulaId::PostSupMddSf => "post_sup_mdd_sf",
            FormulaId::PostInfMddSf => "post_inf_mdd_sf",
            FormulaId::PostInfSupCdf => "post_inf_sup_cdf",
            FormulaId::IntermediateMddCdf => "intermediate_mdd_cdf",
            FormulaId::PostSupMddCdfCond => "post_sup_mdd_cdf_cond",
            FormulaId::DurationLtPostSup => "duration_lt_post_sup",
            FormulaId::DurationLtPostSupCond => "duration_lt_post_sup_cond",
            FormulaId::DurationLtAtAlpha => "duration_lt_at_alpha",
            FormulaId::HPreSup => "h_pre_sup",
            FormulaId::HPostSup => "h_post_sup",
            FormulaId::HPostInf => "h_post_inf",
            FormulaId::HIntermediate => "h_intermediate",
            FormulaId::HPostSupCond => "h_post_sup_cond",
            FormulaId::HPostKappa => "h_post_kappa",
        }
    }
}

impl std::fmt::Display for FormulaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawValue {
    pub kind: LawKind,
    pub value: f64,
    pub formula: FormulaId,
}

impl LawValue {
    fn new(kind: LawKind, formula: FormulaId, value: f64) -> Self {
        Self {
            kind,
            value,
            formula,
        }
    }
}

/// Conditioning on the extremes of `[0, T]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ConditionSpec {
    /// Condition on `S_T = b`.
    pub sup_level: Option<f64>,
    /// Condition on `I_T = a`.
    pub inf_level: Option<f64>,
    /// Restrict to paths whose infimum precedes their supremum.
    pub inf_before_sup: bool,
}

impl ConditionSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn sup(b: f64) -> Self {
        Self {
            sup_level: Some(b),
            ..Self::default()
        }
    }

    pub fn inf(a: f64) -> Self {
        Self {
            inf_level: Some(a),
            ..Self::default()
        }
    }

    /// `I_T = a`, `S_T = b` and `H_I < H_S`.
    pub fn inf_then_sup(a: f64, b: f64) -> Self {
        Self {
            sup_level: Some(b),
            inf_level: Some(a),
            inf_before_sup: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.sup_level {
            if !(b > 0.0) {
                return Err(domain(
                    "condition",
                    format!("sup level must be > 0, got {b}"),
                ));
            }
        }
        if let Some(a) = self.inf_level {
            if !(a < 0.0) {
                return Err(domain(
                    "condition",
                    format!("inf level must be < 0, got {a}"),
                ));
            }
        }
        if self.inf_before_sup && (self.sup_level.is_none() || self.inf_level.is_none()) {
            return Err(domain("condition", "inf_before_sup needs both levels"));
        }
        Ok(())
    }
}

fn positive(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(domain(op, format!("{name} must be > 0, got {v}")))
    }
}

fn positive_gamma(op: &'static str, table: &ScaleTable) -> Result<()> {
    if table.gamma() > 0.0 {
        Ok(())
    } else {
        Err(domain(op, "needs an exponential horizon, gamma > 0"))
    }
}

fn gap_and_threshold(op: &'static str, gap: f64, d: f64) -> Result<()> {
    if d > 0.0 && d <= gap && gap.is_finite() {
        Ok(())
    } else {
        Err(domain(
            op,
            format!("need 0 < d <= gap, got d = {d}, gap = {gap}"),
        ))
    }
}

/// `P{S_T < b} = 1 - exp(-Phi(gamma) b)`.
pub fn sup_cdf(table: &ScaleTable, b: f64) -> Result<LawValue> {
    if !(b >= 0.0) {
        return Err(domain("sup_cdf", format!("b must be >= 0, got {b}")));
    }
    Ok(LawValue::new(
        LawKind::Cdf,
        FormulaId::SupCdf,
        -(-table.phi() * b).exp_m1(),
    ))
}

/// `P_0{a < I_T, S_T < b} = 1 - Z(-a) + (Z(b - a) - 1) W(-a)/W(b - a)`.
pub fn joint_inf_sup(table: &ScaleTable, a: f64, b: f64) -> Result<LawValue> {
    if !(a < 0.0 && b > 0.0) {
        return Err(domain(
            "joint_inf_sup",
            format!("need a < 0 < b, got a = {a}, b = {b}"),
        ));
    }
    positive_gamma("joint_inf_sup", table)?;
    let value = match (a.is_finite(), b.is_finite()) {
        (false, false) => 1.0,
        (false, true) => -(-table.phi() * b).exp_m1(),
        (true, false) => table.decay(-a).hit,
        (true, true) => post_sup_cond_h(table, -a, b - a),
    };
    Ok(LawValue::new(LawKind::Cdf, FormulaId::JointInfSup, value))
}

/// `P{M_{0,H_S} < d | S_T = b} = exp(-b (W'(d)/W(d) - Phi(gamma)))`.
pub fn pre_sup_mdd_cdf(table: &ScaleTable, b: f64, d: f64) -> Result<LawValue> {
    positive("pre_sup_mdd_cdf", "b", b)?;
    positive("pre_sup_mdd_cdf", "d", d)?;
    let value = if d.is_infinite() {
        1.0
    } else {
        (-b * table.scales(d).excess_ratio).exp()
    };
    Ok(LawValue::new(LawKind::Cdf, FormulaId::PreSupMddCdf, value))
}

fn post_sup_sf_value(table: &ScaleTable, d: f64) -> f64 {
    if d.is_infinite() {
        return 0.0;
    }
    // 1 + g(d)/Phi, see post_sup_g
    let (s, decay) = (table.scales(d), table.decay(d));
    // W'/W - Phi = (W' - Phi W)/W keeps its relative accuracy far out
    let excess = decay.lead / s.w;
    (gamma_over_phi(table) * decay.lead + decay.ruin * s.ratio - excess) / table.phi()
}

/// `1 - Z(u) + (Z(v) - 1) W(u)/W(v)` for `0 < u <= v`, as
/// `hit(u) - hit(v) W(u)/W(v)` with `hit = 1 - Z + (gamma/Phi) W`.
fn post_sup_cond_h(table: &ScaleTable, u: f64, v: f64) -> f64 {
    let (su, sv) = (table.scales(u), table.scales(v));
    table.decay(u).hit - table.decay(v).hit * (su.log_w - sv.log_w).exp()
}

/// `P{M_{H_S,T} > d} = 1 + ((Z(d) - 1) W'(d) - gamma W(d)^2) / (Phi(gamma) W(d))`,
/// which also holds conditionally on `S_T = b` for any `b`.
pub fn post_sup_mdd_sf(table: &ScaleTable, d: f64) -> Result<LawValue> {
    positive("post_sup_mdd_sf", "d", d)?;
    positive_gamma("post_sup_mdd_sf", table)?;
    Ok(LawValue::new(
        LawKind::SurvivalFunction,
        FormulaId::PostSupMddSf,
        post_sup_sf_value(table, d),
    ))
}

/// `P{M_{H_I,T} > d} = 1 - Phi(gamma) W(d)/W'(d)`, also conditionally on `I_T`.
pub fn post_inf_mdd_sf(table: &ScaleTable, d: f64) -> Result<LawValue> {
    positive("post_inf_mdd_sf", "d", d)?;
    positive_gamma("post_inf_mdd_sf", table)?;
    let value = if d.is_infinite() {
        0.0
    } else {
        let s = table.scales(d);
        table.decay(d).lead / (s.w * s.ratio)
    };
    Ok(LawValue::new(
        LawKind::SurvivalFunction,
        FormulaId::PostInfMddSf,
        value,
    ))
}

/// `P{S_{H_I,T} <= a + u | I_T = a} = Phi(gamma) (Z(u) - 1) / (gamma W(u))`.
pub fn post_inf_sup_cdf(table: &ScaleTable, u: f64) -> Result<LawValue> {
    positive("post_inf_sup_cdf", "u", u)?;
    positive_gamma("post_inf_sup_cdf", table)?;
    let value = if u.is_infinite() {
        1.0
    } else if u < ORIGIN_GUARD {
        // (Z - 1)/(gamma W) = int W / W ~ u/2 as W(0) = 0
        0.5 * table.phi() * u
    } else {
        let s = table.scales(u);
        table.phi() * s.integral / s.w
    };
    Ok(LawValue::new(LawKind::Cdf, FormulaId::PostInfSupCdf, value))
}

/// `P{M_{H_I,H_S} < d | H_I < H_S, I_T = a, S_T = b}` with `gap = b - a`:
/// `W(gap)/W(d) exp(-(gap - d) W'(d)/W(d))`.
pub fn intermediate_mdd_cdf(table: &ScaleTable, gap: f64, d: f64) -> Result<LawValue> {
    gap_and_threshold("intermediate_mdd_cdf", gap, d)?;
    let value = if d == gap {
        1.0
    } else {
        let (sd, sg) = (table.scales(d), table.scales(gap));
        (sg.log_w - sd.log_w - (gap - d) * sd.ratio).exp()
    };
    Ok(LawValue::new(
        LawKind::Cdf,
        FormulaId::IntermediateMddCdf,
        value,
    ))
}

/// `g(u) = (Z(u) - 1) W'(u)/W(u) - gamma W(u)`, negative on `(0, inf)`.
fn post_sup_g(table: &ScaleTable, u: f64) -> f64 {
    let gamma = table.gamma();
    if u < ORIGIN_GUARD {
        let s = table.model().sigma();
        // W ~ 2u/sigma^2 and int W ~ u W/2 near the origin
        return -gamma * u / (s * s);
    }
    // with Z = ruin + (gamma/Phi) W: g = (gamma/Phi)(W' - Phi W) - (1 - ruin) W'/W
    let (s, decay) = (table.scales(u), table.decay(u));
    gamma_over_phi(table) * decay.lead - decay.hit * s.ratio
}

fn post_sup_cond_value(table: &ScaleTable, gap: f64, d: f64) -> f64 {
    if d == gap {
        1.0
    } else {
        post_sup_g(table, d) / post_sup_g(table, gap)
    }
}

/// `P{M_{H_S,T} < d | H_I < H_S, I_T = a, S_T = b} = g(d)/g(b - a)`.
pub fn post_sup_mdd_cdf_cond(table: &ScaleTable, gap: f64, d: f64) -> Result<LawValue> {
    gap_and_threshold("post_sup_mdd_cdf_cond", gap, d)?;
    positive_gamma("post_sup_mdd_cdf_cond", table)?;
    Ok(LawValue::new(
        LawKind::Cdf,
        FormulaId::PostSupMddCdfCond,
        post_sup_cond_value(table, gap, d),
    ))
}

/// `E[exp(-gamma T^d_{H_S,T})]`, equal to `P{M_{H_S,T} > d}`.
pub fn duration_lt_post_sup(table: &ScaleTable, d: f64) -> Result<LawValue> {
    positive("duration_lt_post_sup", "d", d)?;
    positive_gamma("duration_lt_post_sup", table)?;
    Ok(LawValue::new(
        LawKind::LaplaceTransform,
        FormulaId::DurationLtPostSup,
        post_sup_sf_value(table, d),
    ))
}

/// `E[exp(-gamma T^d_{H_S,T}) | H_I < H_S, I_T = a, S_T = b] = 1 - g(d)/g(b - a)`.
pub fn duration_lt_post_sup_cond(table: &ScaleTable, gap: f64, d: f64) -> Result<LawValue> {
    gap_and_threshold("duration_lt_post_sup_cond", gap, d)?;
    positive_gamma("duration_lt_post_sup_cond", table)?;
    Ok(LawValue::new(
        LawKind::LaplaceTransform,
        FormulaId::DurationLtPostSupCond,
        1.0 - post_sup_cond_value(table, gap, d),
    ))
}

/// Laplace transform of the duration `alpha_d - kappa` of the first drawdown
/// exceeding `d`:
/// `(W(d)/W'(d)) (Z^(g)(d) W^(g)'(d) - g W^(g)(d)^2) / W^(g)(d)`,
/// where `table0` holds the 0-scale functions of the same model.
pub fn duration_lt_at_alpha(table0: &ScaleTable, table: &ScaleTable, d: f64) -> Result<LawValue> {
    positive("duration_lt_at_alpha", "d", d)?;
    if table0.model() != table.model() {
        return Err(Error::ModelMismatch);
    }
    if table0.gamma() != 0.0 {
        return Err(domain(
            "duration_lt_at_alpha",
            format!(
                "first table must hold 0-scale functions, got gamma = {}",
                table0.gamma()
            ),
        ));
    }
    let (s0, s) = (table0.scales(d), table.scales(d));
    // Z W'/W - gamma W = ruin W'/W + (gamma/Phi)(W' - Phi W)
    let decay = table.decay(d);
    let value = (decay.ruin * s.ratio + gamma_over_phi(table) * decay.lead) / s0.ratio;
    Ok(LawValue::new(
        LawKind::LaplaceTransform,
        FormulaId::DurationLtAtAlpha,
        value,
    ))
}

/// Arguments of the harmonic functions behind each path piece's h-transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HVariant {
    /// `exp(-Phi (b - x))`, `x <= b`.
    PreSup { b: f64, x: f64 },
    /// `1 - exp(-Phi (b - x))`, `x <= b`.
    PostSup { b: f64, x: f64 },
    /// `1 - Z(x - a) + (gamma/Phi) W(x - a)`, `x >= a`.
    PostInf { a: f64, x: f64 },
    /// `exp(-Phi (b - x)) W(x - a)/W(b - a)`, `a <= x <= b`.
    Intermediate { a: f64, b: f64, x: f64 },
    /// `1 - Z(x - a) + (Z(b - a) - 1) W(x - a)/W(b - a)`, `a <= x <= b`.
    PostSupCond { a: f64, b: f64, x: f64 },
    /// `1 - exp(-(m - x) W'(d)/W(d))`, `x <= m`. The undiscounted
    /// form uses 0-scale functions; pass a `gamma = 0` table for that.
    PostKappa { m: f64, x: f64, d: f64 },
}

impl HVariant {
    pub fn formula(&self) -> FormulaId {
        match self {
            HVariant::PreSup { .. } => FormulaId::HPreSup,
            HVariant::PostSup { .. } => FormulaId::HPostSup,
            HVariant::PostInf { .. } => FormulaId::HPostInf,
            HVariant::Intermediate { .. } => FormulaId::HIntermediate,
            HVariant::PostSupCond { .. } => FormulaId::HPostSupCond,
            HVariant::PostKappa { .. } => FormulaId::HPostKappa,
        }
    }
}

fn ordered(lo: f64, x: f64, hi: f64) -> Result<()> {
    if lo <= x && x <= hi {
        Ok(())
    } else {
        Err(domain(
            "h_function",
            format!("need {lo} <= x = {x} <= {hi}"),
        ))
    }
}

pub fn h_function(table: &ScaleTable, which: HVariant) -> Result<LawValue> {
    let phi = table.phi();
    let value = match which {
        HVariant::PreSup { b, x } => {
            ordered(f64::NEG_INFINITY, x, b)?;
            (-phi * (b - x)).exp()
        }
        HVariant::PostSup { b, x } => {
            ordered(f64::NEG_INFINITY, x, b)?;
            -(-phi * (b - x)).exp_m1()
        }
        HVariant::PostInf { a, x } => {
            ordered(a, x, f64::INFINITY)?;
            positive_gamma("h_function", table)?;
            table.decay(x - a).hit
        }
        HVariant::Intermediate { a, b, x } => {
            ordered(a, x, b)?;
            if a == b {
                return Err(domain("h_function", "need a < b"));
            }
            if x == a {
                0.0
            } else {
                let (sx, sb) = (table.scales(x - a), table.scales(b - a));
                (-phi * (b - x) + sx.log_w - sb.log_w).exp()
            }
        }
        HVariant::PostSupCond { a, b, x } => {
            ordered(a, x, b)?;
            if a == b {
                return Err(domain("h_function", "need a < b"));
            }
            if x == a {
                0.0
            } else {
                post_sup_cond_h(table, x - a, b - a)
            }
        }
        HVariant::PostKappa { m, x, d } => {
            ordered(f64::NEG_INFINITY, x, m)?;
            positive("h_function", "d", d)?;
            -(-(m - x) * table.scales(d).ratio).exp_m1()
        }
    };
    Ok(LawValue::new(LawKind::HFunction, which.formula(), value))
}

/// A law together with its arguments, for sweeps and oracle comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    SupCdf { b: f64 },
    JointInfSup { a: f64, b: f64 },
    PreSupMddCdf { b: f64, d: f64 },
    PostSupMddSf { d: f64 },
    PostInfMddSf { d: f64 },
    PostInfSupCdf { u: f64 },
    IntermediateMddCdf { gap: f64, d: f64 },
    PostSupMddCdfCond { gap: f64, d: f64 },
    DurationLtPostSup { d: f64 },
    DurationLtPostSupCond { gap: f64, d: f64 },
    DurationLtAtAlpha { d: f64 },
}

/// Law identifiers accepted by `Law::from_id`.
pub const LAW_IDS: [&str; 11] = [
    "sup_cdf",
    "joint_inf_sup",
    "pre_sup_mdd_cdf",
    "post_sup_mdd_sf",
    "post_inf_mdd_sf",
    "post_inf_sup_cdf",
    "intermediate_mdd_cdf",
    "post_sup_mdd_cdf_cond",
    "duration_lt_post_sup",
    "duration_lt_post_sup_cond",
    "duration_lt_at_alpha",
];

impl Law {
    pub fn formula(&self) -> FormulaId {
        match self {
            Law::SupCdf { .. } => FormulaId::SupCdf,
            Law::JointInfSup { .. } => FormulaId::JointInfSup,
            Law::PreSupMddCdf { .. } => FormulaId::PreSupMddCdf,
            Law::PostSupMddSf { .. } => FormulaId::PostSupMddSf,
            Law::PostInfMddSf { .. } => FormulaId::PostInfMddSf,
            Law::PostInfSupCdf { .. } => FormulaId::PostInfSupCdf,
            Law::IntermediateMddCdf { .. } => FormulaId::IntermediateMddCdf,
            Law::PostSupMddCdfCond { .. } => FormulaId::PostSupMddCdfCond,
            Law::DurationLtPostSup { .. } => FormulaId::DurationLtPostSup,
            Law::DurationLtPostSupCond { .. } => FormulaId::DurationLtPostSupCond,
            Law::DurationLtAtAlpha { .. } => FormulaId::DurationLtAtAlpha,
        }
    }

    pub fn id(&self) -> &'static str {
        self.formula().as_str()
    }

    /// Builds a law from its identifier. `arg` is the swept argument (`b`
    /// for `sup_cdf`, `u` for `post_inf_sup_cdf`, `d` otherwise); the fixed
    /// parameters `a`, `b` and `gap` are looked up by name.
    pub fn from_id(id: &str, arg: f64, param: impl Fn(&str) -> Option<f64>) -> Result<Law> {
        let need = |name: &str| {
            param(name).ok_or_else(|| domain("law", format!("{id} needs parameter `{name}`")))
        };
        let law = match id {
            "sup_cdf" => Law::SupCdf { b: arg },
            "joint_inf_sup" => Law::JointInfSup {
                a: need("a")?,
                b: arg,
            },
            "pre_sup_mdd_cdf" => Law::PreSupMddCdf {
                b: need("b")?,
                d: arg,
            },
            "post_sup_mdd_sf" => Law::PostSupMddSf { d: arg },
            "post_inf_mdd_sf" => Law::PostInfMddSf { d: arg },
            "post_inf_sup_cdf" => Law::PostInfSupCdf { u: arg },
            "intermediate_mdd_cdf" => Law::IntermediateMddCdf {
                gap: need("gap")?,
                d: arg,
            },
            "post_sup_mdd_cdf_cond" => Law::PostSupMddCdfCond {
                gap: need("gap")?,
                d: arg,
            },
            "duration_lt_post_sup" => Law::DurationLtPostSup { d: arg },
            "duration_lt_post_sup_cond" => Law::DurationLtPostSupCond {
                gap: need("gap")?,
                d: arg,
            },
            "duration_lt_at_alpha" => Law::DurationLtAtAlpha { d: arg },
            other => return Err(domain("law", format!("unknown law `{other}`"))),
        };
        Ok(law)
    }

    /// The swept argument.
    pub fn arg(&self) -> f64 {
        match *self {
            Law::SupCdf { b } | Law::JointInfSup { b, .. } => b,
            Law::PostInfSupCdf { u } => u,
            Law::PreSupMddCdf { d, .. }
            | Law::PostSupMddSf { d }
            | Law::PostInfMddSf { d }
            | Law::IntermediateMddCdf { d, .. }
            | Law::PostSupMddCdfCond { d, .. }
            | Law::DurationLtPostSup { d }
            | Law::DurationLtPostSupCond { d, .. }
            | Law::DurationLtAtAlpha { d } => d,
        }
    }

    /// The conditioning under which the law is stated. Laws that condition on
    /// `I_T` use `inf_level`, defaulting to `-1` or to `-gap/2`.
    pub fn natural_condition(&self, inf_level: Option<f64>) -> ConditionSpec {
        match *self {
            Law::PreSupMddCdf { b, .. } => ConditionSpec::sup(b),
            Law::PostInfSupCdf { .. } => ConditionSpec::inf(inf_level.unwrap_or(-1.0)),
            Law::IntermediateMddCdf { gap, .. }
            | Law::PostSupMddCdfCond { gap, .. }
            | Law::DurationLtPostSupCond { gap, .. } => {
                let a = inf_level.unwrap_or(-0.5 * gap);
                ConditionSpec::inf_then_sup(a, a + gap)
            }
            _ => ConditionSpec::none(),
        }
    }

    /// Analytic value. `table0` holds the 0-scale functions of the same
    /// model and is only read by `DurationLtAtAlpha`.
    pub fn evaluate(&self, table: &ScaleTable, table0: Option<&ScaleTable>) -> Result<LawValue> {
        match *self {
            Law::SupCdf { b } => sup_cdf(table, b),
            Law::JointInfSup { a, b } => joint_inf_sup(table, a, b),
            Law::PreSupMddCdf { b, d } => pre_sup_mdd_cdf(table, b, d),
            Law::PostSupMddSf { d } => post_sup_mdd_sf(table, d),
            Law::PostInfMddSf { d } => post_inf_mdd_sf(table, d),
            Law::PostInfSupCdf { u } => post_inf_sup_cdf(table, u),
            Law::IntermediateMddCdf { gap, d } => intermediate_mdd_cdf(table, gap, d),
            Law::PostSupMddCdfCond { gap, d } => post_sup_mdd_cdf_cond(table, gap, d),
            Law::DurationLtPostSup { d } => duration_lt_post_sup(table, d),
            Law::DurationLtPostSupCond { gap, d } => duration_lt_post_sup_cond(table, gap, d),
            Law::DurationLtAtAlpha { d } => {
                let t0 = table0.ok_or_else(|| {
                    domain(
                        "duration_lt_at_alpha",
                        "needs the 0-scale table of the model",
                    )
                })?;
                duration_lt_at_alpha(t0, table, d)
            }
        }
    }
}

/// Expressions exactly as printed, kept as negative controls. They are not
/// probabilities and carry no range guarantee.
pub mod printed {
    use super::*;

    /// `1 - Z(d) W'(d)/(Phi W(d)) - gamma W(d)/Phi`.
    pub fn post_sup_duration_lt(table: &ScaleTable, d: f64) -> Result<f64> {
        positive("printed::post_sup_duration_lt", "d", d)?;
        positive_gamma("printed::post_sup_duration_lt", table)?;
        let s = table.scales(d);
        let phi = table.phi();
        Ok(1.0 - s.z * s.ratio / phi - table.gamma() * s.w / phi)
    }

    /// `W(gap)/W(d) exp(-(gap - d)(W'(d)/W(d) - Phi W(d) + Phi))`.
    pub fn intermediate_mdd_cdf(table: &ScaleTable, gap: f64, d: f64) -> Result<f64> {
        gap_and_threshold("printed::intermediate_mdd_cdf", gap, d)?;
        let (sd, sg) = (table.scales(d), table.scales(gap));
        let phi = table.phi();
        Ok((sg.log_w - sd.log_w - (gap - d) * (sd.ratio - phi * sd.w + phi)).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::LevyModel;
    use approx::assert_relative_eq;

    fn bm() -> ScaleTable {
        ScaleTable::new(LevyModel::standard_brownian(), 0.5).unwrap()
    }

    fn bm0() -> ScaleTable {
        ScaleTable::new(LevyModel::standard_brownian(), 0.0).unwrap()
    }

    fn close(v: LawValue, expected: f64, tol: f64) {
        assert!(
            (v.value - expected).abs() <= tol,
            "{}: {} vs {expected}",
            v.formula,
            v.value
        );
    }

    #[test]
    fn sup_cdf_examples() {
        let t = bm();
        close(sup_cdf(&t, 1.0).unwrap(), 0.63212, 1e-5);
        assert_eq!(sup_cdf(&t, 0.0).unwrap().value, 0.0);
        assert_eq!(sup_cdf(&t, f64::INFINITY).unwrap().value, 1.0);
        assert!(sup_cdf(&t, -1.0).is_err());
    }

    #[test]
    fn joint_examples() {
        let t = bm();
        let exact = 1.0 - 1f64.cosh() + (2f64.cosh() - 1.0) * 1f64.sinh() / 2f64.sinh();
        close(joint_inf_sup(&t, -1.0, 1.0).unwrap(), exact, 1e-12);
        close(joint_inf_sup(&t, -1.0, 1.0).unwrap(), 0.35195, 1e-5);
        close(
            joint_inf_sup(&t, f64::NEG_INFINITY, f64::INFINITY).unwrap(),
            1.0,
            0.0,
        );
        close(joint_inf_sup(&t, -15.0, 15.0).unwrap(), 1.0, 1e-6);
        assert!(joint_inf_sup(&t, -1e-9, 1.0).unwrap().value < 1e-6);
        assert!(joint_inf_sup(&t, 0.0, 1.0).is_err());
        assert!(joint_inf_sup(&t, -1.0, 0.0).is_err());
    }

    #[test]
    fn theorem_one_examples() {
        let t = bm();
        let coth1 = 1f64.cosh() / 1f64.sinh();
        close(
            pre_sup_mdd_cdf(&t, 1.0, 1.0).unwrap(),
            (1.0 - coth1).exp(),
            1e-13,
        );
        close(pre_sup_mdd_cdf(&t, 1.0, 1.0).unwrap(), 0.73122, 1e-5);
        close(pre_sup_mdd_cdf(&t, 1.0, f64::INFINITY).unwrap(), 1.0, 0.0);
        assert!(pre_sup_mdd_cdf(&t, 1.0, 1e-3).unwrap().value <= 1e-6);
        assert!(pre_sup_mdd_cdf(&t, 0.0, 1.0).is_err());

        close(post_sup_mdd_sf(&t, 2.0).unwrap(), 1.0 - 1f64.tanh(), 1e-12);
        close(post_sup_mdd_sf(&t, 2.0).unwrap(), 0.23841, 1e-5);
        close(post_sup_mdd_sf(&t, 1e-6).unwrap(), 1.0, 1e-6);
        close(post_sup_mdd_sf(&t, 20.0).unwrap(), 0.0, 1e-6);
        assert!(post_sup_mdd_sf(&t, 0.0).is_err());

        close(post_inf_mdd_sf(&t, 1.0).unwrap(), 1.0 - 1f64.tanh(), 1e-13);
        close(post_inf_mdd_sf(&t, 1e-6).unwrap(), 1.0, 1e-5);
        close(post_inf_mdd_sf(&t, 40.0).unwrap(), 0.0, 1e-12);
        assert!(post_inf_mdd_sf(&t, -1.0).is_err());
    }

    #[test]
    fn post_infimum_supremum_examples() {
        let t = bm();
        close(post_inf_sup_cdf(&t, 2.0).unwrap(), 1f64.tanh(), 1e-12);
        close(post_inf_sup_cdf(&t, 2.0).unwrap(), 0.76159, 1e-5);
        close(post_inf_sup_cdf(&t, 1e-6).unwrap(), 0.0, 1e-6);
        close(post_inf_sup_cdf(&t, 40.0).unwrap(), 1.0, 1e-12);
        // guard and direct evaluation agree where they meet
        let below = post_inf_sup_cdf(&t, ORIGIN_GUARD * 0.999_999)
            .unwrap()
            .value;
        let above = post_inf_sup_cdf(&t, ORIGIN_GUARD).unwrap().value;
        assert_relative_eq!(below, above, max_relative = 1e-4);
        assert!(post_inf_sup_cdf(&t, 0.0).is_err());
    }

    #[test]
    fn theorem_two_examples() {
        let t = bm();
        let coth1 = 1f64.cosh() / 1f64.sinh();
        let inter = 2f64.sinh() / 1f64.sinh() * (-coth1).exp();
        close(intermediate_mdd_cdf(&t, 2.0, 1.0).unwrap(), inter, 1e-12);
        close(intermediate_mdd_cdf(&t, 2.0, 1.0).unwrap(), 0.83018, 1e-5);
        close(intermediate_mdd_cdf(&t, 2.0, 2.0).unwrap(), 1.0, 0.0);
        assert!(intermediate_mdd_cdf(&t, 2.0, 1e-3).unwrap().value < 1e-100);
        assert!(intermediate_mdd_cdf(&t, 2.0, 2.5).is_err());
        assert!(intermediate_mdd_cdf(&t, 2.0, 0.0).is_err());

        close(
            post_sup_mdd_cdf_cond(&t, 2.0, 1.0).unwrap(),
            0.5f64.tanh() / 1f64.tanh(),
            1e-12,
        );
        close(post_sup_mdd_cdf_cond(&t, 2.0, 1.0).unwrap(), 0.60678, 1e-5);
        close(post_sup_mdd_cdf_cond(&t, 2.0, 2.0).unwrap(), 1.0, 0.0);
        close(post_sup_mdd_cdf_cond(&t, 2.0, 1e-7).unwrap(), 0.0, 1e-6);

        close(
            duration_lt_post_sup_cond(&t, 2.0, 1.0).unwrap(),
            0.39322,
            1e-5,
        );
        close(duration_lt_post_sup_cond(&t, 2.0, 2.0).unwrap(), 0.0, 0.0);
        close(duration_lt_post_sup_cond(&t, 2.0, 1e-7).unwrap(), 1.0, 1e-6);
    }

    #[test]
    fn g_guard_is_continuous() {
        let t = bm();
        let below = post_sup_g(&t, ORIGIN_GUARD * 0.999_999);
        let above = post_sup_g(&t, ORIGIN_GUARD);
        assert_relative_eq!(below, above, max_relative = 1e-3);
        // g(u) = -tanh(u/2) for standard BM at gamma = 1/2
        assert_relative_eq!(post_sup_g(&t, 1.3), -(0.65f64).tanh(), max_relative = 1e-12);
    }

    #[test]
    fn duration_examples() {
        let (t0, t) = (bm0(), bm());
        close(duration_lt_post_sup(&t, 2.0).unwrap(), 0.23841, 1e-5);
        close(duration_lt_post_sup(&t, 1e-7).unwrap(), 1.0, 1e-6);
        close(duration_lt_post_sup(&t, 20.0).unwrap(), 0.0, 1e-6);

        close(
            duration_lt_at_alpha(&t0, &t, 1.0).unwrap(),
            1.0 / 1f64.sinh(),
            1e-12,
        );
        close(duration_lt_at_alpha(&t0, &t, 1.0).unwrap(), 0.85092, 1e-5);
        close(
            duration_lt_at_alpha(&t0, &t, 2.0).unwrap(),
            2.0 / 2f64.sinh(),
            1e-12,
        );
        close(duration_lt_at_alpha(&t0, &t, 1e-6).unwrap(), 1.0, 1e-9);

        let other = ScaleTable::new(LevyModel::brownian(0.1, 1.0).unwrap(), 0.0).unwrap();
        assert!(matches!(
            duration_lt_at_alpha(&other, &t, 1.0),
            Err(Error::ModelMismatch)
        ));
        assert!(duration_lt_at_alpha(&t, &t, 1.0).is_err());
    }

    #[test]
    fn h_function_examples() {
        let t = bm();
        let e1 = (-1f64).exp();
        close(
            h_function(&t, HVariant::PreSup { b: 1.0, x: 0.0 }).unwrap(),
            e1,
            1e-15,
        );
        close(
            h_function(&t, HVariant::PreSup { b: 1.0, x: 1.0 }).unwrap(),
            1.0,
            0.0,
        );
        close(
            h_function(&t, HVariant::PostSup { b: 1.0, x: 1.0 }).unwrap(),
            0.0,
            0.0,
        );
        close(
            h_function(&t, HVariant::PostInf { a: -0.5, x: 0.5 }).unwrap(),
            1.0 - e1,
            1e-12,
        );
        // BM: e^{-(b-x)} sinh(x-a)/sinh(b-a)
        let v = h_function(
            &t,
            HVariant::Intermediate {
                a: -1.0,
                b: 1.0,
                x: 0.0,
            },
        )
        .unwrap();
        close(v, e1 * 1f64.sinh() / 2f64.sinh(), 1e-12);
        let v = h_function(
            &t,
            HVariant::PostSupCond {
                a: -1.0,
                b: 1.0,
                x: 1.0,
            },
        )
        .unwrap();
        close(v, 0.0, 1e-12);
        let v = h_function(
            &t,
            HVariant::PostKappa {
                m: 1.0,
                x: 1.0,
                d: 1.0,
            },
        )
        .unwrap();
        close(v, 0.0, 0.0);
        assert!(h_function(&t, HVariant::PreSup { b: 1.0, x: 2.0 }).is_err());
        assert!(h_function(&t, HVariant::PostInf { a: 0.0, x: -1.0 }).is_err());
        assert!(h_function(
            &t,
            HVariant::PostKappa {
                m: 1.0,
                x: 0.0,
                d: 0.0
            }
        )
        .is_err());
    }

    #[test]
    fn printed_variants_fall_outside_unit_interval() {
        let t = bm();
        assert!(printed::post_sup_duration_lt(&t, 1.0).unwrap() < 0.0);
        assert!(printed::intermediate_mdd_cdf(&t, 2.0, 1.0).unwrap() > 1.0);
    }

    #[test]
    fn condition_spec_validation() {
        assert!(ConditionSpec::none().validate().is_ok());
        assert!(ConditionSpec::inf_then_sup(-1.0, 1.0).validate().is_ok());
        assert!(ConditionSpec::sup(-1.0).validate().is_err());
        assert!(ConditionSpec::inf(1.0).validate().is_err());
        let bad = ConditionSpec {
            inf_before_sup: true,
            ..ConditionSpec::sup(1.0)
        };
        assert!(bad.validate().is_err());
    }
}
