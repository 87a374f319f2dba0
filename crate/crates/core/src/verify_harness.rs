//! Run configuration, analytic sweeps and oracle comparison reports behind
//! the `levy-dd` command line tool.
//!
//! Configuration is INI text:
//!
//! ```ini
//! [model]
//! family = brownian_drift
//! mu = 0
//! sigma = 1
//! gamma = 0.5
//!
//! [law.pre_sup]
//! id = pre_sup_mdd_cdf
//! b = 1
//! arg = 0.05..5:100
//!
//! [sim]
//! dt = 1e-3
//! n_paths = 200000
//! seed = 1
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ini::Ini;
use serde::Serialize;

use crate::drawdown_laws::{printed, FormulaId, Law};
use crate::error::{Error, Result};
use crate::exit_identities as exits;
use crate::levy_model::{Family, LevyModel};
use crate::mc_oracle::{
    estimate_laws, write_records_csv, McQuery, SimConfig, SimMode, DEFAULT_BAND,
};
use crate::scale_functions::{fmt_f64, invert_scale, GridSpec, Method, ScaleTable};

/// MC allowance for discrete monitoring when a law names none.
pub const DEFAULT_ALLOWANCE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct LawSpec {
    pub label: String,
    pub id: String,
    pub args: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub inf_level: Option<f64>,
    pub band: f64,
    pub allowance: f64,
    /// Line of the section header, for error messages.
    pub line: usize,
}

impl LawSpec {
    pub fn laws(&self) -> Result<Vec<Law>> {
        self.args
            .iter()
            .map(|&arg| {
                Law::from_id(&self.id, arg, |k| self.params.get(k).copied()).map_err(|e| {
                    Error::Config {
                        line: self.line,
                        msg: e.to_string(),
                    }
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExitSpec {
    pub label: String,
    pub id: String,
    pub args: Vec<f64>,
    pub params: BTreeMap<String, f64>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    /// `Some(d)` simulates to the first drawdown of size `d`.
    pub stop_at_alpha: Option<f64>,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            n_paths: 200_000,
            seed: 1,
            stop_at_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: LevyModel,
    pub gamma: f64,
    pub grid: GridSpec,
    /// `None` picks the closed form when one exists.
    pub method: Option<Method>,
    pub scale_xs: Vec<f64>,
    pub laws: Vec<LawSpec>,
    pub exits: Vec<ExitSpec>,
    pub sim: SimSpec,
    pub output_dir: Option<PathBuf>,
}

/// Parses a sweep: `lo..hi:n` (inclusive, evenly spaced), a comma list, or
/// a single number.
pub fn parse_sweep(text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((range, count)) = text.split_once(':') {
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| format!("bad sweep `{text}`, expected lo..hi:n"))?;
        let lo = parse_num(lo)?;
        let hi = parse_num(hi)?;
        let n: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("bad point count `{count}`"))?;
        if n < 2 || !(hi > lo) {
            return Err(format!("sweep `{text}` needs lo < hi and n >= 2"));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut xs: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
        xs[n - 1] = hi;
        return Ok(xs);
    }
    text.split(',').map(parse_num).collect()
}

fn parse_num(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| format!("bad number `{s}`")),
    }
}

/// Line of `[section]`, or of `key` inside it, in `src` (1-based).
fn locate(src: &str, section: &str, key: Option<&str>) -> usize {
    let mut in_section = false;
    let mut header_line = 0;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if in_section && key.is_some() {
                break;
            }
            in_section = name.trim() == section;
            if in_section {
                header_line = i + 1;
            }
            continue;
        }
        if in_section {
            if let (Some(k), Some((lhs, _))) = (key, t.split_once('=')) {
                if lhs.trim() == k {
                    return i + 1;
                }
            }
        }
    }
    header_line
}

struct Section<'a> {
    src: &'a str,
    name: String,
    props: BTreeMap<String, String>,
}

impl Section<'_> {
    fn err(&self, key: Option<&str>, msg: impl Into<String>) -> Error {
        Error::Config {
            line: locate(self.src, &self.name, key),
            msg: msg.into(),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.props.get(key).map(String::as_str)
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|v| parse_num(v).map_err(|m| self.err(Some(key), format!("{key}: {m}"))))
            .transpose()
    }

    fn num_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.num(key)?.unwrap_or(default))
    }

    fn int(&self, key: &str) -> Result<Option<u64>> {
        self.raw(key)
            .map(|v| {
                let v = v.trim();
                v.parse::<u64>()
                    .or_else(|_| match v.parse::<f64>() {
                        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => Ok(f as u64),
                        _ => Err(()),
                    })
                    .map_err(|_| self.err(Some(key), format!("{key}: bad integer `{v}`")))
            })
            .transpose()
    }

    fn sweep(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .raw(key)
            .ok_or_else(|| self.err(None, format!("[{}] needs `{key}`", self.name)))?;
        parse_sweep(raw).map_err(|m| self.err(Some(key), m))
    }

    fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for key in self.props.keys() {
            if !known.contains(&key.as_str()) {
                return Err(self.err(Some(key), format!("unknown key `{key}` in [{}]", self.name)));
            }
        }
        Ok(())
    }

    fn params(&self, reserved: &[&str]) -> Result<BTreeMap<String, f64>> {
        let mut out = BTreeMap::new();
        for key in self.props.keys() {
            if !reserved.contains(&key.as_str()) {
                out.insert(key.clone(), self.num(key)?.unwrap());
            }
        }
        Ok(out)
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(src: &str) -> Result<Self> {
        let ini = Ini::load_from_str(src).map_err(|e| Error::Config {
            line: e.line,
            msg: e.msg.to_string(),
        })?;
        let mut sections = Vec::new();
        for (name, props) in ini.iter() {
            let Some(name) = name else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(Error::Config {
                        line: locate(src, "", Some(k)).max(1),
                        msg: format!("key `{k}` outside any section"),
                    });
                }
                continue;
            };
            sections.push(Section {
                src,
                name: name.trim().to_string(),
                props: props
                    .iter()
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .collect(),
            });
        }

        let model_sec = sections
            .iter()
            .find(|s| s.name == "model")
            .ok_or(Error::Config {
                line: 1,
                msg: "missing [model] section".into(),
            })?;
        model_sec.reject_unknown(&["family", "mu", "sigma", "jump_rate", "jump_mean", "gamma"])?;
        let family: Family = model_sec
            .raw("family")
            .unwrap_or("brownian_drift")
            .parse()
            .map_err(|e: Error| model_sec.err(Some("family"), e.to_string()))?;
        let (mu, sigma) = (
            model_sec.num_or("mu", 0.0)?,
            model_sec.num_or("sigma", 1.0)?,
        );
        let model = match family {
            Family::BrownianDrift => LevyModel::brownian(mu, sigma),
            Family::ExpJumpDiffusion => LevyModel::exp_jump_diffusion(
                mu,
                sigma,
                model_sec.num_or("jump_rate", 0.0)?,
                model_sec.num_or("jump_mean", 0.0)?,
            ),
        }
        .map_err(|e| model_sec.err(None, e.to_string()))?;
        let gamma = model_sec
            .num("gamma")?
            .ok_or_else(|| model_sec.err(None, "[model] needs `gamma`"))?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(model_sec.err(Some("gamma"), format!("gamma must be >= 0, got {gamma}")));
        }

        let mut config = RunConfig {
            model,
            gamma,
            grid: GridSpec::default(),
            method: None,
            scale_xs: Vec::new(),
            laws: Vec::new(),
            exits: Vec::new(),
            sim: SimSpec::default(),
            output_dir: None,
        };
        let mut sim_sec = None;

        for sec in &sections {
            let line = locate(src, &sec.name, None);
            match sec.name.as_str() {
                "model" => {}
                "scale" => {
                    sec.reject_unknown(&["x", "method", "x_min", "x_max", "points"])?;
                    if sec.raw("x").is_some() {
                        config.scale_xs = sec.sweep("x")?;
                    }
                    if let Some(m) = sec.raw("method") {
                        config.method = Some(
                            m.parse()
                                .map_err(|e: Error| sec.err(Some("method"), e.to_string()))?,
                        );
                    }
                    let d = GridSpec::default();
                    config.grid = GridSpec {
                        x_min: sec.num_or("x_min", d.x_min)?,
                        x_max: sec.num_or("x_max", d.x_max)?,
                        points: sec.int("points")?.map_or(d.points, |p| p as usize),
                    };
                }
                "sim" => {
                    sec.reject_unknown(&["dt", "n_paths", "seed", "stop_at_alpha"])?;
                    let d = SimSpec::default();
                    config.sim = SimSpec {
                        dt: sec.num_or("dt", d.dt)?,
                        n_paths: sec.int("n_paths")?.unwrap_or(d.n_paths),
                        seed: sec.int("seed")?.unwrap_or(d.seed),
                        stop_at_alpha: sec.num("stop_at_alpha")?,
                    };
                    sim_sec = Some(sec);
                }
                "output" => {
                    sec.reject_unknown(&["dir"])?;
                    config.output_dir = sec.raw("dir").map(PathBuf::from);
                }
                name if name.starts_with("law.") => {
                    const RESERVED: [&str; 5] = ["id", "arg", "inf_level", "band", "allowance"];
                    let id = sec
                        .raw("id")
                        .ok_or_else(|| sec.err(None, format!("[{name}] needs `id`")))?
                        .to_string();
                    let spec = LawSpec {
                        label: name["law.".len()..].to_string(),
                        id,
                        args: sec.sweep("arg")?,
                        params: sec.params(&RESERVED)?,
                        inf_level: sec.num("inf_level")?,
                        band: sec.num_or("band", DEFAULT_BAND)?,
                        allowance: sec.num_or("allowance", DEFAULT_ALLOWANCE)?,
                        line,
                    };
                    spec.laws()?;
                    config.laws.push(spec);
                }
                name if name.starts_with("exit.") => {
                    let id = sec
                        .raw("id")
                        .ok_or_else(|| sec.err(None, format!("[{name}] needs `id`")))?
                        .to_string();
                    if !EXIT_IDS.contains(&id.as_str()) {
                        return Err(sec.err(Some("id"), format!("unknown exit identity `{id}`")));
                    }
                    config.exits.push(ExitSpec {
                        label: name["exit.".len()..].to_string(),
                        id,
                        args: sec.sweep("arg")?,
                        params: sec.params(&["id", "arg"])?,
                        line,
                    });
                }
                other => {
                    return Err(sec.err(None, format!("unknown section [{other}]")));
                }
            }
        }

        if let Some(sec) = sim_sec {
            let s = &config.sim;
            if !(s.dt > 0.0 && s.dt <= 1e-2) {
                return Err(sec.err(
                    Some("dt"),
                    format!("dt must lie in (0, 1e-2], got {}", s.dt),
                ));
            }
            if s.n_paths == 0 {
                return Err(sec.err(Some("n_paths"), "n_paths must be >= 1"));
            }
        }
        Ok(config)
    }

    pub fn table(&self, gamma: f64) -> Result<ScaleTable> {
        match (self.method, self.model.family()) {
            (Some(Method::Inverted), _) | (None, Family::ExpJumpDiffusion) => {
                invert_scale(self.model, gamma, self.grid)
            }
            _ => ScaleTable::closed_form(self.model, gamma, self.grid),
        }
    }

    fn needs_table0(&self) -> bool {
        self.laws.iter().any(|l| l.id == "duration_lt_at_alpha")
    }

    fn sim_config(&self, mode: SimMode) -> Result<SimConfig> {
        SimConfig::new(
            self.model,
            self.gamma,
            self.sim.dt,
            self.sim.n_paths,
            self.sim.seed,
        )?
        .with_mode(mode)
    }
}

pub const EXIT_IDS: [&str; 6] = [
    "one_sided_up",
    "one_sided_down",
    "two_sided_up",
    "two_sided_down",
    "updown_before_drawdown",
    "drawdown_before_up",
];

fn exit_value(table: &ScaleTable, spec: &ExitSpec, arg: f64) -> Result<f64> {
    let p = |k: &str| {
        spec.params.get(k).copied().ok_or_else(|| Error::Config {
            line: spec.line,
            msg: format!("{} needs parameter `{k}`", spec.id),
        })
    };
    match spec.id.as_str() {
        "one_sided_up" => exits::one_sided_up(table, arg),
        "one_sided_down" => exits::one_sided_down(table, arg),
        "two_sided_up" => exits::two_sided_up(table, arg, p("b")?),
        "two_sided_down" => exits::two_sided_down(table, arg, p("b")?),
        "updown_before_drawdown" => exits::updown_before_drawdown(table, arg, p("b")?, p("d")?),
        "drawdown_before_up" => {
            let gap = spec.params.get("x_gap").copied().unwrap_or(f64::INFINITY);
            exits::drawdown_before_up(table, gap, arg)
        }
        other => Err(Error::Config {
            line: spec.line,
            msg: format!("unknown exit identity `{other}`"),
        }),
    }
}

fn in_section(line: usize, e: Error) -> Error {
    match e {
        Error::Domain { op, msg } => Error::Config {
            line,
            msg: format!("{op}: {msg}"),
        },
        other => other,
    }
}

/// Which analytic expressions `law` and `verify` use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Variants {
    /// Swap in the expressions exactly as printed where they differ.
    pub printed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawRow {
    pub label: String,
    pub arg: f64,
    pub value: f64,
    pub formula_id: String,
}

struct Tables {
    gamma: ScaleTable,
    zero: Option<ScaleTable>,
}

fn tables(config: &RunConfig) -> Result<Tables> {
    Ok(Tables {
        gamma: config.table(config.gamma)?,
        zero: if config.needs_table0() {
            Some(config.table(0.0)?)
        } else {
            None
        },
    })
}

fn analytic(t: &Tables, law: &Law, variants: Variants) -> Result<(f64, String)> {
    if variants.printed {
        match *law {
            Law::DurationLtPostSup { d } => {
                return Ok((
                    printed::post_sup_duration_lt(&t.gamma, d)?,
                    format!("{}_printed", FormulaId::DurationLtPostSup),
                ))
            }
            Law::IntermediateMddCdf { gap, d } => {
                return Ok((
                    printed::intermediate_mdd_cdf(&t.gamma, gap, d)?,
                    format!("{}_printed", FormulaId::IntermediateMddCdf),
                ))
            }
            _ => {}
        }
    }
    let v = law.evaluate(&t.gamma, t.zero.as_ref())?;
    Ok((v.value, v.formula.to_string()))
}

/// Evaluates every `[law.*]` sweep.
pub fn law_rows(config: &RunConfig, variants: Variants) -> Result<Vec<LawRow>> {
    let t = tables(config)?;
    let mut rows = Vec::new();
    for spec in &config.laws {
        for law in spec.laws()? {
            let (value, formula_id) =
                analytic(&t, &law, variants).map_err(|e| in_section(spec.line, e))?;
            rows.push(LawRow {
                label: spec.label.clone(),
                arg: law.arg(),
                value,
                formula_id,
            });
        }
    }
    Ok(rows)
}

/// Evaluates every `[exit.*]` sweep.
pub fn exit_rows(config: &RunConfig) -> Result<Vec<LawRow>> {
    let table = config.table(config.gamma)?;
    let mut rows = Vec::new();
    for spec in &config.exits {
        for &arg in &spec.args {
            let value = exit_value(&table, spec, arg).map_err(|e| in_section(spec.line, e))?;
            rows.push(LawRow {
                label: spec.label.clone(),
                arg,
                value,
                formula_id: spec.id.clone(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub formula_id: String,
    pub arg: f64,
    pub analytic: f64,
    pub estimate: f64,
    pub ci_half: f64,
    pub gap: f64,
    pub allowance: f64,
    pub accepted: u64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawSummary {
    pub label: String,
    pub formula_id: String,
    /// Largest `|analytic - estimate|` over the sweep.
    pub sup_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub model: String,
    pub gamma: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub rows: Vec<ComparisonRow>,
    pub laws: Vec<LawSummary>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "label",
            "formula_id",
            "arg",
            "analytic",
            "estimate",
            "ci_half",
            "gap",
            "allowance",
            "accepted",
            "pass",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.label.clone(),
                r.formula_id.clone(),
                fmt_f64(r.arg),
                fmt_f64(r.analytic),
                fmt_f64(r.estimate),
                fmt_f64(r.ci_half),
                fmt_f64(r.gap),
                fmt_f64(r.allowance),
                r.accepted.to_string(),
                r.pass.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// One line per law.
    pub fn human(&self) -> String {
        let mut s = String::new();
        for l in &self.laws {
            s.push_str(&format!(
                "{} {} ({}) sup gap {:.5}\n",
                if l.pass { "PASS" } else { "FAIL" },
                l.label,
                l.formula_id,
                l.sup_gap
            ));
        }
        s.push_str(if self.pass {
            "verification passed\n"
        } else {
            "verification FAILED\n"
        });
        s
    }
}

/// Compares every `[law.*]` sweep with the Monte Carlo oracle. Laws in
/// `ExpHorizon` mode share one batch; each `duration_lt_at_alpha` level gets
/// its own `StopAtAlphaD` batch.
pub fn verify(config: &RunConfig, variants: Variants) -> Result<ComparisonReport> {
    let t = tables(config)?;
    let mut planned: Vec<(usize, Law)> = Vec::new();
    for (i, spec) in config.laws.iter().enumerate() {
        for law in spec.laws()? {
            planned.push((i, law));
        }
    }

    let mut estimates = vec![None; planned.len()];
    let mut batches: Vec<(SimMode, Vec<usize>)> = Vec::new();
    for (k, (_, law)) in planned.iter().enumerate() {
        let mode = match law {
            Law::DurationLtAtAlpha { d } => SimMode::StopAtAlphaD(*d),
            _ => SimMode::ExpHorizon,
        };
        match batches.iter_mut().find(|(m, _)| *m == mode) {
            Some((_, ks)) => ks.push(k),
            None => batches.push((mode, vec![k])),
        }
    }
    for (mode, ks) in &batches {
        let sim = config.sim_config(*mode)?;
        let queries: Vec<McQuery> = ks
            .iter()
            .map(|&k| {
                let (i, law) = planned[k];
                let spec = &config.laws[i];
                McQuery::new(law, law.natural_condition(spec.inf_level), spec.band)
            })
            .collect();
        for (&k, est) in ks.iter().zip(estimate_laws(&sim, &queries)?) {
            let label = &config.laws[planned[k].0].label;
            estimates[k] = Some(est.map_err(|e| match e {
                Error::InsufficientSample {
                    law,
                    accepted,
                    required,
                } => Error::InsufficientSample {
                    law: format!("[law.{label}] {law}"),
                    accepted,
                    required,
                },
                other => other,
            })?);
        }
    }

    let mut rows = Vec::with_capacity(planned.len());
    for ((i, law), est) in planned.iter().zip(estimates) {
        let spec = &config.laws[*i];
        let est = est.expect("every query estimated");
        let (value, formula_id) =
            analytic(&t, law, variants).map_err(|e| in_section(spec.line, e))?;
        let gap = (value - est.value).abs();
        rows.push(ComparisonRow {
            label: spec.label.clone(),
            formula_id,
            arg: law.arg(),
            analytic: value,
            estimate: est.value,
            ci_half: est.ci_half,
            gap,
            allowance: spec.allowance,
            accepted: est.accepted,
            pass: gap <= est.ci_half + spec.allowance,
        });
    }

    let mut laws: Vec<LawSummary> = Vec::new();
    for spec in &config.laws {
        let mine: Vec<&ComparisonRow> = rows.iter().filter(|r| r.label == spec.label).collect();
        laws.push(LawSummary {
            label: spec.label.clone(),
            formula_id: mine
                .first()
                .map(|r| r.formula_id.clone())
                .unwrap_or_default(),
            sup_gap: mine.iter().map(|r| r.gap).fold(0.0, f64::max),
            pass: mine.iter().all(|r| r.pass),
        });
    }
    let pass = laws.iter().all(|l| l.pass);
    Ok(ComparisonReport {
        model: config.model.hash_hex(),
        gamma: config.gamma,
        dt: config.sim.dt,
        n_paths: config.sim.n_paths,
        seed: config.sim.seed,
        rows,
        laws,
        pass,
    })
}

pub fn write_rows_csv<W: Write>(rows: &[LawRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "arg", "value", "formula_id"])?;
    for r in rows {
        w.write_record([
            r.label.clone(),
            fmt_f64(r.arg),
            fmt_f64(r.value),
            r.formula_id.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct RowsSummary<'a> {
    command: &'a str,
    model: String,
    family: &'static str,
    gamma: f64,
    phi: f64,
    rows: usize,
    min_value: f64,
    max_value: f64,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn rows_summary<'a>(
    command: &'a str,
    config: &RunConfig,
    rows: &[LawRow],
) -> Result<RowsSummary<'a>> {
    Ok(RowsSummary {
        command,
        model: config.model.hash_hex(),
        family: config.model.family().as_str(),
        gamma: config.gamma,
        phi: config.model.phi(config.gamma)?,
        rows: rows.len(),
        min_value: rows.iter().map(|r| r.value).fold(f64::INFINITY, f64::min),
        max_value: rows
            .iter()
            .map(|r| r.value)
            .fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Writes `scale.csv`; with `compare`, also `scale_compare.csv` holding the
/// closed-form and inverted `W` side by side. Returns the largest `|dW|`
/// when comparing.
pub fn run_scale(config: &RunConfig, out_dir: &Path, compare: bool) -> Result<Option<f64>> {
    fs::create_dir_all(out_dir)?;
    let xs = if config.scale_xs.is_empty() {
        parse_sweep("0..5:101").expect("valid default sweep")
    } else {
        config.scale_xs.clone()
    };
    let table = config.table(config.gamma)?;
    table.write_csv(fs::File::create(out_dir.join("scale.csv"))?, &xs)?;
    if !compare {
        return Ok(None);
    }
    let closed = ScaleTable::closed_form(config.model, config.gamma, config.grid)?;
    let inverted = invert_scale(config.model, config.gamma, config.grid)?;
    let mut w = csv::Writer::from_path(out_dir.join("scale_compare.csv"))?;
    w.write_record(["x", "W_closed_form", "W_inverted", "abs_diff"])?;
    let mut worst = 0.0f64;
    for &x in &xs {
        let (a, b) = (closed.w(x)?, inverted.w(x)?);
        worst = worst.max((a - b).abs());
        w.write_record([x, a, b, (a - b).abs()].map(fmt_f64))?;
    }
    w.flush()?;
    Ok(Some(worst))
}

pub fn run_law(config: &RunConfig, out_dir: &Path, variants: Variants) -> Result<Vec<LawRow>> {
    fs::create_dir_all(out_dir)?;
    let rows = law_rows(config, variants)?;
    write_rows_csv(&rows, fs::File::create(out_dir.join("laws.csv"))?)?;
    write_json(
        &out_dir.join("laws.json"),
        &rows_summary("law", config, &rows)?,
    )?;
    Ok(rows)
}

pub fn run_exit(config: &RunConfig, out_dir: &Path) -> Result<Vec<LawRow>> {
    fs::create_dir_all(out_dir)?;
    let rows = exit_rows(config)?;
    write_rows_csv(&rows, fs::File::create(out_dir.join("exit.csv"))?)?;
    write_json(
        &out_dir.join("exit.json"),
        &rows_summary("exit", config, &rows)?,
    )?;
    Ok(rows)
}

pub fn run_verify(
    config: &RunConfig,
    out_dir: &Path,
    variants: Variants,
) -> Result<ComparisonReport> {
    fs::create_dir_all(out_dir)?;
    let report = verify(config, variants)?;
    report.write_csv(fs::File::create(out_dir.join("report.csv"))?)?;
    write_json(&out_dir.join("report.json"), &report)?;
    fs::write(out_dir.join("report.txt"), report.human())?;
    Ok(report)
}

/// Streams per-path decomposition records to `paths.csv`.
pub fn run_simulate(config: &RunConfig, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let mode = config
        .sim
        .stop_at_alpha
        .map_or(SimMode::ExpHorizon, SimMode::StopAtAlphaD);
    let sim = config.sim_config(mode)?;
    let path = out_dir.join("paths.csv");
    let file = std::io::BufWriter::new(fs::File::create(&path)?);
    write_records_csv(&sim, file)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
[model]
family = brownian_drift
mu = 0
sigma = 1
gamma = 0.5

[law.pre]
id = pre_sup_mdd_cdf
b = 1
arg = 0.5, 1, 2
";

    #[test]
    fn sweeps() {
        assert_eq!(parse_sweep("0..1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_sweep("1, 2,3").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(parse_sweep("inf").unwrap(), vec![f64::INFINITY]);
        assert!(parse_sweep("1..0:3").is_err());
        assert!(parse_sweep("0..1:1").is_err());
        assert!(parse_sweep("x").is_err());
    }

    #[test]
    fn parses_basic_config() {
        let c = RunConfig::parse(BASIC).unwrap();
        assert_eq!(c.gamma, 0.5);
        assert_eq!(c.laws.len(), 1);
        assert_eq!(c.laws[0].params.get("b"), Some(&1.0));
        let rows = law_rows(&c, Variants::default()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[1].value - 0.73122).abs() < 1e-5);
    }

    #[test]
    fn config_errors_carry_lines() {
        let bad = BASIC.replace("sigma = 1", "sigma = one");
        match RunConfig::parse(&bad) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let bad = BASIC.replace("id = pre_sup_mdd_cdf", "id = nonsense");
        match RunConfig::parse(&bad) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        let bad = format!("{BASIC}\n[sim]\ndt = 0.5\n");
        match RunConfig::parse(&bad) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 13),
            other => panic!("{other:?}"),
        }
        let bad = BASIC.replace("arg = 0.5, 1, 2", "arg = -1");
        match law_rows(&RunConfig::parse(&bad).unwrap(), Variants::default()) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            RunConfig::parse("[sim]\ndt=1e-3\n"),
            Err(Error::Config { .. })
        ));
    }
}
