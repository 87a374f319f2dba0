//! Brute-force Monte Carlo oracle: Euler paths of the jump diffusion up to an
//! exponential horizon (or to the first drawdown of size `d`), decomposed at
//! their extremes, and empirical estimates of every law in `drawdown_laws`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::drawdown_laws::{ConditionSpec, Law};
use crate::error::{domain, Error, Result};
use crate::levy_model::LevyModel;

/// Conditional estimates with fewer accepted paths are refused.
pub const MIN_ACCEPTED: u64 = 200;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Paths per work item; fixed so reductions do not depend on the schedule.
const CHUNK: u64 = 2048;

/// Paths that have not hit `alpha_d` by this time are censored.
const ALPHA_TIME_CAP: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimMode {
    /// Simulate on `[0, T]` with `T ~ Exp(gamma)` drawn first.
    ExpHorizon,
    /// Simulate until the drawdown first exceeds `d`.
    StopAtAlphaD(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: LevyModel,
    /// Horizon rate, and the discount rate of duration transforms.
    pub gamma: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub mode: SimMode,
    /// Drawdown size behind the `alpha_d` fields in `ExpHorizon` mode.
    pub drawdown_level: f64,
}

impl SimConfig {
    pub fn new(model: LevyModel, gamma: f64, dt: f64, n_paths: u64, seed: u64) -> Result<Self> {
        let config = Self {
            model,
            gamma,
            dt,
            n_paths,
            seed,
            mode: SimMode::ExpHorizon,
            drawdown_level: 1.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_mode(mut self, mode: SimMode) -> Result<Self> {
        self.mode = mode;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(domain(
                "sim",
                format!("gamma must be > 0, got {}", self.gamma),
            ));
        }
        if !(self.dt > 0.0 && self.dt <= 1e-2) {
            return Err(domain(
                "sim",
                format!("dt must lie in (0, 1e-2], got {}", self.dt),
            ));
        }
        if self.n_paths == 0 {
            return Err(domain("sim", "n_paths must be >= 1"));
        }
        if !(self.drawdown_level > 0.0 && self.drawdown_level.is_finite()) {
            return Err(domain("sim", "drawdown_level must be > 0"));
        }
        if let SimMode::StopAtAlphaD(d) = self.mode {
            if !(d > 0.0 && d.is_finite()) {
                return Err(domain("sim", format!("alpha level must be > 0, got {d}")));
            }
        }
        Ok(())
    }

    fn alpha_level(&self) -> f64 {
        match self.mode {
            SimMode::StopAtAlphaD(d) => d,
            SimMode::ExpHorizon => self.drawdown_level,
        }
    }
}

/// A simulated path. Each jump contributes two points at the same time,
/// the left limit followed by the post-jump value.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(time, size)` with negative sizes.
    pub jumps: Vec<(f64, f64)>,
    /// `T` in `ExpHorizon` mode; the stopping time otherwise.
    pub end_time: f64,
    /// Set when a `StopAtAlphaD` path reached the time cap first.
    pub censored: bool,
}

fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_index);
    rng
}

pub fn simulate_path(config: &SimConfig, path_index: u64) -> PathRecord {
    let mut rng = path_rng(config.seed, path_index);
    let model = &config.model;
    let (mu, sigma) = (model.mu(), model.sigma());
    let jumps_on = model.has_jumps();

    let (horizon, stop_level) = match config.mode {
        SimMode::ExpHorizon => {
            let e: f64 = rng.sample(Exp1);
            (e / config.gamma, f64::INFINITY)
        }
        SimMode::StopAtAlphaD(d) => (ALPHA_TIME_CAP, d),
    };
    let mut next_jump = if jumps_on {
        rng.sample::<f64, _>(Exp1) / model.jump_rate()
    } else {
        f64::INFINITY
    };

    let capacity = ((horizon.min(1e6) / config.dt) as usize)
        .saturating_add(2)
        .min(1 << 22);
    let mut path = PathRecord {
        times: Vec::with_capacity(capacity),
        values: Vec::with_capacity(capacity),
        jumps: Vec::new(),
        end_time: horizon,
        censored: false,
    };
    let (mut t, mut x, mut run_max) = (0.0f64, 0.0f64, 0.0f64);
    path.times.push(t);
    path.values.push(x);

    let diffuse = |rng: &mut ChaCha8Rng, h: f64| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        mu * h + sigma * h.sqrt() * z
    };

    let mut step = 0u64;
    'outer: loop {
        step += 1;
        let t_next = (step as f64 * config.dt).min(horizon);
        while next_jump < t_next {
            x += diffuse(&mut rng, next_jump - t);
            t = next_jump;
            path.times.push(t);
            path.values.push(x);
            run_max = run_max.max(x);
            if run_max - x > stop_level {
                break 'outer;
            }
            let size = rng.sample::<f64, _>(Exp1) * model.jump_mean();
            x -= size;
            path.times.push(t);
            path.values.push(x);
            path.jumps.push((t, -size));
            if run_max - x > stop_level {
                break 'outer;
            }
            next_jump += rng.sample::<f64, _>(Exp1) / model.jump_rate();
        }
        x += diffuse(&mut rng, t_next - t);
        t = t_next;
        path.times.push(t);
        path.values.push(x);
        run_max = run_max.max(x);
        if run_max - x > stop_level {
            break;
        }
        if t >= horizon {
            path.censored = stop_level.is_finite();
            break;
        }
    }
    if stop_level.is_finite() {
        path.end_time = t;
    }
    path
}

/// Extremes and segment drawdowns of one path. Optional fields are absent
/// when the corresponding event does not occur on the path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompRecord {
    pub end_time: f64,
    pub sup: f64,
    pub inf: f64,
    pub h_sup: f64,
    pub h_inf: f64,
    pub mdd_total: f64,
    pub mdd_pre_sup: f64,
    pub mdd_post_sup: f64,
    pub mdd_post_inf: f64,
    pub mdd_intermediate: Option<f64>,
    pub sup_post_inf: f64,
    pub alpha_d: Option<f64>,
    pub kappa: Option<f64>,
    pub duration: Option<f64>,
    pub sup_at_alpha: Option<f64>,
}

/// Header matching the `DecompRecord` field order.
pub const DECOMP_COLUMNS: [&str; 15] = [
    "end_time",
    "sup",
    "inf",
    "h_sup",
    "h_inf",
    "mdd_total",
    "mdd_pre_sup",
    "mdd_post_sup",
    "mdd_post_inf",
    "mdd_intermediate",
    "sup_post_inf",
    "alpha_d",
    "kappa",
    "duration",
    "sup_at_alpha",
];

fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut best = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        best = best.max(peak - v);
    }
    best
}

fn first_argmax(values: &[f64]) -> usize {
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[k] {
            k = i;
        }
    }
    k
}

fn first_argmin(values: &[f64]) -> usize {
    let mut k = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[k] {
            k = i;
        }
    }
    k
}

pub fn decompose(path: &PathRecord, d: f64) -> Result<DecompRecord> {
    if !(d > 0.0) {
        return Err(domain("decompose", format!("d must be > 0, got {d}")));
    }
    let (times, xs) = (&path.times, &path.values);
    if xs.is_empty() || xs.len() != times.len() {
        return Err(domain("decompose", "empty or ragged path"));
    }
    let i_s = first_argmax(xs);
    let i_i = first_argmin(xs);

    // alpha_d and the last visit of the running maximum before it
    let mut peak = f64::NEG_INFINITY;
    let mut last_at_peak = 0;
    let mut alpha = None;
    for (k, &v) in xs.iter().enumerate() {
        if v >= peak {
            peak = v;
            last_at_peak = k;
        }
        if peak - v > d {
            alpha = Some((k, last_at_peak, peak));
            break;
        }
    }

    Ok(DecompRecord {
        end_time: *times.last().unwrap(),
        sup: xs[i_s],
        inf: xs[i_i],
        h_sup: times[i_s],
        h_inf: times[i_i],
        mdd_total: max_drawdown(xs),
        mdd_pre_sup: max_drawdown(&xs[..=i_s]),
        mdd_post_sup: max_drawdown(&xs[i_s..]),
        mdd_post_inf: max_drawdown(&xs[i_i..]),
        mdd_intermediate: (i_i < i_s).then(|| max_drawdown(&xs[i_i..=i_s])),
        sup_post_inf: xs[i_i..].iter().copied().fold(f64::NEG_INFINITY, f64::max),
        alpha_d: alpha.map(|(k, _, _)| times[k]),
        kappa: alpha.map(|(_, j, _)| times[j]),
        duration: alpha.map(|(k, j, _)| times[k] - times[j]),
        sup_at_alpha: alpha.map(|(_, _, m)| m),
    })
}

/// Quadratic reference implementation of `decompose`, used to check it.
pub fn decompose_brute_force(path: &PathRecord, d: f64) -> Result<DecompRecord> {
    if !(d > 0.0) {
        return Err(domain("decompose", format!("d must be > 0, got {d}")));
    }
    let (times, xs) = (&path.times, &path.values);
    if xs.is_empty() || xs.len() != times.len() {
        return Err(domain("decompose", "empty or ragged path"));
    }
    let n = xs.len();
    let pairs = |lo: usize, hi: usize| -> f64 {
        let mut best = 0.0f64;
        for u in lo..=hi {
            for v in u..=hi {
                best = best.max(xs[u] - xs[v]);
            }
        }
        best
    };
    let max_upto = |k: usize| xs[..=k].iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let sup = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let i_s = xs.iter().position(|&v| v == sup).unwrap();
    let i_i = xs.iter().position(|&v| v == inf).unwrap();

    let k_alpha = (0..n).find(|&k| max_upto(k) - xs[k] > d);
    let kappa = k_alpha.map(|k| (0..=k).rev().find(|&j| xs[j] == max_upto(j)).unwrap());

    Ok(DecompRecord {
        end_time: times[n - 1],
        sup,
        inf,
        h_sup: times[i_s],
        h_inf: times[i_i],
        mdd_total: pairs(0, n - 1),
        mdd_pre_sup: pairs(0, i_s),
        mdd_post_sup: pairs(i_s, n - 1),
        mdd_post_inf: pairs(i_i, n - 1),
        mdd_intermediate: (i_i < i_s).then(|| pairs(i_i, i_s)),
        sup_post_inf: (i_i..n).map(|k| xs[k]).fold(f64::NEG_INFINITY, f64::max),
        alpha_d: k_alpha.map(|k| times[k]),
        kappa: kappa.map(|j| times[j]),
        duration: k_alpha.zip(kappa).map(|(k, j)| times[k] - times[j]),
        sup_at_alpha: k_alpha.map(max_upto),
    })
}

/// One law to estimate, with the conditioning realized by acceptance bands
/// of half-width `band`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McQuery {
    pub law: Law,
    pub condition: ConditionSpec,
    pub band: f64,
}

impl McQuery {
    pub fn new(law: Law, condition: ConditionSpec, band: f64) -> Self {
        Self {
            law,
            condition,
            band,
        }
    }

    /// The query under the law's own conditioning with the default band.
    pub fn natural(law: Law) -> Self {
        Self::new(law, law.natural_condition(None), DEFAULT_BAND)
    }

    fn accepts(&self, r: &DecompRecord) -> bool {
        let c = &self.condition;
        if let Some(b) = c.sup_level {
            if (r.sup - b).abs() > self.band {
                return false;
            }
        }
        if let Some(a) = c.inf_level {
            if (r.inf - a).abs() > self.band {
                return false;
            }
        }
        !c.inf_before_sup || r.h_inf < r.h_sup
    }

    /// The per-path observation whose mean estimates the law.
    fn observe(&self, r: &DecompRecord, gamma: f64) -> Option<f64> {
        let ind = |e: bool| if e { 1.0 } else { 0.0 };
        let v = match self.law {
            Law::SupCdf { b } => ind(r.sup < b),
            Law::JointInfSup { a, b } => ind(a < r.inf && r.sup < b),
            Law::PreSupMddCdf { d, .. } => ind(r.mdd_pre_sup < d),
            Law::PostSupMddSf { d } | Law::DurationLtPostSup { d } => ind(r.mdd_post_sup > d),
            Law::PostInfMddSf { d } => ind(r.mdd_post_inf > d),
            Law::PostInfSupCdf { u } => ind(r.sup_post_inf - r.inf <= u),
            Law::IntermediateMddCdf { d, .. } => ind(r.mdd_intermediate? < d),
            Law::PostSupMddCdfCond { d, .. } => ind(r.mdd_post_sup < d),
            Law::DurationLtPostSupCond { d, .. } => ind(r.mdd_post_sup >= d),
            Law::DurationLtAtAlpha { .. } => (-gamma * r.duration?).exp(),
        };
        Some(v)
    }

    fn check_mode(&self, config: &SimConfig) -> Result<()> {
        self.condition.validate()?;
        if !(self.band > 0.0) {
            return Err(domain("estimate", "band must be > 0"));
        }
        match (self.law, config.mode) {
            (Law::DurationLtAtAlpha { d }, SimMode::StopAtAlphaD(level)) if d == level => Ok(()),
            (Law::DurationLtAtAlpha { d }, _) => Err(domain(
                "estimate",
                format!("duration_lt_at_alpha needs StopAtAlphaD({d}) mode"),
            )),
            (_, SimMode::ExpHorizon) => Ok(()),
            (law, _) => Err(domain(
                "estimate",
                format!("{} needs ExpHorizon mode", law.id()),
            )),
        }
    }
}

pub const DEFAULT_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Half-width of the 95% normal confidence interval.
    pub ci_half: f64,
    pub accepted: u64,
    pub total: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    accepted: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn merge(&mut self, o: &Moments) {
        self.accepted += o.accepted;
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    fn finish(&self, total: u64) -> Estimate {
        let n = self.accepted as f64;
        let mean = self.sum / n;
        let var = if self.accepted > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            f64::NAN
        };
        Estimate {
            value: mean,
            ci_half: Z95 * (var / n).sqrt(),
            accepted: self.accepted,
            total,
        }
    }
}

fn chunk_ranges(n: u64) -> Vec<(u64, u64)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(n)))
        .collect()
}

/// Simulates and decomposes paths `lo..hi` in order.
pub fn simulate_records(config: &SimConfig, lo: u64, hi: u64) -> Result<Vec<DecompRecord>> {
    config.validate()?;
    let d = config.alpha_level();
    (lo..hi)
        .into_par_iter()
        .map(|i| decompose(&simulate_path(config, i), d))
        .collect()
}

/// Estimates several laws from one batch of `config.n_paths` paths.
pub fn estimate_laws(config: &SimConfig, queries: &[McQuery]) -> Result<Vec<Result<Estimate>>> {
    config.validate()?;
    for q in queries {
        q.check_mode(config)?;
    }
    let d = config.alpha_level();
    let stopping = matches!(config.mode, SimMode::StopAtAlphaD(_));
    let per_chunk: Vec<Vec<Moments>> = chunk_ranges(config.n_paths)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = vec![Moments::default(); queries.len()];
            for i in lo..hi {
                let path = simulate_path(config, i);
                if stopping && path.censored {
                    continue;
                }
                let rec = decompose(&path, d).expect("validated level");
                for (q, m) in queries.iter().zip(acc.iter_mut()) {
                    if !q.accepts(&rec) {
                        continue;
                    }
                    if let Some(v) = q.observe(&rec, config.gamma) {
                        m.accepted += 1;
                        m.sum += v;
                        m.sum_sq += v * v;
                    }
                }
            }
            acc
        })
        .collect();

    let mut totals = vec![Moments::default(); queries.len()];
    for chunk in &per_chunk {
        for (t, m) in totals.iter_mut().zip(chunk) {
            t.merge(m);
        }
    }
    Ok(queries
        .iter()
        .zip(&totals)
        .map(|(q, m)| {
            if m.accepted < MIN_ACCEPTED {
                Err(Error::InsufficientSample {
                    law: format!("{} at {}", q.law.id(), q.law.arg()),
                    accepted: m.accepted,
                    required: MIN_ACCEPTED,
                })
            } else {
                Ok(m.finish(config.n_paths))
            }
        })
        .collect())
}

pub fn estimate_law(config: &SimConfig, query: &McQuery) -> Result<Estimate> {
    estimate_laws(config, std::slice::from_ref(query))?.remove(0)
}

fn opt(v: Option<f64>) -> String {
    v.map(crate::scale_functions::fmt_f64).unwrap_or_default()
}

/// Streams one CSV row per path, columns in `DECOMP_COLUMNS` order.
pub fn write_records_csv<W: Write>(config: &SimConfig, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DECOMP_COLUMNS)?;
    let f = crate::scale_functions::fmt_f64;
    for (lo, hi) in chunk_ranges(config.n_paths) {
        for r in simulate_records(config, lo, hi)? {
            w.write_record([
                f(r.end_time),
                f(r.sup),
                f(r.inf),
                f(r.h_sup),
                f(r.h_inf),
                f(r.mdd_total),
                f(r.mdd_pre_sup),
                f(r.mdd_post_sup),
                f(r.mdd_post_inf),
                opt(r.mdd_intermediate),
                f(r.sup_post_inf),
                opt(r.alpha_d),
                opt(r.kappa),
                opt(r.duration),
                opt(r.sup_at_alpha),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
