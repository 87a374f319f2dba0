//! Scale functions `W^(q)`, `W^(q)'` and `Z^(q)`.
//!
//! Everything is computed in the Esscher-tilted frame: with `Phi = Phi(q)`,
//! `Wt(x) = exp(-Phi x) W^(q)(x)` is the 0-scale function of the tilted
//! process, bounded and increasing to `1/psi'(Phi)`. Working with `Wt`, its
//! derivative and `It(x) = exp(-Phi x) int_0^x W^(q)` keeps every cached
//! quantity of order one, so interpolation error stays relative and the
//! ratio `W'/W = Phi + Wt'/Wt` never overflows.

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::inversion::{InversionRule, EULER_NODES, TALBOT_NODES};
use crate::levy_model::{Family, LevyModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Inverted,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Inverted => "inverted",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Method::ClosedForm),
            "inverted" => Ok(Method::Inverted),
            other => Err(Error::TableFormat(format!("unknown method `{other}`"))),
        }
    }
}

/// Node layout: `x = 0` followed by `points` geometrically spaced abscissae
/// on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: 1e-4,
            x_max: 20.0,
            points: 512,
        }
    }
}

impl GridSpec {
    pub fn with_x_max(x_max: f64) -> Self {
        Self {
            x_max,
            ..Self::default()
        }
    }

    fn nodes(&self) -> Result<Vec<f64>> {
        if !(self.x_min > 0.0
            && self.x_max > self.x_min
            && self.points >= 2
            && self.x_max.is_finite())
        {
            return Err(domain(
                "grid",
                format!(
                    "need 0 < x_min < x_max and at least 2 points, got [{}, {}] x {}",
                    self.x_min, self.x_max, self.points
                ),
            ));
        }
        let ratio = (self.x_max / self.x_min).ln() / (self.points - 1) as f64;
        let mut nodes = Vec::with_capacity(self.points + 1);
        nodes.push(0.0);
        nodes.extend((0..self.points).map(|k| self.x_min * (ratio * k as f64).exp()));
        *nodes.last_mut().unwrap() = self.x_max;
        Ok(nodes)
    }
}

/// Tilted-frame values at one abscissa.
#[derive(Debug, Clone, Copy, Default)]
struct Tilted {
    w: f64,
    w_prime: f64,
    integral: f64,
}

/// All scale quantities at one abscissa.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Scales {
    pub w: f64,
    pub w_prime: f64,
    pub z: f64,
    /// `int_0^x W^(q)`; equals `(Z - 1)/q` but stays meaningful at `q = 0`.
    pub integral: f64,
    /// `W'/W`, finite only for `x > 0`.
    pub ratio: f64,
    /// `W'/W - Phi`, computed without cancellation.
    pub excess_ratio: f64,
    /// `ln W`, finite only for `x > 0`.
    pub log_w: f64,
}

/// Quantities that decay with `x`, evaluated without forming differences of
/// growing terms.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Decay {
    /// `W'(x) - Phi W(x)`.
    pub lead: f64,
    /// `Z(x) - (gamma/Phi) W(x)`, the discounted probability of passing below 0.
    pub ruin: f64,
    /// `1 - ruin`.
    pub hit: f64,
}

/// Evaluator for `W^(gamma)`, `W^(gamma)'` and `Z^(gamma)` of one model.
#[derive(Debug, Clone)]
pub struct ScaleTable {
    model: LevyModel,
    gamma: f64,
    phi: f64,
    method: Method,
    grid: Vec<f64>,
    nodes: Vec<Tilted>,
    backend: Backend,
}

#[derive(Debug, Clone)]
enum Backend {
    Closed(BrownianScales),
    Inverted(Box<Inverter>),
}

impl ScaleTable {
    /// Closed form for Brownian models, numerical inversion otherwise.
    pub fn new(model: LevyModel, gamma: f64) -> Result<Self> {
        match model.family() {
            Family::BrownianDrift => Self::closed_form(model, gamma, GridSpec::default()),
            _ => invert_scale(model, gamma, GridSpec::default()),
        }
    }

    pub fn closed_form(model: LevyModel, gamma: f64, grid: GridSpec) -> Result<Self> {
        check_gamma(gamma)?;
        if model.family() != Family::BrownianDrift {
            return Err(domain(
                "closed_form",
                format!("no closed form for family {}", model.family().as_str()),
            ));
        }
        let bm = BrownianScales::new(&model, gamma);
        let grid = grid.nodes()?;
        let nodes = grid.iter().map(|&x| bm.tilted(x)).collect();
        Ok(Self {
            model,
            gamma,
            phi: bm.phi,
            method: Method::ClosedForm,
            grid,
            nodes,
            backend: Backend::Closed(bm),
        })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// Cached `Phi(gamma)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn method(&self) -> Method {
        self.method
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn w(&self, x: f64) -> Result<f64> {
        check_x("w", x)?;
        Ok(self.scales(x).w)
    }

    pub fn w_prime(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(domain("w_prime", format!("x must be > 0, got {x}")));
        }
        Ok(self.scales(x).w_prime)
    }

    pub fn z(&self, x: f64) -> Result<f64> {
        check_x("z", x)?;
        Ok(self.scales(x).z)
    }

    /// `exp(-Phi x) W^(gamma)(x)`, the 0-scale function of the model tilted by `Phi(gamma)`.
    pub fn w_tilted(&self, x: f64) -> Result<f64> {
        check_x("w_tilted", x)?;
        Ok(self.tilted(x).w)
    }

    /// `int_0^x W^(gamma)(y) dy`.
    pub fn w_integral(&self, x: f64) -> Result<f64> {
        check_x("w_integral", x)?;
        Ok(self.scales(x).integral)
    }

    /// `W'/W` at `x > 0`.
    pub fn w_ratio(&self, x: f64) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(domain("w_ratio", format!("x must be > 0, got {x}")));
        }
        Ok(self.scales(x).ratio)
    }

    pub(crate) fn scales(&self, x: f64) -> Scales {
        let t = self.tilted(x);
        let grow = (self.phi * x).exp();
        let integral = grow * t.integral;
        Scales {
            w: grow * t.w,
            w_prime: grow * (self.phi * t.w + t.w_prime),
            z: 1.0 + self.gamma * integral,
            integral,
            ratio: self.phi + t.w_prime / t.w,
            excess_ratio: t.w_prime / t.w,
            log_w: self.phi * x + t.w.ln(),
        }
    }

    /// `gamma/Phi`, or `psi'(0)+` when both vanish.
    pub(crate) fn kappa(&self) -> f64 {
        if self.gamma > 0.0 {
            self.gamma / self.phi
        } else if self.phi == 0.0 {
            self.model.psi_prime_unchecked(0.0).max(0.0)
        } else {
            0.0
        }
    }

    pub(crate) fn decay(&self, x: f64) -> Decay {
        let kappa = self.kappa();
        let (lead, ruin) = match &self.backend {
            Backend::Closed(bm) => bm.decay(x, kappa),
            Backend::Inverted(inv) => inv.decay(x, kappa),
        };
        // near the origin 1 - ruin = kappa (W - Phi int W) loses nothing
        let hit = if ruin > 0.5 {
            let s = self.scales(x);
            kappa * (s.w - self.phi * s.integral)
        } else {
            1.0 - ruin
        };
        Decay { lead, ruin, hit }
    }

    fn tilted(&self, x: f64) -> Tilted {
        match &self.backend {
            Backend::Closed(bm) => bm.tilted(x),
            Backend::Inverted(inv) => {
                let last = *self.grid.last().unwrap();
                if x <= last {
                    self.interpolate(inv, x)
                } else {
                    inv.beyond_grid(last, self.nodes.last().unwrap().integral, x)
                }
            }
        }
    }

    fn interpolate(&self, inv: &Inverter, x: f64) -> Tilted {
        let k = self
            .grid
            .partition_point(|&g| g <= x)
            .clamp(1, self.grid.len() - 1);
        let (x0, x1) = (self.grid[k - 1], self.grid[k]);
        if x == x1 {
            return self.nodes[k];
        }
        let (a, b) = (self.nodes[k - 1], self.nodes[k]);
        let (a2, b2) = (inv.second_derivs[k - 1], inv.second_derivs[k]);
        let phi = self.phi;
        // It' = Wt - Phi It and It'' = Wt' - Phi It'
        let (ai1, bi1) = (a.w - phi * a.integral, b.w - phi * b.integral);
        Tilted {
            w: quintic([x0, x1], [a.w, b.w], [a.w_prime, b.w_prime], [a2, b2], x),
            w_prime: hermite(x0, x1, a.w_prime, b.w_prime, a2, b2, x),
            integral: quintic(
                [x0, x1],
                [a.integral, b.integral],
                [ai1, bi1],
                [a.w_prime - phi * ai1, b.w_prime - phi * bi1],
                x,
            ),
        }
    }

    /// Writes `x, W, Wprime, Z` rows after a `#` header naming the model,
    /// gamma and method. `Wprime` at `x = 0` is the right limit.
    pub fn write_csv<W: Write>(&self, out: W, xs: &[f64]) -> Result<()> {
        let mut out = out;
        writeln!(
            out,
            "# model={},gamma={},method={}",
            self.model.hash_hex(),
            self.gamma,
            self.method.as_str()
        )?;
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["x", "W", "Wprime", "Z"])?;
        for &x in xs {
            check_x("write_csv", x)?;
            let s = self.scales(x);
            writer.write_record([x, s.w, s.w_prime, s.z].map(fmt_f64))?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(domain(
            "scale_table",
            format!("gamma must be >= 0, got {gamma}"),
        ))
    }
}

fn check_x(op: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("x must be >= 0, got {x}")))
    }
}

/// Cubic Hermite interpolant through `(x0, f0, d0)` and `(x1, f1, d1)`.
fn hermite(x0: f64, x1: f64, f0: f64, f1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1
}

/// Quintic Hermite interpolant matching values, first and second derivatives.
fn quintic(xs: [f64; 2], f: [f64; 2], d: [f64; 2], dd: [f64; 2], x: f64) -> f64 {
    let h = xs[1] - xs[0];
    let t = (x - xs[0]) / h;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    h0 * f[0] + h5 * f[1] + h * (h1 * d[0] + h4 * d[1]) + h * h * (h2 * dd[0] + h3 * dd[1])
}

/// `(e^z - 1)/z`, equal to 1 at the origin.
fn exprel(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 + 0.5 * z
    } else {
        z.exp_m1() / z
    }
}

const GL8: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Eight-point Gauss-Legendre rule on `[a, b]`.
pub(crate) fn gauss_legendre(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL8.iter()
        .map(|&(node, weight)| weight * (f(mid - half * node) + f(mid + half * node)))
        .sum::<f64>()
        * half
}

/// Closed-form scales of `mu t + sigma B_t`.
///
/// With roots `Phi >= zeta` of `psi(l) = q`,
/// `W(x) = 2/(sigma^2 (Phi - zeta)) (e^{Phi x} - e^{zeta x})`.
#[derive(Debug, Clone, Copy)]
struct BrownianScales {
    phi: f64,
    zeta: f64,
    /// `W'(0+) = 2/sigma^2`
    c: f64,
}

impl BrownianScales {
    fn new(model: &LevyModel, gamma: f64) -> Self {
        let s2 = model.sigma() * model.sigma();
        let mu = model.mu();
        let disc = (mu * mu + 2.0 * gamma * s2).sqrt();
        let phi = (disc - mu) / s2;
        // the small root via Vieta avoids cancellation when disc ~ |mu|
        let zeta = if phi > 0.0 {
            -2.0 * gamma / (s2 * phi)
        } else {
            -(disc + mu) / s2
        };
        Self {
            phi,
            zeta,
            c: 2.0 / s2,
        }
    }

    fn tilted(&self, x: f64) -> Tilted {
        let (phi, zeta, c) = (self.phi, self.zeta, self.c);
        let delta = phi - zeta;
        let m = phi.abs().max(zeta.abs());
        let integral = if m * x < 0.5 {
            (-phi * x).exp() * self.integral_series(x)
        } else {
            c / delta * x * (exprel(-phi * x) - (-phi * x).exp() * exprel(zeta * x))
        };
        Tilted {
            w: c * x * exprel(-delta * x),
            w_prime: c * (-delta * x).exp(),
            integral,
        }
    }

    fn decay(&self, x: f64, kappa: f64) -> (f64, f64) {
        let lead = self.c * (self.zeta * x).exp();
        let ruin = if kappa > 0.0 {
            kappa * lead / -self.zeta
        } else {
            1.0
        };
        (lead, ruin)
    }

    /// `int_0^x W` from the power series `W = c sum_n h_{n-1} x^n / n!`,
    /// `h_k = sum_{i<=k} Phi^i zeta^{k-i}`.
    fn integral_series(&self, x: f64) -> f64 {
        let (phi, zeta) = (self.phi, self.zeta);
        let mut sum = 0.0;
        let mut h = 1.0; // h_0
        let mut phi_pow = 1.0;
        let mut power = x * x / 2.0; // x^{n+1}/(n+1)! at n = 1
        for n in 1..30 {
            sum += h * power;
            phi_pow *= phi;
            h = zeta * h + phi_pow;
            power *= x / (n + 2) as f64;
            if power * h.abs().max(1.0) < 1e-18 * sum.abs() {
                break;
            }
        }
        self.c * sum
    }
}

/// Inversion backend: evaluates tilted quantities by contour inversion of
/// `1/psi~(s)` and its companions, where `psi~` is the tilted exponent.
#[derive(Debug, Clone)]
struct Inverter {
    tilted: LevyModel,
    phi: f64,
    c: f64,
    /// Root `u0 <= 0` of `psi~(u)/u`; `Phi + u0` is the other root of `psi = gamma`.
    u0: f64,
    talbot: InversionRule,
    talbot_check: InversionRule,
    euler: InversionRule,
    euler_check: InversionRule,
    second_derivs: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Transform {
    W,
    WPrime,
    WSecond,
}

impl Inverter {
    fn new(model: &LevyModel, phi: f64) -> Result<Self> {
        let tilted = model.esscher_tilt(phi)?.as_model();
        let s = model.sigma();
        Ok(Self {
            tilted,
            phi,
            c: 2.0 / (s * s),
            u0: quotient_root(&tilted),
            talbot: InversionRule::talbot(TALBOT_NODES),
            talbot_check: InversionRule::talbot(TALBOT_NODES - 6),
            euler: InversionRule::euler(EULER_NODES),
            euler_check: InversionRule::euler(EULER_NODES - 3),
            second_derivs: Vec::new(),
        })
    }

    fn transform(&self, which: Transform, s: Complex64) -> Complex64 {
        let psi = self.tilted.psi_complex(s);
        match which {
            Transform::W => 1.0 / psi,
            Transform::WPrime => s / psi,
            // s^2/psi~ - 2/sigma^2 = -(2/sigma^2) (psi~ - sigma^2 s^2/2) / psi~
            Transform::WSecond => -self.c * self.tilted.psi_complex_rest(s) / psi,
        }
    }

    fn raw(&self, which: Transform, x: f64) -> f64 {
        self.talbot.invert(|s| self.transform(which, s), x)
    }

    /// Talbot with a coarser-rule agreement check, falling back to Euler
    /// summation; fails loudly when neither converges.
    fn checked(&self, which: Transform, x: f64, scale: f64) -> Result<f64> {
        let f = |s| self.transform(which, s);
        let t1 = self.talbot.invert(f, x);
        let t2 = self.talbot_check.invert(f, x);
        let floor = scale.abs().max(1e-14);
        if t1.is_finite() && (t1 - t2).abs() <= 1e-7 * t1.abs().max(floor) {
            return Ok(t1);
        }
        let e1 = self.euler.invert(f, x);
        let e2 = self.euler_check.invert(f, x);
        if e1.is_finite() && (e1 - e2).abs() <= 1e-5 * e1.abs().max(floor) {
            return Ok(e1);
        }
        Err(Error::InversionDiverged {
            x,
            talbot: t1,
            euler: e1,
        })
    }

    /// `W' - Phi W` has transform `1/q(s - Phi)` with `q(u) = psi~(u)/u`, whose
    /// poles sit at `Phi + u0` and below; inverting the transform shifted
    /// there keeps relative accuracy at large `x`. The ruin probability
    /// `kappa int_x^inf (W' - Phi W)` is handled the same way.
    fn decay(&self, x: f64, kappa: f64) -> (f64, f64) {
        let (u0, phi) = (self.u0, self.phi);
        let shift = ((phi + u0) * x).exp();
        if x == 0.0 {
            return (self.c, 1.0);
        }
        let q = |p: Complex64| self.tilted.psi_quotient_complex(p + u0);
        let lead = self.talbot.invert(|p| 1.0 / q(p), x);
        let ruin = if kappa > 0.0 {
            let f = |p: Complex64| self.tilted.psi_quotient_slope(p + u0, -phi) / q(p);
            shift * self.talbot.invert(f, x)
        } else {
            1.0
        };
        (shift * lead, ruin)
    }

    fn node(&self, x: f64) -> Result<(Tilted, f64)> {
        if x == 0.0 {
            // W(0) = 0, W'(0+) = 2/sigma^2, W''(0+) = -4 mu~ / sigma^4
            let second =
                -2.0 * self.c * self.tilted.mu() / (self.tilted.sigma() * self.tilted.sigma());
            let t = Tilted {
                w: 0.0,
                w_prime: self.c,
                integral: 0.0,
            };
            return Ok((t, second));
        }
        let w = self.checked(Transform::W, x, self.c * x)?;
        let w_prime = self.checked(Transform::WPrime, x, self.c)?;
        let second = self.checked(Transform::WSecond, x, self.c)?;
        Ok((
            Tilted {
                w,
                w_prime,
                integral: 0.0,
            },
            second,
        ))
    }

    /// `exp(-Phi b) int_a^b e^{Phi y} Wt(y) dy` by Gauss-Legendre on pieces of width <= 0.25.
    fn tilted_integral(&self, a: f64, b: f64) -> f64 {
        let pieces = ((b - a) / 0.25).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|i| {
                let lo = a + i as f64 * h;
                gauss_legendre(lo, lo + h, |y| {
                    (-self.phi * (b - y)).exp() * self.raw(Transform::W, y)
                })
            })
            .sum()
    }

    fn beyond_grid(&self, last: f64, last_integral: f64, x: f64) -> Tilted {
        let w = self.raw(Transform::W, x);
        let w_prime = self.raw(Transform::WPrime, x);
        let integral =
            (-self.phi * (x - last)).exp() * last_integral + self.tilted_integral(last, x);
        Tilted {
            w,
            w_prime,
            integral,
        }
    }
}

/// Largest root `u0 <= 0` of `psi(u)/u` for a model with `psi'(0) >= 0`.
fn quotient_root(model: &LevyModel) -> f64 {
    if model.psi_quotient(0.0) <= 0.0 {
        return 0.0;
    }
    let mut lo = if model.has_jumps() {
        -1.0 / model.jump_mean()
    } else {
        let mut lo = -1.0;
        while model.psi_quotient(lo) >= 0.0 {
            lo *= 2.0;
        }
        lo
    };
    let mut hi = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.psi_quotient(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Builds a table by numerically inverting `lambda -> 1/(psi(lambda) - gamma)`.
///
/// The transform is shifted by `Phi(gamma)` so all singularities sit in the
/// closed left half-plane; node values are checked across two Talbot rules
/// and an Euler fallback.
pub fn invert_scale(model: LevyModel, gamma: f64, grid: GridSpec) -> Result<ScaleTable> {
    check_gamma(gamma)?;
    let phi = model.phi(gamma)?;
    let mut inverter = Inverter::new(&model, phi)?;
    let grid = grid.nodes()?;

    let mut nodes = Vec::with_capacity(grid.len());
    let mut second_derivs = Vec::with_capacity(grid.len());
    for (k, &x) in grid.iter().enumerate() {
        let (mut t, second) = inverter.node(x)?;
        if k > 0 {
            let prev: &Tilted = &nodes[k - 1];
            let x0 = grid[k - 1];
            t.integral = (-phi * (x - x0)).exp() * prev.integral + inverter.tilted_integral(x0, x);
        }
        nodes.push(t);
        second_derivs.push(second);
    }
    inverter.second_derivs = second_derivs;

    Ok(ScaleTable {
        model,
        gamma,
        phi,
        method: Method::Inverted,
        grid,
        nodes,
        backend: Backend::Inverted(Box::new(inverter)),
    })
}

/// A scale table read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleDump {
    pub model_hash: String,
    pub gamma: f64,
    pub method: Method,
    pub rows: Vec<[f64; 4]>,
}

impl ScaleDump {
    pub fn read_csv<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::TableFormat("missing `#` header line".into()))?;
        let (mut model_hash, mut gamma, mut method) = (None, None, None);
        for field in header.split(',') {
            let (key, value) = field
                .trim()
                .split_once('=')
                .ok_or_else(|| Error::TableFormat(format!("bad header field `{field}`")))?;
            match key {
                "model" => model_hash = Some(value.to_string()),
                "gamma" => {
                    gamma = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| Error::TableFormat(e.to_string()))?,
                    )
                }
                "method" => method = Some(value.parse::<Method>()?),
                _ => {}
            }
        }
        let missing = |k: &str| Error::TableFormat(format!("header lacks `{k}`"));
        let mut reader = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::TableFormat(format!(
                    "expected 4 columns, got {}",
                    record.len()
                )));
            }
            let mut row = [0.0; 4];
            for (slot, field) in row.iter_mut().zip(record.iter()) {
                *slot = field
                    .trim()
                    .parse()
                    .map_err(|e| Error::TableFormat(format!("bad number `{field}`: {e}")))?;
            }
            rows.push(row);
        }
        Ok(Self {
            model_hash: model_hash.ok_or_else(|| missing("model"))?,
            gamma: gamma.ok_or_else(|| missing("gamma"))?,
            method: method.ok_or_else(|| missing("method"))?,
            rows,
        })
    }

    /// Largest absolute deviation of the dumped `W` column from `table`.
    pub fn max_w_deviation(&self, table: &ScaleTable) -> Result<f64> {
        self.rows.iter().try_fold(0.0f64, |acc, row| {
            Ok(acc.max((table.w(row[0])? - row[1]).abs()))
        })
    }
}
