//! Spectrally negative Lévy models of unbounded variation.
//!
//! Finite-activity jump families are written in the non-compensated form
//!
//! ```text
//! psi(l) = mu*l + sigma^2 l^2 / 2 + int (e^{l x} - 1) Pi(dx)
//! ```
//!
//! so `mu` is the total drift of the process between jumps. This is a
//! reparametrization of the compensated Lévy-Khintchine form with cutoff
//! `1{x > -1}`, not a different model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    BrownianDrift,
    /// Brownian motion with drift plus compound Poisson downward jumps of
    /// exponentially distributed size.
    ExpJumpDiffusion,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::BrownianDrift => "brownian_drift",
            Family::ExpJumpDiffusion => "exp_jump_diffusion",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "brownian_drift" | "brownian" | "bm" => Ok(Family::BrownianDrift),
            "exp_jump_diffusion" | "exp_jump" => Ok(Family::ExpJumpDiffusion),
            other => Err(Error::InvalidModel(format!("unknown family `{other}`"))),
        }
    }
}

/// A spectrally negative Lévy process with `sigma > 0`.
///
/// Jumps are `-xi` with `xi ~ Exp(mean = jump_mean)` arriving at rate
/// `jump_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    family: Family,
    mu: f64,
    sigma: f64,
    jump_rate: f64,
    jump_mean: f64,
}

impl LevyModel {
    pub fn brownian(mu: f64, sigma: f64) -> Result<Self> {
        Self::new(Family::BrownianDrift, mu, sigma, 0.0, 1.0)
    }

    pub fn exp_jump_diffusion(mu: f64, sigma: f64, jump_rate: f64, jump_mean: f64) -> Result<Self> {
        Self::new(Family::ExpJumpDiffusion, mu, sigma, jump_rate, jump_mean)
    }

    /// Standard Brownian motion, the reference model for most closed-form checks.
    pub fn standard_brownian() -> Self {
        Self::brownian(0.0, 1.0).expect("valid")
    }

    pub fn new(
        family: Family,
        mu: f64,
        sigma: f64,
        jump_rate: f64,
        jump_mean: f64,
    ) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidModel(format!("mu must be finite, got {mu}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "sigma must be positive (unbounded variation), got {sigma}"
            )));
        }
        if !(jump_mean > 0.0 && jump_mean.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "jump_mean must be positive, got {jump_mean}"
            )));
        }
        match family {
            Family::BrownianDrift if jump_rate != 0.0 => Err(Error::InvalidModel(
                "brownian_drift requires jump_rate = 0".into(),
            )),
            Family::ExpJumpDiffusion if !(jump_rate > 0.0 && jump_rate.is_finite()) => {
                Err(Error::InvalidModel(format!(
                    "exp_jump_diffusion requires jump_rate > 0, got {jump_rate}"
                )))
            }
            _ => Ok(Self {
                family,
                mu,
                sigma,
                jump_rate,
                jump_mean,
            }),
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }
    pub fn jump_mean(&self) -> f64 {
        self.jump_mean
    }

    pub fn has_jumps(&self) -> bool {
        self.family == Family::ExpJumpDiffusion
    }

    /// Short stable digest of the parameters, used to tag exported tables.
    pub fn hash_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.family.as_str().as_bytes());
        for v in [self.mu, self.sigma, self.jump_rate, self.jump_mean] {
            hasher.update(v.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Laplace exponent `psi(lambda)` for `lambda >= 0`.
    pub fn psi(&self, lambda: f64) -> Result<f64> {
        check_lambda("psi", lambda)?;
        Ok(self.psi_unchecked(lambda))
    }

    pub fn psi_prime(&self, lambda: f64) -> Result<f64> {
        check_lambda("psi_prime", lambda)?;
        Ok(self.psi_prime_unchecked(lambda))
    }

    /// `psi` on its full real domain `lambda > -1/jump_mean`.
    pub(crate) fn psi_unchecked(&self, lambda: f64) -> f64 {
        let diffusion = self.mu * lambda + 0.5 * self.sigma * self.sigma * lambda * lambda;
        if self.has_jumps() {
            let m = self.jump_mean;
            diffusion - self.jump_rate * lambda * m / (1.0 + lambda * m)
        } else {
            diffusion
        }
    }

    pub(crate) fn psi_prime_unchecked(&self, lambda: f64) -> f64 {
        let diffusion = self.mu + self.sigma * self.sigma * lambda;
        if self.has_jumps() {
            let denom = 1.0 + lambda * self.jump_mean;
            diffusion - self.jump_rate * self.jump_mean / (denom * denom)
        } else {
            diffusion
        }
    }

    /// Analytic continuation of `psi` to the complex plane, used by the
    /// Laplace inversion contours.
    pub(crate) fn psi_complex(&self, s: Complex64) -> Complex64 {
        s * s * (0.5 * self.sigma * self.sigma) + self.psi_complex_rest(s)
    }

    /// `psi` minus its Gaussian part `sigma^2 s^2 / 2`.
    pub(crate) fn psi_complex_rest(&self, s: Complex64) -> Complex64 {
        let drift = s * self.mu;
        if self.has_jumps() {
            let m = self.jump_mean;
            drift - s * (self.jump_rate * m) / (s * m + 1.0)
        } else {
            drift
        }
    }

    /// `psi(u)/u`, continued to `u = 0` by `psi'(0)`.
    pub(crate) fn psi_quotient(&self, u: f64) -> f64 {
        let base = self.mu + 0.5 * self.sigma * self.sigma * u;
        if self.has_jumps() {
            base - self.jump_rate * self.jump_mean / (1.0 + u * self.jump_mean)
        } else {
            base
        }
    }

    pub(crate) fn psi_quotient_complex(&self, u: Complex64) -> Complex64 {
        let base = u * (0.5 * self.sigma * self.sigma) + self.mu;
        if self.has_jumps() {
            let m = self.jump_mean;
            base - (self.jump_rate * m) / (u * m + 1.0)
        } else {
            base
        }
    }

    /// Divided difference `(q(u) - q(v))/(u - v)` of `q = psi_quotient`.
    pub(crate) fn psi_quotient_slope(&self, u: Complex64, v: f64) -> Complex64 {
        let half = Complex64::new(0.5 * self.sigma * self.sigma, 0.0);
        if self.has_jumps() {
            let m = self.jump_mean;
            half + (self.jump_rate * m * m) / ((u * m + 1.0) * (1.0 + m * v))
        } else {
            half
        }
    }

    /// Minimiser of `psi` on `[0, inf)`.
    pub fn psi_argmin(&self) -> f64 {
        if self.psi_prime_unchecked(0.0) >= 0.0 {
            return 0.0;
        }
        let mut hi = 1.0;
        while self.psi_prime_unchecked(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.psi_prime_unchecked(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Right inverse `Phi(gamma)`: the largest root of `psi(lambda) = gamma`.
    pub fn phi(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(domain("phi", format!("gamma must be >= 0, got {gamma}")));
        }
        let lambda0 = self.psi_argmin();
        if gamma == 0.0 && lambda0 == 0.0 {
            return Ok(0.0);
        }
        let tol = 1e-12 * gamma.max(1.0);

        let mut lo = lambda0;
        let mut hi = lambda0.max(1.0);
        while self.psi_unchecked(hi) <= gamma {
            lo = hi;
            hi *= 2.0;
        }

        // Newton from the right converges monotonically on a convex function;
        // the bracket only guards against rounding.
        let mut x = hi;
        for _ in 0..200 {
            let f = self.psi_unchecked(x) - gamma;
            if f.abs() <= tol {
                return Ok(x);
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.psi_prime_unchecked(x);
            let newton = x - f / slope;
            x = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        Ok(x)
    }

    /// Esscher tilt by `theta`: exponent `psi(lambda + theta) - psi(theta)`.
    pub fn esscher_tilt(&self, theta: f64) -> Result<TiltedModel> {
        if !(theta >= 0.0 && theta.is_finite()) {
            return Err(domain(
                "esscher_tilt",
                format!("theta must be >= 0, got {theta}"),
            ));
        }
        Ok(TiltedModel { base: *self, theta })
    }
}

fn check_lambda(op: &'static str, lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(domain(op, format!("lambda must be >= 0, got {lambda}")))
    }
}

/// A model under the Esscher measure `dP^theta/dP = exp(theta X_t - t psi(theta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedModel {
    base: LevyModel,
    theta: f64,
}

impl TiltedModel {
    pub fn base(&self) -> &LevyModel {
        &self.base
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn psi(&self, lambda: f64) -> Result<f64> {
        check_lambda("psi", lambda)?;
        Ok(self.base.psi_unchecked(lambda + self.theta) - self.base.psi_unchecked(self.theta))
    }

    pub fn psi_prime(&self, lambda: f64) -> Result<f64> {
        check_lambda("psi_prime", lambda)?;
        Ok(self.base.psi_prime_unchecked(lambda + self.theta))
    }

    /// The tilted process as a model of the same family.
    ///
    /// Tilting shifts the drift by `sigma^2 theta` and maps exponential jumps
    /// of rate `r`, mean `m` to rate `r/(1+theta m)`, mean `m/(1+theta m)`.
    pub fn as_model(&self) -> LevyModel {
        let b = &self.base;
        let mu = b.mu + b.sigma * b.sigma * self.theta;
        if b.has_jumps() {
            let scale = 1.0 + self.theta * b.jump_mean;
            LevyModel::exp_jump_diffusion(mu, b.sigma, b.jump_rate / scale, b.jump_mean / scale)
        } else {
            LevyModel::brownian(mu, b.sigma)
        }
        .expect("tilting preserves validity")
    }
}
