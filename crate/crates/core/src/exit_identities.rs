//! First-passage and drawdown exit identities.
//!
//! All identities are written in gap coordinates: the start point is the
//! distance `x` above the lower barrier (placed at 0) and upper barriers are
//! given as levels above that same origin. Passage times are discounted at
//! the table's `gamma`.

use crate::error::{domain, Result};
use crate::scale_functions::ScaleTable;

/// `gamma / Phi(gamma)`, with its limit at `gamma = 0`.
pub(crate) fn gamma_over_phi(table: &ScaleTable) -> f64 {
    table.kappa()
}

fn nonneg(op: &'static str, name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(domain(op, format!("{name} must be >= 0, got {v}")))
    }
}

/// `E[e^{-gamma tau_x^+}] = e^{-Phi(gamma) x}`.
pub fn one_sided_up(table: &ScaleTable, x: f64) -> Result<f64> {
    nonneg("one_sided_up", "x", x)?;
    Ok((-table.phi() * x).exp())
}

/// `E_x[e^{-gamma tau_0^-}; tau_0^- < inf] = Z(x) - (gamma/Phi) W(x)`.
pub fn one_sided_down(table: &ScaleTable, x: f64) -> Result<f64> {
    nonneg("one_sided_down", "x", x)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(table.decay(x).ruin)
}

fn check_interval(op: &'static str, x: f64, b: f64) -> Result<()> {
    if x >= 0.0 && x <= b && b.is_finite() {
        Ok(())
    } else {
        Err(domain(
            op,
            format!("need 0 <= x <= b, got x = {x}, b = {b}"),
        ))
    }
}

/// `E_x[e^{-gamma tau_b^+}; tau_b^+ < tau_0^-] = W(x)/W(b)`.
pub fn two_sided_up(table: &ScaleTable, x: f64, b: f64) -> Result<f64> {
    check_interval("two_sided_up", x, b)?;
    if x == b {
        return Ok(1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (sx, sb) = (table.scales(x), table.scales(b));
    Ok((sx.log_w - sb.log_w).exp())
}

/// `E_x[e^{-gamma tau_0^-}; tau_0^- < tau_b^+] = Z(x) - Z(b) W(x)/W(b)`.
pub fn two_sided_down(table: &ScaleTable, x: f64, b: f64) -> Result<f64> {
    check_interval("two_sided_down", x, b)?;
    if x == b {
        return Ok(0.0);
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    // Z - k W at both ends; the k W terms cancel exactly
    let (sx, sb) = (table.scales(x), table.scales(b));
    Ok(table.decay(x).ruin - table.decay(b).ruin * (sx.log_w - sb.log_w).exp())
}

/// `E_x[e^{-gamma tau_b^+}; tau_b^+ <= alpha_d ^ tau_0^-]
///   = W(x)/W(d) exp(-(b - d) W'(d)/W(d))` for `0 <= x <= d <= b`.
pub fn updown_before_drawdown(table: &ScaleTable, x: f64, b: f64, d: f64) -> Result<f64> {
    if !(x >= 0.0 && x <= d && d <= b && d > 0.0 && b.is_finite()) {
        return Err(domain(
            "updown_before_drawdown",
            format!("need 0 <= x <= d <= b with d > 0, got x = {x}, d = {d}, b = {b}"),
        ));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (sx, sd) = (table.scales(x), table.scales(d));
    Ok((sx.log_w - sd.log_w - (b - d) * sd.ratio).exp())
}

/// `E_x[e^{-gamma alpha_d}; alpha_d < tau_b^+]` with `x_gap = b - x`:
/// `(1 - exp(-x_gap W'(d)/W(d))) (Z(d) - gamma W(d)^2 / W'(d))`.
///
/// `x_gap = inf` gives the unconstrained transform of `alpha_d`.
pub fn drawdown_before_up(table: &ScaleTable, x_gap: f64, d: f64) -> Result<f64> {
    nonneg("drawdown_before_up", "x_gap", x_gap)?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(domain(
            "drawdown_before_up",
            format!("d must be > 0, got {d}"),
        ));
    }
    let s = table.scales(d);
    let reach = -(-x_gap * s.ratio).exp_m1();
    // Z - gamma W^2/W' = (Z - k W) + k (W' - Phi W)/(W'/W)
    let decay = table.decay(d);
    Ok(reach * (decay.ruin + gamma_over_phi(table) * decay.lead / s.ratio))
}
