//! Trend classification of a recorded history against the three breakdown
//! alternatives. A flag is evidence under the configured thresholds, not a
//! proof of blow-up.

use serde::{Deserialize, Serialize};

use super::DiagnosticsRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Lower bound on `min ∂₃φ` and on `b − |ψ|_∞`.
    pub eps_geo: f64,
    /// Turning proxy: `|∂̄ψ|_∞` at or above this flags the geometry condition.
    pub turning: f64,
    /// Absolute bound on `𝒦 = 𝒦₁ + 𝒦₂`.
    pub control_norm_max: f64,
    /// Bound on the least-squares slope of `ln 𝒦` against `t`.
    pub control_growth_rate: f64,
    /// Absolute bound on `∫‖ω^φ‖_∞`.
    pub bkm_max: f64,
    /// Bound on the slope of `ln ‖ω^φ‖_∞` against `∫‖ω^φ‖_∞`. It tends to 1 as
    /// `‖ω‖_∞ ~ (T* − t)^{-1}` and to 0 for bounded vorticity.
    pub vorticity_slope: f64,
    /// Smallest growth of `∫‖ω^φ‖_∞` across the window for the slope to count;
    /// below it the slope only measures roundoff in a vanishing vorticity.
    pub min_bkm_span: f64,
    /// Records in the trend window.
    pub window: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            eps_geo: 1e-3,
            turning: 10.0,
            control_norm_max: 1e6,
            control_growth_rate: 5.0,
            bkm_max: 1e3,
            vorticity_slope: 0.5,
            min_bkm_span: 1e-2,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFlag {
    pub triggered: bool,
    /// Least-squares slope of the condition's trend statistic on the last window.
    pub trend_slope: f64,
    /// Quantity that triggered the flag, or the one the trend was measured on.
    pub triggering_quantity: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownReport {
    pub cond_a: ConditionFlag,
    pub cond_b_prime: ConditionFlag,
    pub cond_c: ConditionFlag,
    pub thresholds: Thresholds,
}

impl BreakdownReport {
    pub fn any(&self) -> bool {
        self.cond_a.triggered || self.cond_b_prime.triggered || self.cond_c.triggered
    }
}

/// Least-squares slope of `y` against `x`; 0 when `x` has no spread.
fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return 0.0;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    sxy / sxx
}

fn ln_floor(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE).ln()
}

fn flag(triggered: bool, trend_slope: f64, name: &str) -> ConditionFlag {
    ConditionFlag { triggered, trend_slope, triggering_quantity: name.to_string() }
}

/// Threshold crossings are scanned over the whole history; trend slopes use the
/// last `window` records and are reported as 0 with fewer than three records.
pub fn classify_breakdown(history: &[DiagnosticsRecord], th: &Thresholds) -> BreakdownReport {
    let start = history.len().saturating_sub(th.window.max(3));
    let win = &history[start..];
    let trend = win.len() >= 3;
    let series = |f: &dyn Fn(&DiagnosticsRecord) -> f64| -> Vec<f64> { win.iter().map(f).collect() };
    let ts = series(&|r| r.t);

    // (a) control norms
    let k_slope = if trend { ls_slope(&ts, &series(&|r| ln_floor(r.k()))) } else { 0.0 };
    let k_max = history.iter().map(DiagnosticsRecord::k).fold(0.0, f64::max);
    let nonfinite = history.iter().any(|r| !r.k().is_finite());
    let cond_a = if nonfinite || k_max >= th.control_norm_max {
        flag(true, k_slope, "K")
    } else {
        flag(k_slope >= th.control_growth_rate, k_slope, "ln K trend")
    };

    // (b') BKM integral
    let bkm_span = win.last().zip(win.first()).map_or(0.0, |(l, f)| l.bkm_integral - f.bkm_integral);
    let w_slope = if trend {
        ls_slope(&series(&|r| r.bkm_integral), &series(&|r| ln_floor(r.vort_sup)))
    } else {
        0.0
    };
    let bkm = history.last().map_or(0.0, |r| r.bkm_integral);
    let cond_b_prime = if !(bkm < th.bkm_max) && !history.is_empty() {
        flag(true, w_slope, "bkm_integral")
    } else {
        flag(w_slope >= th.vorticity_slope && bkm_span >= th.min_bkm_span, w_slope, "ln vort_sup vs bkm_integral")
    };

    // (c) geometry
    let g_slope = if trend { ls_slope(&ts, &series(&|r| ln_floor(r.min_d3phi))) } else { 0.0 };
    let hit = history.iter().find_map(|r| {
        if !(r.min_d3phi > th.eps_geo) {
            Some("min_d3phi")
        } else if !(r.depth_margin > th.eps_geo) {
            Some("depth_margin")
        } else if !(r.grad_psi_sup < th.turning) {
            Some("grad_psi_sup")
        } else {
            None
        }
    });
    let cond_c = match hit {
        Some(name) => flag(true, g_slope, name),
        None => flag(false, g_slope, "min_d3phi"),
    };

    BreakdownReport { cond_a, cond_b_prime, cond_c, thresholds: *th }
}
