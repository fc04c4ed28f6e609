//! Monitored quantities along a run, breakdown classification, and the
//! verification checks for identities and inequalities of the flattened system.

mod checks;
mod classify;
mod good_unknown;
mod transport;

pub use checks::{ferrari_check, hodge_check, modified_velocity, FerrariReport, HodgeReport, HodgeVariant};
pub use classify::{classify_breakdown, BreakdownReport, ConditionFlag, Thresholds};
pub use good_unknown::{good_unknown_evolution_residual, remainder_r3};
pub use transport::{
    identity_a1, identity_a2, identity_a2_1, identity_a3, identity_a4, kinematic_psi_t, transport_identity_suite,
    IdentityResidual, TransportInputs, TransportResiduals,
};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Evaluation, State};
use crate::error::Result;
use crate::geometry::GeometrySnapshot;
use crate::operators::{curl_phi, div_phi, l2};
use crate::spectral::{boundary_sobolev_norm, holder_norms, interior_sobolev_norm, Grid, SurfaceField, VectorField};

/// `ω^φ = ∂^φ × v`.
pub fn vorticity(grid: &Grid, v: &VectorField, geom: &GeometrySnapshot) -> Result<VectorField> {
    curl_phi(grid, v, geom)
}

/// One row of the monitored time series. Column order is the serialized order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖v‖₃² + σ|ψ|₄²`.
    pub energy: f64,
    /// `|ψ|_{C³}`.
    pub psi_c3: f64,
    /// `|ψ_t|_{C³}`.
    pub psi_t_c3: f64,
    /// `|ψ_tt|_{1.5}`.
    pub psi_tt_h15: f64,
    /// `|v̄|_∞` on the top boundary.
    pub vbar_sup: f64,
    /// `∫₀ᵗ |v̄|_{Ẇ^{1,∞}} dτ` by the trapezoid rule; stays 0 when the accumulator is disabled.
    pub w1inf_integral: f64,
    /// `|ψ_t|_{C²}`.
    pub psi_t_c2: f64,
    /// `|ψ_t|₃`.
    pub psi_t_h3: f64,
    /// `‖ω^φ‖_∞`.
    pub vort_sup: f64,
    /// `∫₀ᵗ ‖ω^φ‖_∞ dτ` by the trapezoid rule.
    pub bkm_integral: f64,
    pub min_d3phi: f64,
    /// `b − |ψ|_∞`.
    pub depth_margin: f64,
    /// `|∂̄ψ|_∞`.
    pub grad_psi_sup: f64,
    /// Volume `L²` norm of `∂^φ·v`.
    pub div_norm: f64,
    pub energy_identity_residual: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "E",
        "psi_c3",
        "psi_t_c3",
        "psi_tt_h15",
        "vbar_sup",
        "w1inf_integral",
        "psi_t_c2",
        "psi_t_h3",
        "vort_sup",
        "bkm_integral",
        "min_d3phi",
        "depth_margin",
        "grad_psi_sup",
        "div_norm",
        "energy_identity_residual",
    ];

    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.energy,
            self.psi_c3,
            self.psi_t_c3,
            self.psi_tt_h15,
            self.vbar_sup,
            self.w1inf_integral,
            self.psi_t_c2,
            self.psi_t_h3,
            self.vort_sup,
            self.bkm_integral,
            self.min_d3phi,
            self.depth_margin,
            self.grad_psi_sup,
            self.div_norm,
            self.energy_identity_residual,
        ]
    }

    pub fn from_values(x: [f64; 16]) -> Self {
        Self {
            t: x[0],
            energy: x[1],
            psi_c3: x[2],
            psi_t_c3: x[3],
            psi_tt_h15: x[4],
            vbar_sup: x[5],
            w1inf_integral: x[6],
            psi_t_c2: x[7],
            psi_t_h3: x[8],
            vort_sup: x[9],
            bkm_integral: x[10],
            min_d3phi: x[11],
            depth_margin: x[12],
            grad_psi_sup: x[13],
            div_norm: x[14],
            energy_identity_residual: x[15],
        }
    }

    /// `𝒦₁ = |ψ|_{C³} + |ψ_t|_{C³} + |ψ_tt|_{1.5}`.
    pub fn k1(&self) -> f64 {
        self.psi_c3 + self.psi_t_c3 + self.psi_tt_h15
    }

    /// `𝒦₂ = ∫|v̄|_{Ẇ^{1,∞}} + |v̄|_∞`.
    pub fn k2(&self) -> f64 {
        self.w1inf_integral + self.vbar_sup
    }

    pub fn k(&self) -> f64 {
        self.k1() + self.k2()
    }

    /// `𝒦̃₁`, with `|ψ_t|_{C³}` replaced by `|ψ_t|_{C²} + |ψ_t|₃`.
    pub fn k1_tilde(&self) -> f64 {
        self.psi_c3 + self.psi_t_c2 + self.psi_t_h3 + self.psi_tt_h15
    }
}

/// Terms of the `L²` energy balance
/// `d/dt(∫|v|²∂₃φ + σ∫|∂̄ψ|²/|N|) = σ∫∂_t(|N|⁻¹)|∂̄ψ|²` at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    /// `∫|v|²∂₃φ`.
    pub kinetic: f64,
    /// `σ∫|∂̄ψ|²/|N|`.
    pub surface: f64,
    /// `σ∫∂_t(|N|⁻¹)|∂̄ψ|²`.
    pub source: f64,
}

impl EnergySample {
    pub fn evaluate(grid: &Grid, t: f64, v: &VectorField, geom: &GeometrySnapshot, sigma: f64) -> Self {
        let kinetic = grid.integrate_vol(&(&v.dot(v) * geom.d3phi()));
        let [p1, p2] = &geom.dpsi;
        let grad2 = &(p1 * p1) + &(p2 * p2);
        let surface = sigma * grid.integrate(&grad2.zip_map(&geom.norm_n, |a, n| a / n));
        let [q1, q2] = grid.grad_tan(&geom.psi_t);
        // ∂_t|N|⁻¹ = −(∂̄ψ·∂̄ψ_t)/|N|³
        let rate = &(p1 * &q1) + &(p2 * &q2);
        let weight = grad2.zip_map(&geom.norm_n, |a, n| a / (n * n * n));
        let source = -sigma * grid.integrate(&(&rate * &weight));
        Self { t, kinetic, surface, source }
    }

    fn total(&self) -> f64 {
        self.kinetic + self.surface
    }
}

/// Derivative at `ts[last]` of the Lagrange interpolant through `(ts, ys)`.
pub fn backward_derivative(ts: &[f64], ys: &[f64]) -> f64 {
    let n = ts.len() - 1;
    let tn = ts[n];
    let mut d = 0.0;
    for j in 0..n {
        let mut w = 1.0 / (ts[j] - tn);
        for m in 0..n {
            if m != j {
                w *= (tn - ts[m]) / (ts[j] - ts[m]);
            }
        }
        d += w * ys[j];
    }
    let wn: f64 = (0..n).map(|m| 1.0 / (tn - ts[m])).sum();
    d + wn * ys[n]
}

/// Points in the backward stencil of the energy residual.
const ENERGY_STENCIL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecorderConfig {
    pub sigma: f64,
    /// Accumulate `∫|v̄|_{Ẇ^{1,∞}}` into `𝒦₂`.
    pub k2_accumulator: bool,
}

/// Single owner of the time series and of every running accumulator, so a
/// serialized recorder continues a run exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recorder {
    config: RecorderConfig,
    records: Vec<DiagnosticsRecord>,
    /// Last `|v̄|_{Ẇ^{1,∞}}` integrand.
    last_w1inf: Option<f64>,
    energy_window: Vec<EnergySample>,
    /// Peak `|d/dt ∫|v|²∂₃φ|` seen so far, the scale of the energy residual.
    peak_rate: f64,
}

impl Recorder {
    pub fn new(config: RecorderConfig) -> Self {
        Self { config, records: Vec::new(), last_w1inf: None, energy_window: Vec::new(), peak_rate: 0.0 }
    }

    pub fn config(&self) -> &RecorderConfig {
        &self.config
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&DiagnosticsRecord> {
        self.records.last()
    }

    /// Evaluate and append the record of `state`; `eval` must belong to the same state.
    pub fn record(&mut self, grid: &Grid, state: &State, eval: &Evaluation) -> Result<DiagnosticsRecord> {
        let geom = &eval.geom;
        let v = &state.v;
        let sigma = self.config.sigma;

        let energy = v.0.iter().map(|c| interior_sobolev_norm(grid, c, 3).powi(2)).sum::<f64>()
            + sigma * boundary_sobolev_norm(grid, &state.psi, 4.0).powi(2);
        let psi_c3 = holder_norms(grid, &state.psi, 3).ck;
        let psi_t_c3 = holder_norms(grid, &eval.psi_t, 3).ck;
        let psi_t_c2 = holder_norms(grid, &eval.psi_t, 2).ck;
        let psi_t_h3 = boundary_sobolev_norm(grid, &eval.psi_t, 3.0);
        let psi_tt_h15 = boundary_sobolev_norm(grid, &eval.psi_tt, 1.5);

        let top = v.top();
        let vbar_sup = euclid(&top[0], &top[1]).sup();
        let w1inf = {
            let [a1, a2] = grid.grad_tan(&top[0]);
            let [b1, b2] = grid.grad_tan(&top[1]);
            euclid(&a1, &b1).sup() + euclid(&a2, &b2).sup()
        };
        let vort_sup = vorticity(grid, v, geom)?.sup();
        let grad_psi_sup = euclid(&geom.dpsi[0], &geom.dpsi[1]).sup();
        let div_norm = l2(grid, &div_phi(grid, v, geom)?);

        let t = state.t;
        let (bkm_integral, w1inf_integral) = match self.records.last() {
            Some(prev) => {
                let h = 0.5 * (t - prev.t);
                let w1 = if self.config.k2_accumulator {
                    prev.w1inf_integral + h * (self.last_w1inf.unwrap_or(w1inf) + w1inf)
                } else {
                    0.0
                };
                (prev.bkm_integral + h * (prev.vort_sup + vort_sup), w1)
            }
            None => (0.0, 0.0),
        };
        self.last_w1inf = Some(w1inf);

        let energy_identity_residual = self.energy_residual(EnergySample::evaluate(grid, t, v, geom, sigma));

        let rec = DiagnosticsRecord {
            t,
            energy,
            psi_c3,
            psi_t_c3,
            psi_tt_h15,
            vbar_sup,
            w1inf_integral,
            psi_t_c2,
            psi_t_h3,
            vort_sup,
            bkm_integral,
            min_d3phi: geom.min_d3phi,
            depth_margin: geom.depth_margin,
            grad_psi_sup,
            div_norm,
            energy_identity_residual,
        };
        self.records.push(rec);
        Ok(rec)
    }

    /// `|d/dt(∫|v|²∂₃φ + σ∫|∂̄ψ|²/|N|) − σ∫∂_t(|N|⁻¹)|∂̄ψ|²|` over the peak kinetic
    /// rate; the derivative is a backward five-point Lagrange stencil, so the
    /// residual is 0 until five samples exist.
    fn energy_residual(&mut self, sample: EnergySample) -> f64 {
        self.energy_window.push(sample);
        if self.energy_window.len() > ENERGY_STENCIL {
            self.energy_window.remove(0);
        }
        if self.energy_window.len() < ENERGY_STENCIL {
            return 0.0;
        }
        let ts: Vec<f64> = self.energy_window.iter().map(|s| s.t).collect();
        let total: Vec<f64> = self.energy_window.iter().map(EnergySample::total).collect();
        let kin: Vec<f64> = self.energy_window.iter().map(|s| s.kinetic).collect();
        let defect = (backward_derivative(&ts, &total) - sample.source).abs();
        self.peak_rate = self.peak_rate.max(backward_derivative(&ts, &kin).abs());
        if defect == 0.0 {
            0.0
        } else if self.peak_rate > 0.0 {
            defect / self.peak_rate
        } else {
            defect
        }
    }
}

fn euclid(a: &SurfaceField, b: &SurfaceField) -> SurfaceField {
    a.zip_map(b, f64::hypot)
}
