//! Distributed control laws.
//!
//! Agent `i` only sees its incident edges. For edge `k` the non-estimating
//! endpoint reads the consistent error `e_k = ||z_k||² - d_k²` while the
//! estimating endpoint reads `e_k + μ_k(t)`. The gradient law is
//!
//! ```text
//! u_i = -Σ_{k ∈ E_i} z_{i→j} · (own reading of e_k)
//! ```
//!
//! and the estimator-based law adds `Σ_{k ∈ K_i} z_k μ̂_k`, where each
//! estimating agent runs `ξ̇_k = Λξ_k + κB_k(reading - μ̂_k)`, `μ̂_k = B_kᵀξ_k`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::disturbance::{check_observability, mu_closed_form, DisturbanceSpec, InternalModelBasis};
use crate::rigidity::{FormationGraph, Framework};
use crate::{FormationError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    GradientOnly,
    Estimator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    pub mode: ControlMode,
    pub kappa: f64,
    pub basis: InternalModelBasis,
}

impl ControllerConfig {
    pub fn new(mode: ControlMode, kappa: f64, basis: InternalModelBasis) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(FormationError::InvalidController(format!(
                "gain must be positive, got {kappa}"
            )));
        }
        if mode == ControlMode::Estimator && !check_observability(&basis) {
            return Err(FormationError::InvalidController(
                "(B_k, Λ) is not observable".into(),
            ));
        }
        Ok(Self { mode, kappa, basis })
    }
}

/// What each endpoint of every edge measures.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementView {
    estimating: Vec<f64>,
    other: Vec<f64>,
}

impl MeasurementView {
    /// Readings built from consistent errors `e` and discrepancies `μ`.
    pub fn from_errors(errors: &[f64], mu: &[f64]) -> Self {
        Self {
            estimating: errors.iter().zip(mu).map(|(e, m)| e + m).collect(),
            other: errors.to_vec(),
        }
    }

    pub(crate) fn update(&mut self, errors: &[f64], mu: &[f64]) {
        for k in 0..errors.len() {
            self.estimating[k] = errors[k] + mu[k];
            self.other[k] = errors[k];
        }
    }

    pub fn edge_count(&self) -> usize {
        self.other.len()
    }

    /// Reading of the estimating agent (tail) of edge `k`.
    pub fn estimating(&self, k: usize) -> f64 {
        self.estimating[k]
    }

    /// Reading of the other endpoint (head) of edge `k`.
    pub fn other(&self, k: usize) -> f64 {
        self.other[k]
    }

    pub fn reading(&self, k: usize, estimating: bool) -> f64 {
        if estimating {
            self.estimating[k]
        } else {
            self.other[k]
        }
    }
}

/// Per-edge estimator states `ξ_k ∈ R^{2p+1}`, stacked in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorBank {
    state_dim: usize,
    xi: Vec<f64>,
}

impl EstimatorBank {
    pub fn zeros(edge_count: usize, basis: &InternalModelBasis) -> Self {
        Self {
            state_dim: basis.state_dim(),
            xi: vec![0.0; edge_count * basis.state_dim()],
        }
    }

    pub fn from_states(edge_count: usize, basis: &InternalModelBasis, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != edge_count * basis.state_dim() {
            return Err(FormationError::DimensionMismatch(format!(
                "estimator bank needs {} entries ({} edges × {}), got {}",
                edge_count * basis.state_dim(),
                edge_count,
                basis.state_dim(),
                xi.len()
            )));
        }
        Ok(Self {
            state_dim: basis.state_dim(),
            xi,
        })
    }

    pub fn states(&self) -> &[f64] {
        &self.xi
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn edge_count(&self) -> usize {
        self.xi.len() / self.state_dim
    }

    /// `μ̂ = Bᵀξ`.
    pub fn outputs(&self, basis: &InternalModelBasis) -> DVector<f64> {
        DVector::from_iterator(
            self.edge_count(),
            self.xi.chunks(self.state_dim).map(|s| basis.output(s)),
        )
    }
}

pub(crate) fn errors_into(
    graph: &FormationGraph,
    dim: usize,
    x: &[f64],
    distances: &[f64],
    out: &mut [f64],
) {
    for (k, e) in graph.edges().iter().enumerate() {
        let mut sq = 0.0;
        for d in 0..dim {
            let diff = x[e.tail * dim + d] - x[e.head * dim + d];
            sq += diff * diff;
        }
        out[k] = sq - distances[k] * distances[k];
    }
}

/// Per-agent evaluation of the gradient law, plus the `z_k μ̂_k` correction
/// on estimated edges when `mu_hat` is given.
pub(crate) fn velocities_into(
    graph: &FormationGraph,
    dim: usize,
    x: &[f64],
    view: &MeasurementView,
    mu_hat: Option<&[f64]>,
    out: &mut [f64],
) {
    for i in 0..graph.vertex_count() {
        let ui = &mut out[i * dim..(i + 1) * dim];
        ui.fill(0.0);
        for inc in graph.incident(i) {
            let j = inc.neighbor;
            let mut gain = -view.reading(inc.edge, inc.estimating);
            if inc.estimating {
                if let Some(mh) = mu_hat {
                    gain += mh[inc.edge];
                }
            }
            for d in 0..dim {
                ui[d] += gain * (x[i * dim + d] - x[j * dim + d]);
            }
        }
    }
}

/// `ξ̇_k = Λξ_k + κB_k(estimating reading - μ̂_k)`.
pub(crate) fn estimator_derivative_into(
    view: &MeasurementView,
    xi: &[f64],
    mu_hat: &[f64],
    kappa: f64,
    basis: &InternalModelBasis,
    out: &mut [f64],
) {
    let d = basis.state_dim();
    let b2 = basis.b2();
    for k in 0..view.edge_count() {
        let s = &xi[k * d..(k + 1) * d];
        let o = &mut out[k * d..(k + 1) * d];
        o.fill(0.0);
        basis.apply_lambda(s, o);
        let innovation = kappa * (view.estimating(k) - mu_hat[k]);
        o[0] += innovation * basis.b1();
        for (oi, b) in o[1..].iter_mut().zip(b2) {
            *oi += innovation * b;
        }
    }
}

/// `e_k = ||z_k||² - d_k²`.
pub fn consistent_errors(fw: &Framework) -> DVector<f64> {
    let mut e = DVector::zeros(fw.graph().edge_count());
    errors_into(
        fw.graph(),
        fw.dim(),
        fw.positions().as_slice(),
        fw.target_distances(),
        e.as_mut_slice(),
    );
    e
}

/// Readings at time `t` with `μ` taken from the closed-form model.
pub fn measurement_view(fw: &Framework, spec: &DisturbanceSpec, t: f64) -> Result<MeasurementView> {
    if spec.edge_count() != fw.graph().edge_count() {
        return Err(FormationError::DimensionMismatch(format!(
            "disturbance covers {} edges, framework has {}",
            spec.edge_count(),
            fw.graph().edge_count()
        )));
    }
    let e = consistent_errors(fw);
    let mu = mu_closed_form(spec, t);
    Ok(MeasurementView::from_errors(e.as_slice(), mu.as_slice()))
}

fn check_view(fw: &Framework, view: &MeasurementView) -> Result<()> {
    if view.edge_count() != fw.graph().edge_count() {
        return Err(FormationError::DimensionMismatch(format!(
            "view covers {} edges, framework has {}",
            view.edge_count(),
            fw.graph().edge_count()
        )));
    }
    Ok(())
}

/// Gradient law; returns the stacked velocities `(u_1, …, u_n)`.
pub fn gradient_control(fw: &Framework, view: &MeasurementView) -> Result<DVector<f64>> {
    check_view(fw, view)?;
    let mut u = DVector::zeros(fw.dim() * fw.agent_count());
    velocities_into(
        fw.graph(),
        fw.dim(),
        fw.positions().as_slice(),
        view,
        None,
        u.as_mut_slice(),
    );
    Ok(u)
}

/// Estimator-based law; returns stacked velocities and the bank derivative `ξ̇`.
pub fn estimator_control(
    fw: &Framework,
    view: &MeasurementView,
    bank: &EstimatorBank,
    config: &ControllerConfig,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_view(fw, view)?;
    if config.mode != ControlMode::Estimator {
        return Err(FormationError::InvalidController(
            "estimator law requested with estimator disabled".into(),
        ));
    }
    if bank.state_dim() != config.basis.state_dim() || bank.edge_count() != fw.graph().edge_count() {
        return Err(FormationError::DimensionMismatch(format!(
            "bank holds {} edges × {} states, expected {} × {}",
            bank.edge_count(),
            bank.state_dim(),
            fw.graph().edge_count(),
            config.basis.state_dim()
        )));
    }
    let mu_hat = bank.outputs(&config.basis);
    let mut u = DVector::zeros(fw.dim() * fw.agent_count());
    velocities_into(
        fw.graph(),
        fw.dim(),
        fw.positions().as_slice(),
        view,
        Some(mu_hat.as_slice()),
        u.as_mut_slice(),
    );
    let mut xi_dot = DVector::zeros(bank.states().len());
    estimator_derivative_into(
        view,
        bank.states(),
        mu_hat.as_slice(),
        config.kappa,
        &config.basis,
        xi_dot.as_mut_slice(),
    );
    Ok((u, xi_dot))
}
