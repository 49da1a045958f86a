//! Fixed-step simulation of the closed loop.
//!
//! The integrated state is `(x, ξ, w)`: agent positions, estimator bank and
//! exosystem. The exosystem is integrated alongside the agents rather than
//! sampled from its closed form, and `μ = Bᵀw` is read from it.

use serde::Serialize;

use crate::controller::{
    errors_into, estimator_derivative_into, velocities_into, ControlMode, ControllerConfig,
    MeasurementView,
};
use crate::disturbance::{exosystem_initial_state, DisturbanceSpec};
use crate::rigidity::FormationGraph;
use crate::{FormationError, Result};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e9;
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;
pub const MIN_WINDOW_SAMPLES: usize = 50;

/// Everything that defines the closed-loop vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    graph: FormationGraph,
    dim: usize,
    distances: Vec<f64>,
    disturbance: DisturbanceSpec,
    controller: ControllerConfig,
}

impl ClosedLoop {
    pub fn new(
        graph: FormationGraph,
        dim: usize,
        distances: Vec<f64>,
        disturbance: DisturbanceSpec,
        controller: ControllerConfig,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(FormationError::UnsupportedDimension(dim));
        }
        if distances.len() != graph.edge_count() {
            return Err(FormationError::DimensionMismatch(format!(
                "{} distances for {} edges",
                distances.len(),
                graph.edge_count()
            )));
        }
        if distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(FormationError::InvalidFramework(
                "target distances must be positive".into(),
            ));
        }
        if disturbance.edge_count() != graph.edge_count() {
            return Err(FormationError::DimensionMismatch(format!(
                "disturbance covers {} edges, graph has {}",
                disturbance.edge_count(),
                graph.edge_count()
            )));
        }
        if disturbance.frequencies() != controller.basis.frequencies() {
            return Err(FormationError::DimensionMismatch(
                "disturbance and internal model use different frequencies".into(),
            ));
        }
        Ok(Self {
            graph,
            dim,
            distances,
            disturbance,
            controller,
        })
    }

    pub fn graph(&self) -> &FormationGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn disturbance(&self) -> &DisturbanceSpec {
        &self.disturbance
    }

    pub fn controller(&self) -> &ControllerConfig {
        &self.controller
    }

    fn position_len(&self) -> usize {
        self.dim * self.graph.vertex_count()
    }

    fn bank_len(&self) -> usize {
        self.graph.edge_count() * self.controller.basis.state_dim()
    }

    /// State at `t = 0` with `w(0)` matching the disturbance and `ξ(0)`
    /// defaulting to zero.
    pub fn initial_state(&self, x0: Vec<f64>, xi0: Option<Vec<f64>>) -> Result<SimState> {
        if x0.len() != self.position_len() {
            return Err(FormationError::DimensionMismatch(format!(
                "{} coordinates for {} agents in R^{}",
                x0.len(),
                self.graph.vertex_count(),
                self.dim
            )));
        }
        let xi = xi0.unwrap_or_else(|| vec![0.0; self.bank_len()]);
        if xi.len() != self.bank_len() {
            return Err(FormationError::DimensionMismatch(format!(
                "estimator state has {} entries, expected {}",
                xi.len(),
                self.bank_len()
            )));
        }
        if x0.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(FormationError::DimensionMismatch(
                "initial state has non-finite entries".into(),
            ));
        }
        let w = exosystem_initial_state(&self.disturbance, &self.controller.basis)?.w;
        Ok(SimState { t: 0.0, x: x0, xi, w })
    }
}

/// Closed-loop state `(t, x, ξ, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
}

/// Time derivative of `(x, ξ, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub w: Vec<f64>,
}

/// Scratch buffers for repeated field evaluations.
struct Workspace {
    e: Vec<f64>,
    mu: Vec<f64>,
    mu_hat: Vec<f64>,
    view: MeasurementView,
}

impl Workspace {
    fn new(ne: usize) -> Self {
        Self {
            e: vec![0.0; ne],
            mu: vec![0.0; ne],
            mu_hat: vec![0.0; ne],
            view: MeasurementView::from_errors(&vec![0.0; ne], &vec![0.0; ne]),
        }
    }
}

/// Splits a packed `[x | ξ | w]` vector.
fn split(sys: &ClosedLoop, y: &[f64]) -> (usize, usize) {
    let nx = sys.position_len();
    let nb = sys.bank_len();
    debug_assert_eq!(y.len(), nx + 2 * nb);
    (nx, nx + nb)
}

fn field(sys: &ClosedLoop, ws: &mut Workspace, y: &[f64], dy: &mut [f64]) {
    let (a, b) = split(sys, y);
    let (x, xi, w) = (&y[..a], &y[a..b], &y[b..]);
    let (dx, rest) = dy.split_at_mut(a);
    let (dxi, dw) = rest.split_at_mut(b - a);
    let basis = &sys.controller.basis;
    let d = basis.state_dim();

    errors_into(&sys.graph, sys.dim, x, &sys.distances, &mut ws.e);
    for (k, m) in ws.mu.iter_mut().enumerate() {
        *m = basis.output(&w[k * d..(k + 1) * d]);
    }
    ws.view.update(&ws.e, &ws.mu);

    match sys.controller.mode {
        ControlMode::GradientOnly => {
            velocities_into(&sys.graph, sys.dim, x, &ws.view, None, dx);
            dxi.fill(0.0);
        }
        ControlMode::Estimator => {
            for (k, m) in ws.mu_hat.iter_mut().enumerate() {
                *m = basis.output(&xi[k * d..(k + 1) * d]);
            }
            velocities_into(&sys.graph, sys.dim, x, &ws.view, Some(&ws.mu_hat), dx);
            estimator_derivative_into(&ws.view, xi, &ws.mu_hat, sys.controller.kappa, basis, dxi);
        }
    }
    dw.fill(0.0);
    for k in 0..sys.graph.edge_count() {
        basis.apply_lambda(&w[k * d..(k + 1) * d], &mut dw[k * d..(k + 1) * d]);
    }
}

fn pack(state: &SimState) -> Vec<f64> {
    let mut y = Vec::with_capacity(state.x.len() + state.xi.len() + state.w.len());
    y.extend_from_slice(&state.x);
    y.extend_from_slice(&state.xi);
    y.extend_from_slice(&state.w);
    y
}

fn check_state(sys: &ClosedLoop, state: &SimState) -> Result<()> {
    if state.x.len() != sys.position_len()
        || state.xi.len() != sys.bank_len()
        || state.w.len() != sys.bank_len()
    {
        return Err(FormationError::DimensionMismatch(
            "state does not match the closed loop".into(),
        ));
    }
    Ok(())
}

/// `d/dt (x, ξ, w)`; `ξ̇ = 0` when the estimator is disabled.
pub fn closed_loop_derivative(sys: &ClosedLoop, state: &SimState) -> Result<StateDerivative> {
    check_state(sys, state)?;
    let y = pack(state);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(FormationError::Diverged {
            t: state.t,
            reason: "state has non-finite entries".into(),
        });
    }
    let mut dy = vec![0.0; y.len()];
    field(sys, &mut Workspace::new(sys.graph.edge_count()), &y, &mut dy);
    let (a, b) = split(sys, &y);
    Ok(StateDerivative {
        x: dy[..a].to_vec(),
        xi: dy[a..b].to_vec(),
        w: dy[b..].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Record a sample every this many steps.
    pub output_every: usize,
    /// Abort once `||x||` exceeds this.
    pub divergence_bound: f64,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, output_every: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            t_end,
            output_every,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(FormationError::InvalidScenario(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end > self.dt) {
            return Err(FormationError::InvalidScenario(format!(
                "t_end must exceed dt, got {}",
                self.t_end
            )));
        }
        if self.output_every == 0 {
            return Err(FormationError::InvalidScenario("output_every must be at least 1".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(FormationError::InvalidScenario("divergence bound must be positive".into()));
        }
        Ok(())
    }

    /// Number of integration steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// One recorded instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    /// `||u_i||` per agent.
    pub speeds: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_hat: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `||w - ξ||`.
    pub theta_norm: f64,
}

impl Sample {
    pub fn error_norm(&self) -> f64 {
        norm(&self.e)
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }

    pub fn alpha_norm(&self) -> f64 {
        norm(&self.alpha)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub t: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub agents: usize,
    pub dim: usize,
    pub edges: usize,
    pub samples: Vec<Sample>,
    pub final_state: SimState,
    /// Set when the run was aborted; samples stop at the last good step.
    pub divergence: Option<Divergence>,
}

impl Trajectory {
    /// CSV header: `t, x_i_d…, e_k…, speed_i…, mu_k…, muhat_k…, alpha_k…`.
    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        for i in 1..=self.agents {
            for d in 1..=self.dim {
                h.push(format!("x_{i}_{d}"));
            }
        }
        for prefix in ["e", "speed", "mu", "muhat", "alpha"] {
            let count = if prefix == "speed" { self.agents } else { self.edges };
            h.extend((1..=count).map(|k| format!("{prefix}_{k}")));
        }
        h
    }

    /// Writes the trajectory with 17 significant digits per value.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.csv_header())?;
        for s in &self.samples {
            let row = std::iter::once(s.t)
                .chain(s.x.iter().copied())
                .chain(s.e.iter().copied())
                .chain(s.speeds.iter().copied())
                .chain(s.mu.iter().copied())
                .chain(s.mu_hat.iter().copied())
                .chain(s.alpha.iter().copied())
                .map(|v| format!("{v:.16e}"));
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn record(sys: &ClosedLoop, ws: &mut Workspace, t: f64, y: &[f64], dy: &mut [f64]) -> Sample {
    field(sys, ws, y, dy);
    let (a, b) = split(sys, y);
    let basis = &sys.controller.basis;
    let d = basis.state_dim();
    let ne = sys.graph.edge_count();
    let (xi, w) = (&y[a..b], &y[b..]);
    let mu_hat: Vec<f64> = (0..ne).map(|k| basis.output(&xi[k * d..(k + 1) * d])).collect();
    let alpha = (0..ne).map(|k| ws.e[k] + ws.mu[k] - mu_hat[k]).collect();
    let theta_norm = w
        .iter()
        .zip(xi)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Sample {
        t,
        x: y[..a].to_vec(),
        e: ws.e.clone(),
        speeds: dy[..a].chunks(sys.dim).map(norm).collect(),
        mu: ws.mu.clone(),
        mu_hat,
        alpha,
        theta_norm,
    }
}

/// Classical RK4 from `init` to `cfg.t_end`. Runs are bitwise deterministic.
///
/// Divergence (non-finite state or `||x||` above the guard) ends the run
/// early and is reported on the trajectory, not as an error.
pub fn integrate(sys: &ClosedLoop, init: &SimState, cfg: &SimConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_state(sys, init)?;
    let n = init.x.len() + init.xi.len() + init.w.len();
    let mut ws = Workspace::new(sys.graph.edge_count());
    let mut y = pack(init);
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let dt = cfg.dt;
    let steps = cfg.steps();
    let mut samples = Vec::with_capacity(steps / cfg.output_every + 1);
    let mut divergence = None;
    let mut t = init.t;
    let mut last_step = 0;

    if y.iter().any(|v| !v.is_finite()) {
        return Err(FormationError::Diverged {
            t,
            reason: "initial state has non-finite entries".into(),
        });
    }
    samples.push(record(sys, &mut ws, t, &y, &mut k1));

    for step in 1..=steps {
        field(sys, &mut ws, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        field(sys, &mut ws, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        field(sys, &mut ws, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + dt * k3[i];
        }
        field(sys, &mut ws, &tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = init.t + step as f64 * dt;
        if tmp.iter().any(|v| !v.is_finite()) {
            divergence = Some(Divergence {
                t: t_next,
                reason: "state became non-finite".into(),
            });
            break;
        }
        let x_norm = norm(&tmp[..init.x.len()]);
        if x_norm > cfg.divergence_bound {
            divergence = Some(Divergence {
                t: t_next,
                reason: format!("||x|| = {x_norm:e} exceeds {:e}", cfg.divergence_bound),
            });
            break;
        }
        std::mem::swap(&mut y, &mut tmp);
        t = t_next;
        last_step = step;
        if step % cfg.output_every == 0 {
            samples.push(record(sys, &mut ws, t, &y, &mut k1));
        }
    }
    if divergence.is_some() {
        log::warn!("run aborted after {last_step} steps at t = {t}");
    }

    let (a, b) = split(sys, &y);
    Ok(Trajectory {
        agents: sys.graph.vertex_count(),
        dim: sys.dim,
        edges: sys.graph.edge_count(),
        samples,
        final_state: SimState {
            t,
            x: y[..a].to_vec(),
            xi: y[a..b].to_vec(),
            w: y[b..].to_vec(),
        },
        divergence,
    })
}

/// Least-squares fit of `log||e||` against time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `log||e||` (1/s); negative for decay.
    pub slope: f64,
    pub r_squared: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunVerdict {
    pub converged: bool,
    pub final_error_norm: f64,
    pub final_max_speed: f64,
    /// Exponential rate fit of `||e||`; absent when there is no decay to fit.
    pub rate: Option<RateFit>,
    pub orbit_detected: bool,
    /// Mean speed over agents and window, reported when an orbit is detected.
    pub steady_speed: Option<f64>,
    /// Per-agent mean speed over the window.
    pub mean_speeds: Vec<f64>,
    /// Per-agent coefficient of variation of the speed over the window.
    pub speed_cv: Vec<f64>,
    /// Largest `|ė_k|` over the window, by finite differences of the samples.
    pub max_error_drift: f64,
    /// `||μ̂ - μ|| / ||μ||` at the last sample (absent when `μ = 0`).
    pub estimate_error: Option<f64>,
    pub divergence: Option<Divergence>,
}

/// Decay above this fraction of the peak counts as transient.
const FIT_START_FRACTION: f64 = 1e-2;
/// Below this the error is at round-off and excluded from the fit.
const FIT_FLOOR: f64 = 1e-9;
const MIN_FIT_SAMPLES: usize = 10;

/// Fits `log||e||` over the mid-run: from the first drop below 1% of the
/// peak until the error reaches the round-off floor.
pub fn fit_rate(samples: &[Sample]) -> Option<RateFit> {
    let norms: Vec<f64> = samples.iter().map(Sample::error_norm).collect();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    if peak <= FIT_FLOOR {
        return None;
    }
    let start = norms.iter().position(|&v| v < FIT_START_FRACTION * peak)?;
    let stop = norms[start..]
        .iter()
        .position(|&v| v < FIT_FLOOR)
        .map_or(norms.len(), |i| start + i);
    if stop - start < MIN_FIT_SAMPLES {
        return None;
    }
    let ts: Vec<f64> = samples[start..stop].iter().map(|s| s.t).collect();
    let ls: Vec<f64> = norms[start..stop].iter().map(|v| v.ln()).collect();
    let n = ts.len() as f64;
    let (mt, ml) = (ts.iter().sum::<f64>() / n, ls.iter().sum::<f64>() / n);
    let stt: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
    let stl: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let sll: f64 = ls.iter().map(|l| (l - ml) * (l - ml)).sum();
    let slope = stl / stt;
    let r_squared = if sll > 0.0 { stl * stl / (stt * sll) } else { 1.0 };
    Some(RateFit {
        slope,
        r_squared,
        t_start: ts[0],
        t_stop: *ts.last().unwrap(),
        samples: ts.len(),
    })
}

/// Regime classification over the last `window_fraction` of the samples.
pub fn run_verdict(traj: &Trajectory, window_fraction: f64, tol: f64) -> Result<RunVerdict> {
    let total = traj.samples.len();
    let len = ((total as f64) * window_fraction).ceil() as usize;
    if len < MIN_WINDOW_SAMPLES || !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(FormationError::WindowTooShort {
            got: len.min(total),
            need: MIN_WINDOW_SAMPLES,
        });
    }
    let window = &traj.samples[total - len..];
    let last = window.last().expect("window is non-empty");

    let converged = window
        .iter()
        .all(|s| s.error_norm() < tol && s.max_speed() < tol);

    let mut mean_speeds = Vec::with_capacity(traj.agents);
    let mut speed_cv = Vec::with_capacity(traj.agents);
    for i in 0..traj.agents {
        let n = window.len() as f64;
        let mean = window.iter().map(|s| s.speeds[i]).sum::<f64>() / n;
        let var = window.iter().map(|s| (s.speeds[i] - mean).powi(2)).sum::<f64>() / n;
        mean_speeds.push(mean);
        speed_cv.push(if mean > 0.0 { var.sqrt() / mean } else { f64::INFINITY });
    }
    let orbit_detected = !converged
        && mean_speeds.iter().all(|&m| m > 10.0 * tol)
        && speed_cv.iter().all(|&c| c < 1e-3);
    let steady_speed =
        orbit_detected.then(|| mean_speeds.iter().sum::<f64>() / mean_speeds.len() as f64);

    let max_error_drift = window
        .windows(2)
        .flat_map(|p| {
            let dt = p[1].t - p[0].t;
            p[0].e.iter().zip(&p[1].e).map(move |(a, b)| ((b - a) / dt).abs())
        })
        .fold(0.0, f64::max);

    let mu_norm = norm(&last.mu);
    let estimate_error = (mu_norm > 0.0).then(|| {
        let diff: Vec<f64> = last.mu.iter().zip(&last.mu_hat).map(|(a, b)| a - b).collect();
        norm(&diff) / mu_norm
    });

    Ok(RunVerdict {
        converged: converged && traj.divergence.is_none(),
        final_error_norm: last.error_norm(),
        final_max_speed: last.max_speed(),
        rate: fit_rate(&traj.samples),
        orbit_detected,
        steady_speed,
        mean_speeds,
        speed_cv,
        max_error_drift,
        estimate_error,
        divergence: traj.divergence.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disturbance::InternalModelBasis;

    fn triangle_loop(mode: ControlMode, spec: DisturbanceSpec) -> ClosedLoop {
        let g = FormationGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        let basis = InternalModelBasis::default_for(spec.frequencies()).unwrap();
        let cfg = ControllerConfig::new(mode, 1.0, basis).unwrap();
        ClosedLoop::new(g, 2, vec![1.0, 1.0, 1.0], spec, cfg).unwrap()
    }

    fn near_triangle() -> Vec<f64> {
        vec![0.05, -0.02, 1.1, 0.03, 0.45, 0.8]
    }

    #[test]
    fn gradient_flow_converges_on_a_triangle() {
        let sys = triangle_loop(ControlMode::GradientOnly, DisturbanceSpec::zero(3));
        let init = sys.initial_state(near_triangle(), None).unwrap();
        let traj = integrate(&sys, &init, &SimConfig::new(1e-3, 50.0, 100).unwrap()).unwrap();
        assert!(traj.divergence.is_none());
        assert!(traj.samples.last().unwrap().error_norm() < 1e-8);
        let v = run_verdict(&traj, 0.2, 1e-6).unwrap();
        assert!(v.converged && !v.orbit_detected);
    }

    #[test]
    fn equilibrium_start_has_no_rate() {
        let sys = triangle_loop(ControlMode::GradientOnly, DisturbanceSpec::zero(3));
        let x = vec![0.0, 0.0, 1.0, 0.0, 0.5, 3f64.sqrt() / 2.0];
        let init = sys.initial_state(x, None).unwrap();
        let traj = integrate(&sys, &init, &SimConfig::new(1e-2, 10.0, 1).unwrap()).unwrap();
        let v = run_verdict(&traj, 0.2, 1e-6).unwrap();
        assert!(v.converged);
        assert!(v.rate.is_none());
    }

    #[test]
    fn short_window_is_rejected() {
        let sys = triangle_loop(ControlMode::GradientOnly, DisturbanceSpec::zero(3));
        let init = sys.initial_state(near_triangle(), None).unwrap();
        let traj = integrate(&sys, &init, &SimConfig::new(1e-2, 1.0, 1).unwrap()).unwrap();
        assert!(matches!(
            run_verdict(&traj, 0.2, 1e-6),
            Err(FormationError::WindowTooShort { .. })
        ));
    }

    #[test]
    fn divergence_is_reported_with_partial_output() {
        let sys = triangle_loop(ControlMode::GradientOnly, DisturbanceSpec::zero(3));
        let init = sys.initial_state(vec![0.0, 0.0, 1e4, 0.0, 0.0, 1e4], None).unwrap();
        let traj = integrate(&sys, &init, &SimConfig::new(1e-3, 1.0, 1).unwrap()).unwrap();
        assert!(traj.divergence.is_some());
        assert!(traj.samples.len() < 1001);
    }

    #[test]
    fn csv_header_layout() {
        let sys = triangle_loop(ControlMode::GradientOnly, DisturbanceSpec::zero(3));
        let init = sys.initial_state(near_triangle(), None).unwrap();
        let traj = integrate(&sys, &init, &SimConfig::new(1e-2, 0.1, 5).unwrap()).unwrap();
        let h = traj.csv_header();
        assert_eq!(h.len(), 1 + 6 + 3 + 3 + 3 + 3 + 3);
        assert_eq!(&h[..3], &["t", "x_1_1", "x_1_2"]);
        assert_eq!(h[7], "e_1");
        assert_eq!(h[10], "speed_1");
        assert_eq!(h.last().unwrap(), "alpha_3");
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + traj.samples.len());
    }

    #[test]
    fn derivative_vanishes_on_the_manifold() {
        let spec = DisturbanceSpec::constant(&[0.3, -0.1, 0.2]).unwrap();
        let sys = triangle_loop(ControlMode::Estimator, spec);
        let x = vec![0.0, 0.0, 1.0, 0.0, 0.5, 3f64.sqrt() / 2.0];
        let mut s = sys.initial_state(x, None).unwrap();
        s.xi = s.w.clone();
        let d = closed_loop_derivative(&sys, &s).unwrap();
        assert!(d.x.iter().chain(&d.xi).all(|v| v.abs() < 1e-14));
    }
}
