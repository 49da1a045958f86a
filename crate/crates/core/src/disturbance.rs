//! Measurement inconsistency model.
//!
//! Each edge carries a discrepancy `μ_k(t) = α_k + Σ_i β_{k,i} sin(ω_i t + φ_{k,i})`
//! over a frequency set shared by all edges (an edge that lacks a frequency
//! just has a zero amplitude there). The same signal is the output
//! `μ_k = B_kᵀ w_k` of the autonomous exosystem `ẇ_k = Λ w_k`, where the state
//! is laid out as `[constant | p "sine" channels | p "cosine" channels]`.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{numeric_rank, DEFAULT_RANK_TOL};
use crate::{FormationError, Result};

/// One sinusoidal component of an edge's discrepancy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    /// Index into the shared frequency list.
    pub freq_index: usize,
    pub amplitude: f64,
    /// Phase in radians.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeDisturbance {
    /// Constant offset (squared-length units).
    pub alpha: f64,
    pub sinusoids: Vec<Sinusoid>,
}

impl EdgeDisturbance {
    pub fn constant(alpha: f64) -> Self {
        Self {
            alpha,
            sinusoids: Vec::new(),
        }
    }
}

/// Validated discrepancy model over a shared set of distinct positive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceSpec {
    frequencies: Vec<f64>,
    edges: Vec<EdgeDisturbance>,
    // dense per-edge (amplitude, phase) per frequency
    amplitudes: Vec<Vec<f64>>,
    phases: Vec<Vec<f64>>,
}

fn validate_frequencies(frequencies: &[f64]) -> Result<()> {
    for (i, &w) in frequencies.iter().enumerate() {
        if !(w.is_finite() && w > 0.0) {
            return Err(FormationError::InvalidDisturbance(format!(
                "frequency {} must be positive, got {w}",
                i
            )));
        }
        if frequencies[..i].contains(&w) {
            return Err(FormationError::InvalidDisturbance(format!(
                "frequency {w} is listed twice"
            )));
        }
    }
    Ok(())
}

impl DisturbanceSpec {
    pub fn new(frequencies: Vec<f64>, edges: Vec<EdgeDisturbance>) -> Result<Self> {
        validate_frequencies(&frequencies)?;
        let p = frequencies.len();
        let mut amplitudes = vec![vec![0.0; p]; edges.len()];
        let mut phases = vec![vec![0.0; p]; edges.len()];
        let mut normalized = Vec::with_capacity(edges.len());
        for (k, edge) in edges.into_iter().enumerate() {
            if !edge.alpha.is_finite() {
                return Err(FormationError::InvalidDisturbance(format!(
                    "edge {} offset must be finite",
                    k + 1
                )));
            }
            let mut seen = vec![false; p];
            let mut sinusoids = Vec::with_capacity(edge.sinusoids.len());
            for s in edge.sinusoids {
                if s.freq_index >= p {
                    return Err(FormationError::InvalidDisturbance(format!(
                        "edge {} references frequency index {} but only {p} are defined",
                        k + 1,
                        s.freq_index
                    )));
                }
                if seen[s.freq_index] {
                    return Err(FormationError::InvalidDisturbance(format!(
                        "edge {} lists frequency index {} twice",
                        k + 1,
                        s.freq_index
                    )));
                }
                if !(s.amplitude.is_finite() && s.phase.is_finite()) {
                    return Err(FormationError::InvalidDisturbance(format!(
                        "edge {} has a non-finite sinusoid",
                        k + 1
                    )));
                }
                seen[s.freq_index] = true;
                // β < 0 is folded into the phase
                let s = if s.amplitude < 0.0 {
                    Sinusoid {
                        amplitude: -s.amplitude,
                        phase: s.phase + std::f64::consts::PI,
                        ..s
                    }
                } else {
                    s
                };
                amplitudes[k][s.freq_index] = s.amplitude;
                phases[k][s.freq_index] = s.phase;
                sinusoids.push(s);
            }
            normalized.push(EdgeDisturbance {
                alpha: edge.alpha,
                sinusoids,
            });
        }
        Ok(Self {
            frequencies,
            edges: normalized,
            amplitudes,
            phases,
        })
    }

    /// Constant discrepancies only (no frequencies).
    pub fn constant(offsets: &[f64]) -> Result<Self> {
        Self::new(
            Vec::new(),
            offsets.iter().map(|&a| EdgeDisturbance::constant(a)).collect(),
        )
    }

    /// Identically zero discrepancy on `edge_count` edges.
    pub fn zero(edge_count: usize) -> Self {
        Self::constant(&vec![0.0; edge_count]).expect("zero disturbance is valid")
    }

    /// Same offsets/sinusoids over an enlarged frequency list (the old list
    /// must be a prefix of the new one).
    pub fn with_frequencies(&self, frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.len() < self.frequencies.len()
            || frequencies[..self.frequencies.len()] != self.frequencies[..]
        {
            return Err(FormationError::InvalidDisturbance(
                "new frequency list must extend the current one".into(),
            ));
        }
        Self::new(frequencies, self.edges.clone())
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[EdgeDisturbance] {
        &self.edges
    }

    pub fn amplitude(&self, k: usize, i: usize) -> f64 {
        self.amplitudes[k][i]
    }

    pub fn phase(&self, k: usize, i: usize) -> f64 {
        self.phases[k][i]
    }

    /// Offsets only, sinusoids dropped.
    pub fn offsets_only(&self) -> Self {
        Self::new(
            self.frequencies.clone(),
            self.edges
                .iter()
                .map(|e| EdgeDisturbance::constant(e.alpha))
                .collect(),
        )
        .expect("offsets of a valid spec are valid")
    }
}

/// `Λ` for the given frequencies: `[[0,0,0],[0,0,-Ω],[0,Ω,0]]`, `Ω = diag(ω)`.
pub fn lambda_matrix(frequencies: &[f64]) -> Result<DMatrix<f64>> {
    validate_frequencies(frequencies)?;
    let p = frequencies.len();
    let mut l = DMatrix::zeros(2 * p + 1, 2 * p + 1);
    for (i, &w) in frequencies.iter().enumerate() {
        l[(1 + i, 1 + p + i)] = -w;
        l[(1 + p + i, 1 + i)] = w;
    }
    Ok(l)
}

/// Output vector `B_k = [b1; b2]` and the frequencies of the internal model.
///
/// `b2[i]` pairs with the "sine" channel of frequency `i` and `b2[p + i]` with
/// its "cosine" channel.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalModelBasis {
    b1: f64,
    b2: Vec<f64>,
    frequencies: Vec<f64>,
    lambda: DMatrix<f64>,
}

impl InternalModelBasis {
    pub fn new(b1: f64, b2: Vec<f64>, frequencies: Vec<f64>) -> Result<Self> {
        let lambda = lambda_matrix(&frequencies)?;
        if b2.len() != 2 * frequencies.len() {
            return Err(FormationError::DimensionMismatch(format!(
                "b2 has {} entries, expected {} for {} frequencies",
                b2.len(),
                2 * frequencies.len(),
                frequencies.len()
            )));
        }
        if !b1.is_finite() || b2.iter().any(|v| !v.is_finite()) {
            return Err(FormationError::InvalidController(
                "output vector must be finite".into(),
            ));
        }
        Ok(Self {
            b1,
            b2,
            frequencies,
            lambda,
        })
    }

    /// `b1 = 1`, `b2 = [1, …, 1, 0, …, 0]`.
    pub fn default_for(frequencies: &[f64]) -> Result<Self> {
        let p = frequencies.len();
        let mut b2 = vec![0.0; 2 * p];
        b2[..p].fill(1.0);
        Self::new(1.0, b2, frequencies.to_vec())
    }

    /// `2p + 1`.
    pub fn state_dim(&self) -> usize {
        2 * self.frequencies.len() + 1
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    /// `B_k` as a column vector.
    pub fn output_vector(&self) -> DVector<f64> {
        let mut b = DVector::zeros(self.state_dim());
        b[0] = self.b1;
        b.rows_mut(1, self.b2.len()).copy_from_slice(&self.b2);
        b
    }

    /// `B_kᵀ s` for one per-edge state slice.
    pub fn output(&self, state: &[f64]) -> f64 {
        self.b1 * state[0]
            + self
                .b2
                .iter()
                .zip(&state[1..])
                .map(|(b, s)| b * s)
                .sum::<f64>()
    }

    /// `out += Λ s`, exploiting the rotation-block structure.
    pub fn apply_lambda(&self, state: &[f64], out: &mut [f64]) {
        let p = self.frequencies.len();
        for (i, &w) in self.frequencies.iter().enumerate() {
            out[1 + i] -= w * state[1 + p + i];
            out[1 + p + i] += w * state[1 + i];
        }
    }
}

/// Whether `(B_kᵀ, Λ)` is observable: `[Bᵀ; BᵀΛ; …; BᵀΛ^{2p}]` has full
/// column rank.
pub fn check_observability(basis: &InternalModelBasis) -> bool {
    let n = basis.state_dim();
    let bt = basis.output_vector().transpose();
    let mut obs = DMatrix::zeros(n, n);
    let mut row = bt.clone();
    for r in 0..n {
        obs.set_row(r, &row);
        row = &row * basis.lambda();
    }
    numeric_rank(&obs, DEFAULT_RANK_TOL) == n
}

/// Exosystem state `w = col(w_k)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExosystemState {
    pub t: f64,
    /// Stacked per-edge states, `2p + 1` entries each.
    pub w: Vec<f64>,
}

impl ExosystemState {
    pub fn edge_state(&self, k: usize, state_dim: usize) -> &[f64] {
        &self.w[k * state_dim..(k + 1) * state_dim]
    }

    /// `μ = Bᵀw`.
    pub fn output(&self, basis: &InternalModelBasis) -> DVector<f64> {
        let d = basis.state_dim();
        DVector::from_iterator(
            self.w.len() / d,
            self.w.chunks(d).map(|s| basis.output(s)),
        )
    }
}

/// `w(0)` whose output under `ẇ = Λw` reproduces the closed-form discrepancy.
///
/// Per frequency with sub-vector `(b_s, b_c)` and sine/cosine channels
/// `(s, c)`, the output is `(b_s s₀ + b_c c₀) cos ωt + (b_c s₀ - b_s c₀) sin ωt`,
/// which must equal `β sin φ cos ωt + β cos φ sin ωt`.
pub fn exosystem_initial_state(
    spec: &DisturbanceSpec,
    basis: &InternalModelBasis,
) -> Result<ExosystemState> {
    if spec.frequencies() != basis.frequencies() {
        return Err(FormationError::DimensionMismatch(
            "disturbance and internal model use different frequencies".into(),
        ));
    }
    let p = spec.frequencies().len();
    let d = basis.state_dim();
    let mut w = vec![0.0; d * spec.edge_count()];
    for k in 0..spec.edge_count() {
        let wk = &mut w[k * d..(k + 1) * d];
        let alpha = spec.edges()[k].alpha;
        if alpha != 0.0 {
            if basis.b1() == 0.0 {
                return Err(FormationError::UnrepresentableDisturbance(format!(
                    "edge {} has an offset but b1 = 0",
                    k + 1
                )));
            }
            wk[0] = alpha / basis.b1();
        }
        for i in 0..p {
            let beta = spec.amplitude(k, i);
            if beta == 0.0 {
                continue;
            }
            let (bs, bc) = (basis.b2()[i], basis.b2()[p + i]);
            let det = bs * bs + bc * bc;
            if det == 0.0 {
                return Err(FormationError::UnrepresentableDisturbance(format!(
                    "edge {} has a sinusoid at frequency {} but its b2 sub-vector is zero",
                    k + 1,
                    spec.frequencies()[i]
                )));
            }
            let phi = spec.phase(k, i);
            let (a, b) = (beta * phi.sin(), beta * phi.cos());
            // [[bs, bc], [bc, -bs]] [s0; c0] = [a; b]
            wk[1 + i] = (bs * a + bc * b) / det;
            wk[1 + p + i] = (bc * a - bs * b) / det;
        }
    }
    Ok(ExosystemState { t: 0.0, w })
}

/// `μ(t)` evaluated in closed form.
pub fn mu_closed_form(spec: &DisturbanceSpec, t: f64) -> DVector<f64> {
    let freqs = spec.frequencies();
    DVector::from_iterator(
        spec.edge_count(),
        (0..spec.edge_count()).map(|k| {
            spec.edges()[k].alpha
                + freqs
                    .iter()
                    .enumerate()
                    .map(|(i, w)| spec.amplitude(k, i) * (w * t + spec.phase(k, i)).sin())
                    .sum::<f64>()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn lambda_for_no_frequencies_is_scalar_zero() {
        assert_eq!(lambda_matrix(&[]).unwrap(), DMatrix::zeros(1, 1));
    }

    #[test]
    fn lambda_for_one_frequency() {
        let l = lambda_matrix(&[2.0]).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -2.0, 0.0, 2.0, 0.0]);
        assert_eq!(l, expected);
    }

    #[test]
    fn lambda_rejects_bad_frequencies() {
        assert!(lambda_matrix(&[1.0, 1.0]).is_err());
        assert!(lambda_matrix(&[0.0]).is_err());
        assert!(lambda_matrix(&[-1.0]).is_err());
    }

    #[test]
    fn lambda_rotation_part_is_skew() {
        let l = lambda_matrix(&[0.5, 1.5, 4.0]).unwrap();
        assert_eq!(&l + l.transpose(), DMatrix::zeros(7, 7));
    }

    #[test]
    fn observability_verdicts() {
        let b = InternalModelBasis::new(1.0, vec![1.0, 0.0], vec![1.0]).unwrap();
        assert!(check_observability(&b));
        let b = InternalModelBasis::new(0.0, vec![1.0, 0.0], vec![1.0]).unwrap();
        assert!(!check_observability(&b));
        let b = InternalModelBasis::new(1.0, vec![0.0, 0.0], vec![1.0]).unwrap();
        assert!(!check_observability(&b));
        let b = InternalModelBasis::new(1.0, vec![], vec![]).unwrap();
        assert!(check_observability(&b));
    }

    #[test]
    fn basis_rejects_wrong_b2_length() {
        assert!(InternalModelBasis::new(1.0, vec![1.0], vec![1.0]).is_err());
    }

    #[test]
    fn constant_initial_state() {
        let spec = DisturbanceSpec::constant(&[19.0]).unwrap();
        let basis = InternalModelBasis::default_for(&[]).unwrap();
        let w0 = exosystem_initial_state(&spec, &basis).unwrap();
        assert_eq!(w0.w, vec![19.0]);
        assert_eq!(w0.output(&basis)[0], 19.0);
    }

    #[test]
    fn pure_sine_initial_state() {
        let spec = DisturbanceSpec::new(
            vec![2.0],
            vec![EdgeDisturbance {
                alpha: 0.0,
                sinusoids: vec![Sinusoid { freq_index: 0, amplitude: 1.0, phase: 0.0 }],
            }],
        )
        .unwrap();
        let basis = InternalModelBasis::new(1.0, vec![1.0, 0.0], vec![2.0]).unwrap();
        let w0 = exosystem_initial_state(&spec, &basis).unwrap();
        assert_eq!(w0.w[0], 0.0);
        assert!(w0.w[1].abs() < 1e-15);
        assert_eq!(w0.w[2], -1.0);
    }

    #[test]
    fn zero_disturbance_has_zero_state() {
        let spec = DisturbanceSpec::zero(3).with_frequencies(vec![1.0]).unwrap();
        let basis = InternalModelBasis::default_for(&[1.0]).unwrap();
        let w0 = exosystem_initial_state(&spec, &basis).unwrap();
        assert!(w0.w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unrepresentable_disturbances() {
        let spec = DisturbanceSpec::constant(&[1.0]).unwrap();
        let basis = InternalModelBasis::new(0.0, vec![], vec![]).unwrap();
        assert!(matches!(
            exosystem_initial_state(&spec, &basis),
            Err(FormationError::UnrepresentableDisturbance(_))
        ));
        let spec = DisturbanceSpec::new(
            vec![1.0],
            vec![EdgeDisturbance {
                alpha: 0.0,
                sinusoids: vec![Sinusoid { freq_index: 0, amplitude: 1.0, phase: 0.3 }],
            }],
        )
        .unwrap();
        let basis = InternalModelBasis::new(1.0, vec![0.0, 0.0], vec![1.0]).unwrap();
        assert!(exosystem_initial_state(&spec, &basis).is_err());
    }

    #[test]
    fn closed_form_values() {
        let spec = DisturbanceSpec::constant(&[19.0, 16.0, 19.5, 10.0, 16.0]).unwrap();
        for t in [0.0, 1.0, 123.4] {
            assert_eq!(mu_closed_form(&spec, t).as_slice(), &[19.0, 16.0, 19.5, 10.0, 16.0]);
        }
        let spec = DisturbanceSpec::new(
            vec![1.0],
            vec![EdgeDisturbance {
                alpha: 0.0,
                sinusoids: vec![Sinusoid { freq_index: 0, amplitude: 1.0, phase: FRAC_PI_2 }],
            }],
        )
        .unwrap();
        assert_eq!(mu_closed_form(&spec, 0.0)[0], 1.0);
    }

    #[test]
    fn negative_amplitude_folds_into_phase() {
        let raw = DisturbanceSpec::new(
            vec![1.3],
            vec![EdgeDisturbance {
                alpha: 0.5,
                sinusoids: vec![Sinusoid { freq_index: 0, amplitude: -2.0, phase: 0.4 }],
            }],
        )
        .unwrap();
        assert_eq!(raw.amplitude(0, 0), 2.0);
        for t in [0.0f64, 0.7, 3.1] {
            let direct = 0.5 - 2.0 * (1.3 * t + 0.4).sin();
            assert!((mu_closed_form(&raw, t)[0] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn spec_validation() {
        let bad_index = EdgeDisturbance {
            alpha: 0.0,
            sinusoids: vec![Sinusoid { freq_index: 1, amplitude: 1.0, phase: 0.0 }],
        };
        assert!(DisturbanceSpec::new(vec![1.0], vec![bad_index]).is_err());
        let dup = EdgeDisturbance {
            alpha: 0.0,
            sinusoids: vec![
                Sinusoid { freq_index: 0, amplitude: 1.0, phase: 0.0 },
                Sinusoid { freq_index: 0, amplitude: 2.0, phase: 0.0 },
            ],
        };
        assert!(DisturbanceSpec::new(vec![1.0], vec![dup]).is_err());
    }

    #[test]
    fn exosystem_rotation_matches_closed_form_exactly() {
        // ẇ = Λw has the explicit solution w(t) = exp(Λt) w(0); check the
        // output against μ(t) through that rotation.
        let spec = DisturbanceSpec::new(
            vec![0.7, 2.0],
            vec![EdgeDisturbance {
                alpha: -1.5,
                sinusoids: vec![
                    Sinusoid { freq_index: 0, amplitude: 0.8, phase: 1.1 },
                    Sinusoid { freq_index: 1, amplitude: 2.5, phase: -0.4 },
                ],
            }],
        )
        .unwrap();
        let basis = InternalModelBasis::new(2.0, vec![0.5, -1.0, 0.3, 0.7], vec![0.7, 2.0]).unwrap();
        let w0 = exosystem_initial_state(&spec, &basis).unwrap();
        for t in [0.0f64, 0.3, 5.0, 41.2] {
            let mut w = w0.w.clone();
            for (i, &om) in [0.7, 2.0].iter().enumerate() {
                let (s, c) = (w0.w[1 + i], w0.w[3 + i]);
                w[1 + i] = s * (om * t).cos() - c * (om * t).sin();
                w[3 + i] = c * (om * t).cos() + s * (om * t).sin();
            }
            let y = basis.output(&w);
            assert!((y - mu_closed_form(&spec, t)[0]).abs() < 1e-12, "t = {t}");
        }
    }
}
