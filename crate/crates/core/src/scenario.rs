//! Scenario files and the built-in scenarios.
//!
//! A scenario is a JSON document. Agents, edge endpoints, construction anchors
//! and sinusoid frequency references are 1-based:
//!
//! ```json
//! {
//!   "name": "triangle",
//!   "dim": 2,
//!   "agents": [[0.1, 0.0], [1.0, 0.1], [0.4, 0.9]],
//!   "edges": [{"tail": 1, "head": 2, "distance": 1.0}, ...],
//!   "target_positions": [[0.0, 0.0], [1.0, 0.0], [0.5, 0.866]],
//!   "disturbance": {
//!     "frequencies": [1.0],
//!     "edges": [{"alpha": 0.2, "sinusoids": [{"frequency": 1, "amplitude": 0.1, "phase": 0.0}]}, ...]
//!   },
//!   "controller": {"mode": "estimator", "kappa": 1.0, "b1": 1.0, "b2": [1.0, 0.0]},
//!   "sim": {"dt": 0.001, "t_end": 50.0, "output_every": 10},
//!   "construction": {
//!     "seed": {"edge": {"distance": 1.0}},
//!     "steps": [{"anchors": [1, 2], "distances": [1.0, 1.0]}],
//!     "rule": {"kind": "henneberg_2d", "triangle": {"kind": "cyclic"}}
//!   }
//! }
//! ```
//!
//! `edges[k].tail` is the estimating agent of edge `k`. Omitted disturbance
//! means `μ ≡ 0`; omitted `b1`/`b2` default to `1` and `[1,…,1, 0,…,0]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{AssignmentRule, TriangleRule};
use crate::controller::{ControlMode, ControllerConfig};
use crate::disturbance::{DisturbanceSpec, EdgeDisturbance, InternalModelBasis, Sinusoid};
use crate::rigidity::{ConstructionTrace, Edge, FormationGraph, Framework, Insertion, Seed};
use crate::sim::{ClosedLoop, SimConfig, SimState, DEFAULT_DIVERGENCE_BOUND, DEFAULT_DT};
use crate::{FormationError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub tail: usize,
    pub head: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinusoidSpec {
    /// 1-based index into `frequencies`.
    pub frequency: usize,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDisturbanceSpec {
    #[serde(default)]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sinusoids: Vec<SinusoidSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    #[serde(default)]
    pub frequencies: Vec<f64>,
    /// One entry per edge, or empty for `μ ≡ 0`.
    #[serde(default)]
    pub edges: Vec<EdgeDisturbanceSpec>,
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub mode: ControlMode,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<Vec<f64>>,
    /// Stacked estimator states, `2p + 1` per edge; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_output_every() -> usize {
    10
}

fn default_bound() -> f64 {
    DEFAULT_DIVERGENCE_BOUND
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_bound")]
    pub divergence_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedSpec {
    Edge { distance: f64 },
    Tetrahedron { distances: [f64; 6] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    pub anchors: Vec<usize>,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TriangleSpec {
    Cyclic,
    Acyclic {
        root: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        other: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    TriangleCyclic,
    TriangleAcyclic {
        root: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        other: Option<usize>,
    },
    Henneberg2d { triangle: TriangleSpec },
    Tetrahedron,
    Growth3d,
}

/// Optional construction record: a trace plus the selection rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<StepSpec>,
    pub rule: RuleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    /// Initial positions.
    pub agents: Vec<Vec<f64>>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_positions: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    pub controller: ControllerSection,
    pub sim: SimSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionSection>,
}

fn invalid(msg: impl Into<String>) -> FormationError {
    FormationError::InvalidScenario(msg.into())
}

fn one_based(v: usize, count: usize, what: &str) -> Result<usize> {
    if v == 0 || v > count {
        return Err(invalid(format!("{what} {v} is out of range 1..={count}")));
    }
    Ok(v - 1)
}

fn flatten(points: &[Vec<f64>], dim: usize, what: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(points.len() * dim);
    for (i, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(invalid(format!(
                "{what}[{}] has {} coordinates, expected {dim}",
                i + 1,
                p.len()
            )));
        }
        out.extend_from_slice(p);
    }
    Ok(out)
}

fn unflatten(x: &[f64], dim: usize) -> Vec<Vec<f64>> {
    x.chunks(dim).map(<[f64]>::to_vec).collect()
}

impl Scenario {
    /// Parses and validates a scenario document.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            FormationError::InvalidScenario(m) => invalid(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
    }

    /// Checks every cross-reference by building all derived objects.
    pub fn validate(&self) -> Result<()> {
        let sys = self.closed_loop()?;
        self.initial_state_for(&sys)?;
        self.sim_config()?;
        self.target_framework()?;
        if let Some(rule) = self.rule()? {
            crate::analysis::select_estimating_agents(sys.graph(), &rule)?;
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn graph(&self) -> Result<FormationGraph> {
        let n = self.agents.len();
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let what = format!("edges[{}] endpoint", k + 1);
                Ok(Edge::new(one_based(e.tail, n, &what)?, one_based(e.head, n, &what)?))
            })
            .collect::<Result<Vec<_>>>()?;
        FormationGraph::new(n, edges)
    }

    pub fn distances(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.distance).collect()
    }

    pub fn initial_positions(&self) -> Result<Vec<f64>> {
        flatten(&self.agents, self.dim, "agents")
    }

    /// Target embedding, when the scenario provides one.
    pub fn target_framework(&self) -> Result<Option<Framework>> {
        let Some(target) = &self.target_positions else {
            return Ok(None);
        };
        if target.len() != self.agents.len() {
            return Err(invalid(format!(
                "target_positions lists {} agents, agents lists {}",
                target.len(),
                self.agents.len()
            )));
        }
        let x = flatten(target, self.dim, "target_positions")?;
        Framework::new(self.graph()?, self.dim, x, self.distances()).map(Some)
    }

    pub fn disturbance_spec(&self) -> Result<DisturbanceSpec> {
        let d = &self.disturbance;
        let ne = self.edges.len();
        if d.edges.is_empty() {
            return DisturbanceSpec::new(d.frequencies.clone(), vec![EdgeDisturbance::default(); ne]);
        }
        if d.edges.len() != ne {
            return Err(invalid(format!(
                "disturbance lists {} edges, scenario has {ne}",
                d.edges.len()
            )));
        }
        let p = d.frequencies.len();
        let edges = d
            .edges
            .iter()
            .map(|e| {
                let sinusoids = e
                    .sinusoids
                    .iter()
                    .map(|s| {
                        Ok(Sinusoid {
                            freq_index: one_based(s.frequency, p, "sinusoid frequency")?,
                            amplitude: s.amplitude,
                            phase: s.phase,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(EdgeDisturbance {
                    alpha: e.alpha,
                    sinusoids,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DisturbanceSpec::new(d.frequencies.clone(), edges)
    }

    pub fn basis(&self) -> Result<InternalModelBasis> {
        let freqs = &self.disturbance.frequencies;
        let default = InternalModelBasis::default_for(freqs)?;
        InternalModelBasis::new(
            self.controller.b1.unwrap_or(default.b1()),
            self.controller.b2.clone().unwrap_or_else(|| default.b2().to_vec()),
            freqs.clone(),
        )
    }

    pub fn controller_config(&self) -> Result<ControllerConfig> {
        ControllerConfig::new(self.controller.mode, self.controller.kappa, self.basis()?)
    }

    pub fn closed_loop(&self) -> Result<ClosedLoop> {
        ClosedLoop::new(
            self.graph()?,
            self.dim,
            self.distances(),
            self.disturbance_spec()?,
            self.controller_config()?,
        )
    }

    fn initial_state_for(&self, sys: &ClosedLoop) -> Result<SimState> {
        sys.initial_state(self.initial_positions()?, self.controller.xi0.clone())
    }

    pub fn initial_state(&self) -> Result<SimState> {
        self.initial_state_for(&self.closed_loop()?)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            dt: self.sim.dt,
            t_end: self.sim.t_end,
            output_every: self.sim.output_every,
            divergence_bound: self.sim.divergence_bound,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn trace(&self) -> Result<Option<ConstructionTrace>> {
        let Some(c) = &self.construction else {
            return Ok(None);
        };
        let Some(seed) = &c.seed else {
            return Ok(None);
        };
        let seed = match seed {
            SeedSpec::Edge { distance } => Seed::Edge { distance: *distance },
            SeedSpec::Tetrahedron { distances } => Seed::Tetrahedron { distances: *distances },
        };
        let n = self.agents.len();
        let steps = c
            .steps
            .iter()
            .map(|s| {
                Ok(Insertion {
                    anchors: s
                        .anchors
                        .iter()
                        .map(|&a| one_based(a, n, "anchor"))
                        .collect::<Result<_>>()?,
                    distances: s.distances.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let trace = ConstructionTrace {
            dim: self.dim,
            seed,
            steps,
        };
        trace.validate()?;
        Ok(Some(trace))
    }

    pub fn rule(&self) -> Result<Option<AssignmentRule>> {
        let Some(c) = &self.construction else {
            return Ok(None);
        };
        let n = self.agents.len();
        let need_trace = || {
            self.trace()?
                .ok_or_else(|| invalid("rule needs a construction seed and steps"))
        };
        let rule = match &c.rule {
            RuleSpec::TriangleCyclic => AssignmentRule::TriangleCyclic,
            RuleSpec::TriangleAcyclic { root, other } => AssignmentRule::TriangleAcyclic {
                root: one_based(*root, n, "root")?,
                other: other.map(|o| one_based(o, n, "agent")).transpose()?,
            },
            RuleSpec::Henneberg2d { triangle } => AssignmentRule::Henneberg2d {
                trace: need_trace()?,
                triangle: match triangle {
                    TriangleSpec::Cyclic => TriangleRule::Cyclic,
                    TriangleSpec::Acyclic { root, other } => TriangleRule::Acyclic {
                        root: one_based(*root, n, "root")?,
                        other: other.map(|o| one_based(o, n, "agent")).transpose()?,
                    },
                },
            },
            RuleSpec::Tetrahedron => AssignmentRule::Tetrahedron,
            RuleSpec::Growth3d => AssignmentRule::Growth3d { trace: need_trace()? },
        };
        Ok(Some(rule))
    }

    /// Scenario document for a framework; the framework's embedding becomes
    /// the target and `initial` the starting positions.
    pub fn from_framework(
        name: &str,
        target: &Framework,
        initial: &[f64],
        disturbance: &DisturbanceSpec,
        controller: ControllerSection,
        sim: SimSection,
    ) -> Self {
        let dim = target.dim();
        let edges = target
            .graph()
            .edges()
            .iter()
            .zip(target.target_distances())
            .map(|(e, &d)| EdgeSpec {
                tail: e.tail + 1,
                head: e.head + 1,
                distance: d,
            })
            .collect();
        let disturbance = DisturbanceSection {
            frequencies: disturbance.frequencies().to_vec(),
            edges: disturbance
                .edges()
                .iter()
                .map(|e| EdgeDisturbanceSpec {
                    alpha: e.alpha,
                    sinusoids: e
                        .sinusoids
                        .iter()
                        .map(|s| SinusoidSpec {
                            frequency: s.freq_index + 1,
                            amplitude: s.amplitude,
                            phase: s.phase,
                        })
                        .collect(),
                })
                .collect(),
        };
        Self {
            name: name.to_string(),
            dim,
            agents: unflatten(initial, dim),
            edges,
            target_positions: Some(unflatten(target.positions().as_slice(), dim)),
            disturbance,
            controller,
            sim,
            construction: None,
        }
    }

    pub fn with_construction(mut self, trace: &ConstructionTrace, rule: RuleSpec) -> Self {
        let seed = match &trace.seed {
            Seed::Edge { distance } => SeedSpec::Edge { distance: *distance },
            Seed::Tetrahedron { distances } => SeedSpec::Tetrahedron { distances: *distances },
        };
        self.construction = Some(ConstructionSection {
            seed: Some(seed),
            steps: trace
                .steps
                .iter()
                .map(|s| StepSpec {
                    anchors: s.anchors.iter().map(|a| a + 1).collect(),
                    distances: s.distances.clone(),
                })
                .collect(),
            rule,
        });
        self
    }
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 6] = [
    "epuck2d",
    "epuck2d-gradient",
    "tetra3d",
    "tetra3d-gradient",
    "triangle",
    "square",
];

/// Side of the built-in planar square, in pixels.
pub const EPUCK_SIDE: f64 = 10.0;

/// Constant inconsistency of the planar experiment, in pixel².
pub const EPUCK_MU: [f64; 5] = [19.0, 16.0, 19.5, 10.0, 16.0];

/// Edge length of the built-in double tetrahedron.
pub const TETRA_SIDE: f64 = 5.0;

pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "epuck2d" => Some(epuck2d(ControlMode::Estimator)),
        "epuck2d-gradient" => Some(epuck2d(ControlMode::GradientOnly)),
        "tetra3d" => Some(tetra3d(ControlMode::Estimator)),
        "tetra3d-gradient" => Some(tetra3d(ControlMode::GradientOnly)),
        "triangle" => Some(triangle()),
        "square" => Some(square()),
        _ => None,
    }
}

fn edge_specs(pairs: &[(usize, usize, f64)]) -> Vec<EdgeSpec> {
    pairs
        .iter()
        .map(|&(tail, head, distance)| EdgeSpec { tail, head, distance })
        .collect()
}

/// Four agents on a square with one diagonal, orientation
/// `1→2, 2→3, 1→3, 4→1, 3→4`, constant inconsistency `EPUCK_MU`.
fn epuck2d(mode: ControlMode) -> Scenario {
    let s = EPUCK_SIDE;
    let diag = s * 2f64.sqrt();
    let suffix = if mode == ControlMode::GradientOnly { "-gradient" } else { "" };
    Scenario {
        name: format!("epuck2d{suffix}"),
        dim: 2,
        agents: vec![
            vec![-1.8, 2.1],
            vec![12.4, -2.6],
            vec![8.3, 12.9],
            vec![1.7, 7.6],
        ],
        edges: edge_specs(&[(1, 2, s), (2, 3, s), (1, 3, diag), (4, 1, s), (3, 4, s)]),
        target_positions: Some(vec![vec![0.0, 0.0], vec![s, 0.0], vec![s, s], vec![0.0, s]]),
        disturbance: DisturbanceSection {
            frequencies: vec![1.0],
            edges: EPUCK_MU
                .iter()
                .map(|&alpha| EdgeDisturbanceSpec {
                    alpha,
                    sinusoids: Vec::new(),
                })
                .collect(),
        },
        controller: ControllerSection {
            mode,
            kappa: 1.0,
            b1: Some(1.0),
            b2: Some(vec![1.0, 0.0]),
            xi0: None,
        },
        sim: SimSection {
            dt: 1e-3,
            t_end: 200.0,
            output_every: 10,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        },
        construction: None,
    }
}

/// Offset and amplitude/phase per edge of the double tetrahedron.
const TETRA_DISTURBANCE: [(f64, f64, f64); 9] = [
    (1.2, 0.5, 0.0),
    (-0.8, 0.8, 0.7),
    (0.5, 0.3, 1.9),
    (1.5, 0.6, -0.4),
    (-1.1, 0.4, 2.6),
    (0.9, 0.7, -1.3),
    (-0.6, 0.9, 0.2),
    (1.3, 0.2, -2.2),
    (0.7, 0.5, 1.1),
];

/// Two regular tetrahedra sharing the base `{1, 2, 3}`; agent 5 is inserted
/// on that base, so the base agents estimate its edges.
fn tetra3d(mode: ControlMode) -> Scenario {
    let d = TETRA_SIDE;
    let h = d * (2.0f64 / 3.0).sqrt();
    let (cx, cy) = (d / 2.0, d * 3f64.sqrt() / 6.0);
    let suffix = if mode == ControlMode::GradientOnly { "-gradient" } else { "" };
    let edges: Vec<EdgeDisturbanceSpec> = TETRA_DISTURBANCE
        .iter()
        .map(|&(alpha, amplitude, phase)| EdgeDisturbanceSpec {
            alpha,
            sinusoids: if mode == ControlMode::Estimator {
                vec![SinusoidSpec {
                    frequency: 1,
                    amplitude,
                    phase,
                }]
            } else {
                Vec::new()
            },
        })
        .collect();
    Scenario {
        name: format!("tetra3d{suffix}"),
        dim: 3,
        agents: vec![
            vec![0.31, 2.95, 1.12],
            vec![3.42, 0.57, 2.26],
            vec![1.88, 3.51, 0.23],
            vec![2.64, 1.73, 3.38],
            vec![0.96, 1.24, 0.08],
        ],
        edges: edge_specs(&[
            (1, 2, d),
            (2, 3, d),
            (1, 3, d),
            (1, 4, d),
            (2, 4, d),
            (3, 4, d),
            (1, 5, d),
            (2, 5, d),
            (3, 5, d),
        ]),
        target_positions: Some(vec![
            vec![0.0, 0.0, 0.0],
            vec![d, 0.0, 0.0],
            vec![d / 2.0, d * 3f64.sqrt() / 2.0, 0.0],
            vec![cx, cy, h],
            vec![cx, cy, -h],
        ]),
        disturbance: DisturbanceSection {
            frequencies: vec![1.0],
            edges,
        },
        controller: ControllerSection {
            mode,
            kappa: 1.0,
            b1: Some(1.0),
            b2: Some(vec![1.0, 0.0]),
            xi0: None,
        },
        sim: SimSection {
            dt: 1e-3,
            t_end: 200.0,
            output_every: 10,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        },
        construction: Some(ConstructionSection {
            seed: Some(SeedSpec::Tetrahedron { distances: [d; 6] }),
            steps: vec![StepSpec {
                anchors: vec![1, 2, 3],
                distances: vec![d; 3],
            }],
            rule: RuleSpec::Growth3d,
        }),
    }
}

/// Unit triangle with the cyclic orientation and no inconsistency.
fn triangle() -> Scenario {
    let h = 3f64.sqrt() / 2.0;
    Scenario {
        name: "triangle".into(),
        dim: 2,
        agents: vec![vec![0.05, -0.02], vec![1.1, 0.03], vec![0.45, 0.8]],
        edges: edge_specs(&[(1, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0)]),
        target_positions: Some(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]),
        disturbance: DisturbanceSection::default(),
        controller: ControllerSection {
            mode: ControlMode::GradientOnly,
            kappa: 1.0,
            b1: None,
            b2: None,
            xi0: None,
        },
        sim: SimSection {
            dt: 1e-3,
            t_end: 50.0,
            output_every: 10,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        },
        construction: Some(ConstructionSection {
            seed: None,
            steps: Vec::new(),
            rule: RuleSpec::TriangleCyclic,
        }),
    }
}

/// Unit square without a diagonal: flexible, so certification fails.
fn square() -> Scenario {
    Scenario {
        name: "square".into(),
        dim: 2,
        agents: vec![vec![0.1, 0.0], vec![1.0, -0.1], vec![1.1, 1.0], vec![0.0, 0.9]],
        edges: edge_specs(&[(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0)]),
        target_positions: Some(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]),
        disturbance: DisturbanceSection::default(),
        controller: ControllerSection {
            mode: ControlMode::GradientOnly,
            kappa: 1.0,
            b1: None,
            b2: None,
            xi0: None,
        },
        sim: SimSection {
            dt: 1e-3,
            t_end: 50.0,
            output_every: 10,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        },
        construction: None,
    }
}
