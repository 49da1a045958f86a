//! Stability certification and estimating-agent selection.
//!
//! The estimator-based closed loop is locally exponentially stable when
//! `Z = -R Rᵀ + R S₁ᵀ` (equivalently `-R S₂ᵀ`), evaluated at the target
//! embedding, is Hurwitz. The selection rules below orient the graph so that
//! this holds by construction for triangles, Henneberg insertions in the
//! plane, tetrahedra and triangle-anchored growth in space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::controller::consistent_errors;
use crate::linalg::eigenvalues;
use crate::rigidity::{
    rigidity, rigidity_matrix, s1_matrix, ConstructionTrace, Edge, FormationGraph, Framework, Seed,
};
use crate::sim::{ClosedLoop, SimState};
use crate::{FormationError, Result};

/// Default Hurwitz guard: every eigenvalue must satisfy `Re λ < -1e-9`.
pub const DEFAULT_HURWITZ_TOL: f64 = 1e-9;

/// Largest `|e_k|` accepted as "at the target shape".
pub const TARGET_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub z_matrix: DMatrix<f64>,
    pub spectrum: Vec<Complex64>,
    pub hurwitz: bool,
    /// Largest real part in the spectrum.
    pub margin: f64,
}

/// Returns the verdict and the margin `max Re λ`.
pub fn is_hurwitz(m: &DMatrix<f64>, tol: f64) -> Result<(bool, f64)> {
    let spectrum = eigenvalues(m)?;
    let margin = spectrum_margin(&spectrum);
    Ok((margin < -tol, margin))
}

fn spectrum_margin(spectrum: &[Complex64]) -> f64 {
    spectrum
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `Z = -R Rᵀ + R S₁ᵀ` at the framework's embedding, which must realize the
/// target distances.
pub fn stability_matrix(fw: &Framework) -> Result<StabilityReport> {
    let worst = consistent_errors(fw).amax();
    if !(worst < TARGET_TOL) {
        return Err(FormationError::NotAtTarget(worst));
    }
    match rigidity(fw) {
        Ok(c) if !c.infinitesimally_rigid => log::warn!(
            "target embedding is not infinitesimally rigid (rank {} < {})",
            c.rank,
            c.expected_rank
        ),
        _ => {}
    }
    let r = rigidity_matrix(fw);
    let s1 = s1_matrix(fw);
    let z_matrix = -&r * r.transpose() + &r * s1.transpose();
    let spectrum = eigenvalues(&z_matrix)?;
    let margin = spectrum_margin(&spectrum);
    Ok(StabilityReport {
        hurwitz: margin < -DEFAULT_HURWITZ_TOL,
        z_matrix,
        spectrum,
        margin,
    })
}

/// Orientation of a triangle's three edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TriangleRule {
    /// Each agent estimates exactly one edge: `a→b→c→a` in index order.
    Cyclic,
    /// `root` estimates both of its edges; `other` (default: the
    /// lower-indexed remaining agent) estimates the third.
    Acyclic { root: usize, other: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AssignmentRule {
    TriangleCyclic,
    TriangleAcyclic { root: usize, other: Option<usize> },
    /// Planar insertion sequence; the first triangle follows `triangle`, every
    /// later edge is estimated by its anchor.
    Henneberg2d {
        trace: ConstructionTrace,
        triangle: TriangleRule,
    },
    /// Base `{0, 1, 2}` acyclic with root 0, the base agents estimate the
    /// edges to apex 3.
    Tetrahedron,
    /// Tetrahedron seed followed by triangle-anchored insertions whose anchors
    /// estimate the new edges.
    Growth3d { trace: ConstructionTrace },
}

fn rule_mismatch(msg: impl Into<String>) -> FormationError {
    FormationError::RuleMismatch(msg.into())
}

/// Tails for the edges joining the three vertices in `tri` (sorted).
fn triangle_tails(tri: [usize; 3], rule: TriangleRule) -> Result<[(Edge, usize); 3]> {
    let [a, b, c] = tri;
    match rule {
        TriangleRule::Cyclic => Ok([(Edge::new(a, b), a), (Edge::new(b, c), b), (Edge::new(c, a), c)]),
        TriangleRule::Acyclic { root, other } => {
            if !tri.contains(&root) {
                return Err(rule_mismatch(format!("root {} is not a triangle vertex", root + 1)));
            }
            let rest: Vec<usize> = tri.iter().copied().filter(|&v| v != root).collect();
            let other = other.unwrap_or(rest[0]);
            if !rest.contains(&other) {
                return Err(rule_mismatch(format!(
                    "agent {} cannot estimate the edge opposite the root",
                    other + 1
                )));
            }
            Ok([
                (Edge::new(root, rest[0]), root),
                (Edge::new(root, rest[1]), root),
                (Edge::new(rest[0], rest[1]), other),
            ])
        }
    }
}

fn tails_from(graph: &FormationGraph, oriented: &[(Edge, usize)]) -> Result<FormationGraph> {
    if oriented.len() != graph.edge_count() {
        return Err(rule_mismatch(format!(
            "rule covers {} edges, graph has {}",
            oriented.len(),
            graph.edge_count()
        )));
    }
    let tails = graph
        .edges()
        .iter()
        .map(|e| {
            oriented
                .iter()
                .find(|(o, _)| o.joins(e.tail, e.head))
                .map(|&(_, t)| t)
                .ok_or_else(|| {
                    rule_mismatch(format!(
                        "edge ({}, {}) is not covered by the rule",
                        e.tail + 1,
                        e.head + 1
                    ))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    graph.with_tails(&tails)
}

fn require_triangle(graph: &FormationGraph) -> Result<()> {
    if graph.vertex_count() != 3 || graph.edge_count() != 3 {
        return Err(rule_mismatch(format!(
            "triangle rules need 3 agents and 3 edges, got {} and {}",
            graph.vertex_count(),
            graph.edge_count()
        )));
    }
    Ok(())
}

fn trace_orientation(trace: &ConstructionTrace, triangle: Option<TriangleRule>) -> Result<Vec<(Edge, usize)>> {
    let oriented = trace.graph()?;
    let mut out: Vec<(Edge, usize)> = oriented.edges().iter().map(|e| (*e, e.tail)).collect();
    if let Some(rule) = triangle {
        if trace.steps.is_empty() {
            return Err(rule_mismatch("trace has no triangle"));
        }
        // seed edge plus the first insertion span vertices 0, 1, 2
        for (edge, tail) in triangle_tails([0, 1, 2], rule)? {
            let slot = out
                .iter_mut()
                .find(|(e, _)| e.joins(edge.tail, edge.head))
                .expect("first insertion closes a triangle on 0, 1, 2");
            slot.1 = tail;
        }
    }
    Ok(out)
}

/// Re-orients `graph` according to `rule`; edge order is preserved.
pub fn select_estimating_agents(graph: &FormationGraph, rule: &AssignmentRule) -> Result<FormationGraph> {
    match rule {
        AssignmentRule::TriangleCyclic => {
            require_triangle(graph)?;
            tails_from(graph, &triangle_tails([0, 1, 2], TriangleRule::Cyclic)?)
        }
        AssignmentRule::TriangleAcyclic { root, other } => {
            require_triangle(graph)?;
            let rule = TriangleRule::Acyclic {
                root: *root,
                other: *other,
            };
            tails_from(graph, &triangle_tails([0, 1, 2], rule)?)
        }
        AssignmentRule::Henneberg2d { trace, triangle } => {
            if trace.dim != 2 {
                return Err(rule_mismatch("planar rule needs a planar trace"));
            }
            if trace.vertex_count() != graph.vertex_count() {
                return Err(rule_mismatch("trace and graph have different agent counts"));
            }
            tails_from(graph, &trace_orientation(trace, Some(*triangle))?)
        }
        AssignmentRule::Tetrahedron => {
            if graph.vertex_count() != 4 || graph.edge_count() != 6 {
                return Err(rule_mismatch("tetrahedron rule needs 4 agents and 6 edges"));
            }
            let mut oriented = triangle_tails(
                [0, 1, 2],
                TriangleRule::Acyclic {
                    root: 0,
                    other: None,
                },
            )?
            .to_vec();
            oriented.extend((0..3).map(|b| (Edge::new(b, 3), b)));
            tails_from(graph, &oriented)
        }
        AssignmentRule::Growth3d { trace } => {
            if trace.dim != 3 || !matches!(trace.seed, Seed::Tetrahedron { .. }) {
                return Err(rule_mismatch("spatial growth needs a tetrahedron-seeded trace"));
            }
            if trace.vertex_count() != graph.vertex_count() {
                return Err(rule_mismatch("trace and graph have different agent counts"));
            }
            tails_from(graph, &trace_orientation(trace, None)?)
        }
    }
}

/// Orients the framework by `rule` and evaluates its stability matrix.
pub fn certify(fw: &Framework, rule: &AssignmentRule) -> Result<StabilityReport> {
    let oriented = fw.with_graph(select_estimating_agents(fw.graph(), rule)?)?;
    let report = stability_matrix(&oriented)?;
    if !report.hurwitz {
        log::warn!(
            "selection rule produced a non-Hurwitz Z (margin {:e}); the embedding is likely degenerate",
            report.margin
        );
    }
    Ok(report)
}

/// Error, regulation and estimation coordinates of a closed-loop state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCoords {
    pub e: DVector<f64>,
    /// `α = e + μ - Bᵀξ`.
    pub alpha: DVector<f64>,
    /// `θ = w - ξ`.
    pub theta: DVector<f64>,
}

pub fn transformed_coords(system: &ClosedLoop, state: &SimState) -> TransformedCoords {
    let basis = &system.controller().basis;
    let d = basis.state_dim();
    let mut e = DVector::zeros(system.graph().edge_count());
    crate::controller::errors_into(
        system.graph(),
        system.dim(),
        &state.x,
        system.distances(),
        e.as_mut_slice(),
    );
    let alpha = DVector::from_iterator(
        e.len(),
        (0..e.len()).map(|k| {
            let r = k * d..(k + 1) * d;
            e[k] + basis.output(&state.w[r.clone()]) - basis.output(&state.xi[r])
        }),
    );
    let theta = DVector::from_iterator(
        state.w.len(),
        state.w.iter().zip(&state.xi).map(|(w, xi)| w - xi),
    );
    TransformedCoords { e, alpha, theta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::{build_from_trace, Insertion, Placement};

    fn triangle(tails: &[(usize, usize)]) -> Framework {
        let g = FormationGraph::from_one_based(3, tails).unwrap();
        Framework::at_target(g, 2, vec![0.0, 0.0, 2.0, 0.0, 0.5, 1.5]).unwrap()
    }

    #[test]
    fn hurwitz_examples() {
        let d = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let (h, margin) = is_hurwitz(&d, DEFAULT_HURWITZ_TOL).unwrap();
        assert!(h);
        assert!((margin + 1.0).abs() < 1e-14);

        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let (h, margin) = is_hurwitz(&rot, DEFAULT_HURWITZ_TOL).unwrap();
        assert!(!h);
        assert!(margin.abs() < 1e-14);

        assert!(is_hurwitz(&DMatrix::zeros(2, 3), DEFAULT_HURWITZ_TOL).is_err());
    }

    #[test]
    fn cyclic_triangle_orientation() {
        let g = FormationGraph::from_one_based(3, &[(2, 1), (3, 2), (1, 3)]).unwrap();
        let o = select_estimating_agents(&g, &AssignmentRule::TriangleCyclic).unwrap();
        let tails: Vec<_> = o.edges().iter().map(|e| (e.tail + 1, e.head + 1)).collect();
        assert_eq!(tails, vec![(1, 2), (2, 3), (3, 1)]);
    }

    #[test]
    fn acyclic_triangle_orientation() {
        let g = FormationGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        let rule = AssignmentRule::TriangleAcyclic { root: 1, other: None };
        let o = select_estimating_agents(&g, &rule).unwrap();
        let tails: Vec<_> = o.edges().iter().map(|e| e.tail + 1).collect();
        assert_eq!(tails, vec![2, 2, 1]);

        let rule = AssignmentRule::TriangleAcyclic { root: 1, other: Some(2) };
        let o = select_estimating_agents(&g, &rule).unwrap();
        assert_eq!(o.edge(2).tail, 2);

        let bad = AssignmentRule::TriangleAcyclic { root: 1, other: Some(1) };
        assert!(select_estimating_agents(&g, &bad).is_err());
    }

    #[test]
    fn triangle_rules_reject_other_shapes() {
        let g = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 1), (1, 4), (3, 4)]).unwrap();
        assert!(matches!(
            select_estimating_agents(&g, &AssignmentRule::TriangleCyclic),
            Err(FormationError::RuleMismatch(_))
        ));
        assert!(select_estimating_agents(&g, &AssignmentRule::Tetrahedron).is_err());
    }

    #[test]
    fn cyclic_triangle_is_hurwitz() {
        let r = certify(&triangle(&[(1, 2), (2, 3), (3, 1)]), &AssignmentRule::TriangleCyclic).unwrap();
        assert!(r.hurwitz);
        assert_eq!(r.spectrum.len(), 3);
    }

    #[test]
    fn off_target_embedding_is_rejected() {
        let fw = triangle(&[(1, 2), (2, 3), (3, 1)]);
        let moved = fw.with_positions(vec![0.0, 0.0, 2.1, 0.0, 0.5, 1.5]).unwrap();
        assert!(matches!(stability_matrix(&moved), Err(FormationError::NotAtTarget(_))));
    }

    #[test]
    fn henneberg_rule_on_square_with_diagonal() {
        // triangle {1,2,3} then agent 4 anchored to {1,3}
        let trace = ConstructionTrace {
            dim: 2,
            seed: Seed::Edge { distance: 1.0 },
            steps: vec![
                Insertion { anchors: vec![0, 1], distances: vec![2f64.sqrt(), 1.0] },
                Insertion { anchors: vec![0, 2], distances: vec![1.0, 1.0] },
            ],
        };
        let g = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (1, 3), (4, 1), (3, 4)]).unwrap();
        let rule = AssignmentRule::Henneberg2d {
            trace: trace.clone(),
            triangle: TriangleRule::Acyclic { root: 0, other: None },
        };
        let o = select_estimating_agents(&g, &rule).unwrap();
        let pairs: Vec<_> = o.edges().iter().map(|e| (e.tail + 1, e.head + 1)).collect();
        assert_eq!(pairs, vec![(1, 2), (2, 3), (1, 3), (1, 4), (3, 4)]);

        let fw = build_from_trace(&trace, &Placement::Explicit(vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]))
            .unwrap();
        assert!(certify(&fw, &rule).unwrap().hurwitz);
    }

    #[test]
    fn transformed_coords_vanish_on_the_manifold() {
        use crate::controller::{ControlMode, ControllerConfig};
        use crate::disturbance::{DisturbanceSpec, EdgeDisturbance, InternalModelBasis, Sinusoid};
        let fw = triangle(&[(1, 2), (2, 3), (3, 1)]);
        let spec = DisturbanceSpec::new(
            vec![1.0],
            vec![
                EdgeDisturbance { alpha: 1.0, sinusoids: vec![Sinusoid { freq_index: 0, amplitude: 0.5, phase: 0.3 }] },
                EdgeDisturbance::constant(-2.0),
                EdgeDisturbance::constant(0.5),
            ],
        )
        .unwrap();
        let basis = InternalModelBasis::default_for(&[1.0]).unwrap();
        let cfg = ControllerConfig::new(ControlMode::Estimator, 1.0, basis).unwrap();
        let sys = ClosedLoop::new(fw.graph().clone(), 2, fw.target_distances().to_vec(), spec, cfg).unwrap();
        let mut s = sys.initial_state(fw.positions().as_slice().to_vec(), None).unwrap();
        // ξ = 0: θ = w, α = e + μ
        let c = transformed_coords(&sys, &s);
        assert_eq!(c.theta.as_slice(), s.w.as_slice());
        s.xi = s.w.clone();
        let c = transformed_coords(&sys, &s);
        assert!(c.e.amax() < 1e-12 && c.alpha.amax() < 1e-12 && c.theta.amax() == 0.0);
    }
}
