//! Formation graphs, frameworks and rigidity.
//!
//! Every edge carries an orientation: its `tail` is the estimating agent of
//! that edge and `z_k = x_tail - x_head`. Edge order is the order of insertion
//! and every stacked per-edge vector in the crate follows it.
//!
//! The rigidity matrix is stored with rows `±z_kᵀ`, i.e. half the Jacobian
//! of the edge function. With that scaling the gradient law reads
//! `ẋ = -Rᵀe` and the error dynamics read `ė = 2Rẋ`.

mod henneberg;

pub use henneberg::{
    build_from_trace, random_henneberg, ConstructionTrace, Insertion, Placement, Seed,
    TRIANGLE_EDGES, TETRAHEDRON_EDGES,
};

use nalgebra::{DMatrix, DVector};

use crate::linalg::{numeric_rank, DEFAULT_RANK_TOL};
use crate::{FormationError, Result};

/// An oriented edge; vertices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub fn new(tail: usize, head: usize) -> Self {
        Self { tail, head }
    }

    pub fn reversed(self) -> Self {
        Self {
            tail: self.head,
            head: self.tail,
        }
    }

    /// Whether the edge joins `a` and `b`, in either orientation.
    pub fn joins(&self, a: usize, b: usize) -> bool {
        (self.tail == a && self.head == b) || (self.tail == b && self.head == a)
    }

    pub fn touches(&self, v: usize) -> bool {
        self.tail == v || self.head == v
    }
}

/// Incidence of an edge seen from one of its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incidence {
    pub edge: usize,
    pub neighbor: usize,
    /// The agent is the estimating agent (tail) of this edge.
    pub estimating: bool,
}

/// Undirected graph with one estimating agent per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FormationGraph {
    n: usize,
    edges: Vec<Edge>,
    incidence: Vec<Vec<Incidence>>,
}

impl FormationGraph {
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self> {
        if n < 2 {
            return Err(FormationError::InvalidGraph(format!(
                "need at least 2 vertices, got {n}"
            )));
        }
        let mut incidence = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            if e.tail >= n || e.head >= n {
                return Err(FormationError::InvalidGraph(format!(
                    "edge {} ({}, {}) references a vertex outside 1..={n}",
                    k + 1,
                    e.tail + 1,
                    e.head + 1
                )));
            }
            if e.tail == e.head {
                return Err(FormationError::InvalidGraph(format!(
                    "edge {} is a self-loop on vertex {}",
                    k + 1,
                    e.tail + 1
                )));
            }
            if let Some(j) = edges[..k].iter().position(|f| f.joins(e.tail, e.head)) {
                return Err(FormationError::InvalidGraph(format!(
                    "edges {} and {} both join vertices {} and {}",
                    j + 1,
                    k + 1,
                    e.tail + 1,
                    e.head + 1
                )));
            }
            incidence[e.tail].push(Incidence {
                edge: k,
                neighbor: e.head,
                estimating: true,
            });
            incidence[e.head].push(Incidence {
                edge: k,
                neighbor: e.tail,
                estimating: false,
            });
        }
        Ok(Self {
            n,
            edges,
            incidence,
        })
    }

    /// Builds a graph from 1-based `(tail, head)` pairs.
    pub fn from_one_based(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let edges = pairs
            .iter()
            .map(|&(t, h)| {
                if t == 0 || h == 0 {
                    Err(FormationError::InvalidGraph(
                        "vertices are numbered from 1".into(),
                    ))
                } else {
                    Ok(Edge::new(t - 1, h - 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> Edge {
        self.edges[k]
    }

    /// Edges incident to agent `i` (the set `E_i`), in edge order.
    pub fn incident(&self, i: usize) -> &[Incidence] {
        &self.incidence[i]
    }

    /// Edges for which agent `i` is the estimating agent (the set `K_i`).
    pub fn estimated_by(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.incidence[i]
            .iter()
            .filter(|inc| inc.estimating)
            .map(|inc| inc.edge)
    }

    /// Index of the edge joining `a` and `b`, in either orientation.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.iter().position(|e| e.joins(a, b))
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.find_edge(a, b).is_some()
    }

    /// Same undirected edges in the same order, tails replaced.
    pub fn with_tails(&self, tails: &[usize]) -> Result<Self> {
        if tails.len() != self.edges.len() {
            return Err(FormationError::DimensionMismatch(format!(
                "{} tails for {} edges",
                tails.len(),
                self.edges.len()
            )));
        }
        let edges = self
            .edges
            .iter()
            .zip(tails)
            .map(|(e, &t)| {
                if t == e.tail {
                    Ok(*e)
                } else if t == e.head {
                    Ok(e.reversed())
                } else {
                    Err(FormationError::InvalidGraph(format!(
                        "vertex {} is not an endpoint of edge ({}, {})",
                        t + 1,
                        e.tail + 1,
                        e.head + 1
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.n, edges)
    }

    /// Whether both graphs have the same undirected edge sequence.
    pub fn same_undirected(&self, other: &FormationGraph) -> bool {
        self.n == other.n
            && self.edges.len() == other.edges.len()
            && self
                .edges
                .iter()
                .zip(&other.edges)
                .all(|(a, b)| a.joins(b.tail, b.head))
    }
}

/// Expected rank of the rigidity matrix of an infinitesimally rigid framework.
pub fn rigid_rank(n: usize, dim: usize) -> Result<usize> {
    match dim {
        2 if n >= 2 => Ok(2 * n - 3),
        3 if n >= 3 => Ok(3 * n - 6),
        2 | 3 => Err(FormationError::TooFewAgents { n, dim }),
        d => Err(FormationError::UnsupportedDimension(d)),
    }
}

/// A graph embedded in `R^dim` together with prescribed distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Framework {
    graph: FormationGraph,
    dim: usize,
    positions: DVector<f64>,
    distances: Vec<f64>,
}

impl Framework {
    /// `positions` is the stacked multi-point `(x_1, ..., x_n)`.
    pub fn new(
        graph: FormationGraph,
        dim: usize,
        positions: Vec<f64>,
        distances: Vec<f64>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(FormationError::UnsupportedDimension(dim));
        }
        if positions.len() != dim * graph.vertex_count() {
            return Err(FormationError::InvalidFramework(format!(
                "expected {} coordinates for {} agents in R^{dim}, got {}",
                dim * graph.vertex_count(),
                graph.vertex_count(),
                positions.len()
            )));
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(FormationError::InvalidFramework(
                "positions must be finite".into(),
            ));
        }
        if distances.len() != graph.edge_count() {
            return Err(FormationError::InvalidFramework(format!(
                "expected {} target distances, got {}",
                graph.edge_count(),
                distances.len()
            )));
        }
        if let Some(k) = distances.iter().position(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(FormationError::InvalidFramework(format!(
                "target distance of edge {} must be positive, got {}",
                k + 1,
                distances[k]
            )));
        }
        Ok(Self {
            graph,
            dim,
            positions: DVector::from_vec(positions),
            distances,
        })
    }

    /// Framework whose target distances are the current edge lengths.
    pub fn at_target(graph: FormationGraph, dim: usize, positions: Vec<f64>) -> Result<Self> {
        let distances = graph
            .edges()
            .iter()
            .map(|e| {
                (0..dim)
                    .map(|d| {
                        let diff = positions[e.tail * dim + d] - positions[e.head * dim + d];
                        diff * diff
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        if positions.len() != dim * graph.vertex_count() {
            return Err(FormationError::InvalidFramework(format!(
                "expected {} coordinates, got {}",
                dim * graph.vertex_count(),
                positions.len()
            )));
        }
        Self::new(graph, dim, positions, distances)
    }

    pub fn graph(&self) -> &FormationGraph {
        &self.graph
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn positions(&self) -> &DVector<f64> {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions.as_slice()[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target_distances(&self) -> &[f64] {
        &self.distances
    }

    /// Same graph and distances at new positions.
    pub fn with_positions(&self, positions: Vec<f64>) -> Result<Self> {
        Self::new(self.graph.clone(), self.dim, positions, self.distances.clone())
    }

    /// Same positions and distances with a re-oriented graph.
    pub fn with_graph(&self, graph: FormationGraph) -> Result<Self> {
        if !graph.same_undirected(&self.graph) {
            return Err(FormationError::InvalidGraph(
                "replacement graph has different undirected edges".into(),
            ));
        }
        Self::new(
            graph,
            self.dim,
            self.positions.as_slice().to_vec(),
            self.distances.clone(),
        )
    }

    /// Relative vector `z_k = x_tail - x_head`.
    pub fn relative(&self, k: usize) -> DVector<f64> {
        let e = self.graph.edge(k);
        DVector::from_iterator(
            self.dim,
            (0..self.dim).map(|d| {
                self.positions[e.tail * self.dim + d] - self.positions[e.head * self.dim + d]
            }),
        )
    }

    /// Stacked `col(z_k)` in `R^{m|E|}`.
    pub fn stacked_relative(&self) -> DVector<f64> {
        let m = self.dim;
        let mut z = DVector::zeros(m * self.graph.edge_count());
        for k in 0..self.graph.edge_count() {
            z.rows_mut(k * m, m).copy_from(&self.relative(k));
        }
        z
    }
}

/// Squared edge lengths `||z_k||²` in edge order.
pub fn edge_function(fw: &Framework) -> DVector<f64> {
    DVector::from_iterator(
        fw.graph.edge_count(),
        (0..fw.graph.edge_count()).map(|k| fw.relative(k).norm_squared()),
    )
}

fn fill_edge_rows(fw: &Framework, tail_sign: f64, head_sign: f64) -> DMatrix<f64> {
    let m = fw.dim;
    let mut out = DMatrix::zeros(fw.graph.edge_count(), m * fw.agent_count());
    for (k, e) in fw.graph.edges().iter().enumerate() {
        let z = fw.relative(k);
        for d in 0..m {
            out[(k, e.tail * m + d)] = tail_sign * z[d];
            out[(k, e.head * m + d)] = head_sign * z[d];
        }
    }
    out
}

/// Rigidity matrix `R`: row k is `+z_kᵀ` on the tail block and `-z_kᵀ` on the
/// head block (half the Jacobian of [`edge_function`]).
pub fn rigidity_matrix(fw: &Framework) -> DMatrix<f64> {
    fill_edge_rows(fw, 1.0, -1.0)
}

/// `S₁ = DiagZᵀ J`: `z_kᵀ` on the estimating agent's block only.
pub fn s1_matrix(fw: &Framework) -> DMatrix<f64> {
    fill_edge_rows(fw, 1.0, 0.0)
}

/// `S₂ = R - S₁`: `-z_kᵀ` on the head block only.
pub fn s2_matrix(fw: &Framework) -> DMatrix<f64> {
    fill_edge_rows(fw, 0.0, -1.0)
}

/// Transposed incidence matrix `H` (|E| × n): `+1` at the tail, `-1` at the head.
pub fn incidence_matrix(graph: &FormationGraph) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(graph.edge_count(), graph.vertex_count());
    for (k, e) in graph.edges().iter().enumerate() {
        h[(k, e.tail)] = 1.0;
        h[(k, e.head)] = -1.0;
    }
    h
}

/// `J`: `H ⊗ I_m` with every `-1` replaced by zero.
pub fn selector_matrix(graph: &FormationGraph, dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim * graph.edge_count(), dim * graph.vertex_count());
    for (k, e) in graph.edges().iter().enumerate() {
        for d in 0..dim {
            j[(k * dim + d, e.tail * dim + d)] = 1.0;
        }
    }
    j
}

/// Block-diagonal `DiagZ` (m|E| × |E|) with k-th block `z_k`.
pub fn block_diag_relative(fw: &Framework) -> DMatrix<f64> {
    let m = fw.dim;
    let ne = fw.graph.edge_count();
    let mut out = DMatrix::zeros(m * ne, ne);
    for k in 0..ne {
        out.view_mut((k * m, k), (m, 1)).copy_from(&fw.relative(k));
    }
    out
}

/// Rank test outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RigidityCheck {
    pub rank: usize,
    pub expected_rank: usize,
    pub infinitesimally_rigid: bool,
    pub minimally_rigid: bool,
}

/// Rank-based rigidity test at the framework's embedding with relative
/// singular-value threshold `tol`.
pub fn check_rigidity(fw: &Framework, tol: f64) -> Result<RigidityCheck> {
    let expected_rank = rigid_rank(fw.agent_count(), fw.dim)?;
    let rank = numeric_rank(&rigidity_matrix(fw), tol);
    let infinitesimally_rigid = rank == expected_rank;
    Ok(RigidityCheck {
        rank,
        expected_rank,
        infinitesimally_rigid,
        minimally_rigid: infinitesimally_rigid && fw.graph.edge_count() == expected_rank,
    })
}

/// Returns the verdict together with the numeric rank.
pub fn is_infinitesimally_rigid(fw: &Framework, tol: f64) -> Result<(bool, usize)> {
    let c = check_rigidity(fw, tol)?;
    Ok((c.infinitesimally_rigid, c.rank))
}

pub fn is_minimally_rigid(fw: &Framework, tol: f64) -> Result<bool> {
    Ok(check_rigidity(fw, tol)?.minimally_rigid)
}

/// [`check_rigidity`] with the default threshold.
pub fn rigidity(fw: &Framework) -> Result<RigidityCheck> {
    check_rigidity(fw, DEFAULT_RANK_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron_identity;

    fn triangle() -> Framework {
        let g = FormationGraph::from_one_based(3, &[(1, 2), (2, 3), (3, 1)]).unwrap();
        Framework::at_target(g, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn graph_rejects_self_loops_and_duplicates() {
        assert!(FormationGraph::from_one_based(3, &[(1, 1)]).is_err());
        assert!(FormationGraph::from_one_based(3, &[(1, 2), (2, 1)]).is_err());
        assert!(FormationGraph::from_one_based(3, &[(1, 4)]).is_err());
        assert!(FormationGraph::from_one_based(1, &[]).is_err());
    }

    #[test]
    fn framework_rejects_bad_inputs() {
        let g = FormationGraph::from_one_based(2, &[(1, 2)]).unwrap();
        assert!(Framework::new(g.clone(), 4, vec![0.0; 8], vec![1.0]).is_err());
        assert!(Framework::new(g.clone(), 2, vec![0.0; 3], vec![1.0]).is_err());
        assert!(Framework::new(g.clone(), 2, vec![0.0, f64::NAN, 0.0, 0.0], vec![1.0]).is_err());
        assert!(Framework::new(g, 2, vec![0.0; 4], vec![0.0]).is_err());
    }

    #[test]
    fn edge_function_of_triangle() {
        assert_eq!(edge_function(&triangle()).as_slice(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn edge_function_of_coincident_agents_is_zero() {
        let fw = triangle().with_positions(vec![0.3; 6]).unwrap();
        assert!(edge_function(&fw).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edge_function_of_square_with_diagonal() {
        let g = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)])
            .unwrap();
        let fw = Framework::at_target(g, 2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        assert_eq!(edge_function(&fw).as_slice(), &[1.0, 1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn single_edge_matrices() {
        let g = FormationGraph::from_one_based(2, &[(1, 2)]).unwrap();
        let fw = Framework::at_target(g.clone(), 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        // z = x1 - x2 = (-1, 0)
        assert_eq!(rigidity_matrix(&fw).as_slice(), &[-1.0, 0.0, 1.0, 0.0]);
        assert_eq!(s1_matrix(&fw).as_slice(), &[-1.0, 0.0, 0.0, 0.0]);
        assert_eq!(s2_matrix(&fw).as_slice(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(incidence_matrix(&g).as_slice(), &[1.0, -1.0]);
        let j = selector_matrix(&g, 2);
        assert_eq!(
            j,
            DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0])
        );
    }

    #[test]
    fn single_edge_with_head_at_origin() {
        // x1 = (1,0), x2 = (0,0): z = (1,0), R = [1, 0, -1, 0]
        let g = FormationGraph::from_one_based(2, &[(1, 2)]).unwrap();
        let fw = Framework::at_target(g, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            rigidity_matrix(&fw),
            DMatrix::from_row_slice(1, 4, &[1.0, 0.0, -1.0, 0.0])
        );
        assert_eq!(
            s1_matrix(&fw),
            DMatrix::from_row_slice(1, 4, &[1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(
            s2_matrix(&fw),
            DMatrix::from_row_slice(1, 4, &[0.0, 0.0, -1.0, 0.0])
        );
    }

    #[test]
    fn s1_equals_diagz_transpose_times_selector() {
        let fw = triangle();
        let s1 = block_diag_relative(&fw).transpose() * selector_matrix(fw.graph(), 2);
        assert_eq!(s1, s1_matrix(&fw));
    }

    #[test]
    fn selector_is_incidence_kron_with_negatives_dropped() {
        let fw = triangle();
        let hk = kron_identity(&incidence_matrix(fw.graph()), 2).map(|v| v.max(0.0));
        assert_eq!(hk, selector_matrix(fw.graph(), 2));
    }

    #[test]
    fn rigidity_matrix_kills_translations() {
        let fw = triangle();
        let t = DVector::from_vec(vec![0.7, -1.3, 0.7, -1.3, 0.7, -1.3]);
        assert!((rigidity_matrix(&fw) * t).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn rank_tests_on_small_frameworks() {
        let c = rigidity(&triangle()).unwrap();
        assert_eq!((c.rank, c.infinitesimally_rigid, c.minimally_rigid), (3, true, true));

        let collinear = triangle()
            .with_positions(vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0])
            .unwrap();
        assert!(!rigidity(&collinear).unwrap().infinitesimally_rigid);

        let square = FormationGraph::from_one_based(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
        let fw = Framework::at_target(square, 2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
            .unwrap();
        let c = rigidity(&fw).unwrap();
        assert_eq!((c.rank, c.infinitesimally_rigid), (4, false));

        let k4 = FormationGraph::from_one_based(
            4,
            &[(1, 2), (2, 3), (3, 4), (4, 1), (1, 3), (2, 4)],
        )
        .unwrap();
        let fw = Framework::at_target(k4, 2, vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        let c = rigidity(&fw).unwrap();
        assert!(c.infinitesimally_rigid);
        assert!(!c.minimally_rigid);
    }

    #[test]
    fn rank_test_rejects_too_few_agents() {
        let g = FormationGraph::from_one_based(2, &[(1, 2)]).unwrap();
        let fw = Framework::at_target(g.clone(), 3, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            rigidity(&fw),
            Err(FormationError::TooFewAgents { n: 2, dim: 3 })
        ));
        let fw = Framework::at_target(g, 2, vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(rigidity(&fw).unwrap().minimally_rigid);
    }

    #[test]
    fn with_tails_reorients_edges() {
        let g = triangle().graph().clone();
        let r = g.with_tails(&[1, 1, 0]).unwrap();
        assert_eq!(r.edges(), &[Edge::new(1, 0), Edge::new(1, 2), Edge::new(0, 2)]);
        assert_eq!(r.estimated_by(1).collect::<Vec<_>>(), vec![0, 1]);
        assert!(g.with_tails(&[2, 1, 0]).is_err());
        assert!(r.same_undirected(&g));
    }
}
