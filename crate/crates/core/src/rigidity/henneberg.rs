//! Henneberg-style growth of minimally rigid frameworks.
//!
//! In the plane a trace starts from a single edge and every step adds a vertex
//! joined to two existing vertices. In space it starts from a tetrahedron and
//! every step joins the new vertex to the three corners of an existing
//! triangle. New edges are oriented from the anchors to the new vertex, so the
//! anchors are the estimating agents of the edges they just received.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_rigidity, Edge, FormationGraph, Framework};
use crate::linalg::DEFAULT_RANK_TOL;
use crate::{FormationError, Result};

/// Seed edges of a tetrahedron on vertices 0..4, as (tail, head).
///
/// The base triangle {0,1,2} is estimated acyclically (vertex 0 owns both of
/// its base edges, vertex 1 owns the third) and every apex edge is owned by
/// its base vertex.
pub const TETRAHEDRON_EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3)];

/// The three edges of a triangle on vertices 0..3 in cyclic order.
pub const TRIANGLE_EDGES: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

const MAX_PLACEMENT_RETRIES: usize = 100;

/// Starting primitive of a construction.
#[derive(Debug, Clone, PartialEq)]
pub enum Seed {
    /// Single edge between vertices 0 and 1 (plane).
    Edge { distance: f64 },
    /// Tetrahedron on vertices 0..4, distances in [`TETRAHEDRON_EDGES`] order.
    Tetrahedron { distances: [f64; 6] },
}

impl Seed {
    fn vertex_count(&self) -> usize {
        match self {
            Seed::Edge { .. } => 2,
            Seed::Tetrahedron { .. } => 4,
        }
    }

    fn dim(&self) -> usize {
        match self {
            Seed::Edge { .. } => 2,
            Seed::Tetrahedron { .. } => 3,
        }
    }
}

/// One vertex insertion; vertices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Insertion {
    pub anchors: Vec<usize>,
    /// Target distance from the new vertex to each anchor.
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionTrace {
    pub dim: usize,
    pub seed: Seed,
    pub steps: Vec<Insertion>,
}

/// How the vertices of a trace get their coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    /// Stacked coordinates of every vertex.
    Explicit(Vec<f64>),
    /// Solve the distance constraints; the first attempt takes the positively
    /// oriented solution at every step, retries pick orientations at random.
    Realize { seed: u64 },
}

impl ConstructionTrace {
    pub fn vertex_count(&self) -> usize {
        self.seed.vertex_count() + self.steps.len()
    }

    /// Vertex added by step `t`.
    pub fn inserted_vertex(&self, t: usize) -> usize {
        self.seed.vertex_count() + t
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != self.seed.dim() {
            return Err(FormationError::InvalidTrace(format!(
                "seed does not match dimension {}",
                self.dim
            )));
        }
        let seed_distances: Vec<f64> = match &self.seed {
            Seed::Edge { distance } => vec![*distance],
            Seed::Tetrahedron { distances } => distances.to_vec(),
        };
        if seed_distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(FormationError::InvalidTrace(
                "seed distances must be positive".into(),
            ));
        }
        let mut graph_edges = self.seed_edges();
        for (t, step) in self.steps.iter().enumerate() {
            let existing = self.inserted_vertex(t);
            if step.anchors.len() != self.dim {
                return Err(FormationError::InvalidTrace(format!(
                    "step {} has {} anchors, expected {}",
                    t + 1,
                    step.anchors.len(),
                    self.dim
                )));
            }
            if step.distances.len() != step.anchors.len() {
                return Err(FormationError::InvalidTrace(format!(
                    "step {} lists {} distances for {} anchors",
                    t + 1,
                    step.distances.len(),
                    step.anchors.len()
                )));
            }
            if step.distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
                return Err(FormationError::InvalidTrace(format!(
                    "step {} has a non-positive distance",
                    t + 1
                )));
            }
            for (i, &a) in step.anchors.iter().enumerate() {
                if a >= existing {
                    return Err(FormationError::InvalidTrace(format!(
                        "step {} anchors vertex {} which does not exist yet",
                        t + 1,
                        a + 1
                    )));
                }
                if step.anchors[..i].contains(&a) {
                    return Err(FormationError::InvalidTrace(format!(
                        "step {} repeats anchor {}",
                        t + 1,
                        a + 1
                    )));
                }
            }
            if self.dim == 3 {
                let adj = |a: usize, b: usize| graph_edges.iter().any(|e: &Edge| e.joins(a, b));
                let [a, b, c] = [step.anchors[0], step.anchors[1], step.anchors[2]];
                if !(adj(a, b) && adj(b, c) && adj(a, c)) {
                    return Err(FormationError::InvalidTrace(format!(
                        "step {} anchors {}, {}, {} do not form a triangle",
                        t + 1,
                        a + 1,
                        b + 1,
                        c + 1
                    )));
                }
            }
            graph_edges.extend(step.anchors.iter().map(|&a| Edge::new(a, existing)));
        }
        Ok(())
    }

    fn seed_edges(&self) -> Vec<Edge> {
        match self.seed {
            Seed::Edge { .. } => vec![Edge::new(0, 1)],
            Seed::Tetrahedron { .. } => TETRAHEDRON_EDGES
                .iter()
                .map(|&(t, h)| Edge::new(t, h))
                .collect(),
        }
    }

    /// Graph in construction order with anchors as estimating agents.
    pub fn graph(&self) -> Result<FormationGraph> {
        self.validate()?;
        let mut edges = self.seed_edges();
        for (t, step) in self.steps.iter().enumerate() {
            let v = self.inserted_vertex(t);
            edges.extend(step.anchors.iter().map(|&a| Edge::new(a, v)));
        }
        FormationGraph::new(self.vertex_count(), edges)
    }

    /// Target distances in edge order.
    pub fn distances(&self) -> Vec<f64> {
        let mut d = match &self.seed {
            Seed::Edge { distance } => vec![*distance],
            Seed::Tetrahedron { distances } => distances.to_vec(),
        };
        for step in &self.steps {
            d.extend_from_slice(&step.distances);
        }
        d
    }
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Point at distances `ra`, `rb` from `a`, `b` in the plane; `sign` picks the
/// side (positive: counter-clockwise from `b - a`).
fn place_planar(a: &[f64], b: &[f64], ra: f64, rb: f64, sign: f64) -> Result<Vec<f64>> {
    let ab = sub(b, a);
    let len = norm(&ab);
    let scale = ra.max(rb).max(len);
    if len <= 1e-12 * scale {
        return Err(FormationError::NonRegularEmbedding(
            "anchors coincide".into(),
        ));
    }
    let u = [ab[0] / len, ab[1] / len];
    let along = (ra * ra - rb * rb + len * len) / (2.0 * len);
    let h2 = ra * ra - along * along;
    if h2 < -1e-12 * scale * scale {
        return Err(FormationError::InvalidTrace(format!(
            "distances {ra} and {rb} cannot be realized from anchors {len} apart"
        )));
    }
    let h = h2.max(0.0).sqrt();
    if h <= 1e-9 * scale {
        return Err(FormationError::NonRegularEmbedding(
            "new vertex would be collinear with its anchors".into(),
        ));
    }
    Ok(vec![
        a[0] + along * u[0] - sign * h * u[1],
        a[1] + along * u[1] + sign * h * u[0],
    ])
}

/// Point at distances `ra`, `rb`, `rc` from `a`, `b`, `c` in space; `sign`
/// picks the side of the anchor plane (positive: `det(b-a, c-a, p-a) > 0`).
fn place_spatial(
    anchors: [&[f64]; 3],
    radii: [f64; 3],
    sign: f64,
) -> Result<Vec<f64>> {
    let [a, b, c] = anchors;
    let [ra, rb, rc] = radii;
    let ab = sub(b, a);
    let ac = sub(c, a);
    let d = norm(&ab);
    let scale = ra.max(rb).max(rc).max(d).max(norm(&ac));
    if d <= 1e-12 * scale {
        return Err(FormationError::NonRegularEmbedding(
            "anchors coincide".into(),
        ));
    }
    let ex: Vec<f64> = ab.iter().map(|v| v / d).collect();
    let i = dot(&ex, &ac);
    let perp: Vec<f64> = ac.iter().zip(&ex).map(|(v, e)| v - i * e).collect();
    let j = norm(&perp);
    if j <= 1e-9 * scale {
        return Err(FormationError::NonRegularEmbedding(
            "anchors are collinear".into(),
        ));
    }
    let ey: Vec<f64> = perp.iter().map(|v| v / j).collect();
    let ez = cross(&ex, &ey);
    let x = (ra * ra - rb * rb + d * d) / (2.0 * d);
    let y = (ra * ra - rc * rc + i * i + j * j) / (2.0 * j) - (i / j) * x;
    let z2 = ra * ra - x * x - y * y;
    if z2 < -1e-12 * scale * scale {
        return Err(FormationError::InvalidTrace(format!(
            "distances ({ra}, {rb}, {rc}) cannot be realized from the anchor triangle"
        )));
    }
    let z = z2.max(0.0).sqrt();
    if z <= 1e-9 * scale {
        return Err(FormationError::NonRegularEmbedding(
            "new vertex would be coplanar with its anchors".into(),
        ));
    }
    Ok((0..3)
        .map(|k| a[k] + x * ex[k] + y * ey[k] + sign * z * ez[k])
        .collect())
}

fn realize(trace: &ConstructionTrace, signs: &mut dyn FnMut() -> f64) -> Result<Vec<f64>> {
    let m = trace.dim;
    let n = trace.vertex_count();
    let mut x = vec![0.0; m * n];
    match &trace.seed {
        Seed::Edge { distance } => {
            x[2] = *distance;
        }
        Seed::Tetrahedron { distances } => {
            // distances: 01, 12, 02, 03, 13, 23
            x[3] = distances[0];
            let p2 = place_planar(&[0.0, 0.0], &[distances[0], 0.0], distances[2], distances[1], 1.0)?;
            x[6] = p2[0];
            x[7] = p2[1];
            let p3 = {
                let (v0, v1, v2) = (x[0..3].to_vec(), x[3..6].to_vec(), x[6..9].to_vec());
                place_spatial([&v0, &v1, &v2], [distances[3], distances[4], distances[5]], signs())?
            };
            x[9..12].copy_from_slice(&p3);
        }
    }
    for (t, step) in trace.steps.iter().enumerate() {
        let v = trace.inserted_vertex(t);
        let anchor = |i: usize| x[step.anchors[i] * m..(step.anchors[i] + 1) * m].to_vec();
        let p = if m == 2 {
            place_planar(&anchor(0), &anchor(1), step.distances[0], step.distances[1], signs())?
        } else {
            let (a, b, c) = (anchor(0), anchor(1), anchor(2));
            place_spatial(
                [&a, &b, &c],
                [step.distances[0], step.distances[1], step.distances[2]],
                signs(),
            )?
        };
        let scale = step.distances.iter().cloned().fold(0.0, f64::max);
        if (0..v).any(|u| norm(&sub(&x[u * m..(u + 1) * m], &p)) <= 1e-9 * scale) {
            return Err(FormationError::NonRegularEmbedding(format!(
                "vertex {} would coincide with an existing vertex",
                v + 1
            )));
        }
        x[v * m..(v + 1) * m].copy_from_slice(&p);
    }
    Ok(x)
}

fn minimally_rigid_framework(
    graph: FormationGraph,
    dim: usize,
    positions: Vec<f64>,
    distances: Vec<f64>,
) -> Result<Framework> {
    let fw = Framework::new(graph, dim, positions, distances)?;
    let check = check_rigidity(&fw, DEFAULT_RANK_TOL)?;
    if !check.minimally_rigid {
        return Err(FormationError::NonRegularEmbedding(format!(
            "rigidity matrix has rank {} (expected {})",
            check.rank, check.expected_rank
        )));
    }
    Ok(fw)
}

/// Builds the framework described by `trace` and verifies it is minimally
/// rigid at the produced embedding.
pub fn build_from_trace(trace: &ConstructionTrace, placement: &Placement) -> Result<Framework> {
    let graph = trace.graph()?;
    let distances = trace.distances();
    let m = trace.dim;
    match placement {
        Placement::Explicit(positions) => {
            if positions.len() != m * trace.vertex_count() {
                return Err(FormationError::InvalidFramework(format!(
                    "expected {} coordinates, got {}",
                    m * trace.vertex_count(),
                    positions.len()
                )));
            }
            for (k, e) in graph.edges().iter().enumerate() {
                let z = sub(
                    &positions[e.tail * m..(e.tail + 1) * m],
                    &positions[e.head * m..(e.head + 1) * m],
                );
                let len = norm(&z);
                if (len - distances[k]).abs() > 1e-9 * distances[k].max(1.0) {
                    return Err(FormationError::InvalidFramework(format!(
                        "edge ({}, {}) has length {len} but the trace prescribes {}",
                        e.tail + 1,
                        e.head + 1,
                        distances[k]
                    )));
                }
            }
            minimally_rigid_framework(graph, m, positions.clone(), distances)
        }
        Placement::Realize { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut last_err = None;
            for attempt in 0..=MAX_PLACEMENT_RETRIES {
                let positions = if attempt == 0 {
                    realize(trace, &mut || 1.0)
                } else {
                    realize(trace, &mut || if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
                };
                match positions {
                    // unrealizable distances do not depend on the orientation choice
                    Err(e @ FormationError::InvalidTrace(_)) => return Err(e),
                    Err(e) => last_err = Some(e),
                    Ok(x) => match minimally_rigid_framework(graph.clone(), m, x, distances.clone()) {
                        Ok(fw) => return Ok(fw),
                        Err(e) => last_err = Some(e),
                    },
                }
            }
            Err(last_err.unwrap_or_else(|| {
                FormationError::NonRegularEmbedding("placement retries exhausted".into())
            }))
        }
    }
}

fn random_point<R: Rng>(rng: &mut R, dim: usize, half_width: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half_width..half_width)).collect()
}

/// Sine of the angle at `p` subtended by `a` and `b`.
fn planar_quality(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let u = sub(a, p);
    let v = sub(b, p);
    let (nu, nv) = (norm(&u), norm(&v));
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    (u[0] * v[1] - u[1] * v[0]).abs() / (nu * nv)
}

/// Normalized volume of the parallelepiped spanned from `p` to the anchors.
fn spatial_quality(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let (u, v, w) = (sub(a, p), sub(b, p), sub(c, p));
    let denom = norm(&u) * norm(&v) * norm(&w);
    if denom == 0.0 {
        return 0.0;
    }
    dot(&cross(&u, &v), &w).abs() / denom
}

const MIN_QUALITY: f64 = 0.2;
const MIN_EDGE: f64 = 0.2;
const BOX_HALF_WIDTH: f64 = 1.0;

fn sample_vertex<R: Rng>(
    rng: &mut R,
    dim: usize,
    anchors: &[&[f64]],
) -> Option<Vec<f64>> {
    for _ in 0..1000 {
        let p = random_point(rng, dim, BOX_HALF_WIDTH);
        if anchors.iter().any(|a| norm(&sub(&p, a)) < MIN_EDGE) {
            continue;
        }
        let q = if dim == 2 {
            planar_quality(&p, anchors[0], anchors[1])
        } else {
            spatial_quality(&p, anchors[0], anchors[1], anchors[2])
        };
        if q >= MIN_QUALITY {
            return Some(p);
        }
    }
    None
}

fn try_random_henneberg<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Result<(ConstructionTrace, Framework)> {
    let mut x: Vec<f64> = Vec::with_capacity(n * dim);
    let dist = |x: &[f64], i: usize, j: usize| norm(&sub(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]));
    let fail = || FormationError::GenerationFailed("could not sample a well-conditioned vertex".into());
    let seed;
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    if dim == 2 {
        let p0 = random_point(rng, 2, BOX_HALF_WIDTH);
        let p1 = loop {
            let p = random_point(rng, 2, BOX_HALF_WIDTH);
            if norm(&sub(&p, &p0)) >= 2.0 * MIN_EDGE {
                break p;
            }
        };
        x.extend(p0);
        x.extend(p1);
        seed = Seed::Edge { distance: dist(&x, 0, 1) };
    } else {
        let p0 = random_point(rng, 3, BOX_HALF_WIDTH);
        let p1 = loop {
            let p = random_point(rng, 3, BOX_HALF_WIDTH);
            if norm(&sub(&p, &p0)) >= 2.0 * MIN_EDGE {
                break p;
            }
        };
        let p2 = loop {
            let p = random_point(rng, 3, BOX_HALF_WIDTH);
            let (u, v) = (sub(&p0, &p), sub(&p1, &p));
            let area = norm(&cross(&u, &v)) / (norm(&u) * norm(&v)).max(1e-300);
            if norm(&u) >= MIN_EDGE && norm(&v) >= MIN_EDGE && area >= MIN_QUALITY {
                break p;
            }
        };
        let p3 = sample_vertex(rng, 3, &[&p0, &p1, &p2]).ok_or_else(fail)?;
        for p in [p0, p1, p2, p3] {
            x.extend(p);
        }
        let d: Vec<f64> = TETRAHEDRON_EDGES.iter().map(|&(i, j)| dist(&x, i, j)).collect();
        seed = Seed::Tetrahedron {
            distances: [d[0], d[1], d[2], d[3], d[4], d[5]],
        };
        triangles.extend([[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]);
    }
    let seed_n = if dim == 2 { 2 } else { 4 };
    let mut steps = Vec::new();
    for v in seed_n..n {
        let anchors: Vec<usize> = if dim == 2 {
            let a = rng.gen_range(0..v);
            let b = loop {
                let b = rng.gen_range(0..v);
                if b != a {
                    break b;
                }
            };
            vec![a, b]
        } else {
            triangles[rng.gen_range(0..triangles.len())].to_vec()
        };
        let anchor_pos: Vec<&[f64]> = anchors.iter().map(|&a| &x[a * dim..(a + 1) * dim]).collect();
        let p = sample_vertex(rng, dim, &anchor_pos).ok_or_else(fail)?;
        x.extend(p);
        let distances = anchors.iter().map(|&a| dist(&x, a, v)).collect();
        if dim == 3 {
            let [a, b, c] = [anchors[0], anchors[1], anchors[2]];
            triangles.extend([[a, b, v], [a, c, v], [b, c, v]]);
        }
        steps.push(Insertion { anchors, distances });
    }
    let trace = ConstructionTrace { dim, seed, steps };
    let fw = build_from_trace(&trace, &Placement::Explicit(x))?;
    Ok((trace, fw))
}

/// Random minimally rigid framework on `n` vertices grown by insertions, with
/// vertices in `[-1, 1]^dim` and every insertion well away from degenerate
/// (collinear / coplanar) placements.
pub fn random_henneberg<R: Rng>(n: usize, dim: usize, rng: &mut R) -> Result<(ConstructionTrace, Framework)> {
    match dim {
        2 if n < 2 => return Err(FormationError::TooFewAgents { n, dim }),
        3 if n < 4 => return Err(FormationError::TooFewAgents { n, dim }),
        2 | 3 => {}
        d => return Err(FormationError::UnsupportedDimension(d)),
    }
    let mut last = None;
    for _ in 0..MAX_PLACEMENT_RETRIES {
        match try_random_henneberg(n, dim, rng) {
            Ok(out) => return Ok(out),
            Err(e) => last = Some(e),
        }
    }
    Err(FormationError::GenerationFailed(format!(
        "retries exhausted: {}",
        last.map(|e| e.to_string()).unwrap_or_default()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rigidity::{edge_function, rigidity};

    fn planar_triangle_trace() -> ConstructionTrace {
        ConstructionTrace {
            dim: 2,
            seed: Seed::Edge { distance: 1.0 },
            steps: vec![Insertion {
                anchors: vec![0, 1],
                distances: vec![1.0, 1.0],
            }],
        }
    }

    #[test]
    fn planar_seed_plus_one_insertion_is_a_triangle() {
        let fw = build_from_trace(&planar_triangle_trace(), &Placement::Realize { seed: 0 }).unwrap();
        assert_eq!(fw.graph().edge_count(), 3);
        let c = rigidity(&fw).unwrap();
        assert_eq!(c.rank, 3);
        assert!(c.minimally_rigid);
        // positive orientation: third vertex above the seed edge
        assert!(fw.position(2)[1] > 0.0);
        let f = edge_function(&fw);
        for (k, d) in fw.target_distances().iter().enumerate() {
            assert!((f[k] - d * d).abs() < 1e-12);
        }
    }

    #[test]
    fn anchors_own_the_new_edges() {
        let g = planar_triangle_trace().graph().unwrap();
        assert_eq!(g.edges(), &[Edge::new(0, 1), Edge::new(0, 2), Edge::new(1, 2)]);
    }

    #[test]
    fn double_tetrahedron_from_trace() {
        let d = 5.0;
        let trace = ConstructionTrace {
            dim: 3,
            seed: Seed::Tetrahedron { distances: [d; 6] },
            steps: vec![Insertion {
                anchors: vec![0, 1, 2],
                distances: vec![d; 3],
            }],
        };
        let fw = build_from_trace(&trace, &Placement::Realize { seed: 1 }).unwrap();
        assert_eq!(fw.graph().edge_count(), 9);
        let c = rigidity(&fw).unwrap();
        assert_eq!(c.rank, 9);
        // same-side placement would make the apexes coincide, so they end up
        // mirrored through the base plane
        let apart: f64 = (0..3).map(|k| (fw.position(3)[k] - fw.position(4)[k]).powi(2)).sum::<f64>().sqrt();
        let height = d * (2.0f64 / 3.0).sqrt();
        assert!((apart - 2.0 * height).abs() < 1e-9);
    }

    #[test]
    fn trace_validation_errors() {
        let mut t = planar_triangle_trace();
        t.steps[0].anchors = vec![0, 2];
        assert!(matches!(t.validate(), Err(FormationError::InvalidTrace(_))));

        let mut t = planar_triangle_trace();
        t.steps[0].anchors = vec![1, 1];
        assert!(t.validate().is_err());

        let mut t = planar_triangle_trace();
        t.steps[0].distances = vec![1.0];
        assert!(t.validate().is_err());

        let mut t = planar_triangle_trace();
        t.dim = 3;
        assert!(t.validate().is_err());

        // 3D anchors must be pairwise adjacent: vertices 3 and 4 are not
        let t = ConstructionTrace {
            dim: 3,
            seed: Seed::Tetrahedron { distances: [1.0; 6] },
            steps: vec![
                Insertion { anchors: vec![0, 1, 2], distances: vec![1.0; 3] },
                Insertion { anchors: vec![0, 3, 4], distances: vec![1.0; 3] },
            ],
        };
        assert!(matches!(t.validate(), Err(FormationError::InvalidTrace(_))));
    }

    #[test]
    fn unrealizable_distances_are_reported() {
        let mut t = planar_triangle_trace();
        t.steps[0].distances = vec![0.2, 0.3];
        assert!(matches!(
            build_from_trace(&t, &Placement::Realize { seed: 0 }),
            Err(FormationError::InvalidTrace(_))
        ));
    }

    #[test]
    fn collinear_insertion_is_rejected() {
        let mut t = planar_triangle_trace();
        t.steps[0].distances = vec![0.5, 0.5];
        assert!(matches!(
            build_from_trace(&t, &Placement::Realize { seed: 0 }),
            Err(FormationError::NonRegularEmbedding(_))
        ));
    }

    #[test]
    fn explicit_placement_must_match_distances() {
        let t = planar_triangle_trace();
        let bad = vec![0.0, 0.0, 1.0, 0.0, 0.5, 0.5];
        assert!(build_from_trace(&t, &Placement::Explicit(bad)).is_err());
        let h = 3f64.sqrt() / 2.0;
        let good = vec![0.0, 0.0, 1.0, 0.0, 0.5, h];
        assert!(build_from_trace(&t, &Placement::Explicit(good)).is_ok());
    }

    #[test]
    fn random_planar_trace_with_eight_vertices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (trace, fw) = random_henneberg(8, 2, &mut rng).unwrap();
        assert_eq!(trace.vertex_count(), 8);
        assert_eq!(fw.graph().edge_count(), 13);
        let c = rigidity(&fw).unwrap();
        assert!(c.infinitesimally_rigid && c.rank == 13);
    }

    #[test]
    fn random_spatial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (trace, fw) = random_henneberg(7, 3, &mut rng).unwrap();
        trace.validate().unwrap();
        assert_eq!(fw.graph().edge_count(), 3 * 7 - 6);
        assert!(rigidity(&fw).unwrap().minimally_rigid);
    }
}
