//! Unit-area triangulated closed surfaces and their metric.

mod build;
mod io;

pub use io::{read_mesh_file, read_obj, read_off};

use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::error::{MfeError, Result};
use crate::par;

/// Largest icosahedral subdivision level accepted by [`SurfaceMesh::unit_sphere`].
pub const MAX_SPHERE_LEVEL: u32 = 8;

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MeshId(u64);

impl MeshId {
    fn fresh() -> Self {
        MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// How distances between vertices are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Metric {
    /// Great-circle distance on the sphere of the given embedding radius.
    RoundSphere { radius: f64 },
    /// Quotient metric of the rectangle `[0, lx) x [0, ly)` with opposite sides glued.
    FlatTorus { lx: f64, ly: f64 },
    /// Shortest edge-path length; an upper bound on the polyhedral geodesic distance.
    EdgeGraph,
}

/// A closed triangulated surface rescaled to unit total area.
///
/// Immutable after construction; all queries are pure.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    id: MeshId,
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_length: Vec<f64>,
    face_area: Vec<f64>,
    vertex_area: Vec<f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
    metric: Metric,
    genus_hint: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct MeshSummary {
    pub V: usize,
    pub E: usize,
    pub F: usize,
    pub chi: i64,
    pub total_area: f64,
    pub max_edge: f64,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl SurfaceMesh {
    /// Icosahedral subdivision of the given level, projected to a round sphere
    /// and uniformly rescaled to unit area.
    pub fn unit_sphere(level: u32) -> Result<Self> {
        if level > MAX_SPHERE_LEVEL {
            return Err(MfeError::Resource(format!(
                "sphere subdivision level {level} exceeds the maximum {MAX_SPHERE_LEVEL}"
            )));
        }
        let (unit_vertices, faces) = build::icosphere(level);
        let mut mesh = Self::assemble_geometry(unit_vertices, faces, Metric::RoundSphere { radius: 1.0 })?;
        let scale = 1.0 / mesh.total_area().sqrt();
        mesh.rescale(scale);
        mesh.metric = Metric::RoundSphere { radius: scale };
        mesh.genus_hint = 0;
        Ok(mesh)
    }

    /// Regular `n x m` grid on a flat rectangle with aspect ratio `lx / ly`,
    /// opposite sides identified, each cell split along its diagonal, area 1.
    pub fn flat_torus(n: usize, m: usize, aspect: f64) -> Result<Self> {
        if n < 3 || m < 3 {
            return Err(MfeError::invalid(format!("torus grid needs n, m >= 3 (got {n} x {m})")));
        }
        if !(aspect.is_finite() && aspect > 0.0) {
            return Err(MfeError::invalid(format!(
                "torus aspect must be positive (got {aspect})"
            )));
        }
        let lx = aspect.sqrt();
        let ly = 1.0 / lx;
        let (vertices, faces) = build::torus_grid(n, m, lx, ly);
        let mut mesh = Self::assemble_geometry(vertices, faces, Metric::FlatTorus { lx, ly })?;
        mesh.genus_hint = 1;
        Ok(mesh)
    }

    /// Builds a mesh from raw triangles, checks that it is a closed manifold and
    /// rescales the embedding to unit area. Distances use the edge graph.
    pub fn from_triangles(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mut mesh = Self::assemble_geometry(vertices, faces, Metric::EdgeGraph)?;
        let area = mesh.total_area();
        if !(area.is_finite() && area > 0.0) {
            return Err(MfeError::invalid(format!("mesh has non-positive total area {area}")));
        }
        mesh.rescale(1.0 / area.sqrt());
        let chi = mesh.euler_characteristic();
        mesh.genus_hint = (2 - chi) / 2;
        Ok(mesh)
    }

    fn assemble_geometry(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>, metric: Metric) -> Result<Self> {
        let nv = vertices.len();
        if nv == 0 || faces.is_empty() {
            return Err(MfeError::invalid("empty mesh"));
        }
        let mut edge_faces: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(MfeError::invalid(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(MfeError::NotManifold(format!("face {fi} repeats a vertex")));
            }
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = [a.min(b), a.max(b)];
                let count = edge_faces.entry(key).or_insert_with(|| {
                    edges.push(key);
                    0
                });
                *count += 1;
            }
        }
        if let Some((e, c)) = edge_faces.iter().find(|(_, &c)| c != 2) {
            return Err(MfeError::NotManifold(format!(
                "edge ({}, {}) is shared by {c} faces",
                e[0], e[1]
            )));
        }
        let mut mesh = SurfaceMesh {
            id: MeshId::fresh(),
            vertices,
            faces,
            edges,
            edge_length: Vec::new(),
            face_area: Vec::new(),
            vertex_area: Vec::new(),
            adjacency: Vec::new(),
            metric,
            genus_hint: 0,
        };
        if mesh.vertex_area_is_unused() {
            return Err(MfeError::NotManifold("mesh has isolated vertices".into()));
        }
        mesh.recompute_measures();
        Ok(mesh)
    }

    fn vertex_area_is_unused(&self) -> bool {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        used.iter().any(|u| !u)
    }

    fn rescale(&mut self, s: f64) {
        for p in &mut self.vertices {
            for c in p.iter_mut() {
                *c *= s;
            }
        }
        if let Metric::FlatTorus { lx, ly } = &mut self.metric {
            *lx *= s;
            *ly *= s;
        }
        self.recompute_measures();
    }

    fn recompute_measures(&mut self) {
        self.edge_length = self.edges.iter().map(|&[a, b]| norm3(self.edge_vector(a, b))).collect();
        self.face_area = self
            .faces
            .iter()
            .map(|&[a, b, c]| 0.5 * norm3(cross(self.edge_vector(a, b), self.edge_vector(a, c))))
            .collect();
        let mut va = vec![0.0; self.vertices.len()];
        for (f, &area) in self.faces.iter().zip(&self.face_area) {
            for &v in f {
                va[v] += area / 3.0;
            }
        }
        self.vertex_area = va;
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (&[a, b], &l) in self.edges.iter().zip(&self.edge_length) {
            adj[a].push((b, l));
            adj[b].push((a, l));
        }
        for nb in adj.iter_mut() {
            nb.sort_by_key(|&(v, _)| v);
        }
        self.adjacency = adj;
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn genus_hint(&self) -> i64 {
        self.genus_hint
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_lengths(&self) -> &[f64] {
        &self.edge_length
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_area
    }

    /// Lumped (barycentric) vertex areas; they sum to one.
    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_area
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(u, _)| u)
    }

    pub fn total_area(&self) -> f64 {
        self.vertex_area.iter().sum()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edge_length.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.edge_length.iter().sum::<f64>() / self.edge_length.len() as f64
    }

    pub fn summary(&self) -> MeshSummary {
        MeshSummary {
            V: self.num_vertices(),
            E: self.num_edges(),
            F: self.num_faces(),
            chi: self.euler_characteristic(),
            total_area: self.total_area(),
            max_edge: self.max_edge_length(),
        }
    }

    /// Embedding vector from `a` to `b`; on the torus the shortest periodic image is used.
    pub fn edge_vector(&self, a: usize, b: usize) -> [f64; 3] {
        let mut d = sub(self.vertices[b], self.vertices[a]);
        if let Metric::FlatTorus { lx, ly } = self.metric {
            d[0] -= lx * (d[0] / lx).round();
            d[1] -= ly * (d[1] / ly).round();
        }
        d
    }

    /// Gradient of the piecewise-linear interpolant of `values` on face `f`.
    pub fn face_gradient(&self, f: usize, values: &[f64]) -> [f64; 3] {
        let [a, b, c] = self.faces[f];
        let e1 = self.edge_vector(a, b);
        let e2 = self.edge_vector(a, c);
        let n = cross(e1, e2);
        let nn = dot3(n, n);
        let (d1, d2) = (values[b] - values[a], values[c] - values[a]);
        // ∇u = (d1 (e2 × n) + d2 (n × e1)) / |n|²
        let t1 = cross(e2, n);
        let t2 = cross(n, e1);
        [
            (d1 * t1[0] + d2 * t2[0]) / nn,
            (d1 * t1[1] + d2 * t2[1]) / nn,
            (d1 * t1[2] + d2 * t2[2]) / nn,
        ]
    }

    /// Distance between two vertices in the mesh metric.
    pub fn geodesic_distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        match self.metric {
            Metric::EdgeGraph => self.dijkstra(a)[b],
            _ => self.analytic_distance(a, b),
        }
    }

    fn analytic_distance(&self, a: usize, b: usize) -> f64 {
        match self.metric {
            Metric::RoundSphere { radius } => {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                radius * norm3(cross(p, q)).atan2(dot3(p, q))
            }
            Metric::FlatTorus { .. } => norm3(self.edge_vector(a, b)),
            Metric::EdgeGraph => unreachable!(),
        }
    }

    /// Distances from `source` to every vertex.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        match self.metric {
            Metric::EdgeGraph => self.dijkstra(source),
            _ => par::map_range(self.num_vertices(), |v| {
                if v == source {
                    0.0
                } else {
                    self.analytic_distance(source, v)
                }
            }),
        }
    }

    fn dijkstra(&self, source: usize) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.num_vertices()];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(HeapItem(0.0, source));
        while let Some(HeapItem(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(u, l) in &self.adjacency[v] {
                let nd = d + l;
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push(HeapItem(nd, u));
                }
            }
        }
        dist
    }

    /// Vertices within distance `r` of `center`, with their distances, in
    /// increasing vertex order.
    pub fn ball(&self, center: usize, r: f64) -> Vec<(usize, f64)> {
        let mut seen = HashMap::new();
        seen.insert(center, 0.0);
        match self.metric {
            Metric::EdgeGraph => {
                let mut heap = BinaryHeap::new();
                heap.push(HeapItem(0.0, center));
                while let Some(HeapItem(d, v)) = heap.pop() {
                    if d > seen[&v] {
                        continue;
                    }
                    for &(u, l) in &self.adjacency[v] {
                        let nd = d + l;
                        if nd <= r && seen.get(&u).is_none_or(|&old| nd < old) {
                            seen.insert(u, nd);
                            heap.push(HeapItem(nd, u));
                        }
                    }
                }
            }
            _ => {
                let mut stack = vec![center];
                while let Some(v) = stack.pop() {
                    for &(u, _) in &self.adjacency[v] {
                        if seen.contains_key(&u) {
                            continue;
                        }
                        let d = self.analytic_distance(center, u);
                        if d <= r {
                            seen.insert(u, d);
                            stack.push(u);
                        }
                    }
                }
            }
        }
        let mut out: Vec<(usize, f64)> = seen.into_iter().collect();
        out.sort_by_key(|&(v, _)| v);
        out
    }

    /// Diameter of the surface: exact for the built-in metrics, a double-sweep
    /// estimate on the edge graph otherwise.
    pub fn diameter(&self) -> f64 {
        match self.metric {
            Metric::RoundSphere { radius } => std::f64::consts::PI * radius,
            Metric::FlatTorus { lx, ly } => 0.5 * lx.hypot(ly),
            Metric::EdgeGraph => {
                let d0 = self.dijkstra(0);
                let far = argmax(&d0);
                self.dijkstra(far).into_iter().fold(0.0, f64::max)
            }
        }
    }

    /// Greedy farthest-point sample of `count` vertices starting at `start`.
    /// Ties go to the lowest vertex index.
    pub fn farthest_point_sample(&self, count: usize, start: usize) -> Vec<usize> {
        let count = count.min(self.num_vertices());
        if count == 0 {
            return Vec::new();
        }
        let mut picked = vec![start];
        let mut nearest = self.distances_from(start);
        while picked.len() < count {
            let next = argmax(&nearest);
            picked.push(next);
            let d = self.distances_from(next);
            for (n, x) in nearest.iter_mut().zip(d) {
                *n = n.min(x);
            }
        }
        picked
    }

    /// Checks the structural invariants: closed manifold, unit area, positive measures.
    pub fn validate(&self) -> Result<()> {
        let area = self.total_area();
        if (area - 1.0).abs() > 1e-12 {
            return Err(MfeError::invalid(format!("total area {area} differs from 1")));
        }
        if let Some((f, &a)) = self.face_area.iter().enumerate().find(|(_, &a)| !(a > 0.0)) {
            return Err(MfeError::DegenerateFace { face: f, area: a });
        }
        if let Some(e) = self.edge_length.iter().position(|&l| !(l > 0.0)) {
            return Err(MfeError::invalid(format!("edge {e} has zero length")));
        }
        Ok(())
    }
}

/// Index of the largest entry; ties resolved to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
