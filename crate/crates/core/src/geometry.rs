//! Conforming triangulations of the unit square.

use std::collections::BTreeMap;

const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    /// Vertex indices with `v[0] < v[1]`.
    pub v: [usize; 2],
}

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<Edge>,
    /// Adjacent triangles per edge (one for boundary edges, two for interior).
    pub edge_triangles: Vec<Vec<usize>>,
    /// Per triangle, the edge opposite each local vertex.
    pub triangle_edges: Vec<[usize; 3]>,
    pub boundary_vertex: Vec<bool>,
    pub boundary_edge: Vec<bool>,
    pub h: f64,
    /// Cells per side of the structured lattice this mesh was built from.
    cells_per_side: usize,
}

fn on_boundary(p: [f64; 2]) -> bool {
    p.iter()
        .any(|&c| c.abs() <= BOUNDARY_TOL || (c - 1.0).abs() <= BOUNDARY_TOL)
}

/// Signed area of the triangle `(a, b, c)`; positive when counterclockwise.
pub fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Uniform `n × n` lattice on `[0,1]²`, each cell cut along its lower-left to
/// upper-right diagonal.
pub fn build_structured_mesh(n: usize) -> TriMesh {
    assert!(n >= 1, "a structured mesh needs at least one cell per side");
    let np = n + 1;
    let vid = |i: usize, j: usize| j * np + i;
    let vertices: Vec<[f64; 2]> = (0..np)
        .flat_map(|j| (0..np).map(move |i| [i as f64 / n as f64, j as f64 / n as f64]))
        .collect();
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriMesh::from_parts(vertices, triangles, n)
}

/// One level of uniform refinement (cells per side doubled).
pub fn refine_uniform(mesh: &TriMesh) -> TriMesh {
    build_structured_mesh(2 * mesh.cells_per_side)
}

impl TriMesh {
    fn from_parts(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, cells_per_side: usize) -> Self {
        let mut index: BTreeMap<Edge, usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<Vec<usize>> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (k, slot) in local.iter_mut().enumerate() {
                let (p, q) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let e = Edge { v: [p.min(q), p.max(q)] };
                let id = *index.entry(e).or_insert_with(|| {
                    edges.push(e);
                    edge_triangles.push(Vec::new());
                    edges.len() - 1
                });
                edge_triangles[id].push(t);
                *slot = id;
            }
            triangle_edges.push(local);
        }
        let boundary_vertex = vertices.iter().map(|&p| on_boundary(p)).collect();
        let boundary_edge = edge_triangles.iter().map(|ts| ts.len() == 1).collect();
        let h = triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| vertices[i]);
                dist(a, b).max(dist(b, c)).max(dist(c, a))
            })
            .fold(0.0, f64::max);
        TriMesh {
            vertices,
            triangles,
            edges,
            edge_triangles,
            triangle_edges,
            boundary_vertex,
            boundary_edge,
            h,
            cells_per_side,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        signed_area(a, b, c)
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [p, q] = self.edges[e].v.map(|i| self.vertices[i]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }
}
