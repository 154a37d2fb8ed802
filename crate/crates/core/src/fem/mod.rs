//! Inf-sup stable mixed spaces on [`TriMesh`]: continuous linear pressure
//! paired with velocity nodes at vertices and edge midpoints.

mod assembly;
pub mod quadrature;
pub mod sparse;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::TriMesh;
use quadrature::{iso_quadratic_points, quadratic_points, RefPoint};

pub use assembly::{
    assemble_convection, assemble_forcing, assemble_load, assemble_operators,
    assemble_operators_in_order, interpolate, l2_error, l2_norm_velocity, AssembledOperators,
};
pub use sparse::{CsrMatrix, TripletBuilder};

/// Velocity/pressure element pair. Both share the same node layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ElementPair {
    /// Quadratic velocity, linear pressure (Taylor–Hood).
    TaylorHood,
    /// Piecewise-linear velocity on the midpoint-refined mesh, linear
    /// pressure on the coarse mesh.
    #[default]
    IsoTaylorHood,
}

impl std::str::FromStr for ElementPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "taylor-hood" | "p2p1" => Ok(Self::TaylorHood),
            "iso-p2p1" | "p1isop2" => Ok(Self::IsoTaylorHood),
            other => Err(Error::Config(format!(
                "unknown element pair '{other}' (expected taylor-hood or iso-p2p1)"
            ))),
        }
    }
}

impl ElementPair {
    pub fn name(self) -> &'static str {
        match self {
            Self::TaylorHood => "taylor-hood",
            Self::IsoTaylorHood => "iso-p2p1",
        }
    }

    fn reference_points(self) -> Vec<RefPoint> {
        match self {
            Self::TaylorHood => quadratic_points(),
            Self::IsoTaylorHood => iso_quadratic_points(),
        }
    }
}

/// Degree-of-freedom layout of the mixed space.
///
/// Scalar velocity dofs are numbered vertices first, then edge midpoints; the
/// full velocity vector stores all first components before all second
/// components. Pressure dofs are the mesh vertices.
#[derive(Debug, Clone)]
pub struct MixedSpace {
    mesh: Arc<TriMesh>,
    element: ElementPair,
    points: Vec<RefPoint>,
    scalar_dofs: usize,
    /// Per scalar velocity dof, true when it sits on the boundary.
    scalar_dirichlet: Vec<bool>,
    /// `∫_Ω q_j dx` for each pressure basis function.
    pub mean_weights: Vec<f64>,
}

impl MixedSpace {
    pub fn new(mesh: Arc<TriMesh>) -> Self {
        Self::with_element(mesh, ElementPair::default())
    }

    pub fn with_element(mesh: Arc<TriMesh>, element: ElementPair) -> Self {
        let nv = mesh.num_vertices();
        let scalar_dofs = nv + mesh.num_edges();
        let scalar_dirichlet = mesh
            .boundary_vertex
            .iter()
            .chain(&mesh.boundary_edge)
            .copied()
            .collect();
        let mut mean_weights = vec![0.0; nv];
        for t in 0..mesh.num_triangles() {
            let third = mesh.area(t) / 3.0;
            for &v in &mesh.triangles[t] {
                mean_weights[v] += third;
            }
        }
        Self {
            mesh,
            element,
            points: element.reference_points(),
            scalar_dofs,
            scalar_dirichlet,
            mean_weights,
        }
    }

    pub fn mesh(&self) -> &TriMesh {
        &self.mesh
    }

    pub fn element(&self) -> ElementPair {
        self.element
    }

    /// Element quadrature points with tabulated velocity shape functions.
    pub fn reference_points(&self) -> &[RefPoint] {
        &self.points
    }

    pub fn mesh_arc(&self) -> Arc<TriMesh> {
        Arc::clone(&self.mesh)
    }

    pub fn scalar_velocity_dofs(&self) -> usize {
        self.scalar_dofs
    }

    pub fn velocity_dofs(&self) -> usize {
        2 * self.scalar_dofs
    }

    pub fn pressure_dofs(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn is_scalar_dirichlet(&self, s: usize) -> bool {
        self.scalar_dirichlet[s]
    }

    /// Dirichlet mask over the full (two-component) velocity vector.
    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.scalar_dirichlet[dof % self.scalar_dofs]
    }

    pub fn constrained_scalar_dofs(&self) -> usize {
        self.scalar_dirichlet.iter().filter(|&&b| b).count()
    }

    /// Global scalar velocity dofs of triangle `t` in local basis order.
    pub fn local_velocity_dofs(&self, t: usize) -> [usize; 6] {
        let tri = self.mesh.triangles[t];
        let e = self.mesh.triangle_edges[t];
        let nv = self.mesh.num_vertices();
        [tri[0], tri[1], tri[2], nv + e[0], nv + e[1], nv + e[2]]
    }

    /// Node location of scalar velocity dof `s`.
    pub fn velocity_node(&self, s: usize) -> [f64; 2] {
        let nv = self.mesh.num_vertices();
        if s < nv {
            self.mesh.vertices[s]
        } else {
            self.mesh.edge_midpoint(s - nv)
        }
    }

    /// Zeroes every Dirichlet entry of a velocity-sized vector.
    pub fn apply_dirichlet(&self, v: &mut [f64]) {
        for (i, x) in v.iter_mut().enumerate() {
            if self.is_dirichlet(i) {
                *x = 0.0;
            }
        }
    }

    /// `mᵀ p`, the discrete mean of a pressure field.
    pub fn pressure_mean(&self, p: &[f64]) -> f64 {
        self.mean_weights.iter().zip(p).map(|(m, q)| m * q).sum()
    }

    pub fn zero_field(&self, time: f64) -> FieldCoefficients {
        FieldCoefficients {
            velocity: vec![0.0; self.velocity_dofs()],
            pressure: vec![0.0; self.pressure_dofs()],
            time,
        }
    }
}

pub fn build_mixed_space(mesh: Arc<TriMesh>, element: ElementPair) -> MixedSpace {
    MixedSpace::with_element(mesh, element)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoefficients {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub time: f64,
}

impl FieldCoefficients {
    /// First and second velocity components as scalar coefficient slices.
    pub fn components(&self) -> (&[f64], &[f64]) {
        self.velocity.split_at(self.velocity.len() / 2)
    }
}
