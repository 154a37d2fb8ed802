//! Field output as legacy-ASCII VTK unstructured grids or plain CSV.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{FieldCoefficients, MixedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Vtk,
    Csv,
}

impl std::str::FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vtk" => Ok(Self::Vtk),
            "csv" => Ok(Self::Csv),
            other => Err(Error::Config(format!("unknown export format '{other}' (expected vtk or csv)"))),
        }
    }
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Vtk => "vtk",
            Self::Csv => "csv",
        }
    }
}

/// Vertex values `(u₁, u₂, p)`; vertex dofs are nodal values in both pairs.
fn vertex_values<'a>(
    space: &'a MixedSpace,
    field: &'a FieldCoefficients,
) -> impl Iterator<Item = [f64; 3]> + 'a {
    let ns = space.scalar_velocity_dofs();
    (0..space.mesh().num_vertices())
        .map(move |v| [field.velocity[v], field.velocity[ns + v], field.pressure[v]])
}

pub fn render_vtk(space: &MixedSpace, field: &FieldCoefficients) -> String {
    let mesh = space.mesh();
    let nv = mesh.num_vertices();
    let nt = mesh.num_triangles();
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "time-fractional Navier-Stokes fields t={:?}", field.time);
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?} 0.0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    s.push_str("VECTORS velocity double\n");
    let values: Vec<[f64; 3]> = vertex_values(space, field).collect();
    for v in &values {
        let _ = writeln!(s, "{:?} {:?} 0.0", v[0], v[1]);
    }
    s.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for v in &values {
        let _ = writeln!(s, "{:?}", v[2]);
    }
    s
}

pub fn render_csv(space: &MixedSpace, field: &FieldCoefficients) -> String {
    let mut s = String::from("x,y,u1,u2,p\n");
    for (p, v) in space.mesh().vertices.iter().zip(vertex_values(space, field)) {
        let _ = writeln!(s, "{:?},{:?},{:?},{:?},{:?}", p[0], p[1], v[0], v[1], v[2]);
    }
    s
}

pub fn export_fields(
    field: &FieldCoefficients,
    space: &MixedSpace,
    path: &Path,
    format: ExportFormat,
) -> Result<()> {
    let body = match format {
        ExportFormat::Vtk => render_vtk(space, field),
        ExportFormat::Csv => render_csv(space, field),
    };
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}
