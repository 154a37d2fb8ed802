use super::quadrature::AffineTriangle;
use super::sparse::{CsrMatrix, TripletBuilder};
use super::{FieldCoefficients, MixedSpace};

/// Operators of the weak form that do not depend on the solution.
#[derive(Debug, Clone)]
pub struct AssembledOperators {
    /// Velocity mass `(u, v)`, block diagonal over components.
    pub mass: CsrMatrix,
    /// Viscous stiffness `ν (∇u, ∇v)`, block diagonal over components.
    pub stiffness: CsrMatrix,
    /// `B[j, i] = (q_j, div φ_i)`, pressure rows by velocity columns.
    pub divergence: CsrMatrix,
    /// Mean-value row `m_j = ∫ q_j`.
    pub mean: Vec<f64>,
    pub nu: f64,
}

struct LocalData {
    tri: AffineTriangle,
    dofs: [usize; 6],
    pdofs: [usize; 3],
}

fn local(space: &MixedSpace, t: usize) -> LocalData {
    LocalData {
        tri: AffineTriangle::new(space.mesh().triangle_coords(t)),
        dofs: space.local_velocity_dofs(t),
        pdofs: space.mesh().triangles[t],
    }
}

pub fn assemble_operators(space: &MixedSpace, nu: f64) -> AssembledOperators {
    let order: Vec<usize> = (0..space.mesh().num_triangles()).collect();
    assemble_operators_in_order(space, nu, &order)
}

/// Same as [`assemble_operators`] but visits elements in the given order.
pub fn assemble_operators_in_order(space: &MixedSpace, nu: f64, order: &[usize]) -> AssembledOperators {
    assert!(nu > 0.0, "viscosity must be positive");
    let ns = space.scalar_velocity_dofs();
    let np = space.pressure_dofs();
    let cap = 36 * order.len();
    let mut mass = TripletBuilder::with_capacity(ns, ns, cap);
    let mut stiff = TripletBuilder::with_capacity(ns, ns, cap);
    let mut div = TripletBuilder::with_capacity(np, 2 * ns, 36 * order.len());
    for &t in order {
        let LocalData { tri, dofs, pdofs } = local(space, t);
        let mut me = [[0.0; 6]; 6];
        let mut ke = [[0.0; 6]; 6];
        let mut be = [[[0.0; 6]; 3]; 2];
        for qp in space.reference_points() {
            let (l, wa) = (&qp.bary, qp.weight * tri.area);
            let phi = qp.phi;
            let dphi = qp.gradients(&tri.grad_bary);
            for i in 0..6 {
                for j in 0..6 {
                    me[i][j] += wa * phi[i] * phi[j];
                    ke[i][j] += wa * (dphi[i][0] * dphi[j][0] + dphi[i][1] * dphi[j][1]);
                }
                for (q, lq) in l.iter().enumerate() {
                    be[0][q][i] += wa * lq * dphi[i][0];
                    be[1][q][i] += wa * lq * dphi[i][1];
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                mass.push(dofs[i], dofs[j], me[i][j]);
                stiff.push(dofs[i], dofs[j], nu * ke[i][j]);
            }
        }
        for (c, bc) in be.iter().enumerate() {
            for (q, row) in bc.iter().enumerate() {
                for i in 0..6 {
                    div.push(pdofs[q], c * ns + dofs[i], row[i]);
                }
            }
        }
    }
    AssembledOperators {
        mass: mass.build().block_diag2(),
        stiffness: stiff.build().block_diag2(),
        divergence: div.build(),
        mean: space.mean_weights.clone(),
        nu,
    }
}

/// Matrix of `v ↦ b(u, v, ·)` with
/// `b(u, v, w) = ((u·∇)v + ½ (div u) v, w)`, so that `wᵀ N v = b(u, v, w)`.
pub fn assemble_convection(space: &MixedSpace, u: &[f64]) -> CsrMatrix {
    let ns = space.scalar_velocity_dofs();
    assert_eq!(u.len(), 2 * ns, "transport field has wrong length");
    let (u1, u2) = u.split_at(ns);
    let ntri = space.mesh().num_triangles();
    let mut scalar = TripletBuilder::with_capacity(ns, ns, 36 * ntri);
    for t in 0..ntri {
        let LocalData { tri, dofs, .. } = local(space, t);
        let mut ne = [[0.0; 6]; 6];
        for qp in space.reference_points() {
            let wa = qp.weight * tri.area;
            let phi = qp.phi;
            let dphi = qp.gradients(&tri.grad_bary);
            let (mut a, mut b, mut div) = (0.0, 0.0, 0.0);
            for k in 0..6 {
                a += u1[dofs[k]] * phi[k];
                b += u2[dofs[k]] * phi[k];
                div += u1[dofs[k]] * dphi[k][0] + u2[dofs[k]] * dphi[k][1];
            }
            for i in 0..6 {
                for j in 0..6 {
                    let transport = a * dphi[j][0] + b * dphi[j][1];
                    ne[i][j] += wa * (transport + 0.5 * div * phi[j]) * phi[i];
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                scalar.push(dofs[i], dofs[j], ne[i][j]);
            }
        }
    }
    scalar.build().block_diag2()
}

/// `∫ f·φ_i` for every velocity basis function, boundary rows included.
pub fn assemble_load(space: &MixedSpace, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let ns = space.scalar_velocity_dofs();
    let mut load = vec![0.0; 2 * ns];
    for t in 0..space.mesh().num_triangles() {
        let LocalData { tri, dofs, .. } = local(space, t);
        for qp in space.reference_points() {
            let wa = qp.weight * tri.area;
            let [x, y] = tri.point(qp.bary);
            let fv = f(x, y);
            let phi = qp.phi;
            for k in 0..6 {
                load[dofs[k]] += wa * fv[0] * phi[k];
                load[ns + dofs[k]] += wa * fv[1] * phi[k];
            }
        }
    }
    load
}

/// Load vector with Dirichlet rows zeroed.
pub fn assemble_forcing(space: &MixedSpace, f: impl Fn(f64, f64) -> [f64; 2]) -> Vec<f64> {
    let mut load = assemble_load(space, f);
    space.apply_dirichlet(&mut load);
    load
}

/// Nodal interpolant of a velocity/pressure pair.
pub fn interpolate(
    space: &MixedSpace,
    velocity: impl Fn(f64, f64) -> [f64; 2],
    pressure: impl Fn(f64, f64) -> f64,
    time: f64,
) -> FieldCoefficients {
    let ns = space.scalar_velocity_dofs();
    let mut vel = vec![0.0; 2 * ns];
    for s in 0..ns {
        let [x, y] = space.velocity_node(s);
        let u = velocity(x, y);
        vel[s] = u[0];
        vel[ns + s] = u[1];
    }
    let pres = space
        .mesh()
        .vertices
        .iter()
        .map(|&[x, y]| pressure(x, y))
        .collect();
    FieldCoefficients {
        velocity: vel,
        pressure: pres,
        time,
    }
}

/// L² errors `[‖u₁ₕ − u₁‖, ‖u₂ₕ − u₂‖, ‖pₕ − p‖]` against an analytic field
/// returning `[u₁, u₂, p]`.
pub fn l2_error(
    space: &MixedSpace,
    coeffs: &FieldCoefficients,
    exact: impl Fn(f64, f64) -> [f64; 3],
) -> [f64; 3] {
    let ns = space.scalar_velocity_dofs();
    let (u1, u2) = coeffs.velocity.split_at(ns);
    let p = &coeffs.pressure;
    let mut sq = [0.0; 3];
    for t in 0..space.mesh().num_triangles() {
        let LocalData { tri, dofs, pdofs } = local(space, t);
        for qp in space.reference_points() {
            let (l, wa) = (&qp.bary, qp.weight * tri.area);
            let [x, y] = tri.point(qp.bary);
            let phi = qp.phi;
            let mut uh = [0.0; 2];
            for k in 0..6 {
                uh[0] += u1[dofs[k]] * phi[k];
                uh[1] += u2[dofs[k]] * phi[k];
            }
            let ph: f64 = (0..3).map(|k| p[pdofs[k]] * l[k]).sum();
            let ex = exact(x, y);
            sq[0] += wa * (uh[0] - ex[0]).powi(2);
            sq[1] += wa * (uh[1] - ex[1]).powi(2);
            sq[2] += wa * (ph - ex[2]).powi(2);
        }
    }
    sq.map(f64::sqrt)
}

/// `‖u‖_{L²} = √(uᵀ M u)`.
pub fn l2_norm_velocity(ops: &AssembledOperators, u: &[f64]) -> f64 {
    ops.mass.bilinear(u, u).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_structured_mesh;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn space(n: usize) -> MixedSpace {
        MixedSpace::new(Arc::new(build_structured_mesh(n)))
    }

    fn random_interior(space: &MixedSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut v: Vec<f64> = (0..space.velocity_dofs()).map(|_| rng.random_range(-1.0..1.0)).collect();
        space.apply_dirichlet(&mut v);
        v
    }

    #[test]
    fn mass_sums_to_domain_area_per_component() {
        let s = space(3);
        let ops = assemble_operators(&s, 1.5);
        let ns = s.scalar_velocity_dofs();
        let total: f64 = ops.mass.triplets().filter(|&(i, j, _)| i < ns && j < ns).map(|t| t.2).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-13);
    }

    #[test]
    fn operators_are_symmetric() {
        let s = space(3);
        let ops = assemble_operators(&s, 1.5);
        for m in [&ops.mass, &ops.stiffness] {
            let scale = m.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (i, j, v) in m.triplets() {
                assert!((v - m.get(j, i)).abs() <= 1e-13 * scale);
            }
        }
    }

    #[test]
    fn stiffness_is_linear_in_viscosity() {
        let s = space(2);
        let a = assemble_operators(&s, 1.5);
        let b = assemble_operators(&s, 3.0);
        for ((_, _, x), (_, _, y)) in a.stiffness.triplets().zip(b.stiffness.triplets()) {
            assert_eq!(y, 2.0 * x);
        }
    }

    #[test]
    fn constants_are_in_the_kernels() {
        let s = space(3);
        let ops = assemble_operators(&s, 1.5);
        let ns = s.scalar_velocity_dofs();
        for c in 0..2 {
            let mut u = vec![0.0; 2 * ns];
            u[c * ns..(c + 1) * ns].iter_mut().for_each(|x| *x = 1.0);
            let au = ops.stiffness.matvec(&u);
            assert!(au.iter().all(|x| x.abs() < 1e-12));
            let bu = ops.divergence.matvec(&u);
            assert!(bu.iter().all(|x| x.abs() < 1e-14));
        }
        let bt1 = ops.divergence.transpose_matvec(&vec![1.0; s.pressure_dofs()]);
        for (i, v) in bt1.iter().enumerate() {
            if !s.is_dirichlet(i) {
                assert!(v.abs() < 1e-14, "dof {i}: {v}");
            }
        }
    }

    #[test]
    fn convection_of_zero_field_vanishes() {
        let s = space(2);
        let n = assemble_convection(&s, &vec![0.0; s.velocity_dofs()]);
        assert!(n.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn convection_is_skew_on_interior_fields() {
        let s = space(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let u = random_interior(&s, &mut rng);
            let v = random_interior(&s, &mut rng);
            let w = random_interior(&s, &mut rng);
            let n = assemble_convection(&s, &u);
            let scale: f64 = n.values().iter().map(|x| x.abs()).fold(0.0, f64::max)
                * w.iter().map(|x| x * x).sum::<f64>();
            assert!(n.bilinear(&w, &w).abs() <= 1e-12 * scale);
            let vw = n.bilinear(&v, &w);
            let wv = n.bilinear(&w, &v);
            assert!((vw + wv).abs() <= 1e-12 * scale.max(vw.abs()));
        }
    }

    #[test]
    fn forcing_rows_and_partition_of_unity() {
        let s = space(2);
        assert!(assemble_forcing(&s, |_, _| [0.0, 0.0]).iter().all(|&v| v == 0.0));
        let raw = assemble_load(&s, |_, _| [1.0, 0.0]);
        let ns = s.scalar_velocity_dofs();
        assert_relative_eq!(raw[..ns].iter().sum::<f64>(), 1.0, epsilon = 1e-14);
        assert!(raw[ns..].iter().all(|&v| v == 0.0));
        let f = assemble_forcing(&s, |_, _| [1.0, 0.0]);
        for (i, v) in f.iter().enumerate() {
            if s.is_dirichlet(i) {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn l2_error_trivial_cases() {
        let s = space(2);
        let zero = s.zero_field(0.0);
        assert_eq!(l2_error(&s, &zero, |_, _| [0.0; 3]), [0.0; 3]);
        let mut one = zero.clone();
        one.pressure.iter_mut().for_each(|p| *p = 1.0);
        let e = l2_error(&s, &one, |_, _| [0.0; 3]);
        assert_relative_eq!(e[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn element_order_does_not_matter() {
        let s = space(4);
        let fwd = assemble_operators(&s, 1.5);
        let rev: Vec<usize> = (0..s.mesh().num_triangles()).rev().collect();
        let bwd = assemble_operators_in_order(&s, 1.5, &rev);
        for (a, b) in [(&fwd.mass, &bwd.mass), (&fwd.stiffness, &bwd.stiffness), (&fwd.divergence, &bwd.divergence)] {
            assert_eq!(a.nnz(), b.nnz());
            for ((_, _, x), (_, _, y)) in a.triplets().zip(b.triplets()) {
                assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0));
            }
        }
    }
}
