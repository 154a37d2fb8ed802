//! Reference-element quadrature and shape functions.

/// Seven-point symmetric rule on the triangle, exact for degree 5.
///
/// Entries are barycentric coordinates and weights normalised to sum to one.
pub fn degree5_rule() -> [([f64; 3], f64); 7] {
    let s = 15f64.sqrt();
    let a1 = (6.0 - s) / 21.0;
    let a2 = (6.0 + s) / 21.0;
    let w1 = (155.0 - s) / 1200.0;
    let w2 = (155.0 + s) / 1200.0;
    let b1 = 1.0 - 2.0 * a1;
    let b2 = 1.0 - 2.0 * a2;
    let c = 1.0 / 3.0;
    [
        ([c, c, c], 9.0 / 40.0),
        ([a1, a1, b1], w1),
        ([a1, b1, a1], w1),
        ([b1, a1, a1], w1),
        ([a2, a2, b2], w2),
        ([a2, b2, a2], w2),
        ([b2, a2, a2], w2),
    ]
}

/// Affine data of one triangle: area and constant barycentric gradients.
#[derive(Debug, Clone, Copy)]
pub struct AffineTriangle {
    pub coords: [[f64; 2]; 3],
    pub area: f64,
    pub grad_bary: [[f64; 2]; 3],
}

impl AffineTriangle {
    pub fn new(coords: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = coords;
        let area = crate::geometry::signed_area(p0, p1, p2);
        let inv = 1.0 / (2.0 * area);
        let grad = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv];
        Self {
            coords,
            area,
            grad_bary: [grad(p1, p2), grad(p2, p0), grad(p0, p1)],
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> [f64; 2] {
        let mut p = [0.0; 2];
        for (l, c) in bary.iter().zip(&self.coords) {
            p[0] += l * c[0];
            p[1] += l * c[1];
        }
        p
    }
}

/// Quadratic Lagrange basis: three vertex functions, then the edge function
/// opposite each local vertex.
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

pub fn p2_gradients(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let lin = |c: [f64; 3]| {
        [
            c[0] * g[0][0] + c[1] * g[1][0] + c[2] * g[2][0],
            c[0] * g[0][1] + c[1] * g[1][1] + c[2] * g[2][1],
        ]
    };
    [
        lin([4.0 * l[0] - 1.0, 0.0, 0.0]),
        lin([0.0, 4.0 * l[1] - 1.0, 0.0]),
        lin([0.0, 0.0, 4.0 * l[2] - 1.0]),
        lin([0.0, 4.0 * l[2], 4.0 * l[1]]),
        lin([4.0 * l[2], 0.0, 4.0 * l[0]]),
        lin([4.0 * l[1], 4.0 * l[0], 0.0]),
    ]
}

/// Shape data of the six velocity basis functions at one reference point.
///
/// Gradients are stored as coefficients of the barycentric gradients, so a
/// physical gradient is `Σ_k dphi[i][k] ∇λ_k`.
#[derive(Debug, Clone, Copy)]
pub struct RefPoint {
    pub bary: [f64; 3],
    /// Fraction of the element area.
    pub weight: f64,
    pub phi: [f64; 6],
    pub dphi: [[f64; 3]; 6],
}

impl RefPoint {
    pub fn gradients(&self, g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
        self.dphi.map(|c| {
            [
                c[0] * g[0][0] + c[1] * g[1][0] + c[2] * g[2][0],
                c[0] * g[0][1] + c[1] * g[1][1] + c[2] * g[2][1],
            ]
        })
    }
}

/// Quadratic basis sampled at the degree-5 rule.
pub fn quadratic_points() -> Vec<RefPoint> {
    degree5_rule()
        .iter()
        .map(|&(l, weight)| {
            let mut dphi = [[0.0; 3]; 6];
            for i in 0..3 {
                dphi[i][i] = 4.0 * l[i] - 1.0;
                let (a, b) = ((i + 1) % 3, (i + 2) % 3);
                dphi[3 + i][a] = 4.0 * l[b];
                dphi[3 + i][b] = 4.0 * l[a];
            }
            RefPoint {
                bary: l,
                weight,
                phi: p2_values(l),
                dphi,
            }
        })
        .collect()
}

/// Piecewise-linear basis on the four congruent sub-triangles obtained by
/// joining edge midpoints; the degree-5 rule is applied on each sub-triangle.
///
/// Local node order matches [`p2_values`]: vertices, then the midpoint
/// opposite each vertex.
pub fn iso_quadratic_points() -> Vec<RefPoint> {
    // midpoint node of the edge joining vertices i and j
    let mid = |i: usize, j: usize| 3 + (3 - i - j);
    let vert = |i: usize| {
        let mut b = [0.0; 3];
        b[i] = 1.0;
        b
    };
    let midpoint = |i: usize, j: usize| {
        let mut b = [0.0; 3];
        b[i] = 0.5;
        b[j] = 0.5;
        b
    };
    let mut out = Vec::with_capacity(28);
    let mut push_sub = |corners: [[f64; 3]; 3], shape: &dyn Fn([f64; 3]) -> ([f64; 6], [[f64; 3]; 6])| {
        for (l, w) in degree5_rule() {
            let mut bary = [0.0; 3];
            for (c, lc) in corners.iter().zip(l) {
                for k in 0..3 {
                    bary[k] += lc * c[k];
                }
            }
            let (phi, dphi) = shape(bary);
            out.push(RefPoint {
                bary,
                weight: 0.25 * w,
                phi,
                dphi,
            });
        }
    };
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        push_sub([vert(i), midpoint(i, j), midpoint(i, k)], &|l| {
            let mut phi = [0.0; 6];
            let mut dphi = [[0.0; 3]; 6];
            phi[i] = 2.0 * l[i] - 1.0;
            dphi[i][i] = 2.0;
            for m in [j, k] {
                phi[mid(i, m)] = 2.0 * l[m];
                dphi[mid(i, m)][m] = 2.0;
            }
            (phi, dphi)
        });
    }
    push_sub([midpoint(1, 2), midpoint(2, 0), midpoint(0, 1)], &|l| {
        let mut phi = [0.0; 6];
        let mut dphi = [[0.0; 3]; 6];
        for i in 0..3 {
            phi[3 + i] = 1.0 - 2.0 * l[i];
            dphi[3 + i][i] = -2.0;
        }
        (phi, dphi)
    });
    out
}
