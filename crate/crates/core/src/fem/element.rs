//! Eight-node trilinear hexahedron on a cube of side `h`.
//!
//! Local node `a` sits at offset `(a & 1, (a >> 1) & 1, (a >> 2) & 1)`; its
//! three degrees of freedom occupy slots `3a..3a + 3`.

use nalgebra::{Matrix3, SMatrix, Vector6};

use crate::tensor::ElasticTensor;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Strain-displacement matrix (Mandel rows).
pub type BMatrix = SMatrix<f64, 6, 24>;
pub type KMatrix = SMatrix<f64, 24, 24>;

/// Two-point Gauss abscissae on `[0, 1]`.
pub fn gauss_points() -> [[f64; 3]; 8] {
    let g = 0.5 / 3f64.sqrt();
    let p = [0.5 - g, 0.5 + g];
    std::array::from_fn(|q| [p[q & 1], p[(q >> 1) & 1], p[(q >> 2) & 1]])
}

/// Gradients of the eight shape functions at reference point `xi`, scaled by `1/h`.
pub fn shape_gradients(xi: &[f64; 3], h: f64) -> [[f64; 3]; 8] {
    std::array::from_fn(|a| {
        let o = [a & 1, (a >> 1) & 1, (a >> 2) & 1];
        let f = |d: usize| if o[d] == 1 { xi[d] } else { 1.0 - xi[d] };
        let df = |d: usize| if o[d] == 1 { 1.0 } else { -1.0 };
        [
            df(0) * f(1) * f(2) / h,
            f(0) * df(1) * f(2) / h,
            f(0) * f(1) * df(2) / h,
        ]
    })
}

pub fn shape_values(xi: &[f64; 3]) -> [f64; 8] {
    std::array::from_fn(|a| {
        let o = [a & 1, (a >> 1) & 1, (a >> 2) & 1];
        (0..3)
            .map(|d| if o[d] == 1 { xi[d] } else { 1.0 - xi[d] })
            .product()
    })
}

pub fn b_matrix(xi: &[f64; 3], h: f64) -> BMatrix {
    let g = shape_gradients(xi, h);
    let mut b = BMatrix::zeros();
    let s = FRAC_1_SQRT_2;
    for a in 0..8 {
        let [gx, gy, gz] = g[a];
        let c = 3 * a;
        b[(0, c)] = gx;
        b[(1, c + 1)] = gy;
        b[(2, c + 2)] = gz;
        b[(3, c + 1)] = s * gz;
        b[(3, c + 2)] = s * gy;
        b[(4, c)] = s * gz;
        b[(4, c + 2)] = s * gx;
        b[(5, c)] = s * gy;
        b[(5, c + 1)] = s * gx;
    }
    b
}

/// Displacement gradient `∂_j u_i` at reference point `xi`.
pub fn gradient(xi: &[f64; 3], h: f64, ue: &[f64; 24]) -> Matrix3<f64> {
    let g = shape_gradients(xi, h);
    let mut out = Matrix3::zeros();
    for a in 0..8 {
        for i in 0..3 {
            for j in 0..3 {
                out[(i, j)] += ue[3 * a + i] * g[a][j];
            }
        }
    }
    out
}

/// Precomputed element quantities for a uniform grid of spacing `h`.
#[derive(Debug, Clone)]
pub struct Hex8 {
    pub h: f64,
    /// `B` at the eight Gauss points.
    pub b: [BMatrix; 8],
    /// `∫_e B`.
    pub b_int: BMatrix,
}

impl Hex8 {
    pub fn new(h: f64) -> Self {
        let gp = gauss_points();
        let b: [BMatrix; 8] = std::array::from_fn(|q| b_matrix(&gp[q], h));
        let w = h * h * h / 8.0;
        let b_int = b.iter().fold(BMatrix::zeros(), |acc, bq| acc + bq * w);
        Hex8 { h, b, b_int }
    }

    pub fn volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// `K_e = Σ_q w_q Bᵀ D B`, flattened row-major.
    pub fn stiffness(&self, d: &ElasticTensor) -> Box<[f64; 576]> {
        let w = self.volume() / 8.0;
        let mut k = KMatrix::zeros();
        for bq in &self.b {
            k += bq.transpose() * d.matrix() * bq * w;
        }
        let mut flat = Box::new([0.0; 576]);
        for r in 0..24 {
            for c in 0..24 {
                flat[24 * r + c] = 0.5 * (k[(r, c)] + k[(c, r)]);
            }
        }
        flat
    }

    /// Mean Mandel strain over the element.
    pub fn mean_strain(&self, ue: &[f64; 24]) -> Vector6<f64> {
        self.b_int * SMatrix::<f64, 24, 1>::from_column_slice(ue) / self.volume()
    }
}
