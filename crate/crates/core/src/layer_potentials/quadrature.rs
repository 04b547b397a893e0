use nalgebra::Vector3;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere: Gauss–Legendre in the polar direction and
/// the trapezoid rule in azimuth.
///
/// Two variants are kept. The fixed-frame rule (Gauss–Legendre in `cos θ`)
/// integrates spherical polynomials exactly up to [`SphereQuadrature::degree`].
/// The polar rule (Gauss–Legendre in `θ` itself, weights carrying `sin θ`) is
/// re-centred at an evaluation point so that the `1/|x − y|` kernel
/// singularity is cancelled by the area element.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    n_theta: usize,
    n_phi: usize,
    nodes: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    polar_theta: Vec<(f64, f64)>,
}

impl Default for SphereQuadrature {
    fn default() -> Self {
        SphereQuadrature::new(32, 64).expect("default quadrature is valid")
    }
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 2 || n_phi < 3 {
            return Err(Error::Argument(format!(
                "sphere quadrature needs n_theta ≥ 2 and n_phi ≥ 3, got {n_theta}×{n_phi}"
            )));
        }
        let (t, wt) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (&z, &w) in t.iter().zip(&wt) {
            let r = (1.0 - z * z).sqrt();
            for k in 0..n_phi {
                let phi = k as f64 * dphi;
                nodes.push(Vector3::new(r * phi.cos(), r * phi.sin(), z));
                weights.push(w * dphi);
            }
        }
        let polar_theta = t
            .iter()
            .zip(&wt)
            .map(|(&s, &w)| {
                let theta = 0.5 * PI * (s + 1.0);
                (theta, 0.5 * PI * w * theta.sin())
            })
            .collect();
        let q = SphereQuadrature {
            n_theta,
            n_phi,
            nodes,
            weights,
            polar_theta,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Total polynomial degree integrated exactly by the fixed-frame rule.
    pub fn degree(&self) -> usize {
        (2 * self.n_theta - 1).min(self.n_phi - 1)
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Rule with twice the nodes in each direction.
    pub fn upsampled(&self) -> Self {
        SphereQuadrature::new(2 * self.n_theta, 2 * self.n_phi).expect("upsampled rule is valid")
    }

    /// Polar rule centred at the unit vector `c`: yields `(y, weight)` pairs.
    pub fn centered(&self, c: &Vector3<f64>) -> impl Iterator<Item = (Vector3<f64>, f64)> + '_ {
        let (t1, t2) = orthonormal_frame(c);
        let c = *c;
        let dphi = 2.0 * PI / self.n_phi as f64;
        self.polar_theta.iter().flat_map(move |&(theta, w)| {
            let (st, ct) = theta.sin_cos();
            (0..self.n_phi).map(move |k| {
                let (sp, cp) = (k as f64 * dphi).sin_cos();
                (c * ct + (t1 * cp + t2 * sp) * st, w * dphi)
            })
        })
    }

    /// Checks exactness on monomials `x^a y^b z^c` up to the declared degree.
    fn validate(&self) -> Result<()> {
        let total: f64 = self.weights.iter().sum();
        if (total - 4.0 * PI).abs() > 1e-12 * 4.0 * PI {
            return Err(Error::Format(format!(
                "sphere weights sum to {total}, expected 4π"
            )));
        }
        let dmax = self.degree().min(8);
        for a in 0..=dmax {
            for b in 0..=(dmax - a) {
                for c in 0..=(dmax - a - b) {
                    let q: f64 = self
                        .nodes
                        .iter()
                        .zip(&self.weights)
                        .map(|(p, w)| w * p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32))
                        .sum();
                    let exact = sphere_monomial_integral(a, b, c);
                    if (q - exact).abs() > 1e-11 * (1.0 + exact.abs()) {
                        return Err(Error::Format(format!(
                            "sphere rule fails on x^{a} y^{b} z^{c}: {q} vs {exact}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `∫_𝕊 x^a y^b z^c` from the double-factorial formula.
pub fn sphere_monomial_integral(a: usize, b: usize, c: usize) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    fn dfact(n: isize) -> f64 {
        let mut r = 1.0;
        let mut k = n;
        while k > 1 {
            r *= k as f64;
            k -= 2;
        }
        r
    }
    let (a, b, c) = (a as isize, b as isize, c as isize);
    4.0 * PI * dfact(a - 1) * dfact(b - 1) * dfact(c - 1) / dfact(a + b + c + 1)
}

/// Two unit vectors completing `c` to a right-handed orthonormal frame.
pub fn orthonormal_frame(c: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if c.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let t1 = (helper - c * c.dot(&helper)).normalize();
    let t2 = c.cross(&t1);
    (t1, t2)
}
