//! Elastic layer potentials on the unit sphere.
//!
//! The single-layer potential is evaluated by quadrature of the Kelvin
//! Green function. On the sphere itself the polar rule of
//! [`SphereQuadrature::centered`] is placed at the evaluation point, which
//! turns the weakly singular integrand into a smooth one. The double-layer
//! adjoint enters only through its spectrum on vector spherical harmonics.

mod quadrature;

pub use quadrature::{gauss_legendre, orthonormal_frame, sphere_monomial_integral, SphereQuadrature};

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{IsoModuli, SymMat};

/// Distance from the sphere inside which off-surface evaluation is upsampled.
pub const NEAR_SPHERE_BAND: f64 = 0.05;

/// Kelvin matrix `G(x, y)` of isotropic elasticity.
pub fn green_function(m: &IsoModuli, x: &Vector3<f64>, y: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let d = x - y;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::Singular(
            "Green function evaluated at coincident points".into(),
        ));
    }
    Ok(kelvin(m.lambda(), m.mu, &d, r))
}

#[inline]
fn kelvin(lambda: f64, mu: f64, d: &Vector3<f64>, r: f64) -> Matrix3<f64> {
    let a = (lambda + 3.0 * mu) / (lambda + 2.0 * mu);
    let b = (lambda + mu) / (lambda + 2.0 * mu);
    let pref = 1.0 / (8.0 * std::f64::consts::PI * mu * r);
    let dd = d / r;
    (Matrix3::identity() * a + dd * dd.transpose() * b) * pref
}

/// Vector spherical harmonic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarmonicKind {
    V,
    W,
    X,
}

/// Index `(kind, l, m)` of a vector spherical harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicIndex {
    kind: HarmonicKind,
    l: u32,
    m: i32,
}

impl HarmonicIndex {
    pub fn new(kind: HarmonicKind, l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::Argument(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        if kind == HarmonicKind::X && l == 0 {
            return Err(Error::Argument("X harmonics start at l = 1".into()));
        }
        Ok(HarmonicIndex { kind, l, m })
    }

    pub fn kind(&self) -> HarmonicKind {
        self.kind
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn m(&self) -> i32 {
        self.m
    }
}

/// Eigenvalue of the single-layer boundary operator on a harmonic.
pub fn single_layer_eigenvalue(idx: HarmonicIndex, m: &IsoModuli) -> f64 {
    let (lambda, mu) = (m.lambda(), m.mu);
    let l = idx.l as f64;
    match idx.kind {
        HarmonicKind::V => {
            ((3.0 * l + 1.0) * mu + l * lambda)
                / ((2.0 * l + 3.0) * (2.0 * l + 1.0) * mu * (2.0 * mu + lambda))
        }
        HarmonicKind::W => {
            ((3.0 * l + 2.0) * mu + (l + 1.0) * lambda)
                / ((2.0 * l - 1.0) * (2.0 * l + 1.0) * mu * (2.0 * mu + lambda))
        }
        HarmonicKind::X => 1.0 / (mu * (2.0 * l + 1.0)),
    }
}

/// Eigenvalue of the adjoint double-layer operator on a harmonic.
pub fn dstar_eigenvalue(idx: HarmonicIndex, m: &IsoModuli) -> f64 {
    let (lambda, mu) = (m.lambda(), m.mu);
    let l = idx.l as f64;
    match idx.kind {
        HarmonicKind::V => {
            -(2.0 * (2.0 * l * l + 6.0 * l + 1.0) * mu - 3.0 * lambda)
                / (2.0 * (2.0 * l + 1.0) * (2.0 * l + 3.0) * (2.0 * mu + lambda))
        }
        HarmonicKind::W => {
            (2.0 * (2.0 * l * l - 2.0 * l - 3.0) * mu - 3.0 * lambda)
                / (2.0 * (2.0 * l + 1.0) * (2.0 * l - 1.0) * (2.0 * mu + lambda))
        }
        HarmonicKind::X => 1.0 / (2.0 * mu * (2.0 * l + 1.0)),
    }
}

/// Which named field a [`BoundaryField`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldLabel {
    /// `x`
    Z0,
    /// `x_i e_i − x/3`
    Zi(usize),
    /// `x_i e_j − x_j e_i`
    Zij(usize, usize),
    /// `x_i e_j + x_j e_i`
    Rij(usize, usize),
    /// Anything else (densities, user fields).
    Custom,
}

impl FieldLabel {
    /// Harmonic family and degree spanned by the labelled field.
    pub fn harmonic(&self) -> Option<(HarmonicKind, u32)> {
        match self {
            FieldLabel::Z0 => Some((HarmonicKind::V, 0)),
            FieldLabel::Zij(..) => Some((HarmonicKind::X, 1)),
            FieldLabel::Zi(_) | FieldLabel::Rij(..) => Some((HarmonicKind::W, 2)),
            FieldLabel::Custom => None,
        }
    }
}

#[derive(Clone)]
enum FieldRepr {
    Linear(Matrix3<f64>),
    Func(Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>),
}

/// Vector field on the unit sphere.
///
/// Every field used by the Eshelby solution is the restriction of a linear
/// map `x ↦ Mx`; those are stored as the matrix so they can be combined
/// exactly. Arbitrary fields can be wrapped with [`BoundaryField::custom`].
#[derive(Clone)]
pub struct BoundaryField {
    label: FieldLabel,
    repr: FieldRepr,
}

impl fmt::Debug for BoundaryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("BoundaryField");
        d.field("label", &self.label);
        if let FieldRepr::Linear(m) = &self.repr {
            d.field("matrix", m);
        }
        d.finish()
    }
}

fn unit(i: usize) -> Vector3<f64> {
    let mut e = Vector3::zeros();
    e[i] = 1.0;
    e
}

fn check_pair(i: usize, j: usize) -> Result<()> {
    if i >= 3 || j >= 3 || i == j {
        return Err(Error::Argument(format!(
            "field indices must be distinct and below 3, got ({i}, {j})"
        )));
    }
    Ok(())
}

impl BoundaryField {
    pub fn linear(label: FieldLabel, m: Matrix3<f64>) -> Self {
        BoundaryField {
            label,
            repr: FieldRepr::Linear(m),
        }
    }

    pub fn custom<F>(f: F) -> Self
    where
        F: Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync + 'static,
    {
        BoundaryField {
            label: FieldLabel::Custom,
            repr: FieldRepr::Func(Arc::new(f)),
        }
    }

    pub fn z0() -> Self {
        Self::linear(FieldLabel::Z0, Matrix3::identity())
    }

    /// `Z_i` with 0-based `i`.
    pub fn zi(i: usize) -> Result<Self> {
        if i >= 3 {
            return Err(Error::Argument(format!("Z_i index {i} out of range")));
        }
        let e = unit(i);
        Ok(Self::linear(
            FieldLabel::Zi(i),
            e * e.transpose() - Matrix3::identity() / 3.0,
        ))
    }

    /// `Z_ij` with 0-based indices.
    pub fn zij(i: usize, j: usize) -> Result<Self> {
        check_pair(i, j)?;
        let (ei, ej) = (unit(i), unit(j));
        Ok(Self::linear(
            FieldLabel::Zij(i, j),
            ej * ei.transpose() - ei * ej.transpose(),
        ))
    }

    /// `R_ij` with 0-based indices.
    pub fn rij(i: usize, j: usize) -> Result<Self> {
        check_pair(i, j)?;
        let (ei, ej) = (unit(i), unit(j));
        Ok(Self::linear(
            FieldLabel::Rij(i, j),
            ej * ei.transpose() + ei * ej.transpose(),
        ))
    }

    pub fn label(&self) -> FieldLabel {
        self.label
    }

    /// The matrix `M` for fields of the form `x ↦ Mx`.
    pub fn as_linear(&self) -> Option<&Matrix3<f64>> {
        match &self.repr {
            FieldRepr::Linear(m) => Some(m),
            FieldRepr::Func(_) => None,
        }
    }

    pub fn eval(&self, x: &Vector3<f64>) -> Vector3<f64> {
        match &self.repr {
            FieldRepr::Linear(m) => m * x,
            FieldRepr::Func(f) => f(x),
        }
    }

    /// Table value of the single-layer eigenvalue for labelled fields.
    pub fn single_layer_eigenvalue(&self, m: &IsoModuli) -> Option<f64> {
        let (kind, l) = self.label.harmonic()?;
        let idx = HarmonicIndex::new(kind, l, 0).expect("labelled fields have valid indices");
        Some(single_layer_eigenvalue(idx, m))
    }
}

impl std::ops::Add for BoundaryField {
    type Output = BoundaryField;
    fn add(self, rhs: BoundaryField) -> BoundaryField {
        match (&self.repr, &rhs.repr) {
            (FieldRepr::Linear(a), FieldRepr::Linear(b)) => {
                BoundaryField::linear(FieldLabel::Custom, a + b)
            }
            _ => BoundaryField::custom(move |x| self.eval(x) + rhs.eval(x)),
        }
    }
}

impl std::ops::Mul<f64> for BoundaryField {
    type Output = BoundaryField;
    fn mul(self, s: f64) -> BoundaryField {
        match &self.repr {
            FieldRepr::Linear(a) => BoundaryField::linear(FieldLabel::Custom, a * s),
            FieldRepr::Func(_) => BoundaryField::custom(move |x| self.eval(x) * s),
        }
    }
}

/// Diagnostics attached to a single-layer evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AccuracyWarning {
    /// Evaluation point within [`NEAR_SPHERE_BAND`] of the sphere (not on it).
    NearSphere { distance: f64 },
    /// The rule has fewer polar nodes than the accuracy floor.
    LowOrder { n_theta: usize },
}

/// Value of the single-layer potential plus accuracy diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerValue {
    pub value: Vector3<f64>,
    pub warning: Option<AccuracyWarning>,
}

/// Smallest polar order that reaches ~1e-8 on the labelled fields.
pub const MIN_RELIABLE_THETA: usize = 12;

/// `∫_𝕊 G(x, y) φ(y) dy` by quadrature.
pub fn single_layer_apply(
    m: &IsoModuli,
    density: &BoundaryField,
    quad: &SphereQuadrature,
    x: &Vector3<f64>,
) -> LayerValue {
    let (lambda, mu) = (m.lambda(), m.mu);
    let r = x.norm();
    let mut warning = (quad.n_theta() < MIN_RELIABLE_THETA).then_some(AccuracyWarning::LowOrder {
        n_theta: quad.n_theta(),
    });

    let integrate = |pts: &mut dyn Iterator<Item = (Vector3<f64>, f64)>, x: &Vector3<f64>| {
        let mut acc = Vector3::zeros();
        for (y, w) in pts {
            let d = x - y;
            let dist = d.norm();
            if dist == 0.0 {
                continue;
            }
            acc += kelvin(lambda, mu, &d, dist) * density.eval(&y) * w;
        }
        acc
    };

    if r < 1e-12 {
        let mut it = quad.nodes().iter().copied().zip(quad.weights().iter().copied());
        return LayerValue {
            value: integrate(&mut it, x),
            warning,
        };
    }

    let c = x / r;
    let gap = (r - 1.0).abs();
    let value = if gap <= 1e-12 {
        integrate(&mut quad.centered(&c), &c)
    } else if gap < NEAR_SPHERE_BAND {
        warning = Some(AccuracyWarning::NearSphere { distance: gap });
        let fine = quad.upsampled();
        let v = integrate(&mut fine.centered(&c), x);
        v
    } else {
        integrate(&mut quad.centered(&c), x)
    };
    LayerValue { value, warning }
}

/// Density `φ_C` whose single-layer potential equals `Cx` on the sphere.
pub fn varphi_density(m: &IsoModuli, c: &SymMat) -> BoundaryField {
    let (lambda, mu) = (m.lambda(), m.mu);
    let denom = 8.0 * mu + 3.0 * lambda;
    let k1 = 15.0 * mu * (2.0 * mu + lambda) / denom;
    let k2 = 3.0 * (mu + lambda) * (2.0 * mu + lambda) / denom;
    BoundaryField::linear(
        FieldLabel::Custom,
        c.to_matrix() * k1 + Matrix3::identity() * (k2 * c.trace()),
    )
}

/// Density `ψ_S = 3μ S x` whose single-layer potential equals `Sx`.
pub fn psi_density(m: &IsoModuli, s: &Matrix3<f64>) -> Result<BoundaryField> {
    if (s + s.transpose()).norm() > 1e-12 * s.norm().max(1.0) {
        return Err(Error::Argument("ψ density needs a skew-symmetric matrix".into()));
    }
    Ok(BoundaryField::linear(FieldLabel::Custom, s * (3.0 * m.mu)))
}

/// Splitting of `p(x) = Cx` into `p̃ = Σ_{i<j} C_ij R_ij`, `p̂_Z = Σ C_ii Z_i`
/// and the coefficient of `Z_0`, which is `Tr(C)/3`.
#[derive(Debug, Clone)]
pub struct LinearSplit {
    pub p_tilde: BoundaryField,
    pub p_hat_z: BoundaryField,
    pub z0_coeff: f64,
}

pub fn split_linear(c: &SymMat) -> LinearSplit {
    let cm = c.to_matrix();
    let mut tilde = Matrix3::zeros();
    let mut hat = Matrix3::zeros();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let r = BoundaryField::rij(i, j).expect("valid pair");
            tilde += r.as_linear().expect("linear") * cm[(i, j)];
        }
        let z = BoundaryField::zi(i).expect("valid index");
        hat += z.as_linear().expect("linear") * cm[(i, i)];
    }
    LinearSplit {
        p_tilde: BoundaryField::linear(FieldLabel::Custom, tilde),
        p_hat_z: BoundaryField::linear(FieldLabel::Custom, hat),
        z0_coeff: c.trace() / 3.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn lame(lambda: f64, mu: f64) -> IsoModuli {
        IsoModuli::from_lame(lambda, mu).unwrap()
    }

    fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
        loop {
            let v = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 0.1 && n <= 1.0 {
                return v / n;
            }
        }
    }

    #[test]
    fn green_function_example() {
        let m = lame(1.0, 1.0);
        let g = green_function(&m, &Vector3::new(1.0, 0.0, 0.0), &Vector3::zeros()).unwrap();
        let pi8 = 8.0 * std::f64::consts::PI;
        assert_relative_eq!(g[(0, 0)], 2.0 / pi8, epsilon = 1e-15);
        assert_relative_eq!(g[(1, 1)], (4.0 / 3.0) / pi8, epsilon = 1e-15);
        assert_relative_eq!(g[(2, 2)], (4.0 / 3.0) / pi8, epsilon = 1e-15);
        assert_relative_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn green_function_symmetry_and_scaling() {
        let m = lame(0.4, 1.3);
        let x = Vector3::new(0.3, -0.2, 0.9);
        let y = Vector3::new(-0.5, 0.1, 0.2);
        let g = green_function(&m, &x, &y).unwrap();
        assert_relative_eq!(g, g.transpose(), epsilon = 1e-15);
        assert_relative_eq!(g, green_function(&m, &y, &x).unwrap(), epsilon = 1e-15);
        let g2 = green_function(&m, &(x * 2.0), &(y * 2.0)).unwrap();
        assert_relative_eq!(g2 * 2.0, g, epsilon = 1e-15);
        assert!(matches!(green_function(&m, &x, &x), Err(Error::Singular(_))));
    }

    /// The Kelvin solution solves `L G_i = δ e_i`: away from the source the
    /// Navier operator annihilates every column. Checked by central finite
    /// differences of `μ ΔG + (λ + μ) ∇ div G`.
    #[test]
    fn green_function_solves_navier_away_from_source() {
        let m = lame(0.7, 1.1);
        let (lambda, mu) = (m.lambda(), m.mu);
        let y = Vector3::zeros();
        let x0 = Vector3::new(0.8, -0.4, 0.5);
        let h = 1e-3;
        let g = |x: &Vector3<f64>| green_function(&m, x, &y).unwrap();
        for col in 0..3 {
            let u = |x: &Vector3<f64>| g(x).column(col).into_owned();
            let mut lap = Vector3::zeros();
            let mut grad_div = Vector3::zeros();
            for a in 0..3 {
                let ea = unit(a) * h;
                lap += (u(&(x0 + ea)) - u(&x0) * 2.0 + u(&(x0 - ea))) / (h * h);
                for b in 0..3 {
                    let eb = unit(b) * h;
                    let d2 = (u(&(x0 + ea + eb))[b] - u(&(x0 + ea - eb))[b]
                        - u(&(x0 - ea + eb))[b]
                        + u(&(x0 - ea - eb))[b])
                        / (4.0 * h * h);
                    grad_div[a] += d2;
                }
            }
            let navier = lap * mu + grad_div * (lambda + mu);
            assert!(navier.norm() < 1e-5, "column {col}: {navier}");
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let m = lame(1.0, 1.0);
        let v00 = HarmonicIndex::new(HarmonicKind::V, 0, 0).unwrap();
        assert_relative_eq!(single_layer_eigenvalue(v00, &m), 1.0 / 9.0, epsilon = 1e-15);
        for mm in -1..=1 {
            let x1 = HarmonicIndex::new(HarmonicKind::X, 1, mm).unwrap();
            assert_relative_eq!(single_layer_eigenvalue(x1, &m), 1.0 / 3.0, epsilon = 1e-15);
        }
        let w2 = HarmonicIndex::new(HarmonicKind::W, 2, 0).unwrap();
        assert_relative_eq!(single_layer_eigenvalue(w2, &m), 11.0 / 45.0, epsilon = 1e-15);

        let m = lame(0.3, 1.7);
        let (lambda, mu) = (m.lambda(), m.mu);
        assert_relative_eq!(
            dstar_eigenvalue(v00, &m),
            (-2.0 * mu + 3.0 * lambda) / (6.0 * (2.0 * mu + lambda)),
            epsilon = 1e-14
        );
        let x1 = HarmonicIndex::new(HarmonicKind::X, 1, 1).unwrap();
        assert_relative_eq!(dstar_eigenvalue(x1, &m), 1.0 / (6.0 * mu), epsilon = 1e-14);
        assert_relative_eq!(
            dstar_eigenvalue(w2, &m),
            (2.0 * mu - 3.0 * lambda) / (30.0 * (2.0 * mu + lambda)),
            epsilon = 1e-14
        );
        // W at l = 0 is evaluated as written, with (2l − 1) = −1
        let w0 = HarmonicIndex::new(HarmonicKind::W, 0, 0).unwrap();
        assert!(single_layer_eigenvalue(w0, &m).is_finite());
    }

    #[test]
    fn harmonic_index_validation() {
        assert!(HarmonicIndex::new(HarmonicKind::X, 0, 0).is_err());
        assert!(HarmonicIndex::new(HarmonicKind::V, 1, 2).is_err());
        assert!(HarmonicIndex::new(HarmonicKind::W, 2, -2).is_ok());
    }

    #[test]
    fn labelled_fields_pointwise() {
        let x = Vector3::new(0.2, -0.6, 0.4);
        assert_relative_eq!(BoundaryField::z0().eval(&x), x);
        let z1 = BoundaryField::zi(0).unwrap().eval(&x);
        assert_relative_eq!(z1, Vector3::new(x[0], 0.0, 0.0) - x / 3.0, epsilon = 1e-15);
        let z12 = BoundaryField::zij(0, 1).unwrap().eval(&x);
        assert_relative_eq!(z12, Vector3::new(-x[1], x[0], 0.0), epsilon = 1e-15);
        let r13 = BoundaryField::rij(0, 2).unwrap().eval(&x);
        assert_relative_eq!(r13, Vector3::new(x[2], 0.0, x[0]), epsilon = 1e-15);
        assert!(BoundaryField::zij(1, 1).is_err());
    }

    #[test]
    fn table_eigenvalues_by_quadrature() {
        let quad = SphereQuadrature::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for (lambda, mu) in [(1.0, 1.0), (0.0, 0.5), (2.5, 0.8), (-0.3, 1.2)] {
            let m = lame(lambda, mu);
            let table = [
                (BoundaryField::z0(), 1.0 / (3.0 * (2.0 * mu + lambda))),
                (BoundaryField::zij(0, 1).unwrap(), 1.0 / (3.0 * mu)),
                (
                    BoundaryField::rij(0, 2).unwrap(),
                    (8.0 * mu + 3.0 * lambda) / (15.0 * mu * (2.0 * mu + lambda)),
                ),
                (
                    BoundaryField::zi(1).unwrap(),
                    (8.0 * mu + 3.0 * lambda) / (15.0 * mu * (2.0 * mu + lambda)),
                ),
            ];
            for (f, ev) in &table {
                assert_relative_eq!(f.single_layer_eigenvalue(&m).unwrap(), *ev, max_relative = 1e-14);
                for _ in 0..5 {
                    let x = random_unit(&mut rng);
                    let got = single_layer_apply(&m, f, &quad, &x);
                    assert!(got.warning.is_none());
                    let want = f.eval(&x) * *ev;
                    assert!(
                        (got.value - want).norm() <= 1e-9 * want.norm().max(1e-3),
                        "{:?}: {} vs {}",
                        f.label(),
                        got.value,
                        want
                    );
                }
            }
        }
    }

    #[test]
    fn single_layer_is_linear() {
        let quad = SphereQuadrature::new(16, 32).unwrap();
        let m = lame(0.5, 1.0);
        let a = BoundaryField::custom(|y| Vector3::new(y.x * y.y, y.z, 1.0));
        let b = BoundaryField::rij(1, 2).unwrap();
        let x = Vector3::new(1.7, 0.3, -0.4);
        let lhs = single_layer_apply(&m, &(a.clone() * 2.0 + b.clone() * -3.0), &quad, &x).value;
        let rhs = single_layer_apply(&m, &a, &quad, &x).value * 2.0
            - single_layer_apply(&m, &b, &quad, &x).value * 3.0;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-13);
    }

    #[test]
    fn varphi_reproduces_linear_trace() {
        let quad = SphereQuadrature::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let m = lame(rng.random_range(-0.2..2.0), rng.random_range(0.3..2.0));
            let c = SymMat::from(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let phi = varphi_density(&m, &c);
            for _ in 0..20 {
                let x = random_unit(&mut rng);
                let v = single_layer_apply(&m, &phi, &quad, &x).value;
                assert!((v - c.apply_vec(&x)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn varphi_identity_example() {
        // λ = 0, C = Id: φ(x) = 6μ x = (2μ + λ) Tr(C) Z_0
        let mu = 0.8;
        let m = lame(0.0, mu);
        let phi = varphi_density(&m, &SymMat::identity());
        assert_relative_eq!(*phi.as_linear().unwrap(), Matrix3::identity() * (6.0 * mu), epsilon = 1e-14);
    }

    #[test]
    fn varphi_decomposition_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let m = lame(rng.random_range(-0.2..2.0), rng.random_range(0.3..2.0));
            let (lambda, mu) = (m.lambda(), m.mu);
            let c = SymMat::from(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let split = split_linear(&c);
            let k = 15.0 * mu * (2.0 * mu + lambda) / (8.0 * mu + 3.0 * lambda);
            let rebuilt = split.p_tilde.as_linear().unwrap() * k
                + split.p_hat_z.as_linear().unwrap() * k
                + Matrix3::identity() * ((2.0 * mu + lambda) * c.trace());
            assert_relative_eq!(*varphi_density(&m, &c).as_linear().unwrap(), rebuilt, epsilon = 1e-12);
            let p = split.p_tilde.as_linear().unwrap()
                + split.p_hat_z.as_linear().unwrap()
                + Matrix3::identity() * split.z0_coeff;
            assert_relative_eq!(p, c.to_matrix(), epsilon = 1e-14);
        }
    }

    #[test]
    fn psi_density_checks() {
        let m = lame(0.4, 0.9);
        let zero = psi_density(&m, &Matrix3::zeros()).unwrap();
        assert_eq!(zero.eval(&Vector3::new(0.1, 0.2, 0.3)), Vector3::zeros());
        assert!(psi_density(&m, &Matrix3::identity()).is_err());

        let s = Matrix3::new(0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let psi = psi_density(&m, &s).unwrap();
        // ψ_S is 3μ times a rotation field, an X_1m combination with eigenvalue 1/(3μ)
        let quad = SphereQuadrature::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let x = random_unit(&mut rng);
            let v = single_layer_apply(&m, &psi, &quad, &x).value;
            assert!((v - s * x).norm() < 1e-9);
        }
    }

    #[test]
    fn near_sphere_warning() {
        let quad = SphereQuadrature::default();
        let m = lame(1.0, 1.0);
        let f = BoundaryField::z0();
        let v = single_layer_apply(&m, &f, &quad, &Vector3::new(0.0, 0.0, 1.02));
        assert!(matches!(v.warning, Some(AccuracyWarning::NearSphere { .. })));
        let v = single_layer_apply(&m, &f, &quad, &Vector3::new(0.0, 0.0, 2.0));
        assert!(v.warning.is_none());
        let low = SphereQuadrature::new(4, 8).unwrap();
        let v = single_layer_apply(&m, &f, &low, &Vector3::new(0.0, 0.0, 3.0));
        assert!(matches!(v.warning, Some(AccuracyWarning::LowOrder { .. })));
    }
}
