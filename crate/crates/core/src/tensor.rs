//! Symmetric second- and fourth-order tensors in Mandel notation.
//!
//! A symmetric 3×3 matrix `e` is stored as the orthonormal 6-vector
//! `(e11, e22, e33, √2 e23, √2 e13, √2 e12)`, so the Frobenius product of two
//! matrices equals the Euclidean dot product of their Mandel vectors. A
//! fourth-order tensor with major and minor symmetries becomes a symmetric
//! 6×6 matrix, and ellipticity with constants `α`, `β` is exactly the
//! statement that its six eigenvalues lie in `[α, β]`.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Mandel slot of the index pair `(i, j)` (0-based).
pub const fn mandel_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        _ => 5,
    }
}

/// Index pair stored in Mandel slot `k`.
pub const MANDEL_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Weight applied to the tensor component stored in slot `k`.
pub fn mandel_weight(k: usize) -> f64 {
    if k < 3 {
        1.0
    } else {
        SQRT2
    }
}

/// Symmetric 3×3 matrix stored as a Mandel vector.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 6]", into = "[f64; 6]")]
pub struct SymMat(pub Vector6<f64>);

impl From<[f64; 6]> for SymMat {
    fn from(v: [f64; 6]) -> Self {
        SymMat(Vector6::from(v))
    }
}

impl From<SymMat> for [f64; 6] {
    fn from(s: SymMat) -> Self {
        s.0.into()
    }
}

impl SymMat {
    pub fn zero() -> Self {
        SymMat(Vector6::zeros())
    }

    pub fn identity() -> Self {
        SymMat(Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0))
    }

    /// Unit Mandel basis vector `k` (0-based).
    pub fn mandel_unit(k: usize) -> Self {
        let mut v = Vector6::zeros();
        v[k] = 1.0;
        SymMat(v)
    }

    /// Builds from a 3×3 matrix, rejecting inputs that are not symmetric.
    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self> {
        let scale = m.norm().max(1.0);
        if (m - m.transpose()).norm() > 1e-12 * scale {
            return Err(Error::Argument("matrix is not symmetric".into()));
        }
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Encodes the symmetric part of `m`.
    pub fn from_matrix_unchecked(m: &Matrix3<f64>) -> Self {
        let s = 0.5 * (m + m.transpose());
        SymMat(Vector6::new(
            s[(0, 0)],
            s[(1, 1)],
            s[(2, 2)],
            SQRT2 * s[(1, 2)],
            SQRT2 * s[(0, 2)],
            SQRT2 * s[(0, 1)],
        ))
    }

    pub fn to_matrix(&self) -> Matrix3<f64> {
        let v = &self.0;
        let (d, o) = (v[3] / SQRT2, v[4] / SQRT2);
        let f = v[5] / SQRT2;
        Matrix3::new(v[0], f, o, f, v[1], d, o, d, v[2])
    }

    /// Component `e_ij` of the underlying matrix (0-based).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let k = mandel_index(i, j);
        self.0[k] / mandel_weight(k)
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[1] + self.0[2]
    }

    /// Frobenius inner product `σ·τ`.
    pub fn dot(&self, other: &SymMat) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn deviator(&self) -> SymMat {
        *self - SymMat::identity() * (self.trace() / 3.0)
    }

    /// `e x` for a point `x`.
    pub fn apply_vec(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.to_matrix() * x
    }
}

impl std::ops::Add for SymMat {
    type Output = SymMat;
    fn add(self, rhs: SymMat) -> SymMat {
        SymMat(self.0 + rhs.0)
    }
}

impl std::ops::Sub for SymMat {
    type Output = SymMat;
    fn sub(self, rhs: SymMat) -> SymMat {
        SymMat(self.0 - rhs.0)
    }
}

impl std::ops::Mul<f64> for SymMat {
    type Output = SymMat;
    fn mul(self, rhs: f64) -> SymMat {
        SymMat(self.0 * rhs)
    }
}

impl std::ops::Neg for SymMat {
    type Output = SymMat;
    fn neg(self) -> SymMat {
        SymMat(-self.0)
    }
}

/// Canonical strain `σ^ij` with entries `(δ_ik δ_jl + δ_il δ_jk)/2`.
///
/// Indices are 1-based, as in the usual tensor notation.
pub fn canonical_basis(i: usize, j: usize) -> Result<SymMat> {
    if !(1..=3).contains(&i) || !(1..=3).contains(&j) {
        return Err(Error::Argument(format!(
            "canonical basis index ({i}, {j}) out of range 1..=3"
        )));
    }
    let mut m = Matrix3::zeros();
    m[(i - 1, j - 1)] += 0.5;
    m[(j - 1, i - 1)] += 0.5;
    Ok(SymMat::from_matrix_unchecked(&m))
}

/// The six loads `σ^ij`, `1 ≤ i ≤ j ≤ 3`, in the order 11, 12, 13, 22, 23, 33.
pub fn canonical_loads() -> [(usize, usize, SymMat); 6] {
    let pairs = [(1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3)];
    pairs.map(|(i, j)| (i, j, canonical_basis(i, j).expect("valid index")))
}

/// The three off-diagonal loads `σ^ij`, `i < j`.
pub fn shear_loads() -> [SymMat; 3] {
    [(1, 2), (1, 3), (2, 3)].map(|(i, j)| canonical_basis(i, j).expect("valid index"))
}

/// Fourth-order elasticity tensor as a symmetric 6×6 Mandel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 6]; 6]", into = "[[f64; 6]; 6]")]
pub struct ElasticTensor(Matrix6<f64>);

impl TryFrom<[[f64; 6]; 6]> for ElasticTensor {
    type Error = Error;
    fn try_from(rows: [[f64; 6]; 6]) -> Result<Self> {
        ElasticTensor::new(Matrix6::from_fn(|i, j| rows[i][j]))
    }
}

impl From<ElasticTensor> for [[f64; 6]; 6] {
    fn from(t: ElasticTensor) -> Self {
        std::array::from_fn(|i| std::array::from_fn(|j| t.0[(i, j)]))
    }
}

impl ElasticTensor {
    /// Wraps a Mandel matrix; it must be symmetric up to round-off.
    pub fn new(a: Matrix6<f64>) -> Result<Self> {
        let scale = a.norm().max(f64::MIN_POSITIVE);
        if (a - a.transpose()).norm() > 1e-10 * scale {
            return Err(Error::Argument(
                "elasticity matrix lacks major symmetry".into(),
            ));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("elasticity matrix is not finite".into()));
        }
        Ok(ElasticTensor(0.5 * (a + a.transpose())))
    }

    /// Symmetrizes `(a + aᵀ)/2`.
    pub fn symmetrized(a: &Matrix6<f64>) -> Self {
        ElasticTensor(0.5 * (a + a.transpose()))
    }

    pub fn zero() -> Self {
        ElasticTensor(Matrix6::zeros())
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    /// `Aσ`.
    pub fn apply(&self, s: &SymMat) -> SymMat {
        SymMat(self.0 * s.0)
    }

    /// `σ·Aσ`.
    pub fn energy_quadratic(&self, s: &SymMat) -> f64 {
        s.0.dot(&(self.0 * s.0))
    }

    /// Mandel eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 6] {
        let eig = SymmetricEigen::new(self.0);
        let mut v: [f64; 6] = eig.eigenvalues.into();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Membership in the class of tensors with spectrum inside `[α, β]`.
    pub fn in_class_m(&self, band: &EllipticityBand) -> bool {
        const SLACK: f64 = 1e-10;
        let ev = self.eigenvalues();
        ev[0] >= band.alpha * (1.0 - SLACK) && ev[5] <= band.beta * (1.0 + SLACK)
    }

    /// Bulk and shear moduli of the orthogonal projection onto isotropic tensors.
    pub fn isotropic_projection(&self) -> (f64, f64) {
        let j = Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0) / 3f64.sqrt();
        let kappa = j.dot(&(self.0 * j));
        let two_mu = (self.0.trace() - kappa) / 5.0;
        (kappa, 0.5 * two_mu)
    }

    /// Recovers `(κ, μ)` when the tensor is isotropic to within `rel_tol`.
    pub fn as_isotropic(&self, rel_tol: f64) -> Option<IsoModuli> {
        let (kappa, mu) = self.isotropic_projection();
        let iso = IsoModuli::new(kappa, mu).ok()?;
        let diff = (self.0 - iso.to_tensor().0).norm();
        (diff <= rel_tol * self.0.norm()).then_some(iso)
    }

    /// Full index form `A_ijkl`.
    pub fn to_full(&self) -> [[[[f64; 3]; 3]; 3]; 3] {
        let mut out = [[[[0.0; 3]; 3]; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, col) in row.iter_mut().enumerate() {
                for (k, slab) in col.iter_mut().enumerate() {
                    for (l, v) in slab.iter_mut().enumerate() {
                        let p = mandel_index(i, j);
                        let q = mandel_index(k, l);
                        *v = self.0[(p, q)] / (mandel_weight(p) * mandel_weight(q));
                    }
                }
            }
        }
        out
    }

    /// Encodes a full tensor that has major and minor symmetries.
    pub fn from_full(a: &[[[[f64; 3]; 3]; 3]; 3]) -> Result<Self> {
        let m = Matrix6::from_fn(|p, q| {
            let (i, j) = MANDEL_PAIRS[p];
            let (k, l) = MANDEL_PAIRS[q];
            mandel_weight(p) * mandel_weight(q) * a[i][j][k][l]
        });
        ElasticTensor::new(m)
    }

    /// Rotated tensor `A'_ijkl = U_ip U_jq U_kr U_ls A_pqrs`.
    pub fn rotated(&self, u: &Matrix3<f64>) -> Self {
        let a = self.to_full();
        let mut out = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut s = 0.0;
                        for p in 0..3 {
                            for q in 0..3 {
                                for r in 0..3 {
                                    for t in 0..3 {
                                        s += u[(i, p)] * u[(j, q)] * u[(k, r)] * u[(l, t)] * a[p][q][r][t];
                                    }
                                }
                            }
                        }
                        out[i][j][k][l] = s;
                    }
                }
            }
        }
        ElasticTensor::from_full(&out).expect("rotation preserves symmetry")
    }

    /// Bit pattern of the upper triangle, used as a cache key.
    pub fn key(&self) -> [u64; 21] {
        let mut k = [0u64; 21];
        let mut n = 0;
        for i in 0..6 {
            for j in i..6 {
                k[n] = self.0[(i, j)].to_bits();
                n += 1;
            }
        }
        k
    }

    /// Upper triangle in row-major order.
    pub fn upper_triangle(&self) -> [f64; 21] {
        self.key().map(f64::from_bits)
    }

    pub fn from_upper_triangle(v: &[f64; 21]) -> Self {
        let mut m = Matrix6::zeros();
        let mut n = 0;
        for i in 0..6 {
            for j in i..6 {
                m[(i, j)] = v[n];
                m[(j, i)] = v[n];
                n += 1;
            }
        }
        ElasticTensor(m)
    }
}

impl std::ops::Add for ElasticTensor {
    type Output = ElasticTensor;
    fn add(self, rhs: ElasticTensor) -> ElasticTensor {
        ElasticTensor(self.0 + rhs.0)
    }
}

impl std::ops::Sub for ElasticTensor {
    type Output = ElasticTensor;
    fn sub(self, rhs: ElasticTensor) -> ElasticTensor {
        ElasticTensor(self.0 - rhs.0)
    }
}

impl std::ops::Mul<f64> for ElasticTensor {
    type Output = ElasticTensor;
    fn mul(self, rhs: f64) -> ElasticTensor {
        ElasticTensor(self.0 * rhs)
    }
}

/// Isotropic moduli `(κ, μ)` with `κ = 2μ + 3λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoModuli {
    pub kappa: f64,
    pub mu: f64,
}

impl IsoModuli {
    pub fn new(kappa: f64, mu: f64) -> Result<Self> {
        if !(kappa > 0.0 && mu > 0.0) || !kappa.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "isotropic moduli need κ > 0 and μ > 0 (got κ = {kappa}, μ = {mu})"
            )));
        }
        Ok(IsoModuli { kappa, mu })
    }

    /// From Lamé coefficients.
    pub fn from_lame(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(2.0 * mu + 3.0 * lambda, mu)
    }

    pub fn lambda(&self) -> f64 {
        (self.kappa - 2.0 * self.mu) / 3.0
    }

    /// `A σ = 2μσ + λ Tr(σ) Id`.
    pub fn to_tensor(&self) -> ElasticTensor {
        let lambda = self.lambda();
        let mut a = Matrix6::identity() * (2.0 * self.mu);
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] += lambda;
            }
        }
        ElasticTensor(a)
    }

    pub fn in_band(&self, band: &EllipticityBand) -> bool {
        self.to_tensor().in_class_m(band)
    }
}

/// Builds the isotropic tensor of the given moduli.
pub fn iso_to_full(m: IsoModuli) -> ElasticTensor {
    m.to_tensor()
}

/// Ellipticity constants `α < β` and the enlarged band `α₋ < α`, `β < β⁺`.
///
/// When deserialized, `alpha_minus` and `beta_plus` may be omitted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BandRepr")]
pub struct EllipticityBand {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BandRepr {
    alpha: f64,
    beta: f64,
    alpha_minus: Option<f64>,
    beta_plus: Option<f64>,
}

impl TryFrom<BandRepr> for EllipticityBand {
    type Error = Error;
    fn try_from(r: BandRepr) -> Result<Self> {
        EllipticityBand::with_extension(
            r.alpha,
            r.beta,
            r.alpha_minus.unwrap_or(0.5 * r.alpha),
            r.beta_plus.unwrap_or(2.0 * r.beta),
        )
    }
}

impl EllipticityBand {
    /// Band with the default enlargement `α₋ = α/2`, `β⁺ = 2β`.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::with_extension(alpha, beta, 0.5 * alpha, 2.0 * beta)
    }

    pub fn with_extension(alpha: f64, beta: f64, alpha_minus: f64, beta_plus: f64) -> Result<Self> {
        if !(0.0 < alpha_minus && alpha_minus < alpha && alpha < beta && beta < beta_plus)
            || !beta_plus.is_finite()
        {
            return Err(Error::Domain(format!(
                "need 0 < α₋ < α < β < β⁺, got {alpha_minus}, {alpha}, {beta}, {beta_plus}"
            )));
        }
        Ok(EllipticityBand {
            alpha,
            beta,
            alpha_minus,
            beta_plus,
        })
    }

    /// Lower isotropic tensor `iso(α, α/2)`.
    pub fn lower(&self) -> IsoModuli {
        IsoModuli {
            kappa: self.alpha,
            mu: 0.5 * self.alpha,
        }
    }

    /// Upper isotropic tensor `iso(β, β/2)`.
    pub fn upper(&self) -> IsoModuli {
        IsoModuli {
            kappa: self.beta,
            mu: 0.5 * self.beta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn band_json_defaults_and_checks() {
        let b: EllipticityBand = serde_json::from_str(r#"{"alpha": 1.0, "beta": 3.0}"#).unwrap();
        assert_eq!(b, EllipticityBand::new(1.0, 3.0).unwrap());
        let round: EllipticityBand = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(round, b);
        assert!(serde_json::from_str::<EllipticityBand>(r#"{"alpha": 3.0, "beta": 1.0}"#).is_err());
    }

    /// Contraction `(Aσ)_ij = Σ A_ijkl σ_kl` written out by hand, with the
    /// full tensor rebuilt independently from the Mandel matrix.
    fn contract(a: &ElasticTensor, s: &Matrix3<f64>) -> Matrix3<f64> {
        let slot = |i: usize, j: usize| -> (usize, f64) {
            if i == j {
                (i, 1.0)
            } else {
                // off-diagonal pairs (1,2), (0,2), (0,1) occupy slots 3, 4, 5
                (6 - (i + j), 2f64.sqrt())
            }
        };
        let mut out = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let (p, wp) = slot(i, j);
                        let (q, wq) = slot(k, l);
                        out[(i, j)] += a.matrix()[(p, q)] / (wp * wq) * s[(k, l)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn oracle_slot_table() {
        // the oracle's slot function must reproduce the Mandel layout
        let a = ElasticTensor::from_upper_triangle(&std::array::from_fn(|i| i as f64 + 1.0));
        let full = a.to_full();
        let s = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let c = contract(&a, &s);
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(c[(i, j)], full[i][j][0][0], epsilon = 1e-12);
            }
        }
    }

    fn random_tensor(seed: u64) -> ElasticTensor {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix6::from_fn(|_, _| rng.random_range(-1.0..1.0));
        ElasticTensor::symmetrized(&(m + m.transpose()))
    }

    fn random_sym(seed: u64) -> Matrix3<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        m + m.transpose()
    }

    #[test]
    fn canonical_basis_entries() {
        let s11 = canonical_basis(1, 1).unwrap().to_matrix();
        assert_eq!(s11, Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0));
        let s12 = canonical_basis(1, 2).unwrap().to_matrix();
        assert_relative_eq!(s12[(0, 1)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(s12[(1, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(s12.norm(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(canonical_basis(2, 3).unwrap(), canonical_basis(3, 2).unwrap());
        assert!(matches!(canonical_basis(0, 1), Err(Error::Argument(_))));
        assert!(matches!(canonical_basis(1, 4), Err(Error::Argument(_))));
    }

    #[test]
    fn canonical_basis_spans() {
        let m = nalgebra::Matrix6::from_columns(&canonical_loads().map(|(_, _, s)| s.0));
        assert!(m.determinant().abs() > 1e-3);
    }

    #[test]
    fn iso_apply_examples() {
        let m = IsoModuli::new(2.5, 0.7).unwrap();
        let a = iso_to_full(m);
        let r = a.apply(&SymMat::identity());
        assert_relative_eq!(r.0, (SymMat::identity() * 2.5).0, epsilon = 1e-14);
        let s12 = canonical_basis(1, 2).unwrap();
        assert_relative_eq!(a.apply(&s12).0, (s12 * 1.4).0, epsilon = 1e-14);

        assert_relative_eq!(a.energy_quadratic(&SymMat::identity()), 7.5, epsilon = 1e-13);
        assert_relative_eq!(a.energy_quadratic(&s12), 0.7, epsilon = 1e-14);
    }

    #[test]
    fn iso_unit_is_identity() {
        let a = iso_to_full(IsoModuli::new(1.0, 0.5).unwrap());
        assert_relative_eq!(*a.matrix(), Matrix6::identity(), epsilon = 1e-15);
    }

    #[test]
    fn iso_spectrum() {
        let a = iso_to_full(IsoModuli::new(3.0, 0.4).unwrap());
        let ev = a.eigenvalues();
        assert_relative_eq!(ev[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(ev[4], 0.8, epsilon = 1e-12);
        assert_relative_eq!(ev[5], 3.0, epsilon = 1e-12);
        let eig = SymmetricEigen::new(*a.matrix());
        let top = eig.eigenvalues.imax();
        let v = eig.eigenvectors.column(top);
        let j = Vector6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0) / 3f64.sqrt();
        assert_relative_eq!(v.dot(&j).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lower_tensor_matches_band() {
        let band = EllipticityBand::new(0.5, 4.0).unwrap();
        let lower = iso_to_full(band.lower());
        assert_relative_eq!(lower.eigenvalues()[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(lower.eigenvalues()[5], 0.5, epsilon = 1e-14);
        assert_eq!(band.lower().lambda(), 0.0);
    }

    #[test]
    fn class_membership() {
        let band = EllipticityBand::new(1.0, 4.0).unwrap();
        assert!(IsoModuli::new(2.0, 1.5).unwrap().in_band(&band));
        assert!(!IsoModuli::new(5.0, 1.0).unwrap().in_band(&band));
        assert!(!IsoModuli::new(2.0, 0.4).unwrap().in_band(&band));
        // boundary values pass with the round-off slack
        assert!(IsoModuli::new(1.0, 2.0).unwrap().in_band(&band));
    }

    #[test]
    fn clamped_spectrum_is_in_class() {
        let band = EllipticityBand::new(0.5, 3.0).unwrap();
        for seed in 0..20 {
            let a = random_tensor(seed);
            let eig = SymmetricEigen::new(*a.matrix());
            let clamped = eig.eigenvalues.map(|v| v.clamp(band.alpha, band.beta));
            let m = &eig.eigenvectors * Matrix6::from_diagonal(&clamped) * eig.eigenvectors.transpose();
            let t = ElasticTensor::symmetrized(&m);
            assert!(t.in_class_m(&band));
            let scaled = t * 1.5;
            assert_eq!(scaled.in_class_m(&band), scaled.eigenvalues()[5] <= band.beta * (1.0 + 1e-10));
        }
    }

    #[test]
    fn moduli_validation() {
        assert!(matches!(IsoModuli::new(0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(IsoModuli::new(1.0, -1.0), Err(Error::Domain(_))));
        assert!(EllipticityBand::new(2.0, 1.0).is_err());
        assert!(EllipticityBand::with_extension(1.0, 2.0, 1.5, 3.0).is_err());
    }

    #[test]
    fn isotropic_recovery() {
        let m = IsoModuli::new(2.2, 0.9).unwrap();
        let back = m.to_tensor().as_isotropic(1e-12).unwrap();
        assert_relative_eq!(back.kappa, 2.2, epsilon = 1e-13);
        assert_relative_eq!(back.mu, 0.9, epsilon = 1e-13);
        assert!(random_tensor(3).as_isotropic(1e-6).is_none());
    }

    #[test]
    fn full_roundtrip() {
        let a = random_tensor(11);
        let back = ElasticTensor::from_full(&a.to_full()).unwrap();
        assert_relative_eq!(*back.matrix(), *a.matrix(), epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn mandel_roundtrip(v in proptest::array::uniform6(-10.0f64..10.0)) {
            let s = SymMat::from(v);
            let back = SymMat::from_matrix(&s.to_matrix()).unwrap();
            for k in 0..6 {
                prop_assert!((back.0[k] - s.0[k]).abs() <= 1e-14 * (1.0 + s.0[k].abs()));
            }
        }

        #[test]
        fn frobenius_equals_mandel(a in proptest::array::uniform6(-5.0f64..5.0),
                                   b in proptest::array::uniform6(-5.0f64..5.0)) {
            let (s, t) = (SymMat::from(a), SymMat::from(b));
            let frob = s.to_matrix().component_mul(&t.to_matrix()).sum();
            prop_assert!((frob - s.dot(&t)).abs() < 1e-11);
        }

        #[test]
        fn apply_matches_contraction(seed in 0u64..500) {
            let a = random_tensor(seed);
            let s = random_sym(seed + 1000);
            let direct = contract(&a, &s);
            let mandel = a.apply(&SymMat::from_matrix(&s).unwrap()).to_matrix();
            prop_assert!((direct - mandel).norm() < 1e-12);
            let e = SymMat::from_matrix(&s).unwrap();
            let quad = s.component_mul(&direct).sum();
            prop_assert!((quad - a.energy_quadratic(&e)).abs() < 1e-11);
        }

        #[test]
        fn apply_is_self_adjoint(seed in 0u64..500) {
            let a = random_tensor(seed);
            let s = SymMat::from_matrix(&random_sym(seed + 1)).unwrap();
            let t = SymMat::from_matrix(&random_sym(seed + 2)).unwrap();
            prop_assert!((t.dot(&a.apply(&s)) - s.dot(&a.apply(&t))).abs() < 1e-12);
        }

        #[test]
        fn ellipticity_bounds(kappa in 0.5f64..4.0, two_mu in 0.5f64..4.0, v in proptest::array::uniform6(-3.0f64..3.0)) {
            let band = EllipticityBand::new(0.5, 4.0).unwrap();
            let a = IsoModuli::new(kappa, 0.5 * two_mu).unwrap().to_tensor();
            prop_assert!(a.in_class_m(&band));
            let s = SymMat::from(v);
            let e = a.energy_quadratic(&s);
            let n2 = s.dot(&s);
            prop_assert!(e >= band.alpha * n2 * (1.0 - 1e-12) - 1e-12);
            prop_assert!(e <= band.beta * n2 * (1.0 + 1e-12) + 1e-12);
            let split = two_mu * s.deviator().dot(&s.deviator()) + kappa / 3.0 * s.trace().powi(2);
            prop_assert!((e - split).abs() < 1e-10 * (1.0 + e.abs()));
        }

        #[test]
        fn isotropy_is_rotation_invariant(kappa in 0.5f64..4.0, mu in 0.3f64..2.0,
                                          q in proptest::array::uniform4(-1.0f64..1.0),
                                          v in proptest::array::uniform6(-2.0f64..2.0)) {
            let qn = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
            prop_assume!(qn.norm() > 1e-3);
            let u = nalgebra::UnitQuaternion::from_quaternion(qn).to_rotation_matrix().into_inner();
            let a = IsoModuli::new(kappa, mu).unwrap().to_tensor();
            let s = SymMat::from(v);
            let rotated = SymMat::from_matrix_unchecked(&(u.transpose() * s.to_matrix() * u));
            prop_assert!((a.energy_quadratic(&rotated) - a.energy_quadratic(&s)).abs() < 1e-10);
            let ar = a.rotated(&u);
            prop_assert!((ar.matrix() - a.matrix()).norm() < 1e-10);
        }
    }
}
