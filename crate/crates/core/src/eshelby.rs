//! The spherical Eshelby problem in closed form.
//!
//! An isotropic inclusion `A₀ = iso(κ₀, μ₀)` fills the unit ball and an
//! isotropic matrix `A = iso(κ, μ)` fills the rest of space. Under the
//! remote load `σ`, the corrector is `w(x) = Cx` inside the ball and the
//! single-layer potential of [`varphi_density`] outside.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layer_potentials::{
    dstar_eigenvalue, single_layer_apply, varphi_density, AccuracyWarning, BoundaryField,
    HarmonicIndex, HarmonicKind, SphereQuadrature,
};
use crate::tensor::{IsoModuli, SymMat};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EshelbyConfig {
    pub inclusion: IsoModuli,
    pub matrix: IsoModuli,
    pub loading: SymMat,
}

#[derive(Debug, Clone)]
pub struct EshelbySolution {
    pub interior_matrix: SymMat,
    pub exterior_density: BoundaryField,
}

impl EshelbyConfig {
    pub fn new(inclusion: IsoModuli, matrix: IsoModuli, loading: SymMat) -> Self {
        EshelbyConfig {
            inclusion,
            matrix,
            loading,
        }
    }
}

/// `(14μ + 9λ)/(8μ + 3λ)`, equivalently `(8μ + 3κ)/(6μ + κ)`.
fn shear_ratio(m: &IsoModuli) -> f64 {
    let (lambda, mu) = (m.lambda(), m.mu);
    (14.0 * mu + 9.0 * lambda) / (8.0 * mu + 3.0 * lambda)
}

/// `(6μ + λ)/(8μ + 3λ)`.
fn trace_ratio(m: &IsoModuli) -> f64 {
    let (lambda, mu) = (m.lambda(), m.mu);
    (6.0 * mu + lambda) / (8.0 * mu + 3.0 * lambda)
}

/// Coefficients `(a, b)` with `C(σ) = aσ + b Tr(σ) Id`.
pub fn interior_coefficients(inclusion: &IsoModuli, matrix: &IsoModuli) -> (f64, f64) {
    let (l0, m0) = (inclusion.lambda(), inclusion.mu);
    let (l, m) = (matrix.lambda(), matrix.mu);
    let d = 2.0 * m0 + shear_ratio(matrix) * m;
    let a = 2.0 * (m - m0) / d;
    let b = ((l - l0) - 2.0 * (m - m0) * (l0 + trace_ratio(matrix) * m) / d)
        / (2.0 * m0 + 3.0 * l0 + 4.0 * m);
    (a, b)
}

/// Interior strain `C` of the corrector, `w(x) = Cx` in the ball.
pub fn interior_matrix(cfg: &EshelbyConfig) -> SymMat {
    let (a, b) = interior_coefficients(&cfg.inclusion, &cfg.matrix);
    cfg.loading * a + SymMat::identity() * (b * cfg.loading.trace())
}

/// `C` for a canonical load `σ^kl` (1-based), written case by case.
pub fn interior_matrix_basis(inclusion: &IsoModuli, matrix: &IsoModuli, k: usize, l: usize) -> Result<SymMat> {
    let s = crate::tensor::canonical_basis(k, l)?;
    let (l0, m0) = (inclusion.lambda(), inclusion.mu);
    let (lam, mu) = (matrix.lambda(), matrix.mu);
    let d = 2.0 * m0 + shear_ratio(matrix) * mu;
    let shear = s * (2.0 * (mu - m0) / d);
    if k != l {
        return Ok(shear);
    }
    let iso = ((lam - l0) - 2.0 * (mu - m0) * (l0 + trace_ratio(matrix) * mu) / d)
        / (2.0 * m0 + 3.0 * l0 + 4.0 * mu);
    Ok(SymMat::identity() * iso + shear)
}

/// `C` for the load `σ = Id`.
pub fn interior_matrix_identity(inclusion: &IsoModuli, matrix: &IsoModuli) -> SymMat {
    let (l0, m0) = (inclusion.lambda(), inclusion.mu);
    let (l, m) = (matrix.lambda(), matrix.mu);
    SymMat::identity() * ((2.0 * (m - m0) + 3.0 * (l - l0)) / (2.0 * m0 + 3.0 * l0 + 4.0 * m))
}

pub fn solve(cfg: &EshelbyConfig) -> EshelbySolution {
    let c = interior_matrix(cfg);
    EshelbySolution {
        interior_matrix: c,
        exterior_density: varphi_density(&cfg.matrix, &c),
    }
}

/// Corrector displacement with an accuracy flag for near-sphere exterior points.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    pub value: Vector3<f64>,
    pub warning: Option<AccuracyWarning>,
}

pub fn displacement(
    cfg: &EshelbyConfig,
    sol: &EshelbySolution,
    x: &Vector3<f64>,
    quad: &SphereQuadrature,
) -> Displacement {
    if x.norm() <= 1.0 {
        return Displacement {
            value: sol.interior_matrix.apply_vec(x),
            warning: None,
        };
    }
    let v = single_layer_apply(&cfg.matrix, &sol.exterior_density, quad, x);
    Displacement {
        value: v.value,
        warning: v.warning,
    }
}

fn check_on_sphere(x: &Vector3<f64>) -> Result<()> {
    if (x.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Argument(format!(
            "traction is evaluated on the unit sphere, got |x| = {}",
            x.norm()
        )));
    }
    Ok(())
}

/// Interior normal stress `(2μ₀ C + λ₀ Tr(C) Id) x`.
pub fn interior_traction(cfg: &EshelbyConfig, sol: &EshelbySolution, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    check_on_sphere(x)?;
    let c = &sol.interior_matrix;
    Ok(c.apply_vec(x) * (2.0 * cfg.inclusion.mu) + x * (cfg.inclusion.lambda() * c.trace()))
}

/// Exterior normal stress in closed form.
pub fn exterior_traction(cfg: &EshelbyConfig, sol: &EshelbySolution, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    check_on_sphere(x)?;
    let c = &sol.interior_matrix;
    let mu = cfg.matrix.mu;
    Ok(-(c.apply_vec(x) * (shear_ratio(&cfg.matrix) * mu)
        + x * (trace_ratio(&cfg.matrix) * mu * c.trace())))
}

/// Exterior normal stress `−φ/2 + 𝒟*φ` from the spectrum of `𝒟*` on the
/// components of the density.
pub fn exterior_traction_spectral(
    cfg: &EshelbyConfig,
    sol: &EshelbySolution,
    x: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    check_on_sphere(x)?;
    let m = &cfg.matrix;
    let (lambda, mu) = (m.lambda(), m.mu);
    let c = &sol.interior_matrix;
    let d0 = dstar_eigenvalue(HarmonicIndex::new(HarmonicKind::V, 0, 0)?, m);
    let d2 = dstar_eigenvalue(HarmonicIndex::new(HarmonicKind::W, 2, 0)?, m);
    let k = 15.0 * mu * (2.0 * mu + lambda) / (8.0 * mu + 3.0 * lambda);
    let deviatoric = c.apply_vec(x) - x * (c.trace() / 3.0);
    let radial = x * ((2.0 * mu + lambda) * c.trace());
    Ok(deviatoric * (k * (d2 - 0.5)) + radial * (d0 - 0.5))
}

/// `𝒯₋w − 𝒯₊w` at a point of the sphere.
pub fn traction_jump(cfg: &EshelbyConfig, sol: &EshelbySolution, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    check_on_sphere(x)?;
    let c = &sol.interior_matrix;
    let (l0, m0) = (cfg.inclusion.lambda(), cfg.inclusion.mu);
    let mu = cfg.matrix.mu;
    Ok(c.apply_vec(x) * (2.0 * m0 + shear_ratio(&cfg.matrix) * mu)
        + x * ((l0 + trace_ratio(&cfg.matrix) * mu) * c.trace()))
}

/// Right-hand side `(2(μ − μ₀)σ + (λ − λ₀) Tr(σ) Id) x` that the jump must match.
pub fn traction_jump_target(cfg: &EshelbyConfig, x: &Vector3<f64>) -> Result<Vector3<f64>> {
    check_on_sphere(x)?;
    let s = &cfg.loading;
    let dm = cfg.matrix.mu - cfg.inclusion.mu;
    let dl = cfg.matrix.lambda() - cfg.inclusion.lambda();
    Ok(s.apply_vec(x) * (2.0 * dm) + x * (dl * s.trace()))
}

/// Energy `E_σ^{A₀}(A)` from the interior strain.
pub fn energy(cfg: &EshelbyConfig) -> f64 {
    energy_with(cfg, &interior_matrix(cfg))
}

fn energy_with(cfg: &EshelbyConfig, c: &SymMat) -> f64 {
    let s = &cfg.loading;
    let (l0, m0) = (cfg.inclusion.lambda(), cfg.inclusion.mu);
    let (l, m) = (cfg.matrix.lambda(), cfg.matrix.mu);
    let ts = s.trace();
    let sc = *s + *c;
    2.0 * m0 * s.dot(&sc) + l0 * sc.trace() * ts - 2.0 * m * c.dot(s) - l * ts * c.trace()
}

/// Shear-load energy `μ₀ − 2(μ − μ₀)²/(2μ₀ + (14μ + 9λ)/(8μ + 3λ) μ)`.
pub fn energy_shear(inclusion: &IsoModuli, matrix: &IsoModuli) -> f64 {
    let (m0, m) = (inclusion.mu, matrix.mu);
    m0 - 2.0 * (m - m0).powi(2) / (2.0 * m0 + shear_ratio(matrix) * m)
}

/// Energy for the diagonal load `σ^kk`.
pub fn energy_diagonal(inclusion: &IsoModuli, matrix: &IsoModuli) -> f64 {
    let (l0, m0) = (inclusion.lambda(), inclusion.mu);
    let (l, m) = (matrix.lambda(), matrix.mu);
    let d = 2.0 * m0 + shear_ratio(matrix) * m;
    let iso = ((l - l0) - 2.0 * (m - m0) * (l0 + trace_ratio(matrix) * m) / d)
        / (2.0 * m0 + 3.0 * l0 + 4.0 * m);
    2.0 * m0 + l0
        + (2.0 * (m0 - m) + 3.0 * (l0 - l)) * iso
        + (2.0 * (m0 - m) + (l0 - l)) * 2.0 * (m - m0) / d
}

/// `(1/3) E_Id` in Lamé form.
pub fn energy_identity_third(inclusion: &IsoModuli, matrix: &IsoModuli) -> f64 {
    let (l0, m0) = (inclusion.lambda(), inclusion.mu);
    let (l, m) = (matrix.lambda(), matrix.mu);
    2.0 * m0 + 3.0 * l0 - (2.0 * (m0 - m) + 3.0 * (l0 - l)).powi(2) / (2.0 * m0 + 3.0 * l0 + 4.0 * m)
}

/// `(1/3) E_Id` in bulk form `κ₀ − (κ₀ − κ)²/(κ₀ + 4μ)`.
pub fn energy_identity_third_kappa(inclusion: &IsoModuli, matrix: &IsoModuli) -> f64 {
    let (k0, k, m) = (inclusion.kappa, matrix.kappa, matrix.mu);
    k0 - (k0 - k).powi(2) / (k0 + 4.0 * m)
}

/// Interior matrix as a plain 3×3 matrix (convenience for reports).
pub fn interior_matrix_3x3(cfg: &EshelbyConfig) -> Matrix3<f64> {
    interior_matrix(cfg).to_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{canonical_basis, canonical_loads};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
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
            if v.norm() > 0.1 && v.norm() <= 1.0 {
                return v.normalize();
            }
        }
    }

    fn random_moduli(rng: &mut impl Rng) -> IsoModuli {
        IsoModuli::new(rng.random_range(0.2..5.0), rng.random_range(0.2..3.0)).unwrap()
    }

    #[test]
    fn same_tensor_gives_zero_corrector() {
        let m = lame(0.8, 1.3);
        for (_, _, s) in canonical_loads() {
            let cfg = EshelbyConfig::new(m, m, s);
            assert!(interior_matrix(&cfg).norm() < 1e-15);
            assert_relative_eq!(energy(&cfg), m.to_tensor().energy_quadratic(&s), epsilon = 1e-14);
        }
    }

    #[test]
    fn identity_load_example() {
        let cfg = EshelbyConfig::new(lame(0.0, 0.5), lame(1.0, 1.0), SymMat::identity());
        assert_eq!(cfg.inclusion.kappa, 1.0);
        assert_eq!(cfg.matrix.kappa, 5.0);
        assert_relative_eq!(interior_matrix(&cfg).0, (SymMat::identity() * 0.8).0, epsilon = 1e-15);
        assert_relative_eq!(
            interior_matrix_identity(&cfg.inclusion, &cfg.matrix).0,
            (SymMat::identity() * 0.8).0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn diagonal_cases_sum_to_identity_case() {
        let (a0, a) = (lame(0.3, 0.9), lame(1.7, 0.4));
        let sum = (1..=3)
            .map(|k| interior_matrix_basis(&a0, &a, k, k).unwrap())
            .fold(SymMat::zero(), |acc, c| acc + c);
        assert_relative_eq!(sum.0, interior_matrix_identity(&a0, &a).0, epsilon = 1e-14);
    }

    #[test]
    fn basis_formulas_match_general_formula() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let (a0, a) = (random_moduli(&mut rng), random_moduli(&mut rng));
            for (k, l, s) in canonical_loads() {
                let cfg = EshelbyConfig::new(a0, a, s);
                let c = interior_matrix_basis(&a0, &a, k, l).unwrap();
                assert_relative_eq!(interior_matrix(&cfg).0, c.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn reference_shear_energy() {
        let cfg = EshelbyConfig::new(lame(1.0, 1.0), lame(1.0, 2.0), canonical_basis(1, 2).unwrap());
        assert_relative_eq!(energy(&cfg), 37.0 / 56.0, epsilon = 1e-14);
        assert_relative_eq!(energy_shear(&cfg.inclusion, &cfg.matrix), 37.0 / 56.0, epsilon = 1e-14);
    }

    #[test]
    fn energy_closed_forms_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let (a0, a) = (random_moduli(&mut rng), random_moduli(&mut rng));
            let shear = energy(&EshelbyConfig::new(a0, a, canonical_basis(1, 3).unwrap()));
            assert_relative_eq!(shear, energy_shear(&a0, &a), max_relative = 1e-12);
            let diag = energy(&EshelbyConfig::new(a0, a, canonical_basis(2, 2).unwrap()));
            assert_relative_eq!(diag, energy_diagonal(&a0, &a), max_relative = 1e-12);
            let id = energy(&EshelbyConfig::new(a0, a, SymMat::identity())) / 3.0;
            assert_relative_eq!(id, energy_identity_third(&a0, &a), max_relative = 1e-12);
            assert_relative_eq!(id, energy_identity_third_kappa(&a0, &a), max_relative = 1e-12);
        }
    }

    #[test]
    fn traction_jump_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let (a0, a) = (random_moduli(&mut rng), random_moduli(&mut rng));
            let cfg = EshelbyConfig::new(a0, a, canonical_basis(1, 2).unwrap());
            let sol = solve(&cfg);
            for _ in 0..50 {
                let x = random_unit(&mut rng);
                let jump = traction_jump(&cfg, &sol, &x).unwrap();
                let target = traction_jump_target(&cfg, &x).unwrap();
                assert!((jump - target).norm() <= 1e-12 * target.norm().max(1.0));
                let split = interior_traction(&cfg, &sol, &x).unwrap()
                    - exterior_traction(&cfg, &sol, &x).unwrap();
                assert!((split - jump).norm() < 1e-12);
                let spectral = exterior_traction_spectral(&cfg, &sol, &x).unwrap();
                assert!((spectral - exterior_traction(&cfg, &sol, &x).unwrap()).norm() < 1e-12);
            }
        }
        let m = lame(1.0, 1.0);
        let cfg = EshelbyConfig::new(m, m, SymMat::identity());
        let x = Vector3::new(0.0, 0.6, 0.8);
        assert!(traction_jump(&cfg, &solve(&cfg), &x).unwrap().norm() < 1e-15);
        assert!(traction_jump(&cfg, &solve(&cfg), &(x * 1.1)).is_err());
    }

    #[test]
    fn displacement_continuity_and_decay() {
        let cfg = EshelbyConfig::new(lame(1.0, 1.0), lame(1.0, 2.0), canonical_basis(1, 2).unwrap());
        let sol = solve(&cfg);
        let quad = SphereQuadrature::default();
        assert_eq!(displacement(&cfg, &sol, &Vector3::zeros(), &quad).value, Vector3::zeros());

        let x = Vector3::new(0.6, 0.0, 0.8);
        let inside = displacement(&cfg, &sol, &x, &quad).value;
        let on = single_layer_apply(&cfg.matrix, &sol.exterior_density, &quad, &x).value;
        assert!((inside - on).norm() < 1e-9);
        let outside = displacement(&cfg, &sol, &(x * 1.001), &quad);
        assert!(outside.warning.is_some());
        assert!((outside.value - inside).norm() < 1e-3);

        let dir = Vector3::new(1.0, 1.0, 0.0).normalize();
        let r = [5.0f64, 10.0, 20.0];
        let v: Vec<f64> = r
            .iter()
            .map(|&r| displacement(&cfg, &sol, &(dir * r), &quad).value.norm().ln())
            .collect();
        let slope = (v[2] - v[0]) / (r[2].ln() - r[0].ln());
        assert!(slope <= -0.99, "decay exponent {slope}");
    }

    #[test]
    fn shear_energy_ignores_inclusion_lambda() {
        let a = lame(0.7, 1.4);
        let h = 1e-5;
        let e = |l0: f64| energy(&EshelbyConfig::new(lame(l0, 0.9), a, canonical_basis(2, 3).unwrap()));
        assert!(((e(0.5 + h) - e(0.5 - h)) / (2.0 * h)).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn interior_matrix_is_linear(
            k0 in 0.2..5.0f64, m0 in 0.2..3.0f64, k in 0.2..5.0f64, m in 0.2..3.0f64,
            s1 in prop::array::uniform6(-1.0..1.0f64), s2 in prop::array::uniform6(-1.0..1.0f64),
            a in -2.0..2.0f64, b in -2.0..2.0f64,
        ) {
            let (inc, mat) = (IsoModuli::new(k0, m0).unwrap(), IsoModuli::new(k, m).unwrap());
            let c = |s: SymMat| interior_matrix(&EshelbyConfig::new(inc, mat, s));
            let (s1, s2) = (SymMat::from(s1), SymMat::from(s2));
            let lhs = c(s1 * a + s2 * b);
            let rhs = c(s1) * a + c(s2) * b;
            prop_assert!((lhs - rhs).norm() < 1e-11 * (1.0 + rhs.norm()));
        }

        #[test]
        fn energy_below_trivial_trial(
            k0 in 0.2..5.0f64, m0 in 0.2..3.0f64, k in 0.2..5.0f64, m in 0.2..3.0f64,
            s in prop::array::uniform6(-1.0..1.0f64),
        ) {
            let inc = IsoModuli::new(k0, m0).unwrap();
            let cfg = EshelbyConfig::new(inc, IsoModuli::new(k, m).unwrap(), SymMat::from(s));
            let bound = inc.to_tensor().energy_quadratic(&cfg.loading);
            prop_assert!(energy(&cfg) <= bound * (1.0 + 1e-12) + 1e-14);
        }
    }
}
