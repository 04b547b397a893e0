use nalgebra::Matrix6;

use crate::error::{Error, Result};
use crate::fem::{SolverConfig, VoxelField};
use crate::schemes::oracle::{EnergyOracle, FemOracle};
use crate::tensor::{canonical_loads, ElasticTensor, EllipticityBand, IsoModuli, SymMat};

/// `Σ_{i≤j} E_{σ^ij}^𝔸(A)`.
pub fn total_energy(oracle: &dyn EnergyOracle, a: &ElasticTensor) -> Result<f64> {
    let loads = canonical_loads().map(|(_, _, s)| s);
    Ok(oracle.energies(a, &loads)?.iter().sum())
}

pub(crate) fn approx1_tolerance(band: &EllipticityBand) -> f64 {
    1e-6 * band.beta
}

/// Outcome of a one-dimensional maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceMax {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a concave function on `[lo, hi]`.
///
/// Every bracket update checks the three-point concavity inequality on the
/// retained samples; a violation larger than `noise` aborts with
/// [`Error::NonConcave`] naming `what`.
pub fn maximize_concave<F>(what: &str, lo: f64, hi: f64, tol: f64, noise: f64, mut f: F) -> Result<SliceMax>
where
    F: FnMut(f64) -> Result<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    let mut evals = 4;
    let check = |xs: [f64; 3], fs: [f64; 3]| -> Result<()> {
        let t = (xs[1] - xs[0]) / (xs[2] - xs[0]);
        let chord = (1.0 - t) * fs[0] + t * fs[2];
        if fs[1] < chord - noise {
            return Err(Error::NonConcave(format!(
                "{what}: value {:.6e} at {:.6e} lies {:.3e} below the chord of its neighbours {:.6e} and {:.6e}",
                fs[1],
                xs[1],
                chord - fs[1],
                xs[0],
                xs[2]
            )));
        }
        Ok(())
    };
    while b - a > tol {
        check([a, x1, x2], [fa, f1, f2])?;
        check([x1, x2, b], [f1, f2, fb])?;
        if f1 >= f2 {
            b = x2;
            fb = f2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            fa = f1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
        evals += 1;
    }
    let best = [(a, fa), (x1, f1), (x2, f2), (b, fb)]
        .into_iter()
        .max_by(|p, q| p.1.total_cmp(&q.1))
        .expect("four candidates");
    Ok(SliceMax {
        x: best.0,
        value: best.1,
        evaluations: evals,
    })
}

/// Maximizer of `(κ, μ) ↦ total_energy(iso(κ, μ))` over `[α, β] × [α/2, β/2]`
/// by alternating one-dimensional searches.
pub fn approx1_iso(oracle: &dyn EnergyOracle, band: &EllipticityBand) -> Result<IsoModuli> {
    let tol = approx1_tolerance(band);
    let noise = 6.0 * oracle.tolerance() + 1e-13 * band.beta;
    let energy = |kappa: f64, mu: f64| total_energy(oracle, &IsoModuli::new(kappa, mu)?.to_tensor());
    let mut kappa = 0.5 * (band.alpha + band.beta);
    let mut mu = 0.5 * kappa;
    for _ in 0..100 {
        let k = maximize_concave(
            &format!("κ-slice at μ = {mu}"),
            band.alpha,
            band.beta,
            0.1 * tol,
            noise,
            |k| energy(k, mu),
        )?
        .x;
        let m = maximize_concave(
            &format!("μ-slice at κ = {k}"),
            0.5 * band.alpha,
            0.5 * band.beta,
            0.1 * tol,
            noise,
            |m| energy(k, m),
        )?
        .x;
        let step = (k - kappa).abs().max((m - mu).abs());
        kappa = k;
        mu = m;
        if step <= tol {
            return IsoModuli::new(kappa, mu);
        }
    }
    Err(Error::NonConcave(format!(
        "coordinate search did not settle within 100 sweeps (last κ = {kappa}, μ = {mu})"
    )))
}

/// Second approximation and the relative asymmetry of its raw matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx2 {
    pub tensor: ElasticTensor,
    pub asymmetry: f64,
}

/// `A₂` from averaged fluxes: column `k` is the flux for the `k`-th Mandel unit load.
pub fn approx2_with(oracle: &dyn EnergyOracle, a1: &ElasticTensor) -> Result<Approx2> {
    let mut m = Matrix6::zeros();
    for k in 0..6 {
        m.set_column(k, &oracle.flux(a1, &SymMat::mandel_unit(k))?.0);
    }
    let asymmetry = (m - m.transpose()).norm() / m.norm().max(f64::MIN_POSITIVE);
    Ok(Approx2 {
        tensor: ElasticTensor::symmetrized(&m),
        asymmetry,
    })
}

/// [`approx2_with`] backed by finite elements on `field`.
pub fn approx2(field: &VoxelField, a1: &ElasticTensor, cfg: &SolverConfig) -> Result<Approx2> {
    approx2_with(&FemOracle::new(field.clone(), *cfg)?, a1)
}

/// The symmetric matrix with `σ·A₃σ = E_σ^𝔸(A₁)`, by polarization over Mandel units.
pub fn approx3(oracle: &dyn EnergyOracle, a1: &ElasticTensor) -> Result<ElasticTensor> {
    let mut loads: Vec<SymMat> = (0..6).map(SymMat::mandel_unit).collect();
    for k in 0..6 {
        for l in k + 1..6 {
            loads.push(SymMat::mandel_unit(k) + SymMat::mandel_unit(l));
        }
    }
    let e = oracle.energies(a1, &loads)?;
    let mut m = Matrix6::zeros();
    for k in 0..6 {
        m[(k, k)] = e[k];
    }
    let mut p = 6;
    for k in 0..6 {
        for l in k + 1..6 {
            let v = 0.5 * (e[p] - e[k] - e[l]);
            m[(k, l)] = v;
            m[(l, k)] = v;
            p += 1;
        }
    }
    Ok(ElasticTensor::symmetrized(&m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eshelby;
    use crate::fem::Domain;
    use crate::schemes::oracle::ClosedFormEshelby;
    use crate::tensor::canonical_basis;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn band() -> EllipticityBand {
        EllipticityBand::new(0.5, 4.0).unwrap()
    }

    #[test]
    fn total_energy_constant_field() {
        let a = IsoModuli::new(2.0, 0.7).unwrap();
        let o = ClosedFormEshelby::new(a);
        let t = a.to_tensor();
        let want: f64 = canonical_loads().iter().map(|(_, _, s)| t.energy_quadratic(s)).sum();
        assert_relative_eq!(total_energy(&o, &t).unwrap(), want, max_relative = 1e-13);
    }

    #[test]
    fn total_energy_from_closed_forms() {
        let inc = IsoModuli::new(1.3, 0.9).unwrap();
        let mat = IsoModuli::new(2.2, 0.6).unwrap();
        let o = ClosedFormEshelby::new(inc);
        let want = 3.0 * eshelby::energy_shear(&inc, &mat) + 3.0 * eshelby::energy_diagonal(&inc, &mat);
        assert_relative_eq!(total_energy(&o, &mat.to_tensor()).unwrap(), want, max_relative = 1e-12);
    }

    #[test]
    fn total_energy_concave_on_segments() {
        let o = ClosedFormEshelby::new(IsoModuli::new(1.5, 0.8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = IsoModuli::new(rng.random_range(0.5..4.0), rng.random_range(0.25..2.0)).unwrap();
            let q = IsoModuli::new(rng.random_range(0.5..4.0), rng.random_range(0.25..2.0)).unwrap();
            let (e0, e1) = (
                total_energy(&o, &p.to_tensor()).unwrap(),
                total_energy(&o, &q.to_tensor()).unwrap(),
            );
            for t in [0.25, 0.5, 0.75] {
                let m = q.to_tensor() * t + p.to_tensor() * (1.0 - t);
                let et = total_energy(&o, &m).unwrap();
                assert!(et >= t * e1 + (1.0 - t) * e0 - 1e-12);
            }
        }
    }

    #[test]
    fn golden_section_finds_parabola_top() {
        let r = maximize_concave("parabola", -1.0, 3.0, 1e-9, 0.0, |x| Ok(-(x - 1.2f64).powi(2))).unwrap();
        assert!((r.x - 1.2).abs() < 1e-8);
    }

    #[test]
    fn golden_section_rejects_convex_bump() {
        let err = maximize_concave("bumpy", 0.0, 1.0, 1e-9, 0.0, |x| Ok((8.0 * x).cos())).unwrap_err();
        assert!(matches!(err, Error::NonConcave(ref s) if s.contains("bumpy")));
    }

    #[test]
    fn approx1_identity_case() {
        let o = ClosedFormEshelby::new(IsoModuli::new(1.0, 0.5).unwrap());
        let a1 = approx1_iso(&o, &band()).unwrap();
        assert!((a1.kappa - 1.0).abs() <= 1e-5);
        assert!((a1.mu - 0.5).abs() <= 1e-5);
    }

    #[test]
    fn approx1_interior_inclusion() {
        let m0 = IsoModuli::new(2.3, 0.8).unwrap();
        let a1 = approx1_iso(&ClosedFormEshelby::new(m0), &band()).unwrap();
        assert!((a1.kappa - 2.3).abs() <= 1e-5 && (a1.mu - 0.8).abs() <= 1e-5);
    }

    #[test]
    fn approx2_and_approx3_constant_field() {
        let m0 = IsoModuli::new(2.3, 0.8).unwrap();
        let o = ClosedFormEshelby::new(m0);
        let a = m0.to_tensor();
        let a2 = approx2_with(&o, &a).unwrap();
        assert!(a2.asymmetry < 1e-14);
        assert!((a2.tensor.matrix() - a.matrix()).norm() < 1e-12);
        let a3 = approx3(&o, &a).unwrap();
        assert!((a3.matrix() - a.matrix()).norm() < 1e-12);
    }

    #[test]
    fn approx2_columns_match_closed_form() {
        let inc = IsoModuli::new(3.0, 1.2).unwrap();
        let mat = IsoModuli::new(1.5, 0.6).unwrap();
        let o = ClosedFormEshelby::new(inc);
        let a2 = approx2_with(&o, &mat.to_tensor()).unwrap();
        for (_, _, s) in canonical_loads() {
            let c = eshelby::interior_matrix(&eshelby::EshelbyConfig::new(inc, mat, s));
            let want = inc.to_tensor().apply(&(s + c));
            assert!((a2.tensor.apply(&s) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn approx3_isotropic_eigenvalues() {
        let inc = IsoModuli::new(3.0, 1.2).unwrap();
        let mat = IsoModuli::new(1.5, 0.6).unwrap();
        let o = ClosedFormEshelby::new(inc);
        let a3 = approx3(&o, &mat.to_tensor()).unwrap();
        let iso = a3.as_isotropic(1e-10).expect("isotropic");
        let e12 = o.energy(&mat.to_tensor(), &canonical_basis(1, 2).unwrap()).unwrap();
        let eid = o.energy(&mat.to_tensor(), &SymMat::identity()).unwrap();
        assert_relative_eq!(2.0 * iso.mu, 2.0 * e12, max_relative = 1e-10);
        assert_relative_eq!(iso.kappa, eid / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn approx3_quadratic_form_consistency() {
        let inc = IsoModuli::new(0.9, 1.7).unwrap();
        let mat = IsoModuli::new(2.5, 0.9).unwrap();
        let o = ClosedFormEshelby::new(inc);
        let a3 = approx3(&o, &mat.to_tensor()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let s = SymMat::from(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let t = SymMat::from(std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
            let es = o.energy(&mat.to_tensor(), &s).unwrap();
            assert_relative_eq!(a3.energy_quadratic(&s), es, max_relative = 1e-11, epsilon = 1e-13);
            let et = o.energy(&mat.to_tensor(), &t).unwrap();
            let est = o.energy(&mat.to_tensor(), &(s + t)).unwrap();
            assert_relative_eq!(s.dot(&a3.apply(&t)), 0.5 * (est - es - et), max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn approx2_fem_constant_field() {
        let m0 = IsoModuli::new(2.0, 0.75).unwrap();
        let f = VoxelField::constant(4, band(), Domain::Ball, m0.to_tensor()).unwrap();
        let cfg = SolverConfig { l: 2.0, nx: 8, ..SolverConfig::default() };
        let a2 = approx2(&f, &m0.to_tensor(), &cfg).unwrap();
        assert!((a2.tensor.matrix() - m0.to_tensor().matrix()).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn energy_below_interior_average(
            k in 0.6f64..3.5, m in 0.3f64..1.8, k0 in 0.6f64..3.5, m0 in 0.3f64..1.8,
            s in proptest::array::uniform6(-1.0f64..1.0),
        ) {
            let inc = IsoModuli::new(k, m).unwrap();
            let o = ClosedFormEshelby::new(inc);
            let s = SymMat::from(s);
            let e = o.energy(&IsoModuli::new(k0, m0).unwrap().to_tensor(), &s).unwrap();
            prop_assert!(e <= inc.to_tensor().energy_quadratic(&s) * (1.0 + 1e-12) + 1e-14);
        }
    }
}
