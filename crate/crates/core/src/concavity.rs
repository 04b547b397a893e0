//! Concavity of isotropic Eshelby energies in the exterior moduli.
//!
//! For a shear load `σ^kl` (`k ≠ l`) the energy is `μ₀ − f(μ)` with
//! `f(μ) = 2(μ − μ₀)²(6μ + κ) / γ₀` and `γ₀ = 2μ₀(6μ + κ) + (8μ + 3κ)μ`.
//! Its second derivative is `F(μ)/γ₀³` where `F` is a quadratic in `μ − μ₀`
//! with negative discriminant and positive value at `μ₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eshelby::{self, EshelbyConfig};
use crate::schemes::EnergyOracle;
use crate::tensor::{ElasticTensor, IsoModuli, SymMat};

/// Intermediate quantities of the second-derivative computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcavityWitness {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `c₁² − 4c₂c₀`.
    pub discriminant: f64,
    /// `F(μ) = c₂(μ − μ₀)² + c₁(μ − μ₀) + c₀`.
    pub f_at_mu: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// `f(μ) = 2(μ − μ₀)²(6μ + κ) / (2μ₀(6μ + κ) + (8μ + 3κ)μ)`.
pub fn shear_subtracted_term(mu0: f64, kappa: f64, mu: f64) -> f64 {
    let g2 = 6.0 * mu + kappa;
    2.0 * (mu - mu0).powi(2) * g2 / (2.0 * mu0 * g2 + (8.0 * mu + 3.0 * kappa) * mu)
}

/// `f''(μ)` and the witness of its positivity.
pub fn shear_energy_second_derivative(mu0: f64, kappa: f64, mu: f64) -> Result<(f64, ConcavityWitness)> {
    positive("μ₀", mu0)?;
    positive("κ", kappa)?;
    positive("μ", mu)?;
    let g0 = 2.0 * mu0 * (6.0 * mu + kappa) + (8.0 * mu + 3.0 * kappa) * mu;
    let g1 = 12.0 * mu0 + 16.0 * mu + 3.0 * kappa;
    let g2 = 6.0 * mu + kappa;
    let c2 = 4.0 * (-6.0 * g0 * g1 - 8.0 * g0 * g2 + g1 * g1 * g2);
    let c1 = 48.0 * g0 * g0 - 8.0 * g0 * g1 * g2;
    let c0 = 4.0 * g0 * g0 * g2;
    let d = mu - mu0;
    let f = c2 * d * d + c1 * d + c0;
    let w = ConcavityWitness {
        gamma0: g0,
        gamma1: g1,
        gamma2: g2,
        c0,
        c1,
        c2,
        discriminant: c1 * c1 - 4.0 * c2 * c0,
        f_at_mu: f,
    };
    Ok((f / g0.powi(3), w))
}

/// `∂²/∂κ² [κ₀ − (κ₀ − κ)²/(κ₀ + 4μ)] = −2/(κ₀ + 4μ)`; independent of `κ`.
pub fn bulk_energy_second_derivative(kappa0: f64, mu: f64, _kappa: f64) -> f64 {
    -2.0 / (kappa0 + 4.0 * mu)
}

/// Samples of `t ↦ (1/3)E_Id` along a segment of isotropic tensors on
/// which it is affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineCounterexample {
    pub alpha: f64,
    pub beta: f64,
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    /// Least-squares line `f ≈ intercept + slope·t`.
    pub slope: f64,
    pub intercept: f64,
}

impl AffineCounterexample {
    /// `α − (α − β)²(1 + t)/(12α)`.
    pub fn closed_form(&self, t: f64) -> f64 {
        self.alpha - (self.alpha - self.beta).powi(2) * (1.0 + t) / (12.0 * self.alpha)
    }

    /// Largest deviation of the samples from the fitted line.
    pub fn max_line_deviation(&self) -> f64 {
        self.t
            .iter()
            .zip(&self.f)
            .map(|(t, f)| (f - self.intercept - self.slope * t).abs())
            .fold(0.0, f64::max)
    }
}

/// Evaluates the segment `κ(t) = tβ + (1 − t)(α + β)/2`, `μ(t) = 5αt/4 + (1 − t)α/2`
/// against the inclusion `iso(α, μ₀)` at `t = 0, 0.1, …, 1`.
pub fn affine_counterexample(alpha: f64, beta: f64) -> Result<AffineCounterexample> {
    positive("α", alpha)?;
    if !(beta >= 2.5 * alpha) || !beta.is_finite() {
        return Err(Error::Hypothesis(format!("need β ≥ 5α/2, got α = {alpha}, β = {beta}")));
    }
    let inclusion = IsoModuli::new(alpha, 0.25 * (alpha + beta))?;
    let t: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let f = t
        .iter()
        .map(|&t| {
            let kappa = t * beta + (1.0 - t) * 0.5 * (alpha + beta);
            let mu = t * 1.25 * alpha + (1.0 - t) * 0.5 * alpha;
            let cfg = EshelbyConfig::new(inclusion, IsoModuli::new(kappa, mu)?, SymMat::identity());
            Ok(eshelby::energy(&cfg) / 3.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = t.len() as f64;
    let (st, sf) = (t.iter().sum::<f64>(), f.iter().sum::<f64>());
    let stt: f64 = t.iter().map(|x| x * x).sum();
    let stf: f64 = t.iter().zip(&f).map(|(x, y)| x * y).sum();
    let slope = (n * stf - st * sf) / (n * stt - st * st);
    let intercept = (sf - slope * st) / n;
    Ok(AffineCounterexample {
        alpha,
        beta,
        t,
        f,
        slope,
        intercept,
    })
}

/// Energies sampled along a segment of exterior tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityProbe {
    pub t: Vec<f64>,
    pub energies: Vec<f64>,
    /// Divided second differences on consecutive triples.
    pub second_differences: Vec<f64>,
    /// Largest amount by which a sample lies below the chord of its neighbours.
    pub max_violation: f64,
    pub tolerance: f64,
}

impl ConcavityProbe {
    pub fn is_concave(&self) -> bool {
        self.max_violation <= self.tolerance
    }

    pub fn max_second_difference(&self) -> f64 {
        self.second_differences.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Samples `t ↦ E_σ((1 − t)A₀ + tA₁)` at Chebyshev–Lobatto points of `[0, 1]`.
pub fn energy_concavity_probe(
    oracle: &dyn EnergyOracle,
    a0: &ElasticTensor,
    a1: &ElasticTensor,
    sigma: &SymMat,
    samples: usize,
) -> Result<ConcavityProbe> {
    if samples < 3 {
        return Err(Error::Argument("the concavity probe needs at least 3 samples".into()));
    }
    let t: Vec<f64> = (0..samples)
        .map(|k| 0.5 * (1.0 - (std::f64::consts::PI * k as f64 / (samples - 1) as f64).cos()))
        .collect();
    let energies = t
        .iter()
        .map(|&s| oracle.energy(&(*a0 * (1.0 - s) + *a1 * s), sigma))
        .collect::<Result<Vec<f64>>>()?;
    let mut second_differences = Vec::with_capacity(samples - 2);
    let mut max_violation = f64::NEG_INFINITY;
    for k in 1..samples - 1 {
        let (x0, x1, x2) = (t[k - 1], t[k], t[k + 1]);
        let (e0, e1, e2) = (energies[k - 1], energies[k], energies[k + 1]);
        second_differences.push(2.0 * ((e2 - e1) / (x2 - x1) - (e1 - e0) / (x1 - x0)) / (x2 - x0));
        let w = (x1 - x0) / (x2 - x0);
        max_violation = max_violation.max((1.0 - w) * e0 + w * e2 - e1);
    }
    let scale = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(ConcavityProbe {
        t,
        energies,
        second_differences,
        max_violation,
        tolerance: 4.0 * oracle.tolerance() + 1e-12 * scale.max(1.0),
    })
}
