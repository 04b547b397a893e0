use std::cell::RefCell;

use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schemes::oracle::EnergyOracle;
use crate::tensor::{shear_loads, EllipticityBand, IsoModuli, SymMat};

/// `F(μ, κ) = (1/3) Σ_{i<j} E_{σ^ij}(iso(κ, μ)) − μ`.
pub fn f_eval(oracle: &dyn EnergyOracle, mu: f64, kappa: f64) -> Result<f64> {
    let a = IsoModuli::new(kappa, mu)?.to_tensor();
    let e: f64 = oracle.energies(&a, &shear_loads())?.iter().sum();
    Ok(e / 3.0 - mu)
}

/// `G(μ, κ) = (1/3) E_Id(iso(κ, μ)) − κ`.
pub fn g_eval(oracle: &dyn EnergyOracle, mu: f64, kappa: f64) -> Result<f64> {
    let a = IsoModuli::new(kappa, mu)?.to_tensor();
    Ok(oracle.energy(&a, &SymMat::identity())? / 3.0 - kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedPointOptions {
    /// Bound on `max(|F|, |G|)` at the returned point.
    pub tol: f64,
    /// Absolute tolerance of the scalar root-finds.
    pub root_tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            tol: 1e-6,
            root_tol: 1e-8,
            max_iter: 200,
            damping: 0.5,
        }
    }
}

/// Iterates and residuals of the self-consistent outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointTrace {
    /// `(κ, μ)` pairs; the first entry is the starting point.
    pub iterates: Vec<(f64, f64)>,
    /// `(|F|, |G|)` at each iterate.
    pub residuals: Vec<(f64, f64)>,
    /// Outer steps at which damping was applied.
    pub damped: Vec<usize>,
    pub converged: bool,
    pub tol: f64,
}

impl FixedPointTrace {
    /// Number of outer iterations performed.
    pub fn outer_iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        self.iterates.last().copied()
    }
}

struct Abs(f64);

impl Convergency<f64> for Abs {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() <= self.0
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= 200
    }
}

/// Root of `f` on `[lo, hi]`, requiring a sign change.
fn root<F>(what: &str, lo: f64, hi: f64, tol: f64, f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    // round-off level endpoint values count as roots
    let noise = 1e-13 * (lo.abs() + hi.abs());
    if f_lo.abs() <= noise {
        return Ok(lo);
    }
    if f_hi.abs() <= noise {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracket {
            what: what.into(),
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    let failure = RefCell::new(None);
    let g = |x: f64| match f(x) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let r = find_root_brent(lo, hi, &g, &mut Abs(tol));
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    r.map_err(|e| Error::Argument(format!("root search for {what} failed: {e}")))
}

/// `μ̂(κ)`: the root of `F(·, κ)` in `[α/2, β/2]`.
pub fn mu_hat(oracle: &dyn EnergyOracle, band: &EllipticityBand, kappa: f64, tol: f64) -> Result<f64> {
    root(&format!("F(·, κ = {kappa}) = 0"), 0.5 * band.alpha, 0.5 * band.beta, tol, |mu| {
        f_eval(oracle, mu, kappa)
    })
}

/// `κ̂(μ)`: the root of `G(μ, ·)` in `[α, β]`.
pub fn kappa_hat(oracle: &dyn EnergyOracle, band: &EllipticityBand, mu: f64, tol: f64) -> Result<f64> {
    root(&format!("G(μ = {mu}, ·) = 0"), band.alpha, band.beta, tol, |kappa| {
        g_eval(oracle, mu, kappa)
    })
}

/// Isotropic self-consistent moduli: iterates `H(μ, κ) = (μ̂(κ), κ̂(μ))`
/// from the band centre until `max(|F|, |G|) ≤ tol`.
///
/// When a step increases the residual it is halved towards the previous
/// iterate (up to ten times).
pub fn approx4_selfconsistent(
    oracle: &dyn EnergyOracle,
    band: &EllipticityBand,
    opts: &FixedPointOptions,
) -> Result<(IsoModuli, FixedPointTrace)> {
    if !(opts.tol > 0.0 && opts.root_tol > 0.0 && opts.damping > 0.0 && opts.damping < 1.0) {
        return Err(Error::Argument("fixed-point tolerances must be positive and damping in (0, 1)".into()));
    }
    let residual = |kappa: f64, mu: f64| -> Result<(f64, f64)> {
        Ok((f_eval(oracle, mu, kappa)?.abs(), g_eval(oracle, mu, kappa)?.abs()))
    };
    let size = |r: (f64, f64)| r.0.max(r.1);
    let mut kappa = 0.5 * (band.alpha + band.beta);
    let mut mu = 0.5 * kappa;
    let mut res = residual(kappa, mu)?;
    let mut trace = FixedPointTrace {
        iterates: vec![(kappa, mu)],
        residuals: vec![res],
        damped: Vec::new(),
        converged: size(res) <= opts.tol,
        tol: opts.tol,
    };
    let mut it = 0;
    while !trace.converged {
        if it == opts.max_iter {
            return Err(Error::Convergence {
                iterations: it,
                residual: size(res),
                trace: Box::new(trace),
            });
        }
        it += 1;
        let m_new = mu_hat(oracle, band, kappa, opts.root_tol)?;
        let k_new = kappa_hat(oracle, band, mu, opts.root_tol)?;
        let (mut k, mut m) = (k_new, m_new);
        let mut r = residual(k, m)?;
        let mut halvings = 0;
        while size(r) > size(res) && halvings < 10 {
            k = kappa + opts.damping * (k - kappa);
            m = mu + opts.damping * (m - mu);
            r = residual(k, m)?;
            halvings += 1;
        }
        if halvings > 0 {
            trace.damped.push(it);
        }
        kappa = k;
        mu = m;
        res = r;
        trace.iterates.push((kappa, mu));
        trace.residuals.push(res);
        trace.converged = size(res) <= opts.tol;
    }
    Ok((IsoModuli::new(kappa, mu)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::oracle::ClosedFormEshelby;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn band() -> EllipticityBand {
        EllipticityBand::new(0.5, 4.0).unwrap()
    }

    #[test]
    fn residuals_vanish_for_same_tensor() {
        let m0 = IsoModuli::new(1.7, 0.6).unwrap();
        let o = ClosedFormEshelby::new(m0);
        assert!(f_eval(&o, 0.6, 1.7).unwrap().abs() < 1e-14);
        assert!(g_eval(&o, 0.6, 1.7).unwrap().abs() < 1e-14);
    }

    #[test]
    fn lower_bound_residuals_closed_form() {
        let alpha = 0.5;
        let o = ClosedFormEshelby::new(IsoModuli::new(alpha, alpha / 2.0).unwrap());
        for (kappa, mu) in [(0.7, 0.3), (2.0, 1.1), (3.9, 1.9)] {
            let d = alpha / 2.0 - mu;
            let f = d * (1.0 - 2.0 * d / (alpha + (8.0 * mu + 3.0 * kappa) / (6.0 * mu + kappa) * mu));
            assert_relative_eq!(f_eval(&o, mu, kappa).unwrap(), f, max_relative = 1e-11);
            let dk = alpha - kappa;
            let g = dk * (1.0 - dk / (alpha + 4.0 * mu));
            assert_relative_eq!(g_eval(&o, mu, kappa).unwrap(), g, max_relative = 1e-11);
        }
    }

    #[test]
    fn constant_field_converges_in_one_step() {
        let m0 = IsoModuli::new(2.6, 0.9).unwrap();
        let o = ClosedFormEshelby::new(m0);
        let (m, tr) = approx4_selfconsistent(&o, &band(), &FixedPointOptions::default()).unwrap();
        assert!(tr.converged);
        assert_eq!(tr.outer_iterations(), 1);
        assert!((m.kappa - 2.6).abs() < 1e-7 && (m.mu - 0.9).abs() < 1e-7);
    }

    #[test]
    fn bracket_error_outside_comparison_bounds() {
        let o = ClosedFormEshelby::new(IsoModuli::new(10.0, 5.0).unwrap());
        let err = mu_hat(&o, &band(), 2.0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Bracket { .. }));
    }

    #[test]
    fn iteration_cap_reports_trace() {
        let o = ClosedFormEshelby::new(IsoModuli::new(2.6, 0.9).unwrap());
        let opts = FixedPointOptions { max_iter: 0, ..FixedPointOptions::default() };
        match approx4_selfconsistent(&o, &band(), &opts) {
            Err(Error::Convergence { iterations: 0, trace, .. }) => {
                assert_eq!(trace.iterates.len(), 1);
                assert!(!trace.converged);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn result_stays_in_band(k in 0.5f64..4.0, m in 0.25f64..2.0) {
            let b = band();
            let o = ClosedFormEshelby::new(IsoModuli::new(k, m).unwrap());
            let (r, tr) = approx4_selfconsistent(&o, &b, &FixedPointOptions::default()).unwrap();
            prop_assert!(tr.converged);
            prop_assert!(r.kappa >= b.alpha && r.kappa <= b.beta);
            prop_assert!(r.mu >= 0.5 * b.alpha && r.mu <= 0.5 * b.beta);
            prop_assert!((r.kappa - k).abs() < 1e-6 && (r.mu - m).abs() < 1e-6);
        }
    }
}
