//! The four effective-tensor approximations built on embedded-corrector
//! energies `E_σ^𝔸(A)`.
//!
//! * [`approx1_iso`] maximizes the total energy over isotropic exterior tensors.
//! * [`approx2`] averages the flux of the correctors computed with exterior `A₁`.
//! * [`approx3`] reads off the quadratic form `σ ↦ E_σ^𝔸(A₁)`.
//! * [`approx4_selfconsistent`] solves the isotropic self-consistent equations.

mod approx;
mod fixed_point;
mod oracle;

use serde::{Deserialize, Serialize};

pub use approx::{
    approx1_iso, approx2, approx2_with, approx3, maximize_concave, total_energy, Approx2,
    SliceMax,
};
pub use fixed_point::{
    approx4_selfconsistent, f_eval, g_eval, mu_hat, kappa_hat, FixedPointOptions, FixedPointTrace,
};
pub use oracle::{Backend, ClosedFormEshelby, EnergyOracle, FemOracle, SolveRecord};

use crate::error::Result;
use crate::tensor::{ElasticTensor, EllipticityBand, IsoModuli};

/// Effective tensors computed by all four schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTensorReport {
    pub a1: IsoModuli,
    pub a2: ElasticTensor,
    /// `‖M − Mᵀ‖/‖M‖` of the assembled matrix before symmetrization.
    pub a2_asymmetry: f64,
    pub a3: ElasticTensor,
    pub a4: Option<IsoModuli>,
    pub trace: Option<FixedPointTrace>,
    pub backend: Backend,
    pub tolerances: Tolerances,
    pub timings: Timings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub approx1: f64,
    pub fixed_point: f64,
    pub root: f64,
    pub oracle: f64,
}

/// Wall-clock seconds per scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub approx1: f64,
    pub approx2: f64,
    pub approx3: f64,
    pub approx4: f64,
}

/// Runs all schemes against one oracle; `A₄` is skipped when `with_a4` is false.
pub fn effective_tensors(
    oracle: &dyn EnergyOracle,
    band: &EllipticityBand,
    opts: &FixedPointOptions,
    with_a4: bool,
) -> Result<EffectiveTensorReport> {
    let t = std::time::Instant::now();
    let a1 = approx1_iso(oracle, band)?;
    let t1 = t.elapsed().as_secs_f64();
    let t = std::time::Instant::now();
    let a2 = approx2_with(oracle, &a1.to_tensor())?;
    let t2 = t.elapsed().as_secs_f64();
    let t = std::time::Instant::now();
    let a3 = approx3(oracle, &a1.to_tensor())?;
    let t3 = t.elapsed().as_secs_f64();
    let t = std::time::Instant::now();
    let (a4, trace) = if with_a4 {
        let (m, tr) = approx4_selfconsistent(oracle, band, opts)?;
        (Some(m), Some(tr))
    } else {
        (None, None)
    };
    let t4 = t.elapsed().as_secs_f64();
    Ok(EffectiveTensorReport {
        a1,
        a2: a2.tensor,
        a2_asymmetry: a2.asymmetry,
        a3,
        a4,
        trace,
        backend: oracle.backend(),
        tolerances: Tolerances {
            approx1: approx::approx1_tolerance(band),
            fixed_point: opts.tol,
            root: opts.root_tol,
            oracle: oracle.tolerance(),
        },
        timings: Timings {
            approx1: t1,
            approx2: t2,
            approx3: t3,
            approx4: t4,
        },
    })
}
