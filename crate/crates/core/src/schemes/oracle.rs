use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eshelby::{self, EshelbyConfig};
use crate::fem::{DiscreteDisplacement, EmbeddedSolver, KornReport, SolverConfig, VoxelField};
use crate::par::{self, Exec};
use crate::tensor::{ElasticTensor, IsoModuli, SymMat};

/// Where energies come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    ClosedFormEshelby { inclusion: IsoModuli },
    Fem { #[serde(rename = "L")] l: f64, nx: usize, cg_tol: f64 },
}

/// `E_σ^𝔸(A)` for a fixed interior field `𝔸` and varying exterior tensor `A`.
pub trait EnergyOracle: Send + Sync {
    fn energy(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<f64>;

    /// `(1/|B|) ∫_B 𝔸(σ + e(w_σ))`.
    fn flux(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<SymMat>;

    fn backend(&self) -> Backend;

    /// Energies of several loads against one exterior tensor.
    fn energies(&self, exterior: &ElasticTensor, sigmas: &[SymMat]) -> Result<Vec<f64>> {
        sigmas.iter().map(|s| self.energy(exterior, s)).collect()
    }

    /// Absolute accuracy of returned energies, used to tolerate noise in
    /// concavity checks.
    fn tolerance(&self) -> f64 {
        0.0
    }
}

/// Closed-form energies of an isotropic inclusion; the exterior must be isotropic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormEshelby {
    pub inclusion: IsoModuli,
}

impl ClosedFormEshelby {
    pub fn new(inclusion: IsoModuli) -> Self {
        ClosedFormEshelby { inclusion }
    }

    fn config(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<EshelbyConfig> {
        let m = exterior.as_isotropic(1e-10).ok_or_else(|| {
            Error::Argument("the closed-form oracle needs an isotropic exterior tensor".into())
        })?;
        Ok(EshelbyConfig::new(self.inclusion, m, *sigma))
    }
}

impl EnergyOracle for ClosedFormEshelby {
    fn energy(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<f64> {
        Ok(eshelby::energy(&self.config(exterior, sigma)?))
    }

    fn flux(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<SymMat> {
        let cfg = self.config(exterior, sigma)?;
        let c = eshelby::interior_matrix(&cfg);
        Ok(self.inclusion.to_tensor().apply(&(*sigma + c)))
    }

    fn backend(&self) -> Backend {
        Backend::ClosedFormEshelby {
            inclusion: self.inclusion,
        }
    }
}

/// One finite-element solve, as recorded by [`FemOracle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub energy_primal: f64,
    pub energy_flux: f64,
    /// `|primal − flux|` allowed by the CG stopping rule.
    pub duality_bound: f64,
    pub iterations: usize,
    pub residual: f64,
    /// `‖e(w)‖ ≤ ‖∇w‖` and `‖div w‖ ≤ √3‖∇w‖` held pointwise.
    pub korn_pointwise: bool,
    pub strain_norm: f64,
    pub grad_norm: f64,
    pub div_norm: f64,
}

type Key = ([u64; 21], [u64; 6]);

/// Finite-element energies for a voxel field, memoized on
/// `(exterior, σ)` and warm-started from the previous solve of each load.
pub struct FemOracle {
    field: VoxelField,
    cfg: SolverConfig,
    cache: Mutex<HashMap<Key, (f64, SymMat)>>,
    warm: Mutex<HashMap<[u64; 6], Arc<DiscreteDisplacement>>>,
    records: Mutex<Vec<SolveRecord>>,
    solves: AtomicUsize,
}

fn sym_key(s: &SymMat) -> [u64; 6] {
    std::array::from_fn(|k| s.0[k].to_bits())
}

impl FemOracle {
    pub fn new(field: VoxelField, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        cfg.mesh()?.voxel_layout(field.n())?;
        Ok(FemOracle {
            field,
            cfg,
            cache: Mutex::new(HashMap::new()),
            warm: Mutex::new(HashMap::new()),
            records: Mutex::new(Vec::new()),
            solves: AtomicUsize::new(0),
        })
    }

    pub fn field(&self) -> &VoxelField {
        &self.field
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Number of finite-element solves performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    pub fn records(&self) -> Vec<SolveRecord> {
        self.records.lock().expect("records lock").clone()
    }

    fn solve_one(&self, solver: &EmbeddedSolver, sigma: &SymMat) -> Result<(f64, SymMat)> {
        let sk = sym_key(sigma);
        let warm = self.warm.lock().expect("warm lock").get(&sk).cloned();
        let w = solver.solve(sigma, warm.as_deref())?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let e = solver.energy_primal(sigma, &w)?;
        let ef = solver.energy_flux(sigma, &w)?;
        let flux = solver.flux_average(sigma, &w)?;
        let k: KornReport = solver.korn(w.nodal());
        self.records.lock().expect("records lock").push(SolveRecord {
            energy_primal: e,
            energy_flux: ef,
            duality_bound: solver.duality_bound(sigma, &w),
            iterations: w.stats.iterations,
            residual: w.stats.residual,
            korn_pointwise: k.pointwise,
            strain_norm: k.strain_sq.sqrt(),
            grad_norm: k.grad_sq.sqrt(),
            div_norm: k.div_sq.sqrt(),
        });
        self.warm.lock().expect("warm lock").insert(sk, Arc::new(w));
        Ok((e, flux))
    }

    fn evaluate(&self, exterior: &ElasticTensor, sigmas: &[SymMat]) -> Result<Vec<(f64, SymMat)>> {
        let ek = exterior.key();
        let missing: Vec<SymMat> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut m: Vec<SymMat> = sigmas
                .iter()
                .filter(|s| !cache.contains_key(&(ek, sym_key(s))))
                .copied()
                .collect();
            m.dedup_by_key(|s| sym_key(s));
            m
        };
        if !missing.is_empty() {
            let solver = EmbeddedSolver::new(&self.field, *exterior, self.cfg)?;
            // the solver already parallelizes its kernels; loads run one after the other
            let results = par::map_collect(Exec::Sequential, missing.len(), |i| {
                self.solve_one(&solver, &missing[i])
            });
            let mut cache = self.cache.lock().expect("cache lock");
            for (s, r) in missing.iter().zip(results) {
                cache.insert((ek, sym_key(s)), r?);
            }
        }
        let cache = self.cache.lock().expect("cache lock");
        Ok(sigmas.iter().map(|s| cache[&(ek, sym_key(s))]).collect())
    }
}

impl EnergyOracle for FemOracle {
    fn energy(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<f64> {
        Ok(self.evaluate(exterior, std::slice::from_ref(sigma))?[0].0)
    }

    fn flux(&self, exterior: &ElasticTensor, sigma: &SymMat) -> Result<SymMat> {
        Ok(self.evaluate(exterior, std::slice::from_ref(sigma))?[0].1)
    }

    fn energies(&self, exterior: &ElasticTensor, sigmas: &[SymMat]) -> Result<Vec<f64>> {
        Ok(self.evaluate(exterior, sigmas)?.into_iter().map(|r| r.0).collect())
    }

    fn backend(&self) -> Backend {
        Backend::Fem {
            l: self.cfg.l,
            nx: self.cfg.nx,
            cg_tol: self.cfg.cg_tol,
        }
    }

    fn tolerance(&self) -> f64 {
        (self.cfg.cg_tol * self.field.band().beta_plus).max(1e-12)
    }
}
