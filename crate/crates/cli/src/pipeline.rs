use std::collections::BTreeMap;
use std::time::Instant;

use homog_core::concavity::energy_concavity_probe;
use homog_core::eshelby::{self, EshelbyConfig};
use homog_core::fem::{periodic_tensor, Domain, SolverConfig, VoxelField};
use homog_core::microstructure::{self, GeneratorSpec};
use homog_core::schemes::{
    approx1_iso, approx2_with, approx3, approx4_selfconsistent, Backend, ClosedFormEshelby,
    EnergyOracle, FemOracle, FixedPointTrace,
};
use homog_core::tensor::canonical_loads;
use homog_core::{ElasticTensor, Error, IsoModuli, Result, SymMat};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Scheme, FORMAT_VERSION};

/// A value with the accuracy and backend it was computed with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tagged<T> {
    pub value: T,
    pub tolerance: f64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A2Value {
    pub tensor: ElasticTensor,
    /// `‖M − Mᵀ‖/‖M‖` before symmetrization.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SchemeResults {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a1: Option<Tagged<IsoModuli>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a2: Option<Tagged<A2Value>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a3: Option<Tagged<ElasticTensor>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a4: Option<Tagged<IsoModuli>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periodic_reference: Option<Tagged<ElasticTensor>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EshelbyRow {
    pub load: String,
    pub fem: f64,
    pub analytic: f64,
    pub relative_error: f64,
    pub fem_tolerance: f64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityRow {
    pub load: String,
    pub t: Vec<f64>,
    pub energies: Vec<f64>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub concave: bool,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub n: usize,
    pub occupied_voxels: usize,
    /// Fraction of occupied voxels holding each generator phase.
    pub phase_fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub solves: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
    pub max_duality_bound: f64,
    pub korn_pointwise: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub config_sha256: String,
    pub config: RunConfig,
    pub field: FieldSummary,
    pub backend: Backend,
    pub schemes: SchemeResults,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_trace: Option<FixedPointTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eshelby_validation: Option<Vec<EshelbyRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concavity: Option<Vec<ConcavityRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solves: Option<SolveSummary>,
    /// Wall-clock seconds per stage; the only entries that vary between identical runs.
    pub timings: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub factor: usize,
    pub kappa: f64,
    pub mu: f64,
    pub outer_iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub backend: Backend,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format_version: u32,
    pub config_sha256: String,
    pub config: RunConfig,
    pub rows: Vec<SweepRow>,
    pub timings: BTreeMap<String, f64>,
}

fn load_name(i: usize, j: usize) -> String {
    format!("sigma_{i}{j}")
}

/// The generator's pattern on the whole cube, ready for periodic solves.
fn cube_field(spec: &GeneratorSpec) -> Result<VoxelField> {
    microstructure::generate(&GeneratorSpec {
        domain: Domain::Cube,
        ..spec.clone()
    })
}

fn summarize(field: &VoxelField, phases: &[IsoModuli]) -> FieldSummary {
    let tensors: Vec<ElasticTensor> = phases.iter().map(IsoModuli::to_tensor).collect();
    let occupied = field.occupied();
    let mut counts = vec![0usize; phases.len()];
    for a in field.cells().iter().flatten() {
        if let Some(k) = tensors.iter().position(|t| t == a) {
            counts[k] += 1;
        }
    }
    FieldSummary {
        n: field.n(),
        occupied_voxels: occupied,
        phase_fractions: counts.iter().map(|&c| c as f64 / occupied.max(1) as f64).collect(),
    }
}

fn oracle_for(cfg: &RunConfig, ball: &VoxelField, solver: SolverConfig) -> Result<Box<dyn EnergyOracle>> {
    match (cfg.uses_closed_form(), cfg.constant_phase()) {
        (true, Some(phase)) => Ok(Box::new(ClosedFormEshelby::new(phase))),
        _ => Ok(Box::new(FemOracle::new(ball.clone(), solver)?)),
    }
}

fn tagged<T>(backend: &Backend, value: T, tolerance: f64) -> Tagged<T> {
    Tagged {
        value,
        tolerance,
        backend: backend.clone(),
    }
}

fn summarize_solves(oracles: &[&FemOracle]) -> Option<SolveSummary> {
    let records: Vec<_> = oracles.iter().flat_map(|o| o.records()).collect();
    if records.is_empty() {
        return None;
    }
    Some(SolveSummary {
        solves: records.len(),
        max_iterations: records.iter().map(|r| r.iterations).max().unwrap_or(0),
        max_residual: records.iter().map(|r| r.residual).fold(0.0, f64::max),
        max_duality_bound: records.iter().map(|r| r.duality_bound).fold(0.0, f64::max),
        korn_pointwise: records.iter().all(|r| r.korn_pointwise),
    })
}

fn timed<T>(timings: &mut BTreeMap<String, f64>, key: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let v = f()?;
    timings.insert(key.into(), t.elapsed().as_secs_f64());
    Ok(v)
}

/// Generate → solve → schemes → report.
pub fn homogenize(cfg: &RunConfig) -> Result<RunReport> {
    let mut timings = BTreeMap::new();
    let band = cfg.generator.band;
    let cube = timed(&mut timings, "generate", || cube_field(&cfg.generator))?;
    let ball = microstructure::restrict_to_ball(&cube)?;
    let (closed, fem_main) = match (cfg.uses_closed_form(), cfg.constant_phase()) {
        (true, Some(phase)) => (Some(ClosedFormEshelby::new(phase)), None),
        _ => (None, Some(FemOracle::new(ball.clone(), cfg.solver)?)),
    };
    let oracle: &dyn EnergyOracle = match (&closed, &fem_main) {
        (Some(c), _) => c,
        (_, Some(f)) => f,
        _ => unreachable!(),
    };
    let backend = oracle.backend();
    let mut schemes = SchemeResults::default();
    let oracle_tol = oracle.tolerance();

    let needs_a1 = cfg.wants(Scheme::A1) || cfg.wants(Scheme::A2) || cfg.wants(Scheme::A3);
    if needs_a1 {
        let a1 = timed(&mut timings, "A1", || approx1_iso(oracle, &band))?;
        let a1_tol = 1e-6 * band.beta + oracle_tol;
        if cfg.wants(Scheme::A2) {
            let a2 = timed(&mut timings, "A2", || approx2_with(oracle, &a1.to_tensor()))?;
            schemes.a2 = Some(tagged(&backend, 
                A2Value {
                    tensor: a2.tensor,
                    asymmetry: a2.asymmetry,
                },
                oracle_tol,
            ));
        }
        if cfg.wants(Scheme::A3) {
            let a3 = timed(&mut timings, "A3", || approx3(oracle, &a1.to_tensor()))?;
            schemes.a3 = Some(tagged(&backend, a3, oracle_tol));
        }
        if cfg.wants(Scheme::A1) {
            schemes.a1 = Some(tagged(&backend, a1, a1_tol));
        }
    }

    let mut trace = None;
    if cfg.wants(Scheme::A4) {
        let (a4, tr) = timed(&mut timings, "A4", || approx4_selfconsistent(oracle, &band, &cfg.fixed_point))?;
        schemes.a4 = Some(tagged(&backend, a4, cfg.fixed_point.tol));
        trace = Some(tr);
    }

    if cfg.wants(Scheme::PeriodicReference) {
        let p = timed(&mut timings, "periodic_reference", || periodic_tensor(&cube, &cfg.solver))?;
        schemes.periodic_reference = Some(Tagged {
            value: p,
            tolerance: cfg.solver.cg_tol * band.beta_plus,
            backend: Backend::Fem {
                l: 1.0,
                nx: cfg.solver.nx,
                cg_tol: cfg.solver.cg_tol,
            },
        });
    }

    let mut eshelby_fem = None;
    let mut eshelby_validation = None;
    if cfg.wants(Scheme::EshelbyValidate) {
        let phase = cfg.constant_phase().expect("checked by validate");
        let matrix = cfg.eshelby_matrix.unwrap_or(IsoModuli {
            kappa: 0.5 * (band.alpha + band.beta),
            mu: 0.25 * (band.alpha + band.beta),
        });
        let fem = FemOracle::new(ball.clone(), cfg.solver)?;
        let mut loads: Vec<(String, SymMat)> = canonical_loads()
            .into_iter()
            .map(|(i, j, s)| (load_name(i, j), s))
            .collect();
        loads.push(("identity".into(), SymMat::identity()));
        let rows = timed(&mut timings, "eshelby_validate", || {
            loads
                .iter()
                .map(|(name, s)| {
                    let e_fem = fem.energy(&matrix.to_tensor(), s)?;
                    let e_exact = eshelby::energy(&EshelbyConfig::new(phase, matrix, *s));
                    Ok(EshelbyRow {
                        load: name.clone(),
                        fem: e_fem,
                        analytic: e_exact,
                        relative_error: (e_fem - e_exact).abs() / e_exact.abs(),
                        fem_tolerance: fem.tolerance(),
                        backend: fem.backend(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        eshelby_validation = Some(rows);
        eshelby_fem = Some(fem);
    }

    let mut concavity = None;
    if cfg.wants(Scheme::ConcavityReport) {
        let (lo, hi) = (band.lower().to_tensor(), band.upper().to_tensor());
        let rows = timed(&mut timings, "concavity_report", || {
            [("sigma_12", canonical_loads()[1].2), ("identity", SymMat::identity())]
                .into_iter()
                .map(|(name, s)| {
                    let p = energy_concavity_probe(oracle, &lo, &hi, &s, cfg.concavity_samples)?;
                    Ok(ConcavityRow {
                        load: name.into(),
                        concave: p.is_concave(),
                        t: p.t,
                        energies: p.energies,
                        max_violation: p.max_violation,
                        tolerance: p.tolerance,
                        backend: backend.clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        concavity = Some(rows);
    }

    let fems: Vec<&FemOracle> = fem_main.iter().chain(eshelby_fem.iter()).collect();

    Ok(RunReport {
        format_version: FORMAT_VERSION,
        config_sha256: cfg.sha256(),
        config: cfg.clone(),
        field: summarize(&ball, &cfg.generator.phases()),
        backend,
        schemes,
        fixed_point_trace: trace,
        eshelby_validation,
        concavity,
        solves: summarize_solves(&fems),
        timings,
    })
}

/// The pattern tiled `factor` times and resampled to the mesh's voxel resolution.
pub fn sweep_field(cfg: &RunConfig, cube: &VoxelField, factor: usize) -> Result<VoxelField> {
    let tiled = microstructure::rescale(cube, factor)?;
    let per_unit = cfg.solver.nx as f64 / cfg.solver.l;
    let m = per_unit.round() as usize;
    if (per_unit - m as f64).abs() > 1e-9 || m < tiled.n() || !m.is_multiple_of(tiled.n()) {
        return Err(Error::Argument(format!(
            "sweep factor {factor} gives n = {} voxels per axis, which the mesh (nx/L = {per_unit}) does not resolve",
            tiled.n()
        )));
    }
    microstructure::restrict_to_ball(&microstructure::resample(&tiled, m)?)
}

/// Self-consistent moduli for each rescaling factor.
pub fn sweep(cfg: &RunConfig) -> Result<SweepReport> {
    let mut timings = BTreeMap::new();
    let cube = timed(&mut timings, "generate", || cube_field(&cfg.generator))?;
    let band = cfg.generator.band;
    let fields = cfg
        .sweep_factors
        .iter()
        .map(|&f| sweep_field(cfg, &cube, f))
        .collect::<Result<Vec<_>>>()?;
    let run = |k: usize| -> Result<(SweepRow, f64)> {
        let t = Instant::now();
        let oracle = oracle_for(cfg, &fields[k], cfg.solver)?;
        let (m, tr) = approx4_selfconsistent(oracle.as_ref(), &band, &cfg.fixed_point)?;
        let (rf, rg) = *tr.residuals.last().expect("trace has a start");
        Ok((
            SweepRow {
                factor: cfg.sweep_factors[k],
                kappa: m.kappa,
                mu: m.mu,
                outer_iterations: tr.outer_iterations(),
                residual: rf.max(rg),
                tolerance: cfg.fixed_point.tol,
                backend: oracle.backend(),
            },
            t.elapsed().as_secs_f64(),
        ))
    };
    let results = map_indices(fields.len(), run);
    let mut rows = Vec::new();
    for r in results {
        let (row, secs) = r?;
        timings.insert(format!("N={}", row.factor), secs);
        rows.push(row);
    }
    Ok(SweepReport {
        format_version: FORMAT_VERSION,
        config_sha256: cfg.sha256(),
        config: cfg.clone(),
        rows,
        timings,
    })
}

#[cfg(feature = "parallel")]
fn map_indices<R: Send>(n: usize, f: impl Fn(usize) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indices<R>(n: usize, f: impl Fn(usize) -> R) -> Vec<R> {
    (0..n).map(f).collect()
}

/// Fixed-point trace as CSV rows `t, kappa, mu, residual_f, residual_g`.
pub fn write_trace_csv<W: std::io::Write>(w: W, trace: &FixedPointTrace) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "kappa", "mu", "residual_f", "residual_g"])?;
    for (t, ((k, m), (rf, rg))) in trace.iterates.iter().zip(&trace.residuals).enumerate() {
        out.serialize((t, k, m, rf, rg))?;
    }
    out.flush()?;
    Ok(())
}

/// Sweep rows as CSV `factor, kappa, mu, outer_iterations, residual`.
pub fn write_sweep_csv<W: std::io::Write>(w: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["factor", "kappa", "mu", "outer_iterations", "residual"])?;
    for r in rows {
        out.serialize((r.factor, r.kappa, r.mu, r.outer_iterations, r.residual))?;
    }
    out.flush()?;
    Ok(())
}
