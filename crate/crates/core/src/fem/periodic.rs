use nalgebra::Matrix6;

use crate::error::{Error, Result};
use crate::fem::cg::pcg;
use crate::fem::embedded::{korn_report, KornReport};
use crate::fem::grid::Grid;
use crate::fem::voxel::{Domain, VoxelField};
use crate::fem::{DiscreteDisplacement, Preconditioner, SolverConfig};
use crate::par;
use crate::tensor::{ElasticTensor, SymMat};

/// Periodic cell problem `∫ e(v)·𝔸(σ + e(w)) = 0` on `[−1, 1]³`.
///
/// `cfg.nx` is the number of elements across the cell; `cfg.l` is unused.
#[derive(Debug, Clone)]
pub struct PeriodicSolver {
    grid: Grid,
    cfg: SolverConfig,
    inv_diag: Option<Vec<f64>>,
}

impl PeriodicSolver {
    pub fn new(field: &VoxelField, cfg: SolverConfig) -> Result<Self> {
        if field.domain() != Domain::Cube {
            return Err(Error::Argument("periodic cells need a cube-supported field".into()));
        }
        if !(cfg.cg_tol > 0.0) || cfg.nx < 2 {
            return Err(Error::Argument("periodic solver needs cg_tol > 0 and nx ≥ 2".into()));
        }
        let n = field.n();
        if !cfg.nx.is_multiple_of(n) {
            return Err(Error::Argument(format!(
                "nx = {} is not a multiple of the voxel resolution {n}",
                cfg.nx
            )));
        }
        let r = cfg.nx / n;
        let grid = Grid::new(cfg.nx, 2.0 / cfg.nx as f64, -1.0, true, |i, j, k| {
            *field.cell(i / r, j / r, k / r).expect("cube fields are full")
        });
        let inv_diag = match cfg.preconditioner {
            Preconditioner::Diagonal => Some(grid.diagonal().iter().map(|d| 1.0 / d).collect()),
            Preconditioner::None => None,
        };
        Ok(PeriodicSolver { grid, cfg, inv_diag })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Returns the corrector and the averaged flux `⟨𝔸(σ + e(w))⟩`.
    pub fn solve(&self, sigma: &SymMat) -> Result<(DiscreteDisplacement, SymMat)> {
        let el = self.grid.element();
        let b = self.grid.assemble(|e| {
            let tau = self.grid.element_material(e).apply(sigma);
            Some((-(el.b_int.transpose() * tau.0)).into())
        });
        let mut x = vec![0.0; b.len()];
        let stats = pcg(
            self.cfg.exec,
            |p, q| self.grid.apply(self.cfg.exec, p, q),
            self.inv_diag.as_deref(),
            &b,
            &mut x,
            self.cfg.cg_tol,
            self.cfg.cg_max_iter,
        )?;
        let n_nodes = self.grid.n_nodes() as f64;
        let mut mean = [0.0; 3];
        for c in x.chunks(3) {
            for d in 0..3 {
                mean[d] += c[d] / n_nodes;
            }
        }
        let ne = self.grid.n_elements();
        let flux = par::sum_arrays::<6, _>(self.cfg.exec, ne, |e| {
            let ue = self.grid.element_values(e, &x);
            let eps = SymMat(el.mean_strain(&ue));
            self.grid.element_material(e).apply(&(*sigma + eps)).into()
        });
        let w = DiscreteDisplacement {
            nx: self.cfg.nx,
            l: 1.0,
            periodic: true,
            nodal: x,
            gauge: mean.map(|m| -m),
            stats,
        };
        Ok((w, SymMat::from(flux.map(|v| v / ne as f64))))
    }

    pub fn korn(&self, x: &[f64]) -> KornReport {
        korn_report(&self.grid, self.cfg.exec, x)
    }
}

pub fn solve_periodic(field: &VoxelField, sigma: &SymMat, cfg: &SolverConfig) -> Result<(DiscreteDisplacement, SymMat)> {
    PeriodicSolver::new(field, *cfg)?.solve(sigma)
}

/// Periodic reference tensor, one Mandel column per unit load, symmetrized.
pub fn periodic_tensor(field: &VoxelField, cfg: &SolverConfig) -> Result<ElasticTensor> {
    let solver = PeriodicSolver::new(field, *cfg)?;
    let mut m = Matrix6::zeros();
    for k in 0..6 {
        let (_, flux) = solver.solve(&SymMat::mandel_unit(k))?;
        m.set_column(k, &flux.0);
    }
    Ok(ElasticTensor::symmetrized(&m))
}
