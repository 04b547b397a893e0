//! Voxel finite elements for the embedded corrector problem and for the
//! periodic cell problem.
//!
//! The embedded problem is posed on the box `[−L, L]³` with homogeneous
//! Dirichlet conditions on its boundary. Inside the unit ball the material
//! follows a [`VoxelField`]; elsewhere it is the constant exterior tensor
//! `A`. Because `Aσ` is constant, the surface load on the sphere equals the
//! volume load `∫_B e(v)·Aσ`, so the right-hand side reads
//! `b(v) = ∫_B e(v)·(A − 𝔸)σ` and no surface mesh is needed.

pub mod cg;
pub mod element;
mod embedded;
pub mod grid;
mod periodic;
pub mod voxel;

use serde::{Deserialize, Serialize};

pub use embedded::{
    energy_flux, energy_primal, flux_average, solve_embedded, EmbeddedSolver, KornReport,
};
pub use periodic::{periodic_tensor, solve_periodic, PeriodicSolver};
pub use voxel::{read_sidecar, sidecar_path, voxel_center, write_sidecar, Domain, Provenance, VoxelField};

use crate::error::{Error, Result};
use crate::fem::cg::CgStats;
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    #[default]
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Half-width of the truncation box.
    #[serde(rename = "L")]
    pub l: f64,
    /// Elements per axis.
    pub nx: usize,
    pub preconditioner: Preconditioner,
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cg_tol: 1e-8,
            cg_max_iter: 20_000,
            l: 4.0,
            nx: 48,
            preconditioner: Preconditioner::Diagonal,
            exec: Exec::Parallel,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(Error::Argument(format!("cg_tol must lie in (0, 1), got {}", self.cg_tol)));
        }
        if self.cg_max_iter == 0 {
            return Err(Error::Argument("cg_max_iter must be positive".into()));
        }
        TruncatedBoxMesh::new(self.l, self.nx).map(|_| ())
    }

    pub fn mesh(&self) -> Result<TruncatedBoxMesh> {
        TruncatedBoxMesh::new(self.l, self.nx)
    }
}

/// Uniform mesh of `[−L, L]³` with `nx` elements per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedBoxMesh {
    l: f64,
    nx: usize,
}

fn integer(x: f64) -> Option<usize> {
    let r = x.round();
    ((x - r).abs() < 1e-9 * x.abs().max(1.0) && r >= 0.0).then_some(r as usize)
}

impl TruncatedBoxMesh {
    pub fn new(l: f64, nx: usize) -> Result<Self> {
        if !(l >= 2.0) || !l.is_finite() {
            return Err(Error::Argument(format!("truncation half-width L must be ≥ 2, got {l}")));
        }
        if nx == 0 || nx % 2 == 1 {
            return Err(Error::Argument(format!("nx must be a positive even number, got {nx}")));
        }
        let m = TruncatedBoxMesh { l, nx };
        if integer((l - 1.0) / m.h()).is_none() {
            return Err(Error::Argument(format!(
                "the cube [−1, 1]³ does not fall on mesh lines for L = {l}, nx = {nx}"
            )));
        }
        Ok(m)
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn h(&self) -> f64 {
        2.0 * self.l / self.nx as f64
    }

    /// Element offset of the cube `[−1, 1]³` and elements per voxel at
    /// voxel resolution `n`.
    pub fn voxel_layout(&self, n: usize) -> Result<(usize, usize)> {
        let h = self.h();
        let offset = integer((self.l - 1.0) / h).expect("checked at construction");
        match integer(2.0 / (n as f64 * h)) {
            Some(r) if r >= 1 => Ok((offset, r)),
            _ => Err(Error::Argument(format!(
                "mesh (L = {}, nx = {}) does not resolve a voxel grid of n = {n}: nx must be a multiple of n·L",
                self.l, self.nx
            ))),
        }
    }
}

/// Nodal displacement on a uniform grid.
///
/// The stored nodal values vanish on the Dirichlet boundary; the constant
/// `gauge` shift that gives the field zero mean over the ball (or over the
/// periodic cell) is kept separately and added by [`Self::shifted`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDisplacement {
    pub nx: usize,
    /// Half-width of the meshed box (1 for periodic cells).
    pub l: f64,
    pub periodic: bool,
    nodal: Vec<f64>,
    gauge: [f64; 3],
    pub stats: CgStats,
}

impl DiscreteDisplacement {
    pub fn nodal(&self) -> &[f64] {
        &self.nodal
    }

    pub fn gauge(&self) -> [f64; 3] {
        self.gauge
    }

    pub fn n_nodes(&self) -> usize {
        self.nodal.len() / 3
    }

    pub fn shifted(&self) -> Vec<f64> {
        let mut v = self.nodal.clone();
        for c in v.chunks_mut(3) {
            for d in 0..3 {
                c[d] += self.gauge[d];
            }
        }
        v
    }

    pub fn norm(&self) -> f64 {
        self.nodal.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}
