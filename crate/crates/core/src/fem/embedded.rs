use nalgebra::Vector6;

use crate::error::{Error, Result};
use crate::fem::cg::pcg;
use crate::fem::element::{gauss_points, gradient};
use crate::fem::grid::Grid;
use crate::fem::voxel::{Domain, VoxelField};
use crate::fem::{DiscreteDisplacement, Preconditioner, SolverConfig, TruncatedBoxMesh};
use crate::par;
use crate::tensor::{ElasticTensor, SymMat};

/// Embedded corrector problem for one field and one exterior tensor.
///
/// Construction builds the material table and preconditioner; each call to
/// [`EmbeddedSolver::solve`] handles one load.
#[derive(Debug, Clone)]
pub struct EmbeddedSolver {
    grid: Grid,
    cfg: SolverConfig,
    exterior: ElasticTensor,
    in_ball: Vec<bool>,
    volume: f64,
    inv_diag: Option<Vec<f64>>,
}

/// Norms of a discrete field at the Gauss points, and the pointwise
/// Korn-type inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KornReport {
    /// `‖e(w)‖²` over the box.
    pub strain_sq: f64,
    /// `‖∇w‖²`.
    pub grad_sq: f64,
    /// `‖div w‖²`.
    pub div_sq: f64,
    /// `∫ e(w)·𝒜 e(w)`.
    pub energy: f64,
    /// `|e| ≤ |∇w|` and `|div w| ≤ √3 |∇w|` held at every Gauss point.
    pub pointwise: bool,
}

fn check_exterior(a: &ElasticTensor, field: &VoxelField) -> Result<()> {
    let b = field.band();
    let ev = a.eigenvalues();
    let slack = 1e-10;
    if ev[0] < b.alpha_minus * (1.0 - slack) || ev[5] > b.beta_plus * (1.0 + slack) {
        return Err(Error::Domain(format!(
            "exterior tensor spectrum [{:.4}, {:.4}] leaves the band [{}, {}]",
            ev[0], ev[5], b.alpha_minus, b.beta_plus
        )));
    }
    Ok(())
}

impl EmbeddedSolver {
    pub fn new(field: &VoxelField, exterior: ElasticTensor, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if field.domain() != Domain::Ball {
            return Err(Error::Argument("embedded problems need a ball-supported field".into()));
        }
        check_exterior(&exterior, field)?;
        let mesh = TruncatedBoxMesh::new(cfg.l, cfg.nx)?;
        let (offset, ratio) = mesh.voxel_layout(field.n())?;
        let n = field.n();
        let voxel = |c: usize| -> Option<usize> {
            let c = c.checked_sub(offset)? / ratio;
            (c < n).then_some(c)
        };
        let lookup = |ex: usize, ey: usize, ez: usize| -> Option<&ElasticTensor> {
            field.cell(voxel(ex)?, voxel(ey)?, voxel(ez)?)
        };
        let grid = Grid::new(cfg.nx, mesh.h(), -cfg.l, false, |ex, ey, ez| {
            lookup(ex, ey, ez).copied().unwrap_or(exterior)
        });
        let in_ball: Vec<bool> = (0..grid.n_elements())
            .map(|e| {
                let (ex, ey, ez) = grid.element_coords(e);
                lookup(ex, ey, ez).is_some()
            })
            .collect();
        let volume = in_ball.iter().filter(|&&b| b).count() as f64 * grid.element().volume();
        let inv_diag = match cfg.preconditioner {
            Preconditioner::Diagonal => Some(grid.diagonal().iter().map(|d| 1.0 / d).collect()),
            Preconditioner::None => None,
        };
        Ok(EmbeddedSolver {
            grid,
            cfg,
            exterior,
            in_ball,
            volume,
            inv_diag,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn exterior(&self) -> &ElasticTensor {
        &self.exterior
    }

    /// Volume of the voxelized ball `B_h`.
    pub fn ball_volume(&self) -> f64 {
        self.volume
    }

    pub fn element_in_ball(&self, e: usize) -> bool {
        self.in_ball[e]
    }

    /// Load vector of `b(v) = ∫_B e(v)·(A − 𝔸)σ`.
    pub fn load(&self, sigma: &SymMat) -> Vec<f64> {
        let el = self.grid.element();
        self.grid.assemble(|e| {
            if !self.in_ball[e] {
                return None;
            }
            let tau = (self.exterior - *self.grid.element_material(e)).apply(sigma);
            let fe = el.b_int.transpose() * tau.0;
            Some(fe.into())
        })
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.grid.apply(self.cfg.exec, x, y);
    }

    pub fn solve(&self, sigma: &SymMat, warm_start: Option<&DiscreteDisplacement>) -> Result<DiscreteDisplacement> {
        let b = self.load(sigma);
        let mut x = match warm_start {
            Some(w) if w.nodal().len() == b.len() && !w.periodic => w.nodal().to_vec(),
            _ => vec![0.0; b.len()],
        };
        self.grid.mask(&mut x);
        let stats = pcg(
            self.cfg.exec,
            |p, q| self.apply(p, q),
            self.inv_diag.as_deref(),
            &b,
            &mut x,
            self.cfg.cg_tol,
            self.cfg.cg_max_iter,
        )?;
        let mean = self.ball_mean(&x);
        Ok(DiscreteDisplacement {
            nx: self.cfg.nx,
            l: self.cfg.l,
            periodic: false,
            nodal: x,
            gauge: mean.map(|m| -m),
            stats,
        })
    }

    fn check(&self, w: &DiscreteDisplacement) -> Result<()> {
        if w.periodic || w.nx != self.cfg.nx || w.l != self.cfg.l {
            return Err(Error::Argument(format!(
                "displacement on grid (L = {}, nx = {}) does not match solver grid (L = {}, nx = {})",
                w.l, w.nx, self.cfg.l, self.cfg.nx
            )));
        }
        Ok(())
    }

    /// Mean of a nodal field over `B_h`.
    pub fn ball_mean(&self, x: &[f64]) -> [f64; 3] {
        let s = par::sum_arrays::<3, _>(self.cfg.exec, self.grid.n_elements(), |e| {
            if !self.in_ball[e] {
                return [0.0; 3];
            }
            let ue = self.grid.element_values(e, x);
            let mut m = [0.0; 3];
            for a in 0..8 {
                for d in 0..3 {
                    m[d] += ue[3 * a + d] / 8.0;
                }
            }
            m
        });
        let n_ball = self.volume / self.grid.element().volume();
        s.map(|v| v / n_ball)
    }

    fn mean_strain(&self, e: usize, x: &[f64]) -> Vector6<f64> {
        let ue = self.grid.element_values(e, x);
        self.grid.element().mean_strain(&ue)
    }

    /// `(1/|B|)[∫_B σ·𝔸σ − a(w, w)]`.
    pub fn energy_primal(&self, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<f64> {
        self.check(w)?;
        let x = w.nodal();
        let hv = self.grid.element().volume();
        let [bulk, aww] = par::sum_arrays::<2, _>(self.cfg.exec, self.grid.n_elements(), |e| {
            let ue = self.grid.element_values(e, x);
            let b = if self.in_ball[e] {
                hv * self.grid.element_material(e).energy_quadratic(sigma)
            } else {
                0.0
            };
            [b, self.grid.element_energy(e, &ue)]
        });
        Ok((bulk - aww) / self.volume)
    }

    /// `(1/|B|)[∫_B σ·𝔸(σ + e(w)) − ∫_B e(w)·Aσ]`.
    pub fn energy_flux(&self, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<f64> {
        self.check(w)?;
        let x = w.nodal();
        let hv = self.grid.element().volume();
        let a_sigma = self.exterior.apply(sigma);
        let s = par::sum(self.cfg.exec, self.grid.n_elements(), |e| {
            if !self.in_ball[e] {
                return 0.0;
            }
            let eps = SymMat(self.mean_strain(e, x));
            let a_in = self.grid.element_material(e);
            hv * (a_in.apply(sigma).dot(&(*sigma + eps)) - eps.dot(&a_sigma))
        });
        Ok(s / self.volume)
    }

    /// `(1/|B|) ∫_B 𝔸(σ + e(w))`.
    pub fn flux_average(&self, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<SymMat> {
        self.check(w)?;
        let x = w.nodal();
        let s = par::sum_arrays::<6, _>(self.cfg.exec, self.grid.n_elements(), |e| {
            if !self.in_ball[e] {
                return [0.0; 6];
            }
            let eps = SymMat(self.mean_strain(e, x));
            self.grid.element_material(e).apply(&(*sigma + eps)).into()
        });
        let n_ball = self.volume / self.grid.element().volume();
        Ok(SymMat::from(s.map(|v| v / n_ball)))
    }

    /// Gauss-point norms of an arbitrary nodal field on this grid.
    pub fn korn(&self, x: &[f64]) -> KornReport {
        korn_report(&self.grid, self.cfg.exec, x)
    }

    /// `‖K w − b‖ / ‖b‖` for the load `σ`.
    pub fn relative_residual(&self, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<f64> {
        self.check(w)?;
        let b = self.load(sigma);
        let mut r = vec![0.0; b.len()];
        self.apply(w.nodal(), &mut r);
        let num: f64 = r.iter().zip(&b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(if den == 0.0 { num } else { num / den })
    }

    /// Bound on `|energy_primal − energy_flux|` implied by the CG stopping
    /// rule: `|wᵀ(b − Kw)| ≤ tol ‖w‖ ‖b‖`, divided by `|B|`.
    pub fn duality_bound(&self, sigma: &SymMat, w: &DiscreteDisplacement) -> f64 {
        let b = self.load(sigma);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.stats.residual.max(self.cfg.cg_tol) * w.norm() * bn / self.volume
    }

    /// Nodal interpolant of `x ↦ f(x)`.
    pub fn interpolate<F: Fn(&[f64; 3]) -> [f64; 3]>(&self, f: F) -> Vec<f64> {
        (0..self.grid.n_nodes())
            .flat_map(|n| f(&self.grid.node_position(n)))
            .collect()
    }
}

pub(crate) fn korn_report(grid: &Grid, exec: par::Exec, x: &[f64]) -> KornReport {
    let gp = gauss_points();
    let h = grid.h();
    let w = grid.element().volume() / 8.0;
    let sums = par::sum_arrays::<5, _>(exec, grid.n_elements(), |e| {
        let ue = grid.element_values(e, x);
        let a = grid.element_material(e);
        let mut acc = [0.0; 5];
        for xi in &gp {
            let g = gradient(xi, h, &ue);
            let eps = 0.5 * (g + g.transpose());
            let (es, gs, dv) = (eps.norm_squared(), g.norm_squared(), g.trace().powi(2));
            let s = SymMat::from_matrix_unchecked(&eps);
            acc[0] += w * es;
            acc[1] += w * gs;
            acc[2] += w * dv;
            acc[3] += w * a.energy_quadratic(&s);
            let tol = 1e-12 * gs + f64::MIN_POSITIVE;
            if es > gs + tol || dv > 3.0 * gs + tol {
                acc[4] += 1.0;
            }
        }
        acc
    });
    KornReport {
        strain_sq: sums[0],
        grad_sq: sums[1],
        div_sq: sums[2],
        energy: sums[3],
        pointwise: sums[4] == 0.0,
    }
}

pub fn solve_embedded(
    field: &VoxelField,
    exterior: &ElasticTensor,
    sigma: &SymMat,
    cfg: &SolverConfig,
) -> Result<DiscreteDisplacement> {
    EmbeddedSolver::new(field, *exterior, *cfg)?.solve(sigma, None)
}

fn solver_for(field: &VoxelField, exterior: &ElasticTensor, w: &DiscreteDisplacement) -> Result<EmbeddedSolver> {
    let cfg = SolverConfig {
        l: w.l,
        nx: w.nx,
        preconditioner: Preconditioner::None,
        ..SolverConfig::default()
    };
    EmbeddedSolver::new(field, *exterior, cfg)
}

pub fn energy_primal(field: &VoxelField, exterior: &ElasticTensor, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<f64> {
    solver_for(field, exterior, w)?.energy_primal(sigma, w)
}

pub fn energy_flux(field: &VoxelField, exterior: &ElasticTensor, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<f64> {
    solver_for(field, exterior, w)?.energy_flux(sigma, w)
}

pub fn flux_average(field: &VoxelField, exterior: &ElasticTensor, sigma: &SymMat, w: &DiscreteDisplacement) -> Result<SymMat> {
    solver_for(field, exterior, w)?.flux_average(sigma, w)
}
