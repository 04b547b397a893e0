//! Reproducible heterogeneous isotropic fields.
//!
//! Random draws use ChaCha8 seeded from the spec's `seed`, one draw per
//! voxel (or per inclusion attempt) in x-fastest order, so the same spec
//! gives bit-identical fields on every platform.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{voxel_center, Domain, VoxelField};
use crate::tensor::{ElasticTensor, EllipticityBand, IsoModuli};

/// Largest voxel resolution accepted by [`generate`] and [`rescale`].
pub const MAX_RESOLUTION: usize = 128;

/// Inclusion placement attempts per requested inclusion.
const PACKING_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Constant {
        phase: IsoModuli,
    },
    /// Each voxel independently takes `phases[1]` with probability `volume_fraction`.
    TwoPhaseVoxel {
        phases: [IsoModuli; 2],
        volume_fraction: f64,
    },
    /// `count` disjoint balls of radius `radius` of `phases[1]` in `phases[0]`.
    SphereInclusions {
        phases: [IsoModuli; 2],
        radius: f64,
        count: usize,
    },
    /// `layers` slabs of equal width normal to `axis` (0, 1 or 2), alternating phases.
    Laminate {
        phases: [IsoModuli; 2],
        axis: usize,
        layers: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub geometry: Geometry,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    pub band: EllipticityBand,
    #[serde(default = "default_domain")]
    pub domain: Domain,
}

fn default_domain() -> Domain {
    Domain::Ball
}

impl GeneratorSpec {
    pub fn phases(&self) -> Vec<IsoModuli> {
        match &self.geometry {
            Geometry::Constant { phase } => vec![*phase],
            Geometry::TwoPhaseVoxel { phases, .. }
            | Geometry::SphereInclusions { phases, .. }
            | Geometry::Laminate { phases, .. } => phases.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n > MAX_RESOLUTION {
            return Err(Error::Capacity(format!(
                "voxel resolution {} outside 1..={MAX_RESOLUTION}",
                self.n
            )));
        }
        for p in self.phases() {
            let p = IsoModuli::new(p.kappa, p.mu)?;
            if !p.in_band(&self.band) {
                return Err(Error::Domain(format!(
                    "phase (κ = {}, μ = {}) lies outside the band [{}, {}]",
                    p.kappa, p.mu, self.band.alpha, self.band.beta
                )));
            }
        }
        match &self.geometry {
            Geometry::TwoPhaseVoxel { volume_fraction: p, .. } if !(0.0..=1.0).contains(p) => {
                Err(Error::Argument(format!("volume fraction {p} outside [0, 1]")))
            }
            Geometry::SphereInclusions { radius, .. } if !(*radius > 0.0 && *radius < 1.0) => {
                Err(Error::Argument(format!("inclusion radius {radius} outside (0, 1)")))
            }
            Geometry::Laminate { axis, layers, .. } if *axis > 2 || *layers == 0 => Err(Error::Argument(
                format!("laminate needs axis in 0..3 and at least one layer, got axis {axis}, {layers} layers"),
            )),
            _ => Ok(()),
        }
    }
}

fn in_ball(c: &Vector3<f64>) -> bool {
    c.norm_squared() <= 1.0
}

fn place_inclusions(rng: &mut ChaCha8Rng, domain: Domain, radius: f64, count: usize) -> Result<Vec<Vector3<f64>>> {
    let mut centres: Vec<Vector3<f64>> = Vec::with_capacity(count);
    let reach = 1.0 - radius;
    let mut attempts = 0;
    while centres.len() < count {
        if attempts == PACKING_ATTEMPTS * count.max(1) {
            return Err(Error::Packing(format!(
                "placed {} of {count} inclusions of radius {radius} after {attempts} attempts",
                centres.len()
            )));
        }
        attempts += 1;
        let c = Vector3::from_fn(|_, _| rng.random_range(-reach..=reach));
        if domain == Domain::Ball && c.norm() > reach {
            continue;
        }
        if centres.iter().all(|o| (o - c).norm() >= 2.0 * radius) {
            centres.push(c);
        }
    }
    Ok(centres)
}

/// Builds the field described by `spec`.
pub fn generate(spec: &GeneratorSpec) -> Result<VoxelField> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tensors: Vec<ElasticTensor> = spec.phases().iter().map(|p| p.to_tensor()).collect();
    let mut phase = vec![0u8; n * n * n];
    match &spec.geometry {
        Geometry::Constant { .. } => {}
        Geometry::TwoPhaseVoxel { volume_fraction, .. } => {
            for p in phase.iter_mut() {
                *p = rng.random_bool(*volume_fraction) as u8;
            }
        }
        Geometry::SphereInclusions { radius, count, .. } => {
            let centres = place_inclusions(&mut rng, spec.domain, *radius, *count)?;
            for (idx, p) in phase.iter_mut().enumerate() {
                let c = voxel_center(n, idx % n, (idx / n) % n, idx / (n * n));
                *p = centres.iter().any(|o| (o - c).norm() <= *radius) as u8;
            }
        }
        Geometry::Laminate { axis, layers, .. } => {
            for (idx, p) in phase.iter_mut().enumerate() {
                let ijk = [idx % n, (idx / n) % n, idx / (n * n)];
                let x = (ijk[*axis] as f64 + 0.5) / n as f64;
                *p = ((x * *layers as f64) as usize % 2) as u8;
            }
        }
    }
    let cells = phase
        .iter()
        .enumerate()
        .map(|(idx, &p)| {
            let c = voxel_center(n, idx % n, (idx / n) % n, idx / (n * n));
            (spec.domain == Domain::Cube || in_ball(&c)).then_some(tensors[p as usize])
        })
        .collect();
    VoxelField::from_cells(n, cells, spec.band, spec.domain)
}

/// `x ↦ 𝔸(N x)` wrapped periodically: the cube pattern tiled `N` times per axis.
pub fn rescale(field: &VoxelField, factor: usize) -> Result<VoxelField> {
    if field.domain() != Domain::Cube {
        return Err(Error::Argument("rescaling needs a cube-supported (periodic) field".into()));
    }
    if factor == 0 {
        return Err(Error::Argument("rescaling factor must be positive".into()));
    }
    let n = field.n();
    let m = n.checked_mul(factor).filter(|&m| m <= MAX_RESOLUTION).ok_or_else(|| {
        Error::Capacity(format!("rescaled resolution {n}·{factor} exceeds {MAX_RESOLUTION}"))
    })?;
    let mut cells = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                cells.push(field.cell(i % n, j % n, k % n).copied());
            }
        }
    }
    VoxelField::from_cells(m, cells, *field.band(), Domain::Cube)
}

/// Nearest-voxel resampling of a cube field to resolution `m`.
pub fn resample(field: &VoxelField, m: usize) -> Result<VoxelField> {
    if field.domain() != Domain::Cube {
        return Err(Error::Argument("resampling needs a cube-supported field".into()));
    }
    if m == 0 || m > MAX_RESOLUTION {
        return Err(Error::Capacity(format!("resolution {m} outside 1..={MAX_RESOLUTION}")));
    }
    let n = field.n();
    let src = |i: usize| ((i as f64 + 0.5) * n as f64 / m as f64) as usize;
    let mut cells = Vec::with_capacity(m * m * m);
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                cells.push(field.cell(src(i), src(j), src(k)).copied());
            }
        }
    }
    VoxelField::from_cells(m, cells, *field.band(), Domain::Cube)
}

/// Keeps the voxels whose centre lies in the unit ball.
pub fn restrict_to_ball(field: &VoxelField) -> Result<VoxelField> {
    let n = field.n();
    let cells = field
        .cells()
        .iter()
        .enumerate()
        .map(|(idx, c)| {
            let x = voxel_center(n, idx % n, (idx / n) % n, idx / (n * n));
            if in_ball(&x) { *c } else { None }
        })
        .collect();
    VoxelField::from_cells(n, cells, *field.band(), Domain::Ball)
}
