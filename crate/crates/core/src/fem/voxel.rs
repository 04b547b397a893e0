//! Voxel tensor fields and their binary container.
//!
//! Layout of a `.voxf` file, all little-endian:
//!
//! | bytes  | content                                   |
//! |--------|-------------------------------------------|
//! | 0..4   | magic `VOXF`                              |
//! | 4..8   | version (`u32`, currently 1)              |
//! | 8..16  | `n` (`u64`)                               |
//! | 16..24 | `α` (`f64`)                               |
//! | 24..32 | `β` (`f64`)                               |
//! | 32..36 | domain (`u32`: 0 ball, 1 cube)            |
//! | 36..44 | `α₋` (`f64`)                              |
//! | 44..52 | `β⁺` (`f64`)                              |
//! | 52..64 | zero                                      |
//!
//! followed by `n³` records of 21 `f64` (upper triangle of the Mandel
//! matrix, row-major), x fastest. Records outside the ball are zero and
//! ignored on read.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{ElasticTensor, EllipticityBand};

pub const VOXF_MAGIC: &[u8; 4] = b"VOXF";
pub const VOXF_VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

/// Support of a voxel field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Voxels whose centre lies in the closed unit ball.
    Ball,
    /// The whole cube `[−1, 1]³`, used as a periodic cell.
    Cube,
}

/// Per-voxel elasticity tensors on the cube `[−1, 1]³`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelField {
    n: usize,
    cells: Vec<Option<ElasticTensor>>,
    band: EllipticityBand,
    domain: Domain,
}

/// Centre of voxel `(i, j, k)` at resolution `n`.
pub fn voxel_center(n: usize, i: usize, j: usize, k: usize) -> Vector3<f64> {
    let h = 2.0 / n as f64;
    Vector3::new(
        -1.0 + (i as f64 + 0.5) * h,
        -1.0 + (j as f64 + 0.5) * h,
        -1.0 + (k as f64 + 0.5) * h,
    )
}

fn in_ball(c: &Vector3<f64>) -> bool {
    c.norm_squared() <= 1.0
}

impl VoxelField {
    /// Field with `f(centre)` in every voxel of the domain.
    pub fn from_fn<F>(n: usize, band: EllipticityBand, domain: Domain, f: F) -> Result<Self>
    where
        F: Fn(&Vector3<f64>) -> ElasticTensor,
    {
        if n == 0 {
            return Err(Error::Argument("voxel resolution must be positive".into()));
        }
        let mut cells = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let c = voxel_center(n, i, j, k);
                    if domain == Domain::Ball && !in_ball(&c) {
                        cells.push(None);
                    } else {
                        cells.push(Some(f(&c)));
                    }
                }
            }
        }
        Self::from_cells(n, cells, band, domain)
    }

    /// Uniform field.
    pub fn constant(n: usize, band: EllipticityBand, domain: Domain, a: ElasticTensor) -> Result<Self> {
        Self::from_fn(n, band, domain, |_| a)
    }

    /// Wraps raw cells, checking the domain pattern and the band.
    pub fn from_cells(
        n: usize,
        cells: Vec<Option<ElasticTensor>>,
        band: EllipticityBand,
        domain: Domain,
    ) -> Result<Self> {
        if cells.len() != n * n * n {
            return Err(Error::Argument(format!(
                "expected {} cells for n = {n}, got {}",
                n * n * n,
                cells.len()
            )));
        }
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let inside = domain == Domain::Cube || in_ball(&voxel_center(n, i, j, k));
                    match (&cells[i + n * (j + n * k)], inside) {
                        (Some(a), true) => {
                            if !a.in_class_m(&band) {
                                return Err(Error::Domain(format!(
                                    "voxel ({i}, {j}, {k}) has spectrum {:?} outside [{}, {}]",
                                    a.eigenvalues(),
                                    band.alpha,
                                    band.beta
                                )));
                            }
                        }
                        (None, true) => {
                            return Err(Error::Argument(format!("voxel ({i}, {j}, {k}) has no tensor")))
                        }
                        (Some(_), false) => {
                            return Err(Error::Argument(format!(
                                "voxel ({i}, {j}, {k}) lies outside the ball but carries a tensor"
                            )))
                        }
                        (None, false) => {}
                    }
                }
            }
        }
        Ok(VoxelField {
            n,
            cells,
            band,
            domain,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> &EllipticityBand {
        &self.band
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn cells(&self) -> &[Option<ElasticTensor>] {
        &self.cells
    }

    pub fn cell(&self, i: usize, j: usize, k: usize) -> Option<&ElasticTensor> {
        self.cells[i + self.n * (j + self.n * k)].as_ref()
    }

    /// Number of voxels carrying a tensor.
    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Volume of the occupied voxels.
    pub fn volume(&self) -> f64 {
        self.occupied() as f64 * (2.0 / self.n as f64).powi(3)
    }

    /// Volume average of the tensor over occupied voxels.
    pub fn mean_tensor(&self) -> ElasticTensor {
        let mut acc = ElasticTensor::zero();
        for a in self.cells.iter().flatten() {
            acc = acc + *a;
        }
        acc * (1.0 / self.occupied() as f64)
    }

    /// Same data with a different band (re-validated).
    pub fn with_band(self, band: EllipticityBand) -> Result<Self> {
        Self::from_cells(self.n, self.cells, band, self.domain)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.cells.len() * 21 * 8);
        out.extend_from_slice(VOXF_MAGIC);
        out.extend_from_slice(&VOXF_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.band.alpha.to_le_bytes());
        out.extend_from_slice(&self.band.beta.to_le_bytes());
        let flag: u32 = match self.domain {
            Domain::Ball => 0,
            Domain::Cube => 1,
        };
        out.extend_from_slice(&flag.to_le_bytes());
        out.extend_from_slice(&self.band.alpha_minus.to_le_bytes());
        out.extend_from_slice(&self.band.beta_plus.to_le_bytes());
        out.resize(HEADER_LEN, 0);
        for c in &self.cells {
            let rec = c.map(|a| a.upper_triangle()).unwrap_or([0.0; 21]);
            for x in rec {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[0..4] != VOXF_MAGIC {
            return Err(Error::Format("missing VOXF header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != VOXF_VERSION {
            return Err(Error::Format(format!("unsupported VOXF version {version}")));
        }
        let n = usize::try_from(u64_at(8)).map_err(|_| Error::Format("n overflows".into()))?;
        let (alpha, beta) = (f64_at(16), f64_at(24));
        let domain = match u32_at(32) {
            0 => Domain::Ball,
            1 => Domain::Cube,
            d => return Err(Error::Format(format!("unknown domain flag {d}"))),
        };
        let (am, bp) = (f64_at(36), f64_at(44));
        let band = if am == 0.0 && bp == 0.0 {
            EllipticityBand::new(alpha, beta)?
        } else {
            EllipticityBand::with_extension(alpha, beta, am, bp)?
        };
        let count = n
            .checked_mul(n)
            .and_then(|x| x.checked_mul(n))
            .ok_or_else(|| Error::Format("n³ overflows".into()))?;
        let expected = HEADER_LEN + count * 21 * 8;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "VOXF body has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let mut cells = Vec::with_capacity(count);
        for idx in 0..count {
            let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
            if domain == Domain::Ball && !in_ball(&voxel_center(n, i, j, k)) {
                cells.push(None);
                continue;
            }
            let base = HEADER_LEN + idx * 21 * 8;
            let rec: [f64; 21] = std::array::from_fn(|r| f64_at(base + 8 * r));
            cells.push(Some(ElasticTensor::from_upper_triangle(&rec)));
        }
        Self::from_cells(n, cells, band, domain)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

/// Provenance stored next to a field file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: Option<u64>,
    /// Generator parameters, free-form.
    #[serde(default)]
    pub spec: serde_json::Value,
}

/// `field.voxf` → `field.voxf.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, prov: &Provenance) -> Result<()> {
    let text = serde_json::to_string_pretty(prov).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(sidecar_path(path), text)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<Provenance> {
    let text = fs::read_to_string(sidecar_path(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}
