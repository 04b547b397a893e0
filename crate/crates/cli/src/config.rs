use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use homog_core::fem::SolverConfig;
use homog_core::microstructure::{GeneratorSpec, Geometry};
use homog_core::schemes::FixedPointOptions;
use homog_core::IsoModuli;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    A1,
    A2,
    A3,
    A4,
    #[serde(rename = "periodic_reference")]
    PeriodicReference,
    #[serde(rename = "eshelby_validate")]
    EshelbyValidate,
    #[serde(rename = "concavity_report")]
    ConcavityReport,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::A1,
        Scheme::A2,
        Scheme::A3,
        Scheme::A4,
        Scheme::PeriodicReference,
        Scheme::EshelbyValidate,
        Scheme::ConcavityReport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::A1 => "A1",
            Scheme::A2 => "A2",
            Scheme::A3 => "A3",
            Scheme::A4 => "A4",
            Scheme::PeriodicReference => "periodic_reference",
            Scheme::EshelbyValidate => "eshelby_validate",
            Scheme::ConcavityReport => "concavity_report",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<_> = Scheme::ALL.iter().map(|k| k.name()).collect();
                format!("unknown scheme `{s}`, expected one of {}", names.join(", "))
            })
    }
}

/// Energy oracle used by the schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Closed form for constant fields, finite elements otherwise.
    #[default]
    Auto,
    ClosedForm,
    Fem,
}

/// A `homogenize` / `sweep` / `gen` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "format_version")]
    pub format_version: u32,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub oracle: OracleKind,
    #[serde(default)]
    pub fixed_point: FixedPointOptions,
    /// Matrix moduli of the Eshelby comparison; defaults to the band centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eshelby_matrix: Option<IsoModuli>,
    #[serde(default = "default_factors")]
    pub sweep_factors: Vec<usize>,
    #[serde(default = "default_samples")]
    pub concavity_samples: usize,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub csv: Option<PathBuf>,
}

fn format_version() -> u32 {
    FORMAT_VERSION
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::A1, Scheme::A2, Scheme::A3, Scheme::A4]
}

fn default_factors() -> Vec<usize> {
    vec![1, 2, 4]
}

fn default_samples() -> usize {
    9
}

/// Configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Command-line values that replace those of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub nx: Option<usize>,
    pub l: Option<f64>,
    pub cg_tol: Option<f64>,
    pub schemes: Option<Vec<Scheme>>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." { String::new() } else { format!(" at `{path}`") };
            ConfigError(format!("{origin}{field}: {inner}"))
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.generator.seed = s;
        }
        if let Some(n) = o.nx {
            self.solver.nx = n;
        }
        if let Some(l) = o.l {
            self.solver.l = l;
        }
        if let Some(t) = o.cg_tol {
            self.solver.cg_tol = t;
        }
        if let Some(s) = &o.schemes {
            self.schemes = s.clone();
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if o.csv.is_some() {
            self.csv = o.csv.clone();
        }
    }

    pub fn wants(&self, s: Scheme) -> bool {
        self.schemes.contains(&s)
    }

    pub fn constant_phase(&self) -> Option<IsoModuli> {
        match self.generator.geometry {
            Geometry::Constant { phase } => Some(phase),
            _ => None,
        }
    }

    pub fn uses_closed_form(&self) -> bool {
        match self.oracle {
            OracleKind::ClosedForm => true,
            OracleKind::Fem => false,
            OracleKind::Auto => self.constant_phase().is_some(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError(m));
        if self.format_version != FORMAT_VERSION {
            return bad(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                self.format_version
            ));
        }
        self.generator
            .validate()
            .map_err(|e| ConfigError(format!("generator: {e}")))?;
        if self.schemes.is_empty() {
            return bad("schemes: at least one scheme is required".into());
        }
        let constant = self.constant_phase().is_some();
        if self.oracle == OracleKind::ClosedForm && !constant {
            return bad("oracle: closed_form needs a constant generator".into());
        }
        if self.wants(Scheme::EshelbyValidate) && !constant {
            return bad("schemes: eshelby_validate needs a constant generator (a single inclusion phase)".into());
        }
        if self.concavity_samples < 3 {
            return bad("concavity_samples: at least 3 samples are required".into());
        }
        if self.sweep_factors.is_empty() || self.sweep_factors.contains(&0) {
            return bad("sweep_factors: need a non-empty list of positive factors".into());
        }
        if let Some(m) = self.eshelby_matrix {
            IsoModuli::new(m.kappa, m.mu).map_err(|e| ConfigError(format!("eshelby_matrix: {e}")))?;
        }
        let fem = !self.uses_closed_form()
            || self.wants(Scheme::EshelbyValidate)
            || self.wants(Scheme::PeriodicReference);
        if fem {
            self.solver.validate().map_err(|e| ConfigError(format!("solver: {e}")))?;
        }
        let fp = &self.fixed_point;
        if !(fp.tol > 0.0 && fp.root_tol > 0.0 && fp.damping > 0.0 && fp.damping < 1.0) {
            return bad("fixed_point: tolerances must be positive and damping in (0, 1)".into());
        }
        Ok(())
    }

    /// Canonical JSON of everything that determines the results.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configs serialize")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_schemes(s: &str) -> Result<Vec<Scheme>, String> {
    let mut out: Vec<Scheme> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "generator": {"kind": "constant", "phase": {"kappa": 2.0, "mu": 1.0}, "n": 4,
                      "band": {"alpha": 0.5, "beta": 4.0, "alpha_minus": 0.25, "beta_plus": 8.0}}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::parse(MINIMAL, "t").unwrap();
        assert_eq!(c.schemes, default_schemes());
        assert_eq!(c.solver, SolverConfig::default());
        assert!(c.uses_closed_form());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_field_names_its_location() {
        let text = MINIMAL.replacen("\"n\": 4", "\"n\": 4, \"colour\": 1", 1);
        let text = text.replacen("{\n", "{\n\"bogus\": 1,\n", 1);
        let e = RunConfig::parse(&text, "cfg.json").unwrap_err().0;
        assert!(e.contains("line 2"), "{e}");
        assert!(e.starts_with("cfg.json"), "{e}");
        assert!(e.contains("bogus"), "{e}");
    }

    #[test]
    fn bad_value_names_the_field() {
        let text = MINIMAL.replace("\"mu\": 1.0", "\"mu\": \"soft\"");
        let e = RunConfig::parse(&text, "cfg.json").unwrap_err().0;
        assert!(e.contains("generator"), "{e}");
    }

    #[test]
    fn overrides_win() {
        let mut c = RunConfig::parse(MINIMAL, "t").unwrap();
        c.apply(&Overrides {
            seed: Some(9),
            nx: Some(16),
            l: Some(2.0),
            cg_tol: Some(1e-6),
            schemes: Some(vec![Scheme::A4]),
            ..Overrides::default()
        });
        assert_eq!(c.generator.seed, 9);
        assert_eq!((c.solver.nx, c.solver.l, c.solver.cg_tol), (16, 2.0, 1e-6));
        assert_eq!(c.schemes, vec![Scheme::A4]);
    }

    #[test]
    fn hash_ignores_output_paths() {
        let a = RunConfig::parse(MINIMAL, "t").unwrap();
        let mut b = a.clone();
        b.out = Some("elsewhere.json".into());
        assert_eq!(a.sha256(), b.sha256());
        b.generator.seed = 1;
        assert_ne!(a.sha256(), b.sha256());
        assert_eq!(a.sha256().len(), 64);
    }

    #[test]
    fn scheme_lists() {
        assert_eq!(parse_schemes("a4,A1,A1").unwrap(), vec![Scheme::A1, Scheme::A4]);
        assert!(parse_schemes("A5").is_err());
        assert_eq!(parse_schemes("periodic_reference").unwrap(), vec![Scheme::PeriodicReference]);
    }

    #[test]
    fn eshelby_needs_constant_phase() {
        let text = r#"{
            "generator": {"kind": "two_phase_voxel", "phases": [{"kappa": 1.0, "mu": 0.5}, {"kappa": 3.0, "mu": 1.5}],
                          "volume_fraction": 0.5, "n": 4,
                          "band": {"alpha": 0.8, "beta": 4.0, "alpha_minus": 0.4, "beta_plus": 8.0}},
            "schemes": ["eshelby_validate"]
        }"#;
        let c = RunConfig::parse(text, "t").unwrap();
        assert!(c.validate().unwrap_err().0.contains("eshelby_validate"));
    }
}
