//! `homog`: effective elasticity tensors from the command line.
//!
//! Exit codes: 0 success, 1 failed acceptance criterion, 2 configuration
//! or input error, 3 solver failure, 4 fixed-point failure.

mod config;
mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homog_core::eshelby::{self, EshelbyConfig};
use homog_core::fem::{write_sidecar, Provenance};
use homog_core::microstructure;
use homog_core::validation::{Status, Suite, SuiteOptions};
use homog_core::{canonical_basis, Error, IsoModuli, SymMat};
use nalgebra::Vector3;
use serde::Serialize;

use config::{parse_schemes, ConfigError, Overrides, RunConfig, Scheme};

#[derive(Parser)]
#[command(name = "homog", version, about = "Effective elasticity tensors via embedded corrector problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a field, run the requested schemes and write a JSON report.
    Homogenize(RunArgs),
    /// Closed-form Eshelby solution for one inclusion and load.
    Eshelby(EshelbyArgs),
    /// Run the acceptance criteria and print a pass/fail table.
    Validate(ValidateArgs),
    /// Self-consistent moduli of the generator pattern rescaled by each sweep factor.
    Sweep(RunArgs),
    /// Generate a microstructure and write it as a voxel file.
    Gen(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Elements per axis of the truncation box.
    #[arg(long)]
    nx: Option<usize>,
    /// Half-width of the truncation box.
    #[arg(long = "L")]
    l: Option<f64>,
    #[arg(long)]
    cg_tol: Option<f64>,
    /// Comma-separated subset of A1,A2,A3,A4,periodic_reference,eshelby_validate,concavity_report.
    #[arg(long, value_parser = parse_scheme_list)]
    schemes: Option<SchemeList>,
    /// Print the full JSON report on stdout.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the fixed-point trace (or sweep table) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct EshelbyArgs {
    /// Inclusion moduli `κ,μ` (or `λ,μ` with --lame).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    inclusion: (f64, f64),
    /// Matrix moduli `κ,μ` (or `λ,μ` with --lame).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    matrix: (f64, f64),
    /// `id`, a canonical index pair such as `12`, or six Mandel components.
    #[arg(long, default_value = "id", allow_hyphen_values = true)]
    sigma: String,
    /// Read moduli pairs as Lamé coefficients `λ,μ`.
    #[arg(long)]
    lame: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Analytic criteria only.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Clone)]
struct SchemeList(Vec<Scheme>);

fn parse_scheme_list(s: &str) -> Result<SchemeList, String> {
    parse_schemes(s).map(SchemeList)
}

enum Failure {
    Config(String),
    Core(Error),
    Criteria(usize),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Solver { .. } | Error::Singular(_) | Error::NonConcave(_) => 3,
        Error::Convergence { .. } | Error::Bracket { .. } => 4,
        _ => 2,
    }
}

fn report_failure(f: Failure) -> ExitCode {
    match f {
        Failure::Config(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Failure::Criteria(n) => {
            eprintln!("error: {n} acceptance criteria failed");
            ExitCode::from(1)
        }
        Failure::Core(e) => {
            eprintln!("error: {e}");
            if let Error::Convergence { trace, .. } = &e {
                eprintln!("fixed-point trace (t, kappa, mu, |F|, |G|):");
                for (t, ((k, m), (rf, rg))) in trace.iterates.iter().zip(&trace.residuals).enumerate() {
                    eprintln!("  {t:>3}  {k:.8}  {m:.8}  {rf:.3e}  {rg:.3e}");
                }
            }
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [a, b] => {
            let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
            Ok((p(a)?, p(b)?))
        }
        _ => Err(format!("expected two comma-separated numbers, got `{s}`")),
    }
}

fn parse_sigma(s: &str) -> Result<SymMat, String> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("id") {
        return Ok(SymMat::identity());
    }
    if let [a, b] = s.as_bytes() {
        if (b'1'..=b'3').contains(a) && (b'1'..=b'3').contains(b) {
            return canonical_basis((a - b'0') as usize, (b - b'0') as usize).map_err(|e| e.to_string());
        }
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("--sigma: expected `id`, an index pair like `12`, or six numbers, got `{s}`"))?;
    let arr: [f64; 6] = v
        .try_into()
        .map_err(|_| format!("--sigma: expected six Mandel components, got `{s}`"))?;
    Ok(SymMat::from(arr))
}

fn load_config(a: &RunArgs) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(&a.config)?;
    cfg.apply(&Overrides {
        seed: a.seed,
        nx: a.nx,
        l: a.l,
        cg_tol: a.cg_tol,
        schemes: a.schemes.clone().map(|l| l.0),
        out: a.out.clone(),
        csv: a.csv.clone(),
    });
    cfg.validate()?;
    Ok(cfg)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<std::fs::File, Failure> {
    std::fs::File::create(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn fmt_iso(m: &IsoModuli) -> String {
    format!("κ = {:.6}, μ = {:.6}", m.kappa, m.mu)
}

fn homogenize(a: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(a)?;
    let report = pipeline::homogenize(&cfg)?;
    let text = to_json(&report);
    if let Some(path) = &cfg.out {
        write_text(path, &text)?;
    }
    if let (Some(path), Some(tr)) = (&cfg.csv, &report.fixed_point_trace) {
        pipeline::write_trace_csv(create(path)?, tr).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if a.json || cfg.out.is_none() {
        println!("{text}");
        return Ok(());
    }
    let s = &report.schemes;
    println!("config sha256 {}", report.config_sha256);
    if let Some(x) = &s.a1 {
        println!("A1  {}", fmt_iso(&x.value));
    }
    for (name, t) in [("A2", s.a2.as_ref().map(|x| &x.value.tensor)), ("A3", s.a3.as_ref().map(|x| &x.value))] {
        if let Some(t) = t {
            let (k, m) = t.isotropic_projection();
            println!("{name}  isotropic part κ = {k:.6}, μ = {m:.6}");
        }
    }
    if let Some(x) = &s.a4 {
        let its = report.fixed_point_trace.as_ref().map_or(0, |t| t.outer_iterations());
        println!("A4  {} ({its} outer iterations)", fmt_iso(&x.value));
    }
    if let Some(x) = &s.periodic_reference {
        let (k, m) = x.value.isotropic_projection();
        println!("periodic reference isotropic part κ = {k:.6}, μ = {m:.6}");
    }
    for r in report.eshelby_validation.iter().flatten() {
        println!("eshelby {:<9} fem {:.6}  exact {:.6}  rel. error {:.2e}", r.load, r.fem, r.analytic, r.relative_error);
    }
    for r in report.concavity.iter().flatten() {
        println!("concavity {:<9} max violation {:.2e} (tolerance {:.1e})", r.load, r.max_violation, r.tolerance);
    }
    if let Some(path) = &cfg.out {
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn sweep(a: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(a)?;
    let report = pipeline::sweep(&cfg)?;
    let text = to_json(&report);
    if let Some(path) = &cfg.out {
        write_text(path, &text)?;
    }
    if let Some(path) = &cfg.csv {
        pipeline::write_sweep_csv(create(path)?, &report.rows).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if a.json || cfg.out.is_none() {
        println!("{text}");
    } else {
        for r in &report.rows {
            println!("N = {:<3} κ = {:.6}  μ = {:.6}  ({} outer iterations)", r.factor, r.kappa, r.mu, r.outer_iterations);
        }
    }
    Ok(())
}

fn gen(a: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(a)?;
    let path = cfg
        .out
        .clone()
        .ok_or_else(|| Failure::Config("gen needs --out (or `out` in the config)".into()))?;
    let field = microstructure::generate(&cfg.generator)?;
    field.write(&path)?;
    write_sidecar(
        &path,
        &Provenance {
            generator: format!("homog {}", env!("CARGO_PKG_VERSION")),
            seed: Some(cfg.generator.seed),
            spec: serde_json::to_value(&cfg.generator).expect("specs serialize"),
        },
    )?;
    let summary = serde_json::json!({
        "path": path,
        "n": field.n(),
        "occupied_voxels": field.occupied(),
        "config_sha256": cfg.sha256(),
    });
    if a.json {
        println!("{}", to_json(&summary));
    } else {
        println!("wrote {} (n = {}, {} occupied voxels)", path.display(), field.n(), field.occupied());
    }
    Ok(())
}

#[derive(Serialize)]
struct EshelbyReport {
    inclusion: IsoModuli,
    matrix: IsoModuli,
    sigma: SymMat,
    interior_matrix: [[f64; 3]; 3],
    energy: f64,
    energy_shear_closed_form: Option<f64>,
    energy_identity_closed_form: Option<f64>,
    traction_jump_residual: f64,
}

fn eshelby_cmd(a: &EshelbyArgs) -> Result<(), Failure> {
    let moduli = |(x, m): (f64, f64), what: &str| {
        let r = if a.lame { IsoModuli::from_lame(x, m) } else { IsoModuli::new(x, m) };
        r.map_err(|e| Failure::Config(format!("--{what}: {e}")))
    };
    let inclusion = moduli(a.inclusion, "inclusion")?;
    let matrix = moduli(a.matrix, "matrix")?;
    let sigma = parse_sigma(&a.sigma).map_err(Failure::Config)?;
    let cfg = EshelbyConfig::new(inclusion, matrix, sigma);
    let sol = eshelby::solve(&cfg);
    let c = sol.interior_matrix.to_matrix();

    let m = sigma.to_matrix();
    let off = [(1, 2), (1, 3), (2, 3)]
        .into_iter()
        .find(|&(i, j)| {
            let e = canonical_basis(i, j).expect("valid pair").to_matrix();
            (e - m).norm() < 1e-14 || (e.transpose() - m).norm() < 1e-14
        });
    let shear = off.map(|_| eshelby::energy_shear(&inclusion, &matrix));
    let identity = ((m - nalgebra::Matrix3::identity()).norm() < 1e-14)
        .then(|| 3.0 * eshelby::energy_identity_third_kappa(&inclusion, &matrix));

    let mut residual = 0.0f64;
    let n = 20;
    for p in 0..n {
        for q in 0..2 * n {
            let th = std::f64::consts::PI * (p as f64 + 0.5) / n as f64;
            let ph = std::f64::consts::PI * q as f64 / n as f64;
            let x = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let jump = eshelby::interior_traction(&cfg, &sol, &x)? - eshelby::exterior_traction_spectral(&cfg, &sol, &x)?;
            let target = eshelby::traction_jump_target(&cfg, &x)?;
            residual = residual.max((jump - target).norm() / target.norm().max(1.0));
        }
    }

    let report = EshelbyReport {
        inclusion,
        matrix,
        sigma,
        interior_matrix: std::array::from_fn(|i| std::array::from_fn(|j| c[(i, j)])),
        energy: eshelby::energy(&cfg),
        energy_shear_closed_form: shear,
        energy_identity_closed_form: identity,
        traction_jump_residual: residual,
    };
    if a.json {
        println!("{}", to_json(&report));
        return Ok(());
    }
    println!("inclusion {}", fmt_iso(&inclusion));
    println!("matrix    {}", fmt_iso(&matrix));
    println!("interior matrix C:");
    for row in &report.interior_matrix {
        println!("  {:>14.10} {:>14.10} {:>14.10}", row[0], row[1], row[2]);
    }
    println!("energy (general)         {:.12}", report.energy);
    if let Some(e) = shear {
        println!("energy (shear formula)   {e:.12}");
    }
    if let Some(e) = identity {
        println!("energy (bulk formula)    {e:.12}");
    }
    println!("traction jump residual   {residual:.2e}");
    Ok(())
}

fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let suite = Suite::new(SuiteOptions {
        quick: a.quick,
        ..SuiteOptions::default()
    });
    let results = suite.run(|r| {
        if !a.json {
            println!("{}", r.line());
            let _ = std::io::stdout().flush();
        }
    });
    let failed = results.iter().filter(|r| r.status == Status::Fail).count();
    if a.json {
        println!("{}", to_json(&results));
    } else {
        let passed = results.iter().filter(|r| r.status == Status::Pass).count();
        println!("{passed} passed, {failed} failed, {} skipped", results.len() - passed - failed);
    }
    if failed > 0 {
        return Err(Failure::Criteria(failed));
    }
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("HOMOG_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("HOMOG_THREADS must be a positive integer, got `{v}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("HOMOG_THREADS: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Homogenize(a) => homogenize(a),
        Command::Eshelby(a) => eshelby_cmd(a),
        Command::Validate(a) => validate(a),
        Command::Sweep(a) => sweep(a),
        Command::Gen(a) => gen(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(f),
    }
}
