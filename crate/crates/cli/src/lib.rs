//! Command-line front end: instance generation, both pipelines, verification and norms.
//!
//! Exit codes: 0 when every asserted residual is within tolerance, 2 on a tolerance
//! failure, 3 on structural errors (bad input, singular points, rank changes, usage).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use polydisc::diag1::{check_conjugator, diagonalize_real_symmetric, DiagConfig, VerificationReport};
use polydisc::factor2::{
    factorize_symmetric, holomorphy_diagnostic, reconstruction_residual, star_relation_residual,
    FactorizationConfig, FactorizationReport,
};
use polydisc::funcrep::{
    build_grid, dn_norm, idempotency_residual, DomainDescriptor, GridLayout, GridMatrixFunction,
    MatrixFunctionExpr,
};
use polydisc::instances::{gen_idempotent_instance, gen_symmetric_unitary_instance};
use polydisc::kato::TransportConfig;
use polydisc::numc::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 2;
pub const EXIT_STRUCTURAL: i32 = 3;

/// Generated instances must meet their algebraic identity to this level.
pub const GENERATOR_CHECK: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pipeline(#[from] polydisc::Error),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "polydisc", version, about = "Idempotent diagonalization and symmetric factorization on the polydisc")]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
}

#[derive(Debug, Subcommand)]
enum CommandArgs {
    /// Random real-symmetric idempotent instance `T·diag(I, 0)·T⁻¹`.
    GenIdempotent(Options),
    /// Random star-unitary instance `V·(V*)⁻¹` with its factor.
    GenUnitary(Options),
    /// Diagonalize an idempotent instance over the closed polydisc.
    Diagonalize(Options),
    /// Symmetric factorization of a star-unitary instance.
    Factorize(Options),
    /// Recompute the residuals of a stored result.
    Verify(Options),
    /// Grid surrogate of the order-N derivative norm of a polynomial.
    Norm(Options),
}

#[derive(Debug, Clone, Args)]
struct Options {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value_t = 2)]
    degree: u32,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 9)]
    radial: usize,
    #[arg(long, default_value_t = 16)]
    angular: usize,
    /// Interval sample count; defaults to the disc's real diameter (2·radial − 1).
    #[arg(long)]
    interval: Option<usize>,
    #[arg(long, default_value_t = 200)]
    ode_steps: usize,
    #[arg(long, default_value_t = 200)]
    transport_steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol_resid: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol_exact: f64,
    /// Derivative order for `norm`.
    #[arg(long, default_value_t = 2)]
    order: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenIdempotent,
    GenUnitary,
    Diagonalize,
    Factorize,
    Verify,
    Norm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub n: usize,
    pub m: usize,
    pub rank: usize,
    pub degree: u32,
    pub epsilon: f64,
    pub seed: u64,
    pub layout: GridLayout,
    pub ode_steps: usize,
    pub transport_steps: usize,
    pub tol_resid: f64,
    pub tol_exact: f64,
    pub order: u32,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: None,
            output: None,
            n: 1,
            m: 3,
            rank: 1,
            degree: 2,
            epsilon: 0.3,
            seed: 0,
            layout: GridLayout::nested(9, 16),
            ode_steps: 200,
            transport_steps: 200,
            tol_resid: 1e-6,
            tol_exact: 1e-10,
            order: 2,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            exact: self.tol_exact,
            resid: self.tol_resid,
            ..Tolerances::default()
        }
    }

    fn diag_config(&self, settings: &GridSettings) -> DiagConfig {
        DiagConfig {
            layout: settings.layout(),
            transport: TransportConfig {
                steps: settings.steps,
                tol: self.tolerances(),
                ..TransportConfig::default()
            },
            ..DiagConfig::default()
        }
    }

    fn factor_config(&self, settings: &GridSettings) -> FactorizationConfig {
        FactorizationConfig {
            ode_steps: settings.steps,
            tol: self.tolerances(),
            ..FactorizationConfig::default()
        }
    }
}

/// Parses a full argument vector, program name included.
pub fn parse_args<I, T>(args: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    let (command, o) = match cli.command {
        CommandArgs::GenIdempotent(o) => (Command::GenIdempotent, o),
        CommandArgs::GenUnitary(o) => (Command::GenUnitary, o),
        CommandArgs::Diagonalize(o) => (Command::Diagonalize, o),
        CommandArgs::Factorize(o) => (Command::Factorize, o),
        CommandArgs::Verify(o) => (Command::Verify, o),
        CommandArgs::Norm(o) => (Command::Norm, o),
    };
    Ok(RunConfig {
        command,
        input: o.input,
        output: o.output,
        n: o.n,
        m: o.m,
        rank: o.rank,
        degree: o.degree,
        epsilon: o.epsilon,
        seed: o.seed,
        layout: GridLayout {
            radial: o.radial,
            angular: o.angular,
            interval: o.interval.unwrap_or(2 * o.radial.max(1) - 1),
        },
        ode_steps: o.ode_steps,
        transport_steps: o.transport_steps,
        tol_resid: o.tol_resid,
        tol_exact: o.tol_exact,
        order: o.order,
    })
}

/// Grid and step settings stored with a result, so `verify` can rebuild the context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct GridSettings {
    radial: usize,
    angular: usize,
    interval: usize,
    steps: usize,
}

impl GridSettings {
    fn layout(&self) -> GridLayout {
        GridLayout {
            radial: self.radial,
            angular: self.angular,
            interval: self.interval,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Document {
    IdempotentInstance {
        n: usize,
        m: usize,
        rank: usize,
        degree: u32,
        epsilon: f64,
        seed: u64,
        p: MatrixFunctionExpr,
    },
    UnitaryInstance {
        n: usize,
        m: usize,
        degree: u32,
        epsilon: f64,
        seed: u64,
        u: MatrixFunctionExpr,
        v_true: MatrixFunctionExpr,
    },
    Diagonalization {
        n: usize,
        rank: usize,
        settings: GridSettings,
        p: MatrixFunctionExpr,
        conjugator: GridMatrixFunction,
        report: VerificationReport,
    },
    Factorization {
        n: usize,
        settings: GridSettings,
        u: MatrixFunctionExpr,
        v: GridMatrixFunction,
        report: FactorizationReport,
    },
}

const DOCUMENT_KINDS: [&str; 4] = [
    "idempotent_instance",
    "unitary_instance",
    "diagonalization",
    "factorization",
];

enum Input {
    Document(Box<Document>),
    Expr(MatrixFunctionExpr),
}

fn read_input(cfg: &RunConfig) -> Result<Input, CliError> {
    let path = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs --input".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let value: Value = serde_json::from_str(&text)?;
    let kind = value.get("kind").and_then(Value::as_str).unwrap_or_default();
    if DOCUMENT_KINDS.contains(&kind) {
        Ok(Input::Document(Box::new(serde_json::from_value(value)?)))
    } else {
        let expr: MatrixFunctionExpr = serde_json::from_value(value)?;
        expr.shape()?;
        Ok(Input::Expr(expr))
    }
}

fn expr_vars(expr: &MatrixFunctionExpr, fallback: usize) -> Result<usize, CliError> {
    Ok(expr.nvars()?.unwrap_or(fallback))
}

/// What a command produced: the report text and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Produced {
    pub json: String,
    pub passed: bool,
    pub summary: String,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

/// Runs a command without touching the output path.
pub fn execute(cfg: &RunConfig) -> Result<Produced, CliError> {
    match cfg.command {
        Command::GenIdempotent => gen_idempotent(cfg),
        Command::GenUnitary => gen_unitary(cfg),
        Command::Diagonalize => diagonalize(cfg),
        Command::Factorize => factorize(cfg),
        Command::Verify => verify(cfg),
        Command::Norm => norm(cfg),
    }
}

fn gen_idempotent(cfg: &RunConfig) -> Result<Produced, CliError> {
    let p = gen_idempotent_instance(cfg.n, cfg.m, cfg.rank, cfg.degree, cfg.epsilon, cfg.seed)?;
    let grid = build_grid(DomainDescriptor::polydisc(cfg.n), cfg.layout)?;
    let defect = idempotency_residual(&p, &grid)?;
    let doc = Document::IdempotentInstance {
        n: cfg.n,
        m: cfg.m,
        rank: cfg.rank,
        degree: cfg.degree,
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        p,
    };
    Ok(Produced {
        json: to_json(&doc)?,
        passed: defect < GENERATOR_CHECK,
        summary: format!("idempotent instance, idempotency residual {defect:e}"),
    })
}

fn gen_unitary(cfg: &RunConfig) -> Result<Produced, CliError> {
    let (u, v_true) = gen_symmetric_unitary_instance(cfg.n, cfg.m, cfg.degree, cfg.epsilon, cfg.seed)?;
    let grid = build_grid(DomainDescriptor::polydisc(cfg.n), cfg.layout)?;
    let star = star_relation_residual(&u, &grid)?;
    let doc = Document::UnitaryInstance {
        n: cfg.n,
        m: cfg.m,
        degree: cfg.degree,
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        u,
        v_true,
    };
    Ok(Produced {
        json: to_json(&doc)?,
        passed: star < GENERATOR_CHECK,
        summary: format!("unitary instance, star relation residual {star:e}"),
    })
}

fn diag_passed(cfg: &RunConfig, report: &VerificationReport) -> bool {
    report.within(cfg.tol_resid) && report.symmetry_residual <= cfg.tol_exact
}

fn diagonalize(cfg: &RunConfig) -> Result<Produced, CliError> {
    let (p, n) = match read_input(cfg)? {
        Input::Document(doc) => match *doc {
            Document::IdempotentInstance { n, p, .. } => (p, n),
            _ => return Err(CliError::Usage("diagonalize needs an idempotent instance".into())),
        },
        Input::Expr(e) => {
            let n = expr_vars(&e, cfg.n)?;
            (e, n)
        }
    };
    let settings = GridSettings {
        radial: cfg.layout.radial,
        angular: cfg.layout.angular,
        interval: cfg.layout.interval,
        steps: cfg.transport_steps,
    };
    let (conjugator, rank, report) = diagonalize_real_symmetric(&p, n, &cfg.diag_config(&settings))?;
    let passed = diag_passed(cfg, &report);
    let summary = format!(
        "rank {rank}, final residual {:e}, symmetry residual {:e}",
        report.final_residual, report.symmetry_residual
    );
    let doc = Document::Diagonalization {
        n,
        rank,
        settings,
        p,
        conjugator,
        report,
    };
    Ok(Produced {
        json: to_json(&doc)?,
        passed,
        summary,
    })
}

fn factorize(cfg: &RunConfig) -> Result<Produced, CliError> {
    let (u, n) = match read_input(cfg)? {
        Input::Document(doc) => match *doc {
            Document::UnitaryInstance { n, u, .. } => (u, n),
            _ => return Err(CliError::Usage("factorize needs a unitary instance".into())),
        },
        Input::Expr(e) => {
            let n = expr_vars(&e, cfg.n)?;
            (e, n)
        }
    };
    let settings = GridSettings {
        radial: cfg.layout.radial,
        angular: cfg.layout.angular,
        interval: cfg.layout.interval,
        steps: cfg.ode_steps,
    };
    let grid = build_grid(DomainDescriptor::polydisc(n), settings.layout())?;
    let (v, report) = factorize_symmetric(&u, &grid, &cfg.factor_config(&settings))?;
    let passed = report.reconstruction_residual <= cfg.tol_resid;
    let summary = format!(
        "reconstruction residual {:e}, min singular value {:e}",
        report.reconstruction_residual, report.min_singular_value
    );
    let doc = Document::Factorization {
        n,
        settings,
        u,
        v,
        report,
    };
    Ok(Produced {
        json: to_json(&doc)?,
        passed,
        summary,
    })
}

fn verify(cfg: &RunConfig) -> Result<Produced, CliError> {
    let Input::Document(doc) = read_input(cfg)? else {
        return Err(CliError::Usage("verify needs a stored result".into()));
    };
    match *doc {
        Document::Diagonalization {
            p,
            conjugator,
            rank,
            ..
        } => {
            let check = check_conjugator(&p, &conjugator, rank)?;
            let passed =
                check.final_residual <= cfg.tol_resid && check.symmetry_residual <= cfg.tol_exact;
            Ok(Produced {
                json: to_json(&check)?,
                passed,
                summary: format!("final residual {:e}", check.final_residual),
            })
        }
        Document::Factorization { u, v, .. } => {
            let report = FactorizationReport {
                reconstruction_residual: reconstruction_residual(&u, &v)?,
                star_residual: star_relation_residual(&u, &v.grid)?,
                min_singular_value: v.min_singular_value(),
                holomorphy_diag: holomorphy_diagnostic(&v),
            };
            Ok(Produced {
                json: to_json(&report)?,
                passed: report.reconstruction_residual <= cfg.tol_resid,
                summary: format!("reconstruction residual {:e}", report.reconstruction_residual),
            })
        }
        _ => Err(CliError::Usage("verify needs a diagonalization or factorization result".into())),
    }
}

#[derive(Serialize)]
struct NormReport {
    order: u32,
    dn_norm: f64,
}

fn norm(cfg: &RunConfig) -> Result<Produced, CliError> {
    let poly = match read_input(cfg)? {
        Input::Expr(MatrixFunctionExpr::Poly(p)) => p,
        _ => return Err(CliError::Usage("norm needs a polynomial expression".into())),
    };
    let grid = build_grid(DomainDescriptor::polydisc(poly.nvars()), cfg.layout)?;
    let value = dn_norm(&poly, cfg.order, &grid)?;
    Ok(Produced {
        json: to_json(&NormReport {
            order: cfg.order,
            dn_norm: value,
        })?,
        passed: true,
        summary: format!("order {} norm {value}", cfg.order),
    })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file()
            .set_permissions(std::fs::Permissions::from_mode(0o644))
            .map_err(io)?;
    }
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Outcome of [`run_command`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub message: String,
}

/// Runs a command and writes its report, folding every failure into an exit code.
pub fn run_command(cfg: &RunConfig) -> RunOutcome {
    let produced = match execute(cfg) {
        Ok(p) => p,
        Err(e) => {
            return RunOutcome {
                exit_code: EXIT_STRUCTURAL,
                message: format!("error: {e}"),
            }
        }
    };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = write_atomic(path, produced.json.as_bytes()) {
                return RunOutcome {
                    exit_code: EXIT_STRUCTURAL,
                    message: format!("error: {e}"),
                };
            }
        }
        None => print!("{}", produced.json),
    }
    if produced.passed {
        RunOutcome {
            exit_code: EXIT_OK,
            message: produced.summary,
        }
    } else {
        RunOutcome {
            exit_code: EXIT_TOLERANCE,
            message: format!("tolerance failure: {}", produced.summary),
        }
    }
}

/// Entry point shared by the binary and tests.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_args(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_STRUCTURAL } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = run_command(&cfg);
    eprintln!("{}", outcome.message);
    outcome.exit_code
}
