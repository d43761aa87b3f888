//! Command-line front end.
//!
//! Exit codes: 0 pass/ok, 2 criterion fail, 3 window violation, 64 usage,
//! 65 data error. Reports go to `--out` (written to a temporary file in the
//! same directory, then renamed) or to stdout.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::criteria::{
    hypercyclicity_report, lift_left, lift_right, supercyclicity_report, CriterionData,
};
use crate::error::Error;
use crate::ideals::{audit_ideal_axioms, IdealDesc};
use crate::operators::{matrix_from_json, scaled_backward_shift, MatOp};
use crate::probes::density_report;
use crate::spaces::{parse_exponent, Functional, SpaceDesc, SpaceVec};
use crate::tensor::{check_theorem3, max_generator_norm, tsc_report, TscData};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_WINDOW: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

/// Environment variable consulted when no seed is given.
pub const SEED_ENV: &str = "LINDYN_SEED";

#[derive(Debug, Parser)]
#[command(name = "lindyn", version, about = "Supercyclicity laboratory for truncated operator ideals")]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Audit the ideal axioms on seeded random samples.
    AuditIdeal(AuditArgs),
    /// Run a criterion certifier.
    Certify(CertifyArgs),
    /// Scaled-orbit density diagnostic.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Args)]
struct SpaceArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Exponent of the sequence space: integer, decimal, a/b or inf.
    #[arg(long, value_parser = exponent)]
    p: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
struct IdealArgs {
    /// Schatten exponent of the ideal.
    #[arg(long, value_parser = exponent)]
    schatten: Option<f64>,
    /// Operator-norm ideal.
    #[arg(long)]
    opnorm: bool,
}

#[derive(Debug, Clone, Args)]
#[group(multiple = false)]
struct OpArgs {
    /// Scaled backward shift `W·B`; `W` is `re` or `re,im`.
    #[arg(long, value_parser = complex)]
    shift: Option<Complex64>,
    /// JSON matrix of `[re, im]` rows.
    #[arg(long, value_name = "FILE")]
    matrix: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    ideal: IdealArgs,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Sc,
    Hc,
    Tsc,
    LiftLeft,
    LiftRight,
    Theorem3,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(value_enum)]
    which: Which,
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    op: OpArgs,
    #[command(flatten)]
    ideal: IdealArgs,
    #[arg(long, default_value_t = 12)]
    kmax: usize,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    tol: f64,
    /// Bound for the tensor criterion; defaults to the largest generator norm.
    #[arg(long, value_parser = positive)]
    bound: Option<f64>,
    /// Left factor for theorem3: shift:W, identity or matrix:FILE.
    #[arg(long)]
    left: Option<OpSpec>,
    /// Right factor for theorem3: shift:W, identity or matrix:FILE.
    #[arg(long)]
    right: Option<OpSpec>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeArgs {
    #[command(flatten)]
    space: SpaceArgs,
    #[command(flatten)]
    op: OpArgs,
    #[arg(long, default_value_t = 64)]
    net: usize,
    #[arg(long, default_value_t = 0.1, value_parser = positive, allow_hyphen_values = true)]
    eps: f64,
    /// Orbit horizon.
    #[arg(long = "N", default_value_t = 8)]
    horizon: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Per-target table.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
enum OpSpec {
    Shift(Complex64),
    Identity,
    Matrix(PathBuf),
}

impl FromStr for OpSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "identity" {
            Ok(OpSpec::Identity)
        } else if let Some(w) = s.strip_prefix("shift:") {
            complex(w).map(OpSpec::Shift)
        } else if let Some(f) = s.strip_prefix("matrix:") {
            Ok(OpSpec::Matrix(f.into()))
        } else {
            Err(format!("expected shift:W, identity or matrix:FILE, got {s:?}"))
        }
    }
}

fn exponent(s: &str) -> Result<f64, String> {
    parse_exponent(s).map_err(|e| e.to_string())
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

fn complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    let z = match parts.as_slice() {
        [re] => Complex64::new(num(re)?, 0.0),
        [re, im] => Complex64::new(num(re)?, num(im)?),
        _ => return Err(format!("expected re or re,im, got {s:?}")),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(format!("not finite: {s}"));
    }
    Ok(z)
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::EmptyIndices | Error::NonIncreasingIndices(_) => EXIT_USAGE,
            Error::WindowViolation { .. } => EXIT_WINDOW,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the CLI on `args` (including the program name) with the process
/// environment, printing reports and diagnostics. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_env(args, std::env::var(SEED_ENV).ok())
}

/// As [`run`], with the seed fallback passed explicitly.
pub fn run_with_env<I, T>(args: I, env_seed: Option<String>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match dispatch(args, env_seed) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("lindyn: {}", f.message);
            f.code
        }
    }
}

fn dispatch(args: Vec<OsString>, env_seed: Option<String>) -> CliResult<i32> {
    let args = merge_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return Ok(code);
        }
    };
    let env_seed = env_seed
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Failure::usage(format!("{SEED_ENV} is not an unsigned integer: {s:?}")))
        })
        .transpose()?;
    match cli.command {
        Command::AuditIdeal(a) => audit(a, env_seed),
        Command::Certify(a) => certify(a),
        Command::Probe(a) => probe(a, env_seed),
    }
}

/// Appends `--key value` for each config entry not already given as a flag.
fn merge_config(mut args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(
            args.get(pos + 1)
                .ok_or_else(|| Failure::usage("--config needs a file"))?,
        ),
    };
    let text =
        std::fs::read_to_string(&path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let entries = parse_config(&text)?;

    // a config may be shared between subcommands: keys another subcommand
    // takes are skipped, keys none of them takes are rejected
    let cmd = Cli::command();
    let longs = |c: &clap::Command| -> HashSet<String> {
        c.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect()
    };
    let known: HashSet<String> = cmd.get_subcommands().flat_map(longs).collect();
    let sub = args
        .iter()
        .filter_map(|a| a.to_str())
        .find_map(|a| cmd.find_subcommand(a));
    let accepted = sub.map(longs).unwrap_or_default();

    let given: HashSet<String> = args
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let exclusive: [&[&str]; 2] = [&["schatten", "opnorm"], &["shift", "matrix"]];
    for (key, value) in entries {
        if !known.contains(&key) {
            return Err(Failure::usage(format!("unknown config key {key:?}")));
        }
        if !accepted.contains(&key) {
            continue;
        }
        let blocked = given.contains(&key)
            || exclusive
                .iter()
                .any(|g| g.contains(&key.as_str()) && g.iter().any(|k| given.contains(*k)));
        if blocked {
            continue;
        }
        match value.as_str() {
            "true" => args.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{key}").into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}

fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim();
        if k.is_empty() || k == "config" {
            return Err(Failure::usage(format!("config line {}: bad key {k:?}", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn space(args: &SpaceArgs, default_dim: usize) -> CliResult<SpaceDesc> {
    Ok(SpaceDesc::new(args.p.unwrap_or(2.0), args.dim.unwrap_or(default_dim))?)
}

fn ideal(args: &IdealArgs, base: SpaceDesc) -> CliResult<IdealDesc> {
    if args.opnorm {
        Ok(IdealDesc::operator_norm(base))
    } else {
        Ok(IdealDesc::schatten(args.schatten.unwrap_or(2.0), base)?)
    }
}

fn read_matrix(path: &Path, space: SpaceDesc) -> CliResult<MatOp> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    let m = matrix_from_json(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    if m.nrows() != space.dim() {
        return Err(Failure::data(format!(
            "{} is {}x{}, expected dimension {}",
            path.display(),
            m.nrows(),
            m.ncols(),
            space.dim()
        )));
    }
    Ok(MatOp::new(space, m)?)
}

fn resolve_seed(flag: Option<u64>, env: Option<u64>) -> u64 {
    flag.or(env).unwrap_or(0)
}

/// Writes `body` to `out` atomically, or to stdout.
fn emit(body: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{body}").map_err(|e| Failure::data(e.to_string()))
        }
        Some(path) => write_atomic(path, |w| writeln!(w, "{body}")),
    }
}

fn write_atomic(path: &Path, fill: impl FnOnce(&mut tempfile::NamedTempFile) -> std::io::Result<()>) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| Failure::data(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    fill(&mut tmp).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value).map_err(|e| Failure::data(e.to_string()))
}

fn audit(a: AuditArgs, env_seed: Option<u64>) -> CliResult<i32> {
    if a.samples == 0 {
        return Err(Failure::usage("--samples must be >= 1"));
    }
    let base = space(&a.space, 8)?;
    let ideal = ideal(&a.ideal, base)?;
    let report = audit_ideal_axioms(&ideal, a.samples, resolve_seed(a.seed, env_seed))?;
    emit(&to_json(&report)?, a.out.as_deref())?;
    Ok(if report.holds(a.tol) { EXIT_OK } else { EXIT_FAIL })
}

/// Criterion data for `T` on `space`: the shift instance for `--shift`, the
/// pseudo-inverse instance for `--matrix`.
fn criterion_data(op: &OpArgs, space: SpaceDesc, kmax: usize) -> CliResult<CriterionData> {
    match (&op.shift, &op.matrix) {
        (Some(w), _) => Ok(CriterionData::shift_instance(space, *w, kmax)?),
        (None, Some(path)) => Ok(CriterionData::pseudo_inverse_instance(read_matrix(path, space)?, kmax)?),
        (None, None) => Err(Failure::usage("an operator is required: --shift W or --matrix FILE")),
    }
}

fn certify(a: CertifyArgs) -> CliResult<i32> {
    let sp = space(&a.space, 16)?;
    let report = match a.which {
        Which::Sc => supercyclicity_report(&criterion_data(&a.op, sp, a.kmax)?, a.tol)?,
        Which::Hc => hypercyclicity_report(&criterion_data(&a.op, sp, a.kmax)?, a.tol)?,
        Which::Tsc => {
            let data = match (&a.op.shift, &a.op.matrix) {
                (Some(w), _) => TscData::shift(sp, *w, a.kmax)?,
                _ => {
                    let base = criterion_data(&a.op, sp, a.kmax)?;
                    let ones = vec![Complex64::new(1.0, 0.0); base.indices().len()];
                    TscData::new(base.with_scalars(ones)?)?
                }
            };
            let bound = a.bound.unwrap_or_else(|| max_generator_norm(data.data()));
            tsc_report(&data, bound, a.tol)?
        }
        Which::LiftLeft => {
            let data = criterion_data(&a.op, sp, a.kmax)?;
            let ideal = ideal(&a.ideal, sp)?;
            let lift = lift_left(&data, &[Functional::basis(sp, 0)?], &ideal)?;
            supercyclicity_report(&lift, a.tol)?
        }
        Which::LiftRight => {
            // the operator describes T* on the dual space
            let dual = sp.dual();
            let adj = match (&a.op.shift, &a.op.matrix) {
                (Some(w), _) => CriterionData::shift_instance(dual, *w, a.kmax)?,
                (None, Some(path)) => {
                    CriterionData::pseudo_inverse_instance(read_matrix(path, sp)?.with_space(dual)?, a.kmax)?
                }
                (None, None) => return Err(Failure::usage("an operator is required: --shift W or --matrix FILE")),
            };
            let ideal = ideal(&a.ideal, sp)?;
            let vectors = (0..sp.dim().min(2))
                .map(|j| SpaceVec::basis(sp, j))
                .collect::<crate::Result<Vec<_>>>()?;
            let lift = lift_right(&adj, &vectors, &ideal)?;
            supercyclicity_report(&lift, a.tol)?
        }
        Which::Theorem3 => return theorem3(&a, sp),
    };
    emit(&to_json(&report)?, a.out.as_deref())?;
    Ok(report.verdict.exit_code())
}

fn theorem3(a: &CertifyArgs, sp: SpaceDesc) -> CliResult<i32> {
    let left = a
        .left
        .clone()
        .ok_or_else(|| Failure::usage("theorem3 needs --left and --right"))?;
    let right = a
        .right
        .clone()
        .ok_or_else(|| Failure::usage("theorem3 needs --left and --right"))?;

    // left factor: scaled supercyclicity data, λ_k = |W|^{-n_k/2} for shifts
    let sc = match &left {
        OpSpec::Shift(w) => {
            let base = CriterionData::shift_instance(sp, *w, a.kmax)?;
            let lambda = base
                .indices()
                .iter()
                .map(|&n| Complex64::new(w.norm().powf(-(n as f64) / 2.0), 0.0))
                .collect();
            base.with_scalars(lambda)?
        }
        OpSpec::Identity => unit_scaled(CriterionData::pseudo_inverse_instance(MatOp::identity(sp), a.kmax)?)?,
        OpSpec::Matrix(path) => unit_scaled(CriterionData::pseudo_inverse_instance(read_matrix(path, sp)?, a.kmax)?)?,
    };
    let generators = (0..sp.dim().min(2))
        .map(|j| SpaceVec::basis(sp, j))
        .collect::<crate::Result<Vec<_>>>()?;
    let tsc = match &right {
        OpSpec::Shift(w) => TscData::shift(sp, *w, a.kmax)?,
        OpSpec::Identity => TscData::identity(sp, a.kmax, generators)?,
        OpSpec::Matrix(path) => {
            let m = read_matrix(path, sp)?;
            let e = m.entries();
            let diagonal = (0..sp.dim()).all(|i| (0..sp.dim()).all(|j| i == j || e[(i, j)].norm() == 0.0));
            if !diagonal {
                return Err(Failure::data("theorem3 right matrix must be a diagonal isometry"));
            }
            let diag: Vec<Complex64> = (0..sp.dim()).map(|i| e[(i, i)]).collect();
            TscData::diagonal_isometry(sp, &diag, a.kmax, generators)?
        }
    };
    let bound = a.bound.unwrap_or_else(|| max_generator_norm(tsc.data()));
    let report = check_theorem3(&sc, &tsc, bound, a.tol)?;
    emit(&to_json(&report)?, a.out.as_deref())?;
    Ok(report.verdict.exit_code())
}

fn unit_scaled(data: CriterionData) -> CliResult<CriterionData> {
    let ones = vec![Complex64::new(1.0, 0.0); data.indices().len()];
    Ok(data.with_scalars(ones)?)
}

fn probe(a: ProbeArgs, env_seed: Option<u64>) -> CliResult<i32> {
    if a.net == 0 {
        return Err(Failure::usage("--net must be >= 1"));
    }
    let sp = space(&a.space, 4)?;
    let t = match (&a.op.shift, &a.op.matrix) {
        (Some(w), _) => scaled_backward_shift(sp, *w)?,
        (None, Some(path)) => read_matrix(path, sp)?,
        (None, None) => return Err(Failure::usage("an operator is required: --shift W or --matrix FILE")),
    };
    // full-support base vector xᵢ = 2^{-i}
    let x = SpaceVec::from_real(sp, &(0..sp.dim()).map(|i| 0.5f64.powi(i as i32)).collect::<Vec<_>>())?;
    let report = density_report(&t, &x, a.net, a.eps, a.horizon, resolve_seed(a.seed, env_seed))?;
    if let Some(path) = &a.csv {
        write_atomic(path, |w| report.write_csv(w).map_err(std::io::Error::other))?;
    }
    emit(&report.summary_json(), a.out.as_deref())?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_parsers() {
        assert_eq!(complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(complex("1.5, -0.5").unwrap(), Complex64::new(1.5, -0.5));
        assert!(complex("a").is_err());
        assert!(positive("-1").is_err());
        assert!(positive("0").is_err());
        assert_eq!("shift:2".parse::<OpSpec>().unwrap(), OpSpec::Shift(Complex64::new(2.0, 0.0)));
        assert_eq!("identity".parse::<OpSpec>().unwrap(), OpSpec::Identity);
        assert_eq!("matrix:m.json".parse::<OpSpec>().unwrap(), OpSpec::Matrix("m.json".into()));
        assert!("rotate".parse::<OpSpec>().is_err());
    }

    #[test]
    fn config_lines() {
        let c = parse_config("# comment\ndim = 8\n\nshift=2  # weight\n").unwrap();
        assert_eq!(c.get("dim").unwrap(), "8");
        assert_eq!(c.get("shift").unwrap(), "2");
        assert!(parse_config("dim 8").is_err());
        assert!(parse_config("config = x").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(Error::InvalidParameter("x".into())).code, EXIT_USAGE);
        assert_eq!(Failure::from(Error::DimensionMismatch { expected: 1, found: 2 }).code, EXIT_DATA);
        let w = Error::WindowViolation {
            generator: 0,
            support: 1,
            power: 9,
            dim: 8,
        };
        assert_eq!(Failure::from(w).code, EXIT_WINDOW);
    }
}
