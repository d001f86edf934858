//! Command-line front end.
//!
//! Every command reads one forest per input file (`-` for standard input).
//! Results go to standard output in input order and diagnostics to standard
//! error. Exit codes: 0 success, 1 bad input or usage, 2 locality or proper
//! decoration violation, 3 failed numeric or consistency check.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::forest::{parse_forest, DecoratedForest, ParseMode};
use crate::oracle::{closed_form, quad_tree, NumericAssignment, QuadConfig};
use crate::pairing::InnerProduct;
use crate::projector::piplus_expand;
use crate::renorm::{expand_r1, is_similar, regularize, renormalize, renormalize_checked, RenormalizedValue};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_LOCALITY: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "branched-renorm",
    version,
    about = "Exact renormalization of branched integrals on decorated rooted forests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Truncation degree of the series expansion (default: vertices + 2).
    #[arg(long, global = true)]
    pub trunc: Option<u32>,

    /// What to print for renormalized values.
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,

    /// Largest relative error accepted by quad-check.
    #[arg(long = "quad-tol", global = true, default_value_t = 1e-6)]
    pub quad_tol: f64,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Read vector decorations with a `Q=` Gram header.
    #[arg(long, global = true)]
    pub explicit: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the renormalized value of each forest.
    Renorm { files: Vec<PathBuf> },
    /// Print the exponent and csc factors of the regularized integral.
    Regularize { files: Vec<PathBuf> },
    /// Print the Taylor series of the holomorphic projection.
    Germ { files: Vec<PathBuf> },
    /// Decide similarity of two forests and compare their values.
    CheckSimilar { first: PathBuf, second: PathBuf },
    /// Compare nested quadrature against the closed form.
    QuadCheck {
        files: Vec<PathBuf>,
        /// Random admissible assignments per forest.
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Exact,
    Float,
    Both,
}

/// Failure of one input, with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. }
            | Error::NonPositiveWeight { .. }
            | Error::InvalidInnerProduct(_)
            | Error::IndexOutOfRange(_)
            | Error::TruncationTooLow { .. } => EXIT_INPUT,
            Error::NotProperlyDecorated(_) | Error::LocalityViolation(_) | Error::SingularGram => EXIT_LOCALITY,
            _ => EXIT_NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

fn numeric_failure(message: String) -> Failure {
    Failure { code: EXIT_NUMERIC, message }
}

fn read_input(path: &PathBuf) -> Result<String, Failure> {
    let mut text = String::new();
    let result = if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    result.map_err(|e| Failure { code: EXIT_INPUT, message: format!("cannot read {}: {e}", path.display()) })?;
    Ok(text)
}

fn load(path: &PathBuf, explicit: bool) -> Result<(DecoratedForest, InnerProduct), Failure> {
    let mode = if explicit { ParseMode::Explicit } else { ParseMode::Auto };
    Ok(parse_forest(&read_input(path)?, mode)?)
}

fn value_lines(value: &RenormalizedValue, format: Format) -> String {
    match format {
        Format::Exact => format!("{}\n", value.exact),
        Format::Float => format!("{}\n", value.decimal),
        Format::Both => format!("{}\n{}\n", value.exact, value.decimal),
    }
}

fn renorm_value(forest: &DecoratedForest, q: &InnerProduct, trunc: Option<u32>) -> Result<RenormalizedValue, Failure> {
    Ok(match trunc {
        Some(n) => renormalize_checked(forest, q, n)?,
        None => renormalize(forest, q)?,
    })
}

fn cmd_renorm(path: &PathBuf, cli: &Cli) -> Result<String, Failure> {
    let (forest, q) = load(path, cli.explicit)?;
    Ok(value_lines(&renorm_value(&forest, &q, cli.trunc)?, cli.format))
}

fn cmd_regularize(path: &PathBuf, cli: &Cli) -> Result<String, Failure> {
    let (forest, q) = load(path, cli.explicit)?;
    let r = regularize(&forest, &q)?;
    let factors: Vec<String> = r.factors().iter().map(ToString::to_string).collect();
    let exponent = if r.exponent().is_zero() { "0".to_string() } else { r.exponent().to_string() };
    Ok(format!("exponent: {exponent}\nfactors: [{}]\n", factors.join(", ")))
}

fn cmd_germ(path: &PathBuf, cli: &Cli) -> Result<String, Failure> {
    let (forest, q) = load(path, cli.explicit)?;
    let n = cli.trunc.unwrap_or(forest.degree() as u32 + 2);
    let (frac, ctx) = expand_r1(&forest, &q, n)?;
    Ok(format!("{}\n", piplus_expand(&frac, &ctx)?))
}

fn cmd_quad(path: &PathBuf, cli: &Cli, samples: usize) -> Result<String, Failure> {
    let (forest, q) = load(path, cli.explicit)?;
    let cfg = QuadConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let assign = NumericAssignment::random_admissible(&forest, 0.1, 0.9, &mut rng)?;
        let x = if k % 2 == 0 { 1.0 } else { 2.0 };
        let quad = quad_tree(&forest, &assign, x, &cfg)?;
        let exact = closed_form(&forest, &q, &assign, x)?;
        worst = worst.max((quad - exact).abs() / exact.abs());
    }
    let mut out = format!("max relative error: {worst:.3e}\n");
    if worst <= cli.quad_tol {
        out.push_str("PASS\n");
        Ok(out)
    } else {
        Err(numeric_failure(format!("{out}quadrature deviates from the closed form beyond {:e}", cli.quad_tol)))
    }
}

fn cmd_similar(first: &PathBuf, second: &PathBuf, cli: &Cli) -> Result<String, Failure> {
    let (f1, q1) = load(first, cli.explicit)?;
    let (f2, q2) = load(second, cli.explicit)?;
    if !is_similar(&f1, &q1, &f2, &q2) {
        return Ok("NOT-SIMILAR\n".into());
    }
    let v1 = renorm_value(&f1, &q1, cli.trunc)?;
    let v2 = renorm_value(&f2, &q2, cli.trunc)?;
    if v1 != v2 {
        return Err(numeric_failure(format!("SIMILAR but renormalized values differ: {} vs {}", v1.exact, v2.exact)));
    }
    let mut out = String::from("SIMILAR\n");
    let _ = write!(out, "{}", value_lines(&v1, cli.format));
    Ok(out)
}

/// Runs the per-file command on every input in parallel and reports in order.
fn batch<F>(files: &[PathBuf], out: &mut dyn Write, err: &mut dyn Write, job: F) -> io::Result<i32>
where
    F: Fn(&PathBuf) -> Result<String, Failure> + Sync,
{
    if files.is_empty() {
        writeln!(err, "error: no input files")?;
        return Ok(EXIT_INPUT);
    }
    let results: Vec<Result<String, Failure>> = std::thread::scope(|s| {
        let handles: Vec<_> = files.iter().map(|f| s.spawn(|| job(f))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut code = EXIT_OK;
    for (path, result) in files.iter().zip(results) {
        if files.len() > 1 {
            writeln!(out, "# {}", path.display())?;
        }
        match result {
            Ok(text) => write!(out, "{text}")?,
            Err(f) => {
                writeln!(err, "error: {}: {}", path.display(), f.message)?;
                code = code.max(f.code);
            }
        }
    }
    Ok(code)
}

/// Parses `args` (program name first) and executes the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Renorm { files } => batch(files, out, err, |p| cmd_renorm(p, &cli)),
        Command::Regularize { files } => batch(files, out, err, |p| cmd_regularize(p, &cli)),
        Command::Germ { files } => batch(files, out, err, |p| cmd_germ(p, &cli)),
        Command::QuadCheck { files, samples } => batch(files, out, err, |p| cmd_quad(p, &cli, *samples)),
        Command::CheckSimilar { first, second } => match cmd_similar(first, second, &cli) {
            Ok(text) => write!(out, "{text}").map(|_| EXIT_OK),
            Err(f) => writeln!(err, "error: {}", f.message).map(|_| f.code),
        },
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INPUT
    })
}
