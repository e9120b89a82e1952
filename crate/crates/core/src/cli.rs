//! Command-line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | validation report has a key beyond the z-score threshold |
//! | 2 | usage error (unknown flag, missing argument) |
//! | 3 | file does not follow its format |
//! | 4 | dimension mismatch |
//! | 5 | model or key syntax error |
//! | 6 | singular transfer map |
//! | 7 | I/O failure |
//! | 8 | estimate undefined (e.g. non-positive rate core) |
//! | 9 | unsupported model pattern |
//! | 10 | invalid argument value |

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::coeffring::{format_rational, parse_rational, rational_to_f64, RenderFormat, RenderStyle, Rational};
use crate::error::{Error, Result};
use crate::estimators::{estimate_rate, power_estimation, CombineStrategy, RateConfig, SpectralEstimate};
use crate::matfile::{read_matrix, read_observations};
use crate::mcoracle::{validate, EnsembleSpec};
use crate::model::{CompiledModel, DisplayMap, InputMoments, ModelExpr};
use crate::momentspace::{DetMatrixSet, MomentVector, PairMomentKey};
use crate::transfer::{emit_formula, FormulaStyle};

pub const EXIT_VALIDATION_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Format(_) => 3,
        Error::Dimension(_) => 4,
        Error::Parse { .. } => 5,
        Error::Singular { .. } => 6,
        Error::Io(_) => 7,
        Error::Undefined(_) => 8,
        Error::Unsupported(_) => 9,
        Error::InvalidInput(_) => 10,
    }
}

#[derive(Parser, Debug)]
#[command(name = "finite-rmt", version, about = "Exact finite-size moment maps for Gaussian matrix models")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also print results that are written to --out.
    #[arg(long, global = true)]
    stdout: bool,
    /// Render formulas as LaTeX.
    #[arg(long, global = true)]
    latex: bool,
    /// Print coefficients in n and N instead of c = n/N.
    #[arg(long = "raw-nN", global = true)]
    raw_nn: bool,
    /// Bind a deterministic matrix: NAME=FILE.
    #[arg(long = "bind", global = true, value_name = "NAME=FILE")]
    bind: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the transfer matrix or formulas of a model.
    Formula {
        /// Model expression, e.g. "sum(det(D, 2x2), gC(2, 2))".
        #[arg(long)]
        model: String,
        /// Maximum moment weight.
        #[arg(long = "P")]
        p: usize,
    },
    /// Map input moments to output moments.
    Convolve(MomentArgs),
    /// Map output moments back to unbiased input-moment estimates.
    Deconvolve(MomentArgs),
    /// Compare predicted moments with a seeded Monte Carlo run.
    Simulate {
        /// Model expression; every det leaf other than I and 0 needs --bind.
        #[arg(long)]
        model: String,
        /// Number of independent Monte Carlo trials.
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Maximum moment weight.
        #[arg(long = "P")]
        p: usize,
        /// Write the comparison table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the rate from noisy observations of a channel matrix.
    Rate {
        /// Directory of observation matrix files, all of one shape.
        #[arg(long)]
        obs: PathBuf,
        /// Signal-to-noise ratio rho.
        #[arg(long)]
        snr: String,
        /// Number of eigenvalues to recover, at most the row count.
        #[arg(long)]
        rank: usize,
        /// Noise standard deviation per observation (default: 1/sqrt(snr)).
        #[arg(long)]
        sigma: Option<String>,
        /// How observations are combined: average, stack or per-observation.
        #[arg(long, default_value = "average")]
        strategy: String,
        /// Write the estimate here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate user powers from compound observations.
    Powers {
        /// Directory of N x M observation matrix files.
        #[arg(long)]
        obs: PathBuf,
        /// Number of users.
        #[arg(long = "K")]
        k: usize,
        /// Receive antennas.
        #[arg(long = "N", value_name = "N")]
        big_n: usize,
        /// Symbols per observation.
        #[arg(long = "M")]
        m: usize,
        /// Noise standard deviation.
        #[arg(long)]
        sigma: String,
        /// Maximum moment weight; recovering all K powers needs P >= K.
        #[arg(long = "P")]
        p: usize,
        /// Write the estimate here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct MomentArgs {
    /// Model expression.
    #[arg(long)]
    model: String,
    /// Moment file; defaults to moments computed from --bind matrices.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Write the moments here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum weight (default: that of the input file).
    #[arg(long = "P")]
    p: Option<usize>,
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse_bindings(specs: &[String]) -> Result<DetMatrixSet> {
    let mut out = DetMatrixSet::new();
    for spec in specs {
        let (name, file) = spec
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("--bind expects NAME=FILE, got {spec:?}")))?;
        out.insert(name.to_string(), read_matrix(Path::new(file))?);
    }
    Ok(out)
}

fn parse_positive(text: &str, what: &str) -> Result<Rational> {
    let q = parse_rational(text).map_err(|_| Error::invalid(format!("{what} must be a number, got {text:?}")))?;
    if q <= Rational::from_integer(0.into()) {
        return Err(Error::invalid(format!("{what} must be positive")));
    }
    Ok(q)
}

fn parse_nonneg(text: &str, what: &str) -> Result<Rational> {
    let q = parse_rational(text).map_err(|_| Error::invalid(format!("{what} must be a number, got {text:?}")))?;
    if q < Rational::from_integer(0.into()) {
        return Err(Error::invalid(format!("{what} must be non-negative")));
    }
    Ok(q)
}

fn emit(cli: &Cli, out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
            if cli.stdout {
                print!("{text}");
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<u8> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let bindings = parse_bindings(&cli.bind)?;
    match &cli.command {
        Command::Formula { model, p } => {
            let compiled = CompiledModel::compile(&ModelExpr::parse(model)?, *p)?;
            let format = if cli.latex { RenderFormat::Latex } else { RenderFormat::Plain };
            let style = |kind| {
                let mut fs = FormulaStyle::default_for(kind, format);
                if cli.raw_nn {
                    fs.style = RenderStyle::Raw;
                }
                fs
            };
            let text = match compiled.display_map()? {
                DisplayMap::One(m) => emit_formula(&m, style(m.kind())),
                DisplayMap::Pair(m) => emit_formula(&m, style(m.kind())),
            };
            emit(cli, None, &text)?;
            Ok(0)
        }
        Command::Convolve(args) | Command::Deconvolve(args) => {
            let forward = matches!(cli.command, Command::Convolve(_));
            let expr = ModelExpr::parse(&args.model)?;
            let text = if let Some(path) = &args.input {
                Some(fs::read_to_string(path)?)
            } else {
                None
            };
            let result = if forward {
                convolve(&expr, text.as_deref(), args.p, &bindings)?
            } else {
                let text = text.ok_or_else(|| Error::invalid("deconvolve needs --in"))?;
                let observed = MomentVector::from_text(&text)?;
                let p = args.p.unwrap_or(observed.max_weight());
                let compiled = CompiledModel::compile(&expr, p)?;
                compiled.deconvolver()?.deconvolve(&observed.truncate(p.min(observed.max_weight())))?
            };
            emit(cli, args.out.as_deref(), &result.to_text())?;
            Ok(0)
        }
        Command::Simulate {
            model,
            trials,
            seed,
            p,
            out,
        } => {
            let spec = EnsembleSpec::new(ModelExpr::parse(model)?, bindings, *seed, *trials)?;
            let report = validate(&spec, *p)?;
            let mut text = format!("# model {}\n# trials {} seed {}\n", spec.model, trials, seed);
            text.push_str(&report.to_table());
            text.push_str(&format!(
                "# {} (max |z| = {:.3})\n",
                if report.passed() { "pass" } else { "FAIL" },
                report.max_abs_z()
            ));
            emit(cli, out.as_deref(), &text)?;
            Ok(if report.passed() { 0 } else { EXIT_VALIDATION_FAILED })
        }
        Command::Rate {
            obs,
            snr,
            rank,
            sigma,
            strategy,
            out,
        } => {
            let snr_q = parse_positive(snr, "--snr")?;
            let sigma2 = match sigma {
                Some(s) => {
                    let s = parse_nonneg(s, "--sigma")?;
                    &s * &s
                }
                None => snr_q.recip(),
            };
            let config = RateConfig {
                snr: rational_to_f64(&snr_q),
                sigma2,
                rank: *rank,
                strategy: strategy.parse::<CombineStrategy>()?,
            };
            let observations = read_observations(obs)?;
            let est = estimate_rate(&observations, &config)?;
            let mut text = format!(
                "# rate estimate from {} observations, snr {}, noise variance {}\n",
                observations.len(),
                snr,
                format_rational(&config.sigma2)
            );
            text.push_str(&spectral_report(&est.spectral));
            text.push_str(&format!("rate_core\t{:?}\n", est.rate_core));
            match est.rate {
                Some(r) => text.push_str(&format!("rate\t{r:?}\n")),
                None => text.push_str("rate\tundefined\n"),
            }
            emit(cli, out.as_deref(), &text)?;
            match est.rate {
                Some(_) => Ok(0),
                None => Err(Error::Undefined(format!(
                    "rate core estimate {} is not positive",
                    est.rate_core
                ))),
            }
        }
        Command::Powers {
            obs,
            k,
            big_n,
            m,
            sigma,
            p,
            out,
        } => {
            let s = parse_nonneg(sigma, "--sigma")?;
            let observations = read_observations(obs)?;
            let shape = observations[0].shape();
            if shape != (*big_n, *m) {
                return Err(Error::dim(format!(
                    "observations are {}x{} but --N {big_n} --M {m} was given",
                    shape.0, shape.1
                )));
            }
            let est = power_estimation(&observations, *k, &(&s * &s), *p)?;
            let mut text = format!("# power estimate from {} observations\n", observations.len());
            text.push_str(&spectral_report(&est));
            emit(cli, out.as_deref(), &text)?;
            Ok(0)
        }
    }
}

fn convolve(expr: &ModelExpr, text: Option<&str>, p: Option<usize>, bindings: &DetMatrixSet) -> Result<MomentVector> {
    let probe = CompiledModel::compile(expr, 1)?;
    let input = match text {
        Some(t) if probe.is_two_sided() => {
            let v = MomentVector::<PairMomentKey>::from_text(t)?;
            let p = p.unwrap_or(v.max_weight());
            InputMoments::Pair(v.truncate(p.min(v.max_weight())))
        }
        Some(t) => {
            let v = MomentVector::from_text(t)?;
            let p = p.unwrap_or(v.max_weight());
            InputMoments::One(v.truncate(p.min(v.max_weight())))
        }
        None => {
            let p = p.ok_or_else(|| Error::invalid("convolve without --in needs --P"))?;
            CompiledModel::compile(expr, p)?.input_moments(bindings)?
        }
    };
    let p = match &input {
        InputMoments::One(v) => v.max_weight(),
        InputMoments::Pair(v) => v.max_weight(),
    };
    CompiledModel::compile(expr, p.max(1))?.convolve(&input)
}

fn spectral_report(est: &SpectralEstimate) -> String {
    let mut text = String::from("# moments\n");
    text.push_str(&est.moments.to_text());
    for (i, e) in est.elementary_symmetric.iter().enumerate() {
        text.push_str(&format!("e{}\t{:?}\n", i + 1, e));
    }
    let eig: Vec<String> = est.eigenvalues.iter().map(|l| format!("{l:?}")).collect();
    text.push_str(&format!("eigenvalues\t{}\n", eig.join("\t")));
    text.push_str(&format!(
        "flags\tcomplex_projected={}\tclamped={}\n",
        est.diagnostics.complex_projected, est.diagnostics.clamped
    ));
    text
}
