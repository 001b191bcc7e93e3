use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use betabaker::analysis::{box_dimension, cylinder_decay, dimension_formula, marginal_density};
use betabaker::baker::{attractor_cloud, rasterize, srb_sample, DEFAULT_BURN_IN};
use betabaker::beta_shift::greedy_expansion;
use betabaker::derived::{beta_n_word, derivability_status, derive, Derived, DEFAULT_MAX_STEPS};
use betabaker::transversality::{
    check_epsilon_condition, epsilon_bound, find_delta, verify_transversality_with,
    DischargeReason, Mode, VerifyOptions, DEFAULT_DEPTH, DEFAULT_MAX_BOXES, DEFAULT_SAMPLES,
};
use betabaker::{BetaSystem, EPWord, PointCloud};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// β-expansions, symmetric β-shifts, transversality checks and the fat baker map.
#[derive(Debug, Parser, Serialize)]
#[command(name = "betabaker", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
enum Command {
    /// Greedy β-expansion of x.
    Expand {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 20)]
        depth: usize,
    },
    /// Solve d(1, β) = word for β; prints β and 1/β.
    SolveBeta {
        /// Word in `pre;per` form, e.g. `1,1,0;1,0`.
        #[arg(long, value_parser = parse_word)]
        #[serde(serialize_with = "as_text")]
        word: EPWord,
    },
    /// Derived sequence of an allowable word.
    Derive {
        #[arg(long, value_parser = parse_word)]
        #[serde(serialize_with = "as_text")]
        word: EPWord,
        /// Follow the derivation chain and report derivability.
        #[arg(long)]
        chain: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        max_steps: usize,
    },
    /// CSV of β_n and 1/β_n for n = 1..n_max.
    STable {
        #[arg(long, default_value_t = 5)]
        n_max: usize,
    },
    /// Explicit ε for the transversality lemma.
    Epsilon {
        #[arg(long)]
        beta: f64,
    },
    /// Check transversality for admissible pairs of the β given by its greedy word.
    VerifyTrans(VerifyArgs),
    /// Sample the attractor and write a raster and/or CSV.
    Attractor {
        #[command(flatten)]
        sample: SampleArgs,
        /// Binary PGM output.
        #[arg(long)]
        pgm: Option<PathBuf>,
        /// 8-bit grayscale PNG output.
        #[arg(long)]
        png: Option<PathBuf>,
        /// CSV of the points, header `x,y`.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
    },
    /// Box-counting dimension of a sampled cloud, as JSON.
    Dimension {
        #[command(flatten)]
        sample: SampleArgs,
        /// Dyadic exponents `k1..k2` (box side 2^-k).
        #[arg(long, default_value = "3..7", value_parser = parse_scales)]
        #[serde(serialize_with = "as_scales")]
        scales: (u32, u32),
    },
    /// x-marginal density diagnostic, as JSON.
    Density {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 256)]
        bins: usize,
    },
    /// Largest cylinder masses against K β^-n, as CSV.
    Cylinders {
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
    },
}

#[derive(Debug, Args, Serialize)]
struct VerifyArgs {
    /// Greedy expansion d(1, β) in `pre;per` form.
    #[arg(long, value_parser = parse_word)]
    #[serde(serialize_with = "as_text")]
    beta_word: EPWord,
    /// ε in x ∈ [0, 1/β + ε]; defaults to the explicit bound.
    #[arg(long)]
    epsilon: Option<f64>,
    /// δ to check; without it the largest certified δ in 2^-4..2^-20 is searched.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Cert)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_BOXES)]
    max_boxes: u64,
    /// CSV of discharged boxes (certified mode).
    #[arg(long)]
    certificate: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Rand,
    Cert,
}

#[derive(Debug, Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1_000_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Method::Orbit)]
    method: Method,
    /// Discarded orbit steps (orbit method).
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    /// Forward orbit of a random point.
    Orbit,
    /// Projections of random admissible two-sided words.
    Symbolic,
}

fn parse_word(s: &str) -> Result<EPWord, String> {
    s.parse::<EPWord>().map_err(|e| e.to_string())
}

fn parse_scales(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected k1..k2, got {s:?}"))?;
    let a = a.trim().parse::<u32>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<u32>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn as_text<S: serde::Serializer>(w: &EPWord, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

fn as_scales<S: serde::Serializer>(k: &(u32, u32), s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}..{}", k.0, k.1))
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(String),
}

impl From<betabaker::Error> for Failure {
    fn from(e: betabaker::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = configure_threads().and_then(|threads| {
        let config = serde_json::json!({ "config": &cli, "threads": threads });
        eprintln!("{config}");
        run(cli.command)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<usize, Failure> {
    let requested = match std::env::var("BAKER_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Failure::Usage(format!(
                "BAKER_THREADS must be a non-negative integer, got {v:?}"
            ))
        })?,
        Err(_) => 0,
    };
    if requested > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(requested)
            .build_global()
            .map_err(|e| Failure::Domain(e.to_string()))?;
    }
    Ok(rayon::current_num_threads())
}

fn run(command: Command) -> Outcome {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match command {
        Command::Expand { x, beta, depth } => {
            let digits = greedy_expansion(x, beta, depth)?;
            writeln!(out, "{}", join(&digits, ","))?;
        }
        Command::SolveBeta { word } => {
            let sys = BetaSystem::from_greedy_word(&word)?;
            writeln!(out, "beta,inv_beta")?;
            writeln!(out, "{:.6},{:.6}", sys.beta(), 1.0 / sys.beta())?;
        }
        Command::Derive {
            word, chain: false, ..
        } => match derive(&word)? {
            Derived::Word(d) => writeln!(out, "{d}")?,
            Derived::InfiniteRun { prefix } => writeln!(
                out,
                "infinite run after derived digits [{}]",
                join(&prefix, ",")
            )?,
        },
        Command::Derive {
            word,
            chain: true,
            max_steps,
        } => {
            let outcome = derivability_status(&word, max_steps);
            for w in &outcome.steps {
                writeln!(out, "{w}")?;
            }
            writeln!(out, "status: {:?} ({})", outcome.status, outcome.reason)?;
        }
        Command::STable { n_max } => {
            if n_max == 0 {
                return Err(Failure::Usage("--n-max must be at least 1".into()));
            }
            writeln!(out, "n,beta,inv_beta")?;
            for n in 1..=n_max {
                let sys = BetaSystem::from_greedy_word(&beta_n_word(n)?)?;
                writeln!(out, "{n},{:.6},{:.6}", sys.beta(), 1.0 / sys.beta())?;
            }
        }
        Command::Epsilon { beta } => {
            let epsilon = epsilon_bound(beta)?;
            let report = serde_json::json!({
                "beta": beta,
                "epsilon": epsilon,
                "epsilon_condition": check_epsilon_condition(beta, epsilon),
            });
            writeln!(out, "{report}")?;
        }
        Command::VerifyTrans(args) => verify(args, &mut out)?,
        Command::Attractor {
            sample,
            pgm,
            png,
            csv,
            width,
            height,
        } => {
            if pgm.is_none() && png.is_none() && csv.is_none() {
                return Err(Failure::Usage(
                    "give at least one of --pgm, --png, --csv".into(),
                ));
            }
            let cloud = sample_cloud(&sample)?;
            if pgm.is_some() || png.is_some() {
                let raster = rasterize(&cloud, width, height)?;
                if let Some(path) = pgm {
                    std::fs::write(path, raster.to_pgm())?;
                }
                if let Some(path) = png {
                    write_png(&path, width, height, &raster.gray8())?;
                }
            }
            if let Some(path) = csv {
                let mut f = BufWriter::new(File::create(path)?);
                cloud.write_csv(&mut f)?;
                f.flush()?;
            }
            writeln!(
                out,
                "{}",
                serde_json::json!({ "points": cloud.len(), "provenance": cloud.provenance })
            )?;
        }
        Command::Dimension { sample, scales } => {
            let cloud = sample_cloud(&sample)?;
            let est = box_dimension(&cloud, scales.0, scales.1)?;
            let formula = dimension_formula(sample.beta, sample.lambda)?;
            let report = serde_json::json!({
                "estimate": est.value,
                "formula_value": formula.value,
                "trivial_bound": formula.trivial_bound,
                "fit_r2": est.fit_r2,
                "scales_used": est.scales_used,
                "counts": est.counts,
            });
            writeln!(out, "{report}")?;
        }
        Command::Density { sample, bins } => {
            let cloud = sample_cloud(&sample)?;
            let report = marginal_density(&cloud, bins)?;
            writeln!(
                out,
                "{}",
                serde_json::to_string(&report).expect("report serializes")
            )?;
        }
        Command::Cylinders { sample, n_max } => {
            let cloud = sample_cloud(&sample)?;
            let decay = cylinder_decay(&cloud, sample.beta, n_max)?;
            writeln!(out, "n,max_mass,bound_K_beta_pow")?;
            for (i, m) in decay.max_mass.iter().enumerate() {
                let n = i as i32 + 1;
                writeln!(out, "{n},{m:.10e},{:.10e}", decay.k * sample.beta.powi(-n))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn verify(args: VerifyArgs, out: &mut impl Write) -> Outcome {
    let sys = BetaSystem::from_greedy_word(&args.beta_word)?;
    let epsilon = match args.epsilon {
        Some(e) => e,
        None => epsilon_bound(sys.beta())?,
    };
    let options = VerifyOptions {
        record_certificate: args.certificate.is_some(),
    };
    let report = match (args.delta, args.mode) {
        (Some(delta), ModeArg::Rand) => verify_transversality_with(
            &sys,
            epsilon,
            delta,
            args.depth,
            Mode::Randomized {
                samples: args.samples,
                seed: args.seed,
            },
            options,
        )?,
        (Some(delta), ModeArg::Cert) => verify_transversality_with(
            &sys,
            epsilon,
            delta,
            args.depth,
            Mode::Certified {
                max_boxes: args.max_boxes,
            },
            options,
        )?,
        (None, ModeArg::Rand) => {
            return Err(Failure::Usage(
                "--mode rand needs an explicit --delta".into(),
            ));
        }
        (None, ModeArg::Cert) => {
            let found =
                find_delta(&sys, epsilon, args.depth, args.max_boxes)?.ok_or_else(|| {
                    Failure::Domain("no delta in 2^-4..2^-20 could be certified".into())
                })?;
            match &args.certificate {
                Some(_) => verify_transversality_with(
                    &sys,
                    epsilon,
                    found.delta,
                    args.depth,
                    found.mode,
                    options,
                )?,
                None => found,
            }
        }
    };
    if let Some(path) = &args.certificate {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(f, "coeffs,x_lo,x_hi,reason")?;
        for b in &report.certificate {
            let reason = match b.reason {
                DischargeReason::Magnitude => "magnitude",
                DischargeReason::Slope => "slope",
            };
            writeln!(
                f,
                "{},{:.17e},{:.17e},{reason}",
                join(&b.coeffs, " "),
                b.x.lo,
                b.x.hi
            )?;
        }
        f.flush()?;
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string(&report).expect("report serializes")
    )?;
    Ok(())
}

fn sample_cloud(args: &SampleArgs) -> Result<PointCloud, Failure> {
    Ok(match args.method {
        Method::Orbit => srb_sample(args.beta, args.lambda, args.seed, args.burn_in, args.count)?,
        Method::Symbolic => attractor_cloud(
            &BetaSystem::from_beta(args.beta)?,
            args.lambda,
            args.seed,
            args.count,
        )?,
    })
}

fn write_png(path: &Path, width: usize, height: usize, gray: &[u8]) -> Outcome {
    let file = BufWriter::new(File::create(path)?);
    let mut encoder = png::Encoder::new(file, width as u32, height as u32);
    encoder.set_color(png::ColorType::Grayscale);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Failure::Domain(e.to_string()))?;
    writer
        .write_image_data(gray)
        .map_err(|e| Failure::Domain(e.to_string()))?;
    writer
        .finish()
        .map_err(|e| Failure::Domain(e.to_string()))?;
    Ok(())
}

fn join<T: ToString>(xs: &[T], sep: &str) -> String {
    xs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(sep)
}
