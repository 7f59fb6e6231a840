use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{ArgGroup, Parser, ValueEnum};

use esm_refute::pipeline::{run, RunConfig, Verdict, VerifyLevel};
use esm_refute::rational::Rational;
use esm_refute::synth::{EpsilonSpec, Metric, Mode, OstCondition};

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Equivalence,
    Similarity,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    L1,
    L2,
    Discrete,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum)]
enum OstArg {
    Auto,
    C1,
    C2,
    C3,
    C4,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyArg {
    Exact,
    Sample,
    Both,
}

/// Refute output equivalence of two probabilistic programs, or certify a
/// lower bound on their Kantorovich distance.
#[derive(Parser)]
#[command(version, group(ArgGroup::new("eps").args(["epsilon", "maximize"])),
          group(ArgGroup::new("deg").args(["degree", "degree_min"])),
          group(ArgGroup::new("deg2").args(["degree", "degree_max"])))]
struct Args {
    #[arg(long, value_name = "PATH")]
    program_a: PathBuf,
    #[arg(long, value_name = "PATH")]
    program_b: PathBuf,
    #[arg(long, value_enum, default_value = "equivalence")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "l1")]
    metric: MetricArg,
    /// Fixed distance bound to certify (similarity mode).
    #[arg(long, value_name = "RAT")]
    epsilon: Option<Rational>,
    /// Maximize the certified bound (the default).
    #[arg(long)]
    maximize: bool,
    #[arg(long, value_name = "N")]
    degree: Option<u32>,
    #[arg(long, value_name = "N", default_value_t = 1)]
    degree_min: u32,
    #[arg(long, value_name = "N", default_value_t = 5)]
    degree_max: u32,
    /// Handelman product degree; defaults to the template degree plus one.
    #[arg(long, value_name = "N")]
    handelman_degree: Option<u32>,
    #[arg(long, value_name = "PATH")]
    invariants_a: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    invariants_b: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    ost: OstArg,
    #[arg(long, value_enum, default_value = "exact")]
    verify: VerifyArg,
    #[arg(long, value_name = "N", default_value_t = 10_000)]
    mc_samples: u64,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "N", default_value_t = 100_000_000)]
    max_steps: u64,
    #[arg(long, value_name = "SECS")]
    timeout: Option<f64>,
    /// Where to write the certificate.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Where to write the last LP built, in LP format.
    #[arg(long, value_name = "PATH")]
    emit_lp: Option<PathBuf>,
    /// Skip the floating-point pre-solve and use the exact simplex alone.
    #[arg(long)]
    exact_only: bool,
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn config(args: &Args) -> Result<RunConfig, String> {
    let mut cfg = RunConfig::new(read(&args.program_a)?, read(&args.program_b)?);
    cfg.mode = match args.mode {
        ModeArg::Equivalence => Mode::Equivalence,
        ModeArg::Similarity => Mode::Similarity,
    };
    cfg.metric = match args.metric {
        MetricArg::L1 => Metric::L1,
        MetricArg::L2 => Metric::L2,
        MetricArg::Discrete => Metric::Discrete,
        MetricArg::Uniform => Metric::Uniform,
    };
    cfg.epsilon = args.epsilon.clone().map_or(EpsilonSpec::Maximize, EpsilonSpec::Fixed);
    (cfg.degree_min, cfg.degree_max) = args.degree.map_or((args.degree_min, args.degree_max), |d| (d, d));
    cfg.handelman_degree = args.handelman_degree;
    cfg.invariants_a = args.invariants_a.as_ref().map(read).transpose()?;
    cfg.invariants_b = args.invariants_b.as_ref().map(read).transpose()?;
    cfg.ost = match args.ost {
        OstArg::Auto => None,
        OstArg::C1 => Some(OstCondition::C1),
        OstArg::C2 => Some(OstCondition::C2),
        OstArg::C3 => Some(OstCondition::C3),
        OstArg::C4 => Some(OstCondition::C4),
    };
    cfg.verify = match args.verify {
        VerifyArg::Exact => VerifyLevel::Exact,
        VerifyArg::Sample => VerifyLevel::Sample,
        VerifyArg::Both => VerifyLevel::Both,
    };
    cfg.mc_samples = args.mc_samples;
    cfg.seed = args.seed;
    cfg.max_steps = args.max_steps;
    cfg.timeout = args.timeout.map(Duration::from_secs_f64);
    cfg.emit_lp = args.emit_lp.is_some();
    if args.exact_only {
        cfg.presolve_min_rows = None;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Verdict::PreconditionFailed.exit_code() as u8);
        }
    };
    let outcome = run(&cfg);
    for d in &outcome.diagnostics {
        eprintln!("{d}");
    }
    if let (Some(path), Some(text)) = (&args.emit_lp, &outcome.lp_text) {
        if let Err(e) = std::fs::write(path, text) {
            eprintln!("error: cannot write {}: {e}", path.display());
        }
    }
    if let Some(cert) = &outcome.certificate {
        match &args.out {
            Some(path) => {
                if let Err(e) = std::fs::write(path, cert.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                }
            }
            None => eprintln!("{}", cert.to_json()),
        }
    }
    println!("{}", outcome.summary_line());
    ExitCode::from(outcome.verdict.exit_code() as u8)
}
