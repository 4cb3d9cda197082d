use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqicube::experiment::{
    check_golden, checks, parse_metric, reference_csv, run, shipped_golden, write_outputs, ErrorTable,
    ExperimentConfig, GoldenTolerance, Overrides, ReferenceStore, RunReport,
};
use sqicube::Error;

#[derive(Parser)]
#[command(name = "sqicube", version, about = "Weakly singular spline cubature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and print its error table as CSV.
    Run {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Verify the acceptance tolerances of the preset; exit 1 on failure.
        #[arg(long)]
        check: bool,
    },
    /// Run an experiment and compare it with a golden table.
    Check {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Golden CSV; defaults to the shipped table of the preset.
        #[arg(long)]
        golden: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        rtol: f64,
    },
    /// Run with references recomputed by the oracle, or dump the reference set.
    Oracle {
        #[command(flatten)]
        args: ExperimentArgs,
        /// Write the preset reference values to this CSV instead of running.
        #[arg(long)]
        references: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML manifest with `[experiment]` and `[quadrature]` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    example: Option<u8>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Comma-separated breakpoint counts, e.g. `6,8,10`.
    #[arg(long = "N", value_parser = parse_n_list)]
    n: Option<Ns>,
    #[arg(long)]
    surface: Option<String>,
    /// Comma-separated surface parameters (cylinder radius).
    #[arg(long, value_delimiter = ',')]
    surface_params: Option<Vec<f64>>,
    /// `identity`, `surface` or `e,f,g`.
    #[arg(long)]
    metric: Option<String>,
    /// one | quadratic | exp | jacobian | helmholtz
    #[arg(long)]
    integrand: Option<String>,
    #[arg(long)]
    wave_number: Option<f64>,
    /// direct | multiplicative | subtractive
    #[arg(long)]
    pipeline: Option<String>,
    /// Comma-separated source coordinates; sources are all pairs.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    sources: Option<Vec<f64>>,
    /// truncated-cardinal-inverse | local-interpolation-blossom
    #[arg(long)]
    qi: Option<String>,
    #[arg(long)]
    gauss_order: Option<usize>,
    #[arg(long)]
    grading: Option<f64>,
    #[arg(long)]
    moment_tol: Option<f64>,
    #[arg(long)]
    oracle_tol: Option<f64>,
    /// Write the CSV here (plus a `.meta.json` sidecar).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute reference values with the oracle instead of loading them.
    #[arg(long)]
    with_oracle: bool,
}

#[derive(Clone, Debug)]
struct Ns(Vec<usize>);

fn parse_n_list(text: &str) -> Result<Ns, String> {
    let ns: Vec<usize> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| format!("`{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    if ns.is_empty() {
        return Err("empty N list".into());
    }
    Ok(Ns(ns))
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let text = self.config.as_ref().map(std::fs::read_to_string).transpose()?;
        let flags = Overrides {
            example: self.example,
            d: self.d,
            p: self.p,
            ns: self.n.clone().map(|n| n.0),
            surface: self.surface.clone(),
            surface_params: self.surface_params.clone(),
            metric: self.metric.as_deref().map(parse_metric).transpose()?,
            integrand: self.integrand.clone(),
            wave_number: self.wave_number,
            pipeline: self.pipeline.clone(),
            source_coords: self.sources.clone(),
            qi_scheme: self.qi.clone(),
            gauss_order: self.gauss_order,
            grading: self.grading,
            moment_tol: self.moment_tol,
            oracle_tol: self.oracle_tol,
            out: self.out.clone(),
            ..Overrides::default()
        };
        ExperimentConfig::resolve(text.as_deref(), &flags)
    }

    fn store(&self) -> Result<ReferenceStore, Error> {
        if self.with_oracle {
            Ok(ReferenceStore::oracle_only())
        } else {
            ReferenceStore::shipped()
        }
    }
}

fn execute(cfg: &ExperimentConfig, store: &ReferenceStore) -> Result<RunReport, Error> {
    let report = run(cfg, store)?;
    match &cfg.out {
        Some(path) => write_outputs(&report, path)?,
        None => print!("{}", report.table.to_csv()),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("SQICUBE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run { args, check } => {
            let cfg = args.resolve()?;
            let report = execute(&cfg, &args.store()?)?;
            if !check {
                return Ok(ExitCode::SUCCESS);
            }
            let results = checks(&report);
            let mut ok = true;
            for c in &results {
                eprintln!("{} {}: {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
                ok &= c.passed;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Check { args, golden, rtol } => {
            let cfg = args.resolve()?;
            let golden_text = match (&golden, cfg.example) {
                (Some(path), _) => std::fs::read_to_string(path)?,
                (None, Some(e)) => shipped_golden(e, cfg.d, cfg.p)
                    .ok_or_else(|| Error::Config(format!("no shipped golden table for example {e}, d={}, p={}", cfg.d, cfg.p)))?
                    .to_string(),
                (None, None) => return Err(Error::Config("custom runs need --golden".into())),
            };
            let expected = ErrorTable::from_csv(&golden_text)?;
            let report = execute(&cfg, &args.store()?)?;
            let tol = GoldenTolerance { rtol, ..GoldenTolerance::default() };
            let result = check_golden(&report.table, &expected, tol)?;
            for m in &result.mismatches {
                eprintln!("MISMATCH {m}");
            }
            eprintln!("GOLDEN {}", if result.passed() { "PASS" } else { "FAIL" });
            Ok(if result.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Oracle { args, references } => {
            if let Some(path) = references {
                let target = args.oracle_tol.unwrap_or(1e-12);
                std::fs::write(&path, reference_csv(target)?)?;
                eprintln!("wrote {}", path.display());
                return Ok(ExitCode::SUCCESS);
            }
            let cfg = args.resolve()?;
            execute(&cfg, &ReferenceStore::oracle_only())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
