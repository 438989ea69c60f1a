use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use formrep::harness::{
    gen_counterexample, gen_random, load_spec, run, save_spec, HarnessError, Problem, ProblemSpec,
    RandomKind, Report, RunMode, RunOptions, MAX_FAMILY_SIZE,
};
use formrep::FamilyKind;

#[derive(Parser, Debug)]
#[command(name = "formrep", version, about = "Operators of sign-indefinite quadratic forms")]
struct Cli {
    /// Multiply every tolerance by this factor.
    #[arg(long, global = true, value_name = "FACTOR")]
    tol_scale: Option<f64>,
    /// Build the operator even when no involution certifies the gap.
    #[arg(long, global = true)]
    force: bool,
    /// Write the report (or generated spec) as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Representation residuals and gap certificate.
    Verify { spec: PathBuf },
    /// Verify plus blockwise kernel against the nullspace oracle.
    Kernel { spec: PathBuf },
    /// Verify plus the domain-stability audit.
    Stability { spec: PathBuf },
    /// Diagnostics over a truncation family.
    Family {
        /// counterexample or constant
        name: String,
        /// `1..5` (inclusive), `2,4,6` or a single size.
        #[arg(long, default_value = "1..5")]
        sizes: String,
    },
    /// Write a problem spec.
    Generate {
        kind: GenKind,
        /// Dimension (general), per-block dimension (offdiag) or size N (counterexample).
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Gap target for general instances.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Kernel dimension of the upper block (offdiag).
        #[arg(long, default_value_t = 0)]
        plus_kernel: usize,
        /// Kernel dimension of the lower block (offdiag).
        #[arg(long, default_value_t = 0)]
        minus_kernel: usize,
        /// Output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum GenKind {
    General,
    Offdiag,
    Counterexample,
}

fn parse_sizes(text: &str) -> Result<Vec<usize>, HarnessError> {
    let bad = |what: &str| HarnessError::Invalid(format!("bad {what} {text:?}"));
    let text = text.trim();
    let sizes: Vec<usize> = if let Some((lo, hi)) = text.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: usize = lo.trim().parse().map_err(|_| bad("size range"))?;
        let hi: usize = hi.trim().parse().map_err(|_| bad("size range"))?;
        if lo > hi {
            return Err(bad("empty size range"));
        }
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad("size list")))
            .collect::<Result<_, _>>()?
    };
    if let Some(&bad) = sizes.iter().find(|&&n| n == 0 || n > MAX_FAMILY_SIZE) {
        return Err(HarnessError::Bound {
            what: "family size",
            value: bad,
            min: 1,
            max: MAX_FAMILY_SIZE,
        });
    }
    Ok(sizes)
}

fn print_report(report: &Report) {
    for c in &report.checks {
        println!(
            "{} {:<32} {:.3e} {} {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.threshold
        );
    }
    if let Some(r) = &report.representation {
        println!(
            "dim {} certified {} |B| {:.6} c {:.6e}",
            r.dim, r.certified, r.norm_b, r.c
        );
    }
    if let Some(s) = &report.involution_sweep {
        println!(
            "involutions swept {} commuting {} certifying {}",
            s.swept, s.commuting, s.certifying
        );
    }
    println!(
        "{} ({} checks, {:.1} ms)",
        if report.passed { "passed" } else { "FAILED" },
        report.checks.len(),
        report.wall_time_ms
    );
}

fn write_json(path: &Path, text: &str) -> Result<()> {
    fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display()))
}

fn run_spec(cli: &Cli, spec: &ProblemSpec, mode: RunMode) -> Result<bool> {
    let opts = RunOptions {
        mode,
        force: cli.force,
        tol_scale: cli.tol_scale,
    };
    let report = run(spec, &opts)?;
    print_report(&report);
    if let Some(path) = &cli.json_out {
        write_json(path, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report.passed)
}

fn generate(cli: &Cli) -> Result<bool> {
    let Command::Generate {
        kind,
        n,
        seed,
        alpha,
        plus_kernel,
        minus_kernel,
        out,
    } = &cli.command
    else {
        unreachable!()
    };
    let mut spec = match kind {
        GenKind::General => gen_random(RandomKind::General { n: *n, alpha: *alpha }, *seed)?,
        GenKind::Offdiag => gen_random(
            RandomKind::OffDiagonal {
                plus_dim: *n,
                minus_dim: *n,
                plus_kernel: *plus_kernel,
                minus_kernel: *minus_kernel,
            },
            *seed,
        )?,
        GenKind::Counterexample => gen_counterexample(*n)?,
    };
    if cli.force {
        spec.force = true;
    }
    if let Some(s) = cli.tol_scale {
        spec.tolerances.tol_scale = Some(s);
    }
    match out.as_ref().or(cli.json_out.as_ref()) {
        Some(path) => {
            save_spec(&spec, path)?;
            log::info!("wrote {}", path.display());
        }
        None => println!("{}", spec.to_json()),
    }
    Ok(true)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Verify { spec } => run_spec(cli, &load_spec(spec)?, RunMode::Verify),
        Command::Kernel { spec } => run_spec(cli, &load_spec(spec)?, RunMode::Kernel),
        Command::Stability { spec } => run_spec(cli, &load_spec(spec)?, RunMode::Stability),
        Command::Family { name, sizes } => {
            let kind = FamilyKind::from_name(name).ok_or_else(|| HarnessError::UnknownFamily(name.clone()))?;
            let spec = ProblemSpec::new(Problem::Family {
                kind,
                sizes: parse_sizes(sizes)?,
            });
            run_spec(cli, &spec, RunMode::Verify)
        }
        Command::Generate { .. } => generate(cli),
    }
}

fn is_input_error(err: &anyhow::Error) -> bool {
    err.downcast_ref::<HarnessError>().is_some_and(HarnessError::is_input_error)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_input_error(&err) { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_forms() {
        assert_eq!(parse_sizes("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_sizes("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_sizes("2,4").unwrap(), vec![2, 4]);
        assert_eq!(parse_sizes("5").unwrap(), vec![5]);
        assert!(parse_sizes("0..2").is_err());
        assert!(parse_sizes("3..1").is_err());
        assert!(parse_sizes("1..65").is_err());
        assert!(parse_sizes("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
