//! `roughstop`: price tables, parameter studies and the path cache from the
//! command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 acceptance violation (with `--check`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use roughstop::experiment::{
    run_correlation_study, run_discretization_study, run_feature_importance, run_price_table, run_ridge_sweep,
    run_sample_size_study, write_study, ExperimentConfig, PriceRow, Runner, StudyOutput, StudyRow, PRESETS,
};
use roughstop::models::cache::CACHE_ENV;
use roughstop::models::{cashflows, PathCache};
use roughstop::stopping::SE_MULTIPLIER;
use roughstop::Error;

#[derive(Parser)]
#[command(name = "roughstop", version, about = "Bermudan put bounds under rough volatility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Base preset (default table2, or the file's `preset` key).
    #[arg(long)]
    preset: Option<String>,
    /// TOML file layered on top of the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override, e.g. `--set sampling.train_paths=4096`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print the resolved configuration as TOML before running.
    #[arg(long)]
    print_config: bool,
    /// Simulate without reading or writing the path cache.
    #[arg(long)]
    no_cache: bool,
    /// Re-simulate even when a cached batch exists.
    #[arg(long)]
    refresh: bool,
}

#[derive(Args, Clone)]
struct StudyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV (default `results/<name>-<study>.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 4 when a bound ordering check fails.
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate (and cache) the training and test batches of a configuration.
    Simulate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Price table: European, point estimate, bounds and gap per strike and backend.
    Price(StudyArgs),
    /// Kernel primal values over the ridge-penalty grid.
    RidgeSweep(StudyArgs),
    /// Bounds against the training sample size.
    SampleStudy(StudyArgs),
    /// Bounds against the spot-volatility correlation.
    CorrelationStudy(StudyArgs),
    /// Duality gap over fine-grid sizes and Hurst parameters.
    DiscretizationStudy(StudyArgs),
    /// Permutation importance of the primal and dual features.
    FeatureImportance(StudyArgs),
    /// Inspect or empty the path cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
    /// List the available presets.
    Presets,
}

#[derive(Subcommand)]
enum CacheAction {
    Ls,
    Clear,
}

enum Failure {
    Core(Error),
    Violation(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn resolve(args: &ConfigArgs) -> Result<(ExperimentConfig, Runner), Failure> {
    let cfg = ExperimentConfig::resolve(args.preset.as_deref(), args.config.as_deref(), &args.overrides)?;
    if args.print_config {
        print!("{}", cfg.to_toml());
    }
    let runner = if args.no_cache {
        Runner::uncached()
    } else {
        Runner {
            cache: Some(PathCache::from_env()),
            refresh: args.refresh,
        }
    };
    Ok((cfg, runner))
}

fn default_out(cfg: &ExperimentConfig, study: &str) -> PathBuf {
    Path::new("results").join(format!("{}-{study}.csv", cfg.name))
}

fn emit<R: serde::Serialize>(
    args: &StudyArgs,
    cfg: &ExperimentConfig,
    study: &str,
    out: &StudyOutput<R>,
) -> Result<(), Failure> {
    let path = args.out.clone().unwrap_or_else(|| default_out(cfg, study));
    let timings = write_study(&path, out)?;
    println!(
        "wrote {} rows to {} (timings in {}), config {}",
        out.rows.len(),
        path.display(),
        timings.display(),
        cfg.hash()
    );
    Ok(())
}

fn price_checks(rows: &[PriceRow]) -> Vec<String> {
    let mut bad = Vec::new();
    for r in rows {
        let cell = format!("strike {} backend {}", r.strike, r.backend);
        if r.violation || r.lower > r.upper + SE_MULTIPLIER * (r.lower_se + r.upper_se) {
            bad.push(format!("{cell}: lower {:.4} above upper {:.4}", r.lower, r.upper));
        }
        if r.lower < r.european - SE_MULTIPLIER * r.european_se {
            bad.push(format!("{cell}: lower {:.4} below European {:.4}", r.lower, r.european));
        }
    }
    bad
}

fn study_checks(rows: &[StudyRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.lower > r.upper + SE_MULTIPLIER * (r.lower_se + r.upper_se))
        .map(|r| {
            format!(
                "{} H={} rho={} M={} N_f={}: lower {:.4} above upper {:.4}",
                r.study,
                r.hurst.map_or("-".to_string(), |h| h.to_string()),
                r.rho,
                r.train_paths,
                r.fine_steps,
                r.lower,
                r.upper
            )
        })
        .collect()
}

fn checked(check: bool, problems: Vec<String>) -> Result<(), Failure> {
    if check && !problems.is_empty() {
        return Err(Failure::Violation(problems));
    }
    for p in &problems {
        log::warn!("{p}");
    }
    Ok(())
}

fn print_price_table(rows: &[PriceRow]) {
    println!(
        "{:>7} {:>7} {:>9} {:>9} {:>9} {:>8} {:>9} {:>8} {:>8}",
        "strike", "backend", "european", "point", "lower", "±3se", "upper", "±3se", "gap"
    );
    for r in rows {
        println!(
            "{:>7} {:>7} {:>9.4} {:>9.4} {:>9.4} {:>8.4} {:>9.4} {:>8.4} {:>8.4}",
            r.strike,
            r.backend,
            r.european,
            r.point,
            r.lower,
            SE_MULTIPLIER * r.lower_se,
            r.upper,
            SE_MULTIPLIER * r.upper_se,
            r.gap
        );
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate { config } => {
            if config.no_cache {
                return Err(Error::Config("simulate writes to the cache; drop --no-cache".into()).into());
            }
            let (cfg, runner) = resolve(&config)?;
            let mut sims: Vec<_> = (0..cfg.repeats).map(|r| ("train", cfg.sampling.train(r))).collect();
            sims.push(("test", cfg.sampling.test()));
            for (role, sim) in sims {
                let batch = runner.batch(&cfg.model, &sim)?;
                let euro = cashflows(&batch, cfg.strikes[0]).european(sim.antithetic);
                println!(
                    "{role} seed {}: {} paths × {} steps, European({}) = {:.4} ± {:.4}",
                    sim.seed,
                    batch.num_paths(),
                    batch.fine_steps(),
                    cfg.strikes[0],
                    euro.mean,
                    SE_MULTIPLIER * euro.se
                );
            }
            Ok(())
        }
        Command::Price(args) => {
            let (cfg, runner) = resolve(&args.config)?;
            let out = run_price_table(&cfg, &runner)?;
            print_price_table(&out.rows);
            emit(&args, &cfg, "price", &out)?;
            checked(args.check, price_checks(&out.rows))
        }
        Command::RidgeSweep(args) => {
            let (cfg, runner) = resolve(&args.config)?;
            let out = run_ridge_sweep(&cfg, &runner)?;
            for r in &out.rows {
                println!(
                    "lambda {:>8e}: point {:.4} lower {:.4} spread {:+.4}{}",
                    r.lambda,
                    r.point,
                    r.lower,
                    r.spread,
                    if r.best { "  <- best" } else { "" }
                );
            }
            emit(&args, &cfg, "ridge", &out)
        }
        Command::SampleStudy(args) => {
            let (cfg, runner) = resolve(&args.config)?;
            let out = run_sample_size_study(&cfg, &runner)?;
            emit(&args, &cfg, "sample", &out)?;
            checked(args.check, study_checks(&out.rows))
        }
        Command::CorrelationStudy(args) => {
            let (cfg, runner) = resolve(&args.config)?;
            let out = run_correlation_study(&cfg, &runner)?;
            emit(&args, &cfg, "correlation", &out)?;
            checked(args.check, study_checks(&out.rows))
        }
        Command::DiscretizationStudy(args) => {
            let (cfg, runner) = resolve(&args.config)?;
            let out = run_discretization_study(&cfg, &runner)?;
            for r in &out.rows {
                println!(
                    "H {} N_f {:>4}: gap {:.4} ± {:.4}",
                    r.hurst.map_or("-".to_string(), |h| h.to_string()),
                    r.fine_steps,
                    r.gap,
                    r.gap_se
                );
            }
            emit(&args, &cfg, "discretization", &out)?;
            checked(args.check, study_checks(&out.rows))
        }
        Command::FeatureImportance(args) => {
            let (cfg, runner) = resolve(&args.config)?;
            let out = run_feature_importance(&cfg, &runner)?;
            for r in out.rows.iter().filter(|r| r.rank <= 5) {
                println!(
                    "{:>6} #{} {:<10} {:.4} ± {:.4}",
                    r.side, r.rank, r.feature, r.score, r.se
                );
            }
            emit(&args, &cfg, "importance", &out)
        }
        Command::Cache { action } => {
            let cache = PathCache::from_env();
            match action {
                CacheAction::Ls => {
                    let entries = cache.list()?;
                    println!(
                        "{} entries in {} (set {CACHE_ENV} to move)",
                        entries.len(),
                        cache.dir().display()
                    );
                    for m in entries {
                        println!(
                            "{}  {:<14} H={:<5} rho={:<5} M={:<7} N_f={:<4} seed={}",
                            m.key,
                            m.params.name(),
                            m.params.hurst().map_or("-".to_string(), |h| h.to_string()),
                            m.params.rho,
                            m.sim.paths,
                            m.sim.fine_steps,
                            m.sim.seed
                        );
                    }
                }
                CacheAction::Clear => println!("removed {} entries from {}", cache.clear()?, cache.dir().display()),
            }
            Ok(())
        }
        Command::Presets => {
            for p in PRESETS {
                let c = ExperimentConfig::preset(p)?;
                println!(
                    "{p:<14} {:<14} H={:<5} M={:<7} N_f={:<4} repeats={}",
                    c.model.name(),
                    c.model.hurst().map_or("-".to_string(), |h| h.to_string()),
                    c.sampling.train_paths,
                    c.sampling.fine_steps,
                    c.repeats
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Core(e)) if e.is_config() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Violation(problems)) => {
            for p in problems {
                eprintln!("check failed: {p}");
            }
            ExitCode::from(4)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(european: f64, lower: f64, upper: f64) -> PriceRow {
        PriceRow {
            config_hash: "h".into(),
            version: "v".into(),
            model: "rough-bergomi".into(),
            hurst: Some(0.07),
            rho: -0.9,
            strike: 100.0,
            backend: "linear".into(),
            repeats: 1,
            european,
            european_se: 0.01,
            point: lower,
            lower,
            lower_se: 0.01,
            upper,
            upper_se: 0.01,
            gap: upper - lower,
            gap_se: 0.01,
            violation: false,
        }
    }

    #[test]
    fn checks_flag_crossed_bounds_and_sub_european_lower_bounds() {
        assert!(price_checks(&[row(8.0, 8.4, 9.0)]).is_empty());
        // Within the three-standard-error allowance.
        assert!(price_checks(&[row(8.0, 9.05, 9.0)]).is_empty());
        assert_eq!(price_checks(&[row(8.0, 9.2, 9.0)]).len(), 1);
        assert_eq!(price_checks(&[row(8.0, 7.9, 9.0)]).len(), 1);
        assert!(matches!(
            checked(true, price_checks(&[row(8.0, 7.9, 9.0)])),
            Err(Failure::Violation(_))
        ));
        assert!(checked(false, price_checks(&[row(8.0, 7.9, 9.0)])).is_ok());
    }
}
