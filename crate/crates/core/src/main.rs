use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use secl::harness::{
    emit_csv, emit_table, emit_trial_rates, format_table1, run_checks, run_monte_carlo, run_rate_trial, table1,
    ExperimentConfig,
};

/// Event-triggered state estimation experiments.
#[derive(Parser, Debug)]
#[command(name = "secl", version)]
struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run the built-in oracle suite (after the command, if one is given).
    #[arg(long, global = true)]
    check: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo run of one case; writes rms.csv, rates.csv, rate_stderr.csv, summary.csv.
    Simulate(Overrides),
    /// All three cases next to the published averages; writes per-case CSVs and summary.csv.
    Table1(Overrides),
    /// Rate predictors along one designated trial; writes trial_rates.csv.
    Rates(Overrides),
    /// Built-in oracle suite.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// 1, 2 or 3.
    #[arg(long)]
    case: Option<String>,
    /// Custom bound, row-major and comma separated.
    #[arg(long)]
    nbar: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Number of time points k = 0..steps-1.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// 1-based trial index used by the rate predictors.
    #[arg(long)]
    trial_index: Option<usize>,
    /// single | averaged
    #[arg(long)]
    rate_mode: Option<String>,
    /// Output directory (default: $SECL_OUT_DIR or ./out).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Use the plain `M − GCM` covariance update instead of the Joseph form.
    #[arg(long)]
    no_joseph: bool,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> secl::Result<()> {
        let pairs: [(&str, Option<String>); 11] = [
            ("case", self.case.clone()),
            ("nbar", self.nbar.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("steps", self.steps.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("trial-index", self.trial_index.map(|v| v.to_string())),
            ("rate-mode", self.rate_mode.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
            ("quad-tol", self.quad_tol.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        if self.no_joseph {
            cfg.joseph = false;
        }
        Ok(())
    }
}

fn config(file: &Option<PathBuf>, o: &Overrides) -> secl::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = file {
        cfg.apply_file(path)?;
    }
    o.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}

fn run_command(cli: &Cli, cmd: &Command) -> secl::Result<bool> {
    match cmd {
        Command::Simulate(o) => {
            let cfg = config(&cli.config, o)?;
            let s = run_monte_carlo(&cfg)?;
            let [e, a1, a2] = s.avg_rates;
            println!("{}: trials={} avg_empirical={e:.4} avg_alg1={a1:.4} avg_alg2={a2:.4}", s.case_label, s.trials);
            report_written(&emit_csv(&s, &cfg.output_dir)?);
        }
        Command::Table1(o) => {
            let cfg = config(&cli.config, o)?;
            let rows = table1(&cfg)?;
            print!("{}", format_table1(&rows));
            report_written(&emit_table(&rows, &cfg.output_dir)?);
        }
        Command::Rates(o) => {
            let cfg = config(&cli.config, o)?;
            let t = run_rate_trial(&cfg)?;
            let n = t.gamma.len() as f64;
            let sent = t.gamma.iter().filter(|&&g| g).count() as f64 / n;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
            println!(
                "trial {}: sent={sent:.4} alg1={:.4} alg2={:.4}",
                cfg.rate_trial_index,
                mean(&t.alg1),
                mean(&t.alg2)
            );
            report_written(&[emit_trial_rates(&t, &cfg.output_dir)?]);
        }
        Command::Check { seed } => return Ok(print_checks(*seed)),
    }
    Ok(true)
}

fn print_checks(seed: u64) -> bool {
    let outcomes = run_checks(seed);
    for o in &outcomes {
        println!("{o}");
    }
    outcomes.iter().all(|o| o.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut ok = true;
    if let Some(cmd) = &cli.command {
        match run_command(&cli, cmd) {
            Ok(passed) => ok &= passed,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
    } else if !cli.check {
        eprintln!("nothing to do; see --help");
        return ExitCode::from(2);
    }
    if cli.check && !matches!(cli.command, Some(Command::Check { .. })) {
        ok &= print_checks(1);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
