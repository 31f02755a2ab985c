use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pebbletree::experiments::{self, ExperimentConfig, TreeDistribution};
use pebbletree::mapf::{parse_timed_plan, solve_mapf};
use pebbletree::oracle::{self, MapfOracleOptions, Objective, DEFAULT_BUDGET};
use pebbletree::upmt::{parse_plan, solve_upmt};
use pebbletree::validate::{validate_mapf, validate_upmt};
use pebbletree::{parse_instance, Instance, OracleError};

const INVALID: u8 = 1;
const USAGE: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "pebbletree", version, about = "Unlabeled pebble motion and MAPF on trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Upmt,
    Mapf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Bfs,
    Matching,
    MapfMakespan,
    MapfSoc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    Uniform,
    Path,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a plan for an instance.
    Solve {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long = "in")]
        input: PathBuf,
        /// Root node, by label or index.
        #[arg(long)]
        root: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a plan against an instance.
    Validate {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Exact optimum by exhaustive search or matching.
    Oracle {
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[arg(long = "in")]
        input: PathBuf,
        /// Maximum number of configurations.
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
        /// Restrict each edge to the direction of net flow.
        #[arg(long)]
        unidirectional: bool,
    },
    /// Generate a random instance.
    Gen {
        #[arg(long, value_enum)]
        dist: Dist,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample random instances and write a CSV of plan lengths and bounds.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also test the expected-length bound per cell.
        #[arg(long)]
        check: bool,
    },
    /// Time certificate and plan emission on random instances.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long, default_value_t = 0.1)]
        k_frac: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail<E: std::fmt::Display>(code: u8) -> impl Fn(E) -> Failure {
    move |e| Failure {
        code,
        msg: e.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: USAGE,
        msg: format!("{}: {e}", path.display()),
    })
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let text = read(path)?;
    parse_instance(&text).map_err(|e| Failure {
        code: USAGE,
        msg: format!("{}: {e}", path.display()),
    })
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(fail(USAGE)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve { mode, input, root, out } => {
            let inst = load_instance(&input)?;
            let root = match root {
                None => 0,
                Some(r) => inst.resolve_node(&r).ok_or_else(|| Failure {
                    code: USAGE,
                    msg: format!("unknown root node {r:?}"),
                })?,
            };
            let text = match mode {
                Mode::Upmt => solve_upmt(&inst, root).map_err(fail(INVALID))?.to_text(&inst),
                Mode::Mapf => solve_mapf(&inst, root).map_err(fail(INVALID))?.to_text(&inst),
            };
            emit(&text, out.as_deref())?;
            Ok(0)
        }
        Command::Validate { mode, input, plan } => {
            let inst = load_instance(&input)?;
            let text = read(&plan)?;
            let report = match mode {
                Mode::Upmt => validate_upmt(&inst, &parse_plan(&text, &inst).map_err(fail(USAGE))?),
                Mode::Mapf => validate_mapf(&inst, &parse_timed_plan(&text, &inst).map_err(fail(USAGE))?),
            };
            print!("{}\n{}", report.to_text(), report.to_key_values());
            Ok(if report.feasible { 0 } else { INVALID })
        }
        Command::Oracle {
            mode,
            input,
            budget,
            unidirectional,
        } => {
            let inst = load_instance(&input)?;
            let opts = MapfOracleOptions { unidirectional, budget };
            let value = match mode {
                OracleMode::Bfs => oracle::oracle_opt_bfs(&inst, budget),
                OracleMode::Matching => Ok(oracle::oracle_opt_matching(&inst)),
                OracleMode::MapfMakespan => oracle::oracle_mapf_optimal(&inst, Objective::Makespan, opts),
                OracleMode::MapfSoc => oracle::oracle_mapf_optimal(&inst, Objective::SumOfCosts, opts),
            }
            .map_err(|e: OracleError| Failure {
                code: BUDGET,
                msg: e.to_string(),
            })?;
            println!("{value}");
            Ok(0)
        }
        Command::Gen { dist, n, k, seed, out } => {
            let dist = match dist {
                Dist::Uniform => TreeDistribution::Uniform,
                Dist::Path => TreeDistribution::Path,
            };
            let inst = experiments::sample_instance(dist, n, k, seed).map_err(fail(USAGE))?;
            emit(&inst.to_text(), out.as_deref())?;
            Ok(0)
        }
        Command::Experiment { config, out, check } => {
            let mut cfg = ExperimentConfig::from_json(&read(&config)?).map_err(fail(USAGE))?;
            if out.is_some() {
                cfg.output = out;
            }
            if check {
                let cells = experiments::check_expected_bound(&cfg).map_err(fail(USAGE))?;
                print!("{}", experiments::render_summaries(&cells));
                if cells.iter().any(|c| !c.pass) {
                    return Ok(INVALID);
                }
            }
            let csv = experiments::run_to_csv(&cfg).map_err(fail(USAGE))?;
            if cfg.output.is_none() {
                print!("{csv}");
            }
            Ok(0)
        }
        Command::Bench { n_list, k_frac, seed } => {
            if !(0.0..=1.0).contains(&k_frac) {
                return Err(Failure {
                    code: USAGE,
                    msg: format!("--k-frac {k_frac} outside [0, 1]"),
                });
            }
            let mut prev: Option<(usize, f64)> = None;
            for n in n_list {
                let k = (k_frac * n as f64).floor() as usize;
                let row = experiments::bench_upmt(n, k, seed).map_err(fail(USAGE))?;
                let total = row.certificate_ms + row.solve_ms;
                let ratio = prev.map(|(pn, pt)| format!(" ratio_vs_n={pn}: {:.2}", total / pt));
                println!("{}{}", row.to_line(), ratio.unwrap_or_default());
                prev = Some((n, total));
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
