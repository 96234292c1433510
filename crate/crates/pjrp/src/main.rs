use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pjrp::costmodel::{total_average_cost, CostError, DensityCaps, Instance, Policy};
use pjrp::harness::{
    bounds_curve, curve_to_csv, end_to_end, solve_exact, solve_gamma, HarnessError, SearchWindow,
    SolveCaps, SolveMode,
};
use pjrp::numerics::{format_rational, parse_rational};
use pjrp::primes::{select_vp, validate_conditions, PrimesError, ReductionParams, VpSet,
    DEFAULT_SIEVE_CAP};
use pjrp::reduction::{
    build_gamma, parse_dimacs, satisfiability_gap, Gamma, ReductionError,
};
use pjrp::report::Report;

/// Exit status 2: validation error. Exit status 3: a configured cap was
/// exceeded.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn cap(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }
}

fn cost_failure(e: CostError) -> Failure {
    match e {
        CostError::SubsetCapExceeded(..) | CostError::HyperperiodCapExceeded(..) => {
            Failure::cap(e.to_string())
        }
        _ => Failure::validation(e.to_string()),
    }
}

fn primes_failure(e: PrimesError) -> Failure {
    match e {
        PrimesError::SieveCapExceeded { .. } => Failure::cap(e.to_string()),
        _ => Failure::validation(e.to_string()),
    }
}

fn reduction_failure(e: ReductionError) -> Failure {
    match e {
        ReductionError::Cost(inner) => cost_failure(inner),
        ReductionError::Primes(inner) => primes_failure(inner),
        _ => Failure::validation(e.to_string()),
    }
}

fn harness_failure(e: HarnessError) -> Failure {
    match e {
        HarnessError::SearchCapExceeded { .. } | HarnessError::TooManyVariables { .. } => {
            Failure::cap(e.to_string())
        }
        HarnessError::Cost(inner) => cost_failure(inner),
        HarnessError::Reduction(inner) => reduction_failure(inner),
        _ => Failure::validation(e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "pjrp",
    about = "Exact PJRP workbench: cost evaluation, prime-pair selection, 3SAT reduction instances, exhaustive solving, verification"
)]
struct Cli {
    /// Hyperperiod cap for the counting density oracle.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    lcm_cap: u64,
    /// Maximum distinct cycle values admitted to generic inclusion-exclusion.
    #[arg(long, global = true, default_value_t = 20)]
    subset_cap: usize,
    /// Maximum number of candidate policies an exact search may enumerate.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    search_cap: u64,
    #[command(subcommand)]
    command: Command,
}

impl Cli {
    fn density_caps(&self) -> DensityCaps {
        DensityCaps {
            subset_cap: self.subset_cap,
            hyperperiod_cap: self.lcm_cap,
        }
    }

    fn solve_caps(&self) -> SolveCaps {
        SolveCaps {
            search_cap: self.search_cap,
            density: self.density_caps(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Prime toolkit.
    Primes {
        #[command(subcommand)]
        command: PrimesCommand,
    },
    /// Compile a DIMACS 3-CNF formula and a prime-pair set into a PJRP
    /// instance.
    Compile {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        vp: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the exact total average periodic cost of a policy.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        policy: PathBuf,
    },
    /// Exact optimum over candidate windows. Either give an instance plus a
    /// windows file, or a compiled reduction instance (pinned or full-window
    /// mode).
    Solve {
        #[arg(long, conflicts_with = "gamma", requires = "windows")]
        instance: Option<PathBuf>,
        #[arg(long)]
        windows: Option<PathBuf>,
        #[arg(long, conflicts_with = "windows")]
        gamma: Option<PathBuf>,
        /// With --gamma: pin constants and clauses at their standalone
        /// optima (default is a +-1 audit window around them).
        #[arg(long, requires = "gamma")]
        pinned: bool,
    },
    /// Run a verification suite against a compiled instance; prints CSV.
    Verify {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Bound curve rows (t, lb, ub) for one variable commodity; prints CSV.
    Curve {
        #[arg(long)]
        gamma: PathBuf,
        #[arg(long)]
        var: u64,
    },
    /// Compile, solve, extract, and compare against the SAT oracle.
    ReduceE2e {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        vp: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
}

#[derive(Subcommand)]
enum PrimesCommand {
    /// Greedily select n consecutive-prime pairs; writes the set as JSON and
    /// prints the condition report as CSV.
    Select {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        b: u64,
        #[arg(long)]
        start: u64,
        #[arg(long)]
        limit: u64,
        #[arg(long)]
        pp_cap: Option<u64>,
        #[arg(long, default_value_t = 2)]
        b_tilde: u32,
        /// Interval stretch B for Condition 2 as a rational; defaults to the
        /// smallest admissible value.
        #[arg(long)]
        big_b: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Constants,
    Variables,
    Gap,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Pinned,
    Full,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::validation(format!("cannot write {}: {e}", path.display())))
}

fn load_gamma(path: &Path) -> Result<Gamma, Failure> {
    Gamma::from_json(&read(path)?).map_err(reduction_failure)
}

fn run(cli: &Cli) -> Result<String, Failure> {
    match &cli.command {
        Command::Primes {
            command:
                PrimesCommand::Select {
                    n,
                    b,
                    start,
                    limit,
                    pp_cap,
                    b_tilde,
                    big_b,
                    out,
                },
        } => {
            let vp = select_vp(*n, *b, *start, *limit, *b_tilde, *pp_cap, DEFAULT_SIEVE_CAP)
                .map_err(primes_failure)?;
            let big_b = big_b
                .as_deref()
                .map(parse_rational)
                .transpose()
                .map_err(|e| Failure::validation(e.to_string()))?;
            let params = ReductionParams::for_vp(&vp, big_b).map_err(primes_failure)?;
            let report = validate_conditions(&vp, &params);
            write(out, &vp.to_json())?;
            Ok(report.to_csv())
        }
        Command::Compile { cnf, vp, out } => {
            let formula = parse_dimacs(&read(cnf)?)
                .map_err(|e| Failure::validation(e.to_string()))?;
            let vp = VpSet::from_json(&read(vp)?).map_err(Failure::validation)?;
            let gamma = build_gamma(&formula, &vp).map_err(reduction_failure)?;
            write(out, &gamma.to_json())?;
            Ok(String::new())
        }
        Command::Eval { instance, policy } => {
            let instance = Instance::from_json(&read(instance)?).map_err(Failure::validation)?;
            let policy = Policy::from_json(&read(policy)?).map_err(Failure::validation)?;
            let cost = total_average_cost(&instance, &policy, &cli.density_caps())
                .map_err(cost_failure)?;
            Ok(format!("{}\n", format_rational(&cost)))
        }
        Command::Solve {
            instance,
            windows,
            gamma,
            pinned,
        } => {
            let result = match (instance, gamma) {
                (Some(instance), None) => {
                    let windows = windows
                        .as_ref()
                        .ok_or_else(|| Failure::validation("--instance needs --windows"))?;
                    let instance =
                        Instance::from_json(&read(instance)?).map_err(Failure::validation)?;
                    let windows =
                        SearchWindow::from_json(&read(windows)?).map_err(Failure::validation)?;
                    solve_exact(&instance, &windows, &cli.solve_caps())
                        .map_err(harness_failure)?
                }
                (None, Some(gamma)) => {
                    let gamma = load_gamma(gamma)?;
                    let mode = if *pinned {
                        SolveMode::Pinned
                    } else {
                        SolveMode::FullWindow
                    };
                    solve_gamma(&gamma, mode, &cli.solve_caps()).map_err(harness_failure)?
                }
                _ => {
                    return Err(Failure::validation(
                        "give either --instance with --windows, or --gamma",
                    ))
                }
            };
            Ok(result.to_json())
        }
        Command::Verify { gamma, suite } => {
            let gamma = load_gamma(gamma)?;
            let mut report = Report::default();
            if matches!(suite, Suite::Constants | Suite::All) {
                report.extend(
                    pjrp::harness::verify_constants(&gamma).map_err(harness_failure)?,
                );
            }
            if matches!(suite, Suite::Variables | Suite::All) {
                report.extend(
                    pjrp::harness::verify_variable_claims(&gamma, &cli.density_caps())
                        .map_err(harness_failure)?,
                );
            }
            if matches!(suite, Suite::Gap | Suite::All) {
                report.extend(satisfiability_gap(&gamma));
            }
            Ok(report.to_csv())
        }
        Command::Curve { gamma, var } => {
            let gamma = load_gamma(gamma)?;
            let rows = bounds_curve(&gamma, *var).map_err(harness_failure)?;
            Ok(curve_to_csv(&rows))
        }
        Command::ReduceE2e { cnf, vp, mode } => {
            let formula = parse_dimacs(&read(cnf)?)
                .map_err(|e| Failure::validation(e.to_string()))?;
            let vp = VpSet::from_json(&read(vp)?).map_err(Failure::validation)?;
            let mode = match mode {
                ModeArg::Pinned => SolveMode::Pinned,
                ModeArg::Full => SolveMode::FullWindow,
            };
            let report =
                end_to_end(&formula, &vp, mode, &cli.solve_caps()).map_err(harness_failure)?;
            Ok(report.to_json())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(output) => {
            print!("{output}");
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
