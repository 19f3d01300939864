use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use pbr_cli::bench::{self, instance_seed, parse_strategy, BenchSpec};
use pbr_cli::format::exact;
use pbr_cli::setup::{read, Setup, Sources};
use pbr_cli::{exit_code, Status};
use pbr_core::model::print_problem;
use pbr_core::plan::{print_plan, PartialPlan, To2poMode};
use pbr_core::rewrite::{rewrite, Want};
use pbr_core::search::{optimize, PlateauCounting, SearchConfig, SearchProblem, SearchTrace, Strategy};
use pbr_domains::{GenParams, Pack, PackKind};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Planning by rewriting: improve a plan by local search over plan
/// rewriting rules.
///
/// Exit status: 0 success, 1 input error, 2 no initial plan, 3 no valid
/// plan within the search budget, 4 `validate` found violations.
#[derive(Parser, Debug)]
#[command(name = "pbr", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master random seed.
    #[arg(long, global = true, env = "PBR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = StrategyArg::First)]
    strategy: StrategyArg,
    /// Equal-cost moves allowed per run (first improvement only).
    #[arg(long, global = true, default_value_t = 0)]
    plateau: u64,
    #[arg(long, global = true, default_value_t = 1)]
    restarts: u32,
    #[arg(long = "max-iter", global = true, default_value_t = 10_000)]
    max_iter: u64,
    /// Wall-clock limit in seconds for the whole search.
    #[arg(long = "time-limit", global = true, value_name = "S")]
    time_limit: Option<f64>,
    /// Write the search trace as CSV.
    #[arg(long, global = true, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    First,
    Best,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Strategy {
        match s {
            StrategyArg::First => Strategy::FirstImprovement,
            StrategyArg::Best => Strategy::BestImprovement,
        }
    }
}

#[derive(Args, Debug)]
struct Inputs {
    #[arg(long, value_name = "FILE")]
    problem: PathBuf,
    /// Built-in pack (blocks, manufacturing, logistics, query). Defaults to
    /// the pack the domain or problem names.
    #[arg(long)]
    pack: Option<String>,
    #[arg(long, value_name = "FILE")]
    domain: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
}

impl Inputs {
    fn setup(&self) -> Result<Setup> {
        let sources = Sources {
            pack: self.pack.as_deref(),
            domain: self.domain.as_deref(),
            rules: self.rules.as_deref(),
        };
        Setup::load(&sources, &self.problem)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize a plan and write the best one found.
    Plan {
        #[command(flatten)]
        inputs: Inputs,
        /// Start from this action sequence instead of the pack's generator.
        #[arg(long, value_name = "FILE")]
        initial: Option<PathBuf>,
        /// steps, schedule or query. Defaults to the pack's cost.
        #[arg(long)]
        cost: Option<String>,
        /// Validate every accepted plan.
        #[arg(long)]
        check: bool,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Check a plan file; exits 4 if it has violations.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_name = "FILE")]
        plan: PathBuf,
    },
    /// Apply one rewriting rule to a plan.
    Rewrite {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_name = "FILE")]
        plan: PathBuf,
        #[arg(long)]
        rule: String,
        /// Every match and every embedding, not just the first.
        #[arg(long = "all-embeddings")]
        all_embeddings: bool,
        #[command(flatten)]
        out: Outputs,
    },
    /// Convert a totally ordered action sequence to a partial-order plan.
    To2po {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long, value_name = "FILE")]
        sequence: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Max)]
        mode: ModeArg,
        /// Most plans written in `all` mode.
        #[arg(long, default_value_t = 64)]
        limit: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Sweep a pack over sizes, instances, strategies and plateau budgets.
    Bench {
        #[arg(long)]
        pack: PackKind,
        /// Comma-separated instance sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Instances per size.
        #[arg(long, alias = "seeds", default_value_t = 20)]
        instances: usize,
        #[arg(long)]
        goals: Option<usize>,
        #[arg(long)]
        sources: Option<usize>,
        /// Comma-separated; defaults to --strategy.
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
        /// Comma-separated; defaults to --plateau.
        #[arg(long, value_delimiter = ',')]
        plateaus: Vec<u64>,
        /// Record wall-clock times (the CSV is then no longer reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Run records as CSV; stdout if absent.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Per-cell means as CSV.
        #[arg(long, value_name = "FILE")]
        series: Option<PathBuf>,
    },
    /// Generate random problems for a pack.
    Gen {
        #[arg(long)]
        pack: PackKind,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        goals: Option<usize>,
        #[arg(long)]
        sources: Option<usize>,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Write `<pack>-n<size>-<i>.pbr` files here instead of stdout.
        #[arg(long = "out-dir", value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Outputs {
    /// All plans in one file; stdout if absent.
    #[arg(long, value_name = "FILE", conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    /// One `plan-<i>.pbr` file per plan.
    #[arg(long = "out-dir", value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Max,
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pbr: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Plan {
            inputs,
            initial,
            cost,
            check,
            out,
        } => cmd_plan(g, &inputs, initial.as_deref(), cost.as_deref(), check, out.as_deref()),
        Command::Validate { inputs, plan } => cmd_validate(&inputs, &plan),
        Command::Rewrite {
            inputs,
            plan,
            rule,
            all_embeddings,
            out,
        } => cmd_rewrite(&inputs, &plan, &rule, all_embeddings, &out),
        Command::To2po {
            inputs,
            sequence,
            mode,
            limit,
            out,
        } => {
            let setup = inputs.setup()?;
            let mode = match mode {
                ModeArg::Max => To2poMode::MaxProducer,
                ModeArg::All => To2poMode::AllProducers { limit },
            };
            let plans = setup.sequence_plans(&read(&sequence)?, mode)?;
            let labelled: Vec<(String, &PartialPlan)> = plans
                .iter()
                .enumerate()
                .map(|(i, p)| (format!("causal structure {}", i + 1), p))
                .collect();
            write_plans(&labelled, &out)
        }
        Command::Bench {
            pack,
            sizes,
            instances,
            goals,
            sources,
            strategies,
            plateaus,
            timing,
            jobs,
            out,
            series,
        } => {
            let mut spec = BenchSpec::new(pack, sizes, instances);
            spec.goals = goals;
            spec.sources = sources;
            spec.strategies = if strategies.is_empty() {
                vec![g.strategy.into()]
            } else {
                strategies
                    .iter()
                    .map(|s| {
                        parse_strategy(s).ok_or_else(|| anyhow!("unknown strategy `{s}` (expected first or best)"))
                    })
                    .collect::<Result<_>>()
                    .context(Status::Input)?
            };
            spec.plateaus = if plateaus.is_empty() { vec![g.plateau] } else { plateaus };
            spec.restarts = g.restarts;
            spec.max_iterations = g.max_iter;
            spec.time_limit = g.time_limit.map(Duration::from_secs_f64);
            spec.seed = g.seed;
            spec.timing = timing;
            spec.jobs = jobs;
            let report = bench::run(&spec).context(Status::Input)?;
            write_text(out.as_deref(), &report.to_csv())?;
            if let Some(path) = series {
                write_text(Some(&path), &report.series_csv())?;
            }
            eprint!("{}", report.summary_table());
            Ok(())
        }
        Command::Gen {
            pack,
            size,
            goals,
            sources,
            count,
            out_dir,
        } => {
            let p = Pack::load(pack)?;
            let mut params = GenParams::new(size);
            params.goals = goals;
            params.sources = sources;
            if let Some(dir) = &out_dir {
                fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            }
            for i in 0..count {
                let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(g.seed, size, i));
                let problem = p.generate(&params, &mut rng).context(Status::Input)?;
                let text = print_problem(&problem);
                match &out_dir {
                    Some(dir) => write_text(Some(&dir.join(format!("{pack}-n{size}-{i}.pbr"))), &text)?,
                    None => print!("{text}"),
                }
            }
            Ok(())
        }
    }
}

fn search_config(g: &Global, check: bool) -> SearchConfig {
    SearchConfig {
        strategy: g.strategy.into(),
        plateau_budget: g.plateau,
        plateau_counting: PlateauCounting::Accepted,
        restarts: g.restarts,
        max_iterations: g.max_iter,
        time_limit: g.time_limit.map(Duration::from_secs_f64),
        seed: g.seed,
        check_plans: check,
    }
}

fn cmd_plan(
    g: &Global,
    inputs: &Inputs,
    initial: Option<&Path>,
    cost: Option<&str>,
    check: bool,
    out: Option<&Path>,
) -> Result<()> {
    let setup = inputs.setup()?;
    let cost = setup.cost(cost)?;
    let given = match initial {
        Some(path) => {
            let plans = setup
                .sequence_plans(&read(path)?, To2poMode::MaxProducer)
                .map_err(|e| {
                    if e.downcast_ref::<Status>().is_some() {
                        e
                    } else {
                        e.context(Status::NoInitialPlan)
                    }
                })?;
            Some(plans.into_iter().next().expect("to2po returns at least one plan"))
        }
        None if setup.pack.is_none() => {
            return Err(
                anyhow!("domain `{}` has no plan generator; pass --initial", setup.domain.name)
                    .context(Status::NoInitialPlan),
            )
        }
        None => None,
    };
    let problem = SearchProblem {
        rules: &setup.rules,
        grounder: &setup.grounder,
        cost: cost.as_ref(),
    };
    let outcome = optimize(
        &problem,
        |_, rng| match (&given, &setup.pack) {
            (Some(plan), _) => Ok(plan.clone()),
            (None, Some(pack)) => pack.initial_plan(&setup.problem, rng).map_err(|e| e.to_string()),
            (None, None) => unreachable!("checked above"),
        },
        &search_config(g, check),
    )
    .map_err(|e| match e {
        pbr_core::search::SearchError::Initial { message, .. } => anyhow!(message).context(Status::NoInitialPlan),
        e => anyhow!(e),
    })?;
    if let Some(path) = &g.trace {
        write_text(Some(path), &trace_csv(&outcome.trace))?;
    }
    let report = outcome.best.validate();
    if !report.is_valid() {
        return Err(anyhow!("best plan fails validation:\n{report}").context(Status::Budget));
    }
    write_text(out, &print_plan(&outcome.best))?;
    eprintln!(
        "{}: {} steps, {} {} -> {} after {} iterations ({})",
        setup.problem.name,
        outcome.best.num_real_steps(),
        cost.name(),
        exact(&outcome.initial_cost),
        exact(&outcome.best_cost),
        outcome.iterations,
        outcome.stop
    );
    Ok(())
}

/// The search trace with exact costs and the running best.
fn trace_csv(trace: &SearchTrace<BigRational>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = |r: [String; 7]| w.write_record(r).expect("in-memory write");
    write(
        [
            "iteration",
            "restart",
            "rule",
            "cost_before",
            "cost_after",
            "best",
            "elapsed_ms",
        ]
        .map(String::from),
    );
    for e in &trace.events {
        write([
            e.iteration.to_string(),
            e.restart.to_string(),
            e.rule.clone(),
            exact(&e.cost_before),
            exact(&e.cost_after),
            exact(&e.best),
            e.elapsed_ms.to_string(),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
}

fn cmd_validate(inputs: &Inputs, plan: &Path) -> Result<()> {
    let setup = inputs.setup()?;
    let plan = setup.parse_plan(&read(plan)?)?;
    let report = plan.validate();
    if report.is_valid() {
        println!("valid ({} steps)", plan.num_real_steps());
        Ok(())
    } else {
        print!("{report}");
        Err(anyhow!("{} violation(s)", report.violations.len()).context(Status::Invalid))
    }
}

fn cmd_rewrite(inputs: &Inputs, plan: &Path, rule: &str, all: bool, out: &Outputs) -> Result<()> {
    let setup = inputs.setup()?;
    let plan = setup.parse_plan(&read(plan)?)?;
    let rule = setup
        .rules
        .iter()
        .find(|r| r.name.as_str().eq_ignore_ascii_case(rule))
        .ok_or_else(|| {
            let known: Vec<&str> = setup.rules.iter().map(|r| r.name.as_str()).collect();
            anyhow!("no rule `{rule}` (known: {})", known.join(", "))
        })
        .context(Status::Input)?;
    let want = if all { Want::All } else { Want::First };
    let neighbors = rewrite(&plan, rule, &setup.grounder, want, None)?;
    if neighbors.is_empty() {
        eprintln!("pbr: rule {} does not apply", rule.name);
    }
    let labelled: Vec<(String, &PartialPlan)> = neighbors.iter().map(|n| (n.describe(), &n.plan)).collect();
    write_plans(&labelled, out)
}

fn write_plans(plans: &[(String, &PartialPlan)], out: &Outputs) -> Result<()> {
    match &out.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            for (i, (label, plan)) in plans.iter().enumerate() {
                let text = format!("; {label}\n{}", print_plan(plan));
                write_text(Some(&dir.join(format!("plan-{}.pbr", i + 1))), &text)?;
            }
            Ok(())
        }
        None => {
            let text: String = plans
                .iter()
                .map(|(label, plan)| format!("; {label}\n{}", print_plan(plan)))
                .collect();
            write_text(out.out.as_deref(), &text)
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
