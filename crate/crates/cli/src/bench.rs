//! Experiment sweeps: generate seeded instances of a pack, optimize each
//! under every strategy and plateau budget, and report one [`RunRecord`]
//! per run plus per-cell means.
//!
//! Everything except `elapsed_ms` is a function of the spec, so two runs
//! with the same spec produce the same CSV byte for byte. Elapsed times are
//! only written when [`BenchSpec::timing`] is set.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use pbr_core::model::ProblemSpec;
use pbr_core::search::{optimize, PlateauCounting, SearchConfig, SearchProblem, Strategy};
use pbr_domains::{GenParams, Pack, PackError, PackKind};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::format::{exact, mean, rounded};

#[derive(Clone, Debug)]
pub struct BenchSpec {
    pub pack: PackKind,
    pub sizes: Vec<usize>,
    /// Instances per size.
    pub instances: usize,
    pub goals: Option<usize>,
    pub sources: Option<usize>,
    pub strategies: Vec<Strategy>,
    pub plateaus: Vec<u64>,
    pub restarts: u32,
    pub max_iterations: u64,
    pub time_limit: Option<Duration>,
    pub seed: u64,
    pub timing: bool,
    /// Worker threads; cells are independent.
    pub jobs: usize,
}

impl BenchSpec {
    pub fn new(pack: PackKind, sizes: Vec<usize>, instances: usize) -> Self {
        BenchSpec {
            pack,
            sizes,
            instances,
            goals: None,
            sources: None,
            strategies: vec![Strategy::FirstImprovement],
            plateaus: vec![0],
            restarts: 1,
            max_iterations: SearchConfig::default().max_iterations,
            time_limit: None,
            seed: 0,
            timing: false,
            jobs: 1,
        }
    }
}

pub fn strategy_name(s: Strategy) -> &'static str {
    match s {
        Strategy::FirstImprovement => "first",
        Strategy::BestImprovement => "best",
    }
}

pub fn parse_strategy(s: &str) -> Option<Strategy> {
    match s {
        "first" => Some(Strategy::FirstImprovement),
        "best" => Some(Strategy::BestImprovement),
        _ => None,
    }
}

/// Seed of instance `index` at `size`, independent of the other sizes and
/// instance counts in the sweep.
pub fn instance_seed(master: u64, size: usize, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(size as u64);
    rng.set_word_pos(2 * index as u128);
    rand_chacha::rand_core::RngCore::next_u64(&mut rng)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRecord {
    pub pack: PackKind,
    pub size: usize,
    pub instance: String,
    pub seed: u64,
    pub strategy: Strategy,
    pub plateau: u64,
    pub restarts: u32,
    pub initial_cost: Option<BigRational>,
    pub final_cost: Option<BigRational>,
    pub iterations: u64,
    /// Accepted rewrites over all restarts.
    pub rewrites: u64,
    pub elapsed_ms: Option<u128>,
    /// The stop reason, or `error: ...` for a failed run.
    pub status: String,
}

impl RunRecord {
    pub const HEADER: [&'static str; 13] = [
        "pack",
        "size",
        "instance",
        "seed",
        "strategy",
        "plateau",
        "restarts",
        "initial_cost",
        "final_cost",
        "iterations",
        "rewrites",
        "elapsed_ms",
        "status",
    ];

    fn fields(&self) -> [String; 13] {
        let cost = |c: &Option<BigRational>| c.as_ref().map(exact).unwrap_or_default();
        [
            self.pack.to_string(),
            self.size.to_string(),
            self.instance.clone(),
            self.seed.to_string(),
            strategy_name(self.strategy).to_string(),
            self.plateau.to_string(),
            self.restarts.to_string(),
            cost(&self.initial_cost),
            cost(&self.final_cost),
            self.iterations.to_string(),
            self.rewrites.to_string(),
            self.elapsed_ms.map(|t| t.to_string()).unwrap_or_default(),
            self.status.clone(),
        ]
    }

    pub fn is_ok(&self) -> bool {
        self.final_cost.is_some()
    }
}

/// Means over the successful runs of one (size, strategy, plateau) cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSummary {
    pub size: usize,
    pub strategy: Strategy,
    pub plateau: u64,
    pub runs: usize,
    pub failures: usize,
    pub mean_initial: Option<BigRational>,
    pub mean_final: Option<BigRational>,
    pub mean_ms: Option<BigRational>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub records: Vec<RunRecord>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(RunRecord::HEADER).expect("in-memory write");
        for r in &self.records {
            w.write_record(r.fields()).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
    }

    pub fn summary(&self) -> Vec<CellSummary> {
        let mut cells: BTreeMap<(usize, u8, u64), Vec<&RunRecord>> = BTreeMap::new();
        for r in &self.records {
            let s = match r.strategy {
                Strategy::FirstImprovement => 0,
                Strategy::BestImprovement => 1,
            };
            cells.entry((r.size, s, r.plateau)).or_default().push(r);
        }
        cells
            .into_values()
            .map(|rs| {
                let ok: Vec<&&RunRecord> = rs.iter().filter(|r| r.is_ok()).collect();
                let initial: Vec<BigRational> = ok.iter().filter_map(|r| r.initial_cost.clone()).collect();
                let fin: Vec<BigRational> = ok.iter().filter_map(|r| r.final_cost.clone()).collect();
                let ms: Vec<BigRational> = ok
                    .iter()
                    .filter_map(|r| r.elapsed_ms.map(|t| BigRational::from_integer(t.into())))
                    .collect();
                CellSummary {
                    size: rs[0].size,
                    strategy: rs[0].strategy,
                    plateau: rs[0].plateau,
                    runs: rs.len(),
                    failures: rs.len() - ok.len(),
                    mean_initial: mean(&initial),
                    mean_final: mean(&fin),
                    mean_ms: mean(&ms),
                }
            })
            .collect()
    }

    /// Aligned text table of [`BenchReport::summary`].
    pub fn summary_table(&self) -> String {
        let dash = || "-".to_string();
        let mut rows = vec![[
            "size",
            "strategy",
            "plateau",
            "runs",
            "failed",
            "mean initial",
            "mean final",
            "mean ms",
        ]
        .map(String::from)];
        for c in self.summary() {
            let r3 = |v: &Option<BigRational>| v.as_ref().map_or_else(dash, |v| rounded(v, 3));
            rows.push([
                c.size.to_string(),
                strategy_name(c.strategy).to_string(),
                c.plateau.to_string(),
                c.runs.to_string(),
                c.failures.to_string(),
                r3(&c.mean_initial),
                r3(&c.mean_final),
                c.mean_ms.as_ref().map_or_else(dash, |v| rounded(v, 1)),
            ]);
        }
        let widths: Vec<usize> = (0..8)
            .map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }

    /// Plot-ready series, one row per cell, means rounded to 3 decimals.
    pub fn series_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "pack",
            "size",
            "strategy",
            "plateau",
            "runs",
            "failures",
            "mean_initial_cost",
            "mean_final_cost",
            "mean_elapsed_ms",
        ])
        .expect("in-memory write");
        let pack = self.records.first().map(|r| r.pack.to_string()).unwrap_or_default();
        for c in self.summary() {
            let r3 = |v: &Option<BigRational>| v.as_ref().map(|v| rounded(v, 3)).unwrap_or_default();
            w.write_record([
                pack.clone(),
                c.size.to_string(),
                strategy_name(c.strategy).to_string(),
                c.plateau.to_string(),
                c.runs.to_string(),
                c.failures.to_string(),
                r3(&c.mean_initial),
                r3(&c.mean_final),
                r3(&c.mean_ms),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("fields are UTF-8")
    }
}

struct Cell<'a> {
    size: usize,
    instance: String,
    seed: u64,
    problem: &'a Result<ProblemSpec, PackError>,
    strategy: Strategy,
    plateau: u64,
}

/// Runs the sweep. Cells are ordered by size, instance, strategy, plateau;
/// a failed instance or run becomes an error row and the sweep continues.
pub fn run(spec: &BenchSpec) -> Result<BenchReport, PackError> {
    let pack = Pack::load(spec.pack)?;
    let mut instances = Vec::new();
    for &size in &spec.sizes {
        for index in 0..spec.instances {
            let seed = instance_seed(spec.seed, size, index);
            let mut params = GenParams::new(size);
            params.goals = spec.goals;
            params.sources = spec.sources;
            let problem = pack.generate(&params, &mut ChaCha8Rng::seed_from_u64(seed));
            instances.push((size, format!("n{size}-{index}"), seed, problem));
        }
    }
    let mut cells = Vec::new();
    for (size, instance, seed, problem) in &instances {
        for &strategy in &spec.strategies {
            for &plateau in &spec.plateaus {
                cells.push(Cell {
                    size: *size,
                    instance: instance.clone(),
                    seed: *seed,
                    problem,
                    strategy,
                    plateau,
                });
            }
        }
    }

    let results: Mutex<Vec<Option<RunRecord>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(cell) = cells.get(i) else { break };
        let record = run_cell(&pack, spec, cell);
        results.lock().expect("no worker panicked")[i] = Some(record);
    };
    std::thread::scope(|s| {
        for _ in 0..spec.jobs.max(1) {
            s.spawn(work);
        }
    });
    let records = results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every cell ran"))
        .collect();
    Ok(BenchReport { records })
}

fn run_cell(pack: &Pack, spec: &BenchSpec, cell: &Cell<'_>) -> RunRecord {
    let mut record = RunRecord {
        pack: spec.pack,
        size: cell.size,
        instance: cell.instance.clone(),
        seed: cell.seed,
        strategy: cell.strategy,
        plateau: cell.plateau,
        restarts: spec.restarts,
        initial_cost: None,
        final_cost: None,
        iterations: 0,
        rewrites: 0,
        elapsed_ms: None,
        status: String::new(),
    };
    let problem = match cell.problem {
        Ok(p) => p,
        Err(e) => {
            record.status = format!("error: {e}");
            return record;
        }
    };
    let cost = match pack.cost::<BigRational>(problem) {
        Ok(c) => c,
        Err(e) => {
            record.status = format!("error: {e}");
            return record;
        }
    };
    let grounder = pack.grounder(problem);
    let search = SearchProblem {
        rules: pack.rules(),
        grounder: &grounder,
        cost: cost.as_ref(),
    };
    let config = SearchConfig {
        strategy: cell.strategy,
        plateau_budget: cell.plateau,
        plateau_counting: PlateauCounting::Accepted,
        restarts: spec.restarts,
        max_iterations: spec.max_iterations,
        time_limit: spec.time_limit,
        seed: cell.seed,
        check_plans: false,
    };
    let start = Instant::now();
    let outcome = optimize(&search, |_, rng| pack.initial_plan(problem, rng), &config);
    let elapsed = start.elapsed().as_millis();
    if spec.timing {
        record.elapsed_ms = Some(elapsed);
    }
    match outcome {
        Ok(out) => {
            let report = out.best.validate();
            record.iterations = out.iterations;
            record.rewrites = out.trace.events.iter().filter(|e| e.rule != "initial").count() as u64;
            record.initial_cost = Some(out.initial_cost);
            if report.is_valid() {
                record.final_cost = Some(out.best_cost);
                record.status = out.stop.to_string();
            } else {
                record.status = format!("error: best plan is invalid: {report}");
            }
        }
        Err(e) => record.status = format!("error: {e}"),
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(instance_seed(0, 3, 1), instance_seed(0, 3, 1));
        assert_ne!(instance_seed(0, 3, 1), instance_seed(0, 3, 2));
        assert_ne!(instance_seed(0, 3, 1), instance_seed(0, 4, 1));
        assert_ne!(instance_seed(0, 3, 1), instance_seed(1, 3, 1));
    }

    #[test]
    fn one_instance_one_row() {
        let report = run(&BenchSpec::new(PackKind::Blocks, vec![4], 1)).unwrap();
        assert_eq!(report.records.len(), 1);
        let r = &report.records[0];
        assert!(r.is_ok(), "{}", r.status);
        assert!(r.final_cost <= r.initial_cost);
        assert_eq!(report.to_csv().lines().count(), 2);
    }

    #[test]
    fn bad_size_is_an_error_row() {
        let report = run(&BenchSpec::new(PackKind::Manufacturing, vec![0, 2], 1)).unwrap();
        assert_eq!(report.records.len(), 2);
        assert!(report.records[0].status.starts_with("error"));
        assert!(report.records[1].is_ok(), "{}", report.records[1].status);
        let s = report.summary();
        assert_eq!((s[0].runs, s[0].failures), (1, 1));
        assert_eq!(s[0].mean_final, None);
    }

    #[test]
    fn jobs_do_not_change_the_csv() {
        let mut spec = BenchSpec::new(PackKind::Logistics, vec![2, 3], 3);
        spec.strategies = vec![Strategy::FirstImprovement, Strategy::BestImprovement];
        let one = run(&spec).unwrap().to_csv();
        spec.jobs = 4;
        assert_eq!(run(&spec).unwrap().to_csv(), one);
    }
}
