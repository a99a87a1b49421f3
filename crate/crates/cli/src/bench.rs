//! Sum and Cartesian-product procedures over lists of tasks, each gated by
//! a closed-form check before any timing is reported.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use ldk_core::{probe, Value};
use ldk_derivation::standard_registry;
use ldk_keywords::LazyStream;
use ldk_task::{
    blocking_await, task_async, task_unit, with_scheduler, Deterministic, Pool, Scheduler,
};
use ldk_transform::{compile, Interpreter};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    SumBaseline,
    SumLeft,
    SumRight,
    CartesianTraverse,
    CartesianComprehension,
}

impl Case {
    pub const ALL: [Case; 5] = [
        Case::SumBaseline,
        Case::SumLeft,
        Case::SumRight,
        Case::CartesianTraverse,
        Case::CartesianComprehension,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Case::SumBaseline => "sum-baseline",
            Case::SumLeft => "sum-left",
            Case::SumRight => "sum-right",
            Case::CartesianTraverse => "cartesian-traverse",
            Case::CartesianComprehension => "cartesian-comprehension",
        }
    }

    pub fn script(self) -> &'static str {
        match self {
            Case::SumBaseline => include_str!("../scripts/sum-baseline.dsl"),
            Case::SumLeft => include_str!("../scripts/sum-left.dsl"),
            Case::SumRight => include_str!("../scripts/sum-right.dsl"),
            Case::CartesianTraverse => include_str!("../scripts/cartesian-traverse.dsl"),
            Case::CartesianComprehension => include_str!("../scripts/cartesian-comprehension.dsl"),
        }
    }

    fn is_sum(self) -> bool {
        matches!(self, Case::SumBaseline | Case::SumLeft | Case::SumRight)
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Case {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Case::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Case::ALL.iter().map(|c| c.name()).collect();
                format!("unknown case `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerChoice {
    Deterministic,
    Pool(usize),
}

impl fmt::Display for SchedulerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchedulerChoice::Deterministic => f.write_str("deterministic"),
            SchedulerChoice::Pool(n) => write!(f, "pool:{n}"),
        }
    }
}

impl FromStr for SchedulerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "deterministic" {
            return Ok(SchedulerChoice::Deterministic);
        }
        match s.strip_prefix("pool:").map(str::parse::<usize>) {
            Some(Ok(n)) if n > 0 => Ok(SchedulerChoice::Pool(n)),
            _ => Err(format!(
                "unknown scheduler `{s}`; expected `deterministic` or `pool:<n>` with n > 0"
            )),
        }
    }
}

/// One emitted measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchResult {
    #[serde(rename = "case")]
    pub case_name: String,
    pub size: u64,
    pub iterations: u64,
    pub wall_time_ns: u64,
    pub ops_per_sec: f64,
    pub stack_probe_max: u64,
}

impl BenchResult {
    pub const FIELDS: [&'static str; 6] = [
        "case",
        "size",
        "iterations",
        "wall_time_ns",
        "ops_per_sec",
        "stack_probe_max",
    ];

    fn new(
        case: Case,
        size: u64,
        iterations: u64,
        wall_time_ns: u64,
        stack_probe_max: u64,
    ) -> Self {
        BenchResult {
            case_name: case.name().to_string(),
            size,
            iterations,
            wall_time_ns,
            ops_per_sec: ops_per_sec(iterations, size, wall_time_ns),
            stack_probe_max,
        }
    }
}

pub fn ops_per_sec(iterations: u64, size: u64, wall_time_ns: u64) -> f64 {
    (iterations as f64) * (size as f64) * 1e9 / (wall_time_ns.max(1) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchError {
    /// The procedure produced a result that disagrees with its oracle.
    Mismatch {
        case: Case,
        size: u64,
        expected: String,
        actual: String,
    },
    Failed {
        case: Case,
        message: String,
    },
}

impl fmt::Display for BenchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchError::Mismatch {
                case,
                size,
                expected,
                actual,
            } => {
                write!(
                    f,
                    "{case} at size {size}: expected {expected}, got {actual}"
                )
            }
            BenchError::Failed { case, message } => write!(f, "{case}: {message}"),
        }
    }
}

impl std::error::Error for BenchError {}

/// Value delivered by every input task.
pub const TASK_VALUE: i64 = 1;

pub fn expected_sum(size: u64) -> i64 {
    size as i64 * TASK_VALUE
}

/// Every cell contributes two values.
pub fn expected_cartesian_len(size: u64) -> usize {
    2 * (size as usize) * (size as usize)
}

/// A default that keeps one row near the same amount of work per size.
pub fn default_iterations(case: Case, size: u64) -> u64 {
    let work = if case.is_sum() {
        size.max(1)
    } else {
        size.max(1).pow(2)
    };
    (20_000 / work).clamp(1, 100)
}

pub struct Bench {
    case: Case,
    interp: Interpreter,
}

impl Bench {
    pub fn new(case: Case) -> Self {
        let interp = Interpreter::new(Arc::new(standard_registry()));
        let ast = compile(case.script(), true).expect("benchmark scripts compile");
        interp
            .load(&ast, None, &[])
            .expect("benchmark scripts load");
        Bench { case, interp }
    }

    /// Builds the input tasks, runs the procedure once and checks its
    /// result against the closed form.
    pub fn run_once(&self, size: u64, pooled: bool) -> Result<(), BenchError> {
        let make = |_| {
            if pooled {
                task_async(Value::Int(TASK_VALUE))
            } else {
                task_unit(Value::Int(TASK_VALUE))
            }
        };
        let fail = |e: ldk_core::DslError| BenchError::Failed {
            case: self.case,
            message: e.to_string(),
        };
        let result = if self.case.is_sum() {
            let tasks = LazyStream::from_values((0..size).map(make).collect());
            let t = self.interp.call("sum", vec![tasks]).map_err(fail)?;
            blocking_await(&t, None).map_err(fail)?
        } else {
            let rows = Value::list((0..size).map(make).collect());
            let columns = Value::list((0..size).map(make).collect());
            let t = self
                .interp
                .call("listTask", vec![rows, columns])
                .map_err(fail)?;
            blocking_await(&t, None).map_err(fail)?
        };
        verify(self.case, size, &result)
    }
}

/// Checks one procedure result against the closed form for `case`.
pub fn verify(case: Case, size: u64, result: &Value) -> Result<(), BenchError> {
    let mismatch = |expected: String, actual: String| BenchError::Mismatch {
        case,
        size,
        expected,
        actual,
    };
    if case.is_sum() {
        let expected = expected_sum(size);
        if result.as_int().ok() != Some(expected) {
            return Err(mismatch(expected.to_string(), result.to_string()));
        }
    } else {
        let items: Vec<Value> = result.sequence().map(|s| s.collect()).unwrap_or_default();
        let expected = expected_cartesian_len(size);
        let all_ones = items.iter().all(|v| v.as_int().ok() == Some(TASK_VALUE));
        if items.len() != expected || !all_ones {
            return Err(mismatch(
                format!("{expected} values equal to {TASK_VALUE}"),
                format!("{} values", items.len()),
            ));
        }
    }
    Ok(())
}

/// Runs `iterations` verified repetitions and reports their timing. No
/// row is produced when any repetition disagrees with its oracle.
pub fn run(
    case: Case,
    size: u64,
    iterations: u64,
    scheduler: SchedulerChoice,
) -> Result<BenchResult, BenchError> {
    let bench = Bench::new(case);
    match scheduler {
        SchedulerChoice::Deterministic => {
            let sched: Arc<dyn Scheduler> = Deterministic::new();
            with_scheduler(sched, || measure(&bench, size, iterations, false, || 0))
        }
        SchedulerChoice::Pool(n) => {
            let pool = Pool::new(n);
            with_scheduler(pool.scheduler(), || {
                measure(&bench, size, iterations, true, || pool.max_probe())
            })
        }
    }
}

fn measure(
    bench: &Bench,
    size: u64,
    iterations: u64,
    pooled: bool,
    worker_probe: impl Fn() -> usize,
) -> Result<BenchResult, BenchError> {
    probe::reset();
    let start = Instant::now();
    for _ in 0..iterations.max(1) {
        bench.run_once(size, pooled)?;
    }
    let elapsed = start.elapsed().as_nanos().min(u64::MAX as u128) as u64;
    let depth = probe::max_depth()
        .saturating_sub(probe::current_depth())
        .max(worker_probe());
    Ok(BenchResult::new(
        bench.case,
        size,
        iterations.max(1),
        elapsed,
        depth as u64,
    ))
}

pub fn to_json(rows: &[BenchResult]) -> String {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize"))
        .collect();
    lines.join("\n")
}

pub fn to_csv(rows: &[BenchResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}
