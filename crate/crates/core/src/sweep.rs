//! Batch execution of a sweep, raw per-run CSV and the aggregated table.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{SweepPoint, SweepSpec};
use crate::pedestrian::ObservationMode;
use crate::scenario::{Density, ValidationError};
use crate::stats::RunningStats;
use crate::traffic::Demand;
use crate::world::run;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("run failed at point {point} seed {seed}: {source}")]
    Run {
        point: usize,
        seed: u64,
        #[source]
        source: ValidationError,
    },
    #[error("invalid sweep: {0}")]
    Invalid(#[from] ValidationError),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("raw csv line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("mode {0} is not in the table")]
    MissingMode(ObservationMode),
}

/// Outcome of one (point, seed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub point: SweepPoint,
    pub seed: u64,
    pub pedestrians: u64,
    pub crossed: u64,
    pub completed: u64,
    pub censored: u64,
    pub collisions: u64,
    pub wait: RunningStats,
    pub min_ttc: RunningStats,
    pub head_turns: RunningStats,
    pub time_waiting: RunningStats,
    pub vehicles_spawned: u64,
}

/// Per-run results plus optional JSON-lines traces, in (point, seed) order.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub records: Vec<RunRecord>,
    pub traces: Vec<Option<Vec<String>>>,
    pub table: SummaryTable,
}

/// Runs every (point, seed) pair on a pool of `jobs` threads (0 picks the
/// number of cores). Results do not depend on `jobs`.
pub fn run_sweep(spec: &SweepSpec, jobs: usize, trace: bool) -> Result<SweepOutput, SweepError> {
    spec.validate()?;
    let tasks: Vec<(SweepPoint, u64)> = spec
        .points()
        .into_iter()
        .flat_map(|p| spec.seeds.iter().map(move |&s| (p.clone(), s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let results: Vec<Result<(RunRecord, Option<Vec<String>>), SweepError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|(point, seed)| {
                let scenario = point.apply(&spec.base, *seed);
                let out = run(&scenario, trace).map_err(|source| SweepError::Run {
                    point: point.index,
                    seed: *seed,
                    source,
                })?;
                let s = out.metrics.summary();
                let record = RunRecord {
                    point: point.clone(),
                    seed: *seed,
                    pedestrians: s.pedestrians,
                    crossed: s.crossed,
                    completed: s.completed,
                    censored: s.censored,
                    collisions: s.collisions,
                    wait: s.wait,
                    min_ttc: s.min_ttc,
                    head_turns: s.head_turns,
                    time_waiting: s.total_wait,
                    vehicles_spawned: out.metrics.vehicles_spawned,
                };
                Ok((record, out.trace))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        let (rec, tr) = r?;
        records.push(rec);
        traces.push(tr);
    }
    let table = SummaryTable::from_records(&records);
    Ok(SweepOutput { records, traces, table })
}

const HEADER: [&str; 30] = [
    "point",
    "density",
    "demand",
    "demand_value",
    "mode",
    "sensing_range_m",
    "noise_sigma",
    "monitor_while_crossing",
    "seed",
    "pedestrians",
    "crossed",
    "completed",
    "censored",
    "collisions",
    "vehicles_spawned",
    "wait_n",
    "wait_mean_s",
    "wait_m2",
    "min_ttc_n",
    "min_ttc_mean_s",
    "min_ttc_m2",
    "head_turns_n",
    "head_turns_mean",
    "head_turns_m2",
    "time_waiting_n",
    "time_waiting_mean_s",
    "time_waiting_m2",
    "wait_std_s",
    "min_ttc_std_s",
    "head_turns_std",
];

fn stats_fields(s: &RunningStats) -> [String; 3] {
    [s.n.to_string(), format!("{}", s.mean), format!("{}", s.m2)]
}

/// Writes one row per run. Floats use the shortest representation that
/// reads back to the same value, so the file fully determines the table.
pub fn write_raw_csv<W: Write>(records: &[RunRecord], out: W) -> Result<(), SweepError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        let p = &r.point;
        let (kind, value) = match p.density.demand {
            Demand::Headway(h) => ("headway_s", h),
            Demand::Flow(q) => ("flow_vph", q),
        };
        let mut row: Vec<String> = vec![
            p.index.to_string(),
            p.density.label.clone(),
            kind.to_string(),
            format!("{value}"),
            p.mode.to_string(),
            format!("{}", p.sensing_range_m),
            format!("{}", p.noise_sigma),
            p.monitor_while_crossing.to_string(),
            r.seed.to_string(),
            r.pedestrians.to_string(),
            r.crossed.to_string(),
            r.completed.to_string(),
            r.censored.to_string(),
            r.collisions.to_string(),
            r.vehicles_spawned.to_string(),
        ];
        for s in [&r.wait, &r.min_ttc, &r.head_turns, &r.time_waiting] {
            row.extend(stats_fields(s));
        }
        for s in [&r.wait, &r.min_ttc, &r.head_turns] {
            row.push(format!("{}", s.std()));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_raw_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, SweepError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(SweepError::Parse { line: 1, msg: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |what: &str| SweepError::Parse { line, msg: format!("bad {what}") };
        let f = |i: usize| -> Result<f64, SweepError> { row[i].parse::<f64>().map_err(|_| bad(HEADER[i])) };
        let u = |i: usize| -> Result<u64, SweepError> { row[i].parse::<u64>().map_err(|_| bad(HEADER[i])) };
        let stats = |i: usize| -> Result<RunningStats, SweepError> {
            Ok(RunningStats { n: u(i)?, mean: f(i + 1)?, m2: f(i + 2)? })
        };
        if row.len() != HEADER.len() {
            return Err(bad("field count"));
        }
        let demand = match &row[2] {
            "headway_s" => Demand::Headway(f(3)?),
            "flow_vph" => Demand::Flow(f(3)?),
            _ => return Err(bad("demand")),
        };
        let point = SweepPoint {
            index: u(0)? as usize,
            density: Density { label: row[1].to_string(), demand },
            mode: row[4].parse().map_err(|_| bad("mode"))?,
            sensing_range_m: f(5)?,
            noise_sigma: f(6)?,
            monitor_while_crossing: row[7].parse().map_err(|_| bad("monitor_while_crossing"))?,
        };
        out.push(RunRecord {
            point,
            seed: u(8)?,
            pedestrians: u(9)?,
            crossed: u(10)?,
            completed: u(11)?,
            censored: u(12)?,
            collisions: u(13)?,
            vehicles_spawned: u(14)?,
            wait: stats(15)?,
            min_ttc: stats(18)?,
            head_turns: stats(21)?,
            time_waiting: stats(24)?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Per pedestrian, pooled over seeds.
    Wait,
    /// Per pedestrian, pooled over seeds.
    MinTtc,
    /// Per completed crossing, pooled over seeds.
    HeadTurns,
    /// Per run.
    Collisions,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Wait, Metric::MinTtc, Metric::Collisions, Metric::HeadTurns];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Wait => "wait_s",
            Metric::MinTtc => "min_ttc_s",
            Metric::HeadTurns => "head_turns",
            Metric::Collisions => "collisions",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub point: SweepPoint,
    pub runs: u64,
    pub wait: RunningStats,
    pub min_ttc: RunningStats,
    pub head_turns: RunningStats,
    pub collisions: RunningStats,
    pub censored: u64,
}

impl SummaryRow {
    pub fn stat(&self, m: Metric) -> &RunningStats {
        match m {
            Metric::Wait => &self.wait,
            Metric::MinTtc => &self.min_ttc,
            Metric::HeadTurns => &self.head_turns,
            Metric::Collisions => &self.collisions,
        }
    }
}

/// One row per sweep point with "mean (std)" cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

/// Population standard deviation, one decimal.
pub fn cell(s: &RunningStats) -> String {
    if s.n == 0 {
        "n/a".to_string()
    } else {
        format!("{:.1} ({:.1})", s.mean(), s.std())
    }
}

impl SummaryTable {
    /// Merges runs per point in the order they appear.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut rows: Vec<SummaryRow> = Vec::new();
        for r in records {
            let pos = match rows.iter().position(|row| row.point.index == r.point.index) {
                Some(i) => i,
                None => {
                    rows.push(SummaryRow {
                        point: r.point.clone(),
                        runs: 0,
                        wait: RunningStats::default(),
                        min_ttc: RunningStats::default(),
                        head_turns: RunningStats::default(),
                        collisions: RunningStats::default(),
                        censored: 0,
                    });
                    rows.len() - 1
                }
            };
            let row = &mut rows[pos];
            row.runs += 1;
            row.wait.merge(&r.wait);
            row.min_ttc.merge(&r.min_ttc);
            row.head_turns.merge(&r.head_turns);
            row.collisions.push(r.collisions as f64);
            row.censored += r.censored;
        }
        Self { rows }
    }

    pub fn cell_count(&self) -> usize {
        self.rows.len() * Metric::ALL.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), SweepError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["point", "density", "mode", "sensing_range_m", "noise_sigma", "monitor_while_crossing", "runs"];
        header.extend(Metric::ALL.iter().map(|m| m.name()));
        header.push("censored");
        w.write_record(&header)?;
        for r in &self.rows {
            let p = &r.point;
            let mut row = vec![
                p.index.to_string(),
                p.density.label.clone(),
                p.mode.to_string(),
                format!("{}", p.sensing_range_m),
                format!("{}", p.noise_sigma),
                p.monitor_while_crossing.to_string(),
                r.runs.to_string(),
            ];
            row.extend(Metric::ALL.iter().map(|m| cell(r.stat(*m))));
            row.push(r.censored.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Aligned text table grouped into one block per noise level.
    pub fn render(&self) -> String {
        let mut o = String::new();
        o.push_str("# cells: mean (population std); wait, min TTC and head turns per pedestrian, collisions per run\n");
        let mut noise_levels: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !noise_levels.contains(&r.point.noise_sigma) {
                noise_levels.push(r.point.noise_sigma);
            }
        }
        for noise in noise_levels {
            let _ = writeln!(o, "\nnoise_sigma = {noise}");
            let _ = writeln!(
                o,
                "{:<10} {:<8} {:>7} {:>7} {:>14} {:>14} {:>12} {:>12}",
                "density", "mode", "range_m", "monitor", "wait_s", "min_ttc_s", "collisions", "head_turns"
            );
            for r in self.rows.iter().filter(|r| r.point.noise_sigma == noise) {
                let p = &r.point;
                let _ = writeln!(
                    o,
                    "{:<10} {:<8} {:>7} {:>7} {:>14} {:>14} {:>12} {:>12}",
                    p.density.label,
                    p.mode.as_str(),
                    p.sensing_range_m,
                    if p.monitor_while_crossing { "on" } else { "off" },
                    cell(&r.wait),
                    cell(&r.min_ttc),
                    cell(&r.collisions),
                    cell(&r.head_turns),
                );
            }
        }
        o
    }
}

/// Signed difference of one metric between two modes at matching points.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDiff {
    pub density: String,
    pub sensing_range_m: f64,
    pub noise_sigma: f64,
    pub monitor_while_crossing: bool,
    pub diff: f64,
}

/// mean(metric | a) - mean(metric | b) for every point of `a` that has a
/// counterpart under `b` with all other axes equal.
pub fn compare_modes(
    table: &SummaryTable,
    metric: Metric,
    a: ObservationMode,
    b: ObservationMode,
) -> Result<Vec<ModeDiff>, SweepError> {
    for m in [a, b] {
        if !table.rows.iter().any(|r| r.point.mode == m) {
            return Err(SweepError::MissingMode(m));
        }
    }
    let same = |x: &SweepPoint, y: &SweepPoint| {
        x.density == y.density
            && x.sensing_range_m == y.sensing_range_m
            && x.noise_sigma == y.noise_sigma
            && x.monitor_while_crossing == y.monitor_while_crossing
    };
    Ok(table
        .rows
        .iter()
        .filter(|r| r.point.mode == a)
        .filter_map(|ra| {
            let rb = table.rows.iter().find(|r| r.point.mode == b && same(&r.point, &ra.point))?;
            Some(ModeDiff {
                density: ra.point.density.label.clone(),
                sensing_range_m: ra.point.sensing_range_m,
                noise_sigma: ra.point.noise_sigma,
                monitor_while_crossing: ra.point.monitor_while_crossing,
                diff: ra.stat(metric).mean() - rb.stat(metric).mean(),
            })
        })
        .collect())
}
