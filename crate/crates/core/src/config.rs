//! Plain-text experiment configuration.
//!
//! ```text
//! [run]
//! steps = 500
//! seeds = 1..5
//!
//! [road]
//! kind = straight
//! length_m = 270
//!
//! [perception]
//! sensing_range_m = 10, 20, 30
//! ```
//!
//! Sections hold `key = value` pairs, lists are comma separated and `#`
//! starts a comment. Physical quantities carry their unit in the key name.
//! A handful of keys accept several values and become sweep axes.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::pedestrian::ObservationMode;
use crate::road::RoadKind;
use crate::scenario::{Density, Scenario, ValidationError};
use crate::traffic::Demand;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown section [{section}]")]
    UnknownSection { line: usize, section: String },
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: unit violation: {msg}")]
    Unit { line: usize, key: String, msg: String },
    #[error("line {line}: `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error(transparent)]
    Invalid(#[from] ValidationError),
}

/// Base scenario plus the values swept on each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Scenario holding every non-swept parameter. Swept fields mirror the
    /// first value of their axis.
    pub base: Scenario,
    pub seeds: Vec<u64>,
    pub densities: Vec<Density>,
    pub modes: Vec<ObservationMode>,
    pub sensing_ranges_m: Vec<f64>,
    pub noise_sigmas: Vec<f64>,
    pub monitor_while_crossing: Vec<bool>,
}

/// One combination of swept values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub density: Density,
    pub mode: ObservationMode,
    pub sensing_range_m: f64,
    pub noise_sigma: f64,
    pub monitor_while_crossing: bool,
}

impl SweepPoint {
    pub fn apply(&self, base: &Scenario, seed: u64) -> Scenario {
        let mut s = base.clone();
        s.seed = seed;
        s.traffic.density = self.density.clone();
        s.perception.mode = self.mode;
        s.perception.sensing_range_m = self.sensing_range_m;
        s.perception.noise_sigma = self.noise_sigma;
        s.pedestrians.monitor_while_crossing = self.monitor_while_crossing;
        s
    }
}

impl SweepSpec {
    /// A spec with no swept axes.
    pub fn single(base: Scenario, seeds: Vec<u64>) -> Self {
        Self {
            densities: vec![base.traffic.density.clone()],
            modes: vec![base.perception.mode],
            sensing_ranges_m: vec![base.perception.sensing_range_m],
            noise_sigmas: vec![base.perception.noise_sigma],
            monitor_while_crossing: vec![base.pedestrians.monitor_while_crossing],
            base,
            seeds,
        }
    }

    /// Points in a fixed order: noise, mode, density, range, monitoring,
    /// the last varying fastest.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &noise_sigma in &self.noise_sigmas {
            for &mode in &self.modes {
                for density in &self.densities {
                    for &sensing_range_m in &self.sensing_ranges_m {
                        for &monitor_while_crossing in &self.monitor_while_crossing {
                            out.push(SweepPoint {
                                index: out.len(),
                                density: density.clone(),
                                mode,
                                sensing_range_m,
                                noise_sigma,
                                monitor_while_crossing,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn run_count(&self) -> usize {
        self.points().len() * self.seeds.len()
    }

    /// Replaces the seed list, keeping the base scenario in step.
    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        if let Some(&s) = seeds.first() {
            self.base.seed = s;
        }
        self.seeds = seeds;
        self
    }

    /// Checks the axes and every point's scenario.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut errs = Vec::new();
        if self.seeds.is_empty() {
            errs.push("at least one seed is required".to_string());
        }
        let distinct: HashSet<u64> = self.seeds.iter().copied().collect();
        if distinct.len() != self.seeds.len() {
            errs.push("seeds must be distinct".into());
        }
        for (name, empty) in [
            ("traffic.density", self.densities.is_empty()),
            ("perception.mode", self.modes.is_empty()),
            ("perception.sensing_range_m", self.sensing_ranges_m.is_empty()),
            ("perception.noise_sigma", self.noise_sigmas.is_empty()),
            ("pedestrians.monitor_while_crossing", self.monitor_while_crossing.is_empty()),
        ] {
            if empty {
                errs.push(format!("{name} needs at least one value"));
            }
        }
        let mut labels = HashSet::new();
        for d in &self.densities {
            if d.label.is_empty() || d.label.contains([',', '=', '#', '\n', '[', ']']) || d.label.trim() != d.label {
                errs.push(format!("density label `{}` is not a plain word", d.label));
            }
            if !labels.insert(d.label.as_str()) {
                errs.push(format!("density label `{}` used twice", d.label));
            }
        }
        let headway = self.densities.iter().filter(|d| matches!(d.demand, Demand::Headway(_))).count();
        if headway != 0 && headway != self.densities.len() {
            errs.push("densities must all use headway_s or all use flow_vph".into());
        }
        let seed = self.seeds.first().copied().unwrap_or(self.base.seed);
        for p in self.points() {
            if let Err(e) = p.apply(&self.base, seed).validate() {
                for m in e.0 {
                    if !errs.contains(&m) {
                        errs.push(m);
                    }
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(errs))
        }
    }

    /// Writes the sweep back in config syntax; parsing the result yields an
    /// identical spec.
    pub fn to_config(&self) -> String {
        let b = &self.base;
        let mut o = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(o, "[run]");
        let _ = writeln!(o, "dt_s = {}", b.dt_s);
        let _ = writeln!(o, "steps = {}", b.steps);
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        let _ = writeln!(o, "seeds = {}", seeds.join(", "));

        let _ = writeln!(o, "\n[road]");
        match b.road.kind {
            RoadKind::Straight { length_m } => {
                let _ = writeln!(o, "kind = straight\nlength_m = {length_m}");
            }
            RoadKind::Intersection { arm_length_m } => {
                let _ = writeln!(o, "kind = intersection\narm_length_m = {arm_length_m}");
            }
        }
        let _ = writeln!(o, "lanes_per_direction = {}", b.road.lanes_per_direction);
        let _ = writeln!(o, "lane_width_m = {}", b.road.lane_width_m);
        let _ = writeln!(o, "speed_limit_mps = {}", b.road.speed_limit_mps);
        let _ = writeln!(o, "crossing_offsets_m = {}", list(&b.road.crossing_offsets_m));

        let t = &b.traffic;
        let _ = writeln!(o, "\n[traffic]");
        let labels: Vec<&str> = self.densities.iter().map(|d| d.label.as_str()).collect();
        let _ = writeln!(o, "density = {}", labels.join(", "));
        let values: Vec<f64> = self
            .densities
            .iter()
            .map(|d| match d.demand {
                Demand::Headway(h) => h,
                Demand::Flow(q) => q,
            })
            .collect();
        let key = match self.densities.first().map(|d| d.demand) {
            Some(Demand::Flow(_)) => "flow_vph",
            _ => "headway_s",
        };
        let _ = writeln!(o, "{key} = {}", list(&values));
        let _ = writeln!(o, "vehicle_length_m = {}", t.vehicle.length);
        let _ = writeln!(o, "vehicle_width_m = {}", t.vehicle.width);
        let _ = writeln!(o, "speed_spread = {}", t.vehicle.speed_spread);
        let _ = writeln!(o, "accel_mps2 = {}", t.following.max_accel);
        let _ = writeln!(o, "brake_mps2 = {}", t.following.max_brake);
        let _ = writeln!(o, "safe_headway_s = {}", t.following.safe_headway);
        let _ = writeln!(o, "min_gap_m = {}", t.following.min_gap);
        let _ = writeln!(o, "min_spawn_gap_m = {}", t.min_spawn_gap_m);
        let _ = writeln!(o, "yield_to_pedestrians = {}", t.yield_to_pedestrians);

        let p = &b.perception;
        let _ = writeln!(o, "\n[perception]");
        let modes: Vec<&str> = self.modes.iter().map(|m| m.as_str()).collect();
        let _ = writeln!(o, "mode = {}", modes.join(", "));
        let _ = writeln!(o, "sensing_range_m = {}", list(&self.sensing_ranges_m));
        let _ = writeln!(o, "extents_deg = {}", list(&p.extents_deg));
        let _ = writeln!(o, "range_ratios = {}", list(&p.range_ratios));
        let _ = writeln!(o, "noise_sigma = {}", list(&self.noise_sigmas));

        let q = &b.pedestrians;
        let _ = writeln!(o, "\n[pedestrians]");
        let _ = writeln!(o, "count = {}", q.count);
        let _ = writeln!(o, "first_spawn_s = {}", q.first_spawn_s);
        let _ = writeln!(o, "spawn_interval_s = {}", q.spawn_interval_s);
        let _ = writeln!(o, "approach_m = {}", q.approach_m);
        let _ = writeln!(o, "walk_speed_mps = {}", q.walk_speed_mps);
        let _ = writeln!(o, "gap_aggressive_s = {}", q.gaps.aggressive);
        let _ = writeln!(o, "gap_average_s = {}", q.gaps.average);
        let _ = writeln!(o, "gap_conservative_s = {}", q.gaps.conservative);
        let _ = writeln!(o, "trait_weights = {}", list(&q.trait_weights));
        let mon: Vec<String> = self.monitor_while_crossing.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(o, "monitor_while_crossing = {}", mon.join(", "));
        o
    }
}

const SECTIONS: [&str; 5] = ["run", "road", "traffic", "perception", "pedestrians"];
const REQUIRED: [&str; 2] = ["run", "road"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "run" => &["dt_s", "steps", "seeds"],
        "road" => &[
            "kind",
            "length_m",
            "arm_length_m",
            "lanes_per_direction",
            "lane_width_m",
            "speed_limit_mps",
            "crossing_offsets_m",
        ],
        "traffic" => &[
            "density",
            "headway_s",
            "flow_vph",
            "vehicle_length_m",
            "vehicle_width_m",
            "speed_spread",
            "accel_mps2",
            "brake_mps2",
            "safe_headway_s",
            "min_gap_m",
            "min_spawn_gap_m",
            "yield_to_pedestrians",
        ],
        "perception" => &["mode", "sensing_range_m", "extents_deg", "range_ratios", "noise_sigma"],
        "pedestrians" => &[
            "count",
            "first_spawn_s",
            "spawn_interval_s",
            "approach_m",
            "walk_speed_mps",
            "gap_aggressive_s",
            "gap_average_s",
            "gap_conservative_s",
            "trait_weights",
            "monitor_while_crossing",
        ],
        _ => &[],
    }
}

const UNITS: [&str; 6] = ["m", "s", "deg", "mps", "mps2", "vph"];

fn strip_unit(key: &str) -> &str {
    match key.rsplit_once('_') {
        Some((stem, unit)) if UNITS.contains(&unit) || is_foreign_unit(unit) => stem,
        _ => key,
    }
}

fn is_foreign_unit(u: &str) -> bool {
    matches!(u, "km" | "cm" | "mm" | "ft" | "ms" | "min" | "h" | "kmh" | "kph" | "mph" | "rad" | "vps")
}

/// A value as written, with its location.
struct Entry<'a> {
    line: usize,
    path: String,
    raw: &'a str,
}

impl Entry<'_> {
    fn err(&self, msg: impl Into<String>) -> ConfigError {
        ConfigError::Value { line: self.line, key: self.path.clone(), msg: msg.into() }
    }

    fn items(&self) -> Vec<&str> {
        self.raw.split(',').map(str::trim).collect()
    }

    fn single(&self) -> Result<&str, ConfigError> {
        let items = self.items();
        if items.len() != 1 {
            return Err(self.err("expects a single value"));
        }
        if items[0].is_empty() {
            return Err(self.err("empty value"));
        }
        Ok(items[0])
    }

    fn number_from(&self, s: &str) -> Result<f64, ConfigError> {
        if let Ok(v) = s.parse::<f64>() {
            if v.is_finite() {
                return Ok(v);
            }
            return Err(self.err(format!("`{s}` is not a finite number")));
        }
        let digits = s.trim_end_matches(|c: char| c.is_ascii_alphabetic() || c == '/' || c == ' ');
        if digits.len() < s.len() && digits.trim().parse::<f64>().is_ok() {
            return Err(ConfigError::Unit {
                line: self.line,
                key: self.path.clone(),
                msg: format!("`{s}` carries a unit; write the bare number, the unit is fixed by the key name"),
            });
        }
        Err(self.err(format!("`{s}` is not a number")))
    }

    fn f64(&self) -> Result<f64, ConfigError> {
        self.number_from(self.single()?)
    }

    fn f64_list(&self) -> Result<Vec<f64>, ConfigError> {
        let items = self.items();
        if items.iter().any(|s| s.is_empty()) {
            return Err(self.err("empty list item"));
        }
        items.into_iter().map(|s| self.number_from(s)).collect()
    }

    fn f64_array<const N: usize>(&self) -> Result<[f64; N], ConfigError> {
        let v = self.f64_list()?;
        v.try_into().map_err(|v: Vec<f64>| self.err(format!("expects {N} values, got {}", v.len())))
    }

    fn u32(&self) -> Result<u32, ConfigError> {
        let s = self.single()?;
        s.parse::<u32>().or_else(|_| {
            self.number_from(s)?;
            Err(self.err(format!("`{s}` is not a non-negative integer")))
        })
    }

    fn bool_from(&self, s: &str) -> Result<bool, ConfigError> {
        match s {
            "true" | "on" | "yes" => Ok(true),
            "false" | "off" | "no" => Ok(false),
            _ => Err(self.err(format!("`{s}` is not a boolean (true/false)"))),
        }
    }

    fn bool(&self) -> Result<bool, ConfigError> {
        self.bool_from(self.single()?)
    }

    fn bool_list(&self) -> Result<Vec<bool>, ConfigError> {
        self.items().into_iter().map(|s| self.bool_from(s)).collect()
    }
}

/// Parses a seed list: `1, 2, 7` or an inclusive range `1..5`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| format!("bad seed range `{part}`"))?;
            if b < a {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut section: Option<&'static str> = None;
    let mut seen_sections = HashSet::new();
    let mut seen_keys = HashSet::new();
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("unterminated section header `{content}`") })?
                .trim();
            let Some(&known) = SECTIONS.iter().find(|s| **s == name) else {
                return Err(ConfigError::UnknownSection { line, section: name.to_string() });
            };
            if !seen_sections.insert(known) {
                return Err(ConfigError::Syntax { line, msg: format!("section [{known}] given twice") });
            }
            section = Some(known);
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, msg: format!("expected `key = value`, got `{content}`") });
        };
        let key = key.trim();
        let Some(sec) = section else {
            return Err(ConfigError::Syntax { line, msg: format!("`{key}` appears before any section") });
        };
        let path = format!("{sec}.{key}");
        let keys = known_keys(sec);
        if !keys.contains(&key) {
            let stem = strip_unit(key);
            if let Some(k) = keys.iter().find(|k| strip_unit(k) == stem && **k != stem) {
                return Err(ConfigError::Unit { line, key: path, msg: format!("expected `{k}`") });
            }
            return Err(ConfigError::UnknownKey { line, key: path });
        }
        if !seen_keys.insert(path.clone()) {
            return Err(ConfigError::Duplicate { line, key: path });
        }
        entries.push(Entry { line, path, raw: value.trim() });
    }
    for req in REQUIRED {
        if !seen_sections.contains(req) {
            return Err(ConfigError::MissingSection(req));
        }
    }
    build(&entries)
}

fn build(entries: &[Entry]) -> Result<SweepSpec, ConfigError> {
    let get = |path: &str| entries.iter().find(|e| e.path == path);
    let mut s = Scenario::default();
    let mut seeds: Vec<u64> = (1..=5).collect();

    if let Some(e) = get("run.dt_s") {
        s.dt_s = e.f64()?;
    }
    if let Some(e) = get("run.steps") {
        s.steps = e.u32()?;
    }
    if let Some(e) = get("run.seeds") {
        seeds = parse_seeds(e.raw).map_err(|m| e.err(m))?;
    }
    s.seed = seeds.first().copied().unwrap_or(1);

    let kind = match get("road.kind") {
        Some(e) => e.single()?.to_string(),
        None => "straight".to_string(),
    };
    match kind.as_str() {
        "straight" => {
            if let Some(e) = get("road.arm_length_m") {
                return Err(e.err("only applies to kind = intersection"));
            }
            let length_m = get("road.length_m").map(|e| e.f64()).transpose()?.unwrap_or(270.0);
            s.road.kind = RoadKind::Straight { length_m };
        }
        "intersection" => {
            if let Some(e) = get("road.length_m") {
                return Err(e.err("only applies to kind = straight; use arm_length_m"));
            }
            let arm_length_m = get("road.arm_length_m").map(|e| e.f64()).transpose()?.unwrap_or(120.0);
            s.road.kind = RoadKind::Intersection { arm_length_m };
        }
        other => {
            let e = get("road.kind").expect("kind given");
            return Err(e.err(format!("unknown road kind `{other}` (expected straight or intersection)")));
        }
    }
    if let Some(e) = get("road.lanes_per_direction") {
        s.road.lanes_per_direction = e.u32()?;
    }
    if let Some(e) = get("road.lane_width_m") {
        s.road.lane_width_m = e.f64()?;
    }
    if let Some(e) = get("road.speed_limit_mps") {
        s.road.speed_limit_mps = e.f64()?;
    }
    if let Some(e) = get("road.crossing_offsets_m") {
        s.road.crossing_offsets_m = e.f64_list()?;
    }

    let densities = densities(&get("traffic.density"), &get("traffic.headway_s"), &get("traffic.flow_vph"))?;
    let t = &mut s.traffic;
    for (key, slot) in [
        ("traffic.vehicle_length_m", &mut t.vehicle.length),
        ("traffic.vehicle_width_m", &mut t.vehicle.width),
        ("traffic.speed_spread", &mut t.vehicle.speed_spread),
        ("traffic.accel_mps2", &mut t.following.max_accel),
        ("traffic.brake_mps2", &mut t.following.max_brake),
        ("traffic.safe_headway_s", &mut t.following.safe_headway),
        ("traffic.min_gap_m", &mut t.following.min_gap),
        ("traffic.min_spawn_gap_m", &mut t.min_spawn_gap_m),
    ] {
        if let Some(e) = get(key) {
            *slot = e.f64()?;
        }
    }
    if let Some(e) = get("traffic.yield_to_pedestrians") {
        t.yield_to_pedestrians = e.bool()?;
    }

    let modes = match get("perception.mode") {
        Some(e) => e
            .items()
            .into_iter()
            .map(|m| m.parse::<ObservationMode>().map_err(|msg| e.err(msg)))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![s.perception.mode],
    };
    let sensing_ranges_m = match get("perception.sensing_range_m") {
        Some(e) => e.f64_list()?,
        None => vec![s.perception.sensing_range_m],
    };
    if let Some(e) = get("perception.extents_deg") {
        s.perception.extents_deg = e.f64_array()?;
    }
    if let Some(e) = get("perception.range_ratios") {
        s.perception.range_ratios = e.f64_array()?;
    }
    let noise_sigmas = match get("perception.noise_sigma") {
        Some(e) => e.f64_list()?,
        None => vec![s.perception.noise_sigma],
    };

    let q = &mut s.pedestrians;
    if let Some(e) = get("pedestrians.count") {
        q.count = e.u32()?;
    }
    for (key, slot) in [
        ("pedestrians.first_spawn_s", &mut q.first_spawn_s),
        ("pedestrians.spawn_interval_s", &mut q.spawn_interval_s),
        ("pedestrians.approach_m", &mut q.approach_m),
        ("pedestrians.walk_speed_mps", &mut q.walk_speed_mps),
        ("pedestrians.gap_aggressive_s", &mut q.gaps.aggressive),
        ("pedestrians.gap_average_s", &mut q.gaps.average),
        ("pedestrians.gap_conservative_s", &mut q.gaps.conservative),
    ] {
        if let Some(e) = get(key) {
            *slot = e.f64()?;
        }
    }
    if let Some(e) = get("pedestrians.trait_weights") {
        q.trait_weights = e.f64_array()?;
    }
    let monitor_while_crossing = match get("pedestrians.monitor_while_crossing") {
        Some(e) => e.bool_list()?,
        None => vec![q.monitor_while_crossing],
    };

    let mut spec = SweepSpec::single(s, seeds);
    spec.densities = densities.unwrap_or_else(|| spec.densities.clone());
    spec.modes = modes;
    spec.sensing_ranges_m = sensing_ranges_m;
    spec.noise_sigmas = noise_sigmas;
    spec.monitor_while_crossing = monitor_while_crossing;
    // keep the base scenario aligned with the first point
    if let Some(p) = spec.points().first() {
        spec.base = p.apply(&spec.base, spec.base.seed);
    }
    spec.validate()?;
    Ok(spec)
}

fn densities(
    labels: &Option<&Entry>,
    headway: &Option<&Entry>,
    flow: &Option<&Entry>,
) -> Result<Option<Vec<Density>>, ConfigError> {
    let (values, make): (Vec<f64>, fn(f64) -> Demand) = match (headway, flow) {
        (Some(_), Some(f)) => return Err(f.err("give either headway_s or flow_vph, not both")),
        (Some(h), None) => (h.f64_list()?, Demand::Headway),
        (None, Some(f)) => (f.f64_list()?, Demand::Flow),
        (None, None) => {
            return match labels {
                Some(l) => Err(l.err("needs headway_s or flow_vph in the same section")),
                None => Ok(None),
            };
        }
    };
    let names: Vec<String> = match labels {
        Some(l) => {
            let names: Vec<String> = l.items().into_iter().map(String::from).collect();
            if names.len() != values.len() {
                return Err(l.err(format!("{} labels for {} demand values", names.len(), values.len())));
            }
            names
        }
        None => values
            .iter()
            .map(|v| match make(*v) {
                Demand::Headway(h) => format!("headway_{h}s"),
                Demand::Flow(q) => format!("flow_{q}vph"),
            })
            .collect(),
    };
    Ok(Some(names.into_iter().zip(values).map(|(label, v)| Density { label, demand: make(v) }).collect()))
}
