//! TOML run and sweep configuration.
//!
//! Parsing goes through a raw [`toml::Table`] and validates by hand, so every
//! violation in a file is reported at once rather than only the first one.
//!
//! ```toml
//! [scenario]
//! kind = "ac_ring"        # ac_ring | stern | combined
//! alpha = 0.3
//! chi_tilt = 0.5
//!
//! [integrator]
//! steps = 8192            # power of two in [2^4, 2^20]
//! branch = "+"
//!
//! [drive]                 # optional
//! target = "alpha"
//! knots = [[0.0, 0.1], [10.0, 0.6]]
//! samples = 33
//!
//! [output]
//! dir = "out"
//! units = "internal"      # internal | si
//! emit = ["trajectory", "phases", "faraday", "plotdata"]
//!
//! [sweep]                 # optional; turns the file into a sweep
//! parameter = "alpha"
//! from = 0.0
//! to = 0.9
//! count = 10
//! unwrap = true
//! ```
//!
//! With `units = "si"` only the Stern scenario is accepted. Its fields are
//! in tesla, `hbar_omega` (joules) replaces `omega`, and drive knots are
//! `[seconds, tesla]`.

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::fields::{
    ACRingScenario, CombinedScenario, DriveProtocol, Param, Scenario, ScenarioKind, SternScenario, UnitMode,
    UnitSystem,
};
use crate::invariant::Branch;

pub const MIN_STEPS_LOG2: u32 = 4;
pub const MAX_STEPS_LOG2: u32 = 20;
pub const DEFAULT_STEPS: usize = 4096;
pub const DEFAULT_SAMPLES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitFlags {
    pub trajectory: bool,
    pub phases: bool,
    pub faraday: bool,
    pub plotdata: bool,
}

impl EmitFlags {
    const NAMES: [&'static str; 4] = ["trajectory", "phases", "faraday", "plotdata"];

    pub fn all() -> Self {
        Self {
            trajectory: true,
            phases: true,
            faraday: true,
            plotdata: true,
        }
    }

    fn names(&self) -> Vec<&'static str> {
        let on = [self.trajectory, self.phases, self.faraday, self.plotdata];
        Self::NAMES.iter().zip(on).filter(|(_, b)| *b).map(|(n, _)| *n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveConfig {
    pub protocol: DriveProtocol,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Scenario in the units of the file (tesla in SI mode, with `omega = 1`).
    pub scenario: Scenario,
    pub steps: usize,
    pub branch: Branch,
    pub drive: Option<DriveConfig>,
    pub units: UnitMode,
    /// `ħω` in joules; present exactly when `units` is SI.
    pub hbar_omega: Option<f64>,
    pub out_dir: Option<String>,
    pub emit: EmitFlags,
}

impl RunConfig {
    /// Seconds per internal time unit in SI mode.
    pub fn time_unit(&self) -> Option<f64> {
        self.hbar_omega.map(|e| UnitSystem::si().hbar / e)
    }

    /// Converts a field value in tesla to a Zeeman energy in units of `ħω`.
    fn field_to_internal(&self, b: f64) -> f64 {
        match self.hbar_omega {
            Some(e) => UnitSystem::si().mu() * b / e,
            None => b,
        }
    }

    /// Scenario in internal units.
    pub fn internal_scenario(&self) -> Scenario {
        match (self.scenario, self.hbar_omega) {
            (Scenario::Stern(s), Some(_)) => Scenario::Stern(SternScenario {
                b_phi: self.field_to_internal(s.b_phi),
                b_z: self.field_to_internal(s.b_z),
                omega: 1.0,
                radius: 1.0,
                n: s.n,
            }),
            (s, _) => s,
        }
    }

    /// Drive in internal units.
    pub fn internal_drive(&self) -> Option<Result<DriveProtocol>> {
        let d = self.drive.as_ref()?;
        let Some(tau) = self.time_unit() else {
            return Some(Ok(d.protocol.clone()));
        };
        let knots = d
            .protocol
            .knots()
            .iter()
            .map(|&(t, v)| (t / tau, self.field_to_internal(v)))
            .collect();
        Some(DriveProtocol::new(d.protocol.target, knots))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub parameter: Param,
    pub from: f64,
    pub to: f64,
    pub count: usize,
    pub unwrap: bool,
}

impl SweepConfig {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                if i == n - 1 {
                    self.to
                } else {
                    self.from + (self.to - self.from) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    /// One derived run per swept value. The scenarios are not re-validated here.
    pub fn runs(&self) -> Vec<(f64, RunConfig)> {
        self.values()
            .into_iter()
            .map(|v| {
                let mut cfg = self.base.clone();
                cfg.scenario = cfg.scenario.with(self.parameter, v).expect("parameter checked at parse time");
                (v, cfg)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Sweep(SweepConfig),
}

impl Config {
    pub fn base(&self) -> &RunConfig {
        match self {
            Config::Run(r) => r,
            Config::Sweep(s) => &s.base,
        }
    }

    pub fn base_mut(&mut self) -> &mut RunConfig {
        match self {
            Config::Run(r) => r,
            Config::Sweep(s) => &mut s.base,
        }
    }

    /// SHA-256 of the canonical rendering.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(render(self).as_bytes()))
    }
}

pub fn parse_config(text: &str) -> Result<Config> {
    parse_config_with(text, &[])
}

/// Parses `text`, then applies `key.path=value` overrides before validating.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<Config> {
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| syntax_error(text, &e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    validate(&table)
}

fn syntax_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(1);
    Error::Syntax {
        line,
        message: e.message().trim().to_string(),
    }
}

/// Sets `section.key` (or a top-level key) to a TOML value; bare words that
/// do not parse as TOML are taken as strings.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let bad = |why: &str| Error::Config(vec![format!("--set {assignment}: {why}")]);
    let (path, raw) = assignment.split_once('=').ok_or_else(|| bad("expected key=value"))?;
    let path: Vec<&str> = path.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key"));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.trim().to_string()));
    let (last, parents) = path.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Table(Table::new()))
            .as_table_mut()
            .ok_or_else(|| bad(&format!("`{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

struct Checker {
    errors: Vec<String>,
}

impl Checker {
    fn push(&mut self, msg: String) {
        self.errors.push(msg);
    }

    fn unknown_keys(&mut self, t: &Table, section: &str, allowed: &[&str]) {
        for k in t.keys() {
            if !allowed.contains(&k.as_str()) {
                let name = if section.is_empty() { k.clone() } else { format!("{section}.{k}") };
                self.push(format!("{name}: unknown key"));
            }
        }
    }

    fn section<'a>(&mut self, root: &'a Table, name: &str) -> Option<&'a Table> {
        match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.push(format!("{name}: expected a section"));
                None
            }
        }
    }

    fn float(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        let v = match t.get(key)? {
            Value::Float(f) => *f,
            Value::Integer(i) => *i as f64,
            _ => {
                self.push(format!("{section}.{key}: expected a number"));
                return None;
            }
        };
        if !v.is_finite() {
            self.push(format!("{section}.{key}: must be finite"));
            return None;
        }
        Some(v)
    }

    fn required_float(&mut self, t: &Table, section: &str, key: &str) -> Option<f64> {
        if !t.contains_key(key) {
            self.push(format!("{section}.{key}: missing"));
            return None;
        }
        self.float(t, section, key)
    }

    fn integer(&mut self, t: &Table, section: &str, key: &str) -> Option<i64> {
        match t.get(key)? {
            Value::Integer(i) => Some(*i),
            _ => {
                self.push(format!("{section}.{key}: expected an integer"));
                None
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, section: &str, key: &str) -> Option<&'a str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            _ => {
                self.push(format!("{section}.{key}: expected a string"));
                None
            }
        }
    }

    fn boolean(&mut self, t: &Table, section: &str, key: &str) -> Option<bool> {
        match t.get(key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.push(format!("{section}.{key}: expected true or false"));
                None
            }
        }
    }
}

fn validate(root: &Table) -> Result<Config> {
    let mut c = Checker { errors: Vec::new() };
    c.unknown_keys(root, "", &["scenario", "integrator", "drive", "output", "sweep"]);

    let output = c.section(root, "output");
    let mut units = UnitMode::Internal;
    let mut out_dir = None;
    let mut emit = EmitFlags::all();
    if let Some(o) = output {
        c.unknown_keys(o, "output", &["dir", "units", "emit"]);
        if let Some(u) = c.string(o, "output", "units") {
            match u.parse() {
                Ok(m) => units = m,
                Err(_) => c.push(format!("output.units: expected \"internal\" or \"si\" (got \"{u}\")")),
            }
        }
        out_dir = c.string(o, "output", "dir").map(str::to_string);
        if let Some(v) = o.get("emit") {
            emit = parse_emit(&mut c, v);
        }
    }

    let (scenario, hbar_omega) = match c.section(root, "scenario") {
        Some(s) => parse_scenario(&mut c, s, units),
        None => {
            c.push("scenario: missing section".into());
            (None, None)
        }
    };

    let mut steps = DEFAULT_STEPS;
    let mut branch = Branch::Plus;
    if let Some(i) = c.section(root, "integrator") {
        c.unknown_keys(i, "integrator", &["steps", "branch"]);
        if let Some(n) = c.integer(i, "integrator", "steps") {
            let ok = n > 0 && (n as u64).is_power_of_two() && {
                let log = (n as u64).trailing_zeros();
                (MIN_STEPS_LOG2..=MAX_STEPS_LOG2).contains(&log)
            };
            if ok {
                steps = n as usize;
            } else {
                c.push(format!(
                    "integrator.steps: must be a power of two between 2^{MIN_STEPS_LOG2} and 2^{MAX_STEPS_LOG2} (got {n})"
                ));
            }
        }
        if let Some(b) = c.string(i, "integrator", "branch") {
            match b.parse() {
                Ok(v) => branch = v,
                Err(_) => c.push(format!("integrator.branch: expected \"+\" or \"-\" (got \"{b}\")")),
            }
        }
    }

    let drive = c
        .section(root, "drive")
        .and_then(|d| parse_drive(&mut c, d, scenario.as_ref(), units));

    let base = scenario.map(|scenario| RunConfig {
        scenario,
        steps,
        branch,
        drive,
        units,
        hbar_omega,
        out_dir,
        emit,
    });

    let sweep = c.section(root, "sweep").map(|s| parse_sweep(&mut c, s, base.as_ref()));

    if !c.errors.is_empty() {
        return Err(Error::Config(c.errors));
    }
    let base = base.expect("scenario present when no errors");
    Ok(match sweep {
        Some(Some((parameter, from, to, count, unwrap))) => Config::Sweep(SweepConfig {
            base,
            parameter,
            from,
            to,
            count,
            unwrap,
        }),
        _ => Config::Run(base),
    })
}

fn parse_emit(c: &mut Checker, v: &Value) -> EmitFlags {
    let mut flags = EmitFlags {
        trajectory: false,
        phases: false,
        faraday: false,
        plotdata: false,
    };
    let Some(items) = v.as_array() else {
        c.push("output.emit: expected an array of strings".into());
        return EmitFlags::all();
    };
    for item in items {
        match item.as_str() {
            Some("trajectory") => flags.trajectory = true,
            Some("phases") => flags.phases = true,
            Some("faraday") => flags.faraday = true,
            Some("plotdata") => flags.plotdata = true,
            Some(other) => c.push(format!(
                "output.emit: unknown output \"{other}\" (expected one of {})",
                EmitFlags::NAMES.join(", ")
            )),
            None => c.push("output.emit: expected an array of strings".into()),
        }
    }
    flags
}

fn parse_scenario(c: &mut Checker, s: &Table, units: UnitMode) -> (Option<Scenario>, Option<f64>) {
    const SEC: &str = "scenario";
    let kind = match c.string(s, SEC, "kind") {
        Some(k) => match k.parse::<ScenarioKind>() {
            Ok(k) => k,
            Err(_) => {
                c.push(format!("scenario.kind: expected ac_ring, stern or combined (got \"{k}\")"));
                return (None, None);
            }
        },
        None => {
            if !s.contains_key("kind") {
                c.push("scenario.kind: missing".into());
            }
            return (None, None);
        }
    };
    let si = units == UnitMode::Si;
    if si && kind != ScenarioKind::Stern {
        c.push(format!("output.units: SI units are only supported for the stern scenario (got {kind})"));
    }
    let before = c.errors.len();
    let radius = c.float(s, SEC, "radius").unwrap_or(1.0);
    let mut hbar_omega = None;
    let scenario = match kind {
        ScenarioKind::AcRing => {
            c.unknown_keys(s, SEC, &["kind", "alpha", "chi_tilt", "radius", "ab_flux"]);
            let alpha = c.required_float(s, SEC, "alpha");
            let chi = c.required_float(s, SEC, "chi_tilt");
            let ab = c.float(s, SEC, "ab_flux").unwrap_or(0.0);
            alpha.zip(chi).map(|(alpha, chi_tilt)| {
                Scenario::AcRing(ACRingScenario {
                    alpha,
                    chi_tilt,
                    radius,
                    ab_flux: ab,
                })
            })
        }
        ScenarioKind::Stern => {
            let rate_key = if si { "hbar_omega" } else { "omega" };
            c.unknown_keys(s, SEC, &["kind", "b_phi", "b_z", rate_key, "radius", "n"]);
            let b_phi = c.required_float(s, SEC, "b_phi");
            let b_z = c.required_float(s, SEC, "b_z");
            let rate = c.required_float(s, SEC, rate_key);
            let n = c.integer(s, SEC, "n").unwrap_or(0);
            if si {
                match rate {
                    Some(e) if e > 0.0 => hbar_omega = Some(e),
                    Some(e) => c.push(format!("scenario.hbar_omega: must be > 0 (got {e})")),
                    None => {}
                }
            }
            match (b_phi, b_z, rate) {
                (Some(b_phi), Some(b_z), Some(rate)) => Some(Scenario::Stern(SternScenario {
                    b_phi,
                    b_z,
                    omega: if si { 1.0 } else { rate },
                    radius,
                    n,
                })),
                _ => None,
            }
        }
        ScenarioKind::Combined => {
            c.unknown_keys(
                s,
                SEC,
                &["kind", "alpha", "chi_tilt", "ab_flux", "b_phi", "b_z", "omega", "radius"],
            );
            let vals = ["alpha", "chi_tilt", "b_phi", "b_z", "omega"].map(|k| c.required_float(s, SEC, k));
            let ab = c.float(s, SEC, "ab_flux").unwrap_or(0.0);
            match vals {
                [Some(alpha), Some(chi_tilt), Some(b_phi), Some(b_z), Some(omega)] => {
                    Some(Scenario::Combined(CombinedScenario {
                        alpha,
                        chi_tilt,
                        ab_flux: ab,
                        b_phi,
                        b_z,
                        omega,
                        radius,
                    }))
                }
                _ => None,
            }
        }
    };
    if c.errors.len() > before {
        return (None, None);
    }
    if let Some(sc) = &scenario {
        if let Err(Error::InvalidScenario(m)) = sc.validate() {
            for part in m.split("; ") {
                c.push(format!("scenario: {part}"));
            }
            return (None, None);
        }
    }
    (scenario, hbar_omega)
}

fn parse_drive(c: &mut Checker, d: &Table, scenario: Option<&Scenario>, units: UnitMode) -> Option<DriveConfig> {
    const SEC: &str = "drive";
    c.unknown_keys(d, SEC, &["target", "knots", "samples"]);
    let target = match c.string(d, SEC, "target") {
        Some(t) => match t.parse::<Param>() {
            Ok(p) => Some(p),
            Err(_) => {
                c.push(format!("drive.target: unknown parameter \"{t}\""));
                None
            }
        },
        None => {
            if !d.contains_key("target") {
                c.push("drive.target: missing".into());
            }
            None
        }
    };
    if let (Some(p), Some(sc)) = (target, scenario) {
        if sc.get(p).is_err() {
            c.push(format!("drive.target: {p} is not a parameter of the {} scenario", sc.kind()));
        } else if units == UnitMode::Si && !matches!(p, Param::BPhi | Param::BZ) {
            c.push(format!("drive.target: SI runs can only drive b_phi or b_z (got {p})"));
        }
    }
    let mut samples = DEFAULT_SAMPLES;
    if let Some(n) = c.integer(d, SEC, "samples") {
        if n >= 3 {
            samples = n as usize;
        } else {
            c.push(format!("drive.samples: must be at least 3 (got {n})"));
        }
    }
    let knots = match d.get("knots") {
        None => {
            c.push("drive.knots: missing".into());
            None
        }
        Some(v) => parse_knots(c, v),
    };
    let (target, knots) = (target?, knots?);
    match DriveProtocol::new(target, knots) {
        Ok(protocol) => Some(DriveConfig { protocol, samples }),
        Err(e) => {
            c.push(format!("drive.knots: {e}"));
            None
        }
    }
}

fn parse_knots(c: &mut Checker, v: &Value) -> Option<Vec<(f64, f64)>> {
    let as_f64 = |v: &Value| match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    };
    let items = v.as_array().map(|a| {
        a.iter()
            .map(|k| match k.as_array().map(|p| p.as_slice()) {
                Some([t, x]) => as_f64(t).zip(as_f64(x)),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
    });
    match items.flatten() {
        Some(k) => Some(k),
        None => {
            c.push("drive.knots: expected an array of [time, value] number pairs".into());
            None
        }
    }
}

fn parse_sweep(c: &mut Checker, s: &Table, base: Option<&RunConfig>) -> Option<(Param, f64, f64, usize, bool)> {
    const SEC: &str = "sweep";
    c.unknown_keys(s, SEC, &["parameter", "from", "to", "count", "unwrap"]);
    let parameter = match c.string(s, SEC, "parameter") {
        Some(p) => match p.parse::<Param>() {
            Ok(p) => Some(p),
            Err(_) => {
                c.push(format!("sweep.parameter: unknown parameter \"{p}\""));
                None
            }
        },
        None => {
            if !s.contains_key("parameter") {
                c.push("sweep.parameter: missing".into());
            }
            None
        }
    };
    if let (Some(p), Some(b)) = (parameter, base) {
        if b.scenario.get(p).is_err() {
            c.push(format!("sweep.parameter: {p} is not a parameter of the {} scenario", b.scenario.kind()));
        } else if b.units == UnitMode::Si && p == Param::Omega {
            c.push("sweep.parameter: omega is fixed by hbar_omega in SI runs".into());
        }
    }
    let from = c.required_float(s, SEC, "from");
    let to = c.required_float(s, SEC, "to");
    let count = match c.integer(s, SEC, "count") {
        Some(n) if n >= 2 => Some(n as usize),
        Some(n) => {
            c.push(format!("sweep.count: must be at least 2 (got {n})"));
            None
        }
        None => {
            if !s.contains_key("count") {
                c.push("sweep.count: missing".into());
            }
            None
        }
    };
    let unwrap = c.boolean(s, SEC, "unwrap").unwrap_or(true);
    Some((parameter?, from?, to?, count?, unwrap))
}

/// Canonical TOML text for `config`; `parse_config(&render(c)) == c`.
pub fn render(config: &Config) -> String {
    let base = config.base();
    let mut root = Table::new();

    let mut sc = Table::new();
    sc.insert("kind".into(), Value::String(base.scenario.kind().to_string()));
    let params: &[Param] = match base.scenario {
        Scenario::AcRing(_) => &[Param::Alpha, Param::ChiTilt, Param::AbFlux, Param::Radius],
        Scenario::Stern(_) if base.hbar_omega.is_some() => &[Param::BPhi, Param::BZ, Param::Radius],
        Scenario::Stern(_) => &[Param::BPhi, Param::BZ, Param::Omega, Param::Radius],
        Scenario::Combined(_) => &[
            Param::Alpha,
            Param::ChiTilt,
            Param::AbFlux,
            Param::BPhi,
            Param::BZ,
            Param::Omega,
            Param::Radius,
        ],
    };
    for p in params {
        let v = base.scenario.get(*p).expect("listed per kind");
        sc.insert(p.name().into(), Value::Float(v));
    }
    if let Scenario::Stern(s) = base.scenario {
        sc.insert("n".into(), Value::Integer(s.n));
    }
    if let Some(e) = base.hbar_omega {
        sc.insert("hbar_omega".into(), Value::Float(e));
    }
    root.insert("scenario".into(), Value::Table(sc));

    let mut integ = Table::new();
    integ.insert("steps".into(), Value::Integer(base.steps as i64));
    integ.insert("branch".into(), Value::String(base.branch.to_string()));
    root.insert("integrator".into(), Value::Table(integ));

    if let Some(d) = &base.drive {
        let mut t = Table::new();
        t.insert("target".into(), Value::String(d.protocol.target.name().into()));
        let knots = d
            .protocol
            .knots()
            .iter()
            .map(|&(a, b)| Value::Array(vec![Value::Float(a), Value::Float(b)]))
            .collect();
        t.insert("knots".into(), Value::Array(knots));
        t.insert("samples".into(), Value::Integer(d.samples as i64));
        root.insert("drive".into(), Value::Table(t));
    }

    let mut out = Table::new();
    if let Some(dir) = &base.out_dir {
        out.insert("dir".into(), Value::String(dir.clone()));
    }
    out.insert("units".into(), Value::String(base.units.to_string()));
    let emit = base.emit.names().into_iter().map(|n| Value::String(n.into())).collect();
    out.insert("emit".into(), Value::Array(emit));
    root.insert("output".into(), Value::Table(out));

    if let Config::Sweep(s) = config {
        let mut t = Table::new();
        t.insert("parameter".into(), Value::String(s.parameter.name().into()));
        t.insert("from".into(), Value::Float(s.from));
        t.insert("to".into(), Value::Float(s.to));
        t.insert("count".into(), Value::Integer(s.count as i64));
        t.insert("unwrap".into(), Value::Boolean(s.unwrap));
        root.insert("sweep".into(), Value::Table(t));
    }
    toml::to_string(&root).expect("tables of plain values always serialize")
}
