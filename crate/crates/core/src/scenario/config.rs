//! Scenario files: TOML text checked against the schema, with every violation
//! reported by path rather than stopping at the first.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::devices::{Appliance, BessSpec, HomeSpec, SolarArraySpec, DEFAULT_SERVICE_LIMIT_KW};
use crate::grid::{validate_topology, GridNode, GridTopology, Line, NodeKind};
use crate::market::MarketConfig;
use crate::model::{TariffSchedule, TimeGrid, TimeSeries, TouPeriod};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EventConfig {
    /// Chance per home per day that its inverter is out for the whole day.
    pub solar_inverter_outage_daily_prob: f64,
    /// Chance per day that the community network is unavailable.
    pub p2p_network_outage_daily_prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub horizon_days: u32,
    pub grid: TimeGrid,
    pub topology: GridTopology,
    pub homes: Vec<HomeSpec>,
    pub tariff: TariffSchedule,
    pub market: MarketConfig,
    pub events: EventConfig,
}

impl ScenarioConfig {
    /// The whole community is cut off from the utility.
    pub fn islanded(&self) -> bool {
        self.topology.utility_limit_kw == Some(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for SchemaIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("scenario is not valid TOML: {0}")]
    Syntax(String),
    #[error("{} schema violation(s): {}", .0.len(), .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Schema(Vec<SchemaIssue>),
}

impl ConfigError {
    pub fn issues(&self) -> &[SchemaIssue] {
        match self {
            Self::Schema(issues) => issues,
            Self::Syntax(_) => &[],
        }
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

#[derive(Default)]
struct Walker {
    issues: Vec<SchemaIssue>,
}

impl Walker {
    fn issue(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.issues.push(SchemaIssue {
            path: path.into(),
            message: message.into(),
        });
    }

    fn known(&mut self, table: &Table, path: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.issue(
                    join(path, key),
                    format!("unknown key (expected one of: {})", allowed.join(", ")),
                );
            }
        }
    }

    fn table<'a>(&mut self, parent: &'a Table, key: &str, path: &str, required: bool) -> Option<&'a Table> {
        match parent.get(key) {
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.issue(join(path, key), "expected a table");
                None
            }
            None => {
                if required {
                    self.issue(join(path, key), "missing required table");
                }
                None
            }
        }
    }

    fn array<'a>(&mut self, parent: &'a Table, key: &str, path: &str, required: bool) -> &'a [Value] {
        match parent.get(key) {
            Some(Value::Array(a)) => a,
            Some(_) => {
                self.issue(join(path, key), "expected an array");
                &[]
            }
            None => {
                if required {
                    self.issue(join(path, key), "missing required field");
                }
                &[]
            }
        }
    }

    fn number(&mut self, value: &Value, path: &str) -> Option<f64> {
        let x = match value {
            Value::Float(x) => *x,
            Value::Integer(i) => *i as f64,
            _ => {
                self.issue(path, "expected a number");
                return None;
            }
        };
        if !x.is_finite() {
            self.issue(path, "must be finite");
            return None;
        }
        Some(x)
    }

    fn req_f64(&mut self, t: &Table, key: &str, path: &str) -> Option<f64> {
        match t.get(key) {
            Some(v) => self.number(v, &join(path, key)),
            None => {
                self.issue(join(path, key), "missing required field");
                None
            }
        }
    }

    fn opt_f64(&mut self, t: &Table, key: &str, path: &str, default: f64) -> f64 {
        match t.get(key) {
            Some(v) => self.number(v, &join(path, key)).unwrap_or(default),
            None => default,
        }
    }

    fn uint(&mut self, value: &Value, path: &str) -> Option<u64> {
        match value {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.issue(path, "expected a non-negative integer");
                None
            }
        }
    }

    fn req_uint(&mut self, t: &Table, key: &str, path: &str) -> Option<u64> {
        match t.get(key) {
            Some(v) => self.uint(v, &join(path, key)),
            None => {
                self.issue(join(path, key), "missing required field");
                None
            }
        }
    }

    fn req_str<'a>(&mut self, t: &'a Table, key: &str, path: &str) -> Option<&'a str> {
        match t.get(key) {
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.issue(join(path, key), "expected a string");
                None
            }
            None => {
                self.issue(join(path, key), "missing required field");
                None
            }
        }
    }

    fn opt_bool(&mut self, t: &Table, key: &str, path: &str, default: bool) -> bool {
        match t.get(key) {
            Some(Value::Boolean(b)) => *b,
            Some(_) => {
                self.issue(join(path, key), "expected true or false");
                default
            }
            None => default,
        }
    }

    fn probability(&mut self, t: &Table, key: &str, path: &str) -> f64 {
        let p = self.opt_f64(t, key, path, 0.0);
        if !(0.0..=1.0).contains(&p) {
            self.issue(join(path, key), format!("probability {p} outside [0, 1]"));
            return 0.0;
        }
        p
    }

    /// A number broadcast over the grid, or one value per step.
    fn series(&mut self, value: &Value, grid: Option<TimeGrid>, path: &str) -> Option<TimeSeries> {
        let grid = grid?;
        match value {
            Value::Array(items) => {
                let values: Vec<f64> = items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| self.number(v, &format!("{path}[{i}]")))
                    .collect();
                if values.len() != items.len() {
                    return None;
                }
                match TimeSeries::new(grid, values) {
                    Ok(s) => Some(s),
                    Err(e) => {
                        self.issue(path, e.to_string());
                        None
                    }
                }
            }
            v => self.number(v, path).map(|x| TimeSeries::constant(grid, x)),
        }
    }
}

fn parse_grid(w: &mut Walker, root: &Table) -> Option<TimeGrid> {
    let t = w.table(root, "grid", "", true)?;
    w.known(t, "grid", &["start_hour", "step_hours", "n_steps"]);
    let start = w.opt_f64(t, "start_hour", "grid", 0.0);
    let step = w.req_f64(t, "step_hours", "grid");
    let n = w.req_uint(t, "n_steps", "grid");
    let (step, n) = (step?, n?);
    match TimeGrid::new(start, step, n as usize) {
        Ok(g) => Some(g),
        Err(e) => {
            w.issue("grid", e.to_string());
            None
        }
    }
}

fn parse_tariff(w: &mut Walker, root: &Table, grid: Option<TimeGrid>) -> Option<TariffSchedule> {
    let t = w.table(root, "tariff", "", true)?;
    let kind = w.req_str(t, "kind", "tariff");
    let built = match kind {
        Some("flat") => {
            w.known(t, "tariff", &["kind", "import_rate", "export_rate"]);
            let (imp, exp) = (
                w.req_f64(t, "import_rate", "tariff"),
                w.req_f64(t, "export_rate", "tariff"),
            );
            TariffSchedule::flat(grid?, imp?, exp?)
        }
        Some("net-metering") => {
            w.known(t, "tariff", &["kind", "rate"]);
            let rate = w.req_f64(t, "rate", "tariff");
            TariffSchedule::net_metering(grid?, rate?)
        }
        Some("time-of-use") => {
            w.known(t, "tariff", &["kind", "import_rate", "export_rate", "periods"]);
            let (imp, exp) = (
                w.req_f64(t, "import_rate", "tariff"),
                w.req_f64(t, "export_rate", "tariff"),
            );
            let mut periods = Vec::new();
            for (i, v) in w.array(t, "periods", "tariff", false).iter().enumerate() {
                let path = format!("tariff.periods[{i}]");
                let Value::Table(p) = v else {
                    w.issue(path, "expected a table");
                    continue;
                };
                w.known(p, &path, &["start_hour", "end_hour", "import_rate", "export_rate"]);
                let fields = (
                    w.req_f64(p, "start_hour", &path),
                    w.req_f64(p, "end_hour", &path),
                    w.req_f64(p, "import_rate", &path),
                    w.req_f64(p, "export_rate", &path),
                );
                if let (Some(start_hour), Some(end_hour), Some(import_rate), Some(export_rate)) = fields {
                    periods.push(TouPeriod {
                        start_hour,
                        end_hour,
                        import_rate,
                        export_rate,
                    });
                }
            }
            TariffSchedule::time_of_use(grid?, imp?, exp?, &periods)
        }
        Some(other) => {
            w.issue(
                "tariff.kind",
                format!("unknown tariff kind `{other}` (flat, net-metering, time-of-use)"),
            );
            return None;
        }
        None => return None,
    };
    match built {
        Ok(tariff) => Some(tariff),
        Err(e) => {
            w.issue("tariff", e.to_string());
            None
        }
    }
}

fn parse_market(w: &mut Walker, root: &Table) -> MarketConfig {
    let d = MarketConfig::default();
    let Some(t) = w.table(root, "market", "", false) else {
        return d;
    };
    w.known(
        t,
        "market",
        &[
            "max_iterations",
            "step_size",
            "tolerance_kw",
            "constant_step_iterations",
            "storage_daily_cost",
        ],
    );
    let max_iterations = t
        .get("max_iterations")
        .and_then(|v| w.uint(v, "market.max_iterations"))
        .map_or(d.max_iterations, |n| n as usize);
    let constant_step_iterations = t
        .get("constant_step_iterations")
        .and_then(|v| w.uint(v, "market.constant_step_iterations"))
        .map_or(d.constant_step_iterations, |n| n as usize);
    let config = MarketConfig {
        max_iterations,
        step_size: w.opt_f64(t, "step_size", "market", d.step_size),
        tolerance_kw: w.opt_f64(t, "tolerance_kw", "market", d.tolerance_kw),
        constant_step_iterations,
        storage_daily_cost: w.opt_f64(t, "storage_daily_cost", "market", d.storage_daily_cost),
    };
    if let Err(e) = config.validate() {
        w.issue("market", e.to_string());
    }
    config
}

fn parse_events(w: &mut Walker, root: &Table) -> EventConfig {
    let Some(t) = w.table(root, "events", "", false) else {
        return EventConfig::default();
    };
    w.known(
        t,
        "events",
        &["solar_inverter_outage_daily_prob", "p2p_network_outage_daily_prob"],
    );
    EventConfig {
        solar_inverter_outage_daily_prob: w.probability(t, "solar_inverter_outage_daily_prob", "events"),
        p2p_network_outage_daily_prob: w.probability(t, "p2p_network_outage_daily_prob", "events"),
    }
}

fn parse_topology(w: &mut Walker, root: &Table) -> Option<GridTopology> {
    let t = w.table(root, "topology", "", true)?;
    w.known(t, "topology", &["nodes", "lines", "utility_limit_kw"]);
    let mut topo = GridTopology {
        utility_limit_kw: t
            .get("utility_limit_kw")
            .and_then(|v| w.number(v, "topology.utility_limit_kw")),
        ..Default::default()
    };
    let mut complete = true;
    for (i, v) in w.array(t, "nodes", "topology", true).iter().enumerate() {
        let path = format!("topology.nodes[{i}]");
        let Value::Table(n) = v else {
            w.issue(path, "expected a table");
            complete = false;
            continue;
        };
        w.known(n, &path, &["id", "kind"]);
        let id = w.req_str(n, "id", &path);
        let kind = match w.req_str(n, "kind", &path) {
            Some("home") => Some(NodeKind::Home),
            Some("community_storage") => Some(NodeKind::CommunityStorage),
            Some("utility") => Some(NodeKind::Utility),
            Some(other) => {
                w.issue(
                    join(&path, "kind"),
                    format!("unknown node kind `{other}` (home, community_storage, utility)"),
                );
                None
            }
            None => None,
        };
        match (id, kind) {
            (Some(id), Some(kind)) => topo.nodes.push(GridNode {
                id: id.to_string(),
                kind,
            }),
            _ => complete = false,
        }
    }
    for (i, v) in w.array(t, "lines", "topology", false).iter().enumerate() {
        let path = format!("topology.lines[{i}]");
        let Value::Table(l) = v else {
            w.issue(path, "expected a table");
            complete = false;
            continue;
        };
        w.known(l, &path, &["from", "to", "capacity_kw", "loss_coeff"]);
        let fields = (
            w.req_str(l, "from", &path),
            w.req_str(l, "to", &path),
            w.req_f64(l, "capacity_kw", &path),
        );
        let loss_coeff = w.opt_f64(l, "loss_coeff", &path, 0.0);
        match fields {
            (Some(from), Some(to), Some(capacity_kw)) => topo.lines.push(Line {
                loss_coeff,
                ..Line::new(from, to, capacity_kw)
            }),
            _ => complete = false,
        }
    }
    if complete {
        for defect in validate_topology(&topo) {
            w.issue("topology", defect.to_string());
        }
    }
    Some(topo)
}

fn parse_solar(w: &mut Walker, t: &Table, path: &str, grid: Option<TimeGrid>) -> Option<SolarArraySpec> {
    w.known(
        t,
        path,
        &["peak_kw", "daylight_hours", "angle_factor", "peak_hour", "haze_factor"],
    );
    let d = SolarArraySpec::default();
    let peak_kw = w.req_f64(t, "peak_kw", path);
    let haze_factor = match t.get("haze_factor") {
        Some(v) => Some(w.series(v, grid, &join(path, "haze_factor"))?),
        None => None,
    };
    let spec = SolarArraySpec {
        peak_kw: peak_kw?,
        daylight_hours: w.opt_f64(t, "daylight_hours", path, d.daylight_hours),
        angle_factor: w.opt_f64(t, "angle_factor", path, d.angle_factor),
        peak_hour: w.opt_f64(t, "peak_hour", path, d.peak_hour),
        haze_factor,
    };
    if let Err(e) = spec.validate() {
        w.issue(path, e.to_string());
    }
    Some(spec)
}

fn parse_bess(w: &mut Walker, t: &Table, path: &str) -> Option<BessSpec> {
    w.known(
        t,
        path,
        &[
            "capacity_kwh",
            "continuous_power_kw",
            "round_trip_efficiency",
            "discharge_applies_loss",
        ],
    );
    let d = BessSpec::default();
    let spec = BessSpec {
        capacity_kwh: w.opt_f64(t, "capacity_kwh", path, d.capacity_kwh),
        continuous_power_kw: w.opt_f64(t, "continuous_power_kw", path, d.continuous_power_kw),
        round_trip_efficiency: w.opt_f64(t, "round_trip_efficiency", path, d.round_trip_efficiency),
        discharge_applies_loss: w.opt_bool(t, "discharge_applies_loss", path, d.discharge_applies_loss),
    };
    if let Err(e) = spec.validate() {
        w.issue(path, e.to_string());
    }
    Some(spec)
}

fn parse_appliance(w: &mut Walker, t: &Table, path: &str, grid: Option<TimeGrid>) -> Option<Appliance> {
    w.known(
        t,
        path,
        &[
            "name",
            "power_kw",
            "duration_steps",
            "earliest_step",
            "latest_step",
            "interruptible",
        ],
    );
    let name = w.req_str(t, "name", path);
    let power = w.req_f64(t, "power_kw", path);
    let duration = w.req_uint(t, "duration_steps", path);
    let earliest = t
        .get("earliest_step")
        .and_then(|v| w.uint(v, &join(path, "earliest_step")));
    let latest = t.get("latest_step").and_then(|v| w.uint(v, &join(path, "latest_step")));
    let interruptible = w.opt_bool(t, "interruptible", path, false);
    let grid = grid?;
    let appliance = Appliance {
        name: name?.to_string(),
        power_kw: power?,
        duration_steps: duration? as usize,
        earliest_step: earliest.unwrap_or(0) as usize,
        latest_step: latest.map_or(grid.n_steps().saturating_sub(1), |l| l as usize),
        interruptible,
    };
    if let Err(e) = appliance.validate(&grid) {
        w.issue(path, e.to_string());
    }
    Some(appliance)
}

fn parse_home(w: &mut Walker, t: &Table, path: &str, grid: Option<TimeGrid>) -> Option<HomeSpec> {
    w.known(
        t,
        path,
        &["id", "fixed_load_kw", "service_limit_kw", "solar", "bess", "appliances"],
    );
    let id = w.req_str(t, "id", path);
    let load = match t.get("fixed_load_kw") {
        Some(v) => w.series(v, grid, &join(path, "fixed_load_kw")),
        None => grid.map(TimeSeries::zeros),
    };
    let solar = w
        .table(t, "solar", path, false)
        .map(|s| parse_solar(w, s, &join(path, "solar"), grid));
    let bess = w
        .table(t, "bess", path, false)
        .map(|b| parse_bess(w, b, &join(path, "bess")));
    let mut appliances = Vec::new();
    let mut appliances_ok = true;
    for (i, v) in w.array(t, "appliances", path, false).iter().enumerate() {
        let apath = format!("{path}.appliances[{i}]");
        match v {
            Value::Table(a) => match parse_appliance(w, a, &apath, grid) {
                Some(a) => appliances.push(a),
                None => appliances_ok = false,
            },
            _ => {
                w.issue(apath, "expected a table");
                appliances_ok = false;
            }
        }
    }
    let service_limit_kw = w.opt_f64(t, "service_limit_kw", path, DEFAULT_SERVICE_LIMIT_KW);
    let home = HomeSpec {
        id: id?.to_string(),
        fixed_load: load?,
        appliances,
        solar: solar.map_or(Some(None), |s| s.map(Some))?,
        bess: bess.map_or(Some(None), |b| b.map(Some))?,
        service_limit_kw,
    };
    if appliances_ok {
        if let Err(e) = home.validate() {
            w.issue(path, e.to_string());
        }
    }
    Some(home)
}

/// Parses and validates scenario text, reporting every schema violation found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let root: Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_string()))?;
    let mut w = Walker::default();
    w.known(
        &root,
        "",
        &[
            "name",
            "seed",
            "horizon_days",
            "grid",
            "tariff",
            "market",
            "events",
            "topology",
            "homes",
        ],
    );
    let name = w.req_str(&root, "name", "").map(str::to_string);
    let seed = match root.get("seed") {
        Some(Value::Integer(i)) => Some(*i as u64),
        Some(_) => {
            w.issue("seed", "expected an integer");
            None
        }
        None => {
            w.issue("seed", "missing required field");
            None
        }
    };
    let horizon_days = match root.get("horizon_days") {
        Some(v) => w.uint(v, "horizon_days").filter(|&d| {
            let ok = d >= 1 && d <= u32::MAX as u64;
            if !ok {
                w.issue("horizon_days", "must be >= 1");
            }
            ok
        }),
        None => Some(1),
    };
    let grid = parse_grid(&mut w, &root);
    let tariff = parse_tariff(&mut w, &root, grid);
    let market = parse_market(&mut w, &root);
    let events = parse_events(&mut w, &root);
    let topology = parse_topology(&mut w, &root);

    let mut homes = Vec::new();
    let mut seen = HashSet::new();
    let home_values = w.array(&root, "homes", "", true);
    if home_values.is_empty() && root.contains_key("homes") {
        w.issue("homes", "at least one home is required");
    }
    for (i, v) in home_values.iter().enumerate() {
        let path = format!("homes[{i}]");
        let Value::Table(t) = v else {
            w.issue(path, "expected a table");
            continue;
        };
        if let Some(home) = parse_home(&mut w, t, &path, grid) {
            if !seen.insert(home.id.clone()) {
                w.issue(join(&path, "id"), format!("duplicate home id \"{}\"", home.id));
            } else if let Some(topo) = &topology {
                match topo.nodes.iter().find(|n| n.id == home.id).map(|n| n.kind) {
                    Some(NodeKind::Home) | Some(NodeKind::CommunityStorage) => {}
                    Some(NodeKind::Utility) => {
                        w.issue(join(&path, "id"), format!("\"{}\" is the utility node", home.id))
                    }
                    None => w.issue(
                        join(&path, "id"),
                        format!("home \"{}\" has no node in topology.nodes", home.id),
                    ),
                }
            }
            homes.push(home);
        }
    }
    if let Some(topo) = &topology {
        for (i, node) in topo.nodes.iter().enumerate() {
            if node.kind != NodeKind::Utility && !seen.contains(&node.id) {
                w.issue(
                    format!("topology.nodes[{i}]"),
                    format!("node \"{}\" has no [[homes]] entry", node.id),
                );
            }
        }
    }

    match (w.issues.is_empty(), name, seed, horizon_days, grid, tariff, topology) {
        (true, Some(name), Some(seed), Some(horizon_days), Some(grid), Some(tariff), Some(topology)) => {
            Ok(ScenarioConfig {
                name,
                seed,
                horizon_days: horizon_days as u32,
                grid,
                topology,
                homes,
                tariff,
                market,
                events,
            })
        }
        _ => {
            if w.issues.is_empty() {
                w.issue("", "incomplete scenario");
            }
            Err(ConfigError::Schema(w.issues))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "minimal"
seed = 7

[grid]
step_hours = 1.0
n_steps = 24

[tariff]
kind = "flat"
import_rate = 0.30
export_rate = 0.10

[topology]
nodes = [{ id = "h1", kind = "home" }, { id = "utility", kind = "utility" }]
lines = [{ from = "h1", to = "utility", capacity_kw = 20 }]

[[homes]]
id = "h1"
fixed_load_kw = 1.0
"#;

    #[test]
    fn minimal_parses() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.homes.len(), 1);
        assert_eq!(c.horizon_days, 1);
        assert_eq!(c.seed, 7);
        assert_eq!(c.market, MarketConfig::default());
        assert!(!c.islanded());
    }

    #[test]
    fn duplicate_home_is_named() {
        let text = MINIMAL.to_string() + "\n[[homes]]\nid = \"h1\"\n";
        let err = parse_config(&text).unwrap_err();
        assert!(err
            .issues()
            .iter()
            .any(|i| i.path == "homes[1].id" && i.message.contains("\"h1\"")));
    }

    #[test]
    fn all_violations_are_collected() {
        let text =
            MINIMAL.replace("seed = 7", "colour = \"red\"") + "\n[events]\nsolar_inverter_outage_daily_prob = 1.5\n";
        let err = parse_config(&text).unwrap_err();
        let paths: Vec<&str> = err.issues().iter().map(|i| i.path.as_str()).collect();
        assert!(paths.contains(&"colour"));
        assert!(paths.contains(&"seed"));
        assert!(paths.contains(&"events.solar_inverter_outage_daily_prob"));
    }

    #[test]
    fn load_array_length_checked() {
        let text = MINIMAL.replace("fixed_load_kw = 1.0", "fixed_load_kw = [1.0, 2.0]");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.issues()[0].path, "homes[0].fixed_load_kw");
    }

    #[test]
    fn topology_defects_reported() {
        let text = MINIMAL.replace(
            r#"{ id = "utility", kind = "utility" }"#,
            r#"{ id = "u", kind = "home" }"#,
        );
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("missing slack"));
        assert!(err.to_string().contains("node \"u\" has no [[homes]] entry"));
    }

    #[test]
    fn syntax_error() {
        assert!(matches!(parse_config("name = "), Err(ConfigError::Syntax(_))));
    }
}
