//! Artifact writers. Every number is rounded to 6 decimals so repeat runs are
//! byte-identical and diffs stay readable.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use duckgrid_core::economics::{CaseStudyReport, Payback};
use duckgrid_core::market::{MarketOutcome, MarketStatus};
use duckgrid_core::scenario::{EventKind, ScenarioConfig, SimulationResult};
use duckgrid_core::TimeSeries;
use serde::Serialize;

pub const TIMESERIES_HEADER: [&str; 6] = ["day", "step", "hour", "quantity", "element", "value"];
pub const CONVERGENCE_HEADER: [&str; 5] = ["day", "iteration", "max_imbalance_kw", "price_min", "price_max"];
pub const TABLE1_HEADER: [&str; 4] = ["case", "cost_usd", "discount_rate_pct", "payback_years"];

pub fn r6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn f6(x: f64) -> String {
    format!("{:.6}", r6(x))
}

#[derive(Serialize)]
struct HomeSummary<'a> {
    id: &'a str,
    settled_cost: f64,
    no_der_cost: f64,
    benefit: f64,
    solar_energy_kwh: f64,
    p2p_bought_kwh: f64,
    p2p_sold_kwh: f64,
}

#[derive(Serialize)]
struct EventSummary {
    solar_inverter_outages: usize,
    p2p_network_outages: usize,
    days: Vec<(u32, String, Option<String>)>,
}

#[derive(Serialize)]
struct ConvergenceSummary {
    days_converged: usize,
    days_iteration_cap: usize,
    days_without_peers: usize,
    days_failed: usize,
    max_iterations: usize,
    max_residual_kw: f64,
}

#[derive(Serialize)]
struct HomeDay<'a> {
    id: &'a str,
    p2p_bought_kwh: f64,
    p2p_sold_kwh: f64,
    p2p_payment: f64,
    utility_payment: f64,
    storage_allocation: f64,
    total_cost: f64,
    utility_only_cost: Option<f64>,
}

#[derive(Serialize)]
struct DaySummary<'a> {
    day: u32,
    p2p_enabled: bool,
    status: &'static str,
    iterations: usize,
    max_residual_kw: f64,
    settlement: Vec<HomeDay<'a>>,
    reports: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    seed: u64,
    horizon_days: u32,
    homes: Vec<HomeSummary<'a>>,
    events: EventSummary,
    convergence: ConvergenceSummary,
    days: Vec<DaySummary<'a>>,
}

fn status_name(o: Option<&MarketOutcome>) -> &'static str {
    match o.map(|o| o.status) {
        Some(MarketStatus::Converged) => "converged",
        Some(MarketStatus::IterationCap) => "iteration_cap",
        Some(MarketStatus::NoPeers) => "no_peers",
        None => "failed",
    }
}

pub fn summary_json(config: &ScenarioConfig, result: &SimulationResult) -> String {
    let homes = result
        .totals
        .iter()
        .map(|t| HomeSummary {
            id: &t.home_id,
            settled_cost: r6(t.settled_cost),
            no_der_cost: r6(t.no_der_cost),
            benefit: r6(t.benefit),
            solar_energy_kwh: r6(t.solar_energy_kwh),
            p2p_bought_kwh: r6(t.p2p_bought_kwh),
            p2p_sold_kwh: r6(t.p2p_sold_kwh),
        })
        .collect();
    let events = EventSummary {
        solar_inverter_outages: result.events.count(EventKind::SolarInverterOutage),
        p2p_network_outages: result.events.count(EventKind::P2pNetworkOutage),
        days: result
            .events
            .events
            .iter()
            .map(|e| {
                let kind = match e.kind {
                    EventKind::SolarInverterOutage => "solar_inverter_outage",
                    EventKind::P2pNetworkOutage => "p2p_network_outage",
                };
                (e.day, kind.to_string(), e.home.clone())
            })
            .collect(),
    };
    let outcomes = || result.days.iter().filter_map(|d| d.outcome.as_ref());
    let count = |s: MarketStatus| outcomes().filter(|o| o.status == s).count();
    let convergence = ConvergenceSummary {
        days_converged: count(MarketStatus::Converged),
        days_iteration_cap: count(MarketStatus::IterationCap),
        days_without_peers: count(MarketStatus::NoPeers),
        days_failed: result.failed_days(),
        max_iterations: outcomes().map(|o| o.iterations).max().unwrap_or(0),
        max_residual_kw: r6(outcomes().map(|o| o.max_residual_kw()).fold(0.0, f64::max)),
    };
    let days = result
        .days
        .iter()
        .map(|d| {
            let o = d.outcome.as_ref();
            DaySummary {
                day: d.day,
                p2p_enabled: d.p2p_enabled,
                status: status_name(o),
                iterations: o.map_or(0, |o| o.iterations),
                max_residual_kw: r6(o.map_or(0.0, |o| o.max_residual_kw())),
                settlement: o.map_or_else(Vec::new, |o| {
                    o.settlement
                        .homes
                        .iter()
                        .zip(&o.utility_only_cost)
                        .map(|(h, base)| HomeDay {
                            id: &h.home_id,
                            p2p_bought_kwh: r6(h.p2p_bought_kwh.iter().sum()),
                            p2p_sold_kwh: r6(h.p2p_sold_kwh.iter().sum()),
                            p2p_payment: r6(h.p2p_payment),
                            utility_payment: r6(h.utility_payment),
                            storage_allocation: r6(h.storage_allocation),
                            total_cost: r6(h.total_cost()),
                            utility_only_cost: base.map(r6),
                        })
                        .collect()
                }),
                reports: d.reports(),
            }
        })
        .collect();
    let summary = Summary {
        scenario: &config.name,
        seed: result.seed,
        horizon_days: config.horizon_days,
        homes,
        events,
        convergence,
        days,
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    text
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Long-format series: one row per (day, step, quantity, element).
pub fn timeseries_rows(config: &ScenarioConfig, result: &SimulationResult) -> Vec<Vec<String>> {
    let grid = config.grid;
    let utility = config
        .topology
        .nodes
        .iter()
        .find(|n| n.kind == duckgrid_core::NodeKind::Utility)
        .map_or("utility", |n| n.id.as_str());
    let labels: Vec<String> = config.topology.lines.iter().map(|l| l.label()).collect();
    let mut rows = Vec::new();
    for d in &result.days {
        let Some(o) = &d.outcome else { continue };
        let net = duckgrid_core::net_load_curve(result, d.day).expect("day has an outcome");
        for t in 0..grid.n_steps() {
            let mut push = |quantity: &str, element: &str, value: f64| {
                rows.push(vec![
                    d.day.to_string(),
                    t.to_string(),
                    f6(grid.hour_of(t)),
                    quantity.to_string(),
                    element.to_string(),
                    f6(value),
                ]);
            };
            push("price", "community", o.price.prices.get(t));
            push("slack_kw", utility, net.get(t));
            for r in &o.responses {
                let s = &r.schedule;
                push("injection_kw", &r.home_id, -r.net_import(t));
                push("utility_kw", &r.home_id, s.utility_exchange[t]);
                push("p2p_kw", &r.home_id, s.p2p_exchange[t]);
                push("solar_kw", &r.home_id, r.solar_kw.get(t));
                push("load_kw", &r.home_id, r.load_kw.get(t));
                push("bess_kw", &r.home_id, s.bess_commands[t]);
                push("soc_kwh", &r.home_id, s.soc_kwh[t]);
            }
            if let Some(f) = &o.flows[t] {
                for (label, flow) in labels.iter().zip(&f.line_flows) {
                    push("flow_kw", label, *flow);
                }
                push("losses_kw", "network", f.losses_kw);
            }
        }
    }
    rows
}

pub fn convergence_rows(result: &SimulationResult) -> Vec<Vec<String>> {
    result
        .days
        .iter()
        .filter_map(|d| d.outcome.as_ref().map(|o| (d.day, o)))
        .flat_map(|(day, o)| {
            o.trace.iter().map(move |it| {
                vec![
                    day.to_string(),
                    it.iteration.to_string(),
                    f6(it.max_imbalance_kw),
                    f6(it.price_min),
                    f6(it.price_max),
                ]
            })
        })
        .collect()
}

pub fn write_simulation(
    dir: &Path,
    config: &ScenarioConfig,
    result: &SimulationResult,
    verbose: bool,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.json"), summary_json(config, result))?;
    write_csv(
        &dir.join("timeseries.csv"),
        &TIMESERIES_HEADER,
        timeseries_rows(config, result),
    )?;
    if verbose {
        write_csv(
            &dir.join("convergence.csv"),
            &CONVERGENCE_HEADER,
            convergence_rows(result),
        )?;
    }
    Ok(())
}

pub fn table1_rows(report: &CaseStudyReport) -> Vec<Vec<String>> {
    report
        .discounted
        .iter()
        .map(|d| {
            let payback = match d.payback {
                Payback::Years(n) => n.to_string(),
                Payback::NotReached => "not_reached".to_string(),
            };
            vec![report.case_id.to_string(), f6(report.cost), f6(d.rate * 100.0), payback]
        })
        .collect()
}

pub fn table1_csv(report: &CaseStudyReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE1_HEADER).expect("in-memory write");
    for row in table1_rows(report) {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn case_study_json(report: &CaseStudyReport) -> String {
    let mut value = serde_json::to_value(report).expect("report serializes");
    round_json(&mut value);
    let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
    text.push('\n');
    text
}

fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64().and_then(|x| serde_json::Number::from_f64(r6(x))) {
                *n = x;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

pub fn write_case_study(dir: &Path, report: &CaseStudyReport) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("table1.csv"), table1_csv(report))?;
    fs::write(
        dir.join(format!("case{}.json", report.case_id)),
        case_study_json(report),
    )
}

pub fn curve_csv(out: &mut impl Write, curve: &TimeSeries) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["hour", "kw"])?;
    for (t, v) in curve.values().iter().enumerate() {
        w.write_record([f6(curve.grid().hour_of(t)), f6(*v)])?;
    }
    w.flush()
}
