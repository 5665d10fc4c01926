use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::ScenarioConfig;
use super::events::{sample_events, DayEvents, EventTrace};
use crate::house::{solve_house, HouseProblem};
use crate::market::{run_market, settle_ledger, MarketOutcome, MarketStatus, PriceBand, PriceSignal};
use crate::model::TimeSeries;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("day {day} was not simulated (horizon {horizon} days)")]
    DayOutOfRange { day: u32, horizon: u32 },
    #[error("day {day} has no dispatch: {reason}")]
    NoDispatch { day: u32, reason: String },
    #[error("could not start {workers} worker threads: {reason}")]
    Workers { workers: usize, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulationOptions {
    /// Worker threads for house subproblems and days; `None` uses the global pool.
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayResult {
    pub day: u32,
    pub events: DayEvents,
    /// False when the community network is down and homes fall back to the utility.
    pub p2p_enabled: bool,
    pub outcome: Option<MarketOutcome>,
    /// Cost per home with no solar, storage or peer trading ($).
    pub no_der_cost: Vec<f64>,
    /// Why the day has no outcome.
    pub error: Option<String>,
}

impl DayResult {
    pub fn reports(&self) -> Vec<String> {
        let mut out: Vec<String> = self.error.iter().cloned().collect();
        if let Some(o) = &self.outcome {
            out.extend(o.issues.iter().map(|i| i.to_string()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeTotals {
    pub home_id: String,
    pub settled_cost: f64,
    pub no_der_cost: f64,
    /// `no_der_cost − settled_cost` over the days that produced a dispatch.
    pub benefit: f64,
    pub solar_energy_kwh: f64,
    pub p2p_bought_kwh: f64,
    pub p2p_sold_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub name: String,
    pub seed: u64,
    pub events: EventTrace,
    pub days: Vec<DayResult>,
    pub totals: Vec<HomeTotals>,
}

impl SimulationResult {
    pub fn failed_days(&self) -> usize {
        self.days.iter().filter(|d| d.outcome.is_none()).count()
    }

    pub fn non_converged_days(&self) -> usize {
        self.days
            .iter()
            .filter(|d| {
                d.outcome
                    .as_ref()
                    .is_some_and(|o| o.status == MarketStatus::IterationCap)
            })
            .count()
    }

    pub fn has_issues(&self) -> bool {
        self.days.iter().any(|d| !d.reports().is_empty())
    }
}

fn day_problems(config: &ScenarioConfig, events: &DayEvents, islanded: bool) -> Vec<HouseProblem> {
    config
        .homes
        .iter()
        .map(|h| {
            let mut home = h.clone();
            if events.inverter_out.contains(&home.id) {
                home.solar = None;
            }
            HouseProblem {
                islanded,
                ..HouseProblem::new(home, config.tariff.clone())
            }
        })
        .collect()
}

fn no_der_costs(config: &ScenarioConfig) -> Vec<f64> {
    config
        .homes
        .par_iter()
        .map(|h| {
            let mut home = h.clone();
            home.solar = None;
            home.bess = None;
            solve_house(&HouseProblem::new(home, config.tariff.clone())).map_or(f64::NAN, |r| r.cost)
        })
        .collect()
}

/// Every home on its own utility service: no peers, no community network.
fn utility_fallback(config: &ScenarioConfig, events: &DayEvents) -> Result<MarketOutcome, String> {
    let homes = day_problems(config, events, false);
    let responses = homes
        .par_iter()
        .map(|hp| solve_house(hp).map_err(|e| format!("home `{}`: {e}", hp.home.id)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = config.grid.n_steps();
    let price = PriceSignal {
        prices: TimeSeries::new(config.grid, PriceBand::from_tariff(&config.tariff).midpoint())
            .map_err(|e| e.to_string())?,
    };
    let settlement = settle_ledger(&responses, &price, &config.tariff, &[], 0.0);
    Ok(MarketOutcome {
        utility_only_cost: responses.iter().map(|r| Some(r.cost)).collect(),
        price,
        responses,
        flows: vec![None; n],
        settlement,
        status: MarketStatus::NoPeers,
        iterations: 0,
        residual_kw: vec![0.0; n],
        trace: Vec::new(),
        issues: Vec::new(),
    })
}

fn simulate_day(config: &ScenarioConfig, events: &DayEvents) -> (Option<MarketOutcome>, Option<String>) {
    let result = if events.p2p_down {
        utility_fallback(config, events)
    } else {
        let homes = day_problems(config, events, config.islanded());
        run_market(&homes, &config.topology, &config.market).map_err(|e| e.to_string())
    };
    match result {
        Ok(o) => (Some(o), None),
        Err(e) => (None, Some(e)),
    }
}

fn run(config: &ScenarioConfig) -> SimulationResult {
    let trace = sample_events(config);
    let day_events: Vec<DayEvents> = (0..config.horizon_days).map(|d| trace.day(d)).collect();
    // days with the same events have the same dispatch
    let distinct: Vec<DayEvents> = day_events
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let solved: BTreeMap<DayEvents, (Option<MarketOutcome>, Option<String>)> = distinct
        .par_iter()
        .map(|ev| (ev.clone(), simulate_day(config, ev)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let no_der = no_der_costs(config);

    let days: Vec<DayResult> = day_events
        .into_iter()
        .enumerate()
        .map(|(d, events)| {
            let (outcome, error) = solved[&events].clone();
            DayResult {
                day: d as u32,
                p2p_enabled: !events.p2p_down,
                events,
                outcome,
                no_der_cost: no_der.clone(),
                error,
            }
        })
        .collect();

    let step = config.grid.step_hours();
    let mut totals: Vec<HomeTotals> = config
        .homes
        .iter()
        .map(|h| HomeTotals {
            home_id: h.id.clone(),
            settled_cost: 0.0,
            no_der_cost: 0.0,
            benefit: 0.0,
            solar_energy_kwh: 0.0,
            p2p_bought_kwh: 0.0,
            p2p_sold_kwh: 0.0,
        })
        .collect();
    for day in &days {
        let Some(o) = &day.outcome else { continue };
        for (i, t) in totals.iter_mut().enumerate() {
            let s = &o.settlement.homes[i];
            t.settled_cost += s.total_cost();
            t.no_der_cost += day.no_der_cost[i];
            t.solar_energy_kwh += o.responses[i].solar_kw.values().iter().sum::<f64>() * step;
            t.p2p_bought_kwh += s.p2p_bought_kwh.iter().sum::<f64>();
            t.p2p_sold_kwh += s.p2p_sold_kwh.iter().sum::<f64>();
        }
    }
    for t in &mut totals {
        t.benefit = t.no_der_cost - t.settled_cost;
    }
    SimulationResult {
        name: config.name.clone(),
        seed: config.seed,
        events: trace,
        days,
        totals,
    }
}

/// Samples events, runs every day and totals the settlements per home.
///
/// Failing days keep their error and the run continues.
pub fn simulate_horizon(config: &ScenarioConfig) -> SimulationResult {
    run(config)
}

pub fn simulate_horizon_with(
    config: &ScenarioConfig,
    options: SimulationOptions,
) -> Result<SimulationResult, SimulationError> {
    match options.workers {
        None => Ok(run(config)),
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| SimulationError::Workers {
                    workers,
                    reason: e.to_string(),
                })?;
            Ok(pool.install(|| run(config)))
        }
    }
}

/// Power drawn from the utility per step (kW, positive = community imports).
///
/// Uses the slack of the DC flow solution; steps without one (network down or a
/// failed flow) fall back to the sum of household net imports.
pub fn net_load_curve(result: &SimulationResult, day: u32) -> Result<TimeSeries, SimulationError> {
    let d = result.days.get(day as usize).ok_or(SimulationError::DayOutOfRange {
        day,
        horizon: result.days.len() as u32,
    })?;
    let o = d.outcome.as_ref().ok_or_else(|| SimulationError::NoDispatch {
        day,
        reason: d.error.clone().unwrap_or_default(),
    })?;
    let grid = *o.price.prices.grid();
    let values = (0..grid.n_steps())
        .map(|t| match &o.flows[t] {
            Some(f) => f.slack_injection_kw,
            None => o.responses.iter().map(|r| r.net_import(t)).sum(),
        })
        .collect();
    Ok(TimeSeries::new(grid, values).expect("finite net load"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_config;
    use approx::assert_abs_diff_eq;

    fn solar_home(days: u32, outage: f64, p2p_outage: f64) -> ScenarioConfig {
        parse_config(&format!(
            r#"
name = "solar"
seed = 11
horizon_days = {days}
[grid]
step_hours = 1.0
n_steps = 24
[tariff]
kind = "net-metering"
rate = 0.24
[events]
solar_inverter_outage_daily_prob = {outage}
p2p_network_outage_daily_prob = {p2p_outage}
[topology]
nodes = [{{ id = "h1", kind = "home" }}, {{ id = "utility", kind = "utility" }}]
lines = [{{ from = "h1", to = "utility", capacity_kw = 20 }}]
[[homes]]
id = "h1"
solar = {{ peak_kw = 5.0 }}
"#
        ))
        .unwrap()
    }

    #[test]
    fn sunny_year_revenue() {
        let r = simulate_horizon(&solar_home(250, 0.0, 0.0));
        assert_abs_diff_eq!(r.totals[0].benefit, 2268.0, epsilon = 1e-6);
        assert_abs_diff_eq!(r.totals[0].solar_energy_kwh, 250.0 * 37.8, epsilon = 1e-6);
    }

    #[test]
    fn outages_cost_whole_days() {
        let c = solar_home(250, 0.02, 0.0);
        let r = simulate_horizon(&c);
        let lost = r.events.count(super::super::EventKind::SolarInverterOutage) as f64;
        assert!(lost > 0.0);
        assert_abs_diff_eq!(r.totals[0].benefit, 2268.0 - lost * 9.072, epsilon = 1e-6);
    }

    #[test]
    fn network_down_settles_with_utility() {
        let r = simulate_horizon(&solar_home(5, 0.0, 1.0));
        assert!(r.days.iter().all(|d| !d.p2p_enabled));
        assert_eq!(r.totals[0].p2p_sold_kwh, 0.0);
        assert_abs_diff_eq!(r.totals[0].benefit, 5.0 * 9.072, epsilon = 1e-9);
        let curve = net_load_curve(&r, 0).unwrap();
        assert!(curve.get(15) < 0.0);
    }

    #[test]
    fn day_out_of_range() {
        let r = simulate_horizon(&solar_home(1, 0.0, 0.0));
        assert!(matches!(
            net_load_curve(&r, 3),
            Err(SimulationError::DayOutOfRange { .. })
        ));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = solar_home(20, 0.2, 0.2);
        let one = simulate_horizon_with(&c, SimulationOptions { workers: Some(1) }).unwrap();
        let four = simulate_horizon_with(&c, SimulationOptions { workers: Some(4) }).unwrap();
        assert_eq!(one, four);
    }
}
