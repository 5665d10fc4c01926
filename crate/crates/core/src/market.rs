//! Community price coordination and settlement.
//!
//! A coordinator broadcasts one peer-to-peer price per step. Each home answers with
//! its cost-minimising schedule at that price, the coordinator measures the
//! community's peer imbalance (offered supply minus demand) and moves the price
//! against it by a projected subgradient step, clamped to the band between the
//! utility export and import rates. At the band edges one side of the market is
//! indifferent between its peers and the utility; that side's volume is rationed
//! pro-rata to clear the other side, and whatever cannot be matched falls back to
//! the utility at tariff.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{solve_flows, validate_topology, FlowSolution, GridError, GridTopology, NodeKind, TopologyDefect};
use crate::house::{respond_to_price, solve_house, HouseError, HouseProblem, HouseResponse};
use crate::model::{ModelError, TariffSchedule, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketConfig {
    pub max_iterations: usize,
    /// Price change in $/kWh per kW of imbalance.
    pub step_size: f64,
    pub tolerance_kw: f64,
    /// Iterations run at the full step size before it decays as `step_size/√k`.
    pub constant_step_iterations: usize,
    /// Daily cost of community storage recovered from its users ($).
    pub storage_daily_cost: f64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_size: 0.005,
            tolerance_kw: 1e-6,
            constant_step_iterations: 50,
            storage_daily_cost: 0.0,
        }
    }
}

impl MarketConfig {
    pub fn validate(&self) -> Result<(), MarketError> {
        if !(self.step_size > 0.0) || !(self.tolerance_kw > 0.0) || self.max_iterations == 0 {
            return Err(MarketError::InvalidConfig(format!(
                "step_size {} and tolerance_kw {} must be > 0, max_iterations {} >= 1",
                self.step_size, self.tolerance_kw, self.max_iterations
            )));
        }
        if !(self.storage_daily_cost >= 0.0) {
            return Err(MarketError::InvalidConfig("storage_daily_cost must be >= 0".into()));
        }
        Ok(())
    }

    /// Step size used at (1-based) iteration `k`.
    pub fn step_at(&self, k: usize) -> f64 {
        if k <= self.constant_step_iterations {
            self.step_size
        } else {
            self.step_size / (k as f64).sqrt()
        }
    }
}

/// Acceptable price interval per step: `[export rate, import rate]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBand {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl PriceBand {
    pub fn from_tariff(tariff: &TariffSchedule) -> Self {
        Self {
            low: tariff.export_rates().to_vec(),
            high: tariff.import_rates().to_vec(),
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.low.iter().zip(&self.high).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains(&self, step: usize, price: f64) -> bool {
        price >= self.low[step] - 1e-12 && price <= self.high[step] + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSignal {
    pub prices: TimeSeries,
}

/// Projected subgradient step: `p ← clamp(p − step·imbalance, band)`.
///
/// Positive imbalance is excess supply and lowers the price.
pub fn update_price(price: &PriceSignal, imbalance_kw: &[f64], band: &PriceBand, step_size: f64) -> PriceSignal {
    let values = price
        .prices
        .values()
        .iter()
        .zip(imbalance_kw)
        .enumerate()
        .map(|(t, (&p, &imb))| (p - step_size * imb).clamp(band.low[t], band.high[t]))
        .collect();
    PriceSignal {
        prices: TimeSeries::new(*price.prices.grid(), values).expect("clamped prices are finite"),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("market needs at least one home")]
    NoHomes,
    #[error("invalid market config: {0}")]
    InvalidConfig(String),
    #[error("invalid topology: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Topology(Vec<TopologyDefect>),
    #[error("home `{0}` has no home or storage node in the topology")]
    HomeNotInTopology(String),
    #[error("duplicate home id `{0}`")]
    DuplicateHome(String),
    #[error("home `{0}` uses a different time grid or tariff from the first home")]
    Inconsistent(String),
    #[error("home `{home}`: {source}")]
    House { home: String, source: HouseError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Problems that do not stop the market but are reported with its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarketIssue {
    NonConvergence {
        iterations: usize,
        residual_kw: f64,
    },
    Congestion {
        step: usize,
        line: String,
        flow_kw: f64,
        capacity_kw: f64,
    },
    UtilityLimit {
        step: usize,
        slack_kw: f64,
        limit_kw: f64,
    },
    Flow {
        step: usize,
        message: String,
    },
}

impl std::fmt::Display for MarketIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NonConvergence { iterations, residual_kw } => write!(
                f,
                "price iteration stopped after {iterations} rounds with {residual_kw:.6} kW imbalance absorbed by the utility"
            ),
            Self::Congestion { step, line, flow_kw, capacity_kw } => {
                write!(f, "congestion at step {step}: line {line} carries {flow_kw:.6} kW > {capacity_kw} kW")
            }
            Self::UtilityLimit { step, slack_kw, limit_kw } => {
                write!(f, "utility exchange {slack_kw:.6} kW exceeds {limit_kw} kW at step {step}")
            }
            Self::Flow { step, message } => write!(f, "flow solve failed at step {step}: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    pub max_imbalance_kw: f64,
    pub price_min: f64,
    pub price_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeSettlement {
    pub home_id: String,
    pub community_storage: bool,
    pub p2p_bought_kwh: Vec<f64>,
    pub p2p_sold_kwh: Vec<f64>,
    /// Net paid to peers ($, negative = received).
    pub p2p_payment: f64,
    /// Net paid to the utility ($, negative = received).
    pub utility_payment: f64,
    /// Share of community storage results ($, negative = credit).
    pub storage_allocation: f64,
}

impl HomeSettlement {
    pub fn total_cost(&self) -> f64 {
        self.p2p_payment + self.utility_payment + self.storage_allocation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub homes: Vec<HomeSettlement>,
    /// Matched peer energy per step (kWh).
    pub matched_kwh: Vec<f64>,
    /// Sum of peer payments across homes per step; zero up to rounding.
    pub p2p_payment_sums: Vec<f64>,
}

impl Settlement {
    pub fn community_storage_allocation(&self) -> Vec<f64> {
        self.homes.iter().map(|h| h.storage_allocation).collect()
    }
}

/// Settles peer trades at the clearing price and everything else at tariff.
///
/// Per step the matched volume is `min(Σ sells, Σ buys)`, shared pro-rata over
/// each side. Homes listed in `storage` are community storage: their net result
/// plus `storage_daily_cost` is passed on to the homes that traded with them, in
/// proportion to that energy.
pub fn settle_ledger(
    responses: &[HouseResponse],
    price: &PriceSignal,
    tariff: &TariffSchedule,
    storage: &[usize],
    storage_daily_cost: f64,
) -> Settlement {
    let grid = price.prices.grid();
    let h = grid.step_hours();
    let n = grid.n_steps();
    let m = responses.len();
    let storage: HashSet<usize> = storage.iter().copied().collect();
    let mut homes: Vec<HomeSettlement> = responses
        .iter()
        .enumerate()
        .map(|(i, r)| HomeSettlement {
            home_id: r.home_id.clone(),
            community_storage: storage.contains(&i),
            p2p_bought_kwh: vec![0.0; n],
            p2p_sold_kwh: vec![0.0; n],
            p2p_payment: 0.0,
            utility_payment: 0.0,
            storage_allocation: 0.0,
        })
        .collect();
    let mut matched_kwh = vec![0.0; n];
    let mut sums = vec![0.0; n];
    // usage[s][i]: energy home i traded against storage s
    let mut usage: BTreeMap<usize, Vec<f64>> = storage.iter().map(|&s| (s, vec![0.0; m])).collect();
    for t in 0..n {
        let p = price.prices.get(t);
        let (import, export) = (tariff.import_rates()[t], tariff.export_rates()[t]);
        let buys: Vec<f64> = responses
            .iter()
            .map(|r| r.schedule.p2p_exchange[t].max(0.0) * h)
            .collect();
        let sells: Vec<f64> = responses
            .iter()
            .map(|r| (-r.schedule.p2p_exchange[t]).max(0.0) * h)
            .collect();
        let (total_buy, total_sell): (f64, f64) = (buys.iter().sum(), sells.iter().sum());
        let matched = total_buy.min(total_sell);
        matched_kwh[t] = matched;
        let buy_share = if total_buy > 0.0 { matched / total_buy } else { 0.0 };
        let sell_share = if total_sell > 0.0 { matched / total_sell } else { 0.0 };
        let mut step_sum = 0.0;
        for i in 0..m {
            let bought = buys[i] * buy_share;
            let sold = sells[i] * sell_share;
            let home = &mut homes[i];
            home.p2p_bought_kwh[t] = bought;
            home.p2p_sold_kwh[t] = sold;
            let pay = p * bought - p * sold;
            home.p2p_payment += pay;
            step_sum += pay;
            // unmatched peer volume falls back to the utility
            let utility = responses[i].schedule.utility_exchange[t] * h + (buys[i] - bought) - (sells[i] - sold);
            home.utility_payment += if utility > 0.0 {
                import * utility
            } else {
                export * utility
            };
        }
        sums[t] = step_sum;
        for (&s, used) in usage.iter_mut() {
            let (s_sold, s_bought) = (homes[s].p2p_sold_kwh[t], homes[s].p2p_bought_kwh[t]);
            for i in 0..m {
                if i == s || storage.contains(&i) {
                    continue;
                }
                if matched > 0.0 {
                    used[i] +=
                        homes[i].p2p_bought_kwh[t] * s_sold / matched + homes[i].p2p_sold_kwh[t] * s_bought / matched;
                }
            }
        }
    }
    for (&s, used) in &usage {
        let total: f64 = used.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let to_recover = homes[s].p2p_payment + homes[s].utility_payment + storage_daily_cost;
        homes[s].storage_allocation -= to_recover;
        for (i, &u) in used.iter().enumerate() {
            homes[i].storage_allocation += to_recover * u / total;
        }
    }
    Settlement {
        homes,
        matched_kwh,
        p2p_payment_sums: sums,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketStatus {
    Converged,
    IterationCap,
    /// Fewer than two participants: nothing to coordinate.
    NoPeers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub price: PriceSignal,
    /// Dispatched responses after rationing at the final price.
    pub responses: Vec<HouseResponse>,
    /// Per-step DC flows; `None` where the flow solve reported an issue.
    pub flows: Vec<Option<FlowSolution>>,
    pub settlement: Settlement,
    pub status: MarketStatus,
    pub iterations: usize,
    /// Peer imbalance left at the final price, per step (kW).
    pub residual_kw: Vec<f64>,
    pub trace: Vec<IterationTrace>,
    pub issues: Vec<MarketIssue>,
    /// Utility-only cost per home; `None` for islanded homes.
    pub utility_only_cost: Vec<Option<f64>>,
}

impl MarketOutcome {
    pub fn max_residual_kw(&self) -> f64 {
        self.residual_kw.iter().fold(0.0, |a, &b| a.max(b.abs()))
    }
}

/// Offered peer volumes at one step.
#[derive(Debug, Clone, Copy, Default)]
struct Book {
    supply: f64,
    demand: f64,
    flex_supply: f64,
    flex_demand: f64,
}

impl Book {
    fn at(responses: &[HouseResponse], t: usize) -> Self {
        let mut b = Book::default();
        for r in responses {
            let x = r.schedule.p2p_exchange[t];
            let f = r.p2p_flexible_kw[t];
            b.demand += x.max(0.0);
            b.supply += (-x).max(0.0);
            b.flex_demand += f.max(0.0);
            b.flex_supply += (-f).max(0.0);
        }
        b
    }

    /// Excess supply left after using every indifferent offer.
    fn imbalance(&self) -> f64 {
        if self.supply > self.demand + self.flex_demand {
            self.supply - self.demand - self.flex_demand
        } else if self.demand > self.supply + self.flex_supply {
            -(self.demand - self.supply - self.flex_supply)
        } else {
            0.0
        }
    }
}

fn imbalances(responses: &[HouseResponse], n: usize) -> Vec<f64> {
    (0..n).map(|t| Book::at(responses, t).imbalance()).collect()
}

/// Moves indifferent volume onto the peer channel where the other side needs it.
fn ration(responses: &mut [HouseResponse]) {
    let n = responses.first().map_or(0, |r| r.injection.len());
    for t in 0..n {
        let book = Book::at(responses, t);
        if book.demand > book.supply && book.flex_supply > 0.0 {
            let used = (book.demand - book.supply).min(book.flex_supply);
            let share = used / book.flex_supply;
            for r in responses.iter_mut() {
                let f = r.p2p_flexible_kw[t];
                if f < 0.0 {
                    let moved = -f * share;
                    let s = &mut r.schedule;
                    s.p2p_exchange[t] -= moved;
                    if s.curtailed_kw[t] >= moved {
                        s.curtailed_kw[t] -= moved;
                    } else {
                        s.utility_exchange[t] += moved;
                    }
                    r.p2p_flexible_kw[t] = f + moved;
                }
            }
        } else if book.supply > book.demand && book.flex_demand > 0.0 {
            let used = (book.supply - book.demand).min(book.flex_demand);
            let share = used / book.flex_demand;
            for r in responses.iter_mut() {
                let f = r.p2p_flexible_kw[t];
                if f > 0.0 {
                    let moved = f * share;
                    r.schedule.p2p_exchange[t] += moved;
                    r.schedule.utility_exchange[t] -= moved;
                    r.p2p_flexible_kw[t] = f - moved;
                }
            }
        }
    }
}

fn node_injections(topo: &GridTopology, responses: &[HouseResponse], t: usize) -> Vec<f64> {
    let mut out = vec![0.0; topo.nodes.len()];
    for r in responses {
        if let Some(i) = topo.index_of(&r.home_id) {
            out[i] += -r.net_import(t);
        }
    }
    out
}

/// Per-step DC flows for dispatched responses, with issues for failed steps.
pub fn dispatch_flows(
    topo: &GridTopology,
    responses: &[HouseResponse],
    n_steps: usize,
) -> (Vec<Option<FlowSolution>>, Vec<MarketIssue>) {
    let mut flows = Vec::with_capacity(n_steps);
    let mut issues = Vec::new();
    for t in 0..n_steps {
        match solve_flows(topo, &node_injections(topo, responses, t)) {
            Ok(sol) => flows.push(Some(sol)),
            Err(e) => {
                issues.push(match e {
                    GridError::LineLimit {
                        line,
                        flow_kw,
                        capacity_kw,
                        ..
                    } => MarketIssue::Congestion {
                        step: t,
                        line,
                        flow_kw,
                        capacity_kw,
                    },
                    GridError::SlackLimit { slack_kw, limit_kw } => MarketIssue::UtilityLimit {
                        step: t,
                        slack_kw,
                        limit_kw,
                    },
                    other => MarketIssue::Flow {
                        step: t,
                        message: other.to_string(),
                    },
                });
                flows.push(None);
            }
        }
    }
    (flows, issues)
}

fn check_homes(homes: &[HouseProblem], topo: &GridTopology) -> Result<Vec<usize>, MarketError> {
    let first = homes.first().ok_or(MarketError::NoHomes)?;
    let defects = validate_topology(topo);
    if !defects.is_empty() {
        return Err(MarketError::Topology(defects));
    }
    let mut seen = HashSet::new();
    let mut storage = Vec::new();
    for (i, hp) in homes.iter().enumerate() {
        let id = &hp.home.id;
        if !seen.insert(id.as_str()) {
            return Err(MarketError::DuplicateHome(id.clone()));
        }
        if hp.grid() != first.grid() || hp.tariff != first.tariff {
            return Err(MarketError::Inconsistent(id.clone()));
        }
        match topo.nodes.iter().find(|n| &n.id == id).map(|n| n.kind) {
            Some(NodeKind::Home) => {}
            Some(NodeKind::CommunityStorage) => storage.push(i),
            _ => return Err(MarketError::HomeNotInTopology(id.clone())),
        }
    }
    Ok(storage)
}

fn solve_all(
    homes: &[HouseProblem],
    solve: impl Fn(&HouseProblem) -> Result<HouseResponse, HouseError> + Sync,
) -> Result<Vec<HouseResponse>, MarketError> {
    // indexed collect keeps home order regardless of worker count
    homes
        .par_iter()
        .map(|hp| {
            solve(hp).map_err(|source| MarketError::House {
                home: hp.home.id.clone(),
                source,
            })
        })
        .collect()
}

/// Runs price coordination to a fixed point (or the iteration cap), then
/// dispatches, solves the DC flows step by step and settles.
pub fn run_market(
    homes: &[HouseProblem],
    topo: &GridTopology,
    config: &MarketConfig,
) -> Result<MarketOutcome, MarketError> {
    config.validate()?;
    let storage = check_homes(homes, topo)?;
    let grid = *homes[0].grid();
    let tariff = &homes[0].tariff;
    let n = grid.n_steps();
    let band = PriceBand::from_tariff(tariff);

    let utility_only_cost: Vec<Option<f64>> = homes
        .par_iter()
        .map(|hp| {
            if hp.islanded {
                None
            } else {
                solve_house(&HouseProblem {
                    p2p_price: None,
                    ..hp.clone()
                })
                .ok()
                .map(|r| r.cost)
            }
        })
        .collect();

    let mut price = PriceSignal {
        prices: TimeSeries::new(grid, band.midpoint())?,
    };
    let mut trace = Vec::new();
    let (mut responses, status, iterations, residual) = if homes.len() < 2 {
        let responses = solve_all(homes, |hp| {
            solve_house(&HouseProblem {
                p2p_price: None,
                ..hp.clone()
            })
        })?;
        (responses, MarketStatus::NoPeers, 0, vec![0.0; n])
    } else {
        let mut k = 0;
        loop {
            k += 1;
            let responses = solve_all(homes, |hp| respond_to_price(hp, &price.prices))?;
            let imbalance = imbalances(&responses, n);
            let worst = imbalance.iter().fold(0.0, |a: f64, &b| a.max(b.abs()));
            let values = price.prices.values();
            trace.push(IterationTrace {
                iteration: k,
                max_imbalance_kw: worst,
                price_min: values.iter().copied().fold(f64::INFINITY, f64::min),
                price_max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
            if worst < config.tolerance_kw {
                break (responses, MarketStatus::Converged, k, imbalance);
            }
            if k >= config.max_iterations {
                break (responses, MarketStatus::IterationCap, k, imbalance);
            }
            price = update_price(&price, &imbalance, &band, config.step_at(k));
        }
    };

    ration(&mut responses);
    let (flows, mut issues) = dispatch_flows(topo, &responses, n);
    if status == MarketStatus::IterationCap {
        let worst = residual.iter().fold(0.0, |a: f64, &b| a.max(b.abs()));
        issues.insert(
            0,
            MarketIssue::NonConvergence {
                iterations,
                residual_kw: worst,
            },
        );
    }
    let settlement = settle_ledger(&responses, &price, tariff, &storage, config.storage_daily_cost);
    Ok(MarketOutcome {
        price,
        responses,
        flows,
        settlement,
        status,
        iterations,
        residual_kw: residual,
        trace,
        issues,
        utility_only_cost,
    })
}

/// Largest gap between each home's dispatched net injection and a fresh response
/// at the final price (kW).
pub fn fixed_point_residual(homes: &[HouseProblem], outcome: &MarketOutcome) -> Result<f64, MarketError> {
    let fresh = if outcome.status == MarketStatus::NoPeers {
        solve_all(homes, |hp| {
            solve_house(&HouseProblem {
                p2p_price: None,
                ..hp.clone()
            })
        })?
    } else {
        solve_all(homes, |hp| respond_to_price(hp, &outcome.price.prices))?
    };
    let mut worst: f64 = 0.0;
    for (a, b) in fresh.iter().zip(&outcome.responses) {
        for t in 0..a.injection.len() {
            worst = worst.max((a.net_import(t) - b.net_import(t)).abs());
        }
    }
    Ok(worst)
}
