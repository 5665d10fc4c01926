//! Neighbourhood transactive-energy simulation: household scheduling, a community
//! DC grid coordinated by a peer price, outage scenarios and payback economics.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod devices;
pub mod economics;
pub mod grid;
pub mod house;
pub mod market;
pub mod model;
pub mod scenario;

pub use devices::{Appliance, BessSpec, BessState, DeviceError, HomeSpec, SolarArraySpec};
pub use economics::{
    discounted_payback, npv, run_case_study, simple_payback, CaseStudyReport, CashflowSchedule, EconomicsError, Payback,
};
pub use grid::{solve_flows, validate_topology, FlowSolution, GridError, GridTopology, Line, NodeKind};
pub use house::{brute_force_house, respond_to_price, solve_house, HouseError, HouseProblem, HouseResponse, Schedule};
pub use market::{
    run_market, settle_ledger, update_price, MarketConfig, MarketError, MarketIssue, MarketOutcome, PriceSignal,
    Settlement,
};
pub use model::{integrate_energy, ModelError, TariffKind, TariffSchedule, TimeGrid, TimeSeries};
pub use scenario::{
    net_load_curve, parse_config, sample_events, simulate_horizon, ConfigError, EventTrace, ScenarioConfig,
    SimulationResult,
};
