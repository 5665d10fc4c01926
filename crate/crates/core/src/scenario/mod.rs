//! Scenario files, outage sampling and multi-day simulation.

mod config;
mod events;
mod simulate;

pub use config::{parse_config, ConfigError, EventConfig, ScenarioConfig, SchemaIssue};
pub use events::{event_stream, sample_events, DayEvents, Event, EventKind, EventTrace};
pub use simulate::{
    net_load_curve, simulate_horizon, simulate_horizon_with, DayResult, HomeTotals, SimulationError, SimulationOptions,
    SimulationResult,
};
