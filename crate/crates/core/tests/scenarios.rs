use std::path::PathBuf;

use duckgrid_core::market::MarketStatus;
use duckgrid_core::scenario::{parse_config, simulate_horizon, ScenarioConfig};

fn bundled(name: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn every_bundled_scenario_parses() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scn") {
            bundled(path.file_name().unwrap().to_str().unwrap());
            seen += 1;
        }
    }
    assert!(seen >= 6);
}

#[test]
fn single_home_battery_shifts_to_the_peak() {
    let c = bundled("case2.scn");
    let r = simulate_horizon(&c);
    assert!(r
        .days
        .iter()
        .all(|d| d.outcome.as_ref().unwrap().status == MarketStatus::NoPeers));
    let day = r.days.iter().find(|d| d.events.inverter_out.is_empty()).unwrap();
    let s = &day.outcome.as_ref().unwrap().responses[0].schedule;
    let peak: f64 = (17..21).map(|t| s.bess_commands[t]).sum();
    assert!(peak < 0.0, "battery should discharge over the evening peak");
    assert!(r.totals[0].benefit > 0.0);
}

#[test]
fn community_storage_results_are_passed_on() {
    let mut c = bundled("case3.scn");
    c.horizon_days = 20;
    let r = simulate_horizon(&c);
    let storage = c.homes.iter().position(|h| h.id == "storage").unwrap();
    for d in &r.days {
        let o = d.outcome.as_ref().unwrap();
        let alloc: f64 = o.settlement.community_storage_allocation().iter().sum();
        assert!(alloc.abs() < 1e-9, "day {}: allocations sum to {alloc}", d.day);
        assert!(o.settlement.homes[storage].total_cost().abs() < 1e-9);
        for sum in &o.settlement.p2p_payment_sums {
            assert!(sum.abs() < 1e-9);
        }
    }
    assert!(r.totals[storage].p2p_sold_kwh > 0.0);
}

#[test]
fn peers_trade_in_the_small_communities() {
    for name in ["p2p_2home.scn", "p2p_5home.scn"] {
        let r = simulate_horizon(&bundled(name));
        let o = r.days[0].outcome.as_ref().unwrap();
        assert_eq!(o.status, MarketStatus::Converged, "{name}");
        assert!(o.settlement.matched_kwh.iter().sum::<f64>() > 0.0, "{name}");
        assert!(r.totals.iter().all(|t| t.benefit >= -1e-9), "{name}");
    }
}
