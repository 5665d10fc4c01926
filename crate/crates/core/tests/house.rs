use duckgrid_core::devices::{Appliance, BessSpec, HomeSpec, SolarArraySpec};
use duckgrid_core::house::{brute_force_house, solve_house, HouseError, HouseProblem};
use duckgrid_core::model::{TariffSchedule, TimeGrid, TimeSeries};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Case {
    load: Vec<f64>,
    solar_kw: Option<f64>,
    bess: Option<(f64, f64, f64)>,
    appliances: Vec<(f64, usize, usize, usize, bool)>,
    discomfort: Option<Vec<f64>>,
    islanded: bool,
    rates: (f64, f64),
}

fn case() -> impl Strategy<Value = Case> {
    (3usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(0.0..2.5f64, n),
            prop::option::of(1.0..9.0f64),
            prop::option::of((2.0..14.0f64, 1.0..6.0f64, 0.75..1.0f64)),
            prop::collection::vec((0.3..2.5f64, 0..n, 0..n, 1usize..3, any::<bool>()), 0..3),
            prop::option::of(prop::collection::vec(0.0..0.2f64, n)),
            prop::bool::weighted(0.3),
            (0.2..0.45f64, 0.0..0.2f64),
        )
            .prop_map(|(load, solar_kw, bess, appliances, discomfort, islanded, rates)| Case {
                load,
                solar_kw,
                bess,
                appliances,
                discomfort,
                islanded,
                rates,
            })
    })
}

fn problem(c: &Case) -> HouseProblem {
    let n = c.load.len();
    let grid = TimeGrid::new(10.0, 1.0, n).unwrap();
    let mut home = HomeSpec::with_load("h", TimeSeries::new(grid, c.load.clone()).unwrap());
    home.solar = c.solar_kw.map(|peak_kw| SolarArraySpec {
        peak_kw,
        ..Default::default()
    });
    home.bess = c
        .bess
        .map(|(capacity_kwh, continuous_power_kw, round_trip_efficiency)| BessSpec {
            capacity_kwh,
            continuous_power_kw,
            round_trip_efficiency,
            discharge_applies_loss: true,
        });
    for (k, &(power_kw, a, b, duration, interruptible)) in c.appliances.iter().enumerate() {
        let (earliest, latest) = (a.min(b), a.max(b));
        home.appliances.push(Appliance {
            name: format!("a{k}"),
            power_kw,
            duration_steps: duration.min(latest - earliest + 1),
            earliest_step: earliest,
            latest_step: latest,
            interruptible,
        });
    }
    let tariff = TariffSchedule::flat(grid, c.rates.0, c.rates.1).unwrap();
    let mut p = HouseProblem::new(home, tariff);
    p.islanded = c.islanded;
    p.discomfort = c.discomfort.as_ref().map(|d| TimeSeries::new(grid, d.clone()).unwrap());
    if let Some(b) = &p.home.bess {
        p.initial_soc_kwh = 0.5 * b.capacity_kwh;
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_matches_enumeration(c in case()) {
        let p = problem(&c);
        prop_assume!(p.binary_count() <= 14);
        match (solve_house(&p), brute_force_house(&p)) {
            (Ok(fast), Ok(slow)) => {
                prop_assert!((fast.cost - slow.cost).abs() <= 1e-9, "{} vs {}", fast.cost, slow.cost);
                prop_assert_eq!(&fast.schedule.appliance_choice, &slow.schedule.appliance_choice);
                prop_assert!(fast.balance_residual(p.home.bess.as_ref().map_or(1.0, |b| b.discharge_efficiency())) < 1e-9);
            }
            (Err(HouseError::Infeasible { .. }), Err(HouseError::Infeasible { .. })) => {}
            (a, b) => prop_assert!(false, "solver {:?} vs oracle {:?}", a.map(|r| r.cost), b.map(|r| r.cost)),
        }
    }

    #[test]
    fn islanded_homes_never_touch_the_utility(c in case()) {
        let p = problem(&Case { islanded: true, ..c });
        if let Ok(r) = solve_house(&p) {
            prop_assert!(r.schedule.utility_exchange.iter().all(|&u| u == 0.0));
        }
    }
}
