//! Seeded outage sampling.
//!
//! Each (kind, home) pair gets its own ChaCha stream keyed by a SHA-256 of the
//! scenario seed and the pair, so adding a home leaves every other draw unchanged.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    SolarInverterOutage,
    P2pNetworkOutage,
}

impl EventKind {
    fn tag(self) -> &'static str {
        match self {
            Self::SolarInverterOutage => "solar-inverter-outage",
            Self::P2pNetworkOutage => "p2p-network-outage",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub day: u32,
    pub kind: EventKind,
    /// `None` for community-wide events.
    pub home: Option<String>,
}

/// What is out on one day.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DayEvents {
    pub inverter_out: BTreeSet<String>,
    pub p2p_down: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventTrace {
    pub horizon_days: u32,
    /// Sorted by day, then kind, then home.
    pub events: Vec<Event>,
}

impl EventTrace {
    pub fn day(&self, day: u32) -> DayEvents {
        let mut out = DayEvents::default();
        for e in self.events.iter().filter(|e| e.day == day) {
            match (e.kind, &e.home) {
                (EventKind::SolarInverterOutage, Some(h)) => {
                    out.inverter_out.insert(h.clone());
                }
                _ => out.p2p_down = true,
            }
        }
        out
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Stream for one (kind, subject) pair under `seed`.
pub fn event_stream(seed: u64, kind: EventKind, subject: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(kind.tag().as_bytes());
    hasher.update([0u8]);
    hasher.update(subject.as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

fn draws(seed: u64, kind: EventKind, subject: &str, prob: f64, days: u32) -> impl Iterator<Item = u32> {
    let mut rng = event_stream(seed, kind, subject);
    // one draw per day even at probability 0 or 1 keeps streams aligned
    (0..days).filter(move |_| rng.random::<f64>() < prob)
}

/// Independent daily draws per home (inverter) and for the community (network).
pub fn sample_events(config: &ScenarioConfig) -> EventTrace {
    let days = config.horizon_days;
    let p = config.events;
    let mut events = Vec::new();
    for home in &config.homes {
        if home.solar.is_none() {
            continue;
        }
        events.extend(
            draws(
                config.seed,
                EventKind::SolarInverterOutage,
                &home.id,
                p.solar_inverter_outage_daily_prob,
                days,
            )
            .map(|day| Event {
                day,
                kind: EventKind::SolarInverterOutage,
                home: Some(home.id.clone()),
            }),
        );
    }
    events.extend(
        draws(
            config.seed,
            EventKind::P2pNetworkOutage,
            "community",
            p.p2p_network_outage_daily_prob,
            days,
        )
        .map(|day| Event {
            day,
            kind: EventKind::P2pNetworkOutage,
            home: None,
        }),
    );
    events.sort();
    EventTrace {
        horizon_days: days,
        events,
    }
}
