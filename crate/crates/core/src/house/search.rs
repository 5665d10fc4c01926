use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::dispatch::{optimal_dispatch, Dispatch, Mode};
use super::{Candidate, HouseError, HouseProblem, HouseResponse, Prepared, COST_TOLERANCE};

/// Largest binary count [`brute_force_house`] accepts.
pub const MAX_ORACLE_BINARIES: usize = 20;

/// Best solution so far, ordered by cost then by appliance placement vector.
struct Incumbent {
    cost: f64,
    choice: Vec<usize>,
    candidate: Candidate,
}

fn better(cost: f64, choice: &[usize], best: &Option<Incumbent>) -> bool {
    match best {
        None => true,
        Some(b) => cost < b.cost - COST_TOLERANCE || (cost <= b.cost + COST_TOLERANCE && choice < b.choice.as_slice()),
    }
}

fn finish(prep: &Prepared, best: Option<Incumbent>) -> Result<HouseResponse, HouseError> {
    let home = prep.problem.home.id.clone();
    let Some(best) = best else {
        return Err(HouseError::Infeasible {
            home,
            constraint: infeasibility_reason(prep),
        });
    };
    if let Some(step) = best.candidate.shortfall {
        return Err(HouseError::Infeasible {
            home,
            constraint: format!("islanded home cannot balance demand at step {step}"),
        });
    }
    Ok(best.candidate.response)
}

fn infeasibility_reason(prep: &Prepared) -> String {
    let base = prep.problem.home.fixed_load.values();
    let limit = prep.problem.home.service_limit_kw;
    for (a, appliance) in prep.problem.home.appliances.iter().enumerate() {
        let fits = prep.placements[a]
            .iter()
            .any(|p| p.iter().all(|&t| base[t] + appliance.power_kw <= limit + 1e-9));
        if !fits {
            return format!(
                "appliance `{}` cannot fit its window under the {limit} kW service limit",
                appliance.name
            );
        }
    }
    format!("appliances cannot be placed together under the {limit} kW service limit")
}

/// Node of the best-first search.
struct Node {
    bound: f64,
    choice: Vec<usize>,
    modes: Vec<Mode>,
    load: Vec<f64>,
    dispatch: Dispatch,
    seq: u64,
}

impl Node {
    /// Smallest full placement vector this node can still produce.
    fn min_key(&self, n_appliances: usize) -> Vec<usize> {
        let mut key = self.choice.clone();
        key.resize(n_appliances, 0);
        key
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the greatest: invert so the lowest bound comes first,
    // then the lexicographically smallest placement, then the oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.choice.cmp(&self.choice))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Search<'p, 'a> {
    prep: &'p Prepared<'a>,
    heap: BinaryHeap<Node>,
    seq: u64,
    best: Option<Incumbent>,
    unplaced_bound: Vec<f64>,
}

impl<'p, 'a> Search<'p, 'a> {
    fn push(&mut self, choice: Vec<usize>, modes: Vec<Mode>) {
        let load = self.prep.consumption(&choice);
        if self.prep.service_violation(&load).is_some() {
            return;
        }
        let prices = self.prep.step_prices(&load);
        let dispatch = optimal_dispatch(self.prep.step_hours, &prices, self.prep.storage.as_ref(), &modes);
        let placed_penalty: f64 = choice
            .iter()
            .enumerate()
            .map(|(a, &p)| self.prep.placement_penalty(a, p))
            .sum();
        let bound = dispatch.cost + placed_penalty + self.unplaced_bound[choice.len()];
        self.seq += 1;
        self.heap.push(Node {
            bound,
            choice,
            modes,
            load,
            dispatch,
            seq: self.seq,
        });
    }

    fn prunable(&self, node: &Node, n_appliances: usize) -> bool {
        match &self.best {
            None => false,
            Some(b) => {
                node.bound > b.cost + COST_TOLERANCE
                    || (node.bound >= b.cost - COST_TOLERANCE && node.min_key(n_appliances) >= b.choice)
            }
        }
    }

    fn run(mut self) -> Option<Incumbent> {
        let n_app = self.prep.placements.len();
        let n_steps = self.prep.n_steps();
        let root_modes = if self.prep.storage.is_some() {
            vec![Mode::Free; n_steps]
        } else {
            Vec::new()
        };
        self.push(Vec::new(), root_modes);
        while let Some(node) = self.heap.pop() {
            if self.prunable(&node, n_app) {
                continue;
            }
            if node.choice.len() < n_app {
                let a = node.choice.len();
                for p in 0..self.prep.placements[a].len() {
                    let mut choice = node.choice.clone();
                    choice.push(p);
                    self.push(choice, node.modes.clone());
                }
                continue;
            }
            match node
                .dispatch
                .simultaneous_steps()
                .find(|&t| node.modes[t] == Mode::Free)
            {
                Some(t) => {
                    for mode in [Mode::Charge, Mode::Discharge] {
                        let mut modes = node.modes.clone();
                        modes[t] = mode;
                        self.push(node.choice.clone(), modes);
                    }
                }
                None => {
                    let candidate = self.prep.response(&node.choice, &node.load, &node.dispatch);
                    let cost = candidate.response.cost;
                    if better(cost, &node.choice, &self.best) {
                        self.best = Some(Incumbent {
                            cost,
                            choice: node.choice,
                            candidate,
                        });
                    }
                }
            }
        }
        self.best
    }
}

/// Cost-minimising schedule by best-first branch and bound.
///
/// Integer choices are appliance placements and per-step battery mode bits; every
/// node's bound is the exact optimum of its continuous relaxation (mode bits left
/// free, unplaced appliances valued at their cheapest sell-priced slots). Among
/// equal-cost optima the lexicographically smallest placement vector wins, i.e.
/// the earliest start for the lowest-indexed appliance.
pub fn solve_house(problem: &HouseProblem) -> Result<HouseResponse, HouseError> {
    let prep = Prepared::new(problem)?;
    let n_app = prep.placements.len();
    // unplaced_bound[k] = Σ over appliances k.. of their stand-alone lower bounds
    let mut unplaced_bound = vec![0.0; n_app + 1];
    for a in (0..n_app).rev() {
        unplaced_bound[a] = unplaced_bound[a + 1] + prep.appliance_lower_bound(a);
    }
    let search = Search {
        prep: &prep,
        heap: BinaryHeap::new(),
        seq: 0,
        best: None,
        unplaced_bound,
    };
    let best = search.run();
    finish(&prep, best)
}

/// Exhaustive enumeration over all appliance placements and battery mode bits.
pub fn brute_force_house(problem: &HouseProblem) -> Result<HouseResponse, HouseError> {
    let count = problem.binary_count();
    if count > MAX_ORACLE_BINARIES {
        return Err(HouseError::TooManyBinaries {
            count,
            max: MAX_ORACLE_BINARIES,
        });
    }
    let prep = Prepared::new(problem)?;
    let sizes: Vec<usize> = prep.placements.iter().map(|p| p.len()).collect();
    let n_steps = prep.n_steps();
    let mode_sets: u64 = if prep.storage.is_some() { 1 << n_steps } else { 1 };
    let mut best: Option<Incumbent> = None;
    let mut choice = vec![0usize; sizes.len()];
    loop {
        let load = prep.consumption(&choice);
        if prep.service_violation(&load).is_none() {
            let prices = prep.step_prices(&load);
            for bits in 0..mode_sets {
                let modes: Vec<Mode> = if prep.storage.is_some() {
                    (0..n_steps)
                        .map(|t| {
                            if bits >> t & 1 == 1 {
                                Mode::Charge
                            } else {
                                Mode::Discharge
                            }
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                let dispatch = optimal_dispatch(prep.step_hours, &prices, prep.storage.as_ref(), &modes);
                let candidate = prep.response(&choice, &load, &dispatch);
                let cost = candidate.response.cost;
                if better(cost, &choice, &best) {
                    best = Some(Incumbent {
                        cost,
                        choice: choice.clone(),
                        candidate,
                    });
                }
            }
        }
        // odometer over placements, last appliance fastest
        let mut k = sizes.len();
        loop {
            if k == 0 {
                return finish(&prep, best);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
        }
    }
}
