//! Continuous battery dispatch at fixed integer choices.
//!
//! With appliance placements fixed, the remaining problem is linear: per-step
//! costs are convex piecewise-linear in the home's net exchange (buy price above
//! zero, sell price below) and the battery couples steps only through its state of
//! charge. In stored-energy units this is a min-cost flow on a time-expanded chain:
//! charging arcs feed each step's storage node, storage arcs carry SoC forward,
//! discharging arcs drain into the sink. Successive shortest paths pair the cheapest
//! charging energy with the most valuable discharge, undoing earlier pairings
//! through residual arcs where that pays, and terminate at the exact optimum.

/// Per-step operating mode of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Both charging and discharging arcs exist (relaxed).
    Free,
    Charge,
    Discharge,
}

/// Battery parameters in the units the flow works with.
#[derive(Debug, Clone, Copy)]
pub struct Storage {
    pub capacity_kwh: f64,
    pub power_kw: f64,
    pub charge_eff: f64,
    pub discharge_eff: f64,
    pub initial_soc_kwh: f64,
}

/// One step of the continuous subproblem.
#[derive(Debug, Clone, Copy)]
pub struct StepPrices {
    /// Net demand before the battery acts (kW, positive = needs energy).
    pub net_kw: f64,
    /// Marginal cost of an extra kWh drawn from outside.
    pub buy: f64,
    /// Marginal value of an extra kWh sent outside.
    pub sell: f64,
    /// Upper bound on charging input at this step (kW).
    pub charge_limit_kw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    /// Charging input power per step (kW).
    pub charge_kw: Vec<f64>,
    /// Power drawn from storage per step (kW, before discharge losses).
    pub draw_kw: Vec<f64>,
    /// SoC at the end of each step.
    pub soc_kwh: Vec<f64>,
    /// Optimal value of `Σ h·Φ_t(net + charge − η·draw)`.
    pub cost: f64,
}

impl Dispatch {
    pub fn simultaneous_steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.charge_kw
            .iter()
            .zip(&self.draw_kw)
            .enumerate()
            .filter(|(_, (&c, &d))| c > 1e-12 && d > 1e-12)
            .map(|(t, _)| t)
    }
}

/// Cost of exchanging `energy_kwh` with the outside at one step.
pub fn exchange_cost(energy_kwh: f64, buy: f64, sell: f64) -> f64 {
    if energy_kwh > 0.0 {
        buy * energy_kwh
    } else {
        sell * energy_kwh
    }
}

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
    rev: usize,
}

struct FlowGraph {
    adj: Vec<Vec<Arc>>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    /// Adds `u -> v`; returns the arc's position in `adj[u]`.
    fn add(&mut self, u: usize, v: usize, cap: f64, cost: f64, preflow: f64, reversible: bool) -> usize {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push(Arc {
            to: v,
            cap: cap - preflow,
            cost,
            rev: ru,
        });
        self.adj[v].push(Arc {
            to: u,
            cap: if reversible { preflow } else { 0.0 },
            cost: -cost,
            rev: rv,
        });
        rv
    }

    /// Bellman-Ford (queue based) shortest path tree from `s`.
    fn shortest(&self, s: usize) -> (Vec<f64>, Vec<Option<(usize, usize)>>) {
        let n = self.adj.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![None; n];
        let mut in_queue = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        dist[s] = 0.0;
        queue.push_back(s);
        in_queue[s] = true;
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for (k, a) in self.adj[u].iter().enumerate() {
                if a.cap > EPS && dist[u] + a.cost < dist[a.to] - EPS {
                    dist[a.to] = dist[u] + a.cost;
                    prev[a.to] = Some((u, k));
                    if !in_queue[a.to] {
                        in_queue[a.to] = true;
                        queue.push_back(a.to);
                    }
                }
            }
        }
        (dist, prev)
    }
}

/// Exact optimal battery dispatch for the given step data and modes.
pub fn optimal_dispatch(step_hours: f64, steps: &[StepPrices], storage: Option<&Storage>, modes: &[Mode]) -> Dispatch {
    let n = steps.len();
    let base: f64 = steps
        .iter()
        .map(|s| exchange_cost(s.net_kw * step_hours, s.buy, s.sell))
        .sum();
    let Some(bess) = storage else {
        return Dispatch {
            charge_kw: vec![0.0; n],
            draw_kw: vec![0.0; n],
            soc_kwh: vec![0.0; n],
            cost: base,
        };
    };
    debug_assert_eq!(modes.len(), n);
    let h = step_hours;
    let (ec, ed) = (bess.charge_eff, bess.discharge_eff);
    let source = 0;
    let sink = n + 1;
    let node = |t: usize| t + 1;
    let mut g = FlowGraph::new(n + 2);

    // charging and discharging arcs, remembered per step for read-back
    let mut charge_arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut draw_arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (t, s) in steps.iter().enumerate() {
        let e = s.net_kw * h;
        if modes[t] != Mode::Discharge {
            let input_cap = s.charge_limit_kw.min(bess.power_kw).max(0.0) * h;
            // surplus is charged first at its sell value, the rest is bought
            let from_surplus = (-e).max(0.0).min(input_cap);
            for (amount, price) in [(from_surplus, s.sell), (input_cap - from_surplus, s.buy)] {
                if amount > EPS {
                    let k = g.add(source, node(t), amount * ec, price / ec, 0.0, false);
                    charge_arcs[t].push(k);
                }
            }
        }
        if modes[t] != Mode::Charge {
            let deliver_cap = bess.power_kw * h * ed;
            // delivered energy first covers own demand, the surplus is sold
            let covering = e.max(0.0).min(deliver_cap);
            for (amount, price) in [(covering, s.buy), (deliver_cap - covering, s.sell)] {
                if amount > EPS {
                    let k = g.add(node(t), sink, amount / ed, -price * ed, 0.0, false);
                    draw_arcs[t].push(k);
                }
            }
        }
    }
    let s0 = bess.initial_soc_kwh;
    let mut storage_arcs = Vec::with_capacity(n);
    for t in 0..n.saturating_sub(1) {
        storage_arcs.push(g.add(node(t), node(t + 1), bess.capacity_kwh, 0.0, s0, true));
    }
    // end-of-horizon SoC must not fall below the starting SoC
    storage_arcs.push(g.add(node(n - 1), sink, bess.capacity_kwh, 0.0, s0, false));

    let mut improvement = 0.0;
    loop {
        let (dist, prev) = g.shortest(source);
        if !(dist[sink] < -EPS) {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            bottleneck = bottleneck.min(g.adj[u][k].cap);
            v = u;
        }
        if !(bottleneck > EPS) || !bottleneck.is_finite() {
            break;
        }
        let mut v = sink;
        while let Some((u, k)) = prev[v] {
            let rev = g.adj[u][k].rev;
            g.adj[u][k].cap -= bottleneck;
            g.adj[v][rev].cap += bottleneck;
            v = u;
        }
        improvement += bottleneck * dist[sink];
    }

    // flow on an arc = residual capacity of its reverse twin (minus any preflow)
    let flow_on = |g: &FlowGraph, u: usize, k: usize| {
        let a = &g.adj[u][k];
        g.adj[a.to][a.rev].cap
    };
    let mut charge_kw = vec![0.0; n];
    let mut draw_kw = vec![0.0; n];
    for t in 0..n {
        let stored: f64 = charge_arcs[t].iter().map(|&k| flow_on(&g, source, k)).sum();
        charge_kw[t] = stored / ec / h;
        let drawn: f64 = draw_arcs[t].iter().map(|&k| flow_on(&g, node(t), k)).sum();
        draw_kw[t] = drawn / h;
    }
    let mut soc = Vec::with_capacity(n);
    let mut level = s0;
    for t in 0..n {
        level += charge_kw[t] * ec * h - draw_kw[t] * h;
        soc.push(level.clamp(0.0, bess.capacity_kwh));
    }
    Dispatch {
        charge_kw,
        draw_kw,
        soc_kwh: soc,
        cost: base + improvement,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn storage() -> Storage {
        Storage {
            capacity_kwh: 13.5,
            power_kw: 5.6,
            charge_eff: 1.0,
            discharge_eff: 0.85,
            initial_soc_kwh: 0.0,
        }
    }

    fn step(net_kw: f64, buy: f64, sell: f64) -> StepPrices {
        StepPrices {
            net_kw,
            buy,
            sell,
            charge_limit_kw: 24.0,
        }
    }

    #[test]
    fn no_storage_is_plain_cost() {
        let steps = [step(1.0, 0.24, 0.1), step(-2.0, 0.24, 0.1)];
        let d = optimal_dispatch(1.0, &steps, None, &[]);
        assert_abs_diff_eq!(d.cost, 0.24 - 0.2);
    }

    #[test]
    fn arbitrage_against_evening_load() {
        // cheap midday buy, expensive evening demand of 6 kW per step
        let steps: Vec<_> = [0.10, 0.10, 0.10, 0.30, 0.30, 0.30]
            .iter()
            .enumerate()
            .map(|(t, &p)| step(if t >= 3 { 6.0 } else { 0.0 }, p, 0.0))
            .collect();
        let free = vec![Mode::Free; 6];
        let d = optimal_dispatch(1.0, &steps, Some(&storage()), &free);
        let baseline = 3.0 * 6.0 * 0.30;
        assert_abs_diff_eq!(baseline - d.cost, 11.475 * 0.30 - 1.35, epsilon = 1e-9);
        assert_abs_diff_eq!(d.soc_kwh[2], 13.5, epsilon = 1e-9);
        assert!(d.simultaneous_steps().next().is_none());
    }

    #[test]
    fn unprofitable_spread_leaves_battery_idle() {
        let steps = [step(0.0, 0.25, 0.0), step(3.0, 0.28, 0.0)];
        let d = optimal_dispatch(1.0, &steps, Some(&storage()), &[Mode::Free; 2]);
        assert!(d.charge_kw.iter().all(|&c| c.abs() < 1e-12));
        assert_abs_diff_eq!(d.cost, 0.84);
    }

    #[test]
    fn initial_energy_must_be_restored() {
        let mut s = storage();
        s.initial_soc_kwh = 5.0;
        // expensive first, cheap later: discharge early, refill late
        let steps = [step(5.0, 0.40, 0.0), step(0.0, 0.05, 0.0)];
        let d = optimal_dispatch(1.0, &steps, Some(&s), &[Mode::Free; 2]);
        assert!(d.soc_kwh[1] >= 5.0 - 1e-9);
        // 5 kWh drawn delivers 4.25 kWh, replaced at 0.05
        assert_abs_diff_eq!(d.cost, (5.0 - 4.25) * 0.40 + 5.0 * 0.05, epsilon = 1e-9);
    }

    #[test]
    fn modes_restrict_arcs() {
        let steps: Vec<_> = [0.10, 0.30]
            .iter()
            .map(|&p| step(if p > 0.2 { 5.0 } else { 0.0 }, p, 0.0))
            .collect();
        let d = optimal_dispatch(1.0, &steps, Some(&storage()), &[Mode::Discharge, Mode::Charge]);
        assert_abs_diff_eq!(d.cost, 1.5);
    }
}
