//! Static network and generator data.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_base_mva() -> f64 {
    100.0
}

fn default_min_time() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: u32,
    /// $/MWh of load shedding.
    pub shed_cost: f64,
    /// $/MWh of renewable curtailment.
    pub curtail_cost: f64,
    /// Installed wind capacity (MW) when the node hosts a wind farm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind_capacity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    /// Originating node id, `o(l)`.
    pub from: u32,
    /// Receiving node id, `r(l)`.
    pub to: u32,
    /// Per-unit susceptance on the grid's MVA base.
    pub susceptance: f64,
    /// Thermal limit in MW.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorParams {
    pub name: String,
    pub node: u32,
    /// Marginal cost, $/MWh.
    pub cost: f64,
    #[serde(default)]
    pub startup_cost: f64,
    #[serde(default)]
    pub shutdown_cost: f64,
    /// Real-time upward redispatch cost, $/MWh.
    pub up_cost: f64,
    /// Real-time downward redispatch cost, $/MWh.
    pub down_cost: f64,
    pub p_min: f64,
    pub p_max: f64,
    /// Ramp limit while online, MW/h. Also caps each real-time redispatch.
    pub ramp: f64,
    /// Ramp limit at startup/shutdown, MW/h.
    pub startup_ramp: f64,
    #[serde(default = "default_min_time")]
    pub min_up: u32,
    #[serde(default = "default_min_time")]
    pub min_down: u32,
    /// Commitment carried into the first hour. `None` leaves the first-hour
    /// status to the optimizer; `Some(s)` pins `u` at hour 1 to `s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_status: Option<u8>,
}

impl GeneratorParams {
    /// A generator with zero commitment costs and unit min up/down times.
    pub fn simple(name: &str, node: u32, cost: f64, p_min: f64, p_max: f64) -> Self {
        GeneratorParams {
            name: name.to_string(),
            node,
            cost,
            startup_cost: 0.0,
            shutdown_cost: 0.0,
            up_cost: cost,
            down_cost: 0.0,
            p_min,
            p_max,
            ramp: p_max,
            startup_ramp: p_max,
            min_up: 1,
            min_down: 1,
            initial_status: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default = "default_base_mva")]
    pub base_mva: f64,
    pub reference_node: u32,
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub lines: Vec<Line>,
    pub generators: Vec<GeneratorParams>,
}

/// Index-resolved view of a [`Grid`] used by the model builders.
#[derive(Debug, Clone)]
pub(crate) struct Topology {
    pub reference: usize,
    /// (from index, to index, effective susceptance base*b)
    pub lines: Vec<(usize, usize, f64)>,
    pub gens_at: Vec<Vec<usize>>,
}

impl Grid {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_lines(&self) -> usize {
        self.lines.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn node_index(&self, id: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn wind_nodes(&self) -> Vec<u32> {
        self.nodes.iter().filter(|n| n.wind_capacity.is_some_and(|c| c > 0.0)).map(|n| n.id).collect()
    }

    /// Checks every structural invariant, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGrid(msg));
        if self.nodes.is_empty() {
            return bad("nodes: at least one node is required".into());
        }
        if !(self.base_mva > 0.0) {
            return bad(format!("base_mva: must be positive, got {}", self.base_mva));
        }
        let mut seen = HashSet::new();
        for (k, n) in self.nodes.iter().enumerate() {
            if !seen.insert(n.id) {
                return bad(format!("nodes[{k}].id: duplicate node id {}", n.id));
            }
            if !(n.shed_cost >= 0.0) || !(n.curtail_cost >= 0.0) {
                return bad(format!("nodes[{k}]: costs must be nonnegative"));
            }
            if let Some(c) = n.wind_capacity {
                if !(c >= 0.0) {
                    return bad(format!("nodes[{k}].wind_capacity: must be nonnegative"));
                }
            }
        }
        if !seen.contains(&self.reference_node) {
            return bad(format!("reference_node: node {} does not exist", self.reference_node));
        }
        for (k, l) in self.lines.iter().enumerate() {
            if !seen.contains(&l.from) {
                return bad(format!("lines[{k}].from: unknown node {}", l.from));
            }
            if !seen.contains(&l.to) {
                return bad(format!("lines[{k}].to: unknown node {}", l.to));
            }
            if l.from == l.to {
                return bad(format!("lines[{k}]: origin and receiving node are both {}", l.from));
            }
            if !(l.susceptance > 0.0) {
                return bad(format!("lines[{k}].susceptance: must be positive, got {}", l.susceptance));
            }
            if !(l.capacity > 0.0) {
                return bad(format!("lines[{k}].capacity: must be positive, got {}", l.capacity));
            }
        }
        let mut names = HashSet::new();
        for (k, g) in self.generators.iter().enumerate() {
            let at = |f: &str| format!("generators[{k}].{f}");
            if !names.insert(g.name.as_str()) {
                return bad(format!("{}: duplicate generator name {}", at("name"), g.name));
            }
            if !seen.contains(&g.node) {
                return bad(format!("{}: unknown node {}", at("node"), g.node));
            }
            if !(0.0 <= g.p_min && g.p_min <= g.p_max) {
                return bad(format!("{}: need 0 <= p_min <= p_max, got [{}, {}]", at("p_min"), g.p_min, g.p_max));
            }
            if !(g.ramp >= 0.0) || !(g.startup_ramp >= 0.0) {
                return bad(format!("{}: ramp limits must be nonnegative", at("ramp")));
            }
            if g.min_up < 1 || g.min_down < 1 {
                return bad(format!("{}: min_up and min_down must be at least 1", at("min_up")));
            }
            for (f, v) in [
                ("cost", g.cost),
                ("startup_cost", g.startup_cost),
                ("shutdown_cost", g.shutdown_cost),
                ("up_cost", g.up_cost),
                ("down_cost", g.down_cost),
            ] {
                if !(v >= 0.0) {
                    return bad(format!("{}: must be nonnegative, got {v}", at(f)));
                }
            }
            if let Some(s) = g.initial_status {
                if s > 1 {
                    return bad(format!("{}: must be 0 or 1", at("initial_status")));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn topology(&self) -> Topology {
        let idx: HashMap<u32, usize> = self.nodes.iter().enumerate().map(|(k, n)| (n.id, k)).collect();
        let lines = self.lines.iter().map(|l| (idx[&l.from], idx[&l.to], self.base_mva * l.susceptance)).collect();
        let gen_node: Vec<usize> = self.generators.iter().map(|g| idx[&g.node]).collect();
        let mut gens_at = vec![Vec::new(); self.nodes.len()];
        for (g, &i) in gen_node.iter().enumerate() {
            gens_at[i].push(g);
        }
        Topology { reference: idx[&self.reference_node], lines, gens_at }
    }

    /// Line-node incidence: +1 when the node is the line's origin, -1 when it
    /// is the receiving end.
    pub fn incidence(&self) -> Vec<Vec<i8>> {
        self.lines
            .iter()
            .map(|l| {
                self.nodes
                    .iter()
                    .map(|n| if n.id == l.from { 1 } else if n.id == l.to { -1 } else { 0 })
                    .collect()
            })
            .collect()
    }

    /// Largest cost coefficient of any kind.
    pub fn max_cost(&self) -> f64 {
        let node = self.nodes.iter().map(|n| n.shed_cost.max(n.curtail_cost));
        let gens = self.generators.iter().map(|g| {
            g.cost.max(g.startup_cost).max(g.shutdown_cost).max(g.up_cost).max(g.down_cost)
        });
        node.chain(gens).fold(0.0, f64::max)
    }

    /// Largest generator, line or wind capacity.
    pub fn max_capacity(&self) -> f64 {
        let g = self.generators.iter().map(|g| g.p_max);
        let l = self.lines.iter().map(|l| l.capacity);
        let w = self.nodes.iter().filter_map(|n| n.wind_capacity);
        g.chain(l).chain(w).fold(0.0, f64::max)
    }
}
