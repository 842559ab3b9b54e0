//! Physical parameter blocks from which the mode matrices are assembled.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Synchronous generator: swing dynamics plus a first-order turbine model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Inertia constant, s * p.u.
    pub inertia: f64,
    /// Load damping, p.u.
    pub damping: f64,
    /// Turbine time constant, s.
    pub turbine_time: f64,
    /// Governor gain (inverse droop), p.u.
    pub governor_gain: f64,
    /// Reference power setpoint from tertiary control, p.u.
    #[serde(default)]
    pub setpoint: f64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inertia > 0.0) {
            return Err(Error::Domain("generator inertia must be > 0".into()));
        }
        if !(self.turbine_time > 0.0) {
            return Err(Error::Domain("turbine time constant must be > 0".into()));
        }
        if !(self.governor_gain > 0.0) {
            return Err(Error::Domain("governor gain must be > 0".into()));
        }
        if self.damping < 0.0 {
            return Err(Error::Domain("generator damping must be >= 0".into()));
        }
        Ok(())
    }
}

/// Inverter-interfaced asset with digital inertia and frequency response.
/// `inertia = damping = 0` encodes a bus with only conventional load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeaParams {
    /// Virtual inertia, s * p.u.
    pub inertia: f64,
    /// Frequency-response coefficient, p.u.
    pub damping: f64,
    /// Reference active power, p.u.
    #[serde(default)]
    pub reference_power: f64,
}

impl DeaParams {
    pub fn validate(&self) -> Result<()> {
        if self.inertia < 0.0 || self.damping < 0.0 {
            return Err(Error::Domain("DEA inertia and damping must be >= 0".into()));
        }
        Ok(())
    }

    /// True when the bus carries only conventional load.
    pub fn is_pure_load(&self) -> bool {
        self.inertia == 0.0 && self.damping == 0.0
    }
}

/// Secondary frequency controller (lag compensator on the frequency
/// deviation, distributing its state through participation factors).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondaryParams {
    /// Controller time constant, s. Must exceed every turbine time constant.
    pub time_constant: f64,
    /// Frequency gain; stabilizing sign is negative.
    pub gain: f64,
    /// Participation factors, entries in [0, 1] summing to 1.
    pub participation: Vec<f64>,
}

impl SecondaryParams {
    /// Equal participation across `n` generators.
    pub fn equal_participation(time_constant: f64, gain: f64, n: usize) -> Self {
        SecondaryParams {
            time_constant,
            gain,
            participation: vec![1.0 / n as f64; n],
        }
    }

    pub fn validate(&self, max_turbine_time: f64) -> Result<()> {
        if !(self.time_constant > max_turbine_time) {
            return Err(Error::Domain(format!(
                "secondary time constant {} must exceed every turbine time constant (max {})",
                self.time_constant, max_turbine_time
            )));
        }
        if !(self.gain < 0.0) {
            return Err(Error::Domain("secondary gain must be negative".into()));
        }
        let sum: f64 = self.participation.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "participation factors must sum to 1 (got {sum})"
            )));
        }
        if self.participation.iter().any(|z| !(0.0..=1.0).contains(z)) {
            return Err(Error::Domain(
                "participation factors must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// A transmission line with positive reactance (DC power-flow model).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
}

/// Bus sets, line list, synchronous speed, and per-bus loads.
///
/// Buses are indexed `0..bus_count`. `gen_buses[i]` is the bus hosting
/// generator `i`; `dea_buses[i]` the bus hosting DEA block `i`. The two
/// sets must be disjoint and cover all buses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkParams {
    pub bus_count: usize,
    pub gen_buses: Vec<usize>,
    pub dea_buses: Vec<usize>,
    pub lines: Vec<Line>,
    /// Synchronous angular speed, rad/s.
    pub sync_speed: f64,
    /// Per-bus real load, p.u.
    pub loads: Vec<f64>,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let n = self.bus_count;
        if n == 0 {
            return Err(Error::Topology("network has no buses".into()));
        }
        let mut seen = vec![false; n];
        for &b in self.gen_buses.iter().chain(self.dea_buses.iter()) {
            if b >= n {
                return Err(Error::Topology(format!("bus index {b} out of range")));
            }
            if seen[b] {
                return Err(Error::Topology(format!(
                    "bus {b} appears in more than one bus set"
                )));
            }
            seen[b] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Topology(
                "generator and DEA bus sets must cover every bus".into(),
            ));
        }
        if self.loads.len() != n {
            return Err(Error::Topology(format!(
                "expected {n} per-bus loads, got {}",
                self.loads.len()
            )));
        }
        for l in &self.lines {
            if l.from >= n || l.to >= n || l.from == l.to {
                return Err(Error::Topology(format!(
                    "invalid line {} -> {}",
                    l.from, l.to
                )));
            }
            if !(l.reactance > 0.0) {
                return Err(Error::Topology(format!(
                    "line {} -> {} must have positive reactance",
                    l.from, l.to
                )));
            }
        }
        if !self.is_connected() {
            return Err(Error::Topology("network graph is not connected".into()));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let n = self.bus_count;
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for l in &self.lines {
            adj[l.from].push(l.to);
            adj[l.to].push(l.from);
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0usize];
        visited[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !visited[w] {
                    visited[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }
}
