//! Simulation configuration: rate parameters, policies resolving the
//! set-valued choices, and exogenous load generators.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LoadBox;

/// How the state is displaced at a slow-switching jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JumpPerturbation {
    /// Apply the exact displacement `(A_r^{-1} B_r - A_q^{-1} B_q) u~`
    /// induced by re-shifting the coordinates at the new mode.
    #[default]
    Physical,
    /// Sample the inflation ball uniformly (adversarial stress).
    Ball,
}

/// When a permitted jump fires while the timer sits in the jump window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum JumpTiming {
    /// Fire as soon as the jump set is entered.
    #[default]
    Immediate,
    /// Fire at a seeded uniform random timer value inside the window.
    UniformDelay,
}

/// Timer rate selection inside the admissible interval `[0, rate_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimerRatePolicy {
    /// Run the timer at its maximal admissible rate.
    #[default]
    Maximal,
    /// Piecewise-constant rates `(from_time, rate)`, clamped to the
    /// admissible interval.
    Scripted(Vec<(f64, f64)>),
}

impl TimerRatePolicy {
    pub fn rate_at(&self, t: f64, rate_max: f64) -> f64 {
        match self {
            TimerRatePolicy::Maximal => rate_max,
            TimerRatePolicy::Scripted(points) => {
                let mut r = rate_max;
                for &(from, rate) in points {
                    if t >= from {
                        r = rate;
                    } else {
                        break;
                    }
                }
                r.clamp(0.0, rate_max)
            }
        }
    }
}

/// Which mode a jump lands on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelection {
    /// Seeded uniform choice over the other modes.
    #[default]
    UniformRandom,
    /// Cycle through the other modes in index order.
    RoundRobin,
    /// Explicit target list, consumed per jump (falls back to round-robin
    /// when exhausted).
    Scripted(Vec<usize>),
}

/// Full configuration of one simulation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Timer rate bound of the slow-switching system (dwell time 1/delta1).
    pub delta1: f64,
    /// Load variation rate of the slow-switching system.
    pub delta2: f64,
    /// Jump-ball radius; `None` uses the system's derived bound.
    pub delta_inflation: Option<f64>,
    /// Timer rate bound of the ISS system (average dwell time 1/eta).
    pub eta: f64,
    /// Chatter bound of the ISS timer.
    pub n0: f64,
    /// Integrator step, s.
    pub step: f64,
    /// Flow horizon, s.
    pub horizon: f64,
    /// Jump budget before the run stops.
    pub max_jumps: u64,
    pub seed: u64,
    /// Record every k-th integrator step.
    pub sample_stride: usize,
    pub jump_perturbation: JumpPerturbation,
    pub jump_timing: JumpTiming,
    pub timer_rate: TimerRatePolicy,
    pub mode_selection: ModeSelection,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delta1: 0.02,
            delta2: 0.0,
            delta_inflation: None,
            eta: 0.1,
            n0: 1.0,
            step: 0.01,
            horizon: 600.0,
            max_jumps: 10_000,
            seed: 0,
            sample_stride: 10,
            jump_perturbation: JumpPerturbation::default(),
            jump_timing: JumpTiming::default(),
            timer_rate: TimerRatePolicy::default(),
            mode_selection: ModeSelection::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Domain("integrator step must be > 0".into()));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Domain("horizon must be > 0".into()));
        }
        if self.n0 < 1.0 {
            return Err(Error::Domain("chatter bound must be >= 1".into()));
        }
        if self.delta1 < 0.0 || self.delta2 < 0.0 || self.eta < 0.0 {
            return Err(Error::Domain("rate parameters must be >= 0".into()));
        }
        if let Some(d) = self.delta_inflation {
            if d < 0.0 {
                return Err(Error::Domain("jump-ball radius must be >= 0".into()));
            }
        }
        if self.sample_stride == 0 {
            return Err(Error::Domain("sample stride must be >= 1".into()));
        }
        Ok(())
    }
}

/// Exogenous load source. Used as a slowly varying state driver in the
/// slow-switching system and as a direct continuous signal in the ISS
/// system; both stay inside the admissible box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadGenerator {
    Constant {
        value: Vec<f64>,
    },
    Sinusoid {
        center: Vec<f64>,
        amplitude: Vec<f64>,
        /// Angular frequency per channel, rad/s.
        angular_frequency: Vec<f64>,
        phase: Vec<f64>,
    },
    /// Piecewise-linear interpolation of sample points.
    Scripted {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl LoadGenerator {
    pub fn constant_zero(dim: usize) -> Self {
        LoadGenerator::Constant {
            value: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LoadGenerator::Constant { value } => value.len(),
            LoadGenerator::Sinusoid { center, .. } => center.len(),
            LoadGenerator::Scripted { values, .. } => values.first().map_or(0, |v| v.len()),
        }
    }

    pub fn validate(&self, load_box: &LoadBox) -> Result<()> {
        if self.dim() != load_box.dim() {
            return Err(Error::Dimension(format!(
                "load generator has {} channels but the load box has {}",
                self.dim(),
                load_box.dim()
            )));
        }
        match self {
            LoadGenerator::Constant { value } => {
                let v = DVector::from_vec(value.clone());
                if !load_box.contains(&v, 1e-12) {
                    return Err(Error::Domain(
                        "constant load lies outside the admissible box".into(),
                    ));
                }
            }
            LoadGenerator::Sinusoid {
                center,
                amplitude,
                angular_frequency,
                phase,
            } => {
                let n = center.len();
                if amplitude.len() != n || angular_frequency.len() != n || phase.len() != n {
                    return Err(Error::Dimension(
                        "sinusoid parameter vectors must share one length".into(),
                    ));
                }
            }
            LoadGenerator::Scripted { times, values } => {
                if times.len() != values.len() || times.is_empty() {
                    return Err(Error::Dimension(
                        "scripted load needs matching, non-empty times and values".into(),
                    ));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Domain(
                        "scripted load times must be strictly increasing".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Nominal signal value at time `t`, clamped to the box.
    pub fn signal(&self, t: f64, load_box: &LoadBox) -> DVector<f64> {
        let mut v = match self {
            LoadGenerator::Constant { value } => DVector::from_vec(value.clone()),
            LoadGenerator::Sinusoid {
                center,
                amplitude,
                angular_frequency,
                phase,
            } => DVector::from_iterator(
                center.len(),
                center.iter().enumerate().map(|(i, c)| {
                    c + amplitude[i] * (angular_frequency[i] * t + phase[i]).sin()
                }),
            ),
            LoadGenerator::Scripted { times, values } => self.interpolate(times, values, t),
        };
        load_box.project(&mut v);
        v
    }

    fn interpolate(&self, times: &[f64], values: &[Vec<f64>], t: f64) -> DVector<f64> {
        let n = values[0].len();
        if t <= times[0] {
            return DVector::from_vec(values[0].clone());
        }
        if t >= *times.last().unwrap() {
            return DVector::from_vec(values.last().unwrap().clone());
        }
        let k = times.partition_point(|&x| x <= t) - 1;
        let w = (t - times[k]) / (times[k + 1] - times[k]);
        DVector::from_iterator(
            n,
            (0..n).map(|i| values[k][i] * (1.0 - w) + values[k + 1][i] * w),
        )
    }

    /// Time derivative of the nominal signal, with outward components
    /// zeroed at the box boundary so the box stays forward invariant.
    pub fn rate(&self, t: f64, current: &DVector<f64>, load_box: &LoadBox) -> DVector<f64> {
        let mut r = match self {
            LoadGenerator::Constant { value } => DVector::zeros(value.len()),
            LoadGenerator::Sinusoid {
                center,
                amplitude,
                angular_frequency,
                phase,
            } => DVector::from_iterator(
                center.len(),
                (0..center.len()).map(|i| {
                    amplitude[i] * angular_frequency[i] * (angular_frequency[i] * t + phase[i]).cos()
                }),
            ),
            LoadGenerator::Scripted { times, values } => {
                let n = values[0].len();
                if t < times[0] || t >= *times.last().unwrap() {
                    DVector::zeros(n)
                } else {
                    let k = times.partition_point(|&x| x <= t).saturating_sub(1);
                    let k = k.min(times.len() - 2);
                    let dt = times[k + 1] - times[k];
                    DVector::from_iterator(
                        n,
                        (0..n).map(|i| (values[k + 1][i] - values[k][i]) / dt),
                    )
                }
            }
        };
        for i in 0..r.len() {
            let at_lower = current[i] <= load_box.lower[i] && r[i] < 0.0;
            let at_upper = current[i] >= load_box.upper[i] && r[i] > 0.0;
            if at_lower || at_upper {
                r[i] = 0.0;
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timer_rate_policies() {
        let p = TimerRatePolicy::Maximal;
        assert_eq!(p.rate_at(3.0, 0.5), 0.5);
        let s = TimerRatePolicy::Scripted(vec![(0.0, 0.1), (10.0, 0.9)]);
        assert_eq!(s.rate_at(5.0, 0.5), 0.1);
        assert_eq!(s.rate_at(15.0, 0.5), 0.5); // clamped to the max rate
    }

    #[test]
    fn sinusoid_stays_in_box() {
        let g = LoadGenerator::Sinusoid {
            center: vec![0.0],
            amplitude: vec![2.0],
            angular_frequency: vec![1.0],
            phase: vec![0.0],
        };
        let bx = LoadBox {
            lower: vec![-1.0],
            upper: vec![1.0],
        };
        for k in 0..100 {
            let v = g.signal(0.1 * k as f64, &bx);
            assert!(v[0] >= -1.0 && v[0] <= 1.0);
        }
    }

    #[test]
    fn rate_projects_at_boundary() {
        let g = LoadGenerator::Sinusoid {
            center: vec![0.0],
            amplitude: vec![1.0],
            angular_frequency: vec![1.0],
            phase: vec![0.0],
        };
        let bx = LoadBox {
            lower: vec![-0.5],
            upper: vec![0.5],
        };
        let at_upper = DVector::from_vec(vec![0.5]);
        // At t = 0 the nominal rate is +1; pointing out of the box it is
        // zeroed.
        let r = g.rate(0.0, &at_upper, &bx);
        assert_eq!(r[0], 0.0);
        let inside = DVector::from_vec(vec![0.0]);
        let r = g.rate(0.0, &inside, &bx);
        assert!((r[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scripted_interpolation() {
        let g = LoadGenerator::Scripted {
            times: vec![0.0, 1.0, 2.0],
            values: vec![vec![0.0], vec![2.0], vec![0.0]],
        };
        let bx = LoadBox {
            lower: vec![-10.0],
            upper: vec![10.0],
        };
        assert!((g.signal(0.5, &bx)[0] - 1.0).abs() < 1e-12);
        assert!((g.signal(1.5, &bx)[0] - 1.0).abs() < 1e-12);
        assert!((g.signal(5.0, &bx)[0] - 0.0).abs() < 1e-12);
        assert!((g.rate(0.25, &g.signal(0.25, &bx), &bx)[0] - 2.0).abs() < 1e-12);
    }
}
