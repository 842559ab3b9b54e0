//! Seeded selections for the set-valued jump map: target mode choice and
//! ball sampling.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hybrid::config::ModeSelection;

/// Stateful mode chooser implementing the configured selection policy.
pub struct ModeSelector {
    policy: ModeSelection,
    mode_count: usize,
    scripted_pos: usize,
    rr_cursor: usize,
}

impl ModeSelector {
    pub fn new(policy: ModeSelection, mode_count: usize) -> Self {
        ModeSelector {
            policy,
            mode_count,
            scripted_pos: 0,
            rr_cursor: 0,
        }
    }

    /// Picks the next mode, never returning `current`.
    pub fn next(&mut self, current: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        let n = self.mode_count;
        if n < 2 {
            return Err(Error::Domain(
                "jump requested in a single-mode system".into(),
            ));
        }
        match &self.policy {
            ModeSelection::UniformRandom => {
                let k = rng.random_range(0..n - 1);
                Ok(if k >= current { k + 1 } else { k })
            }
            ModeSelection::RoundRobin => {
                let mut target = self.rr_cursor % n;
                if target == current {
                    target = (target + 1) % n;
                }
                self.rr_cursor = target + 1;
                Ok(target)
            }
            ModeSelection::Scripted(list) => {
                if self.scripted_pos < list.len() {
                    let target = list[self.scripted_pos];
                    self.scripted_pos += 1;
                    if target >= n {
                        return Err(Error::Domain(format!(
                            "scripted mode target {target} out of range"
                        )));
                    }
                    if target == current {
                        return Err(Error::Domain(
                            "scripted mode selection targets the active mode".into(),
                        ));
                    }
                    Ok(target)
                } else {
                    // Script exhausted: continue round-robin.
                    let mut target = self.rr_cursor % n;
                    if target == current {
                        target = (target + 1) % n;
                    }
                    self.rr_cursor = target + 1;
                    Ok(target)
                }
            }
        }
    }
}

/// Uniform sample from the closed Euclidean ball of the given radius.
pub fn sample_ball(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    if radius == 0.0 || dim == 0 {
        return DVector::zeros(dim);
    }
    // Gaussian direction via Box-Muller, then a radius with the density
    // of the uniform ball.
    let mut g = DVector::zeros(dim);
    let mut i = 0;
    while i < dim {
        let u1: f64 = rng.random::<f64>().max(1e-300);
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        g[i] = r * (2.0 * std::f64::consts::PI * u2).cos();
        if i + 1 < dim {
            g[i + 1] = r * (2.0 * std::f64::consts::PI * u2).sin();
        }
        i += 2;
    }
    let norm = g.norm();
    if norm == 0.0 {
        return DVector::zeros(dim);
    }
    let scale = radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm;
    g * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn uniform_choice_never_repeats_current() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sel = ModeSelector::new(ModeSelection::UniformRandom, 3);
        for _ in 0..200 {
            let m = sel.next(1, &mut rng).unwrap();
            assert_ne!(m, 1);
            assert!(m < 3);
        }
    }

    #[test]
    fn round_robin_cycles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut sel = ModeSelector::new(ModeSelection::RoundRobin, 3);
        let mut current = 0;
        let mut seen = Vec::new();
        for _ in 0..6 {
            current = sel.next(current, &mut rng).unwrap();
            seen.push(current);
        }
        assert!(seen.iter().all(|&m| m < 3));
        assert!(seen.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let v = sample_ball(4, 0.25, &mut rng);
            assert!(v.norm() <= 0.25 + 1e-12);
        }
    }
}
