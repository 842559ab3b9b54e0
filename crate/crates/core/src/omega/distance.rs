//! Point-to-set and trajectory-to-set distances against the sampled
//! limit set.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hybrid::HybridArc;
use crate::omega::set::{point_segment_distance, OmegaSet};

/// Per-sample distance record of one arc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceTrace {
    pub entries: Vec<(f64, u64, f64)>,
}

impl DistanceTrace {
    /// Supremum of the distance over samples with `t >= t_from`.
    pub fn tail_sup(&self, t_from: f64) -> f64 {
        self.entries
            .iter()
            .filter(|(t, _, _)| *t >= t_from)
            .map(|(_, _, d)| *d)
            .fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().map(|(_, _, d)| *d).fold(0.0, f64::max)
    }
}

/// Minimum Euclidean distance from a point to the union of the sampled
/// curves (as polyline segments) and the equilibria.
pub fn distance_to_set(point: &DVector<f64>, omega: &OmegaSet) -> Result<f64> {
    if omega.equilibria.is_empty() && omega.curves.is_empty() {
        return Err(Error::Domain("distance to an empty set".into()));
    }
    let dim = omega
        .equilibria
        .first()
        .map(|e| e.len())
        .or_else(|| omega.curves.first().and_then(|c| c.points.first().map(|p| p.len())))
        .unwrap_or(0);
    if point.len() != dim {
        return Err(Error::Dimension(format!(
            "distance_to_set: point has length {}, set lives in dimension {dim}",
            point.len()
        )));
    }

    let mut best = f64::INFINITY;
    for e in &omega.equilibria {
        let eq = DVector::from_vec(e.clone());
        best = best.min((point - eq).norm());
    }
    for c in &omega.curves {
        if c.len() == 1 {
            best = best.min((point - c.point(0)).norm());
            continue;
        }
        for k in 0..c.len() - 1 {
            best = best.min(point_segment_distance(point, &c.point(k), &c.point(k + 1)));
        }
    }
    Ok(best)
}

/// Distance of the state component to the set, per sample.
///
/// The full stable set is a product of the state projection with the mode
/// set, the load box, and the timer interval; valid arcs satisfy those
/// factors exactly, so the product-set distance reduces to the state
/// distance reported here.
pub fn distance_trace(arc: &HybridArc, omega: &OmegaSet) -> Result<DistanceTrace> {
    let mut entries = Vec::with_capacity(arc.samples.len());
    for s in &arc.samples {
        let d = distance_to_set(&s.y, omega)?;
        entries.push((s.t, s.j, d));
    }
    Ok(DistanceTrace { entries })
}
