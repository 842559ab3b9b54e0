//! Explicit construction of the limit set the switched trajectories
//! accumulate on: for every ordered mode pair, the flow curve that starts
//! at one mode's equilibrium and relaxes toward the other's, sampled
//! adaptively and truncated once a Lyapunov envelope certifies the tail.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ModeSpec, SwitchedSystem};
use crate::linalg::{lyapunov_solve, mat_exp, spectral_report, sym_eig_extremes, weighted_norm};

/// Default chord-deviation tolerance of the adaptive sampler (state units).
pub const DEFAULT_CHORD_TOL: f64 = 1e-3;

/// One sampled flow curve from `from_mode`'s equilibrium under
/// `flow_mode`'s dynamics.
///
/// Serializes as `{from_mode, flow_mode, samples: [[t, y...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "CurveRepr", try_from = "CurveRepr")]
pub struct OmegaCurve {
    pub from_mode: usize,
    pub flow_mode: usize,
    pub times: Vec<f64>,
    /// Sample points; `points[0]` is exactly the source equilibrium.
    pub points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    from_mode: usize,
    flow_mode: usize,
    samples: Vec<Vec<f64>>,
}

impl From<OmegaCurve> for CurveRepr {
    fn from(c: OmegaCurve) -> Self {
        CurveRepr {
            from_mode: c.from_mode,
            flow_mode: c.flow_mode,
            samples: c
                .times
                .iter()
                .zip(&c.points)
                .map(|(t, p)| std::iter::once(*t).chain(p.iter().copied()).collect())
                .collect(),
        }
    }
}

impl TryFrom<CurveRepr> for OmegaCurve {
    type Error = String;

    fn try_from(r: CurveRepr) -> std::result::Result<Self, String> {
        let mut times = Vec::with_capacity(r.samples.len());
        let mut points = Vec::with_capacity(r.samples.len());
        for row in &r.samples {
            if row.is_empty() {
                return Err("curve sample rows must start with a time value".into());
            }
            times.push(row[0]);
            points.push(row[1..].to_vec());
        }
        Ok(OmegaCurve {
            from_mode: r.from_mode,
            flow_mode: r.flow_mode,
            times,
            points,
        })
    }
}

impl OmegaCurve {
    pub fn point(&self, k: usize) -> DVector<f64> {
        DVector::from_vec(self.points[k].clone())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The sampled limit-set projection: all mode equilibria plus one curve
/// per ordered mode pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaSet {
    pub equilibria: Vec<Vec<f64>>,
    pub curves: Vec<OmegaCurve>,
    /// Guaranteed bound on the gap between each curve's last sample and
    /// its target equilibrium.
    pub eps_tail: f64,
    /// Chord tolerance the sampler enforced.
    pub chord_tol: f64,
}

/// Closed-form flow of one mode: `y*_q + exp(A_q t)(y - y*_q)`.
pub fn flow_map_theta(mode: &ModeSpec, t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != mode.a.nrows() {
        return Err(Error::Dimension(format!(
            "flow_map_theta: state has length {}, expected {}",
            y.len(),
            mode.a.nrows()
        )));
    }
    let e = mat_exp(&mode.a, t)?;
    Ok(&mode.equilibrium + e * (y - &mode.equilibrium))
}

/// Options controlling the curve sampler.
#[derive(Debug, Clone)]
pub struct OmegaBuildOptions {
    pub eps_tail: f64,
    pub chord_tol: f64,
    pub max_samples: usize,
}

impl Default for OmegaBuildOptions {
    fn default() -> Self {
        OmegaBuildOptions {
            eps_tail: 1e-3,
            chord_tol: DEFAULT_CHORD_TOL,
            max_samples: 20_000,
        }
    }
}

/// Builds the limit set with default chord tolerance.
pub fn build_omega_set(sys: &SwitchedSystem, eps_tail: f64, max_samples: usize) -> Result<OmegaSet> {
    build_omega_set_with(
        sys,
        &OmegaBuildOptions {
            eps_tail,
            max_samples,
            ..Default::default()
        },
    )
}

/// Builds the limit set: for every ordered pair `(q, r)`, `r != q`, the
/// curve `t -> y*_r + exp(A_r t)(y*_q - y*_r)`, truncated at the first
/// sampled time where the mode's Lyapunov norm of the deviation certifies
/// `|point - y*_r| <= eps_tail` (the Lyapunov norm only decreases along
/// the flow, so the whole tail beyond the cut stays inside the ball).
pub fn build_omega_set_with(sys: &SwitchedSystem, opts: &OmegaBuildOptions) -> Result<OmegaSet> {
    if sys.mode_count() < 2 {
        return Err(Error::Domain(
            "limit-set construction needs at least two modes".into(),
        ));
    }
    if !(opts.eps_tail > 0.0) {
        return Err(Error::Domain("eps_tail must be positive".into()));
    }
    if !(opts.chord_tol > 0.0) {
        return Err(Error::Domain("chord_tol must be positive".into()));
    }

    // Per-mode Lyapunov data for the tail certificate.
    let n = sys.state_dim();
    let identity = DMatrix::<f64>::identity(n, n);
    let mut weights = Vec::with_capacity(sys.mode_count());
    for m in &sys.modes {
        let p = lyapunov_solve(&m.a, &identity)?;
        let (pmin, _) = sym_eig_extremes(&p)?;
        weights.push((p, pmin));
    }

    let mut curves = Vec::new();
    for (q, mq) in sys.modes.iter().enumerate() {
        for (r, mr) in sys.modes.iter().enumerate() {
            if q == r {
                continue;
            }
            let (p_r, pmin_r) = &weights[r];
            let curve = sample_curve(mr, q, r, &mq.equilibrium, p_r, *pmin_r, opts)?;
            curves.push(curve);
        }
    }

    Ok(OmegaSet {
        equilibria: sys
            .modes
            .iter()
            .map(|m| m.equilibrium.iter().copied().collect())
            .collect(),
        curves,
        eps_tail: opts.eps_tail,
        chord_tol: opts.chord_tol,
    })
}

/// Marched points kept in the corridor before forcing a knot; bounds the
/// cost of the decimation re-checks.
const CORRIDOR_WINDOW: usize = 512;

/// Samples one curve by marching the deviation `z(t) = exp(A t) z0` with
/// a precomputed propagator and decimating the dense trace with a chord
/// corridor: marched points stay within half of `chord_tol` of the kept
/// polyline, and the step size keeps the true curve within the other
/// half between marched points. The step doubles (propagator squares) as
/// the deviation decays.
fn sample_curve(
    flow_mode: &ModeSpec,
    from: usize,
    to: usize,
    start: &DVector<f64>,
    p_weight: &DMatrix<f64>,
    pmin: f64,
    opts: &OmegaBuildOptions,
) -> Result<OmegaCurve> {
    let y_star = &flow_mode.equilibrium;
    let z0 = start - y_star;
    let stop_threshold = opts.eps_tail * pmin.sqrt();

    let mut times = vec![0.0];
    let mut points = vec![start.clone()];
    if weighted_norm(p_weight, &z0)? <= stop_threshold {
        return Ok(finish_curve(from, to, times, points));
    }

    // Local time scales from the eigenvalue moduli: rotation resolution
    // and the sagitta bound at the current amplitude.
    let rep = spectral_report(&flow_mode.a)?;
    let eig_modulus = rep
        .eigenvalues
        .iter()
        .map(|(re, im)| (re * re + im * im).sqrt())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let rotation_cap = std::f64::consts::FRAC_PI_4 / eig_modulus;
    let sagitta_step = |amplitude: f64| {
        (2.0 * opts.chord_tol / amplitude.max(1e-300)).sqrt() / eig_modulus
    };

    let mut step = rotation_cap.min(sagitta_step(z0.norm()));
    let mut prop = mat_exp(&flow_mode.a, step)?;
    let half_tol = 0.5 * opts.chord_tol;

    let mut z = z0;
    let mut t = 0.0f64;
    // Points marched since the last committed knot, as (t, y).
    let mut pending: Vec<(f64, DVector<f64>)> = Vec::new();
    let marched_budget = opts.max_samples.saturating_mul(64).max(1 << 20);
    let mut marched = 0usize;

    loop {
        let z_next = &prop * &z;
        let t_next = t + step;
        let y_next = y_star + &z_next;

        // Corridor check against the chord from the last knot to the
        // candidate point.
        let anchor = points.last().expect("curve has a start knot");
        let fits = pending
            .iter()
            .all(|(_, p)| point_segment_distance(p, anchor, &y_next) <= half_tol);
        if fits && pending.len() < CORRIDOR_WINDOW {
            pending.push((t_next, y_next));
        } else {
            // Commit the last reachable point, restart the corridor.
            let (tk, pk) = pending
                .pop()
                .unwrap_or_else(|| (t_next, y_next.clone()));
            times.push(tk);
            points.push(pk);
            pending.clear();
            if tk < t_next {
                pending.push((t_next, y_next));
            }
            if points.len() > opts.max_samples {
                return Err(Error::Domain(format!(
                    "curve {from}->{to} exceeded the sample budget {}; raise max_samples or loosen chord_tol",
                    opts.max_samples
                )));
            }
        }

        z = z_next;
        t = t_next;
        marched += 1;
        if marched > marched_budget {
            return Err(Error::Domain(format!(
                "curve {from}->{to} exceeded the march budget; loosen tolerances"
            )));
        }

        if weighted_norm(p_weight, &z)? <= stop_threshold {
            if let Some((tk, pk)) = pending.pop() {
                times.push(tk);
                points.push(pk);
            }
            break;
        }

        // Step doubling once the decayed amplitude allows it.
        let allowed = rotation_cap.min(sagitta_step(z.norm()));
        if 2.0 * step <= allowed {
            step *= 2.0;
            prop = &prop * &prop;
        }
    }

    Ok(finish_curve(from, to, times, points))
}

fn finish_curve(
    from: usize,
    to: usize,
    times: Vec<f64>,
    points: Vec<DVector<f64>>,
) -> OmegaCurve {
    OmegaCurve {
        from_mode: from,
        flow_mode: to,
        times,
        points: points.iter().map(|p| p.iter().copied().collect()).collect(),
    }
}

/// Euclidean distance from `x` to the segment `[a, b]`.
pub fn point_segment_distance(x: &DVector<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom == 0.0 {
        return (x - a).norm();
    }
    let s = ((x - a).dot(&ab) / denom).clamp(0.0, 1.0);
    (x - (a + ab * s)).norm()
}
