//! Numerical verification of the certificate along simulated arcs: the
//! flow and jump decrease inequalities, and the closed-loop exponential
//! bound.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cert::synthesize::IssCertificate;
use crate::error::{Error, Result};
use crate::grid::SwitchedSystem;
use crate::hybrid::{ArcKind, HybridArc, HybridState, LoadGenerator};

/// Outcome of a verification pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    Pass,
    Fail,
    /// Sampling too coarse for conclusive finite differences.
    Inconclusive,
}

/// Violation counts and worst margins of one verification pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub status: VerificationStatus,
    pub flow_points_checked: usize,
    pub flow_violations: usize,
    /// Largest amount by which a flow derivative exceeded its bound.
    pub flow_max_excess: f64,
    pub jump_points_checked: usize,
    pub jump_violations: usize,
    pub jump_max_excess: f64,
    /// Per-sample margin (bound minus observed), non-negative when the
    /// property holds.
    pub margin_trace: Vec<(f64, u64, f64)>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.status == VerificationStatus::Pass
    }
}

/// The certificate's Lyapunov function `e^{mu tau} y^T P_q y`.
pub fn evaluate_v(state: &HybridState, cert: &IssCertificate) -> Result<f64> {
    let p = cert
        .mode_lyapunov
        .get(state.mode)
        .ok_or_else(|| Error::Domain(format!("mode {} not covered by certificate", state.mode)))?;
    if state.y.len() != p.nrows() {
        return Err(Error::Dimension(format!(
            "state has length {}, certificate covers dimension {}",
            state.y.len(),
            p.nrows()
        )));
    }
    let quad = (state.y.transpose() * p * &state.y)[(0, 0)];
    Ok((cert.mu * state.timer).exp() * quad.max(0.0))
}

fn v_of(cert: &IssCertificate, mode: usize, timer: f64, y: &DVector<f64>) -> f64 {
    let p = &cert.mode_lyapunov[mode];
    let quad = (y.transpose() * p * y)[(0, 0)];
    (cert.mu * timer).exp() * quad.max(0.0)
}

/// Checks the decrease inequalities along an ISS arc: centered finite
/// differences of `V` inside flow intervals, exact evaluation at jumps.
///
/// The flow tolerance is `1e-6 x max V` over the arc. A point whose
/// Richardson error estimate is large enough to flip its verdict counts
/// as ambiguous; more than 1% ambiguous points makes the whole result
/// inconclusive rather than pass/fail.
pub fn check_decrease(
    arc: &HybridArc,
    cert: &IssCertificate,
    sys: &SwitchedSystem,
    load: &LoadGenerator,
) -> Result<VerificationReport> {
    if arc.kind != ArcKind::Iss {
        return Err(Error::Domain(
            "decrease checks apply to ISS arcs".into(),
        ));
    }
    if cert.mode_lyapunov.len() != sys.mode_count() {
        return Err(Error::Dimension(
            "certificate does not match the system's mode count".into(),
        ));
    }

    let vs: Vec<f64> = arc
        .samples
        .iter()
        .map(|s| v_of(cert, s.mode, s.timer, &s.y))
        .collect();
    let v_max = vs.iter().fold(0.0f64, |m, v| m.max(*v));
    let tol_fd = 1e-6 * v_max.max(1e-12);

    let mut flow_points = 0usize;
    let mut flow_violations = 0usize;
    let mut flow_max_excess = 0.0f64;
    let mut fd_suspect = 0usize;
    let mut margin_trace = Vec::new();

    for k in 1..arc.samples.len().saturating_sub(1) {
        let (prev, cur, next) = (&arc.samples[k - 1], &arc.samples[k], &arc.samples[k + 1]);
        if prev.j != cur.j || next.j != cur.j {
            continue;
        }
        let dt = next.t - prev.t;
        if dt <= 0.0 {
            continue;
        }
        let dv = (vs[k + 1] - vs[k - 1]) / dt;
        // Wider-stride derivative for a Richardson error estimate.
        let mut fd_err = 0.0f64;
        if k >= 2 && k + 2 < arc.samples.len() {
            let (p2, n2) = (&arc.samples[k - 2], &arc.samples[k + 2]);
            if p2.j == cur.j && n2.j == cur.j {
                let dt2 = n2.t - p2.t;
                if dt2 > 0.0 {
                    let dv2 = (vs[k + 2] - vs[k - 2]) / dt2;
                    fd_err = (dv - dv2).abs() / 3.0;
                }
            }
        }
        let u = load.signal(cur.t, &sys.load_box);
        let bound = -cert.lambda * vs[k] + cert.rho * u.norm_squared();
        flow_points += 1;
        let excess = dv - bound - tol_fd;
        if excess > 0.0 {
            flow_violations += 1;
            flow_max_excess = flow_max_excess.max(excess);
        }
        // The verdict at this point is only trustworthy if the finite
        // difference is accurate relative to its distance from the bound.
        if fd_err > excess.abs().max(tol_fd) {
            fd_suspect += 1;
        }
        margin_trace.push((cur.t, cur.j, bound + tol_fd - dv));
    }

    let mut jump_points = 0usize;
    let mut jump_violations = 0usize;
    let mut jump_max_excess = 0.0f64;
    let tol_jump = 1e-9 * v_max.max(1.0);

    for r in &arc.jumps {
        let v_before = v_of(cert, r.mode_before, r.timer_before, &r.y_before);
        let v_after = v_of(cert, r.mode_after, r.timer_after, &r.y_after);
        let u_d = sys.equilibrium_jump_shift(r.mode_before, r.mode_after)?;
        let bound = -cert.lambda * v_before + cert.rho * u_d.norm_squared();
        jump_points += 1;
        let excess = (v_after - v_before) - bound - tol_jump;
        if excess > 0.0 {
            jump_violations += 1;
            jump_max_excess = jump_max_excess.max(excess);
        }
        margin_trace.push((r.t, r.j, bound + tol_jump - (v_after - v_before)));
    }

    let status = if flow_points > 0 && fd_suspect * 100 > flow_points {
        VerificationStatus::Inconclusive
    } else if flow_violations == 0 && jump_violations == 0 {
        VerificationStatus::Pass
    } else {
        VerificationStatus::Fail
    };

    Ok(VerificationReport {
        status,
        flow_points_checked: flow_points,
        flow_violations,
        flow_max_excess,
        jump_points_checked: jump_points,
        jump_violations,
        jump_max_excess,
        margin_trace,
    })
}

/// Checks the closed-loop bound: at every sample,
/// `|y(t, j)| <= kappa1 e^{-kappa2 (t+j)} |y(0,0)| + kappa3 (u_inf + c)`.
pub fn check_iss_bound(
    arc: &HybridArc,
    cert: &IssCertificate,
    u_inf: f64,
) -> Result<VerificationReport> {
    if arc.kind != ArcKind::Iss {
        return Err(Error::Domain("the closed-loop bound applies to ISS arcs".into()));
    }
    let first = arc
        .samples
        .first()
        .ok_or_else(|| Error::Domain("arc has no samples".into()))?;
    if first.y.len() != cert.mode_lyapunov[0].nrows() {
        return Err(Error::Dimension(
            "arc state dimension does not match the certificate".into(),
        ));
    }
    let y0 = first.y.norm();
    let offset = cert.kappa3 * (u_inf + cert.c);

    let mut violations = 0usize;
    let mut max_excess = 0.0f64;
    let mut margin_trace = Vec::with_capacity(arc.samples.len());
    for s in &arc.samples {
        let bound = cert.kappa1 * (-cert.kappa2 * (s.t + s.j as f64)).exp() * y0 + offset;
        let lhs = s.y.norm();
        let margin = bound - lhs;
        if margin < -1e-12 * bound.max(1.0) {
            violations += 1;
            max_excess = max_excess.max(-margin);
        }
        margin_trace.push((s.t, s.j, margin));
    }

    Ok(VerificationReport {
        status: if violations == 0 {
            VerificationStatus::Pass
        } else {
            VerificationStatus::Fail
        },
        flow_points_checked: arc.samples.len(),
        flow_violations: violations,
        flow_max_excess: max_excess,
        jump_points_checked: 0,
        jump_violations: 0,
        jump_max_excess: 0.0,
        margin_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cert::synthesize::synthesize_certificate;
    use crate::grid::two_mode_example;
    use crate::hybrid::{simulate_iss, SimConfig};
    use nalgebra::DVector;

    #[test]
    fn v_vanishes_at_origin_and_matches_identity_weight() {
        let sys = two_mode_example();
        let cert = synthesize_certificate(&sys, 0.5, 1.0, None).unwrap();
        let zero = HybridState {
            y: DVector::zeros(2),
            mode: 0,
            load: DVector::zeros(2),
            timer: 0.7,
        };
        assert_eq!(evaluate_v(&zero, &cert).unwrap(), 0.0);

        // tau = 0 and P = I give the plain squared norm.
        let mut cert_id = cert.clone();
        cert_id.mode_lyapunov[0] = nalgebra::DMatrix::identity(2, 2);
        let s = HybridState {
            y: DVector::from_vec(vec![3.0, 4.0]),
            mode: 0,
            load: DVector::zeros(2),
            timer: 0.0,
        };
        assert!((evaluate_v(&s, &cert_id).unwrap() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_bounds_hold_on_random_states() {
        let sys = two_mode_example();
        let cert = synthesize_certificate(&sys, 0.5, 1.0, None).unwrap();
        let mut x = 0.77f64;
        let mut next = || {
            x = (x * 913.0 + 0.217).fract();
            x * 6.0 - 3.0
        };
        for k in 0..10_000 {
            let y = DVector::from_vec(vec![next(), next()]);
            let s = HybridState {
                y: y.clone(),
                mode: k % 2,
                load: DVector::zeros(2),
                timer: (k % 100) as f64 / 100.0,
            };
            let v = evaluate_v(&s, &cert).unwrap();
            let n2 = y.norm_squared();
            assert!(v >= cert.alpha_lower * n2 - 1e-9);
            assert!(v <= cert.alpha_upper * n2 + 1e-9);
        }
    }

    #[test]
    fn decrease_holds_on_simulated_arcs() {
        let sys = two_mode_example();
        let cert = synthesize_certificate(&sys, 0.5, 1.0, None).unwrap();
        let cfg = SimConfig {
            eta: 0.5 * cert.eta_star,
            n0: 1.0,
            horizon: 60.0,
            step: 0.01,
            sample_stride: 1,
            seed: 17,
            ..Default::default()
        };
        let init = HybridState {
            y: DVector::from_vec(vec![2.0, -1.5]),
            mode: 0,
            load: DVector::zeros(2),
            timer: 0.0,
        };
        let load = LoadGenerator::constant_zero(2);
        let arc = simulate_iss(&sys, &cfg, &load, &init).unwrap();
        let report = check_decrease(&arc, &cert, &sys, &load).unwrap();
        assert!(
            report.passed(),
            "flow violations {} (max {:.3e}), jump violations {} (max {:.3e})",
            report.flow_violations,
            report.flow_max_excess,
            report.jump_violations,
            report.jump_max_excess
        );
        assert!(report.jump_points_checked > 0);
    }

    #[test]
    fn iss_bound_holds_from_origin_without_load() {
        let sys = two_mode_example();
        let cert = synthesize_certificate(&sys, 0.5, 1.0, None).unwrap();
        let cfg = SimConfig {
            eta: 0.5 * cert.eta_star,
            n0: 1.0,
            horizon: 120.0,
            step: 0.01,
            sample_stride: 5,
            seed: 23,
            ..Default::default()
        };
        let init = HybridState {
            y: DVector::zeros(2),
            mode: 0,
            load: DVector::zeros(2),
            timer: 0.0,
        };
        let arc = simulate_iss(&sys, &cfg, &LoadGenerator::constant_zero(2), &init).unwrap();
        let report = check_iss_bound(&arc, &cert, 0.0).unwrap();
        assert!(report.passed());
    }
}
