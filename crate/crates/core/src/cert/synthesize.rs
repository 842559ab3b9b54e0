//! Constructive synthesis of the multiple-Lyapunov ISS certificate: one
//! quadratic function per mode, a timer-weighted envelope, and scalar
//! constants making both the flow and the jump decrease inequalities hold
//! with explicit margins.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{compute_c, SwitchedSystem};
use crate::linalg::{lyapunov_solve, pencil_eig_extremes, sym_eig_extremes};
use crate::matjson;

/// Multiplicative slack applied to the envelope rate and the Schur
/// complements so semidefinite constraints hold strictly in floating
/// point.
pub const SYNTHESIS_MARGIN: f64 = 0.05;

/// Eigenvalue floor accepted as "positive semidefinite" in verification.
pub const PSD_TOL: f64 = -1e-9;

/// The certificate data of the timer-weighted Lyapunov construction.
///
/// The per-sample function is `V(y, q, tau) = e^{mu tau} y^T P_q y`, and
/// along admissible runs it satisfies
/// `dV/dt <= -lambda V + rho |u_c|^2` on flows and
/// `V+ - V <= -lambda V + rho |u_d|^2` across jumps, which yields the
/// closed-loop bound with constants `kappa1..kappa3`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IssCertificate {
    /// Per-mode Lyapunov matrices `P_q`.
    #[serde(with = "matjson::mat_list")]
    pub mode_lyapunov: Vec<DMatrix<f64>>,
    /// Per-mode decay matrices `Q_q` with `A_q^T P_q + P_q A_q = -Q_q`.
    #[serde(with = "matjson::mat_list")]
    pub mode_decay: Vec<DMatrix<f64>>,
    /// Split parameter in (0, 1).
    pub theta: f64,
    /// Timer weight exponent.
    pub mu: f64,
    /// Supremal admissible timer rate; the decrease inequalities hold for
    /// rates below it.
    pub eta_star: f64,
    /// Operating timer rate the input-gain matrix was fixed at.
    pub eta: f64,
    /// Flow input-gain matrix `R`.
    #[serde(with = "matjson::mat")]
    pub flow_gain: DMatrix<f64>,
    /// Jump input-gain matrix `M`.
    #[serde(with = "matjson::mat")]
    pub jump_gain: DMatrix<f64>,
    /// Decrease rate shared by flows and jumps.
    pub lambda: f64,
    /// Input amplification shared by flows and jumps.
    pub rho: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Largest equilibrium separation of the system.
    pub c: f64,
    /// Chatter bound the certificate covers.
    pub n0: f64,
    /// Quadratic sandwich constants: `alpha_lower |y|^2 <= V <= alpha_upper |y|^2`.
    pub alpha_lower: f64,
    pub alpha_upper: f64,
}

fn spd_extremes(p: &DMatrix<f64>) -> Result<(f64, f64)> {
    sym_eig_extremes(p)
}

/// `lambda_max( X^T W^{-1} X )` for SPD `W`.
fn schur_gain(w: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<f64> {
    let chol = w
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Infeasible("Schur-complement block is not positive definite".into()))?;
    let z = chol.solve(x);
    let s = x.transpose() * z;
    let s = (&s + s.transpose()) * 0.5;
    let (_, hi) = sym_eig_extremes(&s)?;
    Ok(hi.max(0.0))
}

fn assemble_block2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    // [[A, B], [B^T, D]]
    let (n, m) = (a.nrows(), d.nrows());
    let mut s = DMatrix::<f64>::zeros(n + m, n + m);
    s.view_mut((0, 0), (n, n)).copy_from(a);
    s.view_mut((0, n), (n, m)).copy_from(b);
    s.view_mut((n, 0), (m, n)).copy_from(&b.transpose());
    s.view_mut((n, n), (m, m)).copy_from(d);
    s
}

/// Synthesizes the certificate for the given split parameter and chatter
/// bound. `q_choice` overrides the per-mode decay matrices (identity by
/// default).
pub fn synthesize_certificate(
    sys: &SwitchedSystem,
    theta: f64,
    n0: f64,
    q_choice: Option<&DMatrix<f64>>,
) -> Result<IssCertificate> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::Domain("theta must lie in (0, 1)".into()));
    }
    if n0 < 1.0 {
        return Err(Error::Domain("chatter bound must be >= 1".into()));
    }
    let n = sys.state_dim();
    let q_default = DMatrix::<f64>::identity(n, n);
    let q_mat = q_choice.unwrap_or(&q_default);
    if q_mat.nrows() != n || q_mat.ncols() != n {
        return Err(Error::Dimension(format!(
            "Q choice is {}x{}, expected {n}x{n}",
            q_mat.nrows(),
            q_mat.ncols()
        )));
    }

    let mode_decay: Vec<DMatrix<f64>> = sys.modes.iter().map(|_| q_mat.clone()).collect();
    let mode_lyapunov: Vec<DMatrix<f64>> = sys
        .modes
        .iter()
        .map(|m| lyapunov_solve(&m.a, q_mat))
        .collect::<Result<_>>()?;

    let k = sys.mode_count();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|q| (0..k).filter(move |r| *r != q).map(move |r| (q, r)))
        .collect();

    // Smallest exponent separating e^{-mu} P_r from theta P_q over all
    // ordered pairs, then inflated.
    let mut gamma_max = 1.0f64;
    for &(q, r) in &pairs {
        let (_, hi) = pencil_eig_extremes(&mode_lyapunov[r], &mode_lyapunov[q])?;
        gamma_max = gamma_max.max(hi);
    }
    let mu = (1.0 + SYNTHESIS_MARGIN) * (gamma_max / theta).ln();

    // Feasible timer-rate range. The flow block theta Q_q - eta mu P_q
    // must stay positive definite, so the supremum carries the theta
    // factor; the operating point sits at half of it.
    let mut pencil_q_over_p = f64::INFINITY;
    for q in 0..k {
        let (lo, _) = pencil_eig_extremes(&mode_decay[q], &mode_lyapunov[q])?;
        pencil_q_over_p = pencil_q_over_p.min(lo);
    }
    let eta_star = theta * pencil_q_over_p / mu;
    let eta = 0.5 * eta_star;

    // Flow input gain from the Schur complement of the flow block.
    let mut r_gain = 0.0f64;
    for (q, mode) in sys.modes.iter().enumerate() {
        let w = theta * &mode_decay[q] - (eta * mu) * &mode_lyapunov[q];
        let x = &mode_lyapunov[q] * &mode.b;
        r_gain = r_gain.max(schur_gain(&w, &x)?);
    }
    let r_gain = ((1.0 + SYNTHESIS_MARGIN) * r_gain).max(1e-12);
    let flow_gain = DMatrix::<f64>::identity(sys.input_dim(), sys.input_dim()) * r_gain;

    // Jump input gain from the Schur complement of the jump block.
    let emu = (-mu).exp();
    let mut m_gain = 0.0f64;
    for &(q, r) in &pairs {
        let w = theta * &mode_lyapunov[q] - emu * &mode_lyapunov[r];
        let x = &mode_lyapunov[r] * emu;
        m_gain = m_gain.max(schur_gain(&w, &x)?);
    }
    let m_gain = ((1.0 + SYNTHESIS_MARGIN) * m_gain).max(1e-12);
    let jump_gain = DMatrix::<f64>::identity(n, n) * m_gain;

    // Decrease rate and input amplification.
    let mut ratio = f64::INFINITY;
    let mut alpha_lower = f64::INFINITY;
    let mut p_max = 0.0f64;
    for q in 0..k {
        let (q_lo, _) = spd_extremes(&mode_decay[q])?;
        let (p_lo, p_hi) = spd_extremes(&mode_lyapunov[q])?;
        ratio = ratio.min(q_lo / p_hi);
        alpha_lower = alpha_lower.min(p_lo);
        p_max = p_max.max(p_hi);
    }
    let lambda = (1.0 - theta) * ratio.min(1.0);
    let rho = (mu * n0).exp() * r_gain.max(m_gain);
    let alpha_upper = (mu * n0).exp() * p_max;

    // Exponential-bound constants from the two decrease inequalities via
    // the standard comparison argument; the jump factor (1 - lambda)
    // matches e^{-lambda} only for lambda < 1, hence the clamp.
    let lambda_tilde = if lambda < 1.0 { lambda } else { 0.5 * lambda };
    let kappa1 = (alpha_upper / alpha_lower).sqrt().max(1.0);
    let kappa2 = 0.5 * lambda_tilde;
    let kappa3 = (rho / (lambda_tilde * alpha_lower)).sqrt();

    let cert = IssCertificate {
        mode_lyapunov,
        mode_decay,
        theta,
        mu,
        eta_star,
        eta,
        flow_gain,
        jump_gain,
        lambda,
        rho,
        kappa1,
        kappa2,
        kappa3,
        c: compute_c(&sys.modes)?,
        n0,
        alpha_lower,
        alpha_upper,
    };
    verify_certificate_feasibility(&cert, sys)?;
    Ok(cert)
}

/// Re-checks every semidefinite constraint of the synthesized data by
/// eigenvalue computation, naming the failing mode or pair.
pub fn verify_certificate_feasibility(cert: &IssCertificate, sys: &SwitchedSystem) -> Result<()> {
    let k = sys.mode_count();
    let emu = (-cert.mu).exp();

    for q in 0..k {
        let p = &cert.mode_lyapunov[q];
        let qm = &cert.mode_decay[q];
        // Lyapunov residual.
        let res = sys.modes[q].a.transpose() * p + p * &sys.modes[q].a + qm;
        let rel = res.amax() / qm.amax().max(1e-300);
        if rel > 1e-8 {
            return Err(Error::Infeasible(format!(
                "mode {q}: Lyapunov residual {rel:.3e}"
            )));
        }
        // Flow feasibility at the operating rate.
        let w = qm - (cert.eta * cert.mu) * p;
        let (lo, _) = sym_eig_extremes(&((&w + w.transpose()) * 0.5))?;
        if lo <= 0.0 {
            return Err(Error::Infeasible(format!(
                "mode {q}: Q - eta mu P lost definiteness (min eig {lo:.3e})"
            )));
        }
        // Full flow block.
        let s = assemble_block2(
            &(cert.theta * qm - (cert.eta * cert.mu) * p),
            &(-(p * &sys.modes[q].b)),
            &cert.flow_gain,
        );
        let (lo, _) = sym_eig_extremes(&((&s + s.transpose()) * 0.5))?;
        if lo < PSD_TOL {
            return Err(Error::Infeasible(format!(
                "mode {q}: flow block S has min eig {lo:.3e}"
            )));
        }
    }

    for q in 0..k {
        for r in 0..k {
            if q == r {
                continue;
            }
            let pq = &cert.mode_lyapunov[q];
            let pr = &cert.mode_lyapunov[r];
            let head = cert.theta * pq - emu * pr;
            let (lo, _) = sym_eig_extremes(&((&head + head.transpose()) * 0.5))?;
            if lo <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "pair ({q}, {r}): theta P_q - e^(-mu) P_r has min eig {lo:.3e}"
                )));
            }
            let y = assemble_block2(&head, &(-(emu * pr)), &cert.jump_gain);
            let (lo, _) = sym_eig_extremes(&((&y + y.transpose()) * 0.5))?;
            if lo < PSD_TOL {
                return Err(Error::Infeasible(format!(
                    "pair ({q}, {r}): jump block Y has min eig {lo:.3e}"
                )));
            }
        }
    }
    Ok(())
}
