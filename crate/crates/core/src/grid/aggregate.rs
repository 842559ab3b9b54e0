//! Aggregate (common-frequency) state-space model: one shared frequency
//! deviation, per-generator turbine states, and the secondary controller.
//!
//! State layout: x = (dw, P_1 .. P_g, z); input u = (P_load, P*_1 .. P*_g).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::params::{DeaParams, GeneratorParams, SecondaryParams};

/// Effective inertia and net damping: plain sums over generators and DEAs.
pub fn aggregate_effective(gens: &[GeneratorParams], deas: &[DeaParams]) -> Result<(f64, f64)> {
    if gens.is_empty() {
        return Err(Error::Domain(
            "aggregate model needs at least one generator".into(),
        ));
    }
    let m_eff: f64 =
        gens.iter().map(|g| g.inertia).sum::<f64>() + deas.iter().map(|d| d.inertia).sum::<f64>();
    let d_net: f64 =
        gens.iter().map(|g| g.damping).sum::<f64>() + deas.iter().map(|d| d.damping).sum::<f64>();
    Ok((m_eff, d_net))
}

/// Builds the aggregate `(A, B)` pair.
///
/// Row 1 carries the frequency dynamics, the middle block the turbine
/// dynamics with `A_tau = -diag(tau)^{-1}`, and the last row the secondary
/// controller. `B` routes the aggregate load into row 1 and the generator
/// setpoints into the turbine block through `-A_tau (I - zeta 1^T)`.
pub fn build_aggregate_matrices(
    gens: &[GeneratorParams],
    deas: &[DeaParams],
    sec: &SecondaryParams,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    for g in gens {
        g.validate()?;
    }
    for d in deas {
        d.validate()?;
    }
    let max_tau = gens.iter().map(|g| g.turbine_time).fold(0.0, f64::max);
    sec.validate(max_tau)?;

    let ng = gens.len();
    if sec.participation.len() != ng {
        return Err(Error::Dimension(format!(
            "secondary controller has {} participation factors for {} generators",
            sec.participation.len(),
            ng
        )));
    }

    let (m_eff, d_net) = aggregate_effective(gens, deas)?;
    let n = 2 + ng;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, 1 + ng);

    // Frequency row.
    a[(0, 0)] = -d_net / m_eff;
    for i in 0..ng {
        a[(0, 1 + i)] = 1.0 / m_eff;
    }
    b[(0, 0)] = -1.0 / m_eff;

    // Turbine block: tau_g dP_g = -P_g + P^r_g - K_gov,g dw, with
    // P^r = P* + zeta (z - 1^T P*).
    for (i, g) in gens.iter().enumerate() {
        let at = -1.0 / g.turbine_time; // diagonal entry of A_tau
        a[(1 + i, 0)] = at * g.governor_gain;
        a[(1 + i, 1 + i)] = at;
        a[(1 + i, n - 1)] = -at * sec.participation[i];
        // -A_tau (I - zeta 1^T) row i over setpoint channels.
        for j in 0..ng {
            let eye = if i == j { 1.0 } else { 0.0 };
            b[(1 + i, 1 + j)] = -at * (eye - sec.participation[i]);
        }
    }

    // Secondary controller row: tau_z dz = -z + beta dw + 1^T P.
    let tz = sec.time_constant;
    a[(n - 1, 0)] = sec.gain / tz;
    for i in 0..ng {
        a[(n - 1, 1 + i)] = 1.0 / tz;
    }
    a[(n - 1, n - 1)] = -1.0 / tz;

    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_report;

    fn gen(inertia: f64) -> GeneratorParams {
        GeneratorParams {
            inertia,
            damping: 1.5,
            turbine_time: 2.0,
            governor_gain: 20.0,
            setpoint: 0.0,
        }
    }

    fn dea(m: f64, d: f64) -> DeaParams {
        DeaParams {
            inertia: m,
            damping: d,
            reference_power: 0.0,
        }
    }

    #[test]
    fn effective_sums() {
        let gens = vec![gen(1.0), gen(1.0)];
        let deas = vec![dea(40.0, 0.0), dea(30.0, 0.0), dea(25.0, 0.0)];
        let (m, _) = aggregate_effective(&gens, &deas).unwrap();
        assert!((m - 97.0).abs() < 1e-12);

        let gens10: Vec<_> = (0..10).map(|_| gen(5.0)).collect();
        let deas3 = vec![dea(40.0, 2.0), dea(30.0, 1.0), dea(25.0, 3.0)];
        let (_, d) = aggregate_effective(&gens10, &deas3).unwrap();
        assert!((d - 21.0).abs() < 1e-12);
    }

    #[test]
    fn effective_with_no_deas() {
        let gens = vec![gen(3.0), gen(4.0)];
        let (m, _) = aggregate_effective(&gens, &[]).unwrap();
        assert!((m - 7.0).abs() < 1e-12);
    }

    #[test]
    fn empty_generator_list_rejected() {
        assert!(aggregate_effective(&[], &[]).is_err());
    }

    #[test]
    fn single_generator_shape_and_placement() {
        let gens = vec![GeneratorParams {
            inertia: 1.0,
            damping: 1.0,
            turbine_time: 1.0,
            governor_gain: 1.0,
            setpoint: 0.0,
        }];
        let sec = SecondaryParams::equal_participation(2.0, -1.0, 1);
        let (a, b) = build_aggregate_matrices(&gens, &[], &sec).unwrap();
        assert_eq!(a.nrows(), 3);
        assert_eq!(a.ncols(), 3);
        assert_eq!(b.nrows(), 3);
        assert_eq!(b.ncols(), 2);
        // M_eff = 1, so the turbine feed-in entry is 1/M_eff.
        assert!((a[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((b[(0, 0)] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn benchmark_setup_is_twelve_state_hurwitz() {
        let gens: Vec<_> = (0..10).map(|_| gen(5.0)).collect();
        let deas = vec![dea(40.0, 2.0), dea(30.0, 1.0), dea(25.0, 3.0)];
        let sec = SecondaryParams::equal_participation(10.0, -0.1, 10);
        let (a, _) = build_aggregate_matrices(&gens, &deas, &sec).unwrap();
        assert_eq!(a.nrows(), 12);
        let rep = spectral_report(&a).unwrap();
        assert!(
            rep.is_hurwitz,
            "aggregate A should be Hurwitz, abscissa {}",
            rep.spectral_abscissa
        );
    }

    #[test]
    fn frequency_row_reproduces_power_balance() {
        // A's first row applied to an arbitrary state must equal
        // (sum P_m - D_net dw) / M_eff.
        let gens: Vec<_> = (0..3).map(|_| gen(2.0)).collect();
        let deas = vec![dea(10.0, 4.0)];
        let sec = SecondaryParams::equal_participation(10.0, -0.5, 3);
        let (a, _) = build_aggregate_matrices(&gens, &deas, &sec).unwrap();
        let (m_eff, d_net) = aggregate_effective(&gens, &deas).unwrap();
        let x = nalgebra::DVector::from_vec(vec![0.7, -1.1, 0.4, 2.2, -0.3]);
        let row = (a.clone() * &x)[0];
        let want = ((x[1] + x[2] + x[3]) - d_net * x[0]) / m_eff;
        assert!((row - want).abs() < 1e-14);
    }
}
