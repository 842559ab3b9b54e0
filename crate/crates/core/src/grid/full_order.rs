//! Full-order per-bus model (swing + turbine dynamics over the DC network)
//! and the change of coordinates that removes its angle-translation mode.
//!
//! State layout: x_f = (angles of dynamic buses, frequency deviations of
//! dynamic buses, turbine powers). Dynamic buses are the generator buses
//! plus every DEA bus with positive virtual inertia; buses with
//! `M = D = 0` contribute an algebraic power balance and are removed by
//! Kron reduction of the network. Input layout: one net-load channel per
//! bus (all buses, including reduced ones), then one reference-power
//! channel per generator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::params::{DeaParams, GeneratorParams, NetworkParams};
use crate::linalg::spectral_report;

/// Index bookkeeping for the assembled full-order model.
#[derive(Debug, Clone)]
pub struct FullModelLayout {
    /// Bus indices carrying differential states, sorted ascending.
    pub dynamic_buses: Vec<usize>,
    /// Bus indices eliminated through the power-balance constraint.
    pub reduced_buses: Vec<usize>,
    /// Number of generators (turbine states).
    pub gen_count: usize,
    /// Total state dimension: 2 * dynamic + generators.
    pub state_dim: usize,
    /// Total input dimension: bus_count + generators.
    pub input_dim: usize,
}

/// Assembles the full-order `(A, B)` pair together with its layout.
///
/// `integral_gain` is the coefficient of the per-generator angle term
/// added to the turbine equation; zero keeps the angle-translation
/// symmetry (and with it the structural zero eigenvalue).
pub fn build_full_matrices(
    net: &NetworkParams,
    gens: &[GeneratorParams],
    deas: &[DeaParams],
    integral_gain: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>, FullModelLayout)> {
    net.validate()?;
    for g in gens {
        g.validate()?;
    }
    for d in deas {
        d.validate()?;
    }
    if net.gen_buses.len() != gens.len() {
        return Err(Error::Dimension(format!(
            "{} generator buses for {} generator parameter blocks",
            net.gen_buses.len(),
            gens.len()
        )));
    }
    if net.dea_buses.len() != deas.len() {
        return Err(Error::Dimension(format!(
            "{} DEA buses for {} DEA parameter blocks",
            net.dea_buses.len(),
            deas.len()
        )));
    }
    for (d, &bus) in deas.iter().zip(&net.dea_buses) {
        if d.inertia == 0.0 && d.damping > 0.0 {
            return Err(Error::Domain(format!(
                "bus {bus}: zero-inertia DEA with damping has no differential frequency state; \
                 set inertia > 0 or damping = 0"
            )));
        }
    }

    let n = net.bus_count;
    let ng = gens.len();

    // Per-bus inertia/damping; generators always dynamic.
    let mut inertia = vec![0.0f64; n];
    let mut damping = vec![0.0f64; n];
    for (g, &bus) in gens.iter().zip(&net.gen_buses) {
        inertia[bus] = g.inertia;
        damping[bus] = g.damping;
    }
    for (d, &bus) in deas.iter().zip(&net.dea_buses) {
        inertia[bus] = d.inertia;
        damping[bus] = d.damping;
    }

    let mut dynamic: Vec<usize> = net.gen_buses.clone();
    dynamic.extend(
        deas.iter()
            .zip(&net.dea_buses)
            .filter(|(d, _)| !d.is_pure_load())
            .map(|(_, &b)| b),
    );
    dynamic.sort_unstable();
    let reduced: Vec<usize> = (0..n).filter(|b| !dynamic.contains(b)).collect();
    let nd = dynamic.len();
    if nd == 0 {
        return Err(Error::Topology("no dynamic buses in the network".into()));
    }

    // DC Laplacian over all buses.
    let mut lap = DMatrix::<f64>::zeros(n, n);
    for l in &net.lines {
        let w = 1.0 / l.reactance;
        lap[(l.from, l.from)] += w;
        lap[(l.to, l.to)] += w;
        lap[(l.from, l.to)] -= w;
        lap[(l.to, l.from)] -= w;
    }

    let pick = |rows: &[usize], cols: &[usize]| -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| lap[(rows[i], cols[j])])
    };

    // Kron reduction: eliminate the algebraic buses from the network and
    // redistribute their load channels onto the dynamic buses.
    let (lap_red, spread) = if reduced.is_empty() {
        (pick(&dynamic, &dynamic), DMatrix::zeros(nd, 0))
    } else {
        let ldd = pick(&dynamic, &dynamic);
        let ldc = pick(&dynamic, &reduced);
        let lcd = pick(&reduced, &dynamic);
        let lcc = pick(&reduced, &reduced);
        let lcc_lu = lcc.lu();
        let lcc_inv_lcd = lcc_lu.solve(&lcd).ok_or_else(|| {
            Error::Topology("reduced network block is singular; graph must be connected".into())
        })?;
        let lcc_inv = lcc_lu.try_inverse().ok_or_else(|| {
            Error::Topology("reduced network block is singular; graph must be connected".into())
        })?;
        (ldd - &ldc * lcc_inv_lcd, &ldc * lcc_inv)
    };

    let state_dim = 2 * nd + ng;
    let input_dim = n + ng;
    let mut a = DMatrix::<f64>::zeros(state_dim, state_dim);
    let mut b = DMatrix::<f64>::zeros(state_dim, input_dim);

    let dyn_pos = |bus: usize| dynamic.iter().position(|&x| x == bus).unwrap();

    // Angle rows.
    for k in 0..nd {
        a[(k, nd + k)] = net.sync_speed;
    }

    // Frequency rows.
    for (k, &bus) in dynamic.iter().enumerate() {
        let m = inertia[bus];
        let row = nd + k;
        for kk in 0..nd {
            a[(row, kk)] = -lap_red[(k, kk)] / m;
        }
        a[(row, row)] = -damping[bus] / m;
        b[(row, bus)] = -1.0 / m;
        for (cm, &cbus) in reduced.iter().enumerate() {
            b[(row, cbus)] = spread[(k, cm)] / m;
        }
    }

    // Turbine rows, with the optional angle term.
    for (gi, (g, &bus)) in gens.iter().zip(&net.gen_buses).enumerate() {
        let k = dyn_pos(bus);
        let row = 2 * nd + gi;
        let inv_tau = 1.0 / g.turbine_time;
        a[(row, row)] = -inv_tau;
        a[(row, nd + k)] = -g.governor_gain * inv_tau;
        a[(row, k)] = integral_gain * inv_tau;
        b[(row, n + gi)] = inv_tau;
    }

    // Turbine feed-in to the swing equation.
    for (gi, &bus) in net.gen_buses.iter().enumerate() {
        let k = dyn_pos(bus);
        a[(nd + k, 2 * nd + gi)] = 1.0 / inertia[bus];
    }

    let layout = FullModelLayout {
        dynamic_buses: dynamic,
        reduced_buses: reduced,
        gen_count: ng,
        state_dim,
        input_dim,
    };
    Ok((a, b, layout))
}

/// Threshold under which an eigenvalue counts as the structural zero.
pub const ZERO_MODE_TOL: f64 = 1e-8;

/// Removes the single zero eigenvalue of `a_bar` by restricting the
/// dynamics to the orthogonal complement of its kernel direction.
///
/// Returns `(A, B, T)` with `A = T^T a_bar T`, `B = T^T b_bar`, and
/// `T^T T = I`. The kernel is invariant, so the restriction carries
/// exactly the nonzero spectrum; `A` is verified Hurwitz.
pub fn reduce_zero_mode(
    a_bar: &DMatrix<f64>,
    b_bar: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = a_bar.nrows();
    if !a_bar.is_square() {
        return Err(Error::Dimension("reduce_zero_mode needs a square matrix".into()));
    }
    if b_bar.nrows() != n {
        return Err(Error::Dimension(format!(
            "reduce_zero_mode: A is {n}x{n} but B has {} rows",
            b_bar.nrows()
        )));
    }
    let report = spectral_report(a_bar)?;
    let near_zero = report
        .eigenvalues
        .iter()
        .filter(|(re, im)| (re * re + im * im).sqrt() <= ZERO_MODE_TOL)
        .count();
    if near_zero != 1 {
        return Err(Error::Reduction(format!(
            "expected exactly one zero eigenvalue, found {near_zero}"
        )));
    }

    // Kernel direction from the smallest singular value.
    let svd = a_bar.clone().svd(false, true);
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Reduction("SVD did not produce right singular vectors".into()))?;
    let mut min_idx = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s < svd.singular_values[min_idx] {
            min_idx = i;
        }
    }
    let mut v0 = v_t.row(min_idx).transpose().clone_owned();
    v0 /= v0.norm();

    // Householder reflector taking e1 to +/- v0; its trailing columns are
    // an orthonormal basis of the complement of v0.
    let alpha = if v0[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut u = v0.clone();
    u[0] += alpha;
    let beta = 2.0 / u.dot(&u);
    let h = DMatrix::<f64>::identity(n, n) - beta * &u * u.transpose();
    let t = h.columns(1, n - 1).clone_owned();

    let a = t.transpose() * a_bar * &t;
    let b = t.transpose() * b_bar;
    let rep = spectral_report(&a)?;
    if !rep.is_hurwitz {
        return Err(Error::Reduction(format!(
            "reduced matrix is not Hurwitz (abscissa {:.3e})",
            rep.spectral_abscissa
        )));
    }
    Ok((a, b, t))
}

/// Kernel direction of the angle-translation symmetry for a model built
/// by [`build_full_matrices`] with zero integral gain.
pub fn translation_direction(layout: &FullModelLayout) -> DVector<f64> {
    let nd = layout.dynamic_buses.len();
    let mut v = DVector::zeros(layout.state_dim);
    for k in 0..nd {
        v[k] = 1.0;
    }
    v / (nd as f64).sqrt()
}
