//! Continuous Lyapunov solver `A^T P + P A = -Q` by Schur reduction and
//! block back-substitution (Bartels-Stewart). Dense; systems here stay
//! at or below ~100 states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::spectral::spectral_report;

/// Relative residual bound enforced on the returned solution.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-8;

fn frob(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `A^T P + P A = -Q` for symmetric positive definite `P`.
///
/// `A` must be Hurwitz and `Q` symmetric positive definite; both are
/// checked. The residual `|A^T P + P A + Q|_F <= 1e-8 |Q|_F` is enforced.
pub fn lyapunov_solve(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if !a.is_square() || !q.is_square() || q.nrows() != n {
        return Err(Error::Dimension(format!(
            "lyapunov_solve: A is {}x{}, Q is {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let report = spectral_report(a)?;
    if !report.is_hurwitz {
        return Err(Error::NotHurwitz {
            abscissa: report.spectral_abscissa,
        });
    }
    let qscale = q.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let asym = (q - q.transpose()).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if asym > 1e-12 * qscale {
        return Err(Error::Domain(
            "lyapunov_solve: Q is not symmetric".into(),
        ));
    }
    if q.clone().cholesky().is_none() {
        return Err(Error::Domain(
            "lyapunov_solve: Q is not positive definite".into(),
        ));
    }

    // A = U S U^T with S quasi-upper-triangular. Substituting P = U Pt U^T
    // turns the equation into S^T Pt + Pt S = -Qt with Qt = U^T Q U.
    let schur = a.clone().schur();
    let (u, s) = schur.unpack();
    let qt = u.transpose() * q * &u;
    let pt = solve_quasi_triangular(&s, &(-qt))?;
    let p = &u * pt * u.transpose();
    let p = (&p + p.transpose()) * 0.5;

    let residual = a.transpose() * &p + &p * a + q;
    let rel = frob(&residual) / frob(q).max(f64::MIN_POSITIVE);
    if rel > LYAPUNOV_RESIDUAL_TOL {
        return Err(Error::Domain(format!(
            "lyapunov_solve: residual {rel:.3e} exceeds {LYAPUNOV_RESIDUAL_TOL:.1e}"
        )));
    }
    Ok(p)
}

/// Splits a real quasi-triangular matrix into its 1x1 / 2x2 diagonal blocks.
fn schur_blocks(s: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = s.nrows();
    let scale = s.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && s[(i + 1, i)].abs() > 1e-14 * scale {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Solves `S^T X + X S = C` for quasi-upper-triangular `S` by forward
/// block substitution. Each diagonal sub-problem is a Sylvester system of
/// size at most 2x2, solved through its Kronecker form.
fn solve_quasi_triangular(s: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = s.nrows();
    let blocks = schur_blocks(s);
    let mut x = DMatrix::<f64>::zeros(n, n);

    for (bj, &(j0, jw)) in blocks.iter().enumerate() {
        for (bi, &(i0, iw)) in blocks.iter().enumerate() {
            // RHS = C_IJ - sum_{K<I} S_KI^T X_KJ - sum_{K<J} X_IK S_KJ
            let mut rhs = c.view((i0, j0), (iw, jw)).clone_owned();
            for &(k0, kw) in blocks.iter().take(bi) {
                let ski = s.view((k0, i0), (kw, iw));
                let xkj = x.view((k0, j0), (kw, jw));
                rhs -= ski.transpose() * xkj;
            }
            for &(k0, kw) in blocks.iter().take(bj) {
                let xik = x.view((i0, k0), (iw, kw));
                let skj = s.view((k0, j0), (kw, jw));
                rhs -= xik * skj;
            }

            let sii = s.view((i0, i0), (iw, iw)).clone_owned();
            let sjj = s.view((j0, j0), (jw, jw)).clone_owned();
            // Vectorize: (I (x) S_II^T + S_JJ^T (x) I) vec(X_IJ) = vec(RHS).
            let m = iw * jw;
            let mut k = DMatrix::<f64>::zeros(m, m);
            for cj in 0..jw {
                for ci in 0..iw {
                    let col = cj * iw + ci;
                    for ri in 0..iw {
                        k[(cj * iw + ri, col)] += sii[(ci, ri)];
                    }
                    for rj in 0..jw {
                        k[(rj * iw + ci, col)] += sjj[(cj, rj)];
                    }
                }
            }
            let rhs_vec =
                nalgebra::DVector::from_iterator(m, (0..jw).flat_map(|cj| (0..iw).map(move |ci| (ci, cj))).map(|(ci, cj)| rhs[(ci, cj)]));
            let sol = k.lu().solve(&rhs_vec).ok_or_else(|| {
                Error::Domain("lyapunov_solve: singular diagonal sub-problem".into())
            })?;
            for cj in 0..jw {
                for ci in 0..iw {
                    x[(i0 + ci, j0 + cj)] = sol[cj * iw + ci];
                }
            }
        }
    }
    Ok(x)
}
