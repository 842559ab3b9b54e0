//! Switched-mode packaging: one LTI vector field per mode together with
//! its equilibrium, plus the derived constants that bound jump-induced
//! displacements.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, spectral_report};

/// One mode of the switched system: `x' = A x + b + B u~` with
/// `b = B u` and equilibrium `y* = -A^{-1} b`.
#[derive(Debug, Clone)]
pub struct ModeSpec {
    pub id: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// Switching input value held while this mode is active.
    pub switching_input: DVector<f64>,
    /// Affine term `B u`.
    pub affine: DVector<f64>,
    /// Equilibrium `-A^{-1} (B u)`.
    pub equilibrium: DVector<f64>,
}

/// Builds a mode and verifies its invariants: `A` Hurwitz, `b = B u`
/// reproduced to 1e-12, and equilibrium residual `A y* + b` below 1e-9.
pub fn build_mode(
    id: usize,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    switching_input: DVector<f64>,
) -> Result<ModeSpec> {
    let report = spectral_report(&a)?;
    if !report.is_hurwitz {
        return Err(Error::NotHurwitz {
            abscissa: report.spectral_abscissa,
        });
    }
    if b.nrows() != a.nrows() {
        return Err(Error::Dimension(format!(
            "mode {id}: A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if b.ncols() != switching_input.len() {
        return Err(Error::Dimension(format!(
            "mode {id}: B has {} columns but u has length {}",
            b.ncols(),
            switching_input.len()
        )));
    }
    let affine = &b * &switching_input;
    let equilibrium = solve_linear(&a, &(-&affine))?;
    let residual = (&a * &equilibrium + &affine).amax();
    if residual > 1e-9 {
        return Err(Error::Domain(format!(
            "mode {id}: equilibrium residual {residual:.3e} exceeds 1e-9"
        )));
    }
    Ok(ModeSpec {
        id,
        a,
        b,
        switching_input,
        affine,
        equilibrium,
    })
}

/// Axis-aligned box of admissible slowly varying loads.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LoadBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LoadBox {
    /// Degenerate box holding only the origin.
    pub fn singleton_zero(dim: usize) -> Self {
        LoadBox {
            lower: vec![0.0; dim],
            upper: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::Dimension(
                "load box bounds have mismatched lengths".into(),
            ));
        }
        for (lo, hi) in self.lower.iter().zip(&self.upper) {
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(format!(
                    "load box interval [{lo}, {hi}] is invalid"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, u: &DVector<f64>, tol: f64) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }

    /// Largest Euclidean norm over the box, attained at a corner:
    /// per axis the larger of |lo|, |hi|.
    pub fn max_norm(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise clamp onto the box.
    pub fn project(&self, u: &mut DVector<f64>) {
        for i in 0..u.len() {
            u[i] = u[i].clamp(self.lower[i], self.upper[i]);
        }
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lower.iter().zip(&self.upper).map(|(lo, hi)| 0.5 * (lo + hi)),
        )
    }
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, s| acc.max(*s))
}

/// Largest jump displacement of the shifted state over mode pairs and
/// admissible loads: max |A_r^{-1} B_r - A_q^{-1} B_q| * max |u~|.
pub fn compute_delta3(modes: &[ModeSpec], load_box: &LoadBox) -> Result<f64> {
    if modes.is_empty() {
        return Err(Error::Domain("compute_delta3: no modes".into()));
    }
    load_box.validate()?;
    if modes.len() == 1 {
        return Ok(0.0);
    }
    let gains: Vec<DMatrix<f64>> = modes
        .iter()
        .map(|m| shift_gain(m))
        .collect::<Result<_>>()?;
    let mut worst = 0.0f64;
    for (i, gi) in gains.iter().enumerate() {
        for (j, gj) in gains.iter().enumerate() {
            if i != j {
                worst = worst.max(spectral_norm(&(gi - gj)));
            }
        }
    }
    Ok(worst * load_box.max_norm())
}

/// Largest distance between mode equilibria:
/// max over ordered pairs of |A_r^{-1} b_r - A_q^{-1} b_q|.
pub fn compute_c(modes: &[ModeSpec]) -> Result<f64> {
    if modes.is_empty() {
        return Err(Error::Domain("compute_c: no modes".into()));
    }
    let mut worst = 0.0f64;
    for (i, mi) in modes.iter().enumerate() {
        for mj in modes.iter().skip(i + 1) {
            worst = worst.max((&mi.equilibrium - &mj.equilibrium).norm());
        }
    }
    Ok(worst)
}

/// `A^{-1} B`, column by column.
pub fn shift_gain(mode: &ModeSpec) -> Result<DMatrix<f64>> {
    let n = mode.a.nrows();
    let m = mode.b.ncols();
    let mut g = DMatrix::<f64>::zeros(n, m);
    for j in 0..m {
        let col = mode.b.column(j).clone_owned();
        let x = solve_linear(&mode.a, &col)?;
        g.set_column(j, &x);
    }
    Ok(g)
}

/// The assembled switched system: modes, admissible load box, and the
/// derived displacement constants.
#[derive(Debug, Clone)]
pub struct SwitchedSystem {
    pub modes: Vec<ModeSpec>,
    pub load_box: LoadBox,
    /// Jump-ball radius bound induced by the load box.
    pub delta3: f64,
    /// Largest equilibrium separation.
    pub c: f64,
    /// Cached `A_q^{-1} B_q` per mode.
    shift_gains: Vec<DMatrix<f64>>,
}

impl SwitchedSystem {
    pub fn new(modes: Vec<ModeSpec>, load_box: LoadBox) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain("switched system needs at least one mode".into()));
        }
        let dim = modes[0].a.nrows();
        let input_dim = modes[0].b.ncols();
        for m in &modes {
            if m.a.nrows() != dim || m.b.ncols() != input_dim {
                return Err(Error::Dimension(format!(
                    "mode {} has state/input dimensions {}x{}, expected {}x{}",
                    m.id,
                    m.a.nrows(),
                    m.b.ncols(),
                    dim,
                    input_dim
                )));
            }
        }
        load_box.validate()?;
        if load_box.dim() != input_dim {
            return Err(Error::Dimension(format!(
                "load box has dimension {} but modes take {} input channels",
                load_box.dim(),
                input_dim
            )));
        }
        let delta3 = compute_delta3(&modes, &load_box)?;
        let c = compute_c(&modes)?;
        let shift_gains = modes.iter().map(shift_gain).collect::<Result<_>>()?;
        Ok(SwitchedSystem {
            modes,
            load_box,
            delta3,
            c,
            shift_gains,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.modes[0].a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.modes[0].b.ncols()
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn mode(&self, id: usize) -> Result<&ModeSpec> {
        self.modes
            .get(id)
            .ok_or_else(|| Error::Domain(format!("mode id {id} out of range")))
    }

    /// Cached `A_q^{-1} B_q`.
    pub fn shift_gain(&self, id: usize) -> Result<&DMatrix<f64>> {
        self.shift_gains
            .get(id)
            .ok_or_else(|| Error::Domain(format!("mode id {id} out of range")))
    }

    /// Jump displacement of the shifted state in the slow-load system:
    /// `(A_r^{-1} B_r - A_q^{-1} B_q) u~`.
    pub fn physical_jump_shift(
        &self,
        from: usize,
        to: usize,
        load: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let gf = self.shift_gain(from)?;
        let gt = self.shift_gain(to)?;
        Ok((gt - gf) * load)
    }

    /// Jump displacement in the fast-load system:
    /// `A_r^{-1} b_r - A_q^{-1} b_q = y*_q - y*_r`.
    pub fn equilibrium_jump_shift(&self, from: usize, to: usize) -> Result<DVector<f64>> {
        let mf = self.mode(from)?;
        let mt = self.mode(to)?;
        Ok(&mf.equilibrium - &mt.equilibrium)
    }
}

/// The two matrices of the worked two-mode example used across the test
/// suites: rotation-type Hurwitz blocks with equilibria (0, 1) and (0, 2).
pub fn two_mode_example() -> SwitchedSystem {
    let a1 = DMatrix::from_row_slice(2, 2, &[-0.6, 2.98, -2.98, -0.6]);
    let b1 = DVector::from_vec(vec![-2.98, 0.6]);
    let a2 = DMatrix::from_row_slice(2, 2, &[-0.4, 3.24, -3.24, -0.4]);
    let b2 = DVector::from_vec(vec![-6.48, 0.8]);
    let m1 = build_mode(0, a1, DMatrix::identity(2, 2), b1).unwrap();
    let m2 = build_mode(1, a2, DMatrix::identity(2, 2), b2).unwrap();
    SwitchedSystem::new(vec![m1, m2], LoadBox::singleton_zero(2)).unwrap()
}
