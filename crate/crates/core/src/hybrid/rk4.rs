//! Fixed-step classical Runge-Kutta stepping with bisection-based event
//! localization for the timer threshold.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Time tolerance for locating a timer crossing inside one step.
pub const EVENT_TIME_TOL: f64 = 1e-9;

/// Relative local-error threshold of the periodic step-size audit.
const STEP_AUDIT_TOL: f64 = 1e-5;

/// Reusable 4th-order stepper over `z' = f(t, z)`.
pub struct Rk4<F>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
{
    f: F,
    k1: DVector<f64>,
    k2: DVector<f64>,
    k3: DVector<f64>,
    k4: DVector<f64>,
    arg: DVector<f64>,
}

impl<F> Rk4<F>
where
    F: FnMut(f64, &DVector<f64>, &mut DVector<f64>),
{
    pub fn new(dim: usize, f: F) -> Self {
        Rk4 {
            f,
            k1: DVector::zeros(dim),
            k2: DVector::zeros(dim),
            k3: DVector::zeros(dim),
            k4: DVector::zeros(dim),
            arg: DVector::zeros(dim),
        }
    }

    /// One step from `(t, z)` with size `h`, written into `out`.
    pub fn step_into(&mut self, t: f64, z: &DVector<f64>, h: f64, out: &mut DVector<f64>) {
        (self.f)(t, z, &mut self.k1);

        self.arg.copy_from(z);
        self.arg.axpy(0.5 * h, &self.k1, 1.0);
        (self.f)(t + 0.5 * h, &self.arg, &mut self.k2);

        self.arg.copy_from(z);
        self.arg.axpy(0.5 * h, &self.k2, 1.0);
        (self.f)(t + 0.5 * h, &self.arg, &mut self.k3);

        self.arg.copy_from(z);
        self.arg.axpy(h, &self.k3, 1.0);
        (self.f)(t + h, &self.arg, &mut self.k4);

        out.copy_from(z);
        out.axpy(h / 6.0, &self.k1, 1.0);
        out.axpy(h / 3.0, &self.k2, 1.0);
        out.axpy(h / 3.0, &self.k3, 1.0);
        out.axpy(h / 6.0, &self.k4, 1.0);
    }

    pub fn step(&mut self, t: f64, z: &DVector<f64>, h: f64) -> DVector<f64> {
        let mut out = DVector::zeros(z.len());
        self.step_into(t, z, h, &mut out);
        out
    }

    /// Largest partial step `h* <= h` keeping component `idx` at or below
    /// `threshold`, found by bisection to [`EVENT_TIME_TOL`]. Returns the
    /// state at `t + h*` together with `h*`.
    ///
    /// Assumes the component is non-decreasing along the flow (timer
    /// rates are non-negative).
    pub fn locate_crossing(
        &mut self,
        t: f64,
        z: &DVector<f64>,
        h: f64,
        idx: usize,
        threshold: f64,
    ) -> (DVector<f64>, f64) {
        let mut lo = 0.0f64;
        let mut hi = h;
        let mut out = DVector::zeros(z.len());
        while hi - lo > EVENT_TIME_TOL {
            let mid = 0.5 * (lo + hi);
            self.step_into(t, z, mid, &mut out);
            if out[idx] >= threshold {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.step_into(t, z, hi, &mut out);
        // Snap the timer onto the threshold; the residual is below the
        // event tolerance times the timer rate.
        out[idx] = threshold;
        (out, hi)
    }

    /// Step-doubling audit: estimates the local error of one `h` step and
    /// rejects the step size when the dynamics are too fast for it.
    pub fn audit_step(&mut self, t: f64, z: &DVector<f64>, h: f64) -> Result<()> {
        let full = self.step(t, z, h);
        let half = self.step(t, z, 0.5 * h);
        let half2 = self.step(t + 0.5 * h, &half, 0.5 * h);
        let err = (&full - &half2).amax();
        let scale = z.amax().max(1.0);
        if err > STEP_AUDIT_TOL * scale {
            let suggested = h * (STEP_AUDIT_TOL * scale / err).powf(0.2) * 0.9;
            return Err(Error::Step {
                message: format!(
                    "local error estimate {err:.3e} exceeds {STEP_AUDIT_TOL:.1e} x scale"
                ),
                suggested,
            });
        }
        Ok(())
    }
}
