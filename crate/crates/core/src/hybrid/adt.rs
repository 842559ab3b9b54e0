//! Average dwell-time verification over recorded arcs.

use crate::hybrid::state::HybridArc;

/// Checks the switch-count bound `N(t1, t2) <= n0 + (t2 - t1) / tau_d`
/// exactly over every window delimited by a pair of jump times.
///
/// The count only changes at jumps, so windows anchored at jump times are
/// the binding ones; the closed window `[s, s]` containing `m`
/// simultaneous jumps counts all `m`.
pub fn verify_adt(arc: &HybridArc, n0: f64, tau_d: f64) -> bool {
    assert!(tau_d > 0.0, "dwell time must be positive");
    let times = arc.jump_times();
    let k = times.len();
    for i in 0..k {
        for j in i..k {
            let count = (j - i + 1) as f64;
            let width = times[j] - times[i];
            if count > n0 + width / tau_d + 1e-12 {
                return false;
            }
        }
    }
    true
}
