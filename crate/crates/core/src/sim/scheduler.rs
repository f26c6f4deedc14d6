//! Distributed channel reassignment for preempted connections.

use alloc::vec::Vec;
use core::cmp::Ordering;

/// Maps preempted connections onto free channels.
///
/// `preempted` holds `(connection id, priority)`. The highest priorities
/// receive the free channels in ascending channel order; ties go to the
/// lower connection id. Returns `(connection id, channel)` pairs; the
/// connections left out stay blocked.
pub fn switch_scheduler(
    preempted: &[(usize, f64)],
    free_channels: &[usize],
) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, f64)> = preempted.to_vec();
    order.sort_by(|a, b| match b.1.partial_cmp(&a.1) {
        Some(Ordering::Equal) | None => a.0.cmp(&b.0),
        Some(o) => o,
    });
    let mut channels: Vec<usize> = free_channels.to_vec();
    channels.sort_unstable();
    order
        .into_iter()
        .zip(channels)
        .map(|((id, _), ch)| (id, ch))
        .collect()
}
