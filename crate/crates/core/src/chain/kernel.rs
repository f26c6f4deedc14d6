use alloc::vec;
use alloc::vec::Vec;

use super::{ChainDims, ChainState, ControlChannel, ErrorModel, MacVariant, TrafficParams};
use crate::error::{Error, Result};
use crate::math::{choose, powi};

const ROW_TOLERANCE: f64 = 1e-9;

/// Probability that `j` of `k` transmitting connections complete in a slot.
///
/// Binomial in `j`; `j = 0` gives `(1 - q)^k` and `j` outside `[0, k]` gives 0.
pub fn termination_prob(k: usize, j: i64, q: f64) -> f64 {
    if j < 0 || j as usize > k {
        return 0.0;
    }
    let k = k as i64;
    choose(k, j) * powi(q, j) * powi(1.0 - q, k - j)
}

/// Probability of `j ∈ {0, 1}` new connections given `m` existing ones.
pub fn connection_setup_prob(
    m: usize,
    j: usize,
    dims: &ChainDims,
    variant: &MacVariant,
    traffic: &TrafficParams,
) -> f64 {
    let one = setup_success(m, dims, variant, traffic);
    match j {
        0 => 1.0 - one,
        1 => one,
        _ => 0.0,
    }
}

fn setup_success(m: usize, dims: &ChainDims, variant: &MacVariant, traffic: &TrafficParams) -> f64 {
    let n = dims.users as i64;
    let free = n - 2 * m as i64;
    if free <= 0 {
        return 0.0;
    }
    let p = traffic.p;
    let mut s = free as f64 * p * powi(1.0 - p, free - 1);
    s *= match variant.error_model {
        ErrorModel::E0 => 1.0,
        ErrorModel::E1 => 1.0 - traffic.p_e,
        ErrorModel::E2 => (1.0 - traffic.p_e) * (1.0 - traffic.p_e),
    };
    match variant.control {
        ControlChannel::DccPuFreeControl => s,
        ControlChannel::DccSharedControl => s * (1.0 - traffic.p_c),
        ControlChannel::Hcc => {
            let receivers = (free - 1) as f64 / (n - 1) as f64;
            let unheld = dims.data_channels.saturating_sub(m) as f64 / dims.channels as f64;
            s * (1.0 - traffic.p_c) * receivers * unheld
        }
    }
}

/// Precomputed per-slot probabilities for one parameter point.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    dims: ChainDims,
    variant: MacVariant,
    p_c: f64,
    /// `term[k][j]` for `0 <= j <= k <= M_D`.
    term: Vec<Vec<f64>>,
    /// `setup[m]` for `0 <= m <= s_m`.
    setup: Vec<f64>,
}

impl TransitionKernel {
    pub fn new(dims: ChainDims, variant: MacVariant, traffic: TrafficParams) -> Self {
        let q = traffic.effective_q(variant.error_model);
        let md = dims.data_channels;
        let term = (0..=md)
            .map(|k| (0..=k).map(|j| termination_prob(k, j as i64, q)).collect())
            .collect();
        let setup = (0..=dims.max_connections)
            .map(|m| setup_success(m, &dims, &variant, &traffic))
            .collect();
        Self {
            dims,
            variant,
            p_c: traffic.p_c,
            term,
            setup,
        }
    }

    fn t(&self, k: usize, j: i64) -> f64 {
        if j < 0 || j as usize > k {
            return 0.0;
        }
        self.term[k][j as usize]
    }

    fn s1(&self, m: usize) -> f64 {
        self.setup[m]
    }

    fn s0(&self, m: usize) -> f64 {
        1.0 - self.setup[m]
    }

    fn pu_weight(&self, y: usize) -> f64 {
        let md = self.dims.data_channels as i64;
        powi(self.p_c, y as i64) * powi(1.0 - self.p_c, md - y as i64)
    }

    /// `P_{x,y}^{(i)}`: `i` of the `x + i` held channels and `y - i` of the rest see a PU.
    fn p_drop(&self, x: usize, y: usize, i: usize) -> f64 {
        let md = self.dims.data_channels as i64;
        let (x, y, i) = (x as i64, y as i64, i as i64);
        choose(x + i, i) * choose(md - x - i, y - i) * self.pu_weight(y as usize)
    }

    /// `R_{x,y}^{(z)}`: `z - x` of the `z` held channels and `y - z + x` of the rest see a PU.
    fn r_hold(&self, x: usize, y: usize, z: usize) -> f64 {
        let md = self.dims.data_channels as i64;
        let (x, y, z) = (x as i64, y as i64, z as i64);
        choose(z, z - x) * choose(md - z, y - z + x) * self.pu_weight(y as usize)
    }

    fn is_edge(&self, x: usize, y: usize) -> bool {
        x + y == self.dims.data_channels || x == self.dims.max_connections
    }

    /// One-slot transition probability.
    pub fn prob(&self, from: ChainState, to: ChainState) -> f64 {
        match (self.variant.buffering, self.variant.switching) {
            (false, false) => self.drop_no_switch(from, to),
            (false, true) => self.drop_switch(from, to),
            (true, _) => self.hold(from, to),
        }
    }

    fn drop_no_switch(&self, from: ChainState, to: ChainState) -> f64 {
        let (k, x, y) = (from.x, to.x, to.y);
        let sm = self.dims.max_connections;
        if x > k + 1 {
            return 0.0;
        }
        if x == k + 1 {
            return self.t(k, 0) * self.s1(k) * self.p_drop(x, y, 0);
        }
        let (ki, xi) = (k as i64, x as i64);
        let i_max = (sm - x).min(y);
        let mut sum = 0.0;
        for i in 0..=i_max {
            let ii = i as i64;
            sum += (self.t(k, ki - xi - ii) * self.s0(k)
                + self.t(k, ki - xi - ii + 1) * self.s1(k))
                * self.p_drop(x, y, i);
        }
        if k == sm {
            // arrival blocked in the full connection state: all s_m held channels go to sensing
            sum += self.t(k, 0) * self.s1(k) * self.p_drop(x, y, sm - x);
        }
        sum
    }

    fn drop_switch(&self, from: ChainState, to: ChainState) -> f64 {
        let (k, x, y) = (from.x, to.x, to.y);
        let sm = self.dims.max_connections;
        let pu = self.p_drop(0, y, 0);
        if x > k + 1 {
            return 0.0;
        }
        if x == k + 1 {
            return self.t(k, 0) * self.s1(k) * pu;
        }
        let (ki, xi) = (k as i64, x as i64);
        if !self.is_edge(x, y) {
            return (self.t(k, ki - xi) * self.s0(k) + self.t(k, ki - xi + 1) * self.s1(k)) * pu;
        }
        let i_max = (sm - x).min(y);
        let mut sum = 0.0;
        for i in 0..=i_max as i64 {
            sum += (self.t(k, ki - xi - i) * self.s0(k) + self.t(k, ki - xi - i + 1) * self.s1(k))
                * pu;
        }
        if k == sm {
            sum += self.t(k, 0) * self.s1(k) * pu;
        }
        sum
    }

    fn hold(&self, from: ChainState, to: ChainState) -> f64 {
        let md = self.dims.data_channels;
        let sm = self.dims.max_connections;
        let (k, m) = (from.x, from.z);
        let (x, y, z) = (to.x, to.y, to.z);
        let placement = if self.variant.switching {
            if (z != x && x + y < md) || (m != k && k + from.y < md) {
                return 0.0;
            }
            self.r_hold(0, y, 0)
        } else {
            self.r_hold(x, y, z)
        };
        if z > m + 1 {
            return 0.0;
        }
        if z == m + 1 {
            return self.t(k, 0) * self.s1(m) * placement;
        }
        let gap = m as i64 - z as i64;
        if m < sm || z < sm {
            (self.t(k, gap) * self.s0(m) + self.t(k, gap + 1) * self.s1(m)) * placement
        } else {
            (self.t(k, 0) * self.s0(m) + self.t(k, 1) * self.s1(m) + self.t(k, 0) * self.s1(m))
                * placement
        }
    }

    /// Row-major transition matrix over `states`, with every row sum checked.
    pub fn matrix(&self, states: &[ChainState]) -> Result<Vec<f64>> {
        let n = states.len();
        let mut out = vec![0.0; n * n];
        for (i, &from) in states.iter().enumerate() {
            let row = &mut out[i * n..(i + 1) * n];
            for (cell, &to) in row.iter_mut().zip(states) {
                *cell = self.prob(from, to);
            }
            let sum: f64 = row.iter().sum();
            let defect = libm::fabs(sum - 1.0);
            if !(defect <= ROW_TOLERANCE) {
                return Err(Error::RowSum {
                    state: alloc::format!("{from}"),
                    sum,
                    defect,
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{enumerate_states, variant_states};

    fn traffic(p_c: f64) -> TrafficParams {
        TrafficParams {
            p: (-1.0f64).exp() / 12.0,
            q: 0.05,
            d: 40_000.0,
            q_p: 0.1,
            p_c,
            p_e: 0.0,
        }
    }

    #[test]
    fn termination_values() {
        assert_eq!(termination_prob(0, 0, 0.3), 1.0);
        let q: f64 = 0.3;
        assert!((termination_prob(3, 2, q) - 3.0 * q * q * (1.0 - q)).abs() < 1e-15);
        assert_eq!(termination_prob(1, 2, q), 0.0);
        assert_eq!(termination_prob(2, -1, q), 0.0);
        assert!((termination_prob(4, 0, q) - (1.0 - q).powi(4)).abs() < 1e-15);
    }

    #[test]
    fn setup_values() {
        let dims = ChainDims::new(3, 12, ControlChannel::DccPuFreeControl);
        let v = MacVariant::new(ControlChannel::DccPuFreeControl, false, false);
        let t = traffic(0.2);
        let p = t.p;
        let want = 12.0 * p * (1.0 - p).powi(11);
        assert!((connection_setup_prob(0, 1, &dims, &v, &t) - want).abs() < 1e-15);
        assert!((connection_setup_prob(0, 0, &dims, &v, &t) - (1.0 - want)).abs() < 1e-15);
        assert_eq!(connection_setup_prob(6, 1, &dims, &v, &t), 0.0);

        let h = MacVariant::new(ControlChannel::Hcc, false, false);
        let hd = ChainDims::new(3, 12, ControlChannel::Hcc);
        let s2 = 8.0 * p * (1.0 - p).powi(7);
        let want = s2 * 0.8 * (7.0 / 11.0) * (1.0 / 3.0);
        assert!((connection_setup_prob(2, 1, &hd, &h, &t) - want).abs() < 1e-15);

        let shared = MacVariant::new(ControlChannel::DccSharedControl, false, false);
        let s0 = 12.0 * p * (1.0 - p).powi(11);
        assert!((connection_setup_prob(0, 1, &dims, &shared, &t) - 0.8 * s0).abs() < 1e-15);
    }

    #[test]
    fn frozen_system_stays_empty() {
        let dims = ChainDims::new(3, 12, ControlChannel::DccPuFreeControl);
        let t = TrafficParams {
            p: 0.0,
            p_c: 0.0,
            ..traffic(0.0)
        };
        let zero = ChainState { x: 0, y: 0, z: 0 };
        for v in MacVariant::dcc_family() {
            let k = TransitionKernel::new(dims, v, t);
            assert_eq!(k.prob(zero, zero), 1.0);
        }
    }

    #[test]
    fn creation_branch_without_pu() {
        let dims = ChainDims::new(3, 12, ControlChannel::DccPuFreeControl);
        let v = MacVariant::new(ControlChannel::DccPuFreeControl, false, false);
        let t = traffic(0.15);
        let k = TransitionKernel::new(dims, v, t);
        let from = ChainState { x: 1, y: 0, z: 1 };
        let to = ChainState { x: 2, y: 0, z: 2 };
        let want = (1.0 - t.q) * connection_setup_prob(1, 1, &dims, &v, &t) * 0.85f64.powi(2);
        assert!((k.prob(from, to) - want).abs() < 1e-15);
    }

    #[test]
    fn rows_are_stochastic_for_all_variants() {
        for (m, n) in [(3, 12), (5, 7), (4, 3), (12, 40)] {
            for control in [
                ControlChannel::DccPuFreeControl,
                ControlChannel::DccSharedControl,
                ControlChannel::Hcc,
            ] {
                for (b, s) in [(false, false), (false, true), (true, false), (true, true)] {
                    let v = MacVariant::new(control, b, s);
                    if v.validate().is_err() {
                        continue;
                    }
                    let dims = ChainDims::new(m, n, control);
                    for p_c in [0.0, 0.109, 0.5, 1.0] {
                        let k = TransitionKernel::new(dims, v, traffic(p_c));
                        k.matrix(&variant_states(&dims, &v)).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn blocked_arrival_term_matches_literal_form_when_channels_bind() {
        // s_m = M_D: the blocked arrival places all held channels under sensing,
        // which is P_{0,y}^{(0)} restricted to edge states
        let dims = ChainDims::new(4, 12, ControlChannel::DccPuFreeControl);
        assert_eq!(dims.max_connections, dims.data_channels);
        let v = MacVariant::new(ControlChannel::DccPuFreeControl, false, false);
        let kern = TransitionKernel::new(dims, v, traffic(0.3));
        let sm = dims.max_connections;
        for s in enumerate_states(dims.data_channels, sm, false) {
            let general = kern.p_drop(s.x, s.y, sm - s.x);
            let literal = if kern.is_edge(s.x, s.y) {
                kern.p_drop(0, s.y, 0)
            } else {
                0.0
            };
            assert!((general - literal).abs() < 1e-15, "{s}");
        }
    }
}
