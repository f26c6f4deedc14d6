//! Cooperative sensing: user/channel grouping, report overhead, hard-decision
//! fusion and the resulting cross-layer timing.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{config, domain, Result};
use crate::math::{choose, powi};
use crate::phy::{NodeDetectionProbs, PhyParams};
use libm::ceil;

/// One sub-group: `channels` sensed cooperatively by `users` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Group {
    pub channels: usize,
    pub users: usize,
}

/// Balanced partition of users and channels into sensing groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLayout {
    pub groups: Vec<Group>,
}

impl GroupLayout {
    pub fn count(&self) -> usize {
        self.groups.len()
    }

    pub fn max_channels(&self) -> usize {
        self.groups.iter().map(|g| g.channels).max().unwrap_or(0)
    }

    pub fn min_users(&self) -> usize {
        self.groups.iter().map(|g| g.users).min().unwrap_or(0)
    }

    pub fn total_channels(&self) -> usize {
        self.groups.iter().map(|g| g.channels).sum()
    }

    pub fn total_users(&self) -> usize {
        self.groups.iter().map(|g| g.users).sum()
    }
}

/// Splits `channels` and `users` into `n_groups` balanced groups.
///
/// The first `M mod n_g` groups receive the extra channel and the first
/// `N mod n_g` groups the extra user, so larger groups come first.
pub fn group_layout(channels: usize, users: usize, n_groups: usize) -> Result<GroupLayout> {
    if n_groups == 0 || n_groups > channels.min(users) {
        return Err(domain!(
            "group count {n_groups} outside [1, min(M={channels}, N={users})]"
        ));
    }
    let (ch_base, ch_extra) = (channels / n_groups, channels % n_groups);
    let (us_base, us_extra) = (users / n_groups, users % n_groups);
    let groups = (0..n_groups)
        .map(|i| Group {
            channels: ch_base + usize::from(i < ch_extra),
            users: us_base + usize::from(i < us_extra),
        })
        .collect();
    Ok(GroupLayout { groups })
}

/// Number of sequential sensing cycles `⌈max m_s / (αM)⌉`.
pub fn sensing_cycles(layout: &GroupLayout, alpha: f64, channels: usize) -> Result<u32> {
    let width = alpha * channels as f64;
    if !(width >= 1.0 - 1e-9) {
        return Err(domain!("sensing radio covers {width} < 1 channel"));
    }
    let cycles = ceil(layout.max_channels() as f64 / width - 1e-9);
    Ok((cycles as u32).max(1))
}

/// Multiple access scheme used to disseminate one-bit sensing reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReportingScheme {
    /// One dedicated bit slot per user and channel.
    Tdma,
    /// TDMA that stops as soon as the fused decision is fixed.
    Ttdma,
    /// Truncated TDMA with a per-bit acknowledgment from a cluster head.
    KappaTtdma,
    /// All reporters share one bit slot per channel (power summation).
    Ssma,
}

impl ReportingScheme {
    pub const ALL: [ReportingScheme; 4] = [Self::Tdma, Self::Ttdma, Self::KappaTtdma, Self::Ssma];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tdma => "tdma",
            Self::Ttdma => "ttdma",
            Self::KappaTtdma => "kttdma",
            Self::Ssma => "ssma",
        }
    }
}

impl fmt::Display for ReportingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for ReportingScheme {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tdma" => Ok(Self::Tdma),
            "ttdma" => Ok(Self::Ttdma),
            "kttdma" | "kappattdma" | "kappa-ttdma" => Ok(Self::KappaTtdma),
            "ssma" => Ok(Self::Ssma),
            other => Err(config!("unknown reporting scheme '{other}'")),
        }
    }
}

/// Fusion rule and reporting channel conditions shared by all groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Number of "busy" votes needed to declare the primary user present.
    pub kappa: usize,
    /// Bit error probability on the reporting channel.
    pub p_e: f64,
    /// Probability that the primary user is active on a channel.
    pub q_p: f64,
}

impl FusionConfig {
    pub fn validate_for(&self, layout: &GroupLayout) -> Result<()> {
        if self.kappa == 0 {
            return Err(config!("kappa must be >= 1"));
        }
        let min_users = layout.min_users();
        if self.kappa > min_users {
            return Err(config!(
                "kappa exceeds group size (kappa = {}, smallest group has {} users)",
                self.kappa,
                min_users
            ));
        }
        if !(0.0..1.0).contains(&self.p_e) {
            return Err(config!("p_e = {} outside [0, 1)", self.p_e));
        }
        if !(0.0..=1.0).contains(&self.q_p) {
            return Err(config!("q_p = {} outside [0, 1]", self.q_p));
        }
        Ok(())
    }
}

/// Probability that a transmitted bit with one-probability `p` is received as one.
pub fn with_bit_errors(p: f64, p_e: f64) -> f64 {
    (1.0 - p_e) * p + p_e * (1.0 - p)
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain!("{name} = {p} outside [0, 1]"));
    }
    Ok(())
}

/// Expected position at which a truncated report sequence stops.
///
/// Bits are received in order; reporting ends at the `kappa`-th one or the
/// `n - kappa + 1`-th zero. `one_absent`/`one_present` are the received
/// one-probabilities under each primary-user state.
fn truncated_stop_position(
    users: usize,
    kappa: usize,
    q_p: f64,
    one_absent: f64,
    one_present: f64,
) -> f64 {
    let n = users as i64;
    let (k, zero_absent, one_absent, zero_present, one_present) = if 2 * kappa < users {
        (
            kappa as i64,
            1.0 - one_absent,
            one_absent,
            1.0 - one_present,
            one_present,
        )
    } else {
        // count zeros instead: κ → n-κ+1 with the one/zero roles swapped
        (
            n - kappa as i64 + 1,
            one_absent,
            1.0 - one_absent,
            one_present,
            1.0 - one_present,
        )
    };
    let nu = n - k + 1;
    let mut ones_first = 0.0;
    for delta in k..=n {
        let ways = choose(delta - 1, k - 1);
        let d = delta as f64;
        ones_first += ways
            * ((1.0 - q_p) * d * powi(zero_absent, delta - k) * powi(one_absent, k)
                + q_p * d * powi(zero_present, delta - k) * powi(one_present, k));
    }
    let mut zeros_first = 0.0;
    for delta in nu..=n {
        let ways = choose(delta - 1, delta - nu);
        let d = delta as f64;
        zeros_first += ways
            * ((1.0 - q_p) * d * powi(zero_absent, nu) * powi(one_absent, delta - nu)
                + q_p * d * powi(zero_present, nu) * powi(one_present, delta - nu));
    }
    ones_first + zeros_first
}

/// Expected number of report bits a group sends per sensing round.
///
/// Truncation acts on the bits as received, so the per-node probabilities
/// are passed through the reporting channel error model first.
pub fn expected_report_bits(
    scheme: ReportingScheme,
    group: Group,
    fusion: &FusionConfig,
    probs: NodeDetectionProbs,
) -> Result<f64> {
    if fusion.kappa == 0 || fusion.kappa > group.users {
        return Err(domain!(
            "kappa = {} outside [1, {}]",
            fusion.kappa,
            group.users
        ));
    }
    check_prob("p10", probs.p10)?;
    check_prob("p11", probs.p11)?;
    check_prob("p_e", fusion.p_e)?;
    check_prob("q_p", fusion.q_p)?;
    let m_s = group.channels as f64;
    let truncated = || {
        truncated_stop_position(
            group.users,
            fusion.kappa,
            fusion.q_p,
            with_bit_errors(probs.p10, fusion.p_e),
            with_bit_errors(probs.p11, fusion.p_e),
        )
    };
    Ok(match scheme {
        ReportingScheme::Tdma => m_s * group.users as f64,
        ReportingScheme::Ssma => m_s,
        ReportingScheme::Ttdma => m_s * truncated(),
        ReportingScheme::KappaTtdma => 2.0 * m_s * truncated(),
    })
}

/// Probability that a group's fused decision is "primary user present".
///
/// Feed `p10` to obtain the group false alarm probability and `p11` for the
/// detection probability. TDMA and SSMA use the binomial tail; TTDMA the
/// equivalent negative-binomial form over the number of zeros seen before
/// the `kappa`-th one.
pub fn group_fusion_prob(
    scheme: ReportingScheme,
    users: usize,
    kappa: usize,
    p_hit: f64,
    p_e: f64,
) -> Result<f64> {
    if kappa == 0 || kappa > users {
        return Err(domain!("kappa = {kappa} outside [1, {users}]"));
    }
    check_prob("p_hit", p_hit)?;
    check_prob("p_e", p_e)?;
    let one = with_bit_errors(p_hit, p_e);
    let zero = 1.0 - one;
    let n = users as i64;
    let k = kappa as i64;
    let p = match scheme {
        ReportingScheme::Tdma | ReportingScheme::Ssma => (k..=n)
            .map(|d| choose(n, d) * powi(one, d) * powi(zero, n - d))
            .sum::<f64>(),
        ReportingScheme::Ttdma | ReportingScheme::KappaTtdma => (0..=n - k)
            .map(|beta| choose(k + beta - 1, beta) * powi(one, k) * powi(zero, beta))
            .sum::<f64>(),
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Network-wide sensing outcome and timing for one sensing configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionSummary {
    pub p_f: f64,
    pub p_d: f64,
    /// Sequential sensing cycles.
    pub sensing_cycles: u32,
    /// Expected report bits summed over groups.
    pub report_bits: f64,
    /// Sensing time, microseconds.
    pub t_s: f64,
    /// Reporting time, microseconds.
    pub t_r: f64,
    /// Quiet time, microseconds.
    pub t_q: f64,
    /// Detection delay, microseconds.
    pub t_d: f64,
    /// Time to send one report bit, microseconds.
    pub t_a: f64,
}

impl DetectionSummary {
    /// Summary for an externally fixed operating point with a given quiet time.
    pub fn fixed(p_d: f64, p_f: f64, t_q: f64) -> Self {
        Self {
            p_f,
            p_d,
            sensing_cycles: 0,
            report_bits: 0.0,
            t_s: t_q,
            t_r: 0.0,
            t_q,
            t_d: t_q,
            t_a: 0.0,
        }
    }
}

/// Per-group fusion probabilities `(p_f,i, p_d,i)`.
pub fn group_decisions(
    layout: &GroupLayout,
    scheme: ReportingScheme,
    fusion: &FusionConfig,
    probs: NodeDetectionProbs,
) -> Result<Vec<(f64, f64)>> {
    layout
        .groups
        .iter()
        .map(|g| {
            Ok((
                group_fusion_prob(scheme, g.users, fusion.kappa, probs.p10, fusion.p_e)?,
                group_fusion_prob(scheme, g.users, fusion.kappa, probs.p11, fusion.p_e)?,
            ))
        })
        .collect()
}

/// Network detection probability as a function of the per-node operating point.
pub fn network_detection(
    layout: &GroupLayout,
    scheme: ReportingScheme,
    fusion: &FusionConfig,
    probs: NodeDetectionProbs,
) -> Result<(f64, f64)> {
    let per_group = group_decisions(layout, scheme, fusion, probs)?;
    let n = per_group.len() as f64;
    let p_f = per_group.iter().map(|g| g.0).sum::<f64>() / n;
    let p_d = per_group.iter().map(|g| g.1).sum::<f64>() / n;
    Ok((p_f, p_d))
}

/// Combines the node operating point, fusion rule and reporting scheme into
/// network `p_f`/`p_d` and the time-division quiet period.
pub fn network_detection_summary(
    layout: &GroupLayout,
    scheme: ReportingScheme,
    fusion: &FusionConfig,
    phy: &PhyParams,
    rate_mbps: f64,
) -> Result<DetectionSummary> {
    fusion.validate_for(layout)?;
    if layout.total_channels() != phy.channels {
        return Err(config!(
            "layout covers {} channels, radio expects {}",
            layout.total_channels(),
            phy.channels
        ));
    }
    if !(rate_mbps > 0.0) {
        return Err(config!("channel rate must be positive"));
    }
    let probs = phy.node_probs()?;
    let (p_f, p_d) = network_detection(layout, scheme, fusion, probs)?;
    let report_bits = layout
        .groups
        .iter()
        .map(|g| expected_report_bits(scheme, *g, fusion, probs))
        .sum::<Result<f64>>()?;
    let sensing_cycles = sensing_cycles(layout, phy.alpha, phy.channels)?;
    let t_a = 1.0 / rate_mbps;
    let t_s = sensing_cycles as f64 * phy.sensing_time_us;
    let t_r = report_bits * t_a;
    Ok(DetectionSummary {
        p_f,
        p_d,
        sensing_cycles,
        report_bits,
        t_s,
        t_r,
        t_q: t_s + t_r,
        t_d: t_s + t_r,
        t_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fusion(kappa: usize, q_p: f64) -> FusionConfig {
        FusionConfig {
            kappa,
            p_e: 0.0,
            q_p,
        }
    }

    #[test]
    fn layouts() {
        let one = group_layout(3, 12, 1).unwrap();
        assert_eq!(
            one.groups,
            [Group {
                channels: 3,
                users: 12
            }]
        );

        let six = group_layout(12, 40, 6).unwrap();
        assert!(six.groups.iter().all(|g| g.channels == 2));
        let users: Vec<_> = six.groups.iter().map(|g| g.users).collect();
        assert_eq!(users, [7, 7, 7, 7, 6, 6]);

        let four = group_layout(12, 40, 4).unwrap();
        assert!(four.groups.iter().all(|g| *g
            == Group {
                channels: 3,
                users: 10
            }));

        assert!(group_layout(3, 12, 0).is_err());
        assert!(group_layout(3, 12, 4).is_err());
    }

    #[test]
    fn cycles() {
        let l = group_layout(3, 12, 1).unwrap();
        assert_eq!(sensing_cycles(&l, 1.0 / 3.0, 3).unwrap(), 3);
        assert_eq!(sensing_cycles(&l, 1.0, 3).unwrap(), 1);
        let l = group_layout(12, 40, 6).unwrap();
        assert_eq!(sensing_cycles(&l, 1.0 / 12.0, 12).unwrap(), 2);
        assert_eq!(sensing_cycles(&l, 1.0, 12).unwrap(), 1);
    }

    #[test]
    fn report_bits_closed_forms() {
        let probs = NodeDetectionProbs { p10: 0.2, p11: 0.7 };
        let g = Group {
            channels: 2,
            users: 4,
        };
        let f = fusion(2, 0.3);
        assert_eq!(
            expected_report_bits(ReportingScheme::Tdma, g, &f, probs).unwrap(),
            8.0
        );
        assert_eq!(
            expected_report_bits(ReportingScheme::Ssma, g, &f, probs).unwrap(),
            2.0
        );
        let single = Group {
            channels: 5,
            users: 1,
        };
        let bits =
            expected_report_bits(ReportingScheme::Ttdma, single, &fusion(1, 0.4), probs).unwrap();
        assert!((bits - 5.0).abs() < 1e-12);
        assert!(expected_report_bits(ReportingScheme::Ttdma, g, &fusion(5, 0.1), probs).is_err());
    }

    #[test]
    fn ttdma_small_group_reference() {
        // exhaustive enumeration of the 2^3 report sequences per PU state
        let probs = NodeDetectionProbs { p10: 0.1, p11: 0.9 };
        let g = Group {
            channels: 1,
            users: 3,
        };
        let bits = expected_report_bits(ReportingScheme::Ttdma, g, &fusion(1, 0.1), probs).unwrap();
        assert!((bits - 2.55).abs() < 1e-12);
        let kappa_bits =
            expected_report_bits(ReportingScheme::KappaTtdma, g, &fusion(1, 0.1), probs).unwrap();
        assert!((kappa_bits - 5.1).abs() < 1e-12);
    }

    #[test]
    fn fusion_and_or_rules() {
        let p: f64 = 0.37;
        let and = group_fusion_prob(ReportingScheme::Tdma, 5, 5, p, 0.0).unwrap();
        assert!((and - p.powi(5)).abs() < 1e-15);
        let or = group_fusion_prob(ReportingScheme::Tdma, 5, 1, p, 0.0).unwrap();
        assert!((or - (1.0 - (1.0 - p).powi(5))).abs() < 1e-15);
        let tdma = group_fusion_prob(ReportingScheme::Tdma, 6, 3, 0.2, 0.01).unwrap();
        let ttdma = group_fusion_prob(ReportingScheme::Ttdma, 6, 3, 0.2, 0.01).unwrap();
        assert!((tdma - ttdma).abs() < 1e-15);
        assert!(group_fusion_prob(ReportingScheme::Tdma, 3, 4, 0.2, 0.0).is_err());
    }

    #[test]
    fn kappa_validation_message() {
        let l = group_layout(12, 16, 4).unwrap();
        let err = fusion(5, 0.1).validate_for(&l).unwrap_err();
        assert!(alloc::format!("{err}").contains("kappa exceeds group size"));
    }

    #[test]
    fn summary_timing_for_tdma_single_group() {
        let l = group_layout(3, 12, 1).unwrap();
        let theta = crate::phy::threshold_for_false_alarm(0.1, 10).unwrap();
        let phy = PhyParams::new(10.0, 1.0 / 3.0, 3, 1.0, -5.0, theta).unwrap();
        let s = network_detection_summary(&l, ReportingScheme::Tdma, &fusion(1, 0.1), &phy, 1.0)
            .unwrap();
        assert_eq!(s.report_bits, 36.0);
        assert!((s.t_r - 36.0).abs() < 1e-12);
        assert!((s.t_s - 30.0).abs() < 1e-12);
        assert!((s.t_q - 66.0).abs() < 1e-12);
        assert_eq!(s.t_q, s.t_d);
        // single group: network p_f is the group value, an "or" over 12 nodes
        let want_pf = 1.0 - 0.9f64.powi(12);
        assert!((s.p_f - want_pf).abs() < 1e-9);
        let p11 = phy.node_probs().unwrap().p11;
        assert!((s.p_d - (1.0 - (1.0 - p11).powi(12))).abs() < 1e-12);
    }

    #[test]
    fn identical_groups_average_to_group_value() {
        let l = group_layout(12, 40, 4).unwrap();
        let probs = NodeDetectionProbs {
            p10: 0.05,
            p11: 0.4,
        };
        let f = FusionConfig {
            kappa: 3,
            p_e: 0.01,
            q_p: 0.1,
        };
        let (pf, pd) = network_detection(&l, ReportingScheme::Tdma, &f, probs).unwrap();
        let g = group_fusion_prob(ReportingScheme::Tdma, 10, 3, 0.05, 0.01).unwrap();
        let gd = group_fusion_prob(ReportingScheme::Tdma, 10, 3, 0.4, 0.01).unwrap();
        assert!((pf - g).abs() < 1e-15);
        assert!((pd - gd).abs() < 1e-15);
    }
}
