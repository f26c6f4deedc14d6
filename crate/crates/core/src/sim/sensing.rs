//! Monte Carlo of per-node sensing, report transmission and fusion.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stats::{batch_means, SimEstimate};
use crate::error::{config, Result};
use crate::phy::NodeDetectionProbs;
use crate::sensing::{FusionConfig, GroupLayout, ReportingScheme};

/// Batch layout of a sensing simulation; the defaults are 10 batches of 100 rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensingSimConfig {
    pub batches: usize,
    pub events_per_batch: usize,
    pub seed: u64,
}

impl SensingSimConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            batches: 10,
            events_per_batch: 100,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SensingSimReport {
    /// Network false alarm probability (mean of per-group rates).
    pub p_f: SimEstimate,
    /// Network detection probability (mean of per-group rates).
    pub p_d: SimEstimate,
    /// Report bits per sensing round, summed over groups.
    pub report_bits: SimEstimate,
    /// Fused decision of every channel in every round, in draw order.
    pub decisions: Vec<bool>,
}

/// Position at which a truncated report sequence stops.
fn truncated_length(bits: &[bool], kappa: usize) -> usize {
    let n = bits.len();
    let (mut ones, mut zeros) = (0, 0);
    for (i, &b) in bits.iter().enumerate() {
        if b {
            ones += 1;
        } else {
            zeros += 1;
        }
        if ones == kappa || zeros == n - kappa + 1 {
            return i + 1;
        }
    }
    n
}

/// Simulates sensing rounds. Every node's report is drawn even when the
/// scheme would truncate, so all schemes see the same random stream and
/// reach the same decisions; only the counted report bits differ.
pub fn run_sensing_sim(
    layout: &GroupLayout,
    scheme: ReportingScheme,
    fusion: &FusionConfig,
    probs: NodeDetectionProbs,
    cfg: &SensingSimConfig,
) -> Result<SensingSimReport> {
    fusion.validate_for(layout)?;
    if cfg.batches < 2 || cfg.events_per_batch == 0 {
        return Err(config!("need at least two batches of at least one round"));
    }
    for (name, p) in [("p10", probs.p10), ("p11", probs.p11)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(config!("{name} = {p} outside [0, 1]"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let groups = layout.count();
    let mut pf_batches = Vec::with_capacity(cfg.batches);
    let mut pd_batches = Vec::with_capacity(cfg.batches);
    let mut bit_batches = Vec::with_capacity(cfg.batches);
    let mut decisions = Vec::new();
    let mut bits = Vec::new();
    for _ in 0..cfg.batches {
        // (alarms, idle observations, detections, busy observations) per group
        let mut tally = alloc::vec![[0u64; 4]; groups];
        let mut sent = 0.0;
        for _ in 0..cfg.events_per_batch {
            for (g, group) in layout.groups.iter().enumerate() {
                for _ in 0..group.channels {
                    let present = rng.random_bool(fusion.q_p);
                    let p_hit = if present { probs.p11 } else { probs.p10 };
                    bits.clear();
                    for _ in 0..group.users {
                        let local = rng.random_bool(p_hit);
                        let flipped = fusion.p_e > 0.0 && rng.random_bool(fusion.p_e);
                        bits.push(local != flipped);
                    }
                    let ones = bits.iter().filter(|b| **b).count();
                    let busy = ones >= fusion.kappa;
                    decisions.push(busy);
                    let t = &mut tally[g];
                    if present {
                        t[2] += u64::from(busy);
                        t[3] += 1;
                    } else {
                        t[0] += u64::from(busy);
                        t[1] += 1;
                    }
                    sent += match scheme {
                        ReportingScheme::Tdma => group.users as f64,
                        ReportingScheme::Ssma => 1.0,
                        ReportingScheme::Ttdma => truncated_length(&bits, fusion.kappa) as f64,
                        ReportingScheme::KappaTtdma => {
                            2.0 * truncated_length(&bits, fusion.kappa) as f64
                        }
                    };
                }
            }
        }
        let rate = |hits: usize, total: usize| -> f64 {
            let (h, n) = tally
                .iter()
                .filter(|t| t[total] > 0)
                .fold((0.0, 0usize), |(acc, k), t| {
                    (acc + t[hits] as f64 / t[total] as f64, k + 1)
                });
            if n == 0 {
                0.0
            } else {
                h / n as f64
            }
        };
        pf_batches.push(rate(0, 1));
        pd_batches.push(rate(2, 3));
        bit_batches.push(sent / cfg.events_per_batch as f64);
    }
    Ok(SensingSimReport {
        p_f: batch_means(pf_batches, cfg.events_per_batch, 0)?,
        p_d: batch_means(pd_batches, cfg.events_per_batch, 0)?,
        report_bits: batch_means(bit_batches, cfg.events_per_batch, 0)?,
        decisions,
    })
}
