//! Slot-level simulation of the secondary network's MAC.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, log};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scheduler::switch_scheduler;
use super::stats::{batch_means, SimEstimate};
use super::traffic::{PuProcess, PuTraffic};
use crate::chain::{
    completion_prob, overhead_ratio, useful_time, ChainDims, ControlChannel, ErrorModel, MacVariant,
};
use crate::error::{config, Result};
use crate::scene::{ModelKind, RadioScene};
use crate::sensing::DetectionSummary;

/// What a buffered connection carries when it resumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResumePolicy {
    /// Keep the remaining length it had when preempted.
    Resume,
    /// Draw a fresh geometric remaining length.
    Regenerate,
}

/// Inputs of one MAC simulation run.
#[derive(Debug, Clone)]
pub struct MacSimConfig {
    pub scene: RadioScene,
    pub variant: MacVariant,
    /// Network sensing outcome and quiet time.
    pub detection: DetectionSummary,
    pub traffic: PuTraffic,
    pub batches: usize,
    pub events_per_batch: usize,
    pub warmup: usize,
    pub seed: u64,
    pub resume: ResumePolicy,
}

impl MacSimConfig {
    /// 100 batches of 1000 slots after a 100-slot warm-up, geometric PU traffic.
    pub fn new(
        scene: RadioScene,
        variant: MacVariant,
        detection: DetectionSummary,
        seed: u64,
    ) -> Self {
        Self {
            scene,
            variant,
            detection,
            traffic: PuTraffic::GEOMETRIC,
            batches: 100,
            events_per_batch: 1000,
            warmup: 100,
            seed,
            resume: ResumePolicy::Resume,
        }
    }
}

/// Output of [`run_mac_sim`].
#[derive(Debug, Clone)]
pub struct MacSimReport {
    /// Throughput including overhead, Mbps.
    pub throughput: SimEstimate,
    /// Fraction of measured slots with at least one waiting connection.
    pub buffered_fraction: f64,
    /// Mean number of transmitting connections per measured slot.
    pub mean_utilized: f64,
    /// `setup_slots[m]`: measured slots that started with `m` connections.
    pub setup_slots: Vec<u64>,
    /// `setup_successes[m]`: of those, slots where a connection was set up.
    pub setup_successes: Vec<u64>,
    /// Slots whose `(x, y, z)` violated the state-space constraints.
    pub violations: u64,
}

impl MacSimReport {
    pub fn setup_rate(&self, m: usize) -> Option<f64> {
        let slots = *self.setup_slots.get(m)?;
        (slots > 0).then(|| self.setup_successes[m] as f64 / slots as f64)
    }
}

#[derive(Debug, Clone)]
struct Connection {
    tx: usize,
    rx: usize,
    channel: usize,
    transmitting: bool,
    remaining: u64,
    done: bool,
}

fn geometric_length<R: Rng + ?Sized>(q: f64, rng: &mut R) -> u64 {
    if q >= 1.0 {
        return 1;
    }
    let u: f64 = rng.random();
    (ceil(log(1.0 - u) / log(1.0 - q)) as u64).max(1)
}

struct World<'a> {
    cfg: &'a MacSimConfig,
    dims: ChainDims,
    rng: ChaCha8Rng,
    pu: PuProcess,
    control_pu: Option<PuProcess>,
    conns: Vec<Connection>,
    node_busy: Vec<bool>,
    priority: Vec<f64>,
    q: f64,
    xi: f64,
    p_c: f64,
}

/// Per-slot outcome.
struct SlotOutcome {
    delivered: usize,
    x: usize,
    y: usize,
    z: usize,
    m_before: usize,
    setup: bool,
}

impl World<'_> {
    fn detect(&mut self, busy: bool) -> bool {
        let p = if busy {
            self.cfg.detection.p_d
        } else {
            self.cfg.detection.p_f
        };
        self.rng.random_bool(p.clamp(0.0, 1.0))
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> Option<T> {
        match items.len() {
            0 => None,
            n => Some(items[self.rng.random_range(0..n)]),
        }
    }

    fn control_error(&mut self) -> bool {
        let p_e = self.cfg.scene.p_e;
        match self.cfg.variant.error_model {
            ErrorModel::E0 => false,
            ErrorModel::E1 => self.rng.random_bool(p_e),
            ErrorModel::E2 => self.rng.random_bool(p_e) || self.rng.random_bool(p_e),
        }
    }

    /// Attempts one connection setup; returns the new connection on success.
    fn contend(&mut self) -> Option<Connection> {
        let cfg = self.cfg;
        let n = cfg.scene.users;
        let held_before: Vec<usize> = self.conns.iter().map(|c| c.channel).collect();
        let free_before: Vec<usize> = (0..n).filter(|&i| !self.node_busy[i]).collect();

        // the control channel must be usable
        let hop = match cfg.variant.control {
            ControlChannel::DccPuFreeControl => None,
            ControlChannel::DccSharedControl => {
                let busy = self
                    .control_pu
                    .as_mut()
                    .map_or(false, |pu| pu.step(&mut self.rng)[0]);
                if self.detect(busy) {
                    return None;
                }
                None
            }
            ControlChannel::Hcc => {
                let h = self.rng.random_range(0..self.dims.channels);
                let seen_busy = self.rng.random_bool(self.p_c);
                if held_before.contains(&h) || seen_busy {
                    return None;
                }
                Some(h)
            }
        };

        let mut winner = None;
        let mut senders = 0;
        for &node in &free_before {
            if self.rng.random_bool(cfg.scene.access_prob) {
                senders += 1;
                winner = Some(node);
            }
        }
        let tx = match (senders, winner) {
            (1, Some(tx)) => tx,
            _ => return None,
        };
        if self.control_error() {
            return None;
        }

        // finished connections release their nodes and channels before the handshake completes
        self.release_done();
        let (rx, channel) = match hop {
            Some(h) => {
                let rx = self.rng.random_range(0..n - 1);
                let rx = if rx >= tx { rx + 1 } else { rx };
                if !free_before.contains(&rx) {
                    return None;
                }
                (rx, h)
            }
            None => {
                let receivers: Vec<usize> =
                    (0..n).filter(|&i| i != tx && !self.node_busy[i]).collect();
                let rx = self.pick(&receivers)?;
                let unheld: Vec<usize> = (0..self.dims.data_channels)
                    .filter(|c| self.conns.iter().all(|k| k.channel != *c))
                    .collect();
                (rx, self.pick(&unheld)?)
            }
        };
        Some(Connection {
            tx,
            rx,
            channel,
            transmitting: false,
            remaining: geometric_length(self.q, &mut self.rng),
            done: false,
        })
    }

    fn release_done(&mut self) {
        let node_busy = &mut self.node_busy;
        self.conns.retain(|c| {
            if c.done {
                node_busy[c.tx] = false;
                node_busy[c.rx] = false;
            }
            !c.done
        });
    }

    fn drop_connection(&mut self, idx: usize) {
        let c = self.conns.remove(idx);
        self.node_busy[c.tx] = false;
        self.node_busy[c.rx] = false;
    }

    fn slot(&mut self) -> SlotOutcome {
        let m_before = self.conns.len();
        let new_conn = self.contend();
        self.release_done();
        let setup = new_conn.is_some();
        if let Some(c) = new_conn {
            self.node_busy[c.tx] = true;
            self.node_busy[c.rx] = true;
            self.conns.push(c);
        }

        // sensing
        let md = self.dims.data_channels;
        let truth: Vec<bool> = self.pu.step(&mut self.rng).to_vec();
        let detected: Vec<bool> = truth.iter().map(|&b| self.detect(b)).collect();
        let y = detected.iter().filter(|b| **b).count();

        let was_transmitting: Vec<bool> = self.conns.iter().map(|c| c.transmitting).collect();
        let hit: Vec<usize> = (0..self.conns.len())
            .filter(|&i| detected[self.conns[i].channel])
            .collect();
        let variant = self.cfg.variant;
        if variant.switching && !hit.is_empty() {
            for &i in &hit {
                if was_transmitting[i] {
                    let tx = self.conns[i].tx;
                    self.priority[tx] += 1.0;
                }
            }
            let occupied: Vec<usize> = (0..self.conns.len())
                .filter(|i| !hit.contains(i))
                .map(|i| self.conns[i].channel)
                .collect();
            let free: Vec<usize> = (0..md)
                .filter(|&c| !detected[c] && !occupied.contains(&c))
                .collect();
            let candidates: Vec<(usize, f64)> = hit
                .iter()
                .map(|&i| (i, self.priority[self.conns[i].tx]))
                .collect();
            let mapping = switch_scheduler(&candidates, &free);
            for &(i, ch) in &mapping {
                self.conns[i].channel = ch;
            }
            if !variant.buffering {
                let mut blocked: Vec<usize> = hit
                    .iter()
                    .copied()
                    .filter(|i| mapping.iter().all(|(j, _)| j != i))
                    .collect();
                blocked.sort_unstable_by(|a, b| b.cmp(a));
                for i in blocked {
                    self.drop_connection(i);
                }
            }
        } else if !variant.buffering {
            for &i in hit.iter().rev() {
                self.drop_connection(i);
            }
        }

        let mut x = 0;
        let mut delivered = 0;
        let q = self.q;
        for idx in 0..self.conns.len() {
            let transmitting = !detected[self.conns[idx].channel];
            self.conns[idx].transmitting = transmitting;
            if !transmitting {
                continue;
            }
            x += 1;
            let error = match variant.error_model {
                ErrorModel::E0 => false,
                _ => self.rng.random_bool(self.cfg.scene.p_e),
            };
            if !(error && variant.error_model == ErrorModel::E1) {
                delivered += 1;
            }
            let c = &mut self.conns[idx];
            c.remaining -= 1;
            if c.remaining == 0 || (error && variant.error_model == ErrorModel::E2) {
                c.done = true;
            }
        }
        if self.cfg.resume == ResumePolicy::Regenerate {
            for idx in 0..self.conns.len() {
                if !self.conns[idx].transmitting
                    && was_transmitting.get(idx).copied().unwrap_or(false)
                {
                    self.conns[idx].remaining = geometric_length(q, &mut self.rng);
                }
            }
        }
        SlotOutcome {
            delivered,
            x,
            y,
            z: self.conns.len(),
            m_before,
            setup,
        }
    }
}

/// Simulates the MAC slot by slot and reports throughput by batch means.
///
/// Each slot: connections that finished in the previous slot leave; idle
/// nodes contend on the control channel; every data channel is sensed and
/// connections on channels declared busy are dropped, switched, or paused
/// according to the variant; transmitting connections count toward
/// throughput.
pub fn run_mac_sim(cfg: &MacSimConfig) -> Result<MacSimReport> {
    cfg.variant.validate()?;
    cfg.scene.validate()?;
    if cfg.scene.model != ModelKind::Micro {
        return Err(config!(
            "the slot simulator models the microscopic case only"
        ));
    }
    if cfg.batches < 2 || cfg.events_per_batch == 0 {
        return Err(config!(
            "need at least two batches of at least one slot (got {} x {})",
            cfg.batches,
            cfg.events_per_batch
        ));
    }
    let det = &cfg.detection;
    for (name, v) in [("p_d", det.p_d), ("p_f", det.p_f)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(config!("{name} = {v} outside [0, 1]"));
        }
    }
    let scene = &cfg.scene;
    let xi = overhead_ratio(
        scene.model,
        &cfg.variant,
        scene.slot_us,
        det.t_q,
        scene.switch_us,
        scene.max_delay_us,
    )?;
    let t_u = useful_time(
        scene.model,
        &cfg.variant,
        scene.slot_us,
        det.t_q,
        scene.switch_us,
    );
    let q = completion_prob(scene, &cfg.variant, t_u);
    let dims = ChainDims::new(scene.channels, scene.users, cfg.variant.control);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pu = PuProcess::new(cfg.traffic, scene.q_p, dims.data_channels, &mut rng)?;
    let control_pu = match cfg.variant.control {
        ControlChannel::DccSharedControl => {
            Some(PuProcess::new(cfg.traffic, scene.q_p, 1, &mut rng)?)
        }
        _ => None,
    };
    let priority = (0..scene.users).map(|_| rng.random::<f64>()).collect();
    let mut world = World {
        cfg,
        dims,
        rng,
        pu,
        control_pu,
        conns: Vec::new(),
        node_busy: vec![false; scene.users],
        priority,
        q,
        xi,
        p_c: crate::chain::busy_prob(scene.q_p, det.p_d, det.p_f),
    };

    for _ in 0..cfg.warmup {
        world.slot();
    }
    let slot_value = scene.rate_mbps * world.xi;
    let mut means = Vec::with_capacity(cfg.batches);
    let mut buffered = 0u64;
    let mut utilized = 0u64;
    let mut violations = 0u64;
    let mut setup_slots = vec![0u64; dims.max_connections + 1];
    let mut setup_successes = vec![0u64; dims.max_connections + 1];
    for _ in 0..cfg.batches {
        let mut acc = 0.0;
        for _ in 0..cfg.events_per_batch {
            let o = world.slot();
            acc += slot_value * o.delivered as f64;
            utilized += o.x as u64;
            if o.z > o.x {
                buffered += 1;
            }
            if o.x + o.y > dims.data_channels || o.z > dims.max_connections || o.z - o.x > o.y {
                violations += 1;
            }
            if o.m_before < setup_slots.len() {
                setup_slots[o.m_before] += 1;
                setup_successes[o.m_before] += u64::from(o.setup);
            }
        }
        means.push(acc / cfg.events_per_batch as f64);
    }
    let measured = (cfg.batches * cfg.events_per_batch) as f64;
    Ok(MacSimReport {
        throughput: batch_means(means, cfg.events_per_batch, cfg.warmup)?,
        buffered_fraction: buffered as f64 / measured,
        mean_utilized: utilized as f64 / measured,
        setup_slots,
        setup_successes,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::analyze;

    fn short(variant: MacVariant, scene: RadioScene, seed: u64) -> MacSimConfig {
        let det = DetectionSummary::fixed(0.9, 0.05, 100.0);
        MacSimConfig {
            batches: 20,
            events_per_batch: 500,
            ..MacSimConfig::new(scene, variant, det, seed)
        }
    }

    #[test]
    fn silent_network_carries_nothing() {
        let scene = RadioScene {
            access_prob: 0.0,
            ..RadioScene::small()
        };
        for v in MacVariant::dcc_family() {
            let rep = run_mac_sim(&short(v, scene.clone(), 1)).unwrap();
            assert_eq!(rep.throughput.mean, 0.0);
            assert_eq!(rep.violations, 0);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let v = MacVariant::new(ControlChannel::Hcc, false, false);
        let a = run_mac_sim(&short(v, RadioScene::small(), 9)).unwrap();
        let b = run_mac_sim(&short(v, RadioScene::small(), 9)).unwrap();
        assert_eq!(a.throughput.batch_means, b.throughput.batch_means);
        let c = run_mac_sim(&short(v, RadioScene::small(), 10)).unwrap();
        assert_ne!(a.throughput.batch_means, c.throughput.batch_means);
    }

    #[test]
    fn states_stay_in_bounds() {
        let mut variants = MacVariant::dcc_family().to_vec();
        variants.push(MacVariant::new(ControlChannel::Hcc, false, false));
        variants.push(MacVariant::new(
            ControlChannel::DccSharedControl,
            true,
            true,
        ));
        for v in variants {
            let rep = run_mac_sim(&short(v, RadioScene::small(), 3)).unwrap();
            assert_eq!(rep.violations, 0, "{v}");
        }
    }

    #[test]
    fn rejects_macro_scenes() {
        let scene = RadioScene {
            model: ModelKind::Macro,
            ..RadioScene::small()
        };
        let v = MacVariant::new(ControlChannel::Hcc, false, false);
        assert!(run_mac_sim(&short(v, scene, 1)).is_err());
    }

    #[test]
    fn tracks_the_chain() {
        let scene = RadioScene::small();
        for v in MacVariant::dcc_family() {
            let cfg = MacSimConfig {
                batches: 40,
                events_per_batch: 2000,
                ..short(v, scene.clone(), 5)
            };
            let sim = run_mac_sim(&cfg).unwrap();
            let ana = analyze(&scene, &v, &cfg.detection).unwrap();
            let rel = (sim.throughput.mean - ana.r_t).abs() / ana.r_t;
            assert!(
                rel < 0.05,
                "{v}: sim {} vs chain {}",
                sim.throughput.mean,
                ana.r_t
            );
        }
    }
}
