//! Physical and network constants shared by every model.

use core::fmt;

use crate::error::{config, Result};

/// Whether sensing happens every slot against a per-slot PU process
/// (microscopic) or rarely against a quasi-static PU (macroscopic).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Micro,
    Macro,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Micro => "micro",
            Self::Macro => "macro",
        })
    }
}

impl core::str::FromStr for ModelKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "micro" | "microscopic" => Ok(Self::Micro),
            "macro" | "macroscopic" => Ok(Self::Macro),
            other => Err(config!("unknown model kind '{other}'")),
        }
    }
}

/// Network-wide constants. Times are microseconds, rates Mbps, sizes bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioScene {
    /// Licensed channels, including a dedicated control channel if any.
    pub channels: usize,
    /// Secondary users.
    pub users: usize,
    /// Per-channel data rate, Mbps.
    pub rate_mbps: f64,
    /// Per-channel bandwidth, MHz.
    pub bandwidth_mhz: f64,
    /// Mean packet size, bits.
    pub packet_bits: f64,
    /// Probability a PU is active on a channel in a slot.
    pub q_p: f64,
    pub snr_db: f64,
    /// Bit error probability on reporting and data links.
    pub p_e: f64,
    /// Control channel access probability.
    pub access_prob: f64,
    /// Slot length.
    pub slot_us: f64,
    /// Channel switching time.
    pub switch_us: f64,
    /// Maximum detection delay.
    pub max_delay_us: f64,
    pub model: ModelKind,
}

impl RadioScene {
    /// Three channels, twelve users, 5 kB packets.
    pub fn small() -> Self {
        Self::with_size(3, 12, 40_000.0)
    }

    /// Twelve channels, forty users, 20 kB packets.
    pub fn large() -> Self {
        Self::with_size(12, 40, 160_000.0)
    }

    fn with_size(channels: usize, users: usize, packet_bits: f64) -> Self {
        Self {
            channels,
            users,
            rate_mbps: 1.0,
            bandwidth_mhz: 1.0,
            packet_bits,
            q_p: 0.1,
            snr_db: -5.0,
            p_e: 0.0,
            access_prob: core::f64::consts::E.recip() / users as f64,
            slot_us: 1000.0,
            switch_us: 100.0,
            max_delay_us: 1000.0,
            model: ModelKind::Micro,
        }
    }

    /// Sets `N` and resets the access probability to `e⁻¹/N`.
    pub fn with_users(self, users: usize) -> Self {
        Self {
            users,
            access_prob: core::f64::consts::E.recip() / users as f64,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = alloc::vec::Vec::new();
        self.collect_violations(&mut problems);
        match problems.is_empty() {
            true => Ok(()),
            false => Err(crate::error::Error::Config(problems.join("; "))),
        }
    }

    /// Appends a message for every violated range constraint.
    pub fn collect_violations(&self, out: &mut alloc::vec::Vec<alloc::string::String>) {
        use alloc::format;
        if self.channels == 0 {
            out.push(format!("M must be >= 1"));
        }
        if self.users < 2 {
            out.push(format!("N must be >= 2, got {}", self.users));
        }
        let positive = [
            ("C", self.rate_mbps),
            ("b", self.bandwidth_mhz),
            ("d", self.packet_bits),
            ("t_t", self.slot_us),
            ("t_d_max", self.max_delay_us),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                out.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.switch_us >= 0.0) {
            out.push(format!("t_p must be >= 0, got {}", self.switch_us));
        }
        if !(0.0..=1.0).contains(&self.q_p) {
            out.push(format!("q_p = {} outside [0, 1]", self.q_p));
        }
        if !(0.0..1.0).contains(&self.p_e) {
            out.push(format!("p_e = {} outside [0, 1)", self.p_e));
        }
        if !(0.0..=1.0).contains(&self.access_prob) {
            out.push(format!("p = {} outside [0, 1]", self.access_prob));
        }
        if !self.snr_db.is_finite() {
            out.push(format!("SNR must be finite"));
        }
    }

    /// Time a one-bit report occupies, microseconds.
    pub fn bit_time_us(&self) -> f64 {
        1.0 / self.rate_mbps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let s = RadioScene::small();
        assert_eq!((s.channels, s.users, s.packet_bits), (3, 12, 40_000.0));
        let l = RadioScene::large();
        assert_eq!((l.channels, l.users, l.packet_bits), (12, 40, 160_000.0));
        assert!((l.access_prob * 40.0 - (-1.0f64).exp()).abs() < 1e-15);
        s.validate().unwrap();
        l.validate().unwrap();
    }

    #[test]
    fn collects_every_violation() {
        let bad = RadioScene {
            q_p: 1.5,
            p_e: 1.0,
            rate_mbps: 0.0,
            ..RadioScene::small()
        };
        let err = alloc::format!("{}", bad.validate().unwrap_err());
        assert!(err.contains("q_p") && err.contains("p_e") && err.contains("C must"));
    }
}
