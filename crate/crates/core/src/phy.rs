//! Energy-detection operating characteristics of a single sensing node.
//!
//! The received energy over `ε` complex samples is compared against a
//! threshold `θ`. Without a primary signal the normalized energy is
//! chi-square with `2ε` degrees of freedom; with a Rayleigh-faded primary
//! signal of average SNR `γ` it becomes a geometric mixture of chi-squares.

use crate::error::{domain, Result};
use crate::math::{db_to_linear, gamma_p, gamma_q, ln_poisson_pmf, scaled_lower_series};
use libm::{exp, floor, log};

/// Slack for floating error on probabilities before it is reported as instability.
const PROB_SLACK: f64 = 1e-12;

/// Sensing radio and detector parameters of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams {
    /// Observation time per sensing event, microseconds.
    pub sensing_time_us: f64,
    /// Sensing radio bandwidth as a fraction of the whole band.
    pub alpha: f64,
    pub channels: usize,
    /// Per-channel bandwidth, MHz.
    pub bandwidth_mhz: f64,
    /// Average primary-user SNR, linear scale.
    pub snr: f64,
    /// Energy detector threshold.
    pub threshold: f64,
}

impl PhyParams {
    /// Builds parameters from an SNR given in dB.
    pub fn new(
        sensing_time_us: f64,
        alpha: f64,
        channels: usize,
        bandwidth_mhz: f64,
        snr_db: f64,
        threshold: f64,
    ) -> Result<Self> {
        let phy = Self {
            sensing_time_us,
            alpha,
            channels,
            bandwidth_mhz,
            snr: db_to_linear(snr_db),
            threshold,
        };
        phy.validate()?;
        Ok(phy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(domain!("channel count must be positive"));
        }
        let min_alpha = 1.0 / self.channels as f64;
        if !(self.alpha >= min_alpha - 1e-12 && self.alpha <= 1.0) {
            return Err(domain!(
                "alpha = {} outside [1/M, 1] for M = {}",
                self.alpha,
                self.channels
            ));
        }
        if !(self.threshold >= 0.0) {
            return Err(domain!("threshold must be >= 0, got {}", self.threshold));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() {
            return Err(domain!("linear SNR must be positive, got {}", self.snr));
        }
        self.time_bandwidth().map(|_| ())
    }

    /// Time-bandwidth product `ε = ⌊t_e α M b⌋`; zero is rejected.
    pub fn time_bandwidth(&self) -> Result<u32> {
        time_bandwidth(
            self.sensing_time_us,
            self.alpha,
            self.channels,
            self.bandwidth_mhz,
        )
    }

    pub fn with_threshold(self, threshold: f64) -> Self {
        Self { threshold, ..self }
    }

    /// SNR accumulated over the observation: `ε γ`, with `γ` per sample.
    pub fn observation_snr(&self) -> Result<f64> {
        Ok(self.time_bandwidth()? as f64 * self.snr)
    }

    /// Per-node false alarm and detection probabilities at the current threshold.
    pub fn node_probs(&self) -> Result<NodeDetectionProbs> {
        let eps = self.time_bandwidth()?;
        Ok(NodeDetectionProbs {
            p10: false_alarm_prob(self.threshold, eps)?,
            p11: detection_prob(self.threshold, eps, self.observation_snr()?)?,
        })
    }
}

/// `⌊t_e α M b⌋`, guarded against representation error just below an integer.
pub fn time_bandwidth(
    sensing_time_us: f64,
    alpha: f64,
    channels: usize,
    bandwidth_mhz: f64,
) -> Result<u32> {
    let raw = sensing_time_us * alpha * channels as f64 * bandwidth_mhz;
    if !raw.is_finite() || raw < 0.0 {
        return Err(domain!(
            "time-bandwidth product {raw} is not a finite non-negative number"
        ));
    }
    let eps = floor(raw + 1e-9);
    if eps < 1.0 {
        return Err(domain!(
            "time-bandwidth product floors to 0 (t_e = {sensing_time_us} us)"
        ));
    }
    if eps > u32::MAX as f64 {
        return Err(domain!("time-bandwidth product {eps} too large"));
    }
    Ok(eps as u32)
}

/// Per-node sensing outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeDetectionProbs {
    /// Report "busy" while the channel is idle.
    pub p10: f64,
    /// Report "busy" while the primary user transmits.
    pub p11: f64,
}

impl NodeDetectionProbs {
    pub fn p00(&self) -> f64 {
        1.0 - self.p10
    }

    pub fn p01(&self) -> f64 {
        1.0 - self.p11
    }
}

fn check_eps_theta(theta: f64, epsilon: u32) -> Result<()> {
    if epsilon < 1 {
        return Err(domain!("time-bandwidth product must be >= 1"));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(domain!("threshold must be finite and >= 0, got {theta}"));
    }
    Ok(())
}

fn settle(p: f64, what: &str) -> Result<f64> {
    if !p.is_finite() {
        return Err(crate::error::Error::Numerical(alloc::format!(
            "{what} evaluated to {p}"
        )));
    }
    if p < -PROB_SLACK || p > 1.0 + PROB_SLACK {
        return Err(crate::error::Error::Numerical(alloc::format!(
            "{what} = {p} outside [0, 1]"
        )));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `p10 = Γ(ε, θ/2) / Γ(ε)`.
pub fn false_alarm_prob(theta: f64, epsilon: u32) -> Result<f64> {
    check_eps_theta(theta, epsilon)?;
    settle(
        gamma_q(epsilon as f64, theta / 2.0),
        "false alarm probability",
    )
}

/// Rayleigh-averaged detection probability of the energy detector.
///
/// Evaluates
/// `e^{-θ/2} Σ_{h<ε-1} (θ/2)^h/h! + ((1+γ)/γ)^{ε-1} e^{-θ/2} [e^{u} - Σ_{j<ε-1} u^j/j!]`
/// with `u = θγ/(2+2γ)`. The first sum is `Q(ε-1, θ/2)`; the bracket is
/// `e^u P(ε-1, u)`, and the product is formed in log space so that the
/// `((1+γ)/γ)^{ε-1}` factor cannot overflow.
pub fn detection_prob(theta: f64, epsilon: u32, snr: f64) -> Result<f64> {
    check_eps_theta(theta, epsilon)?;
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(domain!("linear SNR must be positive, got {snr}"));
    }
    if theta == 0.0 {
        return Ok(1.0);
    }
    let half = theta / 2.0;
    let order = (epsilon - 1) as f64;
    let shrink = 1.0 + snr;
    if epsilon == 1 {
        return settle(exp(-half / shrink), "detection probability");
    }
    let head = gamma_q(order, half);
    let u = half * snr / shrink;
    let correction = if u < order + 1.0 {
        // ((1+γ)/γ)^a e^{-θ/(2(1+γ))} P(a, u) = Poisson(a; θ/2) · Σ u^n / ((a+1)…(a+n))
        exp(ln_poisson_pmf(order, half)) * scaled_lower_series(order, u)
    } else {
        let ln = order * log(shrink / snr) - half / shrink + log(gamma_p(order, u));
        exp(ln)
    };
    settle(head + correction, "detection probability")
}

/// Inverts the false alarm curve: the `θ` with `false_alarm_prob(θ, ε) = p10`.
pub fn threshold_for_false_alarm(p10: f64, epsilon: u32) -> Result<f64> {
    if !(p10 > 0.0 && p10 <= 1.0) {
        return Err(domain!("target false alarm {p10} outside (0, 1]"));
    }
    if epsilon < 1 {
        return Err(domain!("time-bandwidth product must be >= 1"));
    }
    if p10 == 1.0 {
        return Ok(0.0);
    }
    let a = epsilon as f64;
    let f = |theta: f64| gamma_q(a, theta / 2.0) - p10;
    let mut lo = 0.0;
    let mut hi = 2.0 * a + 2.0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(domain!("no threshold reaches false alarm {p10}"));
        }
    }
    bisect(f, lo, hi)
}

/// Bisection on a decreasing function with a sign change in `[lo, hi]`.
pub(crate) fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    Ok(if libm::fabs(f(lo)) <= libm::fabs(f(hi)) {
        lo
    } else {
        hi
    })
}
