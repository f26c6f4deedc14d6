//! Primary-user channel occupancy processes.

use alloc::vec::Vec;
use core::fmt;

use libm::{ceil, log, round, sqrt};
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{config, domain, Result};
use crate::phy::bisect;

/// Law of one on or off period, in slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DurationLaw {
    /// Geometric (`E`).
    Geometric,
    /// Continuous uniform on `[0, L]`, rounded up (`U`).
    Uniform,
    /// Log-normal with geometric-matching variance, rounded to nearest with a floor of one slot (`L`).
    LogNormal,
}

impl DurationLaw {
    pub fn letter(self) -> char {
        match self {
            Self::Geometric => 'E',
            Self::Uniform => 'U',
            Self::LogNormal => 'L',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'E' => Some(Self::Geometric),
            'U' => Some(Self::Uniform),
            'L' => Some(Self::LogNormal),
            _ => None,
        }
    }
}

/// Occupancy model of each licensed channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PuTraffic {
    /// Independent busy draw every slot.
    PerSlotBernoulli,
    /// Alternating on and off periods.
    OnOff { on: DurationLaw, off: DurationLaw },
}

impl PuTraffic {
    pub const GEOMETRIC: Self = Self::OnOff {
        on: DurationLaw::Geometric,
        off: DurationLaw::Geometric,
    };

    /// Parses `bernoulli` or a two-letter on/off code such as `LE`.
    pub fn parse(code: &str) -> Result<Self> {
        if code.eq_ignore_ascii_case("bernoulli") {
            return Ok(Self::PerSlotBernoulli);
        }
        let mut chars = code.chars();
        match (chars.next(), chars.next(), chars.next()) {
            (Some(a), Some(b), None) => {
                match (DurationLaw::from_letter(a), DurationLaw::from_letter(b)) {
                    (Some(on), Some(off)) => Ok(Self::OnOff { on, off }),
                    _ => Err(config!("unknown PU traffic code '{code}'")),
                }
            }
            _ => Err(config!("unknown PU traffic code '{code}'")),
        }
    }
}

impl fmt::Display for PuTraffic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PerSlotBernoulli => f.write_str("bernoulli"),
            Self::OnOff { on, off } => write!(f, "{}{}", on.letter(), off.letter()),
        }
    }
}

/// A duration sampler calibrated so that the integer mean equals the target.
#[derive(Debug, Clone, Copy)]
enum Sampler {
    Constant(u64),
    /// Success probability of a geometric on `{1, 2, ...}`.
    Geometric(f64),
    /// Upper limit `L` of `ceil(U(0, L))`.
    Uniform(f64),
    LogNormal(LogNormal<f64>),
}

impl Sampler {
    fn new(law: DurationLaw, mean: f64) -> Result<Self> {
        if !(mean >= 1.0) || !mean.is_finite() {
            return Err(domain!("mean duration {mean} must be a finite number >= 1"));
        }
        if mean - 1.0 < 1e-12 {
            return Ok(Self::Constant(1));
        }
        Ok(match law {
            DurationLaw::Geometric => Self::Geometric(1.0 / mean),
            DurationLaw::Uniform => Self::Uniform(uniform_limit(mean)),
            DurationLaw::LogNormal => {
                let sigma = sqrt(log((mean * mean - mean) / (mean * mean) + 1.0));
                let mu = lognormal_location(mean, sigma);
                Self::LogNormal(LogNormal::new(mu, sigma).map_err(|e| domain!("log-normal: {e}"))?)
            }
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match *self {
            Self::Constant(v) => v,
            Self::Geometric(p) => {
                let u: f64 = rng.random();
                // inverse CDF on {1, 2, ...}
                let v = ceil(log(1.0 - u) / log(1.0 - p));
                (v as u64).max(1)
            }
            Self::Uniform(limit) => {
                let u: f64 = rng.random();
                (ceil((1.0 - u) * limit) as u64).max(1)
            }
            Self::LogNormal(ln) => (round(ln.sample(rng)) as u64).max(1),
        }
    }
}

/// `E[ceil(U(0, L))]`.
fn uniform_rounded_mean(limit: f64) -> f64 {
    let n = ceil(limit);
    let full = n - 1.0;
    // values 1..=full each with mass 1/L, value n with mass (L - full)/L
    (full * (full + 1.0) / 2.0 + n * (limit - full)) / limit
}

fn uniform_limit(mean: f64) -> f64 {
    // the rounded mean increases from 1 towards infinity as L grows
    bisect(|l| mean - uniform_rounded_mean(l), 1e-9, 2.0 * mean + 2.0).unwrap_or(2.0 * mean - 1.0)
}

/// `E[max(1, round(X))]` for `X ~ LogNormal(mu, sigma)`.
fn lognormal_rounded_mean(mu: f64, sigma: f64) -> f64 {
    let normal = Normal::standard();
    let tail = |x: f64| 1.0 - normal.cdf((log(x) - mu) / sigma);
    // E = 1 + Σ_{k >= 2} P(X >= k - 1/2)
    let mut total = 1.0;
    let mut k = 2.0;
    loop {
        let t = tail(k - 0.5);
        total += t;
        if t < 1e-13 || k > 1e7 {
            break;
        }
        k += 1.0;
    }
    total
}

fn lognormal_location(mean: f64, sigma: f64) -> f64 {
    let nominal = log(mean * mean / sqrt(mean * mean - mean + mean * mean));
    let lo = nominal - 2.0;
    let hi = nominal + 2.0;
    bisect(|mu| mean - lognormal_rounded_mean(mu, sigma), lo, hi).unwrap_or(nominal)
}

/// Independent occupancy process for each channel.
#[derive(Debug, Clone)]
pub struct PuProcess {
    kind: PuTraffic,
    busy_prob: f64,
    on: Option<Sampler>,
    off: Option<Sampler>,
    busy: Vec<bool>,
    remaining: Vec<u64>,
}

impl PuProcess {
    /// `target_busy` is the stationary busy fraction. On/off means are
    /// `1/(1 - q_p)` and `1/q_p`, matching the per-slot Bernoulli marginal.
    pub fn new<R: Rng + ?Sized>(
        kind: PuTraffic,
        target_busy: f64,
        channels: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&target_busy) {
            return Err(domain!("busy fraction {target_busy} outside [0, 1]"));
        }
        let degenerate = target_busy == 0.0 || target_busy == 1.0;
        let (on, off) = match kind {
            PuTraffic::OnOff { on, off } if !degenerate => (
                Some(Sampler::new(on, 1.0 / (1.0 - target_busy))?),
                Some(Sampler::new(off, 1.0 / target_busy)?),
            ),
            _ => (None, None),
        };
        let mut process = Self {
            kind,
            busy_prob: target_busy,
            on,
            off,
            busy: alloc::vec![false; channels],
            remaining: alloc::vec![0; channels],
        };
        if let (Some(on), Some(off)) = (process.on, process.off) {
            for c in 0..channels {
                let busy = rng.random_bool(target_busy);
                process.busy[c] = busy;
                process.remaining[c] = if busy { on.draw(rng) } else { off.draw(rng) };
            }
        }
        Ok(process)
    }

    /// Advances one slot and returns the busy flags for it.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[bool] {
        match (self.kind, self.on, self.off) {
            (PuTraffic::OnOff { .. }, Some(on), Some(off)) => {
                for c in 0..self.busy.len() {
                    if self.remaining[c] == 0 {
                        self.busy[c] = !self.busy[c];
                        self.remaining[c] = if self.busy[c] {
                            on.draw(rng)
                        } else {
                            off.draw(rng)
                        };
                    }
                    self.remaining[c] -= 1;
                }
            }
            _ => {
                let p = self.busy_prob;
                for b in self.busy.iter_mut() {
                    *b = p >= 1.0 || (p > 0.0 && rng.random_bool(p));
                }
            }
        }
        &self.busy
    }
}

/// Occupancy of `channels` channels over `slots` slots, channel-major.
pub fn generate_pu_sequence<R: Rng + ?Sized>(
    kind: PuTraffic,
    target_busy: f64,
    channels: usize,
    slots: usize,
    rng: &mut R,
) -> Result<Vec<Vec<bool>>> {
    if slots == 0 {
        return Err(domain!("horizon must be at least one slot"));
    }
    let mut process = PuProcess::new(kind, target_busy, channels, rng)?;
    let mut out = alloc::vec![Vec::with_capacity(slots); channels];
    for _ in 0..slots {
        for (seq, &b) in out.iter_mut().zip(process.step(rng)) {
            seq.push(b);
        }
    }
    Ok(out)
}

/// Exact mean of a calibrated duration law, for diagnostics and tests.
pub fn calibrated_mean(law: DurationLaw, mean: f64) -> Result<f64> {
    Ok(match Sampler::new(law, mean)? {
        Sampler::Constant(v) => v as f64,
        Sampler::Geometric(p) => 1.0 / p,
        Sampler::Uniform(l) => uniform_rounded_mean(l),
        Sampler::LogNormal(_) => {
            let sigma = sqrt(log((mean * mean - mean) / (mean * mean) + 1.0));
            lognormal_rounded_mean(lognormal_location(mean, sigma), sigma)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in [PuTraffic::PerSlotBernoulli, PuTraffic::parse("LU").unwrap()] {
            let idle = generate_pu_sequence(kind, 0.0, 3, 500, &mut rng).unwrap();
            assert!(idle.iter().flatten().all(|b| !b));
            let busy = generate_pu_sequence(kind, 1.0, 3, 500, &mut rng).unwrap();
            assert!(busy.iter().flatten().all(|b| *b));
        }
    }

    #[test]
    fn bernoulli_busy_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let seq =
            generate_pu_sequence(PuTraffic::PerSlotBernoulli, 0.1, 1, 1_000_000, &mut rng).unwrap();
        let frac = seq[0].iter().filter(|b| **b).count() as f64 / 1e6;
        assert!((frac - 0.1).abs() < 0.001, "{frac}");
    }

    #[test]
    fn calibrated_means_hit_targets() {
        for law in [
            DurationLaw::Geometric,
            DurationLaw::Uniform,
            DurationLaw::LogNormal,
        ] {
            for mean in [1.0, 1.111, 2.0, 3.7, 10.0] {
                let got = calibrated_mean(law, mean).unwrap();
                assert!((got - mean).abs() < 1e-8, "{law:?} {mean} -> {got}");
            }
        }
    }

    #[test]
    fn on_off_busy_fractions() {
        for code in ["EE", "LE", "EL", "LL", "EU", "UU"] {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let kind = PuTraffic::parse(code).unwrap();
            let seq = generate_pu_sequence(kind, 0.3, 4, 200_000, &mut rng).unwrap();
            let frac = seq.iter().flatten().filter(|b| **b).count() as f64 / 800_000.0;
            assert!((frac - 0.3).abs() < 0.01, "{code}: {frac}");
        }
    }

    #[test]
    fn codes_roundtrip() {
        for code in ["EE", "LE", "EL", "LL", "EU", "UU", "bernoulli"] {
            let t = PuTraffic::parse(code).unwrap();
            assert_eq!(alloc::format!("{t}"), code);
        }
        assert!(PuTraffic::parse("XY").is_err());
        assert!(PuTraffic::parse("EEE").is_err());
    }
}
