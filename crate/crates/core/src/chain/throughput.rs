use super::{busy_prob, ChainDims, ChainModel, ErrorModel, MacVariant, TrafficParams};
use crate::error::{domain, Error, Result};
use crate::scene::{ModelKind, RadioScene};
use crate::sensing::DetectionSummary;

/// Steady-state throughput of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputReport {
    /// Throughput ignoring sensing and switching overhead, Mbps.
    pub r: f64,
    /// Fraction of time left for data.
    pub xi: f64,
    /// `xi * r`, Mbps.
    pub r_t: f64,
    /// Detection delay within its limit.
    pub feasible: bool,
    pub p_c: f64,
    pub q: f64,
    /// The chain solve fell back to the empty state.
    pub degenerate: bool,
}

fn switches_in_slot(model: ModelKind, variant: &MacVariant) -> bool {
    model == ModelKind::Micro && variant.switching && variant.control.is_dedicated()
}

/// Data time per slot `t_u`, microseconds.
pub fn useful_time(model: ModelKind, variant: &MacVariant, t_t: f64, t_q: f64, t_p: f64) -> f64 {
    match model {
        ModelKind::Macro => t_t,
        ModelKind::Micro if switches_in_slot(model, variant) => t_t - t_q - t_p,
        ModelKind::Micro => t_t - t_q,
    }
}

/// Share of time not spent on sensing, reporting or switching.
pub fn overhead_ratio(
    model: ModelKind,
    variant: &MacVariant,
    t_t: f64,
    t_q: f64,
    t_p: f64,
    t_d_max: f64,
) -> Result<f64> {
    let (spare, budget) = match model {
        ModelKind::Macro => (t_d_max - t_q, t_d_max),
        ModelKind::Micro if switches_in_slot(model, variant) => (t_t - t_q - t_p, t_t),
        ModelKind::Micro => (t_t - t_q, t_t),
    };
    if !(budget > 0.0) {
        return Err(domain!("time budget must be positive, got {budget}"));
    }
    if !(spare > 0.0) {
        return Err(Error::QuietTime {
            quiet_us: budget - spare,
            budget_us: budget,
        });
    }
    Ok(spare / budget)
}

/// Completion probability `C t_u / d` (DCC) or `C (t_u + t_p) / d` (HCC), capped at 1.
pub fn completion_prob(scene: &RadioScene, variant: &MacVariant, t_u: f64) -> f64 {
    let airtime = if variant.control.is_dedicated() {
        t_u
    } else {
        t_u + scene.switch_us
    };
    (scene.rate_mbps * airtime / scene.packet_bits).min(1.0)
}

/// Traffic parameters for the chain of `variant` under `detection`.
pub fn traffic_for(
    scene: &RadioScene,
    variant: &MacVariant,
    detection: &DetectionSummary,
) -> TrafficParams {
    let t_u = useful_time(
        scene.model,
        variant,
        scene.slot_us,
        detection.t_q,
        scene.switch_us,
    );
    let p_c = match scene.model {
        ModelKind::Micro => busy_prob(scene.q_p, detection.p_d, detection.p_f),
        ModelKind::Macro => 0.0,
    };
    TrafficParams {
        p: scene.access_prob,
        q: completion_prob(scene, variant, t_u),
        d: scene.packet_bits,
        q_p: scene.q_p,
        p_c,
        p_e: scene.p_e,
    }
}

fn effective_rate(rate_mbps: f64, variant: &MacVariant, p_e: f64) -> f64 {
    match variant.error_model {
        ErrorModel::E1 => rate_mbps * (1.0 - p_e),
        _ => rate_mbps,
    }
}

/// `C Σ x π`, with `C` replaced by `C (1 - p_e)` under E1.
pub fn throughput_micro(model: &ChainModel, rate_mbps: f64) -> f64 {
    effective_rate(rate_mbps, &model.variant, model.traffic.p_e) * model.mean_utilized()
}

/// Throughput when the PU is quasi-static between rare sensing events:
/// channel availability times the utilization of the PU-free chain.
pub fn throughput_macro(
    scene: &RadioScene,
    variant: &MacVariant,
    p_d: f64,
    p_f: f64,
) -> Result<f64> {
    if variant.buffering || variant.switching {
        return Err(domain!(
            "the macroscopic model covers plain DCC and HCC only"
        ));
    }
    let dims = ChainDims::new(scene.channels, scene.users, variant.control);
    let traffic = TrafficParams {
        p: scene.access_prob,
        q: completion_prob(scene, variant, scene.slot_us),
        d: scene.packet_bits,
        q_p: scene.q_p,
        p_c: 0.0,
        p_e: scene.p_e,
    };
    let chain = ChainModel::build(dims, *variant, traffic)?;
    let availability = scene.q_p * (1.0 - p_d) + (1.0 - scene.q_p) * (1.0 - p_f);
    Ok(availability * throughput_micro(&chain, scene.rate_mbps))
}

/// End-to-end analytic throughput of `variant` given a sensing outcome.
pub fn analyze(
    scene: &RadioScene,
    variant: &MacVariant,
    detection: &DetectionSummary,
) -> Result<ThroughputReport> {
    variant.validate()?;
    let xi = overhead_ratio(
        scene.model,
        variant,
        scene.slot_us,
        detection.t_q,
        scene.switch_us,
        scene.max_delay_us,
    )?;
    let traffic = traffic_for(scene, variant, detection);
    let (r, degenerate) = match scene.model {
        ModelKind::Micro => {
            let dims = ChainDims::new(scene.channels, scene.users, variant.control);
            let chain = ChainModel::build(dims, *variant, traffic)?;
            (throughput_micro(&chain, scene.rate_mbps), chain.degenerate)
        }
        ModelKind::Macro => (
            throughput_macro(scene, variant, detection.p_d, detection.p_f)?,
            false,
        ),
    };
    Ok(ThroughputReport {
        r,
        xi,
        r_t: xi * r,
        feasible: detection.t_d <= scene.max_delay_us,
        p_c: traffic.p_c,
        q: traffic.q,
        degenerate,
    })
}
