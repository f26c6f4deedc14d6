//! Exhaustive search over sensing design parameters for the highest
//! throughput under a detection-probability equality and a delay limit.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use libm::{fabs, log10, pow, round};

use crate::chain::{analyze, MacVariant};
use crate::error::{config, Error, Result};
use crate::phy::{threshold_for_false_alarm, PhyParams};
use crate::scene::RadioScene;
use crate::sensing::{
    group_layout, network_detection, network_detection_summary, FusionConfig, GroupLayout,
    ReportingScheme,
};

/// Largest gap allowed between the network detection probability and its target.
pub const PD_TOLERANCE: f64 = 1e-6;

/// Sensing choices held fixed during a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingDesign {
    pub scheme: ReportingScheme,
    /// Sensing radio bandwidth as a fraction of the band.
    pub alpha: f64,
    /// Required network detection probability.
    pub p_d_min: f64,
}

impl SensingDesign {
    /// Narrowest radio (one channel at a time) at the given target.
    pub fn narrowband(scheme: ReportingScheme, channels: usize, p_d_min: f64) -> Self {
        Self {
            scheme,
            alpha: 1.0 / channels as f64,
            p_d_min,
        }
    }
}

/// Candidate values of every search variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub kappa_values: Vec<usize>,
    /// Per-event sensing times, microseconds.
    pub t_e_values: Vec<f64>,
    pub n_g_values: Vec<usize>,
    /// Per-node false alarm seeds for the threshold search.
    pub p_f_values: Vec<f64>,
}

/// Divisors of `m` in increasing order.
pub fn divisors(m: usize) -> Vec<usize> {
    (1..=m).filter(|d| m % d == 0).collect()
}

/// Points `10^(k / per_decade)` within `[lo, hi]`, both ends included when on the lattice.
pub fn log_spaced(lo: f64, hi: f64, per_decade: u32) -> Vec<f64> {
    if !(lo > 0.0 && hi >= lo) || per_decade == 0 {
        return Vec::new();
    }
    let step = per_decade as f64;
    let first = round(log10(lo) * step - 0.5 + 1e-9) as i64;
    let last = round(log10(hi) * step + 0.5 - 1e-9) as i64;
    (first..=last)
        .map(|k| pow(10.0, k as f64 / step))
        .filter(|v| *v >= lo * (1.0 - 1e-12) && *v <= hi * (1.0 + 1e-12))
        .collect()
}

impl SearchGrid {
    /// `κ ∈ 1..=N`, `n_g` over divisors of `M` (capped at `N`), `t_e` ten
    /// points per decade over `[1, t_t]` µs, seeds `0.01..=0.50`.
    pub fn defaults(scene: &RadioScene) -> Self {
        Self {
            kappa_values: (1..=scene.users).collect(),
            t_e_values: log_spaced(1.0, scene.slot_us, 10),
            n_g_values: divisors(scene.channels)
                .into_iter()
                .filter(|g| *g <= scene.users)
                .collect(),
            p_f_values: (1..=50).map(|i| i as f64 / 100.0).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.kappa_values.len()
            * self.t_e_values.len()
            * self.n_g_values.len()
            * self.p_f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, scene: &RadioScene) -> Result<()> {
        let lists = [
            ("kappa", self.kappa_values.is_empty()),
            ("t_e", self.t_e_values.is_empty()),
            ("n_g", self.n_g_values.is_empty()),
            ("p_f", self.p_f_values.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(config!("{name} grid is empty"));
        }
        if let Some(k) = self
            .kappa_values
            .iter()
            .find(|k| **k == 0 || **k > scene.users)
        {
            return Err(config!("kappa = {k} outside [1, {}]", scene.users));
        }
        if let Some(t) = self
            .t_e_values
            .iter()
            .find(|t| !(**t > 0.0) || !t.is_finite())
        {
            return Err(config!("sensing time {t} must be positive"));
        }
        let cap = scene.channels.min(scene.users);
        if let Some(g) = self.n_g_values.iter().find(|g| **g == 0 || **g > cap) {
            return Err(config!("n_g = {g} outside [1, {cap}]"));
        }
        if let Some(p) = self.p_f_values.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(config!("false alarm seed {p} outside (0, 1)"));
        }
        Ok(())
    }

    /// All grid points in nesting order κ, t_e, n_g, p_f.
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &kappa in &self.kappa_values {
            for &t_e in &self.t_e_values {
                for &n_g in &self.n_g_values {
                    for &p_f_target in &self.p_f_values {
                        out.push(GridPoint {
                            kappa,
                            t_e,
                            n_g,
                            p_f_target,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub kappa: usize,
    pub t_e: f64,
    pub n_g: usize,
    pub p_f_target: f64,
}

/// A feasible design and its performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizedPoint {
    pub kappa: usize,
    pub t_e: f64,
    pub n_g: usize,
    pub p_f_target: f64,
    /// Detector threshold meeting the detection target.
    pub theta: f64,
    pub t_q: f64,
    pub t_d: f64,
    /// Network detection probability.
    pub p_d: f64,
    /// Network false alarm probability.
    pub p_f: f64,
    pub r: f64,
    pub xi: f64,
    pub r_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointOutcome {
    Feasible(OptimizedPoint),
    Infeasible(String),
}

impl PointOutcome {
    pub fn feasible(&self) -> Option<&OptimizedPoint> {
        match self {
            Self::Feasible(p) => Some(p),
            Self::Infeasible(_) => None,
        }
    }
}

/// Network detection probability as a function of the detector threshold.
fn network_pd(
    layout: &GroupLayout,
    design: &SensingDesign,
    fusion: &FusionConfig,
    phy: &PhyParams,
    theta: f64,
) -> Result<f64> {
    let probs = phy.with_threshold(theta).node_probs()?;
    Ok(network_detection(layout, design.scheme, fusion, probs)?.1)
}

/// Threshold at which the network detection probability equals
/// `design.p_d_min` within [`PD_TOLERANCE`], searched from the threshold of
/// the per-node false alarm seed. `None` when even a zero threshold misses
/// the target.
pub fn threshold_for_detection(
    layout: &GroupLayout,
    design: &SensingDesign,
    fusion: &FusionConfig,
    phy: &PhyParams,
    p_f_seed: f64,
) -> Result<Option<f64>> {
    let gap = |theta: f64| -> Result<f64> {
        Ok(network_pd(layout, design, fusion, phy, theta)? - design.p_d_min)
    };
    if gap(0.0)? < 0.0 {
        return Ok(None);
    }
    let seed = threshold_for_false_alarm(p_f_seed, phy.time_bandwidth()?)?;
    let (mut lo, mut hi) = (0.0, seed.max(1.0));
    while gap(hi)? >= 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numerical(
                "detection never falls below its target".to_string(),
            ));
        }
    }
    let mut theta = lo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = gap(mid)?;
        if g >= 0.0 {
            lo = mid;
            theta = mid;
            if g <= 1e-10 {
                break;
            }
        } else {
            hi = mid;
        }
    }
    let residual = gap(theta)?;
    if fabs(residual) > PD_TOLERANCE {
        return Err(Error::Numerical(format!(
            "detection target missed by {residual:e} at the bracket limit"
        )));
    }
    Ok(Some(theta))
}

/// Evaluates one design: finds the threshold at which the network detection
/// probability equals its target, then checks the delay limit and computes
/// throughput. Constraint failures come back as `Infeasible`; malformed
/// inputs are errors.
pub fn evaluate_point(
    point: &GridPoint,
    scene: &RadioScene,
    variant: &MacVariant,
    design: &SensingDesign,
) -> Result<PointOutcome> {
    let layout = group_layout(scene.channels, scene.users, point.n_g)?;
    let fusion = FusionConfig {
        kappa: point.kappa,
        p_e: scene.p_e,
        q_p: scene.q_p,
    };
    fusion.validate_for(&layout)?;
    if !(design.p_d_min > 0.0 && design.p_d_min < 1.0) {
        return Err(config!("p_d_min = {} outside (0, 1)", design.p_d_min));
    }
    let phy = match PhyParams::new(
        point.t_e,
        design.alpha,
        scene.channels,
        scene.bandwidth_mhz,
        scene.snr_db,
        0.0,
    ) {
        Ok(phy) => phy,
        Err(Error::Domain(msg)) => return Ok(PointOutcome::Infeasible(msg)),
        Err(e) => return Err(e),
    };
    let theta = match threshold_for_detection(&layout, design, &fusion, &phy, point.p_f_target)? {
        Some(theta) => theta,
        None => {
            return Ok(PointOutcome::Infeasible(format!(
                "p_d,min = {} unreachable (kappa = {}, t_e = {}, n_g = {})",
                design.p_d_min, point.kappa, point.t_e, point.n_g
            )))
        }
    };

    let summary = network_detection_summary(
        &layout,
        design.scheme,
        &fusion,
        &phy.with_threshold(theta),
        scene.rate_mbps,
    )?;
    if summary.t_d > scene.max_delay_us {
        return Ok(PointOutcome::Infeasible(format!(
            "detection delay {} us exceeds {} us",
            summary.t_d, scene.max_delay_us
        )));
    }
    let report = match analyze(scene, variant, &summary) {
        Ok(r) => r,
        Err(e @ Error::QuietTime { .. }) => return Ok(PointOutcome::Infeasible(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(PointOutcome::Feasible(OptimizedPoint {
        kappa: point.kappa,
        t_e: point.t_e,
        n_g: point.n_g,
        p_f_target: point.p_f_target,
        theta,
        t_q: summary.t_q,
        t_d: summary.t_d,
        p_d: summary.p_d,
        p_f: summary.p_f,
        r: report.r,
        xi: report.xi,
        r_t: report.r_t,
    }))
}

/// Search outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub best: OptimizedPoint,
    pub evaluated: usize,
    pub infeasible: usize,
    /// Every feasible point in grid order.
    pub frontier: Vec<OptimizedPoint>,
}

/// Orders candidates: higher `R_t` first, then smaller `t_q`, `κ`, `n_g`.
pub fn prefer(a: &OptimizedPoint, b: &OptimizedPoint) -> Ordering {
    b.r_t
        .total_cmp(&a.r_t)
        .then(a.t_q.total_cmp(&b.t_q))
        .then(a.kappa.cmp(&b.kappa))
        .then(a.n_g.cmp(&b.n_g))
}

/// Picks the best feasible outcome; earlier grid points win exact ties.
pub fn assemble(outcomes: &[PointOutcome]) -> Result<OptimizationResult> {
    let mut frontier = Vec::new();
    let mut reasons = Vec::new();
    for o in outcomes {
        match o {
            PointOutcome::Feasible(p) => frontier.push(*p),
            PointOutcome::Infeasible(why) => reasons.push(why.clone()),
        }
    }
    let best = frontier.iter().copied().reduce(|best, p| {
        if prefer(&p, &best) == Ordering::Less {
            p
        } else {
            best
        }
    });
    match best {
        Some(best) => Ok(OptimizationResult {
            best,
            evaluated: outcomes.len(),
            infeasible: reasons.len(),
            frontier,
        }),
        None => Err(Error::Infeasible {
            evaluated: outcomes.len(),
            reasons,
        }),
    }
}

/// Evaluates every grid point. The threshold search does not depend on the
/// seed's final value, so results are shared across seeds of the same
/// `(κ, t_e, n_g)`. Points whose `κ` exceeds a group are infeasible.
pub fn evaluate_grid(
    grid: &SearchGrid,
    scene: &RadioScene,
    variant: &MacVariant,
    design: &SensingDesign,
) -> Result<Vec<PointOutcome>> {
    grid.validate(scene)?;
    scene.validate()?;
    variant.validate()?;
    let mut memo: BTreeMap<(usize, u64, usize), PointOutcome> = BTreeMap::new();
    let mut out = Vec::with_capacity(grid.len());
    for point in grid.points() {
        let key = (point.kappa, point.t_e.to_bits(), point.n_g);
        let shared = match memo.get(&key) {
            Some(o) => o.clone(),
            None => {
                let o = match evaluate_point(&point, scene, variant, design) {
                    Err(Error::Config(msg)) => PointOutcome::Infeasible(msg),
                    other => other?,
                };
                memo.insert(key, o.clone());
                o
            }
        };
        out.push(match shared {
            PointOutcome::Feasible(p) => PointOutcome::Feasible(OptimizedPoint {
                p_f_target: point.p_f_target,
                ..p
            }),
            inf => inf,
        });
    }
    Ok(out)
}

/// Exhaustive search for the highest `R_t`.
pub fn optimize(
    grid: &SearchGrid,
    scene: &RadioScene,
    variant: &MacVariant,
    design: &SensingDesign,
) -> Result<OptimizationResult> {
    assemble(&evaluate_grid(grid, scene, variant, design)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ControlChannel;
    use alloc::vec;

    fn b1s0() -> MacVariant {
        MacVariant::new(ControlChannel::DccPuFreeControl, true, false)
    }

    fn design() -> SensingDesign {
        SensingDesign::narrowband(ReportingScheme::Ttdma, 3, 0.99)
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(divisors(12), [1, 2, 3, 4, 6, 12]);
        let t = log_spaced(1.0, 1000.0, 10);
        assert_eq!(t.len(), 31);
        assert!((t[0] - 1.0).abs() < 1e-12 && (t[30] - 1000.0).abs() < 1e-9);
        assert!((t[10] - 10.0).abs() < 1e-12);
        let g = SearchGrid::defaults(&RadioScene::small());
        assert_eq!(g.n_g_values, [1, 3]);
        assert_eq!(g.kappa_values.len(), 12);
        assert_eq!(g.len(), 12 * 31 * 2 * 50);
    }

    #[test]
    fn quiet_time_exhausting_slot_is_infeasible() {
        let scene = RadioScene {
            max_delay_us: 1e6,
            ..RadioScene::small()
        };
        let p = GridPoint {
            kappa: 1,
            t_e: 900.0,
            n_g: 1,
            p_f_target: 0.1,
        };
        match evaluate_point(&p, &scene, &b1s0(), &design()).unwrap() {
            PointOutcome::Infeasible(why) => {
                assert!(why.contains("quiet time exhausts slot"), "{why}")
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn oversized_kappa_is_a_config_error() {
        let p = GridPoint {
            kappa: 5,
            t_e: 10.0,
            n_g: 3,
            p_f_target: 0.1,
        };
        let err = evaluate_point(&p, &RadioScene::small(), &b1s0(), &design()).unwrap_err();
        assert!(alloc::format!("{err}").contains("kappa exceeds group size"));
    }

    #[test]
    fn feasible_point_meets_target() {
        let p = GridPoint {
            kappa: 2,
            t_e: 10.0,
            n_g: 1,
            p_f_target: 0.3,
        };
        let o = evaluate_point(&p, &RadioScene::small(), &b1s0(), &design()).unwrap();
        let best = o.feasible().expect("feasible");
        assert!((best.p_d - 0.99).abs() <= PD_TOLERANCE);
        assert!(best.r_t > 0.0);
    }

    #[test]
    fn singleton_grid_returns_its_point() {
        let grid = SearchGrid {
            kappa_values: vec![2],
            t_e_values: vec![10.0],
            n_g_values: vec![1],
            p_f_values: vec![0.2],
        };
        let res = optimize(&grid, &RadioScene::small(), &b1s0(), &design()).unwrap();
        assert_eq!(res.evaluated, 1);
        assert_eq!(res.infeasible, 0);
        assert_eq!((res.best.kappa, res.best.n_g), (2, 1));
    }

    #[test]
    fn all_infeasible_lists_reasons() {
        let grid = SearchGrid {
            kappa_values: vec![1],
            t_e_values: vec![950.0, 990.0],
            n_g_values: vec![1],
            p_f_values: vec![0.2],
        };
        let err = optimize(&grid, &RadioScene::small(), &b1s0(), &design()).unwrap_err();
        match err {
            Error::Infeasible { evaluated, reasons } => {
                assert_eq!(evaluated, 2);
                assert_eq!(reasons.len(), 2);
            }
            e => panic!("{e}"),
        }
    }
}
