//! Mode dispatch: turns a validated configuration into a result table.

use osa_core::chain::{analyze, MacVariant};
use osa_core::optimize::{optimize, threshold_for_detection, SensingDesign};
use osa_core::sensing::{group_layout, network_detection_summary, DetectionSummary};
use osa_core::sim::{run_mac_sim, MacSimConfig, ResumePolicy, SimEstimate};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Mode};
use crate::table::{num, ResultTable};
use crate::BenchError;

/// Verdict cell for an analytic value inside the simulated interval.
pub const WITHIN: &str = "within CI";
/// Verdict cell for an analytic value outside the simulated interval.
pub const OUTSIDE: &str = "outside CI";

type Rows = Result<Vec<Vec<String>>, BenchError>;

fn model(context: String) -> impl FnOnce(osa_core::Error) -> BenchError {
    move |source| BenchError::Model { context, source }
}

/// SHA-256 of the normalized configuration, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.to_toml().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn design(cfg: &ExperimentConfig, scheme: osa_core::sensing::ReportingScheme) -> SensingDesign {
    SensingDesign {
        scheme,
        alpha: cfg.alpha(),
        p_d_min: cfg.sensing.p_d_min,
    }
}

/// Threshold meeting the detection target at `t_e`, then the network outcome.
fn solve_detection(
    cfg: &ExperimentConfig,
    scheme: osa_core::sensing::ReportingScheme,
    t_e: f64,
) -> osa_core::Result<Option<(f64, DetectionSummary)>> {
    let scene = &cfg.scene;
    let layout = group_layout(scene.channels, scene.users, cfg.sensing.n_g)?;
    let fusion = cfg.fusion();
    let phy = cfg.phy(t_e)?;
    let d = design(cfg, scheme);
    let Some(theta) = threshold_for_detection(&layout, &d, &fusion, &phy, cfg.sensing.p_f_seed)?
    else {
        return Ok(None);
    };
    network_detection_summary(
        &layout,
        scheme,
        &fusion,
        &phy.with_threshold(theta),
        scene.rate_mbps,
    )
    .map(|d| Some((theta, d)))
}

/// Sensing outcome for the non-curve modes: fixed if configured, else solved.
fn detection(cfg: &ExperimentConfig, ctx: &str) -> Result<DetectionSummary, BenchError> {
    if let Some(f) = cfg.sensing.fixed {
        return Ok(DetectionSummary::fixed(cfg.sensing.p_d_min, f.p_f, f.t_q));
    }
    let t_e = cfg.sensing.t_e;
    solve_detection(cfg, cfg.sensing.scheme, t_e)
        .map_err(model(ctx.to_string()))?
        .map(|(_, d)| d)
        .ok_or_else(|| BenchError::Model {
            context: ctx.to_string(),
            source: osa_core::Error::Infeasible {
                evaluated: 1,
                reasons: vec![format!(
                    "p_d = {} unreachable at t_e = {t_e} us",
                    cfg.sensing.p_d_min
                )],
            },
        })
}

fn simulate(
    cfg: &ExperimentConfig,
    v: MacVariant,
    det: DetectionSummary,
    seed: u64,
    ctx: &str,
) -> Result<(SimEstimate, osa_core::sim::MacSimReport), BenchError> {
    let sim = MacSimConfig {
        scene: cfg.scene,
        variant: v,
        detection: det,
        traffic: cfg.run.traffic,
        batches: cfg.run.batches,
        events_per_batch: cfg.run.events_per_batch,
        warmup: cfg.run.warmup,
        seed,
        resume: ResumePolicy::Resume,
    };
    let report = run_mac_sim(&sim).map_err(model(ctx.to_string()))?;
    Ok((report.throughput.clone(), report))
}

/// Runs the configured mode and returns its table with metadata attached.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, BenchError> {
    let values = cfg.sweep_values();
    let var = cfg.run.sweep.name();
    let (columns, rows): (&[&str], Rows) = match cfg.run.mode {
        Mode::Curve => (
            &[
                "swept_var",
                "scheme",
                "kappa",
                "n_g",
                "t_e",
                "theta",
                "t_q",
                "p_f",
                "p_d",
            ],
            curve_rows(cfg, &values, var),
        ),
        Mode::Chain => (
            &[
                "swept_var",
                "variant",
                "p_d",
                "p_f",
                "t_q",
                "r",
                "xi",
                "r_t",
                "feasible",
            ],
            chain_rows(cfg, &values, var),
        ),
        Mode::Simulate if cfg.run.per_batch => (
            &["swept_var", "variant", "batch", "batch_mean"],
            simulate_rows(cfg, &values, var),
        ),
        Mode::Simulate => (
            &[
                "swept_var",
                "variant",
                "sim_mean",
                "sim_ci90",
                "batches",
                "events_per_batch",
                "warmup",
                "buffered_fraction",
                "mean_utilized",
            ],
            simulate_rows(cfg, &values, var),
        ),
        Mode::Optimize => (
            &[
                "swept_var",
                "variant",
                "kappa",
                "t_e",
                "n_g",
                "p_f_target",
                "theta",
                "t_q",
                "t_d",
                "p_d",
                "p_f",
                "r",
                "xi",
                "r_t",
                "best",
            ],
            optimize_rows(cfg, &values, var),
        ),
        Mode::Compare => (
            &[
                "swept_var",
                "analytic_Rt",
                "sim_mean",
                "sim_ci90",
                "verdict",
            ],
            compare_rows(cfg, &values, var),
        ),
    };
    let mut table = ResultTable::new(columns);
    table.meta("tool", concat!("osa-bench ", env!("CARGO_PKG_VERSION")));
    table.meta("config_sha256", config_hash(cfg));
    table.meta("seed", cfg.run.seed);
    table.meta("mode", cfg.run.mode.name());
    table.meta("swept_var", var);
    for r in rows? {
        table.push(r);
    }
    Ok(table)
}

/// Every (sweep value, item) pair in row order.
fn cross<T: Copy + Send + Sync>(values: &[f64], items: &[T]) -> Vec<(usize, f64, T)> {
    values
        .iter()
        .flat_map(|v| items.iter().map(move |i| (*v, *i)))
        .enumerate()
        .map(|(k, (v, i))| (k, v, i))
        .collect()
}

fn curve_rows(cfg: &ExperimentConfig, values: &[f64], var: &str) -> Rows {
    let mut jobs = Vec::new();
    for v in values {
        for s in &cfg.sensing.curve_schemes {
            for t in cfg.at(*v).curve_times() {
                jobs.push((*v, *s, t));
            }
        }
    }
    let rows = jobs
        .into_par_iter()
        .map(|(v, scheme, t_e)| {
            let c = cfg.at(v);
            let ctx = format!("curve at {var} = {v}, {scheme}, t_e = {t_e}");
            let found = solve_detection(&c, scheme, t_e).map_err(model(ctx))?;
            Ok(found.map(|(theta, d)| {
                vec![
                    num(v),
                    scheme.name().to_string(),
                    c.sensing.kappa.to_string(),
                    c.sensing.n_g.to_string(),
                    num(t_e),
                    num(theta),
                    num(d.t_q),
                    num(d.p_f),
                    num(d.p_d),
                ]
            }))
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    // unreachable detection targets leave no row
    Ok(rows.into_iter().flatten().collect())
}

fn chain_rows(cfg: &ExperimentConfig, values: &[f64], var: &str) -> Rows {
    cross(values, &cfg.variants)
        .into_par_iter()
        .map(|(_, v, variant)| {
            let c = cfg.at(v);
            let ctx = format!("chain at {var} = {v}, {variant}");
            let det = detection(&c, &ctx)?;
            let t = analyze(&c.scene, &variant, &det).map_err(model(ctx))?;
            Ok(vec![
                num(v),
                variant.to_string(),
                num(det.p_d),
                num(det.p_f),
                num(det.t_q),
                num(t.r),
                num(t.xi),
                num(t.r_t),
                t.feasible.to_string(),
            ])
        })
        .collect()
}

fn simulate_rows(cfg: &ExperimentConfig, values: &[f64], var: &str) -> Rows {
    let per_row = cross(values, &cfg.variants)
        .into_par_iter()
        .map(|(k, v, variant)| {
            let c = cfg.at(v);
            let ctx = format!("simulate at {var} = {v}, {variant}");
            let det = detection(&c, &ctx)?;
            let (est, rep) = simulate(&c, variant, det, cfg.run.seed + k as u64, &ctx)?;
            let head = [num(v), variant.to_string()];
            Ok(match cfg.run.per_batch {
                true => est
                    .batch_means
                    .iter()
                    .enumerate()
                    .map(|(b, m)| {
                        let mut r = head.to_vec();
                        r.extend([b.to_string(), num(*m)]);
                        r
                    })
                    .collect(),
                false => {
                    let mut r = head.to_vec();
                    r.extend([
                        num(est.mean),
                        num(est.ci_half_width),
                        est.batches.to_string(),
                        est.events_per_batch.to_string(),
                        est.warmup.to_string(),
                        num(rep.buffered_fraction),
                        num(rep.mean_utilized),
                    ]);
                    vec![r]
                }
            })
        })
        .collect::<Result<Vec<Vec<Vec<String>>>, BenchError>>()?;
    Ok(per_row.into_iter().flatten().collect())
}

fn compare_rows(cfg: &ExperimentConfig, values: &[f64], var: &str) -> Rows {
    let variant = cfg.variants[0];
    values
        .par_iter()
        .enumerate()
        .map(|(k, v)| {
            let c = cfg.at(*v);
            let ctx = format!("compare at {var} = {v}, {variant}");
            let det = detection(&c, &ctx)?;
            let analytic = analyze(&c.scene, &variant, &det)
                .map_err(model(ctx.clone()))?
                .r_t;
            let (est, _) = simulate(&c, variant, det, cfg.run.seed + k as u64, &ctx)?;
            Ok(vec![
                num(*v),
                num(analytic),
                num(est.mean),
                num(est.ci_half_width),
                if est.contains(analytic) {
                    WITHIN
                } else {
                    OUTSIDE
                }
                .to_string(),
            ])
        })
        .collect()
}

fn optimize_rows(cfg: &ExperimentConfig, values: &[f64], var: &str) -> Rows {
    let per_job = cross(values, &cfg.variants)
        .into_par_iter()
        .map(|(_, v, variant)| {
            let c = cfg.at(v);
            let ctx = format!("optimize at {var} = {v}, {variant}");
            let res = optimize(&c.grid(), &c.scene, &variant, &design(&c, c.sensing.scheme))
                .map_err(model(ctx))?;
            Ok(res
                .frontier
                .iter()
                .map(|p| {
                    vec![
                        num(v),
                        variant.to_string(),
                        p.kappa.to_string(),
                        num(p.t_e),
                        p.n_g.to_string(),
                        num(p.p_f_target),
                        num(p.theta),
                        num(p.t_q),
                        num(p.t_d),
                        num(p.p_d),
                        num(p.p_f),
                        num(p.r),
                        num(p.xi),
                        num(p.r_t),
                        u8::from(*p == res.best).to_string(),
                    ]
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    Ok(per_job.into_iter().flatten().collect())
}
