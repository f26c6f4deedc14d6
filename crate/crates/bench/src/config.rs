//! Experiment configuration: TOML text in, validated settings out.

use std::path::PathBuf;

use clap::ValueEnum;
use osa_core::chain::{ControlChannel, ErrorModel, MacVariant};
use osa_core::optimize::SearchGrid;
use osa_core::phy::PhyParams;
use osa_core::scene::{ModelKind, RadioScene};
use osa_core::sensing::{group_layout, FusionConfig, ReportingScheme};
use osa_core::sim::PuTraffic;
use serde::{Deserialize, Serialize};

use crate::BenchError;

/// Bits per configured kilobyte.
pub const BITS_PER_KB: f64 = 8000.0;

/// What an experiment produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// False alarm against quiet time per reporting scheme.
    Curve,
    /// Analytic throughput per MAC variant.
    Chain,
    /// Monte Carlo throughput with confidence intervals.
    Simulate,
    /// Throughput-maximizing sensing parameters.
    Optimize,
    /// Analytic and simulated throughput side by side.
    Compare,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Curve => "curve",
            Self::Chain => "chain",
            Self::Simulate => "simulate",
            Self::Optimize => "optimize",
            Self::Compare => "compare",
        }
    }
}

/// The quantity varied across the rows of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    QP,
    DKb,
    TP,
    Users,
    Channels,
    PE,
    GammaDb,
    Kappa,
    NG,
    TE,
    PDMin,
}

impl SweepVar {
    const ALL: [Self; 11] = [
        Self::QP,
        Self::DKb,
        Self::TP,
        Self::Users,
        Self::Channels,
        Self::PE,
        Self::GammaDb,
        Self::Kappa,
        Self::NG,
        Self::TE,
        Self::PDMin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::QP => "q_p",
            Self::DKb => "d_kb",
            Self::TP => "t_p",
            Self::Users => "N",
            Self::Channels => "M",
            Self::PE => "p_e",
            Self::GammaDb => "gamma_db",
            Self::Kappa => "kappa",
            Self::NG => "n_g",
            Self::TE => "t_e",
            Self::PDMin => "p_d_min",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    fn is_count(self) -> bool {
        matches!(self, Self::Users | Self::Channels | Self::Kappa | Self::NG)
    }
}

/// A detection outcome imposed instead of derived from the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedDetection {
    pub p_f: f64,
    pub t_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensingConfig {
    /// Scheme for chain, simulate, compare and optimize runs.
    pub scheme: ReportingScheme,
    /// Schemes drawn in curve mode.
    pub curve_schemes: Vec<ReportingScheme>,
    /// `None` means one channel at a time, `1/M`.
    pub alpha: Option<f64>,
    pub n_g: usize,
    pub kappa: usize,
    /// Per-event sensing time, microseconds.
    pub t_e: f64,
    /// Sensing times drawn in curve mode; defaults to `t_e` alone.
    pub t_e_sweep: Option<Vec<f64>>,
    pub p_d_min: f64,
    /// Per-node false alarm seed for the threshold search.
    pub p_f_seed: f64,
    pub fixed: Option<FixedDetection>,
    pub kappa_grid: Option<Vec<usize>>,
    pub t_e_grid: Option<Vec<f64>>,
    pub n_g_grid: Option<Vec<usize>>,
    pub p_f_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub batches: usize,
    pub events_per_batch: usize,
    pub warmup: usize,
    pub out: Option<PathBuf>,
    pub sweep: SweepVar,
    /// `None` runs the configured value alone.
    pub values: Option<Vec<f64>>,
    pub traffic: PuTraffic,
    /// Emit one row per batch instead of one per estimate.
    pub per_batch: bool,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scene: RadioScene,
    /// `p` was set explicitly, so it does not follow `N` in sweeps.
    pub explicit_p: bool,
    pub sensing: SensingConfig,
    pub variants: Vec<MacVariant>,
    pub run: RunConfig,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    sensing: RawSensing,
    mac: RawMac,
    run: RawRun,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawScenario {
    #[serde(skip_serializing_if = "Option::is_none")]
    network: Option<String>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    m: Option<usize>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d_kb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_d_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSensing {
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schemes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_g: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_e: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_e_sweep: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_d_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_f_seed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_p_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fixed_t_q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_e_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_g_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_f_grid: Option<Vec<f64>>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawMac {
    #[serde(skip_serializing_if = "Option::is_none")]
    control: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buffering: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    switching: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variants: Option<Vec<String>>,
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    batches: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    events_per_batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    warmup: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    traffic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_batch: Option<bool>,
}

fn core_message(e: osa_core::Error) -> String {
    match e {
        osa_core::Error::Config(m) | osa_core::Error::Domain(m) => m,
        other => other.to_string(),
    }
}

/// Collects a conversion failure and carries on with a placeholder.
fn take<T>(r: Result<T, String>, fallback: T, problems: &mut Vec<String>) -> T {
    r.unwrap_or_else(|e| {
        problems.push(e);
        fallback
    })
}

fn parse_variant(
    label: &str,
    control: ControlChannel,
    em: ErrorModel,
) -> Result<MacVariant, String> {
    let b = label.as_bytes();
    let bit = |c: u8| match c {
        b'0' => Some(false),
        b'1' => Some(true),
        _ => None,
    };
    match b {
        [b'B' | b'b', x, b'S' | b's', y] => match (bit(*x), bit(*y)) {
            (Some(buf), Some(sw)) => Ok(MacVariant::new(control, buf, sw).with_error_model(em)),
            _ => Err(format!("unknown MAC variant '{label}'")),
        },
        _ => Err(format!("unknown MAC variant '{label}'")),
    }
}

/// Parses and validates `text`, reporting every violation found.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, BenchError> {
    let cfg = ExperimentConfig::from_toml(text)?;
    cfg.validate()?;
    Ok(cfg)
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ExperimentConfig {
    /// Resolves `text` against the defaults without cross-field checks.
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| BenchError::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        Self::resolve(raw)
    }

    fn resolve(raw: RawConfig) -> Result<Self, BenchError> {
        let mut problems = Vec::new();
        let s = raw.scenario;
        let mut scene = match s.network.as_deref() {
            None | Some("small") => RadioScene::small(),
            Some("large") => RadioScene::large(),
            Some(other) => {
                problems.push(format!("unknown network '{other}' (small or large)"));
                RadioScene::small()
            }
        };
        if let Some(m) = s.m {
            scene.channels = m;
        }
        if let Some(n) = s.n {
            scene = scene.with_users(n);
        }
        let fields = [
            (&mut scene.rate_mbps, s.c),
            (&mut scene.bandwidth_mhz, s.b),
            (&mut scene.q_p, s.q_p),
            (&mut scene.snr_db, s.gamma_db),
            (&mut scene.p_e, s.p_e),
            (&mut scene.access_prob, s.p),
            (&mut scene.slot_us, s.t_t),
            (&mut scene.switch_us, s.t_p),
            (&mut scene.max_delay_us, s.t_d_max),
        ];
        for (slot, v) in fields {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(kb) = s.d_kb {
            scene.packet_bits = kb * BITS_PER_KB;
        }
        if let Some(m) = s.model {
            scene.model = take(
                m.parse().map_err(core_message),
                ModelKind::Micro,
                &mut problems,
            );
        }

        let r = raw.sensing;
        let scheme_of = |name: &str| name.parse::<ReportingScheme>().map_err(core_message);
        let scheme = match r.scheme {
            Some(n) => take(scheme_of(&n), ReportingScheme::Ttdma, &mut problems),
            None => ReportingScheme::Ttdma,
        };
        let curve_schemes = match r.schemes {
            Some(list) => list
                .iter()
                .map(|n| take(scheme_of(n), ReportingScheme::Ttdma, &mut problems))
                .collect(),
            None => ReportingScheme::ALL.to_vec(),
        };
        let fixed = match (r.fixed_p_f, r.fixed_t_q) {
            (Some(p_f), Some(t_q)) => Some(FixedDetection { p_f, t_q }),
            (None, None) => None,
            _ => {
                problems.push("fixed_p_f and fixed_t_q must be given together".into());
                None
            }
        };
        let sensing = SensingConfig {
            scheme,
            curve_schemes,
            alpha: r.alpha,
            n_g: r.n_g.unwrap_or(1),
            kappa: r.kappa.unwrap_or(1),
            t_e: r.t_e.unwrap_or(100.0),
            t_e_sweep: r.t_e_sweep,
            p_d_min: r.p_d_min.unwrap_or(0.99),
            p_f_seed: r.p_f_seed.unwrap_or(0.1),
            fixed,
            kappa_grid: r.kappa_grid,
            t_e_grid: r.t_e_grid,
            n_g_grid: r.n_g_grid,
            p_f_grid: r.p_f_grid,
        };

        let m = raw.mac;
        let control = match m.control {
            Some(c) => take(
                c.parse().map_err(core_message),
                ControlChannel::DccPuFreeControl,
                &mut problems,
            ),
            None => ControlChannel::DccPuFreeControl,
        };
        let em = match m.error_model {
            Some(e) => take(
                e.parse().map_err(core_message),
                ErrorModel::E0,
                &mut problems,
            ),
            None => ErrorModel::E0,
        };
        let variants = match m.variants {
            Some(labels) => {
                if m.buffering.is_some() || m.switching.is_some() {
                    problems.push("give either variants or buffering/switching, not both".into());
                }
                labels
                    .iter()
                    .filter_map(|l| {
                        parse_variant(l, control, em)
                            .map_err(|e| problems.push(e))
                            .ok()
                    })
                    .collect()
            }
            None => vec![MacVariant::new(
                control,
                m.buffering.unwrap_or(false),
                m.switching.unwrap_or(false),
            )
            .with_error_model(em)],
        };

        let u = raw.run;
        let mode = match u.mode {
            Some(name) => take(
                Mode::from_str(&name, true).map_err(|_| format!("unknown mode '{name}'")),
                Mode::Chain,
                &mut problems,
            ),
            None => Mode::Chain,
        };
        let sweep = match u.sweep {
            Some(name) => take(
                SweepVar::parse(&name).ok_or_else(|| format!("cannot sweep '{name}'")),
                SweepVar::QP,
                &mut problems,
            ),
            None => SweepVar::QP,
        };
        let traffic = match u.traffic {
            Some(code) => take(
                PuTraffic::parse(&code).map_err(core_message),
                PuTraffic::GEOMETRIC,
                &mut problems,
            ),
            None => PuTraffic::GEOMETRIC,
        };
        let run = RunConfig {
            mode,
            seed: u.seed.unwrap_or(1),
            batches: u.batches.unwrap_or(100),
            events_per_batch: u.events_per_batch.unwrap_or(1000),
            warmup: u.warmup.unwrap_or(100),
            out: u.out.map(PathBuf::from),
            sweep,
            values: u.values,
            traffic,
            per_batch: u.per_batch.unwrap_or(false),
        };

        if !problems.is_empty() {
            return Err(BenchError::Invalid(problems));
        }
        Ok(Self {
            scene,
            explicit_p: s.p.is_some(),
            sensing,
            variants,
            run,
        })
    }

    /// Normalized TOML with every resolved field spelled out.
    pub fn to_toml(&self) -> String {
        let sc = &self.scene;
        let se = &self.sensing;
        let names = |v: &[ReportingScheme]| v.iter().map(|s| s.name().to_string()).collect();
        let first = self.variants.first().copied();
        let raw = RawConfig {
            scenario: RawScenario {
                network: None,
                m: Some(sc.channels),
                n: Some(sc.users),
                c: Some(sc.rate_mbps),
                b: Some(sc.bandwidth_mhz),
                d_kb: Some(sc.packet_bits / BITS_PER_KB),
                q_p: Some(sc.q_p),
                gamma_db: Some(sc.snr_db),
                p_e: Some(sc.p_e),
                p: self.explicit_p.then_some(sc.access_prob),
                t_t: Some(sc.slot_us),
                t_p: Some(sc.switch_us),
                t_d_max: Some(sc.max_delay_us),
                model: Some(sc.model.to_string()),
            },
            sensing: RawSensing {
                scheme: Some(se.scheme.name().into()),
                schemes: Some(names(&se.curve_schemes)),
                alpha: se.alpha,
                n_g: Some(se.n_g),
                kappa: Some(se.kappa),
                t_e: Some(se.t_e),
                t_e_sweep: se.t_e_sweep.clone(),
                p_d_min: Some(se.p_d_min),
                p_f_seed: Some(se.p_f_seed),
                fixed_p_f: se.fixed.map(|f| f.p_f),
                fixed_t_q: se.fixed.map(|f| f.t_q),
                kappa_grid: se.kappa_grid.clone(),
                t_e_grid: se.t_e_grid.clone(),
                n_g_grid: se.n_g_grid.clone(),
                p_f_grid: se.p_f_grid.clone(),
            },
            mac: RawMac {
                control: first.map(|v| v.control.name().into()),
                buffering: None,
                switching: None,
                error_model: first.map(|v| format!("{:?}", v.error_model)),
                variants: Some(self.variants.iter().map(MacVariant::label).collect()),
            },
            run: RawRun {
                mode: Some(self.run.mode.name().into()),
                seed: Some(self.run.seed),
                batches: Some(self.run.batches),
                events_per_batch: Some(self.run.events_per_batch),
                warmup: Some(self.run.warmup),
                out: self.run.out.as_ref().map(|p| p.display().to_string()),
                sweep: Some(self.run.sweep.name().into()),
                values: self.run.values.clone(),
                traffic: Some(self.run.traffic.to_string()),
                per_batch: Some(self.run.per_batch),
            },
        };
        toml::to_string(&raw).expect("plain tables always serialize")
    }

    /// The values the sweep visits.
    pub fn sweep_values(&self) -> Vec<f64> {
        self.run
            .values
            .clone()
            .unwrap_or_else(|| vec![self.current(self.run.sweep)])
    }

    fn current(&self, var: SweepVar) -> f64 {
        let s = &self.scene;
        match var {
            SweepVar::QP => s.q_p,
            SweepVar::DKb => s.packet_bits / BITS_PER_KB,
            SweepVar::TP => s.switch_us,
            SweepVar::Users => s.users as f64,
            SweepVar::Channels => s.channels as f64,
            SweepVar::PE => s.p_e,
            SweepVar::GammaDb => s.snr_db,
            SweepVar::Kappa => self.sensing.kappa as f64,
            SweepVar::NG => self.sensing.n_g as f64,
            SweepVar::TE => self.sensing.t_e,
            SweepVar::PDMin => self.sensing.p_d_min,
        }
    }

    /// This configuration with the swept variable set to `value`.
    pub fn at(&self, value: f64) -> Self {
        let mut c = self.clone();
        let count = value as usize;
        match self.run.sweep {
            SweepVar::QP => c.scene.q_p = value,
            SweepVar::DKb => c.scene.packet_bits = value * BITS_PER_KB,
            SweepVar::TP => c.scene.switch_us = value,
            SweepVar::Users if self.explicit_p => c.scene.users = count,
            SweepVar::Users => c.scene = c.scene.with_users(count),
            SweepVar::Channels => c.scene.channels = count,
            SweepVar::PE => c.scene.p_e = value,
            SweepVar::GammaDb => c.scene.snr_db = value,
            SweepVar::Kappa => c.sensing.kappa = count,
            SweepVar::NG => c.sensing.n_g = count,
            SweepVar::TE => c.sensing.t_e = value,
            SweepVar::PDMin => c.sensing.p_d_min = value,
        }
        c
    }

    pub fn alpha(&self) -> f64 {
        self.sensing
            .alpha
            .unwrap_or(1.0 / self.scene.channels.max(1) as f64)
    }

    pub fn fusion(&self) -> FusionConfig {
        FusionConfig {
            kappa: self.sensing.kappa,
            p_e: self.scene.p_e,
            q_p: self.scene.q_p,
        }
    }

    /// Detector parameters at sensing time `t_e` with a zero threshold.
    pub fn phy(&self, t_e: f64) -> osa_core::Result<PhyParams> {
        PhyParams::new(
            t_e,
            self.alpha(),
            self.scene.channels,
            self.scene.bandwidth_mhz,
            self.scene.snr_db,
            0.0,
        )
    }

    /// Sensing times visited in curve mode.
    pub fn curve_times(&self) -> Vec<f64> {
        self.sensing
            .t_e_sweep
            .clone()
            .unwrap_or_else(|| vec![self.sensing.t_e])
    }

    /// Optimization grid: defaults for the scene with configured overrides.
    pub fn grid(&self) -> SearchGrid {
        let d = SearchGrid::defaults(&self.scene);
        let s = &self.sensing;
        SearchGrid {
            kappa_values: s.kappa_grid.clone().unwrap_or(d.kappa_values),
            t_e_values: s.t_e_grid.clone().unwrap_or(d.t_e_values),
            n_g_values: s.n_g_grid.clone().unwrap_or(d.n_g_values),
            p_f_values: s.p_f_grid.clone().unwrap_or(d.p_f_values),
        }
    }

    /// Checks every cross-field invariant, at every sweep value.
    pub fn validate(&self) -> Result<(), BenchError> {
        let mut problems = Vec::new();
        let run = &self.run;
        if run.batches < 2 {
            problems.push(format!("batches must be >= 2, got {}", run.batches));
        }
        if run.events_per_batch == 0 {
            problems.push("events_per_batch must be >= 1".into());
        }
        if self.variants.is_empty() {
            problems.push("no MAC variant selected".into());
        }
        if run.mode == Mode::Compare && self.variants.len() > 1 {
            problems.push(format!(
                "compare mode takes one MAC variant, got {}",
                self.variants.len()
            ));
        }
        if self.sensing.curve_schemes.is_empty() {
            problems.push("schemes list is empty".into());
        }
        let values = self.sweep_values();
        if values.is_empty() {
            problems.push("sweep values list is empty".into());
        }
        for v in &values {
            if run.sweep.is_count() && !(*v >= 1.0 && v.fract() == 0.0) {
                problems.push(format!(
                    "{} = {v} must be a positive integer",
                    run.sweep.name()
                ));
                continue;
            }
            let prefix = match run.values {
                Some(_) => format!("at {} = {v}: ", run.sweep.name()),
                None => String::new(),
            };
            for p in self.at(*v).point_violations() {
                let msg = format!("{prefix}{p}");
                if !problems.contains(&msg) {
                    problems.push(msg);
                }
            }
        }
        match problems.is_empty() {
            true => Ok(()),
            false => Err(BenchError::Invalid(problems)),
        }
    }

    fn point_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let scene = &self.scene;
        scene.collect_violations(&mut out);
        for v in &self.variants {
            if let Err(e) = v.validate() {
                out.push(core_message(e));
            }
            if scene.model == ModelKind::Macro && (v.buffering || v.switching) {
                out.push(format!(
                    "{}: the macroscopic model covers plain DCC and HCC only",
                    v.label()
                ));
            }
        }
        let mode = self.run.mode;
        if scene.model == ModelKind::Macro && matches!(mode, Mode::Simulate | Mode::Compare) {
            out.push("the simulator covers the microscopic model only".into());
        }
        let s = &self.sensing;
        if !(s.p_d_min > 0.0 && s.p_d_min < 1.0) {
            out.push(format!("p_d_min = {} outside (0, 1)", s.p_d_min));
        }
        if !(s.p_f_seed > 0.0 && s.p_f_seed < 1.0) {
            out.push(format!("p_f_seed = {} outside (0, 1)", s.p_f_seed));
        }
        if let Some(f) = s.fixed {
            if !(0.0..=1.0).contains(&f.p_f) {
                out.push(format!("fixed_p_f = {} outside [0, 1]", f.p_f));
            }
            if !(f.t_q >= 0.0) || !f.t_q.is_finite() {
                out.push(format!("fixed_t_q = {} must be >= 0", f.t_q));
            }
        }
        if scene.channels == 0 || scene.users == 0 {
            return out;
        }
        if mode == Mode::Optimize {
            if let Err(e) = self.grid().validate(scene) {
                out.push(core_message(e));
            }
            return out;
        }
        if s.fixed.is_some() && mode != Mode::Curve {
            return out;
        }
        match group_layout(scene.channels, scene.users, s.n_g) {
            Ok(layout) => {
                if let Err(e) = self.fusion().validate_for(&layout) {
                    out.push(core_message(e));
                }
            }
            Err(e) => out.push(core_message(e)),
        }
        let times = match mode {
            Mode::Curve => self.curve_times(),
            _ => vec![s.t_e],
        };
        for t in times {
            if let Err(e) = self.phy(t) {
                out.push(core_message(e));
            }
        }
        out
    }
}
