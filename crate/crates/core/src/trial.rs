//! Simulated pick-and-drop trials with the deadband grip controller.
//!
//! Each tick senses the peduncle contact through the skin surrogate, turns
//! the features into a force estimate with the calibration model, and feeds
//! that estimate to [`controller_step`]. Trials run strictly sequentially;
//! a campaign runs its trials as independent work items.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calib::{predict, RegressionModel};
use crate::grip::{controller_step, deadband_status, ControllerConfig, ControllerState, DeadbandStatus, STANDARD_GRAVITY};
use crate::rng::{derive_seed, rng_from};
use crate::skin::{contact_force, SkinSim};
use crate::{Error, Execution, Result};

/// Ticks allowed before transport must have started.
pub const MAX_SETTLE_TICKS: usize = 500;
/// Ticks logged after the gripper opens.
pub const RELEASE_TICKS: usize = 3;
/// Force above which the peduncle counts as touched when segmenting.
pub const CONTACT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrawberrySample {
    pub id: u32,
    /// Weight force, N.
    pub weight: f64,
    /// Peduncle diameter, mm.
    pub peduncle_diameter: f64,
}

impl StrawberrySample {
    pub fn validate(&self) -> Result<()> {
        if !(self.weight > 0.0) || !(self.peduncle_diameter > 0.0) {
            return Err(Error::Config(format!(
                "sample {} needs weight > 0 and peduncle_diameter > 0",
                self.id
            )));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.weight / STANDARD_GRAVITY
    }
}

/// The five strawberries used for the gripping trials.
pub fn strawberry_fixture() -> Vec<StrawberrySample> {
    [(1, 0.084, 1.24), (2, 0.111, 1.38), (3, 0.155, 1.88), (4, 0.176, 1.90), (5, 0.181, 2.29)]
        .into_iter()
        .map(|(id, weight, peduncle_diameter)| StrawberrySample {
            id,
            weight,
            peduncle_diameter,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    /// Control period, s.
    pub tick: f64,
    /// Grip width at the start of the approach, mm.
    pub initial_width: f64,
    /// Skin indentation per mm of width closed past contact.
    pub compliance: f64,
    pub transport_duration: f64,
    /// Swing disturbance amplitude during transport, N.
    pub swing_amp: f64,
    pub swing_freq: f64,
    pub seed: u64,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            tick: 0.02,
            initial_width: 20.0,
            compliance: 0.0625,
            transport_duration: 4.0,
            swing_amp: 0.15,
            swing_freq: 1.5,
            seed: 0,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tick > 0.0) {
            return Err(Error::Config("tick must be > 0".into()));
        }
        if !(self.compliance > 0.0 && self.compliance <= 0.5) {
            return Err(Error::Config("compliance must lie in (0, 0.5]".into()));
        }
        if !(self.swing_amp >= 0.0) || !(self.swing_freq >= 0.0) || !(self.transport_duration >= 0.0) {
            return Err(Error::Config(
                "swing_amp, swing_freq and transport_duration must be >= 0".into(),
            ));
        }
        Ok(())
    }

    fn transport_ticks(&self) -> usize {
        (self.transport_duration / self.tick).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Approach,
    Grip,
    Transport,
    Release,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub phase: Phase,
    pub f_m: f64,
    pub f_true: f64,
    pub g_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    pub sample_id: u32,
    pub seed: u64,
    pub records: Vec<TickRecord>,
}

/// Tick indices of the three force-profile sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseBoundaries {
    /// First tick with measurable contact force.
    pub s1: usize,
    /// First transport tick.
    pub s2: usize,
    /// First release tick.
    pub s3: usize,
}

/// Everything a trial needs besides the sample and its seed.
#[derive(Debug, Clone, Copy)]
pub struct TrialSetup<'a> {
    pub model: &'a RegressionModel,
    pub trial: &'a TrialConfig,
    pub controller: &'a ControllerConfig,
    pub sim: &'a SkinSim,
    pub slip: SlipParams,
}

/// Skin subsection the peduncle lands on for a given trial seed.
pub fn contact_subsection(seed: u64, n_subsections: usize) -> usize {
    use rand::Rng;
    rng_from(derive_seed(seed, &[0x5ec7])).random_range(0..n_subsections)
}

pub fn run_trial(sample: &StrawberrySample, setup: &TrialSetup<'_>) -> Result<TrialLog> {
    let TrialSetup {
        model,
        trial: cfg,
        controller: ctrl,
        sim,
        ..
    } = *setup;
    sample.validate()?;
    cfg.validate()?;
    ctrl.validate()?;
    let subsection = contact_subsection(cfg.seed, sim.geometry.n_subsections);
    let mut state = ControllerState::new(cfg.initial_width.clamp(ctrl.g_min, ctrl.g_max));
    let mut phase = Phase::Approach;
    let mut records = Vec::new();
    let mut transport_left = cfg.transport_ticks();
    let mut tick = 0usize;

    let measure = |g_t: f64, t: f64, phase: Phase, tick: usize| -> Result<(f64, f64)> {
        let depth = cfg.compliance * (sample.peduncle_diameter - g_t).max(0.0);
        let mut f_true = contact_force(depth, &sim.contact)?;
        if depth > 0.0 && phase == Phase::Transport {
            f_true = (f_true + cfg.swing_amp * (2.0 * PI * cfg.swing_freq * t).sin()).max(0.0);
        }
        // The skin sees the indentation only; swing loads the peduncle, not the fingers.
        let tick_seed = derive_seed(cfg.seed, &[u64::from(sample.id), tick as u64]);
        let (features, _) = sim.sense(subsection, depth, tick_seed)?;
        Ok((f_true, predict(model, &features)?))
    };

    loop {
        let t = tick as f64 * cfg.tick;
        if phase == Phase::Approach && sample.peduncle_diameter > state.g_t {
            phase = Phase::Grip;
        }
        if phase == Phase::Transport && transport_left == 0 {
            break;
        }
        let (f_true, f_m) = measure(state.g_t, t, phase, tick)?;
        if f_true > ctrl.f_abort {
            return Err(Error::Abort {
                force: f_true,
                limit: ctrl.f_abort,
            });
        }
        records.push(TickRecord {
            t,
            phase,
            f_m,
            f_true,
            g_t: state.g_t,
        });
        let settled = deadband_status(f_m, ctrl) == DeadbandStatus::Within;
        state = controller_step(&state, f_m, ctrl)?;
        tick += 1;
        match phase {
            Phase::Transport => transport_left -= 1,
            Phase::Grip if settled => phase = Phase::Transport,
            _ => {}
        }
        if phase != Phase::Transport && tick >= MAX_SETTLE_TICKS {
            return Err(Error::Timeout { ticks: MAX_SETTLE_TICKS });
        }
    }

    // Fingers open fully; the peduncle is released immediately.
    state.g_t = ctrl.g_max;
    for _ in 0..RELEASE_TICKS {
        let t = tick as f64 * cfg.tick;
        let (f_true, f_m) = measure(state.g_t, t, Phase::Release, tick)?;
        records.push(TickRecord {
            t,
            phase: Phase::Release,
            f_m,
            f_true,
            g_t: state.g_t,
        });
        tick += 1;
    }
    Ok(TrialLog {
        sample_id: sample.id,
        seed: cfg.seed,
        records,
    })
}

pub fn segment_phases(log: &TrialLog) -> Result<PhaseBoundaries> {
    let first = |pred: &dyn Fn(&TickRecord) -> bool, what: &str| {
        log.records
            .iter()
            .position(pred)
            .ok_or_else(|| Error::Segmentation(format!("no {what} tick in log")))
    };
    let s1 = first(&|r| r.f_true > CONTACT_THRESHOLD, "contact")?;
    let s2 = first(&|r| r.phase == Phase::Transport, "transport")?;
    let s3 = first(&|r| r.phase == Phase::Release, "release")?;
    if !(s2 < s3) {
        return Err(Error::Segmentation(format!("transport at {s2} does not precede release at {s3}")));
    }
    Ok(PhaseBoundaries { s1, s2, s3 })
}

/// Mean `|f_m - f_d|` over the hold window `[S2, S3)`.
pub fn trial_mae(log: &TrialLog, f_d: f64) -> Result<f64> {
    let b = segment_phases(log)?;
    let window = &log.records[b.s2..b.s3];
    if window.is_empty() {
        return Err(Error::Evaluation("empty hold window".into()));
    }
    Ok(window.iter().map(|r| (r.f_m - f_d).abs()).sum::<f64>() / window.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlipParams {
    pub mu: f64,
    pub safety: f64,
    pub a_max: f64,
}

impl Default for SlipParams {
    fn default() -> Self {
        SlipParams {
            mu: 0.5,
            safety: 2.0,
            a_max: 1.0,
        }
    }
}

/// Hold-window ticks where the two-finger grip `2 f_m` is below what the
/// friction sizing rule requires for this sample.
pub fn slip_check(log: &TrialLog, sample: &StrawberrySample, p: &SlipParams) -> Result<Vec<usize>> {
    let b = segment_phases(log)?;
    let required = sample.mass() * (STANDARD_GRAVITY + p.a_max) * p.safety / p.mu;
    Ok((b.s2..b.s3).filter(|&i| 2.0 * log.records[i].f_m < required).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub sample_id: u32,
    pub trial: usize,
    pub reason: String,
    pub aborted: bool,
}

/// Table-shaped campaign summary: one row per sample, one column per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub format_version: u32,
    pub seed: u64,
    pub f_d: f64,
    pub sample_ids: Vec<u32>,
    pub trials_per_sample: usize,
    pub mae: Vec<Vec<Option<f64>>>,
    pub sample_average: Vec<Option<f64>>,
    pub max_sample_average: Option<f64>,
    pub max_trial_mae: Option<f64>,
    pub slip_events: Vec<Vec<usize>>,
    pub failures: Vec<TrialFailure>,
}

impl CampaignReport {
    pub fn aborts(&self) -> usize {
        self.failures.iter().filter(|f| f.aborted).count()
    }

    pub fn total_slip_events(&self) -> usize {
        self.slip_events.iter().flatten().sum()
    }
}

#[derive(Debug, Clone)]
pub struct TrialRun {
    pub sample_id: u32,
    pub trial: usize,
    pub log: Option<TrialLog>,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub report: CampaignReport,
    pub runs: Vec<TrialRun>,
}

pub fn trial_seed(seed: u64, sample_id: u32, trial: usize) -> u64 {
    derive_seed(seed, &[u64::from(sample_id), trial as u64])
}

pub fn run_campaign(
    samples: &[StrawberrySample],
    trials_per_sample: usize,
    setup: &TrialSetup<'_>,
    seed: u64,
) -> Result<Campaign> {
    run_campaign_with(samples, trials_per_sample, setup, seed, Execution::default())
}

pub fn run_campaign_with(
    samples: &[StrawberrySample],
    trials_per_sample: usize,
    setup: &TrialSetup<'_>,
    seed: u64,
    exec: Execution,
) -> Result<Campaign> {
    if samples.is_empty() {
        return Err(Error::Config("campaign needs at least one sample".into()));
    }
    if trials_per_sample == 0 {
        return Err(Error::Config("trials_per_sample must be >= 1".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..samples.len())
        .flat_map(|s| (0..trials_per_sample).map(move |t| (s, t)))
        .collect();
    let slip = setup.slip;
    let f_d = setup.controller.f_d;
    let outcomes = exec.map(&jobs, |&(s, t)| {
        let sample = &samples[s];
        let trial = TrialConfig {
            seed: trial_seed(seed, sample.id, t),
            ..*setup.trial
        };
        let log = run_trial(sample, &TrialSetup { trial: &trial, ..*setup })?;
        let mae = trial_mae(&log, f_d)?;
        let slips = slip_check(&log, sample, &slip)?.len();
        Ok::<_, Error>((log, mae, slips))
    });

    let mut mae = vec![vec![None; trials_per_sample]; samples.len()];
    let mut slip_events = vec![vec![0; trials_per_sample]; samples.len()];
    let mut failures = Vec::new();
    let mut runs = Vec::with_capacity(jobs.len());
    for (&(s, t), outcome) in jobs.iter().zip(outcomes) {
        let sample_id = samples[s].id;
        match outcome {
            Ok((log, m, slips)) => {
                mae[s][t] = Some(m);
                slip_events[s][t] = slips;
                runs.push(TrialRun {
                    sample_id,
                    trial: t,
                    log: Some(log),
                });
            }
            Err(e) => {
                failures.push(TrialFailure {
                    sample_id,
                    trial: t,
                    aborted: matches!(e, Error::Abort { .. }),
                    reason: e.to_string(),
                });
                runs.push(TrialRun {
                    sample_id,
                    trial: t,
                    log: None,
                });
            }
        }
    }
    let sample_average: Vec<Option<f64>> = mae
        .iter()
        .map(|row| {
            let ok: Vec<f64> = row.iter().flatten().copied().collect();
            (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64)
        })
        .collect();
    let max_of = |xs: &mut dyn Iterator<Item = f64>| xs.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let max_sample_average = max_of(&mut sample_average.iter().flatten().copied());
    let max_trial_mae = max_of(&mut mae.iter().flatten().flatten().copied());
    Ok(Campaign {
        report: CampaignReport {
            format_version: 1,
            seed,
            f_d,
            sample_ids: samples.iter().map(|s| s.id).collect(),
            trials_per_sample,
            mae,
            sample_average,
            max_sample_average,
            max_trial_mae,
            slip_events,
            failures,
        },
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calib::{generate_dataset, train_model, ModelKind, ModelSpec, SweepProtocol};
    use std::sync::OnceLock;

    fn model() -> &'static (SkinSim, RegressionModel) {
        static M: OnceLock<(SkinSim, RegressionModel)> = OnceLock::new();
        M.get_or_init(|| {
            let sim = SkinSim::default();
            let p = SweepProtocol {
                repeats: 3,
                ..SweepProtocol::default()
            };
            let ds = generate_dataset(&p, &sim, 11).unwrap();
            let m = train_model(&ds, &ModelSpec::new(ModelKind::GpExponential)).unwrap();
            (sim, m)
        })
    }

    fn run(sample: &StrawberrySample, trial: TrialConfig, ctrl: ControllerConfig) -> Result<TrialLog> {
        let (sim, m) = model();
        run_trial(
            sample,
            &TrialSetup {
                model: m,
                trial: &trial,
                controller: &ctrl,
                sim,
                slip: SlipParams::default(),
            },
        )
    }

    #[test]
    fn fixture_matches_table() {
        let f = strawberry_fixture();
        assert_eq!(f.len(), 5);
        assert_eq!(f[2], StrawberrySample { id: 3, weight: 0.155, peduncle_diameter: 1.88 });
        assert!((f[0].mass() - 0.084 / 9.81).abs() < 1e-15);
    }

    #[test]
    fn trial_log_shape() {
        let ctrl = ControllerConfig::default();
        for sample in strawberry_fixture() {
            let log = run(&sample, TrialConfig { seed: 9, ..TrialConfig::default() }, ctrl).unwrap();
            let b = segment_phases(&log).unwrap();
            assert!(b.s1 <= b.s2 && b.s2 < b.s3);
            assert_eq!(b.s3 - b.s2, 200);
            assert_eq!(log.records.len() - b.s3, RELEASE_TICKS);
            let last_grip = &log.records[b.s2 - 1];
            assert_eq!(last_grip.phase, Phase::Grip);
            assert_eq!(deadband_status(last_grip.f_m, &ctrl), DeadbandStatus::Within);
            assert!(log.records.windows(2).all(|w| w[0].phase <= w[1].phase));
            for w in log.records[..b.s3].windows(2) {
                let d = (w[1].g_t - w[0].g_t).abs();
                assert!(d == 0.0 || d == ctrl.sigma_h, "width step {d}");
            }
            for r in &log.records[b.s3..] {
                assert_eq!((r.f_true, r.g_t), (0.0, ctrl.g_max));
            }
            assert!(log.records.iter().all(|r| r.f_true <= ctrl.f_abort));
        }
    }

    #[test]
    fn trials_are_seeded() {
        let s = strawberry_fixture()[1];
        let ctrl = ControllerConfig::default();
        let a = run(&s, TrialConfig { seed: 4, ..TrialConfig::default() }, ctrl).unwrap();
        let b = run(&s, TrialConfig { seed: 4, ..TrialConfig::default() }, ctrl).unwrap();
        let c = run(&s, TrialConfig { seed: 5, ..TrialConfig::default() }, ctrl).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stiff_skin_with_narrow_band_times_out() {
        let ctrl = ControllerConfig { epsilon: 0.01, ..ControllerConfig::default() };
        let trial = TrialConfig { compliance: 0.5, ..TrialConfig::default() };
        let err = run(&strawberry_fixture()[2], trial, ctrl).unwrap_err();
        assert!(matches!(err, Error::Timeout { ticks: MAX_SETTLE_TICKS }));
    }

    #[test]
    fn overshoot_aborts() {
        let ctrl = ControllerConfig { f_abort: 2.2, ..ControllerConfig::default() };
        let trial = TrialConfig { compliance: 0.5, ..TrialConfig::default() };
        let err = run(&strawberry_fixture()[0], trial, ctrl).unwrap_err();
        assert!(matches!(err, Error::Abort { .. }), "{err}");
    }

    #[test]
    fn mae_and_slip() {
        let s = strawberry_fixture()[4];
        let log = run(&s, TrialConfig::default(), ControllerConfig::default()).unwrap();
        let mae = trial_mae(&log, 2.0).unwrap();
        assert!(mae < 0.2, "{mae}");
        assert!(slip_check(&log, &s, &SlipParams::default()).unwrap().is_empty());
        let heavy = StrawberrySample { weight: 1.0, ..s };
        let slips = slip_check(&log, &heavy, &SlipParams::default()).unwrap();
        assert_eq!(slips.len(), 200);
    }

    #[test]
    fn segmentation_needs_all_phases() {
        let mut log = run(&strawberry_fixture()[0], TrialConfig::default(), ControllerConfig::default()).unwrap();
        log.records.retain(|r| r.phase != Phase::Release);
        assert!(matches!(segment_phases(&log), Err(Error::Segmentation(_))));
        assert!(trial_mae(&log, 2.0).is_err());
    }

    #[test]
    fn campaign_shape_and_execution_agree() {
        let (sim, m) = model();
        let trial = TrialConfig::default();
        let ctrl = ControllerConfig::default();
        let setup = TrialSetup { model: m, trial: &trial, controller: &ctrl, sim, slip: SlipParams::default() };
        let samples = &strawberry_fixture()[..2];
        let a = run_campaign_with(samples, 2, &setup, 3, Execution::Sequential).unwrap();
        let b = run_campaign_with(samples, 2, &setup, 3, Execution::Parallel).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.mae.len(), 2);
        assert!(a.report.failures.is_empty());
        assert_eq!(a.runs.len(), 4);
        assert!(run_campaign(samples, 0, &setup, 3).is_err());
    }
}
