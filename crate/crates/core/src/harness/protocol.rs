use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Condition, ProtocolConfig, StructureFactor};
use crate::error::{Error, Result};
use crate::hierarchy::{
    check_causal_closure, classify_regime, LocalOperation, Regime, RuleFingerprint, Trace,
    TraceRecorder,
};
use crate::metarl::{
    error_taxonomy, meta_rl_hierarchy, new_policy, rollout, train, trials_to_criterion,
    AdaptationMetric, ErrorCounts, HiddenHook, RecurrentPolicy, Sampling, TrainingConfig,
};
use crate::planning::{
    classify_episode, generate_tree, optimal_strategy, EpisodeLog, Strategy, Structure, TreeConfig,
};
use crate::probe::{collect_samples, fit_probe, intervene_in_place, InterventionMode, InterventionSpec, LinearProbe};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Perturb,
    Restore,
    Test,
}

impl Phase {
    fn tag(self) -> u64 {
        match self {
            Phase::Perturb => 3,
            Phase::Restore => 4,
            Phase::Test => 5,
        }
    }
}

/// sha256 of the JSON-lines episode logs of one phase; `None` if the phase was skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseChecksums {
    pub probe: String,
    pub perturb: Option<String>,
    pub restore: Option<String>,
    pub test: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub seed: u64,
    pub condition: Condition,
    pub structure_factor: StructureFactor,
    pub adaptation: AdaptationMetric,
    pub threshold: f64,
    pub errors: ErrorCounts,
    pub probe_accuracy: f64,
    pub perturb_mean_payoff: Option<f64>,
    pub restore_mean_payoff: Option<f64>,
    pub test_mean_payoff: f64,
    pub perturb_events: usize,
    pub restore_events: usize,
    pub regime: Regime,
    pub closure_passed: bool,
    pub checksums: PhaseChecksums,
}

/// A seed whose Phase 1 failed; its cells are absent from the results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct CellRun {
    pub result: ProtocolResult,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct ProtocolRun {
    /// Ordered by (condition, structure factor, seed).
    pub cells: Vec<CellRun>,
    pub attrition: Vec<SeedFailure>,
}

impl ProtocolRun {
    pub fn results(&self) -> Vec<ProtocolResult> {
        self.cells.iter().map(|c| c.result.clone()).collect()
    }
}

/// Where Phase 1 gets its policy from.
#[derive(Debug, Clone, Copy)]
pub enum PolicySource<'p> {
    /// Train a fresh policy per seed.
    TrainPerSeed,
    /// Use one frozen policy for every seed.
    Shared(&'p RecurrentPolicy),
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn logs_checksum(logs: &[EpisodeLog]) -> Result<String> {
    let mut buf = Vec::new();
    crate::planning::write_logs(logs, &mut buf)?;
    Ok(sha256_hex(&buf))
}

fn probe_checksum(probe: &LinearProbe) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(probe)?))
}

/// Threshold for the post-shift criterion: within `epsilon` of the scripted optimum.
pub fn criterion_threshold(tree: &TreeConfig, structure: Structure, epsilon: f64) -> f64 {
    let (_, best) = optimal_strategy(tree, structure);
    best - epsilon * best.abs()
}

fn structures(cfg: &ProtocolConfig, factor: StructureFactor) -> (Structure, Structure) {
    match factor {
        StructureFactor::Structured => (cfg.pre_shift, cfg.post_shift),
        StructureFactor::Null => (Structure::Null, Structure::Null),
    }
}

struct PhaseRun {
    logs: Vec<EpisodeLog>,
    labels: Vec<Strategy>,
    intervened: Vec<bool>,
}

impl PhaseRun {
    fn payoffs(&self) -> Vec<f64> {
        self.logs.iter().map(|l| l.payoff).collect()
    }

    fn mean_payoff(&self) -> f64 {
        crate::stats::mean(&self.payoffs())
    }
}

struct PhasePlan<'a> {
    phase: Phase,
    structure: Structure,
    episodes: usize,
    spec: InterventionSpec,
    correct: Strategy,
    stop: Option<(f64, usize)>,
    probe: &'a LinearProbe,
}

/// Trees and sampling noise depend on (seed, phase, episode) only, so every
/// condition sees the same episodes.
fn play_phase(policy: &RecurrentPolicy, tree_cfg: &TreeConfig, seed: u64, plan: &PhasePlan<'_>) -> Result<PhaseRun> {
    let mut run = PhaseRun {
        logs: Vec::new(),
        labels: Vec::new(),
        intervened: Vec::new(),
    };
    let tag = plan.phase.tag();
    for e in 0..plan.episodes as u64 {
        let tree = generate_tree(tree_cfg, plan.structure, derive_seed(seed, &[0xC0, tag, e]));
        let mut rng = seeded(seed, &[0xC1, tag, e]);
        let mut touched = false;
        let spec = plan.spec;
        let probe = plan.probe;
        let correct = plan.correct;
        let mut hook = |_t: usize, can_inspect: bool, h: &mut [f64]| {
            if spec.applies(can_inspect) {
                intervene_in_place(h, probe, &spec, correct);
                touched = true;
            }
        };
        let hook_ref: Option<&mut HiddenHook<'_>> = if spec.mode == InterventionMode::None {
            None
        } else {
            Some(&mut hook)
        };
        let ro = rollout(policy, tree_cfg, &tree, &mut rng, Sampling::Stochastic, false, hook_ref)?;
        run.labels.push(classify_episode(tree_cfg, &ro.log).label);
        run.logs.push(ro.log);
        run.intervened.push(touched);
        if let Some((threshold, window)) = plan.stop {
            if trials_to_criterion(&run.payoffs(), threshold, window)
                .trials_to_criterion
                .is_some()
            {
                break;
            }
        }
    }
    Ok(run)
}

fn strategy_fp(label: Strategy) -> RuleFingerprint {
    RuleFingerprint::symbolic(1, &format!("strategy:{}", label.name()))
}

/// One tick per episode: endogenous level-1 events when the behavioural
/// strategy changes, exogenous ones when the hidden state was edited.
fn record_phase(rec: &mut TraceRecorder, current: &mut Strategy, run: &PhaseRun, mode: InterventionMode) -> Result<()> {
    for (label, touched) in run.labels.iter().zip(&run.intervened) {
        let mut updates = Vec::new();
        let mut events = Vec::new();
        if label != current {
            updates.push(strategy_fp(*label));
            events.push((LocalOperation::new(1, 3).with_tag("strategy"), false));
            *current = *label;
        }
        if *touched {
            events.push((LocalOperation::new(1, 3).with_tag(mode.tag()), true));
        }
        rec.tick(updates, events)?;
    }
    Ok(())
}

fn spec(cfg: &ProtocolConfig, mode: InterventionMode) -> Result<InterventionSpec> {
    let mut s = InterventionSpec::new(mode, cfg.intervention.strength)?;
    s.apply_at = cfg.intervention.apply_at;
    Ok(s)
}

/// Phases 3 to 5 for one condition and structure factor on a frozen policy and probe.
pub fn run_cell(
    cfg: &ProtocolConfig,
    policy: &RecurrentPolicy,
    probe: &LinearProbe,
    seed: u64,
    condition: Condition,
    factor: StructureFactor,
) -> Result<CellRun> {
    let tree_cfg = &cfg.tree;
    let (pre, post) = structures(cfg, factor);
    let pre_correct = optimal_strategy(tree_cfg, pre).0;
    let post_correct = optimal_strategy(tree_cfg, post).0;
    let threshold = criterion_threshold(tree_cfg, post, cfg.criterion.epsilon);

    let mut rec = TraceRecorder::new(meta_rl_hierarchy(policy, "pretrained")?)?;
    let mut current = Strategy::Unclassified;
    let mut checksums = PhaseChecksums {
        probe: probe_checksum(probe)?,
        ..PhaseChecksums::default()
    };
    let mut result = ProtocolResult {
        seed,
        condition,
        structure_factor: factor,
        adaptation: AdaptationMetric {
            trials_to_criterion: None,
            cap: cfg.phases.test_cap,
        },
        threshold,
        errors: ErrorCounts::default(),
        probe_accuracy: probe.holdout_accuracy,
        perturb_mean_payoff: None,
        restore_mean_payoff: None,
        test_mean_payoff: f64::NAN,
        perturb_events: 0,
        restore_events: 0,
        regime: Regime::Fixed,
        closure_passed: false,
        checksums: PhaseChecksums::default(),
    };

    if condition.runs_perturbation() {
        let plan = PhasePlan {
            phase: Phase::Perturb,
            structure: pre,
            episodes: cfg.phases.perturb_episodes,
            spec: spec(cfg, InterventionMode::PerturbToWrong)?,
            correct: pre_correct,
            stop: None,
            probe,
        };
        let run = play_phase(policy, tree_cfg, seed, &plan)?;
        record_phase(&mut rec, &mut current, &run, plan.spec.mode)?;
        result.perturb_events += run.intervened.iter().filter(|&&t| t).count();
        result.perturb_mean_payoff = Some(run.mean_payoff());
        checksums.perturb = Some(logs_checksum(&run.logs)?);
    }
    if condition.runs_restoration() {
        let plan = PhasePlan {
            phase: Phase::Restore,
            structure: pre,
            episodes: cfg.phases.restore_episodes,
            spec: spec(cfg, InterventionMode::RestoreToCorrect)?,
            correct: pre_correct,
            stop: None,
            probe,
        };
        let run = play_phase(policy, tree_cfg, seed, &plan)?;
        record_phase(&mut rec, &mut current, &run, plan.spec.mode)?;
        result.restore_events += run.intervened.iter().filter(|&&t| t).count();
        result.restore_mean_payoff = Some(run.mean_payoff());
        checksums.restore = Some(logs_checksum(&run.logs)?);
    }

    let test_mode = match condition {
        _ if !cfg.intervention.persist_after_shift => InterventionMode::None,
        Condition::CorrectRepr => InterventionMode::RestoreToCorrect,
        Condition::FakeMaintained => InterventionMode::PerturbToWrong,
        Condition::Control => InterventionMode::None,
    };
    let plan = PhasePlan {
        phase: Phase::Test,
        structure: post,
        episodes: cfg.phases.test_cap,
        spec: spec(cfg, test_mode)?,
        correct: post_correct,
        stop: Some((threshold, cfg.criterion.window)),
        probe,
    };
    let run = play_phase(policy, tree_cfg, seed, &plan)?;
    let payoffs = run.payoffs();
    let mut adaptation = trials_to_criterion(&payoffs, threshold, cfg.criterion.window);
    adaptation.cap = cfg.phases.test_cap;
    let upto = adaptation.trials_to_criterion.unwrap_or(run.logs.len());
    result.errors = error_taxonomy(&run.logs[..upto], &run.labels[..upto], None, pre_correct, threshold);
    let n_touched = run.intervened.iter().filter(|&&t| t).count();
    match test_mode {
        InterventionMode::PerturbToWrong => result.perturb_events += n_touched,
        InterventionMode::RestoreToCorrect => result.restore_events += n_touched,
        InterventionMode::None => {}
    }
    record_phase(&mut rec, &mut current, &run, test_mode)?;
    result.adaptation = adaptation;
    result.test_mean_payoff = run.mean_payoff();
    checksums.test = logs_checksum(&run.logs)?;
    result.checksums = checksums;

    let trace = rec.finish()?;
    result.regime = classify_regime(&trace)?.regime;
    result.closure_passed = check_causal_closure(&trace)?.passed;
    Ok(CellRun { result, trace })
}

/// Phase 1 (unless shared) and Phase 2 for one seed.
pub fn prepare_seed(cfg: &ProtocolConfig, source: PolicySource<'_>, seed: u64) -> Result<(RecurrentPolicy, LinearProbe)> {
    let policy = match source {
        PolicySource::Shared(p) => p.clone(),
        PolicySource::TrainPerSeed => {
            let tc = TrainingConfig {
                seed: derive_seed(seed, &[0xC2]),
                ..cfg.training.clone()
            };
            train(new_policy(&cfg.tree, &tc), &tc, &cfg.tree)?.policy
        }
    };
    let probe_seed = derive_seed(seed, &[0xC3]);
    let samples = collect_samples(&policy, &cfg.tree, cfg.phases.probe_episodes, probe_seed, true)?;
    let probe_cfg = crate::probe::ProbeConfig {
        seed: probe_seed,
        ..cfg.probe.clone()
    };
    let probe = fit_probe(&samples, &probe_cfg)?;
    Ok((policy, probe))
}

/// Runs every configured cell for every seed. A seed whose training or
/// probing fails is dropped with a diagnostic; the others continue.
pub fn run_protocol(cfg: &ProtocolConfig, source: PolicySource<'_>) -> Result<ProtocolRun> {
    cfg.validate()?;
    let per_seed: Vec<std::result::Result<Vec<CellRun>, SeedFailure>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let fail = |e: Error| SeedFailure {
                seed,
                reason: e.to_string(),
            };
            let (policy, probe) = prepare_seed(cfg, source, seed).map_err(fail)?;
            let mut cells = Vec::new();
            for &condition in &cfg.conditions {
                for &factor in &cfg.structure_factors {
                    cells.push(run_cell(cfg, &policy, &probe, seed, condition, factor).map_err(fail)?);
                }
            }
            Ok(cells)
        })
        .collect();

    let mut cells = Vec::new();
    let mut attrition = Vec::new();
    for r in per_seed {
        match r {
            Ok(c) => cells.extend(c),
            Err(f) => attrition.push(f),
        }
    }
    cells.sort_by(|a, b| {
        let key = |c: &CellRun| (c.result.condition, c.result.structure_factor, c.result.seed);
        key(a).cmp(&key(b))
    });
    Ok(ProtocolRun { cells, attrition })
}

#[derive(Debug, Serialize)]
struct ResultRow<'a> {
    seed: u64,
    condition: &'a str,
    structure_factor: &'a str,
    trials_to_criterion: Option<usize>,
    censored: bool,
    cap: usize,
    threshold: f64,
    perseveration: usize,
    exploration: usize,
    other: usize,
    probe_accuracy: f64,
    perturb_mean_payoff: Option<f64>,
    restore_mean_payoff: Option<f64>,
    test_mean_payoff: f64,
    perturb_events: usize,
    restore_events: usize,
    regime: String,
    closure_passed: bool,
    checksum_probe: &'a str,
    checksum_perturb: Option<&'a str>,
    checksum_restore: Option<&'a str>,
    checksum_test: &'a str,
}

pub fn write_results_csv<W: std::io::Write>(results: &[ProtocolResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        w.serialize(ResultRow {
            seed: r.seed,
            condition: r.condition.name(),
            structure_factor: r.structure_factor.name(),
            trials_to_criterion: r.adaptation.trials_to_criterion,
            censored: r.adaptation.censored(),
            cap: r.adaptation.cap,
            threshold: r.threshold,
            perseveration: r.errors.perseveration,
            exploration: r.errors.exploration,
            other: r.errors.other,
            probe_accuracy: r.probe_accuracy,
            perturb_mean_payoff: r.perturb_mean_payoff,
            restore_mean_payoff: r.restore_mean_payoff,
            test_mean_payoff: r.test_mean_payoff,
            perturb_events: r.perturb_events,
            restore_events: r.restore_events,
            regime: r.regime.to_string(),
            closure_passed: r.closure_passed,
            checksum_probe: &r.checksums.probe,
            checksum_perturb: r.checksums.perturb.as_deref(),
            checksum_restore: r.checksums.restore.as_deref(),
            checksum_test: &r.checksums.test,
        })?;
    }
    w.flush()?;
    Ok(())
}
