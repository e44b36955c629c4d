use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::compare::{compare_conditions, structured_vs_null_effect, BootstrapSettings};
use super::config::{Condition, ProtocolConfig, StructureFactor};
use super::protocol::{run_protocol, write_results_csv, PolicySource};
use super::sandbox::{run_conservatism_grid, NormVector};
use crate::agents::{automaton, dissociation, gradient_descent, rescorla_wagner, run_blocking_experiment, run_dissociation, wcst, RwState};
use crate::error::{Error, Result};
use crate::hierarchy::{check_causal_closure, classify_regime, profile_of, write_trace, AgentKind, Regime, Trace};
use crate::metarl::{evaluate_policy, evaluate_random, new_policy, train, write_curve_csv, RecurrentPolicy, Sampling, TrainingConfig};
use crate::planning::{random_policy_payoff, Structure};
use crate::probe::{collect_samples, fit_probe, ProbeConfig};
use crate::rng::derive_seed;

pub const SUITES: [&str; 7] = [
    "blocking",
    "dissociation",
    "regime",
    "competence",
    "probe",
    "protocol",
    "sandbox",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandboxConfig {
    pub reward_weight: f64,
    pub cost_weight: f64,
    pub rollouts: usize,
    pub seed: u64,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            reward_weight: 1.0,
            cost_weight: 1.0,
            rollouts: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompetenceConfig {
    pub episodes: usize,
    pub random_episodes: usize,
    pub sampling: Sampling,
    pub min_ratio: f64,
}

impl Default for CompetenceConfig {
    fn default() -> Self {
        Self {
            episodes: 200,
            random_episodes: 4000,
            sampling: Sampling::Greedy,
            min_ratio: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub suites: Vec<String>,
    pub seed: u64,
    pub dissociation_seeds: usize,
    pub competence: CompetenceConfig,
    pub sandbox: SandboxConfig,
    pub protocol: ProtocolConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            seed: 0,
            dissociation_seeds: 10,
            competence: CompetenceConfig::default(),
            sandbox: SandboxConfig::default(),
            protocol: ProtocolConfig::default(),
        }
    }
}

impl SuiteConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(bad) = self.suites.iter().find(|s| !SUITES.contains(&s.as_str())) {
            return Err(Error::Config(format!(
                "unknown suite '{bad}' (known: {})",
                SUITES.join(", ")
            )));
        }
        if self.suites.iter().any(|s| s == "protocol") {
            self.protocol.validate()?;
        } else {
            self.protocol.tree.validate()?;
            self.protocol.training.validate()?;
        }
        if self.sandbox.rollouts == 0 {
            return Err(Error::Config("sandbox.rollouts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub requirement: String,
}

fn check(name: &str, passed: bool, value: f64, requirement: impl Into<String>) -> Check {
    Check {
        name: name.to_string(),
        passed,
        value,
        requirement: requirement.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub details: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

/// Everything a run produces, kept in memory until written.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub report: Report,
    /// Extra CSV tables by file name.
    pub tables: Vec<(String, String)>,
    pub traces: Vec<(String, Trace)>,
}

impl Artifacts {
    pub fn push_suite(&mut self, suite: SuiteReport) {
        self.report.suites.push(suite);
        self.report.passed = self.report.suites.iter().all(|s| s.passed);
    }

    /// `results.csv` (one row per check), `summary.json`, extra tables, `traces/*.jsonl`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir.join("traces"))?;
        let mut w = csv::Writer::from_path(dir.join("results.csv"))?;
        w.write_record(["suite", "check", "passed", "value", "requirement"])?;
        for s in &self.report.suites {
            for c in &s.checks {
                w.write_record([
                    s.suite.as_str(),
                    c.name.as_str(),
                    if c.passed { "true" } else { "false" },
                    &c.value.to_string(),
                    c.requirement.as_str(),
                ])?;
            }
        }
        w.flush()?;
        let mut summary = serde_json::to_string_pretty(&self.report)?;
        summary.push('\n');
        fs::write(dir.join("summary.json"), summary)?;
        for (name, body) in &self.tables {
            fs::write(dir.join(name), body)?;
        }
        for (name, trace) in &self.traces {
            let f = fs::File::create(dir.join("traces").join(format!("{name}.jsonl")))?;
            write_trace(trace, std::io::BufWriter::new(f))?;
        }
        Ok(())
    }
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn finish(suite: &str, checks: Vec<Check>, details: Value) -> SuiteReport {
    SuiteReport {
        suite: suite.to_string(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        error: None,
        details,
    }
}

/// Lazily trained or supplied meta-RL policy shared by the competence, probe and protocol suites.
pub struct PolicyCache<'a> {
    cfg: &'a SuiteConfig,
    supplied: Option<&'a RecurrentPolicy>,
    trained: Option<RecurrentPolicy>,
}

impl<'a> PolicyCache<'a> {
    pub fn new(cfg: &'a SuiteConfig, supplied: Option<&'a RecurrentPolicy>) -> Self {
        Self {
            cfg,
            supplied,
            trained: None,
        }
    }

    pub fn get(&mut self, art: &mut Artifacts) -> Result<&RecurrentPolicy> {
        if let Some(p) = self.supplied {
            return Ok(p);
        }
        if self.trained.is_none() {
            let (tree, tc) = (&self.cfg.protocol.tree, &self.cfg.protocol.training);
            let out = train(new_policy(tree, tc), tc, tree)?;
            art.tables.push((
                "training_curve.csv".into(),
                csv_string(|b| write_curve_csv(&out.curve, b))?,
            ));
            art.traces.push(("training".into(), out.trace));
            self.trained = Some(out.policy);
        }
        Ok(self.trained.as_ref().expect("just trained"))
    }

    pub fn is_supplied(&self) -> bool {
        self.supplied.is_some()
    }
}

/// Oracle for the blocking design: shared-error recursion written out on scalars.
fn blocking_oracle(ab: f64, lambda: f64, pretrain: usize, compound: usize) -> (f64, f64) {
    let mut a = 0.0;
    for _ in 0..pretrain {
        a += ab * (lambda - a);
    }
    let (mut blocked_b, mut control_a, mut control_b) = (0.0, 0.0, 0.0);
    for _ in 0..compound {
        let e = lambda - a - blocked_b;
        a += ab * e;
        blocked_b += ab * e;
        let e = lambda - control_a - control_b;
        control_a += ab * e;
        control_b += ab * e;
    }
    (blocked_b, control_b)
}

pub fn suite_blocking(art: &mut Artifacts) -> Result<SuiteReport> {
    let out = run_blocking_experiment(&RwState::new(0.5, 1.0, 1.0)?, 10, 10)?;
    let (ob, oc) = blocking_oracle(0.5, 1.0, 10, 10);
    let err = (out.v_b_blocked - ob).abs().max((out.v_b_control - oc).abs());
    let (_, trace) = {
        let mut rw = rescorla_wagner::TracedRw::new(RwState::new(0.5, 1.0, 1.0)?)?;
        for _ in 0..10 {
            rw.trial(&["A"], true)?;
        }
        for _ in 0..10 {
            rw.trial(&["A", "B"], true)?;
        }
        rw.finish()?
    };
    art.traces.push(("blocking".into(), trace));
    Ok(finish(
        "blocking",
        vec![
            check("v_b_blocked", out.v_b_blocked <= 0.05, out.v_b_blocked, "<= 0.05"),
            check("v_b_control", out.v_b_control >= 0.4, out.v_b_control, ">= 0.4"),
            check("oracle_agreement", err <= 1e-12, err, "max abs error <= 1e-12"),
        ],
        json!({ "v_a_after_pretrain": out.v_a_after_pretrain }),
    ))
}

pub fn suite_dissociation(cfg: &SuiteConfig, art: &mut Artifacts) -> Result<SuiteReport> {
    let rep = run_dissociation(cfg.dissociation_seeds)?;
    let limit = rep.threshold as usize + 2;
    let switches: Vec<Option<usize>> = rep.seeds.iter().map(|s| s.intact.first_switch_after_shift()).collect();
    let worst_switch = switches.iter().map(|s| s.map_or(f64::INFINITY, |v| v as f64)).fold(0.0, f64::max);
    let min_persev = rep
        .seeds
        .iter()
        .map(|s| s.lesioned.perseveration_rate(dissociation::PERSEVERATION_WINDOW))
        .fold(f64::INFINITY, f64::min);
    let identical = rep.seeds.iter().filter(|s| s.rw_identical()).count();
    art.tables.push(("dissociation.csv".into(), csv_string(|b| rep.write_csv(b))?));
    if let Some(first) = rep.seeds.first() {
        art.traces.push(("wcst_intact".into(), first.intact.trace.clone()));
        art.traces.push(("wcst_lesioned".into(), first.lesioned.trace.clone()));
    }
    let n = rep.seeds.len();
    Ok(finish(
        "dissociation",
        vec![
            check("intact_switch_latency", worst_switch <= limit as f64, worst_switch, format!("<= {limit} trials post-shift on every seed")),
            check("lesioned_perseveration", min_persev >= 0.9, min_persev, ">= 0.9 over 20 post-shift trials on every seed"),
            check("rw_bitwise_identical", identical == n && n > 0, identical as f64, format!("{n} of {n} seeds")),
        ],
        json!({ "seeds": n }),
    ))
}

pub fn suite_regime(art: &mut Artifacts) -> Result<SuiteReport> {
    let cases: Vec<(&str, AgentKind, Trace)> = vec![
        ("automaton", AgentKind::FixedAutomaton, automaton::canonical_trace()?),
        ("rescorla_wagner", AgentKind::RescorlaWagner, rescorla_wagner::canonical_trace()?),
        ("gradient_descent", AgentKind::GradientDescent, gradient_descent::canonical_trace()?),
        ("wcst", AgentKind::Wcst, wcst::canonical_trace(false)?),
    ];
    let mut checks = Vec::new();
    let mut labels = serde_json::Map::new();
    for (name, kind, trace) in cases {
        let label = classify_regime(&trace)?;
        let expected = profile_of(kind).0.transformativity;
        let closure = check_causal_closure(&trace)?.passed;
        checks.push(check(
            &format!("{name}_regime"),
            label.regime.ordinal() == expected,
            label.regime.ordinal() as f64,
            format!("== {expected}"),
        ));
        checks.push(check(&format!("{name}_closure"), closure, closure as u8 as f64, "closure holds"));
        labels.insert(name.to_string(), json!(label.regime.to_string()));
        art.traces.push((format!("regime_{name}"), trace));
    }
    Ok(finish("regime", checks, Value::Object(labels)))
}

pub fn suite_competence(cfg: &SuiteConfig, cache: &mut PolicyCache<'_>, art: &mut Artifacts) -> Result<SuiteReport> {
    let tree = cfg.protocol.tree.clone();
    let policy = cache.get(art)?.clone();
    let c = &cfg.competence;
    let mut checks = Vec::new();
    let mut details = serde_json::Map::new();
    for s in Structure::ALL {
        // paired: the random agent plays the same held-out trees; the large sample is a reference only
        let random = evaluate_random(&tree, s, c.episodes, derive_seed(cfg.seed, &[0xCB2]))?;
        let random_ref = random_policy_payoff(&tree, s, c.random_episodes, derive_seed(cfg.seed, &[0xCB1]))?;
        let trained = evaluate_policy(&policy, &tree, s, c.episodes, derive_seed(cfg.seed, &[0xCB2]), c.sampling)?;
        let other = match c.sampling {
            Sampling::Greedy => Sampling::Stochastic,
            Sampling::Stochastic => Sampling::Greedy,
        };
        let alt = evaluate_policy(&policy, &tree, s, c.episodes, derive_seed(cfg.seed, &[0xCB2]), other)?;
        let ratio = trained / random;
        details.insert(
            s.name().to_string(),
            json!({ "random": random, "random_reference": random_ref, "trained": trained, "trained_other_sampling": alt, "ratio": ratio }),
        );
        // the policy is trained on structured trees only; the null control is reported, not gated
        if s != Structure::Null {
            checks.push(check(
                &format!("{}_ratio", s.name()),
                ratio >= c.min_ratio,
                ratio,
                format!(">= {} x random ({random:.3})", c.min_ratio),
            ));
        }
    }
    Ok(finish("competence", checks, Value::Object(details)))
}

pub fn suite_probe(cfg: &SuiteConfig, cache: &mut PolicyCache<'_>, art: &mut Artifacts) -> Result<SuiteReport> {
    let tree = &cfg.protocol.tree;
    let n = cfg.protocol.phases.probe_episodes;
    let seed = derive_seed(cfg.seed, &[0xCB3]);
    let pcfg = ProbeConfig {
        seed,
        ..cfg.protocol.probe.clone()
    };
    let policy = cache.get(art)?.clone();
    let trained = fit_probe(&collect_samples(&policy, tree, n, seed, true)?, &pcfg)?;
    let untrained_policy = new_policy(
        tree,
        &TrainingConfig {
            seed: derive_seed(cfg.seed, &[0xCB4]),
            ..cfg.protocol.training.clone()
        },
    );
    let untrained = fit_probe(&collect_samples(&untrained_policy, tree, n, seed, true)?, &pcfg)?;
    Ok(finish(
        "probe",
        vec![
            check("trained_holdout_accuracy", trained.holdout_accuracy >= 0.8, trained.holdout_accuracy, ">= 0.8"),
            check(
                "untrained_holdout_accuracy",
                (untrained.holdout_accuracy - 0.5).abs() <= 0.1,
                untrained.holdout_accuracy,
                "within 0.5 +/- 0.1",
            ),
        ],
        json!({
            "trained_train_accuracy": trained.train_accuracy,
            "untrained_train_accuracy": untrained.train_accuracy,
            "class_means": trained.class_means,
        }),
    ))
}

pub fn suite_protocol(cfg: &SuiteConfig, cache: &mut PolicyCache<'_>, art: &mut Artifacts) -> Result<SuiteReport> {
    let p = &cfg.protocol;
    let shared = if cache.is_supplied() || p.share_policy {
        Some(cache.get(art)?.clone())
    } else {
        None
    };
    let source = match &shared {
        Some(pol) => PolicySource::Shared(pol),
        None => PolicySource::TrainPerSeed,
    };
    let run = run_protocol(p, source)?;
    let results = run.results();
    art.tables.push((
        "protocol_results.csv".into(),
        csv_string(|b| write_results_csv(&results, b))?,
    ));
    for cell in &run.cells {
        let r = &cell.result;
        art.traces.push((
            format!("protocol_{}_{}_seed{}", r.condition, r.structure_factor, r.seed),
            cell.trace.clone(),
        ));
    }
    let settings = BootstrapSettings {
        resamples: p.bootstrap_resamples,
        seed: derive_seed(cfg.seed, &[0xCB5]),
        min_uncensored: p.min_uncensored,
        ..BootstrapSettings::default()
    };
    let ordering = compare_conditions(&results, StructureFactor::Structured, &settings);
    let null_ordering = compare_conditions(&results, StructureFactor::Null, &settings);
    let interaction = structured_vs_null_effect(&results, &settings);
    let structured: Vec<_> = results.iter().filter(|r| r.structure_factor == StructureFactor::Structured).collect();
    let exploration: usize = structured.iter().map(|r| r.errors.exploration).sum();
    let perseveration: usize = structured.iter().map(|r| r.errors.perseveration).sum();
    let closure_ok = results.iter().all(|r| r.closure_passed);
    let gating_ok = results.iter().all(|r| match r.condition {
        Condition::Control => r.perturb_events + r.restore_events == 0,
        Condition::FakeMaintained => r.restore_events == 0 && (r.perturb_events > 0 || p.intervention.strength == 0.0 || p.phases.perturb_episodes == 0),
        Condition::CorrectRepr => true,
    });
    let structural = results.iter().filter(|r| r.regime == Regime::Structural).count();
    let checks = vec![
        check("ordering_a_lt_c_lt_b", ordering.all_confirmed(), ordering.differences.len() as f64, "both median differences have 95% CIs above zero"),
        check("interaction", interaction.confirmed(), interaction.difference.map_or(f64::NAN, |d| d.estimate), "structured CI > 0, null CI contains 0, difference > 0"),
        check("exploration_dominates", exploration > perseveration, exploration as f64 - perseveration as f64, "exploration - perseveration > 0 (structured cells)"),
        check("closure", closure_ok, results.len() as f64, "every protocol trace closed"),
        check("condition_gating", gating_ok, results.len() as f64, "no events in control, no restoration in fake_maintained"),
        check("regime_structural", structural == results.len() && !results.is_empty(), structural as f64, "every protocol trace Structural"),
        check("attrition", run.attrition.is_empty(), run.attrition.len() as f64, "no seed lost in phase 1"),
    ];
    Ok(finish(
        "protocol",
        checks,
        json!({
            "ordering": ordering,
            "null_ordering": null_ordering,
            "interaction": interaction,
            "errors": { "exploration": exploration, "perseveration": perseveration },
            "attrition": run.attrition,
            "shared_policy": shared.is_some(),
        }),
    ))
}

pub fn suite_sandbox(cfg: &SuiteConfig, art: &mut Artifacts) -> Result<SuiteReport> {
    let s = &cfg.sandbox;
    let norm = NormVector::new(s.reward_weight, s.cost_weight)?;
    let runs = run_conservatism_grid(&cfg.protocol.tree, &norm, s.rollouts, s.seed)?;
    let records: Vec<_> = runs.iter().map(|(r, _)| r.clone()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["delta_reward", "delta_cost", "incumbent_score", "copy_score", "adopted", "regime", "closure_passed"])?;
    for r in &records {
        w.write_record([
            r.delta.weights[0].to_string(),
            r.delta.weights[1].to_string(),
            r.incumbent_score.to_string(),
            r.copy_score.to_string(),
            r.adopted.to_string(),
            r.regime.to_string(),
            r.closure_passed.to_string(),
        ])?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    art.tables.push(("sandbox.csv".into(), body));
    for (i, (r, t)) in runs.iter().enumerate() {
        if r.adopted {
            art.traces.push((format!("sandbox_adopted_{i:02}"), t.clone()));
        }
    }
    let adopted: Vec<_> = records.iter().filter(|r| r.adopted).collect();
    let inferior = adopted.iter().filter(|r| r.copy_score < r.incumbent_score).count();
    let closure = records.iter().all(|r| r.closure_passed);
    let reflexive = adopted.iter().all(|r| r.regime == Regime::Reflexive);
    let zero_rejected = records
        .iter()
        .filter(|r| r.delta.weights.iter().all(|w| *w == 0.0))
        .all(|r| !r.adopted);
    Ok(finish(
        "sandbox",
        vec![
            check("no_inferior_adoption", inferior == 0, inferior as f64, "0 adopted edits score below the incumbent"),
            check("closure", closure, records.len() as f64, "every sandbox trace closed"),
            check("adopted_reflexive", reflexive, adopted.len() as f64, "every adopted edit classifies Reflexive"),
            check("identity_edit_rejected", zero_rejected, 0.0, "tie on the zero edit is rejected"),
        ],
        json!({ "edits": records.len(), "adopted": adopted.len(), "norm": norm, "records": records }),
    ))
}

/// Runs the configured suites in order. A failing suite is recorded and the
/// rest still run; unknown suite names are rejected before anything runs.
pub fn run_all(cfg: &SuiteConfig, checkpoint: Option<&RecurrentPolicy>) -> Result<Artifacts> {
    cfg.validate()?;
    let mut art = Artifacts {
        report: Report {
            passed: true,
            suites: Vec::new(),
        },
        ..Artifacts::default()
    };
    let mut cache = PolicyCache::new(cfg, checkpoint);
    for name in &cfg.suites {
        let out = match name.as_str() {
            "blocking" => suite_blocking(&mut art),
            "dissociation" => suite_dissociation(cfg, &mut art),
            "regime" => suite_regime(&mut art),
            "competence" => suite_competence(cfg, &mut cache, &mut art),
            "probe" => suite_probe(cfg, &mut cache, &mut art),
            "protocol" => suite_protocol(cfg, &mut cache, &mut art),
            "sandbox" => suite_sandbox(cfg, &mut art),
            other => unreachable!("validated suite name {other}"),
        };
        let report = out.unwrap_or_else(|e| SuiteReport {
            suite: name.clone(),
            passed: false,
            checks: Vec::new(),
            error: Some(e.to_string()),
            details: Value::Null,
        });
        art.push_suite(report);
    }
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_is_rejected_up_front() {
        let cfg = SuiteConfig {
            suites: vec!["blocking".into(), "telepathy".into()],
            ..SuiteConfig::default()
        };
        assert!(matches!(run_all(&cfg, None), Err(Error::Config(_))));
    }

    #[test]
    fn empty_suite_list_is_an_empty_passing_report() {
        let cfg = SuiteConfig {
            suites: vec![],
            ..SuiteConfig::default()
        };
        let art = run_all(&cfg, None).unwrap();
        assert!(art.report.passed);
        assert!(art.report.suites.is_empty());
    }

    #[test]
    fn classical_suites_pass() {
        let cfg = SuiteConfig {
            suites: vec!["blocking".into(), "dissociation".into(), "regime".into()],
            ..SuiteConfig::default()
        };
        let art = run_all(&cfg, None).unwrap();
        for s in &art.report.suites {
            assert!(s.passed, "{s:?}");
        }
    }

    #[test]
    fn failing_suite_does_not_stop_siblings() {
        let mut cfg = SuiteConfig {
            suites: vec!["protocol".into(), "blocking".into()],
            ..SuiteConfig::default()
        };
        cfg.protocol.share_policy = true;
        cfg.protocol.training.max_updates = 1;
        cfg.protocol.training.hidden_dim = 4;
        cfg.protocol.phases.probe_episodes = 2;
        let art = run_all(&cfg, None).unwrap();
        assert_eq!(art.report.suites.len(), 2);
        assert!(!art.report.suites[0].passed);
        assert!(art.report.suites[1].passed);
        assert!(!art.report.passed);
    }

    #[test]
    fn oracle_recursion_matches_closed_form_pretraining() {
        let (_, control) = blocking_oracle(0.5, 1.0, 0, 1);
        assert_eq!(control, 0.5);
        let (blocked, _) = blocking_oracle(0.5, 1.0, 10, 0);
        assert_eq!(blocked, 0.0);
    }
}
