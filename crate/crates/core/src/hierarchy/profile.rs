use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::regime::Regime;
use crate::error::Error;

/// The agents implemented in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    FixedAutomaton,
    RescorlaWagner,
    GradientDescent,
    Wcst,
    MetaRl,
    Sandbox,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::FixedAutomaton,
        AgentKind::RescorlaWagner,
        AgentKind::GradientDescent,
        AgentKind::Wcst,
        AgentKind::MetaRl,
        AgentKind::Sandbox,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::FixedAutomaton => "automaton",
            AgentKind::RescorlaWagner => "rescorla-wagner",
            AgentKind::GradientDescent => "gradient-descent",
            AgentKind::Wcst => "wcst",
            AgentKind::MetaRl => "meta-rl",
            AgentKind::Sandbox => "sandbox",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownAgent(s.to_string()))
    }
}

/// Organizational autonomy, qualitative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Autonomy {
    Nil,
    Low,
    High,
}

/// Position in the (transformativity, autonomy) plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityProfile {
    /// Highest regime the agent reaches endogenously, 1..=4.
    pub transformativity: u8,
    pub autonomy: Autonomy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LevelProfile {
    pub level: usize,
    pub role: &'static str,
    pub repr: bool,
    pub causal: bool,
}

fn lvl(level: usize, role: &'static str, repr: bool, causal: bool) -> LevelProfile {
    LevelProfile {
        level,
        role,
        repr,
        causal,
    }
}

/// Static (T, A) profile and per-level representation/causality table.
///
/// Every implemented agent is a heteronomous program, so autonomy is nil
/// throughout.
pub fn profile_of(kind: AgentKind) -> (CapabilityProfile, Vec<LevelProfile>) {
    let (regime, levels) = match kind {
        AgentKind::FixedAutomaton => (
            Regime::Fixed,
            vec![
                lvl(0, "transition table", false, false),
                lvl(1, "implicit norm", false, false),
            ],
        ),
        AgentKind::RescorlaWagner => (
            Regime::Local,
            vec![
                lvl(0, "associative strengths", true, true),
                lvl(1, "delta rule", false, false),
                lvl(2, "reinforcement target", false, false),
            ],
        ),
        AgentKind::GradientDescent => (
            Regime::Local,
            vec![
                lvl(0, "weights", false, true),
                lvl(1, "update rule and step size", false, false),
                lvl(2, "loss", false, false),
            ],
        ),
        AgentKind::Wcst => (
            Regime::Structural,
            vec![
                lvl(0, "sorting action", false, true),
                lvl(1, "active sorting rule", true, true),
                lvl(2, "switch meta-rule", false, false),
                lvl(3, "maximize correct sorts", false, false),
            ],
        ),
        AgentKind::MetaRl => (
            Regime::Structural,
            vec![
                lvl(0, "network weights", true, true),
                lvl(1, "hidden-state strategy", true, true),
                lvl(2, "recurrent update dynamics", true, true),
                lvl(3, "training objective", false, false),
            ],
        ),
        AgentKind::Sandbox => (
            Regime::Reflexive,
            vec![
                lvl(0, "inspection choices", true, true),
                lvl(1, "norm-greedy policy", true, false),
                lvl(2, "payoff norm", true, true),
            ],
        ),
    };
    (
        CapabilityProfile {
            transformativity: regime.ordinal(),
            autonomy: Autonomy::Nil,
        },
        levels,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn meta_rl_sits_at_three_with_nil_autonomy() {
        let (p, levels) = profile_of(AgentKind::MetaRl);
        assert_eq!(p.transformativity, 3);
        assert_eq!(p.autonomy, Autonomy::Nil);
        let top = levels.last().unwrap();
        assert!(!top.repr && !top.causal);
        assert!(levels[..levels.len() - 1].iter().all(|l| l.repr && l.causal));
    }

    #[test]
    fn automaton_is_regime_one() {
        assert_eq!(profile_of(AgentKind::FixedAutomaton).0.transformativity, 1);
    }

    #[test]
    fn sandbox_reaches_four() {
        let (p, levels) = profile_of(AgentKind::Sandbox);
        assert_eq!(p.transformativity, 4);
        let top = levels.last().unwrap();
        assert!(top.repr && top.causal);
    }

    #[test]
    fn names_round_trip_and_unknown_fails() {
        for k in AgentKind::ALL {
            assert_eq!(k.name().parse::<AgentKind>().unwrap(), k);
        }
        assert!(matches!(
            "thermostat".parse::<AgentKind>(),
            Err(Error::UnknownAgent(_))
        ));
    }
}
