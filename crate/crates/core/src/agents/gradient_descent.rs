use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{FunctionalState, LocalOperation, RuleFingerprint, Trace, TraceRecorder};

/// Fixed objective; this is the learner's norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    /// `L(θ) = Σ c_j θ_j²`, independent of the batch.
    Quadratic { curvature: Vec<f64> },
    /// Mean logistic loss over `(x, y)` samples with `y ∈ {0, 1}`.
    Logistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Loss {
    fn check(&self, theta: &[f64], batch: &[Sample]) -> Result<()> {
        match self {
            Loss::Quadratic { curvature } if curvature.len() != theta.len() => {
                Err(Error::InvalidInput(format!(
                    "curvature has {} entries for {} parameters",
                    curvature.len(),
                    theta.len()
                )))
            }
            Loss::Quadratic { .. } => Ok(()),
            Loss::Logistic => {
                if batch.is_empty() {
                    return Err(Error::InvalidInput("empty batch for logistic loss".into()));
                }
                if let Some(s) = batch.iter().find(|s| s.x.len() != theta.len()) {
                    return Err(Error::InvalidInput(format!(
                        "sample has {} features for {} parameters",
                        s.x.len(),
                        theta.len()
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn value(&self, theta: &[f64], batch: &[Sample]) -> Result<f64> {
        self.check(theta, batch)?;
        Ok(match self {
            Loss::Quadratic { curvature } => {
                curvature.iter().zip(theta).map(|(c, t)| c * t * t).sum()
            }
            Loss::Logistic => {
                let total: f64 = batch
                    .iter()
                    .map(|s| {
                        let z: f64 = s.x.iter().zip(theta).map(|(a, b)| a * b).sum();
                        softplus(z) - s.y * z
                    })
                    .sum();
                total / batch.len() as f64
            }
        })
    }

    pub fn gradient(&self, theta: &[f64], batch: &[Sample]) -> Result<Vec<f64>> {
        self.check(theta, batch)?;
        Ok(match self {
            Loss::Quadratic { curvature } => curvature
                .iter()
                .zip(theta)
                .map(|(c, t)| 2.0 * c * t)
                .collect(),
            Loss::Logistic => {
                let mut g = vec![0.0; theta.len()];
                for s in batch {
                    let z: f64 = s.x.iter().zip(theta).map(|(a, b)| a * b).sum();
                    let r = sigmoid(z) - s.y;
                    for (gj, xj) in g.iter_mut().zip(&s.x) {
                        *gj += r * xj;
                    }
                }
                let n = batch.len() as f64;
                g.iter_mut().for_each(|v| *v /= n);
                g
            }
        })
    }

    /// Lipschitz constant of the gradient, when it is batch independent.
    pub fn smoothness(&self) -> Option<f64> {
        match self {
            Loss::Quadratic { curvature } => {
                Some(2.0 * curvature.iter().fold(0.0_f64, |m, c| m.max(c.abs())))
            }
            Loss::Logistic => None,
        }
    }

    fn fingerprint(&self) -> RuleFingerprint {
        match self {
            Loss::Quadratic { curvature } => {
                RuleFingerprint::from_reals(2, "loss:quadratic", curvature)
            }
            Loss::Logistic => RuleFingerprint::symbolic(2, "loss:logistic"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdState {
    pub theta: Vec<f64>,
    pub eta: f64,
    pub loss: Loss,
}

impl GdState {
    pub fn new(theta: Vec<f64>, eta: f64, loss: Loss) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::InvalidInput(format!("step size {eta} must be >= 0")));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Numeric("non-finite initial parameters".into()));
        }
        Ok(Self { theta, eta, loss })
    }

    /// One explicit gradient step, `θ ← θ − η∇L(θ)`.
    pub fn step(&mut self, batch: &[Sample]) -> Result<()> {
        let g = self.loss.gradient(&self.theta, batch)?;
        if let Some(i) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient at coordinate {i}")));
        }
        for (t, gi) in self.theta.iter_mut().zip(&g) {
            *t -= self.eta * gi;
        }
        Ok(())
    }

    pub fn weights_fingerprint(&self) -> RuleFingerprint {
        RuleFingerprint::from_reals(0, "theta", &self.theta)
    }

    fn hierarchy(&self) -> Result<FunctionalState> {
        FunctionalState::new(
            0,
            vec![
                self.weights_fingerprint(),
                RuleFingerprint::from_reals(1, "explicit-gradient-step", &[self.eta]),
                self.loss.fingerprint(),
            ],
            vec![false, false, false],
            vec![true, false, false],
        )
    }
}

/// Learner that records a level-0 operation per step.
#[derive(Debug, Clone)]
pub struct TracedGd {
    pub state: GdState,
    recorder: TraceRecorder,
}

impl TracedGd {
    pub fn new(state: GdState) -> Result<Self> {
        let recorder = TraceRecorder::new(state.hierarchy()?)?;
        Ok(Self { state, recorder })
    }

    pub fn step(&mut self, batch: &[Sample]) -> Result<()> {
        self.state.step(batch)?;
        self.recorder.tick(
            vec![self.state.weights_fingerprint()],
            vec![(LocalOperation::new(0, 2), false)],
        )
    }

    pub fn finish(self) -> Result<(GdState, Trace)> {
        Ok((self.state, self.recorder.finish()?))
    }
}

/// Logistic regression on a fixed, linearly separable toy set.
pub fn canonical_trace() -> Result<Trace> {
    let batch: Vec<Sample> = (0..8)
        .map(|i| {
            let x0 = i as f64 / 4.0 - 1.0;
            Sample {
                x: vec![x0, 1.0],
                y: if x0 > 0.0 { 1.0 } else { 0.0 },
            }
        })
        .collect();
    let mut gd = TracedGd::new(GdState::new(vec![0.0, 0.0], 0.5, Loss::Logistic)?)?;
    for _ in 0..30 {
        gd.step(&batch)?;
    }
    gd.finish().map(|r| r.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{classify_regime, Regime};

    fn quad() -> Loss {
        Loss::Quadratic {
            curvature: vec![1.0],
        }
    }

    #[test]
    fn quadratic_step_by_hand() {
        let mut s = GdState::new(vec![1.0], 0.1, quad()).unwrap();
        s.step(&[]).unwrap();
        assert!((s.theta[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn stationary_point_and_zero_step() {
        let mut s = GdState::new(vec![0.0], 0.1, quad()).unwrap();
        s.step(&[]).unwrap();
        assert_eq!(s.theta, vec![0.0]);
        let mut s = GdState::new(vec![3.0], 0.0, quad()).unwrap();
        s.step(&[]).unwrap();
        assert_eq!(s.theta, vec![3.0]);
    }

    #[test]
    fn logistic_gradient_matches_central_differences() {
        let batch = vec![
            Sample { x: vec![0.3, -1.2, 1.0], y: 1.0 },
            Sample { x: vec![-0.7, 0.4, 1.0], y: 0.0 },
            Sample { x: vec![1.5, 0.2, 1.0], y: 1.0 },
        ];
        let theta = vec![0.2, -0.5, 0.1];
        let g = Loss::Logistic.gradient(&theta, &batch).unwrap();
        let h = 1e-6;
        for j in 0..theta.len() {
            let mut p = theta.clone();
            let mut m = theta.clone();
            p[j] += h;
            m[j] -= h;
            let fd = (Loss::Logistic.value(&p, &batch).unwrap()
                - Loss::Logistic.value(&m, &batch).unwrap())
                / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8, "coordinate {j}: {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn logistic_needs_samples() {
        let mut s = GdState::new(vec![0.0], 0.1, Loss::Logistic).unwrap();
        assert!(s.step(&[]).is_err());
    }

    #[test]
    fn non_finite_gradient_is_numeric_error() {
        let loss = Loss::Quadratic {
            curvature: vec![f64::INFINITY],
        };
        let mut s = GdState::new(vec![1.0], 0.1, loss).unwrap();
        assert!(matches!(s.step(&[]), Err(Error::Numeric(_))));
    }

    #[test]
    fn canonical_run_is_local() {
        let label = classify_regime(&canonical_trace().unwrap()).unwrap();
        assert_eq!(label.regime, Regime::Local);
    }
}
