//! Full-batch RProp− training with random restarts.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::Dataset;
use super::model::{batch_pass, XorModel};
use crate::error::{Error, Result};
use crate::rng::stream_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpropConfig {
    pub eta_plus: f64,
    pub eta_minus: f64,
    pub delta_init: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without training-accuracy improvement.
    pub patience: usize,
    pub restarts: usize,
}

impl Default for RpropConfig {
    fn default() -> Self {
        Self {
            eta_plus: 1.2,
            eta_minus: 0.5,
            delta_init: 0.1,
            delta_min: 1e-6,
            delta_max: 50.0,
            max_epochs: 2000,
            patience: 50,
            restarts: 10,
        }
    }
}

impl RpropConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.eta_minus && self.eta_minus < 1.0 && 1.0 < self.eta_plus) {
            return Err(Error::config(
                "attack.rprop.eta_minus",
                "require 0 < eta_minus < 1 < eta_plus",
            ));
        }
        if !(0.0 < self.delta_min
            && self.delta_min < self.delta_init
            && self.delta_init < self.delta_max)
        {
            return Err(Error::config(
                "attack.rprop.delta_init",
                "require 0 < delta_min < delta_init < delta_max",
            ));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("attack.rprop.max_epochs", "must be >= 1"));
        }
        if self.patience == 0 {
            return Err(Error::config("attack.rprop.patience", "must be >= 1"));
        }
        if self.restarts == 0 {
            return Err(Error::config("attack.rprop.restarts", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-weight step-size state.
#[derive(Debug, Clone)]
pub struct Rprop {
    cfg: RpropConfig,
    steps: Vec<f64>,
    prev_grad: Vec<f64>,
}

impl Rprop {
    pub fn new(cfg: RpropConfig, len: usize) -> Self {
        Self {
            cfg,
            steps: vec![cfg.delta_init; len],
            prev_grad: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    /// One update. On a gradient sign change the step shrinks, the weight is
    /// left alone and the stored gradient is zeroed so the next step does
    /// not adapt again.
    pub fn step(&mut self, weights: &mut [f64], grad: &[f64]) {
        let c = &self.cfg;
        for ((w, &g), (step, prev)) in weights
            .iter_mut()
            .zip(grad)
            .zip(self.steps.iter_mut().zip(self.prev_grad.iter_mut()))
        {
            let s = g * *prev;
            if s > 0.0 {
                *step = (*step * c.eta_plus).min(c.delta_max);
                *w -= g.signum() * *step;
                *prev = g;
            } else if s < 0.0 {
                *step = (*step * c.eta_minus).max(c.delta_min);
                *prev = 0.0;
            } else {
                if g != 0.0 {
                    *w -= g.signum() * *step;
                }
                *prev = g;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub n: usize,
    pub k: usize,
    pub training_set_size: usize,
    pub train_accuracy: f64,
    /// Filled in once the model is scored on a held-out set.
    pub test_accuracy: Option<f64>,
    pub epochs_used: usize,
    pub restart_index_chosen: usize,
    pub restart_train_accuracies: Vec<f64>,
}

struct RestartOutcome {
    model: XorModel,
    accuracy: f64,
    epochs: usize,
}

fn train_once(data: &Dataset, k: usize, cfg: &RpropConfig, seed: u64) -> Result<RestartOutcome> {
    let mut rng = stream_from_seed(seed);
    let mut model = XorModel::random(k, data.dim(), &mut rng)?;
    let mut opt = Rprop::new(*cfg, model.weights().len());
    let mut grad = vec![0.0; model.weights().len()];
    let mut best = model.clone();
    let mut best_acc = -1.0;
    let mut stale = 0;
    let mut epochs = 0;
    let total = data.len() as f64;
    for _ in 0..cfg.max_epochs {
        epochs += 1;
        let (_, correct) = batch_pass(&model, data, Some(&mut grad));
        let acc = correct as f64 / total;
        if acc > best_acc {
            best_acc = acc;
            best.clone_from(&model);
            stale = 0;
        } else {
            stale += 1;
        }
        if correct == data.len() || stale >= cfg.patience {
            break;
        }
        opt.step(model.weights_mut(), &grad);
    }
    Ok(RestartOutcome {
        model: best,
        accuracy: best_acc,
        epochs,
    })
}

/// Trains `cfg.restarts` models from independent Normal(0, 1) starts and
/// keeps the one with the highest training accuracy (earliest restart on
/// ties). Restart seeds are drawn from `rng` before any work starts.
pub fn train_rprop<R: Rng + ?Sized>(
    data: &Dataset,
    k: usize,
    cfg: &RpropConfig,
    rng: &mut R,
) -> Result<(XorModel, TrainReport)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    if k == 0 {
        return Err(Error::config("attack.k", "XOR fan-in must be >= 1"));
    }
    let seeds: Vec<u64> = (0..cfg.restarts).map(|_| rng.random()).collect();
    let outcomes = seeds
        .par_iter()
        .map(|&s| train_once(data, k, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let mut chosen = 0;
    for (i, o) in outcomes.iter().enumerate() {
        if o.accuracy > outcomes[chosen].accuracy {
            chosen = i;
        }
    }
    let restart_train_accuracies = outcomes.iter().map(|o| o.accuracy).collect();
    let best = outcomes.into_iter().nth(chosen).expect("restarts >= 1");
    let report = TrainReport {
        n: data.dim() - 1,
        k,
        training_set_size: data.len(),
        train_accuracy: best.accuracy,
        test_accuracy: None,
        epochs_used: best.epochs,
        restart_index_chosen: chosen,
        restart_train_accuracies,
    };
    Ok((best.model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::model::loss_and_gradient;

    #[test]
    fn default_config_is_valid() {
        RpropConfig::default().validate().unwrap();
        let bad = RpropConfig {
            eta_plus: 0.9,
            ..RpropConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RpropConfig {
            delta_init: 100.0,
            ..RpropConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = RpropConfig {
            restarts: 0,
            ..RpropConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn step_adaptation_rules() {
        let cfg = RpropConfig::default();
        let mut opt = Rprop::new(cfg, 1);
        let mut w = [0.0];
        opt.step(&mut w, &[1.0]);
        assert!((w[0] + 0.1).abs() < 1e-15);
        opt.step(&mut w, &[2.0]);
        assert!((opt.steps()[0] - 0.12).abs() < 1e-15);
        assert!((w[0] + 0.22).abs() < 1e-15);
        // sign change: shrink, no move
        opt.step(&mut w, &[-1.0]);
        assert!((opt.steps()[0] - 0.06).abs() < 1e-15);
        assert!((w[0] + 0.22).abs() < 1e-15);
        // stored gradient was zeroed: plain step with the shrunk size
        opt.step(&mut w, &[-1.0]);
        assert!((opt.steps()[0] - 0.06).abs() < 1e-15);
        assert!((w[0] + 0.16).abs() < 1e-15);
    }

    #[test]
    fn steps_stay_clamped() {
        let cfg = RpropConfig::default();
        let mut opt = Rprop::new(cfg, 1);
        let mut w = [0.0];
        for _ in 0..200 {
            opt.step(&mut w, &[1.0]);
        }
        assert_eq!(opt.steps()[0], cfg.delta_max);
        let mut flip = 1.0;
        for _ in 0..200 {
            opt.step(&mut w, &[flip]);
            flip = -flip;
        }
        assert!(opt.steps()[0] >= cfg.delta_min);
    }

    fn toy() -> Dataset {
        // generated by w = (1, −2, 0.5) with bit = [w·x < 0]
        let w = [1.0, -2.0, 0.5];
        let pts = [
            [1.0, 1.0, 1.0],
            [-1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0],
            [-1.0, -1.0, 1.0],
        ];
        Dataset::from_parts(
            3,
            pts.iter()
                .map(|x| {
                    (
                        x.to_vec(),
                        w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() < 0.0,
                    )
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let (_, report) =
            train_rprop(&toy(), 1, &RpropConfig::default(), &mut stream_from_seed(1)).unwrap();
        assert_eq!(report.train_accuracy, 1.0);
        assert_eq!(report.restart_train_accuracies.len(), 10);
        assert!(report
            .restart_train_accuracies
            .iter()
            .all(|&a| a <= report.train_accuracy));
    }

    #[test]
    fn loss_falls_over_first_epochs() {
        let data = toy();
        let cfg = RpropConfig::default();
        let mut model = XorModel::new(vec![vec![0.0, 0.0, 0.0]]).unwrap();
        let mut opt = Rprop::new(cfg, 3);
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let (loss, g) = loss_and_gradient(&model, &data).unwrap();
            assert!(loss < last, "{loss} !< {last}");
            last = loss;
            opt.step(model.weights_mut(), &g);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = toy();
        let a = train_rprop(&data, 2, &RpropConfig::default(), &mut stream_from_seed(9)).unwrap();
        let b = train_rprop(&data, 2, &RpropConfig::default(), &mut stream_from_seed(9)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn rejects_empty_and_zero_k() {
        let empty = Dataset::from_parts(3, vec![]).unwrap();
        let cfg = RpropConfig::default();
        assert!(train_rprop(&empty, 1, &cfg, &mut stream_from_seed(0)).is_err());
        assert!(train_rprop(&toy(), 0, &cfg, &mut stream_from_seed(0)).is_err());
    }
}
