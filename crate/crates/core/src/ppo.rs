//! PPO over batches of one-step experiences.
//!
//! Per experience the advantage is `R - V_old(s)`. The total loss is the
//! clipped surrogate, plus `kl_coeff * KL(old || new)`, plus the clipped value
//! loss, minus the entropy bonus. The joint action probability is the product
//! of the two heads, so log-probs, entropies and KLs add across heads.

use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionMask, ActionSpec, Experience, NUM_OPS};
use crate::nn::{head_outputs, PolicyError, PolicyParams, HEAD_OUT};
use crate::ruleset::NUM_DIMS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Clipped-surrogate PPO with adaptive KL penalty.
    Ppo,
    /// Plain actor-critic: `-log pi(a|s) * A` plus squared value error.
    ActorCritic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub lr: f64,
    /// Inert: every experience is a single step.
    pub gamma: f64,
    pub entropy_coeff: f64,
    pub clip: f64,
    pub vf_clip: f64,
    pub vf_loss_coeff: f64,
    pub kl_target: f64,
    pub kl_coeff_init: f64,
    pub sgd_iters: usize,
    pub minibatch: usize,
    /// Experiences gathered before each update.
    pub batch_size: usize,
    pub total_timesteps: usize,
    /// Optional cap on the number of trees grown.
    pub max_rollouts: Option<usize>,
    /// Stop once a complete (untruncated) tree reaches this objective or better.
    #[serde(default)]
    pub target_objective: Option<f64>,
    pub workers: usize,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Ppo,
            lr: 5e-5,
            gamma: 1.0,
            entropy_coeff: 0.01,
            clip: 0.3,
            vf_clip: 10.0,
            vf_loss_coeff: 1.0,
            kl_target: 0.01,
            kl_coeff_init: 0.2,
            sgd_iters: 30,
            minibatch: 1000,
            batch_size: 60_000,
            total_timesteps: 10_000_000,
            max_rollouts: None,
            target_objective: None,
            workers: 1,
            hidden: vec![512, 512],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.workers == 0 {
            return Err("at least one rollout worker is required".into());
        }
        if self.minibatch == 0
            || self.batch_size == 0
            || self.sgd_iters == 0
            || self.total_timesteps == 0
        {
            return Err("batch sizes, SGD iterations and timestep budget must be positive".into());
        }
        if self.minibatch > self.batch_size {
            return Err(format!(
                "minibatch {} exceeds batch {}",
                self.minibatch, self.batch_size
            ));
        }
        if !(self.lr > 0.0 && self.clip > 0.0 && self.vf_clip > 0.0 && self.kl_target > 0.0) {
            return Err("learning rate, clip parameters and KL target must be positive".into());
        }
        if self.entropy_coeff < 0.0 || self.vf_loss_coeff < 0.0 || self.kl_coeff_init < 0.0 {
            return Err("loss coefficients must be non-negative".into());
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err("hidden layers must be nonempty and nonzero".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossCoeffs {
    pub algorithm: Algorithm,
    pub clip: f64,
    pub vf_clip: f64,
    pub vf_loss_coeff: f64,
    pub entropy_coeff: f64,
    pub kl_coeff: f64,
}

/// Inputs fixed for the duration of one update.
#[derive(Clone, Debug)]
pub struct Batch {
    pub x: Array2<f64>,
    pub masks: Vec<ActionMask>,
    pub actions: Vec<ActionSpec>,
    pub returns: Vec<f64>,
    pub old_probs_dim: Array2<f64>,
    pub old_probs_op: Array2<f64>,
    pub old_values: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Stacks experiences and evaluates the pre-update policy on them.
    pub fn from_experiences(params: &PolicyParams, exps: &[Experience]) -> Result<Batch, PpoError> {
        let n = exps.len();
        let mut x = Array2::zeros((n, params.input));
        for (i, e) in exps.iter().enumerate() {
            if e.obs.len() != params.input {
                return Err(PolicyError::InputSize {
                    got: e.obs.len(),
                    want: params.input,
                }
                .into());
            }
            e.obs
                .write_f64(x.row_mut(i).as_slice_mut().expect("row-major"));
        }
        let masks: Vec<ActionMask> = exps.iter().map(|e| e.mask).collect();
        let returns = exps
            .iter()
            .map(|e| e.reward.ok_or(PpoError::MissingReward))
            .collect::<Result<Vec<_>, _>>()?;
        let fwd = params.forward(x.view());
        let (pd, po, v) = head_outputs(fwd.out.view(), &masks)?;
        Ok(Batch {
            x,
            masks,
            actions: exps.iter().map(|e| e.action).collect(),
            returns,
            old_probs_dim: pd,
            old_probs_op: po,
            old_values: v.to_vec(),
        })
    }

    pub fn advantage(&self, i: usize) -> f64 {
        self.returns[i] - self.old_values[i]
    }

    pub fn subset(&self, idx: &[usize]) -> Batch {
        Batch {
            x: self.x.select(ndarray::Axis(0), idx),
            masks: idx.iter().map(|&i| self.masks[i]).collect(),
            actions: idx.iter().map(|&i| self.actions[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
            old_probs_dim: self.old_probs_dim.select(ndarray::Axis(0), idx),
            old_probs_op: self.old_probs_op.select(ndarray::Axis(0), idx),
            old_values: idx.iter().map(|&i| self.old_values[i]).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub kl: f64,
}

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("experience has no finalized reward")]
    MissingReward,
    #[error("non-finite loss or parameters; update rolled back")]
    NonFinite,
    #[error("empty batch")]
    Empty,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.ln())
        .sum::<f64>()
}

fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter()
        .zip(p)
        .filter(|(&qq, _)| qq > 0.0)
        .map(|(&qq, &pp)| qq * (qq.ln() - pp.ln()))
        .sum()
}

/// Mean loss over `batch` and, optionally, its gradient with respect to `params`.
pub fn loss_and_grad(
    params: &PolicyParams,
    batch: &Batch,
    coeffs: &LossCoeffs,
    want_grad: bool,
) -> Result<(LossParts, Option<Vec<f64>>), PpoError> {
    let n = batch.len();
    if n == 0 {
        return Err(PpoError::Empty);
    }
    let inv_n = 1.0 / n as f64;
    let fwd = params.forward(batch.x.view());
    let (pd, po, v) = head_outputs(fwd.out.view(), &batch.masks)?;
    let mut parts = LossParts::default();
    let mut dout = Array2::<f64>::zeros((n, HEAD_OUT));
    for i in 0..n {
        let a = batch.actions[i];
        let pd_i = pd.row(i);
        let po_i = po.row(i);
        let (pd_s, po_s) = (pd_i.as_slice().unwrap(), po_i.as_slice().unwrap());
        let qd = batch.old_probs_dim.row(i);
        let qo = batch.old_probs_op.row(i);
        let (qd_s, qo_s) = (qd.as_slice().unwrap(), qo.as_slice().unwrap());

        let logp = pd_s[a.dim].ln() + po_s[a.op].ln();
        let old_logp = qd_s[a.dim].ln() + qo_s[a.op].ln();
        let adv = batch.advantage(i);

        // d loss / d logp
        let (surr, dlogp) = match coeffs.algorithm {
            Algorithm::Ppo => {
                let ratio = (logp - old_logp).exp();
                let clipped = ratio.clamp(1.0 - coeffs.clip, 1.0 + coeffs.clip);
                let surr = (ratio * adv).min(clipped * adv);
                let active = if adv >= 0.0 {
                    ratio < 1.0 + coeffs.clip
                } else {
                    ratio > 1.0 - coeffs.clip
                };
                (surr, if active { -adv * ratio * inv_n } else { 0.0 })
            }
            Algorithm::ActorCritic => (logp * adv, -adv * inv_n),
        };
        parts.policy -= surr * inv_n;

        let (h_d, h_o) = (entropy(pd_s), entropy(po_s));
        parts.entropy += (h_d + h_o) * inv_n;
        let kl_i = if coeffs.algorithm == Algorithm::Ppo {
            kl(qd_s, pd_s) + kl(qo_s, po_s)
        } else {
            0.0
        };
        parts.kl += kl_i * inv_n;

        let value = v[i];
        let ret = batch.returns[i];
        let (vf, dv) = match coeffs.algorithm {
            Algorithm::Ppo => {
                let old = batch.old_values[i];
                let v_clipped = old + (value - old).clamp(-coeffs.vf_clip, coeffs.vf_clip);
                let l1 = (value - ret).powi(2);
                let l2 = (v_clipped - ret).powi(2);
                if l1 >= l2 {
                    (l1, 2.0 * (value - ret))
                } else {
                    (l2, 0.0)
                }
            }
            Algorithm::ActorCritic => ((value - ret).powi(2), 2.0 * (value - ret)),
        };
        parts.value += vf * inv_n;

        if want_grad {
            let mut row = dout.row_mut(i);
            let heads: [(&[f64], &[f64], usize, usize, f64); 2] = [
                (pd_s, qd_s, a.dim, 0, h_d),
                (po_s, qo_s, a.op, NUM_DIMS, h_o),
            ];
            for (p, q, taken, base, h) in heads {
                for j in 0..p.len() {
                    if p[j] == 0.0 {
                        continue;
                    }
                    let dlogp_dz = f64::from(u8::from(j == taken)) - p[j];
                    let dh_dz = -p[j] * (p[j].ln() + h);
                    let dkl_dz = p[j] - q[j];
                    row[base + j] = dlogp * dlogp_dz - coeffs.entropy_coeff * inv_n * dh_dz
                        + if coeffs.algorithm == Algorithm::Ppo {
                            coeffs.kl_coeff * inv_n * dkl_dz
                        } else {
                            0.0
                        };
                }
            }
            row[NUM_DIMS + NUM_OPS] = coeffs.vf_loss_coeff * inv_n * dv;
        }
    }
    parts.total = parts.policy
        + coeffs.kl_coeff * parts.kl * f64::from(u8::from(coeffs.algorithm == Algorithm::Ppo))
        + coeffs.vf_loss_coeff * parts.value
        - coeffs.entropy_coeff * parts.entropy;
    let grad = want_grad.then(|| params.backward(&fwd, dout.view()));
    Ok((parts, grad))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub samples: usize,
    pub sgd_steps: usize,
    /// Loss terms averaged over the minibatch steps.
    pub loss: LossParts,
    /// Mean KL between the pre- and post-update policy over the whole batch.
    pub kl: f64,
    pub entropy: f64,
    pub kl_coeff: f64,
}

/// Parameters plus optimizer state that persist across updates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PpoLearner {
    pub params: PolicyParams,
    pub adam: Adam,
    pub kl_coeff: f64,
    pub cfg: TrainConfig,
}

impl PpoLearner {
    pub fn new(params: PolicyParams, cfg: TrainConfig) -> Self {
        let adam = Adam::new(params.data.len());
        PpoLearner {
            kl_coeff: cfg.kl_coeff_init,
            params,
            adam,
            cfg,
        }
    }

    fn coeffs(&self) -> LossCoeffs {
        LossCoeffs {
            algorithm: self.cfg.algorithm,
            clip: self.cfg.clip,
            vf_clip: self.cfg.vf_clip,
            vf_loss_coeff: self.cfg.vf_loss_coeff,
            entropy_coeff: self.cfg.entropy_coeff,
            kl_coeff: if self.cfg.algorithm == Algorithm::Ppo {
                self.kl_coeff
            } else {
                0.0
            },
        }
    }

    /// Runs `sgd_iters` shuffled passes of minibatch Adam steps, then adapts the KL
    /// coefficient. On a non-finite loss the parameters and optimizer are restored.
    pub fn update(
        &mut self,
        exps: &[Experience],
        rng: &mut impl Rng,
    ) -> Result<UpdateDiagnostics, PpoError> {
        if exps.is_empty() {
            return Err(PpoError::Empty);
        }
        let batch = Batch::from_experiences(&self.params, exps)?;
        let saved = (self.params.clone(), self.adam.clone());
        let coeffs = self.coeffs();
        let n = batch.len();
        let mb = self.cfg.minibatch.min(n);
        let passes = match self.cfg.algorithm {
            Algorithm::Ppo => self.cfg.sgd_iters,
            Algorithm::ActorCritic => 1,
        };
        let mut order: Vec<usize> = (0..n).collect();
        let mut diag = UpdateDiagnostics {
            samples: n,
            ..Default::default()
        };
        for _ in 0..passes {
            order.shuffle(rng);
            for chunk in order.chunks(mb) {
                let sub = batch.subset(chunk);
                let (parts, grad) = loss_and_grad(&self.params, &sub, &coeffs, true)?;
                let grad = grad.expect("gradient requested");
                if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    (self.params, self.adam) = saved;
                    return Err(PpoError::NonFinite);
                }
                self.adam.step(&mut self.params.data, &grad, self.cfg.lr);
                diag.sgd_steps += 1;
                diag.loss.total += parts.total;
                diag.loss.policy += parts.policy;
                diag.loss.value += parts.value;
                diag.loss.entropy += parts.entropy;
                diag.loss.kl += parts.kl;
            }
        }
        if !self.params.is_finite() {
            (self.params, self.adam) = saved;
            return Err(PpoError::NonFinite);
        }
        let steps = diag.sgd_steps.max(1) as f64;
        for x in [
            &mut diag.loss.total,
            &mut diag.loss.policy,
            &mut diag.loss.value,
            &mut diag.loss.entropy,
            &mut diag.loss.kl,
        ] {
            *x /= steps;
        }
        let (after, _) = loss_and_grad(
            &self.params,
            &batch,
            &LossCoeffs {
                algorithm: Algorithm::Ppo,
                ..coeffs
            },
            false,
        )?;
        diag.kl = after.kl;
        diag.entropy = after.entropy;
        if self.cfg.algorithm == Algorithm::Ppo {
            if diag.kl > 2.0 * self.cfg.kl_target {
                self.kl_coeff *= 1.5;
            } else if diag.kl < 0.5 * self.cfg.kl_target {
                self.kl_coeff *= 0.5;
            }
        }
        diag.kl_coeff = self.kl_coeff;
        Ok(diag)
    }
}

/// Joint probability of `spec` under the current policy, for tests and diagnostics.
pub fn action_probability(
    params: &PolicyParams,
    x: ArrayView2<f64>,
    mask: &ActionMask,
    spec: ActionSpec,
) -> Result<f64, PpoError> {
    let fwd = params.forward(x);
    let (pd, po, _) = head_outputs(fwd.out.view(), std::slice::from_ref(mask))?;
    Ok(pd[[0, spec.dim]] * po[[0, spec.op]])
}
