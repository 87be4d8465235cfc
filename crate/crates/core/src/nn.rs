//! Shared-trunk actor-critic network with hand-written backprop.
//!
//! Fully connected tanh trunk feeding one linear output layer whose 18
//! columns are the dimension logits (5), the operation logits (12), and the
//! state value (1). Parameters live in one flat vector so the optimizer and
//! gradient checks can treat them uniformly.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionMask, ActionSampler, ActionSpec, Behaviour, Observation, NUM_OPS, OBS_LEN};
use crate::ruleset::NUM_DIMS;

pub const HEAD_OUT: usize = NUM_DIMS + NUM_OPS + 1;
pub const VALUE_COL: usize = NUM_DIMS + NUM_OPS;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("observation has {got} entries, network expects {want}")]
    InputSize { got: usize, want: usize },
    #[error("every entry of the {0} head is masked")]
    FullyMasked(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub data: Vec<f64>,
}

/// Activations kept for the backward pass.
pub struct Forward {
    /// Layer inputs: the batch itself, then each hidden activation.
    pub acts: Vec<Array2<f64>>,
    /// Raw output layer (B x 18).
    pub out: Array2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyOutput {
    pub probs_dim: [f64; NUM_DIMS],
    pub probs_op: [f64; NUM_OPS],
    pub value: f64,
}

impl PolicyParams {
    fn layer_shapes(input: usize, hidden: &[usize]) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(hidden.len() + 1);
        let mut prev = input;
        for &h in hidden {
            shapes.push((prev, h));
            prev = h;
        }
        shapes.push((prev, HEAD_OUT));
        shapes
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        Self::layer_shapes(self.input, &self.hidden)
    }

    pub fn num_params(input: usize, hidden: &[usize]) -> usize {
        Self::layer_shapes(input, hidden)
            .iter()
            .map(|(i, o)| i * o + o)
            .sum()
    }

    /// Trunk weights get unit-norm Gaussian columns; the output layer starts at zero,
    /// giving a uniform policy and zero value.
    pub fn init(input: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let shapes = Self::layer_shapes(input, hidden);
        let mut data = Vec::with_capacity(Self::num_params(input, hidden));
        for (li, &(fan_in, fan_out)) in shapes.iter().enumerate() {
            let last = li + 1 == shapes.len();
            let mut w = Array2::<f64>::zeros((fan_in, fan_out));
            if !last {
                w.mapv_inplace(|_| rng.sample(StandardNormal));
                for mut col in w.columns_mut() {
                    let norm = col.dot(&col).sqrt().max(1e-12);
                    col /= norm;
                }
            }
            data.extend(w.iter());
            data.extend(std::iter::repeat_n(0.0, fan_out));
        }
        PolicyParams {
            input,
            hidden: hidden.to_vec(),
            data,
        }
    }

    pub fn default_network(rng: &mut impl Rng) -> Self {
        Self::init(OBS_LEN, &[512, 512], rng)
    }

    /// (offset, fan-in, fan-out) of layer `idx` in the flat vector.
    fn layer(&self, idx: usize) -> (usize, usize, usize) {
        let mut off = 0;
        let mut fan_in = self.input;
        for li in 0..idx {
            let o = self.hidden[li];
            off += fan_in * o + o;
            fan_in = o;
        }
        let fan_out = self.hidden.get(idx).copied().unwrap_or(HEAD_OUT);
        (off, fan_in, fan_out)
    }

    fn weights<'a>(
        &self,
        data: &'a [f64],
        idx: usize,
    ) -> (ArrayView2<'a, f64>, ArrayView1<'a, f64>) {
        let (off, i, o) = self.layer(idx);
        let w = ArrayView2::from_shape((i, o), &data[off..off + i * o]).expect("layer shape");
        let b = ArrayView1::from(&data[off + i * o..off + i * o + o]);
        (w, b)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Forward {
        assert_eq!(x.ncols(), self.input, "input width");
        let n_layers = self.hidden.len() + 1;
        let mut acts = Vec::with_capacity(n_layers);
        acts.push(x.to_owned());
        for li in 0..self.hidden.len() {
            let (w, b) = self.weights(&self.data, li);
            let mut z = acts[li].dot(&w);
            z += &b;
            z.mapv_inplace(f64::tanh);
            acts.push(z);
        }
        let (w, b) = self.weights(&self.data, n_layers - 1);
        let mut out = acts[n_layers - 1].dot(&w);
        out += &b;
        Forward { acts, out }
    }

    /// Gradient of a scalar loss given `d loss / d out` (B x 18).
    pub fn backward(&self, fwd: &Forward, dout: ArrayView2<f64>) -> Vec<f64> {
        let n_layers = self.hidden.len() + 1;
        let mut grad = vec![0.0; self.data.len()];
        let mut delta = dout.to_owned();
        for li in (0..n_layers).rev() {
            let (off, i, o) = self.layer(li);
            let a = &fwd.acts[li];
            let dw = a.t().dot(&delta);
            grad[off..off + i * o].copy_from_slice(dw.as_slice().expect("standard layout"));
            let db = delta.sum_axis(Axis(0));
            grad[off + i * o..off + i * o + o].copy_from_slice(db.as_slice().expect("contiguous"));
            if li > 0 {
                let (w, _) = self.weights(&self.data, li);
                let mut d = delta.dot(&w.t());
                // tanh'(z) = 1 - tanh(z)^2, and acts[li] holds tanh(z).
                d.zip_mut_with(a, |g, &h| *g *= 1.0 - h * h);
                delta = d;
            }
        }
        grad
    }
}

/// Softmax over unmasked entries; masked entries get exactly zero.
pub fn masked_softmax(logits: ArrayView1<f64>, mask: &[bool]) -> Option<Array1<f64>> {
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut p = Array1::zeros(logits.len());
    let mut sum = 0.0;
    for (j, (&z, &m)) in logits.iter().zip(mask).enumerate() {
        if m {
            p[j] = (z - max).exp();
            sum += p[j];
        }
    }
    p /= sum;
    Some(p)
}

/// Splits a batch of raw outputs into per-head distributions and values.
pub fn head_outputs(
    out: ArrayView2<f64>,
    masks: &[ActionMask],
) -> Result<(Array2<f64>, Array2<f64>, Array1<f64>), PolicyError> {
    let b = out.nrows();
    let mut pd = Array2::zeros((b, NUM_DIMS));
    let mut po = Array2::zeros((b, NUM_OPS));
    for (r, m) in masks.iter().enumerate() {
        let row = out.row(r);
        let a = masked_softmax(row.slice(s![..NUM_DIMS]), &m.dims)
            .ok_or(PolicyError::FullyMasked("dimension"))?;
        let o = masked_softmax(row.slice(s![NUM_DIMS..VALUE_COL]), &m.ops)
            .ok_or(PolicyError::FullyMasked("operation"))?;
        pd.row_mut(r).assign(&a);
        po.row_mut(r).assign(&o);
    }
    Ok((pd, po, out.column(VALUE_COL).to_owned()))
}

/// Action distributions and value for one node.
pub fn policy_forward(
    params: &PolicyParams,
    obs: &Observation,
    mask: &ActionMask,
) -> Result<PolicyOutput, PolicyError> {
    if obs.len() != params.input {
        return Err(PolicyError::InputSize {
            got: obs.len(),
            want: params.input,
        });
    }
    let mut x = Array2::zeros((1, params.input));
    obs.write_f64(x.as_slice_mut().expect("contiguous"));
    let fwd = params.forward(x.view());
    let (pd, po, v) = head_outputs(fwd.out.view(), std::slice::from_ref(mask))?;
    let mut out = PolicyOutput {
        probs_dim: [0.0; NUM_DIMS],
        probs_op: [0.0; NUM_OPS],
        value: v[0],
    };
    out.probs_dim
        .iter_mut()
        .zip(pd.row(0))
        .for_each(|(d, &s)| *d = s);
    out.probs_op
        .iter_mut()
        .zip(po.row(0))
        .for_each(|(d, &s)| *d = s);
    Ok(out)
}

fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

/// Independent draws from the two heads.
pub fn sample_action(probs_dim: &[f64], probs_op: &[f64], rng: &mut impl Rng) -> ActionSpec {
    ActionSpec {
        dim: sample_categorical(probs_dim, rng),
        op: sample_categorical(probs_op, rng),
    }
}

/// Rollout sampler backed by a parameter snapshot.
pub struct PolicySampler<'a, R> {
    pub params: &'a PolicyParams,
    pub rng: R,
}

impl<R: Rng> ActionSampler for PolicySampler<'_, R> {
    fn sample(&mut self, obs: &Observation, mask: &ActionMask) -> (ActionSpec, Behaviour) {
        let out =
            policy_forward(self.params, obs, mask).expect("environment only offers nonempty masks");
        let spec = sample_action(&out.probs_dim, &out.probs_op, &mut self.rng);
        (
            spec,
            Behaviour {
                probs_dim: out.probs_dim,
                probs_op: out.probs_op,
                value: out.value,
            },
        )
    }
}
