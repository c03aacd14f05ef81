//! Toy-scale hyperbolic Siamese network.
//!
//! Both inputs of a pair go through one weight-tied encoder; the embeddings are
//! compared into a change feature, reduced by a fully connected layer and then
//! classified either by the hyperbolic head (clip → lift → Hyp-BLR) or by the
//! Euclidean baseline with linear scores `4⟨z − p_k, t_k⟩`.

mod metrics;
mod train;

pub use metrics::{evaluate, Confusion, Metrics};
pub use train::{train, EpochStats, OptimizerKind, TrainConfig, TrainOutcome};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::hyplayers::{
    bce_from_logit, clip_features, clip_jacobian, hyperplane_score_grads, lift_jacobian, lift_to_ball, prob_from_logit,
    ClipRadius, HypBlrParams, Label,
};
use crate::linalg::{axpy, dot, scale};

/// A labelled observation pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSample {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub label: Label,
}

/// Affine layer `y = W x + b`, `W` stored row-major as `outputs × inputs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weight: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// Glorot-normal weights, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let sd = (2.0 / (inputs + outputs) as f64).sqrt();
        let weight = (0..inputs * outputs).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { inputs, outputs, weight, bias: vec![0.0; outputs] }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.weight.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| dot(row, x) + b).collect()
    }

    /// Accumulates parameter gradients for upstream `g` and returns `∂/∂x`.
    fn backward(&self, x: &[f64], g: &[f64], grad: &mut DenseGrad) -> Vec<f64> {
        let mut gx = vec![0.0; self.inputs];
        for (o, go) in g.iter().enumerate() {
            let row = o * self.inputs..(o + 1) * self.inputs;
            axpy(*go, x, &mut grad.weight[row.clone()]);
            axpy(*go, &self.weight[row], &mut gx);
            grad.bias[o] += go;
        }
        gx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrad {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseGrad {
    fn zeros_like(d: &Dense) -> Self {
        Self { weight: vec![0.0; d.weight.len()], bias: vec![0.0; d.bias.len()] }
    }
}

/// Fully connected encoder: tanh on hidden layers, linear output layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub layers: Vec<Dense>,
}

impl Encoder {
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        Self { layers: sizes.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect() }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Layer sizes `[d_in, hidden..., embed]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.activations(x).pop().unwrap_or_default())
    }

    /// Inputs to every layer followed by the final output.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let last = self.layers.len().saturating_sub(1);
        let mut acts = vec![x.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut y = layer.forward(acts.last().unwrap());
            if i < last {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(y);
        }
        acts
    }

    fn backward(&self, acts: &[Vec<f64>], g_out: &[f64], grads: &mut [DenseGrad]) {
        let last = self.layers.len() - 1;
        let mut g = g_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                for (gi, a) in g.iter_mut().zip(&acts[i + 1]) {
                    *gi *= 1.0 - a * a;
                }
            }
            g = self.layers[i].backward(&acts[i], &g, &mut grads[i]);
        }
    }
}

/// How the two embeddings are combined into a change feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Comparison {
    /// `|e₁ − e₂|`, symmetric in the pair.
    #[default]
    AbsDiff,
    /// `e₁ − e₂`.
    Signed,
}

impl Comparison {
    pub fn name(self) -> &'static str {
        match self {
            Comparison::AbsDiff => "absdiff",
            Comparison::Signed => "signed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "absdiff" => Some(Comparison::AbsDiff),
            "signed" => Some(Comparison::Signed),
            _ => None,
        }
    }
}

/// Elementwise `|e₁ − e₂|`.
pub fn change_feature(e1: &[f64], e2: &[f64]) -> Result<Vec<f64>> {
    check_dim(e1.len(), e2.len())?;
    Ok(e1.iter().zip(e2).map(|(a, b)| (a - b).abs()).collect())
}

/// `‖e₁ − e₂‖`, the scalar pair distance (diagnostic only).
pub fn euclidean_pair_distance(e1: &[f64], e2: &[f64]) -> Result<f64> {
    check_dim(e1.len(), e2.len())?;
    Ok(e1.iter().zip(e2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum HeadMode {
    #[default]
    Hyperbolic,
    /// Linear class scores `4⟨z − p_k, t_k⟩`, the `c → 0` limit of the hyperbolic head.
    Euclidean,
}

impl HeadMode {
    pub fn name(self) -> &'static str {
        match self {
            HeadMode::Hyperbolic => "hyperbolic",
            HeadMode::Euclidean => "euclidean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hyperbolic" => Some(HeadMode::Hyperbolic),
            "euclidean" => Some(HeadMode::Euclidean),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Head {
    pub fc: Dense,
    pub hyp: HypBlrParams,
    pub clip: ClipRadius,
    pub mode: HeadMode,
}

impl Head {
    /// Class logit `s₁ − s₀` for an FC output `z`.
    pub fn logit(&self, z: &[f64]) -> Result<f64> {
        let zc = clip_features(z, self.clip);
        let [s0, s1] = self.scores(&zc)?;
        Ok(s1 - s0)
    }

    fn scores(&self, zc: &[f64]) -> Result<[f64; 2]> {
        match self.mode {
            HeadMode::Hyperbolic => {
                let y = lift_to_ball(zc, self.hyp.ball());
                Ok([
                    crate::hyplayers::hyp_blr_score(&y, &self.hyp, Label::NoChange)?,
                    crate::hyplayers::hyp_blr_score(&y, &self.hyp, Label::Change)?,
                ])
            }
            HeadMode::Euclidean => Ok([0, 1].map(|k| euclidean_score(zc, &self.hyp.planes()[k].p_raw, &self.hyp.planes()[k].t))),
        }
    }

    /// Loss for one FC output and the gradients of the head parameters; returns `∂loss/∂z`.
    fn backward(&self, z: &[f64], label: Label, grads: &mut ModelGrads) -> Result<(f64, f64, Vec<f64>)> {
        let zc = clip_features(z, self.clip);
        let planes = self.hyp.planes();
        let (logit, g_zc, g_p, g_t) = match self.mode {
            HeadMode::Hyperbolic => {
                let ball = self.hyp.ball();
                let y = lift_to_ball(&zc, ball);
                let s = [0, 1].map(|k| hyperplane_score_grads(&y, &lift_to_ball(&planes[k].p_raw, ball), &planes[k].t, ball));
                let [s0, s1] = s;
                let (s0, s1) = (s0?, s1?);
                let g_y: Vec<f64> = s1.x.iter().zip(&s0.x).map(|(a, b)| a - b).collect();
                let g_zc = lift_jacobian(&zc, ball).t_mul_vec(&g_y);
                let g_p = [&s0, &s1].map(|s| s.p.clone());
                let g_p = [0, 1].map(|k| lift_jacobian(&planes[k].p_raw, ball).t_mul_vec(&g_p[k]));
                (s1.score - s0.score, g_zc, g_p, [s0.t, s1.t])
            }
            HeadMode::Euclidean => {
                let s = [0, 1].map(|k| euclidean_score(&zc, &planes[k].p_raw, &planes[k].t));
                let g_zc: Vec<f64> = planes[1].t.iter().zip(&planes[0].t).map(|(a, b)| 4.0 * (a - b)).collect();
                let g_p = [0, 1].map(|k| scale(&planes[k].t, -4.0));
                let g_t = [0, 1].map(|k| planes[k].p_raw.iter().zip(&zc).map(|(p, z)| 4.0 * (z - p)).collect());
                (s[1] - s[0], g_zc, g_p, g_t)
            }
        };
        let (loss, dlogit) = bce_from_logit(logit, label);
        for k in 0..2 {
            let sign = if k == 1 { dlogit } else { -dlogit };
            axpy(sign, &g_p[k], &mut grads.p_raw[k]);
            axpy(sign, &g_t[k], &mut grads.t[k]);
        }
        let g_z = clip_jacobian(z, self.clip).t_mul_vec(&scale(&g_zc, dlogit));
        Ok((loss, prob_from_logit(logit), g_z))
    }
}

fn euclidean_score(z: &[f64], p: &[f64], t: &[f64]) -> f64 {
    4.0 * z.iter().zip(p).zip(t).map(|((z, p), t)| (z - p) * t).sum::<f64>()
}

/// Layer sizes of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    pub ball_dim: usize,
}

impl Architecture {
    pub fn encoder_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim];
        s.extend(&self.hidden);
        s.push(self.embed_dim);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Encoder,
    Fc,
    Hyperbolic,
}

/// Name, shape and optimizer metadata of one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub group: ParamGroup,
    pub decay: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub encoder: Encoder,
    pub head: Head,
    pub comparison: Comparison,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads {
    pub encoder: Vec<DenseGrad>,
    pub fc: DenseGrad,
    pub p_raw: [Vec<f64>; 2],
    pub t: [Vec<f64>; 2],
}

impl ModelGrads {
    pub fn zeros_like(model: &Model) -> Self {
        let planes = model.head.hyp.planes();
        Self {
            encoder: model.encoder.layers.iter().map(DenseGrad::zeros_like).collect(),
            fc: DenseGrad::zeros_like(&model.head.fc),
            p_raw: [0, 1].map(|k| vec![0.0; planes[k].p_raw.len()]),
            t: [0, 1].map(|k| vec![0.0; planes[k].t.len()]),
        }
    }

    /// Tensors in the same order as [`Model::param_info`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.encoder {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out.push(&self.fc.weight);
        out.push(&self.fc.bias);
        for k in 0..2 {
            out.push(&self.p_raw[k]);
            out.push(&self.t[k]);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for l in &mut self.encoder {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out.push(&mut self.fc.weight);
        out.push(&mut self.fc.bias);
        for (p, t) in self.p_raw.iter_mut().zip(self.t.iter_mut()) {
            out.push(p);
            out.push(t);
        }
        out
    }

    fn add_scaled(&mut self, other: &ModelGrads, alpha: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            axpy(alpha, src, dst);
        }
    }
}

impl Model {
    pub fn init<R: Rng + ?Sized>(
        arch: &Architecture,
        ball: crate::ball::PoincareBall,
        clip: ClipRadius,
        mode: HeadMode,
        comparison: Comparison,
        rng: &mut R,
    ) -> Result<Self> {
        if arch.input_dim == 0 || arch.embed_dim == 0 || arch.ball_dim == 0 || arch.hidden.contains(&0) {
            return Err(Error::InvalidParameter("layer sizes must be positive".into()));
        }
        let encoder = Encoder::init(&arch.encoder_sizes(), rng);
        let fc = Dense::init(arch.embed_dim, arch.ball_dim, rng);
        let hyp = HypBlrParams::init(ball, arch.ball_dim, rng);
        Ok(Self { encoder, head: Head { fc, hyp, clip, mode }, comparison })
    }

    pub fn architecture(&self) -> Architecture {
        let sizes = self.encoder.sizes();
        Architecture {
            input_dim: sizes[0],
            hidden: sizes[1..sizes.len() - 1].to_vec(),
            embed_dim: *sizes.last().unwrap(),
            ball_dim: self.head.fc.outputs,
        }
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.encoder.encode(x)
    }

    fn compare(&self, e1: &[f64], e2: &[f64]) -> Vec<f64> {
        match self.comparison {
            Comparison::AbsDiff => e1.iter().zip(e2).map(|(a, b)| (a - b).abs()).collect(),
            Comparison::Signed => e1.iter().zip(e2).map(|(a, b)| a - b).collect(),
        }
    }

    fn check_sample(&self, s: &PairSample) -> Result<()> {
        check_dim(self.encoder.input_dim(), s.x1.len())?;
        check_dim(self.encoder.input_dim(), s.x2.len())
    }

    /// FC output `z` for a pair.
    pub fn features(&self, s: &PairSample) -> Result<Vec<f64>> {
        self.check_sample(s)?;
        let cf = self.compare(&self.encode(&s.x1)?, &self.encode(&s.x2)?);
        Ok(self.head.fc.forward(&cf))
    }

    /// Logit `s₁ − s₀` of "change".
    pub fn logit(&self, s: &PairSample) -> Result<f64> {
        self.head.logit(&self.features(s)?)
    }

    /// Predicted probability of change.
    pub fn forward(&self, s: &PairSample) -> Result<f64> {
        Ok(prob_from_logit(self.logit(s)?))
    }

    /// Loss of one sample with its gradients accumulated into `grads`; returns `(loss, p̂)`.
    pub fn backward(&self, s: &PairSample, grads: &mut ModelGrads) -> Result<(f64, f64)> {
        self.check_sample(s)?;
        let a1 = self.encoder.activations(&s.x1);
        let a2 = self.encoder.activations(&s.x2);
        let (e1, e2) = (a1.last().unwrap(), a2.last().unwrap());
        let cf = self.compare(e1, e2);
        let z = self.head.fc.forward(&cf);
        let (loss, prob, g_z) = self.head.backward(&z, s.label, grads)?;
        let g_cf = self.head.fc.backward(&cf, &g_z, &mut grads.fc);
        let (g_e1, g_e2): (Vec<f64>, Vec<f64>) = match self.comparison {
            Comparison::AbsDiff => e1
                .iter()
                .zip(e2)
                .zip(&g_cf)
                .map(|((a, b), g)| {
                    let d = a - b;
                    let sg = if d > 0.0 {
                        *g
                    } else if d < 0.0 {
                        -g
                    } else {
                        0.0
                    };
                    (sg, -sg)
                })
                .unzip(),
            Comparison::Signed => (g_cf.clone(), g_cf.iter().map(|g| -g).collect()),
        };
        self.encoder.backward(&a1, &g_e1, &mut grads.encoder);
        self.encoder.backward(&a2, &g_e2, &mut grads.encoder);
        Ok((loss, prob))
    }

    /// Mean Hyp-BCE over the batch and the gradients of that mean.
    ///
    /// Samples are processed in parallel and reduced in batch order.
    pub fn loss_and_grads(&self, batch: &[PairSample]) -> Result<(f64, ModelGrads)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let parts: Vec<(f64, ModelGrads)> = batch
            .par_iter()
            .map(|s| {
                let mut g = ModelGrads::zeros_like(self);
                let (loss, _) = self.backward(s, &mut g)?;
                Ok((loss, g))
            })
            .collect::<Result<_>>()?;
        let inv = 1.0 / batch.len() as f64;
        let mut total = ModelGrads::zeros_like(self);
        let mut loss = 0.0;
        for (l, g) in &parts {
            loss += l;
            total.add_scaled(g, inv);
        }
        Ok((loss * inv, total))
    }

    /// Metadata for every parameter tensor in canonical order.
    pub fn param_info(&self) -> Vec<ParamInfo> {
        let mut out = Vec::new();
        let info = |name: String, shape: Vec<usize>, group, decay| ParamInfo { name, shape, group, decay };
        for (i, l) in self.encoder.layers.iter().enumerate() {
            out.push(info(format!("encoder.{i}.weight"), vec![l.outputs, l.inputs], ParamGroup::Encoder, true));
            out.push(info(format!("encoder.{i}.bias"), vec![l.outputs], ParamGroup::Encoder, false));
        }
        let fc = &self.head.fc;
        out.push(info("fc.weight".into(), vec![fc.outputs, fc.inputs], ParamGroup::Fc, true));
        out.push(info("fc.bias".into(), vec![fc.outputs], ParamGroup::Fc, false));
        let d = self.head.hyp.dim();
        for k in 0..2 {
            out.push(info(format!("hyp.{k}.p"), vec![d], ParamGroup::Hyperbolic, false));
            out.push(info(format!("hyp.{k}.t"), vec![d], ParamGroup::Hyperbolic, false));
        }
        out
    }

    /// Parameter tensors in the order of [`param_info`](Self::param_info).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.encoder.layers {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        out.push(&self.head.fc.weight);
        out.push(&self.head.fc.bias);
        for plane in self.head.hyp.planes() {
            out.push(&plane.p_raw);
            out.push(&plane.t);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for l in &mut self.encoder.layers {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        out.push(&mut self.head.fc.weight);
        out.push(&mut self.head.fc.bias);
        for plane in self.head.hyp.planes_mut() {
            out.push(&mut plane.p_raw);
            out.push(&mut plane.t);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters concatenated in canonical order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        check_dim(self.param_count(), flat.len())?;
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}
