use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ball::PoincareBall;
use crate::error::{check_dim, Error, Result};
use crate::hyplayers::{ClipRadius, Label, DEFAULT_CLIP_RADIUS};

use super::{evaluate, Architecture, Comparison, HeadMode, Model, ModelGrads, PairSample, ParamGroup};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    AdamW,
    /// SGD with heavy-ball momentum and coupled weight decay.
    Sgd,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::Sgd => "sgd",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "adamw" => Some(OptimizerKind::AdamW),
            "sgd" => Some(OptimizerKind::Sgd),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub curvature: f64,
    pub ball_dim: usize,
    pub clip: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub lr_encoder: f64,
    pub lr_fc: f64,
    pub lr_hyp: f64,
    /// Multiplier applied every `lr_decay_every` epochs.
    pub lr_decay: f64,
    pub lr_decay_every: usize,
    pub weight_decay: f64,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    pub comparison: Comparison,
    pub mode: HeadMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            curvature: 1.0,
            ball_dim: 8,
            clip: DEFAULT_CLIP_RADIUS,
            epochs: 30,
            batch_size: 128,
            seed: 42,
            lr_encoder: 1e-6,
            lr_fc: 1e-3,
            lr_hyp: 1e-1,
            lr_decay: 0.1,
            lr_decay_every: 10,
            weight_decay: 0.01,
            optimizer: OptimizerKind::AdamW,
            momentum: 0.9,
            hidden: vec![64, 64],
            embed_dim: 16,
            comparison: Comparison::AbsDiff,
            mode: HeadMode::Hyperbolic,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.lr_decay_every == 0 {
            return bad("lr_decay_every must be at least 1".into());
        }
        for (name, v) in [
            ("lr_encoder", self.lr_encoder),
            ("lr_fc", self.lr_fc),
            ("lr_hyp", self.lr_hyp),
            ("lr_decay", self.lr_decay),
            ("weight_decay", self.weight_decay),
            ("momentum", self.momentum),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        ClipRadius::new(self.clip)?;
        PoincareBall::from_c(self.curvature)?;
        Ok(())
    }

    pub fn architecture(&self, input_dim: usize) -> Architecture {
        Architecture { input_dim, hidden: self.hidden.clone(), embed_dim: self.embed_dim, ball_dim: self.ball_dim }
    }

    fn lr(&self, group: ParamGroup, epoch: usize) -> f64 {
        let base = match group {
            ParamGroup::Encoder => self.lr_encoder,
            ParamGroup::Fc => self.lr_fc,
            ParamGroup::Hyperbolic => self.lr_hyp,
        };
        base * self.lr_decay.powi((epoch / self.lr_decay_every) as i32)
    }

    /// A freshly initialized model for inputs of dimension `input_dim`.
    pub fn init_model(&self, input_dim: usize) -> Result<Model> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Model::init(
            &self.architecture(input_dim),
            PoincareBall::from_c(self.curvature)?,
            ClipRadius::new(self.clip)?,
            self.mode,
            self.comparison,
            &mut rng,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochStats>,
}

struct Optimizer {
    kind: OptimizerKind,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    step: i32,
}

impl Optimizer {
    fn new(kind: OptimizerKind, model: &Model) -> Self {
        let zeros: Vec<Vec<f64>> = model.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Self { kind, first: zeros.clone(), second: zeros, step: 0 }
    }

    fn update(&mut self, model: &mut Model, grads: &ModelGrads, config: &TrainConfig, epoch: usize) {
        self.step += 1;
        let info = model.param_info();
        let bc1 = 1.0 - BETA1.powi(self.step);
        let bc2 = 1.0 - BETA2.powi(self.step);
        let grads = grads.tensors();
        for (i, param) in model.tensors_mut().into_iter().enumerate() {
            let lr = config.lr(info[i].group, epoch);
            let wd = if info[i].decay { config.weight_decay } else { 0.0 };
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for (j, p) in param.iter_mut().enumerate() {
                let g = grads[i][j];
                match self.kind {
                    OptimizerKind::AdamW => {
                        *p -= lr * wd * *p;
                        m[j] = BETA1 * m[j] + (1.0 - BETA1) * g;
                        v[j] = BETA2 * v[j] + (1.0 - BETA2) * g * g;
                        *p -= lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + ADAM_EPS);
                    }
                    OptimizerKind::Sgd => {
                        m[j] = config.momentum * m[j] + g + wd * *p;
                        *p -= lr * m[j];
                    }
                }
            }
        }
    }
}

/// Trains from the seeded initialization of `config`.
///
/// Each history row is measured on the full training set after the epoch,
/// in dataset order, with threshold 0.5.
pub fn train(dataset: &[PairSample], config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let first = dataset.first().ok_or(Error::Empty("dataset"))?;
    let dim = first.x1.len();
    for s in dataset {
        check_dim(dim, s.x1.len())?;
        check_dim(dim, s.x2.len())?;
    }
    let changes = dataset.iter().filter(|s| s.label == Label::Change).count();
    if changes == 0 || changes == dataset.len() {
        return Err(Error::SingleClass);
    }

    let mut model = config.init_model(dim)?;
    let mut optimizer = Optimizer::new(config.optimizer, &model);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<PairSample> = chunk.iter().map(|&i| dataset[i].clone()).collect();
            let (_, grads) = model.loss_and_grads(&batch)?;
            optimizer.update(&mut model, &grads, config, epoch);
        }
        let m = evaluate(dataset, &model, 0.5)?;
        history.push(EpochStats { epoch: epoch + 1, loss: m.loss, accuracy: m.accuracy, f1: m.f1 });
    }
    Ok(TrainOutcome { model, history })
}
