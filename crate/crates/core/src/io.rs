//! Text file formats: embedding CSV, pair CSV, history CSV, key=value config
//! and the versioned model file.
//!
//! Floats are written with Rust's shortest round-trip representation, so every
//! file reads back bit-for-bit.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ball::{Curvature, PoincareBall};
use crate::error::{Error, Result};
use crate::hyplayers::{ClipRadius, Label};
use crate::siamese::{Architecture, Comparison, EpochStats, HeadMode, Model, OptimizerKind, PairSample, TrainConfig};
use crate::synthdata::{HierarchySpec, DEFAULT_CHANGE_FRACTION, DEFAULT_TEST_COUNT, DEFAULT_TRAIN_COUNT};

/// First line of every model file.
pub const MODEL_HEADER: &str = "hypsiam-model v1";

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            Error::format(line, format!("expected {expected_len} fields, found {len}"))
        }
        kind => Error::format(line, format!("{kind:?}")),
    }
}

fn parse_f64(field: &str, line: usize, column: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::format(line, format!("column {column}: not a number: {field:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::format(line, format!("column {column}: non-finite value")))
    }
}

fn check_header(header: &csv::StringRecord, expected: &[String]) -> Result<()> {
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got.len() != expected.len() || got.iter().zip(expected).any(|(g, e)| g != e) {
        let want = if expected.len() > 6 {
            format!("{},...,{}", expected[..4].join(","), expected[expected.len() - 1])
        } else {
            expected.join(",")
        };
        return Err(Error::format(1, format!("bad header, expected {want}")));
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(input)
}

fn header_of<R: Read>(rdr: &mut csv::Reader<R>) -> Result<csv::StringRecord> {
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.is_empty() || header.iter().all(|h| h.trim().is_empty()) {
        return Err(Error::format(1, "missing header"));
    }
    Ok(header)
}

/// A named point set read from an embedding CSV (`id,v0,...,v{n-1}`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Embeddings {
    pub ids: Vec<String>,
    pub points: Vec<Vec<f64>>,
}

impl Embeddings {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }
}

pub fn read_embeddings<R: Read>(input: R) -> Result<Embeddings> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    let dim = header.len().saturating_sub(1);
    if dim == 0 {
        return Err(Error::format(1, "embedding file needs at least one value column"));
    }
    let expected: Vec<String> = std::iter::once("id".to_string()).chain((0..dim).map(|i| format!("v{i}"))).collect();
    check_header(&header, &expected)?;

    let mut out = Embeddings::default();
    let mut seen = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record[0].trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::format(line, format!("duplicate id {id:?}")));
        }
        let point = (1..=dim).map(|j| parse_f64(&record[j], line, &expected[j])).collect::<Result<Vec<_>>>()?;
        out.ids.push(id);
        out.points.push(point);
    }
    if out.is_empty() {
        return Err(Error::format(1, "no data rows"));
    }
    Ok(out)
}

pub fn write_embeddings<W: Write>(out: W, emb: &Embeddings) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = emb.dim();
    let header: Vec<String> = std::iter::once("id".to_string()).chain((0..dim).map(|i| format!("v{i}"))).collect();
    w.write_record(&header).map_err(csv_error)?;
    for (id, p) in emb.ids.iter().zip(&emb.points) {
        let row: Vec<String> = std::iter::once(id.clone()).chain(p.iter().map(f64::to_string)).collect();
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn pair_header(dim: usize) -> Vec<String> {
    ["id".to_string(), "label".to_string()]
        .into_iter()
        .chain((0..dim).map(|i| format!("x{i}")))
        .chain((0..dim).map(|i| format!("y{i}")))
        .collect()
}

/// Reads a pair CSV with header `id,label,x0..x{D-1},y0..y{D-1}`.
pub fn read_pairs<R: Read>(input: R) -> Result<Vec<PairSample>> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    let width = header.len();
    if width < 4 || (width - 2) % 2 != 0 {
        return Err(Error::format(1, format!("pair header has {width} columns; expected id,label and two equal vector blocks")));
    }
    let dim = (width - 2) / 2;
    let expected = pair_header(dim);
    check_header(&header, &expected)?;

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let label = match record[1].trim() {
            "0" => Label::NoChange,
            "1" => Label::Change,
            other => return Err(Error::format(line, format!("label must be 0 or 1, got {other:?}"))),
        };
        let value = |j: usize| parse_f64(&record[j], line, &expected[j]);
        let x1 = (2..2 + dim).map(value).collect::<Result<Vec<_>>>()?;
        let x2 = (2 + dim..2 + 2 * dim).map(value).collect::<Result<Vec<_>>>()?;
        out.push(PairSample { x1, x2, label });
    }
    if out.is_empty() {
        return Err(Error::format(1, "no data rows"));
    }
    Ok(out)
}

/// Writes pairs with ids `0..n`.
pub fn write_pairs<W: Write>(out: W, pairs: &[PairSample]) -> Result<()> {
    let dim = pairs.first().map_or(0, |p| p.x1.len());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(pair_header(dim)).map_err(csv_error)?;
    for (i, p) in pairs.iter().enumerate() {
        crate::error::check_dim(dim, p.x1.len())?;
        crate::error::check_dim(dim, p.x2.len())?;
        let row: Vec<String> = [i.to_string(), p.label.index().to_string()]
            .into_iter()
            .chain(p.x1.iter().chain(&p.x2).map(f64::to_string))
            .collect();
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `epoch,loss,accuracy,f1`.
pub fn write_history<W: Write>(out: W, history: &[EpochStats]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "loss", "accuracy", "f1"]).map_err(csv_error)?;
    for h in history {
        w.write_record([h.epoch.to_string(), h.loss.to_string(), h.accuracy.to_string(), h.f1.to_string()])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_history<R: Read>(input: R) -> Result<Vec<EpochStats>> {
    let mut rdr = reader(input);
    let header = header_of(&mut rdr)?;
    let expected: Vec<String> = ["epoch", "loss", "accuracy", "f1"].map(String::from).to_vec();
    check_header(&header, &expected)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let epoch = record[0].trim().parse().map_err(|_| Error::format(line, "epoch must be a non-negative integer"))?;
        out.push(EpochStats {
            epoch,
            loss: parse_f64(&record[1], line, "loss")?,
            accuracy: parse_f64(&record[2], line, "accuracy")?,
            f1: parse_f64(&record[3], line, "f1")?,
        });
    }
    Ok(out)
}

/// Everything a config file can set: training, generator and dataset sizes.
/// The single `seed` key seeds both training and generation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub data: HierarchySpec,
    pub train_count: usize,
    pub test_count: usize,
    pub change_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            data: HierarchySpec::default(),
            train_count: DEFAULT_TRAIN_COUNT,
            test_count: DEFAULT_TEST_COUNT,
            change_fraction: DEFAULT_CHANGE_FRACTION,
        }
    }
}

/// Keys accepted in a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "curvature",
    "ball_dim",
    "clip",
    "epochs",
    "batch_size",
    "lr_encoder",
    "lr_fc",
    "lr_hyp",
    "lr_decay",
    "lr_decay_every",
    "weight_decay",
    "optimizer",
    "momentum",
    "hidden",
    "embed_dim",
    "comparison",
    "mode",
    "depth",
    "branching",
    "dim",
    "class_sep",
    "nuisance_strength",
    "noise_std",
    "train_count",
    "test_count",
    "change_fraction",
];

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are ignored.
    /// Unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::format(line, format!("expected key=value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::format(line, format!("unknown key {key:?}")));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::format(line, format!("key {key:?} given twice")));
            }
            if value.is_empty() {
                return Err(Error::format(line, format!("key {key:?} has no value")));
            }
            cfg.set(key, value).map_err(|msg| Error::format(line, format!("{key}: {msg}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("cannot parse {v:?}"))
        }
        let t = &mut self.train;
        let d = &mut self.data;
        match key {
            "seed" => {
                let s = num(value)?;
                t.seed = s;
                d.seed = s;
            }
            "curvature" => t.curvature = num(value)?,
            "ball_dim" => t.ball_dim = num(value)?,
            "clip" => t.clip = num(value)?,
            "epochs" => t.epochs = num(value)?,
            "batch_size" => t.batch_size = num(value)?,
            "lr_encoder" => t.lr_encoder = num(value)?,
            "lr_fc" => t.lr_fc = num(value)?,
            "lr_hyp" => t.lr_hyp = num(value)?,
            "lr_decay" => t.lr_decay = num(value)?,
            "lr_decay_every" => t.lr_decay_every = num(value)?,
            "weight_decay" => t.weight_decay = num(value)?,
            "momentum" => t.momentum = num(value)?,
            "optimizer" => t.optimizer = OptimizerKind::parse(value).ok_or("expected adamw or sgd")?,
            "comparison" => t.comparison = Comparison::parse(value).ok_or("expected absdiff or signed")?,
            "mode" => t.mode = HeadMode::parse(value).ok_or("expected hyperbolic or euclidean")?,
            "hidden" => {
                t.hidden = if value == "none" {
                    Vec::new()
                } else {
                    value.split(',').map(|s| num(s.trim())).collect::<std::result::Result<_, _>>()?
                }
            }
            "embed_dim" => t.embed_dim = num(value)?,
            "depth" => d.depth = num(value)?,
            "branching" => d.branching = num(value)?,
            "dim" => d.dim = num(value)?,
            "class_sep" => d.class_sep = num(value)?,
            "nuisance_strength" => d.nuisance_strength = num(value)?,
            "noise_std" => d.noise_std = num(value)?,
            "train_count" => self.train_count = num(value)?,
            "test_count" => self.test_count = num(value)?,
            "change_fraction" => self.change_fraction = num(value)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.data.validate()?;
        if self.train.hidden.contains(&0) || self.train.embed_dim == 0 || self.train.ball_dim == 0 {
            return Err(Error::InvalidParameter("layer sizes must be positive".into()));
        }
        if self.train_count == 0 || self.test_count == 0 {
            return Err(Error::InvalidParameter("train_count and test_count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.change_fraction) {
            return Err(Error::InvalidParameter(format!("change_fraction must lie in [0, 1], got {}", self.change_fraction)));
        }
        Ok(())
    }
}

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// Writes the versioned model file: header, meta lines, then one
/// `tensor <name> <shape> <values...>` line per parameter tensor.
pub fn write_model<W: Write>(mut out: W, model: &Model) -> Result<()> {
    let arch = model.architecture();
    let ball = model.head.hyp.ball();
    writeln!(out, "{MODEL_HEADER}")?;
    writeln!(out, "curvature {}", ball.c())?;
    writeln!(out, "ball_eps {}", ball.eps())?;
    writeln!(out, "clip {}", model.head.clip.value())?;
    writeln!(out, "mode {}", model.head.mode.name())?;
    writeln!(out, "comparison {}", model.comparison.name())?;
    writeln!(out, "layers {}", join(&arch.encoder_sizes()))?;
    writeln!(out, "ball_dim {}", arch.ball_dim)?;
    for (info, values) in model.param_info().iter().zip(model.tensors()) {
        let shape = info.shape.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        writeln!(out, "tensor {} {} {}", info.name, shape, join(values))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Default)]
struct ModelMeta {
    curvature: Option<f64>,
    ball_eps: Option<f64>,
    clip: Option<f64>,
    mode: Option<HeadMode>,
    comparison: Option<Comparison>,
    layers: Option<Vec<usize>>,
    ball_dim: Option<usize>,
}

pub fn read_model<R: Read>(input: R) -> Result<Model> {
    let mut lines = BufReader::new(input).lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim_end() == MODEL_HEADER => {}
        Some((_, Err(e))) => return Err(e.into()),
        _ => return Err(Error::format(1, format!("missing {MODEL_HEADER:?} header"))),
    }

    let mut meta = ModelMeta::default();
    let mut tensors: Vec<(usize, String, Vec<usize>, Vec<f64>)> = Vec::new();
    for (i, text) in lines {
        let text = text?;
        let line = i + 1;
        let mut words = text.split_whitespace();
        let Some(key) = words.next() else { continue };
        let rest: Vec<&str> = words.collect();
        let bad = |msg: &str| Error::format(line, format!("{key}: {msg}"));
        let one = || match rest.as_slice() {
            [v] => Ok(*v),
            _ => Err(bad("expected exactly one value")),
        };
        let float = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad("not a finite number"));
        match key {
            "curvature" => meta.curvature = Some(float(one()?)?),
            "ball_eps" => meta.ball_eps = Some(float(one()?)?),
            "clip" => meta.clip = Some(float(one()?)?),
            "mode" => meta.mode = Some(HeadMode::parse(one()?).ok_or_else(|| bad("unknown mode"))?),
            "comparison" => meta.comparison = Some(Comparison::parse(one()?).ok_or_else(|| bad("unknown comparison"))?),
            "ball_dim" => meta.ball_dim = Some(one()?.parse().map_err(|_| bad("not an integer"))?),
            "layers" => {
                let sizes = rest.iter().map(|v| v.parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>();
                meta.layers = Some(sizes.map_err(|_| bad("not an integer list"))?);
            }
            "tensor" => {
                let [name, shape, values @ ..] = rest.as_slice() else {
                    return Err(bad("expected name, shape and values"));
                };
                let shape = shape
                    .split('x')
                    .map(|s| s.parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("bad shape"))?;
                let values = values.iter().map(|v| float(v)).collect::<Result<Vec<_>>>()?;
                tensors.push((line, name.to_string(), shape, values));
            }
            _ => return Err(Error::format(line, format!("unknown entry {key:?}"))),
        }
    }

    let missing = |what: &str| Error::format(0, format!("model file lacks {what:?}"));
    let layers = meta.layers.ok_or_else(|| missing("layers"))?;
    if layers.len() < 2 {
        return Err(Error::format(0, "layers needs at least input and embedding sizes"));
    }
    let arch = Architecture {
        input_dim: layers[0],
        hidden: layers[1..layers.len() - 1].to_vec(),
        embed_dim: layers[layers.len() - 1],
        ball_dim: meta.ball_dim.ok_or_else(|| missing("ball_dim"))?,
    };
    let curvature = Curvature::new(meta.curvature.ok_or_else(|| missing("curvature"))?)?;
    let ball = match meta.ball_eps {
        Some(eps) => PoincareBall::with_eps(curvature, eps)?,
        None => PoincareBall::new(curvature)?,
    };
    let clip = ClipRadius::new(meta.clip.ok_or_else(|| missing("clip"))?)?;
    let mode = meta.mode.ok_or_else(|| missing("mode"))?;
    let comparison = meta.comparison.ok_or_else(|| missing("comparison"))?;

    // Shapes come from the architecture; the init values are all overwritten below.
    let mut model = Model::init(&arch, ball, clip, mode, comparison, &mut ChaCha8Rng::seed_from_u64(0))?;
    let info = model.param_info();
    if tensors.len() != info.len() {
        return Err(Error::format(0, format!("expected {} tensors, found {}", info.len(), tensors.len())));
    }
    for ((slot, want), (line, name, shape, values)) in model.tensors_mut().into_iter().zip(&info).zip(tensors) {
        if name != want.name || shape != want.shape {
            return Err(Error::format(line, format!("expected tensor {} with shape {:?}, found {name} {shape:?}", want.name, want.shape)));
        }
        if values.len() != slot.len() {
            return Err(Error::format(line, format!("tensor {name}: expected {} values, found {}", slot.len(), values.len())));
        }
        *slot = values;
    }
    if model.head.hyp.planes().iter().any(|p| p.t.iter().all(|&v| v == 0.0)) {
        return Err(Error::ZeroNormal);
    }
    Ok(model)
}

pub fn save_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    write_model(BufWriter::new(File::create(path)?), model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    read_model(File::open(path)?)
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<PairSample>> {
    read_pairs(BufReader::new(File::open(path)?))
}

pub fn save_pairs(path: impl AsRef<Path>, pairs: &[PairSample]) -> Result<()> {
    write_pairs(BufWriter::new(File::create(path)?), pairs)
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<Embeddings> {
    read_embeddings(BufReader::new(File::open(path)?))
}

pub fn save_history(path: impl AsRef<Path>, history: &[EpochStats]) -> Result<()> {
    write_history(BufWriter::new(File::create(path)?), history)
}
