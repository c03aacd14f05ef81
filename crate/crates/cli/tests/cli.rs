//! End-to-end tests of the `hypsiam` binary: golden outputs, determinism and exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hypsiam_core::io::{load_pairs, read_history, save_model, save_pairs};
use hypsiam_core::siamese::{Architecture, Comparison, HeadMode, Model};
use hypsiam_core::{ClipRadius, Label, PairSample, PoincareBall};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

fn hypsiam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypsiam")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

const SQUARE: &str = "id,v0,v1\na,0,0\nb,1,0\nc,0,1\nd,1,1\n";

/// Small but two-class data and a short schedule, so training runs take well under a second.
const SMALL_CONFIG: &str = "# quick run\nseed = 5\ndim = 6\ntrain_count = 150\ntest_count = 60\nepochs = 4\nbatch_size = 32\nhidden = 8\nembed_dim = 6\nball_dim = 4\n";

#[test]
fn delta_unit_square_golden() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "sq.csv", SQUARE);
    let o = hypsiam(&["delta", "--input", p(&input), "--metric", "euclidean", "--base-index", "0", "--relative"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "delta=0.414214\nrelative_delta=0.585786\n");
    let again = hypsiam(&["delta", "--input", p(&input), "--metric", "euclidean", "--base-index", "0", "--relative"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn delta_json_round_trips() {
    let dir = TempDir::new().unwrap();
    let input = write(&dir, "sq.csv", SQUARE);
    let o = hypsiam(&["delta", "--input", p(&input), "--relative", "--json"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["delta"].as_f64().unwrap() - (2f64.sqrt() - 1.0)).abs() <= 1e-12);
    assert!((v["relative_delta"].as_f64().unwrap() - (2.0 - 2f64.sqrt())).abs() <= 1e-12);
    assert_eq!(v["n"], 4);
    assert_eq!(v["metric"], "euclidean");
    assert_eq!(v["sampled"], false);
    for key in ["curvature", "trials", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn delta_poincare_and_sampling() {
    let dir = TempDir::new().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut csv = String::from("id,v0,v1,v2\n");
    for i in 0..50 {
        let v: Vec<String> = (0..3).map(|_| rng.random_range(-0.5..0.5f64).to_string()).collect();
        csv.push_str(&format!("p{i},{}\n", v.join(",")));
    }
    let input = write(&dir, "cloud.csv", &csv);
    let args = ["delta", "--input", p(&input), "--metric", "poincare", "--curvature", "0.5", "--sample-size", "12", "--trials", "4", "--seed", "9", "--relative"];
    let o = hypsiam(&args);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("delta=") && text.contains(" +/- "), "{text}");
    assert_eq!(hypsiam(&args).stdout, o.stdout);

    let mut json_args = args.to_vec();
    json_args.push("--json");
    let v: serde_json::Value = serde_json::from_slice(&hypsiam(&json_args).stdout).unwrap();
    assert_eq!(v["sampled"], true);
    assert_eq!(v["trials"], 4);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["curvature"], 0.5);
    assert_eq!(v["metric"], "poincare");
}

#[test]
fn delta_exit_codes() {
    let dir = TempDir::new().unwrap();
    let same = write(&dir, "same.csv", "id,v0,v1\na,1,2\nb,1,2\nc,1,2\n");
    assert_eq!(code(&hypsiam(&["delta", "--input", p(&same), "--relative"])), 3);
    assert_eq!(code(&hypsiam(&["delta", "--input", p(&same)])), 0);

    for bad in ["id,v0\na,1\nb,x\n", "id,v0,v1\na,1\n", "id,w0\na,1\nb,2\n", "id,v0\na,1\na,2\n", ""] {
        let path = write(&dir, "bad.csv", bad);
        let o = hypsiam(&["delta", "--input", p(&path)]);
        assert_eq!(code(&o), 2, "{bad:?}");
        assert!(!o.stderr.is_empty());
    }
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&hypsiam(&["delta", "--input", p(&missing)])), 2);
    let sq = write(&dir, "sq.csv", SQUARE);
    assert_eq!(code(&hypsiam(&["delta", "--input", p(&sq), "--base-index", "9"])), 2);
    assert_eq!(code(&hypsiam(&["delta", "--input", p(&sq), "--metric", "klein"])), 2);
}

#[test]
fn gen_defaults_and_determinism() {
    let dir = TempDir::new().unwrap();
    let (tr, te) = (dir.path().join("tr.csv"), dir.path().join("te.csv"));
    let o = hypsiam(&["gen", "--out-train", p(&tr), "--out-test", p(&te)]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        stdout(&o),
        "train: rows=2000 change=1440 no_change=560 change_fraction=0.720000\n\
         test: rows=1000 change=720 no_change=280 change_fraction=0.720000\n"
    );
    assert_eq!(load_pairs(&tr).unwrap().len(), 2000);
    assert_eq!(load_pairs(&te).unwrap().len(), 1000);

    let (tr2, te2) = (dir.path().join("tr2.csv"), dir.path().join("te2.csv"));
    assert_eq!(code(&hypsiam(&["gen", "--out-train", p(&tr2), "--out-test", p(&te2)])), 0);
    assert_eq!(fs::read(&tr).unwrap(), fs::read(&tr2).unwrap());
    assert_eq!(fs::read(&te).unwrap(), fs::read(&te2).unwrap());

    let cfg = write(&dir, "seed.cfg", "seed = 43\n");
    let (tr3, te3) = (dir.path().join("tr3.csv"), dir.path().join("te3.csv"));
    assert_eq!(code(&hypsiam(&["gen", "--config", p(&cfg), "--out-train", p(&tr3), "--out-test", p(&te3)])), 0);
    assert_ne!(fs::read(&tr).unwrap(), fs::read(&tr3).unwrap());
}

#[test]
fn gen_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let (tr, te) = (dir.path().join("tr.csv"), dir.path().join("te.csv"));
    for text in ["sead = 1\n", "epochs = many\n", "depth\n", "branching = 1\n"] {
        let cfg = write(&dir, "bad.cfg", text);
        let o = hypsiam(&["gen", "--config", p(&cfg), "--out-train", p(&tr), "--out-test", p(&te)]);
        assert_eq!(code(&o), 2, "{text:?}");
    }
}

fn gen_small(dir: &TempDir) -> (PathBuf, PathBuf, PathBuf) {
    let cfg = write(dir, "small.cfg", SMALL_CONFIG);
    let (tr, te) = (dir.path().join("tr.csv"), dir.path().join("te.csv"));
    assert_eq!(code(&hypsiam(&["gen", "--config", p(&cfg), "--out-train", p(&tr), "--out-test", p(&te)])), 0);
    (cfg, tr, te)
}

#[test]
fn train_is_deterministic_and_eval_reproduces_history() {
    let dir = TempDir::new().unwrap();
    let (cfg, tr, te) = gen_small(&dir);
    for mode in ["hyperbolic", "euclidean"] {
        let m1 = dir.path().join(format!("{mode}1.model"));
        let m2 = dir.path().join(format!("{mode}2.model"));
        let o1 = hypsiam(&["train", "--config", p(&cfg), "--train", p(&tr), "--model-out", p(&m1), "--mode", mode]);
        let o2 = hypsiam(&["train", "--config", p(&cfg), "--train", p(&tr), "--model-out", p(&m2), "--mode", mode]);
        assert_eq!((code(&o1), code(&o2)), (0, 0));
        assert_eq!(o1.stdout, o2.stdout);
        assert_eq!(stdout(&o1).lines().count(), 4);
        assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
        let (h1, h2) = (dir.path().join(format!("{mode}1.model.history.csv")), dir.path().join(format!("{mode}2.model.history.csv")));
        assert_eq!(fs::read(&h1).unwrap(), fs::read(&h2).unwrap());

        let history = read_history(fs::File::open(&h1).unwrap()).unwrap();
        let last = history.last().unwrap();
        let eval = hypsiam(&["eval", "--model", p(&m1), "--data", p(&tr)]);
        assert_eq!(stdout(&eval), format!("accuracy={:.4} f1={:.4}\n", last.accuracy, last.f1));
        let json: serde_json::Value = serde_json::from_slice(&hypsiam(&["eval", "--model", p(&m1), "--data", p(&tr), "--json"]).stdout).unwrap();
        assert_eq!(json["accuracy"].as_f64().unwrap(), last.accuracy);
        assert_eq!(json["f1"].as_f64().unwrap(), last.f1);
        assert_eq!(json["loss"].as_f64().unwrap(), last.loss);

        let on_test = hypsiam(&["eval", "--model", p(&m1), "--data", p(&te)]);
        assert_eq!(code(&on_test), 0);
        assert_eq!(on_test.stdout, hypsiam(&["eval", "--model", p(&m1), "--data", p(&te)]).stdout);
    }
}

#[test]
fn zero_learning_rates_give_flat_history() {
    let dir = TempDir::new().unwrap();
    let (_, tr, _) = gen_small(&dir);
    let cfg = write(&dir, "frozen.cfg", &format!("{SMALL_CONFIG}lr_encoder = 0\nlr_fc = 0\nlr_hyp = 0\n"));
    let model = dir.path().join("m");
    let history = dir.path().join("h.csv");
    let o = hypsiam(&["train", "--config", p(&cfg), "--train", p(&tr), "--model-out", p(&model), "--history-out", p(&history)]);
    assert_eq!(code(&o), 0);
    let rows = read_history(fs::File::open(&history).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| (r.loss, r.accuracy, r.f1) == (rows[0].loss, rows[0].accuracy, rows[0].f1)));
}

#[test]
fn train_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (cfg, tr, _) = gen_small(&dir);
    let mut pairs = load_pairs(&tr).unwrap();
    pairs.iter_mut().for_each(|s| s.label = Label::Change);
    let one_class = dir.path().join("one.csv");
    save_pairs(&one_class, &pairs).unwrap();
    let model = dir.path().join("m");
    assert_eq!(code(&hypsiam(&["train", "--config", p(&cfg), "--train", p(&one_class), "--model-out", p(&model)])), 4);
    let bad = write(&dir, "bad.csv", "id,label,x0,y0\n0,3,1,2\n");
    assert_eq!(code(&hypsiam(&["train", "--train", p(&bad), "--model-out", p(&model)])), 2);
    let bad_cfg = write(&dir, "bad.cfg", "learning_rate = 1\n");
    assert_eq!(code(&hypsiam(&["train", "--config", p(&bad_cfg), "--train", p(&tr), "--model-out", p(&model)])), 2);
}

/// One input coordinate, identity encoder and fc, Euclidean scores s₀ = −4z and
/// s₁ = 4(z − 0.5): the logit 8z − 2 predicts "change" exactly when |x − y| ≥ 0.25.
fn threshold_model() -> Model {
    let arch = Architecture { input_dim: 1, hidden: vec![], embed_dim: 1, ball_dim: 1 };
    let ball = PoincareBall::from_c(1.0).unwrap();
    let mut m = Model::init(&arch, ball, ClipRadius::default(), HeadMode::Euclidean, Comparison::AbsDiff, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    m.encoder.layers[0].weight = vec![1.0];
    m.encoder.layers[0].bias = vec![0.0];
    m.head.fc.weight = vec![1.0];
    m.head.fc.bias = vec![0.0];
    let planes = m.head.hyp.planes_mut();
    planes[0].p_raw = vec![0.0];
    planes[0].t = vec![-1.0];
    planes[1].p_raw = vec![0.5];
    planes[1].t = vec![1.0];
    m
}

fn confusion_pairs() -> Vec<PairSample> {
    // TP 2, FP 1, FN 1, TN 6
    let rows = [(1.0, 1), (1.0, 1), (1.0, 0), (0.0, 1), (0.0, 0), (0.0, 0), (0.1, 0), (0.0, 0), (0.2, 0), (0.0, 0)];
    rows.iter()
        .map(|&(d, l)| PairSample { x1: vec![0.3], x2: vec![0.3 + d], label: Label::try_from(l).unwrap() })
        .collect()
}

#[test]
fn eval_hand_counted_confusion() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("m");
    save_model(&model, &threshold_model()).unwrap();
    let data = dir.path().join("ten.csv");
    save_pairs(&data, &confusion_pairs()).unwrap();

    let o = hypsiam(&["eval", "--model", p(&model), "--data", p(&data)]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "accuracy=0.8000 f1=0.6667\n");
    let v: serde_json::Value = serde_json::from_slice(&hypsiam(&["eval", "--model", p(&model), "--data", p(&data), "--json"]).stdout).unwrap();
    assert_eq!((v["tp"].as_u64(), v["fp"].as_u64(), v["fn"].as_u64(), v["tn"].as_u64()), (Some(2), Some(1), Some(1), Some(6)));

    let all_no = hypsiam(&["eval", "--model", p(&model), "--data", p(&data), "--threshold", "1.0"]);
    assert_eq!(stdout(&all_no), "accuracy=0.7000 f1=0.0000\n");
}

#[test]
fn eval_exit_codes() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("m");
    save_model(&model, &threshold_model()).unwrap();
    let wide = write(&dir, "wide.csv", "id,label,x0,x1,y0,y1\n0,1,0,0,1,1\n1,0,0,0,0,0\n");
    assert_eq!(code(&hypsiam(&["eval", "--model", p(&model), "--data", p(&wide)])), 5);
    let garbage = write(&dir, "garbage.model", "not a model\n");
    let ok = write(&dir, "ok.csv", "id,label,x0,y0\n0,1,0,1\n");
    assert_eq!(code(&hypsiam(&["eval", "--model", p(&garbage), "--data", p(&ok)])), 2);
    assert_eq!(code(&hypsiam(&["eval", "--model", p(&model), "--data", p(&ok)])), 0);
}

#[test]
fn usage_errors_exit_2_and_help_exits_0() {
    assert_eq!(code(&hypsiam(&[])), 2);
    assert_eq!(code(&hypsiam(&["frobnicate"])), 2);
    assert_eq!(code(&hypsiam(&["delta"])), 2);
    let help = hypsiam(&["--help"]);
    assert_eq!(code(&help), 0);
    assert!(stdout(&help).contains("delta"));
}
