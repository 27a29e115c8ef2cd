use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use tempfile::TempDir;

fn hdpan(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdpan"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[track_caller]
fn ok(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "stdout:\n{}\nstderr:\n{}", stdout(o), stderr(o));
}

/// A temp dir with a small synthetic benchmark in `data/`.
fn workspace() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = hdpan(
        &["synth", "--out", "data", "--train-per-class", "200", "--eval-per-class", "60", "--seed", "3"],
        dir.path(),
    );
    ok(&o);
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

const BASE: &str = "dataset = \"data\"\nn_positive = 60\nhidden = [8, 8]\nbatch = 32\n";

fn toml_file(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

#[test]
fn help_and_usage_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    ok(&hdpan(&["--help"], dir.path()));
    ok(&hdpan(&["--version"], dir.path()));
    let help = hdpan(&["train", "--help"], dir.path());
    ok(&help);
    assert!(stdout(&help).contains("patience_window"));
    assert_eq!(hdpan(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(hdpan(&["train"], dir.path()).status.code(), Some(1));
}

#[test]
fn make_pu_is_reproducible() {
    let dir = workspace();
    let args = |out: &'static str| ["make-pu", "--dataset", "data", "--n-positive", "50", "--seed", "4", "--out", out];
    ok(&hdpan(&args("a"), dir.path()));
    ok(&hdpan(&args("b"), dir.path()));
    for f in ["positives.txt", "unlabeled.txt", "manifest.toml"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
    let positives = fs::read_to_string(dir.path().join("a/positives.txt")).unwrap();
    let unlabeled = fs::read_to_string(dir.path().join("a/unlabeled.txt")).unwrap();
    assert_eq!(positives.lines().count(), 50);
    assert_eq!(unlabeled.lines().count(), 350);
    let manifest = toml_file(&dir.path().join("a/manifest.toml"));
    assert_eq!(manifest["n_positive"].as_integer(), Some(50));
    assert_eq!(manifest["n_unlabeled"].as_integer(), Some(350));
    assert_eq!(manifest["binarize"].as_str(), Some("direct"));

    let other_seed = hdpan(&["make-pu", "--dataset", "data", "--n-positive", "50", "--seed", "5", "--out", "c"], dir.path());
    ok(&other_seed);
    assert_ne!(positives, fs::read_to_string(dir.path().join("c/positives.txt")).unwrap());
}

#[test]
fn make_pu_rejects_impossible_requests() {
    let dir = workspace();
    let too_many = hdpan(&["make-pu", "--dataset", "data", "--n-positive", "201", "--out", "x"], dir.path());
    assert_eq!(too_many.status.code(), Some(2));
    assert!(stderr(&too_many).contains("only 200"), "{}", stderr(&too_many));
    let no_default = hdpan(&["make-pu", "--dataset", "data", "--out", "x"], dir.path());
    assert_eq!(no_default.status.code(), Some(1));
    assert!(stderr(&no_default).contains("n_positive"));
}

#[test]
fn train_writes_outputs_and_eval_reproduces_them() {
    let dir = workspace();
    let cfg = write_config(dir.path(), "run.toml", &format!("{BASE}max_epochs = 25\nearly_stop = false\nout_dir = \"out\"\n"));
    let start = Instant::now();
    let o = hdpan(&["train", "--config", cfg.to_str().unwrap()], dir.path());
    ok(&o);
    assert!(start.elapsed() < Duration::from_secs(60));
    let out = dir.path().join("out");
    for f in ["checkpoint.bin", "history.csv", "summary.toml", "positives.txt", "unlabeled.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("epoch,value,accuracy,precision,recall,f1"));
    assert_eq!(history.lines().count(), 26);

    let summary = toml_file(&out.join("summary.toml"));
    let run = summary["run"].as_table().unwrap();
    let hash = run["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    assert!(run["wall_time_secs"].as_float().unwrap() >= 0.0);
    let config = summary["config"].as_table().unwrap();
    assert_eq!(config["lambda"].as_float(), Some(0.1));
    assert_eq!(config["max_epochs"].as_integer(), Some(25));
    let val = summary["val"].as_table().unwrap();
    assert!(val["f1"].as_float().unwrap() > 0.9, "{val:?}");

    let e = hdpan(&["eval", "--checkpoint", "out/checkpoint.bin", "--dataset", "data", "--split", "val"], dir.path());
    ok(&e);
    let text = stdout(&e);
    assert!(text.contains(&format!("config_hash {hash}")));
    let cm = |t: &toml::Table| ["tp", "fp", "fn", "tn"].map(|k| t[k].as_integer().unwrap());
    let [tp, fp, fn_, tn] = cm(val);
    assert!(text.contains(&format!("tp {tp}  fp {fp}  fn {fn_}  tn {tn}")), "{text}");
    let [tp, fp, fn_, tn] = cm(summary["test"].as_table().unwrap());
    let t = hdpan(&["eval", "--checkpoint", "out/checkpoint.bin", "--dataset", "data", "--split", "test"], dir.path());
    ok(&t);
    assert!(stdout(&t).contains(&format!("tp {tp}  fp {fp}  fn {fn_}  tn {tn}")));

    let bad_split = hdpan(&["eval", "--checkpoint", "out/checkpoint.bin", "--dataset", "data", "--split", "train"], dir.path());
    assert_eq!(bad_split.status.code(), Some(1));
}

#[test]
fn kl_objective_fixed_split_and_repeatable_outputs() {
    let dir = workspace();
    ok(&hdpan(&["make-pu", "--dataset", "data", "--n-positive", "40", "--out", "split"], dir.path()));
    let cfg = write_config(
        dir.path(),
        "kl.toml",
        "dataset = \"data\"\nsplit = \"split\"\nobjective = \"kl\"\nhidden = [8, 8]\nmax_epochs = 5\nout_dir = \"kl\"\n",
    );
    ok(&hdpan(&["train", "--config", cfg.to_str().unwrap()], dir.path()));
    let read = |f: &str| fs::read(dir.path().join("kl").join(f)).unwrap();
    let (checkpoint, history) = (read("checkpoint.bin"), read("history.csv"));
    ok(&hdpan(&["train", "--config", cfg.to_str().unwrap()], dir.path()));
    assert_eq!(read("checkpoint.bin"), checkpoint);
    assert_eq!(read("history.csv"), history);
    for f in ["positives.txt", "unlabeled.txt"] {
        assert_eq!(fs::read(dir.path().join("split").join(f)).unwrap(), fs::read(dir.path().join("kl").join(f)).unwrap());
    }
    let summary = toml_file(&dir.path().join("kl/summary.toml"));
    assert_eq!(summary["config"]["objective"].as_str(), Some("kl"));
}

#[test]
fn configs_are_resolved_relative_to_their_file() {
    let dir = workspace();
    fs::create_dir(dir.path().join("cfgs")).unwrap();
    let cfg = write_config(
        dir.path(),
        "cfgs/rel.toml",
        "dataset = \"../data\"\nn_positive = 20\nhidden = [4, 4]\nmax_epochs = 2\nout_dir = \"../rel-out\"\n",
    );
    let elsewhere = tempfile::tempdir().unwrap();
    ok(&hdpan(&["train", "--config", cfg.to_str().unwrap()], elsewhere.path()));
    assert!(dir.path().join("rel-out/checkpoint.bin").is_file());
}

#[test]
fn config_and_data_errors() {
    let dir = workspace();
    let unknown = write_config(dir.path(), "u.toml", &format!("{BASE}colour = \"red\"\nlearning_rate = 0.1\nalpha = 0.9\n"));
    let o = hdpan(&["train", "--config", unknown.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for needle in ["unknown key `colour`", "unknown key `learning_rate`", "alpha"] {
        assert!(err.contains(needle), "{needle} not in {err}");
    }

    let missing = write_config(dir.path(), "m.toml", "dataset = \"no-such-dir\"\nn_positive = 5\n");
    let o = hdpan(&["train", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no-such-dir"));

    let cnn = write_config(dir.path(), "c.toml", "dataset = \"data\"\nn_positive = 5\narch = \"cnn\"\n");
    let o = hdpan(&["train", "--config", cnn.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("28x28x3"));

    let diverge = write_config(dir.path(), "d.toml", &format!("{BASE}lr = 1e38\nmax_epochs = 3\nout_dir = \"d\"\n"));
    let o = hdpan(&["train", "--config", diverge.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
}

fn grid_rows(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "alpha");
    assert_eq!(&header[13], "best_for_alpha");
    r.records().map(Result::unwrap).collect()
}

#[test]
fn grid_covers_every_cell_and_resumes() {
    let dir = workspace();
    let cfg = write_config(dir.path(), "g.toml", &format!("{BASE}max_epochs = 3\nout_dir = \"grid\"\n"));
    let cfg = cfg.to_str().unwrap();
    ok(&hdpan(&["grid", "--config", cfg], dir.path()));
    let csv_path = dir.path().join("grid/grid.csv");
    let rows = grid_rows(&csv_path);
    assert_eq!(rows.len(), 30);
    assert!(rows.iter().all(|r| &r[2] == "ok"));
    for alpha in ["1.5", "1.6", "1.7", "1.8", "1.9", "2"] {
        let of_alpha: Vec<_> = rows.iter().filter(|r| &r[0] == alpha).collect();
        assert_eq!(of_alpha.len(), 5, "alpha {alpha}");
        assert_eq!(of_alpha.iter().filter(|r| &r[13] == "true").count(), 1);
        let best = of_alpha.iter().find(|r| &r[13] == "true").unwrap();
        let max_f1 = of_alpha.iter().map(|r| r[8].parse::<f64>().unwrap()).fold(0.0, f64::max);
        assert_eq!(best[8].parse::<f64>().unwrap(), max_f1);
    }
    let first = fs::read(&csv_path).unwrap();

    let cells = dir.path().join("grid/cells");
    let removed = cells.join("alpha1.7_lr0.6.toml");
    let kept = cells.join("alpha2_lr0.8.toml");
    let kept_before = fs::metadata(&kept).unwrap().modified().unwrap();
    fs::remove_file(&removed).unwrap();
    ok(&hdpan(&["grid", "--config", cfg], dir.path()));
    assert!(removed.is_file());
    assert_eq!(fs::metadata(&kept).unwrap().modified().unwrap(), kept_before);
    assert_eq!(fs::read(&csv_path).unwrap(), first);
}

#[test]
fn small_grid_with_explicit_axes() {
    let dir = workspace();
    let cfg = write_config(dir.path(), "g.toml", &format!("{BASE}max_epochs = 2\nout_dir = \"g2\"\n"));
    let o = hdpan(&["grid", "--config", cfg.to_str().unwrap(), "--alphas", "1.5,2", "--lrs", "0.5"], dir.path());
    ok(&o);
    assert_eq!(grid_rows(&dir.path().join("g2/grid.csv")).len(), 2);
    let bad = hdpan(&["grid", "--config", cfg.to_str().unwrap(), "--alphas", "0.5"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn saliency_writes_a_deterministic_pgm() {
    let dir = workspace();
    let cfg = write_config(dir.path(), "s.toml", &format!("{BASE}max_epochs = 3\nout_dir = \"s\"\n"));
    ok(&hdpan(&["train", "--config", cfg.to_str().unwrap()], dir.path()));
    let args = |out: &'static str| {
        ["saliency", "--checkpoint", "s/checkpoint.bin", "--dataset", "data", "--split", "val", "--index", "7", "--out", out]
    };
    ok(&hdpan(&args("a.pgm"), dir.path()));
    ok(&hdpan(&args("b.pgm"), dir.path()));
    let a = fs::read(dir.path().join("a.pgm")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.pgm")).unwrap());
    let header = b"P5\n2 1\n255\n";
    assert_eq!(&a[..header.len()], header);
    assert_eq!(a.len(), header.len() + 2);
    assert_eq!(a[header.len()..].iter().max(), Some(&255));

    let out_of_range = hdpan(
        &["saliency", "--checkpoint", "s/checkpoint.bin", "--dataset", "data", "--index", "120", "--out", "c.pgm"],
        dir.path(),
    );
    assert_eq!(out_of_range.status.code(), Some(2));
}
