use std::path::Path;
use std::process::{Command, Output};

fn quadwind(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadwind")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn short_hover(dir: &Path) -> std::path::PathBuf {
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "seed = 5\n[sim]\nduration = 20.0\n[wind]\nkind = \"dryden\"\nmean = [1.0, 2.0, 0.0]\nsigma = [1.06, 1.06, 0.7]\n").unwrap();
    cfg
}

#[test]
fn help_exits_zero() {
    let o = quadwind(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("repro"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(quadwind(&["fly"]).status.code(), Some(1));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = quadwind(&["simulate", "--config", p(&dir.path().join("nope.toml")), "--out", p(&dir.path().join("log.csv"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("file not found"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[quad]\nmas = 1.5\n").unwrap();
    let o = quadwind(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("log.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mas"), "{}", stderr(&o));
}

#[test]
fn invalid_config_value_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[quad]\nmass = -1.0\n").unwrap();
    let o = quadwind(&["simulate", "--config", p(&cfg), "--out", p(&dir.path().join("log.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn nn_estimate_requires_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_hover(dir.path());
    let log = dir.path().join("log.csv");
    assert!(quadwind(&["simulate", "--config", p(&cfg), "--out", p(&log)]).status.success());
    let o = quadwind(&["estimate", "--config", p(&cfg), "--method", "nn", "--log", p(&log), "--out", p(&dir.path().join("e.csv"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_carry_provenance_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_hover(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        assert!(quadwind(&["simulate", "--config", p(&cfg), "--out", p(out)]).status.success());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("# quadwind "), "{}", &text[..80]);
    assert!(text.lines().next().unwrap().ends_with(" seed=5"));
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let est = dir.path().join("wt.csv");
    assert!(quadwind(&["estimate", "--config", p(&cfg), "--method", "wt", "--log", p(&a), "--out", p(&est)]).status.success());
    let first = |f: &Path| std::fs::read_to_string(f).unwrap().lines().next().unwrap().to_string();
    assert_eq!(first(&est), first(&a));

    let eval = dir.path().join("eval");
    let o = quadwind(&["evaluate", "--config", p(&cfg), "--estimates", p(&est), "--out", p(&eval)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("North MAE/sigma"));
    for f in ["report.txt", "report.toml", "hist_wt_north.csv", "hist_wt_east.csv"] {
        assert!(eval.join(f).exists(), "{f}");
    }
}

#[test]
fn dataset_train_estimate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("cfg.toml");
    std::fs::write(&cfg, "[sim]\nduration = 60.0\n[train]\nepochs = 2\nhidden = [6, 6]\n").unwrap();
    let log = d.join("log.csv");
    let ds = d.join("ds.csv");
    let model = d.join("m.qwm");
    let loss = d.join("loss.csv");
    let est = d.join("nn.csv");
    for args in [
        vec!["simulate", "--config", p(&cfg), "--out", p(&log)],
        vec!["build-dataset", "--config", p(&cfg), "--log", p(&log), "--out", p(&ds)],
        vec!["train", "--config", p(&cfg), "--dataset", p(&ds), "--model", p(&model), "--loss", p(&loss)],
        vec!["estimate", "--config", p(&cfg), "--method", "nn", "--model", p(&model), "--log", p(&log), "--out", p(&est)],
    ] {
        let o = quadwind(&args);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    }
    let loss_text = std::fs::read_to_string(&loss).unwrap();
    assert_eq!(loss_text.lines().filter(|l| !l.starts_with('#')).count(), 3);

    // A hover model refuses a line log unless told otherwise.
    let mismatch = quadwind(&[
        "estimate", "--config", p(&cfg), "--method", "nn", "--model", p(&model), "--log", p(&log), "--out", p(&est), "--trajectory", "line",
    ]);
    assert_ne!(mismatch.status.code(), Some(0));
    let allowed = quadwind(&[
        "estimate", "--config", p(&cfg), "--method", "nn", "--model", p(&model), "--log", p(&log), "--out", p(&est), "--trajectory", "line", "--allow-mismatch",
    ]);
    assert!(allowed.status.success());
}

#[test]
fn grid_spec_without_csv_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "[wind]\nkind = \"grid\"\npath = \"x.qwg\"\n").unwrap();
    let o = quadwind(&["gen-wind", "--config", p(&cfg), "--out", p(&dir.path().join("w.csv"))]);
    assert_eq!(o.status.code(), Some(1));
}
