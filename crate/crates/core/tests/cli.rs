use std::path::Path;
use std::process::{Command, Output};

use brep2shape::cli::RunReport;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_brep2shape"))
}

/// Runs a subcommand with `--report` in `dir`; returns exit code, report and stdout.
fn run(dir: &Path, args: &[&str]) -> (i32, RunReport, String) {
    let report = dir.join("report.json");
    let _ = std::fs::remove_file(&report);
    let out: Output = bin().current_dir(dir).args(args).arg("--report").arg(&report).output().unwrap();
    let text = std::fs::read_to_string(&report).expect("every invocation writes a report");
    let rep: RunReport = serde_json::from_str(&text).unwrap();
    let code = out.status.code().unwrap();
    assert_eq!(code == 0, rep.errors.is_empty(), "exit code 0 iff no errors: {rep:?}");
    assert_eq!(code, rep.exit_code());
    (code, rep, String::from_utf8(out.stdout).unwrap())
}

fn ok(dir: &Path, args: &[&str]) -> RunReport {
    let (code, rep, _) = run(dir, args);
    assert_eq!(code, 0, "{args:?}: {:?}", rep.errors);
    rep
}

/// model.json -> prims.json -> data/<stem>.b2s + data/<stem>.b2t
fn prepare(dir: &Path, model: &str, stem: &str) {
    let prims = format!("{stem}.prims.json");
    ok(dir, &["decompose", "--input", model, "--out", &prims]);
    std::fs::create_dir_all(dir.join("data")).unwrap();
    ok(dir, &["sample", "--input", model, "--primitives", &prims, "--out", &format!("data/{stem}.b2s")]);
    ok(dir, &["tokenize", "--input", model, "--primitives", &prims, "--out", &format!("data/{stem}.b2t")]);
}

#[test]
fn pipeline_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rep = ok(d, &["gen", "--kind", "box", "--out", "box.json"]);
    assert_eq!(rep.metrics["faces"], 6);
    let rep = ok(d, &["decompose", "--input", "box.json", "--out", "box.prims.json"]);
    assert_eq!(rep.config["tau"], 0.995);
    assert_eq!(rep.metrics["triangles"], 12);
    assert!(rep.metrics["max_residual"].as_f64().unwrap() < 1e-11);
    assert_eq!(rep.inputs.len(), 1);
    assert_eq!(rep.inputs[0].sha256.len(), 64);
    std::fs::create_dir(d.join("data")).unwrap();
    let rep = ok(d, &["sample", "--input", "box.json", "--primitives", "box.prims.json", "--out", "data/box.b2s"]);
    assert_eq!(rep.config["m"], 3);
    ok(d, &["tokenize", "--input", "box.json", "--primitives", "box.prims.json", "--out", "data/box.b2t"]);
    let rep = ok(d, &["pretrain", "--data-dir", "data", "--steps", "50", "--out", "ck.b2c"]);
    assert_eq!(rep.outputs.len(), 2);
    let trace = std::fs::read_to_string(d.join("ck.csv")).unwrap();
    assert_eq!(trace.lines().count(), 51);
    assert!(rep.metrics["final_loss"]["total"].as_f64().unwrap().is_finite());
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--kind", "trimmed_plate", "--out", "plate.json"]);
    prepare(d, "plate.json", "plate");
    let read = |p: &str| std::fs::read(d.join(p)).unwrap();
    let train = ["pretrain", "--data-dir", "data", "--steps", "5", "--width", "16", "--seed", "3", "--out", "a.b2c"];
    ok(d, &train);
    let first: Vec<Vec<u8>> = ["plate.prims.json", "data/plate.b2s", "data/plate.b2t", "a.b2c", "a.csv"].map(read).to_vec();
    prepare(d, "plate.json", "plate");
    ok(d, &train);
    let second: Vec<Vec<u8>> = ["plate.prims.json", "data/plate.b2s", "data/plate.b2t", "a.b2c", "a.csv"].map(read).to_vec();
    assert_eq!(first, second);
}

#[test]
fn verify_convergence_prints_quadratic_slope() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep, stdout) = run(dir.path(), &["verify-convergence", "--curve", "circle", "--levels", "6", "--out", "c.csv"]);
    assert_eq!(code, 0);
    let slope = rep.metrics["slope"].as_f64().unwrap();
    assert!((1.9..=2.1).contains(&slope), "slope {slope}");
    assert!(stdout.contains("slope"));
    let csv = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    let rep = ok(dir.path(), &["verify-convergence", "--curve", "ellipse"]);
    assert!((1.9..=2.1).contains(&rep.metrics["slope"].as_f64().unwrap()));
}

#[test]
fn bad_tau_is_an_argument_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--kind", "cylinder", "--out", "c.json"]);
    let (code, rep, _) = run(d, &["decompose", "--input", "c.json", "--tau", "1.5", "--out", "p.json"]);
    assert_eq!(code, 2);
    assert_eq!(rep.errors[0].kind, "argument");
    assert!(!d.join("p.json").exists());
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--kind", "box", "--out", "box.json"]);
    ok(d, &["gen", "--kind", "cylinder", "--out", "cyl.json"]);
    ok(d, &["decompose", "--input", "cyl.json", "--out", "cyl.prims.json"]);

    let (code, rep, _) = run(d, &["decompose", "--input", "missing.json", "--out", "x.json"]);
    assert_eq!((code, rep.errors[0].kind.as_str()), (3, "io"));

    std::fs::write(d.join("broken.json"), "{\"version\": 1, \"faces\": [").unwrap();
    let (code, rep, _) = run(d, &["decompose", "--input", "broken.json", "--out", "x.json"]);
    assert_eq!((code, rep.errors[0].kind.as_str()), (3, "parse"));

    let (code, rep, _) = run(d, &["tokenize", "--input", "box.json", "--primitives", "cyl.prims.json", "--out", "x.b2t"]);
    assert_eq!((code, rep.errors[0].kind.as_str()), (4, "integrity"));

    let (code, _, _) = run(d, &["sample", "--input", "box.json", "--primitives", "cyl.prims.json", "--caps", "0,8", "--out", "x"]);
    assert_eq!(code, 2);

    let (code, rep, _) = run(d, &["gradcheck", "--count", "5", "--tolerance", "1e-30"]);
    assert_eq!((code, rep.errors[0].kind.as_str()), (5, "check"));

    let (code, rep, _) = run(d, &["gen", "--kind", "sphere", "--out", "s.json"]);
    assert_eq!(code, 2);
    assert!(rep.errors[0].message.contains("sphere"));
    assert!(!d.join("x.json").exists() && !d.join("x.b2t").exists() && !d.join("s.json").exists());
}

#[test]
fn unparsable_command_line_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (code, rep, _) = run(dir.path(), &["decompose", "--bogus"]);
    assert_eq!(code, 2);
    assert_eq!(rep.command, "decompose");
    assert!(rep.errors[0].message.contains("--bogus"));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn pretrain_needs_matching_targets() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--kind", "box", "--out", "box.json"]);
    prepare(d, "box.json", "box");
    std::fs::remove_file(d.join("data/box.b2s")).unwrap();
    let (code, _, _) = run(d, &["pretrain", "--data-dir", "data", "--steps", "1", "--out", "ck.b2c"]);
    assert_eq!(code, 4);
    assert!(!d.join("ck.b2c").exists());
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    let rep = ok(dir.path(), &["gradcheck", "--seed", "1"]);
    assert_eq!(rep.metrics["checked"], 50);
    assert!(rep.metrics["max_rel_error"].as_f64().unwrap() < 1e-4);
}

#[test]
fn dataset_pretrain_then_finetune() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let rep = ok(d, &["gen", "--kind", "mixed", "--count", "4", "--seed", "2", "--out", "set"]);
    assert_eq!(rep.outputs.len(), 6);
    for i in 0..4 {
        let stem = format!("model_{i:04}");
        prepare(d, &format!("set/{stem}.json"), &stem);
    }
    ok(d, &["pretrain", "--data-dir", "data", "--steps", "8", "--width", "16", "--lr", "1e-3", "--out", "pre.b2c"]);
    for (task, labels) in [("classify", "set/labels.json"), ("segment", "set/face_labels.json")] {
        let rep = ok(
            d,
            &[
                "finetune", "--checkpoint", "pre.b2c", "--data-dir", "data", "--task", task, "--labels", labels,
                "--strategy", "linear", "--steps", "8", "--out", "ft.b2c",
            ],
        );
        let acc = rep.metrics["train_accuracy"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&acc));
        let ck = brep2shape::net::read_checkpoint(&d.join("ft.b2c")).unwrap();
        assert!(ck.params.get("cls.w").is_some() && ck.params.get("head.face.w").is_none());
    }
    std::fs::write(d.join("partial.json"), "{\"model_0000\": 0}").unwrap();
    let (code, _, _) = run(
        d,
        &["finetune", "--checkpoint", "pre.b2c", "--data-dir", "data", "--task", "classify", "--labels", "partial.json", "--out", "x.b2c"],
    );
    assert_eq!(code, 4);
}

#[test]
fn gen_takes_comma_separated_dims() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--kind", "box", "--dims", "1,2,3", "--out", "box.json"]);
    let model = brep2shape::brep::io::read_model(&d.join("box.json")).unwrap();
    let (lo, hi) = model.bounding_box();
    assert_eq!([hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]], [1.0, 2.0, 3.0]);
    let (code, rep, _) = run(d, &["gen", "--kind", "box", "--dims", "1,2", "--out", "bad.json"]);
    assert_eq!((code, rep.errors[0].kind.as_str()), (2, "argument"));
    assert!(!d.join("bad.json").exists());
}
