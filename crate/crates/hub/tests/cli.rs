use std::path::Path;
use std::process::{Command, Output};

use fbipose_core::data_io::{read_dataset, AnnotationRecord, Pose3dRecord, SyntheticSample};
use fbipose_core::metrics::mpjpe_p1;
use fbipose_core::skeleton::{convert_pose_to_fbi, SkeletonTopology};

fn fbipose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbipose")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = fbipose(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert!(fbipose(&["--help"]).status.success());
    assert!(fbipose(&["convert-fbi", "--help"]).status.success());
    let bad = fbipose(&["--no-such-flag"]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("Usage"));
    assert!(!fbipose(&["frobnicate"]).status.success());
    assert!(!fbipose(&[]).status.success());
}

#[test]
fn convert_fbi_matches_library_conversion() {
    let dir = tempfile::tempdir().unwrap();
    let (samples, pose3d, fbi) = (dir.path().join("s.jsonl"), dir.path().join("p3.jsonl"), dir.path().join("fbi.jsonl"));
    ok(&["--seed", "3", "synth", "--count", "50", "--out", p(&samples), "--pose3d-out", p(&pose3d)]);
    ok(&["convert-fbi", "--alpha", "35", "--input", p(&pose3d), "--out", p(&fbi)]);

    let poses = read_dataset::<Pose3dRecord>(&pose3d).unwrap().records;
    let labels = read_dataset::<AnnotationRecord>(&fbi).unwrap().records;
    assert_eq!(poses.len(), 50);
    assert_eq!(labels.len(), 50);
    for (pose, rec) in poses.iter().zip(&labels) {
        assert_eq!(pose.id, rec.task_id);
        let expected = convert_pose_to_fbi(&pose.joints, 35.0, SkeletonTopology::mpii()).unwrap().labels;
        assert_eq!(rec.labels, expected);
    }
    // The synthetic file carries the same labels.
    let synth = read_dataset::<SyntheticSample>(&samples).unwrap().records;
    assert!(synth.iter().zip(&labels).all(|(s, r)| s.labels == r.labels));
}

#[test]
fn synth_convert_lift_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    ok(&["synth", "--count", "20", "--out", p(&d("s")), "--pose2d-out", p(&d("p2")), "--pose3d-out", p(&d("p3"))]);
    ok(&["convert-fbi", "--alpha", "0", "--input", p(&d("p3")), "--out", p(&d("fbi"))]);

    let synth = read_dataset::<SyntheticSample>(&d("s")).unwrap().records;
    let cam = synth[0].camera;
    let (scale, cx, cy) = (cam.scale.to_string(), cam.cx.to_string(), cam.cy.to_string());
    let (p2, fbi) = (d("p2"), d("fbi"));
    let args = ["--pose2d", p(&p2), "--fbi", p(&fbi), "--scale", &scale, "--cx", &cx, "--cy", &cy];
    ok(&[&["lift"], &args[..], &["--spine", "behind", "--out", p(&d("lifted"))]].concat());

    let truth = read_dataset::<Pose3dRecord>(&d("p3")).unwrap().records;
    let lifted = read_dataset::<Pose3dRecord>(&d("lifted")).unwrap().records;
    for (t, l) in truth.iter().zip(&lifted) {
        // The spine sign is fixed to "behind", so only poses that lean that
        // way are recovered exactly.
        let err = mpjpe_p1(&l.joints, &t.joints).unwrap();
        let spine = t.joints.0[7][2] - t.joints.0[6][2];
        if spine >= 0.0 {
            assert!(err < 1e-6, "pose {}: {err}", t.id);
        }
    }

    ok(&[&["enumerate"], &args[..], &["--id", "0", "--out", p(&d("cands"))]].concat());
    let cands = read_dataset::<Pose3dRecord>(&d("cands")).unwrap().records;
    assert_eq!(cands.len(), 2, "only the spine is ambiguous at alpha 0");
    let best = cands.iter().map(|c| mpjpe_p1(&c.joints, &truth[0].joints).unwrap()).fold(f64::INFINITY, f64::min);
    assert!(best < 1e-6);
}

#[test]
fn hist_reports_uncertain_fraction() {
    let dir = tempfile::tempdir().unwrap();
    let (s, p3) = (dir.path().join("s"), dir.path().join("p3"));
    ok(&["synth", "--count", "200", "--out", p(&s), "--pose3d-out", p(&p3)]);
    let out = ok(&["hist", "--input", p(&p3), "--alpha", "35", "--out", p(&dir.path().join("h.csv"))]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let frac = v["uncertain_fraction"].as_f64().unwrap();
    assert!(frac > 0.0 && frac < 1.0);
    assert!(std::fs::read_to_string(dir.path().join("h.csv")).unwrap().lines().count() > 1);
}

#[test]
fn train_eval_finetune_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = |n: &str| dir.path().join(n);
    let config = d("cfg.toml");
    std::fs::write(
        &config,
        "[model]\nhidden = 16\nfbi_hidden = 8\n[train]\niterations = 30\nbatch_size = 8\n\
         [head]\niterations = 20\n[weak.finetune]\niterations = 20\nbatch_size = 8\n",
    )
    .unwrap();
    let c = p(&config);
    ok(&["--config", c, "synth", "--count", "40", "--studio", "--out", p(&d("sup"))]);
    ok(&["--config", c, "--seed", "9", "synth", "--count", "40", "--out", p(&d("weak"))]);
    ok(&["--config", c, "train", "--data", p(&d("sup")), "--val", p(&d("sup")), "--out", p(&d("ck")), "--history", p(&d("h"))]);
    let out = ok(&["eval", "--checkpoint", p(&d("ck")), "--data", p(&d("sup")), "--out", p(&d("r.csv"))]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["aggregate"]["count"], 40);
    assert!(report["aggregate"]["mpjpe_p1"].as_f64().unwrap().is_finite());
    ok(&[
        "--config", c, "finetune-weak", "--checkpoint", p(&d("ck")), "--weak", p(&d("weak")), "--supervised", p(&d("sup")),
        "--head-poses", "20", "--out", p(&d("ck2")),
    ]);
    ok(&["eval", "--rigid", "--checkpoint", p(&d("ck2")), "--data", p(&d("weak"))]);
    assert!(!fbipose(&["eval", "--checkpoint", p(&d("missing")), "--data", p(&d("sup"))]).status.success());
}

#[test]
fn export_from_log_filters() {
    let dir = tempfile::tempdir().unwrap();
    let (p3, fbi) = (dir.path().join("p3"), dir.path().join("fbi"));
    ok(&["synth", "--count", "5", "--out", p(&dir.path().join("s")), "--pose3d-out", p(&p3)]);
    ok(&["convert-fbi", "--input", p(&p3), "--out", p(&fbi)]);
    let out = ok(&["export", "--log", p(&fbi), "--annotator", "convert-fbi"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 6);
    let out = ok(&["export", "--log", p(&fbi), "--annotator", "someone-else"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);
}
