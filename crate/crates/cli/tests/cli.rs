use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use serde_json::Value;
use tempfile::TempDir;

use superent::channels::{depolarizing_tilde, identity_channel, random_channel, TeleCovariantSpec};
use superent::linalg::{max_abs, MatrixJson};
use superent::random::{random_density, stream_rng};
use superent::superchannels::{identity_super, random_isometry_super_seeded};
use superent::{CMat, Channel, Report};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_superent"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, v: &impl serde::Serialize) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn matrix(v: &Value) -> CMat {
    CMat::try_from(serde_json::from_value::<MatrixJson>(v.clone()).unwrap()).unwrap()
}

fn validate_report(v: &Value) {
    let schema: Value =
        serde_json::from_str(include_str!("../../../schema/report.schema.json")).expect("schema parses");
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator.iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
}

#[test]
fn entropy_of_tilde_and_identity() {
    let dir = TempDir::new().unwrap();
    let tilde = write(&dir, "tilde.json", &depolarizing_tilde(2, 2));
    let o = run(&["entropy", s(&tilde)]);
    assert!(o.status.success());
    let v = json_out(&o);
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(v["witness"]["rows"].is_u64());

    let pauli = identity_channel(2).with_symmetry(Arc::new(TeleCovariantSpec::pauli())).unwrap();
    let id = write(&dir, "id.json", &pauli);
    let v = json_out(&run(&["entropy", s(&id)]));
    assert!((v["value"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert_eq!(v["method"], "telecov");

    let plain = write(&dir, "plain.json", &serde_json::json!({"kraus": [MatrixJson::from(&superent::linalg::identity(2))]}));
    let v = json_out(&run(&["entropy", s(&plain), "--restarts", "4"]));
    assert!((v["value"].as_f64().unwrap() + 1.0).abs() < 1e-4);
    assert_eq!(v["method"], "opt");
}

#[test]
fn entropy_writes_out_file() {
    let dir = TempDir::new().unwrap();
    let tilde = write(&dir, "tilde.json", &depolarizing_tilde(2, 2));
    let out = dir.path().join("res.json");
    let o = run(&["entropy", s(&tilde), "--out", s(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn parse_and_semantic_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let o = run(&["entropy", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["entropy", s(&missing)]).status.code(), Some(2));

    let two = superent::linalg::identity(2) * superent::linalg::r(2.0);
    let not_tp = write(&dir, "nottp.json", &serde_json::json!({"kraus": [MatrixJson::from(&two)]}));
    assert_eq!(run(&["entropy", s(&not_tp)]).status.code(), Some(3));

    assert_eq!(run(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));

    let cfg = write(&dir, "cfg.json", &serde_json::json!({"tolerances": {"ineq_tol": -1.0}}));
    let tilde = write(&dir, "tilde.json", &depolarizing_tilde(2, 2));
    assert_eq!(run(&["entropy", s(&tilde), "--config", s(&cfg)]).status.code(), Some(2));
}

#[test]
fn divergence_of_channel_with_itself() {
    let dir = TempDir::new().unwrap();
    let n = random_channel(2, 2, 2, 5).unwrap();
    let p = write(&dir, "n.json", &n);
    let v = json_out(&run(&["divergence", s(&p), s(&p), "--restarts", "3"]));
    assert!(v["value"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn apply_identity_superchannel() {
    let dir = TempDir::new().unwrap();
    let n = random_channel(2, 2, 2, 6).unwrap();
    let np = write(&dir, "n.json", &n);
    let sp = write(&dir, "s.json", &identity_super(2, 2));
    let o = run(&["apply-super", s(&sp), s(&np)]);
    assert!(o.status.success());
    let out: Channel = serde_json::from_slice(&o.stdout).unwrap();
    assert!(max_abs(&(out.choi - &n.choi)) < 1e-12);

    let theta = random_isometry_super_seeded(2, [2, 2, 2, 2], &mut stream_rng(1, 0)).unwrap();
    let sp = write(&dir, "t.json", &theta);
    let out: Channel = serde_json::from_slice(&run(&["apply-super", s(&sp), s(&np)]).stdout).unwrap();
    assert!(max_abs(&(out.choi - theta.apply(&n).unwrap().choi)) < 1e-10);

    let wrong = write(&dir, "w.json", &random_channel(3, 2, 2, 1).unwrap());
    assert_eq!(run(&["apply-super", s(&sp), s(&wrong)]).status.code(), Some(3));
}

#[test]
fn recover_sigma_from_its_image() {
    let dir = TempDir::new().unwrap();
    let mut rng = stream_rng(2, 0);
    let sigma = random_density(2, &mut rng);
    let n = random_channel(2, 3, 2, 9).unwrap();
    let image = n.apply(&sigma).unwrap();
    let sp = write(&dir, "sigma.json", &MatrixJson::from(&sigma));
    let np = write(&dir, "n.json", &n);
    let ip = write(&dir, "in.json", &MatrixJson::from(&image));
    let o = run(&["recover", s(&sp), s(&np), s(&ip), "--original", s(&sp)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_out(&o);
    let outs = v["outputs"].as_array().unwrap();
    assert_eq!(outs.len(), 2);
    assert_eq!(outs[0]["mode"], "petz");
    assert_eq!(outs[1]["mode"], "universal");
    for e in outs {
        assert!(max_abs(&(matrix(&e["state"]) - &sigma)) < 1e-6);
        assert!((e["fidelity"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    }
    let v = json_out(&run(&["recover", s(&sp), s(&np), s(&ip), "--mode", "petz"]));
    assert_eq!(v["outputs"].as_array().unwrap().len(), 1);
    assert!(v["outputs"][0].get("fidelity").is_none());
}

#[test]
fn recover_rejects_bad_inputs() {
    let dir = TempDir::new().unwrap();
    let sigma = random_density(2, &mut stream_rng(3, 0));
    let n = random_channel(2, 3, 2, 9).unwrap();
    let sp = write(&dir, "sigma.json", &MatrixJson::from(&sigma));
    let np = write(&dir, "n.json", &n);
    let not_state = write(&dir, "ns.json", &MatrixJson::from(&(superent::linalg::identity(3) * superent::linalg::r(2.0))));
    assert_eq!(run(&["recover", s(&sp), s(&np), s(&not_state)]).status.code(), Some(3));
    let wrong_dim = write(&dir, "wd.json", &MatrixJson::from(&sigma));
    assert_eq!(run(&["recover", s(&sp), s(&np), s(&wrong_dim)]).status.code(), Some(3));
}

#[test]
fn verify_sigma0_repair_validates_against_schema() {
    let o = run(&["verify", "example-b4"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json_out(&o);
    validate_report(&v);
    let report: Report = serde_json::from_value(v).unwrap();
    assert_eq!(report.records.len(), 1);
    assert!(report.records[0].pass);
}

#[test]
fn verify_is_deterministic_and_writes_csv() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    let csv = dir.path().join("a.csv");
    for (out, extra) in [(&a, Some(&csv)), (&b, None)] {
        let mut args = vec!["verify", "dpi", "--trials", "6", "--seed", "11", "--out", s(out)];
        if let Some(c) = extra {
            args.extend(["--csv", s(c)]);
        }
        assert_eq!(run(&args).status.code(), Some(0));
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    validate_report(&v);
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[1], "check_id");
    assert_eq!(rdr.records().count(), 6);
}

#[test]
fn failing_suite_exits_one_and_report_merges() {
    let dir = TempDir::new().unwrap();
    let eg = dir.path().join("eg.json");
    let o = run(&["verify", "entropy-gain", "--trials", "10", "--out", s(&eg)]);
    assert_eq!(o.status.code(), Some(1));
    let b4 = dir.path().join("b4.json");
    assert_eq!(run(&["verify", "example-b4", "--out", s(&b4)]).status.code(), Some(0));

    let o = run(&["report", s(&b4)]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["report", s(&b4), s(&eg)]);
    assert_eq!(o.status.code(), Some(1));
    let v = json_out(&o);
    validate_report(&v);
    assert_eq!(v["summary"]["suite"], "merged");
    assert_eq!(v["records"].as_array().unwrap().len(), 11);
}

#[test]
fn schema_rejects_malformed_reports() {
    let schema: Value = serde_json::from_str(include_str!("../../../schema/report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let mut v = json_out(&run(&["verify", "example-b4"]));
    assert!(validator.is_valid(&v));
    v["records"][0]["slack"] = Value::String("large".into());
    assert!(!validator.is_valid(&v));
    v.as_object_mut().unwrap().remove("summary");
    assert!(!validator.is_valid(&v));
}
