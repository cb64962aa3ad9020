use std::path::PathBuf;
use std::process::{Command, Output};

fn pclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pclab"))
        .args(args)
        .env("PCLAB_THREADS", "2")
        .output()
        .expect("spawn pclab")
}

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn report(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn malformed_domain_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": egg").unwrap();
    let out = pclab(&["classify", "--domain", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_kind_and_bad_point_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("torus.json");
    std::fs::write(&bad, r#"{"kind": "torus", "n": 2}"#).unwrap();
    assert_eq!(pclab(&["classify", "--domain", bad.to_str().unwrap()]).status.code(), Some(2));
    let out = pclab(&["multitype", "--domain", &config("egg2.json"), "--point", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oversized_fixed_type_on_egg_exits_1() {
    let out = pclab(&["family", "--domain", &config("egg2.json"), "--type", "fixed:1,8", "--res", "6", "--depths", "6"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["passed"], false);
    assert_eq!(r["result"]["report"]["uniform"], false);
}

#[test]
fn minimal_ball_family_exits_0() {
    let out = pclab(&["family", "--domain", &config("ball2.json"), "--res", "6", "--depths", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["meta"]["command"], "family");
    assert!(r["meta"]["version"].is_string());
    let d0 = r["result"]["report"]["delta0"].as_f64().unwrap();
    assert!(d0 > 0.5 && d0 < 1.0, "{d0}");
}

#[test]
fn multitype_at_egg_weak_point() {
    let out = pclab(&["multitype", "--domain", &config("egg2.json"), "--point", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["weight"], "(1,4)");
    let out = pclab(&["multitype", "--domain", &config("expflat.json"), "--point", "1,0"]);
    assert_eq!(report(&out)["result"]["weight"], "infinite");
}

#[test]
fn classify_csv_has_header_and_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("grid.csv");
    let out = pclab(&["classify", "--domain", &config("egg2.json"), "--res", "16", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "row,col,x1,y1,x2,y2,rho,levi_det,class");
    assert_eq!(lines.clone().count(), 256);
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[2], "1.0000000000000000e0");
    assert_eq!(first[8], "weak");
    assert_eq!(report(&out)["result"]["weak"], 16);
}

#[test]
fn packing_csv_and_dim_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("pack.csv");
    let out = pclab(&[
        "packing", "--domain", &config("egg2.json"), "--family", "computed", "--target", "weak",
        "--layers", "6", "--res", "64", "--verify", "--out", csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert_eq!(r["result"]["verified"], true);
    let n = r["result"]["points"].as_u64().unwrap() as usize;
    let text = std::fs::read_to_string(&csv_path).unwrap();
    assert!(text.starts_with("x1,y1,x2,y2,r,mu,layer\n"));
    assert_eq!(text.lines().count(), n + 1);

    let seg = dir.path().join("seg.csv");
    let body: String = (0..=4096).map(|i| format!("{},0\n", i as f64 / 4096.0)).collect();
    std::fs::write(&seg, format!("x,y\n{body}")).unwrap();
    let out = pclab(&["dim", "--input", seg.to_str().unwrap(), "--eps-max", "0.125", "--eps-min", "0.004", "--rungs", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let dim = report(&out)["result"]["dimension"].as_f64().unwrap();
    assert!((dim - 1.0).abs() < 0.1, "{dim}");
}

#[test]
fn divisor_checks_report_and_exit() {
    let out = pclab(&["divisor", "--domain", &config("ball2.json"), "--graph", &config("graph_quadratic.json"), "--check", "areas"]);
    assert_eq!(out.status.code(), Some(0));
    let a2 = report(&out)["result"]["a2"].as_f64().unwrap();
    // ∫|2·0.3 z|² over the unit disc = 0.36·π/2.
    assert!((a2 - 0.18 * std::f64::consts::PI).abs() < 1e-9, "{a2}");
    let out = pclab(&["divisor", "--domain", &config("ball2.json"), "--graph", &config("graph_flat.json"), "--check", "wirtinger"]);
    assert_eq!(report(&out)["result"]["equality"], true);
}

#[test]
fn bad_thread_count_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_pclab"))
        .args(["classify", "--domain", &config("ball2.json"), "--res", "4"])
        .env("PCLAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
