use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mvpc_core::io::{mvpc_file_size, write_obj_mesh};
use mvpc_core::shapes;
use tempfile::TempDir;

fn mvpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvpc")).args(args).output().expect("binary runs")
}

fn summary(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn num(s: &HashMap<String, String>, key: &str) -> f64 {
    s.get(key).unwrap_or_else(|| panic!("missing {key}")).parse().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
    gt: PathBuf,
}

fn sampled(views: &str, res: &str) -> Fixture {
    let dir = TempDir::new().unwrap();
    let mesh = dir.path().join("sphere.obj");
    write_obj_mesh(&shapes::icosphere(3), &mesh).unwrap();
    let gt = dir.path().join("gt.mvpc");
    let out = mvpc(&[
        "sample",
        "--mesh",
        path_str(&mesh),
        "--views",
        views,
        "--res",
        res,
        "--out",
        path_str(&gt),
        "--coverage-samples",
        "2000",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    Fixture { dir, gt }
}

#[test]
fn sample_writes_file_of_expected_size() {
    let f = sampled("6", "32");
    let s = summary(&mvpc(&["sample", "--help"]));
    assert!(s.is_empty() || !s.contains_key("views"));
    let len = std::fs::metadata(&f.gt).unwrap().len() as usize;
    assert_eq!(len, mvpc_file_size(6, 32, 32));
    assert_eq!(len, 16 + 6 * (72 + 32 * 32 * 16));
}

#[test]
fn sample_reports_counts_and_coverage() {
    let dir = TempDir::new().unwrap();
    let mesh = dir.path().join("sphere.obj");
    write_obj_mesh(&shapes::icosphere(3), &mesh).unwrap();
    let gt = dir.path().join("gt.mvpc");
    let out = mvpc(&["sample", "--mesh", path_str(&mesh), "--views", "4", "--res", "16", "--out", path_str(&gt)]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(num(&s, "views"), 4.0);
    for k in 0..4 {
        assert!(num(&s, &format!("visible_{k}")) > 0.0);
    }
    assert_eq!(num(&s, "coverage"), 1.0);
}

#[test]
fn bad_view_count_is_a_usage_error() {
    let out = mvpc(&["sample", "--mesh", "x.obj", "--views", "5", "--out", "y.mvpc"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_mesh_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nope.obj");
    let out = mvpc(&["sample", "--mesh", path_str(&missing), "--out", path_str(&dir.path().join("o.mvpc"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.obj"));
}

#[test]
fn zero_iterations_is_a_usage_error() {
    let out = mvpc(&["fit", "--gt", "a.mvpc", "--out", "b.mvpc", "--iters", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_from_exact_ground_truth_stays_put() {
    let f = sampled("4", "16");
    let out_path = f.dir.path().join("fit.mvpc");
    let trace = f.dir.path().join("trace.txt");
    let out = mvpc(&[
        "fit",
        "--gt",
        path_str(&f.gt),
        "--init",
        "noisy-gt",
        "--sigma",
        "0",
        "--beta",
        "0",
        "--iters",
        "150",
        "--out",
        path_str(&out_path),
        "--trace",
        path_str(&trace),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert!(num(&s, "cd_before") < 1e-9);
    assert!(num(&s, "cd_after") < 1e-9);
    assert_eq!(num(&s, "ptd"), 0.0);
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 150);
    assert!(text.lines().all(|l| l.split(' ').count() == 6));
}

#[test]
fn fit_reduces_chamfer_from_noise() {
    let f = sampled("4", "16");
    let out_path = f.dir.path().join("fit.mvpc");
    let out = mvpc(&["fit", "--gt", path_str(&f.gt), "--iters", "200", "--seed", "3", "--out", path_str(&out_path)]);
    assert!(out.status.success());
    let s = summary(&out);
    assert!(num(&s, "cd_after") < num(&s, "cd_before"));
    for key in ["ptd", "vol", "mv", "vis_ce", "total", "wall_time_s"] {
        assert!(s.contains_key(key), "{key}");
    }
}

#[test]
fn loss_of_ground_truth_against_itself() {
    let f = sampled("4", "16");
    let out = mvpc(&["loss", "--pred", path_str(&f.gt), "--gt", path_str(&f.gt)]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(num(&s, "ptd"), 0.0);
    assert_eq!(num(&s, "vol"), 0.0);
    // Visibilities of exactly 0 and 1 sit at the clamping floor.
    assert!(num(&s, "vis_ce") < 4.0 * 256.0 * 1.1e-6);
    let per_pixel = summary(&mvpc(&["loss", "--pred", path_str(&f.gt), "--gt", path_str(&f.gt), "--per-pixel"]));
    assert!((num(&per_pixel, "mv") * 1024.0 - num(&s, "mv")).abs() < 1e-9 * num(&s, "mv").max(1.0));
}

#[test]
fn eval_of_ground_truth_against_itself() {
    let f = sampled("4", "16");
    let out = mvpc(&["eval", "--pred", path_str(&f.gt), "--gt", path_str(&f.gt)]);
    assert!(out.status.success());
    let s = summary(&out);
    assert_eq!(num(&s, "iou"), 1.0);
    assert_eq!(num(&s, "chamfer"), 0.0);
    assert_eq!(s["coverage"], "none");
}

#[test]
fn mesh_writes_obj() {
    let f = sampled("4", "16");
    let obj = f.dir.path().join("merged.obj");
    let out = mvpc(&["mesh", "--mvpc", path_str(&f.gt), "--out", path_str(&obj)]);
    assert!(out.status.success());
    let s = summary(&out);
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count() as f64, num(&s, "triangles"));
    assert!(num(&s, "triangles") > 0.0);
}

#[test]
fn corrupted_input_is_a_domain_error() {
    let f = sampled("4", "8");
    let bad = f.dir.path().join("bad.mvpc");
    let mut bytes = std::fs::read(&f.gt).unwrap();
    bytes[0] = b'X';
    std::fs::write(&bad, bytes).unwrap();
    let out = mvpc(&["loss", "--pred", path_str(&bad), "--gt", path_str(&f.gt)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not an MVPC file"));
}

#[test]
fn gradcheck_seed_seven_passes() {
    let out = mvpc(&["gradcheck", "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let s = summary(&out);
    assert_eq!(s["pass"], "true");
    for term in ["ptd", "vol", "mv", "vis_ce"] {
        assert!(num(&s, &format!("{term}_max_rel")) < 1e-4);
    }
}
