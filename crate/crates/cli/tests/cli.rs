use expose_cli::render::{parse_svg_paths, CANVAS_HEIGHT};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expose-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn domains_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/domains")
}

#[test]
fn missing_file_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(
        dir.path(),
        "s.json",
        r#"{"name":"x","output_dir":"out","operations":[{"op":"convexify","domain":"nope.json","zeta":[[0,0],[0,0]],"eps":0.05}]}"#,
    );
    let o = run(&["run", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.json"), "{}", stderr(&o));
    let o = run(&["run", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_scenario_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "s.json", "{\"name\": \"x\",\n \"operations\": [ }");
    let o = run(&["run", sc.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    let sc = write(dir.path(), "t.json", r#"{"name":"x","output_dir":"o","operations":[{"op":"teleport"}]}"#);
    assert_eq!(run(&["run", sc.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn argument_and_precondition_errors() {
    assert_eq!(run(&["hull-demo", "--rho0", "0.5", "--count", "3"]).status.code(), Some(2));
    assert_eq!(run(&["mobius-fuzz", "--samples", "abc"]).status.code(), Some(2));
    assert_eq!(run(&["render", "/nonexistent/data.csv"]).status.code(), Some(2));
    let o = bin().env("EXPOSE_LAB_THREADS", "zero").args(["mobius-fuzz", "--samples", "10"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "e.csv", "index,re,im\n");
    let o = run(&["render", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty data"));
}

#[test]
fn successful_commands_exit_zero() {
    let o = run(&["mobius-fuzz", "--samples", "20000", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["report"]["violations"], 0);
    assert_eq!(v["tool_version"], expose_core::TOOL_VERSION);
    let o = run(&["hull-demo", "--rho0", "1", "--count", "20", "--degree", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["dumbbell", "--a", "-2", "--b", "2", "--delta", "0.3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn failed_invariant_exits_one() {
    // Fidelities listed in decreasing order make the identity distances increase.
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "ball-expose", "--r", "1.5", "--s", "3", "--nu-list", "3,2", "--per-axis", "4", "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("not strictly decreasing"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["ok"], false);
}

#[test]
fn convexify_subcommand_certifies_the_test_domain() {
    let domain = domains_dir().join("nonconvex.json");
    let o = run(&[
        "convexify", "--domain", domain.to_str().unwrap(), "--zeta", "0,0;0,0", "--eps", "0.05", "--grid", "8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["report"]["verification"]["convexity_eig"].as_f64().unwrap() > 0.0);
    assert!(v["report"]["baseline_convexity"].as_f64().unwrap() < 0.0);
    assert_eq!(v["grid"]["per_axis"], 8);
    let o = run(&["convexify", "--domain", domain.to_str().unwrap(), "--zeta", "0,0", "--eps", "0.05"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["convexify", "--domain", domain.to_str().unwrap(), "--zeta", "0,0;0,0", "--eps", "0.05", "--peak", "convex"]);
    assert_eq!(o.status.code(), Some(2), "non-convex point refuses the convex peak");
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let domains = domains_dir();
    fs::copy(domains.join("nonconvex.json"), dir.path().join("nonconvex.json")).unwrap();
    let body = |out: &str| {
        format!(
            r#"{{"name":"det","output_dir":"{out}","operations":[
            {{"op":"mobius-fuzz","samples":200000,"seed":9}},
            {{"op":"dumbbell","a":-2,"b":2,"delta":0.15}},
            {{"op":"hull-demo","rho0":1.0,"count":40,"degree":6,"seed":2}},
            {{"op":"convexify","domain":"nonconvex.json","zeta":[[0,0],[0,0]],"eps":0.05,"grid":{{"per_axis":8,"radius":0.2,"seed":3}}}}]}}"#
        )
    };
    let a = write(dir.path(), "a.json", &body("out-a"));
    let b = write(dir.path(), "b.json", &body("out-b"));
    assert_eq!(run(&["run", a.to_str().unwrap()]).status.code(), Some(0));
    let o = bin().env("EXPOSE_LAB_THREADS", "1").args(["run", b.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fa = read_dir_sorted(&dir.path().join("out-a"));
    let fb = read_dir_sorted(&dir.path().join("out-b"));
    assert!(fa.len() >= 8);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.0, y.0);
        assert!(x.1 == y.1, "{} differs between runs", x.0);
    }
    let manifest: serde_json::Value = serde_json::from_slice(&fa.iter().find(|f| f.0 == "manifest.json").unwrap().1).unwrap();
    for op in manifest["operations"].as_array().unwrap() {
        assert!(op.get("seeds").is_some() && op.get("tolerances").is_some() && op.get("grid").is_some());
    }
    assert_eq!(manifest["tool_version"], expose_core::TOOL_VERSION);
}

#[test]
fn rendered_dumbbell_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    let o = run(&["dumbbell", "--a", "-2", "--b", "2", "--delta", "0.15", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("01-dumbbell-region.svg")).unwrap();
    let paths = parse_svg_paths(&svg);
    assert_eq!(paths.len(), 1, "one merged boundary polyline");
    assert!(svg.contains(" Z\""), "boundary is closed");
    let pts = &paths[0].1;
    // Mirror each vertex across the horizontal axis of the data and find the nearest vertex.
    let axis_y = CANVAS_HEIGHT / 2.0;
    let worst = pts
        .iter()
        .map(|&(x, y)| {
            let m = (x, 2.0 * axis_y - y);
            pts.iter().map(|&(u, v)| (u - m.0).hypot(v - m.1)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    assert!(worst < 1.0, "conjugation asymmetry {worst} px");
    assert!(svg.contains("scale=("), "scaling recorded");
}

#[test]
fn identity_circle_renders_at_configured_radius() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("index,re,im\n");
    for k in 0..360 {
        let t = std::f64::consts::PI * k as f64 / 180.0;
        csv.push_str(&format!("{k},{},{}\n", t.cos(), t.sin()));
    }
    let data = write(dir.path(), "circle.csv", &csv);
    let o = run(&["render", data.to_str().unwrap(), "--scale", "120", "--center", "0,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("circle.svg")).unwrap();
    let paths = parse_svg_paths(&svg);
    for &(x, y) in &paths[0].1 {
        let r = (x - 400.0).hypot(y - 300.0);
        assert!((r - 120.0).abs() < 0.01, "radius {r}");
    }
    let again = run(&["render", data.to_str().unwrap(), "--scale", "120", "--center", "0,0", "--out", dir.path().join("c2.svg").to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(svg, fs::read_to_string(dir.path().join("c2.svg")).unwrap());
}

#[test]
fn exposer_image_reaches_the_exposed_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let o = run(&[
        "ball-expose", "--r", "1.5", "--s", "3", "--nu-list", "2,3", "--per-axis", "4", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = fs::read_to_string(out.join("01-ball-expose-images.svg")).unwrap();
    let mark_line = svg.lines().find(|l| l.starts_with("<circle")).expect("exposed point is marked");
    let attr = |k: &str| -> f64 {
        let s = mark_line.find(&format!("{k}=\"")).unwrap() + k.len() + 2;
        mark_line[s..s + mark_line[s..].find('"').unwrap()].parse().unwrap()
    };
    let mark = (attr("cx"), attr("cy"));
    let paths = parse_svg_paths(&svg);
    for nu in [2, 3] {
        let (_, pts) = paths.iter().find(|p| p.0 == format!("nu{nu}_unit_circle")).unwrap();
        let d = pts.iter().map(|&(x, y)| (x - mark.0).hypot(y - mark.1)).fold(f64::INFINITY, f64::min);
        assert!(d <= 2.0, "nu {nu}: image misses the exposed point by {d} px");
    }
}
