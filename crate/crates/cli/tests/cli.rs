use std::path::Path;
use std::process::Command;

use epinet_cli::Report;
use serde_json::Value;

const SYMMETRIC: &str = "
[network]
builtin = \"complete\"
n = 4

[game]
delta = 1.0
beta = 1.0
t_bar = 1.0
x0 = 0.3
rho = 0.7
mode = \"global\"

[options]
seed = 5
samples = 20000
";

const PAIR: &str = "
[network]
builtin = \"complete\"
n = 2

[game]
delta = 1.0
beta = 1.0
t_bar = 2.0
x0 = [0.3, 0.1]
rho = 0.5

[options]
seed = 1
samples = 20000
";

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_epinet"))
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn report(out: &Path) -> (String, Report) {
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let r = Report::from_json(&text).unwrap();
    (text, r)
}

#[test]
fn simulate_writes_sandwich_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), PAIR);
    let out = dir.path().join("out");
    assert_eq!(run("simulate", &cfg, &out, &[]), 0);
    let csv = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 258);
    assert_eq!(
        lines[0],
        "t,mean_field_1,mean_field_2,upper_bound_1,upper_bound_2,linearized_1,linearized_2"
    );
    for line in &lines[1..] {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        for i in 0..2 {
            assert!(v[1 + i] <= v[3 + i] + 1e-8 && v[3 + i] <= v[5 + i] + 1e-8, "{line}");
        }
    }
    let (_, r) = report(&out);
    assert_eq!(r.result["sandwich"]["holds"], Value::Bool(true));
    assert_eq!(r.tables, vec!["trajectory.csv".to_string()]);
}

#[test]
fn equilibrium_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYMMETRIC);
    let out = dir.path().join("out");
    assert_eq!(run("equilibrium", &cfg, &out, &[]), 0);
    let (_, r) = report(&out);
    let class = r.result["classification"].as_str().unwrap();
    assert!(class == "Interior" || class == "HomogeneousInterior", "{class}");
    let cf = &r.result["closed_form"];
    let (h, m) = (cf["h"].as_f64().unwrap(), cf["measured_h"].as_f64().unwrap());
    assert!((h - m).abs() < 1e-6, "{h} vs {m}");
}

#[test]
fn quiet_agents_give_degenerate_poa() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SYMMETRIC.replace("delta = 1.0", "delta = 0.0"));
    let out = dir.path().join("out");
    assert_eq!(run("poa", &cfg, &out, &[]), 0);
    let (_, r) = report(&out);
    assert_eq!(r.result["degenerate"], Value::Bool(true));
    assert_eq!(r.result["poa_global"], Value::Null);
}

#[test]
fn invalid_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &SYMMETRIC.replace("rho = 0.7", "rho = -1.0"));
    assert_eq!(run("optimum", &cfg, &out, &[]), 1);
    let cfg = write_config(dir.path(), &format!("{SYMMETRIC}\n[extra]\nkey = 1\n"));
    assert_eq!(run("optimum", &cfg, &out, &["--strict"]), 1);
    assert_eq!(run("optimum", &cfg, &out, &[]), 0);
    assert_eq!(run("optimum", &dir.path().join("missing.toml"), &out, &[]), 1);
    let no_seed = SYMMETRIC.replace("seed = 5\n", "");
    let cfg = write_config(dir.path(), &no_seed);
    assert_eq!(run("simulate", &cfg, &out, &[]), 1);
    assert_eq!(run("simulate", &cfg, &out, &["--seed", "9"]), 0);
    assert_eq!(report(&out).1.config.options.seed, Some(9));
}

#[test]
fn unknown_command_exits_one() {
    let out = Command::new(env!("CARGO_BIN_EXE_epinet")).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SYMMETRIC.replace("n = 4", "n = 5"));
    for command in ["simulate", "poa"] {
        let mut texts = Vec::new();
        for threads in ["1", "4"] {
            let out = dir.path().join(format!("{command}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_epinet"))
                .args([command, "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .env("RAYON_NUM_THREADS", threads)
                .output()
                .unwrap()
                .status;
            assert!(status.success());
            texts.push(std::fs::read(out.join("report.json")).unwrap());
        }
        assert_eq!(texts[0], texts[1], "{command}");
    }
}

#[test]
fn report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SYMMETRIC);
    for command in ["pok", "policy"] {
        let out = dir.path().join(command);
        assert_eq!(run(command, &cfg, &out, &[]), 0);
        let (text, r) = report(&out);
        assert_eq!(r.to_json(), text);
        assert_eq!(Report::from_json(&r.to_json()).unwrap(), r);
    }
}

#[test]
fn network_file_is_resolved_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("net.txt"), "n 3\n0 1 1.0\n1 2 0.5\n").unwrap();
    let text = SYMMETRIC.replace("builtin = \"complete\"\nn = 4", "path = \"net.txt\"");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    assert_eq!(run("optimum", &cfg, &out, &[]), 0);
    let (_, r) = report(&out);
    assert_eq!(r.config.n, 3);
    assert_eq!(r.result["links"].as_array().unwrap().len(), 2);
}
