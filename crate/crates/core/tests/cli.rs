use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use delayed_acceptance::scaling::{optimal_acceptance, Family};

fn bench(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_da-bench"));
    cmd.args(args).env_remove("DA_BENCH_OUT_DIR");
    if let Some(dir) = out_env {
        cmd.env("DA_BENCH_OUT_DIR", dir);
    }
    cmd.output().expect("spawn da-bench")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .unwrap_or_else(|| panic!("missing `{key}` in\n{text}"))
}

const MH_NORMAL: &str = "seed = 1
[model]
name = normal_normal
[kernel]
variant = mh
[proposal]
scale = 2.4
[run]
iterations = 100000
";

const REPORT_KEYS: [&str; 18] = [
    "iterations",
    "acceptance_rate",
    "rejection_stage_histogram",
    "mean",
    "ess",
    "ess_min",
    "super_efficient",
    "esjd",
    "total_cost",
    "cost_per_iteration",
    "mean_factor_evals",
    "ess_per_cost",
    "esjd_per_cost",
    "delta_hat",
    "scale",
    "wall_time_seconds",
    "wall_ess_per_second",
    "wall_esjd_per_second",
];

#[test]
fn run_writes_trace_and_report_with_stable_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mh.cfg", MH_NORMAL);
    let out = dir.path().join("out");
    let o = bench(&["run", "--config", &cfg, "--seed", "1", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("chain_0/trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("iteration,x0,accepted,rejection_stage,cumulative_cost"));
    assert_eq!(lines.count(), 100_000);
    let report = fs::read_to_string(out.join("chain_0/report.txt")).unwrap();
    let keys: Vec<&str> = report.lines().map(|l| l.split(" = ").next().unwrap()).collect();
    assert_eq!(keys, REPORT_KEYS);
    assert_eq!(value(&report, "rejection_stage_histogram").split(',').count(), 1);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(value(&summary, "model"), "normal_normal");
    assert_eq!(value(&summary, "chains"), "1");
}

#[test]
fn identical_runs_give_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bb.cfg",
        "seed = 2\n[model]\nname = beta_binomial\nn_parts = 20\n[kernel]\nvariant = da\n[proposal]\nscale = 0.1\n[adaptation]\nadapt_iters = 300\na_target = auto\n[run]\niterations = 4000\nchains = 3\n",
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = bench(&["run", "--config", &cfg, "--seed", "17"], Some(out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for c in 0..3 {
        let rel = format!("chain_{c}/trace.csv");
        assert_eq!(fs::read(a.join(&rel)).unwrap(), fs::read(b.join(&rel)).unwrap());
    }
    assert_ne!(
        fs::read(a.join("chain_0/trace.csv")).unwrap(),
        fs::read(a.join("chain_1/trace.csv")).unwrap()
    );
}

#[test]
fn env_var_overrides_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.cfg", "[model]\nname = standard_normal\n[run]\niterations = 500\n");
    let flag = dir.path().join("flag");
    let env = dir.path().join("env");
    let o = bench(&["run", "--config", &cfg, "--seed", "3", "--out", flag.to_str().unwrap()], Some(&env));
    assert!(o.status.success());
    assert!(env.join("summary.txt").exists());
    assert!(!flag.exists());
}

#[test]
fn auto_target_echoes_delta_and_solved_rate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "auto.cfg",
        "seed = 4\n[model]\nname = beta_binomial\nn_parts = 100\n[kernel]\nvariant = da\nstage_sizes = 10,91\n[proposal]\nscale = 0.1\n[adaptation]\na_target = auto\n[run]\niterations = 3000\nburn_in = 1000\n",
    );
    let out = dir.path().join("out");
    let o = bench(&["run", "--config", &cfg, "--seed", "4", "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("chain_0/report.txt")).unwrap();
    let delta: f64 = value(&report, "delta_hat").parse().unwrap();
    let a: f64 = value(&report, "a_target").parse().unwrap();
    assert!((delta - 10.0 / 101.0).abs() < 1e-12);
    assert_eq!(a, optimal_acceptance(delta, Family::RwmAdditive).unwrap().0);
}

#[test]
fn bad_config_exits_nonzero_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "[model]\nname = normal_normal\n[kernel]\nvariant = da\nfrobnicate = 1\n");
    let o = bench(&["run", "--config", &cfg, "--seed", "1", "--out", dir.path().to_str().unwrap()], None);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("frobnicate") && err.contains('5'), "{err}");

    let o = bench(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()], None);
    assert!(!o.status.success(), "seed is required");
}

#[test]
fn scaling_tables() {
    let dir = tempfile::tempdir().unwrap();
    let rwm = dir.path().join("rwm.csv");
    let o = bench(
        &["scaling-table", "--family", "rwm-additive", "--grid", "log:0.01:1000:20", "--out", rwm.to_str().unwrap()],
        None,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&rwm).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("delta,a_star,l_star_shape"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 20);
    assert!((rows[19][0] - 1000.0).abs() < 1e-9);
    assert!((rows[19][1] - 0.234).abs() < 0.001);
    assert!(rows.windows(2).all(|w| w[1][1] > w[0][1]));

    let mala = dir.path().join("mala.csv");
    let o = bench(&["scaling-table", "--family", "mala-reuse", "--grid", "0.5,1", "--out", mala.to_str().unwrap()], None);
    assert!(o.status.success());
    let last = fs::read_to_string(&mala).unwrap().lines().last().unwrap().to_string();
    let a: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((a - 0.574).abs() < 0.005);

    let o = bench(&["scaling-table", "--family", "rwm-reuse", "--grid", "1,2", "--out", mala.to_str().unwrap()], None);
    assert!(!o.status.success());
}

#[test]
fn compare_reports_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let base = "seed = 9\n[model]\nname = beta_binomial\nn_parts = 100\n[proposal]\nscale = 0.1\n[run]\niterations = 5000\nrepetitions = 3\n";
    let mh = write_config(dir.path(), "mh.cfg", &format!("{base}[kernel]\nvariant = mh\n"));
    let da = write_config(dir.path(), "da.cfg", &format!("{base}[kernel]\nvariant = da\n"));
    let out = dir.path().join("cmp.txt");

    let o = bench(&["compare", "--out", out.to_str().unwrap(), &mh, &mh], None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    for name in ["ess", "esjd", "cost", "ess_per_cost", "esjd_per_cost"] {
        for stat in ["mean", "median", "ratio_of_means"] {
            let v: f64 = value(&text, &format!("config_1.{name}.{stat}")).parse().unwrap();
            assert!((v - 1.0).abs() < 1e-12, "{name}.{stat} = {v}");
        }
    }
    assert!(text.contains("wall_time.mean") && text.contains("non-normative"));

    let o = bench(&["compare", "--out", out.to_str().unwrap(), &mh, &da], None);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let cost: f64 = value(&text, "config_1.cost.mean").parse().unwrap();
    assert!(cost < 1.0, "DA/MH cost ratio {cost}");

    let other = write_config(dir.path(), "nn.cfg", "seed = 9\n[model]\nname = normal_normal\n");
    let o = bench(&["compare", "--out", out.to_str().unwrap(), &mh, &other], None);
    assert!(!o.status.success());
}
