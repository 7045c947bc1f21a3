use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn msqg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msqg"))
        .current_dir(dir)
        .env_remove("MSQG_OUTPUT_DIR")
        .args(args)
        .output()
        .expect("spawn msqg")
}

fn manifest(dir: &Path, sub: &str) -> Value {
    let text = std::fs::read_to_string(dir.join(sub).join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|_| panic!("{}", String::from_utf8_lossy(&o.stderr)))
}

/// Small settings for each subcommand so the suite stays fast.
fn quick(sub: &str) -> Vec<&'static str> {
    let mut v = vec!["--replicas", "2", "--threads", "1"];
    match sub {
        "vortex-sim" => v.extend([
            "--set",
            "vortex.t_final=0.02",
            "--set",
            "vortex.n_vortices=6",
        ]),
        "galerkin-sim" => v.extend([
            "--set",
            "galerkin.t_final=0.02",
            "--set",
            "galerkin.galerkin_m=4",
        ]),
        "scaling-study" => {
            v = vec!["--replicas", "20", "--threads", "1"];
            v.extend([
                "--set",
                "scaling.scaling_N_list=[2, 4]",
                "--set",
                "scaling.n_vortices=6",
                "--set",
                "scaling.galerkin_m=2",
                "--set",
                "scaling.modes=[[1, 0]]",
                "--set",
                "scaling.kernel_cutoff=8",
                "--set",
                "scaling.kernel_grid=32",
                "--set",
                "scaling.permutations=5",
                "--set",
                "scaling.correction_samples=10",
            ])
        }
        "chaos-audit" => v.extend(["--set", "chaos.n_max=2", "--set", "chaos.samples=3"]),
        "kernel-table" => v.extend([
            "--set",
            "kernel.kernel_grid=16",
            "--set",
            "kernel.kernel_cutoff=8",
        ]),
        _ => {}
    }
    v
}

const SUBCOMMANDS: [&str; 6] = [
    "vortex-sim",
    "galerkin-sim",
    "scaling-study",
    "chaos-audit",
    "kernel-table",
    "identity-check",
];

#[test]
fn every_subcommand_honors_exit_contract() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in SUBCOMMANDS {
        let mut args = vec![sub];
        args.extend(quick(sub));
        let o = msqg(tmp.path(), &args);
        let code = o.status.code().unwrap();
        assert!(
            code == 0 || code == 2,
            "{sub}: {code} {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let m = manifest(&tmp.path().join("msqg-out"), sub);
        assert_eq!(m["pass"].as_bool().unwrap(), code == 0, "{sub}");
        assert_eq!(m["subcommand"], sub);
        assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);

        // Bad physics is refused before anything runs.
        let o = msqg(tmp.path(), &[sub, "--replicas", "0"]);
        assert_eq!(o.status.code(), Some(1), "{sub}");
        assert_eq!(stderr_json(&o)["error"]["kind"], "config");
    }
}

#[test]
fn defaults_pass_for_exact_audits() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["identity-check", "chaos-audit"] {
        let o = msqg(tmp.path(), &[sub]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
    }
    let m = manifest(&tmp.path().join("msqg-out"), "identity-check");
    assert!(m["summary"]["key_identity_max_residual"].as_f64().unwrap() <= 1e-12);
    assert!(
        m["summary"]["sum_identity_max_rel_residual"]
            .as_f64()
            .unwrap()
            <= 1e-12
    );
}

#[test]
fn failed_check_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = msqg(
        tmp.path(),
        &["identity-check", "--set", "identity.tolerance=1e-30"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_key_is_named() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "[galerkin]\ngalerkin_mm = 4\n").unwrap();
    let o = msqg(tmp.path(), &["galerkin-sim", "--config", "c.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr_json(&o);
    assert_eq!(e["error"]["key"], "galerkin_mm");

    let o = msqg(tmp.path(), &["vortex-sim", "--set", "nonsense=1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["key"], "nonsense");
}

#[test]
fn usage_and_io_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = msqg(tmp.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));
    stderr_json(&o);

    let o = msqg(tmp.path(), &["identity-check", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");

    std::fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = msqg(tmp.path(), &["identity-check", "--out", "blocker"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "io");

    let o = msqg(tmp.path(), &["vortex-sim", "--set", "vortex.dt=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["key"], "dt");
}

#[test]
fn effective_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let o = msqg(
        tmp.path(),
        &[
            "galerkin-sim",
            "--print-config",
            "--seed",
            "17",
            "--set",
            "galerkin.record_modes=[[2, -1]]",
        ],
    );
    assert!(o.status.success());
    let first = String::from_utf8(o.stdout).unwrap();
    assert!(first.contains("seed_root = 17"));
    std::fs::write(tmp.path().join("eff.toml"), &first).unwrap();
    let o = msqg(
        tmp.path(),
        &["galerkin-sim", "--print-config", "--config", "eff.toml"],
    );
    assert_eq!(String::from_utf8(o.stdout).unwrap(), first);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for sub in ["vortex-sim", "galerkin-sim"] {
        let mut files = Vec::new();
        for out in ["a", "b"] {
            let mut args = vec![sub, "--out", out, "--seed", "5"];
            args.extend(quick(sub));
            assert!(msqg(tmp.path(), &args).status.success());
            let d = tmp.path().join(out).join(sub);
            files.push((
                std::fs::read(d.join("series.csv")).unwrap(),
                std::fs::read(d.join("manifest.json")).unwrap(),
            ));
        }
        assert_eq!(files[0], files[1], "{sub}");
        assert!(files[0].0.len() > 100);
    }
}

#[test]
fn empty_observables_write_manifest_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["vortex-sim", "--set", "vortex.observables=[]"];
    args.extend(quick("vortex-sim"));
    assert!(msqg(tmp.path(), &args).status.success());
    let d = tmp.path().join("msqg-out").join("vortex-sim");
    let names: Vec<String> = std::fs::read_dir(&d)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, vec!["manifest.json".to_string()]);
    assert_eq!(
        manifest(&tmp.path().join("msqg-out"), "vortex-sim")["files"],
        serde_json::json!([])
    );
}

#[test]
fn output_dir_precedence() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), "report_dir = \"from-config\"\n").unwrap();
    assert!(msqg(tmp.path(), &["identity-check", "--config", "c.toml"])
        .status
        .success());
    assert!(tmp
        .path()
        .join("from-config/identity-check/manifest.json")
        .exists());

    let o = Command::new(env!("CARGO_BIN_EXE_msqg"))
        .current_dir(tmp.path())
        .env("MSQG_OUTPUT_DIR", "from-env")
        .args(["identity-check", "--config", "c.toml"])
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(tmp
        .path()
        .join("from-env/identity-check/manifest.json")
        .exists());

    assert!(msqg(
        tmp.path(),
        &["identity-check", "--config", "c.toml", "--out", "from-flag"]
    )
    .status
    .success());
    assert!(tmp
        .path()
        .join("from-flag/identity-check/manifest.json")
        .exists());
}

#[test]
fn scaling_study_reports_table() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["scaling-study"];
    args.extend(quick("scaling-study"));
    let o = msqg(tmp.path(), &args);
    assert!(matches!(o.status.code(), Some(0) | Some(2)));
    let d = tmp.path().join("msqg-out").join("scaling-study");
    let csv = std::fs::read_to_string(d.join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.starts_with("N,theta_norm,joint_distance"));
    let m = manifest(&tmp.path().join("msqg-out"), "scaling-study");
    assert_eq!(
        m["config"]["scaling"]["scaling_N_list"],
        serde_json::json!([2, 4])
    );
}
