use std::fs;
use std::path::Path;
use std::process::Command;

fn ets() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ets"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.conf");
    fs::write(
        &path,
        format!("{body}output_dir = {}\n", dir.join("out").display()),
    )
    .unwrap();
    path
}

const SMALL: &str = "# tiny test system\nn_dvr = 6\nn_fe_inner = 6\nn_fe_outer = 4\ndelta_xi = 2\nl_max = 2\n\
                     wavelength_nm = 200\nintensity_w_cm2 = 1e13\ncycles = 1\ndt = 0.1\nr_inf = 0.05\n";

#[test]
fn run_then_resume_from_the_final_checkpoint() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(tmp.path(), SMALL);
    let out = ets().arg("run").arg(&conf).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("final norm"));
    for f in [
        "final.ckpt",
        "dipole.csv",
        "spectrum.csv",
        "klog.csv",
        "meta.json",
    ] {
        assert!(tmp.path().join("out").join(f).exists(), "{f} missing");
    }
    let out = ets()
        .arg("resume")
        .arg(tmp.path().join("out/final.ckpt"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in [
        "colour = red\n",
        "l_max = 3\n",
        "gauge = coulomb\n",
        "dt = -1\n",
    ] {
        let conf = write_config(tmp.path(), &format!("{SMALL}{bad}"));
        let out = ets().arg("run").arg(&conf).output().unwrap();
        assert_eq!(
            out.status.code(),
            Some(2),
            "{bad:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
    let conf = write_config(tmp.path(), "n_dvr = 6\n");
    assert_eq!(
        ets()
            .arg("ground-state")
            .arg(&conf)
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_files_exit_with_code_1() {
    let out = ets()
        .args(["run", "/nonexistent/run.conf"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = ets()
        .args(["resume", "/nonexistent/state.ckpt"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stiffness_abort_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(tmp.path(), &format!("{SMALL}max_k = 3\n"));
    let out = ets().arg("run").arg(&conf).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn ground_state_and_scan_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(
        tmp.path(),
        &format!("{SMALL}scan_dt = 0.05, 0.1\nscan_trials = 3\n"),
    );
    let out = ets().arg("ground-state").arg(&conf).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("E0 = -0.49"));
    let out = ets()
        .arg("scan-kmax")
        .env("ETS_THREADS", "1")
        .arg(&conf)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 2);
    assert!(tmp.path().join("out/kmax.csv").exists());

    let out = ets()
        .arg("scan-kmax")
        .env("ETS_THREADS", "lots")
        .arg(&conf)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
