//! End-to-end runs of the `gawq` binary on the shipped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn gawq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gawq")).args(args).output().expect("binary runs")
}

fn run_ok(sub: &str, cfg: &Path, out: &Path) -> Output {
    let o = gawq(&[sub, cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

fn write_cfg(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn spectrum_fig2d_shows_the_singular_peak_and_decoupling() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("spectrum", &config("fig2d.cfg"), dir.path());
    let (header, rows) = read_csv(&dir.path().join("spectrum.csv"));
    assert_eq!(header, ["k", "omega_k", "Re_r", "Im_r", "Re_t", "Im_t", "R", "T", "flux_sum", "singular_flag"]);
    let num = |row: &Vec<String>, i: usize| row[i].parse::<f64>().unwrap();
    let peak = rows.iter().filter(|r| (num(r, 1) + 0.496).abs() < 0.01).map(|r| num(r, 8)).fold(0.0, f64::max);
    assert!(peak > 1e3, "max R+T near the singular energy: {peak}");
    let third = rows
        .iter()
        .min_by(|a, b| (num(a, 0) - std::f64::consts::FRAC_PI_3).abs().total_cmp(&(num(b, 0) - std::f64::consts::FRAC_PI_3).abs()))
        .unwrap();
    assert!((num(third, 0) - std::f64::consts::FRAC_PI_3).abs() < 1e-12);
    assert!((num(third, 8) - 1.0).abs() < 1e-12);
}

#[test]
fn poles_fig3_reports_the_critical_pair() {
    let dir = tempfile::tempdir().unwrap();
    run_ok("poles", &config("fig3.cfg"), dir.path());
    let (header, rows) = read_csv(&dir.path().join("poles.csv"));
    assert_eq!(header, ["gamma", "Re_k", "Im_k", "Re_E", "Im_E", "class", "residual", "branch"]);
    let mut classes: Vec<&str> = rows.iter().map(|r| r[5].as_str()).collect();
    classes.sort_unstable();
    assert_eq!(classes, ["growing", "in-continuum"]);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for cfg in ["fig2a.cfg", "fig2c.cfg"] {
        run_ok("spectrum", &config(cfg), a.path());
        run_ok("spectrum", &config(cfg), b.path());
        assert_eq!(std::fs::read(a.path().join("spectrum.csv")).unwrap(), std::fs::read(b.path().join("spectrum.csv")).unwrap());
    }
    run_ok("singularity", &config("fig2d.cfg"), a.path());
    run_ok("singularity", &config("fig2d.cfg"), b.path());
    assert_eq!(std::fs::read(a.path().join("singularities.csv")).unwrap(), std::fs::read(b.path().join("singularities.csv")).unwrap());
}

#[test]
fn shipped_configs_round_trip_through_dump() {
    for entry in std::fs::read_dir(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let o = gawq(&["dump-config", path.to_str().unwrap()]);
        assert!(o.status.success());
        assert_eq!(o.stdout, std::fs::read(&path).unwrap(), "{}", path.display());
    }
}

#[test]
fn modes_writes_profiles_and_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "system.N = 3\nsystem.g = 0.812\nsystem.gamma = 0.2152520767735285\npacket.alpha = 0.02\npacket.j_c = -500\npacket.k_c = 1.32\nprofile.j_min = -10\nprofile.j_max = 13\n",
    );
    run_ok("modes", &cfg, dir.path());
    for id in 0..2 {
        let (header, rows) = read_csv(&dir.path().join(format!("profile_{id}.csv")));
        assert_eq!(header, ["j", "Re_amp", "Im_amp", "abs2"]);
        assert_eq!(rows.len(), 24);
    }
    let (header, rows) = read_csv(&dir.path().join("coefficients.csv"));
    assert_eq!(header, ["pole_id", "Re_C", "Im_C", "Re_A", "Im_A"]);
    assert_eq!(rows.len(), 2);
}

#[test]
fn evolve_writes_snapshots_observables_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "system.N = 3\nsystem.g = 0.812\nsystem.gamma = -0.215\npacket.alpha = 0.02\npacket.j_c = -400\npacket.k_c = 1.32\nlattice.sites = 1600\nevolve.t_end = 150\nevolve.snapshots = 0, 150\nevolve.sample_dt = 5\n",
    );
    run_ok("evolve", &cfg, dir.path());
    let (header, rows) = read_csv(&dir.path().join("snapshots.csv"));
    assert_eq!(header, ["t", "j", "P"]);
    assert_eq!(rows.len(), 2 * 1600);
    let (header, rows) = read_csv(&dir.path().join("observables.csv"));
    assert_eq!(header, ["t", "R_L", "T_L", "interior", "atom_prob", "total_norm"]);
    assert!(rows.len() > 20);
    let report = std::fs::read_to_string(dir.path().join("fits.txt")).unwrap();
    let get = |k: &str| -> f64 { report.lines().find_map(|l| l.strip_prefix(&format!("{k} = "))).unwrap().parse().unwrap() };
    assert!((get("R_L") - get("stationary_R_at_k_c")).abs() < 0.02);
    assert!((get("T_L") - get("stationary_T_at_k_c")).abs() < 0.02);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |text: &str, sub: &str| {
        let cfg = write_cfg(dir.path(), text);
        let o = gawq(&[sub, cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        (o.status.code(), String::from_utf8_lossy(&o.stderr).into_owned())
    };

    let (c, err) = code("system.N = 0\nsystem.g = 0.8\n", "poles");
    assert_eq!(c, Some(2));
    assert!(err.contains("system.N") && err.contains("line 1"), "{err}");

    let (c, err) = code("system.N = 3\nsystem.g = 0.8\nsystem.bogus = 1\n", "poles");
    assert_eq!(c, Some(2));
    assert!(err.contains("system.bogus"), "{err}");

    let (c, _) = code("system.N = 3\nsystem.g = 0.8\n", "spectrum");
    assert_eq!(c, Some(2), "spectrum without a grid block");

    let (c, _) = code(
        "system.N = 3\nsystem.g = 0.8\npacket.alpha = 0.05\npacket.j_c = -200\npacket.k_c = 1.32\nevolve.t_end = 10\nevolve.tol = 1e-300\n",
        "evolve",
    );
    assert_eq!(c, Some(3), "step underflow is a numerical error");

    let (c, err) = code(
        "system.N = 3\nsystem.g = 0.8\npacket.alpha = 0.05\npacket.j_c = -200\npacket.k_c = 1.32\nlattice.sites = 800\nevolve.t_end = 400\n",
        "evolve",
    );
    assert_eq!(c, Some(4), "{err}");
}
