//! End-to-end checks of the command-line binary: artifact layout, exit codes,
//! and byte-level determinism of the CSV outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rydcav"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn small_evolve_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.cfg");
    fs::write(
        &path,
        "params.g = 1\n\
         params.omega = 1\n\
         params.delta = 10\n\
         params.J = 10\n\
         params.v_dd = 20\n\
         params.kappa = 0\n\
         params.gamma = 0\n\
         params.gamma_r = 0\n\
         space.n_max = 3\n\
         state.kind = localized_fock\n\
         state.atoms = G\n\
         state.n1 = 1\n\
         state.n2 = 1\n\
         grid.t_end = 50\n\
         grid.samples = 101\n",
    )
    .unwrap();
    path
}

#[test]
fn validate_passes_and_reports_each_check() {
    let out = run(&["validate"]);
    assert!(out.status.success(), "validate failed: {out:?}");
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "builder_equivalence",
        "hermiticity",
        "frame_equivalence",
        "wigner_normalization",
        "wigner_marginals",
        "norm_conservation",
        "excitation_conservation",
    ] {
        assert!(text.contains(name), "report missing {name}:\n{text}");
    }
    assert!(text.lines().all(|l| !l.starts_with("FAIL")));
}

#[test]
fn evolve_is_deterministic_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_evolve_config(tmp.path());
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out_dir in [&out_a, &out_b] {
        let out = run(&[
            "evolve",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "evolve failed: {out:?}");
    }
    let csv_a = fs::read(out_a.join("trajectory.csv")).unwrap();
    let csv_b = fs::read(out_b.join("trajectory.csv")).unwrap();
    assert!(!csv_a.is_empty());
    assert_eq!(csv_a, csv_b, "outputs differ between identical runs");

    let header = String::from_utf8(csv_a)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "t,P_G,P_S,P_A,P_R,n_a1,n_a2,n_c1,n_c2,norm");

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("evolve_summary.json")).unwrap())
            .unwrap();
    assert!(summary["peak_p_r"].as_f64().unwrap() >= 0.0);
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();

    // unknown key
    let bad = tmp.path().join("bad.cfg");
    fs::write(&bad, "params.bogus = 1\n").unwrap();
    let out = run(&["evolve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("unknown key") || err.contains("missing key"),
        "{err}"
    );

    // unknown recipe
    let out = run(&["evolve", "--recipe", "fig99"]);
    assert_eq!(out.status.code(), Some(2));

    // no config at all
    let out = run(&["evolve"]);
    assert_eq!(out.status.code(), Some(2));

    // empty sweep list
    let empty = tmp.path().join("empty.cfg");
    fs::write(&empty, "sweep.n_list = ,\n").unwrap();
    let out = run(&[
        "sweep",
        "--recipe",
        "fig3a",
        "--config",
        empty.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn derive_reports_couplings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "derive",
        "--recipe",
        "decay",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("derived.json")).unwrap())
            .unwrap();
    assert!((summary["lambda"].as_f64().unwrap() - 0.1).abs() < 1e-12);
    assert!((summary["xi"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    assert!((summary["gamma_e"].as_f64().unwrap() - 2e-5).abs() < 1e-12);
    // resonance ladder for the c1 branch: 2J + (n-2) lambda
    let res = summary["resonance_vdd_c1"].as_array().unwrap();
    assert!((res[2].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((res[4].as_f64().unwrap() - 2.2).abs() < 1e-12);
}

#[test]
fn wigner_subcommand_reports_fock_negativity() {
    // reduced c1 state of |G> (x) |1>_c1 |0>_c2 is the Fock state |1>,
    // whose Wigner function dips to -1/pi at the origin
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("fock.cfg");
    fs::write(
        &cfg,
        "params.g = 1\n\
         params.omega = 1\n\
         params.delta = 10\n\
         params.J = 10\n\
         params.v_dd = 20\n\
         params.kappa = 0\n\
         params.gamma = 0\n\
         params.gamma_r = 0\n\
         space.n_max = 6\n\
         state.kind = normal_fock\n\
         state.atoms = G\n\
         state.n1 = 1\n\
         state.n2 = 0\n\
         wigner.mode = c1\n\
         wigner.extent = 4\n\
         wigner.points = 41\n",
    )
    .unwrap();
    let out = run(&[
        "wigner",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("wigner_summary.json")).unwrap())
            .unwrap();
    let w0 = summary["w_origin"].as_f64().unwrap();
    assert!(
        (w0 + 1.0 / std::f64::consts::PI).abs() < 1e-10,
        "W(0,0) = {w0}"
    );
    let wigner_csv = fs::read_to_string(tmp.path().join("wigner.csv")).unwrap();
    assert_eq!(wigner_csv.lines().next().unwrap(), "x,p,W");
    assert_eq!(wigner_csv.lines().count(), 1 + 41 * 41);
}

#[test]
fn scan_subcommand_emits_expected_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("scan.cfg");
    fs::write(
        &cfg,
        "scan.n_list = 0,2\n\
         scan.samples = 501\n\
         space.n_max = 4\n",
    )
    .unwrap();
    let out = run(&[
        "scan-n",
        "--recipe",
        "fig4b",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let csv = fs::read_to_string(tmp.path().join("scan_emission.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,emission,normalized");
    assert!(lines[1].starts_with("0,"));
    assert!(
        lines[1].ends_with(','),
        "vacuum row has no normalized value"
    );
    assert_eq!(lines.len(), 3);
}

#[test]
fn decay_subcommand_tracks_survival() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "decay",
        "--recipe",
        "decay",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("decay_summary.json")).unwrap())
            .unwrap();
    assert!(summary["max_relative_deviation"].as_f64().unwrap() < 0.1);
    let csv = fs::read_to_string(tmp.path().join("decay.csv")).unwrap();
    assert_eq!(csv.lines().count(), 502);
}

#[test]
fn filter_pipeline_emits_all_artifacts() {
    // small coherent filter run (not the full figure parameters) to check the
    // artifact chain: photon distribution, Wigner grid, densities, summary
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("filter.cfg");
    fs::write(
        &cfg,
        "params.g = 1\n\
         params.omega = 1\n\
         params.delta = 10\n\
         params.J = 0.998\n\
         params.v_dd = 2\n\
         params.kappa = 0\n\
         params.gamma = 0\n\
         params.gamma_r = 0\n\
         space.n_max = 5\n\
         state.kind = coherent\n\
         state.atoms = G\n\
         state.alpha_re = 0.35\n\
         state.alpha_im = 0\n\
         state.beta_re = 0.35\n\
         state.beta_im = 0\n\
         filter.measure = G\n\
         filter.time = auto\n\
         wigner.mode = c1\n\
         wigner.extent = 4\n\
         wigner.points = 41\n",
    )
    .unwrap();
    let out = run(&[
        "filter",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    for artifact in [
        "photon_distribution.csv",
        "wigner.csv",
        "mode_density.csv",
        "filtered_state.csv",
        "filter_summary.json",
    ] {
        assert!(tmp.path().join(artifact).exists(), "{artifact} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("filter_summary.json")).unwrap())
            .unwrap();
    let p = summary["probability"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    let pn_csv = fs::read_to_string(tmp.path().join("photon_distribution.csv")).unwrap();
    assert_eq!(pn_csv.lines().next().unwrap(), "n,p");
}

/// Full figure pipeline at recipe parameters; run with `cargo test -- --ignored`.
/// Each recipe must finish well under the five-minute budget.
#[test]
#[ignore]
fn all_recipes_complete_under_budget() {
    let tmp = tempfile::tempdir().unwrap();
    for (recipe, cmd) in [
        ("fig2a", "evolve"),
        ("fig2b", "evolve"),
        ("fig2c", "evolve"),
        ("fig2d", "evolve"),
        ("fig2e", "evolve"),
        ("fig2f", "evolve"),
        ("fig3a", "sweep"),
        ("fig3b", "sweep"),
        ("fig4a", "scan-n"),
        ("fig4b", "scan-n"),
        ("fig5", "evolve"),
        ("fig6a", "filter"),
        ("fig6b", "filter"),
        ("decay", "decay"),
    ] {
        let out_dir = tmp.path().join(recipe);
        let start = std::time::Instant::now();
        let out = run(&[cmd, "--recipe", recipe, "--out", out_dir.to_str().unwrap()]);
        let elapsed = start.elapsed().as_secs_f64();
        assert!(out.status.success(), "{recipe} failed: {out:?}");
        assert!(elapsed < 300.0, "{recipe} took {elapsed:.0} s");
        println!("{recipe} via {cmd}: {elapsed:.1} s");
    }
}
