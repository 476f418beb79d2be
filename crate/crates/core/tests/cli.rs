use std::process::Command;

fn smcmc() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_smcmc"));
    c.env("RUST_LOG", "warn");
    c
}

#[test]
fn bad_dimension_exits_with_config_code() {
    let out = smcmc()
        .args(["simulate", "--set", "model.d=10"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = smcmc()
        .args(["bench", "--preset", "table9"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_report_exits_with_runtime_code() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e.csv");
    std::fs::write(&csv, "").unwrap();
    let svg = dir.path().join("e.svg");
    let out = smcmc()
        .args(["report", "--csv"])
        .arg(&csv)
        .arg("--svg")
        .arg(&svg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(!svg.exists());
}

#[test]
fn simulate_bench_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "model.type = gaussian\nmodel.d = 4\nfilter.method = kf,dzz_edh,bpf\nfilter.n = 30\n\
         filter.n_burnin = 5\nfilter.bpf_particles = 50\nrun.t = 3\nrun.trials = 2\nrun.seed = 9\n",
    )
    .unwrap();
    let sim = dir.path().join("sim.csv");
    let status = smcmc()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&sim)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        std::fs::read_to_string(&sim).unwrap().lines().count(),
        1 + 2 * 3 * 2 * 4
    );

    let bench = |name: &str| {
        let p = dir.path().join(name);
        let status = smcmc()
            .args(["bench", "--threads", "1", "--no-timing", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&p)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(&p).unwrap()
    };
    let a = bench("a.csv");
    assert_eq!(a, bench("b.csv"));

    let svg = dir.path().join("r.svg");
    let status = smcmc()
        .args(["report", "--csv"])
        .arg(dir.path().join("a.csv"))
        .arg("--svg")
        .arg(&svg)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}
