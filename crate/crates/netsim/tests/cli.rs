use std::path::Path;
use std::process::{Command, Output};

fn netsim(dir: &Path, args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_netsim"));
    cmd.args(args).current_dir(dir).env_remove("NETSIM_SEED");
    if let Some(s) = env_seed {
        cmd.env("NETSIM_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn records(dir: &Path) -> String {
    // drop the wall-clock column
    std::fs::read_to_string(dir.join("out/records.csv"))
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn generate_graph_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    let o = netsim(dir.path(), &["generate-graph", "--kind", "torus"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("n 900\n"));
    assert_eq!(text.lines().count(), 1 + 1800);
    assert!(String::from_utf8_lossy(&o.stderr).contains("edges=1800"));

    let o = netsim(
        dir.path(),
        &["generate-graph", "--kind", "small-world", "--seed", "3", "-o", "sw.txt"],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "n=900 edges=2250 k=5");
    let text = std::fs::read_to_string(dir.path().join("sw.txt")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2250);

    let again = netsim(dir.path(), &["generate-graph", "--kind", "small-world"], Some("3"));
    assert_eq!(stdout(&again), text);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cases: [&[&str]; 5] = [
        &["generate-graph", "--width", "2", "--height", "2"],
        &["generate-graph", "--kind", "hypercube"],
        &["verify", "--suite", "everything"],
        &["run", "--process", "SIR"],
        &["no-such-command"],
    ];
    for args in cases {
        assert_eq!(netsim(d, args, None).status.code(), Some(2), "{args:?}");
    }
    std::fs::write(d.join("bad.cfg"), "run.colour = blue\n").unwrap();
    assert_eq!(netsim(d, &["run", "--config", "bad.cfg"], None).status.code(), Some(2));
    assert_eq!(netsim(d, &["run"], Some("not-a-number")).status.code(), Some(2));
    assert_eq!(netsim(d, &["bounds", "--h", "x"], None).status.code(), Some(2));
    assert_eq!(netsim(d, &["--help"], None).status.code(), Some(0));
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("file"), "").unwrap();
    let o = netsim(d, &["run", "--replications", "1", "--output-dir", "file/sub"], None);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(
        netsim(d, &["run", "--config", "missing.cfg"], None).status.code(),
        Some(3)
    );
    assert_eq!(
        netsim(d, &["generate-graph", "-o", "file/g.txt"], None).status.code(),
        Some(3)
    );
}

#[test]
fn verify_lemmas_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = netsim(dir.path(), &["verify", "--suite", "lemmas"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS ")).count(), 3);
    assert!(text.contains("3/3 checks passed"));
}

#[test]
fn bounds_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = netsim(dir.path(), &["bounds", "--process", "both", "--h", "0.01,2"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "process,n,k,mu,T,h,C,K,bound,vacuous");
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[2], "si,900,4,0,1,2,NA,NA,NA,error");

    let cells: Vec<f64> = lines[1]
        .split(',')
        .skip(6)
        .take(3)
        .map(|c| c.parse().unwrap())
        .collect();
    let c = 900.0 * 16.0 * 2f64.exp();
    let k = (4f64.exp() - 1.0) / 4.0;
    assert!((cells[0] - c).abs() <= 1e-9 * c);
    assert!((cells[1] - k).abs() <= 1e-12 * k);
    assert!((cells[2] - c * k * 0.01).abs() <= 1e-9 * c * k);

    let sis: Vec<f64> = lines[3]
        .split(',')
        .skip(6)
        .take(3)
        .map(|c| c.parse().unwrap())
        .collect();
    let c = 900.0 * 4.0 * (4.0 * 2f64.exp() + 0.2);
    let k = (4.2f64.exp() - 1.0) / 4.2;
    assert!((sis[0] - c).abs() <= 1e-9 * c);
    assert!((sis[1] - k).abs() <= 1e-12 * k);

    // without recovery the SIS growth factor is the SI one
    let o = netsim(dir.path(), &["bounds", "--process", "both", "--mu", "0"], None);
    let text = stdout(&o);
    let k_of = |l: &str| l.split(',').nth(7).unwrap().to_string();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(k_of(lines[1]), k_of(lines[2]));
}

#[test]
fn flags_override_config_and_env_seed_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("a.cfg"), "seed = 3\nrun.replications = 4\noutput.dir = out\n").unwrap();
    let base = ["run", "--replications", "4", "--output-dir", "out"];

    let run = |args: &[&str], env: Option<&str>| {
        let _ = std::fs::remove_dir_all(d.join("out"));
        let o = netsim(d, args, env);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        records(d)
    };
    let seed5 = run(&[&base[..], &["--seed", "5"]].concat(), None);
    let seed3 = run(&[&base[..], &["--seed", "3"]].concat(), None);
    assert_ne!(seed5, seed3);
    assert_eq!(run(&["run", "--config", "a.cfg", "--seed", "5"], None), seed5);
    assert_eq!(run(&["run", "--config", "a.cfg"], Some("5")), seed3);
    assert_eq!(run(&base, Some("5")), seed5);
    assert_eq!(run(&[&base[..], &["--seed", "3"]].concat(), Some("5")), seed3);
    let default = run(&base, None);
    assert_eq!(run(&[&base[..], &["--seed", "1"]].concat(), None), default);
}

#[test]
fn run_writes_expected_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = netsim(
        d,
        &[
            "run",
            "--mode",
            "coupled",
            "--h",
            "0.05,0.1",
            "--replications",
            "3",
            "--dump",
            "--output-dir",
            "out",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    for f in [
        "records.csv",
        "summary.csv",
        "histogram.csv",
        "error_trace_h0.05.csv",
        "error_trace_h0.1.csv",
        "trajectory.csv",
    ] {
        assert!(d.join("out").join(f).exists(), "{f}");
    }
    let trace = std::fs::read_to_string(d.join("out/error_trace_h0.1.csv")).unwrap();
    assert!(trace.starts_with("rep,step,time,eps_l1,d_l1,dominance_ok\n0,1,0.1,"));
    assert_eq!(trace.lines().count(), 1 + 3 * 10);

    let o = netsim(
        d,
        &[
            "sweep",
            "--h",
            "0.01,0.02,0.05,0.1",
            "--replications",
            "5",
            "--output-dir",
            "out",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let sweep = std::fs::read_to_string(d.join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "h,mean_gap,stderr");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[5].split(',').count(), 2);

    let o = netsim(
        d,
        &["sweep", "--h", "0.05,0.1", "--replications", "5", "--output-dir", "out"],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
}
