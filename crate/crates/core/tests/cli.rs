use std::process::{Command, Output};

fn kljn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kljn"))
        .args(args)
        .output()
        .expect("spawn kljn")
}

const SMALL_GRID: [&str; 7] = [
    "sweep",
    "--temperatures",
    "1e8,1e13,1e18",
    "--samples-per-bit",
    "50,100",
    "--key-length",
    "100",
];

#[test]
fn sweep_is_reproducible_and_well_formed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, threads) in [(&a, "1"), (&b, "3")] {
        let mut args = SMALL_GRID.to_vec();
        args.extend([
            "--seed",
            "42",
            "--threads",
            threads,
            "--out",
            path.to_str().unwrap(),
        ]);
        let out = kljn(&args);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(out.stdout.is_empty());
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "temperature_K,samples_per_bit,replicate,bits_attacked,p_estimate,std_error,analytic_p"
    );
    assert_eq!(lines.len(), 1 + 6);
    for line in &lines[1..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7);
        assert_eq!(f[3], "100");
        let p: f64 = f[4].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    // A different seed changes the noisy rows.
    let mut args = SMALL_GRID.to_vec();
    args.extend(["--seed", "43"]);
    let other = kljn(&args);
    assert!(other.status.success());
    assert_ne!(String::from_utf8(other.stdout).unwrap(), text);
}

#[test]
fn sweep_reads_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig.conf");
    std::fs::write(
        &cfg,
        "# reduced grid\nr_low_ohm = 1000\nr_high_ohm = 10000\nu_dc_volt = 0.1\nbandwidth_hz = 1e6\n\
         temperatures = 1e9, 1e14\nsamples_per_bit = 60\nkey_length = 30\nseed = 7\nreplicates = 2\n",
    )
    .unwrap();
    let out = kljn(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("1000000000.0,60,0,30,"));

    // Flag beats the file's seed.
    let flagged = kljn(&["sweep", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert_eq!(String::from_utf8(flagged.stdout).unwrap(), text);
}

#[test]
fn defense_dc_compensation_reports_half() {
    let out = kljn(&[
        "defense",
        "--kind",
        "dc-compensation",
        "--magnitude",
        "-0.1",
        "--seed",
        "1",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let after: Vec<&str> = text
        .lines()
        .find(|l| l.starts_with("after,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(after[3].parse::<f64>().unwrap(), 0.0);
    let p: f64 = after[5].parse().unwrap();
    assert!((p - 0.5).abs() <= 0.057);
    assert!(text.contains("within the 3-sigma band"));
}

#[test]
fn analytic_prints_reference_value() {
    let out = kljn(&["analytic", "--temperature", "1e12", "--samples", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let q: f64 = row[2].parse().unwrap();
    assert!((q - 0.5724).abs() < 5e-4);
}

#[test]
fn failures_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "temperatures = 1e8\nkey_length = many\n").unwrap();

    let cases: Vec<Vec<&str>> = vec![
        vec!["sweep", "--no-such-flag"],
        vec!["sweep", "--config", bad.to_str().unwrap()],
        vec!["sweep", "--config", "/nonexistent/run.conf"],
        vec!["sweep", "--temperatures", "0,1e9"],
        vec!["defense", "--kind", "bandwidth-scale", "--magnitude", "1e4"],
        vec!["defense", "--kind", "shield", "--magnitude", "1"],
        vec![
            "sweep",
            "--key-length",
            "5",
            "--out",
            "/nonexistent/dir/out.csv",
        ],
    ];
    for args in cases {
        let out = kljn(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8(out.stderr).unwrap();
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}
