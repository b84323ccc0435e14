use std::process::Command;

fn fraglog(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fraglog")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

/// Parses the data rows of a CSV table into named columns.
fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().expect("header").split(',').collect();
    let idx = header.iter().position(|h| *h == name).expect("column present");
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn dgamma_at_one_is_a_point_mass_at_two() {
    let (code, out, _) = fraglog(&["dgamma", "--gamma", "1", "--lambda", "2"]);
    assert_eq!(code, 0);
    let v = column(&out, "value")[0];
    assert!((v - (-4.0f64).exp()).abs() < 1e-13, "{v}");
}

#[test]
fn laplace_of_the_drift_case() {
    let (code, out, _) = fraglog(&["laplace", "--family", "stable", "--gamma", "1", "--q", "1", "--t", "4"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# fraglog "));
    assert!(out.contains("seed=0"));
    for col in ["exact", "gaussian_form"] {
        let v = column(&out, col)[0];
        assert!((v - (-4.0f64).exp()).abs() < 1e-12, "{col} = {v}");
    }
}

#[test]
fn values_carry_fifteen_significant_digits() {
    let (_, out, _) = fraglog(&["dgamma", "--gamma", "0.5", "--lambda", "0.5,1"]);
    let row = out.lines().last().unwrap();
    for cell in row.split(',') {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 15, "{cell}");
    }
}

#[test]
fn usage_errors_exit_with_one() {
    let (code, _, err) = fraglog(&["laplace", "--family", "exponential", "--rate", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("triplet.theta"), "{err}");
    let (code, _, _) = fraglog(&["laplace", "--bogus"]);
    assert_eq!(code, 1);
    let (code, _, _) = fraglog(&["dgamma", "--gamma", "3"]);
    assert_eq!(code, 1);
}

#[test]
fn simulations_are_reproducible() {
    let args = [
        "simulate",
        "--family",
        "exponential",
        "--rate",
        "1",
        "--theta",
        "1",
        "--t",
        "1,5",
        "--paths",
        "500",
        "--seed",
        "11",
        "--emit",
        "samples",
    ];
    let (code, a, _) = fraglog(&args);
    assert_eq!(code, 0);
    let (_, b, _) = fraglog(&args);
    assert_eq!(a, b);
    assert_eq!(column(&a, "xi").len(), 1000);
    let (_, c, _) = fraglog(&["fragsim", "--runs", "50", "--t", "2", "--seed", "4"]);
    let (_, d, _) = fraglog(&["fragsim", "--runs", "50", "--t", "2", "--seed", "4", "--threads", "1"]);
    assert_eq!(c, d);
}

#[test]
fn config_file_drives_a_run() {
    let dir = std::env::temp_dir().join(format!("fraglog-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.toml");
    let csv = dir.join("out.csv");
    std::fs::write(
        &cfg,
        format!(
            "command = \"asymptotic\"\noutput = \"{}\"\n[triplet]\ngamma = 0.5\n[params]\nq = [1.0]\nt = [1e6]\n",
            csv.display()
        ),
    )
    .unwrap();
    let (code, stdout, _) = fraglog(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let ratio = column(&text, "ratio")[0];
    assert!((ratio - 1.0).abs() < 0.05, "{ratio}");
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn fast_suite_passes() {
    let (code, out, err) = fraglog(&["verify", "--suite", "fast"]);
    assert_eq!(code, 0, "{out}\n{err}");
    assert_eq!(out.lines().filter(|l| l.contains(" PASS ")).count(), 8, "{out}");
}
