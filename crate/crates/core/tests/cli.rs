use std::fs;
use std::process::Command;

use sav_nls::harness::cli::cli_main;

const BIN: &str = env!("CARGO_BIN_EXE_sav-nls");

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn simulate_writes_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let status = Command::new(BIN)
        .args([
            "simulate",
            "--scheme",
            "sav2",
            "--n",
            "256",
            "--domain-half-length",
            "28.56",
            "--tau",
            "0.01",
            "--t-end",
            "10",
            "--nonlinearity",
            "cubic:-1",
            "--ic",
            "solitary",
            "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "step,t,mass,H,H_mod,r,e_u");
    assert_eq!(lines.len(), 1 + 1001);
    let last: Vec<&str> = lines[1001].split(',').collect();
    assert_eq!(last[0], "1000");
    assert_eq!(last[1].parse::<f64>().unwrap(), 10.0);
    assert!(last[6].parse::<f64>().unwrap() < 1e-3);
    assert!(text.contains("# scheme = sav2\n") && text.contains("# ic = solitary\n"));
}

#[test]
fn unknown_scheme_is_a_config_error() {
    let out = Command::new(BIN).args(["simulate", "--scheme", "rk4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--scheme"), "{err}");
}

#[test]
fn malformed_values_name_their_flag() {
    for (flag, value) in [
        ("--n", "abc"),
        ("--tau", "0"),
        ("--nonlinearity", "quartic:1"),
        ("--potential", "well"),
        ("--ic", "gauss"),
        ("--bootstrap", "euler"),
        ("--gs-r-mode", "keep"),
    ] {
        let out = Command::new(BIN).args(["simulate", flag, value]).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{flag} {value}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(flag), "{flag}");
    }
    assert_eq!(cli_main(["sav-nls", "simulate", "--no-such-flag", "1"]), 2);
    assert_eq!(cli_main(["sav-nls"]), 2);
    assert_eq!(cli_main(["sav-nls", "--help"]), 0);
}

#[test]
fn missing_input_file_is_a_config_error() {
    let code = cli_main(["sav-nls", "simulate", "--ic", "file:/nonexistent/u0.csv"]);
    assert_eq!(code, 2);
    let code = cli_main(["sav-nls", "simulate", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(code, 2);
}

#[test]
fn numerical_failure_exits_with_three() {
    // E1 + Ec = -4/3 + 1 < 0 for this soliton and adaptation is off
    let code = cli_main([
        "sav-nls",
        "simulate",
        "--n",
        "128",
        "--domain-half-length",
        "20",
        "--nonlinearity",
        "cubic:-1",
        "--ic",
        "soliton:1:-1:1",
        "--adapt-shift",
        "false",
        "--t-end",
        "0.01",
    ]);
    assert_eq!(code, 3);
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("conv.csv");
    fs::write(
        &cfg,
        "# soliton convergence\nscheme = lie\nn = 256\ndomain-half-length = 20\n\
         nonlinearity = cubic:-1\nic = soliton:1:-1:1\nt-end = 0.2\ntau = 0.02\nlevels = 3\n",
    )
    .unwrap();
    let code = cli_main([
        "sav-nls".as_ref(),
        "converge".as_ref(),
        "--config".as_ref(),
        cfg.as_os_str(),
        "--scheme".as_ref(),
        "strang".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# scheme = strang\n"), "{text}");
    assert!(text.contains("# reference = exact\n"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "param,e_u,e_H,e_Hmod,order_u,order_H");
    assert_eq!(lines.len(), 4);
    // first row has no order, splitting has no modified energy
    assert!(lines[1].ends_with(",,,"), "{}", lines[1]);
    let order: f64 = lines[3].split(',').nth(4).unwrap().parse().unwrap();
    assert!((1.7..2.3).contains(&order), "{order}");
}

#[test]
fn compare_and_groundstate_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp.csv");
    let code = cli_main([
        "sav-nls".as_ref(),
        "compare".as_ref(),
        "--n".as_ref(),
        "32".as_ref(),
        "--t-end".as_ref(),
        "0.1".as_ref(),
        "--tau".as_ref(),
        "0.02".as_ref(),
        "--levels".as_ref(),
        "2".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# reference = self\n"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "scheme,param,e_u,e_H,e_Hmod,order_u,order_H");
    assert_eq!(lines.len(), 1 + 4 * 2);

    let out = dir.path().join("gs.csv");
    let code = cli_main([
        "sav-nls".as_ref(),
        "groundstate".as_ref(),
        "--n".as_ref(),
        "128".as_ref(),
        "--domain-half-length".as_ref(),
        "8".as_ref(),
        "--potential".as_ref(),
        "harmonic".as_ref(),
        "--nonlinearity".as_ref(),
        "cubic:10".as_ref(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("# converged = true\n"));
    assert!(text.contains("# monotone = true\n"));
    assert_eq!(data_lines(&text)[0], "step,E");
    let profile = fs::read_to_string(dir.path().join("gs_profile.csv")).unwrap();
    assert_eq!(data_lines(&profile)[0], "x,phi");
    assert_eq!(data_lines(&profile).len(), 129);
}
