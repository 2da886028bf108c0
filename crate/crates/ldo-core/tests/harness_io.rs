//! End-to-end tests of the experiment runners and their file formats.

use ldo_core::harness::{
    run_decide, run_gap_curve, run_laplace_check, run_regret_curve, run_sanov_check,
    ExperimentConfig, ResultTable,
};
use ldo_core::Error;

fn gap_config(rate_kind: &str) -> String {
    format!(
        r#"
[experiment]
kind = "gap_curve"
seed = 7

[problem]
kind = "newsvendor"
price = 1.65
rho = 0.05
d = 3
objectives = ["regret"]

[rate]
kind = "{rate_kind}"

[penalty]
betas = [0.5, 1.0]

[solver]
r_values = [0.1]
multistart = 12

[sim]
theta = [0.3, 0.45, 0.25]
floor = 0.01
"#
    )
}

#[test]
fn gap_curve_lln_rate_is_identically_zero() {
    let cfg = ExperimentConfig::from_toml(&gap_config("lln")).unwrap();
    let table = run_gap_curve(&cfg).unwrap();
    assert_eq!(table.rows.len(), 2);
    let gaps = table.numeric_column("gap_true").unwrap();
    for g in gaps {
        assert!(g.abs() < 1e-8, "LLN gap {g} not zero");
    }
}

#[test]
fn gap_curve_rows_nonnegative_and_sorted() {
    let cfg = ExperimentConfig::from_toml(&gap_config("rel_entropy")).unwrap();
    let table = run_gap_curve(&cfg).unwrap();
    let gaps = table.numeric_column("gap_true").unwrap();
    assert!(gaps.iter().all(|g| *g >= 0.0));
    let betas = table.numeric_column("beta").unwrap();
    assert!(betas.windows(2).all(|w| w[0] <= w[1]), "not canonical order");
    // errors column empty on success
    let err_idx = table.column_index("error").unwrap();
    for row in &table.rows {
        assert_eq!(row[err_idx].render(), "");
    }
}

#[test]
fn gap_curve_deterministic_csv_except_timestamp() {
    let cfg = ExperimentConfig::from_toml(&gap_config("rel_entropy")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run_gap_curve(&cfg).unwrap().write_csv(&p1).unwrap();
    run_gap_curve(&cfg).unwrap().write_csv(&p2).unwrap();
    let strip = |p: &std::path::Path| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# generated_at="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&p1), strip(&p2), "CSV output not deterministic");
}

const REGRET_TOML: &str = r#"
[experiment]
kind = "regret_curve"
seed = 11

[problem]
kind = "newsvendor"
price = 1.65
rho = 0.05
d = 3
objectives = ["regret"]

[rate]
kind = "rel_entropy"

[penalty]
betas = [0.5]

[solver]
r_values = [0.1]
multistart = 8

[sim]
theta = [0.3, 0.45, 0.25]
floor = 0.01
n_grid = [20, 200]
paths = 30
"#;

#[test]
fn regret_curve_decreases_for_plugin_iid() {
    let cfg = ExperimentConfig::from_toml(REGRET_TOML).unwrap();
    let table = run_regret_curve(&cfg).unwrap();
    // plugin rows at n = 20 and n = 200: regret decreasing with data
    let midx = table.column_index("method").unwrap();
    let nidx = table.column_index("n").unwrap();
    let ridx = table.column_index("avg_regret").unwrap();
    let mut plugin = Vec::new();
    for row in &table.rows {
        if row[midx].render() == "plugin" {
            plugin.push((
                row[nidx].render().parse::<i64>().unwrap(),
                row[ridx].render().parse::<f64>().unwrap(),
            ));
        }
    }
    plugin.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(plugin.len(), 2);
    assert!(plugin[1].1 <= plugin[0].1 + 1e-9);
    assert!(plugin.iter().all(|(_, r)| *r >= 0.0));
    // optimal rows exist for the configured (beta, r)
    assert!(table
        .rows
        .iter()
        .any(|row| row[midx].render() == "optimal_regret"));
}

#[test]
fn regret_curve_mixture_saturates() {
    let toml = REGRET_TOML
        .replace(
            "theta = [0.3, 0.45, 0.25]",
            "theta = [0.3, 0.45, 0.25]\ntheta1 = [0.35, 0.45, 0.2]\ntheta2 = [0.25, 0.45, 0.3]\np1 = 0.5",
        )
        .replace("n_grid = [20, 200]", "n_grid = [400]");
    let cfg = ExperimentConfig::from_toml(&toml).unwrap();
    let table = run_regret_curve(&cfg).unwrap();
    let midx = table.column_index("method").unwrap();
    let ridx = table.column_index("avg_regret").unwrap();
    for row in &table.rows {
        if row[midx].render() == "plugin" {
            let r: f64 = row[ridx].render().parse().unwrap();
            // paths converge to theta1/theta2, not theta: regret stays away
            // from zero
            assert!(r > 1e-4, "mixture plugin regret {r} unexpectedly small");
        }
    }
}

const SANOV_TOML: &str = r#"
[experiment]
kind = "sanov_check"
seed = 3

[sim]
theta = [0.3, 0.7]

[verify]
n_list = [5, 10, 20]
radii = [0.0, 0.05]
ball_grid = 30
"#;

#[test]
fn sanov_check_all_bounds_hold() {
    let cfg = ExperimentConfig::from_toml(SANOV_TOML).unwrap();
    let table = run_sanov_check(&cfg).unwrap();
    assert_eq!(table.rows.len(), 6);
    for col in ["upper_ok", "lower_ok"] {
        assert!(table.numeric_column(col).unwrap().iter().all(|v| *v == 1.0));
    }
}

#[test]
fn laplace_check_linear_identity_by_default() {
    let toml = SANOV_TOML
        .replace("kind = \"sanov_check\"", "kind = \"laplace_check\"")
        .replace("n_list = [5, 10, 20]", "n_list = [5, 25, 60]\nlinear_coeffs = [0.5, -0.25]");
    let cfg = ExperimentConfig::from_toml(&toml).unwrap();
    let table = run_laplace_check(&cfg).unwrap();
    let expect = (0.3 * 0.5f64.exp() + 0.7 * (-0.25f64).exp()).ln();
    for lhs in table.numeric_column("lhs").unwrap() {
        assert!((lhs - expect).abs() < 1e-12);
    }
}

fn decide_toml() -> String {
    gap_config("rel_entropy").replace("kind = \"gap_curve\"", "kind = \"decide\"")
}

#[test]
fn decide_uniform_measure_close_to_plugin_at_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("measure.csv");
    std::fs::write(&input, "0.3333333333333333,0.3333333333333333,0.3333333333333334\n").unwrap();
    let toml = decide_toml().replace("kind = \"rel_entropy\"", "kind = \"lln\"");
    let cfg = ExperimentConfig::from_toml(&toml).unwrap();
    let (out, table) = run_decide(&cfg, &input).unwrap();
    // LLN rate: identical to the plug-in at the uniform measure
    let problem = cfg
        .build_problem(ldo_core::Objective::Regret)
        .unwrap();
    let plug = ldo_core::plugin_decision(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], &problem).unwrap();
    assert!((out.x_star[0] - plug[0]).abs() < 1e-6);
    assert!(table.rows.iter().any(|r| r[0].render() == "u_star"));
}

#[test]
fn decide_repeated_invocation_identical() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("measure.csv");
    std::fs::write(&input, "0.5,0.3,0.2\n").unwrap();
    let cfg = ExperimentConfig::from_toml(&decide_toml()).unwrap();
    let (a, _) = run_decide(&cfg, &input).unwrap();
    let (b, _) = run_decide(&cfg, &input).unwrap();
    assert_eq!(a.x_star, b.x_star);
    assert_eq!(a.u_star, b.u_star);
    assert_eq!(a.theta_star, b.theta_star);
}

#[test]
fn decide_rejects_malformed_and_off_simplex() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(&decide_toml()).unwrap();

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n0.5,oops,0.2\n").unwrap();
    match run_decide(&cfg, &bad) {
        Err(Error::InputParse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }

    let off = dir.path().join("off.csv");
    std::fs::write(&off, "0.5,0.4,0.2\n").unwrap();
    match run_decide(&cfg, &off) {
        Err(Error::InvalidArgument(msg)) => assert!(msg.contains("1.1")),
        other => panic!("expected simplex rejection, got {other:?}"),
    }

    let wrong_dim = dir.path().join("dim.csv");
    std::fs::write(&wrong_dim, "0.5,0.5\n").unwrap();
    assert!(matches!(
        run_decide(&cfg, &wrong_dim),
        Err(Error::InputParse { .. })
    ));
}

#[test]
fn table_roundtrip_through_disk() {
    let cfg = ExperimentConfig::from_toml(&gap_config("rel_entropy")).unwrap();
    let table = run_gap_curve(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    table.write_csv(&path).unwrap();
    let back = ResultTable::read_csv(&path).unwrap();
    assert_eq!(back.columns, table.columns);
    assert_eq!(back.rows.len(), table.rows.len());
    let a = table.numeric_column("gap_true").unwrap();
    let b = back.numeric_column("gap_true").unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x, y, "17-significant-digit roundtrip must be exact");
    }
}
