use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Proc;

use proptest::prelude::*;
use spectra_core::frequency_lattice::FrequencySet;
use spectra_lab::config::{parse_config_str, FrequencyEntry, LadderSpec, RunConfig};
use spectra_lab::{parse_config, parse_config_for, Command, ViolationKind};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_spectra-lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"{
  "d": 1,
  "frequencies": [
    { "frequency": [["1"]], "coefficient": ["1/10", "0"] },
    { "frequency": [["-1"]], "coefficient": ["1/10", "0"] }
  ],
  "zones": { "samples": 50 },
  "oracle": { "m_cut": 60, "quadrature": "gauss_crossing" },
  "ladder": { "list": [100.0, 300.0, 900.0] },
  "points": { "x": [[0.0], [1.0]], "y": [[0.5], [2.0]], "heat_grid": 8 },
  "seed": 3
}"#;

#[test]
fn mathieu_example_parses() {
    let cfg = parse_config(&configs().join("mathieu.json")).unwrap();
    assert_eq!(cfg.d, 1);
    let theta = cfg.potential().frequency_set();
    assert_eq!(theta, FrequencySet::from_integer_vectors(1, &[vec![0], vec![1], vec![-1]]).unwrap());
}

#[test]
fn shipped_configs_parse_for_every_command() {
    for name in ["mathieu.json", "default.json", "square.json"] {
        for cmd in Command::ALL {
            parse_config_for(&configs().join(name), Some(cmd)).unwrap_or_else(|e| panic!("{name} {cmd:?}: {e}"));
        }
    }
}

#[test]
fn non_hermitian_coefficients_rejected() {
    let text = r#"{"d": 1, "frequencies": [
        {"frequency": [["1"]], "coefficient": ["1", "0"]},
        {"frequency": [["-1"]], "coefficient": ["1/2", "0"]}]}"#;
    let e = parse_config_str(text, None).unwrap_err();
    assert!(e.has(ViolationKind::NonHermitianPotential), "{e}");
    assert_eq!(e.violations.len(), 1, "{e}");
    let lone = r#"{"d": 1, "frequencies": [{"frequency": [["-2"]], "coefficient": ["1", "0"]}]}"#;
    assert!(parse_config_str(lone, None).unwrap_err().has(ViolationKind::NonHermitianPotential));
    let complex = r#"{"d": 1, "frequencies": [
        {"frequency": [["1"]], "coefficient": ["0", "1/3"]},
        {"frequency": [["-1"]], "coefficient": ["0", "-1/3"]}]}"#;
    parse_config_str(complex, None).unwrap();
}

#[test]
fn three_dimensions_rejected_for_oracle_commands() {
    let text = r#"{"d": 3, "frequencies": [
        {"frequency": [["1"], ["0"], ["0"]], "coefficient": ["1", "0"]},
        {"frequency": [["-1"], ["0"], ["0"]], "coefficient": ["1", "0"]}]}"#;
    let e = parse_config_str(text, Some(Command::Bloch)).unwrap_err();
    assert!(e.has(ViolationKind::UnsupportedDimension), "{e}");
    parse_config_str(text, Some(Command::Heat)).unwrap();
}

#[test]
fn all_violations_are_reported() {
    let text = r#"{"d": 1, "frequencies": [{"frequency": [["x/2"]], "coefficient": ["1", "0"]}],
        "oracle": {"m_cut": 0}, "ladder": {"list": [5.0, 2.0]}, "points": {"x": [[0.0, 1.0]]}}"#;
    let e = parse_config_str(text, Some(Command::Bloch)).unwrap_err();
    assert!(e.violations.len() >= 4, "{e}");
    assert!(e.has(ViolationKind::Malformed) && e.has(ViolationKind::InvalidParameter));
}

#[test]
fn malformed_json_and_unknown_fields() {
    assert!(parse_config_str("{", None).unwrap_err().has(ViolationKind::Malformed));
    let text = r#"{"d": 1, "frequencies": [], "colour": 1}"#;
    assert!(parse_config_str(text, None).unwrap_err().has(ViolationKind::Malformed));
}

#[test]
fn ladder_above_ceiling_rejected() {
    let text = r#"{"d": 1, "frequencies": [], "oracle": {"m_cut": 20}, "ladder": {"list": [50.0, 200.0]}}"#;
    assert!(parse_config_str(text, Some(Command::Compare)).is_err());
    parse_config_str(text, Some(Command::Heat)).unwrap();
}

#[test]
fn canonical_rationals_after_parse() {
    let text = r#"{"d": 1, "frequencies": [
        {"frequency": [["2/2"]], "coefficient": ["0.25", "0"]},
        {"frequency": [["-1"]], "coefficient": ["2/8", "0"]}]}"#;
    let cfg = parse_config_str(text, None).unwrap();
    assert_eq!(cfg.frequencies[0].frequency, vec![vec!["1".to_string()]]);
    assert_eq!(cfg.frequencies[0].coefficient, ["1/4".to_string(), "0".to_string()]);
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        1usize..=2,
        proptest::collection::vec((1i64..4, -3i64..4, 1i64..9, -3i64..4), 0..4),
        1.0e2f64..1.0e5,
        any::<u64>(),
        proptest::collection::vec(-10.0f64..10.0, 0..3),
    )
        .prop_map(|(d, freqs, rho, seed, xs)| {
            let mut frequencies = Vec::new();
            for (i, (k, re, den, im)) in freqs.into_iter().enumerate() {
                // distinct frequencies (k + 4i) e₁, with their mirrors
                let n = k + 4 * i as i64;
                let row = |v: i64| {
                    let mut f = vec![vec![v.to_string()]];
                    f.extend((1..d).map(|_| vec!["0".to_string()]));
                    f
                };
                frequencies.push(FrequencyEntry { frequency: row(n), coefficient: [format!("{re}/{den}"), format!("{im}/{den}")] });
                frequencies.push(FrequencyEntry { frequency: row(-n), coefficient: [format!("{re}/{den}"), format!("{}/{den}", -im)] });
            }
            let mut cfg: RunConfig = serde_json::from_str(&format!(r#"{{"d": {d}, "frequencies": []}}"#)).unwrap();
            cfg.frequencies = frequencies;
            cfg.zones.rho0 = rho;
            cfg.seed = seed;
            cfg.points.x = xs.into_iter().map(|x| vec![x; d]).collect();
            cfg.ladder = LadderSpec::Geometric { lo: 10.0, hi: 10.0 + rho.sqrt(), n: 5 };
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip_is_identity(raw in arb_config()) {
        let first = parse_config_str(&serde_json::to_string(&raw).unwrap(), None).unwrap();
        let second = parse_config_str(&first.to_json(), None).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(first.to_json(), second.to_json());
    }
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let out = bin().args(["frobnicate", "--config", "x.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn config_error_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"d": 0, "frequencies": []}"#);
    let out = bin().args(["heat", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let missing = bin().args(["heat", "--config"]).arg(dir.path().join("nope.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn compare_writes_expected_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = bin().args(["compare", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("o/compare.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("λ,x,N_oracle,N_expansion_L0,N_expansion_L1,R_0,R_1"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn bloch_rows_carry_pairs_and_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = bin().args(["bloch", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("bloch.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "λ,x,y,e,N_k,M_cut");
    assert_eq!(lines.len(), 7);
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(f[1].parse::<f64>().unwrap(), 0.0);
    assert_eq!(f[2].parse::<f64>().unwrap(), 0.5);
    assert_eq!(f[5], "60");
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    for cmd in ["zones", "gauge", "heat", "bloch", "compare"] {
        let mut outputs = Vec::new();
        for run in ["a", "b"] {
            let o = dir.path().join(format!("{cmd}-{run}"));
            let st = bin().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&o).output().unwrap().status;
            assert_eq!(st.code(), Some(0), "{cmd}");
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(&o)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            outputs.push(files);
        }
        assert!(!outputs[0].is_empty());
        assert_eq!(outputs[0], outputs[1], "{cmd}");
    }
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let read = |seed: &str, tag: &str| {
        let o = dir.path().join(tag);
        let st = bin().args(["zones", "--seed", seed, "--config"]).arg(&cfg).arg("--out").arg(&o).output().unwrap().status;
        assert!(st.success());
        fs::read_to_string(o.join("zones.csv")).unwrap()
    };
    assert_eq!(read("3", "s3"), read("3", "s3b"));
    assert_ne!(read("3", "s3c"), read("4", "s4"));
}

#[test]
fn validate_on_default_config_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["validate", "--config"])
        .arg(configs().join("default.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert!(report["checks"].as_array().unwrap().len() >= 10);
}

#[test]
fn heat_reports_mathieu_values() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin().args(["heat", "--config"]).arg(configs().join("mathieu.json")).arg("--out").arg(dir.path()).output().unwrap().status;
    assert!(st.success());
    let exact: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("heat_exact.json")).unwrap()).unwrap();
    let coeffs = exact["coefficients"].as_array().unwrap();
    assert_eq!(coeffs[0]["at_origin"], "(-1)·π^-1");
    assert_eq!(coeffs[1]["at_origin"], "(-7/12)·π^-1");
}
