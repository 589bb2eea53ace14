use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gibbsfit::io::{
    from_json_str, to_json_string, EnsembleSpecJson, GibbsModelJson, ManifestJson, ObservableJson, ObservableSetJson,
    OperatorJson, RankingRowJson, SampleRecordJson,
};
use gibbsfit::{DensityMatrixF64, HermitianOperatorF64, ObservableSetF64};

fn gibbsfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbsfit")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn state_file(dir: &Path, name: &str, rho: &DensityMatrixF64) -> PathBuf {
    write(dir, name, &to_json_string(&OperatorJson::from_state(rho)).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn canonical() -> HermitianOperatorF64 {
    let p = |w| HermitianOperatorF64::pauli_string(w).unwrap();
    &p("ZZ") + &(&p("XI") + &p("IX")).scaled(0.5)
}

fn pool_json() -> String {
    let p = |w| HermitianOperatorF64::pauli_string(w).unwrap();
    let pool = ObservableSetF64::new(
        ["H", "G2", "G3", "G4"].map(String::from).to_vec(),
        vec![canonical(), &p("ZI") + &p("IZ"), p("XX"), p("YY")],
    )
    .unwrap();
    to_json_string(&ObservableSetJson::from_set(&pool)).unwrap()
}

fn spec_json() -> String {
    let spec = EnsembleSpecJson {
        sigma: None,
        family: ObservableSetJson::Listed {
            labels: vec!["H".into()],
            observables: vec![ObservableJson::Matrix(OperatorJson::from_operator(&canonical()))],
        },
        parameter_draws: (0..12).map(|i| vec![0.1 + 0.15 * i as f64]).collect(),
        sizes: vec![10_000; 12],
        measurement_set: None,
    };
    to_json_string(&spec).unwrap()
}

#[test]
fn entropy_of_the_mixed_qubit() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = state_file(dir.path(), "mixed2.json", &DensityMatrixF64::maximally_mixed(2).unwrap());
    let out = gibbsfit(&["entropy", "--state", s(&mixed)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let value: f64 = text.trim().strip_prefix("entropy\t").unwrap().parse().unwrap();
    assert_eq!(value, 2f64.ln());

    let up = state_file(dir.path(), "up.json", &DensityMatrixF64::basis_state(2, 0).unwrap());
    let out = gibbsfit(&["entropy", "--state", s(&mixed), "--reference", s(&up)]);
    assert!(stdout(&out).contains("relative_entropy\tinf"));
    let out = gibbsfit(&["entropy", "--state", s(&up), "--reference", s(&mixed)]);
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    let d: f64 = line.strip_prefix("relative_entropy\t").unwrap().parse().unwrap();
    assert!((d - 2f64.ln()).abs() < 1e-14);
}

#[test]
fn fit_writes_the_tanh_solution() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = state_file(dir.path(), "mixed2.json", &DensityMatrixF64::maximally_mixed(2).unwrap());
    let z = write(dir.path(), "Z.json", r#"{"labels": ["Z"], "observables": [{"pauli": "Z"}]}"#);
    let model_path = dir.path().join("model.json");
    let out = gibbsfit(&["fit", "--observables", s(&z), "--targets", "0.5", "--sigma", s(&mixed), "--out", s(&model_path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model: GibbsModelJson = from_json_str(&fs::read_to_string(&model_path).unwrap()).unwrap();
    assert!((model.kappa[0] + 0.5f64.atanh()).abs() < 1e-12);
    assert!((model.kappa[0] + 0.549306).abs() < 1e-6);
    let rebuilt = model.to_model::<f64>(None).unwrap();
    assert_eq!(to_json_string(&GibbsModelJson::from_model(&rebuilt)).unwrap(), fs::read_to_string(&model_path).unwrap());
    assert!(!dir.path().join(".gibbsfit.lock").exists());

    // stdout when no --out, negative targets, default σ
    let out = gibbsfit(&["fit", "--observables", s(&z), "--targets", "-0.5"]);
    let model: GibbsModelJson = from_json_str(&stdout(&out)).unwrap();
    assert!((model.kappa[0] - 0.5f64.atanh()).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "Z.json", r#"{"labels": ["Z"], "observables": [{"pauli": "Z"}]}"#);
    assert_eq!(code(&gibbsfit(&["fit", "--observables", s(&z), "--targets", "1.0"])), 2);
    assert_eq!(code(&gibbsfit(&["fit", "--observables", s(&z), "--targets", "0.2,0.3"])), 1);
    let broken = write(dir.path(), "broken.json", "{\"labels\": [");
    assert_eq!(code(&gibbsfit(&["fit", "--observables", s(&broken), "--targets", "0.1"])), 1);
    assert_eq!(code(&gibbsfit(&["frobnicate"])), 1);
    assert_eq!(code(&gibbsfit(&["--help"])), 0);
    assert_eq!(code(&gibbsfit(&["entropy", "--state", "/nonexistent/state.json"])), 1);
    let out = gibbsfit(&["demo-bloch", "--seed", "1", "--out", s(&dir.path().join("p.csv"))]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn thread_count_must_be_positive() {
    let out = Command::new(env!("CARGO_BIN_EXE_gibbsfit"))
        .args(["demo-bloch", "--seed", "1", "--xbar", "0.2", "--out", "unused.csv"])
        .env("GIBBSFIT_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&out), 1);
    assert!(!Path::new("unused.csv").exists());
}

#[test]
fn refuses_to_overwrite_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let z = write(dir.path(), "Z.json", r#"{"labels": ["Z"], "observables": [{"pauli": "Z"}]}"#);
    let out = gibbsfit(&["fit", "--observables", s(&z), "--targets", "0.1", "--out", s(&z)]);
    assert_eq!(code(&out), 1);
    assert!(fs::read_to_string(&z).unwrap().contains("pauli"));
}

#[test]
fn held_lock_blocks_a_second_writer() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".gibbsfit.lock"), "").unwrap();
    let csv = dir.path().join("post.csv");
    let out = gibbsfit(&["demo-bloch", "--seed", "1", "--xbar", "0.2", "--out", s(&csv)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
    assert!(!csv.exists());
}

#[test]
fn gen_then_select_recovers_the_family() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "spec.json", &spec_json());
    let pool = write(dir.path(), "pool.json", &pool_json());
    let runs = dir.path().join("runs");
    // recovery is a rate, not a certainty; this seed is one of the successes
    let out = gibbsfit(&["gen", "--spec", s(&spec), "--seed", "7", "--out", s(&runs)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!runs.join(".gibbsfit.lock").exists());

    let manifest: ManifestJson = from_json_str(&fs::read_to_string(runs.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.seed, 7);
    assert_eq!(manifest.samples.len(), 12);
    for name in &manifest.samples {
        let text = fs::read_to_string(runs.join(name)).unwrap();
        let record: SampleRecordJson = from_json_str(&text).unwrap();
        assert_eq!(to_json_string(&record).unwrap(), text);
        assert_eq!(record.n, 10_000);
    }

    let ranking = dir.path().join("ranking");
    let out = gibbsfit(&["select", "--ensemble", s(&runs), "--pool", s(&pool), "--max-size", "2", "--out", s(&ranking)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out).trim(), "{H}");
    let rows: Vec<RankingRowJson> = from_json_str(&fs::read_to_string(ranking.join("ranking.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0].label, "{H}");
    assert!(rows.windows(2).all(|w| w[0].total >= w[1].total));
    let total: f64 = rows.iter().map(|r| r.posterior_weight).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let mut reader = csv::Reader::from_path(ranking.join("ranking.csv")).unwrap();
    let first = reader.records().next().unwrap().unwrap();
    assert_eq!(&first[0], "{H}");
    assert_eq!(first[3].parse::<f64>().unwrap(), rows[0].total);

    let out = gibbsfit(&[
        "score", "--ensemble", s(&runs), "--pool", s(&pool), "--hypothesis", "G3,G4", "--hypothesis", "H",
        "--hypothesis", "",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let scored: Vec<RankingRowJson> = from_json_str(&stdout(&out)).unwrap();
    let labels: Vec<&str> = scored.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels[0], "{H}");
    assert_eq!(labels.len(), 3);
    let h = rows.iter().find(|r| r.label == "{H}").unwrap();
    assert_eq!(scored[0].total, h.total);

    let out = gibbsfit(&["score", "--ensemble", s(&runs), "--pool", s(&pool), "--hypothesis", "Q"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn demo_bloch_writes_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("post.csv");
    let out = gibbsfit(&[
        "demo-bloch", "--seed", "9", "--support", "x-axis", "--xbar", "0.4", "--n", "100", "--resolution", "21",
        "--out", s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 22);
    let weights: f64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
    assert!((weights - 1.0).abs() < 1e-12);

    let out = gibbsfit(&["demo-bloch", "--seed", "9", "--support", "z-axis", "--xbar", "0.4", "--out", s(&csv)]);
    assert_eq!(code(&out), 1);
    let out = gibbsfit(&["demo-bloch", "--seed", "9", "--xbar", "0.4", "--likelihood", "sanov", "--resolution", "11", "--out", s(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}
