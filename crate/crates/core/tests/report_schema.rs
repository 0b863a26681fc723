use finsler_rigidity::distribution::GeneratorBudget;
use finsler_rigidity::run::{run, OrbitConfig, ReportFile, RunConfig, REPORT_SCHEMA, SCHEMA_VERSION};
use finsler_rigidity::sampling::SamplePlan;
use finsler_rigidity::zoo::MetricSpec;

fn quick(metric: &str, seed: u64) -> RunConfig {
    RunConfig {
        metric: MetricSpec::parse(metric).unwrap(),
        sample_plan: SamplePlan {
            grid: vec![2],
            random_points: 3,
            ..Default::default()
        },
        budget: GeneratorBudget {
            word_count: 4,
            ..Default::default()
        },
        orbit: OrbitConfig {
            count: 64,
            ..Default::default()
        },
        seed,
        ..Default::default()
    }
}

fn validator() -> jsonschema::Validator {
    let schema: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

#[test]
fn reports_validate_and_roundtrip() {
    let v = validator();
    for metric in ["euclidean", "sphere", "funk", "product:sphere,line"] {
        let report = run(&quick(metric, 3)).unwrap().report;
        assert_eq!(report.schema_version, SCHEMA_VERSION);
        let text = report.to_json();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let errors: Vec<String> = v.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{metric}: {errors:?}");
        let back = ReportFile::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.to_json(), text);
    }
}

#[test]
fn schema_rejects_malformed_reports() {
    let v = validator();
    let report = run(&quick("euclidean", 1)).unwrap().report;
    let mut value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    value["certificates"][0]["verdict"] = "MAYBE".into();
    assert!(!v.is_valid(&value));
    let mut value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    value.as_object_mut().unwrap().remove("overall");
    assert!(!v.is_valid(&value));
}

#[test]
fn same_seed_same_payload_different_seed_different_samples() {
    let mut a = run(&quick("sphere", 4)).unwrap().report;
    let mut b = run(&quick("sphere", 4)).unwrap().report;
    a.wall_time = 0.0;
    b.wall_time = 0.0;
    assert_eq!(a.to_json(), b.to_json());
    let c = run(&quick("sphere", 5)).unwrap().report;
    assert_ne!(a.certificates, c.certificates);
}
