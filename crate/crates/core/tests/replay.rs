use std::fs;

use serde_json::Value;

use qcrypt::replay::{
    bundled_bb84_fixture, bundled_cointoss_fixture, replay_bb84, replay_cointoss, replay_paper_tables_from, ReplayError,
    BB84_FIXTURE, COINTOSS_FIXTURE,
};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn copy_fixtures() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in [BB84_FIXTURE, COINTOSS_FIXTURE] {
        fs::copy(format!("{FIXTURES}/{name}"), dir.path().join(name)).unwrap();
    }
    dir
}

fn edit(dir: &tempfile::TempDir, name: &str, f: impl FnOnce(&mut Value)) {
    let path = dir.path().join(name);
    let mut v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    f(&mut v);
    fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn fixture_files_replay_cleanly() {
    let reports = replay_paper_tables_from(copy_fixtures().path()).unwrap();
    assert_eq!(reports.len(), 2);
    assert!(reports.iter().all(|r| r.passed()), "{reports:?}");
    assert!(reports.iter().all(|r| r.cells_checked > 0));
}

#[test]
fn bundled_fixtures_match_files_on_disk() {
    let disk: Value = serde_json::from_str(&fs::read_to_string(format!("{FIXTURES}/{BB84_FIXTURE}")).unwrap()).unwrap();
    assert_eq!(serde_json::to_value(bundled_bb84_fixture()).unwrap()["script"], disk["script"]);
    assert!(replay_bb84(&bundled_bb84_fixture()).unwrap().passed());
    assert!(replay_cointoss(&bundled_cointoss_fixture()).unwrap().passed());
}

#[test]
fn corrupted_expected_cell_is_reported() {
    let dir = copy_fixtures();
    edit(&dir, BB84_FIXTURE, |v| {
        let cell = &mut v["expected"]["alice_bits"][4];
        let flipped = if cell == "1" { "0" } else { "1" };
        *cell = Value::from(flipped);
    });
    let reports = replay_paper_tables_from(dir.path()).unwrap();
    assert!(!reports[0].passed());
    assert!(reports[1].passed());
    let diff = &reports[0].diffs[0];
    assert_eq!((diff.row.as_str(), diff.column), ("alice_bits", 5));
}

#[test]
fn corrupted_script_changes_the_outcome() {
    let dir = copy_fixtures();
    edit(&dir, COINTOSS_FIXTURE, |v| v["script"]["bob_guess"] = Value::from("R"));
    let reports = replay_paper_tables_from(dir.path()).unwrap();
    assert!(!reports[1].passed());
    assert!(reports[1].diffs.iter().any(|d| d.row == "winner"));
}

#[test]
fn script_of_the_wrong_length_is_invalid() {
    for bits in ["1", "11101101"] {
        let dir = copy_fixtures();
        edit(&dir, BB84_FIXTURE, |v| v["script"]["bob_random_bits"] = Value::from(bits));
        assert!(matches!(replay_paper_tables_from(dir.path()), Err(ReplayError::Invalid { .. })));
    }
}

#[test]
fn extra_compare_draw_is_a_script_fault() {
    let dir = copy_fixtures();
    edit(&dir, BB84_FIXTURE, |v| v["script"]["compare_draws"].as_array_mut().unwrap().push(Value::from(0)));
    let reports = replay_paper_tables_from(dir.path()).unwrap();
    assert!(reports[0].script_fault.is_some());
    assert!(!reports[0].passed());
}

#[test]
fn missing_fixture_is_named() {
    let dir = copy_fixtures();
    fs::remove_file(dir.path().join(COINTOSS_FIXTURE)).unwrap();
    match replay_paper_tables_from(dir.path()) {
        Err(ReplayError::Missing(path)) => assert!(path.ends_with(COINTOSS_FIXTURE)),
        other => panic!("expected a missing-fixture error, got {other:?}"),
    }
}

#[test]
fn malformed_fixture_is_invalid() {
    let dir = copy_fixtures();
    fs::write(dir.path().join(BB84_FIXTURE), "{ not json").unwrap();
    assert!(matches!(replay_paper_tables_from(dir.path()), Err(ReplayError::Invalid { .. })));
}
