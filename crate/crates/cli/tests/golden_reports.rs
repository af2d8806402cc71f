mod common;

use common::{crate_dir, payload, FIXTURE_COMMANDS};

/// Committed payloads under `tests/golden`; set `UPDATE_GOLDEN=1` to rewrite
/// them after an intended change.
#[test]
fn fixture_reports_match_golden_files() {
    let dir = crate_dir().join("tests/golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatched = Vec::new();
    for (name, args) in FIXTURE_COMMANDS {
        let (_, ours) = payload(args);
        let path = dir.join(format!("{name}.json"));
        if update {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &ours).unwrap();
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_default();
        if golden != ours {
            mismatched.push(*name);
        }
    }
    assert!(mismatched.is_empty(), "reports differ from tests/golden: {mismatched:?}");
}
