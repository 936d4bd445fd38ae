use std::path::Path;

use semistab_core::scenario::{builtin_corpus, Scenario};

#[test]
fn shipped_corpus_matches_builtins() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let builtins = builtin_corpus();
    let mut shipped: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "scn"))
        .collect();
    shipped.sort();
    assert_eq!(shipped.len(), builtins.len());
    for sc in &builtins {
        let path = dir.join(format!("{}.scn", sc.name));
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, sc.to_json(), "{} is stale", path.display());
        assert_eq!(&Scenario::from_path(&path).unwrap(), sc);
    }
}
