//! Writes every built-in scenario to `<dir>/<name>.scn`.
//!
//!     cargo run -p semistab-core --example export_corpus -- corpus

use std::path::PathBuf;

use semistab_core::scenario::builtin_corpus;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "corpus".into()));
    std::fs::create_dir_all(&dir)?;
    for sc in builtin_corpus() {
        let path = dir.join(format!("{}.scn", sc.name));
        std::fs::write(&path, sc.to_json())?;
        println!("{}", path.display());
    }
    Ok(())
}
