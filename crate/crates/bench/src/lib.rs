//! Fixtures shared by the benchmarks.

use semistab_core::scenario::{builtin_corpus, Prepared, Scenario};

/// A built-in scenario by name, with its horizon cut to `t_end`.
pub fn scenario(name: &str, t_end: f64) -> Scenario {
    let mut sc = builtin_corpus()
        .into_iter()
        .find(|s| s.name == name)
        .unwrap_or_else(|| panic!("no built-in scenario named {name}"));
    sc.integration.t_end = t_end;
    sc
}

pub fn prepared(name: &str, t_end: f64) -> Prepared {
    scenario(name, t_end).prepare().expect("built-in scenarios prepare")
}
