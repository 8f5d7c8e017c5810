//! Bundled triangulations, overridable through `CUSPFORGE_FIXTURES`.

use std::path::{Path, PathBuf};

use crate::manifold::{parse_triangulation, IdealTriangulation, ManifoldError};

pub const ENV_VAR: &str = "CUSPFORGE_FIXTURES";

const BUNDLED: [(&str, &str); 3] = [
    ("whitehead", include_str!("../fixtures/whitehead.json")),
    ("622", include_str!("../fixtures/622.json")),
    ("berge", include_str!("../fixtures/berge.json")),
];

pub fn names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// The fixture directory in effect, if the environment overrides it.
pub fn override_dir() -> Option<PathBuf> {
    std::env::var_os(ENV_VAR).map(PathBuf::from)
}

/// Source text of a named fixture, from the override directory when set.
pub fn source(name: &str) -> Option<String> {
    let stem = name.trim_end_matches(".json");
    if let Some(dir) = override_dir() {
        return std::fs::read_to_string(dir.join(format!("{stem}.json"))).ok();
    }
    BUNDLED.iter().find(|(n, _)| *n == stem).map(|(_, t)| t.to_string())
}

/// Resolve a CLI argument: an existing path, else a fixture name.
pub fn resolve(arg: &str) -> Option<(String, String)> {
    let p = Path::new(arg);
    if p.is_file() {
        return std::fs::read_to_string(p).ok().map(|t| (arg.to_string(), t));
    }
    source(arg).map(|t| (arg.trim_end_matches(".json").to_string(), t))
}

pub fn load(name: &str) -> Result<IdealTriangulation, ManifoldError> {
    let text = source(name).unwrap_or_default();
    parse_triangulation(&text)
}

fn bundled(name: &str) -> IdealTriangulation {
    let text = BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).expect("bundled fixture");
    parse_triangulation(text).expect("bundled fixture is valid")
}

pub fn whitehead() -> IdealTriangulation {
    bundled("whitehead")
}

pub fn six_two_two() -> IdealTriangulation {
    bundled("622")
}

pub fn berge() -> IdealTriangulation {
    bundled("berge")
}

pub fn all() -> Vec<IdealTriangulation> {
    vec![whitehead(), six_two_two(), berge()]
}
