//! Immersion files shipped with the crate.

/// `(name, file contents)` for every bundled immersion.
pub const BUNDLED: [(&str, &str); 7] = [
    ("plane", include_str!("../../../corpus/plane.imm")),
    ("plane-torus", include_str!("../../../corpus/plane-torus.imm")),
    ("graph", include_str!("../../../corpus/graph.imm")),
    ("sphere", include_str!("../../../corpus/sphere.imm")),
    ("clifford", include_str!("../../../corpus/clifford.imm")),
    ("clifford-rotated", include_str!("../../../corpus/clifford-rotated.imm")),
    ("torus-revolution", include_str!("../../../corpus/torus-revolution.imm")),
];

pub fn source(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

/// Parses a bundled immersion. Panics on an unknown name; the bundled files
/// are validated by the test suite.
pub fn load(name: &str) -> crate::expr::ImmersionSpec {
    let text = source(name).unwrap_or_else(|| panic!("no bundled immersion named {name}"));
    crate::expr::parse_immersion_file(text).expect("bundled immersion parses")
}
