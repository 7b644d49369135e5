//! Scenarios bundled with the binary.

/// `(name, JSON source)` of every bundled scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("example-4-1", include_str!("../scenarios/example-4-1.json")),
    (
        "hyperplane-jump",
        include_str!("../scenarios/hyperplane-jump.json"),
    ),
    ("double-jump", include_str!("../scenarios/double-jump.json")),
    (
        "square-polynomial",
        include_str!("../scenarios/square-polynomial.json"),
    ),
    ("half-disc", include_str!("../scenarios/half-disc.json")),
    (
        "staircase-coarea",
        include_str!("../scenarios/staircase-coarea.json"),
    ),
    ("cantor-part", include_str!("../scenarios/cantor-part.json")),
    ("cantor-dim", include_str!("../scenarios/cantor-dim.json")),
    (
        "cantor-field",
        include_str!("../scenarios/cantor-field.json"),
    ),
];

pub fn source(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}
