//! Built-in experiments. The JSON sources live in `presets/` next to the
//! crate manifest and are embedded at build time.

pub const PRESETS: &[(&str, &str)] = &[
    ("paper-fig2", include_str!("../presets/paper-fig2.json")),
    ("paper-fig3", include_str!("../presets/paper-fig3.json")),
    ("paper-fig4", include_str!("../presets/paper-fig4.json")),
];

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}
