//! Experiment configurations shipped with the binary.

pub const NAMES: [&str; 5] = ["fig3", "fig4", "fig5", "fig6", "fig7"];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig3" => include_str!("../presets/fig3.json"),
        "fig4" => include_str!("../presets/fig4.json"),
        "fig5" => include_str!("../presets/fig5.json"),
        "fig6" => include_str!("../presets/fig6.json"),
        "fig7" => include_str!("../presets/fig7.json"),
        _ => return None,
    })
}
