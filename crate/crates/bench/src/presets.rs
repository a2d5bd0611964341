//! Shipped example configs, also available as files under `configs/`.

use crate::config::{parse_config, ConfigError, ExperimentConfig};

macro_rules! presets {
    ($($name:literal),+ $(,)?) => {
        &[$(($name, include_str!(concat!("../configs/", $name, ".conf")))),+]
    };
}

/// Short runs sized for a laptop CPU.
pub const DESK: &[(&str, &str)] = presets!(
    "burgers_desk",
    "heat_dirichlet_desk",
    "heat_mixed_desk",
    "transport_desk",
);

/// Paper-length runs, for manual reproduction.
pub const FULL: &[(&str, &str)] = presets!(
    "burgers_full",
    "heat_dirichlet_euler_full",
    "heat_dirichlet_heun_full",
    "heat_dirichlet_rk4_full",
    "heat_mixed_euler_full",
    "heat_mixed_heun_full",
    "heat_mixed_rk4_full",
    "heat_neumann_euler_full",
    "heat_neumann_heun_full",
    "heat_neumann_nonzero_euler_full",
    "heat_neumann_nonzero_heun_full",
    "heat_neumann_nonzero_rk4_full",
    "heat_neumann_rk4_full",
    "heat_robin_euler_full",
    "heat_robin_heun_full",
    "heat_robin_rk4_full",
    "transport_full",
);

pub fn preset_text(name: &str) -> Option<&'static str> {
    DESK.iter().chain(FULL).find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Parses a named preset.
pub fn preset(name: &str) -> Option<Result<ExperimentConfig, ConfigError>> {
    preset_text(name).map(parse_config)
}
