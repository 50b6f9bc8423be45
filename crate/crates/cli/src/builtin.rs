//! Built-in scenarios shipped in `configs/`.

use crate::config::{ConfigError, ScenarioConfig, WeightConfig};

pub const EXAMPLE1: &str = include_str!("../configs/example1.toml");
pub const EXAMPLE2: &str = include_str!("../configs/example2.toml");
pub const EXAMPLE3: &str = include_str!("../configs/example3.toml");

pub const DEFAULT_ALPHA: f64 = 2.0;
pub const DEFAULT_BETA: f64 = 3.0;

/// Example 1 with weight `α` on `[1, ∞)` and `β` on `(-∞, -1]`, `1 < α < β`.
pub fn example1(alpha: f64, beta: f64) -> Result<ScenarioConfig, ConfigError> {
    if !(alpha.is_finite() && alpha > 1.0) {
        return Err(ConfigError::new(
            "alpha",
            format!("need alpha > 1, got {alpha}"),
        ));
    }
    if !(beta.is_finite() && beta > alpha) {
        return Err(ConfigError::new(
            "beta",
            format!("need beta > alpha = {alpha}, got {beta}"),
        ));
    }
    let mut cfg = ScenarioConfig::from_toml(EXAMPLE1)?;
    let WeightConfig::Piecewise { segments, .. } = &mut cfg.weight else {
        unreachable!("example1.toml declares a piecewise weight");
    };
    segments[0].intercept = beta;
    segments[2].intercept = alpha;
    Ok(cfg)
}

/// Load built-in example `id` (1, 2 or 3).
pub fn example(
    id: u8,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<ScenarioConfig, ConfigError> {
    if id != 1 && (alpha.is_some() || beta.is_some()) {
        return Err(ConfigError::new(
            "alpha",
            "only example 1 takes --alpha/--beta",
        ));
    }
    match id {
        1 => example1(alpha.unwrap_or(DEFAULT_ALPHA), beta.unwrap_or(DEFAULT_BETA)),
        2 => ScenarioConfig::from_toml(EXAMPLE2),
        3 => ScenarioConfig::from_toml(EXAMPLE3),
        _ => Err(ConfigError::new(
            "id",
            format!("unknown example {id}; expected 1, 2 or 3"),
        )),
    }
}
