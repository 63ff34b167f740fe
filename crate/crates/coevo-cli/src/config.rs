//! Flat key=value run configuration shared by all subcommands. Every key maps
//! onto one library config field, unknown keys are hard errors, and values are
//! validated by the library before any work starts.

use coevo_core::aggregation::{AggregationKind, AggregationStrategy};
use coevo_core::evalkit::FilterConfig;
use coevo_core::model::SigmaMode;
use coevo_core::render::Background;
use coevo_core::rewards::CovNormalization;
use coevo_core::simenv::CoEvolutionConfig;
use coevo_core::StdMode;

use crate::CliError;

/// Union of the library configs plus the CLI-only knobs, with library
/// defaults. Loaded from a config file, then patched by `--set KEY=VALUE`
/// overrides and the global `--seed` flag.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub coevo: CoEvolutionConfig,
    pub eval_k: usize,
    pub filter: FilterConfig,
    pub aggregation: AggregationStrategy,
    pub marker_radius_px: u32,
    pub background: Background,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            coevo: CoEvolutionConfig::default(),
            eval_k: 5,
            filter: FilterConfig::default(),
            aggregation: AggregationStrategy::new(AggregationKind::Mean),
            marker_radius_px: 8,
            background: Background::ElementWireframe,
        }
    }
}

impl RunConfig {
    /// Parses a config file: one `key = value` per line, `#` comments,
    /// blank lines ignored. Errors carry the 1-based line number.
    pub fn from_file(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {}: expected key=value, got {raw:?}", idx + 1))
            })?;
            cfg.apply(key.trim(), value.trim())
                .map_err(|msg| CliError::usage(format!("config line {}: {msg}", idx + 1)))?;
        }
        Ok(cfg)
    }

    /// Applies one override; key names mirror the library config fields.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| format!("bad value {value:?} for {key}: {e}"))
        }

        match key {
            "steps" => self.coevo.steps = num(key, value)?,
            "tasks_per_step" => self.coevo.tasks_per_step = num(key, value)?,
            "group_size" => self.coevo.group_size = num(key, value)?,
            "learning_rate" => self.coevo.learning_rate = num(key, value)?,
            "alpha" => self.coevo.alpha = num(key, value)?,
            "master_seed" => self.coevo.master_seed = num(key, value)?,
            "eval_tasks" => self.coevo.eval_tasks = num(key, value)?,
            "proposer_target_logit" => self.coevo.proposer_init.target_logit = num(key, value)?,
            "proposer_log_spread" => self.coevo.proposer_init.log_spread = num(key, value)?,
            "proposer_k" => self.coevo.proposer_init.k = num(key, value)?,
            "critic_sharpness" => self.coevo.critic_init.sharpness = num(key, value)?,
            "critic_blindness" => self.coevo.critic_init.blindness = num(key, value)?,
            "screen_grid_cols" => self.coevo.screen.grid_cols = num(key, value)?,
            "screen_grid_rows" => self.coevo.screen.grid_rows = num(key, value)?,
            "screen_element_fill" => self.coevo.screen.element_fill = num(key, value)?,
            "screen_size_jitter" => self.coevo.screen.element_size_jitter = num(key, value)?,
            "screen_width_px" => self.coevo.screen.width_px = num(key, value)?,
            "screen_height_px" => self.coevo.screen.height_px = num(key, value)?,
            "sigma_mode" => {
                self.coevo.scoring.sigma_mode = match value {
                    "half_target_width" => SigmaMode::HalfTargetWidth,
                    "fixed" => SigmaMode::Fixed,
                    other => {
                        return Err(format!(
                            "bad value {other:?} for sigma_mode (expected half_target_width or fixed)"
                        ))
                    }
                }
            }
            "sigma_fixed" => self.coevo.scoring.sigma_fixed = num(key, value)?,
            "hit_constant" => self.coevo.scoring.hit_constant = num(key, value)?,
            "boundary_inclusive" => self.coevo.scoring.boundary_inclusive = num(key, value)?,
            "coverage_epsilon" => self.coevo.coverage.epsilon = num(key, value)?,
            "coverage_normalization" => {
                self.coevo.coverage.normalization = match value {
                    "population" => CovNormalization::Population,
                    "sample" => CovNormalization::Sample,
                    other => {
                        return Err(format!(
                            "bad value {other:?} for coverage_normalization (expected population or sample)"
                        ))
                    }
                }
            }
            "clip_epsilon" => self.coevo.grpo.clip_epsilon = num(key, value)?,
            "kl_beta" => self.coevo.grpo.kl_beta = num(key, value)?,
            "adv_epsilon" => self.coevo.grpo.adv_epsilon = num(key, value)?,
            "std_mode" => {
                self.coevo.grpo.std_mode = match value {
                    "population" => StdMode::Population,
                    "sample" => StdMode::Sample,
                    other => {
                        return Err(format!(
                            "bad value {other:?} for std_mode (expected population or sample)"
                        ))
                    }
                }
            }
            "eval_k" => self.eval_k = num(key, value)?,
            "filter_min_area" => self.filter.min_area_ratio = num(key, value)?,
            "filter_max_area" => self.filter.max_area_ratio = num(key, value)?,
            "filter_preselect_rollouts" => self.filter.preselect_rollouts = num(key, value)?,
            "strategy" => self.aggregation.kind = AggregationKind::parse(value).map_err(|e| e.to_string())?,
            "weiszfeld_tol" => self.aggregation.weiszfeld_tol = num(key, value)?,
            "weiszfeld_max_iters" => self.aggregation.weiszfeld_max_iters = num(key, value)?,
            "marker_radius" => self.marker_radius_px = num(key, value)?,
            "background" => {
                self.background = match value {
                    "blank" => Background::BlankWhite,
                    "wireframe" => Background::ElementWireframe,
                    other => {
                        return Err(format!(
                            "bad value {other:?} for background (expected blank or wireframe)"
                        ))
                    }
                }
            }
            other => return Err(format!("unknown config key {other:?}")),
        }
        Ok(())
    }

    /// Runs every library validator so bad values fail before any work.
    pub fn validated(self) -> Result<Self, CliError> {
        self.coevo.clone().validated().map_err(CliError::usage_from)?;
        self.filter.clone().validated().map_err(CliError::usage_from)?;
        if self.eval_k == 0 {
            return Err(CliError::usage("eval_k must be positive"));
        }
        Ok(self)
    }
}
