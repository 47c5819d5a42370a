//! Flat dotted-key config files: one `section.key = value` per line,
//! `#` comments, every key defaulted so an empty file runs the default
//! T1.1 experiment. Unknown keys and unparsable values are diagnosed by
//! key name.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Result};
use morreylab_core::{LabConfig, ReportFormat};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lab: LabConfig,
    /// Experiments the bare `check` subcommand runs when no --experiment
    /// flag is given.
    pub experiments: Vec<String>,
    pub output_path: Option<PathBuf>,
    pub output_format: ReportFormat,
    pub search_budget: usize,
    pub search_seed: u64,
    pub converge_axis: String,
    pub converge_values: Vec<usize>,
    /// Exponents for `weights-report`: A_p exponent, reverse Hölder r,
    /// tail exponent q, and the subset-sampling seed.
    pub weights_p: f64,
    pub weights_r: f64,
    pub weights_q: f64,
    pub weights_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lab: LabConfig::default(),
            experiments: vec!["T1.1".to_string()],
            output_path: None,
            output_format: ReportFormat::Json,
            search_budget: 60,
            search_seed: 1,
            converge_axis: "grid_n".to_string(),
            converge_values: Vec::new(),
            weights_p: 1.0,
            weights_r: 2.0,
            weights_q: 2.0,
            weights_seed: 11,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid config value for {key}: {e}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("line {}: expected key = value, got {raw:?}", line_no + 1)
            })?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value)?;
        }
        cfg.lab.validate().map_err(|e| anyhow!("{e}"))?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "grid.dim" => self.lab.grid_dim = parse_value(key, value)?,
            "grid.half_width" => self.lab.grid_half_width = parse_value(key, value)?,
            "grid.points" => self.lab.grid_points = parse_value(key, value)?,
            "bank.alpha" => self.lab.bank_alpha = parse_value(key, value)?,
            "bank.size" => self.lab.bank_size = parse_value(key, value)?,
            "bank.seed" => self.lab.bank_seed = parse_value(key, value)?,
            "cone.t_min" => self.lab.cone_t_min = parse_value(key, value)?,
            "cone.t_max" => self.lab.cone_t_max = parse_value(key, value)?,
            "cone.scales_per_octave" => self.lab.cone_scales_per_octave = parse_value(key, value)?,
            "cone.apertures" => self.lab.cone_apertures = parse_list(key, value)?,
            "morrey.p" => self.lab.morrey_p = parse_value(key, value)?,
            "morrey.kappa" => self.lab.morrey_kappa = parse_value(key, value)?,
            "gstar.lambda" => self.lab.gstar_lambda = parse_value(key, value)?,
            "gstar.shells" => self.lab.gstar_shells = parse_value(key, value)?,
            "family.stride" => self.lab.family_stride = parse_value(key, value)?,
            "family.k_min" => self.lab.family_k_min = parse_value(key, value)?,
            "family.k_max" => self.lab.family_k_max = parse_value(key, value)?,
            "corpus.seed" => self.lab.corpus_seed = parse_value(key, value)?,
            "experiments" => {
                self.experiments = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
            }
            "output.path" => self.output_path = Some(PathBuf::from(value)),
            "output.format" => {
                self.output_format = value.parse().map_err(|e| anyhow!("{e}"))?;
            }
            "search.budget" => self.search_budget = parse_value(key, value)?,
            "search.seed" => self.search_seed = parse_value(key, value)?,
            "converge.axis" => self.converge_axis = value.to_string(),
            "converge.values" => self.converge_values = parse_list(key, value)?,
            "weights.p" => self.weights_p = parse_value(key, value)?,
            "weights.r" => self.weights_r = parse_value(key, value)?,
            "weights.q" => self.weights_q = parse_value(key, value)?,
            "weights.seed" => self.weights_seed = parse_value(key, value)?,
            other => return Err(anyhow!("unknown config key {other:?}")),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = RunConfig::from_str("").unwrap();
        assert_eq!(cfg.experiments, vec!["T1.1".to_string()]);
        assert_eq!(cfg.lab, LabConfig::default());
    }

    #[test]
    fn dotted_keys_and_comments_parse() {
        let cfg = RunConfig::from_str(
            "# comment\nbank.alpha = 0.5\ngrid.points = 128 # trailing\nexperiments = T1.1, CZ\n",
        )
        .unwrap();
        assert_eq!(cfg.lab.bank_alpha, 0.5);
        assert_eq!(cfg.lab.grid_points, 128);
        assert_eq!(cfg.experiments, vec!["T1.1".to_string(), "CZ".to_string()]);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_str("bank.alhpa = 1.0").unwrap_err();
        assert!(err.to_string().contains("bank.alhpa"));
    }

    #[test]
    fn invariant_violations_name_the_key() {
        let err = RunConfig::from_str("bank.alpha = 1.5").unwrap_err();
        assert!(err.to_string().contains("bank.alpha"), "{err}");
        let err = RunConfig::from_str("morrey.kappa = 1.0").unwrap_err();
        assert!(err.to_string().contains("morrey.kappa"), "{err}");
        let err = RunConfig::from_str("grid.points = 100").unwrap_err();
        assert!(err.to_string().contains("grid.points"), "{err}");
    }
}
