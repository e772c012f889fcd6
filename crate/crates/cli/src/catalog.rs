//! Configs bundled into the binary, one per reproduced figure.

use crate::config::{ConfigError, ExperimentConfig};

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../configs/", $name, ".toml")))),*]
    };
}

/// `(name, toml source)` pairs.
pub const BUNDLED: &[(&str, &str)] = bundled!(
    "regularization_sweep",
    "coulomb_n3_cosine",
    "coulomb_n4_cosine",
    "coulomb_n5_cosine",
    "log_n3_cosine",
    "harmonic_2marginal",
    "harmonic_penalized",
    "harmonic_diffuse",
    "det_radial_uniform",
    "det_radial_exponential",
    "det_radial_mixed",
    "carlier",
);

pub fn bundled(name: &str) -> Option<Result<ExperimentConfig, ConfigError>> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, text)| ExperimentConfig::from_toml_str(text))
}

pub fn all() -> Result<Vec<ExperimentConfig>, ConfigError> {
    BUNDLED.iter().map(|(_, text)| ExperimentConfig::from_toml_str(text)).collect()
}

/// One line per bundled config: name and the figure it reproduces.
pub fn listing() -> Result<String, ConfigError> {
    let configs = all()?;
    let width = configs.iter().map(|c| c.name.len()).max().unwrap_or(0);
    Ok(configs.iter().map(|c| format!("{:width$}  {}\n", c.name, c.figure)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::OutputSpec;

    #[test]
    fn every_bundled_config_validates_and_names_its_figure() {
        let configs = all().unwrap();
        assert!(configs.len() >= 10);
        for (c, (name, _)) in configs.iter().zip(BUNDLED) {
            assert_eq!(&c.name, name);
            assert!(!c.figure.is_empty(), "{name}");
            assert!(c.outputs.contains(&OutputSpec::Report), "{name}");
        }
        assert_eq!(listing().unwrap().lines().count(), configs.len());
    }

    #[test]
    fn penalized_entry_parameters() {
        let c = bundled("harmonic_penalized").unwrap().unwrap();
        assert_eq!(c.cost.tau, Some(0.1));
        assert_eq!(c.solver.epsilon, 0.0005);
        assert!(c.warning.is_some());
        assert!(bundled("nope").is_none());
    }

    #[test]
    fn coarse_grids_for_many_marginals() {
        let n4 = bundled("coulomb_n4_cosine").unwrap().unwrap();
        let n5 = bundled("coulomb_n5_cosine").unwrap().unwrap();
        assert_eq!((n4.marginals[0].m, n5.marginals[0].m), (60, 30));
        assert!(n4.warning.is_some() && n5.warning.is_some());
    }
}
