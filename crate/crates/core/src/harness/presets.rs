//! Configurations shipped with the crate.

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

pub const PRESETS: [(&str, &str); 7] = [
    ("dgww_cpgae", include_str!("../../presets/dgww_cpgae.toml")),
    ("costlqr_cpgae", include_str!("../../presets/costlqr_cpgae.toml")),
    ("costlqr_cpgpe", include_str!("../../presets/costlqr_cpgpe.toml")),
    ("costlqr_sensitivity", include_str!("../../presets/costlqr_sensitivity.toml")),
    ("robotworld_cpgae", include_str!("../../presets/robotworld_cpgae.toml")),
    ("robotworld_cpgpe", include_str!("../../presets/robotworld_cpgpe.toml")),
    ("deployment_sigma_sweep", include_str!("../../presets/deployment_sigma_sweep.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Parses and validates a shipped preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset `{name}`")))?;
    ExperimentConfig::from_toml_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::EnvironmentConfig;
    use crate::estimators::ExplorationMode;
    use crate::optimizer::PolicyFamily;
    use crate::schedule::ScheduleKind;

    #[test]
    fn every_preset_round_trips() {
        for name in preset_names() {
            let cfg = preset(name).unwrap();
            assert_eq!(cfg.name, name);
            assert_eq!(cfg.run.num_seeds, 5);
            let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
            assert_eq!(again, cfg, "{name}");
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn dgww_preset_matches_table() {
        let cfg = preset("dgww_cpgae").unwrap();
        let EnvironmentConfig::Dgww(env) = &cfg.environment else { panic!("kind") };
        assert_eq!((env.horizon, env.thresholds.clone()), (100, vec![0.2]));
        let a = &cfg.algorithm;
        assert_eq!(a.policy, PolicyFamily::TabularSoftmax);
        assert_eq!(a.mode, ExplorationMode::ActionBased);
        assert_eq!((a.iterations, a.batch_size), (3000, 10));
        assert_eq!((a.primal_rate, a.dual_rate, a.omega), (0.01, 0.1, 1e-4));
        assert_eq!(a.schedule, ScheduleKind::Constant);
    }

    #[test]
    fn sweep_presets_expand() {
        assert_eq!(preset("costlqr_sensitivity").unwrap().cells().unwrap().len(), 6);
        assert_eq!(preset("deployment_sigma_sweep").unwrap().cells().unwrap().len(), 10);
    }
}
