use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

use citepot::engine::{MissingValuePolicy, WindowPolicy};
use citepot::ingest::ValidationMode;
use citepot::model::{IndicatorName, YearWindow};

use crate::args::{OutputFormat, SharedArgs};
use crate::exit::UsageError;

/// Environment variable overriding the output directory (flags still win).
pub const OUT_ENV: &str = "CITEPOT_OUT";
pub const DEFAULT_OUT: &str = "citepot-out";
pub const DEFAULT_DATASET: &str = "citepot";

/// Contents of a `--config` TOML file. Relative paths are resolved against
/// the file's directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub events: Option<PathBuf>,
    pub impacts: Option<PathBuf>,
    pub scalars: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub window: Option<String>,
    pub families: Option<Vec<String>>,
    pub missing: Option<String>,
    pub window_policy: Option<String>,
    pub fail_fast: Option<bool>,
    pub jobs: Option<usize>,
    pub dataset: Option<String>,
    pub strict_validation: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.events,
            &mut cfg.impacts,
            &mut cfg.scalars,
            &mut cfg.profiles,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub window: YearWindow,
    /// Never empty.
    pub families: Vec<IndicatorName>,
    /// Whether families came from a flag or the config file rather than the default.
    pub families_explicit: bool,
    pub missing: MissingValuePolicy,
    pub window_policy: WindowPolicy,
    pub events: Option<PathBuf>,
    pub impacts: Option<PathBuf>,
    pub scalars: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub fail_fast: bool,
    pub jobs: Option<usize>,
    pub dataset: String,
    pub validation: ValidationMode,
}

fn usage(e: impl std::fmt::Display) -> UsageError {
    UsageError(e.to_string())
}

impl RunConfig {
    /// Precedence: flags, then `env_out` (output directory only), then the
    /// config file, then defaults.
    pub fn resolve(args: &SharedArgs, env_out: Option<PathBuf>) -> anyhow::Result<Self> {
        let file = match &args.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let window = match args.window.as_ref().or(file.window.as_ref()) {
            Some(s) => s.parse().map_err(usage)?,
            None => YearWindow::default(),
        };
        let (names, families_explicit) = if !args.families.is_empty() {
            (args.families.clone(), true)
        } else if let Some(f) = file.families.clone() {
            (f, true)
        } else {
            (vec!["SJR".to_string(), "SNIP".to_string()], false)
        };
        if names.is_empty() {
            return Err(usage("at least one indicator family is required").into());
        }
        let mut families = Vec::with_capacity(names.len());
        for n in names {
            let f = IndicatorName::new(n).map_err(usage)?;
            if !families.contains(&f) {
                families.push(f);
            }
        }
        let missing = match args.missing.as_ref().or(file.missing.as_ref()) {
            Some(s) => s.parse().map_err(usage)?,
            None => MissingValuePolicy::default(),
        };
        let window_policy = match args.window_policy.as_ref().or(file.window_policy.as_ref()) {
            Some(s) => s.parse().map_err(usage)?,
            None => WindowPolicy::default(),
        };
        let jobs = args.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(usage("--jobs must be at least 1").into());
        }
        let pick = |flag: &Option<PathBuf>, cfg: &Option<PathBuf>| flag.clone().or_else(|| cfg.clone());
        let cfg = Self {
            window,
            families,
            families_explicit,
            missing,
            window_policy,
            events: pick(&args.events, &file.events),
            impacts: pick(&args.impacts, &file.impacts),
            scalars: pick(&args.scalars, &file.scalars),
            profiles: pick(&args.profiles, &file.profiles),
            out: args
                .out
                .clone()
                .or(env_out)
                .or(file.out)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            format: args.format.or(file.format).unwrap_or(OutputFormat::Csv),
            fail_fast: args.fail_fast || file.fail_fast.unwrap_or(false),
            jobs,
            dataset: args
                .dataset
                .clone()
                .or(file.dataset)
                .unwrap_or_else(|| DEFAULT_DATASET.to_string()),
            validation: if args.strict_validation || file.strict_validation.unwrap_or(false) {
                ValidationMode::Fail
            } else {
                ValidationMode::Warn
            },
        };
        cfg.check_inputs_exist()?;
        Ok(cfg)
    }

    fn check_inputs_exist(&self) -> anyhow::Result<()> {
        for p in [&self.events, &self.impacts, &self.scalars, &self.profiles]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(crate::exit::MissingInput(p.clone()).into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("citepot.toml");
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn defaults() {
        let c = RunConfig::resolve(&SharedArgs::default(), None).unwrap();
        assert_eq!(c.window, YearWindow::new(2009, 2013).unwrap());
        assert_eq!(c.families, vec![IndicatorName::sjr(), IndicatorName::snip()]);
        assert_eq!(c.missing, MissingValuePolicy::DropAndRenormalize);
        assert_eq!(c.window_policy, WindowPolicy::StrictWindow);
        assert_eq!(c.out, PathBuf::from(DEFAULT_OUT));
        assert_eq!(c.format, OutputFormat::Csv);
        assert!(!c.families_explicit);
    }

    #[test]
    fn precedence_flag_env_file_default() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            "out = \"from-file\"\nwindow = \"2001:2005\"\nmissing = \"nearest:2\"\nfamilies = [\"SNIP\"]\n",
        );
        let mut args = SharedArgs {
            config: Some(cfg),
            ..Default::default()
        };
        let c = RunConfig::resolve(&args, None).unwrap();
        assert_eq!(c.out, dir.path().join("from-file"));
        assert_eq!(c.window, YearWindow::new(2001, 2005).unwrap());
        assert_eq!(c.missing, MissingValuePolicy::NearestYear { max_distance: 2 });
        assert_eq!(c.families, vec![IndicatorName::snip()]);

        let c = RunConfig::resolve(&args, Some("from-env".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("from-env"));

        args.out = Some("from-flag".into());
        args.window = Some("2010:2011".into());
        let c = RunConfig::resolve(&args, Some("from-env".into())).unwrap();
        assert_eq!(c.out, PathBuf::from("from-flag"));
        assert_eq!(c.window, YearWindow::new(2010, 2011).unwrap());
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for args in [
            SharedArgs {
                window: Some("2013:2009".into()),
                ..Default::default()
            },
            SharedArgs {
                missing: Some("sometimes".into()),
                ..Default::default()
            },
            SharedArgs {
                jobs: Some(0),
                ..Default::default()
            },
        ] {
            let err = RunConfig::resolve(&args, None).unwrap_err();
            assert!(err.downcast_ref::<UsageError>().is_some(), "{err}");
        }
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), "colour = \"blue\"\n");
        let args = SharedArgs {
            config: Some(cfg),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&args, None)
            .unwrap_err()
            .downcast_ref::<UsageError>()
            .is_some());
    }

    #[test]
    fn missing_input_path() {
        let args = SharedArgs {
            events: Some("/nonexistent/events.csv".into()),
            ..Default::default()
        };
        let err = RunConfig::resolve(&args, None).unwrap_err();
        assert!(err.downcast_ref::<crate::exit::MissingInput>().is_some());
    }
}
