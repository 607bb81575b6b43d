//! TOML configuration with `BROCCOLI_*` environment overrides.
//!
//! ```toml
//! [tutor]
//! a = 1.0
//! initial_half_life = 0.25
//!
//! [selection]
//! density = 0.1
//!
//! [lm]
//! path = "model.lm"
//!
//! [translation]
//! default_profile = "fi"
//! [translation.profiles.fi]
//! dictionary = "en-fi.tsv"
//!
//! [server]
//! listen = "127.0.0.1:8080"
//! state_dir = "state"
//! ```
//!
//! Relative paths are resolved against the config file's directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::annotate::Annotator;
use crate::error::ConfigError;
use crate::guess::{ConstantScorer, ContextScorer, NGramModel};
use crate::store::StoreOptions;
use crate::text::Stoplist;
use crate::translate::{AlignedFixture, AlignedProvider, DictionaryProvider, ProviderRegistry};
use crate::tutor::TutorParams;

pub const ENV_PREFIX: &str = "BROCCOLI_";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    pub density: f64,
    pub max_lemmas: Option<usize>,
    pub min_len: usize,
    /// Replaces the bundled stoplist.
    pub stoplist: Option<PathBuf>,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection { density: 0.1, max_lemmas: None, min_len: 3, stoplist: None }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct LmSection {
    /// Trained n-gram model. Without it every word gets `constant`.
    pub path: Option<PathBuf>,
    pub constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub dictionary: Option<PathBuf>,
    pub aligned_fixture: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TranslationSection {
    pub default_profile: Option<String>,
    pub profiles: BTreeMap<String, ProfileSection>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSection {
    pub listen: String,
    pub state_dir: PathBuf,
    pub snapshot_every: u64,
    pub reveal_as_exposure: bool,
}

impl Default for ServerSection {
    fn default() -> Self {
        ServerSection {
            listen: "127.0.0.1:8080".into(),
            state_dir: PathBuf::from("state"),
            snapshot_every: 500,
            reveal_as_exposure: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tutor: TutorParams,
    pub selection: SelectionSection,
    pub lm: LmSection,
    pub translation: TranslationSection,
    pub server: ServerSection,
}

fn parse_env<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.trim().parse().map_err(|e: T::Err| ConfigError::Env { var: var.to_string(), message: e.to_string() })
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    pub fn parse(src: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(src).map_err(|e| ConfigError::Parse { path: origin.to_path_buf(), message: e.to_string() })
    }

    /// Reads the file, resolves relative paths, applies environment
    /// overrides and validates.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let src =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg = Self::parse(&src, path)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.apply_env(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults plus environment overrides, for runs without a file.
    pub fn from_env() -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        cfg.apply_env(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &mut self.selection.stoplist {
            resolve(base, p);
        }
        if let Some(p) = &mut self.lm.path {
            resolve(base, p);
        }
        for prof in self.translation.profiles.values_mut() {
            if let Some(p) = &mut prof.dictionary {
                resolve(base, p);
            }
            if let Some(p) = &mut prof.aligned_fixture {
                resolve(base, p);
            }
        }
        resolve(base, &mut self.server.state_dir);
    }

    /// Overrides from `BROCCOLI_<SECTION>_<KEY>` variables, e.g.
    /// `BROCCOLI_TUTOR_A` or `BROCCOLI_SERVER_LISTEN`. Unknown names with the
    /// prefix are rejected so typos do not pass silently.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        for (var, value) in vars {
            let Some(key) = var.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let v = value.as_str();
            match key {
                "TUTOR_A" => self.tutor.a = parse_env(&var, v)?,
                "TUTOR_B" => self.tutor.b = parse_env(&var, v)?,
                "TUTOR_C" => self.tutor.c = parse_env(&var, v)?,
                "TUTOR_D" => self.tutor.d = parse_env(&var, v)?,
                "TUTOR_INITIAL_HALF_LIFE" => self.tutor.initial_half_life = parse_env(&var, v)?,
                "SELECTION_DENSITY" => self.selection.density = parse_env(&var, v)?,
                "SELECTION_MAX_LEMMAS" => self.selection.max_lemmas = Some(parse_env(&var, v)?),
                "SELECTION_MIN_LEN" => self.selection.min_len = parse_env(&var, v)?,
                "SELECTION_STOPLIST" => self.selection.stoplist = Some(PathBuf::from(v)),
                "LM_PATH" => self.lm.path = Some(PathBuf::from(v)),
                "LM_CONSTANT" => self.lm.constant = Some(parse_env(&var, v)?),
                "TRANSLATION_DEFAULT_PROFILE" => self.translation.default_profile = Some(v.to_string()),
                "SERVER_LISTEN" => self.server.listen = v.to_string(),
                "SERVER_STATE_DIR" => self.server.state_dir = PathBuf::from(v),
                "SERVER_SNAPSHOT_EVERY" => self.server.snapshot_every = parse_env(&var, v)?,
                "SERVER_REVEAL_AS_EXPOSURE" => self.server.reveal_as_exposure = parse_env(&var, v)?,
                "LOG" => {}
                _ => {
                    return Err(ConfigError::Env { var: var.clone(), message: "unknown setting".into() });
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tutor.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&self.selection.density) {
            return Err(ConfigError::Invalid(format!(
                "selection.density must lie in [0, 1], got {}",
                self.selection.density
            )));
        }
        for (name, p) in &self.translation.profiles {
            if p.dictionary.is_some() == p.aligned_fixture.is_some() {
                return Err(ConfigError::Invalid(format!(
                    "profile {name:?} needs exactly one of `dictionary` or `aligned_fixture`"
                )));
            }
        }
        if let Some(d) = &self.translation.default_profile {
            if !self.translation.profiles.contains_key(d) {
                return Err(ConfigError::Invalid(format!("default profile {d:?} is not defined")));
            }
        }
        if let Some(c) = self.lm.constant {
            ConstantScorer::new(c).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn store_options(&self) -> StoreOptions {
        StoreOptions {
            snapshot_every: self.server.snapshot_every,
            reveal_as_exposure: self.server.reveal_as_exposure,
            durable: true,
        }
    }

    /// Loads the scorer, stoplist and providers named by the config.
    pub fn annotator(&self) -> Result<Annotator, ConfigError> {
        let scorer: Arc<dyn ContextScorer> = match &self.lm.path {
            Some(p) => {
                Arc::new(NGramModel::load(p).map_err(|e| ConfigError::Invalid(format!("{}: {e}", p.display())))?)
            }
            None => Arc::new(
                ConstantScorer::new(self.lm.constant.unwrap_or(0.5))
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?,
            ),
        };
        let mut providers = ProviderRegistry::new();
        for (name, p) in &self.translation.profiles {
            if let Some(d) = &p.dictionary {
                let dict = DictionaryProvider::load(d).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                providers.insert(name.clone(), Arc::new(dict));
            } else if let Some(f) = &p.aligned_fixture {
                let fx = AlignedFixture::load(f).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                providers.insert(name.clone(), Arc::new(AlignedProvider::new(fx)));
            }
        }
        let mut a = Annotator::new(scorer, providers);
        if let Some(p) = &self.selection.stoplist {
            a.stoplist = Stoplist::load(p).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        a.min_len = self.selection.min_len;
        a.max_lemmas = self.selection.max_lemmas;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let src = r#"
[tutor]
a = 2.0
b = 1.0
c = 2.0
d = 1.5
initial_half_life = 1.0

[selection]
density = 0.2
max_lemmas = 5

[lm]
constant = 0.3

[translation]
default_profile = "fi"
[translation.profiles.fi]
dictionary = "dict/fi.tsv"

[server]
listen = "0.0.0.0:9000"
state_dir = "/var/lib/vw"
snapshot_every = 10
reveal_as_exposure = true
"#;
        let mut c = Config::parse(src, Path::new("c.toml")).unwrap();
        c.resolve_paths(Path::new("/etc/vw"));
        c.validate().unwrap();
        assert_eq!(c.tutor.a, 2.0);
        assert_eq!(c.selection.max_lemmas, Some(5));
        assert_eq!(c.translation.profiles["fi"].dictionary.as_deref(), Some(Path::new("/etc/vw/dict/fi.tsv")));
        assert_eq!(c.server.state_dir, PathBuf::from("/var/lib/vw"));
        assert!(c.store_options().reveal_as_exposure);
    }

    #[test]
    fn defaults_are_valid() {
        let c = Config::parse("", Path::new("x")).unwrap();
        c.validate().unwrap();
        assert_eq!(c.tutor, TutorParams::default());
        assert_eq!(c.server.snapshot_every, 500);
    }

    #[test]
    fn env_overrides() {
        let mut c = Config::default();
        let vars = [
            ("BROCCOLI_TUTOR_D", "2"),
            ("BROCCOLI_SERVER_LISTEN", "127.0.0.1:1"),
            ("BROCCOLI_SERVER_REVEAL_AS_EXPOSURE", "true"),
            ("PATH", "/bin"),
        ];
        c.apply_env(vars.iter().map(|(a, b)| (a.to_string(), b.to_string()))).unwrap();
        assert_eq!(c.tutor.d, 2.0);
        assert_eq!(c.server.listen, "127.0.0.1:1");
        assert!(c.server.reveal_as_exposure);
        let err = c.apply_env([("BROCCOLI_TUTOR_A".to_string(), "x".to_string())]).unwrap_err();
        assert!(err.to_string().contains("BROCCOLI_TUTOR_A"));
        assert!(c.apply_env([("BROCCOLI_NOPE".to_string(), "1".to_string())]).is_err());
    }

    #[test]
    fn invalid_configs() {
        let bad = [
            "[tutor]\na = 1.0\nb = 1.0\nc = 2.0\nd = 0.5\ninitial_half_life = 1.0\n",
            "[selection]\ndensity = 2.0\n",
            "[translation]\ndefault_profile = \"xx\"\n",
            "[translation.profiles.fi]\n",
            "[lm]\nconstant = 0.0\n",
        ];
        for src in bad {
            let r = Config::parse(src, Path::new("x")).and_then(|c| c.validate());
            assert!(r.is_err(), "{src}");
        }
        assert!(Config::parse("[nope]\n", Path::new("x")).is_err());
    }

    #[test]
    fn missing_dictionary_names_path() {
        let mut c = Config::default();
        c.translation.profiles.insert(
            "fi".into(),
            ProfileSection { dictionary: Some(PathBuf::from("/no/such/dict.tsv")), aligned_fixture: None },
        );
        let err = c.annotator().err().unwrap();
        assert!(err.to_string().contains("/no/such/dict.tsv"));
    }
}
