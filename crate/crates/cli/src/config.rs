//! Flat `key = value` configuration with strict keys, flag overrides and a
//! content hash.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use stablelp::fixtures::Fixture;
use stablelp::functionals::FunctionalName;
use stablelp::multiplier::{Symmetry, BUILTIN_KERNELS};
use stablelp::{GridSpec, StableParams, TimeGrid};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "STABLELP_OUTPUT_DIR";
/// Output directory when neither the config nor the environment names one.
pub const DEFAULT_OUTPUT_DIR: &str = "stablelp-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Density,
    Extend,
    Lp,
    Multiplier,
    Mc,
    Suite,
}

impl Subcommand {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Density => "density",
            Self::Extend => "extend",
            Self::Lp => "lp",
            Self::Multiplier => "multiplier",
            Self::Mc => "mc",
            Self::Suite => "suite",
        }
    }

    fn keys(&self) -> &'static [&'static str] {
        match self {
            Self::Density => &["s"],
            Self::Extend => &["fixtures", "times"],
            Self::Lp => &["fixtures", "functionals", "lambda", "p"],
            Self::Multiplier => &["kernels", "kernel_file", "kernel_symmetry", "fixtures", "p", "lambda"],
            Self::Mc => &["a", "n_paths", "dt", "checks", "raw"],
            Self::Suite => &["quick"],
        }
    }

    fn default_grid(&self) -> (f64, f64) {
        match self {
            Self::Lp | Self::Multiplier => (32.0, 1.0 / 32.0),
            Self::Mc => (32.0, 1.0 / 64.0),
            _ => (64.0, 1.0 / 64.0),
        }
    }
}

const COMMON_KEYS: [&str; 10] =
    ["alpha", "dim", "half_extent", "dx", "t_min", "t_max", "n_t", "seed", "workers", "output_dir"];

/// Monte Carlo checks the `mc` subcommand can run.
pub const MC_CHECKS: [&str; 4] = ["exit_law", "green", "martingale", "harnack"];

/// Where a setting came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub origin: Origin,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.key {
            Some(key) => write!(f, "{}: key `{key}`: {}", self.origin, self.message),
            None => write!(f, "{}: {}", self.origin, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Raw settings, each with its origin; later sources override earlier ones.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: BTreeMap<String, (String, Origin)>,
}

impl Settings {
    /// Parse `key = value` lines; `#` starts a comment. A key may appear
    /// once per file.
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let origin = Origin::File { path: path.to_path_buf(), line: i + 1 };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError {
                    origin,
                    key: None,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError { origin, key: None, message: "empty key".into() });
            }
            if entries.contains_key(&key) {
                return Err(ConfigError { origin, key: Some(key), message: "set twice".into() });
            }
            entries.insert(key, (value.trim().to_string(), origin));
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>, origin: Origin) {
        self.entries.insert(key.to_string(), (value.into(), origin));
    }

    /// `key=value` from the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        match pair.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                self.set(k.trim(), v.trim(), Origin::Flag);
                Ok(())
            }
            _ => Err(ConfigError {
                origin: Origin::Flag,
                key: None,
                message: format!("expected key=value, got `{pair}`"),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub params: StableParams,
    pub grid: GridSpec,
    pub time_grid: TimeGrid,
    pub seed: u64,
    pub workers: usize,
    pub output_dir: PathBuf,
    pub s: f64,
    pub fixtures: Vec<Fixture>,
    pub times: Vec<f64>,
    pub functionals: Vec<FunctionalName>,
    pub lambda: Option<f64>,
    pub ps: Vec<f64>,
    pub kernels: Vec<String>,
    pub kernel_file: Option<PathBuf>,
    pub kernel_symmetry: Symmetry,
    pub a: f64,
    pub n_paths: usize,
    pub dt: f64,
    pub checks: Vec<String>,
    pub raw: bool,
    pub quick: bool,
    /// Every resolved setting except `output_dir`, as text.
    canonical: BTreeMap<String, String>,
}

struct Reader<'a> {
    settings: &'a Settings,
    canonical: BTreeMap<String, String>,
}

impl Reader<'_> {
    fn fail(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let origin = self.settings.entries.get(key).map(|(_, o)| o.clone()).unwrap_or(Origin::Default);
        ConfigError { origin, key: Some(key.into()), message: message.into() }
    }

    fn raw(&mut self, key: &str, default: &str) -> String {
        let v = self.settings.entries.get(key).map(|(v, _)| v.clone()).unwrap_or_else(|| default.to_string());
        if key != "output_dir" {
            self.canonical.insert(key.into(), v.clone());
        }
        v
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str, default: &str) -> Result<T, ConfigError> {
        let v = self.raw(key, default);
        v.parse().map_err(|_| self.fail(key, format!("cannot parse `{v}`")))
    }

    fn number(&mut self, key: &str, default: &str, ok: impl Fn(f64) -> bool, range: &str) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(key, default)?;
        if ok(v) {
            Ok(v)
        } else {
            Err(self.fail(key, format!("{v} must be {range}")))
        }
    }

    fn list<T>(
        &mut self,
        key: &str,
        default: &str,
        item: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Vec<T>, ConfigError> {
        let v = self.raw(key, default);
        let items: Vec<T> = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| item(s).map_err(|e| self.fail(key, e)))
            .collect::<Result<_, _>>()?;
        if items.is_empty() {
            return Err(self.fail(key, "empty list"));
        }
        Ok(items)
    }

    fn positive_list(&mut self, key: &str, default: &str) -> Result<Vec<f64>, ConfigError> {
        self.list(key, default, |s| match s.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
            _ => Err(format!("`{s}` is not a positive number")),
        })
    }

    fn flag(&mut self, key: &str) -> Result<bool, ConfigError> {
        let v = self.raw(key, "false");
        match v.as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(self.fail(key, format!("`{v}` is not a boolean"))),
        }
    }
}

impl RunConfig {
    /// Validate `settings` for `subcommand`. Keys that `subcommand` does not
    /// take are rejected.
    pub fn resolve(subcommand: Subcommand, settings: &Settings) -> Result<Self, ConfigError> {
        for (key, (_, origin)) in &settings.entries {
            if !COMMON_KEYS.contains(&key.as_str()) && !subcommand.keys().contains(&key.as_str()) {
                let mut known: Vec<&str> = COMMON_KEYS.iter().chain(subcommand.keys()).copied().collect();
                known.sort_unstable();
                return Err(ConfigError {
                    origin: origin.clone(),
                    key: Some(key.clone()),
                    message: format!("unknown key for `{}` (known: {})", subcommand.as_str(), known.join(", ")),
                });
            }
        }
        let mut r = Reader { settings, canonical: BTreeMap::new() };
        let takes = |key: &str| subcommand.keys().contains(&key);

        let alpha = r.number("alpha", "1.5", |a| a > 0.0 && a <= 2.0, "in (0, 2]")?;
        let dim: usize = r.parse("dim", "1")?;
        let params = StableParams::new(alpha, dim).map_err(|e| r.fail("dim", e.to_string()))?;
        if dim != 1 && subcommand != Subcommand::Density {
            return Err(r.fail("dim", format!("`{}` is one-dimensional", subcommand.as_str())));
        }
        if matches!(subcommand, Subcommand::Multiplier | Subcommand::Suite) && !(alpha > 1.0 && alpha < 2.0) {
            return Err(r.fail("alpha", format!("{alpha} must be in (1, 2) for `{}`", subcommand.as_str())));
        }
        let (l, dx) = subcommand.default_grid();
        let half_extent = r.number("half_extent", &l.to_string(), |v| v > 0.0 && v.is_finite(), "> 0")?;
        let spacing = r.number("dx", &dx.to_string(), |v| v > 0.0 && v.is_finite(), "> 0")?;
        let grid = GridSpec::with_dim(half_extent, spacing, dim).map_err(|e| r.fail("dx", e.to_string()))?;
        let t_min = r.number("t_min", "1e-4", |v| v > 0.0, "> 0")?;
        let t_max = r.number("t_max", "1e3", |v| v.is_finite(), "finite")?;
        let n_t: usize = r.parse("n_t", "256")?;
        let time_grid = TimeGrid::log_spaced(t_min, t_max, n_t).map_err(|e| r.fail("t_max", e.to_string()))?;
        let seed: u64 = r.parse("seed", "42")?;
        let workers: usize = r.parse("workers", "1")?;
        if workers == 0 {
            return Err(r.fail("workers", "must be >= 1"));
        }
        let env_dir = std::env::var(OUTPUT_DIR_ENV).unwrap_or_else(|_| DEFAULT_OUTPUT_DIR.into());
        let output_dir = PathBuf::from(r.raw("output_dir", &env_dir));

        let s = if takes("s") { r.number("s", "1", |v| v > 0.0 && v.is_finite(), "> 0")? } else { 1.0 };
        let fixtures = if takes("fixtures") {
            r.list("fixtures", "gauss,indicator,coswin", |s| s.parse::<Fixture>().map_err(|e| e.to_string()))?
        } else {
            Vec::new()
        };
        let times = if takes("times") { r.positive_list("times", "0.5,1,2")? } else { Vec::new() };
        let functionals = if takes("functionals") {
            r.list("functionals", "G_up,G_arrow_alpha", |s| s.parse::<FunctionalName>().map_err(|e| e.to_string()))?
        } else {
            Vec::new()
        };
        let lambda = match settings.entries.get("lambda") {
            Some(_) if takes("lambda") => Some(r.number("lambda", "", |v| v > 1.0 && v.is_finite(), "> 1")?),
            _ => None,
        };
        let ps = if takes("p") {
            let ps = r.positive_list("p", "1.5,2,3")?;
            if ps.iter().any(|p| *p < 1.0) {
                return Err(r.fail("p", "every p must be >= 1"));
            }
            ps
        } else {
            Vec::new()
        };
        let kernel_file = if takes("kernel_file") {
            settings.entries.get("kernel_file").map(|_| PathBuf::from(r.raw("kernel_file", "")))
        } else {
            None
        };
        let kernels = if takes("kernels") {
            let default = if kernel_file.is_some() { "" } else { "test" };
            let v = r.raw("kernels", default);
            let names: Vec<String> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            if let Some(bad) = names.iter().find(|n| !BUILTIN_KERNELS.contains(&n.as_str())) {
                return Err(
                    r.fail("kernels", format!("unknown kernel `{bad}` (known: {})", BUILTIN_KERNELS.join(", ")))
                );
            }
            if names.is_empty() && kernel_file.is_none() {
                return Err(r.fail("kernels", "empty list and no kernel_file"));
            }
            names
        } else {
            Vec::new()
        };
        let kernel_symmetry = if takes("kernel_symmetry") {
            let v = r.raw("kernel_symmetry", "odd");
            v.parse().map_err(|_| r.fail("kernel_symmetry", format!("`{v}` is not a symmetry")))?
        } else {
            Symmetry::Odd
        };
        let (a, n_paths, dt, checks, raw) = if subcommand == Subcommand::Mc {
            let a = r.number("a", "1", |v| v > 0.0 && v.is_finite(), "> 0")?;
            let n_paths: usize = r.parse("n_paths", "100000")?;
            if n_paths == 0 {
                return Err(r.fail("n_paths", "must be >= 1"));
            }
            let dt = r.number("dt", "1e-3", |v| v > 0.0 && v <= 1.0, "in (0, 1]")?;
            let checks = r.list("checks", &MC_CHECKS.join(","), |s| {
                if MC_CHECKS.contains(&s) {
                    Ok(s.to_string())
                } else {
                    Err(format!("unknown check `{s}` (known: {})", MC_CHECKS.join(", ")))
                }
            })?;
            (a, n_paths, dt, checks, r.flag("raw")?)
        } else {
            (1.0, 0, 1e-3, Vec::new(), false)
        };
        let quick = if takes("quick") { r.flag("quick")? } else { false };

        let canonical = r.canonical;
        Ok(Self {
            subcommand,
            params,
            grid,
            time_grid,
            seed,
            workers,
            output_dir,
            s,
            fixtures,
            times,
            functionals,
            lambda,
            ps,
            kernels,
            kernel_file,
            kernel_symmetry,
            a,
            n_paths,
            dt,
            checks,
            raw,
            quick,
            canonical,
        })
    }

    /// `subcommand` followed by the sorted `key = value` lines.
    pub fn canonical_text(&self) -> String {
        let mut text = format!("subcommand = {}\n", self.subcommand.as_str());
        for (k, v) in &self.canonical {
            text.push_str(&format!("{k} = {v}\n"));
        }
        text
    }

    /// SHA-256 of [`RunConfig::canonical_text`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
