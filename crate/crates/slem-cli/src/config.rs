//! Run configuration: a flat `key = value` file (with `#` comments) merged
//! with command-line overrides. The resolved configuration has a canonical
//! text form whose hash goes into the run metadata, so identical metadata
//! implies identical simulation settings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use slem_core::landslide::InverseGammaParams;
use slem_core::rusle::{CoverTable, LengthExponent, S_MERGE_THRESHOLD_DEG};
use slem_core::stats::Statistic;
use slem_core::terrain::FlowLengthMethod;

/// Everything a run needs. Paths are optional here; each subcommand
/// validates that the inputs it requires are present.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dem: Option<PathBuf>,
    pub landcover: Option<PathBuf>,
    pub r: Option<PathBuf>,
    pub k: Option<PathBuf>,
    pub p: Option<PathBuf>,
    pub st: Option<PathBuf>,
    pub eligibility: Option<PathBuf>,
    pub cover_table: Option<PathBuf>,
    pub out: Option<PathBuf>,

    /// Mandatory for anything stochastic; there is deliberately no
    /// wall-clock fallback.
    pub seed: Option<u64>,
    pub iterations: u32,
    pub n_landslides: Option<u64>,
    pub rho: f64,
    pub a_param: f64,
    pub s_param: f64,
    pub bare_min: f64,
    pub c_bare: f64,
    pub threads: usize,
    pub max_area_km2: f64,
    pub poisson_landslides: bool,
    pub flow_length_method: FlowLengthMethod,
    pub s_threshold_deg: f64,
    /// `None` = variable McCool exponent; `Some(m)` = fixed.
    pub l_exponent: Option<f64>,
    pub bootstrap_resamples: u32,
    pub bootstrap_statistic: Statistic,
    pub bins_per_decade: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        let malamud = InverseGammaParams::MALAMUD;
        RunConfig {
            dem: None,
            landcover: None,
            r: None,
            k: None,
            p: None,
            st: None,
            eligibility: None,
            cover_table: None,
            out: None,
            seed: None,
            iterations: 1000,
            n_landslides: None,
            rho: malamud.rho,
            a_param: malamud.a,
            s_param: malamud.s,
            bare_min: 0.2,
            c_bare: 1.0,
            threads: 0,
            max_area_km2: 1.0,
            poisson_landslides: false,
            flow_length_method: FlowLengthMethod::Longest,
            s_threshold_deg: S_MERGE_THRESHOLD_DEG,
            l_exponent: None,
            bootstrap_resamples: 10_000,
            bootstrap_statistic: Statistic::Median,
            bins_per_decade: 10,
        }
    }
}

impl RunConfig {
    /// Parse a config file and fold it over the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut config = RunConfig::default();
        config.apply_text(&text, &path.display().to_string())?;
        Ok(config)
    }

    /// Apply `key = value` lines. Later keys win; unknown keys are errors.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{source}:{}: expected 'key = value', got '{raw}'",
                    line_no + 1
                );
            };
            self.set(key.trim(), value.trim())
                .with_context(|| format!("{source}:{}", line_no + 1))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow::anyhow!("invalid {key} '{value}': {e}"))
        }

        match key {
            "dem" => self.dem = Some(PathBuf::from(value)),
            "landcover" => self.landcover = Some(PathBuf::from(value)),
            "r" => self.r = Some(PathBuf::from(value)),
            "k" => self.k = Some(PathBuf::from(value)),
            "p" => self.p = Some(PathBuf::from(value)),
            "st" => self.st = Some(PathBuf::from(value)),
            "eligibility" => self.eligibility = Some(PathBuf::from(value)),
            "cover_table" => self.cover_table = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = Some(parse(key, value)?),
            "iterations" => self.iterations = parse(key, value)?,
            "n_landslides" => self.n_landslides = Some(parse(key, value)?),
            "rho" => self.rho = parse(key, value)?,
            "a_param" => self.a_param = parse(key, value)?,
            "s_param" => self.s_param = parse(key, value)?,
            "bare_min" => self.bare_min = parse(key, value)?,
            "c_bare" => self.c_bare = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            "max_area_km2" => self.max_area_km2 = parse(key, value)?,
            "poisson_landslides" => self.poisson_landslides = parse(key, value)?,
            "flow_length_method" => {
                self.flow_length_method = match value {
                    "longest" => FlowLengthMethod::Longest,
                    "mean" => FlowLengthMethod::Mean,
                    other => bail!("invalid flow_length_method '{other}' (longest or mean)"),
                }
            }
            "s_threshold_deg" => self.s_threshold_deg = parse(key, value)?,
            "l_exponent" => {
                self.l_exponent = match value {
                    "mccool" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "bootstrap_resamples" => self.bootstrap_resamples = parse(key, value)?,
            "bootstrap_statistic" => {
                self.bootstrap_statistic = value
                    .parse()
                    .map_err(|e: slem_core::Error| anyhow::anyhow!("{e}"))?
            }
            "bins_per_decade" => self.bins_per_decade = parse(key, value)?,
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    pub fn params(&self) -> Result<InverseGammaParams> {
        InverseGammaParams::new(self.rho, self.a_param, self.s_param).map_err(anyhow::Error::from)
    }

    pub fn length_exponent(&self) -> LengthExponent {
        match self.l_exponent {
            Some(m) => LengthExponent::Fixed(m),
            None => LengthExponent::McCool,
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.seed
            .context("an explicit seed is required (set --seed or 'seed =' in the config file)")
    }

    pub fn require_out(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .context("an output directory is required (--out)")
    }

    pub fn require_path(&self, name: &str) -> Result<&Path> {
        let path = match name {
            "dem" => &self.dem,
            "landcover" => &self.landcover,
            "r" => &self.r,
            "k" => &self.k,
            "cover_table" => &self.cover_table,
            _ => &None,
        };
        path.as_deref()
            .with_context(|| format!("input '{name}' is required (--{})", name.replace('_', "-")))
    }

    /// Canonical text form: every field, fixed order, one per line. The
    /// FNV-1a hash of this text is the config hash in the run metadata.
    pub fn canonical_text(&self) -> String {
        fn path(p: &Option<PathBuf>) -> String {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into())
        }
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("dem", path(&self.dem));
        kv("landcover", path(&self.landcover));
        kv("r", path(&self.r));
        kv("k", path(&self.k));
        kv("p", path(&self.p));
        kv("st", path(&self.st));
        kv("eligibility", path(&self.eligibility));
        kv("cover_table", path(&self.cover_table));
        kv(
            "seed",
            self.seed
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
        );
        kv("iterations", self.iterations.to_string());
        kv(
            "n_landslides",
            self.n_landslides
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
        );
        kv("rho", format!("{}", self.rho));
        kv("a_param", format!("{}", self.a_param));
        kv("s_param", format!("{}", self.s_param));
        kv("bare_min", format!("{}", self.bare_min));
        kv("c_bare", format!("{}", self.c_bare));
        kv("max_area_km2", format!("{}", self.max_area_km2));
        kv("poisson_landslides", self.poisson_landslides.to_string());
        kv(
            "flow_length_method",
            match self.flow_length_method {
                FlowLengthMethod::Longest => "longest".into(),
                FlowLengthMethod::Mean => "mean".into(),
            },
        );
        kv("s_threshold_deg", format!("{}", self.s_threshold_deg));
        kv(
            "l_exponent",
            self.l_exponent
                .map(|m| format!("{m}"))
                .unwrap_or_else(|| "mccool".into()),
        );
        kv("bootstrap_resamples", self.bootstrap_resamples.to_string());
        kv(
            "bootstrap_statistic",
            self.bootstrap_statistic.name().into(),
        );
        kv("bins_per_decade", self.bins_per_decade.to_string());
        // threads deliberately excluded: it must not affect results.
        s
    }

    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical_text().as_bytes())
    }
}

/// FNV-1a, 64-bit: stable across runs, platforms and toolchains.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Read a cover table CSV: header `class,c_factor`, one integer class and
/// one C value in [0, 1] per line.
pub fn read_cover_table(path: &Path) -> Result<CoverTable> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read cover table {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .with_context(|| format!("{}: empty cover table", path.display()))?;
    let normalized: Vec<String> = header
        .split(',')
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if normalized != ["class", "c_factor"] {
        bail!(
            "{}: expected header 'class,c_factor', got '{header}'",
            path.display()
        );
    }
    let mut pairs: BTreeMap<i64, f64> = BTreeMap::new();
    for (line_no, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let class: i64 = fields
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad class code", path.display(), line_no + 1))?;
        let c: f64 = fields
            .next()
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("{}:{}: bad c_factor", path.display(), line_no + 1))?;
        if fields.next().is_some() {
            bail!("{}:{}: too many fields", path.display(), line_no + 1);
        }
        pairs.insert(class, c);
    }
    CoverTable::from_pairs(pairs).map_err(anyhow::Error::from)
}
