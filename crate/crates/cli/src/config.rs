//! Run configuration: a JSON file with the same keys as the command-line
//! flags, overridden field by field by whatever was given on the command line.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::Args;
use serde::Deserialize;
use spc_core::{Family, Method, PeakOptions, QuadratureConfig, SpectralDensity};

/// Every option any subcommand understands. All fields are optional so that
/// file values and flags can be merged before defaults are applied.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Spectral family: gaussian, semi_elliptic, lorentzian or tabulated.
    #[arg(long)]
    pub spectrum: Option<String>,
    /// CSV file with columns `e,h`; implies `--spectrum tabulated`.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Peak frequency; values other than 1 rescale all inputs to scaled units.
    #[arg(long)]
    pub omega_p: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Average boson number `s`.
    #[arg(long)]
    pub s: Option<f64>,

    /// Pulse interval; omit (or pass `inf`) for free decay.
    #[arg(long)]
    pub tau_s: Option<f64>,
    /// Cap on the number of pulses; 0 means free decay.
    #[arg(long)]
    pub n_pulses: Option<usize>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,

    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub tail_mass: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    /// Evaluation route: kernel or direct.
    #[arg(long)]
    pub method: Option<String>,

    #[arg(long)]
    pub tau_min: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub tau_step: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub bracket: Option<Vec<f64>>,
    #[arg(long)]
    pub conv_tol: Option<f64>,
    #[arg(long)]
    pub n_max: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,
    /// Modes per discretized spectrum in `check`.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Number of random schedules in `check`.
    #[arg(long)]
    pub count: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// JSON file providing defaults for any of the options above.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($flags:ident, $file:ident; $($field:ident),* $(,)?) => {
        Settings { $($field: $flags.$field.or($file.$field),)* config: $flags.config }
    };
}

impl Settings {
    /// Loads `--config` if given and lets the flags override it.
    pub fn resolve(self) -> anyhow::Result<Settings> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let file: Settings =
            serde_json::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))?;
        let flags = self;
        Ok(merge_fields!(flags, file;
            spectrum, table, omega_p, gamma, s, tau_s, n_pulses, t_max, dt,
            rel_tol, tail_mass, max_subdivisions, method, tau_min, tau_max,
            tau_step, bracket, conv_tol, n_max, seed, modes, count, output,
        ))
    }

    fn omega_p(&self) -> f64 {
        self.omega_p.unwrap_or(1.0)
    }

    /// Converts a time given in the input units to scaled time `ω_p·t`.
    pub fn scaled_time(&self, t: f64) -> f64 {
        t * self.omega_p()
    }

    pub fn spectral_density(&self) -> anyhow::Result<SpectralDensity> {
        let omega_p = self.omega_p();
        if !(omega_p > 0.0) || !omega_p.is_finite() {
            bail!(usage(format!("--omega-p must be finite and > 0, got {omega_p}")));
        }
        let family = match (&self.spectrum, &self.table) {
            (_, Some(_)) => Family::Tabulated,
            (Some(name), None) => name.parse::<Family>()?,
            (None, None) => Family::Gaussian,
        };
        if family == Family::Tabulated {
            let Some(path) = &self.table else {
                bail!(usage("--spectrum tabulated needs --table".into()));
            };
            return load_table(path, omega_p);
        }
        let gamma = self.gamma.unwrap_or(0.15) / omega_p;
        Ok(SpectralDensity::new(family, 1.0, gamma, self.s.unwrap_or(3.0))?)
    }

    pub fn quadrature(&self) -> anyhow::Result<QuadratureConfig> {
        let d = QuadratureConfig::default();
        let cfg = QuadratureConfig {
            rel_tol: self.rel_tol.unwrap_or(1e-8),
            abs_tol: d.abs_tol,
            max_subdivisions: self.max_subdivisions.unwrap_or(d.max_subdivisions),
            tail_mass: self.tail_mass.unwrap_or(d.tail_mass),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn method(&self, sd: &SpectralDensity) -> anyhow::Result<Method> {
        match &self.method {
            Some(m) => Ok(m.parse()?),
            None => Ok(Method::default_for(sd)),
        }
    }

    pub fn peak_options(&self) -> anyhow::Result<PeakOptions> {
        let d = PeakOptions::default();
        let opts = PeakOptions {
            conv_tol: self.conv_tol.unwrap_or(d.conv_tol),
            conv_window: d.conv_window,
            n_max: self.n_max.unwrap_or(d.n_max),
        };
        opts.validate()?;
        Ok(opts)
    }

    /// Scaled pulse-interval grid for `sweep`.
    pub fn tau_grid(&self) -> anyhow::Result<Vec<f64>> {
        let lo = self.scaled_time(self.tau_min.unwrap_or(0.5));
        let hi = self.scaled_time(self.tau_max.unwrap_or(8.0));
        let step = self.scaled_time(self.tau_step.unwrap_or(0.05));
        if !(step > 0.0) || !step.is_finite() {
            bail!(usage(format!("--tau-step must be > 0, got {step}")));
        }
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            bail!(usage(format!("empty or invalid interval range [{lo}, {hi}]")));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| lo + i as f64 * step).collect())
    }

    pub fn bracket(&self) -> anyhow::Result<(f64, f64)> {
        match self.bracket.as_deref() {
            Some(&[lo, hi]) => Ok((self.scaled_time(lo), self.scaled_time(hi))),
            Some(_) => bail!(usage("--bracket takes exactly two values".into())),
            None => bail!(usage("optimize needs --bracket LO HI".into())),
        }
    }
}

/// Error raised for malformed input, reported with exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: String) -> UsageError {
    UsageError(msg)
}

/// Reads an `e,h` table and maps it to scaled frequency, keeping `h(e)·de`.
fn load_table(path: &Path, omega_p: f64) -> anyhow::Result<SpectralDensity> {
    let sd = SpectralDensity::from_csv_path(path)
        .with_context(|| format!("loading spectral table {}", path.display()))?;
    if omega_p == 1.0 {
        return Ok(sd);
    }
    let samples: Vec<(f64, f64)> = sd
        .samples()
        .expect("tabulated density has samples")
        .map(|(e, h)| (e / omega_p, h * omega_p))
        .collect();
    Ok(SpectralDensity::tabulated(samples)?)
}
