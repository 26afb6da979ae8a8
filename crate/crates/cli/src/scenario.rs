//! Scenario parameters, shared by the command-line flags and the config file.
//!
//! Config grammar: a subset of TOML. Blank lines and `#` comments are ignored;
//! `[section]` opens a section; every other line is `key = value` where value is
//! a number, a quoted string or a bracketed list of numbers. The `[run]` section
//! names the command; the section matching the command holds its parameters.
//! Unknown sections and unknown keys are errors.

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use tauberlab::weights::RateFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Series,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Power,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DampingKind {
    Uniform,
    Localized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

/// Builds `Default` from the clap defaults, so the two cannot drift apart.
macro_rules! clap_default {
    ($t:ty) => {
        impl Default for $t {
            fn default() -> Self {
                #[derive(Parser)]
                struct Wrap {
                    #[command(flatten)]
                    inner: $t,
                }
                Wrap::parse_from(["defaults"]).inner
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsParams {
    /// Rate function: `constant:c0`, `power:kappa,alpha`, `log:alpha` or `affine:c1,c2`.
    #[arg(long, default_value = "power:1,2")]
    pub rate: String,
    /// Growth-bound grid: log-spaced points on [t_min, t_max].
    #[arg(long, default_value_t = 10.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub t_max: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Exponents of the weighted tail integral.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 4096.0)]
    pub tail_t_max: f64,
}
clap_default!(WeightsParams);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomsParams {
    #[arg(long, value_enum, default_value_t = Variant::Power)]
    pub variant: Variant,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Ignored by the log variant.
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 20.0)]
    pub k: f64,
    /// Resolvent sample points per band of |z - w|.
    #[arg(long, default_value_t = 20)]
    pub per_band: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}
clap_default!(AtomsParams);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourParams {
    /// Atom block reconstructed on the contour.
    #[arg(long, default_value_t = 10.0)]
    pub k: f64,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Radius of the fixed contour.
    #[arg(long, default_value_t = 0.5)]
    pub radius: f64,
    #[arg(long, default_value_t = 2)]
    pub power: u32,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "3,6,9,12,15,18,21,24,27,30")]
    pub times: Vec<f64>,
    /// Rate function of the adaptive contour.
    #[arg(long, default_value = "power:1,2")]
    pub rate: String,
    #[arg(long, default_value_t = 1.0)]
    pub k_scale: f64,
    /// Acceptable gap between the reconstruction and -N.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}
clap_default!(ContourParams);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveParams {
    /// Interior grid points.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
    #[arg(long, value_enum, default_value_t = DampingKind::Uniform)]
    pub damping: DampingKind,
    /// Damping level; the localized profile is this value on [from, to]·L and 0 elsewhere.
    #[arg(long, default_value_t = 2.0)]
    pub value: f64,
    #[arg(long, default_value_t = 0.5)]
    pub from: f64,
    #[arg(long, default_value_t = 0.8)]
    pub to: f64,
    #[arg(long, value_enum, default_value_t = Boundary::Dirichlet)]
    pub bc: Boundary,
    /// Orbit grid: uniform steps of `dt` on [0, t_end].
    #[arg(long, default_value_t = 30.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    /// Fitting starts at the first grid time past this.
    #[arg(long, default_value_t = 1.0)]
    pub t_fit: f64,
    /// Resolvent scan points on [0, pi/h].
    #[arg(long, default_value_t = 33)]
    pub s_points: usize,
    /// Energy check: uniform steps on [0, energy_t_end].
    #[arg(long, default_value_t = 1.0)]
    pub energy_t_end: f64,
    #[arg(long, default_value_t = 2000)]
    pub energy_steps: usize,
    /// Integrator tolerance for the energy check.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}
clap_default!(WaveParams);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DivergenceParams {
    #[arg(long, value_enum, default_value_t = Variant::Power)]
    pub variant: Variant,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Decreasing schedule of the power variant: `inv-log` or `inv-pow:<e>`.
    #[arg(long, default_value = "inv-log")]
    pub gamma: String,
    /// Number of blocks.
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
}
clap_default!(DivergenceParams);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftParams {
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "20,40")]
    pub ks: Vec<f64>,
    #[arg(long, default_value_t = 40)]
    pub lambdas: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}
clap_default!(ShiftParams);

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteParams {
    /// Registered suite name; see `list-suites`.
    #[arg(long, default_value = "lemma31")]
    pub name: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}
clap_default!(SuiteParams);

/// One reproducible run: the command and every parameter it reads.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", content = "parameters", rename_all = "kebab-case")]
pub enum Command {
    Weights(WeightsParams),
    AtomsVerify(AtomsParams),
    Contour(ContourParams),
    WaveSandwich(WaveParams),
    WaveEnergy(WaveParams),
    CounterexampleDivergence(DivergenceParams),
    CounterexampleShift(ShiftParams),
    Suite(SuiteParams),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Weights(_) => "weights",
            Command::AtomsVerify(_) => "atoms-verify",
            Command::Contour(_) => "contour",
            Command::WaveSandwich(_) => "wave-sandwich",
            Command::WaveEnergy(_) => "wave-energy",
            Command::CounterexampleDivergence(_) => "counterexample-divergence",
            Command::CounterexampleShift(_) => "counterexample-shift",
            Command::Suite(_) => "suite",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    #[serde(flatten)]
    pub command: Command,
    pub backend: Backend,
    pub out_dir: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    command: String,
    backend: Option<Backend>,
    out_dir: Option<PathBuf>,
    threads: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    run: RunSection,
    weights: Option<WeightsParams>,
    atoms: Option<AtomsParams>,
    contour: Option<ContourParams>,
    wave: Option<WaveParams>,
    divergence: Option<DivergenceParams>,
    shift: Option<ShiftParams>,
    suite: Option<SuiteParams>,
}

/// What a config file asks for. Threads and output directory may still be
/// overridden from the command line.
#[derive(Debug)]
pub struct ConfigRun {
    pub command: Command,
    pub backend: Option<Backend>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub fn parse_config(text: &str) -> Result<ConfigRun, String> {
    let cfg: ConfigFile = toml::from_str(text).map_err(|e| e.message().to_string())?;
    let command = match cfg.run.command.as_str() {
        "weights" => Command::Weights(cfg.weights.unwrap_or_default()),
        "atoms-verify" => Command::AtomsVerify(cfg.atoms.unwrap_or_default()),
        "contour" => Command::Contour(cfg.contour.unwrap_or_default()),
        "wave-sandwich" => Command::WaveSandwich(cfg.wave.unwrap_or_default()),
        "wave-energy" => Command::WaveEnergy(cfg.wave.unwrap_or_default()),
        "counterexample-divergence" => Command::CounterexampleDivergence(cfg.divergence.unwrap_or_default()),
        "counterexample-shift" => Command::CounterexampleShift(cfg.shift.unwrap_or_default()),
        "suite" => Command::Suite(cfg.suite.unwrap_or_default()),
        other => return Err(format!("unknown command `{other}` in [run]")),
    };
    Ok(ConfigRun { command, backend: cfg.run.backend, out_dir: cfg.run.out_dir, threads: cfg.run.threads })
}

/// `constant:c0`, `power:kappa,alpha`, `log:alpha` or `affine:c1,c2`.
pub fn parse_rate(spec: &str) -> Result<RateFunction, String> {
    let (family, args) = spec.split_once(':').ok_or_else(|| format!("rate `{spec}` needs the form family:args"))?;
    let nums = args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| format!("rate `{spec}`: `{a}` is not a number"))).collect::<Result<Vec<_>, _>>()?;
    let want = |n: usize| if nums.len() == n { Ok(()) } else { Err(format!("rate `{spec}`: {family} takes {n} argument(s)")) };
    let rate = match family {
        "constant" => want(1).map(|_| RateFunction::Constant { c0: nums[0] }),
        "power" => want(2).map(|_| RateFunction::Power { kappa: nums[0], alpha: nums[1] }),
        "log" => want(1).map(|_| RateFunction::Log { alpha: nums[0] }),
        "affine" => want(2).map(|_| RateFunction::AffineLinear { c1: nums[0], c2: nums[1] }),
        _ => Err(format!("unknown rate family `{family}`; known: constant, power, log, affine")),
    }?;
    rate.validate().map_err(|e| e.to_string())?;
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_flags() {
        let a = AtomsParams::default();
        assert_eq!((a.alpha, a.beta, a.k, a.per_band), (2.0, 2.0, 20.0, 20));
        assert_eq!(ContourParams::default().times.len(), 10);
    }

    #[test]
    fn config_sections_and_unknown_keys() {
        let ok = "# sample\n[run]\ncommand = \"atoms-verify\"\nthreads = 2\n\n[atoms]\nk = 15\nalpha = 2.0\n";
        let run = parse_config(ok).unwrap();
        assert_eq!(run.threads, Some(2));
        match run.command {
            Command::AtomsVerify(p) => assert_eq!((p.k, p.beta), (15.0, 2.0)),
            other => panic!("{other:?}"),
        }
        let bad = "[run]\ncommand = \"atoms-verify\"\n[atoms]\nkk = 15\n";
        let err = parse_config(bad).unwrap_err();
        assert!(err.contains("kk"), "{err}");
        assert!(parse_config("[run]\ncommand = \"nope\"\n").is_err());
        assert!(parse_config("[run]\ncommand = \"weights\"\n[extra]\nx = 1\n").unwrap_err().contains("extra"));
    }

    #[test]
    fn rate_specs() {
        assert_eq!(parse_rate("power:1,2").unwrap(), RateFunction::Power { kappa: 1.0, alpha: 2.0 });
        assert_eq!(parse_rate("constant:2").unwrap(), RateFunction::Constant { c0: 2.0 });
        assert!(parse_rate("power:1").is_err());
        assert!(parse_rate("cubic:1").is_err());
        assert!(parse_rate("power:-1,2").is_err());
    }
}
