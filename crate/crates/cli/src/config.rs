//! `key = value` run configuration.
//!
//! A file names a scenario and may override any of its defaults. `scenario = custom`
//! has no defaults, so every key in [`REQUIRED_CUSTOM`] must be present.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use phaselab::dynamics::{stability_limit, ClassicalScheme, DecoherenceSpec, EvolutionConfig, HamiltonianSpec, Integrator, SolverKind};
use phaselab::moyal::PolynomialSymbol;
use phaselab::states::StateSpec;
use phaselab::{make_grid, IndexBox, PhaseGrid};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Coherent,
    Cat,
    FreeJoosZeh,
    Quartic,
    Custom,
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "coherent" => Self::Coherent,
            "cat" => Self::Cat,
            "free-jooszeh" => Self::FreeJoosZeh,
            "quartic" => Self::Quartic,
            "custom" => Self::Custom,
            other => return Err(CliError::Config(format!("unknown scenario {other:?} (coherent, cat, free-jooszeh, quartic, custom)"))),
        })
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Coherent => "coherent",
            Self::Cat => "cat",
            Self::FreeJoosZeh => "free-jooszeh",
            Self::Quartic => "quartic",
            Self::Custom => "custom",
        })
    }
}

/// Every key a configuration may contain.
pub const KEYS: &[&str] = &[
    "scenario",
    "solver",
    "n_q",
    "n_p",
    "q_min",
    "q_max",
    "p_min",
    "p_max",
    "hbar",
    "mass",
    "potential",
    "D",
    "state",
    "q0",
    "p0",
    "sigma",
    "sigma_q",
    "sigma_p",
    "offset",
    "sign",
    "n",
    "omega",
    "dt",
    "t_end",
    "stride",
    "snapshot_interval",
    "integrator",
    "classical_scheme",
    "regions",
    "output_dir",
];

pub const REQUIRED_CUSTOM: &[&str] =
    &["n_q", "n_p", "q_min", "q_max", "p_min", "p_max", "hbar", "mass", "potential", "D", "state", "dt", "t_end", "stride"];

fn defaults(scenario: Scenario) -> Vec<(&'static str, String)> {
    let common = [
        ("solver", "quantum".to_string()),
        ("dt", "auto".into()),
        ("stride", "auto".into()),
        ("integrator", Integrator::SplitStepSpectral.to_string()),
        ("classical_scheme", ClassicalScheme::Spectral.to_string()),
        ("output_dir", "phaselab-out".into()),
    ];
    let specific: Vec<(&str, String)> = match scenario {
        Scenario::Coherent => vec![
            ("n_q", "128".into()),
            ("n_p", "128".into()),
            ("q_min", "-8".into()),
            ("q_max", "8".into()),
            ("p_min", "-8".into()),
            ("p_max", "8".into()),
            ("hbar", "1".into()),
            ("mass", "1".into()),
            ("potential", "0, 0, 0.5".into()),
            ("D", "0".into()),
            ("state", "coherent".into()),
            ("q0", "1.5".into()),
            ("p0", "0".into()),
            ("sigma", "1".into()),
            ("t_end", format!("{:?}", 2.0 * PI)),
        ],
        Scenario::Cat => vec![
            ("n_q", "256".into()),
            ("n_p", "128".into()),
            ("q_min", "-10".into()),
            ("q_max", "10".into()),
            ("p_min", "-8".into()),
            ("p_max", "8".into()),
            ("hbar", "1".into()),
            ("mass", "1".into()),
            ("potential", "0, 0, 0.5".into()),
            ("D", "0".into()),
            ("state", "cat".into()),
            ("offset", "3".into()),
            ("sigma", "1".into()),
            ("sign", "1".into()),
            ("t_end", format!("{:?}", PI)),
        ],
        Scenario::FreeJoosZeh => vec![
            ("n_q", "512".into()),
            ("n_p", "256".into()),
            ("q_min", "-24".into()),
            ("q_max", "24".into()),
            ("p_min", "-12".into()),
            ("p_max", "12".into()),
            ("hbar", "1".into()),
            ("mass", "1".into()),
            ("potential", "0".into()),
            ("D", "1".into()),
            ("state", "cat".into()),
            ("offset", "3".into()),
            ("sigma", "1".into()),
            ("sign", "1".into()),
            ("t_end", "3".into()),
            ("snapshot_interval", "0.05".into()),
        ],
        Scenario::Quartic => vec![
            ("n_q", "256".into()),
            ("n_p", "256".into()),
            ("q_min", "-8".into()),
            ("q_max", "8".into()),
            ("p_min", "-10".into()),
            ("p_max", "10".into()),
            ("hbar", "1".into()),
            ("mass", "1".into()),
            ("potential", "0, 0, -1, 0, 0.05".into()),
            ("D", "1".into()),
            ("state", "cat".into()),
            ("offset", "3".into()),
            ("sigma", format!("{:?}", 0.5_f64.sqrt())),
            ("sign", "1".into()),
            ("t_end", "3".into()),
            ("snapshot_interval", "0.02".into()),
        ],
        Scenario::Custom => Vec::new(),
    };
    common.into_iter().chain(specific).collect()
}

/// Raw `key = value` pairs after merging scenario defaults with the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawConfig {
    pub scenario: Scenario,
    pub values: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut file = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {line:?}", k + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::Config(format!("line {}: unknown key {key:?}", k + 1)));
            }
            if file.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key {key:?}", k + 1)));
            }
        }
        let scenario: Scenario = file.get("scenario").ok_or_else(|| CliError::Config("missing key \"scenario\"".into()))?.parse()?;
        if scenario == Scenario::Custom {
            let missing: Vec<&str> = REQUIRED_CUSTOM.iter().copied().filter(|k| !file.contains_key(*k)).collect();
            if !missing.is_empty() {
                return Err(CliError::Config(format!("custom scenario is missing {}", missing.join(", "))));
            }
        }
        let mut values: BTreeMap<String, String> = defaults(scenario).into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        values.extend(file);
        Ok(Self { scenario, values })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    fn get(&self, key: &str) -> Result<&str, CliError> {
        self.values.get(key).map(String::as_str).ok_or_else(|| CliError::Config(format!("missing key {key:?}")))
    }

    fn num<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.get(key)?;
        v.parse().map_err(|_| CliError::Config(format!("{key} = {v:?} is not a valid number")))
    }

    fn opt_num<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key).map(String::as_str) {
            None | Some("auto") => Ok(None),
            Some(_) => self.num(key).map(Some),
        }
    }

    /// Merged configuration in file form; parsing it again gives the same run.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let grid = make_grid(
            self.num("n_q")?,
            self.num("n_p")?,
            (self.num("q_min")?, self.num("q_max")?),
            (self.num("p_min")?, self.num("p_max")?),
            self.num("hbar")?,
        )?;
        let coeffs = self
            .get("potential")?
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad potential coefficient {c:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mass: f64 = self.num("mass")?;
        let hamiltonian = HamiltonianSpec::new(mass, PolynomialSymbol::potential(&coeffs)?)?;
        let decoherence = match self.num::<f64>("D")? {
            d if d > 0.0 => DecoherenceSpec::with_rate(d)?,
            0.0 => DecoherenceSpec::none(),
            d => return Err(CliError::Config(format!("D must be non-negative, got {d}"))),
        };
        let state = match self.get("state")? {
            "coherent" => StateSpec::Coherent { q0: self.num("q0")?, p0: self.num("p0")?, sigma: self.num("sigma")? },
            "cat" => StateSpec::Cat { offset: self.num("offset")?, sigma: self.num("sigma")?, sign: self.num("sign")? },
            "cat-mixture" => StateSpec::CatMixture { offset: self.num("offset")?, sigma: self.num("sigma")? },
            "gaussian" => StateSpec::Gaussian {
                q0: self.num("q0")?,
                p0: self.num("p0")?,
                sigma_q: self.num("sigma_q")?,
                sigma_p: self.num("sigma_p")?,
            },
            "oscillator" => StateSpec::Oscillator { n: self.num("n")?, omega: self.num("omega")? },
            other => return Err(CliError::Config(format!("unknown state {other:?} (coherent, cat, cat-mixture, gaussian, oscillator)"))),
        };
        let solver = match self.get("solver")? {
            "quantum" => SolverKind::Quantum,
            "classical" => SolverKind::Classical,
            other => return Err(CliError::Config(format!("unknown solver {other:?} (quantum, classical)"))),
        };
        let integrator: Integrator = self.get("integrator")?.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        let classical_scheme: ClassicalScheme = self.get("classical_scheme")?.parse().map_err(|e| CliError::Config(format!("{e}")))?;
        let t_end: f64 = self.num("t_end")?;
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(CliError::Config(format!("t_end must be non-negative, got {t_end}")));
        }
        let regions = match self.values.get("regions") {
            Some(spec) if !spec.is_empty() => parse_regions(spec)?,
            _ => Vec::new(),
        };
        Ok(RunConfig {
            grid,
            hamiltonian,
            decoherence,
            state,
            solver,
            integrator,
            classical_scheme,
            dt: self.opt_num("dt")?,
            t_end,
            stride: self.opt_num("stride")?,
            snapshot_interval: self.opt_num("snapshot_interval")?,
            regions,
            output_dir: PathBuf::from(self.get("output_dir")?),
        })
    }
}

/// `q0:q1,p0:p1; ...` in cell indices, end-exclusive.
pub fn parse_regions(spec: &str) -> Result<Vec<IndexBox>, CliError> {
    spec.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|b| {
            let bad = || CliError::Config(format!("region {b:?} is not of the form q0:q1,p0:p1"));
            let (q, p) = b.split_once(',').ok_or_else(bad)?;
            let range = |r: &str| -> Result<std::ops::Range<usize>, CliError> {
                let (a, z) = r.trim().split_once(':').ok_or_else(bad)?;
                Ok(a.trim().parse().map_err(|_| bad())?..z.trim().parse().map_err(|_| bad())?)
            };
            Ok(IndexBox::new(range(q)?, range(p)?))
        })
        .collect()
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: PhaseGrid,
    pub hamiltonian: HamiltonianSpec,
    pub decoherence: DecoherenceSpec,
    pub state: StateSpec,
    pub solver: SolverKind,
    pub integrator: Integrator,
    pub classical_scheme: ClassicalScheme,
    /// `None` picks the stability limit.
    pub dt: Option<f64>,
    pub t_end: f64,
    /// `None` derives the stride from `snapshot_interval`.
    pub stride: Option<usize>,
    /// Target spacing of stored snapshots; defaults to `t_end/100`.
    pub snapshot_interval: Option<f64>,
    pub regions: Vec<IndexBox>,
    pub output_dir: PathBuf,
}

impl RunConfig {
    pub fn evolution(&self, decoherence: &DecoherenceSpec) -> Result<EvolutionConfig, CliError> {
        let limit = stability_limit(&self.grid, &self.hamiltonian, decoherence);
        let interval = self.snapshot_interval.unwrap_or(self.t_end / 100.0);
        let (dt, stride) = match (self.dt, self.stride) {
            (Some(dt), Some(stride)) => (dt, stride),
            (Some(dt), None) => (dt, ((interval / dt).round() as usize).max(1)),
            (None, Some(stride)) => (limit, stride),
            (None, None) if interval > 0.0 => {
                let stride = (interval / limit).ceil() as usize;
                (interval / stride as f64, stride)
            }
            (None, None) => (limit, 1),
        };
        let cfg =
            EvolutionConfig::new(dt, self.t_end, stride)?.with_integrator(self.integrator).with_classical_scheme(self.classical_scheme);
        Ok(cfg)
    }
}
