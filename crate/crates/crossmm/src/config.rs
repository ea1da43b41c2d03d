//! Run configuration: a sectioned TOML file with one block per security.
//!
//! ```toml
//! [model]
//! phi = 0.9            # two-security shortcut; or table = [..] (2^n masses)
//!
//! [security.0]
//! p = 50.0
//! r = 1.0
//! gamma = 0.5          # base mode
//!
//! [security.1]
//! p = 50.0
//! r = 1.0
//! gamma = 0.5
//!
//! [extended]           # optional; presence switches to extended mode
//! delta = 0.5          # scalar or one value per security
//! curve = "linear"
//! curve_intercept = 1.0
//! curve_slope = 0.5
//!
//! [run]
//! rounds = 1000000
//! seed = 0
//! workers = 1
//! with_amm = true
//! variant = "paper"    # or "renormalized"
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analytics::{solve_equilibrium, EquilibriumOptions, EquilibriumState, GammaVariant};
use crate::error::{Error, Result};
use crate::model::{
    ExtendedSecurityParams, JointValueModel, MarketSecurity, Mode, ParticipationCurve,
    SecurityParams,
};
use crate::sim::SimulationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecuritySection {
    pub p: f64,
    pub r: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

/// A per-security value that may be written once and applied to all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerSecurity {
    Scalar(f64),
    Each(Vec<f64>),
}

impl PerSecurity {
    /// Like [`get`](Self::get) but silent about shape problems.
    pub fn get_checked(&self, i: usize, n: usize) -> Option<f64> {
        match self {
            PerSecurity::Scalar(v) => Some(*v),
            PerSecurity::Each(vs) if vs.len() == n => Some(vs[i]),
            _ => None,
        }
    }

    fn get(&self, i: usize, n: usize, key: &str) -> Result<f64> {
        match self {
            PerSecurity::Scalar(v) => Ok(*v),
            PerSecurity::Each(vs) => {
                if vs.len() != n {
                    return Err(Error::config(format!(
                        "extended.{key} has {} entries, expected {n}",
                        vs.len()
                    )));
                }
                Ok(vs[i])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Linear,
    Logistic,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtendedSection {
    pub delta: PerSecurity,
    pub curve: CurveKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_intercept: Option<PerSecurity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_slope: Option<PerSecurity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_midpoint: Option<PerSecurity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve_pi: Option<PerSecurity>,
}

fn default_rounds() -> u64 {
    1_000_000
}

fn default_workers() -> usize {
    1
}

fn default_with_amm() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_with_amm")]
    pub with_amm: bool,
    #[serde(default)]
    pub variant: GammaVariant,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            rounds: default_rounds(),
            seed: 0,
            workers: default_workers(),
            with_amm: default_with_amm(),
            variant: GammaVariant::default(),
        }
    }
}

/// A parsed and validated configuration. Serializes back to the same TOML
/// (and to JSON inside reports) without loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub model: ModelSection,
    pub security: BTreeMap<String, SecuritySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extended: Option<ExtendedSection>,
    #[serde(default)]
    pub run: RunSection,
}

impl ResolvedConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ResolvedConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The worked two-security example configuration.
    pub fn paper_example() -> Self {
        let sec = SecuritySection { p: 50.0, r: 1.0, gamma: Some(0.5) };
        let mut security = BTreeMap::new();
        security.insert("0".to_string(), sec.clone());
        security.insert("1".to_string(), sec);
        Self {
            model: ModelSection { n: Some(2), phi: Some(0.9), table: None },
            security,
            extended: None,
            run: RunSection::default(),
        }
    }

    pub fn n(&self) -> usize {
        match (&self.model.phi, &self.model.table) {
            (Some(_), _) => 2,
            (None, Some(table)) => table.len().trailing_zeros() as usize,
            (None, None) => 0,
        }
    }

    pub fn mode(&self) -> Mode {
        if self.extended.is_some() {
            Mode::Extended
        } else {
            Mode::Base
        }
    }

    fn validate(&self) -> Result<()> {
        match (&self.model.phi, &self.model.table) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "model: set exactly one of phi or table, not both".to_string(),
                ))
            }
            (None, None) => {
                return Err(Error::config("model: one of phi or table is required".to_string()))
            }
            _ => {}
        }
        let model = self.build_model()?;
        let n = model.n();
        if let Some(declared) = self.model.n {
            if declared != n {
                return Err(Error::config(format!(
                    "model.n = {declared} does not match the implied {n} securities"
                )));
            }
        }
        let violations = model.validate();
        if !violations.is_empty() {
            return Err(Error::config(format!("model.table: {}", violations[0])));
        }
        for i in 0..n {
            let key = i.to_string();
            let sec = self
                .security
                .get(&key)
                .ok_or_else(|| Error::config(format!("missing section [security.{i}]")))?;
            if !(sec.r > 0.0 && sec.r.is_finite()) {
                return Err(Error::config(format!("security.{i}.r must be > 0, got {}", sec.r)));
            }
            if !sec.p.is_finite() {
                return Err(Error::config(format!("security.{i}.p must be finite")));
            }
        }
        for key in self.security.keys() {
            let ok = key.parse::<usize>().map(|i| i < n).unwrap_or(false);
            if !ok {
                return Err(Error::config(format!(
                    "unexpected section [security.{key}] for an {n}-security model"
                )));
            }
        }
        match &self.extended {
            None => {
                for i in 0..n {
                    let sec = &self.security[&i.to_string()];
                    let gamma = sec.gamma.ok_or_else(|| {
                        Error::config(format!("security.{i}.gamma is required in base mode"))
                    })?;
                    SecurityParams::new(i, sec.p, sec.r, gamma)
                        .map_err(|e| Error::config(format!("security.{i}: {e}")))?;
                }
            }
            Some(_) => {
                self.extended_params()?;
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<JointValueModel> {
        match (&self.model.phi, &self.model.table) {
            (Some(phi), None) => JointValueModel::two_security(*phi)
                .map_err(|e| Error::config(format!("model.phi: {e}"))),
            (None, Some(table)) => JointValueModel::from_table(table.clone())
                .map_err(|e| Error::config(format!("model.table: {e}"))),
            _ => Err(Error::config("model: one of phi or table is required".to_string())),
        }
    }

    pub fn base_params(&self) -> Result<Vec<SecurityParams>> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let sec = &self.security[&i.to_string()];
                let gamma = sec.gamma.ok_or_else(|| {
                    Error::config(format!("security.{i}.gamma is required in base mode"))
                })?;
                SecurityParams::new(i, sec.p, sec.r, gamma)
                    .map_err(|e| Error::config(format!("security.{i}: {e}")))
            })
            .collect()
    }

    pub fn extended_params(&self) -> Result<Vec<ExtendedSecurityParams>> {
        let ext = self
            .extended
            .as_ref()
            .ok_or_else(|| Error::config("[extended] section is required".to_string()))?;
        let n = self.n();
        (0..n)
            .map(|i| {
                let sec = &self.security[&i.to_string()];
                let delta = ext.delta.get(i, n, "delta")?;
                let need = |field: &Option<PerSecurity>, key: &str| -> Result<f64> {
                    field
                        .as_ref()
                        .ok_or_else(|| {
                            Error::config(format!(
                                "extended.{key} is required for curve = \"{:?}\"",
                                ext.curve
                            ))
                        })?
                        .get(i, n, key)
                };
                let curve = match ext.curve {
                    CurveKind::Linear => ParticipationCurve::Linear {
                        intercept: match &ext.curve_intercept {
                            Some(v) => v.get(i, n, "curve_intercept")?,
                            None => 1.0,
                        },
                        slope: need(&ext.curve_slope, "curve_slope")?,
                    },
                    CurveKind::Logistic => ParticipationCurve::Logistic {
                        midpoint: need(&ext.curve_midpoint, "curve_midpoint")?,
                        slope: need(&ext.curve_slope, "curve_slope")?,
                    },
                    CurveKind::Constant => ParticipationCurve::Constant {
                        pi: need(&ext.curve_pi, "curve_pi")?,
                    },
                };
                ExtendedSecurityParams::new(i, sec.p, sec.r, delta, curve)
                    .map_err(|e| Error::config(format!("security.{i} / extended: {e}")))
            })
            .collect()
    }

    /// Materializes the market for one pricing regime: in extended mode the
    /// participation equilibrium for that regime is solved first.
    pub fn market(&self, with_amm: bool) -> Result<ResolvedMarket> {
        let model = self.build_model()?;
        match self.mode() {
            Mode::Base => {
                let securities: Vec<MarketSecurity> =
                    self.base_params()?.iter().map(MarketSecurity::base).collect();
                Ok(ResolvedMarket { model, securities, mode: Mode::Base, equilibrium: None })
            }
            Mode::Extended => {
                let params = self.extended_params()?;
                let eq = solve_equilibrium(
                    &params,
                    &model,
                    EquilibriumOptions::new(with_amm, self.run.variant),
                )?;
                let securities = params
                    .iter()
                    .enumerate()
                    .map(|(i, xp)| MarketSecurity::extended(xp, eq.pi[i], eq.gamma[i]))
                    .collect();
                Ok(ResolvedMarket {
                    model,
                    securities,
                    mode: Mode::Extended,
                    equilibrium: Some(eq),
                })
            }
        }
    }

    pub fn simulation_config(&self, with_amm: bool) -> Result<(SimulationConfig, ResolvedMarket)> {
        let market = self.market(with_amm)?;
        let sim = SimulationConfig {
            model: market.model.clone(),
            securities: market.securities.clone(),
            mode: market.mode,
            with_amm,
            rounds: self.run.rounds,
            master_seed: self.run.seed,
            workers: self.run.workers,
        };
        Ok((sim, market))
    }

    /// Returns a copy with one grid assignment applied. Recognized keys:
    /// `phi`, `gamma`/`gammaK`, `delta`/`deltaK`, `curve_slope[K]`,
    /// `curve_intercept[K]`, `curve_midpoint[K]`, `curve_pi[K]` (K is the
    /// 1-based security number).
    pub fn with_assignment(&self, key: &str, value: f64) -> Result<ResolvedConfig> {
        let mut cfg = self.clone();
        let n = cfg.n();
        let parse_indexed = |key: &str, base: &str| -> Result<Option<usize>> {
            let rest = &key[base.len()..];
            if rest.is_empty() {
                return Ok(None);
            }
            let k: usize = rest
                .parse()
                .map_err(|_| Error::config(format!("grid key {key}: bad security suffix")))?;
            if k == 0 || k > n {
                return Err(Error::config(format!(
                    "grid key {key}: security number must be 1..={n}"
                )));
            }
            Ok(Some(k - 1))
        };
        if key == "phi" {
            if cfg.model.phi.is_none() {
                return Err(Error::config(
                    "grid key phi requires a phi-based model".to_string(),
                ));
            }
            cfg.model.phi = Some(value);
        } else if key.starts_with("gamma") {
            let idx = parse_indexed(key, "gamma")?;
            for i in 0..n {
                if idx.is_none() || idx == Some(i) {
                    cfg.security.get_mut(&i.to_string()).expect("validated").gamma = Some(value);
                }
            }
        } else if key.starts_with("delta") {
            let idx = parse_indexed(key, "delta")?;
            let ext = cfg.extended.as_mut().ok_or_else(|| {
                Error::config(format!("grid key {key} requires an [extended] section"))
            })?;
            ext.delta = assign_per_security(Some(ext.delta.clone()), idx, value, n);
        } else if key.starts_with("curve_") {
            let ext = cfg.extended.as_mut().ok_or_else(|| {
                Error::config(format!("grid key {key} requires an [extended] section"))
            })?;
            let (base, field): (&str, &mut Option<PerSecurity>) =
                if key.starts_with("curve_slope") {
                    ("curve_slope", &mut ext.curve_slope)
                } else if key.starts_with("curve_intercept") {
                    ("curve_intercept", &mut ext.curve_intercept)
                } else if key.starts_with("curve_midpoint") {
                    ("curve_midpoint", &mut ext.curve_midpoint)
                } else if key.starts_with("curve_pi") {
                    ("curve_pi", &mut ext.curve_pi)
                } else {
                    return Err(Error::config(format!("unknown grid key: {key}")));
                };
            let idx = parse_indexed(key, base)?;
            *field = Some(assign_per_security(field.take(), idx, value, n));
        } else {
            return Err(Error::config(format!("unknown grid key: {key}")));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn assign_per_security(
    current: Option<PerSecurity>,
    idx: Option<usize>,
    value: f64,
    n: usize,
) -> PerSecurity {
    match idx {
        None => PerSecurity::Scalar(value),
        Some(i) => {
            let mut each = match current {
                Some(PerSecurity::Each(v)) if v.len() == n => v,
                Some(PerSecurity::Scalar(s)) => vec![s; n],
                _ => vec![f64::NAN; n],
            };
            each[i] = value;
            PerSecurity::Each(each)
        }
    }
}

/// A fully materialized market for one pricing regime.
#[derive(Debug, Clone)]
pub struct ResolvedMarket {
    pub model: JointValueModel,
    pub securities: Vec<MarketSecurity>,
    pub mode: Mode,
    pub equilibrium: Option<EquilibriumState>,
}

/// One sweep axis: a key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    /// Parses `key=v1,v2,v3` or `key=start:stop:step` (stop inclusive).
    pub fn parse(spec: &str) -> Result<Self> {
        let (key, rest) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(format!("grid spec '{spec}' must look like key=values")))?;
        let key = key.trim().to_string();
        let rest = rest.trim();
        let values = if rest.contains(':') {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(Error::config(format!(
                    "grid range '{rest}' must be start:stop:step"
                )));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::config(format!("grid value '{s}' is not a number")))
            };
            let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
            if !(step > 0.0) || stop < start {
                return Err(Error::config(format!(
                    "grid range '{rest}' needs step > 0 and stop >= start"
                )));
            }
            let count = ((stop - start) / step + 1.0 + 1e-9).floor() as usize;
            (0..count).map(|k| start + step * k as f64).collect()
        } else {
            rest.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::config(format!("grid value '{s}' is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?
        };
        if values.is_empty() {
            return Err(Error::config(format!("grid spec '{spec}' has no values")));
        }
        Ok(Self { key, values })
    }
}

/// Cartesian product of grid axes as (key, value) assignment lists, paired
/// with the flat grid index.
pub fn grid_points(axes: &[GridAxis]) -> Vec<(u64, Vec<(String, f64)>)> {
    if axes.is_empty() {
        return Vec::new();
    }
    let total: usize = axes.iter().map(|a| a.values.len()).product();
    let mut out = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut assignment = Vec::with_capacity(axes.len());
        for axis in axes.iter().rev() {
            let k = rem % axis.values.len();
            rem /= axis.values.len();
            assignment.push((axis.key.clone(), axis.values[k]));
        }
        assignment.reverse();
        out.push((flat as u64, assignment));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
phi = 0.9

[security.0]
p = 50.0
r = 1.0
gamma = 0.5

[security.1]
p = 50.0
r = 1.0
gamma = 0.5

[run]
rounds = 1000
seed = 42
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ResolvedConfig::parse(BASE).unwrap();
        assert_eq!(cfg.n(), 2);
        assert_eq!(cfg.mode(), Mode::Base);
        assert_eq!(cfg.run.rounds, 1000);
        assert_eq!(cfg.run.seed, 42);
        assert!(cfg.run.with_amm);

        let echoed = cfg.to_toml_string();
        let again = ResolvedConfig::parse(&echoed).unwrap();
        assert_eq!(cfg, again);

        let json = serde_json::to_string(&cfg).unwrap();
        let from_json: ResolvedConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, from_json);
    }

    #[test]
    fn paper_example_config_is_valid() {
        let cfg = ResolvedConfig::paper_example();
        cfg.validate().unwrap();
        let params = cfg.base_params().unwrap();
        assert_eq!(params[0].gamma, 0.5);
        let round_trip = ResolvedConfig::parse(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, round_trip);
    }

    #[test]
    fn table_models_parse() {
        let text = r#"
[model]
table = [0.45, 0.05, 0.05, 0.45]

[security.0]
p = 10.0
r = 2.0
gamma = 0.3

[security.1]
p = 20.0
r = 1.0
gamma = 0.7
"#;
        let cfg = ResolvedConfig::parse(text).unwrap();
        assert_eq!(cfg.n(), 2);
        let model = cfg.build_model().unwrap();
        assert!(model.validate().is_empty());
        assert!((model.conditional_plus(0, 1) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn errors_name_the_offending_key() {
        let missing = BASE.replace("[security.1]", "[security.7]");
        let err = ResolvedConfig::parse(&missing).unwrap_err().to_string();
        assert!(err.contains("security.1"), "{err}");

        let no_gamma = BASE.replace("gamma = 0.5\n\n[run]", "\n[run]");
        let err = ResolvedConfig::parse(&no_gamma).unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");

        let both = BASE.replace("phi = 0.9", "phi = 0.9\ntable = [0.25, 0.25, 0.25, 0.25]");
        let err = ResolvedConfig::parse(&both).unwrap_err().to_string();
        assert!(err.contains("phi") && err.contains("table"), "{err}");

        let bad_phi = BASE.replace("phi = 0.9", "phi = 1.9");
        let err = ResolvedConfig::parse(&bad_phi).unwrap_err().to_string();
        assert!(err.contains("phi"), "{err}");

        let unknown = BASE.replace("seed = 42", "seed = 42\nturbo = true");
        let err = ResolvedConfig::parse(&unknown).unwrap_err().to_string();
        assert!(err.contains("turbo"), "{err}");

        let bad_table = r#"
[model]
table = [0.5, 0.2, 0.2, 0.1]

[security.0]
p = 0.0
r = 1.0
gamma = 0.5

[security.1]
p = 0.0
r = 1.0
gamma = 0.5
"#;
        let err = ResolvedConfig::parse(bad_table).unwrap_err().to_string();
        assert!(err.contains("marginal"), "{err}");
    }

    const EXTENDED: &str = r#"
[model]
phi = 0.8

[security.0]
p = 50.0
r = 1.0

[security.1]
p = 50.0
r = 1.0

[extended]
delta = [0.4, 0.6]
curve = "linear"
curve_intercept = [0.95, 0.9]
curve_slope = [0.3, 0.5]

[run]
rounds = 5000
variant = "paper"
"#;

    #[test]
    fn extended_config_materializes_with_equilibrium() {
        let cfg = ResolvedConfig::parse(EXTENDED).unwrap();
        assert_eq!(cfg.mode(), Mode::Extended);
        let market = cfg.market(true).unwrap();
        let eq = market.equilibrium.unwrap();
        assert!(eq.converged);
        // frozen: paper variant, with AMM
        assert!((eq.pi[0] - 0.825_724_930_615_935_3).abs() < 1e-10);
        assert!((eq.pi[1] - 0.517_898_600_421_242_7).abs() < 1e-10);
        for (sec, pi) in market.securities.iter().zip(&eq.pi) {
            assert_eq!(sec.participation, *pi);
            assert_eq!(sec.informed, [0.4, 0.6][sec.index]);
        }
    }

    #[test]
    fn extended_requires_curve_parameters() {
        let broken = EXTENDED.replace("curve_slope = [0.3, 0.5]\n", "");
        let err = ResolvedConfig::parse(&broken).unwrap_err().to_string();
        assert!(err.contains("curve_slope"), "{err}");
    }

    #[test]
    fn grid_axis_parsing() {
        let axis = GridAxis::parse("phi=0.5:1.0:0.1").unwrap();
        assert_eq!(axis.key, "phi");
        assert_eq!(axis.values.len(), 6);
        assert!((axis.values[5] - 1.0).abs() < 1e-12);

        let axis = GridAxis::parse("gamma1 = 0.3, 0.5, 0.9").unwrap();
        assert_eq!(axis.values, vec![0.3, 0.5, 0.9]);

        assert!(GridAxis::parse("phi").is_err());
        assert!(GridAxis::parse("phi=1:0:0.1").is_err());
        assert!(GridAxis::parse("phi=a,b").is_err());
    }

    #[test]
    fn grid_assignments_apply() {
        let cfg = ResolvedConfig::parse(BASE).unwrap();
        let swept = cfg.with_assignment("phi", 0.7).unwrap();
        assert_eq!(swept.model.phi, Some(0.7));

        let swept = cfg.with_assignment("gamma1", 0.25).unwrap();
        assert_eq!(swept.security["0"].gamma, Some(0.25));
        assert_eq!(swept.security["1"].gamma, Some(0.5));

        let swept = cfg.with_assignment("gamma", 0.25).unwrap();
        assert_eq!(swept.security["0"].gamma, Some(0.25));
        assert_eq!(swept.security["1"].gamma, Some(0.25));

        assert!(cfg.with_assignment("gamma3", 0.5).is_err());
        assert!(cfg.with_assignment("volatility", 0.5).is_err());
        assert!(cfg.with_assignment("delta", 0.5).is_err());

        let ext = ResolvedConfig::parse(EXTENDED).unwrap();
        let swept = ext.with_assignment("delta2", 0.3).unwrap();
        assert_eq!(
            swept.extended.as_ref().unwrap().delta,
            PerSecurity::Each(vec![0.4, 0.3])
        );
        let swept = ext.with_assignment("curve_slope", 0.2).unwrap();
        assert_eq!(
            swept.extended.as_ref().unwrap().curve_slope,
            Some(PerSecurity::Scalar(0.2))
        );
    }

    #[test]
    fn grid_product_order_and_empty() {
        assert!(grid_points(&[]).is_empty());
        let axes = vec![
            GridAxis { key: "phi".into(), values: vec![0.6, 0.8] },
            GridAxis { key: "gamma".into(), values: vec![0.1, 0.2, 0.3] },
        ];
        let pts = grid_points(&axes);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].1, vec![("phi".to_string(), 0.6), ("gamma".to_string(), 0.1)]);
        assert_eq!(pts[5].1, vec![("phi".to_string(), 0.8), ("gamma".to_string(), 0.3)]);
        assert_eq!(pts[5].0, 5);
    }
}
