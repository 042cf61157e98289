//! Run configuration: a TOML document with dotted keys, e.g.
//!
//! ```toml
//! mode = "oracle"
//! model = "M1"
//! grid.points = 401
//! reconstruction.excision = 1e-3
//! ```
//!
//! Unknown keys are rejected. Command-line overrides are applied to the
//! parsed document before validation, one key at a time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{KernelConfig, PluginOptions};
use crate::montecarlo::Metric;
use crate::reconstruction::{ConstraintSet, LimitOptions, ReconstructionOptions};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "TRANSFORM_IDENT_OUTPUT";
const DEFAULT_OUTPUT_ROOT: &str = "runs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Oracle,
    Simulate,
    Estimate,
    Verify,
    Mc,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Oracle => "oracle",
            Mode::Simulate => "simulate",
            Mode::Estimate => "estimate",
            Mode::Verify => "verify",
            Mode::Mc => "mc",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Explicit bounds; by default the grid is centred on `y₀`.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            lo: None,
            hi: None,
            half_width: 1.5,
            points: 401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaConfig {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub quad_tol: f64,
    pub b_step: f64,
}

impl Default for LambdaConfig {
    fn default() -> Self {
        Self {
            lo: -3.0,
            hi: 3.0,
            points: 121,
            quad_tol: 1e-11,
            b_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructionConfig {
    /// Excision half-width as a fraction of the grid range.
    pub excision: f64,
    pub quad_tol: f64,
    pub y2: Option<f64>,
    pub repair: bool,
    pub limit_halvings: usize,
    pub limit_tol: f64,
    pub limit_t0: f64,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        let d = ReconstructionOptions::default();
        Self {
            excision: d.excision_fraction,
            quad_tol: d.quad_tol,
            y2: None,
            repair: false,
            limit_halvings: d.limit.halvings,
            limit_tol: d.limit.rel_tol,
            limit_t0: d.limit.t0_fraction,
        }
    }
}

impl ReconstructionConfig {
    pub fn options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            excision_fraction: self.excision,
            quad_tol: self.quad_tol,
            y2: self.y2,
            repair: self.repair,
            limit: LimitOptions {
                t0_fraction: self.limit_t0,
                halvings: self.limit_halvings,
                rel_tol: self.limit_tol,
            },
            ..ReconstructionOptions::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    pub c_x: f64,
    pub c_y: f64,
    pub bandwidth_x: Option<Vec<f64>>,
    pub bandwidth_y: Option<f64>,
    pub ess_floor: f64,
    pub coord: usize,
    pub weight_quantiles: [f64; 2],
    pub lambda_quantiles: [f64; 2],
    pub lambda_points: usize,
    pub diagnostic_quantiles: [f64; 2],
    pub central_quantiles: [f64; 2],
    pub root_margin: f64,
    pub grid_points: usize,
    pub y1: Option<f64>,
    pub alpha: f64,
}

impl Default for KernelSection {
    fn default() -> Self {
        let d = PluginOptions::default();
        Self {
            c_x: d.c_x,
            c_y: d.c_y,
            bandwidth_x: None,
            bandwidth_y: None,
            ess_floor: d.ess_floor,
            coord: d.coord,
            weight_quantiles: d.weight_quantiles.into(),
            lambda_quantiles: d.lambda_quantiles.into(),
            lambda_points: d.lambda_points,
            diagnostic_quantiles: d.diagnostic_quantiles.into(),
            central_quantiles: d.central_quantiles.into(),
            root_margin: d.root_margin,
            grid_points: d.grid_points,
            y1: d.y1,
            alpha: d.alpha,
        }
    }
}

impl KernelSection {
    pub fn options(&self, reconstruction: &ReconstructionConfig) -> Result<PluginOptions> {
        let kernel = match (&self.bandwidth_x, self.bandwidth_y) {
            (Some(bx), Some(by)) => Some(KernelConfig {
                bandwidth_x: bx.clone(),
                bandwidth_y: by,
                ess_floor: self.ess_floor,
            }),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "kernel.bandwidth_x and kernel.bandwidth_y must be given together".into(),
                ))
            }
        };
        let mut recon = reconstruction.options();
        recon.repair = true;
        Ok(PluginOptions {
            c_x: self.c_x,
            c_y: self.c_y,
            kernel,
            ess_floor: self.ess_floor,
            weight_quantiles: self.weight_quantiles.into(),
            coord: self.coord,
            lambda_quantiles: self.lambda_quantiles.into(),
            lambda_points: self.lambda_points,
            diagnostic_quantiles: self.diagnostic_quantiles.into(),
            central_quantiles: self.central_quantiles.into(),
            root_margin: self.root_margin,
            grid_points: self.grid_points,
            y1: self.y1,
            alpha: self.alpha,
            reconstruction: recon,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub ivp_steps: usize,
    /// The comparison interval starts this share of `half_width` above `y₀`.
    pub ivp_offset: f64,
    pub ivp_tol: f64,
    pub gronwall_instances: usize,
    pub gronwall_points: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            ivp_steps: 2000,
            ivp_offset: 0.05,
            ivp_tol: 1e-6,
            gronwall_instances: 1000,
            gronwall_points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub metric: Metric,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            sizes: vec![500, 2000, 8000],
            replications: 50,
            metric: Metric::Sup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    /// Registered model name.
    pub model: Option<String>,
    /// Sample CSV for `estimate`.
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    /// Sample size for `simulate`.
    pub n: usize,
    pub constraints: Option<ConstraintSet>,
    pub grid: GridConfig,
    pub lambda: LambdaConfig,
    pub reconstruction: ReconstructionConfig,
    pub kernel: KernelSection,
    pub verify: VerifyConfig,
    pub mc: McConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: None,
            model: None,
            input: None,
            output: None,
            seed: 0,
            n: 1000,
            constraints: None,
            grid: GridConfig::default(),
            lambda: LambdaConfig::default(),
            reconstruction: ReconstructionConfig::default(),
            kernel: KernelSection::default(),
            verify: VerifyConfig::default(),
            mc: McConfig::default(),
        }
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Sets `path` (dotted) in `table`, creating intermediate tables.
pub fn set_key(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed key {path:?}")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("key {p:?} in {path:?} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses a document, applies `key=value` overrides and validates.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {e}")))?;
        for (k, v) in overrides {
            set_key(&mut table, k, parse_value(v))?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| Error::Config("mode is required".into()))
    }

    /// Explicit output directory, else `$TRANSFORM_IDENT_OUTPUT/<mode>`,
    /// else `runs/<mode>`.
    pub fn output_dir(&self) -> Result<PathBuf> {
        if let Some(p) = &self.output {
            return Ok(p.clone());
        }
        let root = std::env::var_os(OUTPUT_ROOT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
        Ok(root.join(self.mode()?.name()))
    }

    /// Mode-specific required fields and positivity of every tolerance.
    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        let need_model = matches!(mode, Mode::Oracle | Mode::Simulate | Mode::Verify | Mode::Mc);
        if need_model && self.model.is_none() {
            return Err(Error::Config(format!("mode {} needs `model`", mode.name())));
        }
        if mode == Mode::Estimate && self.input.is_none() {
            return Err(Error::Config("mode estimate needs `input` (a sample CSV)".into()));
        }
        let positive = [
            ("lambda.quad_tol", self.lambda.quad_tol),
            ("lambda.b_step", self.lambda.b_step),
            ("reconstruction.excision", self.reconstruction.excision),
            ("reconstruction.quad_tol", self.reconstruction.quad_tol),
            ("reconstruction.limit_tol", self.reconstruction.limit_tol),
            ("reconstruction.limit_t0", self.reconstruction.limit_t0),
            ("grid.half_width", self.grid.half_width),
            ("verify.ivp_tol", self.verify.ivp_tol),
            ("verify.ivp_offset", self.verify.ivp_offset),
            ("kernel.c_x", self.kernel.c_x),
            ("kernel.c_y", self.kernel.c_y),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive (got {v})")));
            }
        }
        if self.grid.points < 3 || self.lambda.points < 8 {
            return Err(Error::Config("grid.points must be >= 3 and lambda.points >= 8".into()));
        }
        if !(self.lambda.lo < self.lambda.hi) {
            return Err(Error::Config("lambda.lo must be below lambda.hi".into()));
        }
        if let (Some(lo), Some(hi)) = (self.grid.lo, self.grid.hi) {
            if !(lo < hi) {
                return Err(Error::Config("grid.lo must be below grid.hi".into()));
            }
        }
        for (k, q) in [
            ("kernel.weight_quantiles", self.kernel.weight_quantiles),
            ("kernel.lambda_quantiles", self.kernel.lambda_quantiles),
            ("kernel.diagnostic_quantiles", self.kernel.diagnostic_quantiles),
            ("kernel.central_quantiles", self.kernel.central_quantiles),
        ] {
            if !(0.0 <= q[0] && q[0] < q[1] && q[1] <= 1.0) {
                return Err(Error::Config(format!("{k} must satisfy 0 <= lo < hi <= 1")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(k: &str, v: &str) -> (String, String) {
        (k.into(), v.into())
    }

    #[test]
    fn dotted_keys_and_defaults() {
        let c = RunConfig::from_toml_str(
            "mode = \"oracle\"\nmodel = \"M1\"\ngrid.points = 101\nreconstruction.excision = 2e-3\n",
            &[],
        )
        .unwrap();
        assert_eq!(c.mode, Some(Mode::Oracle));
        assert_eq!(c.grid.points, 101);
        assert_eq!(c.reconstruction.excision, 2e-3);
        assert_eq!(c.lambda, LambdaConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn overrides_win() {
        let c = RunConfig::from_toml_str(
            "mode = \"oracle\"\nmodel = \"M1\"\nseed = 3\n",
            &[
                ov("seed", "9"),
                ov("model", "M3"),
                ov("kernel.central_quantiles", "[0.2, 0.8]"),
            ],
        )
        .unwrap();
        assert_eq!((c.seed, c.model.as_deref()), (9, Some("M3")));
        assert_eq!(c.kernel.central_quantiles, [0.2, 0.8]);
    }

    #[test]
    fn constraints_table() {
        let c = RunConfig::from_toml_str(
            "constraints.kind = \"two-point\"\nconstraints.ya = -1.0\nconstraints.yb = 1.0\n\
             constraints.alpha_a = 0.0\nconstraints.alpha_b = 2.0\n",
            &[],
        )
        .unwrap();
        assert_eq!(
            c.constraints,
            Some(ConstraintSet::TwoPoint {
                ya: -1.0,
                yb: 1.0,
                alpha_a: 0.0,
                alpha_b: 2.0
            })
        );
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = RunConfig::from_toml_str("grid.pionts = 3\n", &[]).unwrap_err();
        assert!(e.to_string().contains("pionts"), "{e}");
        let e = RunConfig::from_toml_str("seed = \"x\"\n", &[]).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let e = RunConfig::from_toml_str("mode = \"oracle\"\n", &[])
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(e.to_string().contains("model"));
        let e = RunConfig::from_toml_str("mode = \"estimate\"\n", &[])
            .unwrap()
            .validate()
            .unwrap_err();
        assert!(e.to_string().contains("input"));
        let c = RunConfig::from_toml_str("mode = \"verify\"\nmodel = \"M1\"\nverify.ivp_tol = 0\n", &[]).unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("verify.ivp_tol"));
    }

    #[test]
    fn round_trips_through_toml() {
        let c = RunConfig {
            mode: Some(Mode::Mc),
            model: Some("M1".into()),
            constraints: Some(ConstraintSet::Canonical { y1: 0.5, alpha: 1.0 }),
            ..Default::default()
        };
        let back = RunConfig::from_toml_str(&c.to_toml(), &[]).unwrap();
        assert_eq!(back, c);
    }
}
