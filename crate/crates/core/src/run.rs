//! Mode dispatch and artifact persistence.
//!
//! Every mode collects its artifacts in memory. At the end of the run each
//! file goes to a temporary name in the output directory and is renamed
//! into place, followed by `manifest.toml`. Artifacts produced before a
//! pipeline failure are still written, and the manifest records the error.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::estimator::{
    central_grid, estimate_lambda, kernel_estimate, quantile_grid, reconstruct_from_estimate, sample_diagnostic,
    trimmed_weight,
};
use crate::lambda::{coefficients_ab, CoefficientPair, LambdaCurve, LambdaField, WeightedLambda, B_FLOOR};
use crate::model::{CovariateLaw, TransformationModel};
use crate::montecarlo::{run as run_mc, MonteCarloPlan};
use crate::numeric::{linspace, median};
use crate::ode::{
    gronwall_suite, identifying_ivp, integrate_ivp, uniqueness_probe, GronwallSuiteReport, UniquenessReport,
};
use crate::reconstruction::{reconstruct_global, ConstraintSet, ReconstructedTransform, Reconstructor};
use crate::sample::{fmt_f64, SampleSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Default)]
struct Artifacts(Vec<Artifact>);

impl Artifacts {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.0.push(Artifact {
            name: name.to_string(),
            bytes,
        });
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.add(name, buf);
        Ok(())
    }

    fn toml<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = toml::to_string(value).map_err(|e| Error::Invalid(format!("serializing {name}: {e}")))?;
        self.add(name, text.into_bytes());
        Ok(())
    }
}

/// What a finished run left on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub dir: PathBuf,
    pub files: Vec<String>,
}

/// Validates `cfg`, runs its mode and writes the artifacts. A pipeline
/// error is returned after the partial artifacts and the manifest are on
/// disk.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mode = cfg.mode()?;
    let dir = cfg.output_dir()?;
    let mut out = Artifacts::default();
    let result = match mode {
        Mode::Oracle => oracle(cfg, &mut out),
        Mode::Simulate => simulate(cfg, &mut out),
        Mode::Estimate => estimate(cfg, &mut out),
        Mode::Verify => verify(cfg, &mut out),
        Mode::Mc => monte_carlo(cfg, &mut out),
    };
    let mut files: Vec<String> = out.0.iter().map(|a| a.name.clone()).collect();
    files.push("manifest.toml".into());
    let manifest = manifest(cfg, &files, result.as_ref().err())?;
    out.add("manifest.toml", manifest.into_bytes());
    write_atomically(&dir, &out.0)?;
    result.map(|()| RunReport { dir, files })
}

fn manifest(cfg: &RunConfig, files: &[String], error: Option<&Error>) -> Result<String> {
    let mut run = toml::Table::new();
    run.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    run.insert("mode".into(), cfg.mode()?.name().into());
    run.insert("seed".into(), toml::Value::Integer(cfg.seed as i64));
    run.insert("status".into(), if error.is_some() { "failed" } else { "ok" }.into());
    run.insert(
        "exit_code".into(),
        toml::Value::Integer(error.map_or(0, |e| e.class().exit_code()) as i64),
    );
    if let Some(e) = error {
        run.insert("error".into(), e.to_string().into());
    }
    run.insert(
        "files".into(),
        toml::Value::Array(files.iter().map(|f| f.as_str().into()).collect()),
    );
    let mut doc = toml::Table::new();
    doc.insert("run".into(), toml::Value::Table(run));
    doc.insert(
        "config".into(),
        toml::Value::try_from(cfg).map_err(|e| Error::Invalid(format!("config echo: {e}")))?,
    );
    Ok(toml::to_string(&doc).expect("manifest serializes"))
}

/// Writes each file under a temporary name, then renames it into place.
pub fn write_atomically(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for a in artifacts {
        let tmp = dir.join(format!(".{}.tmp-{}", a.name, std::process::id()));
        let dst = dir.join(&a.name);
        std::fs::write(&tmp, &a.bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))?;
    }
    Ok(())
}

fn model(cfg: &RunConfig) -> Result<TransformationModel> {
    let name = cfg
        .model
        .as_deref()
        .ok_or_else(|| Error::Config("`model` is required".into()))?;
    TransformationModel::registered(name)
}

/// Oracle `λ`, its tabulation and the oracle coefficients.
struct OracleSetup<'a> {
    curve: WeightedLambda<'a, TransformationModel>,
    field: LambdaField,
    coef: CoefficientPair,
}

fn oracle_setup<'a>(
    cfg: &RunConfig,
    model: &'a TransformationModel,
    weight: &'a crate::weight::WeightFunction,
) -> Result<OracleSetup<'a>> {
    let coef = coefficients_ab(model, weight, cfg.lambda.quad_tol)?;
    if !(coef.b.abs() >= B_FLOOR) {
        return Err(Error::Homoscedastic {
            b: coef.b,
            floor: B_FLOOR,
        });
    }
    let curve = WeightedLambda::new(model, weight, cfg.lambda.quad_tol)?;
    let grid = linspace(cfg.lambda.lo, cfg.lambda.hi, cfg.lambda.points);
    let mut field = LambdaField::build(&curve, grid, cfg.lambda.quad_tol, cfg.lambda.b_step)?;
    field.coefficients = Some(coef);
    Ok(OracleSetup { curve, field, coef })
}

fn default_constraints(y0: f64, coef: &CoefficientPair) -> ConstraintSet {
    ConstraintSet::Canonical {
        y1: y0 + 1.0,
        alpha: coef.location() + 1.0,
    }
}

fn recon_grid(cfg: &RunConfig, y0: f64) -> Vec<f64> {
    let lo = cfg.grid.lo.unwrap_or(y0 - cfg.grid.half_width);
    let hi = cfg.grid.hi.unwrap_or(y0 + cfg.grid.half_width);
    linspace(lo, hi, cfg.grid.points)
}

/// True `h` mapped to the normalization of `t`: `−A/B` at `y₀`, `α` at `y₁`.
pub fn normalized_true_h<'a>(model: &'a TransformationModel, t: &ReconstructedTransform) -> impl Fn(f64) -> f64 + 'a {
    let loc = -t.a / t.b;
    let (h0, h1) = (model.h.eval(t.y0), model.h.eval(t.y1));
    let alpha = t.alpha;
    move |y| loc + (alpha - loc) * (model.h.eval(y) - h0) / (h1 - h0)
}

#[derive(Serialize)]
struct OracleMeta {
    model: String,
    lambda: crate::lambda::LambdaMeta,
    reconstruction: crate::reconstruction::ReconstructionMeta,
    /// Sup distance to the equally normalized true `h` outside the band.
    sup_error_vs_truth: f64,
}

fn oracle(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let model = model(cfg)?;
    let weight = model.default_weight();
    let setup = oracle_setup(cfg, &model, &weight)?;
    out.csv("lambda.csv", |b| setup.field.write_csv(b))?;
    let y0 = setup.field.y0;
    let grid = recon_grid(cfg, y0);
    let constraints = cfg.constraints.unwrap_or_else(|| default_constraints(y0, &setup.coef));
    let t = reconstruct_global(
        &setup.curve,
        setup.coef,
        y0,
        constraints,
        &grid,
        cfg.reconstruction.options(),
    )?;
    out.csv("reconstruction.csv", |b| t.write_csv(b))?;
    out.csv("plot.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["y", "h", "lambda", "residual", "interpolated_flag"])?;
        for i in 0..t.grid.len() {
            w.write_record([
                fmt_f64(t.grid[i]),
                fmt_f64(t.values[i]),
                fmt_f64(setup.curve.eval(t.grid[i])?),
                fmt_f64(t.residuals[i]),
                u8::from(t.interpolated[i]).to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("plot.csv", e))?;
        Ok(())
    })?;
    let meta = OracleMeta {
        model: model.name.clone(),
        lambda: setup.field.metadata(),
        reconstruction: t.metadata(),
        sup_error_vs_truth: t.sup_error(normalized_true_h(&model, &t)),
    };
    out.toml("metadata.toml", &meta)
}

fn simulate(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let model = model(cfg)?;
    let samples = model.simulate(cfg.n, cfg.seed, &CovariateLaw::on_weight(&model.default_weight()))?;
    out.csv("samples.csv", |b| samples.write_csv(b))
}

#[derive(Serialize)]
struct EstimateMeta {
    n: usize,
    kernel: crate::estimator::KernelConfig,
    lambda: crate::lambda::LambdaMeta,
    reconstruction: crate::reconstruction::ReconstructionMeta,
    repair_rate: f64,
}

fn estimate(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let path = cfg.input.as_deref().expect("validated");
    let samples = SampleSet::read_csv_path(path)?;
    let opts = cfg.kernel.options(&cfg.reconstruction)?;
    let diagnostic = sample_diagnostic(&samples, &opts)?;
    out.toml("diagnostic.toml", &diagnostic)?;
    let kernel = kernel_estimate(&samples, &opts)?;
    let weight = trimmed_weight(&samples, opts.weight_quantiles, opts.coord)?;
    let ys = quantile_grid(&samples, opts.lambda_quantiles, opts.lambda_points);
    let lambda = estimate_lambda(&kernel, &weight, &ys)?;
    out.csv("lambda_hat.csv", |b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(["y", "lambda", "std_error"])?;
        for ((y, v), e) in lambda.field.grid.iter().zip(&lambda.field.values).zip(&lambda.errors) {
            w.write_record([fmt_f64(*y), fmt_f64(*v), fmt_f64(*e)])?;
        }
        w.flush().map_err(|e| Error::io("lambda_hat.csv", e))?;
        Ok(())
    })?;
    let grid = central_grid(&samples, &lambda, &opts);
    let y1 = opts
        .y1
        .unwrap_or_else(|| median(samples.y()).expect("non-empty sample"));
    let t = reconstruct_from_estimate(&lambda, &grid, y1, opts.alpha, opts.reconstruction)?;
    out.csv("h_hat.csv", |b| t.write_csv(b))?;
    let meta = EstimateMeta {
        n: samples.n(),
        kernel: kernel.config().clone(),
        lambda: lambda.field.metadata(),
        reconstruction: t.metadata(),
        repair_rate: t.repair_rate(),
    };
    out.toml("metadata.toml", &meta)
}

#[derive(Debug, Clone, Serialize)]
pub struct IvpCheck {
    pub a: f64,
    pub b: f64,
    pub steps: usize,
    pub max_error: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub model: String,
    pub ivp: IvpCheck,
    pub uniqueness: UniquenessReport,
    pub gronwall: GronwallSuiteReport,
    pub passed: bool,
}

/// Closed form against the integrated ODE above `y₀`, the uniqueness
/// probe on the same problem, and the random Gronwall suite.
pub fn verify_model(cfg: &RunConfig, model: &TransformationModel) -> Result<VerifyReport> {
    let weight = model.default_weight();
    let setup = oracle_setup(cfg, model, &weight)?;
    let y0 = setup.field.y0;
    let hw = cfg.grid.half_width;
    let (a, b) = (y0 + cfg.verify.ivp_offset * hw, y0 + hw);
    // The same λ with h(y₀) = 0, so that h stays positive above y₀.
    let coef = CoefficientPair {
        a: 0.0,
        b: setup.coef.b,
    };
    let closed = Reconstructor::new(
        &setup.curve,
        coef,
        y0,
        cfg.constraints.unwrap_or_else(|| default_constraints(y0, &coef)),
        (y0 - hw, y0 + hw),
        cfg.reconstruction.options(),
    )?;
    let spec = identifying_ivp(&setup.curve, coef, y0, a, b, closed.eval(a)?)?;
    let sol = integrate_ivp(&spec, cfg.verify.ivp_steps)?;
    let exact = closed.eval_many(&sol.grid)?;
    let max_error = sol
        .values
        .iter()
        .zip(&exact)
        .fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
    let uniqueness = uniqueness_probe(&spec, cfg.verify.ivp_steps)?;
    let gronwall = gronwall_suite(cfg.verify.gronwall_instances, cfg.seed, cfg.verify.gronwall_points)?;
    let passed = max_error <= cfg.verify.ivp_tol && uniqueness.consistent && gronwall.passed();
    Ok(VerifyReport {
        model: model.name.clone(),
        ivp: IvpCheck {
            a,
            b,
            steps: cfg.verify.ivp_steps,
            max_error,
            tol: cfg.verify.ivp_tol,
        },
        uniqueness,
        gronwall,
        passed,
    })
}

fn verify(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let report = verify_model(cfg, &model(cfg)?)?;
    out.toml("verify.toml", &report)?;
    if !report.passed {
        return Err(Error::Verification(format!(
            "ivp error {:.3e} (tol {:.1e}), uniqueness consistent: {}, gronwall violations: {}",
            report.ivp.max_error, report.ivp.tol, report.uniqueness.consistent, report.gronwall.violations
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct McMeta {
    model: String,
    converging: bool,
    summary: Vec<crate::montecarlo::CellSummary>,
}

fn monte_carlo(cfg: &RunConfig, out: &mut Artifacts) -> Result<()> {
    let plan = MonteCarloPlan {
        model: model(cfg)?,
        sizes: cfg.mc.sizes.clone(),
        replications: cfg.mc.replications,
        seed_base: cfg.seed,
        metric: cfg.mc.metric,
        plugin: cfg.kernel.options(&cfg.reconstruction)?,
    };
    let report = run_mc(&plan)?;
    out.csv("results.csv", |b| report.write_results(b))?;
    out.csv("summary.csv", |b| report.write_summary(b))?;
    out.toml(
        "mc.toml",
        &McMeta {
            model: report.model.clone(),
            converging: report.converging(),
            summary: report.summary.clone(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str, dir: &Path) -> RunConfig {
        let text = format!("output = {:?}\n{extra}", dir.display().to_string());
        RunConfig::from_toml_str(&text, &[]).unwrap()
    }

    #[test]
    fn oracle_writes_artifacts_and_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let c = cfg("mode = \"oracle\"\nmodel = \"M1\"\ngrid.points = 101\n", tmp.path());
        let r = run(&c).unwrap();
        for f in [
            "lambda.csv",
            "reconstruction.csv",
            "plot.csv",
            "metadata.toml",
            "manifest.toml",
        ] {
            assert!(r.dir.join(f).exists(), "{f}");
            assert!(r.files.iter().any(|x| x == f));
        }
        let meta: toml::Table = std::fs::read_to_string(r.dir.join("metadata.toml"))
            .unwrap()
            .parse()
            .unwrap();
        assert!(meta["sup_error_vs_truth"].as_float().unwrap() < 1e-6);
        let man: toml::Table = std::fs::read_to_string(r.dir.join("manifest.toml"))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(man["run"]["status"].as_str(), Some("ok"));
        let echo: RunConfig = man["config"].clone().try_into().unwrap();
        assert_eq!(echo, c);
        let leftovers = std::fs::read_dir(&r.dir)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.'))
            .count();
        assert_eq!(leftovers, 0);
    }

    #[test]
    fn failed_run_still_writes_manifest() {
        let tmp = tempfile::tempdir().unwrap();
        let samples = tmp.path().join("m2.csv");
        let m2 = TransformationModel::registered("M2").unwrap();
        let s = m2
            .simulate(2000, 4, &CovariateLaw::on_weight(&m2.default_weight()))
            .unwrap();
        s.write_csv(std::fs::File::create(&samples).unwrap()).unwrap();
        let c = cfg(
            &format!("mode = \"estimate\"\ninput = {:?}\n", samples.display().to_string()),
            &tmp.path().join("est"),
        );
        let e = run(&c).unwrap_err();
        assert_eq!(e.class().exit_code(), 3, "{e}");
        let dir = tmp.path().join("est");
        assert!(dir.join("diagnostic.toml").exists());
        let man: toml::Table = std::fs::read_to_string(dir.join("manifest.toml"))
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(man["run"]["exit_code"].as_integer(), Some(3));
    }
}
