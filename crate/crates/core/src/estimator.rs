//! Plug-in estimation from samples.
//!
//! The conditional CDF is estimated by a Nadaraya–Watson average of
//! smoothed indicators,
//!
//! ```text
//! F̂(y|x) = Σ_j K_x(x − X_j) Φ((y − Y_j)/b_y) / Σ_j K_x(x − X_j),
//! ```
//!
//! with a Gaussian product kernel `K_x(u) = exp(−½ Σ_k (u_k/b_k)²)` (so
//! `K_x(0) = 1` and `Σ_j K_x` reads as an effective local sample size).
//! Both partial derivatives are analytic. `λ̂` is then integrated over the
//! weight box with a fixed product rule and handed to the closed-form
//! reconstruction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distribution::ErrorDistribution;
use crate::error::{Error, Result};
use crate::lambda::{
    find_y0_on_grid, homoscedasticity_diagnostic, lambda_tilde, tabulate_lambda_tilde, CoefficientPair,
    DiagnosticReport, LambdaCurve, LambdaField, LambdaTildeRow, TabulatedLambda, B_FLOOR,
};
use crate::model::{ConditionalCdf, TransformationModel};
use crate::numeric::quadrature::{gauss_legendre, MAX_TENSOR_DIM};
use crate::numeric::roots::RootOptions;
use crate::numeric::{linspace, median, quantile_sorted};
use crate::reconstruction::{ConstraintSet, ReconstructedTransform, ReconstructionOptions, Reconstructor};
use crate::sample::SampleSet;
use crate::weight::WeightFunction;

/// Fewest observations accepted by the estimation pipeline.
pub const MIN_ESTIMATION_SAMPLES: usize = 50;
/// Default floor on `Σ_j K_x(x − X_j)`.
pub const ESS_FLOOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidth_x: Vec<f64>,
    pub bandwidth_y: f64,
    pub ess_floor: f64,
}

impl KernelConfig {
    /// `b = c · s · n^(−1/(4+d))` per coordinate, `s` the sample standard
    /// deviation.
    pub fn rule_of_thumb(samples: &SampleSet, c_x: f64, c_y: f64) -> Result<Self> {
        let n = samples.n() as f64;
        let rate = n.powf(-1.0 / (4.0 + samples.dim() as f64));
        let cfg = Self {
            bandwidth_x: (0..samples.dim())
                .map(|k| c_x * samples.std_dev(Some(k)) * rate)
                .collect(),
            bandwidth_y: c_y * samples.std_dev(None) * rate,
            ess_floor: ESS_FLOOR,
        };
        cfg.validate(samples.dim())?;
        Ok(cfg)
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.bandwidth_x.len() != dim {
            return Err(Error::Config(format!(
                "kernel has {} covariate bandwidth(s), samples have {dim} covariate(s)",
                self.bandwidth_x.len()
            )));
        }
        if self
            .bandwidth_x
            .iter()
            .chain(std::iter::once(&self.bandwidth_y))
            .any(|b| !(*b > 0.0 && b.is_finite()))
        {
            return Err(Error::Config("all bandwidths must be positive and finite".into()));
        }
        if !(self.ess_floor >= 0.0) {
            return Err(Error::Config("effective sample size floor must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Kernel estimate of `F_{Y|X}` over a sample.
pub struct KernelCdf<'a> {
    samples: &'a SampleSet,
    cfg: KernelConfig,
    smoother: ErrorDistribution,
}

/// Kernel weights `w_j` around one covariate point and their total.
struct Local {
    w: Vec<f64>,
    total: f64,
}

impl<'a> KernelCdf<'a> {
    pub fn new(samples: &'a SampleSet, cfg: KernelConfig) -> Result<Self> {
        cfg.validate(samples.dim())?;
        Ok(Self {
            samples,
            cfg,
            smoother: ErrorDistribution::standard_normal(),
        })
    }

    pub fn config(&self) -> &KernelConfig {
        &self.cfg
    }

    fn local(&self, x: &[f64]) -> Result<Local> {
        if x.len() != self.samples.dim() {
            return Err(Error::Invalid(format!(
                "query has {} coordinate(s), samples have {}",
                x.len(),
                self.samples.dim()
            )));
        }
        let w: Vec<f64> = (0..self.samples.n())
            .map(|j| {
                let row = self.samples.row(j);
                let q: f64 = row
                    .iter()
                    .zip(x)
                    .zip(&self.cfg.bandwidth_x)
                    .map(|((xj, xk), b)| {
                        let u = (xk - xj) / b;
                        u * u
                    })
                    .sum();
                (-0.5 * q).exp()
            })
            .collect();
        let total: f64 = w.iter().sum();
        if !(total >= self.cfg.ess_floor) || total == 0.0 {
            let grow = if total > 0.0 {
                (self.cfg.ess_floor / total).powf(1.0 / x.len() as f64).max(1.1)
            } else {
                2.0
            };
            return Err(Error::Bandwidth {
                ess: total,
                floor: self.cfg.ess_floor,
                x: x.to_vec(),
                suggested: self.cfg.bandwidth_x.iter().map(|b| b * grow).collect(),
            });
        }
        Ok(Local { w, total })
    }

    fn dw(&self, local: &Local, x: &[f64], coord: usize) -> Vec<f64> {
        let b2 = self.cfg.bandwidth_x[coord] * self.cfg.bandwidth_x[coord];
        local
            .w
            .iter()
            .enumerate()
            .map(|(j, w)| -w * (x[coord] - self.samples.row(j)[coord]) / b2)
            .collect()
    }

    fn smoothed(&self, y: f64) -> (Vec<f64>, Vec<f64>) {
        let by = self.cfg.bandwidth_y;
        self.samples
            .y()
            .iter()
            .map(|yj| {
                let z = (y - yj) / by;
                (self.smoother.cdf(z), self.smoother.density(z) / by)
            })
            .unzip()
    }

    /// `λ̃̂(y|x)` for every `(x, y)` pair, with a delta-method standard
    /// error: writing `λ̃̂ = Σ α_j / Σ γ_j`, the error is
    /// `sqrt(Σ (α_j − λ̃̂ γ_j)²) / Σ γ_j`.
    pub fn lambda_tilde_rows(&self, xs: &[Vec<f64>], ys: &[f64], coord: usize) -> Result<Vec<LambdaTildeRow>> {
        if coord >= self.samples.dim() {
            return Err(Error::Index {
                index: coord,
                dim: self.samples.dim(),
            });
        }
        let smoothed: Vec<(Vec<f64>, Vec<f64>)> = ys.iter().map(|y| self.smoothed(*y)).collect();
        xs.iter()
            .map(|x| {
                let local = self.local(x)?;
                let dw = self.dw(&local, x, coord);
                let mut values = Vec::with_capacity(ys.len());
                let mut errors = Vec::with_capacity(ys.len());
                for (cdf, dens) in &smoothed {
                    let f: f64 = local.w.iter().zip(cdf).map(|(w, c)| w * c).sum::<f64>() / local.total;
                    let num: f64 = dw.iter().zip(cdf).map(|(d, c)| d * (c - f)).sum();
                    let den: f64 = local.w.iter().zip(dens).map(|(w, p)| w * p).sum();
                    let lt = lambda_tilde(num / local.total, den / local.total)?;
                    let ss: f64 = dw
                        .iter()
                        .zip(cdf)
                        .zip(local.w.iter().zip(dens))
                        .map(|((d, c), (w, p))| {
                            let psi = d * (c - f) - lt * w * p;
                            psi * psi
                        })
                        .sum();
                    values.push(lt);
                    errors.push(ss.sqrt() / den);
                }
                Ok(LambdaTildeRow {
                    x: x.clone(),
                    values,
                    errors,
                })
            })
            .collect()
    }
}

impl ConditionalCdf for KernelCdf<'_> {
    fn dim(&self) -> usize {
        self.samples.dim()
    }

    fn cdf(&self, y: f64, x: &[f64]) -> Result<f64> {
        let local = self.local(x)?;
        let by = self.cfg.bandwidth_y;
        let s: f64 = local
            .w
            .iter()
            .zip(self.samples.y())
            .map(|(w, yj)| w * self.smoother.cdf((y - yj) / by))
            .sum();
        Ok((s / local.total).clamp(0.0, 1.0))
    }

    fn partials(&self, y: f64, x: &[f64], coord: usize) -> Result<(f64, f64)> {
        if coord >= self.samples.dim() {
            return Err(Error::Index {
                index: coord,
                dim: self.samples.dim(),
            });
        }
        let local = self.local(x)?;
        let dw = self.dw(&local, x, coord);
        let (cdf, dens) = self.smoothed(y);
        let f: f64 = local.w.iter().zip(&cdf).map(|(w, c)| w * c).sum::<f64>() / local.total;
        let dx: f64 = dw.iter().zip(&cdf).map(|(d, c)| d * (c - f)).sum::<f64>() / local.total;
        let dy: f64 = local.w.iter().zip(&dens).map(|(w, p)| w * p).sum::<f64>() / local.total;
        if !(dy > crate::lambda::DENSITY_FLOOR) {
            return Err(Error::DegenerateDensity {
                value: dy,
                floor: crate::lambda::DENSITY_FLOOR,
            });
        }
        Ok((dy, dx))
    }
}

/// Sources that can tabulate `λ̃` rows on an `(x, y)` product grid.
pub trait LambdaTildeTable: Sync {
    fn dim(&self) -> usize;

    fn rows(&self, xs: &[Vec<f64>], ys: &[f64], coord: usize) -> Result<Vec<LambdaTildeRow>>;
}

impl LambdaTildeTable for TransformationModel {
    fn dim(&self) -> usize {
        TransformationModel::dim(self)
    }

    fn rows(&self, xs: &[Vec<f64>], ys: &[f64], coord: usize) -> Result<Vec<LambdaTildeRow>> {
        tabulate_lambda_tilde(self, xs, ys, coord)
    }
}

impl LambdaTildeTable for KernelCdf<'_> {
    fn dim(&self) -> usize {
        self.samples.dim()
    }

    fn rows(&self, xs: &[Vec<f64>], ys: &[f64], coord: usize) -> Result<Vec<LambdaTildeRow>> {
        self.lambda_tilde_rows(xs, ys, coord)
    }
}

/// Fixed product rule on the weight box: Gauss–Legendre up to three axes,
/// seeded uniform points beyond. Node weights include the weight density.
pub fn covariate_rule(weight: &WeightFunction) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = weight.dim();
    let dens = weight.density();
    if d > MAX_TENSOR_DIM {
        let m = 512;
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b0c_5eed);
        let nodes: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                (0..d)
                    .map(|k| rng.gen_range(weight.lower()[k]..weight.upper()[k]))
                    .collect()
            })
            .collect();
        let wt = weight.mass() / m as f64;
        return (nodes, vec![wt; m]);
    }
    let per_axis = [40, 16, 8][d - 1];
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|k| gauss_legendre(per_axis, weight.lower()[k], weight.upper()[k]))
        .collect();
    let mut nodes = vec![Vec::new()];
    let mut wts = vec![dens];
    for (x, w) in &axes {
        let mut n2 = Vec::with_capacity(nodes.len() * x.len());
        let mut w2 = Vec::with_capacity(nodes.len() * x.len());
        for (p, pw) in nodes.iter().zip(&wts) {
            for (xi, wi) in x.iter().zip(w) {
                let mut q = p.clone();
                q.push(*xi);
                n2.push(q);
                w2.push(pw * wi);
            }
        }
        nodes = n2;
        wts = w2;
    }
    (nodes, wts)
}

/// `λ̂` on a grid together with its root, slope and pointwise errors.
#[derive(Debug, Clone)]
pub struct LambdaEstimate {
    pub field: LambdaField,
    /// Propagated standard errors of `λ̂` per grid point.
    pub errors: Vec<f64>,
    pub curve: TabulatedLambda,
    pub weight: WeightFunction,
}

impl LambdaEstimate {
    pub fn coefficients(&self) -> CoefficientPair {
        CoefficientPair {
            a: 0.0,
            b: self.field.b,
        }
    }
}

/// Grid spacings used for the centred difference behind `B̂`.
pub const B_STEP_SPACINGS: f64 = 5.0;

/// `λ̂(y) = Σ_k W_k λ̃(y | x_k)` on `ys`, the root by the median-crossing
/// rule and `B̂ = −λ̂'(ŷ₀)` from a centred difference over
/// [`B_STEP_SPACINGS`] grid spacings of the interpolating spline.
pub fn estimate_lambda<S: LambdaTildeTable + ?Sized>(
    source: &S,
    weight: &WeightFunction,
    ys: &[f64],
) -> Result<LambdaEstimate> {
    if source.dim() != weight.dim() {
        return Err(Error::Invalid(format!(
            "weight has {} coordinate(s), source has {}",
            weight.dim(),
            source.dim()
        )));
    }
    if ys.len() < 8 || ys.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid(
            "lambda grid must be strictly increasing with at least 8 points".into(),
        ));
    }
    let (nodes, wts) = covariate_rule(weight);
    let rows = source.rows(&nodes, ys, weight.coord())?;
    let mut values = vec![0.0; ys.len()];
    let mut var = vec![0.0; ys.len()];
    for (row, w) in rows.iter().zip(&wts) {
        for i in 0..ys.len() {
            values[i] += w * row.values[i];
            var[i] += (w * row.errors[i]).powi(2);
        }
    }
    let errors: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let curve = TabulatedLambda::new(ys.to_vec(), values.clone())?;
    let y0 = match find_y0_on_grid(&curve, ys, &values, &RootOptions::default()) {
        Ok(y0) => y0,
        Err(Error::Bracketing { .. }) => {
            return Err(Error::Identification(format!(
                "estimated lambda has no sign change on [{}, {}]; the data may be homoscedastic \
                 (run the homoscedasticity diagnostic)",
                ys[0],
                ys[ys.len() - 1]
            )))
        }
        Err(e) => return Err(e),
    };
    let spacing = (ys[ys.len() - 1] - ys[0]) / (ys.len() - 1) as f64;
    let room = (y0 - ys[0]).min(ys[ys.len() - 1] - y0);
    let slope = |s: f64| -> Result<f64> { Ok(-(curve.eval(y0 + s)? - curve.eval(y0 - s)?) / (2.0 * s)) };
    let step = (B_STEP_SPACINGS * spacing).min(0.999 * room);
    if !(step > 0.0) {
        return Err(Error::Identification(format!(
            "estimated root {y0} sits on the grid edge"
        )));
    }
    let b = slope(step)?;
    let b_error = (b - slope(0.5 * step)?).abs();
    if !(b.abs() >= B_FLOOR) {
        return Err(Error::Homoscedastic { b, floor: B_FLOOR });
    }
    Ok(LambdaEstimate {
        field: LambdaField {
            grid: ys.to_vec(),
            values,
            y0,
            b,
            b_error,
            quad_tol: 0.0,
            coefficients: None,
        },
        errors,
        curve,
        weight: weight.clone(),
    })
}

/// Covariate box spanned by the given sample quantiles, with unit mass.
pub fn trimmed_weight(samples: &SampleSet, quantiles: (f64, f64), coord: usize) -> Result<WeightFunction> {
    let mut lower = Vec::with_capacity(samples.dim());
    let mut upper = Vec::with_capacity(samples.dim());
    for k in 0..samples.dim() {
        let mut col: Vec<f64> = samples.column(k).collect();
        col.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&col, quantiles.0));
        upper.push(quantile_sorted(&col, quantiles.1));
    }
    WeightFunction::uniform(lower, upper, coord)
}

/// `n` points between the given sample quantiles of `Y`.
pub fn quantile_grid(samples: &SampleSet, quantiles: (f64, f64), n: usize) -> Vec<f64> {
    let mut y = samples.y().to_vec();
    y.sort_by(f64::total_cmp);
    linspace(quantile_sorted(&y, quantiles.0), quantile_sorted(&y, quantiles.1), n)
}

/// Settings of the plug-in pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginOptions {
    /// Bandwidth multipliers for the rule of thumb.
    pub c_x: f64,
    pub c_y: f64,
    /// Explicit kernel settings; overrides the rule of thumb.
    pub kernel: Option<KernelConfig>,
    pub ess_floor: f64,
    /// Covariate quantiles bounding the weight box.
    pub weight_quantiles: (f64, f64),
    pub coord: usize,
    /// `Y` quantiles bounding the `λ̂` grid.
    pub lambda_quantiles: (f64, f64),
    pub lambda_points: usize,
    /// `Y` quantiles bounding the diagnostic rows.
    pub diagnostic_quantiles: (f64, f64),
    /// `Y` quantiles bounding the reconstruction grid.
    pub central_quantiles: (f64, f64),
    /// The grid is widened so `ŷ₀` keeps this share of its width on
    /// either side.
    pub root_margin: f64,
    pub grid_points: usize,
    /// Scale anchor; defaults to the sample median of `Y`.
    pub y1: Option<f64>,
    pub alpha: f64,
    pub reconstruction: ReconstructionOptions,
}

impl Default for PluginOptions {
    fn default() -> Self {
        Self {
            c_x: 2.0,
            c_y: 1.0,
            kernel: None,
            ess_floor: ESS_FLOOR,
            weight_quantiles: (0.1, 0.9),
            coord: 0,
            lambda_quantiles: (0.05, 0.95),
            lambda_points: 21,
            diagnostic_quantiles: (0.02, 0.98),
            central_quantiles: (0.3, 0.7),
            root_margin: 0.1,
            grid_points: 101,
            y1: None,
            alpha: 1.0,
            reconstruction: ReconstructionOptions {
                repair: true,
                ..ReconstructionOptions::default()
            },
        }
    }
}

impl PluginOptions {
    pub fn kernel_for(&self, samples: &SampleSet) -> Result<KernelConfig> {
        let mut k = match &self.kernel {
            Some(k) => k.clone(),
            None => KernelConfig::rule_of_thumb(samples, self.c_x, self.c_y)?,
        };
        k.ess_floor = self.ess_floor;
        k.validate(samples.dim())?;
        Ok(k)
    }
}

pub struct PluginFit {
    pub kernel: KernelConfig,
    pub lambda: LambdaEstimate,
    pub transform: ReconstructedTransform,
}

/// Checks the sample size and builds the kernel estimate.
pub fn kernel_estimate<'a>(samples: &'a SampleSet, opts: &PluginOptions) -> Result<KernelCdf<'a>> {
    if samples.n() < MIN_ESTIMATION_SAMPLES {
        return Err(Error::Invalid(format!(
            "estimation needs at least {MIN_ESTIMATION_SAMPLES} observations, got {}",
            samples.n()
        )));
    }
    KernelCdf::new(samples, opts.kernel_for(samples)?)
}

/// Reconstruction from an already estimated `λ̂` with `Â = 0`.
pub fn reconstruct_from_estimate(
    lambda: &LambdaEstimate,
    grid: &[f64],
    y1: f64,
    alpha: f64,
    opts: ReconstructionOptions,
) -> Result<ReconstructedTransform> {
    let y0 = lambda.field.y0;
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo < y0 && y0 < hi) {
        return Err(Error::Identification(format!(
            "estimated root {y0} lies outside the reconstruction range [{lo}, {hi}]"
        )));
    }
    let y1 = if y1 > y0 && y1 < lambda.curve.domain().1 {
        y1
    } else {
        y0 + 0.5 * (hi - y0)
    };
    let r = Reconstructor::new(
        &lambda.curve,
        lambda.coefficients(),
        y0,
        ConstraintSet::Canonical { y1, alpha },
        (lo, hi),
        opts,
    )?;
    r.tabulate(grid)
}

/// Central quantile range of `Y`, widened to keep `ŷ₀` inside by
/// `root_margin` of the range and clipped to the `λ̂` grid.
pub fn central_grid(samples: &SampleSet, lambda: &LambdaEstimate, opts: &PluginOptions) -> Vec<f64> {
    let base = quantile_grid(samples, opts.central_quantiles, 2);
    let pad = opts.root_margin * (base[1] - base[0]);
    let (dlo, dhi) = lambda.curve.domain();
    let y0 = lambda.field.y0;
    linspace(
        base[0].min(y0 - pad).max(dlo),
        base[1].max(y0 + pad).min(dhi),
        opts.grid_points,
    )
}

/// Full pipeline: kernel estimate, `λ̂`, `ŷ₀`, `B̂`, reconstruction.
pub fn plugin_reconstruct(samples: &SampleSet, opts: &PluginOptions) -> Result<PluginFit> {
    let kernel = kernel_estimate(samples, opts)?;
    let weight = trimmed_weight(samples, opts.weight_quantiles, opts.coord)?;
    let ys = quantile_grid(samples, opts.lambda_quantiles, opts.lambda_points);
    let lambda = estimate_lambda(&kernel, &weight, &ys)?;
    let grid = central_grid(samples, &lambda, opts);
    let y1 = opts
        .y1
        .unwrap_or_else(|| median(samples.y()).expect("non-empty sample"));
    let transform = reconstruct_from_estimate(&lambda, &grid, y1, opts.alpha, opts.reconstruction)?;
    Ok(PluginFit {
        kernel: kernel.config().clone(),
        lambda,
        transform,
    })
}

/// Homoscedasticity diagnostic on kernel estimates: covariate rows at the
/// weight probe points, `y` rows on the `λ̂` range.
pub fn sample_diagnostic(samples: &SampleSet, opts: &PluginOptions) -> Result<DiagnosticReport> {
    let kernel = kernel_estimate(samples, opts)?;
    let weight = trimmed_weight(samples, opts.weight_quantiles, opts.coord)?;
    let ys = quantile_grid(samples, opts.diagnostic_quantiles, 41);
    let rows = kernel.lambda_tilde_rows(&weight.probe_points(5), &ys, opts.coord)?;
    homoscedasticity_diagnostic(&rows)
}

/// `(ĝ(x), σ̂(x))` by kernel regression of `h(Y_j)` on `X_j` and of the
/// squared deviations from `ĝ(x)`.
pub fn recover_g_sigma_samples<F>(mut h: F, samples: &SampleSet, kernel: &KernelConfig, x: &[f64]) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let k = KernelCdf::new(samples, kernel.clone())?;
    let local = k.local(x)?;
    let hy = samples.y().iter().map(|y| h(*y)).collect::<Result<Vec<_>>>()?;
    let g: f64 = local.w.iter().zip(&hy).map(|(w, v)| w * v).sum::<f64>() / local.total;
    let var: f64 = local.w.iter().zip(&hy).map(|(w, v)| w * (v - g) * (v - g)).sum::<f64>() / local.total;
    let s = var.sqrt();
    if !(s > 0.0) {
        return Err(Error::Domain(format!("estimated sigma at {x:?} is not positive")));
    }
    Ok((g, s))
}
