//! Repeated simulate-and-estimate runs scored against the normalized truth.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{plugin_reconstruct, trimmed_weight, PluginOptions};
use crate::lambda::coefficients_ab;
use crate::model::{CovariateLaw, TransformationModel};
use crate::numeric::quantile_sorted;
use crate::reconstruction::ReconstructedTransform;
use crate::sample::fmt_f64;
use crate::weight::WeightFunction;

/// A size cell with more failed replications than this share is invalid.
pub const MAX_FAILURE_SHARE: f64 = 0.5;
pub const MIN_REPLICATIONS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `sup |ĥ − h̄|` over the reconstruction grid.
    Sup,
    /// Trapezoid `∫ (ĥ − h̄)²` over the reconstruction grid.
    Ise,
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Sup => "sup",
            Metric::Ise => "ise",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" => Ok(Metric::Sup),
            "ise" => Ok(Metric::Ise),
            other => Err(Error::Config(format!("unknown metric {other:?} (expected sup or ise)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloPlan {
    pub model: TransformationModel,
    pub sizes: Vec<usize>,
    pub replications: usize,
    pub seed_base: u64,
    pub metric: Metric,
    pub plugin: PluginOptions,
}

impl MonteCarloPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sample sizes must be non-empty and strictly increasing".into(),
            ));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::Config(format!(
                "need at least {MIN_REPLICATIONS} replications, got {}",
                self.replications
            )));
        }
        Ok(())
    }

    /// Seed of replication `rep` at size index `cell`: the first word of
    /// the ChaCha stream `(cell, rep)` under the base seed.
    pub fn seed(&self, cell: usize, rep: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed_base);
        rng.set_stream(((cell as u64) << 32) | rep as u64);
        rng.next_u64()
    }
}

/// `h̄ = α (h − h(y₀)) / (h(y₁) − h(y₀))`, with `y₀` the true root under
/// the weight the estimate used.
pub fn normalized_truth<'a>(
    model: &'a TransformationModel,
    fit: &ReconstructedTransform,
    weight: &WeightFunction,
) -> Result<impl Fn(f64) -> f64 + 'a> {
    let c = coefficients_ab(model, weight, 1e-10)?;
    let h0 = -c.a / c.b;
    let h1 = model.h.eval(fit.y1);
    let alpha = fit.alpha;
    Ok(move |y: f64| alpha * (model.h.eval(y) - h0) / (h1 - h0))
}

pub fn score(
    model: &TransformationModel,
    fit: &ReconstructedTransform,
    weight: &WeightFunction,
    metric: Metric,
) -> Result<f64> {
    let truth = normalized_truth(model, fit, weight)?;
    let diff: Vec<f64> = fit.grid.iter().zip(&fit.values).map(|(y, v)| v - truth(*y)).collect();
    Ok(match metric {
        Metric::Sup => diff.iter().fold(0.0, |m, d| m.max(d.abs())),
        Metric::Ise => fit
            .grid
            .windows(2)
            .zip(diff.windows(2))
            .map(|(y, d)| 0.5 * (y[1] - y[0]) * (d[0] * d[0] + d[1] * d[1]))
            .sum(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replication {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    /// `None` when the replication failed.
    pub value: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    pub median: f64,
    pub iqr: f64,
    pub fail_count: usize,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub model: String,
    pub metric: Metric,
    pub replications: Vec<Replication>,
    pub summary: Vec<CellSummary>,
}

fn replicate(plan: &MonteCarloPlan, n: usize, seed: u64) -> Result<f64> {
    let law = CovariateLaw::on_weight(&plan.model.default_weight());
    let samples = plan.model.simulate(n, seed, &law)?;
    let fit = plugin_reconstruct(&samples, &plan.plugin)?;
    let weight = trimmed_weight(&samples, plan.plugin.weight_quantiles, plan.plugin.coord)?;
    score(&plan.model, &fit.transform, &weight, plan.metric)
}

/// Runs every `(size, replication)` cell in parallel; results come back in
/// cell order, so the report does not depend on scheduling.
pub fn run(plan: &MonteCarloPlan) -> Result<MonteCarloReport> {
    plan.validate()?;
    let cells: Vec<(usize, usize, usize)> = plan
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(i, n)| (0..plan.replications).map(move |r| (i, *n, r)))
        .collect();
    let replications: Vec<Replication> = cells
        .par_iter()
        .map(|&(i, n, rep)| {
            let seed = plan.seed(i, rep);
            let (value, failure) = match replicate(plan, n, seed) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
            Replication {
                n,
                rep,
                seed,
                value,
                failure,
            }
        })
        .collect();
    let summary = plan
        .sizes
        .iter()
        .map(|&n| {
            let mut ok: Vec<f64> = replications
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.value)
                .collect();
            ok.sort_by(f64::total_cmp);
            let fail_count = plan.replications - ok.len();
            let valid = (fail_count as f64) <= MAX_FAILURE_SHARE * plan.replications as f64 && !ok.is_empty();
            let (median, iqr) = if valid {
                (
                    quantile_sorted(&ok, 0.5),
                    quantile_sorted(&ok, 0.75) - quantile_sorted(&ok, 0.25),
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            CellSummary {
                n,
                median,
                iqr,
                fail_count,
                valid,
            }
        })
        .collect();
    Ok(MonteCarloReport {
        model: plan.model.name.clone(),
        metric: plan.metric,
        replications,
        summary,
    })
}

impl MonteCarloReport {
    /// Medians strictly decrease over the sizes and every cell is valid.
    pub fn converging(&self) -> bool {
        self.summary.iter().all(|c| c.valid) && self.summary.windows(2).all(|w| w[1].median < w[0].median)
    }

    /// `model,n,rep,metric,value`; failed replications get an empty value.
    pub fn write_results<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "n", "rep", "metric", "value"])?;
        for r in &self.replications {
            w.write_record([
                self.model.clone(),
                r.n.to_string(),
                r.rep.to_string(),
                self.metric.to_string(),
                r.value.map(fmt_f64).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("results csv", e))?;
        Ok(())
    }

    /// `model,n,median,iqr,fail_count`; invalid cells report `NaN`.
    pub fn write_summary<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["model", "n", "median", "iqr", "fail_count"])?;
        for c in &self.summary {
            w.write_record([
                self.model.clone(),
                c.n.to_string(),
                fmt_f64(c.median),
                fmt_f64(c.iqr),
                c.fail_count.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("summary csv", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(sizes: Vec<usize>, reps: usize) -> MonteCarloPlan {
        MonteCarloPlan {
            model: TransformationModel::registered("M1").unwrap(),
            sizes,
            replications: reps,
            seed_base: 7,
            metric: Metric::Sup,
            plugin: PluginOptions::default(),
        }
    }

    #[test]
    fn plan_validation() {
        assert!(plan(vec![500, 500], 10).validate().is_err());
        assert!(plan(vec![500], 9).validate().is_err());
        assert!(plan(vec![], 10).validate().is_err());
        assert!(plan(vec![200, 500], 10).validate().is_ok());
    }

    #[test]
    fn seeds_are_distinct_per_cell() {
        let p = plan(vec![100, 200], 10);
        let mut seeds: Vec<u64> = (0..2)
            .flat_map(|i| (0..10).map(move |r| (i, r)))
            .map(|(i, r)| p.seed(i, r))
            .collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 20);
    }

    #[test]
    fn small_run_is_reproducible_and_writes_csv() {
        let p = plan(vec![300], 10);
        let a = run(&p).unwrap();
        let b = run(&p).unwrap();
        assert_eq!(a, b);
        let mut out = Vec::new();
        a.write_summary(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("model,n,median,iqr,fail_count\nM1,300,"));
        let mut out = Vec::new();
        a.write_results(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 11);
    }

    #[test]
    fn truth_is_exact_for_oracle_input() {
        use crate::estimator::estimate_lambda;
        use crate::estimator::reconstruct_from_estimate;
        use crate::numeric::linspace;
        let m = TransformationModel::registered("M1").unwrap();
        let w = m.default_weight();
        let lam = estimate_lambda(&m, &w, &linspace(-2.0, 1.5, 141)).unwrap();
        let fit = reconstruct_from_estimate(&lam, &linspace(-1.5, 1.0, 51), 0.5, 1.0, Default::default()).unwrap();
        assert!(score(&m, &fit, &w, Metric::Sup).unwrap() < 1e-3);
    }
}
