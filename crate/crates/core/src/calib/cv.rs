use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::CalibrationDataset;
use super::model::{train_model_with, ModelSpec, RegressionModel};
use crate::rng::rng_from;
use crate::{Error, Execution, Result};

/// Seeded fold label for every sample: shuffle, then deal round-robin.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(Error::Fold { folds: k, samples: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from(seed));
    let mut fold = vec![0; n];
    for (pos, i) in idx.into_iter().enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// Pooled out-of-fold predictions from an arbitrary fit/predict routine.
pub fn out_of_fold<F>(ds: &CalibrationDataset, k: usize, seed: u64, exec: Execution, fit_predict: F) -> Result<Vec<f64>>
where
    F: Fn(&CalibrationDataset, &CalibrationDataset) -> Result<Vec<f64>> + Sync + Send,
{
    let fold = fold_assignment(ds.len(), k, seed)?;
    let per_fold = exec.map_range(k, |f| {
        let held: Vec<usize> = (0..ds.len()).filter(|&i| fold[i] == f).collect();
        let kept: Vec<usize> = (0..ds.len()).filter(|&i| fold[i] != f).collect();
        let preds = fit_predict(&ds.subset(&kept)?, &ds.subset(&held)?)?;
        Ok::<_, Error>(held.into_iter().zip(preds).collect::<Vec<_>>())
    });
    let mut pooled = vec![f64::NAN; ds.len()];
    for fold in per_fold {
        for (i, p) in fold? {
            pooled[i] = p;
        }
    }
    Ok(pooled)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> f64 {
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    (sse / pred.len() as f64).sqrt()
}

fn model_predictions(model: &RegressionModel, test: &CalibrationDataset) -> Result<Vec<f64>> {
    test.samples
        .iter()
        .map(|s| super::model::predict(model, &s.features))
        .collect()
}

/// k-fold cross-validated RMSE of `spec`, pooled over all held-out samples.
pub fn cross_validate(ds: &CalibrationDataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<f64> {
    cross_validate_with(ds, spec, k, seed, Execution::default())
}

pub fn cross_validate_with(
    ds: &CalibrationDataset,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<f64> {
    let pooled = out_of_fold(ds, k, seed, exec, |train, test| {
        model_predictions(&train_model_with(train, spec, exec)?, test)
    })?;
    Ok(rmse(&pooled, &ds.labels()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub spec: ModelSpec,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub best: ModelSpec,
    /// Successful specs by ascending CV RMSE; equal RMSEs keep input order.
    pub ranking: Vec<RankRow>,
    pub failures: Vec<(ModelSpec, String)>,
}

impl Selection {
    pub fn rmse_of(&self, kind: super::model::ModelKind) -> Option<f64> {
        self.ranking.iter().find(|r| r.spec.kind == kind).map(|r| r.rmse)
    }
}

pub fn select_model(ds: &CalibrationDataset, specs: &[ModelSpec], k: usize, seed: u64) -> Result<Selection> {
    select_model_with(ds, specs, k, seed, Execution::default())
}

/// Cross-validates every spec and returns the lowest-RMSE one.
///
/// GP specs without fixed hyperparameters are tuned once on the whole of
/// `ds` before cross-validation, so every fold uses the same kernel
/// settings. Per-spec failures are recorded; only an all-fail run errors.
pub fn select_model_with(
    ds: &CalibrationDataset,
    specs: &[ModelSpec],
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<Selection> {
    if specs.is_empty() {
        return Err(Error::Config("no model specs to compare".into()));
    }
    let outcomes = exec.map(specs, |spec| {
        let resolved = if spec.needs_search() {
            train_model_with(ds, spec, exec)?.spec
        } else {
            *spec
        };
        cross_validate_with(ds, &resolved, k, seed, exec).map(|rmse| RankRow { spec: resolved, rmse })
    });
    let mut ranking = Vec::new();
    let mut failures = Vec::new();
    for (spec, outcome) in specs.iter().zip(outcomes) {
        match outcome {
            Ok(row) if row.rmse.is_finite() => ranking.push(row),
            Ok(row) => failures.push((*spec, format!("non-finite RMSE {}", row.rmse))),
            Err(e @ Error::Fold { .. }) => return Err(e),
            Err(e) => failures.push((*spec, e.to_string())),
        }
    }
    if ranking.is_empty() {
        let msgs: Vec<String> = failures.iter().map(|(s, e)| format!("{}: {e}", s.kind)).collect();
        return Err(Error::AllModelsFailed(msgs.join("; ")));
    }
    ranking.sort_by(|a, b| a.rmse.total_cmp(&b.rmse));
    Ok(Selection {
        best: ranking[0].spec,
        ranking,
        failures,
    })
}
