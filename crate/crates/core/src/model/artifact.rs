//! Trained pipelines as JSON. Every float is written as a decimal string
//! with 17 significant digits, which reads back to the identical `f64`.

use serde::{Deserialize, Serialize};

use super::{Config, Kernel, Normalizer, OneVsOne, PairModel, Pca, Pipeline, Scheme, SvmModel};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct F(String);

impl From<f64> for F {
    fn from(v: f64) -> Self {
        F(format!("{v:.16e}"))
    }
}

impl F {
    fn get(&self) -> Result<f64> {
        self.0.parse().map_err(|_| Error::Model(format!("bad float `{}` in model artifact", self.0)))
    }
}

fn enc(v: &[f64]) -> Vec<F> {
    v.iter().map(|&x| x.into()).collect()
}

fn dec(v: &[F]) -> Result<Vec<f64>> {
    v.iter().map(F::get).collect()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum KernelDoc {
    Linear,
    Rbf { gamma: F },
}

#[derive(Serialize, Deserialize)]
struct SvmDoc {
    positive: usize,
    negative: usize,
    support: Vec<Vec<F>>,
    coef: Vec<F>,
    bias: F,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize, Deserialize)]
struct PipelineDoc {
    version: u32,
    scheme: Scheme,
    kernel: KernelDoc,
    c: F,
    offset: Vec<F>,
    spread: Vec<F>,
    pca_mean: Vec<F>,
    pca_components: Vec<Vec<F>>,
    pca_eigenvalues: Vec<F>,
    pca_retained: F,
    pca_degenerate: bool,
    classes: Vec<usize>,
    models: Vec<SvmDoc>,
}

pub fn pipeline_to_json(p: &Pipeline) -> Result<String> {
    let kernel = match p.config.kernel {
        Kernel::Linear => KernelDoc::Linear,
        Kernel::Rbf { gamma } => KernelDoc::Rbf { gamma: gamma.into() },
    };
    let models = p
        .classifier
        .models
        .iter()
        .map(|m| SvmDoc {
            positive: m.positive,
            negative: m.negative,
            support: m.model.support.iter().map(|s| enc(s)).collect(),
            coef: enc(&m.model.coef),
            bias: m.model.bias.into(),
            iterations: m.model.iterations,
            converged: m.model.converged,
        })
        .collect();
    let doc = PipelineDoc {
        version: ARTIFACT_VERSION,
        scheme: p.config.scheme,
        kernel,
        c: p.config.c.into(),
        offset: enc(&p.normalizer.offset),
        spread: enc(&p.normalizer.spread),
        pca_mean: enc(&p.pca.mean),
        pca_components: p.pca.components.to_rows().iter().map(|r| enc(r)).collect(),
        pca_eigenvalues: enc(&p.pca.eigenvalues),
        pca_retained: p.pca.retained.into(),
        pca_degenerate: p.pca.degenerate,
        classes: p.classifier.classes.clone(),
        models,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn pipeline_from_json(s: &str) -> Result<Pipeline> {
    let doc: PipelineDoc = serde_json::from_str(s)?;
    if doc.version != ARTIFACT_VERSION {
        return Err(Error::Model(format!("unsupported model artifact version {}", doc.version)));
    }
    let kernel = match &doc.kernel {
        KernelDoc::Linear => Kernel::Linear,
        KernelDoc::Rbf { gamma } => Kernel::Rbf { gamma: gamma.get()? },
    };
    let rows: Vec<Vec<f64>> = doc.pca_components.iter().map(|r| dec(r)).collect::<Result<_>>()?;
    let k = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != k) {
        return Err(Error::Model("ragged PCA components in model artifact".into()));
    }
    let components = if rows.is_empty() { Matrix::zeros(0, 0) } else { Matrix::from_rows(&rows) };
    let models = doc
        .models
        .iter()
        .map(|m| {
            Ok(PairModel {
                positive: m.positive,
                negative: m.negative,
                model: SvmModel {
                    kernel,
                    support: m.support.iter().map(|r| dec(r)).collect::<Result<_>>()?,
                    coef: dec(&m.coef)?,
                    bias: m.bias.get()?,
                    iterations: m.iterations,
                    converged: m.converged,
                },
            })
        })
        .collect::<Result<_>>()?;
    Ok(Pipeline {
        config: Config { scheme: doc.scheme, kernel, c: doc.c.get()? },
        normalizer: Normalizer { scheme: doc.scheme, offset: dec(&doc.offset)?, spread: dec(&doc.spread)? },
        pca: Pca {
            mean: dec(&doc.pca_mean)?,
            components,
            eigenvalues: dec(&doc.pca_eigenvalues)?,
            retained: doc.pca_retained.get()?,
            degenerate: doc.pca_degenerate,
        },
        classifier: OneVsOne { classes: doc.classes, models },
    })
}
