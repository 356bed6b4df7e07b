//! Video catalog: Zipf file popularity, SDV/HDV preference and per-layer
//! request probabilities.

use crate::error::{invalid, Error, Result};

/// Zipf request probabilities for files `1..=f_count`.
pub fn zipf_probabilities(f_count: usize, alpha: f64) -> Result<Vec<f64>> {
    if f_count == 0 {
        return Err(invalid("file count must be positive"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(invalid(format!("zipf skewness must be nonnegative, got {alpha}")));
    }
    let weights: Vec<f64> = (1..=f_count).map(|f| (f as f64).powf(-alpha)).collect();
    let norm: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / norm).collect())
}

/// Preference for the standard-definition version of file `f` (1-based).
pub fn g_sdv(f: usize, f_count: usize) -> f64 {
    (f - 1) as f64 / (f_count - 1) as f64
}

pub fn g_hdv(f: usize, f_count: usize) -> f64 {
    (f_count - f) as f64 / (f_count - 1) as f64
}

fn split_layer(pf: f64, f: usize, l: usize, f_count: usize, l_count: usize) -> f64 {
    if l == 1 {
        pf * (f - 1) as f64 / (f_count - 1) as f64
    } else {
        pf * (f_count - f) as f64 / ((f_count - 1) as f64 * (l_count - 1) as f64)
    }
}

/// Request probability of layer `l` of file `f`, both 1-based.
pub fn layer_request_probability(
    f: usize,
    l: usize,
    f_count: usize,
    l_count: usize,
    alpha: f64,
) -> Result<f64> {
    if f_count < 2 || l_count < 2 {
        return Err(invalid("layer probabilities need F >= 2 and L >= 2"));
    }
    if f == 0 || f > f_count || l == 0 || l > l_count {
        return Err(invalid(format!("layer ({f},{l}) outside {f_count}x{l_count}")));
    }
    let p = zipf_probabilities(f_count, alpha)?;
    Ok(split_layer(p[f - 1], f, l, f_count, l_count))
}

/// How file sizes are supplied to [`build_catalog`].
#[derive(Debug, Clone, PartialEq)]
pub enum FileSizes {
    Uniform(f64),
    PerFile(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogParams {
    pub file_count: usize,
    pub layer_count: usize,
    pub alpha: f64,
    pub file_sizes: FileSizes,
    pub layer_min_sizes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub file_count: usize,
    pub layer_count: usize,
    pub alpha: f64,
    pub file_popularity: Vec<f64>,
    pub file_sizes: Vec<f64>,
    /// Row-major `F x L`.
    pub layer_sizes: Vec<f64>,
    pub layer_min_sizes: Vec<f64>,
    /// Row-major `F x L`.
    pub layer_prob: Vec<f64>,
}

pub fn build_catalog(params: &CatalogParams) -> Result<Catalog> {
    let (nf, nl) = (params.file_count, params.layer_count);
    if nf < 2 || nl < 2 {
        return Err(invalid("catalog needs F >= 2 and L >= 2"));
    }
    let file_sizes = match &params.file_sizes {
        FileSizes::Uniform(c) => vec![*c; nf],
        FileSizes::PerFile(v) => {
            if v.len() != nf {
                return Err(invalid(format!("{} file sizes given for F = {nf}", v.len())));
            }
            v.clone()
        }
    };
    if file_sizes.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(invalid("file sizes must be positive"));
    }
    let c_min = file_sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let layer_min_sizes = match &params.layer_min_sizes {
        Some(th) => {
            if th.len() != nl {
                return Err(invalid(format!("{} layer thresholds given for L = {nl}", th.len())));
            }
            if th.iter().any(|t| !(*t > 0.0)) {
                return Err(invalid("layer thresholds must be positive"));
            }
            th.clone()
        }
        None => vec![c_min / (2.0 * nl as f64); nl],
    };
    let th_sum: f64 = layer_min_sizes.iter().sum();
    for (i, c) in file_sizes.iter().enumerate() {
        if th_sum > *c {
            return Err(Error::InfeasibleCatalog(format!(
                "layer thresholds sum to {th_sum} bits but file {} holds {c} bits",
                i + 1
            )));
        }
    }
    let mut layer_sizes = Vec::with_capacity(nf * nl);
    for c in &file_sizes {
        let share = c / nl as f64;
        for th in &layer_min_sizes {
            if share < *th {
                return Err(Error::InfeasibleCatalog(format!(
                    "equal split {share} bits is below threshold {th}"
                )));
            }
            layer_sizes.push(share);
        }
    }
    let file_popularity = zipf_probabilities(nf, params.alpha)?;
    let mut layer_prob = Vec::with_capacity(nf * nl);
    for f in 1..=nf {
        for l in 1..=nl {
            layer_prob.push(split_layer(file_popularity[f - 1], f, l, nf, nl));
        }
    }
    Ok(Catalog {
        file_count: nf,
        layer_count: nl,
        alpha: params.alpha,
        file_popularity,
        file_sizes,
        layer_sizes,
        layer_min_sizes,
        layer_prob,
    })
}

impl Catalog {
    /// Flat index of `(f, l)`, both 0-based.
    #[inline]
    pub fn idx(&self, f: usize, l: usize) -> usize {
        f * self.layer_count + l
    }

    pub fn entries(&self) -> usize {
        self.file_count * self.layer_count
    }

    #[inline]
    pub fn prob(&self, f: usize, l: usize) -> f64 {
        self.layer_prob[self.idx(f, l)]
    }

    #[inline]
    pub fn size(&self, f: usize, l: usize) -> f64 {
        self.layer_sizes[self.idx(f, l)]
    }

    /// Same catalog with new layer sizes (row-major `F x L`).
    pub fn with_layer_sizes(&self, sizes: Vec<f64>) -> Result<Catalog> {
        if sizes.len() != self.entries() {
            return Err(invalid("layer size table has wrong shape"));
        }
        Ok(Catalog { layer_sizes: sizes, ..self.clone() })
    }
}
