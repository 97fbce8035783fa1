//! Two-stage least squares with generated instruments, and baselines.
//!
//! Stage 1 regresses `A` on `(1, Z[, X])`; stage 2 regresses `Y` on
//! `(1, Â[, X])`. The exposure effect is the `Â` coefficient. Row weights
//! carried by the instrument matrix are applied in both stages and in the
//! variance estimates.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::diagnostics::{f_test, FirstStageF};
use crate::error::{Mr2Error, Result};
use crate::instruments::InstrumentMatrix;
use crate::linalg::{least_squares, Matrix, PivotedQr};
use crate::scalar::{dot, mean, weighted_mean, Real};
use crate::subsets::Subset;

/// Relative tolerance below which an identifying cross-moment counts as zero.
pub const WEAK_ID_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mr2,
    Oracle,
    Naive,
    Ratio,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mr2 => "mr2",
            Method::Oracle => "oracle",
            Method::Naive => "naive",
            Method::Ratio => "ratio",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Mr2Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mr2" => Ok(Method::Mr2),
            "oracle" => Ok(Method::Oracle),
            "naive" => Ok(Method::Naive),
            "ratio" => Ok(Method::Ratio),
            other => Err(Mr2Error::Parameter(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceMode {
    /// Heteroskedasticity-robust sandwich, ignoring estimation of the
    /// centering means (conservative).
    #[default]
    Sandwich,
    Homoskedastic,
}

impl std::str::FromStr for VarianceMode {
    type Err = Mr2Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sandwich" | "robust" => Ok(VarianceMode::Sandwich),
            "homoskedastic" | "homo" => Ok(VarianceMode::Homoskedastic),
            other => Err(Mr2Error::Parameter(format!(
                "unknown variance mode '{other}'"
            ))),
        }
    }
}

/// Output of a 2SLS fit.
#[derive(Debug, Clone)]
pub struct FitResult<T> {
    pub method: Method,
    pub beta_a: T,
    pub beta_0: T,
    /// Stage-2 coefficients of the extra regressors, if any.
    pub exog_coef: Vec<T>,
    /// Stage-1 coefficients: intercept, instruments, then extra regressors.
    pub stage1_coef: Vec<T>,
    pub fitted_exposure: Vec<T>,
    pub var_sandwich: T,
    pub var_homoskedastic: T,
    /// `Y − β̂₀ − β̂_a A [− X γ̂]`.
    pub residual_eps: Vec<T>,
    pub n: usize,
    pub k: usize,
    pub k_dagger: Option<usize>,
    pub j: usize,
    /// Instruments actually used after dropping aliased columns.
    pub rank: usize,
    /// Labels of instrument columns dropped as linear combinations of the others.
    pub aliased: Vec<String>,
    pub first_stage: FirstStageF<T>,
    exog: Option<Matrix<T>>,
    weights: Option<Vec<T>>,
}

impl<T: Real> FitResult<T> {
    pub fn first_stage_f(&self) -> T {
        self.first_stage.f
    }

    pub fn variance(&self, mode: VarianceMode) -> T {
        match mode {
            VarianceMode::Sandwich => self.var_sandwich,
            VarianceMode::Homoskedastic => self.var_homoskedastic,
        }
    }

    pub fn se(&self, mode: VarianceMode) -> T {
        self.variance(mode).sqrt()
    }

    pub fn exog(&self) -> Option<&Matrix<T>> {
        self.exog.as_ref()
    }

    /// JSON-ready summary.
    pub fn summary(&self) -> FitSummary {
        FitSummary {
            method: self.method,
            beta_a: self.beta_a.as_f64(),
            se_sandwich: self.var_sandwich.as_f64().sqrt(),
            se_homoskedastic: self.var_homoskedastic.as_f64().sqrt(),
            first_stage_f: self.first_stage.f.as_f64(),
            first_stage_p: self.first_stage.p_value,
            n: self.n,
            k: self.k,
            k_dagger: self.k_dagger,
            j: self.j,
            instrument_rank: self.rank,
        }
    }
}

/// Serialized form of a [`FitResult`].
#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub method: Method,
    pub beta_a: f64,
    pub se_sandwich: f64,
    pub se_homoskedastic: f64,
    #[serde(rename = "first_stage_F")]
    pub first_stage_f: f64,
    pub first_stage_p: f64,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub k_dagger: Option<usize>,
    #[serde(rename = "J")]
    pub j: usize,
    pub instrument_rank: usize,
}

struct Design<'a, T> {
    instruments: &'a Matrix<T>,
    /// Drop instrument columns spanned by the others instead of failing.
    drop_aliased: bool,
    instrument_names: Vec<String>,
    exog: Option<&'a Matrix<T>>,
    exog_names: Vec<String>,
    weights: Option<&'a [T]>,
}

fn weak(quantity: &'static str, value: f64, f: Option<f64>) -> Mr2Error {
    Mr2Error::WeakIdentification {
        quantity,
        value,
        first_stage_f: f,
    }
}

fn two_stage<T: Real>(
    d: &Dataset<T>,
    design: Design<'_, T>,
    method: Method,
    k_dagger: Option<usize>,
) -> Result<FitResult<T>> {
    let n = d.n();
    let j = design.instruments.ncols();
    let p = design.exog.map_or(0, Matrix::ncols);
    if j == 0 {
        return Err(Mr2Error::Parameter("no instruments supplied".into()));
    }
    let required = j + 2 + p;
    if n <= required {
        return Err(Mr2Error::SampleSize { n, required });
    }
    let w = design.weights;

    let kept = if design.drop_aliased {
        independent_instruments(design.instruments, design.exog, &design.exog_names)?
    } else {
        (0..j).collect()
    };
    let rank = kept.len();
    let aliased: Vec<String> = (0..j)
        .filter(|c| !kept.contains(c))
        .map(|c| design.instrument_names[c].clone())
        .collect();
    let z_kept = design.instruments.select_columns(&kept);
    let mut d1 = z_kept.with_intercept();
    if let Some(x) = design.exog {
        d1 = d1.hstack(x)?;
    }
    let name1 = |c: usize| match c {
        0 => "intercept".to_owned(),
        c if c <= rank => design.instrument_names[kept[c - 1]].clone(),
        c => design.exog_names[c - 1 - rank].clone(),
    };
    let stage1 = least_squares(&d1, d.a(), w, name1)?;
    let a_hat = stage1.fitted.clone();
    // Report coefficients on the full instrument list, zero for aliased columns.
    let mut stage1_coef = vec![T::zero(); 1 + j + p];
    stage1_coef[0] = stage1.coef[0];
    for (slot, &c) in kept.iter().enumerate() {
        stage1_coef[1 + c] = stage1.coef[1 + slot];
    }
    stage1_coef[1 + j..].copy_from_slice(&stage1.coef[1 + rank..]);

    let first_stage = {
        let rss1 = stage1.rss(w);
        let rss0 = match design.exog {
            None => centered_ss(d.a(), w),
            Some(x) => least_squares(&x.with_intercept(), d.a(), w, |c| format!("#{c}"))?.rss(w),
        };
        f_test(rss0, rss1, rank, n - rank - 1 - p)
    };
    let f_val = Some(first_stage.f.as_f64());

    // Â must vary beyond the intercept (and extra regressors).
    let ss_hat = centered_ss(&a_hat, w);
    let ss_a = centered_ss(d.a(), w);
    if ss_a == T::zero() || ss_hat <= T::lit(WEAK_ID_TOL * WEAK_ID_TOL) * ss_a {
        return Err(weak(
            "stage-1 explained variation of A",
            (ss_hat / ss_a).sqrt().as_f64(),
            f_val,
        ));
    }

    let mut x_hat = Matrix::from_columns(vec![vec![T::one(); n], a_hat.clone()])?;
    if let Some(x) = design.exog {
        x_hat = x_hat.hstack(x)?;
    }
    let stage2 = least_squares(&x_hat, d.y(), w, |c| match c {
        0 => "intercept".to_owned(),
        1 => "fitted exposure".to_owned(),
        c => design.exog_names[c - 2].clone(),
    })
    .map_err(|e| match e {
        Mr2Error::Collinearity { ref columns }
            if columns.iter().any(|c| c == "fitted exposure") =>
        {
            weak("partialled fitted exposure", 0.0, f_val)
        }
        e => e,
    })?;
    let coef = stage2.coef;
    let (beta_0, beta_a) = (coef[0], coef[1]);
    let exog_coef = coef[2..].to_vec();

    let mut residual: Vec<T> = d
        .y()
        .iter()
        .zip(d.a())
        .map(|(&y, &a)| y - beta_0 - beta_a * a)
        .collect();
    if let Some(x) = design.exog {
        let xg = x.mul_vec(&exog_coef);
        residual.iter_mut().zip(xg).for_each(|(r, v)| *r = *r - v);
    }

    let (var_sandwich, var_homoskedastic) = stage2_variances(&x_hat, &residual, w)?;

    Ok(FitResult {
        method,
        beta_a,
        beta_0,
        exog_coef,
        stage1_coef,
        fitted_exposure: a_hat,
        var_sandwich,
        var_homoskedastic,
        residual_eps: residual,
        n,
        k: d.k(),
        k_dagger,
        j,
        rank,
        aliased,
        first_stage,
        exog: design.exog.cloned(),
        weights: w.map(<[T]>::to_vec),
    })
}

/// Original indices of a maximal linearly independent subset of the
/// instrument columns, after partialling out the intercept and `exog`.
///
/// Centered-product instruments built from allele-count `H` are aliased by
/// construction (for `k† = 1` every column is the same full product), so
/// redundant columns are dropped as a regression package would.
pub(crate) fn independent_instruments<T: Real>(
    z: &Matrix<T>,
    exog: Option<&Matrix<T>>,
    exog_names: &[String],
) -> Result<Vec<usize>> {
    let n = z.nrows();
    let mut base = Matrix::from_columns(vec![vec![T::one(); n]])?;
    if let Some(x) = exog {
        base = base.hstack(x)?;
    }
    let base_qr = PivotedQr::new(base.clone());
    base_qr.require_full_rank(|c| match c {
        0 => "intercept".to_owned(),
        c => exog_names[c - 1].clone(),
    })?;
    let resid = z
        .columns()
        .map(|c| {
            let coef = base_qr.solve(c)?;
            let fit = base.mul_vec(&coef);
            Ok(c.iter().zip(fit).map(|(&v, f)| v - f).collect())
        })
        .collect::<Result<Vec<Vec<T>>>>()?;
    let qr = PivotedQr::new(Matrix::from_columns(resid)?);
    let mut kept = qr.permutation()[..qr.rank()].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

fn centered_ss<T: Real>(x: &[T], w: Option<&[T]>) -> T {
    match w {
        Some(w) => {
            let m = weighted_mean(x, w);
            x.iter()
                .zip(w)
                .map(|(&v, &wi)| wi * (v - m) * (v - m))
                .sum()
        }
        None => {
            let m = mean(x);
            x.iter().map(|&v| (v - m) * (v - m)).sum()
        }
    }
}

/// Variance of the `Â` coefficient: HC0 sandwich
/// `(X̂'WX̂)⁻¹ X̂'W diag(e²) W X̂ (X̂'WX̂)⁻¹` and `σ̂² (X̂'WX̂)⁻¹` with
/// `σ̂²` the (weighted) mean squared residual.
///
/// Without extra regressors the sandwich entry equals
/// `Σ (α̂Z̃ᵢ)² eᵢ² / (Σ α̂Z̃ᵢ Aᵢ)²` with `α̂Z̃ = Â − mean(Â)`.
///
/// The intercept (column 0) is partialled out first; the `Â` block of the
/// sandwich is unchanged by this, and the centered gram stays well
/// conditioned when `A` carries a large offset.
fn stage2_variances<T: Real>(x_hat: &Matrix<T>, e: &[T], w: Option<&[T]>) -> Result<(T, T)> {
    let centered = (1..x_hat.ncols())
        .map(|j| {
            let c = x_hat.col(j);
            let m = match w {
                Some(w) => weighted_mean(c, w),
                None => mean(c),
            };
            c.iter().map(|&v| v - m).collect()
        })
        .collect();
    let x_hat = Matrix::from_columns(centered)?;
    let bread = x_hat.weighted_gram(w).inverse().map_err(|err| match err {
        Mr2Error::Collinearity { .. } => weak("stage-2 cross-moment", 0.0, None),
        other => other,
    })?;
    let e2: Vec<T> = match w {
        Some(w) => e.iter().zip(w).map(|(&r, &wi)| wi * wi * r * r).collect(),
        None => e.iter().map(|&r| r * r).collect(),
    };
    let meat = x_hat.weighted_gram(Some(&e2));
    let v = bread.matmul(&meat).matmul(&bread);
    let sigma2 = match w {
        Some(w) => e.iter().zip(w).map(|(&r, &wi)| wi * r * r).sum::<T>() / w.iter().copied().sum(),
        None => e.iter().map(|&r| r * r).sum::<T>() / T::from_usize_lossy(e.len()),
    };
    let sandwich = v[(0, 0)].max(T::zero());
    let homo = (sigma2 * bread[(0, 0)]).max(T::zero());
    Ok((sandwich, homo))
}

fn x_hat_of<T: Real>(fit: &FitResult<T>) -> Result<Matrix<T>> {
    let mut x_hat = Matrix::from_columns(vec![vec![T::one(); fit.n], fit.fitted_exposure.clone()])?;
    if let Some(x) = &fit.exog {
        x_hat = x_hat.hstack(x)?;
    }
    Ok(x_hat)
}

fn check_same_rows<T: Real>(fit: &FitResult<T>, z: &InstrumentMatrix<T>) -> Result<()> {
    if z.n() != fit.n {
        return Err(Mr2Error::InvalidData(format!(
            "instrument matrix has {} rows, fit has {}",
            z.n(),
            fit.n
        )));
    }
    Ok(())
}

/// Sandwich variance of `β̂_a` for a completed fit.
pub fn variance_sandwich<T: Real>(fit: &FitResult<T>, z: &InstrumentMatrix<T>) -> Result<T> {
    check_same_rows(fit, z)?;
    let w = z.weights().map(|w| w.as_slice()).or(fit.weights.as_deref());
    Ok(stage2_variances(&x_hat_of(fit)?, &fit.residual_eps, w)?.0)
}

/// Homoskedastic variance `σ̂² [Ê(AZ') Ê(ZZ')⁻¹ Ê(ZA)]⁻¹ / n` of `β̂_a`.
pub fn variance_homoskedastic<T: Real>(fit: &FitResult<T>, z: &InstrumentMatrix<T>) -> Result<T> {
    check_same_rows(fit, z)?;
    let w = z.weights().map(|w| w.as_slice()).or(fit.weights.as_deref());
    Ok(stage2_variances(&x_hat_of(fit)?, &fit.residual_eps, w)?.1)
}

/// MR² fit: 2SLS of `Y` on `A` instrumented by the generated `Z`.
///
/// `extra` holds regressors entered in both stages, e.g. low-order
/// interactions `X` and covariates `M` when `Z` was covariate-adjusted.
pub fn fit_2sls<T: Real>(
    d: &Dataset<T>,
    z: &InstrumentMatrix<T>,
    extra: Option<(&Matrix<T>, &[String])>,
) -> Result<FitResult<T>> {
    if z.n() != d.n() {
        return Err(Mr2Error::InvalidData(format!(
            "instrument matrix has {} rows, data has {}",
            z.n(),
            d.n()
        )));
    }
    let design = Design {
        instruments: z.z(),
        drop_aliased: true,
        instrument_names: z.labels().iter().map(|l| format!("Z{l}")).collect(),
        exog: extra.map(|(m, _)| m),
        exog_names: extra.map(|(_, n)| n.to_vec()).unwrap_or_default(),
        weights: z.weights().map(|w| w.as_slice()),
    };
    two_stage(d, design, Method::Mr2, z.k_dagger())
}

/// `∏_k (G_k − Ḡ_k)` per row.
pub fn full_product_instrument<T: Real>(d: &Dataset<T>) -> Vec<T> {
    let means = d.column_means();
    let mut prod = vec![T::one(); d.n()];
    for (c, &m) in d.g().columns().zip(&means) {
        for (p, &g) in prod.iter_mut().zip(c) {
            *p = *p * (g - m);
        }
    }
    prod
}

/// Sample-analog ratio `Ê[Y Π] / Ê[A Π]` with `Π = ∏_k (G_k − Ḡ_k)`,
/// evaluated as a ratio of sample covariances.
pub fn ratio_estimate<T: Real>(d: &Dataset<T>) -> Result<T> {
    d.genotypes().require_binary()?;
    let pi = full_product_instrument(d);
    let pm = mean(&pi);
    let pc: Vec<T> = pi.iter().map(|&v| v - pm).collect();
    let nf = T::from_usize_lossy(d.n());
    let num = dot(&pc, d.y()) / nf;
    let den = dot(&pc, d.a()) / nf;
    let sd = |x: &[T]| centered_ss(x, None).sqrt() / nf.sqrt();
    let scale = sd(&pc) * sd(d.a());
    if !(den.abs() > T::lit(WEAK_ID_TOL) * scale) {
        return Err(weak("Ê[A ∏(G−Ḡ)]", den.as_f64(), None));
    }
    Ok(num / den)
}

/// Just-identified 2SLS with the single full-product instrument; its point
/// estimate equals [`ratio_estimate`].
pub fn fit_ratio<T: Real>(d: &Dataset<T>) -> Result<FitResult<T>> {
    d.genotypes().require_binary()?;
    let z = Matrix::from_columns(vec![full_product_instrument(d)])?;
    let design = Design {
        instruments: &z,
        drop_aliased: false,
        instrument_names: vec!["prod(G - mean G)".into()],
        exog: None,
        exog_names: Vec::new(),
        weights: None,
    };
    two_stage(d, design, Method::Ratio, Some(1))
}

/// 2SLS instrumenting with the `valid` (1-based) raw columns, with the
/// remaining columns as included exogenous regressors in both stages.
pub fn fit_oracle_2sls<T: Real>(d: &Dataset<T>, valid: &[usize]) -> Result<FitResult<T>> {
    if valid.is_empty() {
        return Err(Mr2Error::Parameter(
            "oracle 2SLS needs at least one valid index".into(),
        ));
    }
    let mut sorted = valid.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let valid = Subset::new(sorted, d.k())?;
    let inside: Vec<usize> = valid.positions().collect();
    let outside: Vec<usize> = (0..d.k()).filter(|p| !inside.contains(p)).collect();
    let names = d.genotypes().instrument_names();
    let z = d.g().select_columns(&inside);
    let x = (!outside.is_empty()).then(|| d.g().select_columns(&outside));
    let design = Design {
        instruments: &z,
        drop_aliased: false,
        instrument_names: inside.iter().map(|&p| names[p].clone()).collect(),
        exog: x.as_ref(),
        exog_names: outside.iter().map(|&p| names[p].clone()).collect(),
        weights: None,
    };
    two_stage(d, design, Method::Oracle, None)
}

/// 2SLS with every raw instrument column as an instrument.
pub fn fit_naive_2sls<T: Real>(d: &Dataset<T>) -> Result<FitResult<T>> {
    let design = Design {
        instruments: d.g(),
        drop_aliased: false,
        instrument_names: d.genotypes().instrument_names().to_vec(),
        exog: None,
        exog_names: Vec::new(),
        weights: None,
    };
    two_stage(d, design, Method::Naive, None)
}

/// How `E(ε²|G)` is estimated for the optimal combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualVariance {
    /// Constant `mean(ε²)`.
    Constant,
    /// Mean of `ε²` within each observed cell of the binary `G` vector.
    #[default]
    SaturatedCells,
}

/// Optimal linear combination of an interaction basis.
#[derive(Debug, Clone)]
pub struct HOptResult<T> {
    /// `θ̃ = Ê{E(ε²|G) H H'}⁻¹ Ê{H A}`.
    pub theta: Vec<T>,
    /// `V / n` with `V = [Ê{A H'} Ê{E(ε²|G) H H'}⁻¹ Ê{H A}]⁻¹`.
    pub variance: T,
    /// Just-identified estimate using `h_opt = θ̃' H` as the instrument.
    pub beta_a: T,
}

/// Basis columns are centered at their sample means before forming the
/// cross-moments, so the result is invariant to shifts of `A`.
pub fn h_opt_combination<T: Real>(
    d: &Dataset<T>,
    basis: &InstrumentMatrix<T>,
    residual: &[T],
    mode: ResidualVariance,
) -> Result<HOptResult<T>> {
    let n = d.n();
    if basis.n() != n || residual.len() != n {
        return Err(Mr2Error::InvalidData(
            "basis/residual length mismatch".into(),
        ));
    }
    let nf = T::from_usize_lossy(n);
    let hc: Vec<Vec<T>> = basis
        .z()
        .columns()
        .map(|c| {
            let m = mean(c);
            c.iter().map(|&v| v - m).collect()
        })
        .collect();
    let s2: Vec<T> = match mode {
        ResidualVariance::Constant => {
            let s = residual.iter().map(|&e| e * e).sum::<T>() / nf;
            vec![s; n]
        }
        ResidualVariance::SaturatedCells => {
            d.genotypes().require_binary()?;
            cell_means_of_squares(d, residual)
        }
    };
    let h = Matrix::from_columns(hc)?;
    let b: Vec<T> = h.columns().map(|c| dot(c, d.a()) / nf).collect();
    let mut omega = h.weighted_gram(Some(&s2));
    let jn = omega.ncols();
    for r in 0..jn {
        for c in 0..jn {
            omega[(r, c)] = omega[(r, c)] / nf;
        }
    }
    let label = |j: usize| format!("H{}", basis.labels()[j]);
    if s2.iter().all(|&v| v == T::zero()) {
        // ε ≡ 0: the bound is zero and every combination is exact; use the
        // unweighted projection.
        let qr = PivotedQr::new(h.clone());
        qr.require_full_rank(label)?;
        let theta = qr.solve(d.a())?;
        let hopt = h.mul_vec(&theta);
        return Ok(HOptResult {
            beta_a: dot(&hopt, d.y()) / dot(&hopt, d.a()),
            theta,
            variance: T::zero(),
        });
    }
    let qr = PivotedQr::new(omega);
    qr.require_full_rank(label)?;
    let theta = qr.solve(&b)?;
    let info = dot(&b, &theta);
    if !(info > T::zero()) {
        return Err(weak("Ê{A H'} θ̃", info.as_f64(), None));
    }
    let hopt = h.mul_vec(&theta);
    let den = dot(&hopt, d.a());
    if den == T::zero() {
        return Err(weak("Ê{h_opt A}", 0.0, None));
    }
    Ok(HOptResult {
        variance: T::one() / (info * nf),
        beta_a: dot(&hopt, d.y()) / den,
        theta,
    })
}

fn cell_means_of_squares<T: Real>(d: &Dataset<T>, residual: &[T]) -> Vec<T> {
    use std::collections::HashMap;
    let g = d.g();
    let keys: Vec<Vec<bool>> = (0..d.n())
        .map(|i| (0..d.k()).map(|j| g[(i, j)] == T::one()).collect())
        .collect();
    let mut acc: HashMap<&[bool], (T, usize)> = HashMap::new();
    for (key, &e) in keys.iter().zip(residual) {
        let slot = acc.entry(key.as_slice()).or_insert((T::zero(), 0));
        slot.0 = slot.0 + e * e;
        slot.1 += 1;
    }
    keys.iter()
        .map(|key| {
            let (s, c) = acc[key.as_slice()];
            s / T::from_usize_lossy(c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instruments::{build_instruments, AlleleCount, Centering};
    use crate::subsets::enumerate_family;

    fn grid4() -> Dataset<f64> {
        // {0,1}² with A = G1·G2 and Y = A
        let g1 = vec![0.0, 1.0, 0.0, 1.0];
        let g2 = vec![0.0, 0.0, 1.0, 1.0];
        let a: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| x * y).collect();
        Dataset::from_columns(a.clone(), a, vec![g1, g2]).unwrap()
    }

    #[test]
    fn ratio_noiseless_identity() {
        assert!((ratio_estimate(&grid4()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ratio_weak_identification() {
        // A = G1 + G2 is orthogonal to (G1-.5)(G2-.5) on the balanced grid.
        let g1 = vec![0.0, 1.0, 0.0, 1.0];
        let g2 = vec![0.0, 0.0, 1.0, 1.0];
        let a: Vec<f64> = g1.iter().zip(&g2).map(|(x, y)| x + y).collect();
        let d = Dataset::from_columns(vec![1.0, 2.0, 0.5, 3.0], a, vec![g1, g2]).unwrap();
        assert!(matches!(
            ratio_estimate(&d),
            Err(Mr2Error::WeakIdentification { .. })
        ));
    }

    fn toy(n: usize) -> Dataset<f64> {
        // Deterministic pseudo-random binary design with heteroskedastic noise.
        let mut s = 12345u64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut g: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
        let (mut y, mut a) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let gi: Vec<f64> = (0..3).map(|_| f64::from(next() < 0.6)).collect();
            let u = next() - 0.5;
            let ai = 0.5 + gi[0] * gi[1] + gi[0] * gi[1] * gi[2] + u + 0.3 * (next() - 0.5);
            let yi = 2.0 * ai + 0.2 * gi[2] + u * (1.0 + gi[0]) + 0.5 * (next() - 0.5);
            for (col, v) in g.iter_mut().zip(&gi) {
                col.push(*v);
            }
            a.push(ai);
            y.push(yi);
        }
        Dataset::from_columns(y, a, g).unwrap()
    }

    #[test]
    fn y_equals_a_gives_exact_fit() {
        let d = toy(200);
        let d = d
            .with_outcome_exposure(d.a().to_vec(), d.a().to_vec())
            .unwrap();
        let fam = enumerate_family(3, 2).unwrap();
        let z = build_instruments(d.genotypes(), &fam, &AlleleCount, Centering::Marginal).unwrap();
        let fit = fit_2sls(&d, &z, None).unwrap();
        assert!((fit.beta_a - 1.0).abs() < 1e-10);
        assert!(fit.var_sandwich.abs() < 1e-10);
        assert!(fit.var_homoskedastic.abs() < 1e-10);
        // zero residuals through the public variance functions as well
        assert!(variance_sandwich(&fit, &z).unwrap() < 1e-20);
        assert!(variance_homoskedastic(&fit, &z).unwrap() < 1e-20);
    }

    #[test]
    fn single_instrument_closed_forms() {
        let d = toy(500);
        let zc = full_product_instrument(&d);
        let z = InstrumentMatrix::raw(
            Matrix::from_columns(vec![zc.clone()]).unwrap(),
            vec![Subset::new(vec![1, 2, 3], 3).unwrap()],
        )
        .unwrap();
        let fit = fit_2sls(&d, &z, None).unwrap();
        // Independent oracle: centered-instrument ratio and scalar variance algebra.
        let n = d.n() as f64;
        let zm = zc.iter().sum::<f64>() / n;
        let zt: Vec<f64> = zc.iter().map(|v| v - zm).collect();
        let sy: f64 = zt.iter().zip(d.y()).map(|(a, b)| a * b).sum();
        let sa: f64 = zt.iter().zip(d.a()).map(|(a, b)| a * b).sum();
        let beta = sy / sa;
        assert!(((fit.beta_a - beta) / beta).abs() < 1e-10);

        let b0 = d.y().iter().sum::<f64>() / n - beta * d.a().iter().sum::<f64>() / n;
        let e: Vec<f64> = d
            .y()
            .iter()
            .zip(d.a())
            .map(|(y, a)| y - b0 - beta * a)
            .collect();
        let s2 = e.iter().map(|v| v * v).sum::<f64>() / n;
        let ez2 = zt.iter().map(|v| v * v).sum::<f64>() / n;
        let eza = sa / n;
        let homo = s2 * ez2 / (eza * eza) / n;
        assert!(((fit.var_homoskedastic - homo) / homo).abs() < 1e-9);
        let sand = zt.iter().zip(&e).map(|(z, e)| z * z * e * e).sum::<f64>() / (sa * sa);
        assert!(((fit.var_sandwich - sand) / sand).abs() < 1e-9);
        // ratio_estimate is the same estimator
        assert!(((ratio_estimate(&d).unwrap() - beta) / beta).abs() < 1e-10);
    }

    #[test]
    fn stage2_normal_equations_hold() {
        let d = toy(400);
        let fam = enumerate_family(3, 2).unwrap();
        let z = build_instruments(d.genotypes(), &fam, &AlleleCount, Centering::Marginal).unwrap();
        let fit = fit_2sls(&d, &z, None).unwrap();
        let n = d.n() as f64;
        let s0: f64 = fit.residual_eps.iter().sum::<f64>() / n;
        let s1: f64 = fit
            .residual_eps
            .iter()
            .zip(&fit.fitted_exposure)
            .map(|(e, a)| e * a)
            .sum::<f64>()
            / n;
        assert!(s0.abs() < 1e-10 && s1.abs() < 1e-10, "{s0} {s1}");
        // fitted exposure is the stage-1 design times the coefficients
        let design = z.z().with_intercept();
        let ah = design.mul_vec(&fit.stage1_coef);
        assert_eq!(ah, fit.fitted_exposure);
        assert!(fit.var_sandwich > 0.0 && fit.var_homoskedastic > 0.0);
    }

    #[test]
    fn aliased_generated_instruments_are_dropped() {
        // With allele-count H, k† = 1 gives K identical columns.
        let d = toy(300);
        let fam = enumerate_family(3, 1).unwrap();
        let z = build_instruments(d.genotypes(), &fam, &AlleleCount, Centering::Marginal).unwrap();
        let fit = fit_2sls(&d, &z, None).unwrap();
        assert_eq!((fit.j, fit.rank, fit.aliased.len()), (3, 1, 2));
        let ratio = fit_ratio(&d).unwrap();
        assert!(((fit.beta_a - ratio.beta_a) / ratio.beta_a).abs() < 1e-10);
        assert_eq!(fit.first_stage.df1, 1);
        let ah = z.z().with_intercept().mul_vec(&fit.stage1_coef);
        for (x, y) in ah.iter().zip(&fit.fitted_exposure) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_requires_indices() {
        let d = toy(100);
        assert!(matches!(
            fit_oracle_2sls(&d, &[]),
            Err(Mr2Error::Parameter(_))
        ));
        assert!(matches!(
            fit_oracle_2sls(&d, &[4]),
            Err(Mr2Error::Parameter(_))
        ));
        let fit = fit_oracle_2sls(&d, &[1, 2]).unwrap();
        assert_eq!(fit.exog_coef.len(), 1);
        assert_eq!(fit.j, 2);
    }

    #[test]
    fn naive_collinear_columns() {
        let d = toy(100);
        let g1 = d.g().col(0).to_vec();
        let d2 =
            Dataset::from_columns(d.y().to_vec(), d.a().to_vec(), vec![g1.clone(), g1]).unwrap();
        assert!(matches!(
            fit_naive_2sls(&d2),
            Err(Mr2Error::Collinearity { .. })
        ));
    }

    #[test]
    fn sample_size_error() {
        // J = 3 instruments need n > 5.
        let g = vec![
            vec![0.0, 1.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0, 1.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0, 0.0],
        ];
        let d = Dataset::from_columns(
            vec![1.0, 2.0, 3.0, 4.0, 6.0],
            vec![0.5, 1.0, 2.0, 1.0, 3.0],
            g,
        )
        .unwrap();
        let labels = (1..=3).map(|k| Subset::new(vec![k], 3).unwrap()).collect();
        let z = InstrumentMatrix::raw(d.g().clone(), labels).unwrap();
        assert!(matches!(
            fit_2sls(&d, &z, None),
            Err(Mr2Error::SampleSize { .. })
        ));
    }

    #[test]
    fn h_opt_zero_residual() {
        let d = toy(300);
        let basis = crate::instruments::interaction_basis(d.genotypes(), 2).unwrap();
        for mode in [ResidualVariance::Constant, ResidualVariance::SaturatedCells] {
            let r = h_opt_combination(&d, &basis, &vec![0.0; 300], mode).unwrap();
            assert_eq!(r.variance, 0.0);
        }
    }

    #[test]
    fn method_and_summary_serialization() {
        let d = toy(300);
        let fit = fit_naive_2sls(&d).unwrap();
        let js = serde_json::to_value(fit.summary()).unwrap();
        assert_eq!(js["method"], "naive");
        assert_eq!(js["K"], 3);
        assert_eq!(js["J"], 3);
        assert!(js["k_dagger"].is_null());
        assert!(js["first_stage_F"].as_f64().unwrap() > 0.0);
        assert_eq!("MR2".parse::<Method>().unwrap(), Method::Mr2);
    }
}
