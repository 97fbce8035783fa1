//! Generated interaction instruments.
//!
//! For each `k→` in `K(k†)` the instrument is
//!
//! ```text
//! Z_k→ = (H_k→ − Ê H_k→) · ∏_{s ∉ k→} (G_s − Ê G_s)
//! ```
//!
//! which has conditional mean zero given the complement instruments, so it
//! cannot pick up a direct effect of any instrument outside `k→`. The
//! centering constants are plug-in means, fitted values of a linear
//! regression on covariates `M`, or weighted means under the
//! product-of-marginals law when instruments are dependent.

use std::collections::HashMap;

use crate::dataset::Genotypes;
use crate::error::{Mr2Error, Result};
use crate::linalg::{Matrix, PivotedQr};
use crate::scalar::{mean, weighted_mean, Real};
use crate::subsets::{complement, lex_combinations, Subset, SubsetFamily};

/// The function `h_k→` combining the instruments inside a subset.
///
/// Receives the subset's instrument values for one row, in index order.
pub trait HFunction<T>: Sync {
    fn eval(&self, values: &[T]) -> T;
}

/// Allele count `Σ_{s ∈ k→} G_s`, the default `h`.
#[derive(Debug, Clone, Copy, Default)]
pub struct AlleleCount;

impl<T: Real> HFunction<T> for AlleleCount {
    fn eval(&self, values: &[T]) -> T {
        values.iter().copied().sum()
    }
}

impl<T, F> HFunction<T> for F
where
    F: Fn(&[T]) -> T + Sync,
{
    fn eval(&self, values: &[T]) -> T {
        self(values)
    }
}

/// How `Ê(H)` and `Ê(G_s)` are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    /// Sample means.
    #[default]
    Marginal,
    /// Fitted values from least squares on an intercept plus `M`.
    CovariateLinear,
}

/// Centering constants recorded alongside the instruments.
#[derive(Debug, Clone, PartialEq)]
pub enum MeansUsed<T> {
    /// Plug-in means per instrument and per subset H.
    Marginal { g: Vec<T>, h: Vec<T> },
    /// Regression coefficients (intercept first, then one per covariate)
    /// for each instrument and each subset H.
    Conditional { g: Vec<Vec<T>>, h: Vec<Vec<T>> },
    /// Weighted means under the product-of-marginals law.
    Weighted { g: Vec<T>, h: Vec<T> },
}

/// Row weights `W = ∏_k f_k(G_k) / g(G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    /// Validates that all entries are finite and strictly positive.
    pub fn new(w: Vec<T>) -> Result<Self> {
        if let Some(i) = w.iter().position(|v| !v.is_finite() || *v <= T::zero()) {
            return Err(Mr2Error::InvalidData(format!(
                "weight at row {} is {} (must be finite and > 0)",
                i + 1,
                w[i]
            )));
        }
        Ok(Self { w })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Generated instruments with their subset labels.
#[derive(Debug, Clone)]
pub struct InstrumentMatrix<T> {
    z: Matrix<T>,
    labels: Vec<Subset>,
    means_used: MeansUsed<T>,
    weights: Option<WeightVector<T>>,
    k_dagger: Option<usize>,
}

impl<T: Real> InstrumentMatrix<T> {
    /// Wraps raw instrument columns (no centering recorded). Used for the
    /// oracle and naive baselines, which instrument with the `G` columns.
    pub fn raw(z: Matrix<T>, labels: Vec<Subset>) -> Result<Self> {
        if labels.len() != z.ncols() {
            return Err(Mr2Error::InvalidData("label count mismatch".into()));
        }
        Ok(Self {
            z,
            labels,
            means_used: MeansUsed::Marginal {
                g: Vec::new(),
                h: Vec::new(),
            },
            weights: None,
            k_dagger: None,
        })
    }

    pub fn z(&self) -> &Matrix<T> {
        &self.z
    }

    pub fn labels(&self) -> &[Subset] {
        &self.labels
    }

    pub fn means_used(&self) -> &MeansUsed<T> {
        &self.means_used
    }

    /// Row weights to apply in every cross-moment, if any.
    pub fn weights(&self) -> Option<&WeightVector<T>> {
        self.weights.as_ref()
    }

    pub fn k_dagger(&self) -> Option<usize> {
        self.k_dagger
    }

    /// Number of instrument columns `J`.
    pub fn j(&self) -> usize {
        self.z.ncols()
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// Writes `Z_<label>` columns as CSV.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let err = |e: csv::Error| Mr2Error::Csv(e.to_string());
        wr.write_record(self.labels.iter().map(|l| format!("Z_{}", l.label())))
            .map_err(err)?;
        for i in 0..self.z.nrows() {
            wr.write_record(self.z.row(i).into_iter().map(|v| v.as_f64().to_string()))
                .map_err(err)?;
        }
        wr.flush().map_err(|e| Mr2Error::Csv(e.to_string()))
    }
}

/// `H_k→ = Σ_{s ∈ k→} G_s` per row.
pub fn default_h<T: Real>(subset: &Subset, d: &Genotypes<T>) -> Result<Vec<T>> {
    eval_h(subset, d, &AlleleCount)
}

fn eval_h<T: Real, H: HFunction<T> + ?Sized>(
    subset: &Subset,
    d: &Genotypes<T>,
    h: &H,
) -> Result<Vec<T>> {
    let k = d.k();
    if let Some(&bad) = subset.indices().iter().find(|&&i| i == 0 || i > k) {
        return Err(Mr2Error::Parameter(format!(
            "index {bad} out of range 1..={k}"
        )));
    }
    let cols: Vec<&[T]> = subset.positions().map(|p| d.g().col(p)).collect();
    let mut buf = vec![T::zero(); cols.len()];
    Ok((0..d.n())
        .map(|i| {
            for (b, c) in buf.iter_mut().zip(&cols) {
                *b = c[i];
            }
            h.eval(&buf)
        })
        .collect())
}

/// Degenerate if the column is identically zero or its standard deviation
/// is negligible relative to its largest entry.
fn is_degenerate<T: Real>(c: &[T]) -> bool {
    let max = c.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if max == T::zero() {
        return true;
    }
    let mu = mean(c);
    let var = c.iter().map(|&v| (v - mu) * (v - mu)).sum::<T>() / T::from_usize_lossy(c.len());
    var.sqrt() <= T::lit(1e-12) * max
}

fn check_family<T: Real>(d: &Genotypes<T>, fam: &SubsetFamily) -> Result<()> {
    if fam.k_total() != d.k() {
        return Err(Mr2Error::Parameter(format!(
            "family built for K={} but data has K={}",
            fam.k_total(),
            d.k()
        )));
    }
    Ok(())
}

/// Shared assembly: centered complement products times centered H.
///
/// Factors are multiplied in index order with `H` at the position of the
/// subset's smallest index, so for `k† = 1` each column is bit-identical to
/// `∏_k (G_k − Ê G_k)` evaluated left to right.
fn assemble<T: Real>(
    fam: &SubsetFamily,
    g_centered: &[Vec<T>],
    h_centered: Vec<Vec<T>>,
) -> Result<Matrix<T>> {
    let k_total = fam.k_total();
    let n = g_centered.first().map_or(0, Vec::len);
    let mut cols = Vec::with_capacity(fam.len());
    for (subset, h) in fam.members().iter().zip(h_centered) {
        let first = subset.indices()[0];
        let comp = complement(subset.indices(), k_total)?;
        let mut col = vec![T::one(); n];
        let mut mul = |f: &[T]| {
            for (v, &x) in col.iter_mut().zip(f) {
                *v = *v * x;
            }
        };
        for &s in comp.iter().filter(|&&s| s < first) {
            mul(&g_centered[s - 1]);
        }
        mul(&h);
        for &s in comp.iter().filter(|&&s| s > first) {
            mul(&g_centered[s - 1]);
        }
        if is_degenerate(&col) {
            return Err(Mr2Error::DegenerateInstrument(format!("Z{subset}")));
        }
        cols.push(col);
    }
    Matrix::from_columns(cols)
}

/// Builds `Z` for every member of `fam`.
pub fn build_instruments<T: Real, H: HFunction<T> + ?Sized>(
    d: &Genotypes<T>,
    fam: &SubsetFamily,
    h: &H,
    centering: Centering,
) -> Result<InstrumentMatrix<T>> {
    check_family(d, fam)?;
    let hs = fam
        .members()
        .iter()
        .map(|s| eval_h(s, d, h))
        .collect::<Result<Vec<_>>>()?;

    let (g_centered, h_centered, means_used) = match centering {
        Centering::Marginal => {
            let g_means = d.column_means();
            let h_means: Vec<T> = hs.iter().map(|c| mean(c)).collect();
            let gc = d
                .g()
                .columns()
                .zip(&g_means)
                .map(|(c, &m)| c.iter().map(|&v| v - m).collect())
                .collect::<Vec<Vec<T>>>();
            let hc = hs
                .into_iter()
                .zip(&h_means)
                .map(|(c, &m)| c.into_iter().map(|v| v - m).collect())
                .collect();
            (
                gc,
                hc,
                MeansUsed::Marginal {
                    g: g_means,
                    h: h_means,
                },
            )
        }
        Centering::CovariateLinear => {
            let m = d.m().ok_or_else(|| {
                Mr2Error::Parameter(
                    "covariate adjustment requested but no covariates loaded".into(),
                )
            })?;
            let design = m.with_intercept();
            let qr = PivotedQr::new(design.clone());
            qr.require_full_rank(|j| {
                if j == 0 {
                    "intercept".to_owned()
                } else {
                    d.covariate_names()[j - 1].clone()
                }
            })?;
            let residualize = |c: &[T]| -> Result<(Vec<T>, Vec<T>)> {
                let coef = qr.solve(c)?;
                let fitted = design.mul_vec(&coef);
                Ok((c.iter().zip(&fitted).map(|(&v, &f)| v - f).collect(), coef))
            };
            let (gc, g_coef): (Vec<_>, Vec<_>) = d
                .g()
                .columns()
                .map(residualize)
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            let (hc, h_coef): (Vec<_>, Vec<_>) = hs
                .iter()
                .map(|c| residualize(c))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
            (
                gc,
                hc,
                MeansUsed::Conditional {
                    g: g_coef,
                    h: h_coef,
                },
            )
        }
    };

    let z = assemble(fam, &g_centered, h_centered)?;
    Ok(InstrumentMatrix {
        z,
        labels: fam.members().to_vec(),
        means_used,
        weights: None,
        k_dagger: Some(fam.k_dagger()),
    })
}

/// Options for [`estimate_weights`].
#[derive(Debug, Clone, Copy)]
pub struct WeightOptions {
    /// Maximum number of joint cells `2^K`.
    pub cell_cap: u64,
    /// Additive constant for the joint cell counts (0 = raw empirical pmf).
    pub smoothing: f64,
}

impl Default for WeightOptions {
    fn default() -> Self {
        Self {
            cell_cap: 1 << 20,
            smoothing: 0.0,
        }
    }
}

pub fn estimate_weights<T: Real>(d: &Genotypes<T>) -> Result<WeightVector<T>> {
    estimate_weights_with(d, WeightOptions::default())
}

pub fn estimate_weights_with<T: Real>(
    d: &Genotypes<T>,
    opts: WeightOptions,
) -> Result<WeightVector<T>> {
    d.require_binary()?;
    empirical_weights(d.g(), opts)
}

/// `w_i = ∏_k f̂_k(G_ik) / ĝ(G_i·)` from the empirical marginal and joint
/// pmfs of a 0/1 matrix. Every observed cell has count ≥ 1, so the joint
/// frequency in the denominator is never zero.
pub fn empirical_weights<T: Real>(g: &Matrix<T>, opts: WeightOptions) -> Result<WeightVector<T>> {
    let (n, k) = (g.nrows(), g.ncols());
    let cells: u128 = 1u128 << k.min(127);
    if k >= 64 || cells > opts.cell_cap as u128 {
        return Err(Mr2Error::Capacity {
            what: "joint instrument cells 2^K",
            required: cells,
            cap: opts.cell_cap as u128,
        });
    }
    if let Some(bad) = g
        .columns()
        .flat_map(|c| c.iter())
        .find(|&&v| v != T::zero() && v != T::one())
    {
        return Err(Mr2Error::Unsupported(format!(
            "weights need binary instruments, found {bad}"
        )));
    }
    let nf = T::from_usize_lossy(n);
    let p1: Vec<T> = g.columns().map(mean).collect();
    let keys: Vec<u64> = (0..n)
        .map(|i| (0..k).fold(0u64, |acc, j| acc | (u64::from(g[(i, j)] == T::one()) << j)))
        .collect();
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &key in &keys {
        *counts.entry(key).or_default() += 1;
    }
    let alpha = T::lit(opts.smoothing);
    let denom = nf + alpha * T::from_u128(cells).unwrap_or_else(T::infinity);
    let w = keys
        .iter()
        .enumerate()
        .map(|(i, key)| {
            let joint = (T::from_usize_lossy(counts[key]) + alpha) / denom;
            let prod = (0..k).fold(T::one(), |acc, j| {
                acc * if g[(i, j)] == T::one() {
                    p1[j]
                } else {
                    T::one() - p1[j]
                }
            });
            prod / joint
        })
        .collect();
    WeightVector::new(w)
}

/// Like [`build_instruments`], with centering constants taken as weighted
/// means. The returned matrix carries `w` so the estimator applies it
/// row-wise in every cross-moment.
pub fn build_weighted_instruments<T: Real, H: HFunction<T> + ?Sized>(
    d: &Genotypes<T>,
    fam: &SubsetFamily,
    w: &WeightVector<T>,
    h: &H,
) -> Result<InstrumentMatrix<T>> {
    check_family(d, fam)?;
    if w.len() != d.n() {
        return Err(Mr2Error::InvalidData(format!(
            "{} weights for {} rows",
            w.len(),
            d.n()
        )));
    }
    let ws = w.as_slice();
    let g_means: Vec<T> = d.g().columns().map(|c| weighted_mean(c, ws)).collect();
    let gc: Vec<Vec<T>> = d
        .g()
        .columns()
        .zip(&g_means)
        .map(|(c, &m)| c.iter().map(|&v| v - m).collect())
        .collect();
    let mut h_means = Vec::with_capacity(fam.len());
    let mut hc = Vec::with_capacity(fam.len());
    for s in fam.members() {
        let col = eval_h(s, d, h)?;
        let m = weighted_mean(&col, ws);
        h_means.push(m);
        hc.push(col.into_iter().map(|v| v - m).collect());
    }
    let z = assemble(fam, &gc, hc)?;
    Ok(InstrumentMatrix {
        z,
        labels: fam.members().to_vec(),
        means_used: MeansUsed::Weighted {
            g: g_means,
            h: h_means,
        },
        weights: Some(w.clone()),
        k_dagger: Some(fam.k_dagger()),
    })
}

/// Saturated interaction basis of orders `K−k†+1..=K` used for the optimal
/// instrument combination.
///
/// For an ℓ-subset `(k(1) < … < k(ℓ))` the basis function is
/// `∏_{s ≤ K−k†} (G_{k(s)} − Ê G_{k(s)}) · (∏_{t > K−k†} G_{k(t)} − Ê ∏ G_{k(t)})`.
pub fn interaction_basis<T: Real>(
    d: &Genotypes<T>,
    k_dagger: usize,
) -> Result<InstrumentMatrix<T>> {
    let k_total = d.k();
    if k_dagger == 0 || k_dagger > k_total {
        return Err(Mr2Error::Parameter(format!(
            "k_dagger={k_dagger} outside 1..={k_total}"
        )));
    }
    let n_centered = k_total - k_dagger;
    let g_means = d.column_means();
    let mut cols = Vec::new();
    let mut labels = Vec::new();
    for order in (n_centered + 1)..=k_total {
        for idx in lex_combinations(k_total, order) {
            let (head, tail) = idx.split_at(n_centered);
            let mut raw = vec![T::one(); d.n()];
            for &t in tail {
                for (v, &g) in raw.iter_mut().zip(d.g().col(t - 1)) {
                    *v = *v * g;
                }
            }
            let mu = mean(&raw);
            let mut col: Vec<T> = raw.into_iter().map(|v| v - mu).collect();
            for &s in head {
                let m = g_means[s - 1];
                for (v, &g) in col.iter_mut().zip(d.g().col(s - 1)) {
                    *v = *v * (g - m);
                }
            }
            let label = Subset::new(idx.clone(), k_total)?;
            if is_degenerate(&col) {
                return Err(Mr2Error::DegenerateInstrument(format!("H{label}")));
            }
            cols.push(col);
            labels.push(label);
        }
    }
    Ok(InstrumentMatrix {
        z: Matrix::from_columns(cols)?,
        labels,
        means_used: MeansUsed::Marginal {
            g: g_means,
            h: Vec::new(),
        },
        weights: None,
        k_dagger: Some(k_dagger),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::enumerate_family;

    fn geno(cols: Vec<Vec<f64>>) -> Genotypes<f64> {
        let names = (1..=cols.len()).map(|k| format!("G{k}")).collect();
        Genotypes::new(Matrix::from_columns(cols).unwrap(), names, None).unwrap()
    }

    #[test]
    fn default_h_sums_subset() {
        let d = geno(vec![
            vec![1.0, 0.0, 1.0, 1.0],
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
        ]);
        let s12 = Subset::new(vec![1, 2], 3).unwrap();
        assert_eq!(default_h(&s12, &d).unwrap(), vec![1.0, 1.0, 2.0, 2.0]);
        let s2 = Subset::new(vec![2], 3).unwrap();
        assert_eq!(default_h(&s2, &d).unwrap(), d.g().col(1).to_vec());
        let s123 = Subset::new(vec![1, 2, 3], 3).unwrap();
        assert_eq!(default_h(&s123, &d).unwrap()[3], 3.0);
    }

    #[test]
    fn k2_kdag1_columns_coincide() {
        // Means are (0.5, 0.5); row (1,0) gives (1-.5)(0-.5) = -0.25 in both columns.
        let d = geno(vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]]);
        let fam = enumerate_family(2, 1).unwrap();
        let z = build_instruments(&d, &fam, &AlleleCount, Centering::Marginal).unwrap();
        assert_eq!(z.j(), 2);
        assert_eq!(z.z()[(0, 0)], -0.25);
        assert_eq!(z.z()[(0, 1)], -0.25);
        assert_eq!(z.z().col(0), z.z().col(1));
    }

    #[test]
    fn full_family_is_centered_h() {
        let d = geno(vec![
            vec![1.0, 0.0, 1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0, 1.0, 0.0],
        ]);
        let fam = enumerate_family(3, 3).unwrap();
        let z = build_instruments(&d, &fam, &AlleleCount, Centering::Marginal).unwrap();
        let h = default_h(&fam.members()[0], &d).unwrap();
        let mu = mean(&h);
        for (zi, hi) in z.z().col(0).iter().zip(&h) {
            assert!((zi - (hi - mu)).abs() < 1e-15);
        }
        assert!(mean(z.z().col(0)).abs() < 1e-15);
    }

    #[test]
    fn constant_h_is_degenerate() {
        let d = geno(vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]]);
        let fam = enumerate_family(2, 2).unwrap();
        let w = WeightVector::new(vec![1.0; 4]).unwrap();
        let err = build_weighted_instruments(&d, &fam, &w, &|_: &[f64]| 3.0).unwrap_err();
        assert!(matches!(err, Mr2Error::DegenerateInstrument(_)), "{err}");
    }

    #[test]
    fn weights_for_duplicated_columns() {
        let c = vec![1.0, 1.0, 0.0, 0.0];
        let d = geno(vec![c.clone(), c]);
        let w = estimate_weights(&d).unwrap();
        // f1(1) f2(1) / g(1,1) = 0.25 / 0.5
        assert_eq!(w.as_slice(), &[0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn single_row_weight_is_one() {
        let g = Matrix::from_rows(&[vec![1.0, 0.0, 1.0]]).unwrap();
        let w = empirical_weights(&g, WeightOptions::default()).unwrap();
        assert_eq!(w.as_slice(), &[1.0]);
    }

    #[test]
    fn balanced_factorial_weights_are_one() {
        // Every cell of {0,1}^3 appears equally often.
        let rows: Vec<Vec<f64>> = (0..16)
            .map(|i| (0..3).map(|j| ((i >> j) & 1) as f64).collect())
            .collect();
        let g = Matrix::from_rows(&rows).unwrap();
        let w = empirical_weights(&g, WeightOptions::default()).unwrap();
        assert!(w.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn weights_reject_non_binary_and_large_k() {
        let d = geno(vec![vec![0.0, 2.0, 1.0]]);
        assert!(matches!(
            estimate_weights(&d),
            Err(Mr2Error::Unsupported(_))
        ));
        let g = Matrix::<f64>::zeros(3, 21);
        assert!(matches!(
            empirical_weights(&g, WeightOptions::default()),
            Err(Mr2Error::Capacity { .. })
        ));
    }

    #[test]
    fn covariate_adjustment_requires_covariates() {
        let d = geno(vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]]);
        let fam = enumerate_family(2, 1).unwrap();
        assert!(matches!(
            build_instruments(&d, &fam, &AlleleCount, Centering::CovariateLinear),
            Err(Mr2Error::Parameter(_))
        ));
    }

    #[test]
    fn collinear_covariates_are_rejected() {
        let g = Matrix::from_columns(vec![
            vec![1.0, 0.0, 1.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0, 1.0, 1.0],
        ])
        .unwrap();
        let m = Matrix::from_columns(vec![
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![2.0, 4.0, 6.0, 8.0, 10.0],
        ])
        .unwrap();
        let d = Genotypes::new(
            g,
            vec!["G1".into(), "G2".into()],
            Some((m, vec!["PC1".into(), "PC2".into()])),
        )
        .unwrap();
        let fam = enumerate_family(2, 1).unwrap();
        let err =
            build_instruments(&d, &fam, &AlleleCount, Centering::CovariateLinear).unwrap_err();
        assert!(matches!(err, Mr2Error::Collinearity { .. }), "{err}");
    }

    #[test]
    fn interaction_basis_shape() {
        let rows: Vec<Vec<f64>> = (0..64)
            .map(|i| (0..5).map(|j| (((i * 7 + 3) >> j) & 1) as f64).collect())
            .collect();
        let g = Matrix::from_rows(&rows).unwrap();
        let d = Genotypes::new(g, (1..=5).map(|k| format!("G{k}")).collect(), None).unwrap();
        let b = interaction_basis(&d, 2).unwrap();
        // orders 4 and 5: 5 + 1 columns
        assert_eq!(b.j(), 6);
        assert_eq!(b.labels()[5].indices(), &[1, 2, 3, 4, 5]);
        let b1 = interaction_basis(&d, 1).unwrap();
        assert_eq!(b1.j(), 1);
        // k†=1: the single basis function is the full centered product.
        let means = d.column_means();
        for i in 0..d.n() {
            let p: f64 = (0..5).map(|j| d.g()[(i, j)] - means[j]).product();
            assert!((b1.z()[(i, 0)] - p).abs() < 1e-14);
        }
    }
}
