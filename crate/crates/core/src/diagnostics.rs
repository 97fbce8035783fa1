//! First-stage F statistic and the Hausman comparison across `k†` values.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, Normal};

use crate::dataset::Dataset;
use crate::error::{Mr2Error, Result};
use crate::estimator::{independent_instruments, FitResult, VarianceMode};
use crate::instruments::InstrumentMatrix;
use crate::linalg::{least_squares, Matrix};
use crate::scalar::{mean, weighted_mean, Real};

/// Classical joint F test that all instrument coefficients are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstStageF<T> {
    pub f: T,
    pub df1: usize,
    pub df2: usize,
    /// Upper tail of `F(df1, df2)` at `f`.
    pub p_value: f64,
}

pub(crate) fn f_test<T: Real>(rss0: T, rss1: T, df1: usize, df2: usize) -> FirstStageF<T> {
    let num = (rss0 - rss1).max(T::zero()) / T::from_usize_lossy(df1);
    let den = rss1 / T::from_usize_lossy(df2);
    let f = if den > T::zero() {
        num / den
    } else if num > T::zero() {
        T::infinity()
    } else {
        T::nan()
    };
    let p_value = f_upper_tail(f.as_f64(), df1, df2);
    FirstStageF {
        f,
        df1,
        df2,
        p_value,
    }
}

fn f_upper_tail(f: f64, df1: usize, df2: usize) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f == f64::INFINITY {
        return 0.0;
    }
    match FisherSnedecor::new(df1 as f64, df2 as f64) {
        Ok(dist) => dist.sf(f).clamp(0.0, 1.0),
        Err(_) => f64::NAN,
    }
}

/// Regresses `A` on `(1, Z)` and tests joint nullity of the `Z` block.
/// Row weights on `z`, if present, give the weighted-least-squares version.
/// Exactly aliased columns are dropped first, so `df1` is the rank of `Z`.
pub fn first_stage_f<T: Real>(d: &Dataset<T>, z: &InstrumentMatrix<T>) -> Result<FirstStageF<T>> {
    let n = d.n();
    if n <= z.j() + 1 {
        return Err(Mr2Error::SampleSize {
            n,
            required: z.j() + 1,
        });
    }
    let kept = independent_instruments(z.z(), None, &[])?;
    let j = kept.len();
    let w = z.weights().map(|w| w.as_slice());
    let labels = z.labels();
    let zk = Matrix::from_columns(kept.iter().map(|&c| z.z().col(c).to_vec()).collect())?;
    let fit = least_squares(&zk.with_intercept(), d.a(), w, |c| {
        if c == 0 {
            "intercept".to_owned()
        } else {
            format!("Z{}", labels[kept[c - 1]])
        }
    })?;
    let rss1 = fit.rss(w);
    let rss0 = match w {
        Some(w) => {
            let m = weighted_mean(d.a(), w);
            d.a()
                .iter()
                .zip(w)
                .map(|(&a, &wi)| wi * (a - m) * (a - m))
                .sum()
        }
        None => {
            let m = mean(d.a());
            d.a().iter().map(|&a| (a - m) * (a - m)).sum()
        }
    };
    Ok(f_test(rss0, rss1, j, n - j - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HausmanStatus {
    Ok,
    /// `V_ref − V_alt ≤ 0`; no statistic is reported.
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HausmanResult {
    pub ht: Option<f64>,
    pub p_value: Option<f64>,
    pub k_ref: Option<usize>,
    pub k_alt: Option<usize>,
    pub status: HausmanStatus,
}

impl HausmanResult {
    pub fn is_applicable(&self) -> bool {
        self.status == HausmanStatus::Ok
    }
}

/// `ht = (β_ref − β_alt) / √(V_ref − V_alt)`, two-sided normal p-value.
pub fn hausman_from_estimates(
    beta_ref: f64,
    se_ref: f64,
    beta_alt: f64,
    se_alt: f64,
    k_ref: Option<usize>,
    k_alt: Option<usize>,
) -> HausmanResult {
    let dv = se_ref * se_ref - se_alt * se_alt;
    if !(dv > 0.0) || !beta_ref.is_finite() || !beta_alt.is_finite() {
        return HausmanResult {
            ht: None,
            p_value: None,
            k_ref,
            k_alt,
            status: HausmanStatus::NotApplicable,
        };
    }
    let ht = (beta_ref - beta_alt) / dv.sqrt();
    let std = Normal::standard();
    let p = (2.0 * std.sf(ht.abs())).clamp(0.0, 1.0);
    HausmanResult {
        ht: Some(ht),
        p_value: Some(p),
        k_ref,
        k_alt,
        status: HausmanStatus::Ok,
    }
}

/// Compares a reference fit (typically the larger `k†`, hence larger
/// variance) against an alternative fit on the same data.
pub fn hausman_test<T: Real>(
    fit_ref: &FitResult<T>,
    fit_alt: &FitResult<T>,
    mode: VarianceMode,
) -> Result<HausmanResult> {
    if fit_ref.n != fit_alt.n {
        return Err(Mr2Error::InvalidData(format!(
            "fits use different samples (n={} vs n={})",
            fit_ref.n, fit_alt.n
        )));
    }
    Ok(hausman_from_estimates(
        fit_ref.beta_a.as_f64(),
        fit_ref.se(mode).as_f64(),
        fit_alt.beta_a.as_f64(),
        fit_alt.se(mode).as_f64(),
        fit_ref.k_dagger,
        fit_alt.k_dagger,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subsets::Subset;

    #[test]
    fn table_values() {
        let r = hausman_from_estimates(0.649, 0.147, 0.363, 0.048, Some(4), Some(2));
        assert!((r.ht.unwrap() - 2.0584).abs() < 1e-3);
        assert!((r.p_value.unwrap() - 0.0396).abs() < 1e-3);
        let r = hausman_from_estimates(0.543, 0.296, 0.496, 0.090, Some(4), Some(2));
        assert!((r.ht.unwrap() - 0.1667).abs() < 1e-3);
        assert!(r.p_value.unwrap() > 0.86 && r.p_value.unwrap() < 0.88);
    }

    #[test]
    fn equal_variances_not_applicable() {
        let r = hausman_from_estimates(1.0, 0.1, 1.0, 0.1, None, None);
        assert_eq!(r.status, HausmanStatus::NotApplicable);
        assert!(r.ht.is_none());
        let js = serde_json::to_value(r).unwrap();
        assert_eq!(js["status"], "not_applicable");
    }

    #[test]
    fn antisymmetric() {
        let a = hausman_from_estimates(0.3, 0.2, 0.1, 0.1, None, None);
        let b = hausman_from_estimates(0.1, 0.2, 0.3, 0.1, None, None);
        assert_eq!(a.ht.unwrap(), -b.ht.unwrap());
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn f_against_hand_computation() {
        // A = 2 Z + noise pattern, n = 6, J = 1.
        let z = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let a = vec![0.1, 2.0, 3.9, 6.2, 7.8, 10.1];
        let d = Dataset::from_columns(a.clone(), a.clone(), vec![z.clone()]).unwrap();
        let zm = InstrumentMatrix::raw(
            Matrix::from_columns(vec![z.clone()]).unwrap(),
            vec![Subset::new(vec![1], 1).unwrap()],
        )
        .unwrap();
        let f = first_stage_f(&d, &zm).unwrap();
        // Simple regression: F = r²/(1−r²)·(n−2).
        let n = 6.0;
        let (mz, ma) = (z.iter().sum::<f64>() / n, a.iter().sum::<f64>() / n);
        let sxy: f64 = z.iter().zip(&a).map(|(x, y)| (x - mz) * (y - ma)).sum();
        let sxx: f64 = z.iter().map(|x| (x - mz).powi(2)).sum();
        let syy: f64 = a.iter().map(|y| (y - ma).powi(2)).sum();
        let r2 = sxy * sxy / (sxx * syy);
        let want = r2 / (1.0 - r2) * (n - 2.0);
        assert!(((f.f - want) / want).abs() < 1e-9);
        assert_eq!((f.df1, f.df2), (1, 4));
        assert!(f.p_value < 1e-4);
    }

    #[test]
    fn sample_size() {
        let d =
            Dataset::from_columns(vec![1.0, 2.0], vec![1.0, 2.0], vec![vec![0.0, 1.0]]).unwrap();
        let zm =
            InstrumentMatrix::raw(d.g().clone(), vec![Subset::new(vec![1], 1).unwrap()]).unwrap();
        assert!(matches!(
            first_stage_f(&d, &zm),
            Err(Mr2Error::SampleSize { .. })
        ));
    }
}
