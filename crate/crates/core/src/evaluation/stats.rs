use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Significance level for the t-test decision.
pub const SIGNIFICANCE: f64 = 0.05;

/// Sample mean and sample standard deviation (`n - 1` denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Zero for an empty sample; the deviation of a single value is zero.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        MeanStd { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestKind {
    /// Classical Student test with pooled variance.
    Pooled,
    /// Unequal-variance test with Satterthwaite degrees of freedom.
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// 1 when the null hypothesis of equal means is rejected.
    pub hypothesis: u8,
    pub p_value: f64,
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub kind: TTestKind,
}

/// Two-sample, two-tailed pooled-variance t-test.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    t_test_with(a, b, TTestKind::Pooled)
}

pub fn t_test_with(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "t-test needs at least two values per sample (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (MeanStd::of(a), MeanStd::of(b));
    let (va, vb) = (sa.std * sa.std, sb.std * sb.std);
    let diff = sa.mean - sb.mean;
    let (se, df) = match kind {
        TTestKind::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        TTestKind::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let df = if qa + qb > 0.0 {
                (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                na + nb - 2.0
            };
            ((qa + qb).sqrt(), df)
        }
    };
    let (t, p) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        }
    } else {
        let t = diff / se;
        (t, student_two_tailed(t, df))
    };
    Ok(TTestResult {
        hypothesis: u8::from(p < SIGNIFICANCE),
        p_value: p,
        t_statistic: t,
        degrees_of_freedom: df,
        kind,
    })
}

/// `P(|T| >= |t|)` for Student's t with `df` degrees of freedom.
pub fn student_two_tailed(t: f64, df: f64) -> f64 {
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}
