//! Histogram similarity metrics and the ordering contract between scores.
//!
//! Four classic comparison methods over L1-normalized histogram features:
//! Pearson correlation, chi-squared, intersection and Bhattacharyya distance.
//! Two of them grow with similarity and two shrink, so scores carry their
//! metric and [`more_similar`] is the single place that knows which direction
//! "better" is.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::{feature_distance_ready, HistogramFeature};
use crate::scalar::Real;

/// Errors from metric evaluation or score comparison.
#[derive(Debug, Error)]
pub enum MetricsError {
    /// The two features differ in bins, channels or regions.
    #[error("incompatible features: {a_len} values ({a_shape}) vs {b_len} values ({b_shape})")]
    IncompatibleFeatures {
        a_len: usize,
        a_shape: String,
        b_len: usize,
        b_shape: String,
    },
    /// Scores from different metrics cannot be ordered against each other.
    #[error("cannot compare scores of different metrics: {a} vs {b}")]
    MixedMetrics { a: MetricKind, b: MetricKind },
}

/// Whether larger or smaller score values mean "more similar".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    HigherIsMoreSimilar,
    LowerIsMoreSimilar,
}

/// The four histogram-comparison methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Correlation,
    ChiSquared,
    Intersection,
    Bhattacharyya,
}

impl MetricKind {
    /// All four metrics, in a stable order.
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Correlation,
        MetricKind::ChiSquared,
        MetricKind::Intersection,
        MetricKind::Bhattacharyya,
    ];

    /// Correlation and intersection are similarities; chi-squared and
    /// Bhattacharyya are distances.
    pub fn polarity(self) -> Polarity {
        match self {
            MetricKind::Correlation | MetricKind::Intersection => Polarity::HigherIsMoreSimilar,
            MetricKind::ChiSquared | MetricKind::Bhattacharyya => Polarity::LowerIsMoreSimilar,
        }
    }

    /// Canonical lowercase name, matching the CLI flag and JSON spelling.
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Correlation => "correlation",
            MetricKind::ChiSquared => "chi-squared",
            MetricKind::Intersection => "intersection",
            MetricKind::Bhattacharyya => "bhattacharyya",
        }
    }

    /// The score value a metric assigns when comparing a feature to itself.
    pub fn perfect_score(self) -> f64 {
        match self.polarity() {
            Polarity::HigherIsMoreSimilar => 1.0,
            Polarity::LowerIsMoreSimilar => 0.0,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "correlation" => Ok(MetricKind::Correlation),
            "chi-squared" | "chi_squared" | "chisquared" => Ok(MetricKind::ChiSquared),
            "intersection" => Ok(MetricKind::Intersection),
            "bhattacharyya" => Ok(MetricKind::Bhattacharyya),
            other => Err(format!(
                "unknown metric '{other}' (expected correlation, chi-squared, \
                 intersection or bhattacharyya)"
            )),
        }
    }
}

/// A metric value tagged with the metric that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score<T = f64> {
    pub value: T,
    pub metric: MetricKind,
}

fn check_comparable<T: Real>(
    p: &HistogramFeature<T>,
    q: &HistogramFeature<T>,
) -> Result<(), MetricsError> {
    if feature_distance_ready(p, q) {
        Ok(())
    } else {
        let shape = |f: &HistogramFeature<T>| {
            format!(
                "{} regions x {} channels x {} bins",
                f.regions(),
                f.channels(),
                f.bins_per_channel()
            )
        };
        Err(MetricsError::IncompatibleFeatures {
            a_len: p.len(),
            a_shape: shape(p),
            b_len: q.len(),
            b_shape: shape(q),
        })
    }
}

/// Pearson correlation of the two feature vectors: `1` is perfect agreement,
/// `-1` perfect anti-correlation.
///
/// Elementwise-equal inputs return exactly `1` — the analytic value — so a
/// feature compared against an identical copy is never short by accumulated
/// rounding. Degenerate (zero-variance) vectors are defined rather than an
/// error: a constant vector against anything unequal scores `0`. The result
/// is clamped to `[-1, 1]` to shed floating-point residue.
pub fn correlation<T: Real>(
    p: &HistogramFeature<T>,
    q: &HistogramFeature<T>,
) -> Result<Score<T>, MetricsError> {
    check_comparable(p, q)?;
    if p.values() == q.values() {
        return Ok(Score {
            value: T::one(),
            metric: MetricKind::Correlation,
        });
    }
    let n = T::from_f64(p.len() as f64);
    let mean_p = p.values().iter().copied().sum::<T>() / n;
    let mean_q = q.values().iter().copied().sum::<T>() / n;

    let mut num = T::zero();
    let mut var_p = T::zero();
    let mut var_q = T::zero();
    for (&pv, &qv) in p.values().iter().zip(q.values()) {
        let dp = pv - mean_p;
        let dq = qv - mean_q;
        num += dp * dq;
        var_p += dp * dp;
        var_q += dq * dq;
    }

    // Unequal inputs with any zero variance score 0; both-zero with equal
    // values cannot reach here (handled by the equality fast path above).
    let value = if var_p.is_zero() || var_q.is_zero() {
        T::zero()
    } else {
        (num / (var_p * var_q).sqrt()).max(-T::one()).min(T::one())
    };
    Ok(Score {
        value,
        metric: MetricKind::Correlation,
    })
}

/// Chi-squared statistic `Σ (pᵢ−qᵢ)²/pᵢ` over bins where `pᵢ > 0`.
///
/// Deliberately asymmetric: the first argument plays the "expected"
/// distribution, and its zero bins contribute nothing regardless of `q`.
pub fn chi_squared<T: Real>(
    p: &HistogramFeature<T>,
    q: &HistogramFeature<T>,
) -> Result<Score<T>, MetricsError> {
    check_comparable(p, q)?;
    let mut acc = T::zero();
    for (&pv, &qv) in p.values().iter().zip(q.values()) {
        if pv > T::zero() {
            let d = pv - qv;
            acc += d * d / pv;
        }
    }
    Ok(Score {
        value: acc,
        metric: MetricKind::ChiSquared,
    })
}

/// Histogram intersection `Σ min(pᵢ, qᵢ)` — the shared probability mass,
/// `1` for identical normalized features and `0` for disjoint supports.
pub fn intersection<T: Real>(
    p: &HistogramFeature<T>,
    q: &HistogramFeature<T>,
) -> Result<Score<T>, MetricsError> {
    check_comparable(p, q)?;
    let value = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&pv, &qv)| pv.min(qv))
        .sum::<T>();
    Ok(Score {
        value,
        metric: MetricKind::Intersection,
    })
}

/// Bhattacharyya distance `√(1 − Σ√(pᵢqᵢ))` for L1-normalized inputs.
///
/// The coefficient `Σ√(pᵢqᵢ)` measures overlap and reaches 1 on identical
/// distributions; the inner subtraction is clamped at zero so floating-point
/// residue cannot produce a NaN. Elementwise-equal inputs return exactly `0`
/// (the analytic value): a feature whose stored sum is `1 ± 1e-13` would
/// otherwise self-compare to `√1e-13 ≈ 3e-7`, amplifying harmless
/// normalization residue through the square root. Values range over `[0, 1]`.
pub fn bhattacharyya<T: Real>(
    p: &HistogramFeature<T>,
    q: &HistogramFeature<T>,
) -> Result<Score<T>, MetricsError> {
    check_comparable(p, q)?;
    if p.values() == q.values() {
        return Ok(Score {
            value: T::zero(),
            metric: MetricKind::Bhattacharyya,
        });
    }
    let coefficient = p
        .values()
        .iter()
        .zip(q.values())
        .map(|(&pv, &qv)| (pv * qv).sqrt())
        .sum::<T>();
    let value = (T::one() - coefficient).max(T::zero()).sqrt();
    Ok(Score {
        value,
        metric: MetricKind::Bhattacharyya,
    })
}

/// Evaluates the given metric — dispatch helper over the four functions.
pub fn score<T: Real>(
    metric: MetricKind,
    p: &HistogramFeature<T>,
    q: &HistogramFeature<T>,
) -> Result<Score<T>, MetricsError> {
    match metric {
        MetricKind::Correlation => correlation(p, q),
        MetricKind::ChiSquared => chi_squared(p, q),
        MetricKind::Intersection => intersection(p, q),
        MetricKind::Bhattacharyya => bhattacharyya(p, q),
    }
}

/// Orders two scores of the same metric by similarity.
///
/// `Ordering::Less` means `a` is *more similar* (ranks first): larger values
/// win for similarity metrics, smaller values win for distances. Equal
/// values compare equal; any tie-breaking beyond that is the caller's
/// business.
pub fn more_similar<T: Real>(a: &Score<T>, b: &Score<T>) -> Result<Ordering, MetricsError> {
    if a.metric != b.metric {
        return Err(MetricsError::MixedMetrics {
            a: a.metric,
            b: b.metric,
        });
    }
    let ordering = match a.metric.polarity() {
        Polarity::HigherIsMoreSimilar => b.value.partial_cmp(&a.value),
        Polarity::LowerIsMoreSimilar => a.value.partial_cmp(&b.value),
    };
    // Score values are finite by construction, so the comparison is total.
    Ok(ordering.expect("score values are finite"))
}
