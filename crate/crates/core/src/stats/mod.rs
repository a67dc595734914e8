//! Two-sample t, one-way ANOVA and Kruskal-Wallis tests with exact tail
//! probabilities, plus the significance coding used in every report.

pub mod special;

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::StatsError;

pub use special::{beta_inc, gamma_p, gamma_q, ln_gamma};

/// p below this is coded `**`.
pub const STRONG_THRESHOLD: f64 = 1e-10;
/// p at or below this (and not strong) is coded `*`.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StatisticKind {
    #[serde(rename = "t")]
    T,
    #[serde(rename = "F")]
    F,
    #[serde(rename = "H")]
    H,
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StatisticKind::T => "t",
            StatisticKind::F => "F",
            StatisticKind::H => "H",
        })
    }
}

/// Reference distribution for [`tail_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    StudentT,
    FisherF,
    ChiSquared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Df {
    One(f64),
    Two(f64, f64),
}

impl Serialize for Df {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Df::One(a) => [a].serialize(s),
            Df::Two(a, b) => [a, b].serialize(s),
        }
    }
}

impl fmt::Display for Df {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Df::One(a) => write!(f, "{a}"),
            Df::Two(a, b) => write!(f, "{a},{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Significance {
    Ns,
    Star,
    DoubleStar,
}

impl Significance {
    pub fn marker(self) -> &'static str {
        match self {
            Significance::Ns => "",
            Significance::Star => "*",
            Significance::DoubleStar => "**",
        }
    }
}

pub fn significance(p: f64) -> Significance {
    if p < STRONG_THRESHOLD {
        Significance::DoubleStar
    } else if p <= ALPHA {
        Significance::Star
    } else {
        Significance::Ns
    }
}

/// Writes non-finite floats as strings so JSON output stays valid.
pub(crate) fn serialize_float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    #[serde(serialize_with = "serialize_float")]
    pub statistic: f64,
    pub statistic_kind: StatisticKind,
    pub df: Df,
    pub p_value: f64,
    pub significance: Significance,
}

impl TestResult {
    fn new(statistic: f64, kind: StatisticKind, df: Df, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult { statistic, statistic_kind: kind, df, p_value, significance: significance(p_value) }
    }
}

/// Upper-tail probability P(X > statistic) under the given distribution.
pub fn tail_probability(dist: Distribution, statistic: f64, df: Df) -> Result<f64, StatsError> {
    let check = |d: f64| if d > 0.0 && d.is_finite() { Ok(d) } else { Err(StatsError::InvalidDf) };
    if statistic.is_nan() {
        return Err(StatsError::NonFinite);
    }
    match (dist, df) {
        (Distribution::StudentT, Df::One(v)) => {
            let v = check(v)?;
            if statistic == f64::INFINITY {
                return Ok(0.0);
            }
            if statistic == f64::NEG_INFINITY {
                return Ok(1.0);
            }
            let t2 = statistic * statistic;
            let half = 0.5 * special::beta_inc_split(v / 2.0, 0.5, v / (v + t2), t2 / (v + t2))?;
            Ok(if statistic >= 0.0 { half } else { 1.0 - half })
        }
        (Distribution::FisherF, Df::Two(d1, d2)) => {
            let (d1, d2) = (check(d1)?, check(d2)?);
            if statistic <= 0.0 {
                return Ok(1.0);
            }
            if statistic == f64::INFINITY {
                return Ok(0.0);
            }
            let denom = d2 + d1 * statistic;
            special::beta_inc_split(d2 / 2.0, d1 / 2.0, d2 / denom, d1 * statistic / denom)
        }
        (Distribution::ChiSquared, Df::One(k)) => {
            let k = check(k)?;
            if statistic <= 0.0 {
                return Ok(1.0);
            }
            if statistic == f64::INFINITY {
                return Ok(0.0);
            }
            special::gamma_q(k / 2.0, statistic / 2.0)
        }
        _ => Err(StatsError::InvalidDf),
    }
}

/// Statistic value whose upper tail equals `alpha`, found by bisection.
pub fn critical_value(dist: Distribution, df: Df, alpha: f64) -> Result<f64, StatsError> {
    let tail = |x: f64| tail_probability(dist, x, df);
    let (mut lo, mut hi) = (0.0, 1.0);
    while tail(hi)? > alpha {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(StatsError::NoConvergence("critical value bracket"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn check_finite(sample: &[f64]) -> Result<(), StatsError> {
    if sample.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

/// Sum of squared deviations from the sample mean (two-pass).
fn sum_sq_dev(sample: &[f64], m: f64) -> f64 {
    sample.iter().map(|v| (v - m) * (v - m)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestVariant {
    #[default]
    Pooled,
    Welch,
}

/// Independent two-sample t-test, two-sided. Positive t means `x` has the
/// larger mean.
pub fn t_test(x: &[f64], y: &[f64], variant: TTestVariant) -> Result<TestResult, StatsError> {
    for s in [x, y] {
        if s.len() < 2 {
            return Err(StatsError::SampleTooSmall { needed: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (mx, my) = (mean(x), mean(y));
    let (ssx, ssy) = (sum_sq_dev(x, mx), sum_sq_dev(y, my));
    let (se, df) = match variant {
        TTestVariant::Pooled => {
            let df = nx + ny - 2.0;
            let pooled = (ssx + ssy) / df;
            ((pooled * (1.0 / nx + 1.0 / ny)).sqrt(), df)
        }
        TTestVariant::Welch => {
            let (vx, vy) = (ssx / (nx - 1.0) / nx, ssy / (ny - 1.0) / ny);
            let se2 = vx + vy;
            let denom = vx * vx / (nx - 1.0) + vy * vy / (ny - 1.0);
            let df = if denom > 0.0 { se2 * se2 / denom } else { nx + ny - 2.0 };
            (se2.sqrt(), df)
        }
    };
    let diff = mx - my;
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            TestResult::new(0.0, StatisticKind::T, Df::One(df), 1.0)
        } else {
            TestResult::new(diff.signum() * f64::INFINITY, StatisticKind::T, Df::One(df), 0.0)
        });
    }
    let t = diff / se;
    // two-sided p = I_{df/(df+t^2)}(df/2, 1/2)
    let p = special::beta_inc_split(df / 2.0, 0.5, df / (df + t * t), t * t / (df + t * t))?;
    Ok(TestResult::new(t, StatisticKind::T, Df::One(df), p))
}

/// One-way ANOVA F-test.
pub fn anova_f(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: k });
    }
    for g in groups {
        if g.is_empty() {
            return Err(StatsError::SampleTooSmall { needed: 1, got: 0 });
        }
        check_finite(g)?;
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= k {
        return Err(StatsError::SampleTooSmall { needed: k + 1, got: n });
    }
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups {
        let m = mean(g);
        ssb += g.len() as f64 * (m - grand) * (m - grand);
        ssw += sum_sq_dev(g, m);
    }
    let (df1, df2) = ((k - 1) as f64, (n - k) as f64);
    let df = Df::Two(df1, df2);
    let (msb, msw) = (ssb / df1, ssw / df2);
    if msw == 0.0 {
        return Ok(if msb == 0.0 {
            TestResult::new(0.0, StatisticKind::F, df, 1.0)
        } else {
            TestResult::new(f64::INFINITY, StatisticKind::F, df, 0.0)
        });
    }
    let f = msb / msw;
    let p = tail_probability(Distribution::FisherF, f, df)?;
    Ok(TestResult::new(f, StatisticKind::F, df, p))
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share rank (i+1 + j)/2
        let rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Kruskal-Wallis H-test with tie correction; chi-squared reference on k-1 df.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult, StatsError> {
    let k = groups.len();
    if k < 2 {
        return Err(StatsError::TooFewGroups { needed: 2, got: k });
    }
    for g in groups {
        if g.is_empty() {
            return Err(StatsError::SampleTooSmall { needed: 1, got: 0 });
        }
        check_finite(g)?;
    }
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len();
    if n < 3 {
        return Err(StatsError::SampleTooSmall { needed: 3, got: n });
    }
    let df = Df::One((k - 1) as f64);
    let (ranks, ties) = midranks(&pooled);
    let nf = n as f64;
    let correction = 1.0 - ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Ok(TestResult::new(0.0, StatisticKind::H, df, 1.0));
    }
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = (12.0 / (nf * (nf + 1.0)) * sum - 3.0 * (nf + 1.0)) / correction;
    let h = h.max(0.0);
    let p = tail_probability(Distribution::ChiSquared, h, df)?;
    Ok(TestResult::new(h, StatisticKind::H, df, p))
}
