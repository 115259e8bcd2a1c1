//! Error metrics and small-sample inference.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{invalid, Result};
use crate::scalar::Scalar;

pub fn absolute_error<T: Scalar>(measured: T, ideal: T) -> T {
    (measured - ideal).abs()
}

pub fn mse<T: Scalar>(measured: T, ideal: T) -> T {
    let d = measured - ideal;
    d * d
}

/// Mean and sample standard deviation (`n - 1` denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary<T> {
    pub mean: T,
    pub std: T,
    pub n: usize,
    /// False for `n = 1`, where `std` is reported as zero.
    pub std_defined: bool,
}

pub fn summarize<T: Scalar>(values: &[T]) -> Result<MetricSummary<T>> {
    if values.is_empty() {
        return Err(invalid("cannot summarize an empty sample"));
    }
    let n = values.len();
    let nf = T::from_usize(n).unwrap();
    let mean = values.iter().copied().sum::<T>() / nf;
    if n == 1 {
        return Ok(MetricSummary {
            mean,
            std: T::zero(),
            n,
            std_defined: false,
        });
    }
    let ss: T = values.iter().map(|v| (*v - mean).powi(2)).sum();
    Ok(MetricSummary {
        mean,
        std: (ss / (nf - T::one())).sqrt(),
        n,
        std_defined: true,
    })
}

/// Percent reduction of `method` relative to `baseline`: `100 (1 - method / baseline)`.
pub fn improvement<T: Scalar>(baseline: T, method: T) -> Result<T> {
    if !(baseline > T::zero()) {
        return Err(invalid(format!("baseline must be > 0, got {baseline}")));
    }
    Ok(T::of(100.0) * (T::one() - method / baseline))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalEstimate<T> {
    pub lo: T,
    pub hi: T,
    pub level: T,
    pub resamples: usize,
}

/// Linear-interpolated quantile of sorted data.
fn quantile<T: Scalar>(sorted: &[T], q: T) -> T {
    let pos = q * T::from_usize(sorted.len() - 1).unwrap();
    let lo = pos.floor().to_usize().unwrap();
    let hi = pos.ceil().to_usize().unwrap();
    let frac = pos - pos.floor();
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci<T: Scalar>(
    values: &[T],
    resamples: usize,
    level: T,
    seed: u64,
) -> Result<IntervalEstimate<T>> {
    let n = values.len();
    if n < 2 {
        return Err(invalid("bootstrap needs at least two values"));
    }
    if resamples < 100 {
        return Err(invalid("bootstrap needs at least 100 resamples"));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(invalid(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let nf = T::from_usize(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<T> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<T>() / nf)
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).expect("finite resampled means"));

    let tail = (T::one() - level) / T::of(2.0);
    let min = values.iter().copied().fold(T::infinity(), T::min);
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let clamp = |v: T| v.max(min).min(max);
    Ok(IntervalEstimate {
        lo: clamp(quantile(&means, tail)),
        hi: clamp(quantile(&means, T::one() - tail)),
        level,
        resamples,
    })
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

/// One-sided sign test as an exact rational: `P(X >= wins)` for `X ~ Bin(n, 1/2)`.
pub fn sign_test_exact(wins: u64, n: u64) -> Result<BigRational> {
    if wins > n {
        return Err(invalid(format!("wins ({wins}) exceed trials ({n})")));
    }
    let tail = (wins..=n).fold(BigInt::zero(), |acc, k| acc + binomial(n, k));
    Ok(BigRational::new(tail, BigInt::one() << n as usize))
}

pub fn sign_test<T: Scalar>(wins: u64, n: u64) -> Result<T> {
    let p = sign_test_exact(wins, n)?;
    let v = p
        .to_f64()
        .ok_or_else(|| invalid("sign-test p-value not representable"))?;
    Ok(T::of(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest<T> {
    pub mean_diff: T,
    pub df: usize,
    /// `None` when the differences have zero variance.
    pub t: Option<T>,
    pub p_two_sided: Option<T>,
}

impl<T> PairedTTest<T> {
    pub fn is_degenerate(&self) -> bool {
        self.t.is_none()
    }
}

/// Paired t-test on `a - b` with `n - 1` degrees of freedom.
pub fn paired_t_test<T: Scalar>(a: &[T], b: &[T]) -> Result<PairedTTest<T>> {
    if a.len() != b.len() {
        return Err(invalid("paired samples must have equal length"));
    }
    if a.len() < 2 {
        return Err(invalid("paired t-test needs at least two pairs"));
    }
    let diffs: Vec<T> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
    let s = summarize(&diffs)?;
    let df = diffs.len() - 1;
    if s.std == T::zero() {
        return Ok(PairedTTest {
            mean_diff: s.mean,
            df,
            t: None,
            p_two_sided: None,
        });
    }
    let t = s.mean / (s.std / T::from_usize(diffs.len()).unwrap().sqrt());
    let dist = StudentsT::new(0.0, 1.0, df as f64).map_err(|e| invalid(e.to_string()))?;
    let p = (2.0 * dist.sf(t.as_f64().abs())).min(1.0);
    Ok(PairedTTest {
        mean_diff: s.mean,
        df,
        t: Some(t),
        p_two_sided: Some(T::of(p)),
    })
}
