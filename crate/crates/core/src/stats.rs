//! Traversal-time measures and replication-ensemble statistics.

use std::cmp::Ordering;

use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::kernel::GlobalStore;
use crate::spatial::PedType;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("cannot summarise an empty sample")]
    Empty,
    #[error("non-finite value {0} in sample")]
    NonFinite(f64),
}

/// Measures observed at one point of the sampling grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSample {
    pub time: f64,
    pub average: [f64; 2],
    pub count: [u64; 2],
    pub live: [u64; 2],
}

impl MeasureSample {
    pub fn observe(time: f64, global: &GlobalStore, live: [u64; 2]) -> Self {
        MeasureSample {
            time,
            average: PedType::ALL.map(|p| average_traversal(global, p)),
            count: global.count,
            live,
        }
    }
}

/// `total_P / count_P`, or 0 before the first completion.
pub fn average_traversal(g: &GlobalStore, p: PedType) -> f64 {
    match g.count(p) {
        0 => 0.0,
        n => g.total(p) / n as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 when `n == 1`.
    pub variance: f64,
    /// 95% Student-t half-width; `None` when `n < 2`.
    pub half_width: Option<f64>,
}

impl SummaryStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    pub fn interval(&self) -> Option<(f64, f64)> {
        self.half_width.map(|h| (self.mean - h, self.mean + h))
    }
}

/// Two-sided Student-t quantile at probability `prob` with `df` degrees of freedom.
pub fn t_quantile(prob: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("degrees of freedom are positive")
        .inverse_cdf(prob)
}

fn t_cdf(t: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("degrees of freedom are positive")
        .cdf(t)
}

/// Mean, variance and 95% confidence half-width, using Welford's update.
pub fn aggregate(values: &[f64]) -> Result<SummaryStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(v));
        }
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let n = values.len();
    if n == 1 {
        return Ok(SummaryStats { n, mean, variance: 0.0, half_width: None });
    }
    let variance = (m2 / (n - 1) as f64).max(0.0);
    let df = (n - 1) as f64;
    let half_width = t_quantile(0.975, df) * (variance / n as f64).sqrt();
    Ok(SummaryStats { n, mean, variance, half_width: Some(half_width) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Less,
    Indistinguishable,
    Greater,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
    pub verdict: Verdict,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Welch's unequal-variance t-test of `a` against `b`, two-sided at 0.05.
pub fn compare_means(a: &SummaryStats, b: &SummaryStats) -> WelchTest {
    let va = a.variance / a.n as f64;
    let vb = b.variance / b.n as f64;
    let se2 = va + vb;
    let diff = a.mean - b.mean;
    if se2 == 0.0 || a.n < 2 || b.n < 2 {
        // Degenerate: no spread to test against, compare means directly.
        let verdict = match diff.partial_cmp(&0.0) {
            Some(Ordering::Less) if se2 == 0.0 => Verdict::Less,
            Some(Ordering::Greater) if se2 == 0.0 => Verdict::Greater,
            _ => Verdict::Indistinguishable,
        };
        let p_value = if verdict == Verdict::Indistinguishable { 1.0 } else { 0.0 };
        return WelchTest { t: f64::NAN, df: f64::NAN, p_value, verdict };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2
        / (va * va / (a.n - 1) as f64 + vb * vb / (b.n - 1) as f64);
    let p_value = 2.0 * (1.0 - t_cdf(t.abs(), df));
    let verdict = if p_value >= SIGNIFICANCE {
        Verdict::Indistinguishable
    } else if diff < 0.0 {
        Verdict::Less
    } else {
        Verdict::Greater
    };
    WelchTest { t, df, p_value, verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    #[test]
    fn average_guards_zero_count() {
        assert_eq!(average_traversal(&GlobalStore::default(), PedType::A), 0.0);
        let g = GlobalStore { count: [4, 1], total: [10.0, 3.75] };
        assert_eq!(average_traversal(&g, PedType::A), 2.5);
        assert_eq!(average_traversal(&g, PedType::B), 3.75);
    }

    #[test]
    fn constant_sample_has_zero_spread() {
        let s = aggregate(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.half_width, Some(0.0));
    }

    #[test]
    fn three_point_sample() {
        let s = aggregate(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert!((s.std_dev() - 1.0).abs() < 1e-15);
        // t(0.975, 2) = 4.302652729911275 from standard tables
        let expected = 4.302_652_729_911_275 / 3f64.sqrt();
        assert!((s.half_width.unwrap() - expected).abs() < 1e-8);
        assert!((s.half_width.unwrap() - 2.484).abs() < 1e-3);
    }

    #[test]
    fn t_quantiles_match_tables() {
        // Two-sided 95% critical values from published t tables.
        let table = [
            (1.0, 12.706_204_736_174_7),
            (2.0, 4.302_652_729_911_275),
            (5.0, 2.570_581_835_636_314),
            (10.0, 2.228_138_851_986_274),
            (30.0, 2.042_272_456_301_238),
            (99.0, 1.984_216_951_835_48),
        ];
        for (df, q) in table {
            assert!((t_quantile(0.975, df) - q).abs() < 1e-8, "df={df}");
        }
    }

    #[test]
    fn single_value_is_flagged() {
        let s = aggregate(&[4.2]).unwrap();
        assert_eq!(s.mean, 4.2);
        assert_eq!(s.half_width, None);
        assert_eq!(aggregate(&[]), Err(StatsError::Empty));
        assert!(aggregate(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn streaming_mean_matches_two_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..1_000_000).map(|_| 1e6 + rng.gen::<f64>() * 10.0).collect();
        let two_pass_mean = values.iter().sum::<f64>() / values.len() as f64;
        let two_pass_var = values.iter().map(|v| (v - two_pass_mean).powi(2)).sum::<f64>()
            / (values.len() - 1) as f64;
        let s = aggregate(&values).unwrap();
        assert!(((s.mean - two_pass_mean) / two_pass_mean).abs() < 1e-12);
        assert!(((s.variance - two_pass_var) / two_pass_var).abs() < 1e-6);
    }

    #[test]
    fn welch_identical_is_indistinguishable() {
        let a = aggregate(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(compare_means(&a, &a).verdict, Verdict::Indistinguishable);
    }

    #[test]
    fn welch_separated_intervals_order() {
        let a = aggregate(&[1.0, 1.1, 0.9, 1.05, 0.95]).unwrap();
        let b = aggregate(&[5.0, 5.1, 4.9, 5.05, 4.95]).unwrap();
        let (al, ah) = a.interval().unwrap();
        let (bl, _) = b.interval().unwrap();
        assert!(al < ah && ah < bl);
        assert_eq!(compare_means(&a, &b).verdict, Verdict::Less);
        assert_eq!(compare_means(&b, &a).verdict, Verdict::Greater);
    }

    #[test]
    fn welch_on_synthetic_normals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..100).map(|_| 1.0 + 0.1 * std_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..100).map(|_| 2.0 + 0.1 * std_normal(&mut rng)).collect();
        let test = compare_means(&aggregate(&a).unwrap(), &aggregate(&b).unwrap());
        assert_eq!(test.verdict, Verdict::Less);
        assert!(test.p_value < 1e-10);
    }

    // Box-Muller standard normal.
    fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[test]
    fn welch_degenerate_constant_samples() {
        let a = aggregate(&[1.0, 1.0]).unwrap();
        let b = aggregate(&[2.0, 2.0]).unwrap();
        assert_eq!(compare_means(&a, &b).verdict, Verdict::Less);
        assert_eq!(compare_means(&a, &a).verdict, Verdict::Indistinguishable);
    }
}
