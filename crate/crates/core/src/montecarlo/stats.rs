use serde::{Deserialize, Serialize};

/// Single-pass accumulator of the first four central moments plus extrema.
///
/// Updates and merges use the pairwise formulas of Chan et al. / Pébay, so
/// per-worker accumulators can be combined in any grouping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub count: u64,
    pub mean: f64,
    /// Sum of squared deviations from the mean.
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for EnsembleStats {
    fn default() -> Self {
        Self::new()
    }
}

impl EnsembleStats {
    pub const fn new() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            m3: 0.0,
            m4: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut s = Self::new();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let n1 = self.count as f64;
        self.count += 1;
        let n = self.count as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2
            - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let mean = self.mean + delta * nb / n;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3
            + other.m3
            + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        Self {
            count: self.count + other.count,
            mean,
            m2,
            m3,
            m4,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    /// Unbiased sample variance; `0` for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Standard error of the sample variance, `sqrt((μ4 − σ⁴(n−3)/(n−1)) / n)`.
    pub fn variance_std_error(&self) -> f64 {
        if self.count < 4 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        let mu4 = self.m4 / n;
        let var = self.variance();
        ((mu4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    /// Sample skewness `g1 = √n m3 / m2^{3/2}`.
    pub fn skewness(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            return 0.0;
        }
        (self.count as f64).sqrt() * self.m3 / self.m2.powf(1.5)
    }

    /// Sample excess kurtosis `g2 = n m4 / m2² − 3`.
    pub fn excess_kurtosis(&self) -> f64 {
        if self.count < 2 || self.m2 == 0.0 {
            return 0.0;
        }
        self.count as f64 * self.m4 / (self.m2 * self.m2) - 3.0
    }
}

/// Fixed-bin histogram; values outside `[lo, hi)` land in the under/overflow counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bins: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(hi > lo && bins > 0);
        Self {
            lo,
            hi,
            bins: vec![0; bins],
            underflow: 0,
            overflow: 0,
        }
    }

    pub fn push(&mut self, x: f64) {
        if x < self.lo {
            self.underflow += 1;
        } else if x >= self.hi {
            self.overflow += 1;
        } else {
            let width = (self.hi - self.lo) / self.bins.len() as f64;
            let i = (((x - self.lo) / width) as usize).min(self.bins.len() - 1);
            self.bins[i] += 1;
        }
    }

    /// Panics if the bin layouts differ.
    pub fn merge(&self, other: &Self) -> Self {
        assert!(self.lo == other.lo && self.hi == other.hi && self.bins.len() == other.bins.len());
        Self {
            lo: self.lo,
            hi: self.hi,
            bins: self.bins.iter().zip(&other.bins).map(|(a, b)| a + b).collect(),
            underflow: self.underflow + other.underflow,
            overflow: self.overflow + other.overflow,
        }
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Median of a sample (mean of the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

/// Pearson correlation; `None` when either sample has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if xs.len() < 2 || constant(xs) || constant(ys) {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_pass(xs: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let c = |p: i32| xs.iter().map(|x| (x - mean).powi(p)).sum::<f64>();
        (mean, c(2), c(3), c(4))
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn single_value_has_zero_variance() {
        let s = EnsembleStats::from_slice(&[3.5]);
        assert_eq!(s.mean, 3.5);
        assert_eq!(s.variance(), 0.0);
        assert_eq!((s.min, s.max), (3.5, 3.5));
    }

    #[test]
    fn known_moments() {
        let s = EnsembleStats::from_slice(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        let (mean, m2, m3, m4) = two_pass(&[1.0, 2.0, 3.0, 4.0, 10.0]);
        assert!(close(s.mean, mean, 1e-14));
        assert!(close(s.m2, m2, 1e-13));
        assert!(close(s.m3, m3, 1e-12));
        assert!(close(s.m4, m4, 1e-12));
        assert_eq!(s.variance(), m2 / 4.0);
    }

    #[test]
    fn histogram_and_helpers() {
        let mut h = Histogram::new(0.0, 1.0, 4);
        for x in [-0.1, 0.0, 0.3, 0.99, 1.0, 0.5] {
            h.push(x);
        }
        assert_eq!(h.bins, vec![1, 1, 1, 1]);
        assert_eq!((h.underflow, h.overflow), (1, 1));
        let m = h.merge(&h);
        assert_eq!(m.total(), 12);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(pearson(&[1.0, 1.0], &[2.0, 3.0]).is_none());
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap();
        assert!(r > 0.99);
    }

    proptest! {
        #[test]
        fn merge_matches_sequential(
            xs in prop::collection::vec(-100.0f64..100.0, 1..60),
            split in 0usize..60,
        ) {
            let split = split.min(xs.len());
            let whole = EnsembleStats::from_slice(&xs);
            let merged = EnsembleStats::from_slice(&xs[..split])
                .merge(&EnsembleStats::from_slice(&xs[split..]));
            prop_assert_eq!(whole.count, merged.count);
            prop_assert!(close(whole.mean, merged.mean, 1e-9));
            prop_assert!(close(whole.m2, merged.m2, 1e-9));
            prop_assert!(close(whole.m3, merged.m3, 1e-9 * whole.m2.powf(1.5).max(1.0)));
            prop_assert!(close(whole.m4, merged.m4, 1e-9));
            prop_assert_eq!(whole.min, merged.min);
            prop_assert_eq!(whole.max, merged.max);
        }

        #[test]
        fn merge_is_associative_and_commutative(
            a in prop::collection::vec(-5.0f64..5.0, 0..20),
            b in prop::collection::vec(-5.0f64..5.0, 0..20),
            c in prop::collection::vec(-5.0f64..5.0, 0..20),
        ) {
            let (a, b, c) = (
                EnsembleStats::from_slice(&a),
                EnsembleStats::from_slice(&b),
                EnsembleStats::from_slice(&c),
            );
            let left = a.merge(&b).merge(&c);
            let right = c.merge(&a.merge(&b));
            let other = a.merge(&b.merge(&c));
            for s in [right, other] {
                prop_assert_eq!(left.count, s.count);
                prop_assert!(close(left.mean, s.mean, 1e-9));
                prop_assert!(close(left.m2, s.m2, 1e-9));
                prop_assert!(close(left.m3, s.m3, 1e-9));
                prop_assert!(close(left.m4, s.m4, 1e-9));
            }
            prop_assert_eq!(a.merge(&EnsembleStats::new()), a);
        }
    }
}
