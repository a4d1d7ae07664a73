//! Small numerical helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new(start: f64) -> Self {
        Self { sum: start, comp: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// `prefix[k] = sum_{i<k} terms[i]`, length `terms.len() + 1`.
pub fn prefix_sums(terms: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(terms.len() + 1);
    let mut acc = CompensatedSum::default();
    out.push(0.0);
    for &x in terms {
        acc.add(x);
        out.push(acc.value());
    }
    out
}

/// `suffix[k] = sum_{i>=k} terms[i]`, length `terms.len() + 1`.
pub fn suffix_sums(terms: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; terms.len() + 1];
    let mut acc = CompensatedSum::default();
    for (k, &x) in terms.iter().enumerate().rev() {
        acc.add(x);
        out[k] = acc.value();
    }
    out
}

/// Sample quantile with linear interpolation between order statistics
/// (the "type 7" rule). `sorted` must be sorted ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Smallest `t` in `[lo, hi]` with `holds(t)`, assuming `holds(lo)` is false,
/// `holds(hi)` is true and the condition is monotone on the interval.
pub(crate) fn bisect_first_true<F: Fn(f64) -> bool>(mut lo: f64, mut hi: f64, holds: F) -> f64 {
    for _ in 0..60 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = std::iter::once(1e16).chain(std::iter::repeat_n(1.0, 1000)).chain(std::iter::once(-1e16));
        assert_eq!(compensated_sum(xs), 1000.0);
    }

    #[test]
    fn prefix_and_suffix_agree_with_naive() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(prefix_sums(&t), vec![0.0, 1.0, 3.0, 6.0, 10.0]);
        assert_eq!(suffix_sums(&t), vec![10.0, 9.0, 7.0, 4.0, 0.0]);
    }

    #[test]
    fn quantiles_interpolate() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.5), 2.5);
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn bisection_finds_threshold() {
        let t = bisect_first_true(0.0, 1.0, |x| x >= 0.3);
        assert!((t - 0.3).abs() < 1e-11);
    }
}
