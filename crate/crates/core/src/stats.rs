//! Small descriptive statistics used across the analytic modules.

use std::collections::BTreeMap;
use std::hash::Hash;

use crate::scalar::{cmp, Scalar};

pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::of_usize(xs.len()))
}

/// Sample standard deviation (n − 1 denominator); zero for a single value.
pub fn sample_sd<T: Scalar>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    if xs.len() < 2 {
        return Some(T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::of_usize(xs.len() - 1)).sqrt())
}

/// Median; the mean of the two middle values for even lengths.
pub fn median<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| cmp(*a, *b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    })
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub fn quantile<T: Scalar>(xs: &[T], q: f64) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| cmp(*a, *b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::of(pos - lo as f64);
    Some(v[lo] + (v[hi] - v[lo]) * frac)
}

/// Fractional ranks starting at 1; tied values share their average rank.
pub fn ranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| cmp(xs[a], xs[b]).then(a.cmp(&b)));
    let mut out = vec![T::zero(); xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank mean(i+1 ..= j+1)
        let r = T::of_usize(i + j + 2) / T::of(2.0);
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Pearson correlation; `None` when either side has zero variance or fewer than two points.
pub fn pearson<T: Scalar>(xs: &[T], ys: &[T]) -> Option<T> {
    assert_eq!(xs.len(), ys.len(), "pearson: length mismatch");
    if xs.len() < 2 {
        return None;
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= T::zero() || syy <= T::zero() {
        return None;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Some(r.max(-T::one()).min(T::one()))
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman<T: Scalar>(xs: &[T], ys: &[T]) -> Option<T> {
    pearson(&ranks(xs), &ranks(ys))
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit<T> {
    pub intercept: T,
    pub slope: T,
    pub r_squared: T,
}

pub fn linear_fit<T: Scalar>(xs: &[T], ys: &[T]) -> Option<LinearFit<T>> {
    assert_eq!(xs.len(), ys.len(), "linear_fit: length mismatch");
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    if sxx <= T::zero() {
        return None;
    }
    let sxy: T = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy: T = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let r_squared = if syy > T::zero() {
        let sse: T = xs
            .iter()
            .zip(ys)
            .map(|(&x, &y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        T::one() - sse / syy
    } else {
        T::zero()
    };
    Some(LinearFit {
        intercept,
        slope,
        r_squared,
    })
}

/// Share of the total variance of `ys` explained by the group means (η²).
pub fn eta_squared<T: Scalar, K: Ord + Clone>(groups: &[K], ys: &[T]) -> Option<T> {
    assert_eq!(groups.len(), ys.len(), "eta_squared: length mismatch");
    let grand = mean(ys)?;
    let sst: T = ys.iter().map(|&y| (y - grand) * (y - grand)).sum();
    if sst <= T::zero() {
        return None;
    }
    let mut by: BTreeMap<K, (T, usize)> = BTreeMap::new();
    for (g, &y) in groups.iter().zip(ys) {
        let e = by.entry(g.clone()).or_insert((T::zero(), 0));
        e.0 = e.0 + y;
        e.1 += 1;
    }
    let ssb: T = by
        .values()
        .map(|&(s, n)| {
            let m = s / T::of_usize(n);
            T::of_usize(n) * (m - grand) * (m - grand)
        })
        .sum();
    Some(ssb / sst)
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(a: &[A], b: &[B]) -> f64 {
    use std::collections::HashMap;
    assert_eq!(a.len(), b.len(), "ARI: length mismatch");
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut table: HashMap<(A, B), u64> = HashMap::new();
    let mut ra: HashMap<A, u64> = HashMap::new();
    let mut rb: HashMap<B, u64> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x.clone(), y.clone())).or_default() += 1;
        *ra.entry(x.clone()).or_default() += 1;
        *rb.entry(y.clone()).or_default() += 1;
    }
    let c2 = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.values().map(|&m| c2(m)).sum();
    let sa: f64 = ra.values().map(|&m| c2(m)).sum();
    let sb: f64 = rb.values().map(|&m| c2(m)).sum();
    let total = c2(n as u64);
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        assert_eq!(median(&[600.0, 1800.0, 1200.0]), Some(1200.0));
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), Some(2.5));
        assert_eq!(median::<f64>(&[]), None);
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn pearson_hand_fixture() {
        // x = 1..4, y = 2,4,5,4 : sxy = 3.5, sxx = 5, syy = 4.75
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 5.0, 4.0]).unwrap();
        let expected = 3.5 / (5.0f64.sqrt() * 4.75f64.sqrt());
        assert!((r - expected).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
    }

    #[test]
    fn spearman_perfect_monotone() {
        let d: [f64; 5] = [0.0, 1.0, 2.0, 3.5, 7.0];
        let v: [f64; 5] = [100.0, 50.0, 20.0, 3.0, 1.0];
        assert!((spearman(&d, &v).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ari_identical_and_relabelled() {
        let a = [1, 1, 2, 2, 3, 3];
        let b = ["x", "x", "y", "y", "z", "z"];
        assert!((adjusted_rand_index(&a, &b) - 1.0).abs() < 1e-12);
        let c = [1, 2, 1, 2, 1, 2];
        assert!(adjusted_rand_index(&a, &c) < 0.1);
    }

    #[test]
    fn eta_squared_pure_group_effect() {
        let g = ["a", "a", "b", "b"];
        let y = [1.0, 1.0, 3.0, 3.0];
        assert_eq!(eta_squared(&g, &y), Some(1.0));
    }
}
