//! Slow, direct reference implementations used to check the optimized kernels.
#![allow(dead_code)]

use rand::Rng;

/// Symmetric matrix with zero diagonal and entries uniform in [0, 1).
pub fn random_matrix<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random::<f64>();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Average linkage by brute force: every step recomputes each cluster-pair distance as the
/// mean over all cross pairs of leaves and merges the smallest, ties to the smallest id pair.
/// Returns `(left, right, height, size)` with leaves `0..n` and step `s` creating node `n + s`.
pub fn naive_upgma(d: &[Vec<f64>]) -> Vec<(usize, usize, f64, usize)> {
    let n = d.len();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut out = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let (ia, la) = &clusters[a];
                let (ib, lb) = &clusters[b];
                let mut sum = 0.0;
                for &x in la {
                    for &y in lb {
                        sum += d[x][y];
                    }
                }
                let avg = sum / (la.len() * lb.len()) as f64;
                let (lo, hi) = ((*ia).min(*ib), (*ia).max(*ib));
                let better = match best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => avg < bd || (avg == bd && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((avg, lo, hi, a, b));
                }
            }
        }
        let (h, lo, hi, a, b) = best.unwrap();
        let mut leaves = clusters[a].1.clone();
        leaves.extend(&clusters[b].1);
        out.push((lo, hi, h, leaves.len()));
        clusters.remove(b);
        clusters.remove(a);
        clusters.push((n + step, leaves));
    }
    out
}

/// Silhouette widths straight from the definition.
pub fn naive_silhouette(d: &[Vec<f64>], labels: &[usize]) -> Vec<f64> {
    let n = d.len();
    (0..n)
        .map(|i| {
            let mean_to = |l: usize| {
                let members: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == l).collect();
                if members.is_empty() {
                    None
                } else {
                    Some(members.iter().map(|&j| d[i][j]).sum::<f64>() / members.len() as f64)
                }
            };
            let Some(a) = mean_to(labels[i]) else { return 0.0 };
            let mut others: Vec<usize> = labels.iter().copied().filter(|&l| l != labels[i]).collect();
            others.sort();
            others.dedup();
            let b = others.into_iter().filter_map(mean_to).fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 {
                (b - a) / m
            } else {
                0.0
            }
        })
        .collect()
}

/// Stationary vector of `x = d·x·G + (1−d)·v`, with dangling rows of `p` replaced by `v`,
/// solved as a dense linear system by Gaussian elimination with partial pivoting.
pub fn dense_pagerank(p: &[Vec<f64>], damping: f64, v: &[f64]) -> Vec<f64> {
    let n = p.len();
    // (I − d·Gᵀ) x = (1 − d) v
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        let dangling = p[i].iter().all(|&x| x == 0.0);
        for j in 0..n {
            let g = if dangling { v[j] } else { p[i][j] };
            a[j][i] -= damping * g;
        }
    }
    for i in 0..n {
        a[i][i] += 1.0;
        a[i][n] = (1.0 - damping) * v[i];
    }
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}
