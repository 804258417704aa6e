//! Small statistical utilities: Kendall's tau, Kolmogorov–Smirnov tests,
//! chi-square tail probabilities and percentiles.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Kendall's tau-b by Knight's O(n log n) algorithm.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "kendall_tau needs paired samples");
    let n = x.len();
    if n < 2 {
        return f64::NAN;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let n0 = (n * (n - 1) / 2) as f64;

    // ties in x, and joint ties
    let mut n1 = 0.0;
    let mut n3 = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let t = (j - i) as f64;
        n1 += t * (t - 1.0) / 2.0;
        let mut k = i;
        while k < j {
            let mut l = k + 1;
            while l < j && y[idx[l]] == y[idx[k]] {
                l += 1;
            }
            let s = (l - k) as f64;
            n3 += s * (s - 1.0) / 2.0;
            k = l;
        }
        i = j;
    }

    let mut ys: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf) as f64;

    let mut n2 = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && ys[j] == ys[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        n2 += t * (t - 1.0) / 2.0;
        i = j;
    }
    let concordant_minus_discordant = n0 - n1 - n2 + n3 - 2.0 * swaps;
    let denom = ((n0 - n1) * (n0 - n2)).sqrt();
    if denom == 0.0 {
        f64::NAN
    } else {
        concordant_minus_discordant / denom
    }
}

/// Sorts `a` ascending and returns the number of inversions.
fn merge_count(a: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = a.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = a.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        merge_count(left, bl) + merge_count(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if a[j] < a[i] {
            buf[k] = a[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = a[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&a[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&a[j..n]);
    a.copy_from_slice(&buf[..n]);
    count
}

/// Asymptotic Kolmogorov tail probability `P(K > lambda)`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov–Smirnov test: returns `(D, p-value)`.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> (f64, f64) {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let en = n.sqrt();
    (d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d))
}

/// Two-sample Kolmogorov–Smirnov test: returns `(D, p-value)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let en = ((na * nb) as f64 / (na + nb) as f64).sqrt();
    (d, kolmogorov_sf((en + 0.12 + 0.11 / en) * d))
}

/// Upper tail probability of a chi-square variable.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    ChiSquared::new(dof).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Percentile of sorted data by linear interpolation between order statistics
/// (the "type 7" definition).
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}
