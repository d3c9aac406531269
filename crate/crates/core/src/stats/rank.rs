use std::cmp::Ordering;

use super::StatsError;

/// Two equal-length samples of at least two finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSamples {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PairedSamples {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self, StatsError> {
        if xs.len() != ys.len() {
            return Err(StatsError::LengthMismatch {
                xs: xs.len(),
                ys: ys.len(),
            });
        }
        if xs.len() < 2 {
            return Err(StatsError::TooFewSamples(xs.len()));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(PairedSamples { xs, ys })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn check_spread(&self) -> Result<(), StatsError> {
        if is_constant(&self.xs) {
            return Err(StatsError::DegenerateSample("xs"));
        }
        if is_constant(&self.ys) {
            return Err(StatsError::DegenerateSample("ys"));
        }
        Ok(())
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

// Inputs are finite, so partial_cmp never fails; -0.0 and 0.0 compare equal.
fn cmp(a: f64, b: f64) -> Ordering {
    a.partial_cmp(&b).expect("finite values")
}

/// 1-based ranks; tied values share the mean of the positions they occupy.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| cmp(values[a], values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end, whose mean is (start + 1 + end) / 2.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Pearson correlation of the average ranks.
pub fn spearman_rho(s: &PairedSamples) -> Result<f64, StatsError> {
    s.check_spread()?;
    Ok(pearson(&average_ranks(&s.xs), &average_ranks(&s.ys)))
}

/// Sum of t(t-1)/2 over runs of equal adjacent values.
fn tied_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Stable merge sort that returns the number of inversions.
fn sort_counting_swaps(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        sort_counting_swaps(&mut v[..mid], &mut buf[..mid]) + sort_counting_swaps(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if cmp(v[i], v[j]) != Ordering::Greater {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// Tie-corrected Kendall rank correlation (tau-b), in O(n log n).
pub fn kendall_tau(s: &PairedSamples) -> Result<f64, StatsError> {
    s.check_spread()?;
    let n = s.len() as u64;
    let mut pairs: Vec<(f64, f64)> = s.xs.iter().copied().zip(s.ys.iter().copied()).collect();
    pairs.sort_by(|a, b| cmp(a.0, b.0).then(cmp(a.1, b.1)));

    let n0 = n * (n - 1) / 2;
    let ties_x = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let ties_xy = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; ys.len()];
    let discordant = sort_counting_swaps(&mut ys, &mut buf);
    let ties_y = tied_pairs(&ys, |a, b| a == b);

    // Concordant minus discordant over pairs untied in both coordinates.
    let numerator = n0 as i128 - ties_x as i128 - ties_y as i128 + ties_xy as i128 - 2 * discordant as i128;
    let denominator = (((n0 - ties_x) as f64) * ((n0 - ties_y) as f64)).sqrt();
    Ok((numerator as f64 / denominator).clamp(-1.0, 1.0))
}

impl PairedSamples {
    pub fn spearman_rho(&self) -> Result<f64, StatsError> {
        spearman_rho(self)
    }

    pub fn kendall_tau(&self) -> Result<f64, StatsError> {
        kendall_tau(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(xs: &[f64], ys: &[f64]) -> PairedSamples {
        PairedSamples::new(xs.to_vec(), ys.to_vec()).unwrap()
    }

    /// Direct O(n^2) pair classification.
    fn kendall_brute(xs: &[f64], ys: &[f64]) -> f64 {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..xs.len() {
            for j in i + 1..xs.len() {
                let dx = xs[i] - xs[j];
                let dy = ys[i] - ys[j];
                if dx == 0.0 && dy == 0.0 {
                    continue;
                } else if dx == 0.0 {
                    tx += 1;
                } else if dy == 0.0 {
                    ty += 1;
                } else if (dx > 0.0) == (dy > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
        (c - d) as f64 / (((c + d + tx) * (c + d + ty)) as f64).sqrt()
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 3.0]), vec![3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn monotone_and_reversed() {
        let s = ps(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]);
        assert_eq!(spearman_rho(&s).unwrap(), 1.0);
        assert_eq!(kendall_tau(&s).unwrap(), 1.0);
        let r = ps(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]);
        assert_eq!(spearman_rho(&r).unwrap(), -1.0);
        assert_eq!(kendall_tau(&r).unwrap(), -1.0);
    }

    #[test]
    fn spearman_with_a_tie() {
        // ranks x = [1, 2.5, 2.5, 4], y = [1, 3, 2, 4]; centred x = [-1.5, 0, 0, 1.5],
        // centred y = [-1.5, 0.5, -0.5, 1.5]; sxy = 4.5, sxx = 4.5, syy = 5.
        let rho = spearman_rho(&ps(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0])).unwrap();
        assert!((rho - 4.5 / (4.5f64 * 5.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kendall_five_points_one_tie() {
        let xs = [1.0, 2.0, 3.0, 3.0, 5.0];
        let ys = [2.0, 1.0, 4.0, 3.0, 5.0];
        // Of ten pairs: 8 concordant, 1 discordant, 1 tied in x only.
        let expected = 7.0 / (9.0f64 * 10.0).sqrt();
        let tau = kendall_tau(&ps(&xs, &ys)).unwrap();
        assert!((tau - expected).abs() < 1e-12);
        assert!((tau - kendall_brute(&xs, &ys)).abs() < 1e-12);
    }

    #[test]
    fn constant_lists_are_degenerate() {
        let s = ps(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]);
        assert_eq!(spearman_rho(&s), Err(StatsError::DegenerateSample("xs")));
        assert_eq!(
            kendall_tau(&ps(&[1.0, 2.0], &[0.0, 0.0])),
            Err(StatsError::DegenerateSample("ys"))
        );
    }

    #[test]
    fn shape_errors() {
        assert_eq!(
            PairedSamples::new(vec![1.0], vec![1.0]),
            Err(StatsError::TooFewSamples(1))
        );
        assert!(matches!(
            PairedSamples::new(vec![1.0, 2.0], vec![1.0]),
            Err(StatsError::LengthMismatch { .. })
        ));
        assert_eq!(
            PairedSamples::new(vec![1.0, f64::NAN], vec![1.0, 2.0]),
            Err(StatsError::NonFinite)
        );
    }

    fn tied_samples() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2usize..50).prop_flat_map(|n| {
            (
                prop::collection::vec((0i32..6).prop_map(f64::from), n),
                prop::collection::vec((0i32..6).prop_map(f64::from), n),
            )
        })
    }

    proptest! {
        #[test]
        fn kendall_matches_pair_count((xs, ys) in tied_samples()) {
            let s = ps(&xs, &ys);
            if let Ok(tau) = kendall_tau(&s) {
                prop_assert!((tau - kendall_brute(&xs, &ys)).abs() <= 1e-9);
            }
        }

        #[test]
        fn reversing_ys_negates((xs, ys) in tied_samples()) {
            let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
            let (a, b) = (ps(&xs, &ys), ps(&xs, &neg));
            if let (Ok(r1), Ok(r2)) = (spearman_rho(&a), spearman_rho(&b)) {
                prop_assert!((r1 + r2).abs() <= 1e-9);
                prop_assert!((kendall_tau(&a).unwrap() + kendall_tau(&b).unwrap()).abs() <= 1e-9);
            }
        }

        #[test]
        fn monotone_transform_invariance((xs, ys) in tied_samples()) {
            let cubed: Vec<f64> = xs.iter().map(|x| x * x * x + 7.0).collect();
            let (a, b) = (ps(&xs, &ys), ps(&cubed, &ys));
            if let Ok(r) = spearman_rho(&a) {
                prop_assert!((r - spearman_rho(&b).unwrap()).abs() <= 1e-9);
                prop_assert!((kendall_tau(&a).unwrap() - kendall_tau(&b).unwrap()).abs() <= 1e-9);
            }
        }
    }
}
