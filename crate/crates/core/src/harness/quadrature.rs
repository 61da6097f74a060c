/// Composite Simpson rule on uniformly spaced samples. An odd number of
/// intervals closes with the three-eighths rule on the last three.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let even_end = if n.is_multiple_of(2) { n } else { n - 3 };
            let mut acc = 0.0;
            if even_end > 0 {
                let mut s = values[0] + values[even_end];
                for (i, v) in values.iter().enumerate().take(even_end).skip(1) {
                    s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
                }
                acc += s * h / 3.0;
            }
            if even_end < n {
                let v = &values[even_end..];
                acc += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
            }
            acc
        }
    }
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for i in 0..values.len() {
        if i > 0 {
            acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let cubic = |t: f64| 2.0 * t * t * t - t * t + 3.0;
        let exact = |t: f64| 0.5 * t.powi(4) - t.powi(3) / 3.0 + 3.0 * t;
        for n in [1usize, 2, 3, 4, 5, 8, 9] {
            let h = 2.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| cubic(i as f64 * h)).collect();
            let want = exact(2.0) - exact(0.0);
            let tol = if n == 1 { f64::INFINITY } else { 1e-12 };
            assert!((simpson(&v, h) - want).abs() < tol, "n = {n}");
        }
        assert_eq!(simpson(&[1.0], 0.1), 0.0);
        assert_eq!(simpson(&[], 0.1), 0.0);
    }

    #[test]
    fn simpson_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let v: Vec<f64> = (0..=n).map(|i| (3.0 * i as f64 * h).sin()).collect();
            (simpson(&v, h) - (1.0 - 3f64.cos()) / 3.0).abs()
        };
        let order = (err(41) / err(81)).log2();
        assert!(order > 3.8, "{order}");
    }

    #[test]
    fn cumulative_trapezoid_of_linear() {
        let t = [0.0, 0.5, 1.5, 2.0];
        let c = cumulative_trapezoid(&t, &t);
        for (ti, ci) in t.iter().zip(&c) {
            assert!((ci - 0.5 * ti * ti).abs() < 1e-15);
        }
    }
}
