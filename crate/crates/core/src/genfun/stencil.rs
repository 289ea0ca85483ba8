//! Finite-difference weights on arbitrary nodes (Fornberg's recursion) and
//! their application along one grid axis.

use rayon::prelude::*;

/// Weights `w` with `f^(m)(z) ~ sum_j w_j f(x_j)`.
pub fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Highest supported derivative order.
pub const MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Second-order one-sided stencils near the ends.
    #[default]
    OneSided,
    /// Nodes `0..n` form one period of length `n h`.
    Periodic,
}

/// Second-order stencil (offsets, weights in units of `h^-order`) used at
/// node `i` of an axis with `n` nodes.
pub(crate) fn stencil_at(
    i: usize,
    n: usize,
    order: usize,
    boundary: Boundary,
) -> (Vec<isize>, Vec<f64>) {
    let m = order.div_ceil(2);
    let central = || {
        let offs: Vec<isize> = (-(m as isize)..=m as isize).collect();
        let nodes: Vec<f64> = offs.iter().map(|&o| o as f64).collect();
        (offs, fornberg(0.0, &nodes, order))
    };
    if boundary == Boundary::Periodic || (i >= m && i + m < n) {
        return central();
    }
    let w = order + 2;
    let start = (i as isize - (w / 2) as isize).clamp(0, (n - w) as isize);
    let offs: Vec<isize> = (0..w as isize).map(|j| start + j - i as isize).collect();
    let nodes: Vec<f64> = offs.iter().map(|&o| o as f64).collect();
    (offs, fornberg(0.0, &nodes, order))
}

/// Applies the derivative along one axis of a flat array with the given
/// axis length and stride. Values are differenced against the center node
/// so constants map to exact zeros.
pub(crate) fn apply_axis<T>(
    data: &[T],
    n: usize,
    stride: usize,
    h: f64,
    order: usize,
    boundary: Boundary,
) -> Vec<T>
where
    T: Copy
        + Send
        + Sync
        + std::ops::Sub<Output = T>
        + std::ops::Mul<f64, Output = T>
        + std::ops::Add<Output = T>
        + Default,
{
    let scale = h.powi(-(order as i32));
    // stencils depend only on the position along the axis
    let stencils: Vec<(Vec<isize>, Vec<f64>)> =
        (0..n).map(|i| stencil_at(i, n, order, boundary)).collect();
    let mut out = vec![T::default(); data.len()];
    out.par_iter_mut().enumerate().for_each(|(flat, o)| {
        let i = (flat / stride) % n;
        let base = flat - i * stride;
        let (offs, w) = &stencils[i];
        let center = data[flat];
        let mut acc = T::default();
        for (&off, &wj) in offs.iter().zip(w) {
            let j = if boundary == Boundary::Periodic {
                (i as isize + off).rem_euclid(n as isize) as usize
            } else {
                (i as isize + off) as usize
            };
            if wj != 0.0 {
                acc = acc + (data[base + j * stride] - center) * wj;
            }
        }
        *o = acc * scale;
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w, vec![1.0, -2.0, 1.0]);
        let w = fornberg(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 4);
        for (a, b) in w.iter().zip([1.0, -4.0, 6.0, -4.0, 1.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_is_exact_on_quadratics() {
        for order in 1..=2 {
            let (offs, w) = stencil_at(0, 100, order, Boundary::OneSided);
            assert!(offs.iter().all(|&o| o >= 0));
            let d: f64 = offs
                .iter()
                .zip(&w)
                .map(|(&o, &wj)| wj * (o as f64).powi(2))
                .sum();
            assert!((d - if order == 1 { 0.0 } else { 2.0 }).abs() < 1e-12);
        }
    }
}
