//! Central finite differences with one Richardson level.

/// Default step for a derivative of total order `order` at coordinate `x`.
///
/// Richardson leaves an `O(h⁴)` truncation error against an `eps/hᵏ`
/// rounding error, so the step grows with the order. For first derivatives
/// this is close to the cube root of machine epsilon.
pub fn default_step(order: usize, x: f64) -> f64 {
    f64::EPSILON.powf(1.0 / (order as f64 + 4.0)).max(f64::EPSILON.cbrt()) * (1.0 + x.abs())
}

fn binomial(n: u8, k: u8) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Offsets and weights of the product of iterated central differences
/// `∂^m` with step `h`.
pub fn stencil(m: &[u8], h: f64) -> Vec<(Vec<f64>, f64)> {
    // Each axis contributes offsets (k - 2j)·h with weights C(k, j)(-1)^j / (2h)^k.
    let mut stencil: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; m.len()], 1.0)];
    for (axis, &k) in m.iter().enumerate() {
        if k == 0 {
            continue;
        }
        let scale = (2.0 * h).powi(k as i32);
        let mut next = Vec::with_capacity(stencil.len() * (k as usize + 1));
        for (offset, w) in &stencil {
            for j in 0..=k {
                let mut o = offset.clone();
                o[axis] += (k as f64 - 2.0 * j as f64) * h;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                next.push((o, w * sign * binomial(k, j) / scale));
            }
        }
        stencil = next;
    }
    stencil
}

/// `∂^m f(x)` by the product of iterated central differences with step `h`.
pub fn central(f: &impl Fn(&[f64]) -> f64, x: &[f64], m: &[u8], h: f64) -> f64 {
    assert_eq!(x.len(), m.len());
    let mut point = x.to_vec();
    stencil(m, h)
        .iter()
        .map(|(o, w)| {
            for (p, (xi, oi)) in point.iter_mut().zip(x.iter().zip(o)) {
                *p = xi + oi;
            }
            w * f(&point)
        })
        .sum()
}

/// Richardson-extrapolated `∂^m` of a vector-valued map that may fail.
pub fn richardson_vec<E>(
    f: &impl Fn(&[f64]) -> Result<Vec<f64>, E>,
    x: &[f64],
    m: &[u8],
    h: f64,
) -> Result<Vec<f64>, E> {
    let mut out: Vec<f64> = Vec::new();
    let mut point = x.to_vec();
    for (step, weight) in [(h, -1.0 / 3.0), (0.5 * h, 4.0 / 3.0)] {
        for (o, w) in stencil(m, step) {
            for (p, (xi, oi)) in point.iter_mut().zip(x.iter().zip(&o)) {
                *p = xi + oi;
            }
            let v = f(&point)?;
            if out.is_empty() {
                out = vec![0.0; v.len()];
            }
            for (acc, vi) in out.iter_mut().zip(&v) {
                *acc += weight * w * vi;
            }
        }
    }
    Ok(out)
}

/// Central difference at steps `h` and `h/2` combined to cancel the `h²` term.
pub fn richardson(f: &impl Fn(&[f64]) -> f64, x: &[f64], m: &[u8], h: f64) -> f64 {
    let coarse = central(f, x, m, h);
    let fine = central(f, x, m, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// Central differences at `h, h/2, …, h/2^levels` reduced by a Richardson
/// table; each level cancels the next even power of `h`.
pub fn extrapolate(f: &impl Fn(&[f64]) -> f64, x: &[f64], m: &[u8], h: f64, levels: usize) -> f64 {
    let mut table: Vec<f64> = (0..=levels)
        .map(|i| central(f, x, m, h / 2f64.powi(i as i32)))
        .collect();
    for level in 1..=levels {
        let factor = 4f64.powi(level as i32);
        for i in 0..table.len() - level {
            table[i] = (factor * table[i + 1] - table[i]) / (factor - 1.0);
        }
    }
    table[0]
}

/// `∂^m f(x)` with the default step for its order.
///
/// Orders one and two use a single Richardson level. Third and fourth
/// derivatives need a second level to reach `1e-6` relative accuracy.
pub fn derivative(f: &impl Fn(&[f64]) -> f64, x: &[f64], m: &[u8]) -> f64 {
    let order: usize = m.iter().map(|&k| k as usize).sum();
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if order <= 2 {
        richardson(f, x, m, default_step(order, scale))
    } else {
        let h = 0.5 * f64::EPSILON.powf(1.0 / (order as f64 + 6.0)) * (1.0 + scale);
        extrapolate(f, x, m, h, 2)
    }
}
