use crate::error::{check_kappa, Error, Result};
use crate::schrodinger::{h1, h2};
use crate::spectral::{ops, product_unchecked, Field};

fn relative(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Relative max-norm residuals of the two exact series identities
///
/// ```text
/// 4ϰ²[16ϰ⁵h_1 + 4ϰ²q + q''] = 4ϰ³h_1⁗ = −q⁗ + ϰ h_1⁽⁶⁾
/// 16ϰ⁵h_2 + 3ϰ²(h_1'')² − 3q² = −4ϰ⁴[5(h_1')² − 5(h_1²)'']
///                                + 4ϰ⁴ ∂² R_0(2ϰ)[(h_1')² + 2(h_1²)'']
/// ```
///
/// with `h_2` from the lattice double sum. Each residual is divided by the
/// largest term in its identity. Exact for data with modes `|k| < N/4`.
pub fn series_identity_check(q: &Field, varkappa: f64) -> Result<(f64, f64)> {
    check_kappa("varkappa", varkappa)?;
    if let Some(index) = q.samples().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let k = varkappa;
    let a = h1(q, k)?;
    let d2q = ops::derivative(q, 2);
    let d4q = ops::derivative(q, 4);
    let a4 = ops::derivative(&a, 4);
    let a6 = ops::derivative(&a, 6);
    let c5 = 16.0 * k.powi(5);
    let c2 = 4.0 * k * k;

    let lhs = Field::from_samples_unchecked(
        *q.grid(),
        (0..q.grid().points())
            .map(|j| c2 * (c5 * a.samples()[j] + c2 * q.samples()[j] + d2q.samples()[j]))
            .collect(),
    );
    let mid = a4.scale(4.0 * k.powi(3));
    let rhs = &d4q.scale(-1.0) + &a6.scale(k);
    let scale1 = [
        c2 * c2 * c5 * a.max_abs() / c2,
        c2 * c2 * q.max_abs(),
        c2 * d2q.max_abs(),
        mid.max_abs(),
        d4q.max_abs(),
        k * a6.max_abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let r1 = relative(lhs.max_abs_diff(&mid).max(mid.max_abs_diff(&rhs)), scale1);

    let b = h2(q, k)?;
    let a1 = ops::derivative(&a, 1);
    let a2 = ops::derivative(&a, 2);
    let a1sq = product_unchecked(&a1, &a1);
    let a2sq = product_unchecked(&a2, &a2);
    let asq2 = ops::derivative(&product_unchecked(&a, &a), 2);
    let qsq = product_unchecked(q, q);
    let k4 = 4.0 * k.powi(4);
    let left = Field::from_samples_unchecked(
        *q.grid(),
        (0..q.grid().points())
            .map(|j| c5 * b.samples()[j] + 3.0 * k * k * a2sq.samples()[j] - 3.0 * qsq.samples()[j])
            .collect(),
    );
    let inner = a1sq.zip_with(&asq2, |x, y| x + 2.0 * y);
    let tail = ops::derivative(&ops::resolvent(&inner, 2.0 * k), 2).scale(k4);
    let right = &a1sq.zip_with(&asq2, |x, y| -k4 * (5.0 * x - 5.0 * y)) + &tail;
    let scale2 = [
        c5 * b.max_abs(),
        3.0 * k * k * a2sq.max_abs(),
        3.0 * qsq.max_abs(),
        5.0 * k4 * a1sq.max_abs(),
        5.0 * k4 * asq2.max_abs(),
        tail.max_abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let r2 = relative(left.max_abs_diff(&right), scale2);
    Ok((r1, r2))
}
