//! Forward and backward passes of the dense building blocks.
//!
//! Backward functions take the values cached by the forward pass plus the upstream
//! gradient and return the gradient with respect to the layer input. Parameter
//! gradients are accumulated (`+=`) into [`Param::grad`].

use super::{Matrix, Param, RngState};
use crate::error::{Error, Result};

/// `X·W + b` with `X: n×d`, `W: d×m`, `b: 1×m`.
pub fn affine(x: &Matrix, w: &Param, b: &Param) -> Result<Matrix> {
    check_affine_shapes(x, w, b)?;
    if !x.is_finite() {
        return Err(Error::Domain("non-finite input to affine layer".into()));
    }
    let mut out = x.matmul(&w.value)?;
    let bias = b.value.as_slice();
    for r in 0..out.rows() {
        for (o, bv) in out.row_mut(r).iter_mut().zip(bias) {
            *o += bv;
        }
    }
    Ok(out)
}

pub fn affine_backward(x: &Matrix, w: &mut Param, b: &mut Param, upstream: &Matrix) -> Result<Matrix> {
    affine_backward_params(x, w, b, upstream)?;
    upstream.matmul_nt(&w.value)
}

/// Parameter half of [`affine_backward`], for layers whose input needs no gradient.
pub fn affine_backward_params(x: &Matrix, w: &mut Param, b: &mut Param, upstream: &Matrix) -> Result<()> {
    check_affine_shapes(x, w, b)?;
    if upstream.shape() != (x.rows(), w.value.cols()) {
        return Err(Error::shape(
            "affine_backward",
            format!("{}x{}", x.rows(), w.value.cols()),
            upstream.shape_str(),
        ));
    }
    x.accumulate_tn(upstream, &mut w.grad)?;
    let col_sums = upstream.sum_rows();
    b.grad.add_scaled(1.0, &col_sums)
}

fn check_affine_shapes(x: &Matrix, w: &Param, b: &Param) -> Result<()> {
    if x.cols() != w.value.rows() {
        return Err(Error::shape("affine", x.shape_str(), w.value.shape_str()));
    }
    if b.value.shape() != (1, w.value.cols()) {
        return Err(Error::shape("affine bias", w.value.shape_str(), b.value.shape_str()));
    }
    Ok(())
}

pub fn relu(x: &Matrix) -> Matrix {
    x.map(|v| v.max(0.0))
}

/// Upstream gradient masked by `x > 0`, where `x` is the relu *input*.
pub fn relu_backward(x: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    if !x.same_shape(upstream) {
        return Err(Error::shape("relu_backward", x.shape_str(), upstream.shape_str()));
    }
    let values = x
        .as_slice()
        .iter()
        .zip(upstream.as_slice())
        .map(|(&xv, &g)| if xv > 0.0 { g } else { 0.0 })
        .collect();
    Matrix::new(x.rows(), x.cols(), values)
}

/// Logistic function in a form that never overflows `exp`.
#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

/// `upstream · σ(1−σ)`, where `out` is the sigmoid *output*.
pub fn sigmoid_backward(out: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    if !out.same_shape(upstream) {
        return Err(Error::shape("sigmoid_backward", out.shape_str(), upstream.shape_str()));
    }
    let values = out
        .as_slice()
        .iter()
        .zip(upstream.as_slice())
        .map(|(&s, &g)| g * s * (1.0 - s))
        .collect();
    Matrix::new(out.rows(), out.cols(), values)
}

pub fn tanh(x: &Matrix) -> Matrix {
    x.map(f64::tanh)
}

/// `upstream · (1 − t²)`, where `out` is the tanh output.
pub fn tanh_backward(out: &Matrix, upstream: &Matrix) -> Result<Matrix> {
    if !out.same_shape(upstream) {
        return Err(Error::shape("tanh_backward", out.shape_str(), upstream.shape_str()));
    }
    let values = out
        .as_slice()
        .iter()
        .zip(upstream.as_slice())
        .map(|(&t, &g)| g * (1.0 - t * t))
        .collect();
    Matrix::new(out.rows(), out.cols(), values)
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax_vec(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::Domain("softmax of an empty vector".into()));
    }
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Jacobian-vector product of softmax: `s ⊙ (g − ⟨g, s⟩)`, `s` the softmax output.
pub fn softmax_vec_backward(out: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
    if out.len() != upstream.len() {
        return Err(Error::shape(
            "softmax_backward",
            format!("len {}", out.len()),
            format!("len {}", upstream.len()),
        ));
    }
    let dot: f64 = out.iter().zip(upstream).map(|(s, g)| s * g).sum();
    Ok(out.iter().zip(upstream).map(|(s, g)| s * (g - dot)).collect())
}

/// Inverted-dropout mask: `None` means the layer acted as the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct DropoutMask {
    scale: Option<Matrix>,
}

impl DropoutMask {
    pub fn identity() -> Self {
        Self { scale: None }
    }

    pub fn backward(&self, upstream: &Matrix) -> Result<Matrix> {
        match &self.scale {
            None => Ok(upstream.clone()),
            Some(mask) => hadamard(mask, upstream, "dropout_backward"),
        }
    }

    /// Fraction of entries kept (1.0 for the identity mask).
    pub fn keep_fraction(&self) -> f64 {
        match &self.scale {
            None => 1.0,
            Some(m) => {
                let n = m.as_slice().len().max(1);
                m.as_slice().iter().filter(|&&v| v != 0.0).count() as f64 / n as f64
            }
        }
    }
}

pub fn dropout(x: &Matrix, rate: f64, rng: &mut RngState, train_mode: bool) -> Result<(Matrix, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Domain(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !train_mode || rate == 0.0 {
        return Ok((x.clone(), DropoutMask::identity()));
    }
    let keep = 1.0 / (1.0 - rate);
    let values = (0..x.as_slice().len())
        .map(|_| if rng.uniform() < rate { 0.0 } else { keep })
        .collect();
    let mask = Matrix::new(x.rows(), x.cols(), values)?;
    let out = hadamard(&mask, x, "dropout")?;
    Ok((out, DropoutMask { scale: Some(mask) }))
}

fn hadamard(a: &Matrix, b: &Matrix, op: &'static str) -> Result<Matrix> {
    if !a.same_shape(b) {
        return Err(Error::shape(op, a.shape_str(), b.shape_str()));
    }
    let values = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    Matrix::new(a.rows(), a.cols(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(name: &str, m: Matrix) -> Param {
        Param::new(name, m)
    }

    #[test]
    fn affine_identity_input() {
        let x = Matrix::identity(2);
        let w = p("w", Matrix::from_rows(&[[3.0, 0.0], [0.0, 5.0]]));
        let b = p("b", Matrix::row_vector(vec![0.0, 0.0]));
        assert_eq!(affine(&x, &w, &b).unwrap(), Matrix::from_rows(&[[3.0, 0.0], [0.0, 5.0]]));
    }

    #[test]
    fn affine_zero_weights_pass_bias() {
        let x = Matrix::from_rows(&[[1.0, 2.0]]);
        let w = p("w", Matrix::zeros(2, 1));
        let b = p("b", Matrix::row_vector(vec![7.0]));
        assert_eq!(affine(&x, &w, &b).unwrap(), Matrix::from_rows(&[[7.0]]));
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let x = Matrix::zeros(3, 4);
        let w = p("w", Matrix::zeros(5, 2));
        let b = p("b", Matrix::zeros(1, 2));
        let msg = affine(&x, &w, &b).unwrap_err().to_string();
        assert!(msg.contains("3x4") && msg.contains("5x2"), "{msg}");
    }

    #[test]
    fn affine_rejects_non_finite_input() {
        let x = Matrix::from_rows(&[[f64::NAN]]);
        let w = p("w", Matrix::zeros(1, 1));
        let b = p("b", Matrix::zeros(1, 1));
        assert!(matches!(affine(&x, &w, &b), Err(Error::Domain(_))));
    }

    #[test]
    fn relu_cases() {
        let x = Matrix::from_rows(&[[-1.0, 0.0, 2.0]]);
        assert_eq!(relu(&x), Matrix::from_rows(&[[0.0, 0.0, 2.0]]));
        let g = relu_backward(&Matrix::from_rows(&[[-1.0, 2.0]]), &Matrix::from_rows(&[[5.0, 5.0]])).unwrap();
        assert_eq!(g, Matrix::from_rows(&[[0.0, 5.0]]));
    }

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid_scalar(0.0), 0.5);
        let s = sigmoid(&Matrix::from_rows(&[[0.0]]));
        let d = sigmoid_backward(&s, &Matrix::from_rows(&[[1.0]])).unwrap();
        assert_eq!(d.get(0, 0), 0.25);
        for x in [1e3, -1e3, 750.0, -750.0] {
            let s = sigmoid_scalar(x);
            assert!(s.is_finite() && (0.0..=1.0).contains(&s));
        }
    }

    #[test]
    fn softmax_reference_points() {
        assert_eq!(softmax_vec(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(softmax_vec(&[123.4]).unwrap(), vec![1.0]);
        // e/(e+1) and 1/(e+1) evaluated independently of the max-subtraction path
        let e = std::f64::consts::E;
        let s = softmax_vec(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(s[0], e / (e + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], 1.0 / (e + 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s[0], 0.7311, epsilon = 1e-4);
        assert!(matches!(softmax_vec(&[]), Err(Error::Domain(_))));
    }

    #[test]
    fn softmax_backward_matches_explicit_jacobian() {
        let s = softmax_vec(&[0.3, -1.2, 2.0]).unwrap();
        let g = [1.0, -2.0, 0.5];
        let jvp = softmax_vec_backward(&s, &g).unwrap();
        for i in 0..3 {
            let mut expected = 0.0;
            for j in 0..3 {
                let jac = if i == j { s[i] * (1.0 - s[i]) } else { -s[i] * s[j] };
                expected += jac * g[j];
            }
            assert_abs_diff_eq!(jvp[i], expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn dropout_degenerate_cases() {
        let x = Matrix::from_rows(&[[1.0, -2.0, 3.0]]);
        let mut rng = RngState::new(1);
        assert_eq!(dropout(&x, 0.0, &mut rng, true).unwrap().0, x);
        assert_eq!(dropout(&x, 0.9, &mut rng, false).unwrap().0, x);
        assert!(matches!(dropout(&x, 1.0, &mut rng, true), Err(Error::Domain(_))));
    }

    #[test]
    fn dropout_statistics_at_half_rate() {
        let x = Matrix::filled(20, 50, 1.0);
        let (out, mask) = dropout(&x, 0.5, &mut RngState::new(2024), true).unwrap();
        // Binomial(1000, 0.5): std ≈ 15.8, so [440, 560] is a ±3.8σ band
        let kept = mask.keep_fraction();
        assert!((0.44..=0.56).contains(&kept), "kept {kept}");
        let mean = out.sum() / 1000.0;
        assert!((mean - 1.0).abs() < 0.1, "mean {mean}");
        let back = mask.backward(&Matrix::filled(20, 50, 1.0)).unwrap();
        assert_eq!(back, out);
    }
}
