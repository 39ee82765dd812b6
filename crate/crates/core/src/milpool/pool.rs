use super::{AttentionWeights, InstanceScores};
use crate::error::{Error, Result};
use crate::numgrad::Matrix;

fn require_rows(p: &InstanceScores, op: &'static str) -> Result<()> {
    if p.rows() == 0 {
        return Err(Error::Domain(format!("{op} over an empty bag")));
    }
    Ok(())
}

/// `Σᵢ aᵢ·P[i]`.
pub fn weighted_pool(p: &InstanceScores, a: &AttentionWeights) -> Result<Vec<f64>> {
    if a.len() != p.rows() {
        return Err(Error::shape(
            "weighted_pool",
            format!("{} instances", p.rows()),
            format!("{} weights", a.len()),
        ));
    }
    require_rows(p, "weighted_pool")?;
    let mut out = vec![0.0; p.cols()];
    for (row, &w) in p.iter_rows().zip(a.iter()) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    Ok(out)
}

/// Returns `(∂/∂P, ∂/∂a)`.
pub fn weighted_pool_backward(p: &InstanceScores, a: &AttentionWeights, upstream: &[f64]) -> Result<(Matrix, Vec<f64>)> {
    if a.len() != p.rows() || upstream.len() != p.cols() {
        return Err(Error::shape(
            "weighted_pool_backward",
            p.shape_str(),
            format!("{} weights, {} upstream", a.len(), upstream.len()),
        ));
    }
    let mut dp = Matrix::zeros(p.rows(), p.cols());
    let mut da = Vec::with_capacity(p.rows());
    for (i, &w) in a.iter().enumerate() {
        for (d, g) in dp.row_mut(i).iter_mut().zip(upstream) {
            *d = w * g;
        }
        da.push(p.row(i).iter().zip(upstream).map(|(v, g)| v * g).sum());
    }
    Ok((dp, da))
}

/// Column-wise maximum with the argmax row of each column (lowest index on ties).
pub fn max_pool(p: &InstanceScores) -> Result<(Vec<f64>, Vec<usize>)> {
    require_rows(p, "max_pool")?;
    let mut out = p.row(0).to_vec();
    let mut argmax = vec![0; p.cols()];
    for i in 1..p.rows() {
        for (j, &v) in p.row(i).iter().enumerate() {
            if v > out[j] {
                out[j] = v;
                argmax[j] = i;
            }
        }
    }
    Ok((out, argmax))
}

/// Routes each column's upstream gradient to its argmax row.
pub fn max_pool_backward(argmax: &[usize], rows: usize, upstream: &[f64]) -> Result<Matrix> {
    if argmax.len() != upstream.len() {
        return Err(Error::shape(
            "max_pool_backward",
            format!("{} columns", argmax.len()),
            format!("{} upstream", upstream.len()),
        ));
    }
    let mut dp = Matrix::zeros(rows, argmax.len());
    for (j, (&i, &g)) in argmax.iter().zip(upstream).enumerate() {
        if i >= rows {
            return Err(Error::shape("max_pool_backward", format!("{rows} rows"), format!("argmax {i}")));
        }
        dp.set(i, j, g);
    }
    Ok(dp)
}

pub fn mean_pool(p: &InstanceScores) -> Result<Vec<f64>> {
    require_rows(p, "mean_pool")?;
    let k = p.rows() as f64;
    Ok(p.sum_rows().into_vec().into_iter().map(|s| s / k).collect())
}

pub fn mean_pool_backward(rows: usize, upstream: &[f64]) -> Result<Matrix> {
    if rows == 0 {
        return Err(Error::Domain("mean_pool_backward over an empty bag".into()));
    }
    let scaled: Vec<f64> = upstream.iter().map(|g| g / rows as f64).collect();
    Ok(Matrix::from_rows(&vec![scaled; rows]))
}
