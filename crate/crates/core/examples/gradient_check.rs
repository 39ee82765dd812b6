// Finite-difference check of every backward pass, first on a lone dense
// layer, then on full models of each pooling kind.
//
// ```bash
// cargo run --example gradient_check
// ```

use attnmil::bench::{gradcheck_all, GradCheckSettings, RunConfig};
use attnmil::milpool::PoolingKind;
use attnmil::numgrad::{
    affine, affine_backward, cross_entropy_sigmoid_logits, grad_check, GradCheckOptions, Matrix, Param, RngState,
};

pub fn run() -> attnmil::Result<()> {
    // a single logistic unit: loss(σ(XW + b), y)
    let mut rng = RngState::new(1);
    let x = Matrix::new(5, 3, (0..15).map(|_| rng.normal()).collect())?;
    let targets = [1.0, 0.0, 1.0, 1.0, 0.0];
    let mut params = vec![
        Param::new("w", Matrix::new(3, 1, vec![0.3, -0.2, 0.5])?),
        Param::new("b", Matrix::zeros(1, 1)),
    ];
    let report = grad_check(
        &mut params,
        |p: &mut Vec<Param>| {
            let (w, b) = p.split_at_mut(1);
            w[0].zero_grad();
            b[0].zero_grad();
            let z = affine(&x, &w[0], &b[0])?;
            let lg = cross_entropy_sigmoid_logits(z.as_slice(), &targets)?;
            affine_backward(&x, &mut w[0], &mut b[0], &Matrix::column_vector(lg.grad.clone()))?;
            Ok(lg.loss)
        },
        &GradCheckOptions::default(),
    )?;
    println!("logistic unit: max relative error {:.2e}", report.max_relative_error);

    let checks = gradcheck_all(&RunConfig::default(), &GradCheckSettings::default(), &PoolingKind::ALL)?;
    for c in &checks {
        println!(
            "{:<10} {:.2e} over {} entries {}",
            c.pooling.as_str(),
            c.max_relative_error,
            c.entries_checked,
            if c.passed { "ok" } else { "FAIL" }
        );
    }

    // a corrupted classifier gradient must not slip through
    let broken = GradCheckSettings {
        fault: Some(1.1),
        ..GradCheckSettings::default()
    };
    let caught = gradcheck_all(&RunConfig::default(), &broken, &[PoolingKind::Attention])?;
    println!("with a 10% gradient fault: {:.2e}, passed = {}", caught[0].max_relative_error, caught[0].passed);
    Ok(())
}

#[allow(dead_code)]
fn main() -> attnmil::Result<()> {
    run()
}
