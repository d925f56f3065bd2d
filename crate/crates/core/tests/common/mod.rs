//! Oracles shared by the integration tests and the acceptance target.
#![allow(dead_code)]

use archsearch::archspace::ArchSpec;
use archsearch::mlp::Network;
use archsearch::rng::SplitMix64;
use archsearch::stats::{ols, Design};
use nalgebra::{DMatrix, DVector};

pub type Batch = Vec<(Vec<f64>, f64)>;

/// Central finite-difference gradient of the half-MSE loss.
pub fn fd_gradient(net: &Network, batch: &Batch, eps: f64) -> Vec<f64> {
    let dims = net.layer_dims().to_vec();
    let base = net.parameters();
    (0..base.len())
        .map(|i| {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += eps;
            minus[i] -= eps;
            let lp = Network::from_parameters(dims.clone(), &plus)
                .unwrap()
                .loss(batch)
                .unwrap();
            let lm = Network::from_parameters(dims.clone(), &minus)
                .unwrap()
                .loss(batch)
                .unwrap();
            (lp - lm) / (2.0 * eps)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `||a - b|| / (||a|| + ||b||)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let denom = norm(a) + norm(b);
    if denom == 0.0 {
        0.0
    } else {
        norm(&diff) / denom
    }
}

/// Random network with at most 3 hidden layers of at most 4 units, random
/// (not initializer) weights, and a batch with unit-scale targets.
pub fn random_case(rng: &mut SplitMix64) -> (Network, Batch) {
    let n_layers = 1 + (rng.next_u64() % 3) as usize;
    let widths: Vec<u32> = (0..n_layers).map(|_| 1 + (rng.next_u64() % 4) as u32).collect();
    let input_dim = 1 + (rng.next_u64() % 5) as usize;
    let spec = ArchSpec::new(widths).unwrap();
    let shape = Network::zeros(&spec, input_dim).unwrap();
    let params: Vec<f64> = (0..shape.parameter_count())
        .map(|_| rng.uniform_symmetric(1.5))
        .collect();
    let net = Network::from_parameters(shape.layer_dims().to_vec(), &params).unwrap();
    let batch_len = 1 + (rng.next_u64() % 8) as usize;
    let batch = (0..batch_len)
        .map(|_| {
            let x = (0..input_dim).map(|_| rng.next_normal()).collect();
            (x, rng.next_normal())
        })
        .collect();
    (net, batch)
}

/// Largest backprop-vs-finite-difference relative error over `cases`
/// random cases.
pub fn gradient_check(cases: usize, seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    (0..cases)
        .map(|_| {
            let (net, batch) = random_case(&mut rng);
            let (grad, _) = net.gradient(&batch).unwrap();
            relative_error(&grad.flatten(), &fd_gradient(&net, &batch, 1e-5))
        })
        .fold(0.0, f64::max)
}

/// Random design with `n` rows and `k` columns of differing scale.
pub fn random_design(rng: &mut SplitMix64, n: usize, k: usize) -> Design {
    let mut d = Design::new();
    for j in 0..k {
        let scale = 10f64.powi(j as i32 - 1);
        let col = (0..n).map(|_| scale * rng.next_normal() + j as f64).collect();
        d.push(format!("x{j}"), col).unwrap();
    }
    d
}

/// Worst violations of the OLS normal equations on one random regression:
/// `(|sum e| / ||y||, max_j |x_j . e| / (||x_j|| ||y||))`.
pub fn ols_invariant_violations(seed: u64) -> (f64, f64) {
    let mut rng = SplitMix64::new(seed);
    let n = 20 + (rng.next_u64() % 60) as usize;
    let k = 1 + (rng.next_u64() % 4) as usize;
    let design = random_design(&mut rng, n, k);
    let y: Vec<f64> = (0..n).map(|_| 3.0 + 2.0 * rng.next_normal()).collect();
    let rep = ols(&design, &y, true).unwrap();
    let e = &rep.residuals;
    let y_norm = norm(&y);
    let sum_resid = e.iter().sum::<f64>().abs() / y_norm;
    let orth = design
        .columns()
        .iter()
        .map(|(_, x)| x.iter().zip(e).map(|(a, b)| a * b).sum::<f64>().abs() / (norm(x) * y_norm))
        .fold(0.0, f64::max);
    (sum_resid, orth)
}

/// Coefficients `[intercept, b_1..b_k]` from the normal equations,
/// solved by Cholesky: a different route from the QR used by `ols`.
pub fn normal_equations(design: &Design, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let k = design.n_vars();
    let x = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { design.columns()[j - 1].1[i] });
    let xtx = x.transpose() * &x;
    let xty = x.transpose() * DVector::from_column_slice(y);
    let beta = xtx.cholesky().expect("positive definite").solve(&xty);
    beta.iter().copied().collect()
}
