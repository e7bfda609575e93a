//! Shared fixtures and independent oracles for the acceptance suite.
//!
//! Everything here deliberately avoids the library's own integration and
//! solver code paths: flows are re-integrated with a hand-rolled RK4 on the
//! raw Fourier sums so that agreement is evidence, not tautology.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use qsymp::config::{load_config, ResolvedConfig};
use qsymp::exec::stream_rng;
use qsymp::field::TWO_PI;
use qsymp::flow::TimePeriodicField;

pub fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn load_fixture(name: &str) -> ResolvedConfig {
    load_config(&config_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Uniform probe vectors in [−r, r]^dim, reproducible across runs.
pub fn probe_vectors(seed: u64, count: usize, dim: usize, r: f64) -> Vec<DVector<f64>> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-r..r)))
        .collect()
}

/// ∇K(θ, t) evaluated directly from the Fourier sum — no library jet code.
fn raw_gradient(field: &TimePeriodicField, theta: &DVector<f64>, t: f64) -> DVector<f64> {
    let n = field.dim();
    let mut grad = DVector::zeros(n);
    for mode in field.modes() {
        let phase = TWO_PI
            * (mode
                .m
                .iter()
                .zip(theta.iter())
                .map(|(&mi, &ti)| mi as f64 * ti)
                .sum::<f64>()
                + mode.k as f64 * t);
        // d/dθ_i [c cos(phase) + s sin(phase)] = 2π m_i (−c sin + s cos)
        let factor = TWO_PI * (-mode.c * phase.sin() + mode.s * phase.cos());
        for (i, &mi) in mode.m.iter().enumerate() {
            grad[i] += factor * mi as f64;
        }
    }
    grad
}

/// Plain fixed-step RK4 for the full-space lift θ̇ = A J Aᵀ ∇K(θ, t).
pub fn oracle_lift_flow(
    field: &TimePeriodicField,
    a: &DMatrix<f64>,
    theta0: &DVector<f64>,
    duration: f64,
    steps: usize,
) -> DVector<f64> {
    let d = a.ncols() / 2;
    let j = qsymp::twist::standard_symplectic(d);
    let push = a * &j * a.transpose();
    let rhs = |theta: &DVector<f64>, t: f64| &push * raw_gradient(field, theta, t);
    let h = duration / steps as f64;
    let mut theta = theta0.clone();
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(&theta, t);
        let k2 = rhs(&(&theta + 0.5 * h * &k1), t + 0.5 * h);
        let k3 = rhs(&(&theta + 0.5 * h * &k2), t + 0.5 * h);
        let k4 = rhs(&(&theta + h * &k3), t + h);
        theta += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    theta
}

/// Plain fixed-step RK4 for the reduced equation ẋ = J Aᵀ ∇K(ω + A x, t).
pub fn oracle_reduced_flow(
    field: &TimePeriodicField,
    a: &DMatrix<f64>,
    omega: &DVector<f64>,
    x0: &DVector<f64>,
    duration: f64,
    steps: usize,
) -> DVector<f64> {
    let d = a.ncols() / 2;
    let j = qsymp::twist::standard_symplectic(d);
    let pull = &j * a.transpose();
    let rhs = |x: &DVector<f64>, t: f64| {
        let theta = omega + a * x;
        &pull * raw_gradient(field, &theta, t)
    };
    let h = duration / steps as f64;
    let mut x = x0.clone();
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = rhs(&x, t);
        let k2 = rhs(&(&x + 0.5 * h * &k1), t + 0.5 * h);
        let k3 = rhs(&(&x + 0.5 * h * &k2), t + 0.5 * h);
        let k4 = rhs(&(&x + h * &k3), t + h);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    x
}

/// Relative gap |a − b| / max(|a|, |b|).
pub fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}
