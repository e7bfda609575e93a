//! Quasiperiodic scalar fields on the torus T^N and their pullbacks to R^n.
//!
//! A field is a finite, mean-zero trigonometric polynomial
//!
//! ```text
//! f(ω) = Σ_m  c_m cos(2π m·ω) + s_m sin(2π m·ω),    m ∈ Z^N \ {0},
//! ```
//!
//! stored with one representative per ±m pair. Pulling back along the
//! embedded orbit x ↦ ω + A x of a frequency matrix A (N rows, n columns)
//! produces the scalar w(x) = f(ω + A x) together with its gradient Aᵀ∇f and
//! Hessian AᵀD²f A; every estimator in the crate consumes these jets. The
//! orbit is equidistributed exactly when no nonzero integer vector m
//! annihilates A (m A = 0 ⇒ m = 0), which `ergodicity_check` scans for on a
//! finite window.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::QsympError;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Wrap a coordinate into [0,1). An exact 1.0 normalizes to 0.0, and the
/// rounding case where `rem_euclid` of a tiny negative returns 1.0 is folded
/// back to 0.0 as well.
fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point on T^N; coordinates are kept in [0,1).
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPoint(DVector<f64>);

impl TorusPoint {
    /// Wrap arbitrary real coordinates onto the torus.
    pub fn wrap(v: DVector<f64>) -> Self {
        TorusPoint(v.map(wrap_unit))
    }

    /// Build from a slice, wrapping each coordinate.
    pub fn from_slice(v: &[f64]) -> Self {
        TorusPoint::wrap(DVector::from_column_slice(v))
    }

    pub fn zero(dim: usize) -> Self {
        TorusPoint(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    /// Max-norm distance on the torus: each coordinate difference is reduced
    /// to its wrap-around representative in [0, 1/2].
    pub fn dist(&self, other: &TorusPoint) -> f64 {
        assert_eq!(self.dim(), other.dim(), "torus dimension mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| {
                let d = (a - b).abs().rem_euclid(1.0);
                d.min(1.0 - d)
            })
            .fold(0.0, f64::max)
    }
}

/// θ_x ω = ω + A x (mod 1): translate the base point along the embedded orbit.
pub fn translate(
    omega: &TorusPoint,
    a: &DMatrix<f64>,
    x: &DVector<f64>,
) -> Result<TorusPoint, QsympError> {
    if a.nrows() != omega.dim() || a.ncols() != x.len() {
        return Err(QsympError::Config(format!(
            "translate: matrix is {}x{} but base has dim {} and shift has dim {}",
            a.nrows(),
            a.ncols(),
            omega.dim(),
            x.len()
        )));
    }
    Ok(TorusPoint::wrap(omega.coords() + a * x))
}

/// Uniform sample on T^N from a seeded generator.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> TorusPoint {
    TorusPoint(DVector::from_fn(dim, |_, _| rng.gen::<f64>()))
}

/// One Fourier mode: the coefficient pair (c, s) of cos/sin(2π m·ω).
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    pub m: Vec<i64>,
    pub c: f64,
    pub s: f64,
}

impl Mode {
    pub fn cos(m: Vec<i64>, c: f64) -> Self {
        Mode { m, c, s: 0.0 }
    }

    pub fn sin(m: Vec<i64>, s: f64) -> Self {
        Mode { m, c: 0.0, s }
    }

    /// Sup-norm contribution of this mode: sup |c cosθ + s sinθ| = √(c²+s²).
    pub fn amplitude(&self) -> f64 {
        self.c.hypot(self.s)
    }
}

/// Value, gradient, and Hessian of a scalar at one point. Used both for
/// torus jets (dim N) and pulled-back jets (dim n).
#[derive(Clone, Debug)]
pub struct Jet {
    pub value: f64,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
}

/// A finite, mean-zero trigonometric polynomial on T^N.
///
/// Construction canonicalizes modes: the m = 0 term is rejected (fields are
/// mean-zero by convention), each m is flipped to the representative whose
/// first nonzero entry is positive (negating s accordingly), and duplicate
/// representatives are merged by summing coefficients.
#[derive(Clone, Debug)]
pub struct QuasiPeriodicScalar {
    dim: usize,
    modes: Vec<Mode>,
}

impl QuasiPeriodicScalar {
    pub fn new(dim: usize, modes: impl IntoIterator<Item = Mode>) -> Result<Self, QsympError> {
        let mut canonical: Vec<Mode> = Vec::new();
        for mode in modes {
            if mode.m.len() != dim {
                return Err(QsympError::Config(format!(
                    "mode {:?} has dim {} but the field lives on T^{}",
                    mode.m,
                    mode.m.len(),
                    dim
                )));
            }
            if mode.m.iter().all(|&k| k == 0) {
                return Err(QsympError::Config(
                    "mode m = 0 rejected: fields are mean-zero".into(),
                ));
            }
            let flip = mode
                .m
                .iter()
                .find(|&&k| k != 0)
                .map(|&k| k < 0)
                .unwrap_or(false);
            let (m, c, s) = if flip {
                (mode.m.iter().map(|&k| -k).collect(), mode.c, -mode.s)
            } else {
                (mode.m.clone(), mode.c, mode.s)
            };
            match canonical.iter_mut().find(|existing| existing.m == m) {
                Some(existing) => {
                    existing.c += c;
                    existing.s += s;
                }
                None => canonical.push(Mode { m, c, s }),
            }
        }
        Ok(QuasiPeriodicScalar {
            dim,
            modes: canonical,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Value, gradient, and Hessian at a torus point.
    pub fn eval_jet(&self, omega: &TorusPoint) -> Jet {
        assert_eq!(
            omega.dim(),
            self.dim,
            "eval_jet: point dim {} vs field dim {}",
            omega.dim(),
            self.dim
        );
        self.eval_jet_raw(omega.coords())
    }

    /// Jet evaluation on raw (possibly unwrapped) coordinates. The field is
    /// 1-periodic so wrapping is unnecessary for correctness; this entry
    /// point avoids it on hot paths.
    pub fn eval_jet_raw(&self, omega: &DVector<f64>) -> Jet {
        let n = self.dim;
        let mut value = 0.0;
        let mut gradient = DVector::zeros(n);
        let mut hessian = DMatrix::zeros(n, n);
        for mode in &self.modes {
            let phase: f64 = TWO_PI
                * mode
                    .m
                    .iter()
                    .zip(omega.iter())
                    .map(|(&k, &w)| k as f64 * w)
                    .sum::<f64>();
            let (sin, cos) = phase.sin_cos();
            value += mode.c * cos + mode.s * sin;
            let d1 = TWO_PI * (-mode.c * sin + mode.s * cos);
            let d2 = TWO_PI * TWO_PI * (-mode.c * cos - mode.s * sin);
            for i in 0..n {
                let mi = mode.m[i] as f64;
                if mi == 0.0 {
                    continue;
                }
                gradient[i] += d1 * mi;
                for j in 0..n {
                    let mj = mode.m[j] as f64;
                    if mj != 0.0 {
                        hessian[(i, j)] += d2 * mi * mj;
                    }
                }
            }
        }
        Jet {
            value,
            gradient,
            hessian,
        }
    }
}

/// Pullback jet at x ∈ R^n: w(x) = f(ω + A x) with gradient Aᵀ∇f and Hessian
/// Aᵀ D²f A, all evaluated at the translated point. The returned Hessian is
/// symmetrized, so it is symmetric to machine precision.
pub fn pullback_jet(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    omega: &TorusPoint,
    x: &DVector<f64>,
) -> Result<Jet, QsympError> {
    if a.nrows() != field.dim() {
        return Err(QsympError::Config(format!(
            "pullback_jet: matrix has {} rows but field dim is {}",
            a.nrows(),
            field.dim()
        )));
    }
    if a.ncols() != x.len() {
        return Err(QsympError::Config(format!(
            "pullback_jet: matrix has {} cols but point dim is {}",
            a.ncols(),
            x.len()
        )));
    }
    if omega.dim() != field.dim() {
        return Err(QsympError::Config(format!(
            "pullback_jet: base dim {} vs field dim {}",
            omega.dim(),
            field.dim()
        )));
    }
    // Evaluate on the lift; the field is periodic so the unwrapped point
    // gives the same jet as the wrapped one.
    let lifted = omega.coords() + a * x;
    Ok(pullback_jet_raw(field, a, &lifted))
}

/// Pullback jet with the translated torus point already formed (lift
/// coordinates accepted). Hot-path variant of [`pullback_jet`].
pub fn pullback_jet_raw(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    translated: &DVector<f64>,
) -> Jet {
    let jet = field.eval_jet_raw(translated);
    let gradient = a.transpose() * &jet.gradient;
    let h = a.transpose() * &jet.hessian * a;
    // Enforce exact symmetry; classification code relies on it.
    let hessian = 0.5 * (&h + h.transpose());
    Jet {
        value: jet.value,
        gradient,
        hessian,
    }
}

/// Spectral diagnostic Σ_m |a_m|² |m A|⁻² over the stored representatives,
/// with |a_m|² = (c_m² + s_m²)/4 per representative of the ±m pair.
///
/// Finite values certify that the field's formal antiderivative along the
/// orbit stays square-summable; a stored mode with m A = 0 and nonzero
/// coefficient makes the sum meaningless and is reported as an error.
pub fn spectral_h_minus1(field: &QuasiPeriodicScalar, a: &DMatrix<f64>) -> Result<f64, QsympError> {
    if a.nrows() != field.dim() {
        return Err(QsympError::Config(format!(
            "spectral_h_minus1: matrix has {} rows but field dim is {}",
            a.nrows(),
            field.dim()
        )));
    }
    let mut sum = 0.0;
    for mode in field.modes() {
        let ma = pulled_frequency(a, &mode.m);
        let norm2 = ma.norm_squared();
        let amp2 = 0.25 * (mode.c * mode.c + mode.s * mode.s);
        if norm2 <= 1e-24 {
            if amp2 > 0.0 {
                return Err(QsympError::ResonantMode {
                    mode: mode.m.clone(),
                });
            }
            continue;
        }
        sum += amp2 / norm2;
    }
    Ok(sum)
}

/// The pulled-back frequency Aᵀ m ∈ R^n of an integer mode m ∈ Z^N.
pub fn pulled_frequency(a: &DMatrix<f64>, m: &[i64]) -> DVector<f64> {
    let mv = DVector::from_iterator(m.len(), m.iter().map(|&k| k as f64));
    a.transpose() * mv
}

/// Result of scanning |m A| over the window ‖m‖_∞ ≤ radius.
#[derive(Clone, Debug)]
pub struct ErgodicityReport {
    pub radius: i64,
    /// Smallest nonzero |m A| seen, with its argmin.
    pub min_nonzero: f64,
    pub argmin: Vec<i64>,
    /// Modes with |m A| ≤ 1e-12: witnesses of rational dependence.
    pub zero_modes: Vec<Vec<i64>>,
    /// Best exponent k fitting |m A| ≥ ‖m‖⁻ᵏ on the scanned window
    /// (Euclidean norms, ‖m‖ ≥ 2, exact zeros excluded). This is a window
    /// statistic, not an asymptotic claim.
    pub diophantine_k: f64,
}

impl ErgodicityReport {
    /// No annihilating mode found on the window.
    pub fn is_ergodic_on_window(&self) -> bool {
        self.zero_modes.is_empty()
    }
}

/// Scan all integer modes with 0 < ‖m‖_∞ ≤ radius for near-annihilation of
/// the frequency matrix.
pub fn ergodicity_check(a: &DMatrix<f64>, radius: i64) -> Result<ErgodicityReport, QsympError> {
    if radius < 1 {
        return Err(QsympError::Config(
            "ergodicity_check: radius must be >= 1".into(),
        ));
    }
    let n_torus = a.nrows();
    if n_torus == 0 {
        return Err(QsympError::Config("ergodicity_check: empty matrix".into()));
    }
    let width = (2 * radius + 1) as usize;
    let total = width.pow(n_torus as u32);
    let mut min_nonzero = f64::INFINITY;
    let mut argmin = vec![0i64; n_torus];
    let mut zero_modes = Vec::new();
    let mut diophantine_k: f64 = 0.0;
    let mut m = vec![0i64; n_torus];
    for idx in 0..total {
        let mut rem = idx;
        for slot in m.iter_mut() {
            *slot = (rem % width) as i64 - radius;
            rem /= width;
        }
        if m.iter().all(|&k| k == 0) {
            continue;
        }
        let norm = pulled_frequency(a, &m).norm();
        if norm <= 1e-12 {
            zero_modes.push(m.clone());
            continue;
        }
        if norm < min_nonzero {
            min_nonzero = norm;
            argmin.copy_from_slice(&m);
        }
        let m_norm = m.iter().map(|&k| (k * k) as f64).sum::<f64>().sqrt();
        if m_norm >= 2.0 && norm < 1.0 {
            diophantine_k = diophantine_k.max((1.0 / norm).ln() / m_norm.ln());
        }
    }
    Ok(ErgodicityReport {
        radius,
        min_nonzero,
        argmin,
        zero_modes,
        diophantine_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn golden() -> f64 {
        0.5 * (1.0 + 5.0_f64.sqrt())
    }

    #[test]
    fn wrap_normalizes_edge_cases() {
        assert_eq!(wrap_unit(1.0), 0.0);
        assert_eq!(wrap_unit(0.0), 0.0);
        assert_eq!(wrap_unit(-1e-17), 0.0);
        assert_abs_diff_eq!(wrap_unit(1.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(wrap_unit(-0.25), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn translate_wraps_componentwise() {
        let omega = TorusPoint::from_slice(&[0.2, 0.9]);
        let a = DMatrix::identity(2, 2);
        let x = DVector::from_column_slice(&[0.15, 0.15]);
        let out = translate(&omega, &a, &x).unwrap();
        assert_abs_diff_eq!(out.coords()[0], 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(out.coords()[1], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn translate_rejects_dimension_mismatch() {
        let omega = TorusPoint::zero(3);
        let a = DMatrix::identity(2, 2);
        let x = DVector::zeros(2);
        assert!(matches!(
            translate(&omega, &a, &x),
            Err(QsympError::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn translate_satisfies_group_law(
            w in prop::collection::vec(0.0..1.0f64, 3),
            x in prop::collection::vec(-5.0..5.0f64, 2),
            y in prop::collection::vec(-5.0..5.0f64, 2),
        ) {
            let omega = TorusPoint::from_slice(&w);
            let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, golden(), 2f64.sqrt() - 1.0]);
            let xv = DVector::from_column_slice(&x);
            let yv = DVector::from_column_slice(&y);
            let one = translate(&translate(&omega, &a, &xv).unwrap(), &a, &yv).unwrap();
            let two = translate(&omega, &a, &(&xv + &yv)).unwrap();
            prop_assert!(one.dist(&two) <= 1e-12);
        }

        #[test]
        fn spectral_sum_ignores_mode_order(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut modes = vec![
                Mode::cos(vec![1, 0], rng.gen::<f64>()),
                Mode::sin(vec![0, 1], rng.gen::<f64>()),
                Mode { m: vec![1, 1], c: rng.gen(), s: rng.gen() },
            ];
            let a = DMatrix::from_row_slice(2, 1, &[1.0, 2f64.sqrt()]);
            let f1 = QuasiPeriodicScalar::new(2, modes.clone()).unwrap();
            modes.reverse();
            let f2 = QuasiPeriodicScalar::new(2, modes).unwrap();
            let s1 = spectral_h_minus1(&f1, &a).unwrap();
            let s2 = spectral_h_minus1(&f2, &a).unwrap();
            prop_assert!((s1 - s2).abs() <= 1e-15 * (1.0 + s1.abs()));
        }
    }

    #[test]
    fn mean_mode_is_rejected() {
        let err = QuasiPeriodicScalar::new(2, [Mode::cos(vec![0, 0], 1.0)]);
        assert!(matches!(err, Err(QsympError::Config(_))));
    }

    #[test]
    fn opposite_modes_merge_onto_one_representative() {
        let f = QuasiPeriodicScalar::new(
            2,
            [
                Mode {
                    m: vec![1, 0],
                    c: 0.5,
                    s: 0.25,
                },
                Mode {
                    m: vec![-1, 0],
                    c: 0.5,
                    s: 0.25,
                },
            ],
        )
        .unwrap();
        assert_eq!(f.modes().len(), 1);
        let mode = &f.modes()[0];
        assert_eq!(mode.m, vec![1, 0]);
        // cos is even (coefficients add), sin is odd (they cancel).
        assert_abs_diff_eq!(mode.c, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mode.s, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn single_cosine_jet_matches_closed_form() {
        let f = QuasiPeriodicScalar::new(2, [Mode::cos(vec![1, 0], 1.0)]).unwrap();
        let jet = f.eval_jet(&TorusPoint::zero(2));
        assert_abs_diff_eq!(jet.value, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.gradient[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.gradient[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(jet.hessian[(0, 0)], -TWO_PI * TWO_PI, epsilon = 1e-9);
        assert_abs_diff_eq!(jet.hessian[(1, 1)], 0.0, epsilon = 1e-15);

        // Generic point, hand-evaluated derivative chain.
        let w = TorusPoint::from_slice(&[0.3, 0.9]);
        let jet = f.eval_jet(&w);
        let phase = TWO_PI * 0.3;
        assert_abs_diff_eq!(jet.value, phase.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(jet.gradient[0], -TWO_PI * phase.sin(), epsilon = 1e-13);
    }

    fn random_field(dim: usize, seed: u64) -> QuasiPeriodicScalar {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for _ in 0..4 {
            let m: Vec<i64> = (0..dim).map(|_| rng.gen_range(-2..=2)).collect();
            if m.iter().all(|&k| k == 0) {
                continue;
            }
            modes.push(Mode {
                m,
                c: rng.gen_range(-0.5..0.5),
                s: rng.gen_range(-0.5..0.5),
            });
        }
        modes.push(Mode::cos(vec![1; dim], 0.3));
        QuasiPeriodicScalar::new(dim, modes).unwrap()
    }

    /// Central-difference gradient of the field value.
    fn fd_gradient(f: &QuasiPeriodicScalar, w: &DVector<f64>, h: f64) -> DVector<f64> {
        DVector::from_fn(w.len(), |i, _| {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[i] += h;
            wm[i] -= h;
            (f.eval_jet_raw(&wp).value - f.eval_jet_raw(&wm).value) / (2.0 * h)
        })
    }

    /// Central-difference Jacobian of the analytic gradient (row i = d grad_i).
    fn fd_hessian(f: &QuasiPeriodicScalar, w: &DVector<f64>, h: f64) -> DMatrix<f64> {
        let n = w.len();
        let mut out = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let gp = f.eval_jet_raw(&wp).gradient;
            let gm = f.eval_jet_raw(&wm).gradient;
            for i in 0..n {
                out[(i, j)] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        out
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let f = random_field(3, 11);
        let w = DVector::from_column_slice(&[0.12, 0.77, 0.41]);
        let jet = f.eval_jet_raw(&w);
        let g_fd = fd_gradient(&f, &w, 1e-6);
        let h_fd = fd_hessian(&f, &w, 1e-6);
        assert!((jet.gradient - g_fd).amax() < 1e-7);
        assert!((jet.hessian - h_fd).amax() < 1e-6);
    }

    #[test]
    fn pullback_chain_rule_matches_finite_differences() {
        let f = random_field(3, 23);
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, golden(), 2f64.sqrt() - 1.0]);
        let omega = TorusPoint::from_slice(&[0.3, 0.6, 0.1]);
        let x = DVector::from_column_slice(&[0.4, -1.3]);
        let jet = pullback_jet(&f, &a, &omega, &x).unwrap();

        let h = 1e-6;
        let value_at = |xv: &DVector<f64>| pullback_jet(&f, &a, &omega, xv).unwrap().value;
        let grad_at = |xv: &DVector<f64>| pullback_jet(&f, &a, &omega, xv).unwrap().gradient;
        for i in 0..2 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (value_at(&xp) - value_at(&xm)) / (2.0 * h);
            assert_abs_diff_eq!(jet.gradient[i], fd, epsilon = 1e-7);
            let gd = (grad_at(&xp) - grad_at(&xm)) / (2.0 * h);
            for j in 0..2 {
                assert_abs_diff_eq!(jet.hessian[(j, i)], gd[j], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn pullback_hessian_is_exactly_symmetric() {
        let f = random_field(3, 5);
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.3, 0.0, 1.0, golden(), 0.7]);
        let jet = pullback_jet(
            &f,
            &a,
            &TorusPoint::from_slice(&[0.9, 0.2, 0.5]),
            &DVector::from_column_slice(&[2.2, -0.7]),
        )
        .unwrap();
        assert_eq!(jet.hessian[(0, 1)].to_bits(), jet.hessian[(1, 0)].to_bits());
    }

    #[test]
    fn zero_column_drops_coordinate_from_pullback() {
        let f = random_field(2, 31);
        // Second column zero: w does not depend on x_2.
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.0]);
        let omega = TorusPoint::from_slice(&[0.25, 0.75]);
        let jet = pullback_jet(&f, &a, &omega, &DVector::from_column_slice(&[0.3, 0.9])).unwrap();
        assert_eq!(jet.gradient[1], 0.0);
        assert_eq!(jet.hessian[(1, 1)], 0.0);
        assert_eq!(jet.hessian[(0, 1)], 0.0);
    }

    #[test]
    fn spectral_single_mode_value() {
        let f = QuasiPeriodicScalar::new(2, [Mode::cos(vec![1, 0], 1.0)]).unwrap();
        let a = DMatrix::identity(2, 2);
        let s = spectral_h_minus1(&f, &a).unwrap();
        assert_abs_diff_eq!(s, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn spectral_flags_resonant_mode() {
        // Aᵀ m = 0 for m = (1, -1): the mode never averages out.
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let f = QuasiPeriodicScalar::new(2, [Mode::cos(vec![1, -1], 0.2)]).unwrap();
        assert!(matches!(
            spectral_h_minus1(&f, &a),
            Err(QsympError::ResonantMode { .. })
        ));
    }

    #[test]
    fn ergodicity_scan_irrational_line() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 2f64.sqrt()]);
        let report = ergodicity_check(&a, 50).unwrap();
        assert!(report.is_ergodic_on_window());
        assert!(report.min_nonzero > 0.0);
        // √2 has bounded partial quotients: exponent stays near 1 on a window.
        assert!(report.diophantine_k > 0.5 && report.diophantine_k < 1.5);
    }

    #[test]
    fn ergodicity_scan_lists_rational_dependences() {
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let report = ergodicity_check(&a, 3).unwrap();
        assert!(!report.is_ergodic_on_window());
        assert!(report.zero_modes.contains(&vec![1, -1]));
    }

    #[test]
    fn flagship_matrix_is_ergodic_on_window_50() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, golden(), 2f64.sqrt() - 1.0]);
        let report = ergodicity_check(&a, 50).unwrap();
        assert!(report.is_ergodic_on_window());
        assert!(report.min_nonzero > 0.0);
    }

    #[test]
    fn sample_uniform_is_deterministic_per_seed() {
        let mut r1 = crate::exec::stream_rng(42, 0);
        let mut r2 = crate::exec::stream_rng(42, 0);
        let a = sample_uniform(&mut r1, 3);
        let b = sample_uniform(&mut r2, 3);
        assert_eq!(a, b);
        for &c in a.coords().iter() {
            assert!((0.0..1.0).contains(&c));
        }
    }
}
