//! Symplectic maps of R^{2d} obtained as time-one flows of time-periodic
//! Hamiltonians driven along the embedded torus orbit.
//!
//! A Hamiltonian K(θ, t) on T^N × R, 1-periodic in t, induces the reduced
//! equations ẋ = J Aᵀ ∇K(ω + A x, t) on R^{2d}. The lifted torus point
//! θ = ω + A x then obeys θ̇ = A J Aᵀ ∇K(θ, t), a divergence-free field on
//! T^N (A J Aᵀ is antisymmetric), and the displacement over one period lies
//! in the column span of A exactly. Integration therefore works on the lift,
//! recovering the phase-space displacement ζ₁ through the normal equations
//! and certifying in passing that the flow never left the embedded leaf.

use nalgebra::{DMatrix, DVector};

use crate::error::QsympError;
use crate::field::{translate, Jet, TorusPoint, TWO_PI};
use crate::twist::{standard_symplectic, HatMap, MapJet, QuasiMap};

/// Default RK4 step for time-one integrations.
pub const DEFAULT_FLOW_STEP: f64 = 1e-2;
/// Default step-halving certificate tolerance.
pub const DEFAULT_FLOW_TOLERANCE: f64 = 1e-8;

/// How far a computed displacement may sit from the column span of the
/// frequency matrix before the integration is rejected.
const LEAF_RESIDUAL_TOL: f64 = 1e-10;

const FIBER_NEWTON_TOL: f64 = 1e-12;
const FIBER_NEWTON_MAX_ITER: usize = 50;
/// Central-difference step for hat-map Jacobians of flow maps.
const HAT_FD_STEP: f64 = 1e-5;

/// One Fourier mode of a time-periodic Hamiltonian:
/// c·cos(2π(m·θ + k t)) + s·sin(2π(m·θ + k t)).
#[derive(Clone, Debug, PartialEq)]
pub struct TimeMode {
    pub m: Vec<i64>,
    pub k: i64,
    pub c: f64,
    pub s: f64,
}

impl TimeMode {
    pub fn cos(m: Vec<i64>, k: i64, c: f64) -> Self {
        TimeMode { m, k, c, s: 0.0 }
    }

    pub fn sin(m: Vec<i64>, k: i64, s: f64) -> Self {
        TimeMode { m, k, c: 0.0, s }
    }

    pub fn amplitude(&self) -> f64 {
        self.c.hypot(self.s)
    }
}

/// A finite trigonometric Hamiltonian on T^N × R, 1-periodic in time.
///
/// Modes are canonicalized over the joint sign of (m, k) exactly as spatial
/// fields are over m; the constant mode (m, k) = (0, 0) is rejected.
#[derive(Clone, Debug)]
pub struct TimePeriodicField {
    dim: usize,
    modes: Vec<TimeMode>,
}

impl TimePeriodicField {
    pub fn new(dim: usize, modes: impl IntoIterator<Item = TimeMode>) -> Result<Self, QsympError> {
        let mut canonical: Vec<TimeMode> = Vec::new();
        for mode in modes {
            if mode.m.len() != dim {
                return Err(QsympError::Config(format!(
                    "time mode {:?} has dim {} but the field lives on T^{}",
                    mode.m,
                    mode.m.len(),
                    dim
                )));
            }
            if mode.m.iter().all(|&v| v == 0) && mode.k == 0 {
                return Err(QsympError::Config(
                    "constant Hamiltonian mode (m, k) = (0, 0) rejected".into(),
                ));
            }
            let lead = mode
                .m
                .iter()
                .copied()
                .chain(std::iter::once(mode.k))
                .find(|&v| v != 0)
                .expect("nonzero mode");
            let (m, k, c, s) = if lead < 0 {
                (
                    mode.m.iter().map(|&v| -v).collect(),
                    -mode.k,
                    mode.c,
                    -mode.s,
                )
            } else {
                (mode.m.clone(), mode.k, mode.c, mode.s)
            };
            match canonical
                .iter_mut()
                .find(|existing| existing.m == m && existing.k == k)
            {
                Some(existing) => {
                    existing.c += c;
                    existing.s += s;
                }
                None => canonical.push(TimeMode { m, k, c, s }),
            }
        }
        Ok(TimePeriodicField {
            dim,
            modes: canonical,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[TimeMode] {
        &self.modes
    }

    /// Value, spatial gradient, and spatial Hessian at (θ, t).
    pub fn eval_jet(&self, theta: &DVector<f64>, t: f64) -> Jet {
        let n = self.dim;
        let mut value = 0.0;
        let mut gradient = DVector::zeros(n);
        let mut hessian = DMatrix::zeros(n, n);
        for mode in &self.modes {
            let phase: f64 = TWO_PI
                * (mode
                    .m
                    .iter()
                    .zip(theta.iter())
                    .map(|(&k, &w)| k as f64 * w)
                    .sum::<f64>()
                    + mode.k as f64 * t);
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

/// Fourier bounds sup‖Aᵀ∇K‖ ≤ Σ 2π|Aᵀm|·amp and
/// sup‖Aᵀ D²K A‖ ≤ Σ (2π|Aᵀm|)²·amp.
pub fn flow_fourier_bounds(field: &TimePeriodicField, a: &DMatrix<f64>) -> (f64, f64) {
    let mut grad = 0.0;
    let mut hess = 0.0;
    for mode in field.modes() {
        let ma = crate::field::pulled_frequency(a, &mode.m);
        let freq = TWO_PI * ma.norm();
        grad += freq * mode.amplitude();
        hess += freq * freq * mode.amplitude();
    }
    (grad, hess)
}

/// Everything one certified integration produces.
#[derive(Clone, Debug)]
pub struct FlowResult {
    /// Phase-space displacement: the unique ζ with displacement = A ζ.
    pub zeta1: DVector<f64>,
    /// Lift displacement θ(T) − θ(0) ∈ R^N.
    pub displacement: DVector<f64>,
    /// Variational solution in reduced coordinates (2d×2d).
    pub monodromy: DMatrix<f64>,
    /// Lift trajectory at the fine resolution, including both endpoints.
    pub path: Vec<DVector<f64>>,
    /// Step-halving certificate: max difference between the coarse and fine
    /// end states.
    pub cert_error: f64,
}

struct RawFlow {
    theta: DVector<f64>,
    monodromy: DMatrix<f64>,
    path: Vec<DVector<f64>>,
}

fn rk4_run(
    field: &TimePeriodicField,
    a: &DMatrix<f64>,
    j: &DMatrix<f64>,
    theta0: &DVector<f64>,
    duration: f64,
    steps: usize,
    keep_path: bool,
) -> RawFlow {
    let n = a.ncols();
    let h = duration / steps as f64;
    let mut theta = theta0.clone();
    let mut y = DMatrix::identity(n, n);
    let mut path = Vec::new();
    if keep_path {
        path.push(theta.clone());
    }
    let rhs = |theta: &DVector<f64>, t: f64| -> (DVector<f64>, DMatrix<f64>) {
        let jet = field.eval_jet(theta, t);
        let v = j * (a.transpose() * &jet.gradient);
        let var = j * (a.transpose() * &jet.hessian * a);
        (a * v, var)
    };
    for step in 0..steps {
        let t = step as f64 * h;
        let (k1, v1) = rhs(&theta, t);
        let l1 = &v1 * &y;
        let (k2, v2) = rhs(&(&theta + 0.5 * h * &k1), t + 0.5 * h);
        let l2 = &v2 * &(&y + 0.5 * h * &l1);
        let (k3, v3) = rhs(&(&theta + 0.5 * h * &k2), t + 0.5 * h);
        let l3 = &v3 * &(&y + 0.5 * h * &l2);
        let (k4, v4) = rhs(&(&theta + h * &k3), t + h);
        let l4 = &v4 * &(&y + h * &l3);
        theta += (h / 6.0) * (&k1 + 2.0 * &k2 + 2.0 * &k3 + &k4);
        y += (h / 6.0) * (&l1 + 2.0 * &l2 + 2.0 * &l3 + &l4);
        if keep_path {
            path.push(theta.clone());
        }
    }
    RawFlow {
        theta,
        monodromy: y,
        path,
    }
}

fn leaf_projection(
    a: &DMatrix<f64>,
    displacement: &DVector<f64>,
) -> Result<DVector<f64>, QsympError> {
    let ata = a.transpose() * a;
    let rhs = a.transpose() * displacement;
    let zeta = ata.lu().solve(&rhs).ok_or_else(|| {
        QsympError::Config("frequency matrix does not have full column rank".into())
    })?;
    let residual = (displacement - a * &zeta).amax();
    if residual > LEAF_RESIDUAL_TOL {
        return Err(QsympError::Numerical(format!(
            "flow displacement sits {residual:.3e} away from the embedded leaf \
             (tolerance {LEAF_RESIDUAL_TOL:.0e})"
        )));
    }
    Ok(zeta)
}

/// Integrate the lifted flow over `duration` with a step-halving
/// certificate: the equations run once at `step` and once at `step`/2, the
/// end states must agree within `tolerance`, and the fine result is
/// returned. Certificate failure is the caller's signal to shrink the step.
pub fn integrate_flow(
    field: &TimePeriodicField,
    a: &DMatrix<f64>,
    theta0: &DVector<f64>,
    duration: f64,
    step: f64,
    tolerance: f64,
) -> Result<FlowResult, QsympError> {
    if a.nrows() != field.dim() || theta0.len() != field.dim() {
        return Err(QsympError::Config(
            "integrate_flow: torus dimensions disagree".into(),
        ));
    }
    if !(duration > 0.0) || !(step > 0.0) {
        return Err(QsympError::Config(
            "integrate_flow: duration and step must be positive".into(),
        ));
    }
    let n = a.ncols();
    if n % 2 != 0 || n == 0 {
        return Err(QsympError::Config(
            "integrate_flow: phase space dimension must be even".into(),
        ));
    }
    let j = standard_symplectic(n / 2);
    let coarse_steps = (duration / step).ceil() as usize;
    let coarse = rk4_run(field, a, &j, theta0, duration, coarse_steps, false);
    let fine = rk4_run(field, a, &j, theta0, duration, 2 * coarse_steps, true);
    let cert_error = (&coarse.theta - &fine.theta)
        .amax()
        .max((&coarse.monodromy - &fine.monodromy).amax());
    if cert_error > tolerance {
        return Err(QsympError::StepTooLarge {
            error: cert_error,
            tolerance,
        });
    }
    let displacement = &fine.theta - theta0;
    let zeta1 = leaf_projection(a, &displacement)?;
    Ok(FlowResult {
        zeta1,
        displacement,
        monodromy: fine.monodromy,
        path: fine.path,
        cert_error,
    })
}

/// The time-one map of a driven Hamiltonian flow, attached to a base point.
///
/// Construction runs one certified integration at the base; subsequent
/// applications reuse the certified step at its fine resolution without
/// re-running the certificate pair.
#[derive(Clone, Debug)]
pub struct FlowMap {
    field: TimePeriodicField,
    a: DMatrix<f64>,
    base: TorusPoint,
    d: usize,
    step: f64,
    tolerance: f64,
}

impl FlowMap {
    pub fn new(
        field: TimePeriodicField,
        a: DMatrix<f64>,
        base: TorusPoint,
        d: usize,
        step: f64,
        tolerance: f64,
    ) -> Result<Self, QsympError> {
        if d == 0 || a.ncols() != 2 * d {
            return Err(QsympError::Config(format!(
                "flow map: matrix has {} columns but d = {d}",
                a.ncols()
            )));
        }
        if a.nrows() != field.dim() || base.dim() != field.dim() {
            return Err(QsympError::Config(
                "flow map: torus dimensions disagree".into(),
            ));
        }
        integrate_flow(&field, &a, base.coords(), 1.0, step, tolerance)?;
        Ok(FlowMap {
            field,
            a,
            base,
            d,
            step,
            tolerance,
        })
    }

    pub fn field(&self) -> &TimePeriodicField {
        &self.field
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Apply the time-one map with the full step-halving certificate.
    pub fn certified_apply(&self, x: &DVector<f64>) -> Result<(MapJet, f64), QsympError> {
        let theta0 = self.base.coords() + &self.a * x;
        let result = integrate_flow(
            &self.field,
            &self.a,
            &theta0,
            1.0,
            self.step,
            self.tolerance,
        )?;
        Ok((
            MapJet {
                image: x + &result.zeta1,
                jacobian: result.monodromy,
            },
            result.cert_error,
        ))
    }

    /// Apply without the certificate pair: one integration at the fine
    /// resolution the certificate validated. Values agree bit for bit with
    /// the certified path.
    fn fast_apply(&self, x: &DVector<f64>) -> Result<MapJet, QsympError> {
        let theta0 = self.base.coords() + &self.a * x;
        let j = standard_symplectic(self.d);
        let steps = 2 * (1.0 / self.step).ceil() as usize;
        let raw = rk4_run(&self.field, &self.a, &j, &theta0, 1.0, steps, false);
        let displacement = &raw.theta - &theta0;
        let zeta1 = leaf_projection(&self.a, &displacement)?;
        Ok(MapJet {
            image: x + zeta1,
            jacobian: raw.monodromy,
        })
    }
}

impl QuasiMap for FlowMap {
    fn torus_dim(&self) -> usize {
        self.field.dim()
    }

    fn map_dim(&self) -> usize {
        self.d
    }

    fn base(&self) -> &TorusPoint {
        &self.base
    }

    fn frequency_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    fn rebased(&self, base: TorusPoint) -> Result<Self, QsympError> {
        if base.dim() != self.field.dim() {
            return Err(QsympError::Config(format!(
                "rebased: base dim {} vs torus dim {}",
                base.dim(),
                self.field.dim()
            )));
        }
        let mut out = self.clone();
        out.base = base;
        Ok(out)
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, QsympError> {
        Ok(self.fast_apply(x)?.image)
    }
}

impl HatMap for FlowMap {
    /// Φ̂(Q, p) = (q, P): invert the first block of the map over the fiber
    /// by Newton in q, then read P from the full application at (q, p).
    fn hat_apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, QsympError> {
        let d = self.d;
        if x.len() != 2 * d {
            return Err(QsympError::Config(format!(
                "hat_apply: point dim {} but phase space dim {}",
                x.len(),
                2 * d
            )));
        }
        let big_q = x.rows(0, d).into_owned();
        let p = x.rows(d, d).into_owned();
        let mut q = big_q.clone();
        let mut arg = DVector::zeros(2 * d);
        for iter in 0..FIBER_NEWTON_MAX_ITER {
            arg.rows_mut(0, d).copy_from(&q);
            arg.rows_mut(d, d).copy_from(&p);
            let jet = self.fast_apply(&arg)?;
            let residual = jet.image.rows(0, d) - &big_q;
            if residual.amax() <= FIBER_NEWTON_TOL {
                let mut out = DVector::zeros(2 * d);
                out.rows_mut(0, d).copy_from(&q);
                out.rows_mut(d, d).copy_from(&jet.image.rows(d, d));
                return Ok(out);
            }
            let dq = jet.jacobian.view((0, 0), (d, d)).into_owned();
            let delta = dq.lu().solve(&residual).ok_or_else(|| {
                QsympError::NonTwistDisplacement("fiber inversion: singular ∂Q/∂q block".into())
            })?;
            q -= delta;
            if iter == FIBER_NEWTON_MAX_ITER - 1 {
                return Err(QsympError::NonTwistDisplacement(format!(
                    "fiber inversion stalled at residual {:.3e}",
                    residual.amax()
                )));
            }
        }
        unreachable!("loop either returns or errors")
    }

    /// Central finite differences of [`Self::hat_apply`].
    fn hat_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, QsympError> {
        let n = 2 * self.d;
        let mut jac = DMatrix::zeros(n, n);
        for col in 0..n {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[col] += HAT_FD_STEP;
            xm[col] -= HAT_FD_STEP;
            let fp = self.hat_apply(&xp)?;
            let fm = self.hat_apply(&xm)?;
            let column = (fp - fm) / (2.0 * HAT_FD_STEP);
            jac.column_mut(col).copy_from(&column);
        }
        Ok(jac)
    }
}

/// Apriori regularity of a flow map, from Fourier bounds and probe checks.
#[derive(Clone, Debug)]
pub struct RegularityReport {
    /// Bound on sup‖Aᵀ∇K‖ (controls the displacement).
    pub grad_bound: f64,
    /// Bound on sup‖Aᵀ D²K A‖ (controls the Jacobian through Gronwall).
    pub hess_bound: f64,
    /// max(grad_bound, hess_bound).
    pub ell: f64,
    /// e^ell − 1: the guaranteed bound on ‖DΦ − I‖.
    pub expansion: f64,
    /// Whether e^ell ≤ 1.9, the twist-regime gate.
    pub twist_ok: bool,
    pub probe_displacement: f64,
    pub probe_expansion: f64,
    /// Probes stayed within the analytic envelopes.
    pub probes_consistent: bool,
}

pub fn regularity_report(
    map: &FlowMap,
    probes: &[DVector<f64>],
) -> Result<RegularityReport, QsympError> {
    let (grad_bound, hess_bound) = flow_fourier_bounds(&map.field, &map.a);
    let ell = grad_bound.max(hess_bound);
    let expansion = ell.exp() - 1.0;
    let n = 2 * map.d;
    let mut probe_displacement = 0.0f64;
    let mut probe_expansion = 0.0f64;
    for x in probes {
        let jet = map.fast_apply(x)?;
        probe_displacement = probe_displacement.max((&jet.image - x).norm());
        probe_expansion = probe_expansion.max((&jet.jacobian - DMatrix::identity(n, n)).amax());
    }
    let slack = 1e-9;
    let probes_consistent =
        probe_displacement <= grad_bound + slack && probe_expansion <= expansion + slack;
    Ok(RegularityReport {
        grad_bound,
        hess_bound,
        ell,
        expansion,
        twist_ok: ell.exp() <= 1.9,
        probe_displacement,
        probe_expansion,
        probes_consistent,
    })
}

/// Linear stability class of a fixed point of a 2-dimensional symplectic
/// map, read off the monodromy trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitKind {
    /// |tr M| < 2: eigenvalues on the unit circle.
    Elliptic,
    /// |tr M| > 2: a real expanding/contracting pair.
    Hyperbolic,
    /// |tr M| = 2 within tolerance: parabolic or non-generic.
    Degenerate,
}

#[derive(Clone, Debug)]
pub struct PeriodicOrbit {
    pub location: DVector<f64>,
    pub kind: OrbitKind,
    pub trace: f64,
    pub residual: f64,
    /// det(M − I) is comfortably nonzero: the fixed point is isolated.
    pub isolated: bool,
}

/// Fixed points of the time-one map in a half-open box, classified by the
/// monodromy trace. Implemented for d = 1, where the elliptic/hyperbolic
/// dichotomy is a single trace comparison.
pub fn periodic_orbit_census(
    map: &FlowMap,
    center: &DVector<f64>,
    half_width: f64,
    opts: &crate::critical::CensusOptions,
) -> Result<Vec<PeriodicOrbit>, QsympError> {
    if map.d != 1 {
        return Err(QsympError::Config(
            "orbit classification by trace needs d = 1".into(),
        ));
    }
    let n = 2;
    if center.len() != n {
        return Err(QsympError::Config(format!(
            "periodic_orbit_census: center dim {} but phase space dim {n}",
            center.len()
        )));
    }
    // Seed pitch from the Hamiltonian's own frequency content, matching the
    // critical-census heuristic.
    let f_max = map
        .field
        .modes()
        .iter()
        .map(|mode| TWO_PI * crate::field::pulled_frequency(&map.a, &mode.m).norm())
        .fold(0.0, f64::max);
    let pitch = opts.pitch_override.unwrap_or(if f_max > 0.0 {
        (1.0 / (4.0 * f_max)).min(1.0)
    } else {
        1.0
    });
    let steps = ((2.0 * half_width / pitch).ceil() as usize).max(1);
    let spacing = 2.0 * half_width / steps as f64;
    let mut found: Vec<(DVector<f64>, DMatrix<f64>, f64)> = Vec::new();
    for iy in 0..steps {
        for ix in 0..steps {
            let seed = DVector::from_column_slice(&[
                center[0] - half_width + (ix as f64 + 0.5) * spacing,
                center[1] - half_width + (iy as f64 + 0.5) * spacing,
            ]);
            let mut x = seed;
            let mut converged = None;
            for _ in 0..opts.max_iter {
                let jet = match map.fast_apply(&x) {
                    Ok(j) => j,
                    Err(_) => break,
                };
                let residual = &jet.image - &x;
                if residual.amax() <= opts.newton_tol {
                    converged = Some((x.clone(), jet.jacobian, residual.amax()));
                    break;
                }
                let j = &jet.jacobian - DMatrix::identity(n, n);
                match j.lu().solve(&residual) {
                    Some(delta) => x -= delta,
                    None => break,
                }
            }
            let Some((root, monodromy, residual)) = converged else {
                continue;
            };
            let inside = root
                .iter()
                .zip(center.iter())
                .all(|(&xi, &ci)| xi - ci >= -half_width - 1e-9 && xi - ci < half_width - 1e-9);
            if !inside {
                continue;
            }
            if found
                .iter()
                .any(|(existing, _, _)| (existing - &root).amax() <= opts.dedup_radius)
            {
                continue;
            }
            found.push((root, monodromy, residual));
        }
    }
    let mut orbits: Vec<PeriodicOrbit> = found
        .into_iter()
        .map(|(location, monodromy, residual)| {
            let trace = monodromy.trace();
            let kind = if (trace.abs() - 2.0).abs() <= opts.degeneracy_tol {
                OrbitKind::Degenerate
            } else if trace.abs() < 2.0 {
                OrbitKind::Elliptic
            } else {
                OrbitKind::Hyperbolic
            };
            let det_jac = (&monodromy - DMatrix::identity(n, n))
                .lu()
                .determinant()
                .abs();
            PeriodicOrbit {
                location,
                kind,
                trace,
                residual,
                isolated: det_jac > 1e-10,
            }
        })
        .collect();
    orbits.sort_by(|a, b| {
        a.location
            .iter()
            .zip(b.location.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(orbits)
}

/// Point-wise divergence of the lifted torus field at (θ, t), by central
/// finite differences of A J Aᵀ ∇K. Analytically zero; exposed so tests and
/// reports can confirm the discretization sees it that way.
pub fn torus_field_divergence_fd(
    field: &TimePeriodicField,
    a: &DMatrix<f64>,
    theta: &DVector<f64>,
    t: f64,
    h: f64,
) -> f64 {
    let n_torus = field.dim();
    let j = standard_symplectic(a.ncols() / 2);
    let rhs = |theta: &DVector<f64>| -> DVector<f64> {
        let jet = field.eval_jet(theta, t);
        a * (&j * (a.transpose() * &jet.gradient))
    };
    let mut div = 0.0;
    for i in 0..n_torus {
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[i] += h;
        tm[i] -= h;
        div += (rhs(&tp)[i] - rhs(&tm)[i]) / (2.0 * h);
    }
    div
}

/// Shared equivariance check for flow maps (kept with the flow machinery so
/// the two constructions exercise the identical code path in tests).
pub fn flow_equivariance_residual(
    map: &FlowMap,
    shift: &DVector<f64>,
    probes: &[DVector<f64>],
) -> Result<f64, QsympError> {
    let shifted_base = translate(map.base(), map.frequency_matrix(), shift)?;
    let shifted = map.rebased(shifted_base)?;
    let mut worst = 0.0f64;
    for x in probes {
        let lhs = shifted.apply(x)?;
        let rhs = map.apply(&(x + shift))? - shift;
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}
