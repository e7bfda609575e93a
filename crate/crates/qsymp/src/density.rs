//! Three independent estimators of the fixed-point density and their
//! cross-validation.
//!
//! Writing ĝ(θ) = Aᵀ∇ŵ(θ) and Ĥ(θ) = Aᵀ D²ŵ(θ) A for θ ∈ T^N, the density
//! of critical points of the pulled-back potential per unit phase-space
//! volume equals the surface integral of |det Ĥ|/𝒥 over the level set
//! Λ = {ĝ = 0}, with 𝒥 = √det(J Jᵀ) and J = Aᵀ D²ŵ. The estimators:
//!
//! * box counting ([`crate::critical::ergodic_density_curve`]) — counts
//!   actual critical points in growing boxes of R^n;
//! * a smoothed counting integral sampled by Monte Carlo ([`kac_rice_mc`]) —
//!   replaces the delta on ĝ by a uniform kernel on an ε-ball;
//! * the surface integral itself ([`coarea_density`]) — a weighted zero
//!   count when N = n, a traced-curve quadrature when N = n + 1.
//!
//! All three view the same quantity, so mutual agreement exercises the
//! census, the sampler, and the tracer at once.

use nalgebra::{DMatrix, DVector};

use crate::critical::{classify, CensusOptions, DensityCurvePoint, IndexClass};
use crate::error::QsympError;
use crate::exec::{map_indexed, stream_rng, tree_fold};
use crate::field::{sample_uniform, QuasiPeriodicScalar, TorusPoint, TWO_PI};

/// Monte Carlo work is split into fixed shards so results are identical for
/// any thread count.
const MC_SHARD: u64 = 65536;

/// Volume of the unit ball in R^n: V_n = V_{n−2} · 2π/n with V₀ = 1, V₁ = 2.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * TWO_PI / n as f64,
    }
}

/// One smoothed-count estimate at a fixed smoothing radius.
#[derive(Clone, Debug)]
pub struct KacRiceEstimate {
    pub epsilon: f64,
    pub value: f64,
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
    pub warning: Option<String>,
}

#[derive(Clone, Copy)]
struct Accumulator {
    sum: f64,
    sum_sq: f64,
    hits: u64,
}

impl Accumulator {
    fn zero() -> Self {
        Accumulator {
            sum: 0.0,
            sum_sq: 0.0,
            hits: 0,
        }
    }

    fn merge(self, other: Self) -> Self {
        Accumulator {
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            hits: self.hits + other.hits,
        }
    }
}

/// Evaluate the smoothed counting integral at several radii on one shared
/// sample stream: for each ε,
///
/// ```text
/// estimate = mean over θ ~ U(T^N) of 1(|ĝ(θ)|₂ ≤ ε) · 1(Ĥ ∈ class) · |det Ĥ| / (V_n ε^n).
/// ```
///
/// For ε below the smallest feature scale of ĝ this equals the density
/// exactly in expectation. Radii are processed in descending order and the
/// result vector follows that order.
pub fn kac_rice_schedule(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    epsilons: &[f64],
    samples: u64,
    seed: u64,
    class: IndexClass,
    degeneracy_tol: f64,
) -> Result<Vec<KacRiceEstimate>, QsympError> {
    if epsilons.is_empty() {
        return Err(QsympError::Config("empty smoothing schedule".into()));
    }
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(QsympError::Config(
            "smoothing radii must be positive".into(),
        ));
    }
    if samples == 0 {
        return Err(QsympError::Config("sample count must be positive".into()));
    }
    if a.nrows() != field.dim() {
        return Err(QsympError::Config(format!(
            "kac_rice: matrix has {} rows but field dim is {}",
            a.nrows(),
            field.dim()
        )));
    }
    let n = a.ncols();
    let n_torus = field.dim();
    let mut eps: Vec<f64> = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.reverse();
    let ball = unit_ball_volume(n);
    let kernels: Vec<f64> = eps.iter().map(|&e| ball * e.powi(n as i32)).collect();
    let shards = samples.div_ceil(MC_SHARD);
    let per_shard: Vec<Vec<Accumulator>> = map_indexed(shards as usize, |s| {
        let s = s as u64;
        let mut rng = stream_rng(seed, s);
        let count = if s == shards - 1 {
            samples - s * MC_SHARD
        } else {
            MC_SHARD
        };
        let mut acc = vec![Accumulator::zero(); eps.len()];
        for _ in 0..count {
            let theta = sample_uniform(&mut rng, n_torus);
            let jet = field.eval_jet_raw(theta.coords());
            let g = a.transpose() * &jet.gradient;
            let g_norm = g.norm();
            if g_norm > eps[0] {
                continue;
            }
            let h_full = a.transpose() * &jet.hessian * a;
            let h = 0.5 * (&h_full + h_full.transpose());
            let det = h.clone().lu().determinant().abs();
            let (eigenvalues, index, degenerate) = classify(&h, degeneracy_tol);
            let admitted = class.admits(&crate::critical::CriticalPoint {
                location: DVector::zeros(n),
                value: 0.0,
                gradient_norm: 0.0,
                eigenvalues,
                index,
                degenerate,
            });
            if !admitted {
                continue;
            }
            for (k, &e) in eps.iter().enumerate() {
                if g_norm <= e {
                    let term = det / kernels[k];
                    acc[k].sum += term;
                    acc[k].sum_sq += term * term;
                    acc[k].hits += 1;
                }
            }
        }
        acc
    });
    let empty = vec![Accumulator::zero(); eps.len()];
    let combined = tree_fold(
        &per_shard,
        &|x: &Vec<Accumulator>, y: &Vec<Accumulator>| {
            x.iter().zip(y.iter()).map(|(a, b)| a.merge(*b)).collect()
        },
        empty,
    );
    let m = samples as f64;
    Ok(eps
        .iter()
        .zip(combined.iter())
        .map(|(&epsilon, acc)| {
            let mean = acc.sum / m;
            let var = ((acc.sum_sq - m * mean * mean) / (m - 1.0)).max(0.0);
            let stderr = (var / m).sqrt();
            let warning = if acc.hits == 0 {
                Some(format!(
                    "no samples fell inside the ε = {epsilon} kernel; the radius is \
                     too small for this sample budget"
                ))
            } else {
                None
            };
            KacRiceEstimate {
                epsilon,
                value: mean,
                stderr,
                hits: acc.hits,
                samples,
                warning,
            }
        })
        .collect())
}

/// Single-radius convenience wrapper over [`kac_rice_schedule`].
pub fn kac_rice_mc(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    epsilon: f64,
    samples: u64,
    seed: u64,
    class: IndexClass,
    degeneracy_tol: f64,
) -> Result<KacRiceEstimate, QsympError> {
    let mut v = kac_rice_schedule(field, a, &[epsilon], samples, seed, class, degeneracy_tol)?;
    Ok(v.remove(0))
}

/// First stabilized estimate of a descending-ε schedule: the smallest ε whose
/// estimate agrees with the next larger one within twice their combined
/// standard error. Returns (ε, value).
pub fn kac_rice_representative(estimates: &[KacRiceEstimate]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for pair in estimates.windows(2) {
        let (coarse, fine) = (&pair[0], &pair[1]);
        if fine.hits == 0 {
            break;
        }
        let tol = 2.0 * (coarse.stderr.powi(2) + fine.stderr.powi(2)).sqrt();
        if (coarse.value - fine.value).abs() <= tol {
            best = Some((fine.epsilon, fine.value));
        } else {
            best = None;
        }
    }
    best
}

/// Options for tracing the gradient level set on the torus.
#[derive(Clone, Debug)]
pub struct TraceOptions {
    /// Predictor arc step.
    pub step: f64,
    /// Seeds per torus axis for component discovery.
    pub seeds_per_axis: usize,
    /// Floor for the closure radius. The tracer declares the curve closed
    /// when it re-enters max(closure_tol, 0.9·step) of its starting point
    /// with a tangent aligned to the starting tangent.
    pub closure_tol: f64,
    /// A component longer than this aborts with `OpenComponent`.
    pub max_arclength: f64,
    /// Convergence threshold for the Gauss–Newton corrector.
    pub corrector_tol: f64,
    /// Surface Jacobians below this abort with `DegenerateLevelSet`.
    pub jacobian_floor: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            step: 1e-2,
            seeds_per_axis: 20,
            closure_tol: 1e-4,
            max_arclength: 100.0,
            corrector_tol: 1e-12,
            jacobian_floor: 1e-6,
        }
    }
}

/// One closed component of the level set, as a polyline in lift coordinates
/// (consecutive points differ by the true displacement; the last point is a
/// lattice translate of the first).
#[derive(Clone, Debug)]
pub struct LevelComponent {
    pub points: Vec<DVector<f64>>,
    pub arclength: f64,
    pub min_surface_jacobian: f64,
}

/// The traced level set Λ = {θ : Aᵀ∇ŵ(θ) = 0} for N = n + 1.
#[derive(Clone, Debug)]
pub struct LevelSet {
    pub components: Vec<LevelComponent>,
}

impl LevelSet {
    pub fn total_arclength(&self) -> f64 {
        self.components.iter().map(|c| c.arclength).sum()
    }
}

struct LevelProbe {
    g: DVector<f64>,
    jac: DMatrix<f64>,
    hess_pull: DMatrix<f64>,
}

fn probe_level(field: &QuasiPeriodicScalar, a: &DMatrix<f64>, theta: &DVector<f64>) -> LevelProbe {
    let jet = field.eval_jet_raw(theta);
    let g = a.transpose() * &jet.gradient;
    let jac = a.transpose() * &jet.hessian;
    let h = a.transpose() * &jet.hessian * a;
    LevelProbe {
        g,
        jac,
        hess_pull: 0.5 * (&h + h.transpose()),
    }
}

/// Gauss–Newton corrector onto Λ: θ ← θ − Jᵀ (J Jᵀ)⁻¹ ĝ.
fn correct_onto_level(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    start: DVector<f64>,
    tol: f64,
) -> Option<DVector<f64>> {
    let mut theta = start;
    for _ in 0..50 {
        let probe = probe_level(field, a, &theta);
        if probe.g.amax() <= tol {
            return Some(theta);
        }
        let jjt = &probe.jac * probe.jac.transpose();
        let y = jjt.lu().solve(&probe.g)?;
        theta -= probe.jac.transpose() * y;
    }
    let probe = probe_level(field, a, &theta);
    if probe.g.amax() <= tol {
        Some(theta)
    } else {
        None
    }
}

/// Unit kernel vector of the n×N Jacobian via the smallest eigenvalue of
/// JᵀJ, together with the surface Jacobian √det(J Jᵀ).
fn tangent_and_jacobian(probe: &LevelProbe) -> (DVector<f64>, f64) {
    let jtj = probe.jac.transpose() * &probe.jac;
    let eig = jtj.symmetric_eigen();
    let mut argmin = 0;
    for i in 1..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[argmin] {
            argmin = i;
        }
    }
    let tangent = eig.eigenvectors.column(argmin).into_owned();
    let jjt = &probe.jac * probe.jac.transpose();
    let det = jjt.lu().determinant().max(0.0);
    (tangent.normalize(), det.sqrt())
}

fn torus_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = (x - y).abs().rem_euclid(1.0);
            d.min(1.0 - d)
        })
        .fold(0.0, f64::max)
}

/// Trace every component of the level set Λ = {Aᵀ∇ŵ = 0} ⊂ T^N for the
/// curve case N = n + 1. Components are discovered from a uniform seed grid,
/// followed by predictor–corrector continuation with orientation-coherent
/// tangents; a component that fails to close within `max_arclength` is an
/// error, as is a surface Jacobian falling below the floor.
pub fn trace_level_set(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    opts: &TraceOptions,
) -> Result<LevelSet, QsympError> {
    let n_torus = field.dim();
    let n = a.ncols();
    if a.nrows() != n_torus {
        return Err(QsympError::Config(format!(
            "trace_level_set: matrix has {} rows but field dim is {}",
            a.nrows(),
            n_torus
        )));
    }
    if n_torus != n + 1 {
        return Err(QsympError::UnsupportedCodimension {
            torus_dim: n_torus,
            map_dim: n,
        });
    }
    let mut components: Vec<LevelComponent> = Vec::new();
    // Wrapped copies of every traced point, for seed dedup.
    let mut coverage: Vec<DVector<f64>> = Vec::new();
    let seeds_total = opts.seeds_per_axis.pow(n_torus as u32);
    for seed_idx in 0..seeds_total {
        let mut rem = seed_idx;
        let mut seed = DVector::zeros(n_torus);
        for i in 0..n_torus {
            seed[i] = (rem % opts.seeds_per_axis) as f64 / opts.seeds_per_axis as f64;
            rem /= opts.seeds_per_axis;
        }
        let Some(start) = correct_onto_level(field, a, seed, opts.corrector_tol) else {
            continue;
        };
        if coverage
            .iter()
            .any(|p| torus_distance(p, &start) < opts.step)
        {
            continue;
        }
        let component = trace_component(field, a, start, opts)?;
        for p in &component.points {
            coverage.push(p.map(|v| v.rem_euclid(1.0)));
        }
        components.push(component);
    }
    Ok(LevelSet { components })
}

fn trace_component(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    start: DVector<f64>,
    opts: &TraceOptions,
) -> Result<LevelComponent, QsympError> {
    let mut points = vec![start.clone()];
    let probe = probe_level(field, a, &start);
    let (start_tangent, jac0) = tangent_and_jacobian(&probe);
    let mut tangent = start_tangent.clone();
    let mut min_jac = jac0;
    check_floor(jac0, &start, opts)?;
    let mut arclength = 0.0;
    let mut current = start.clone();
    let closure_radius = opts.closure_tol.max(0.9 * opts.step);
    let max_steps = (opts.max_arclength / opts.step).ceil() as usize + 8;
    for step_idx in 0..max_steps {
        let predicted = &current + opts.step * &tangent;
        let corrected =
            correct_onto_level(field, a, predicted, opts.corrector_tol).ok_or_else(|| {
                QsympError::Numerical(format!(
                    "level-set corrector failed near {:?}",
                    current.as_slice()
                ))
            })?;
        let advance = (&corrected - &current).norm();
        if advance < 1e-3 * opts.step {
            return Err(QsympError::Numerical(
                "level-set tracer stalled: corrector cancels the predictor step".into(),
            ));
        }
        let probe = probe_level(field, a, &corrected);
        let (mut new_tangent, jac) = tangent_and_jacobian(&probe);
        check_floor(jac, &corrected, opts)?;
        min_jac = min_jac.min(jac);
        if new_tangent.dot(&tangent) < 0.0 {
            new_tangent = -new_tangent;
        }
        arclength += advance;
        current = corrected;
        tangent = new_tangent;
        points.push(current.clone());
        // A circle returns to its start with the same orientation; the
        // tangent condition keeps a transversal near-pass of another branch
        // from closing the curve prematurely.
        if step_idx >= 3
            && torus_distance(&current, &start) < closure_radius
            && tangent.dot(&start_tangent) > 0.7
        {
            // Close the polyline on the lattice translate of the start
            // nearest to the current lift.
            let shift = (&current - &start).map(|v| v.round());
            let closing = &start + shift;
            arclength += (&closing - &current).norm();
            points.push(closing);
            return Ok(LevelComponent {
                points,
                arclength,
                min_surface_jacobian: min_jac,
            });
        }
        if arclength > opts.max_arclength {
            break;
        }
    }
    Err(QsympError::OpenComponent { arclength })
}

fn check_floor(jac: f64, location: &DVector<f64>, opts: &TraceOptions) -> Result<(), QsympError> {
    if jac < opts.jacobian_floor {
        Err(QsympError::DegenerateLevelSet {
            location: location.iter().map(|v| v.rem_euclid(1.0)).collect(),
            jacobian: jac,
        })
    } else {
        Ok(())
    }
}

/// What the coarea integral was evaluated over.
#[derive(Clone, Debug)]
pub enum CoareaSupport {
    /// N = n: isolated zeros of ĝ in the unit torus cell.
    Points(usize),
    /// N = n + 1: traced closed curves.
    Curves { components: usize, arclength: f64 },
}

#[derive(Clone, Debug)]
pub struct CoareaDensity {
    pub value: f64,
    pub support: CoareaSupport,
}

/// The surface-integral density
///
/// ```text
/// ∫_Λ |det(Aᵀ D²ŵ A)| / det(Aᵀ (D²ŵ)² A)^{1/2} dσ(θ),
/// ```
///
/// restricted to points whose pulled-back Hessian lies in `class`. For
/// N = n the level set is a finite set of points and the integral reduces to
/// a weighted count (each zero carries weight |det A|); for N = n + 1 the
/// level set is traced and integrated by the trapezoid rule. Higher
/// codimension gaps are reported as unsupported.
pub fn coarea_density(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    class: IndexClass,
    trace_opts: &TraceOptions,
    census_opts: &CensusOptions,
) -> Result<CoareaDensity, QsympError> {
    let n_torus = field.dim();
    let n = a.ncols();
    if a.nrows() != n_torus {
        return Err(QsympError::Config(
            "coarea_density: torus dimensions disagree".into(),
        ));
    }
    if n_torus == n {
        coarea_points(field, a, class, trace_opts, census_opts)
    } else if n_torus == n + 1 {
        coarea_curves(field, a, class, trace_opts)
    } else {
        Err(QsympError::UnsupportedCodimension {
            torus_dim: n_torus,
            map_dim: n,
        })
    }
}

/// Integrand |det Ĥ| / 𝒥 at a torus point, with the class indicator.
fn coarea_integrand(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    theta: &DVector<f64>,
    class: IndexClass,
    degeneracy_tol: f64,
    trace_opts: &TraceOptions,
) -> Result<f64, QsympError> {
    let probe = probe_level(field, a, theta);
    let jjt = &probe.jac * probe.jac.transpose();
    let surface = jjt.lu().determinant().max(0.0).sqrt();
    if surface < trace_opts.jacobian_floor {
        return Err(QsympError::DegenerateLevelSet {
            location: theta.iter().map(|v| v.rem_euclid(1.0)).collect(),
            jacobian: surface,
        });
    }
    let (eigenvalues, index, degenerate) = classify(&probe.hess_pull, degeneracy_tol);
    let admitted = class.admits(&crate::critical::CriticalPoint {
        location: DVector::zeros(probe.hess_pull.nrows()),
        value: 0.0,
        gradient_norm: 0.0,
        eigenvalues,
        index,
        degenerate,
    });
    if !admitted {
        return Ok(0.0);
    }
    let det = probe.hess_pull.clone().lu().determinant().abs();
    Ok(det / surface)
}

fn coarea_points(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    class: IndexClass,
    trace_opts: &TraceOptions,
    census_opts: &CensusOptions,
) -> Result<CoareaDensity, QsympError> {
    let n = a.ncols();
    if a.clone().lu().determinant().abs() <= 1e-12 {
        // ĝ = Aᵀ∇ŵ with singular A has no isolated zeros to count.
        return Err(QsympError::DegenerateField);
    }
    // Zeros of Aᵀ∇ŵ coincide with zeros of ∇ŵ: enumerate the critical
    // points of ŵ itself over one torus cell.
    let identity = DMatrix::identity(n, n);
    let census = crate::critical::enumerate_critical(
        field,
        &identity,
        &TorusPoint::zero(n),
        &DVector::from_element(n, 0.5),
        0.5,
        census_opts,
    )?;
    let mut value = 0.0;
    let mut counted = 0usize;
    for point in &census.points {
        let weight = coarea_integrand(
            field,
            a,
            &point.location,
            class,
            census_opts.degeneracy_tol,
            trace_opts,
        )?;
        if weight > 0.0 {
            counted += 1;
        }
        value += weight;
    }
    Ok(CoareaDensity {
        value,
        support: CoareaSupport::Points(counted),
    })
}

fn coarea_curves(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    class: IndexClass,
    trace_opts: &TraceOptions,
) -> Result<CoareaDensity, QsympError> {
    let level_set = trace_level_set(field, a, trace_opts)?;
    let degeneracy_tol = CensusOptions::default().degeneracy_tol;
    let mut value = 0.0;
    for component in &level_set.components {
        let weights: Vec<f64> = component
            .points
            .iter()
            .map(|p| coarea_integrand(field, a, p, class, degeneracy_tol, trace_opts))
            .collect::<Result<_, _>>()?;
        for k in 0..component.points.len().saturating_sub(1) {
            let seg = (&component.points[k + 1] - &component.points[k]).norm();
            value += 0.5 * (weights[k] + weights[k + 1]) * seg;
        }
    }
    Ok(CoareaDensity {
        value,
        support: CoareaSupport::Curves {
            components: level_set.components.len(),
            arclength: level_set.total_arclength(),
        },
    })
}

/// Inputs for the three-way cross-validation.
#[derive(Clone, Debug)]
pub struct CrossValidateConfig {
    pub box_schedule: Vec<f64>,
    pub epsilon_schedule: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub class: IndexClass,
    pub census: CensusOptions,
    pub trace: TraceOptions,
}

/// Outcome of one cross-validation run.
#[derive(Clone, Debug)]
pub struct DensityReport {
    pub ergodic: Vec<DensityCurvePoint>,
    pub kac_rice: Vec<KacRiceEstimate>,
    /// (ε, value) of the stabilized smoothed estimate, when one exists.
    pub kac_rice_representative: Option<(f64, f64)>,
    pub coarea: CoareaDensity,
    /// [box count at the largest box, smoothed representative, surface
    /// integral].
    pub representative: [f64; 3],
    /// (max − min) / mean of the representative triple.
    pub spread: f64,
    pub warnings: Vec<String>,
}

/// Run all three estimators on one field/matrix pair and report the
/// agreement of their headline numbers.
pub fn cross_validate(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    omega: &TorusPoint,
    cfg: &CrossValidateConfig,
) -> Result<DensityReport, QsympError> {
    let mut warnings = Vec::new();
    let (ergodic, census) = crate::critical::ergodic_density_curve(
        field,
        a,
        omega,
        &cfg.box_schedule,
        cfg.class,
        &cfg.census,
    )?;
    warnings.extend(census.warnings.iter().cloned());
    let kac_rice = kac_rice_schedule(
        field,
        a,
        &cfg.epsilon_schedule,
        cfg.samples,
        cfg.seed,
        cfg.class,
        cfg.census.degeneracy_tol,
    )?;
    warnings.extend(kac_rice.iter().filter_map(|e| e.warning.clone()));
    let representative_kr = kac_rice_representative(&kac_rice);
    if representative_kr.is_none() {
        warnings.push(
            "smoothed estimates did not stabilize along the ε schedule; using the \
             smallest radius"
                .into(),
        );
    }
    let kr_value = representative_kr
        .map(|(_, v)| v)
        .unwrap_or_else(|| kac_rice.last().expect("nonempty").value);
    let coarea = coarea_density(field, a, cfg.class, &cfg.trace, &cfg.census)?;
    let ergodic_value = ergodic.last().expect("nonempty schedule").density;
    let representative = [ergodic_value, kr_value, coarea.value];
    let mean = representative.iter().sum::<f64>() / 3.0;
    let spread = if mean.abs() > 0.0 {
        let max = representative.iter().cloned().fold(f64::MIN, f64::max);
        let min = representative.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / mean
    } else {
        f64::INFINITY
    };
    Ok(DensityReport {
        ergodic,
        kac_rice,
        kac_rice_representative: representative_kr,
        coarea,
        representative,
        spread,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Mode;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn golden() -> f64 {
        0.5 * (1.0 + 5.0_f64.sqrt())
    }

    fn baseline_field() -> QuasiPeriodicScalar {
        QuasiPeriodicScalar::new(
            2,
            [Mode::cos(vec![1, 0], 0.05), Mode::cos(vec![0, 1], 0.05)],
        )
        .unwrap()
    }

    fn flagship_field() -> (QuasiPeriodicScalar, DMatrix<f64>) {
        let field = QuasiPeriodicScalar::new(
            3,
            [
                Mode::cos(vec![1, 0, 0], 0.04),
                Mode::cos(vec![0, 1, 0], 0.04),
                Mode::cos(vec![1, 0, 1], 0.03),
                Mode::sin(vec![0, 1, -1], 0.03),
            ],
        )
        .unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, golden(), 2f64.sqrt() - 1.0]);
        (field, a)
    }

    #[test]
    fn ball_volumes_match_closed_forms() {
        assert_abs_diff_eq!(unit_ball_volume(1), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(2), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(3), 4.0 * PI / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(unit_ball_volume(4), PI * PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn smoothed_count_recovers_baseline_density() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let est = kac_rice_mc(&field, &a, 0.02, 200_000, 11, IndexClass::Any, 1e-8).unwrap();
        assert!(est.hits > 0);
        assert!(
            (est.value - 4.0).abs() <= 3.0 * est.stderr,
            "estimate {} ± {} vs 4.0",
            est.value,
            est.stderr
        );
    }

    #[test]
    fn smoothed_count_is_deterministic() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let e1 = kac_rice_mc(&field, &a, 0.05, 100_000, 7, IndexClass::Any, 1e-8).unwrap();
        let e2 = kac_rice_mc(&field, &a, 0.05, 100_000, 7, IndexClass::Any, 1e-8).unwrap();
        assert_eq!(e1.value.to_bits(), e2.value.to_bits());
        assert_eq!(e1.stderr.to_bits(), e2.stderr.to_bits());
        assert_eq!(e1.hits, e2.hits);
    }

    #[test]
    fn vanishing_radius_warns_instead_of_lying() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let est = kac_rice_mc(&field, &a, 1e-9, 1_000, 3, IndexClass::Any, 1e-8).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.value, 0.0);
        assert!(est.warning.is_some());
    }

    #[test]
    fn representative_selection_walks_down_the_schedule() {
        let mk = |epsilon: f64, value: f64, stderr: f64| KacRiceEstimate {
            epsilon,
            value,
            stderr,
            hits: 10,
            samples: 100,
            warning: None,
        };
        // Stabilizes between 0.05 and 0.02.
        let estimates = vec![
            mk(0.1, 6.0, 0.05),
            mk(0.05, 4.1, 0.05),
            mk(0.02, 4.05, 0.05),
        ];
        let (eps, value) = kac_rice_representative(&estimates).unwrap();
        assert_abs_diff_eq!(eps, 0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(value, 4.05, epsilon = 1e-15);
        // Never stabilizes.
        let estimates = vec![mk(0.1, 6.0, 0.01), mk(0.05, 5.0, 0.01), mk(0.02, 4.0, 0.01)];
        assert!(kac_rice_representative(&estimates).is_none());
    }

    #[test]
    fn point_coarea_counts_baseline_exactly() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let coarea = coarea_density(
            &field,
            &a,
            IndexClass::Any,
            &TraceOptions::default(),
            &CensusOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(coarea.value, 4.0, epsilon = 1e-10);
        assert!(matches!(coarea.support, CoareaSupport::Points(4)));
        for (class, expect) in [
            (IndexClass::Morse(0), 1.0),
            (IndexClass::Morse(1), 2.0),
            (IndexClass::Morse(2), 1.0),
            (IndexClass::DetPositive, 2.0),
            (IndexClass::DetNegative, 2.0),
        ] {
            let c = coarea_density(
                &field,
                &a,
                class,
                &TraceOptions::default(),
                &CensusOptions::default(),
            )
            .unwrap();
            assert_abs_diff_eq!(c.value, expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn traced_coarea_on_separable_circles_is_exact() {
        // ŵ = Σ cᵢ cos 2πθᵢ with the map directions reading θ₁, θ₂ only:
        // Λ is four straight circles along θ₃ and |det Ĥ|/𝒥 ≡ 1, so each
        // contributes exactly its unit length.
        let field = QuasiPeriodicScalar::new(
            3,
            [
                Mode::cos(vec![1, 0, 0], 0.03),
                Mode::cos(vec![0, 1, 0], 0.02),
                Mode::cos(vec![0, 0, 1], 0.05),
            ],
        )
        .unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let level = trace_level_set(&field, &a, &TraceOptions::default()).unwrap();
        assert_eq!(level.components.len(), 4);
        for c in &level.components {
            assert_abs_diff_eq!(c.arclength, 1.0, epsilon = 1e-6);
        }
        let coarea = coarea_density(
            &field,
            &a,
            IndexClass::Any,
            &TraceOptions::default(),
            &CensusOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(coarea.value, 4.0, epsilon = 1e-6);
        for (class, expect) in [
            (IndexClass::Morse(0), 1.0),
            (IndexClass::Morse(1), 2.0),
            (IndexClass::Morse(2), 1.0),
        ] {
            let c = coarea_density(
                &field,
                &a,
                class,
                &TraceOptions::default(),
                &CensusOptions::default(),
            )
            .unwrap();
            assert_abs_diff_eq!(c.value, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn tracer_rejects_unsupported_codimension() {
        let field = QuasiPeriodicScalar::new(4, [Mode::cos(vec![1, 0, 0, 0], 0.01)]).unwrap();
        let a = DMatrix::from_fn(4, 2, |i, j| if i == j { 1.0 } else { 0.1 });
        let result = trace_level_set(&field, &a, &TraceOptions::default());
        assert!(matches!(
            result,
            Err(QsympError::UnsupportedCodimension {
                torus_dim: 4,
                map_dim: 2
            })
        ));
    }

    #[test]
    fn flagship_level_set_exists_and_estimators_agree_roughly() {
        let (field, a) = flagship_field();
        let coarea = coarea_density(
            &field,
            &a,
            IndexClass::Any,
            &TraceOptions::default(),
            &CensusOptions::default(),
        )
        .unwrap();
        match coarea.support {
            CoareaSupport::Curves { components, .. } => assert!(components >= 1),
            _ => panic!("expected curve support"),
        }
        assert!(coarea.value > 0.0);
        let est = kac_rice_mc(&field, &a, 0.05, 400_000, 1234, IndexClass::Any, 1e-8).unwrap();
        let diff = (est.value - coarea.value).abs() / coarea.value;
        assert!(
            diff < 0.1,
            "smoothed {} vs surface {} ({}% off)",
            est.value,
            coarea.value,
            100.0 * diff
        );
    }

    #[test]
    fn cross_validation_on_baseline_is_tight() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let omega = TorusPoint::zero(2);
        let cfg = CrossValidateConfig {
            box_schedule: vec![1.0, 2.0, 4.0],
            epsilon_schedule: vec![0.1, 0.05, 0.02],
            samples: 200_000,
            seed: 5,
            class: IndexClass::Any,
            census: CensusOptions::default(),
            trace: TraceOptions::default(),
        };
        let report = cross_validate(&field, &a, &omega, &cfg).unwrap();
        assert_abs_diff_eq!(report.representative[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.representative[2], 4.0, epsilon = 1e-10);
        assert!(report.spread < 0.15, "spread {}", report.spread);
        // Determinism of the full pipeline.
        let again = cross_validate(&field, &a, &omega, &cfg).unwrap();
        for (x, y) in report
            .representative
            .iter()
            .zip(again.representative.iter())
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
