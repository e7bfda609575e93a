//! Enumeration of critical points of the pulled-back potential
//! w(x) = ŵ(ω + A x) over boxes in R^n, and the box-counting density
//! estimator built on it.
//!
//! Critical points of w are exactly the fixed points of the twist map the
//! potential generates, so one census serves both views; a direct
//! fixed-point census through the map itself is provided for
//! cross-validation.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::QsympError;
use crate::exec::map_indexed;
use crate::field::{pullback_jet_raw, pulled_frequency, QuasiPeriodicScalar, TorusPoint, TWO_PI};
use crate::twist::GeneratingMap;

/// Seeds are processed in fixed blocks of this many grid indices so that the
/// parallel and sequential builds produce identical censuses.
const SEED_BLOCK: usize = 8192;

/// Membership in half-open boxes is tested with this snap so that a root
/// sitting numerically on a box face is counted exactly once: points within
/// the snap below the lower face are included, points within the snap below
/// the upper face are excluded.
const BOX_SNAP: f64 = 1e-9;

/// Hard ceiling on the seed grid size; larger requests are configuration
/// errors rather than silent multi-hour runs.
const MAX_SEEDS: usize = 200_000_000;

#[derive(Clone, Debug)]
pub struct CensusOptions {
    /// Roots closer than this (max-norm) are considered the same point.
    pub dedup_radius: f64,
    /// Convergence threshold for ‖∇w‖_∞ in the Newton polish.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Override the automatic seed-grid pitch.
    pub pitch_override: Option<f64>,
    /// Re-run the census at half pitch and warn when the count changes.
    pub verify_resolution: bool,
    /// Eigenvalues of modulus at most this are treated as zero when
    /// classifying a critical point.
    pub degeneracy_tol: f64,
}

impl Default for CensusOptions {
    fn default() -> Self {
        CensusOptions {
            dedup_radius: 1e-6,
            newton_tol: 1e-12,
            max_iter: 60,
            pitch_override: None,
            verify_resolution: false,
            degeneracy_tol: 1e-8,
        }
    }
}

/// One critical point with its Morse data.
#[derive(Clone, Debug)]
pub struct CriticalPoint {
    pub location: DVector<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    /// Hessian eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Number of eigenvalues below −degeneracy_tol (the Morse index when the
    /// point is non-degenerate).
    pub index: usize,
    pub degenerate: bool,
}

/// Classification filter over critical points. Degenerate points are never
/// admitted by any class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IndexClass {
    Any,
    /// Exact Morse index.
    Morse(usize),
    /// Positive Hessian determinant (even index).
    DetPositive,
    /// Negative Hessian determinant (odd index).
    DetNegative,
}

impl IndexClass {
    pub fn admits(&self, point: &CriticalPoint) -> bool {
        if point.degenerate {
            return false;
        }
        match *self {
            IndexClass::Any => true,
            IndexClass::Morse(k) => point.index == k,
            IndexClass::DetPositive => point.index % 2 == 0,
            IndexClass::DetNegative => point.index % 2 == 1,
        }
    }
}

/// A completed census over one box.
#[derive(Clone, Debug)]
pub struct Census {
    /// Points sorted lexicographically by location.
    pub points: Vec<CriticalPoint>,
    pub pitch: f64,
    pub center: DVector<f64>,
    pub half_width: f64,
    pub warnings: Vec<String>,
}

impl Census {
    pub fn count(&self, class: IndexClass) -> usize {
        self.points.iter().filter(|p| class.admits(p)).count()
    }
}

/// Density samples along a growing-box schedule.
#[derive(Clone, Debug)]
pub struct DensityCurvePoint {
    pub half_width: f64,
    pub count: usize,
    pub density: f64,
}

/// Eigen-decompose a symmetric Hessian into Morse data.
pub fn classify(hessian: &DMatrix<f64>, degeneracy_tol: f64) -> (Vec<f64>, usize, bool) {
    let mut eigenvalues: Vec<f64> = hessian
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(f64::total_cmp);
    let index = eigenvalues.iter().filter(|&&l| l < -degeneracy_tol).count();
    let degenerate = eigenvalues.iter().any(|&l| l.abs() <= degeneracy_tol);
    (eigenvalues, index, degenerate)
}

/// Automatic seed-grid pitch: a safe fraction of the shortest oscillation
/// period of the pulled-back gradient, min(1, 1/(4 F)) with
/// F = max_m 2π|Aᵀm|.
pub fn census_pitch(field: &QuasiPeriodicScalar, a: &DMatrix<f64>) -> f64 {
    let f_max = field
        .modes()
        .iter()
        .map(|mode| TWO_PI * pulled_frequency(a, &mode.m).norm())
        .fold(0.0, f64::max);
    if f_max <= 0.0 {
        1.0
    } else {
        (1.0 / (4.0 * f_max)).min(1.0)
    }
}

fn snapped_inside(x: &DVector<f64>, center: &DVector<f64>, half_width: f64) -> bool {
    x.iter().zip(center.iter()).all(|(&xi, &ci)| {
        let rel = xi - ci;
        rel >= -half_width - BOX_SNAP && rel < half_width - BOX_SNAP
    })
}

/// Backtracking Newton iteration; `eval` returns the residual vector and its
/// Jacobian, or None where the system cannot be evaluated.
fn damped_newton<F>(
    eval: &F,
    start: DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Option<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)>,
{
    let mut x = start;
    let (mut g, mut jac) = eval(&x)?;
    let mut res = g.amax();
    for _ in 0..max_iter {
        if res <= tol {
            return Some(x);
        }
        let delta = jac.clone().lu().solve(&g)?;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..8 {
            let candidate = &x - lambda * &delta;
            if let Some((g_c, jac_c)) = eval(&candidate) {
                let res_c = g_c.amax();
                if res_c < res {
                    x = candidate;
                    g = g_c;
                    jac = jac_c;
                    res = res_c;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    if res <= tol {
        Some(x)
    } else {
        None
    }
}

/// Spatial-hash dedup keeping the first representative (in push order) of
/// every cluster of radius `radius` (max-norm).
struct DedupGrid {
    radius: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
    kept: Vec<DVector<f64>>,
}

impl DedupGrid {
    fn new(radius: f64) -> Self {
        DedupGrid {
            radius,
            cells: HashMap::new(),
            kept: Vec::new(),
        }
    }

    fn key(&self, x: &DVector<f64>) -> Vec<i64> {
        x.iter()
            .map(|&v| (v / self.radius).floor() as i64)
            .collect()
    }

    /// Returns true when the point is new.
    fn insert(&mut self, x: DVector<f64>) -> bool {
        let key = self.key(&x);
        let n = key.len();
        // Scan the 3^n neighbourhood of the cell for an existing point.
        let neighbours = 3usize.pow(n as u32);
        for code in 0..neighbours {
            let mut rem = code;
            let mut probe = key.clone();
            for slot in probe.iter_mut() {
                *slot += (rem % 3) as i64 - 1;
                rem /= 3;
            }
            if let Some(indices) = self.cells.get(&probe) {
                for &i in indices {
                    let d = (&self.kept[i] - &x).amax();
                    if d <= self.radius {
                        return false;
                    }
                }
            }
        }
        let idx = self.kept.len();
        self.kept.push(x);
        self.cells.entry(key).or_default().push(idx);
        true
    }
}

struct BlockResult {
    roots: Vec<DVector<f64>>,
    failures: usize,
}

/// Run the seed sweep once at a given pitch; returns deduped root locations
/// and the number of non-converged seeds.
fn sweep_roots<F>(
    eval: &F,
    n: usize,
    center: &DVector<f64>,
    half_width: f64,
    pitch: f64,
    opts: &CensusOptions,
) -> Result<(Vec<DVector<f64>>, usize), QsympError>
where
    F: Fn(&DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> + Sync,
{
    let steps = ((2.0 * half_width / pitch).ceil() as usize).max(1);
    let total = steps
        .checked_pow(n as u32)
        .filter(|&t| t <= MAX_SEEDS)
        .ok_or_else(|| {
            QsympError::Config(format!(
                "census grid of {steps}^{n} seeds exceeds the limit of {MAX_SEEDS}"
            ))
        })?;
    let spacing = 2.0 * half_width / steps as f64;
    let blocks = total.div_ceil(SEED_BLOCK);
    let block_results: Vec<BlockResult> = map_indexed(blocks, |b| {
        let lo = b * SEED_BLOCK;
        let hi = ((b + 1) * SEED_BLOCK).min(total);
        let mut local = DedupGrid::new(opts.dedup_radius);
        let mut failures = 0usize;
        let mut seed = DVector::zeros(n);
        for idx in lo..hi {
            let mut rem = idx;
            for i in 0..n {
                let k = rem % steps;
                rem /= steps;
                seed[i] = center[i] - half_width + (k as f64 + 0.5) * spacing;
            }
            match damped_newton(eval, seed.clone(), opts.newton_tol, opts.max_iter) {
                Some(root) => {
                    if snapped_inside(&root, center, half_width) {
                        local.insert(root);
                    }
                }
                None => failures += 1,
            }
        }
        BlockResult {
            roots: local.kept,
            failures,
        }
    });
    let mut global = DedupGrid::new(opts.dedup_radius);
    let mut failures = 0usize;
    for block in block_results {
        failures += block.failures;
        for root in block.roots {
            global.insert(root);
        }
    }
    Ok((global.kept, failures))
}

fn build_census<F, J>(
    eval: &F,
    hessian_at: &J,
    n: usize,
    center: &DVector<f64>,
    half_width: f64,
    pitch: f64,
    opts: &CensusOptions,
) -> Result<Census, QsympError>
where
    F: Fn(&DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> + Sync,
    J: Fn(&DVector<f64>) -> (f64, DVector<f64>, DMatrix<f64>),
{
    let (roots, failures) = sweep_roots(eval, n, center, half_width, pitch, opts)?;
    let mut warnings = Vec::new();
    if failures > 0 {
        warnings.push(format!("{failures} census seeds did not converge"));
    }
    if opts.verify_resolution {
        let (fine_roots, _) = sweep_roots(eval, n, center, half_width, 0.5 * pitch, opts)?;
        if fine_roots.len() != roots.len() {
            warnings.push(format!(
                "resolution check: count changed from {} to {} at half pitch",
                roots.len(),
                fine_roots.len()
            ));
        }
    }
    let mut points: Vec<CriticalPoint> = roots
        .into_iter()
        .map(|location| {
            let (value, gradient, hessian) = hessian_at(&location);
            let (eigenvalues, index, degenerate) = classify(&hessian, opts.degeneracy_tol);
            CriticalPoint {
                gradient_norm: gradient.amax(),
                location,
                value,
                eigenvalues,
                index,
                degenerate,
            }
        })
        .collect();
    points.sort_by(|a, b| {
        a.location
            .iter()
            .zip(b.location.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(Census {
        points,
        pitch,
        center: center.clone(),
        half_width,
        warnings,
    })
}

fn check_not_degenerate(field: &QuasiPeriodicScalar, a: &DMatrix<f64>) -> Result<(), QsympError> {
    let alive = field
        .modes()
        .iter()
        .any(|mode| pulled_frequency(a, &mode.m).norm() > 1e-12);
    if alive {
        Ok(())
    } else {
        Err(QsympError::DegenerateField)
    }
}

/// Enumerate the critical points of w(x) = ŵ(ω + A x) in the half-open box
/// Π [center_i − ℓ, center_i + ℓ).
pub fn enumerate_critical(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    omega: &TorusPoint,
    center: &DVector<f64>,
    half_width: f64,
    opts: &CensusOptions,
) -> Result<Census, QsympError> {
    let n = a.ncols();
    if a.nrows() != field.dim() || omega.dim() != field.dim() {
        return Err(QsympError::Config(
            "enumerate_critical: torus dimensions disagree".into(),
        ));
    }
    if center.len() != n {
        return Err(QsympError::Config(format!(
            "enumerate_critical: center dim {} but the potential lives on R^{n}",
            center.len()
        )));
    }
    if !(half_width > 0.0) {
        return Err(QsympError::Config("half width must be positive".into()));
    }
    check_not_degenerate(field, a)?;
    let pitch = opts
        .pitch_override
        .unwrap_or_else(|| census_pitch(field, a));
    let base = omega.coords().clone();
    let eval = |x: &DVector<f64>| {
        let lifted = &base + a * x;
        let jet = pullback_jet_raw(field, a, &lifted);
        Some((jet.gradient, jet.hessian))
    };
    let hessian_at = |x: &DVector<f64>| {
        let lifted = &base + a * x;
        let jet = pullback_jet_raw(field, a, &lifted);
        (jet.value, jet.gradient, jet.hessian)
    };
    build_census(&eval, &hessian_at, n, center, half_width, pitch, opts)
}

/// Enumerate fixed points of the generated map Φ directly, solving
/// Φ(x) − x = 0 with the map's own Jacobian. Classification still comes from
/// the potential Hessian, so the result is directly comparable with
/// [`enumerate_critical`].
pub fn fixed_point_census(
    map: &GeneratingMap,
    center: &DVector<f64>,
    half_width: f64,
    opts: &CensusOptions,
) -> Result<Census, QsympError> {
    let n = 2 * map.map_dim();
    if center.len() != n {
        return Err(QsympError::Config(format!(
            "fixed_point_census: center dim {} but phase space dim {n}",
            center.len()
        )));
    }
    check_not_degenerate(map.field(), map.frequency_matrix())?;
    let pitch = opts
        .pitch_override
        .unwrap_or_else(|| census_pitch(map.field(), map.frequency_matrix()));
    let eval = |x: &DVector<f64>| {
        let jet = map.forward_map(x).ok()?;
        let residual = &jet.image - x;
        let jac = jet.jacobian - DMatrix::identity(n, n);
        Some((residual, jac))
    };
    let hessian_at = |x: &DVector<f64>| {
        let jet = map.potential_jet(x);
        (jet.value, jet.gradient, jet.hessian)
    };
    build_census(&eval, &hessian_at, n, center, half_width, pitch, opts)
}

/// Box-counting density along a schedule of half widths: one census at the
/// largest box, then counts of the nested boxes restricted to `class`.
/// Densities are count/(2ℓ)^n.
pub fn ergodic_density_curve(
    field: &QuasiPeriodicScalar,
    a: &DMatrix<f64>,
    omega: &TorusPoint,
    schedule: &[f64],
    class: IndexClass,
    opts: &CensusOptions,
) -> Result<(Vec<DensityCurvePoint>, Census), QsympError> {
    if schedule.is_empty() {
        return Err(QsympError::Config("empty box schedule".into()));
    }
    let mut widths: Vec<f64> = schedule.to_vec();
    widths.sort_by(f64::total_cmp);
    if widths[0] <= 0.0 {
        return Err(QsympError::Config("box schedule must be positive".into()));
    }
    let l_max = *widths.last().expect("nonempty");
    let n = a.ncols();
    let center = DVector::zeros(n);
    let mut census = enumerate_critical(field, a, omega, &center, l_max, opts)?;
    let curve: Vec<DensityCurvePoint> = widths
        .iter()
        .map(|&l| {
            let count = census
                .points
                .iter()
                .filter(|p| class.admits(p) && snapped_inside(&p.location, &center, l))
                .count();
            DensityCurvePoint {
                half_width: l,
                count,
                density: count as f64 / (2.0 * l).powi(n as i32),
            }
        })
        .collect();
    let first = curve.first().expect("nonempty").density;
    let last = curve.last().expect("nonempty").density;
    if first > 0.0 && last / first > 1.5 {
        census.warnings.push(format!(
            "density grew from {first:.4} to {last:.4} along the schedule; \
             the box counts are not stabilizing"
        ));
    }
    Ok((curve, census))
}

/// Σ (−1)^index over the census. Fails on an empty census or when any point
/// is degenerate (its index is then undefined).
pub fn signed_index_sum(census: &Census) -> Result<i64, QsympError> {
    if census.points.is_empty() {
        return Err(QsympError::IncompleteCensus(
            "signed index sum over an empty census".into(),
        ));
    }
    let mut sum = 0i64;
    for point in &census.points {
        if point.degenerate {
            return Err(QsympError::IncompleteCensus(format!(
                "degenerate critical point at {:?}",
                point.location.as_slice()
            )));
        }
        sum += if point.index % 2 == 0 { 1 } else { -1 };
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Mode;
    use crate::twist::DEFAULT_TWIST_MARGIN;
    use approx::assert_abs_diff_eq;

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

    fn flagship_small() -> (QuasiPeriodicScalar, DMatrix<f64>) {
        let field = QuasiPeriodicScalar::new(
            3,
            [
                Mode::cos(vec![1, 0, 0], 0.002),
                Mode::cos(vec![0, 1, 0], 0.002),
                Mode::cos(vec![1, 0, 1], 0.0015),
                Mode::sin(vec![0, 1, -1], 0.0015),
            ],
        )
        .unwrap();
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, golden(), 2f64.sqrt() - 1.0]);
        (field, a)
    }

    #[test]
    fn baseline_unit_cell_census() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let omega = TorusPoint::zero(2);
        let census = enumerate_critical(
            &field,
            &a,
            &omega,
            &DVector::zeros(2),
            0.5,
            &CensusOptions::default(),
        )
        .unwrap();
        assert_eq!(census.points.len(), 4);
        // Separable cosines: indices 0, 1, 1, 2 across the four points.
        let mut indices: Vec<usize> = census.points.iter().map(|p| p.index).collect();
        indices.sort_unstable();
        assert_eq!(indices, vec![0, 1, 1, 2]);
        assert_eq!(signed_index_sum(&census).unwrap(), 0);
        for p in &census.points {
            assert!(p.gradient_norm < 1e-12);
            assert!(!p.degenerate);
        }
    }

    #[test]
    fn baseline_density_is_exactly_four() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let omega = TorusPoint::zero(2);
        let (curve, census) = ergodic_density_curve(
            &field,
            &a,
            &omega,
            &[1.0, 2.0, 4.0],
            IndexClass::Any,
            &CensusOptions::default(),
        )
        .unwrap();
        for point in &curve {
            assert_eq!(
                point.count,
                (4.0 * (2.0 * point.half_width).powi(2)) as usize
            );
            assert_abs_diff_eq!(point.density, 4.0, epsilon = 1e-12);
        }
        assert!(
            census.warnings.is_empty(),
            "warnings: {:?}",
            census.warnings
        );
    }

    #[test]
    fn undersized_first_box_triggers_stabilization_warning() {
        let field = baseline_field();
        let a = DMatrix::identity(2, 2);
        let omega = TorusPoint::zero(2);
        let (_, census) = ergodic_density_curve(
            &field,
            &a,
            &omega,
            &[0.45, 1.0],
            IndexClass::Any,
            &CensusOptions::default(),
        )
        .unwrap();
        assert!(census
            .warnings
            .iter()
            .any(|w| w.contains("not stabilizing")));
    }

    #[test]
    fn classify_counts_negative_eigenvalues() {
        let h = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        let (eigs, index, degenerate) = classify(&h, 1e-8);
        assert_eq!(eigs.len(), 2);
        assert_abs_diff_eq!(eigs[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eigs[1], 2.0, epsilon = 1e-12);
        assert_eq!(index, 1);
        assert!(!degenerate);

        let h = DMatrix::from_row_slice(2, 2, &[1e-12, 0.0, 0.0, 1.0]);
        let (_, _, degenerate) = classify(&h, 1e-8);
        assert!(degenerate);
    }

    #[test]
    fn index_classes_partition_points() {
        let minimum = CriticalPoint {
            location: DVector::zeros(2),
            value: 0.0,
            gradient_norm: 0.0,
            eigenvalues: vec![1.0, 2.0],
            index: 0,
            degenerate: false,
        };
        let saddle = CriticalPoint {
            index: 1,
            eigenvalues: vec![-1.0, 2.0],
            ..minimum.clone()
        };
        let flat = CriticalPoint {
            degenerate: true,
            ..minimum.clone()
        };
        assert!(IndexClass::Any.admits(&minimum));
        assert!(IndexClass::Morse(0).admits(&minimum));
        assert!(!IndexClass::Morse(1).admits(&minimum));
        assert!(IndexClass::DetPositive.admits(&minimum));
        assert!(IndexClass::DetNegative.admits(&saddle));
        assert!(!IndexClass::DetPositive.admits(&saddle));
        assert!(!IndexClass::Any.admits(&flat));
    }

    #[test]
    fn map_census_agrees_with_potential_census() {
        let field = QuasiPeriodicScalar::new(
            2,
            [Mode::cos(vec![1, 0], 0.01), Mode::cos(vec![0, 1], 0.01)],
        )
        .unwrap();
        let a = DMatrix::identity(2, 2);
        let omega = TorusPoint::zero(2);
        let map = GeneratingMap::new(
            field.clone(),
            a.clone(),
            omega.clone(),
            1,
            DEFAULT_TWIST_MARGIN,
        )
        .unwrap();
        let opts = CensusOptions::default();
        let center = DVector::zeros(2);
        let from_potential = enumerate_critical(&field, &a, &omega, &center, 0.5, &opts).unwrap();
        let from_map = fixed_point_census(&map, &center, 0.5, &opts).unwrap();
        assert_eq!(from_potential.points.len(), from_map.points.len());
        // Converged locations can differ by solver noise around 0, which is
        // enough to flip a lexicographic sort, so match nearest neighbours.
        let mut used = vec![false; from_map.points.len()];
        for a_pt in &from_potential.points {
            let (j, dist) = from_map
                .points
                .iter()
                .enumerate()
                .map(|(j, b_pt)| (j, (&a_pt.location - &b_pt.location).amax()))
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .unwrap();
            assert!(
                dist < 1e-9,
                "unmatched point, nearest at distance {dist:.3e}"
            );
            assert!(!used[j], "two points matched the same partner");
            used[j] = true;
            assert_eq!(a_pt.index, from_map.points[j].index);
        }
    }

    #[test]
    fn quasiperiodic_census_roots_are_distinct_and_converged() {
        let (field, a) = flagship_small();
        let omega = TorusPoint::from_slice(&[0.17, 0.64, 0.32]);
        let opts = CensusOptions {
            verify_resolution: true,
            ..CensusOptions::default()
        };
        let census =
            enumerate_critical(&field, &a, &omega, &DVector::zeros(2), 2.0, &opts).unwrap();
        assert!(
            census.points.len() >= 4,
            "expected a populated census, got {}",
            census.points.len()
        );
        assert!(
            census.warnings.iter().all(|w| !w.contains("resolution")),
            "resolution warnings: {:?}",
            census.warnings
        );
        for (i, p) in census.points.iter().enumerate() {
            assert!(p.gradient_norm < 1e-11);
            for q in census.points.iter().skip(i + 1) {
                assert!((&p.location - &q.location).amax() > 1e-6);
            }
        }
    }

    #[test]
    fn annihilated_field_is_rejected() {
        let field = baseline_field();
        let a = DMatrix::zeros(2, 2);
        let omega = TorusPoint::zero(2);
        let result = enumerate_critical(
            &field,
            &a,
            &omega,
            &DVector::zeros(2),
            1.0,
            &CensusOptions::default(),
        );
        assert!(matches!(result, Err(QsympError::DegenerateField)));
    }

    #[test]
    fn signed_sum_rejects_empty_census() {
        let census = Census {
            points: vec![],
            pitch: 0.1,
            center: DVector::zeros(2),
            half_width: 1.0,
            warnings: vec![],
        };
        assert!(matches!(
            signed_index_sum(&census),
            Err(QsympError::IncompleteCensus(_))
        ));
    }
}
