//! Exact-symplectic twist maps of R^{2d} built from quasiperiodic generating
//! potentials.
//!
//! A scalar field ŵ on T^N pulled back along x ↦ ω + A x gives the potential
//! w(Q, p) = ŵ(ω + A(Q, p)). The generating function W(Q, p) = Q·p + w(Q, p)
//! defines the map Φ: (q, p) ↦ (Q, P) implicitly through
//!
//! ```text
//! q = Q + ∂w/∂p (Q, p),      P = p + ∂w/∂Q (Q, p),
//! ```
//!
//! so the "hat" companion Φ̂(Q, p) = (q, P) is explicit while Φ itself needs
//! one Newton solve per application. Both share the same fixed points — the
//! critical points of w — and their Jacobians are linked by the block
//! transform [`block_transform`], an involution on 2d×2d matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::QsympError;
use crate::field::{pullback_jet_raw, translate, Jet, QuasiPeriodicScalar, TorusPoint, TWO_PI};

/// Default certified bound required of sup‖Aᵀ D²ŵ A‖ before a generating map
/// is accepted; anything below 1 makes the implicit solve a contraction.
pub const DEFAULT_TWIST_MARGIN: f64 = 0.9;

const NEWTON_TOL: f64 = 1e-13;
const NEWTON_ACCEPT: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

/// Image point and Jacobian of one map application.
#[derive(Clone, Debug)]
pub struct MapJet {
    pub image: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

/// How the twist bound of a generating map was certified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TwistBound {
    /// Rigorous Fourier-side bound Σ (2π|Aᵀm|)² √(c²+s²).
    Fourier(f64),
    /// Empirical maximum of ‖Aᵀ D²ŵ A‖ over a torus grid, used when the
    /// Fourier bound overshoots the margin but the actual Hessian stays
    /// small. Not a proof; every map application still verifies its own
    /// Newton residual.
    Grid(f64),
}

impl TwistBound {
    pub fn value(&self) -> f64 {
        match *self {
            TwistBound::Fourier(v) | TwistBound::Grid(v) => v,
        }
    }
}

/// Sum of (2π|Aᵀm|)²·√(c²+s²) over modes: a sup-norm bound for the pulled
/// back Hessian ‖Aᵀ D²ŵ A‖ valid everywhere on the torus.
pub fn fourier_hessian_bound(field: &QuasiPeriodicScalar, a: &DMatrix<f64>) -> f64 {
    field
        .modes()
        .iter()
        .map(|mode| {
            let ma = crate::field::pulled_frequency(a, &mode.m);
            TWO_PI * TWO_PI * ma.norm_squared() * mode.amplitude()
        })
        .sum()
}

fn grid_hessian_max(field: &QuasiPeriodicScalar, a: &DMatrix<f64>) -> f64 {
    let n_torus = field.dim();
    let per_dim: usize = match n_torus {
        0 | 1 | 2 => 64,
        3 => 32,
        4 => 16,
        _ => 8,
    };
    let total = per_dim.pow(n_torus as u32);
    let mut max = 0.0f64;
    let mut point = DVector::zeros(n_torus);
    for idx in 0..total {
        let mut rem = idx;
        for i in 0..n_torus {
            point[i] = (rem % per_dim) as f64 / per_dim as f64;
            rem /= per_dim;
        }
        let jet = field.eval_jet_raw(&point);
        let h = a.transpose() * &jet.hessian * a;
        let sym = 0.5 * (&h + h.transpose());
        let op = sym.symmetric_eigen().eigenvalues.amax();
        if op > max {
            max = op;
        }
    }
    max
}

/// An exact-symplectic map of R^{2d} generated by a quasiperiodic potential.
#[derive(Clone, Debug)]
pub struct GeneratingMap {
    field: QuasiPeriodicScalar,
    a: DMatrix<f64>,
    base: TorusPoint,
    d: usize,
    bound: TwistBound,
    margin: f64,
}

impl GeneratingMap {
    /// Validate dimensions and certify the twist condition: the pulled-back
    /// Hessian must stay below `margin` (< 1) in operator norm, first via
    /// the rigorous Fourier bound and, failing that, via a grid scan.
    pub fn new(
        field: QuasiPeriodicScalar,
        a: DMatrix<f64>,
        base: TorusPoint,
        d: usize,
        margin: f64,
    ) -> Result<Self, QsympError> {
        if d == 0 {
            return Err(QsympError::Config("map dimension d must be >= 1".into()));
        }
        if a.ncols() != 2 * d {
            return Err(QsympError::Config(format!(
                "frequency matrix has {} columns but the phase space has dimension {}",
                a.ncols(),
                2 * d
            )));
        }
        if a.nrows() != field.dim() || base.dim() != field.dim() {
            return Err(QsympError::Config(format!(
                "torus dims disagree: field {}, matrix rows {}, base {}",
                field.dim(),
                a.nrows(),
                base.dim()
            )));
        }
        if !(margin > 0.0 && margin < 1.0) {
            return Err(QsympError::Config(format!(
                "twist margin must lie in (0, 1), got {margin}"
            )));
        }
        let fourier = fourier_hessian_bound(&field, &a);
        let bound = if fourier < margin {
            TwistBound::Fourier(fourier)
        } else {
            let grid = grid_hessian_max(&field, &a);
            if grid < margin {
                TwistBound::Grid(grid)
            } else {
                return Err(QsympError::TwistViolation(format!(
                    "Hessian bound exceeds margin {margin}: Fourier bound {fourier:.6}, \
                     grid maximum {grid:.6}"
                )));
            }
        };
        Ok(GeneratingMap {
            field,
            a,
            base,
            d,
            bound,
            margin,
        })
    }

    pub fn torus_dim(&self) -> usize {
        self.field.dim()
    }

    pub fn map_dim(&self) -> usize {
        self.d
    }

    pub fn base(&self) -> &TorusPoint {
        &self.base
    }

    pub fn frequency_matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn field(&self) -> &QuasiPeriodicScalar {
        &self.field
    }

    pub fn twist_bound(&self) -> TwistBound {
        self.bound
    }

    /// The margin the map was validated against at construction.
    pub fn twist_margin(&self) -> f64 {
        self.margin
    }

    /// Same field and frequency matrix over a different base point. The
    /// twist certificate is base-independent, so no re-validation happens.
    pub fn rebased(&self, base: TorusPoint) -> Result<Self, QsympError> {
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

    /// Jet of the potential w(x) = ŵ(ω + A x) at x ∈ R^{2d}.
    pub fn potential_jet(&self, x: &DVector<f64>) -> Jet {
        let lifted = self.base.coords() + &self.a * x;
        pullback_jet_raw(&self.field, &self.a, &lifted)
    }

    /// The explicit companion Φ̂(Q, p) = (Q + w_p, p + w_Q) with its exact
    /// Jacobian. Input and output are stacked 2d-vectors; the first d slots
    /// of the input hold Q, the last d hold p.
    pub fn hat_map(&self, x: &DVector<f64>) -> MapJet {
        let d = self.d;
        assert_eq!(x.len(), 2 * d, "hat_map: point has wrong dimension");
        let jet = self.potential_jet(x);
        let mut image = DVector::zeros(2 * d);
        for i in 0..d {
            image[i] = x[i] + jet.gradient[d + i]; // q = Q + w_p
            image[d + i] = x[d + i] + jet.gradient[i]; // P = p + w_Q
        }
        let h = &jet.hessian;
        let mut jac = DMatrix::identity(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                jac[(i, j)] += h[(d + i, j)]; // ∂q/∂Q = I + w_pQ
                jac[(i, d + j)] = h[(d + i, d + j)]; // ∂q/∂p = w_pp
                jac[(d + i, j)] = h[(i, j)]; // ∂P/∂Q = w_QQ
                jac[(d + i, d + j)] += h[(i, d + j)]; // ∂P/∂p = I + w_Qp
            }
        }
        MapJet {
            image,
            jacobian: jac,
        }
    }

    /// Apply Φ: (q, p) ↦ (Q, P). Solves Q + w_p(Q, p) = q by damped Newton
    /// starting from Q₀ = q, then reads P off the generating relations and
    /// converts the hat Jacobian through the block transform.
    pub fn forward_map(&self, x: &DVector<f64>) -> Result<MapJet, QsympError> {
        let d = self.d;
        if x.len() != 2 * d {
            return Err(QsympError::Config(format!(
                "forward_map: point dim {} but phase space dim {}",
                x.len(),
                2 * d
            )));
        }
        let q = x.rows(0, d).into_owned();
        let p = x.rows(d, d).into_owned();
        let mut big_q = q.clone();
        let mut state = DVector::zeros(2 * d);
        let residual_at = |big_q: &DVector<f64>, state: &mut DVector<f64>| -> (Jet, DVector<f64>) {
            state.rows_mut(0, d).copy_from(big_q);
            state.rows_mut(d, d).copy_from(&p);
            let jet = self.potential_jet(state);
            let f = big_q + jet.gradient.rows(d, d) - &q;
            (jet, f)
        };
        let (mut jet, mut f) = residual_at(&big_q, &mut state);
        let mut res = f.amax();
        for _ in 0..NEWTON_MAX_ITER {
            if res <= NEWTON_TOL {
                break;
            }
            let mut df = DMatrix::identity(d, d);
            for i in 0..d {
                for j in 0..d {
                    df[(i, j)] += jet.hessian[(d + i, j)];
                }
            }
            let lu = df.lu();
            let delta = lu.solve(&f).ok_or_else(|| {
                QsympError::TwistViolation("implicit solve: singular linearization I + w_pQ".into())
            })?;
            // Backtracking: halve the step until the residual decreases.
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..6 {
                let candidate = &big_q - lambda * &delta;
                let (jet_c, f_c) = residual_at(&candidate, &mut state);
                let res_c = f_c.amax();
                if res_c < res {
                    big_q = candidate;
                    jet = jet_c;
                    f = f_c;
                    res = res_c;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res > NEWTON_ACCEPT {
            return Err(QsympError::TwistViolation(format!(
                "implicit solve stalled at residual {res:.3e} (tolerance {NEWTON_ACCEPT:.0e})"
            )));
        }
        state.rows_mut(0, d).copy_from(&big_q);
        state.rows_mut(d, d).copy_from(&p);
        let jet_final = self.potential_jet(&state);
        let mut image = DVector::zeros(2 * d);
        for i in 0..d {
            image[i] = big_q[i];
            image[d + i] = p[i] + jet_final.gradient[i];
        }
        let hat = self.hat_map(&state);
        let block = block_transform(&hat.jacobian, d)?;
        Ok(MapJet {
            image,
            jacobian: block.matrix,
        })
    }
}

/// Result of the block transform: the converted Jacobian and |det Â| of the
/// upper-left hat block that was inverted.
#[derive(Clone, Debug)]
pub struct BlockMap {
    pub matrix: DMatrix<f64>,
    pub a_condition: f64,
}

/// The involution 𝒜 linking DΦ̂ and DΦ. Writing Γ̂ = [[Â, B̂], [Ĉ, D̂]] in
/// d×d blocks,
///
/// ```text
/// 𝒜(Γ̂) = [[Â⁻¹, −Â⁻¹B̂], [Ĉ Â⁻¹, D̂ − Ĉ Â⁻¹ B̂]],
/// ```
///
/// and 𝒜(𝒜(Γ̂)) = Γ̂. Fails when Â is numerically singular.
pub fn block_transform(gamma_hat: &DMatrix<f64>, d: usize) -> Result<BlockMap, QsympError> {
    if gamma_hat.nrows() != 2 * d || gamma_hat.ncols() != 2 * d {
        return Err(QsympError::Config(format!(
            "block_transform: matrix is {}x{} but d = {d}",
            gamma_hat.nrows(),
            gamma_hat.ncols()
        )));
    }
    let a_hat = gamma_hat.view((0, 0), (d, d)).into_owned();
    let b_hat = gamma_hat.view((0, d), (d, d)).into_owned();
    let c_hat = gamma_hat.view((d, 0), (d, d)).into_owned();
    let d_hat = gamma_hat.view((d, d), (d, d)).into_owned();
    let lu = a_hat.lu();
    let det = lu.determinant();
    if det.abs() < 1e-12 {
        return Err(QsympError::DegenerateHatJacobian { det });
    }
    let a_inv = lu
        .try_inverse()
        .ok_or(QsympError::DegenerateHatJacobian { det })?;
    let top_left = a_inv.clone();
    let top_right = -&a_inv * &b_hat;
    let bottom_left = &c_hat * &a_inv;
    let bottom_right = &d_hat - &c_hat * &a_inv * &b_hat;
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(&top_left);
    out.view_mut((0, d), (d, d)).copy_from(&top_right);
    out.view_mut((d, 0), (d, d)).copy_from(&bottom_left);
    out.view_mut((d, d), (d, d)).copy_from(&bottom_right);
    Ok(BlockMap {
        matrix: out,
        a_condition: det.abs(),
    })
}

/// Conversion factor |det Â|^{1−4d} between the joint densities of
/// (point, image, Jacobian) triples expressed in hat variables versus map
/// variables; Â is the upper-left block of the hat Jacobian.
pub fn hat_density_factor(gamma_hat: &DMatrix<f64>, d: usize) -> Result<f64, QsympError> {
    if gamma_hat.nrows() != 2 * d || gamma_hat.ncols() != 2 * d {
        return Err(QsympError::Config(format!(
            "hat_density_factor: matrix is {}x{} but d = {d}",
            gamma_hat.nrows(),
            gamma_hat.ncols()
        )));
    }
    let det = gamma_hat
        .view((0, 0), (d, d))
        .into_owned()
        .lu()
        .determinant();
    if det.abs() < 1e-12 {
        return Err(QsympError::DegenerateHatJacobian { det });
    }
    Ok(det.abs().powi(1 - 4 * d as i32))
}

/// The standard symplectic form J = [[0, I], [−I, 0]] on R^{2d}.
pub fn standard_symplectic(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// Max-norm of Γᵀ J Γ − J: zero exactly when Γ is symplectic.
pub fn symplectic_residual(jacobian: &DMatrix<f64>) -> f64 {
    let n = jacobian.nrows();
    assert!(
        n % 2 == 0 && n == jacobian.ncols(),
        "need a square 2d x 2d matrix"
    );
    let j = standard_symplectic(n / 2);
    (jacobian.transpose() * &j * jacobian - &j).amax()
}

/// Common interface of the two map constructions (generating potential and
/// Hamiltonian flow): a map of R^{2d} attached to a torus base point that
/// can be rebased along the embedded orbit.
pub trait QuasiMap {
    fn torus_dim(&self) -> usize;
    fn map_dim(&self) -> usize;
    fn base(&self) -> &TorusPoint;
    fn frequency_matrix(&self) -> &DMatrix<f64>;
    fn rebased(&self, base: TorusPoint) -> Result<Self, QsympError>
    where
        Self: Sized;
    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, QsympError>;
}

impl QuasiMap for GeneratingMap {
    fn torus_dim(&self) -> usize {
        self.torus_dim()
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
        GeneratingMap::rebased(self, base)
    }

    fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, QsympError> {
        Ok(self.forward_map(x)?.image)
    }
}

/// Maps that expose their hat companion Φ̂ (mixed-variable form). The
/// Jacobian is exact for generating maps and finite-difference for flow
/// maps.
pub trait HatMap: QuasiMap {
    fn hat_apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, QsympError>;
    fn hat_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, QsympError>;
}

impl HatMap for GeneratingMap {
    fn hat_apply(&self, x: &DVector<f64>) -> Result<DVector<f64>, QsympError> {
        Ok(self.hat_map(x).image)
    }

    fn hat_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>, QsympError> {
        Ok(self.hat_map(x).jacobian)
    }
}

/// Max over probes of ‖Φ_{θ_s ω}(x) − (Φ_ω(x + s) − s)‖_∞: the cocycle
/// property tying base translation to phase-space translation. Zero (up to
/// solver tolerance) for both map constructions.
pub fn equivariance_residual<M: QuasiMap>(
    map: &M,
    shift: &DVector<f64>,
    probes: &[DVector<f64>],
) -> Result<f64, QsympError> {
    if shift.len() != 2 * map.map_dim() {
        return Err(QsympError::Config(format!(
            "equivariance_residual: shift dim {} but phase space dim {}",
            shift.len(),
            2 * map.map_dim()
        )));
    }
    let shifted_base = translate(map.base(), map.frequency_matrix(), shift)?;
    let shifted_map = map.rebased(shifted_base)?;
    let mut worst = 0.0f64;
    for x in probes {
        let lhs = shifted_map.apply(x)?;
        let rhs = map.apply(&(x + shift))? - shift;
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}

/// Max over probes of the asymmetry ‖M − Mᵀ‖_∞ with M = η (DΦ̂ − I), where η
/// swaps the two d-blocks. Symmetry of M certifies that the hat displacement
/// is a gradient, i.e. that the map is exact-symplectic.
pub fn exactness_residual<M: HatMap>(map: &M, probes: &[DVector<f64>]) -> Result<f64, QsympError> {
    let d = map.map_dim();
    let mut worst = 0.0f64;
    for x in probes {
        let gamma_hat = map.hat_jacobian(x)?;
        let mut m = DMatrix::zeros(2 * d, 2 * d);
        // Row swap: top block of M = bottom rows of (Γ̂ − I), and vice versa.
        for j in 0..2 * d {
            for i in 0..d {
                let eye_bottom = if d + i == j { 1.0 } else { 0.0 };
                let eye_top = if i == j { 1.0 } else { 0.0 };
                m[(i, j)] = gamma_hat[(d + i, j)] - eye_bottom;
                m[(d + i, j)] = gamma_hat[(i, j)] - eye_top;
            }
        }
        worst = worst.max((&m - m.transpose()).amax());
    }
    Ok(worst)
}

/// A vector of quasiperiodic scalars on a common torus, evaluated jointly.
#[derive(Clone, Debug)]
pub struct TorusVectorField {
    components: Vec<QuasiPeriodicScalar>,
}

impl TorusVectorField {
    pub fn new(components: Vec<QuasiPeriodicScalar>) -> Result<Self, QsympError> {
        let dim = components
            .first()
            .ok_or_else(|| QsympError::Config("vector field needs at least one component".into()))?
            .dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(QsympError::Config(
                "vector field components live on different tori".into(),
            ));
        }
        Ok(TorusVectorField { components })
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn torus_dim(&self) -> usize {
        self.components[0].dim()
    }

    /// Values and gradient rows at raw torus coordinates.
    pub fn eval(&self, omega: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.components.len();
        let n = self.torus_dim();
        let mut values = DVector::zeros(d);
        let mut grads = DMatrix::zeros(d, n);
        for (i, component) in self.components.iter().enumerate() {
            let jet = component.eval_jet_raw(omega);
            values[i] = jet.value;
            grads.row_mut(i).copy_from(&jet.gradient.transpose());
        }
        (values, grads)
    }
}

/// Hat displacement pair (α̂, β̂) at one base point.
#[derive(Clone, Debug)]
pub struct HatDisplacement {
    pub alpha_hat: DVector<f64>,
    pub beta_hat: DVector<f64>,
}

/// Convert a displacement pair given in map variables into hat variables.
///
/// Given torus functions α, β: T^N → R^d, solve z + α(ω + A¹ z) = 0 for
/// z = α̂(ω) by Newton (A¹ = first d columns of A), then read off
/// β̂(ω) = β(ω + A¹ α̂(ω)). The linearization I + Dα·A¹ must stay invertible
/// along the iteration; an operator norm of Dα·A¹ at or above 1 aborts with
/// [`QsympError::NonTwistDisplacement`].
pub fn hat_alpha(
    alpha: &TorusVectorField,
    beta: &TorusVectorField,
    a: &DMatrix<f64>,
    omega: &TorusPoint,
) -> Result<HatDisplacement, QsympError> {
    let d = alpha.len();
    if beta.len() != d {
        return Err(QsympError::Config(format!(
            "hat_alpha: alpha has {} components, beta has {}",
            d,
            beta.len()
        )));
    }
    let n_torus = alpha.torus_dim();
    if beta.torus_dim() != n_torus || a.nrows() != n_torus || omega.dim() != n_torus {
        return Err(QsympError::Config(
            "hat_alpha: torus dimensions disagree".into(),
        ));
    }
    if a.ncols() < d {
        return Err(QsympError::Config(format!(
            "hat_alpha: frequency matrix has {} columns, need at least d = {d}",
            a.ncols()
        )));
    }
    let a1 = a.columns(0, d).into_owned();
    let mut z = DVector::zeros(d);
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let point = omega.coords() + &a1 * &z;
        let (values, grads) = alpha.eval(&point);
        // The contraction bound is what makes the solution unique, so it is
        // enforced at every iterate — a root reached with ‖Dα·A¹‖ ≥ 1 would
        // still leave the hat map ill-defined.
        let da = &grads * &a1;
        let op_norm = da.clone().svd(false, false).singular_values.amax();
        if op_norm >= 1.0 {
            return Err(QsympError::NonTwistDisplacement(format!(
                "‖Dα·A¹‖ = {op_norm:.6} ≥ 1 along the hat solve"
            )));
        }
        let g = &z + &values;
        if g.amax() <= NEWTON_TOL {
            converged = true;
            break;
        }
        let dg = DMatrix::identity(d, d) + da;
        let delta = dg.lu().solve(&g).ok_or_else(|| {
            QsympError::NonTwistDisplacement("singular linearization in hat solve".into())
        })?;
        z -= delta;
    }
    if !converged {
        let point = omega.coords() + &a1 * &z;
        let (values, _) = alpha.eval(&point);
        let res = (&z + &values).amax();
        if res > NEWTON_ACCEPT {
            return Err(QsympError::NonTwistDisplacement(format!(
                "hat solve stalled at residual {res:.3e}"
            )));
        }
    }
    let shifted = omega.coords() + &a1 * &z;
    let (beta_values, _) = beta.eval(&shifted);
    Ok(HatDisplacement {
        alpha_hat: z,
        beta_hat: beta_values,
    })
}

/// |det| of the linear map Z ↦ E Z on d×d matrices: |det E|^d.
pub fn left_multiplication_jacobian(e: &DMatrix<f64>) -> f64 {
    let d = e.nrows();
    assert_eq!(d, e.ncols(), "need a square matrix");
    e.clone().lu().determinant().abs().powi(d as i32)
}

/// |det| of the Jacobian of matrix inversion Z ↦ Z⁻¹ at Z: |det Z|^{−2d}.
pub fn inversion_jacobian(z: &DMatrix<f64>) -> f64 {
    let d = z.nrows();
    assert_eq!(d, z.ncols(), "need a square matrix");
    z.clone().lu().determinant().abs().powi(-2 * (d as i32))
}

/// |det| of the central finite-difference Jacobian of a map on d×d matrices,
/// vectorized column-major into R^{d²}.
pub fn fd_jacobian_determinant<F>(map: F, at: &DMatrix<f64>, step: f64) -> f64
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let d = at.nrows();
    assert_eq!(d, at.ncols(), "need a square matrix");
    let n = d * d;
    let mut jac = DMatrix::zeros(n, n);
    for col in 0..d {
        for row in 0..d {
            let k = col * d + row;
            let mut plus = at.clone();
            let mut minus = at.clone();
            plus[(row, col)] += step;
            minus[(row, col)] -= step;
            let diff = (map(&plus) - map(&minus)) / (2.0 * step);
            for (slot, value) in diff.iter().enumerate() {
                jac[(slot, k)] = *value;
            }
        }
    }
    jac.lu().determinant().abs()
}
