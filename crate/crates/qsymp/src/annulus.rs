//! Two-dimensional annulus twist maps built from radial frequency profiles.
//!
//! A profile ω(q, a) = slope·a·(1 + β φ(q)) — φ a finite, possibly
//! quasiperiodic trigonometric polynomial with |β φ| < 1 — induces a twist
//! map F of the annulus R × [−1, 1] through a scalar generating function.
//! Two diagonals of that construction are exposed:
//!
//! * the *literal* generating function 𝒢(q, Q) = ∫_{q+Q⁻(q)}^{Q} ω(q, a) da
//!   − (Q − q), evaluated by adaptive quadrature, together with its diagonal
//!   ψ(q) = 𝒢(q, q); and
//! * the *fiber* form 𝒢̂(q, Q) = ∫₀^{Q−q−Q⁻(q)} ω(q, u) du − (Q − q), the
//!   change of variables that measures the radial coordinate from the lower
//!   fiber endpoint. Its mixed partial equals the twist condition, the fiber
//!   range is exactly p ∈ [−1, 1] for every q, and ω = 2a produces the
//!   integrable shear — so the solver, the fixed-point census, and the ±
//!   classification all run on 𝒢̂ (diagonal ψ̂ = 𝒢̂(q, q) = 1/(2 s(q))).
//!
//! Both candidates are kept because closed-form anchor values exist for
//! each; the module documents which functions use which.

use nalgebra::DMatrix;

use crate::error::QsympError;
use crate::exec::map_indexed;
use crate::field::TWO_PI;

/// Quadrature and root tolerances for the annulus constructions.
const QUAD_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-12;
const MAX_BISECT: usize = 200;
/// Finite-difference step for annulus map Jacobians.
const FD_STEP: f64 = 1e-6;
/// |ψ̂″| at or below this flags a degenerate critical point.
const DEGENERATE_PSI_TOL: f64 = 1e-8;
/// Grid cells per shard when scanning long q-ranges.
const SCAN_BLOCK: usize = 4096;

/// One real-frequency mode of the angular profile φ:
/// c·cos(2πνq) + s·sin(2πνq).
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileMode {
    pub nu: f64,
    pub c: f64,
    pub s: f64,
}

impl ProfileMode {
    pub fn cos(nu: f64, c: f64) -> Self {
        ProfileMode { nu, c, s: 0.0 }
    }

    pub fn sin(nu: f64, s: f64) -> Self {
        ProfileMode { nu, c: 0.0, s }
    }

    pub fn amplitude(&self) -> f64 {
        self.c.hypot(self.s)
    }
}

/// Radial frequency profile ω(q, a) = slope·a·(1 + β φ(q)).
///
/// The coefficient s(q) = slope·(1 + β φ(q)) stays positive because the
/// constructor demands β·Σ|amp| < 1, so ω(q, 0) = 0, ω is strictly
/// increasing in a, and the annulus geometry (η, Q⁻) is finite everywhere.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    slope: f64,
    beta: f64,
    modes: Vec<ProfileMode>,
}

impl RadialProfile {
    pub fn new(
        slope: f64,
        beta: f64,
        modes: impl IntoIterator<Item = ProfileMode>,
    ) -> Result<Self, QsympError> {
        if !(slope > 0.0) {
            return Err(QsympError::Config(format!(
                "radial profile: slope must be positive, got {slope}"
            )));
        }
        let modes: Vec<ProfileMode> = modes.into_iter().collect();
        for mode in &modes {
            if !(mode.nu > 0.0) {
                return Err(QsympError::Config(format!(
                    "radial profile: mode frequency must be positive, got {}",
                    mode.nu
                )));
            }
        }
        let reach: f64 = beta.abs() * modes.iter().map(ProfileMode::amplitude).sum::<f64>();
        if reach >= 1.0 {
            return Err(QsympError::Config(format!(
                "radial profile: |β|·Σ amplitudes = {reach:.6} must stay below 1 \
                 so the profile coefficient never vanishes"
            )));
        }
        Ok(RadialProfile { slope, beta, modes })
    }

    /// The shear profile ω(q, a) = slope·a.
    pub fn shear(slope: f64) -> Result<Self, QsympError> {
        RadialProfile::new(slope, 0.0, [])
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn modes(&self) -> &[ProfileMode] {
        &self.modes
    }

    /// φ, φ′, φ″ at q.
    fn phi_jet(&self, q: f64) -> (f64, f64, f64) {
        let mut phi = 0.0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for mode in &self.modes {
            let freq = TWO_PI * mode.nu;
            let (sin, cos) = (freq * q).sin_cos();
            phi += mode.c * cos + mode.s * sin;
            d1 += freq * (-mode.c * sin + mode.s * cos);
            d2 += freq * freq * (-mode.c * cos - mode.s * sin);
        }
        (phi, d1, d2)
    }

    /// The linear coefficient s(q) = slope·(1 + β φ(q)) and its first two
    /// derivatives, so that ω(q, a) = a·s(q).
    pub fn coeff_jet(&self, q: f64) -> (f64, f64, f64) {
        let (phi, d1, d2) = self.phi_jet(q);
        (
            self.slope * (1.0 + self.beta * phi),
            self.slope * self.beta * d1,
            self.slope * self.beta * d2,
        )
    }

    /// ω(q, a).
    pub fn omega(&self, q: f64, a: f64) -> f64 {
        a * self.coeff_jet(q).0
    }

    /// Highest angular frequency present in φ (0 for a shear).
    pub fn max_frequency(&self) -> f64 {
        self.modes.iter().map(|m| m.nu).fold(0.0, f64::max)
    }

    /// η(q): the radius where ω(q, ·) reaches 2, found by bisection. For
    /// this family η = 2/s(q) in closed form; the bisection is the primary
    /// path and the closed form serves as a test oracle.
    pub fn eta(&self, q: f64) -> Result<f64, QsympError> {
        let mut lo = 0.0f64;
        // ω(q, a) = a s(q) with s ≥ slope(1 − |β|Σamp) > 0, so the bracket
        // below always straddles the root.
        let s_floor = self.slope
            * (1.0 - self.beta.abs() * self.modes.iter().map(ProfileMode::amplitude).sum::<f64>());
        let mut hi = 2.0 / s_floor + 1.0;
        if self.omega(q, hi) < 2.0 {
            return Err(QsympError::Config(format!(
                "radial profile never reaches ω = 2 at q = {q}; profile invalid"
            )));
        }
        for _ in 0..MAX_BISECT {
            let mid = 0.5 * (lo + hi);
            if self.omega(q, mid) < 2.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= ROOT_TOL {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Q⁻(q) = ½ ∫₀^{η(q)} ω(q, a) da − η(q), by adaptive quadrature.
    pub fn q_minus(&self, q: f64) -> Result<f64, QsympError> {
        let eta = self.eta(q)?;
        let integral = adaptive_simpson(&|a| self.omega(q, a), 0.0, eta, QUAD_TOL);
        Ok(0.5 * integral - eta)
    }

    /// Literal generating function 𝒢(q, Q) = ∫_{q+Q⁻(q)}^{Q} ω(q, a) da
    /// − (Q − q), taking the integrand exactly as stated (the integration
    /// variable feeds the radial slot even though its range is positional).
    pub fn gen_g(&self, q: f64, big_q: f64) -> Result<f64, QsympError> {
        let lower = q + self.q_minus(q)?;
        let integral = adaptive_simpson(&|a| self.omega(q, a), lower, big_q, QUAD_TOL);
        Ok(integral - (big_q - q))
    }

    /// Diagonal of the literal generating function, ψ(q) = 𝒢(q, q).
    pub fn psi(&self, q: f64) -> Result<f64, QsympError> {
        self.gen_g(q, q)
    }

    /// Fiber generating function 𝒢̂(q, Q) = s(q)·v²/2 − (Q − q) with
    /// v = Q − q − Q⁻(q): the radial integral taken in the coordinate
    /// measured from the lower fiber endpoint.
    pub fn gen_fiber(&self, q: f64, big_q: f64) -> f64 {
        let (s, _, _) = self.coeff_jet(q);
        let v = big_q - q + 1.0 / s;
        0.5 * s * v * v - (big_q - q)
    }

    /// Closed-form partials (𝒢̂_q, 𝒢̂_Q). With v = Q − q + 1/s:
    /// 𝒢̂_q = s′v²/2 − s·v(1 + s′/s²) + 1 and 𝒢̂_Q = s·v − 1.
    pub fn fiber_partials(&self, q: f64, big_q: f64) -> (f64, f64) {
        let (s, s1, _) = self.coeff_jet(q);
        let v = big_q - q + 1.0 / s;
        let g_q = 0.5 * s1 * v * v - s * v * (1.0 + s1 / (s * s)) + 1.0;
        let g_qq = s * v - 1.0;
        (g_q, g_qq)
    }

    /// Diagonal of the fiber generating function, ψ̂(q) = 𝒢̂(q, q) = 1/(2s).
    pub fn psi_twist(&self, q: f64) -> f64 {
        1.0 / (2.0 * self.coeff_jet(q).0)
    }

    /// (ψ̂, ψ̂′, ψ̂″) in closed form.
    pub fn psi_twist_jet(&self, q: f64) -> (f64, f64, f64) {
        let (s, s1, s2) = self.coeff_jet(q);
        let value = 1.0 / (2.0 * s);
        let d1 = -s1 / (2.0 * s * s);
        let d2 = -s2 / (2.0 * s * s) + s1 * s1 / (s * s * s);
        (value, d1, d2)
    }
}

/// Classic adaptive Simpson quadrature with Richardson acceptance.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Minimum of −𝒢̂_qQ = s + s′/s − s′·v over a (q, v) grid with v spanning
/// the full fiber [0, η(q)]. Positive means the fiber map p = −𝒢̂_q(q, ·)
/// is monotone everywhere; the solver itself only needs the weaker bracket
/// property, which holds for this family unconditionally.
pub fn omega_one_margin(
    profile: &RadialProfile,
    q_lo: f64,
    q_hi: f64,
    q_samples: usize,
    v_samples: usize,
) -> f64 {
    let mut min = f64::INFINITY;
    for i in 0..q_samples.max(1) {
        let q = q_lo + (q_hi - q_lo) * (i as f64 + 0.5) / q_samples.max(1) as f64;
        let (s, s1, _) = profile.coeff_jet(q);
        let eta = 2.0 / s;
        for j in 0..=v_samples.max(1) {
            let v = eta * j as f64 / v_samples.max(1) as f64;
            min = min.min(s + s1 / s - s1 * v);
        }
    }
    min
}

/// The annulus twist map F(q, p) = (Q, P) solved from the fiber generating
/// relation p = −𝒢̂_q(q, Q), P = 𝒢̂_Q(q, Q).
///
/// In the fiber coordinate v = Q − q − Q⁻(q), the level curve
/// p(v) + 1 = v·(s(1 + s′/s²) − s′v/2) is a parabola through (0, 0) and
/// (η, 2): every level in (0, 2) is crossed exactly once on [0, η], so a
/// sign-change bracket exists and the solution is unique even at parameter
/// values where the fiber map is not pointwise monotone near its ends.
pub fn twist_from_gen(profile: &RadialProfile, q: f64, p: f64) -> Result<(f64, f64), QsympError> {
    if !(p > -1.0 && p < 1.0) {
        return Err(QsympError::OutsideAnnulus { q, p });
    }
    let (s, s1, _) = profile.coeff_jet(q);
    let eta = 2.0 / s;
    let a_lin = s * (1.0 + s1 / (s * s));
    // p(v) as a function of the fiber coordinate, minus the target.
    let residual = |v: f64| a_lin * v - 0.5 * s1 * v * v - 1.0 - p;
    let d_residual = |v: f64| a_lin - s1 * v;
    let mut lo = 0.0f64;
    let mut hi = eta;
    let mut v = 0.5 * (p + 1.0) * eta; // linear interpolation start
    for _ in 0..MAX_BISECT {
        let r = residual(v);
        if r.abs() <= ROOT_TOL {
            break;
        }
        if r > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let dr = d_residual(v);
        let newton = if dr.abs() > 1e-14 {
            v - r / dr
        } else {
            f64::NAN
        };
        v = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * eta {
            break;
        }
    }
    if residual(v).abs() > 1e-10 {
        return Err(QsympError::Numerical(format!(
            "fiber solve stalled at residual {:.3e} (q = {q}, p = {p})",
            residual(v)
        )));
    }
    let big_q = q - 1.0 / s + v;
    let (_, g_qq) = profile.fiber_partials(q, big_q);
    Ok((big_q, g_qq))
}

/// Central finite-difference Jacobian of (q, p) ↦ F(q, p).
pub fn annulus_jacobian_fd(
    profile: &RadialProfile,
    q: f64,
    p: f64,
) -> Result<DMatrix<f64>, QsympError> {
    let mut jac = DMatrix::zeros(2, 2);
    for (col, dq, dp) in [(0usize, FD_STEP, 0.0), (1, 0.0, FD_STEP)] {
        let (qp1, pp1) = twist_from_gen(profile, q + dq, p + dp)?;
        let (qm1, pm1) = twist_from_gen(profile, q - dq, p - dp)?;
        jac[(0, col)] = (qp1 - qm1) / (2.0 * FD_STEP);
        jac[(1, col)] = (pp1 - pm1) / (2.0 * FD_STEP);
    }
    Ok(jac)
}

/// Eigenvalue structure of a 2×2 map Jacobian at a fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stability {
    /// Real pair λ₁ ≤ λ₂.
    Real { lambda1: f64, lambda2: f64 },
    /// Complex-conjugate pair re ± i·im (im > 0).
    Complex { re: f64, im: f64 },
}

/// Sign class of a nondegenerate annulus fixed point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedPointKind {
    /// Both eigenvalues of dF positive.
    Plus,
    /// Both eigenvalues negative.
    Minus,
    /// Complex eigenvalues on the unit circle — no sign class.
    Elliptic,
}

#[derive(Clone, Debug)]
pub struct AnnulusFixedPoint {
    pub q: f64,
    pub p: f64,
    pub kind: FixedPointKind,
    pub stability: Stability,
    pub trace: f64,
    /// ψ̂″ at the root; |ψ̂″| ≤ 1e-8 flags the point as degenerate.
    pub psi_second: f64,
    pub degenerate: bool,
    /// ‖F(q, p) − (q, p)‖∞ as verified through the solver.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct AnnulusCensus {
    pub points: Vec<AnnulusFixedPoint>,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub elliptic_count: usize,
    pub degenerate_count: usize,
}

impl AnnulusCensus {
    pub fn count(&self, kind: FixedPointKind) -> usize {
        self.points
            .iter()
            .filter(|fp| !fp.degenerate && fp.kind == kind)
            .count()
    }
}

/// Fixed points of F over q ∈ [q_lo, q_hi), with ± densities per unit
/// length.
///
/// Fixed points sit exactly at critical points of the fiber diagonal ψ̂
/// with p = 0, so the scan brackets sign changes of ψ̂′ on a grid pitched
/// well below the profile's fastest angular period, polishes each root by
/// bisection + Newton, and classifies by the eigenvalues of the
/// finite-difference Jacobian of F. Profiles with ψ̂′ ≡ 0 (shears) have no
/// isolated fixed points and produce an empty census.
pub fn fixed_points_2d(
    profile: &RadialProfile,
    q_lo: f64,
    q_hi: f64,
) -> Result<AnnulusCensus, QsympError> {
    if !(q_hi > q_lo) {
        return Err(QsympError::Config(format!(
            "fixed_points_2d: empty range [{q_lo}, {q_hi})"
        )));
    }
    let f_max = profile.max_frequency();
    let pitch = if f_max > 0.0 {
        (1.0 / (8.0 * f_max)).min(0.05)
    } else {
        q_hi - q_lo
    };
    // One extra cell on each side so roots at the very edge of the half-open
    // range are still bracketed; the in-range filter below keeps [q_lo, q_hi).
    let cells = ((q_hi - q_lo) / pitch).ceil() as usize + 2;
    let spacing = (q_hi - q_lo) / (cells - 2) as f64;
    let grid_lo = q_lo - spacing;
    let blocks = cells.div_ceil(SCAN_BLOCK);

    let block_roots = map_indexed(blocks, |block| -> Result<Vec<f64>, QsympError> {
        let mut roots = Vec::new();
        let start = block * SCAN_BLOCK;
        let end = (start + SCAN_BLOCK).min(cells);
        for cell in start..end {
            // Offset endpoints so profile symmetry points do not fall on
            // grid nodes.
            let a = grid_lo + (cell as f64 + 0.25) * spacing;
            let b = a + spacing;
            let fa = profile.psi_twist_jet(a).1;
            let fb = profile.psi_twist_jet(b).1;
            if fa == 0.0 {
                // A node landing exactly on a root: accept only when the
                // root is isolated (shears have ψ̂′ ≡ 0 at every node).
                if profile.psi_twist_jet(a).2.abs() > DEGENERATE_PSI_TOL {
                    roots.push(a);
                }
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            let mut root = 0.5 * (lo + hi);
            for _ in 0..MAX_BISECT {
                let fm = profile.psi_twist_jet(root).1;
                if fm.abs() <= ROOT_TOL * 1e-2 || hi - lo <= f64::EPSILON * root.abs().max(1.0) {
                    break;
                }
                if (fm > 0.0) == (flo > 0.0) {
                    lo = root;
                    flo = fm;
                } else {
                    hi = root;
                }
                let d2 = profile.psi_twist_jet(root).2;
                let newton = if d2.abs() > 1e-14 {
                    root - fm / d2
                } else {
                    f64::NAN
                };
                root = if newton.is_finite() && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
            }
            if root >= q_lo && root < q_hi {
                roots.push(root);
            }
        }
        Ok(roots)
    });

    let mut roots = Vec::new();
    for block in block_roots {
        roots.extend(block?);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);

    let mut points = Vec::with_capacity(roots.len());
    for q in roots {
        let jac = annulus_jacobian_fd(profile, q, 0.0)?;
        let trace = jac.trace();
        let det = jac[(0, 0)] * jac[(1, 1)] - jac[(0, 1)] * jac[(1, 0)];
        let disc = 0.25 * trace * trace - det;
        let (stability, kind) = if disc >= 0.0 {
            let root = disc.sqrt();
            let (l1, l2) = (0.5 * trace - root, 0.5 * trace + root);
            let kind = if l1 > 0.0 && l2 > 0.0 {
                FixedPointKind::Plus
            } else if l1 < 0.0 && l2 < 0.0 {
                FixedPointKind::Minus
            } else {
                // Mixed signs cannot occur at det ≈ 1 > 0; treat as elliptic
                // only through the degenerate flag below.
                FixedPointKind::Elliptic
            };
            (
                Stability::Real {
                    lambda1: l1,
                    lambda2: l2,
                },
                kind,
            )
        } else {
            (
                Stability::Complex {
                    re: 0.5 * trace,
                    im: (-disc).sqrt(),
                },
                FixedPointKind::Elliptic,
            )
        };
        let psi_second = profile.psi_twist_jet(q).2;
        let (big_q, big_p) = twist_from_gen(profile, q, 0.0)?;
        let residual = (big_q - q).abs().max(big_p.abs());
        points.push(AnnulusFixedPoint {
            q,
            p: 0.0,
            kind,
            stability,
            trace,
            psi_second,
            degenerate: psi_second.abs() <= DEGENERATE_PSI_TOL,
            residual,
        });
    }

    let length = q_hi - q_lo;
    let census = AnnulusCensus {
        lambda_plus: 0.0,
        lambda_minus: 0.0,
        q_lo,
        q_hi,
        elliptic_count: points
            .iter()
            .filter(|fp| !fp.degenerate && fp.kind == FixedPointKind::Elliptic)
            .count(),
        degenerate_count: points.iter().filter(|fp| fp.degenerate).count(),
        points,
    };
    Ok(AnnulusCensus {
        lambda_plus: census.count(FixedPointKind::Plus) as f64 / length,
        lambda_minus: census.count(FixedPointKind::Minus) as f64 / length,
        ..census
    })
}

/// The annulus fixed-point problem recast as a quasiperiodic critical-point
/// field: φ built from unit-amplitude frequencies ν_j becomes the pullback
/// of Σ modes on T^M by A = (ν₁, …, ν_M)ᵀ, so the coarea machinery can
/// cross-check λ₊ + λ₋ against an independent surface integral.
pub fn profile_as_field(
    profile: &RadialProfile,
) -> Result<(crate::field::QuasiPeriodicScalar, DMatrix<f64>), QsympError> {
    let m = profile.modes.len();
    if m == 0 {
        return Err(QsympError::Config(
            "profile_as_field: a shear profile has no angular modes".into(),
        ));
    }
    let mut modes = Vec::with_capacity(m);
    for (j, mode) in profile.modes.iter().enumerate() {
        let mut mvec = vec![0i64; m];
        mvec[j] = 1;
        modes.push(crate::field::Mode {
            m: mvec,
            c: mode.c,
            s: mode.s,
        });
    }
    let field = crate::field::QuasiPeriodicScalar::new(m, modes)?;
    let a = DMatrix::from_fn(m, 1, |r, _| profile.modes[r].nu);
    Ok((field, a))
}
