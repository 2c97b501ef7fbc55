//! Moutard transformations of (Δ − u)Y = 0: the single transformation built
//! on one seed solution, its twofold iteration built on a pair, and the
//! Fokker–Planck substitution Y = W e^h connecting the two pictures.

use crate::error::{Error, Result};
use crate::field::{default_fd_step, jet3_at, Point2, ScalarField2};
use crate::grid::GridData;
use crate::nonlocal::NonlocalPotential;

/// Largest compatibility residual accepted when a transformation consumes a
/// recovered nonlocal variable.
pub const COMPATIBILITY_LIMIT: f64 = 1e-6;

/// Relative threshold below which a seed or pair variable counts as zero.
pub const ZERO_EPS: f64 = 1e-12;

/// Drift potential −Δh + h_x² + h_y² of the drift field h at `p`. With
/// u equal to this value, Y_h = e^{−h} solves (Δ − u)Y_h = 0.
pub fn drift_potential(h: &ScalarField2, p: Point2) -> Result<f64> {
    let j = jet3_at(h, p, default_fd_step(p))?;
    Ok(-j.laplacian() + j.grad_sq())
}

/// The drift potential as a field over the drift's domain.
pub fn drift_potential_field(h: &ScalarField2) -> ScalarField2 {
    let hc = h.clone();
    ScalarField2::from_values(move |p| match drift_potential(&hc, p) {
        Ok(v) => v,
        Err(_) => f64::NAN,
    })
    .with_domain({
        let d = h.domain_fn();
        move |p| d(p)
    })
}

/// Substitution Y = W e^h mapping a Fokker–Planck amplitude to a
/// Schrödinger solution.
pub fn substitution_y_from_w(w: &ScalarField2, h: &ScalarField2) -> ScalarField2 {
    w.mul(&h.exp())
}

/// Transformed potential ũ = u − 2Δ ln|Y_h| at `p` for the seed Y_h.
pub fn moutard_potential(u: &ScalarField2, yh: &ScalarField2, p: Point2) -> Result<f64> {
    let uv = u.eval_checked(p)?;
    let j = jet3_at(yh, p, default_fd_step(p))?;
    let scale = j.dx.abs().max(j.dy.abs()).max(1.0);
    if j.val.abs() <= ZERO_EPS * scale {
        return Err(Error::ZeroSeed(p));
    }
    let lap_ln = (j.val * j.laplacian() - j.grad_sq()) / (j.val * j.val);
    Ok(uv - 2.0 * lap_ln)
}

/// Seed magnitude below which the transformed field's domain is cut: the
/// formulas divide by Y_h, so its zero set cannot belong to the output.
pub const SEED_FLOOR: f64 = 1e-9;

/// [`moutard_potential`] as a field. The domain excludes the seed's zero set.
pub fn moutard_potential_field(u: &ScalarField2, yh: &ScalarField2) -> ScalarField2 {
    let (uc, yc) = (u.clone(), yh.clone());
    let (du, dy) = (u.domain_fn(), yh.domain_fn());
    let seed = yh.clone();
    ScalarField2::from_values(move |p| match moutard_potential(&uc, &yc, p) {
        Ok(v) => v,
        Err(_) => f64::NAN,
    })
    .with_domain(move |p| du(p) && dy(p) && seed.eval(p).abs() > SEED_FLOOR)
}

/// Transformed solution Ỹ = Q/Y_h of the transformed equation, where Q was
/// recovered from the pair (Y, Y_h). Fails when the recovery-time
/// compatibility residual exceeds [`COMPATIBILITY_LIMIT`] or when the seed
/// vanishes at the base point.
pub fn moutard_solution(yh: &ScalarField2, q: &NonlocalPotential) -> Result<ScalarField2> {
    let r = q.compatibility_residual();
    if !(r <= COMPATIBILITY_LIMIT) {
        return Err(Error::Compatibility(r, COMPATIBILITY_LIMIT));
    }
    let base = q.base();
    let j = jet3_at(yh, base, default_fd_step(base))?;
    if j.val.abs() <= ZERO_EPS * j.dx.abs().max(j.dy.abs()).max(1.0) {
        return Err(Error::ZeroSeed(base));
    }
    let seed = yh.clone();
    Ok(q
        .field()
        .div(yh)
        .with_domain(move |p| seed.eval(p).abs() > SEED_FLOOR))
}

/// Fokker–Planck picture of the Moutard transformation: for drift h and the
/// nonlocal variable Q of a pair, the transformed amplitude is W̃ = e^{2h} Q
/// and the transformed Schrödinger solution is Ỹ = e^{h} Q. Both solve their
/// equations with the reversed drift −h.
pub fn moutard_pair_map(
    q_field: &ScalarField2,
    h: &ScalarField2,
) -> (ScalarField2, ScalarField2) {
    let y_tilde = h.exp().mul(q_field);
    let w_tilde = h.scale(2.0).exp().mul(q_field);
    (y_tilde, w_tilde)
}

/// Twofold-transformed potential at `p`, built on solutions Y₁, Y₂ and
/// their pair variable Q₁₂ (recovered from the pair with Y₂ integrated
/// against Y₁):
///
/// ũ = u + 4 (∂y Y₂ ∂x Y₁ − ∂x Y₂ ∂y Y₁)/Q₁₂
///       + 2 ((∂x Y₂ Y₁ − Y₂ ∂x Y₁)² + (∂y Y₂ Y₁ − Y₂ ∂y Y₁)²)/Q₁₂².
pub fn twofold_potential(
    u: &ScalarField2,
    y1: &ScalarField2,
    y2: &ScalarField2,
    q12: &NonlocalPotential,
    p: Point2,
) -> Result<f64> {
    let uv = u.eval_checked(p)?;
    let step = default_fd_step(p);
    let j1 = jet3_at(y1, p, step)?;
    let j2 = jet3_at(y2, p, step)?;
    let qv = q12.eval_checked(p)?;
    let wron = j2.dy * j1.dx - j2.dx * j1.dy;
    let a = j2.dx * j1.val - j2.val * j1.dx;
    let b = j2.dy * j1.val - j2.val * j1.dy;
    let scale = wron.abs().max(a.abs()).max(b.abs()).max(1.0);
    if qv.abs() <= ZERO_EPS * scale {
        return Err(Error::ZeroQ(p));
    }
    Ok(uv + 4.0 * wron / qv + 2.0 * (a * a + b * b) / (qv * qv))
}

/// [`twofold_potential`] as a field.
pub fn twofold_potential_field(
    u: &ScalarField2,
    y1: &ScalarField2,
    y2: &ScalarField2,
    q12: &NonlocalPotential,
) -> ScalarField2 {
    let (uc, y1c, y2c, qc) = (u.clone(), y1.clone(), y2.clone(), q12.clone());
    let (du, d1, d2) = (u.domain_fn(), y1.domain_fn(), y2.domain_fn());
    let qd = q12.clone();
    ScalarField2::from_values(move |p| match twofold_potential(&uc, &y1c, &y2c, &qc, p) {
        Ok(v) => v,
        Err(_) => f64::NAN,
    })
    .with_domain(move |p| du(p) && d1(p) && d2(p) && qd.path_clear(p))
}

/// Twofold-transformed solution Y₁/Q₁₂ of the twofold-transformed equation.
pub fn twofold_solution(y1: &ScalarField2, q12: &NonlocalPotential) -> ScalarField2 {
    y1.div(&q12.field())
}

/// Picks the additive constant that makes sampled values strictly one-signed.
///
/// Returns 0 when the samples already avoid zero crossings, a positive shift
/// clearing the minimum when the field changes sign but every node was
/// sampled successfully, and `None` when sign information is incomplete
/// because some nodes are masked out.
pub fn choose_sign_constant(data: &GridData) -> Option<f64> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut valid = 0usize;
    for (v, m) in data.values.iter().zip(&data.mask) {
        if *m {
            min = min.min(*v);
            max = max.max(*v);
            valid += 1;
        }
    }
    if valid == 0 {
        return None;
    }
    if max < 0.0 || min > 0.0 {
        return Some(0.0);
    }
    if valid == data.mask.len() {
        let margin = (1e-6 * (max - min)).max(1e-12);
        return Some(-min + margin);
    }
    None
}
