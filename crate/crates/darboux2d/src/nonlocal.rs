//! The nonlocal variable Q attached to a pair of solutions (Y, Y_h) of the
//! same Schrödinger equation: its gradient is algebraic in the pair and its
//! value is recovered by integrating along axis-parallel paths from a base
//! point. Path independence holds exactly when both members of the pair
//! solve the equation with the same potential.

use crate::error::{Error, Result};
use crate::field::{default_fd_step, jet3_at, Point2, ScalarField2};
use crate::grid::GridSpec;
use crate::jet::Jet3;

/// Quadrature panels per unit length used by [`recover_q`] callers that have
/// no reason to override it.
pub const DEFAULT_PANELS_PER_UNIT: u32 = 64;

/// Half-width of the probe lattice around the base point on which the
/// compatibility residual is estimated during recovery.
const PROBE_HALF_WIDTH: f64 = 1.0;
const PROBE_SIDE: usize = 5;

/// Ordering of the two axis-parallel legs joining base point and target.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PathOrder {
    /// Move along x at the base ordinate, then along y at the target abscissa.
    HorizontalFirst,
    /// Move along y at the base abscissa, then along x at the target ordinate.
    VerticalFirst,
}

impl PathOrder {
    fn flipped(self) -> Self {
        match self {
            PathOrder::HorizontalFirst => PathOrder::VerticalFirst,
            PathOrder::VerticalFirst => PathOrder::HorizontalFirst,
        }
    }
}

/// Gradient (∂Q/∂x, ∂Q/∂y) of the nonlocal variable at `p`:
/// ∂Q/∂x = Y ∂y(Y_h) − ∂y(Y) Y_h and ∂Q/∂y = ∂x(Y) Y_h − Y ∂x(Y_h).
pub fn q_gradient(
    y: &ScalarField2,
    yh: &ScalarField2,
    p: Point2,
    fd_step: f64,
) -> Result<(f64, f64)> {
    let yj = jet3_at(y, p, fd_step)?;
    let hj = jet3_at(yh, p, fd_step)?;
    Ok((
        yj.val * hj.dy - yj.dy * hj.val,
        yj.dx * hj.val - yj.val * hj.dx,
    ))
}

/// Largest cross-derivative defect |Y ΔY_h − Y_h ΔY| over the in-domain
/// nodes of `spec`. Zero exactly when Y and Y_h share a potential.
pub fn compatibility_residual(
    y: &ScalarField2,
    yh: &ScalarField2,
    spec: &GridSpec,
) -> Result<f64> {
    let mut worst: Option<f64> = None;
    for (_, _, p) in spec.nodes() {
        if let Some(c) = curl_defect(y, yh, p) {
            worst = Some(worst.unwrap_or(0.0).max(c));
        }
    }
    worst.ok_or(Error::EmptyMask)
}

fn curl_defect(y: &ScalarField2, yh: &ScalarField2, p: Point2) -> Option<f64> {
    let step = default_fd_step(p);
    let yj = jet3_at(y, p, step).ok()?;
    let hj = jet3_at(yh, p, step).ok()?;
    let c = yj.val * hj.laplacian() - hj.val * yj.laplacian();
    c.is_finite().then(|| c.abs())
}

/// The recovered nonlocal variable: base point, additive constant, and the
/// machinery to evaluate Q and its jets anywhere a path exists.
#[derive(Clone)]
pub struct NonlocalPotential {
    y: ScalarField2,
    yh: ScalarField2,
    base: Point2,
    additive_constant: f64,
    panels_per_unit: u32,
    order: PathOrder,
    compat_residual: f64,
}

/// Recovers Q for the pair (y, yh) with the default leg ordering.
///
/// The returned object integrates lazily; nothing is precomputed beyond a
/// compatibility estimate on a small probe lattice around `base`.
pub fn recover_q(
    y: &ScalarField2,
    yh: &ScalarField2,
    base: Point2,
    additive_constant: f64,
    panels_per_unit: u32,
) -> Result<NonlocalPotential> {
    recover_q_with_order(
        y,
        yh,
        base,
        additive_constant,
        panels_per_unit,
        PathOrder::HorizontalFirst,
    )
}

/// [`recover_q`] with an explicit preferred leg ordering. Evaluation still
/// falls back to the flipped ordering when the preferred path is blocked.
pub fn recover_q_with_order(
    y: &ScalarField2,
    yh: &ScalarField2,
    base: Point2,
    additive_constant: f64,
    panels_per_unit: u32,
    order: PathOrder,
) -> Result<NonlocalPotential> {
    if panels_per_unit == 0 {
        return Err(Error::Param("panels_per_unit must be at least 1".into()));
    }
    if !additive_constant.is_finite() {
        return Err(Error::Param(format!(
            "additive constant must be finite, got {additive_constant}"
        )));
    }
    if !y.contains(base) || !yh.contains(base) {
        return Err(Error::Domain(base));
    }
    let mut worst: Option<f64> = None;
    let step = 2.0 * PROBE_HALF_WIDTH / (PROBE_SIDE - 1) as f64;
    for j in 0..PROBE_SIDE {
        for i in 0..PROBE_SIDE {
            let p = Point2::new(
                base.x - PROBE_HALF_WIDTH + i as f64 * step,
                base.y - PROBE_HALF_WIDTH + j as f64 * step,
            );
            if let Some(c) = curl_defect(y, yh, p) {
                worst = Some(worst.unwrap_or(0.0).max(c));
            }
        }
    }
    Ok(NonlocalPotential {
        y: y.clone(),
        yh: yh.clone(),
        base,
        additive_constant,
        panels_per_unit,
        order,
        compat_residual: worst.unwrap_or(f64::INFINITY),
    })
}

impl NonlocalPotential {
    pub fn base(&self) -> Point2 {
        self.base
    }

    pub fn additive_constant(&self) -> f64 {
        self.additive_constant
    }

    pub fn panels_per_unit(&self) -> u32 {
        self.panels_per_unit
    }

    /// Compatibility estimate taken over the probe lattice at recovery time.
    pub fn compatibility_residual(&self) -> f64 {
        self.compat_residual
    }

    /// Q at `p`, integrating along the preferred legs and falling back to
    /// the flipped ordering when the preferred path leaves the domain.
    pub fn eval_checked(&self, p: Point2) -> Result<f64> {
        match self.eval_along(p, self.order) {
            Err(Error::PathBlocked(..)) => match self.eval_along(p, self.order.flipped()) {
                Err(Error::PathBlocked(..)) => Err(Error::PathBlocked(self.base, p)),
                other => other,
            },
            other => other,
        }
    }

    /// True when at least one leg ordering stays inside both domains.
    pub fn path_clear(&self, p: Point2) -> bool {
        self.legs(p, self.order)
            .iter()
            .all(|leg| self.leg_clear(leg))
            || self
                .legs(p, self.order.flipped())
                .iter()
                .all(|leg| self.leg_clear(leg))
    }

    fn eval_along(&self, p: Point2, order: PathOrder) -> Result<f64> {
        let legs = self.legs(p, order);
        for leg in &legs {
            if !self.leg_clear(leg) {
                return Err(Error::PathBlocked(self.base, p));
            }
        }
        let mut total = 0.0;
        for leg in &legs {
            total += self.integrate_leg(leg)?;
        }
        Ok(self.additive_constant + total)
    }

    fn legs(&self, p: Point2, order: PathOrder) -> [Leg; 2] {
        let b = self.base;
        match order {
            PathOrder::HorizontalFirst => [
                Leg { along_x: true, fixed: b.y, from: b.x, to: p.x },
                Leg { along_x: false, fixed: p.x, from: b.y, to: p.y },
            ],
            PathOrder::VerticalFirst => [
                Leg { along_x: false, fixed: b.x, from: b.y, to: p.y },
                Leg { along_x: true, fixed: p.y, from: b.x, to: p.x },
            ],
        }
    }

    fn leg_clear(&self, leg: &Leg) -> bool {
        let len = (leg.to - leg.from).abs();
        if len == 0.0 {
            let p = leg.point(leg.from);
            return self.y.contains(p) && self.yh.contains(p);
        }
        let checks = ((len * 2.0 * self.panels_per_unit as f64).ceil() as usize).max(2);
        for k in 0..=checks {
            let t = leg.from + (leg.to - leg.from) * k as f64 / checks as f64;
            let p = leg.point(t);
            if !self.y.contains(p) || !self.yh.contains(p) {
                return false;
            }
        }
        true
    }

    fn integrate_leg(&self, leg: &Leg) -> Result<f64> {
        let span = leg.to - leg.from;
        if span == 0.0 {
            return Ok(0.0);
        }
        // Panels are anchored to the global lattice of multiples of the panel
        // width. Nearby targets then share every interior panel and only the
        // partial end panel moves, so Q varies smoothly under the small
        // endpoint shifts a finite-difference stencil makes.
        let w = 1.0 / self.panels_per_unit as f64;
        let (lo, hi) = if span > 0.0 {
            (leg.from, leg.to)
        } else {
            (leg.to, leg.from)
        };
        let k0 = (lo / w).floor() as i64;
        let k1 = (hi / w).ceil() as i64;
        let mut acc = 0.0;
        for k in k0..k1 {
            let a = (k as f64 * w).max(lo);
            let b = ((k + 1) as f64 * w).min(hi);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for (node, weight) in gauss4() {
                let t = mid + half * node;
                let p = leg.point(t);
                let (qx, qy) = q_gradient(&self.y, &self.yh, p, default_fd_step(p))?;
                let g = if leg.along_x { qx } else { qy };
                acc += half * weight * g;
            }
        }
        Ok(acc * span.signum())
    }

    /// Q as a scalar field. Values integrate from the base point; jets are
    /// assembled from the pair's jets, so all derivative entries are exact
    /// whenever the pair has closed-form jets.
    pub fn field(&self) -> ScalarField2 {
        let for_value = self.clone();
        let for_jet = self.clone();
        let for_domain = self.clone();
        let (yd, hd) = (self.y.domain_fn(), self.yh.domain_fn());
        ScalarField2::from_parts(
            move |p| for_value.eval_checked(p).unwrap_or(f64::NAN),
            move |p| {
                let step = default_fd_step(p);
                let yj = jet3_at(&for_jet.y, p, step);
                let hj = jet3_at(&for_jet.yh, p, step);
                match (yj, hj, for_jet.eval_checked(p)) {
                    (Ok(yj), Ok(hj), Ok(v)) => assemble_q_jet(yj, hj, v),
                    _ => Jet3::constant(f64::NAN),
                }
            },
        )
        .with_domain(move |p| yd(p) && hd(p) && for_domain.path_clear(p))
    }
}

#[derive(Copy, Clone, Debug)]
struct Leg {
    along_x: bool,
    fixed: f64,
    from: f64,
    to: f64,
}

impl Leg {
    fn point(&self, t: f64) -> Point2 {
        if self.along_x {
            Point2::new(t, self.fixed)
        } else {
            Point2::new(self.fixed, t)
        }
    }
}

/// Four-point Gauss–Legendre nodes and weights on [-1, 1].
fn gauss4() -> [(f64, f64); 4] {
    let s65 = (6.0f64 / 5.0).sqrt();
    let inner = (3.0 / 7.0 - 2.0 / 7.0 * s65).sqrt();
    let outer = (3.0 / 7.0 + 2.0 / 7.0 * s65).sqrt();
    let s30 = 30f64.sqrt();
    let wi = (18.0 + s30) / 36.0;
    let wo = (18.0 - s30) / 36.0;
    [(-outer, wo), (-inner, wi), (inner, wi), (outer, wo)]
}

/// Jet of Q from the pair jets and the integrated value. The gradient is
/// algebraic in (Y, Y_h); higher entries differentiate it once and twice.
/// The mixed second derivative uses the x-component of the gradient; for a
/// compatible pair the y-component gives the same value.
fn assemble_q_jet(y: Jet3, h: Jet3, q_val: f64) -> Jet3 {
    Jet3 {
        val: q_val,
        dx: y.val * h.dy - y.dy * h.val,
        dy: y.dx * h.val - y.val * h.dx,
        dxx: y.dx * h.dy + y.val * h.dxy - y.dxy * h.val - y.dy * h.dx,
        dxy: y.val * h.dyy - y.dyy * h.val,
        dyy: y.dxy * h.val + y.dx * h.dy - y.dy * h.dx - y.val * h.dxy,
        dxxx: y.dxx * h.dy + 2.0 * y.dx * h.dxy + y.val * h.dxxy
            - y.dxxy * h.val
            - 2.0 * y.dxy * h.dx
            - y.dy * h.dxx,
        dxxy: y.dx * h.dyy + y.val * h.dxyy - y.dxyy * h.val - y.dyy * h.dx,
        dxyy: y.dy * h.dyy + y.val * h.dyyy - y.dyyy * h.val - y.dyy * h.dy,
        dyyy: y.dxyy * h.val + 2.0 * y.dxy * h.dy + y.dx * h.dyy
            - y.dyy * h.dx
            - 2.0 * y.dy * h.dxy
            - y.val * h.dxyy,
    }
}
