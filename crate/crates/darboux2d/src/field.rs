//! Scalar fields on the plane. A field couples a value closure with an
//! optional closed-form jet closure and a domain predicate; derivatives come
//! from the jets when present and from centred finite differences otherwise.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::Jet3;

/// A point in the plane.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

type ValueFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
type JetFn = Arc<dyn Fn(Point2) -> Jet3 + Send + Sync>;
type DomainFn = Arc<dyn Fn(Point2) -> bool + Send + Sync>;

/// Scale factor for [`default_fd_step`].
pub const DEFAULT_FD_SCALE: f64 = 1e-4;

/// Step used by finite-difference fallbacks when the caller has no better
/// choice: 10⁻⁴ · max(1, |x|, |y|).
pub fn default_fd_step(p: Point2) -> f64 {
    DEFAULT_FD_SCALE * p.x.abs().max(p.y.abs()).max(1.0)
}

/// A scalar function of (x, y) with an explicit domain of definition.
///
/// Fields built from [`ScalarField2::analytic`] carry exact jets; fields
/// built from [`ScalarField2::from_values`] are value-only and rely on the
/// finite-difference fallback in [`jet3_at`]. Combinators preserve jets
/// whenever both operands have them.
#[derive(Clone)]
pub struct ScalarField2 {
    value: ValueFn,
    jet: Option<JetFn>,
    domain: DomainFn,
}

impl ScalarField2 {
    /// Field defined by a jet-valued expression of the seeded coordinate
    /// jets; the value evaluator reuses the same expression.
    pub fn analytic<F>(f: F) -> Self
    where
        F: Fn(Jet3, Jet3) -> Jet3 + Send + Sync + 'static,
    {
        let jet: JetFn = Arc::new(move |p: Point2| f(Jet3::x(p.x), Jet3::y(p.y)));
        let for_value = jet.clone();
        Self {
            value: Arc::new(move |p| for_value(p).val),
            jet: Some(jet),
            domain: Arc::new(|_| true),
        }
    }

    /// Value-only field with no closed-form derivatives.
    pub fn from_values<F>(f: F) -> Self
    where
        F: Fn(Point2) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(f),
            jet: None,
            domain: Arc::new(|_| true),
        }
    }

    /// Field assembled from separate value and jet closures. The caller is
    /// responsible for keeping the two consistent.
    pub fn from_parts<V, J>(value: V, jet: J) -> Self
    where
        V: Fn(Point2) -> f64 + Send + Sync + 'static,
        J: Fn(Point2) -> Jet3 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            jet: Some(Arc::new(jet)),
            domain: Arc::new(|_| true),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::analytic(move |_, _| Jet3::constant(c))
    }

    /// Restricts the domain to points satisfying `pred` as well as the
    /// current domain.
    pub fn with_domain<D>(self, pred: D) -> Self
    where
        D: Fn(Point2) -> bool + Send + Sync + 'static,
    {
        let old = self.domain;
        Self {
            value: self.value,
            jet: self.jet,
            domain: Arc::new(move |p| old(p) && pred(p)),
        }
    }

    /// True when the point lies inside the domain of definition.
    pub fn contains(&self, p: Point2) -> bool {
        (self.domain)(p)
    }

    /// Raw value evaluation without a domain check.
    pub fn eval(&self, p: Point2) -> f64 {
        (self.value)(p)
    }

    /// Domain-checked, finiteness-checked value.
    pub fn eval_checked(&self, p: Point2) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::Domain(p));
        }
        let v = self.eval(p);
        if !v.is_finite() {
            return Err(Error::NonFinite(p));
        }
        Ok(v)
    }

    /// True when the field carries closed-form jets.
    pub fn has_jets(&self) -> bool {
        self.jet.is_some()
    }

    pub(crate) fn jet_fn(&self) -> Option<&JetFn> {
        self.jet.as_ref()
    }

    pub(crate) fn domain_fn(&self) -> DomainFn {
        self.domain.clone()
    }

    fn combine(
        &self,
        other: &ScalarField2,
        vf: impl Fn(f64, f64) -> f64 + Send + Sync + Copy + 'static,
        jf: impl Fn(Jet3, Jet3) -> Jet3 + Send + Sync + Copy + 'static,
    ) -> ScalarField2 {
        let (va, vb) = (self.value.clone(), other.value.clone());
        let jet = match (&self.jet, &other.jet) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.clone(), b.clone());
                Some(Arc::new(move |p| jf(a(p), b(p))) as JetFn)
            }
            _ => None,
        };
        let (da, db) = (self.domain.clone(), other.domain.clone());
        ScalarField2 {
            value: Arc::new(move |p| vf(va(p), vb(p))),
            jet,
            domain: Arc::new(move |p| da(p) && db(p)),
        }
    }

    fn map(
        &self,
        vf: impl Fn(f64) -> f64 + Send + Sync + Copy + 'static,
        jf: impl Fn(Jet3) -> Jet3 + Send + Sync + Copy + 'static,
    ) -> ScalarField2 {
        let v = self.value.clone();
        let jet = self.jet.as_ref().map(|j| {
            let j = j.clone();
            Arc::new(move |p| jf(j(p))) as JetFn
        });
        ScalarField2 {
            value: Arc::new(move |p| vf(v(p))),
            jet,
            domain: self.domain.clone(),
        }
    }

    pub fn add(&self, other: &ScalarField2) -> ScalarField2 {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField2) -> ScalarField2 {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField2) -> ScalarField2 {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }

    /// Pointwise quotient. Zeros of the divisor are not removed from the
    /// domain; they surface as non-finite values and are masked downstream.
    pub fn div(&self, other: &ScalarField2) -> ScalarField2 {
        self.combine(other, |a, b| a / b, |a, b| a / b)
    }

    pub fn neg(&self) -> ScalarField2 {
        self.map(|a| -a, |a| -a)
    }

    pub fn scale(&self, c: f64) -> ScalarField2 {
        self.map(move |a| c * a, move |a| a * c)
    }

    pub fn offset(&self, c: f64) -> ScalarField2 {
        self.map(move |a| a + c, move |a| a + c)
    }

    pub fn exp(&self) -> ScalarField2 {
        self.map(|a| a.exp(), |a| a.exp())
    }

    pub fn ln_abs(&self) -> ScalarField2 {
        self.map(|a| a.abs().ln(), |a| a.ln_abs())
    }

    pub fn recip(&self) -> ScalarField2 {
        self.map(|a| 1.0 / a, |a| a.recip())
    }
}

/// Full third-order jet of `f` at `p`: closed-form jets when available,
/// otherwise second-order-accurate finite differences with step `fd_step`.
pub fn jet3_at(f: &ScalarField2, p: Point2, fd_step: f64) -> Result<Jet3> {
    if !f.contains(p) {
        return Err(Error::Domain(p));
    }
    if let Some(j) = f.jet_fn() {
        let jet = j(p);
        if !jet.is_finite() {
            return Err(Error::NonFinite(p));
        }
        return Ok(jet);
    }
    jet3_at_fd(f, p, fd_step)
}

/// Finite-difference jet of `f` at `p`, ignoring closed-form jets. Uses a
/// 13-point stencil; every stencil point must lie inside the domain and
/// evaluate to a finite value.
pub fn jet3_at_fd(f: &ScalarField2, p: Point2, h: f64) -> Result<Jet3> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Param(format!(
            "finite-difference step must be positive and finite, got {h}"
        )));
    }
    if !f.contains(p) {
        return Err(Error::Domain(p));
    }
    let ev = |dx: f64, dy: f64| -> Result<f64> {
        let q = Point2::new(p.x + dx, p.y + dy);
        if !f.contains(q) {
            return Err(Error::Domain(q));
        }
        let v = f.eval(q);
        if !v.is_finite() {
            return Err(Error::NonFinite(q));
        }
        Ok(v)
    };

    let c = ev(0.0, 0.0)?;
    let xp = ev(h, 0.0)?;
    let xm = ev(-h, 0.0)?;
    let xp2 = ev(2.0 * h, 0.0)?;
    let xm2 = ev(-2.0 * h, 0.0)?;
    let yp = ev(0.0, h)?;
    let ym = ev(0.0, -h)?;
    let yp2 = ev(0.0, 2.0 * h)?;
    let ym2 = ev(0.0, -2.0 * h)?;
    let pp = ev(h, h)?;
    let pm = ev(h, -h)?;
    let mp = ev(-h, h)?;
    let mm = ev(-h, -h)?;

    let h2 = h * h;
    let h3 = h2 * h;
    let jet = Jet3 {
        val: c,
        dx: (xp - xm) / (2.0 * h),
        dy: (yp - ym) / (2.0 * h),
        dxx: (xp - 2.0 * c + xm) / h2,
        dxy: (pp - pm - mp + mm) / (4.0 * h2),
        dyy: (yp - 2.0 * c + ym) / h2,
        dxxx: (xp2 - 2.0 * xp + 2.0 * xm - xm2) / (2.0 * h3),
        dxxy: (pp - 2.0 * yp + mp - pm + 2.0 * ym - mm) / (2.0 * h3),
        dxyy: (pp - 2.0 * xp + pm - mp + 2.0 * xm - mm) / (2.0 * h3),
        dyyy: (yp2 - 2.0 * yp + 2.0 * ym - ym2) / (2.0 * h3),
    };
    if !jet.is_finite() {
        return Err(Error::NonFinite(p));
    }
    Ok(jet)
}

/// ∂xx + ∂yy of `f` at `p`, via [`jet3_at`].
pub fn laplacian_at(f: &ScalarField2, p: Point2, fd_step: f64) -> Result<f64> {
    jet3_at(f, p, fd_step).map(|j| j.laplacian())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn analytic_jets_match_hand_derivatives() {
        let f = ScalarField2::analytic(|x, y| x.exp() * y.sin());
        let p = Point2::new(0.3, 1.1);
        let j = jet3_at(&f, p, default_fd_step(p)).unwrap();
        let e = 0.3f64.exp();
        close(j.val, e * 1.1f64.sin(), 1e-15);
        close(j.dy, e * 1.1f64.cos(), 1e-15);
        close(j.dxyy, -e * 1.1f64.sin(), 1e-15);
        close(j.laplacian(), 0.0, 1e-15);
    }

    #[test]
    fn fd_fallback_tracks_exact_jets() {
        let exact = ScalarField2::analytic(|x, y| (x * x + y * y).sqrt().ln_abs());
        let values = ScalarField2::from_values(|p| (p.x * p.x + p.y * p.y).sqrt().ln());
        let p = Point2::new(0.8, -0.6);
        let want = jet3_at(&exact, p, 1e-3).unwrap();
        let got = jet3_at_fd(&values, p, 1e-3).unwrap();
        close(got.val, want.val, 1e-12);
        close(got.dx, want.dx, 1e-6);
        close(got.dxy, want.dxy, 1e-5);
        close(got.dxxx, want.dxxx, 1e-3);
        close(got.dxyy, want.dxyy, 1e-3);
    }

    #[test]
    fn domain_violations_are_reported() {
        let f = ScalarField2::analytic(|x, _| x.recip()).with_domain(|p| p.x > 0.0);
        assert!(matches!(
            jet3_at(&f, Point2::new(-1.0, 0.0), 1e-4),
            Err(Error::Domain(_))
        ));
        // In-domain, but the stencil of a value-only field pokes outside.
        let g = ScalarField2::from_values(|p| p.x.sqrt()).with_domain(|p| p.x >= 0.0);
        assert!(matches!(
            jet3_at(&g, Point2::new(1e-6, 0.0), 1e-4),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn non_finite_values_are_reported() {
        let f = ScalarField2::analytic(|x, _| x.recip());
        assert!(matches!(
            jet3_at(&f, Point2::new(0.0, 0.0), 1e-4),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn combinators_compose_jets_and_domains() {
        let a = ScalarField2::analytic(|x, _| x * x).with_domain(|p| p.x > 0.0);
        let b = ScalarField2::analytic(|_, y| y).with_domain(|p| p.y > 0.0);
        let prod = a.mul(&b);
        assert!(prod.has_jets());
        assert!(prod.contains(Point2::new(1.0, 1.0)));
        assert!(!prod.contains(Point2::new(1.0, -1.0)));
        let j = jet3_at(&prod, Point2::new(2.0, 3.0), 1e-4).unwrap();
        close(j.val, 12.0, 0.0);
        close(j.dxxy, 2.0, 0.0);
    }

    proptest! {
        // Finite differences taken in the truncation-dominated step regime
        // must agree with exact jets on smooth rational expressions.
        #[test]
        fn prop_fd_agrees_with_analytic_jets(
            x in -2.0f64..2.0,
            y in -2.0f64..2.0,
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let (aa, bb) = (a, b);
            let f = ScalarField2::analytic(move |xj, yj| {
                (xj * xj * aa + yj * bb + 0.5) / (xj * xj + yj * yj + 4.0)
            });
            let p = Point2::new(x, y);
            let exact = jet3_at(&f, p, 1e-2).unwrap();
            let fd = jet3_at_fd(&f, p, 1e-2).unwrap();
            let scale = exact.max_abs().max(1.0);
            prop_assert!((fd.val - exact.val).abs() <= 1e-12 * scale);
            prop_assert!((fd.dx - exact.dx).abs() <= 1e-3 * scale);
            prop_assert!((fd.dy - exact.dy).abs() <= 1e-3 * scale);
            prop_assert!((fd.dxx - exact.dxx).abs() <= 1e-2 * scale);
            prop_assert!((fd.dxy - exact.dxy).abs() <= 1e-2 * scale);
            prop_assert!((fd.dxxx - exact.dxxx).abs() <= 0.1 * scale);
            prop_assert!((fd.dxxy - exact.dxxy).abs() <= 0.1 * scale);
            prop_assert!((fd.dyyy - exact.dyyy).abs() <= 0.1 * scale);
        }
    }
}
