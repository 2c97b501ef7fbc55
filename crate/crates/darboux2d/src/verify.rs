//! Numerical verification of constructed potential/solution pairs: pointwise
//! and grid-based residuals of (Δ − u)Y = 0, Richardson-style convergence
//! orders, first-order Moutard relation checks, and a pole scan for sampled
//! fields.

use crate::error::{Error, Result};
use crate::field::{default_fd_step, jet3_at, Point2, ScalarField2};
use crate::grid::{sample_in_region, GridData, GridSpec, DEFAULT_MAGNITUDE_CAP};
use crate::moutard::ZERO_EPS;

/// Nodes flagged when they exceed this multiple of the median magnitude.
pub const DEFAULT_GROWTH_FACTOR: f64 = 1e4;

/// Acceptable window for the grid convergence order of a residual that is
/// dominated by second-order truncation error.
pub const ORDER_WINDOW: (f64, f64) = (1.7, 2.3);

/// (Δ − u)Y at `p`. Uses analytic jets when the solution carries them and
/// finite differences otherwise.
pub fn schrodinger_residual(y: &ScalarField2, u: &ScalarField2, p: Point2) -> Result<f64> {
    let j = jet3_at(y, p, default_fd_step(p))?;
    let uv = u.eval_checked(p)?;
    Ok(j.laplacian() - uv * j.val)
}

/// Residual of the drift form ΔW + 2 h_x W_x + 2 h_y W_y at `p`; zero for
/// amplitudes W whose product with e^h solves the Schrödinger equation with
/// the drift potential of h.
pub fn fokker_planck_residual(w: &ScalarField2, h: &ScalarField2, p: Point2) -> Result<f64> {
    let step = default_fd_step(p);
    let wj = jet3_at(w, p, step)?;
    let hj = jet3_at(h, p, step)?;
    Ok(wj.laplacian() + 2.0 * hj.dx * wj.dx + 2.0 * hj.dy * wj.dy)
}

/// Largest |(Δ − u)Y| over the in-region nodes of `spec`, together with the
/// number of usable nodes.
pub fn max_schrodinger_residual(
    y: &ScalarField2,
    u: &ScalarField2,
    spec: &GridSpec,
    region: &dyn Fn(Point2) -> bool,
) -> Result<(f64, usize)> {
    let mut worst: f64 = 0.0;
    let mut n = 0usize;
    for (_, _, p) in spec.nodes() {
        if !region(p) {
            continue;
        }
        match schrodinger_residual(y, u, p) {
            Ok(r) if r.is_finite() => {
                worst = worst.max(r.abs());
                n += 1;
            }
            _ => {}
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((worst, n))
}

/// Residual grid of (Δ − u)Y built from sampled values alone, with the
/// 5-point Laplacian on the grid spacing. Border nodes and nodes missing a
/// neighbor are masked out.
pub fn schrodinger_residual_grid(y_data: &GridData, u_data: &GridData) -> Result<GridData> {
    let spec = y_data.spec;
    if u_data.spec != spec {
        return Err(Error::Grid("residual needs both fields on the same grid".into()));
    }
    let (dx2, dy2) = (spec.dx() * spec.dx(), spec.dy() * spec.dy());
    let mut values = vec![f64::NAN; spec.len()];
    let mut mask = vec![false; spec.len()];
    for (i, j, _) in spec.nodes() {
        if i == 0 || j == 0 || i + 1 >= spec.nx || j + 1 >= spec.ny {
            continue;
        }
        let stencil_ok = y_data.mask_at(i, j)
            && y_data.mask_at(i - 1, j)
            && y_data.mask_at(i + 1, j)
            && y_data.mask_at(i, j - 1)
            && y_data.mask_at(i, j + 1)
            && u_data.mask_at(i, j);
        if !stencil_ok {
            continue;
        }
        let c = y_data.value_at(i, j);
        let lap = (y_data.value_at(i + 1, j) - 2.0 * c + y_data.value_at(i - 1, j)) / dx2
            + (y_data.value_at(i, j + 1) - 2.0 * c + y_data.value_at(i, j - 1)) / dy2;
        let idx = spec.index(i, j);
        values[idx] = lap - u_data.value_at(i, j) * c;
        mask[idx] = true;
    }
    GridData::from_parts(spec, values, mask)
}

/// Residual norms on three nested grids and the implied convergence order.
pub struct ConvergenceCheck {
    /// Rms of the residual on the base, once-refined, and twice-refined
    /// grids, all measured over the base nodes common to the three.
    pub rms: [f64; 3],
    /// log₂ of the rms drop across the last refinement; `None` when a level
    /// is exactly zero and no rate can be formed.
    pub order: Option<f64>,
}

/// Samples the pair on `base` and its two dyadic refinements and measures
/// how fast the 5-point residual shrinks. Second-order truncation decay is
/// the signature of a pair that actually solves the equation.
pub fn convergence_order(
    y: &ScalarField2,
    u: &ScalarField2,
    base: &GridSpec,
    region: &dyn Fn(Point2) -> bool,
) -> Result<ConvergenceCheck> {
    let specs = [*base, base.refined(), base.refined().refined()];
    let mut residuals = Vec::with_capacity(3);
    for s in &specs {
        let yd = sample_in_region(y, s, DEFAULT_MAGNITUDE_CAP, region);
        let ud = sample_in_region(u, s, DEFAULT_MAGNITUDE_CAP, region);
        residuals.push(schrodinger_residual_grid(&yd, &ud)?);
    }
    let mut sums = [0.0f64; 3];
    let mut n = 0usize;
    for (i, j, _) in base.nodes() {
        let at = [(i, j), (2 * i, 2 * j), (4 * i, 4 * j)];
        if !(0..3).all(|k| residuals[k].mask_at(at[k].0, at[k].1)) {
            continue;
        }
        for k in 0..3 {
            let v = residuals[k].value_at(at[k].0, at[k].1);
            sums[k] += v * v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let rms = sums.map(|s| (s / n as f64).sqrt());
    let order = if rms[1] > 0.0 && rms[2] > 0.0 {
        Some((rms[1] / rms[2]).log2())
    } else {
        None
    };
    Ok(ConvergenceCheck { rms, order })
}

/// Base grid for a convergence run: roughly quarter resolution of `spec`,
/// floored so the twice-refined grid matches `spec` when it started at
/// 4k + 1 nodes per side.
pub fn coarse_base(spec: &GridSpec) -> Result<GridSpec> {
    let shrink = |n: usize| ((n - 1) / 4 + 1).max(9).min(n);
    GridSpec::new(
        spec.x_min,
        spec.x_max,
        spec.y_min,
        spec.y_max,
        shrink(spec.nx),
        shrink(spec.ny),
    )
}

/// Residuals of the first-order Moutard relations linking seed Y_h, input Y
/// and output Ỹ: ∂x(Y_h Ỹ) + Y_h² ∂y(Y/Y_h) and ∂y(Y_h Ỹ) − Y_h² ∂x(Y/Y_h).
pub fn moutard_relation_residual(
    y: &ScalarField2,
    yh: &ScalarField2,
    y_out: &ScalarField2,
    p: Point2,
) -> Result<(f64, f64)> {
    let step = default_fd_step(p);
    let yj = jet3_at(y, p, step)?;
    let hj = jet3_at(yh, p, step)?;
    let oj = jet3_at(y_out, p, step)?;
    if hj.val.abs() <= ZERO_EPS * hj.dx.abs().max(hj.dy.abs()).max(1.0) {
        return Err(Error::ZeroSeed(p));
    }
    let product_x = hj.dx * oj.val + hj.val * oj.dx;
    let product_y = hj.dy * oj.val + hj.val * oj.dy;
    // Y_h² ∂(Y/Y_h) expands to Y' Y_h − Y Y_h' per direction.
    let ratio_x = yj.dx * hj.val - yj.val * hj.dx;
    let ratio_y = yj.dy * hj.val - yj.val * hj.dy;
    Ok((product_x + ratio_y, product_y - ratio_x))
}

/// Worst Moutard relation residuals over the in-region nodes of `spec`.
pub fn intertwine_check(
    y: &ScalarField2,
    yh: &ScalarField2,
    y_out: &ScalarField2,
    spec: &GridSpec,
    region: &dyn Fn(Point2) -> bool,
) -> Result<(f64, f64)> {
    let mut worst = (0.0f64, 0.0f64);
    let mut n = 0usize;
    for (_, _, p) in spec.nodes() {
        if !region(p) {
            continue;
        }
        match moutard_relation_residual(y, yh, y_out, p) {
            Ok((r1, r2)) if r1.is_finite() && r2.is_finite() => {
                worst.0 = worst.0.max(r1.abs());
                worst.1 = worst.1.max(r2.abs());
                n += 1;
            }
            _ => {}
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(worst)
}

/// Outcome of a pole scan over one sampled field.
pub struct SingularityScan {
    /// Nodes inside the region and field domain that are either masked in
    /// the sample or exceed the growth threshold.
    pub flagged: usize,
    /// Flagged node with the largest magnitude; infinity marks a node whose
    /// sampled value was itself unusable.
    pub worst: Option<(Point2, f64)>,
    pub median_abs: f64,
}

/// Scans sampled values for blow-ups: any in-domain node whose magnitude
/// exceeds `growth_factor` times the median magnitude, or whose sample was
/// masked despite lying in the claimed domain, counts as singular.
pub fn singularity_scan(
    field: &ScalarField2,
    data: &GridData,
    region: &dyn Fn(Point2) -> bool,
    growth_factor: f64,
) -> SingularityScan {
    let spec = data.spec;
    let mut mags: Vec<f64> = Vec::new();
    for (i, j, p) in spec.nodes() {
        if region(p) && field.contains(p) && data.mask_at(i, j) {
            mags.push(data.value_at(i, j).abs());
        }
    }
    mags.sort_by(f64::total_cmp);
    let median_abs = if mags.is_empty() { 0.0 } else { mags[mags.len() / 2] };
    let threshold = growth_factor * median_abs.max(1e-12);
    let mut flagged = 0usize;
    let mut worst: Option<(Point2, f64)> = None;
    for (i, j, p) in spec.nodes() {
        if !(region(p) && field.contains(p)) {
            continue;
        }
        let magnitude = if data.mask_at(i, j) {
            let v = data.value_at(i, j).abs();
            if v <= threshold {
                continue;
            }
            v
        } else {
            f64::INFINITY
        };
        flagged += 1;
        if worst.map_or(true, |(_, w)| magnitude > w) {
            worst = Some((p, magnitude));
        }
    }
    SingularityScan { flagged, worst, median_abs }
}

/// Ordered `key = value` lines accumulated during a verification run.
#[derive(Default)]
pub struct VerifyReport {
    lines: Vec<(String, String)>,
}

impl VerifyReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;

    fn everywhere(_: Point2) -> bool {
        true
    }

    #[test]
    fn separable_sine_pair_converges_at_second_order() {
        let y = ScalarField2::from_values(|p| p.x.sin() * p.y.sin());
        let u = ScalarField2::constant(-2.0);
        let base = GridSpec::new(0.2, 2.8, 0.2, 2.8, 11, 11).unwrap();
        let check = convergence_order(&y, &u, &base, &everywhere).unwrap();
        let order = check.order.unwrap();
        assert!(order > ORDER_WINDOW.0 && order < ORDER_WINDOW.1, "order {order}");
        assert!(check.rms[2] < check.rms[0]);
    }

    #[test]
    fn mismatched_pair_fails_the_order_window() {
        let y = ScalarField2::from_values(|p| p.x.sin() * p.y.sin());
        let u = ScalarField2::constant(0.0);
        let base = GridSpec::new(0.2, 2.8, 0.2, 2.8, 11, 11).unwrap();
        let check = convergence_order(&y, &u, &base, &everywhere).unwrap();
        let order = check.order.unwrap();
        assert!(order < ORDER_WINDOW.0, "order {order} should be near zero");
    }

    #[test]
    fn exactly_zero_residual_has_no_order() {
        // The 5-point stencil annihilates affine functions exactly.
        let y = ScalarField2::from_values(|p| 2.0 * p.x - p.y + 0.5);
        let u = ScalarField2::constant(0.0);
        let base = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 9, 9).unwrap();
        let check = convergence_order(&y, &u, &base, &everywhere).unwrap();
        assert!(check.order.is_none());
        assert_eq!(check.rms[0], 0.0);
    }

    #[test]
    fn pointwise_residual_uses_jets_when_present() {
        let y = ScalarField2::analytic(|x, y| x.cosh() * y.sin());
        let u = ScalarField2::constant(0.0);
        let r = schrodinger_residual(&y, &u, Point2::new(0.7, 1.1)).unwrap();
        assert!(r.abs() < 1e-12, "residual {r}");
        let (max, n) = max_schrodinger_residual(
            &y,
            &u,
            &GridSpec::new(-1.0, 1.0, -1.0, 1.0, 5, 5).unwrap(),
            &everywhere,
        )
        .unwrap();
        assert!(max < 1e-12 && n == 25);
    }

    #[test]
    fn drift_form_residual_vanishes_for_matched_amplitude() {
        let h = ScalarField2::analytic(|x, _| x);
        let w = ScalarField2::analytic(|x, _| (x * (-2.0)).exp());
        let r = fokker_planck_residual(&w, &h, Point2::new(0.3, -0.4)).unwrap();
        assert!(r.abs() < 1e-12, "residual {r}");
    }

    #[test]
    fn moutard_relations_hold_for_a_cosh_pair() {
        // Seed cosh x and input cosh y both solve (Δ − 1)Y = 0; the output
        // −sinh x sinh y / cosh x is their Moutard transform.
        let y = ScalarField2::analytic(|_, y| y.cosh());
        let yh = ScalarField2::analytic(|x, _| x.cosh());
        let out = ScalarField2::analytic(|x, y| x.sinh() * y.sinh() * (-1.0) / x.cosh());
        let spec = GridSpec::new(-1.5, 1.5, -1.5, 1.5, 7, 7).unwrap();
        let (r1, r2) = intertwine_check(&y, &yh, &out, &spec, &everywhere).unwrap();
        assert!(r1 < 1e-10 && r2 < 1e-10, "residuals {r1}, {r2}");
        let wrong = out.scale(1.01);
        let (w1, w2) = intertwine_check(&y, &yh, &wrong, &spec, &everywhere).unwrap();
        assert!(w1 > 1e-3 || w2 > 1e-3);
    }

    #[test]
    fn scan_flags_poles_and_masked_interior_nodes() {
        let clean = ScalarField2::analytic(|x, y| x.sin() + y.cos());
        let spec = GridSpec::new(0.0, 4.0, 0.0, 4.0, 33, 33).unwrap();
        let data = sample(&clean, &spec, DEFAULT_MAGNITUDE_CAP);
        let scan = singularity_scan(&clean, &data, &everywhere, DEFAULT_GROWTH_FACTOR);
        assert_eq!(scan.flagged, 0);

        let pole = ScalarField2::from_values(|p| 1.0 / (p.x - 2.00002));
        let pole_data = sample(&pole, &spec, DEFAULT_MAGNITUDE_CAP);
        let pole_scan = singularity_scan(&pole, &pole_data, &everywhere, DEFAULT_GROWTH_FACTOR);
        assert!(pole_scan.flagged > 0);
        assert!(pole_scan.worst.unwrap().1 > 1e3);

        let gap = ScalarField2::from_values(|p| {
            if (p.x - 2.0).abs() < 0.05 {
                f64::NAN
            } else {
                1.0
            }
        });
        let gap_data = sample(&gap, &spec, DEFAULT_MAGNITUDE_CAP);
        let gap_scan = singularity_scan(&gap, &gap_data, &everywhere, DEFAULT_GROWTH_FACTOR);
        assert!(gap_scan.flagged > 0);
        assert!(gap_scan.worst.unwrap().1.is_infinite());
    }

    #[test]
    fn report_renders_keys_in_order() {
        let mut report = VerifyReport::new();
        report.push("entry", "radial");
        report.push("max_abs", 1.5e-9);
        assert_eq!(report.render(), "entry = radial\nmax_abs = 0.0000000015\n");
        assert_eq!(report.get("entry"), Some("radial"));
    }
}
