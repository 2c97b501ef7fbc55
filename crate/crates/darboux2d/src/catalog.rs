//! Catalog of worked transformation chains. Each entry replays a recorded
//! chain from closed-form seed fields, keeps the machinery outputs, and
//! pairs them with independently written closed forms for cross-checking.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use crate::darboux::{
    new_potential_field, new_solution, radial_b, radial_is_nonsingular, radial_potential_field,
    separable_s, shift_from_b, ShiftFunction,
};
use crate::error::{Error, Result};
use crate::field::{Point2, ScalarField2};
use crate::grid::{GridSpec, DEFAULT_MAGNITUDE_CAP};
use crate::moutard::{
    drift_potential_field, moutard_potential_field, moutard_solution, twofold_potential_field,
    twofold_solution,
};
use crate::nonlocal::{recover_q, NonlocalPotential};
use crate::record::{TransformRecord, TransformStep};

/// State produced by replaying a transformation record.
pub struct ChainOutput {
    /// Potential after the last potential-producing step, if any.
    pub potential: Option<ScalarField2>,
    /// Seed fields plus every named step output.
    pub fields: BTreeMap<String, ScalarField2>,
    /// Most recently recovered nonlocal variable, if any.
    pub last_q: Option<NonlocalPotential>,
}

fn named<'a>(
    fields: &'a BTreeMap<String, ScalarField2>,
    name: &str,
    step: usize,
) -> Result<&'a ScalarField2> {
    fields
        .get(name)
        .ok_or_else(|| Error::Param(format!("step {step}: no field named `{name}` in the chain")))
}

fn current_potential(potential: &Option<ScalarField2>, step: usize) -> Result<ScalarField2> {
    potential
        .clone()
        .ok_or_else(|| Error::Param(format!("step {step}: no potential set yet")))
}

fn current_q(q: &Option<NonlocalPotential>, step: usize) -> Result<NonlocalPotential> {
    q.clone()
        .ok_or_else(|| Error::Param(format!("step {step}: no nonlocal variable recovered yet")))
}

/// Replays `record` against the named seed fields, step by step. The record
/// together with the seeds determines every output, so running the same
/// record twice produces bitwise identical fields.
pub fn execute_record(
    seeds: &BTreeMap<String, ScalarField2>,
    record: &TransformRecord,
) -> Result<ChainOutput> {
    let mut fields = seeds.clone();
    let mut potential: Option<ScalarField2> = None;
    let mut last_q: Option<NonlocalPotential> = None;
    for (i, step) in record.steps.iter().enumerate() {
        match step {
            TransformStep::DriftPotential { h } => {
                potential = Some(drift_potential_field(named(&fields, h, i)?));
            }
            TransformStep::SeedPotential { field } => {
                potential = Some(named(&fields, field, i)?.clone());
            }
            TransformStep::RecoverQ { y, yh, base, additive_constant, panels_per_unit } => {
                last_q = Some(recover_q(
                    named(&fields, y, i)?,
                    named(&fields, yh, i)?,
                    Point2::new(base[0], base[1]),
                    *additive_constant,
                    *panels_per_unit,
                )?);
            }
            TransformStep::ShiftPotential { h, s } => {
                let u = current_potential(&potential, i)?;
                potential = Some(new_potential_field(
                    &u,
                    named(&fields, h, i)?,
                    named(&fields, s, i)?,
                ));
            }
            TransformStep::ShiftSolution { h, s, y, output } => {
                let q = current_q(&last_q, i)?;
                let out = new_solution(
                    named(&fields, y, i)?,
                    &q,
                    named(&fields, h, i)?,
                    named(&fields, s, i)?,
                )?;
                fields.insert(output.clone(), out);
            }
            TransformStep::MoutardPotential { seed } => {
                let u = current_potential(&potential, i)?;
                potential = Some(moutard_potential_field(&u, named(&fields, seed, i)?));
            }
            TransformStep::MoutardSolution { seed, output } => {
                let q = current_q(&last_q, i)?;
                let out = moutard_solution(named(&fields, seed, i)?, &q)?;
                fields.insert(output.clone(), out);
            }
            TransformStep::TwofoldPotential { y1, y2 } => {
                let u = current_potential(&potential, i)?;
                let q = current_q(&last_q, i)?;
                potential = Some(twofold_potential_field(
                    &u,
                    named(&fields, y1, i)?,
                    named(&fields, y2, i)?,
                    &q,
                ));
            }
            TransformStep::TwofoldSolution { y1, output } => {
                let q = current_q(&last_q, i)?;
                let out = twofold_solution(named(&fields, y1, i)?, &q);
                fields.insert(output.clone(), out);
            }
            TransformStep::Normalize { field, factor } => {
                let scaled = named(&fields, field, i)?.scale(*factor);
                fields.insert(field.clone(), scaled);
            }
        }
    }
    Ok(ChainOutput { potential, fields, last_q })
}

/// A worked example: a recorded chain, its executed outputs, and closed-form
/// references written independently of the machinery that produced them.
#[derive(Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    /// Whether the outputs are free of poles for these parameter values.
    pub nonsingular: bool,
    /// Grid on which the entry is sampled and compared by default.
    pub reference_spec: GridSpec,
    /// Probe grid for the shift-constraint certificate, when the chain has
    /// a shift step.
    pub certification_spec: Option<GridSpec>,
    region: Arc<dyn Fn(Point2) -> bool + Send + Sync>,
    /// Final potential produced by the chain.
    pub potential: ScalarField2,
    /// Named solutions produced by the chain.
    pub solutions: Vec<(String, ScalarField2)>,
    /// Closed form for the final potential.
    pub oracle_potential: ScalarField2,
    /// Closed forms for solutions, keyed like `solutions`. Empty when no
    /// printed form is available for the chosen parameters.
    pub oracle_solutions: Vec<(String, ScalarField2)>,
    /// Additional (name, machinery, closed form) comparisons, such as
    /// intermediate potentials and recovered nonlocal variables.
    pub extra_oracle_pairs: Vec<(String, ScalarField2, ScalarField2)>,
    pub record: TransformRecord,
    /// Acceptance bounds keyed by check name.
    pub tolerances: BTreeMap<String, f64>,
    pub seeds: BTreeMap<String, ScalarField2>,
}

impl CatalogEntry {
    /// True when `p` lies in the region the entry is meant to be sampled on.
    pub fn region_contains(&self, p: Point2) -> bool {
        (self.region)(p)
    }

    pub fn region_fn(&self) -> Arc<dyn Fn(Point2) -> bool + Send + Sync> {
        self.region.clone()
    }

    /// Certifies the entry's drift/shift pair on its certification grid.
    /// Entries without a shift step return `None`.
    pub fn certify_shift(&self, tol: f64) -> Option<Result<ShiftFunction>> {
        let spec = self.certification_spec.as_ref()?;
        let h = self.seeds.get("h")?;
        let s = self.seeds.get("s")?;
        Some(ShiftFunction::certify(h, s, spec, tol))
    }

    /// Compares every machinery output that has a closed-form reference,
    /// node by node on `spec` within the entry region. Returns rows of
    /// (name, max abs difference, rms difference); a row with no usable
    /// nodes reports infinities.
    pub fn oracle_delta(&self, spec: &GridSpec) -> Vec<(String, f64, f64)> {
        let mut pairs: Vec<(&str, &ScalarField2, &ScalarField2)> =
            vec![("potential", &self.potential, &self.oracle_potential)];
        for (name, oracle) in &self.oracle_solutions {
            if let Some((_, machine)) = self.solutions.iter().find(|(n, _)| n == name) {
                pairs.push((name, machine, oracle));
            }
        }
        for (name, machine, oracle) in &self.extra_oracle_pairs {
            pairs.push((name, machine, oracle));
        }
        pairs
            .into_iter()
            .map(|(name, machine, oracle)| {
                let (max, rms) = self.delta_on(machine, oracle, spec);
                (name.to_owned(), max, rms)
            })
            .collect()
    }

    fn delta_on(&self, machine: &ScalarField2, oracle: &ScalarField2, spec: &GridSpec) -> (f64, f64) {
        let mut max = 0.0f64;
        let mut sum = 0.0f64;
        let mut n = 0usize;
        for (_, _, p) in spec.nodes() {
            if !((self.region)(p) && machine.contains(p) && oracle.contains(p)) {
                continue;
            }
            let (mv, ov) = (machine.eval(p), oracle.eval(p));
            if !(mv.is_finite() && ov.is_finite()) {
                continue;
            }
            if mv.abs() > DEFAULT_MAGNITUDE_CAP || ov.abs() > DEFAULT_MAGNITUDE_CAP {
                continue;
            }
            let d = (mv - ov).abs();
            max = max.max(d);
            sum += d * d;
            n += 1;
        }
        if n == 0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        (max, (sum / n as f64).sqrt())
    }
}

pub fn catalog_names() -> &'static [&'static str] {
    &["radial", "twofold-radial", "trig"]
}

/// Builds the named entry, reading parameters from `params` and filling in
/// entry defaults for keys that are absent. Unknown names and unknown
/// parameter keys are rejected.
pub fn entry_named(name: &str, params: &BTreeMap<String, f64>) -> Result<CatalogEntry> {
    let mut rest = params.clone();
    let entry = match name {
        "radial" => {
            let c1 = rest.remove("c1").unwrap_or(1.5);
            let c2 = rest.remove("c2").unwrap_or(1.0);
            radial_entry(c1, c2)?
        }
        "twofold-radial" => twofold_radial_entry(rest.remove("C").unwrap_or(0.0))?,
        "trig" => {
            let p = rest.remove("p").unwrap_or(1.0);
            let x0 = rest.remove("x0").unwrap_or(0.0);
            let c = rest.remove("C").unwrap_or(2.5);
            trig_ladder_entry(p, x0, c)?
        }
        other => {
            return Err(Error::Unknown(format!(
                "catalog entry `{other}`; known entries: radial, twofold-radial, trig"
            )))
        }
    };
    if let Some(key) = rest.keys().next() {
        return Err(Error::Param(format!(
            "entry `{name}` does not take a parameter named `{key}`"
        )));
    }
    Ok(entry)
}

/// Chain built on the radial envelope B = −√k (ρ^{c1} − c2)/(ρ^{c1} + c2):
/// zero drift, shift s = −ln|B|, two harmonic seeds x/ρ and y/ρ. Produces
/// the potential −8 c2 c1² ρ^{c1−1}/(ρ^{c1} + c2)² with two solutions.
pub fn radial_entry(c1: f64, c2: f64) -> Result<CatalogEntry> {
    let b = radial_b(c1, c2, 1.0)?;
    let s = shift_from_b(&b);
    let off_origin = |p: Point2| p.x * p.x + p.y * p.y >= 0.25;
    // Verified nodes must be reachable from the base (1, 0) by an axis-parallel
    // path that stays off the excluded disc, which rules out the wedge directly
    // left of the disc.
    let reachable = |p: Point2| {
        p.x * p.x + p.y * p.y >= 0.25
            && (p.y.abs() >= 0.5 || p.x >= (0.25 - p.y * p.y).sqrt())
    };
    let y_first = ScalarField2::analytic(|x, y| {
        let rho = x * x + y * y;
        x / rho
    })
    .with_domain(off_origin);
    let y_second = ScalarField2::analytic(|x, y| {
        let rho = x * x + y * y;
        y / rho
    })
    .with_domain(off_origin);

    let mut seeds = BTreeMap::new();
    seeds.insert("h".to_owned(), ScalarField2::constant(0.0));
    seeds.insert("yh0".to_owned(), ScalarField2::constant(1.0));
    seeds.insert("s".to_owned(), s);
    seeds.insert("y_first".to_owned(), y_first);
    seeds.insert("y_second".to_owned(), y_second);

    let record = TransformRecord::new(vec![
        TransformStep::DriftPotential { h: "h".into() },
        TransformStep::RecoverQ {
            y: "y_first".into(),
            yh: "yh0".into(),
            base: [1.0, 0.0],
            additive_constant: 0.0,
            panels_per_unit: 32,
        },
        TransformStep::ShiftSolution {
            h: "h".into(),
            s: "s".into(),
            y: "y_first".into(),
            output: "solution".into(),
        },
        TransformStep::Normalize { field: "solution".into(), factor: -2.0 },
        TransformStep::RecoverQ {
            y: "y_second".into(),
            yh: "yh0".into(),
            base: [1.0, 0.0],
            additive_constant: 1.0,
            panels_per_unit: 32,
        },
        TransformStep::ShiftSolution {
            h: "h".into(),
            s: "s".into(),
            y: "y_second".into(),
            output: "solution_second".into(),
        },
        TransformStep::Normalize { field: "solution_second".into(), factor: -2.0 },
        TransformStep::ShiftPotential { h: "h".into(), s: "s".into() },
    ]);

    let out = execute_record(&seeds, &record)?;
    let potential = current_potential(&out.potential, record.steps.len())?;
    let solutions = vec![
        ("solution".to_owned(), out.fields["solution"].clone()),
        ("solution_second".to_owned(), out.fields["solution_second"].clone()),
    ];

    let default_params = (c1 - 1.5).abs() < 1e-12 && (c2 - 1.0).abs() < 1e-12;
    let oracle_solutions = if default_params {
        vec![
            ("solution".to_owned(), oracle_y36()),
            ("solution_second".to_owned(), oracle_y37()),
        ]
    } else {
        Vec::new()
    };
    let last_q = current_q(&out.last_q, record.steps.len())?;
    let q_oracle = ScalarField2::analytic(|x, y| {
        let rho = x * x + y * y;
        x / rho
    });
    let extra_oracle_pairs = vec![("pair_variable".to_owned(), last_q.field(), q_oracle)];

    let mut tolerances = BTreeMap::new();
    tolerances.insert("oracle".to_owned(), 1e-7);
    tolerances.insert("certification".to_owned(), 1e-8);
    tolerances.insert("residual".to_owned(), 1e-6);

    Ok(CatalogEntry {
        name: "radial".to_owned(),
        params: BTreeMap::from([("c1".to_owned(), c1), ("c2".to_owned(), c2)]),
        nonsingular: radial_is_nonsingular(c1, c2),
        reference_spec: GridSpec::new(-3.0, 3.0, -3.0, 3.0, 129, 129)?,
        certification_spec: Some(GridSpec::new(1.2, 2.8, 1.2, 2.8, 7, 7)?),
        region: Arc::new(reachable),
        potential,
        solutions,
        oracle_potential: radial_potential_field(c1, c2)?,
        oracle_solutions,
        extra_oracle_pairs,
        record,
        tolerances,
        seeds,
    })
}

/// Twofold chain on top of the radial example with c1 = 3/2, c2 = 1: the two
/// printed solutions serve as the pair, and the free constant `c` enters the
/// recovered pair variable. Nonsingular for c ≥ 0.
pub fn twofold_radial_entry(c: f64) -> Result<CatalogEntry> {
    if !c.is_finite() {
        return Err(Error::Param(format!("twofold constant C must be finite, got {c}")));
    }
    let off_origin = |p: Point2| p.x * p.x + p.y * p.y >= 0.25;
    let reachable = |p: Point2| {
        p.x * p.x + p.y * p.y >= 0.25
            && (p.y.abs() >= 0.5 || p.x >= (0.25 - p.y * p.y).sqrt())
    };
    let mut seeds = BTreeMap::new();
    seeds.insert("u_radial".to_owned(), radial_potential_field(1.5, 1.0)?);
    seeds.insert("y_first".to_owned(), oracle_y36().with_domain(off_origin));
    seeds.insert("y_second".to_owned(), oracle_y37().with_domain(off_origin));

    let record = TransformRecord::new(vec![
        TransformStep::SeedPotential { field: "u_radial".into() },
        TransformStep::RecoverQ {
            y: "y_second".into(),
            yh: "y_first".into(),
            base: [1.0, 0.0],
            additive_constant: 12.5 + c / 2.0,
            panels_per_unit: 32,
        },
        TransformStep::TwofoldPotential { y1: "y_first".into(), y2: "y_second".into() },
        TransformStep::TwofoldSolution { y1: "y_first".into(), output: "solution".into() },
    ]);

    let out = execute_record(&seeds, &record)?;
    let potential = current_potential(&out.potential, record.steps.len())?;
    let solutions = vec![("solution".to_owned(), out.fields["solution"].clone())];
    let last_q = current_q(&out.last_q, record.steps.len())?;
    let extra_oracle_pairs =
        vec![("pair_variable".to_owned(), last_q.field(), oracle_q39(c))];

    let mut tolerances = BTreeMap::new();
    tolerances.insert("oracle".to_owned(), 1e-7);
    tolerances.insert("residual".to_owned(), 1e-6);

    Ok(CatalogEntry {
        name: "twofold-radial".to_owned(),
        params: BTreeMap::from([("C".to_owned(), c)]),
        nonsingular: c >= 0.0,
        reference_spec: GridSpec::new(-3.0, 3.0, -3.0, 3.0, 129, 129)?,
        certification_spec: None,
        region: Arc::new(reachable),
        potential,
        solutions,
        oracle_potential: oracle_u40(c),
        oracle_solutions: vec![("solution".to_owned(), oracle_y41(c))],
        extra_oracle_pairs,
        record,
        tolerances,
        seeds,
    })
}

/// Two-step ladder on the strip 0 < y < π: drift h = −ln sin y, shift
/// s = −2h + ln tanh(p(x − x₀)), then a Moutard step seeded by the first
/// output. Nonsingular for p > 0 and C > 1/p + 1.
pub fn trig_ladder_entry(p: f64, x0: f64, c: f64) -> Result<CatalogEntry> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Param(format!("trig steepness p must be positive, got {p}")));
    }
    if !x0.is_finite() {
        return Err(Error::Param(format!("trig offset x0 must be finite, got {x0}")));
    }
    if !c.is_finite() {
        return Err(Error::Param(format!("trig constant C must be finite, got {c}")));
    }
    let upper_strip = |pt: Point2| pt.y.sin() > 0.0;
    let h = ScalarField2::analytic(|_, y| -y.sin().ln_abs()).with_domain(upper_strip);
    let profile = separable_s(2.0 * p, (2.0 * p * x0).exp(), 0.0)?;
    let s = h.scale(-2.0).add(&profile);
    let yh = ScalarField2::analytic(|_, y| y.sin()).with_domain(upper_strip);
    let y_seed = ScalarField2::analytic(|x, _| x.sin());

    let mut seeds = BTreeMap::new();
    seeds.insert("h".to_owned(), h);
    seeds.insert("s".to_owned(), s);
    seeds.insert("yh".to_owned(), yh);
    seeds.insert("y_seed".to_owned(), y_seed);

    let base = [FRAC_PI_2, FRAC_PI_2];
    let record = TransformRecord::new(vec![
        TransformStep::DriftPotential { h: "h".into() },
        TransformStep::RecoverQ {
            y: "y_seed".into(),
            yh: "yh".into(),
            base,
            additive_constant: c,
            panels_per_unit: 16,
        },
        TransformStep::ShiftSolution {
            h: "h".into(),
            s: "s".into(),
            y: "y_seed".into(),
            output: "step_one".into(),
        },
        TransformStep::Normalize { field: "step_one".into(), factor: -1.0 },
        TransformStep::ShiftPotential { h: "h".into(), s: "s".into() },
        TransformStep::RecoverQ {
            y: "step_one".into(),
            yh: "step_one".into(),
            base,
            additive_constant: 1.0,
            panels_per_unit: 16,
        },
        TransformStep::MoutardPotential { seed: "step_one".into() },
        TransformStep::MoutardSolution { seed: "step_one".into(), output: "solution".into() },
    ]);

    let out = execute_record(&seeds, &record)?;
    let potential = current_potential(&out.potential, record.steps.len())?;
    let solutions = vec![("solution".to_owned(), out.fields["solution"].clone())];

    // Potential after the shift step alone, for comparison against its own
    // closed form.
    let mid = execute_record(&seeds, &TransformRecord::new(record.steps[..5].to_vec()))?;
    let mid_potential = current_potential(&mid.potential, 5)?;
    let last_q = current_q(&out.last_q, record.steps.len())?;
    let extra_oracle_pairs = vec![
        ("intermediate_solution".to_owned(), out.fields["step_one"].clone(), oracle_y47(p, x0, c)),
        ("intermediate_potential".to_owned(), mid_potential, oracle_u46(p, x0)),
        ("pair_variable".to_owned(), last_q.field(), ScalarField2::constant(1.0)),
    ];

    let mut tolerances = BTreeMap::new();
    tolerances.insert("oracle".to_owned(), 1e-5);
    tolerances.insert("certification".to_owned(), 1e-8);
    tolerances.insert("residual".to_owned(), 1e-6);

    Ok(CatalogEntry {
        name: "trig".to_owned(),
        params: BTreeMap::from([
            ("p".to_owned(), p),
            ("x0".to_owned(), x0),
            ("C".to_owned(), c),
        ]),
        nonsingular: c > 1.0 / p + 1.0,
        reference_spec: GridSpec::new(0.5, 2.75, 0.5, 2.75, 65, 65)?,
        certification_spec: Some(GridSpec::new(0.6, 2.7, 0.6, 2.7, 7, 7)?),
        // Finite-difference jets of the chain fields lose accuracy like
        // 1/sin²y toward the strip edge, so the checked region keeps a
        // sin y margin wide enough for the closed-form comparisons.
        region: Arc::new(move |pt: Point2| pt.y.sin() >= 0.15 && pt.x >= x0 + 0.05),
        potential,
        solutions,
        oracle_potential: oracle_u48(p, x0, c),
        oracle_solutions: vec![("solution".to_owned(), oracle_y47(p, x0, c).recip())],
        extra_oracle_pairs,
        record,
        tolerances,
        seeds,
    })
}

/// First printed solution of the radial potential with c1 = 3/2, c2 = 1:
/// −2xy (7ρ^{3/2} + 1)/(ρ² (ρ^{3/2} + 1)).
pub fn oracle_y36() -> ScalarField2 {
    ScalarField2::analytic(|x, y| {
        let rho = x * x + y * y;
        let r3 = rho.powf(1.5);
        let d = r3 + 1.0;
        x * y * (r3 * 7.0 + 1.0) * (-2.0) / (rho * rho * d)
    })
}

/// Second printed solution: (x² − y²)(7ρ^{3/2} + 1)/(ρ² (ρ^{3/2} + 1)).
pub fn oracle_y37() -> ScalarField2 {
    ScalarField2::analytic(|x, y| {
        let rho = x * x + y * y;
        let r3 = rho.powf(1.5);
        let d = r3 + 1.0;
        (x * x - y * y) * (r3 * 7.0 + 1.0) / (rho * rho * d)
    })
}

/// Pair variable of the two printed radial solutions:
/// (49ρ^{3/2} + 1)/(2ρ² (ρ^{3/2} + 1)) + C/2.
pub fn oracle_q39(c: f64) -> ScalarField2 {
    ScalarField2::analytic(move |x, y| {
        let rho = x * x + y * y;
        let r3 = rho.powf(1.5);
        let d = r3 + 1.0;
        (r3 * 49.0 + 1.0) / (rho * rho * d * 2.0) + c * 0.5
    })
}

/// Twofold-transformed radial potential with free constant `c`.
pub fn oracle_u40(c: f64) -> ScalarField2 {
    ScalarField2::analytic(move |x, y| {
        let rho = x * x + y * y;
        let sq = rho.sqrt();
        let r3 = rho.powf(1.5);
        let d = r3 + 1.0;
        let inner = sq * ((rho.powi(3) * 392.0 + r3 * 49.0 + 8.0) * (2.0 * c))
            + (rho.powi(4) * (9.0 * c * c) + 441.0);
        let den = rho * rho * d * c + r3 * 49.0 + 1.0;
        sq * inner * (-2.0) / (den * den)
    })
}

/// Twofold-transformed radial solution −4xy (7ρ^{3/2} + 1)/(Cρ²(ρ^{3/2}+1) + 49ρ^{3/2} + 1).
pub fn oracle_y41(c: f64) -> ScalarField2 {
    ScalarField2::analytic(move |x, y| {
        let rho = x * x + y * y;
        let r3 = rho.powf(1.5);
        let d = r3 + 1.0;
        x * y * (r3 * 7.0 + 1.0) * (-4.0) / (rho * rho * d * c + r3 * 49.0 + 1.0)
    })
}

/// Shift-transformed potential of the trig ladder:
/// −1 + 2/sin²y + 2p²/sinh²(p(x − x₀)).
pub fn oracle_u46(p: f64, x0: f64) -> ScalarField2 {
    ScalarField2::analytic(move |x, y| {
        let sh = ((x - x0) * p).sinh();
        y.sin().powi(-2) * 2.0 + sh.powi(-2) * (2.0 * p * p) + (-1.0)
    })
}

/// First-step solution of the trig ladder:
/// (p(C − cos y cos x) − cos y sin x tanh(p(x − x₀)))/(sin y tanh(p(x − x₀))).
pub fn oracle_y47(p: f64, x0: f64, c: f64) -> ScalarField2 {
    ScalarField2::analytic(move |x, y| {
        let t = ((x - x0) * p).tanh();
        let q = y.cos() * x.cos() * (-1.0) + c;
        (q * p - y.cos() * x.sin() * t) / (y.sin() * t)
    })
}

/// Final potential of the trig ladder after the Moutard step.
pub fn oracle_u48(p: f64, x0: f64, c: f64) -> ScalarField2 {
    ScalarField2::analytic(move |x, y| {
        let t = ((x - x0) * p).tanh();
        let ch = ((x - x0) * p).cosh();
        let cy = y.cos();
        let cx = x.cos();
        let sx = x.sin();
        let q = cx * cy * (-1.0) + c;
        let p2 = p * p;
        let f1 = q * q * (-p2 * (p2 + 1.0)) + cy * cy * (-(p2 + 1.0)) - sx * sx + p2 * c * c;
        let f2 = cx * cy * (-2.0 * p2 * c) + cx * cx * (p2 - 1.0) + cy * cy * (p2 + 1.0) + 1.0;
        let f3 = sx * (cx - cy * c) * (2.0 * p);
        let den = q * p - cy * sx * t;
        (f1 / (ch * ch) + f2 + f3 * t) * 2.0 / (den * den) + (-1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn executor_reports_missing_pieces() {
        let seeds = BTreeMap::new();
        let needs_field = TransformRecord::new(vec![TransformStep::DriftPotential {
            h: "absent".into(),
        }]);
        assert!(matches!(execute_record(&seeds, &needs_field), Err(Error::Param(_))));
        let needs_q = TransformRecord::new(vec![TransformStep::MoutardSolution {
            seed: "absent".into(),
            output: "out".into(),
        }]);
        assert!(matches!(execute_record(&seeds, &needs_q), Err(Error::Param(_))));
    }

    #[test]
    fn radial_chain_reproduces_printed_forms() {
        let entry = radial_entry(1.5, 1.0).unwrap();
        // The machinery potential goes through s = −ln|B| and is masked on
        // the circle B = 0 itself; the closed form is smooth there.
        close(entry.potential.eval(Point2::new(2.0, 0.0)), -4.0 / 9.0, 1e-10);
        close(entry.oracle_potential.eval(Point2::new(1.0, 0.0)), -4.5, 1e-13);
        let (_, solution) = &entry.solutions[0];
        close(solution.eval(Point2::new(1.0, 1.0)), -2.7163883751087757, 1e-9);
        let (_, second) = &entry.solutions[1];
        let p = Point2::new(2.0, 1.0);
        close(second.eval(p), entry.oracle_solutions[1].1.eval(p), 1e-9);
        let (_, q_machine, q_oracle) = &entry.extra_oracle_pairs[0];
        close(q_machine.eval(p), q_oracle.eval(p), 1e-10);
        close(q_oracle.eval(p), 0.4, 1e-15);
    }

    #[test]
    fn radial_oracle_delta_stays_within_tolerance() {
        let entry = radial_entry(1.5, 1.0).unwrap();
        let spec = GridSpec::new(-2.6, 2.6, -2.6, 2.6, 9, 9).unwrap();
        let bound = entry.tolerances["oracle"];
        for (name, max, rms) in entry.oracle_delta(&spec) {
            assert!(max <= bound, "{name}: max {max} > {bound}");
            assert!(rms <= max, "{name}: rms {rms} above max {max}");
        }
    }

    #[test]
    fn twofold_chain_matches_closed_forms() {
        let with_c1 = twofold_radial_entry(1.0).unwrap();
        close(
            with_c1.potential.eval(Point2::new(1.0, 0.0)),
            -2696.0 / 2704.0,
            1e-9,
        );
        let entry = twofold_radial_entry(0.0).unwrap();
        let (_, solution) = &entry.solutions[0];
        close(solution.eval(Point2::new(1.0, 1.0)), -0.595989782733241, 1e-9);
        let p = Point2::new(1.4, 0.3);
        let (_, q_machine, q_oracle) = &entry.extra_oracle_pairs[0];
        close(q_machine.eval(p), q_oracle.eval(p), 1e-10);
    }

    #[test]
    fn trig_chain_matches_closed_forms() {
        let entry = trig_ladder_entry(1.0, 0.0, 2.5).unwrap();
        let probe = Point2::new(1.9, 1.1);
        let (_, step_one, y47) = &entry.extra_oracle_pairs[0];
        close(step_one.eval(probe), y47.eval(probe), 1e-9);
        let (_, mid_u, u46) = &entry.extra_oracle_pairs[1];
        let center = Point2::new(FRAC_PI_2, FRAC_PI_2);
        close(mid_u.eval(center), 1.3776451704374659, 1e-9);
        close(u46.eval(center), 1.3776451704374659, 1e-12);
        close(entry.potential.eval(center), -1.0484892961777469, 1e-5);
        close(entry.oracle_potential.eval(center), -1.0484892961777469, 1e-12);
        let (_, solution) = &entry.solutions[0];
        close(solution.eval(probe), entry.oracle_solutions[0].1.eval(probe), 1e-9);
        let (_, q_machine, _) = &entry.extra_oracle_pairs[2];
        close(q_machine.eval(probe), 1.0, 1e-12);
        close(oracle_y47(1.0, 0.0, 2.0).eval(center), 2.1806628214547365, 1e-12);
    }

    #[test]
    fn entry_lookup_validates_names_and_params() {
        let entry = entry_named("radial", &BTreeMap::new()).unwrap();
        assert_eq!(entry.params["c1"], 1.5);
        assert!(matches!(
            entry_named("nope", &BTreeMap::new()),
            Err(Error::Unknown(_))
        ));
        let bad = BTreeMap::from([("C".to_owned(), 1.0)]);
        assert!(matches!(entry_named("radial", &bad), Err(Error::Param(_))));
    }

    #[test]
    fn replayed_record_is_bitwise_deterministic() {
        let entry = radial_entry(1.5, 1.0).unwrap();
        let again = execute_record(&entry.seeds, &entry.record).unwrap();
        let p = Point2::new(1.7, 0.9);
        assert_eq!(
            entry.potential.eval(p).to_bits(),
            again.potential.unwrap().eval(p).to_bits()
        );
        let q = Point2::new(1.3, 0.8);
        assert_eq!(
            entry.solutions[0].1.eval(q).to_bits(),
            again.fields["solution"].eval(q).to_bits()
        );
    }
}
