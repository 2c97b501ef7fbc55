//! Rectangular evaluation grids: specification, masked sampling of fields,
//! residual norms, and a plain-text CSV interchange format that round-trips
//! bit for bit.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Point2, ScalarField2};

/// Values above this magnitude are masked out during sampling unless the
/// caller overrides the cap.
pub const DEFAULT_MAGNITUDE_CAP: f64 = 1e8;

/// Geometry of a uniform rectangular grid, inclusive of both endpoints.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Validated constructor: finite ordered bounds and at least two nodes
    /// per axis.
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if ![x_min, x_max, y_min, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::Grid("bounds must be finite".into()));
        }
        if !(x_max > x_min && y_max > y_min) {
            return Err(Error::Grid(format!(
                "bounds must be ordered: [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::Grid(format!(
                "need at least 2 nodes per axis, got {nx} x {ny}"
            )));
        }
        Ok(Self { x_min, x_max, y_min, y_max, nx, ny })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    /// Node at column i, row j. Column index runs along x, row index along y.
    pub fn node(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.x_min + i as f64 * self.dx(),
            self.y_min + j as f64 * self.dy(),
        )
    }

    /// Flat index of node (i, j); rows are stored contiguously in x.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid with the same bounds and doubled resolution; every node of the
    /// original grid reappears at even indices of the refined one.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            ..*self
        }
    }

    /// Iterator over (i, j, node) in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, Point2)> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j, self.node(i, j))))
    }
}

/// Field samples on a [`GridSpec`]: one value and one validity flag per node.
/// Masked nodes hold NaN.
#[derive(Clone, Debug)]
pub struct GridData {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl GridData {
    /// Wraps existing storage, checking lengths against the spec.
    pub fn from_parts(spec: GridSpec, values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != spec.len() || mask.len() != spec.len() {
            return Err(Error::Grid(format!(
                "storage length {} / {} does not match {} nodes",
                values.len(),
                mask.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, values, mask })
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn mask_at(&self, i: usize, j: usize) -> bool {
        self.mask[self.spec.index(i, j)]
    }

    /// Number of nodes that carry a valid value.
    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Bitwise equality of specs, masks, and values, treating NaN as equal
    /// to NaN.
    pub fn bits_eq(&self, other: &GridData) -> bool {
        self.spec == other.spec
            && self.mask == other.mask
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Writes the grid as CSV: one metadata header line, then one
    /// `x,y,value,mask` row per node in storage order. Floats are printed
    /// with 17 significant digits so parsing reproduces them exactly.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let s = &self.spec;
        writeln!(
            w,
            "# grid: x_min={} x_max={} y_min={} y_max={} nx={} ny={}",
            s.x_min, s.x_max, s.y_min, s.y_max, s.nx, s.ny
        )?;
        for (i, j, p) in s.nodes() {
            let idx = s.index(i, j);
            let v = self.values[idx];
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{}",
                p.x,
                p.y,
                v,
                u8::from(self.mask[idx])
            )?;
        }
        Ok(())
    }

    /// Parses the format produced by [`GridData::write_csv`].
    pub fn read_csv<R: BufRead>(r: &mut R) -> Result<GridData> {
        let mut header = String::new();
        r.read_line(&mut header)
            .map_err(|e| Error::Grid(format!("read failed: {e}")))?;
        let spec = parse_header(header.trim())?;
        let mut values = Vec::with_capacity(spec.len());
        let mut mask = Vec::with_capacity(spec.len());
        for (line_no, line) in r.lines().enumerate() {
            let line = line.map_err(|e| Error::Grid(format!("read failed: {e}")))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            let mut next = |what: &str| {
                fields
                    .next()
                    .ok_or_else(|| Error::Grid(format!("row {}: missing {what}", line_no + 2)))
            };
            let _x = parse_f64(next("x")?, line_no)?;
            let _y = parse_f64(next("y")?, line_no)?;
            let v = parse_f64(next("value")?, line_no)?;
            let m = next("mask")?;
            let m = match m.trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Grid(format!(
                        "row {}: mask must be 0 or 1, got {other:?}",
                        line_no + 2
                    )))
                }
            };
            values.push(v);
            mask.push(m);
        }
        if values.len() != spec.len() {
            return Err(Error::Grid(format!(
                "expected {} rows, found {}",
                spec.len(),
                values.len()
            )));
        }
        GridData::from_parts(spec, values, mask)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Grid(format!("cannot create {}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .map_err(|e| Error::Grid(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read_csv_file(path: &Path) -> Result<GridData> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Grid(format!("cannot open {}: {e}", path.display())))?;
        let mut r = std::io::BufReader::new(file);
        Self::read_csv(&mut r)
    }
}

fn parse_f64(s: &str, line_no: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Grid(format!("row {}: bad float {s:?}", line_no + 2)))
}

fn parse_header(line: &str) -> Result<GridSpec> {
    let rest = line
        .strip_prefix("# grid:")
        .ok_or_else(|| Error::Grid("missing '# grid:' header line".into()))?;
    let mut x_min = None;
    let mut x_max = None;
    let mut y_min = None;
    let mut y_max = None;
    let mut nx = None;
    let mut ny = None;
    for part in rest.split_whitespace() {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::Grid(format!("bad header entry {part:?}")))?;
        match key {
            "x_min" | "x_max" | "y_min" | "y_max" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::Grid(format!("bad header float {value:?}")))?;
                match key {
                    "x_min" => x_min = Some(v),
                    "x_max" => x_max = Some(v),
                    "y_min" => y_min = Some(v),
                    _ => y_max = Some(v),
                }
            }
            "nx" | "ny" => {
                let v: usize = value
                    .parse()
                    .map_err(|_| Error::Grid(format!("bad header count {value:?}")))?;
                if key == "nx" {
                    nx = Some(v)
                } else {
                    ny = Some(v)
                }
            }
            other => return Err(Error::Grid(format!("unknown header key {other:?}"))),
        }
    }
    match (x_min, x_max, y_min, y_max, nx, ny) {
        (Some(a), Some(b), Some(c), Some(d), Some(nx), Some(ny)) => {
            GridSpec::new(a, b, c, d, nx, ny)
        }
        _ => Err(Error::Grid("incomplete grid header".into())),
    }
}

/// Samples `f` on `spec`. Nodes outside the field domain, with non-finite
/// values, or exceeding `cap` in magnitude are masked out.
pub fn sample(f: &ScalarField2, spec: &GridSpec, cap: f64) -> GridData {
    sample_in_region(f, spec, cap, |_| true)
}

/// Like [`sample`], with an extra region predicate intersected with the
/// field's own domain.
pub fn sample_in_region(
    f: &ScalarField2,
    spec: &GridSpec,
    cap: f64,
    region: impl Fn(Point2) -> bool,
) -> GridData {
    let mut values = vec![f64::NAN; spec.len()];
    let mut mask = vec![false; spec.len()];
    for (i, j, p) in spec.nodes() {
        if !region(p) || !f.contains(p) {
            continue;
        }
        let v = f.eval(p);
        if v.is_finite() && v.abs() <= cap {
            let idx = spec.index(i, j);
            values[idx] = v;
            mask[idx] = true;
        }
    }
    GridData { spec: *spec, values, mask }
}

/// Max-abs and root-mean-square over the valid nodes of `data`.
pub fn residual_norms(data: &GridData) -> Result<(f64, f64)> {
    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut n = 0usize;
    for (v, m) in data.values.iter().zip(&data.mask) {
        if *m {
            max_abs = max_abs.max(v.abs());
            sum_sq += v * v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok((max_abs, (sum_sq / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spec_validation_rejects_bad_geometry() {
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 2, 2).is_ok());
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 3, 3).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.0, 1, 3).is_err());
        assert!(GridSpec::new(0.0, f64::INFINITY, 0.0, 1.0, 3, 3).is_err());
    }

    #[test]
    fn refinement_nests_nodes() {
        let spec = GridSpec::new(-1.0, 1.0, 0.0, 2.0, 5, 3).unwrap();
        let fine = spec.refined();
        assert_eq!(fine.nx, 9);
        assert_eq!(fine.ny, 5);
        for (i, j, p) in spec.nodes() {
            let q = fine.node(2 * i, 2 * j);
            assert!((p.x - q.x).abs() < 1e-12);
            assert!((p.y - q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_masks_domain_and_magnitude() {
        let f = ScalarField2::analytic(|x, _| x.recip()).with_domain(|p| p.x > -0.5);
        let spec = GridSpec::new(-1.0, 1.0, 0.0, 1.0, 5, 2).unwrap();
        let data = sample(&f, &spec, 1.5);
        // x ∈ {-1, -0.5} out of domain, x = 0 non-finite, x = 0.5 over the
        // cap, x = 1 valid.
        assert!(!data.mask_at(0, 0));
        assert!(!data.mask_at(1, 0));
        assert!(!data.mask_at(2, 0));
        assert!(!data.mask_at(3, 0));
        assert!(data.mask_at(4, 0));
        assert!(data.value_at(0, 0).is_nan());
        assert_eq!(data.value_at(4, 0), 1.0);
    }

    #[test]
    fn norms_require_valid_nodes() {
        let spec = GridSpec::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        let empty = GridData::from_parts(spec, vec![f64::NAN; 4], vec![false; 4]).unwrap();
        assert!(matches!(residual_norms(&empty), Err(Error::EmptyMask)));
        let data = GridData::from_parts(spec, vec![1.0, -3.0, 1.0, 1.0], vec![true; 4]).unwrap();
        let (max_abs, rms) = residual_norms(&data).unwrap();
        assert_eq!(max_abs, 3.0);
        assert!((rms - 3.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let f = ScalarField2::analytic(|x, y| (x * y).sin() / (x + 3.0));
        let spec = GridSpec::new(-2.0, 2.5, 0.1, 1.9, 7, 5).unwrap();
        let data = sample_in_region(&f, &spec, 1e8, |p| p.x + p.y < 3.0);
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = GridData::read_csv(&mut buf.as_slice()).unwrap();
        assert!(data.bits_eq(&back));
        // Re-serialization is byte-identical.
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let bad = "# grid: x_min=0 x_max=1 y_min=0 y_max=1 nx=2 ny=2\n0,0,1,2\n";
        assert!(GridData::read_csv(&mut bad.as_bytes()).is_err());
        let short = "# grid: x_min=0 x_max=1 y_min=0 y_max=1 nx=2 ny=2\n0,0,1,1\n";
        assert!(GridData::read_csv(&mut short.as_bytes()).is_err());
        let no_header = "0,0,1,1\n";
        assert!(GridData::read_csv(&mut no_header.as_bytes()).is_err());
    }

    proptest! {
        // Any grid of finite values with an arbitrary mask survives a CSV
        // round trip bit for bit.
        #[test]
        fn prop_csv_round_trip(
            nx in 2usize..6,
            ny in 2usize..5,
            seed in proptest::collection::vec((-1e12f64..1e12, any::<bool>()), 30),
        ) {
            let spec = GridSpec::new(-1.5, 2.25, 0.0, 1.0, nx, ny).unwrap();
            let mut values = Vec::with_capacity(spec.len());
            let mut mask = Vec::with_capacity(spec.len());
            for k in 0..spec.len() {
                let (v, m) = seed[k % seed.len()];
                mask.push(m);
                values.push(if m { v } else { f64::NAN });
            }
            let data = GridData::from_parts(spec, values, mask).unwrap();
            let mut buf = Vec::new();
            data.write_csv(&mut buf).unwrap();
            let back = GridData::read_csv(&mut buf.as_slice()).unwrap();
            prop_assert!(data.bits_eq(&back));
        }
    }
}
