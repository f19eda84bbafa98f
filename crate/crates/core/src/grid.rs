//! Grid functions on a truncated uniform grid `{j h : |j| <= N}` with zero
//! extension outside the window, plus the one-sided and symmetric difference
//! operators and the discrete norms.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spacing `h = 1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Spacing(u32);

impl Spacing {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpacing(f64::INFINITY));
        }
        Ok(Self(n))
    }

    /// Accepts `h` only if `1/h` is (numerically) a positive integer.
    pub fn from_h(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::InvalidSpacing(h));
        }
        let n = (1.0 / h).round();
        if ((1.0 / h) - n).abs() > 1e-9 * n || n > u32::MAX as f64 {
            return Err(Error::InvalidSpacing(h));
        }
        Ok(Self(n as u32))
    }

    pub fn n(self) -> u32 {
        self.0
    }

    pub fn h(self) -> f64 {
        1.0 / self.0 as f64
    }
}

impl TryFrom<u32> for Spacing {
    type Error = Error;
    fn try_from(n: u32) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Spacing> for u32 {
    fn from(s: Spacing) -> u32 {
        s.0
    }
}

/// Grid `x_j = j h`, `|j| <= half_points`, covering `[-R, R]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    spacing: Spacing,
    half_points: usize,
}

impl GridSpec {
    /// `radius` must be a positive multiple of `h`.
    pub fn new(spacing: Spacing, radius: f64) -> Result<Self> {
        let m = radius * spacing.n() as f64;
        let rounded = m.round();
        if !(radius > 0.0) || (m - rounded).abs() > 1e-9 * rounded.max(1.0) || rounded < 1.0 {
            return Err(Error::GridMismatch(format!(
                "window radius {radius} is not a positive multiple of h = 1/{}",
                spacing.n()
            )));
        }
        Ok(Self {
            spacing,
            half_points: rounded as usize,
        })
    }

    pub fn from_half_points(spacing: Spacing, half_points: usize) -> Result<Self> {
        if half_points == 0 {
            return Err(Error::GridMismatch("window must contain at least three points".into()));
        }
        Ok(Self { spacing, half_points })
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn h(&self) -> f64 {
        self.spacing.h()
    }

    pub fn half_points(&self) -> usize {
        self.half_points
    }

    pub fn radius(&self) -> f64 {
        self.half_points as f64 / self.spacing.n() as f64
    }

    /// Always odd.
    pub fn len(&self) -> usize {
        2 * self.half_points + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of storage index `i` (`i = 0` is `x = -R`).
    pub fn x(&self, i: usize) -> f64 {
        (i as i64 - self.half_points as i64) as f64 / self.spacing.n() as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.x(i))
    }

    /// Storage index of grid integer `j`, if inside the window.
    pub fn index_of(&self, j: i64) -> Option<usize> {
        let i = j + self.half_points as i64;
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }

    /// Storage index of the grid point nearest to `x`, if it lies on the grid.
    pub fn index_of_x(&self, x: f64) -> Option<usize> {
        let j = x * self.spacing.n() as f64;
        let r = j.round();
        if (j - r).abs() > 1e-9 {
            return None;
        }
        self.index_of(r as i64)
    }
}

/// Real values on a [`GridSpec`], zero-extended outside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Sampling {
                x: spec.x(i),
                value: values[i],
            });
        }
        Ok(Self { spec, values })
    }

    /// Builds from `f(x_i)` without checking finiteness.
    pub(crate) fn from_fn_unchecked(spec: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: spec.xs().map(f).collect(),
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at storage index `i` shifted by `offset` points; zero outside the window.
    #[inline]
    pub fn shifted(&self, i: usize, offset: i64) -> f64 {
        let j = i as i64 + offset;
        if j < 0 || j as usize >= self.values.len() {
            0.0
        } else {
            self.values[j as usize]
        }
    }

    /// Value at grid integer `j` (x = j h).
    pub fn at(&self, j: i64) -> f64 {
        self.spec.index_of(j).map_or(0.0, |i| self.values[i])
    }

    fn map_indexed(&self, f: impl Fn(usize) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: (0..self.values.len()).map(f).collect(),
        }
    }

    pub(crate) fn check_same_grid(&self, other: &GridSpec) -> Result<()> {
        if &self.spec != other {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.spec, other)));
        }
        Ok(())
    }

    /// `(phi(x + lambda) - phi(x)) / lambda` with `lambda = ±h`.
    pub fn delta_forward(&self, lambda: f64) -> Result<Self> {
        let h = self.spec.h();
        if lambda == 0.0 || !lambda.is_finite() || ((lambda.abs() - h) / h).abs() > 1e-12 {
            return Err(Error::InvalidOffset(lambda));
        }
        let dir = if lambda > 0.0 { 1 } else { -1 };
        Ok(self.map_indexed(|i| (self.shifted(i, dir) - self.values[i]) / lambda))
    }

    /// `(phi(x + h) - phi(x - h)) / (2h)`.
    pub fn delta_sym(&self) -> Self {
        let h = self.spec.h();
        self.map_indexed(|i| (self.shifted(i, 1) - self.shifted(i, -1)) / (2.0 * h))
    }

    /// `delta_{-h} delta_h phi(x + s h)`: the three-point second difference
    /// centred `shift` points away.
    pub fn second_diff_narrow(&self, shift: i64) -> Self {
        let h2 = self.spec.h() * self.spec.h();
        self.map_indexed(|i| {
            (self.shifted(i, shift + 1) - 2.0 * self.shifted(i, shift) + self.shifted(i, shift - 1)) / h2
        })
    }

    /// `delta^h delta^h phi(x) = (phi(x+2h) - 2 phi(x) + phi(x-2h)) / (4h^2)`.
    pub fn second_diff_wide(&self) -> Self {
        let h2 = self.spec.h() * self.spec.h();
        self.map_indexed(|i| (self.shifted(i, 2) - 2.0 * self.values[i] + self.shifted(i, -2)) / (4.0 * h2))
    }

    /// `sqrt(h Σ phi^2)`.
    pub fn norm_l2(&self) -> f64 {
        (self.spec.h() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `h Σ phi psi`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        other.check_same_grid(&self.spec)?;
        Ok(self.spec.h() * self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        other.check_same_grid(&self.spec)?;
        Ok(self.map_indexed(|i| self.values[i] - other.values[i]))
    }

    /// Equality up to a sup-norm tolerance.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.spec == other.spec && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= tol)
    }

    /// CSV with a `# h=..., R=...` header line and columns `x,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# h={}, R={}, n={}",
            self.spec.h(),
            self.spec.radius(),
            self.spec.spacing().n()
        )?;
        writeln!(out, "x,value")?;
        for (x, v) in self.spec.xs().zip(&self.values) {
            writeln!(out, "{x},{v:e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut n = None;
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for line in input.lines() {
            let line = line?;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                for part in meta.split(',') {
                    if let Some(v) = part.trim().strip_prefix("n=") {
                        n = Some(
                            v.parse::<u32>()
                                .map_err(|e| Error::Config(format!("bad n in CSV header: {e}")))?,
                        );
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("x,") {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Config(format!("malformed CSV row: {line}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("malformed CSV row {line}: {e}")))
            };
            xs.push(parse(it.next())?);
            vs.push(parse(it.next())?);
        }
        let n = n.ok_or_else(|| Error::Config("CSV header with n= is missing".into()))?;
        if xs.len() % 2 == 0 {
            return Err(Error::GridMismatch(
                "grid CSV must contain an odd number of points".into(),
            ));
        }
        let spec = GridSpec::from_half_points(Spacing::new(n)?, xs.len() / 2)?;
        for (i, x) in xs.iter().enumerate() {
            if (x - spec.x(i)).abs() > 1e-9 {
                return Err(Error::GridMismatch(format!(
                    "row {i} has x = {x}, expected {}",
                    spec.x(i)
                )));
            }
        }
        Self::from_values(spec, vs)
    }

    /// JSON object `{ "h", "R", "n", "values": [[x, v], ...] }`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "h": self.spec.h(),
            "R": self.spec.radius(),
            "n": self.spec.spacing().n(),
            "values": self.spec.xs().zip(&self.values).map(|(x, v)| [x, *v]).collect::<Vec<_>>(),
        })
    }
}

/// Samples `f` at every grid point; non-finite samples are rejected.
pub fn restrict(f: impl Fn(f64) -> f64, spec: GridSpec) -> Result<GridFunction> {
    let g = GridFunction::from_fn_unchecked(spec, f);
    if let Some(i) = g.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Sampling {
            x: spec.x(i),
            value: g.values[i],
        });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: u32, radius: f64) -> GridSpec {
        GridSpec::new(Spacing::new(n).unwrap(), radius).unwrap()
    }

    fn indicator(spec: GridSpec) -> GridFunction {
        restrict(|x| if x == 0.0 { 1.0 } else { 0.0 }, spec).unwrap()
    }

    #[test]
    fn spacing_accepts_only_unit_fractions() {
        assert_eq!(Spacing::from_h(0.25).unwrap().n(), 4);
        assert!(Spacing::from_h(0.3).is_err());
        assert!(Spacing::from_h(0.0).is_err());
        assert!(Spacing::from_h(2.0).is_err());
        assert!(GridSpec::new(Spacing::new(4).unwrap(), 0.3).is_err());
    }

    #[test]
    fn grid_is_symmetric_and_odd() {
        let g = grid(4, 2.0);
        assert_eq!(g.len(), 17);
        assert_eq!(g.x(0), -2.0);
        assert_eq!(g.x(8), 0.0);
        assert_eq!(g.x(16), 2.0);
        assert_eq!(g.index_of_x(0.75), Some(11));
        assert_eq!(g.index_of_x(0.3), None);
    }

    #[test]
    fn forward_difference_examples() {
        let g = grid(4, 2.0);
        let lin = restrict(|x| x, g).unwrap();
        let d = lin.delta_forward(0.25).unwrap();
        assert!(d.values()[..16].iter().all(|v| (v - 1.0).abs() < 1e-12));
        let c = restrict(|_| 3.0, g).unwrap().delta_forward(-0.25).unwrap();
        assert!(c.values()[1..].iter().all(|v| v.abs() < 1e-12));

        let one = grid(1, 3.0);
        let d = indicator(one).delta_forward(1.0).unwrap();
        assert_eq!(d.at(0), -1.0);
        assert_eq!(d.at(-1), 1.0);
        assert!([-3, -2, 1, 2, 3].iter().all(|&j| d.at(j) == 0.0));
        assert!(matches!(
            indicator(one).delta_forward(0.0),
            Err(Error::InvalidOffset(_))
        ));
        assert!(matches!(
            indicator(one).delta_forward(0.5),
            Err(Error::InvalidOffset(_))
        ));
    }

    #[test]
    fn symmetric_difference_examples() {
        let g = grid(2, 3.0);
        let sq = restrict(|x| x * x, g).unwrap().delta_sym();
        assert_eq!(sq.at(0), 0.0);
        assert!((sq.at(2) - 2.0).abs() < 1e-14);
        let d = indicator(grid(1, 3.0)).delta_sym();
        assert_eq!(d.at(-1), 0.5);
    }

    #[test]
    fn second_difference_examples() {
        let g = grid(1, 6.0);
        let sq = restrict(|x| x * x, g).unwrap();
        for shift in [-2, 0, 3] {
            let d = sq.second_diff_narrow(shift);
            for j in -2..=2 {
                assert!((d.at(j) - 2.0).abs() < 1e-12, "shift {shift} j {j}");
            }
        }
        assert!(
            restrict(|x| 3.0 * x - 1.0, g).unwrap().second_diff_narrow(1).values()[2..10]
                .iter()
                .all(|v| v.abs() < 1e-12)
        );
        assert_eq!(indicator(g).second_diff_narrow(0).at(0), -2.0);

        assert_eq!(sq.second_diff_wide().at(0), 2.0);
        let quartic = restrict(|x| x.powi(4), g).unwrap();
        assert_eq!(quartic.second_diff_wide().at(0), 8.0);
        assert!(restrict(|_| 5.0, g).unwrap().second_diff_wide().values()[2..11]
            .iter()
            .all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn norm_examples() {
        let g = grid(4, 1.0);
        let e = indicator(g);
        assert_eq!(e.norm_l2(), 0.5);
        assert_eq!(e.norm_sup(), 1.0);
        let z = GridFunction::zeros(g);
        assert_eq!((z.norm_l2(), z.norm_sup()), (0.0, 0.0));
        let two = restrict(|x| if x == 0.0 || x == 0.5 { 1.0 } else { 0.0 }, grid(2, 1.0)).unwrap();
        assert_eq!(two.norm_l2(), 1.0);
    }

    #[test]
    fn restrict_rejects_non_finite() {
        let r = restrict(|x| 1.0 / x, grid(2, 1.0));
        assert!(matches!(r, Err(Error::Sampling { x, .. }) if x == 0.0));
    }

    #[test]
    fn zero_function_stays_zero() {
        let z = GridFunction::zeros(grid(8, 1.0));
        assert_eq!(z.delta_forward(0.125).unwrap().norm_sup(), 0.0);
        assert_eq!(z.delta_sym().norm_sup(), 0.0);
        assert_eq!(z.second_diff_narrow(3).norm_sup(), 0.0);
        assert_eq!(z.second_diff_wide().norm_sup(), 0.0);
    }

    #[test]
    fn csv_and_json_forms() {
        let g = restrict(|x| x * x - 0.5, grid(4, 1.0)).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert!(back.approx_eq(&g, 0.0));
        let j = g.to_json();
        assert_eq!(j["n"], 4);
        assert_eq!(j["values"].as_array().unwrap().len(), 9);
    }

    proptest! {
        #[test]
        fn sym_is_mean_of_one_sided(vals in prop::collection::vec(-10.0f64..10.0, 17)) {
            let g = GridFunction::from_values(grid(4, 2.0), vals).unwrap();
            let f = g.delta_forward(0.25).unwrap();
            let b = g.delta_forward(-0.25).unwrap();
            let s = g.delta_sym();
            for i in 0..17 {
                let mean = (f.values()[i] + b.values()[i]) / 2.0;
                prop_assert!((mean - s.values()[i]).abs() <= 1e-12 * (1.0 + mean.abs()));
            }
        }

        #[test]
        fn narrow_second_difference_exact_on_quadratics(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, shift in -3i64..=3) {
            let spec = grid(8, 2.0);
            let q = restrict(|x| a + b * x + c * x * x, spec).unwrap();
            let d = q.second_diff_narrow(shift);
            let n = spec.len() as i64;
            for i in 0..spec.len() {
                let lo = i as i64 + shift - 1;
                let hi = i as i64 + shift + 1;
                if lo >= 0 && hi < n {
                    let v = d.values()[i];
                    prop_assert!((v - 2.0 * c).abs() <= 1e-12 * (1.0 + 2.0 * c.abs()) * 64.0 * 50.0, "{v} vs {}", 2.0*c);
                }
            }
        }

        #[test]
        fn summation_by_parts(vals_a in prop::collection::vec(-1.0f64..1.0, 9), vals_b in prop::collection::vec(-1.0f64..1.0, 9)) {
            // supports sit at least 2h inside the window
            let spec = grid(4, 3.25);
            let place = |v: &Vec<f64>| {
                let mut g = GridFunction::zeros(spec);
                for (k, x) in v.iter().enumerate() {
                    g.values_mut()[4 + k * 2] = *x;
                }
                g
            };
            let (p, q) = (place(&vals_a), place(&vals_b));
            let lhs = p.delta_forward(0.25).unwrap().inner(&q).unwrap();
            let rhs = -p.inner(&q.delta_forward(-0.25).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
