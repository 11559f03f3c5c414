//! Real-valued functions sampled on the points of a space.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{MetricMeasureSpace, PointId};

/// One finite value per point, aligned with the space's point order.
/// Serializes as the function file format `{"label": …, "values": […]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub label: String,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        ScalarField {
            label: label.into(),
            values,
        }
    }

    pub fn from_fn(label: impl Into<String>, n: usize, f: impl Fn(PointId) -> f64) -> Self {
        ScalarField::new(label, (0..n).map(f).collect())
    }

    pub fn constant(space: &MetricMeasureSpace, c: f64) -> Self {
        ScalarField::new(format!("const:{c}"), vec![c; space.len()])
    }

    pub fn coordinate(space: &MetricMeasureSpace, axis: usize) -> Result<Self> {
        let coords = space
            .coords()
            .ok_or_else(|| Error::input("space has no coordinates"))?;
        if axis >= coords.dim {
            return Err(Error::input(format!(
                "coordinate axis {axis} out of range (dim {})",
                coords.dim
            )));
        }
        Ok(ScalarField::from_fn(format!("coord:{axis}"), space.len(), |p| {
            coords.point(p)[axis]
        }))
    }

    /// `Σ a_i · coord_i`.
    pub fn linear(space: &MetricMeasureSpace, coeffs: &[f64]) -> Result<Self> {
        let coords = space
            .coords()
            .ok_or_else(|| Error::input("space has no coordinates"))?;
        if coeffs.len() > coords.dim {
            return Err(Error::input(format!(
                "{} coefficients for {}-dimensional coordinates",
                coeffs.len(),
                coords.dim
            )));
        }
        let label = format!(
            "linear:{}",
            coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        Ok(ScalarField::from_fn(label, space.len(), |p| {
            coeffs
                .iter()
                .zip(coords.point(p))
                .map(|(a, x)| a * x)
                .sum()
        }))
    }

    pub fn distance_to(space: &MetricMeasureSpace, z: PointId) -> Result<Self> {
        space.check_point(z)?;
        Ok(ScalarField::from_fn(format!("dist:{z}"), space.len(), |p| {
            space.dist(p, z)
        }))
    }

    /// Random 1-Lipschitz field: random values on a few anchor points,
    /// extended by `f(x) = min_j (v_j + d(x, z_j))` (the smallest 1-Lipschitz
    /// extension dominating the anchor data).
    pub fn random_lipschitz(space: &MetricMeasureSpace, anchors: usize, seed: u64) -> Self {
        let n = space.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = anchors.clamp(1, n.max(1));
        let mut chosen: Vec<PointId> = Vec::with_capacity(k);
        while chosen.len() < k && n > 0 {
            let z = rng.random_range(0..n);
            if !chosen.contains(&z) {
                chosen.push(z);
            }
        }
        let spread = if n > 0 {
            space.points().map(|p| space.dist(chosen[0], p)).fold(0.0, f64::max)
        } else {
            0.0
        };
        let vals: Vec<f64> = chosen.iter().map(|_| rng.random::<f64>() * spread).collect();
        ScalarField::from_fn(format!("random:{seed}"), n, |p| {
            chosen
                .iter()
                .zip(&vals)
                .map(|(&z, &v)| v + space.dist(p, z))
                .fold(f64::INFINITY, f64::min)
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_on(&self, space: &MetricMeasureSpace) -> Result<()> {
        if self.values.len() != space.len() {
            return Err(Error::input(format!(
                "field \"{}\" has {} values for {} points",
                self.label,
                self.values.len(),
                space.len()
            )));
        }
        if let Some(p) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "field \"{}\" is not finite at point {p}",
                self.label
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Self {
        ScalarField::new(
            format!("{c}*({})", self.label),
            self.values.iter().map(|v| c * v).collect(),
        )
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        ScalarField::new(
            format!("({})+({})", self.label, other.label),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        )
    }

    /// `Σ c_i f_i`, accumulated left to right.
    pub fn combination(fields: &[&ScalarField], coeffs: &[f64]) -> Self {
        let n = fields.first().map_or(0, |f| f.len());
        ScalarField::from_fn("combination", n, |p| {
            fields.iter().zip(coeffs).map(|(f, c)| c * f.values[p]).sum()
        })
    }

    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Self {
        ScalarField::new(label, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Parse a field description:
///
/// | form | field |
/// |------|-------|
/// | `const:c` | constant |
/// | `coord:i` | coordinate `i` |
/// | `linear:a,b,…` | `Σ a_i coord_i` |
/// | `quad:i` | `coord_i²` |
/// | `max:i,j` | `max(coord_i, coord_j)` |
/// | `abs:i,c` | `\|coord_i − c\|` |
/// | `dist:p` | distance to point `p` |
/// | `random:seed` | random 1-Lipschitz field (8 anchors) |
/// | `file:path` | function file |
pub fn parse_field(space: &MetricMeasureSpace, spec: &str) -> Result<ScalarField> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = || -> Result<Vec<f64>> {
        arg.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::input(format!("bad number \"{s}\" in field \"{spec}\"")))
            })
            .collect()
    };
    let index = |v: f64| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::input(format!("expected an index in field \"{spec}\"")))
        }
    };
    let coord = |i: usize| ScalarField::coordinate(space, i);
    let field = match kind {
        "const" => {
            let v = nums()?;
            ScalarField::constant(space, *v.first().unwrap_or(&0.0))
        }
        "coord" => coord(index(*nums()?.first().unwrap_or(&0.0))?)?,
        "linear" => ScalarField::linear(space, &nums()?)?,
        "quad" => coord(index(*nums()?.first().unwrap_or(&0.0))?)?.map(spec, |v| v * v),
        "max" => {
            let v = nums()?;
            if v.len() != 2 {
                return Err(Error::input(format!("\"{spec}\" needs two axes")));
            }
            let (a, b) = (coord(index(v[0])?)?, coord(index(v[1])?)?);
            ScalarField::new(
                spec,
                a.values.iter().zip(&b.values).map(|(x, y)| x.max(*y)).collect(),
            )
        }
        "abs" => {
            let v = nums()?;
            if v.len() != 2 {
                return Err(Error::input(format!("\"{spec}\" needs an axis and a center")));
            }
            let c = v[1];
            coord(index(v[0])?)?.map(spec, move |x| (x - c).abs())
        }
        "dist" => ScalarField::distance_to(space, index(*nums()?.first().unwrap_or(&0.0))?)?,
        "random" => {
            let seed = arg
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::input(format!("bad seed in field \"{spec}\"")))?;
            ScalarField::random_lipschitz(space, 8, seed)
        }
        "file" => ScalarField::read_json(Path::new(arg))?,
        _ => return Err(Error::input(format!("unknown field kind \"{kind}\""))),
    };
    let field = ScalarField {
        label: if kind == "file" { field.label } else { spec.to_string() },
        values: field.values,
    };
    field.check_on(space)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::euclidean_grid;

    #[test]
    fn parse_forms() {
        let s = euclidean_grid(5, 2).unwrap();
        let f = parse_field(&s, "linear:3,-1").unwrap();
        // point 7 = (1/4, 2/4)
        assert_eq!(f.values[7], 3.0 * 0.25 - 0.5);
        assert_eq!(f.label, "linear:3,-1");
        assert_eq!(parse_field(&s, "const:2").unwrap().values, vec![2.0; 25]);
        assert_eq!(parse_field(&s, "quad:0").unwrap().values[24], 1.0);
        assert_eq!(parse_field(&s, "max:0,1").unwrap().values[1], 0.25);
        assert_eq!(parse_field(&s, "abs:0,0.5").unwrap().values[0], 0.5);
        assert_eq!(parse_field(&s, "dist:0").unwrap().values[24], 2f64.sqrt());
        assert!(parse_field(&s, "coord:2").is_err());
        assert!(parse_field(&s, "bogus:1").is_err());
        assert!(parse_field(&s, "dist:99").is_err());
    }

    #[test]
    fn random_field_is_one_lipschitz_and_seeded() {
        let s = euclidean_grid(9, 2).unwrap();
        let f = ScalarField::random_lipschitz(&s, 6, 11);
        let g = ScalarField::random_lipschitz(&s, 6, 11);
        assert_eq!(f, g);
        for a in s.points() {
            for b in s.points() {
                if a != b {
                    assert!((f.values[a] - f.values[b]).abs() <= s.dist(a, b) * (1.0 + 1e-12));
                }
            }
        }
    }
}
