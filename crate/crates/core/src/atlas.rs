//! Greedy coordinate patches from a finite function dictionary.
//!
//! A round searches tuples of dictionary functions by increasing size. The
//! largest size whose independence set meets the uncovered region in enough
//! mass wins; the patch is that set cut down to the points where every
//! dictionary function has a good minimax differential. A superset of a
//! dependent tuple is dependent, so only tuples whose every sub-tuple
//! qualified are tried.

use serde::Serialize;

use crate::differentiation::{
    differential_field, independence_set, CoordinateTuple, DifferentialField, RadiusRule, SeminormScales,
};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::space::{MetricMeasureSpace, PointId, ScaleLadder, ScaleWindow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtlasOptions {
    /// Largest tuple size searched.
    pub max_tuple: usize,
    /// Smallest patch mass, as a fraction of the total.
    pub min_mass: f64,
    /// Stop once uncovered mass is at most this fraction of the total.
    pub slack: f64,
    /// Relative dependence threshold, see `DependenceTester`.
    pub dependence_tol: f64,
    /// Relative differential residual threshold `tol · LIP(f)`.
    pub residual_tol: f64,
    pub radius_rule: RadiusRule,
    /// Dependence window; `None` picks [`finest_window`].
    pub window: Option<ScaleWindow>,
    pub max_rounds: usize,
}

impl Default for AtlasOptions {
    fn default() -> Self {
        AtlasOptions {
            max_tuple: 5,
            min_mass: 0.02,
            slack: 0.05,
            dependence_tol: 0.2,
            residual_tol: 0.25,
            radius_rule: RadiusRule::default(),
            window: None,
            max_rounds: 32,
        }
    }
}

impl AtlasOptions {
    fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        unit("min_mass", self.min_mass)?;
        unit("slack", self.slack)?;
        for (name, v) in [("dependence_tol", self.dependence_tol), ("residual_tol", self.residual_tol)] {
            if !(v > 0.0) {
                return Err(Error::input(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.max_tuple == 0 {
            return Err(Error::input("max_tuple must be at least 1"));
        }
        Ok(())
    }
}

/// The two smallest ladder radii at or above the floor.
pub fn finest_window(ladder: &ScaleLadder) -> Result<ScaleWindow> {
    let up: Vec<f64> = ladder.ascending().into_iter().filter(|&r| r >= ladder.floor).collect();
    match up.as_slice() {
        [] => Err(Error::input("ladder has no radius at or above its floor")),
        [r] => Ok(ScaleWindow { lo: *r, hi: *r }),
        [a, b, ..] => Ok(ScaleWindow { lo: *a, hi: *b }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoordinatePatch {
    /// Sorted point ids.
    pub subset: Vec<PointId>,
    pub mass: f64,
    /// Dictionary indices of the coordinate functions.
    pub coord_indices: Vec<usize>,
    pub coords: Vec<String>,
    pub dimension: usize,
    /// Mass of the tuple's independence set inside the searched region.
    pub independent_mass: f64,
    /// Largest patch mass among the tuples of this dimension.
    pub best_mass: f64,
    /// One field per dictionary function, over the independence set.
    pub differentials: Vec<DifferentialField>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundLog {
    pub round: usize,
    pub region_mass: f64,
    pub tuples_tested: usize,
    pub accepted: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Atlas {
    pub patches: Vec<CoordinatePatch>,
    pub uncovered: Vec<PointId>,
    pub uncovered_mass: f64,
    pub total_mass: f64,
    pub window: Option<ScaleWindow>,
    pub rounds: Vec<RoundLog>,
    /// Set when the loop ended with uncovered mass above the slack.
    pub stall: Option<String>,
}

impl Atlas {
    /// Disjointness and positive mass of every patch.
    pub fn verify(&self, space: &MetricMeasureSpace) -> Result<()> {
        let mut owner = vec![usize::MAX; space.len()];
        for (i, p) in self.patches.iter().enumerate() {
            if !(p.mass > 0.0) {
                return Err(Error::invariant("patch mass > 0", format!("patch {i} has mass {}", p.mass)));
            }
            for &x in &p.subset {
                if owner[x] != usize::MAX {
                    return Err(Error::invariant(
                        "patches disjoint",
                        format!("point {x} in patches {} and {i}", owner[x]),
                    ));
                }
                owner[x] = i;
            }
        }
        Ok(())
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.patches.iter().map(|p| p.dimension).collect()
    }
}

fn subsets_extending(prev: &[Vec<usize>], d: usize) -> Vec<Vec<usize>> {
    // lexicographic in dictionary index; every (k-1)-face must be in `prev`
    let mut out = Vec::new();
    for s in prev {
        let last = *s.last().expect("non-empty tuple");
        for j in (last + 1)..d {
            let mut t = s.clone();
            t.push(j);
            let faces_ok = (0..t.len()).all(|skip| {
                let face: Vec<usize> = t.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                prev.contains(&face)
            });
            if faces_ok {
                out.push(t);
            }
        }
    }
    out
}

struct Search {
    patch: Option<CoordinatePatch>,
    tuples_tested: usize,
}

fn search(
    space: &MetricMeasureSpace,
    dictionary: &[ScalarField],
    region: &[PointId],
    ladder: &ScaleLadder,
    scales: &SeminormScales,
    opts: &AtlasOptions,
) -> Result<Search> {
    let min_mass = opts.min_mass * space.total_mass();
    let d = dictionary.len();
    let mut tested = 0;
    // qualifying tuples per size with their independent points
    let mut levels: Vec<Vec<(Vec<usize>, Vec<PointId>)>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = (0..d).map(|i| vec![i]).collect();
    for _size in 1..=opts.max_tuple.min(d) {
        let mut level = Vec::new();
        for idx in &frontier {
            tested += 1;
            let tuple = CoordinateTuple::new(idx.iter().map(|&i| dictionary[i].clone()).collect())?;
            let ind = independence_set(space, &tuple, scales.clone(), opts.dependence_tol, Some(region))?;
            if space.mass_of(&ind.points) >= min_mass {
                level.push((idx.clone(), ind.points));
            }
        }
        if level.is_empty() {
            break;
        }
        let qualified: Vec<Vec<usize>> = level.iter().map(|(t, _)| t.clone()).collect();
        levels.push(level);
        frontier = subsets_extending(&qualified, d);
        if frontier.is_empty() {
            break;
        }
    }
    // largest size first; fall back when residual filtering leaves too little
    while let Some(level) = levels.pop() {
        let mut patches = Vec::with_capacity(level.len());
        for (idx, ind) in level {
            let patch = build_patch(space, dictionary, &idx, &ind, ladder, opts)?;
            patches.push(patch);
        }
        let best = patches.iter().map(|p| p.mass).fold(0.0, f64::max);
        if best < min_mass {
            continue;
        }
        let chosen = patches
            .into_iter()
            .find(|p| p.mass >= 0.5 * best && p.mass >= min_mass)
            .map(|mut p| {
                p.best_mass = best;
                p
            });
        return Ok(Search {
            patch: chosen,
            tuples_tested: tested,
        });
    }
    Ok(Search {
        patch: None,
        tuples_tested: tested,
    })
}

fn build_patch(
    space: &MetricMeasureSpace,
    dictionary: &[ScalarField],
    idx: &[usize],
    ind: &[PointId],
    ladder: &ScaleLadder,
    opts: &AtlasOptions,
) -> Result<CoordinatePatch> {
    let tuple = CoordinateTuple::new(idx.iter().map(|&i| dictionary[i].clone()).collect())?;
    let mut good = vec![true; space.len()];
    let mut solved = vec![0usize; space.len()];
    let mut differentials = Vec::with_capacity(dictionary.len());
    for f in dictionary {
        let field = differential_field(space, f, &tuple, ind, ladder, opts.radius_rule, opts.residual_tol)?;
        for d in &field.points {
            solved[d.point] += 1;
            if d.residual > field.summary.threshold {
                good[d.point] = false;
            }
        }
        differentials.push(field);
    }
    let mut subset: Vec<PointId> = ind
        .iter()
        .copied()
        .filter(|&x| good[x] && solved[x] == dictionary.len())
        .collect();
    subset.sort_unstable();
    Ok(CoordinatePatch {
        mass: space.mass_of(&subset),
        subset,
        coord_indices: idx.to_vec(),
        coords: tuple.labels(),
        dimension: idx.len(),
        independent_mass: space.mass_of(ind),
        best_mass: 0.0,
        differentials,
    })
}

/// One patch for `region`, or `None` when no tuple qualifies.
pub fn find_patch(
    space: &MetricMeasureSpace,
    dictionary: &[ScalarField],
    region: &[PointId],
    ladder: &ScaleLadder,
    opts: &AtlasOptions,
) -> Result<Option<CoordinatePatch>> {
    opts.validate()?;
    dictionary.iter().try_for_each(|f| f.check_on(space))?;
    if !(space.mass_of(region) > 0.0) {
        return Err(Error::input("patch search region has no mass"));
    }
    let window = match opts.window {
        Some(w) => w,
        None => finest_window(ladder)?,
    };
    let scales = SeminormScales::new(ladder, &window);
    Ok(search(space, dictionary, region, ladder, &scales, opts)?.patch)
}

/// Greedy atlas: patches are taken from the uncovered region until its mass
/// drops to `slack` of the total or no patch qualifies.
pub fn build_structure(
    space: &MetricMeasureSpace,
    dictionary: &[ScalarField],
    ladder: &ScaleLadder,
    opts: &AtlasOptions,
) -> Result<Atlas> {
    opts.validate()?;
    dictionary.iter().try_for_each(|f| f.check_on(space))?;
    let total = space.total_mass();
    let mut uncovered: Vec<PointId> = space.points().collect();
    let mut atlas = Atlas {
        patches: Vec::new(),
        uncovered_mass: total,
        uncovered: Vec::new(),
        total_mass: total,
        window: None,
        rounds: Vec::new(),
        stall: None,
    };
    if dictionary.is_empty() {
        atlas.uncovered = uncovered;
        return Ok(atlas);
    }
    let window = match opts.window {
        Some(w) => w,
        None => finest_window(ladder)?,
    };
    atlas.window = Some(window);
    let scales = SeminormScales::new(ladder, &window);
    for round in 0..opts.max_rounds {
        let region_mass = space.mass_of(&uncovered);
        if region_mass <= opts.slack * total {
            break;
        }
        let found = search(space, dictionary, &uncovered, ladder, &scales, opts)?;
        atlas.rounds.push(RoundLog {
            round,
            region_mass,
            tuples_tested: found.tuples_tested,
            accepted: found.patch.as_ref().map(|p| p.coords.clone()),
        });
        let Some(patch) = found.patch else {
            break;
        };
        let mut taken = vec![false; space.len()];
        for &x in &patch.subset {
            taken[x] = true;
        }
        uncovered.retain(|&x| !taken[x]);
        atlas.patches.push(patch);
    }
    atlas.uncovered_mass = space.mass_of(&uncovered);
    if atlas.uncovered_mass > opts.slack * total {
        atlas.stall = Some(format!(
            "uncovered mass fraction {:.6} exceeds slack {} after {} patches",
            atlas.uncovered_mass / total,
            opts.slack,
            atlas.patches.len()
        ));
    }
    atlas.uncovered = uncovered;
    Ok(atlas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{euclidean_grid, glue};
    use crate::space::LadderParams;

    fn ladder(s: &MetricMeasureSpace) -> ScaleLadder {
        ScaleLadder::for_space(s, &LadderParams::default()).unwrap()
    }

    #[test]
    fn grid_dictionary_gives_one_plane_patch() {
        let s = euclidean_grid(32, 2).unwrap();
        let x = ScalarField::coordinate(&s, 0).unwrap();
        let y = ScalarField::coordinate(&s, 1).unwrap();
        let dict = vec![x.clone(), y.clone(), x.add(&y), ScalarField::distance_to(&s, 0).unwrap()];
        let atlas = build_structure(&s, &dict, &ladder(&s), &AtlasOptions::default()).unwrap();
        atlas.verify(&s).unwrap();
        assert_eq!(atlas.dimensions(), vec![2], "{:?}", atlas.rounds);
        assert_eq!(atlas.patches[0].coord_indices, vec![0, 1]);
        assert!(atlas.patches[0].mass / s.total_mass() >= 0.9, "{}", atlas.patches[0].mass);
    }

    #[test]
    fn segment_gives_line_patch() {
        let s = euclidean_grid(101, 1).unwrap();
        let t = ScalarField::coordinate(&s, 0).unwrap();
        let patch = find_patch(&s, &[t], &s.points().collect::<Vec<_>>(), &ladder(&s), &AtlasOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(patch.dimension, 1);
        assert_eq!(patch.subset.len(), 101);
    }

    #[test]
    fn constants_give_no_patch() {
        let s = euclidean_grid(20, 1).unwrap();
        let c = ScalarField::constant(&s, 2.0);
        let region: Vec<PointId> = s.points().collect();
        assert!(find_patch(&s, std::slice::from_ref(&c), &region, &ladder(&s), &AtlasOptions::default())
            .unwrap()
            .is_none());
        let atlas = build_structure(&s, &[c], &ladder(&s), &AtlasOptions::default()).unwrap();
        assert!(atlas.patches.is_empty() && atlas.stall.is_some());
    }

    #[test]
    fn empty_dictionary_covers_nothing() {
        let s = euclidean_grid(10, 1).unwrap();
        let atlas = build_structure(&s, &[], &ladder(&s), &AtlasOptions::default()).unwrap();
        assert!(atlas.patches.is_empty());
        assert_eq!(atlas.uncovered_mass, s.total_mass());
    }

    #[test]
    fn glued_line_and_plane_give_two_dimensions() {
        let line = euclidean_grid(33, 1).unwrap().scaled(2.0).unwrap();
        let plane = euclidean_grid(17, 2).unwrap();
        let s = glue(&line, &plane, &[(0, 0)]).unwrap();
        assert_eq!(s.step(), Some(1.0 / 16.0));
        let dict: Vec<ScalarField> = (0..3).map(|a| ScalarField::coordinate(&s, a).unwrap()).collect();
        let atlas = build_structure(&s, &dict, &ladder(&s), &AtlasOptions::default()).unwrap();
        atlas.verify(&s).unwrap();
        let mut dims = atlas.dimensions();
        dims.sort_unstable();
        assert_eq!(dims, vec![1, 2], "{:?}", atlas.rounds);
        assert!(atlas.stall.is_none());
    }

    #[test]
    fn face_rule_prunes() {
        let prev = vec![vec![0, 1], vec![0, 2]];
        assert!(subsets_extending(&prev, 3).is_empty());
        let prev = vec![vec![0, 1], vec![0, 2], vec![1, 2]];
        assert_eq!(subsets_extending(&prev, 3), vec![vec![0, 1, 2]]);
    }
}
