//! Deterministic two-stage grid maximizer over the `(A, B)` coefficients.
//!
//! Stage one scans a uniform grid; stage two repeatedly re-grids a window
//! around the incumbent, shrinking it by a constant factor each round.
//! Candidates are evaluated in any order (possibly in parallel) but reduced
//! in lexicographic `(A, B)` order, so results never depend on scheduling.

use serde::{Deserialize, Serialize};

use crate::par::{map_slice, Parallelism};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SearchDomain {
    /// `(A, B) ∈ [0, max]²`
    Box { max: f64 },
    /// `A = 1 − t`, `B = t`, `t ∈ [0, 1]`
    AnnealingLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GreedySettings {
    /// Points per axis of the first-stage grid.
    pub grid: usize,
    /// Points per axis of every refinement grid.
    pub refine_grid: usize,
    pub refine_rounds: usize,
    /// Window shrink factor per refinement round.
    pub shrink: f64,
    pub domain: SearchDomain,
    /// Include the layer's deterministic noise in the objective.
    pub noise_aware: bool,
    pub tie_tolerance: f64,
    pub parallelism: Parallelism,
}

impl Default for GreedySettings {
    fn default() -> Self {
        GreedySettings {
            grid: 21,
            refine_grid: 9,
            refine_rounds: 3,
            shrink: 4.0,
            domain: SearchDomain::Box { max: 1.0 },
            noise_aware: true,
            tie_tolerance: crate::Tolerances::default().tie_tolerance,
            parallelism: Parallelism::Parallel,
        }
    }
}

impl GreedySettings {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::invalid("grid", "need at least 2 points per axis"));
        }
        if self.refine_rounds > 0 && self.refine_grid < 2 {
            return Err(Error::invalid(
                "refine_grid",
                "need at least 2 points per axis",
            ));
        }
        if self.shrink.is_nan() || self.shrink <= 1.0 {
            return Err(Error::invalid("shrink", "must exceed 1"));
        }
        if let SearchDomain::Box { max } = self.domain {
            if !(max > 0.0 && max.is_finite()) {
                return Err(Error::invalid("domain", "box size must be positive"));
            }
        }
        if self.tie_tolerance.is_nan() || self.tie_tolerance < 0.0 {
            return Err(Error::invalid("tie_tolerance", "must be >= 0"));
        }
        Ok(())
    }

    /// The coarse grid only, for exhaustive comparisons.
    pub fn coarse_only(grid: usize) -> Self {
        GreedySettings {
            grid,
            refine_rounds: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub a: f64,
    pub b: f64,
    pub value: f64,
    pub evaluations: usize,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || hi <= lo {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

fn window(center: f64, half: f64, lo: f64, hi: f64) -> (f64, f64) {
    ((center - half).max(lo), (center + half).min(hi))
}

fn candidates(
    domain: SearchDomain,
    n: usize,
    center: Option<(f64, f64)>,
    half: f64,
) -> Vec<(f64, f64)> {
    let mut out = match domain {
        SearchDomain::Box { max } => {
            let (axis_a, axis_b) = match center {
                None => (linspace(0.0, max, n), linspace(0.0, max, n)),
                Some((a, b)) => {
                    let (a0, a1) = window(a, half * max, 0.0, max);
                    let (b0, b1) = window(b, half * max, 0.0, max);
                    (linspace(a0, a1, n), linspace(b0, b1, n))
                }
            };
            axis_a
                .iter()
                .flat_map(|&a| axis_b.iter().map(move |&b| (a, b)))
                .collect::<Vec<_>>()
        }
        SearchDomain::AnnealingLine => {
            // one axis; same number of evaluations as the square grid
            let m = n * n;
            let ts = match center {
                None => linspace(0.0, 1.0, m),
                Some((_, t)) => {
                    let (t0, t1) = window(t, half, 0.0, 1.0);
                    linspace(t0, t1, m)
                }
            };
            ts.into_iter().map(|t| (1.0 - t, t)).collect()
        }
    };
    out.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
    out
}

/// True when `(a, b, v)` should replace the incumbent.
fn beats(cand: (f64, f64, f64), best: (f64, f64, f64), tol: f64) -> bool {
    if cand.2 > best.2 + tol {
        return true;
    }
    (cand.2 - best.2).abs() <= tol && (cand.0, cand.1) < (best.0, best.1)
}

/// Maximizes `objective(A, B)` under `settings`.
pub fn grid_maximize<F>(settings: &GreedySettings, objective: F) -> Result<Optimum>
where
    F: Fn(f64, f64) -> Result<f64> + Sync + Send,
{
    settings.validate()?;
    let mut best: Option<(f64, f64, f64)> = None;
    let mut evaluations = 0;
    let mut half = 0.5;
    for round in 0..=settings.refine_rounds {
        let points = if round == 0 {
            candidates(settings.domain, settings.grid, None, 0.0)
        } else {
            half /= settings.shrink;
            let (a, b, _) = best.expect("first round always sets an incumbent");
            candidates(settings.domain, settings.refine_grid, Some((a, b)), half)
        };
        let values = map_slice(&points, settings.parallelism, |&(a, b)| objective(a, b));
        evaluations += points.len();
        for (&(a, b), v) in points.iter().zip(values) {
            let v = v?;
            let cand = (a, b, v);
            match best {
                None => best = Some(cand),
                Some(inc) if beats(cand, inc, settings.tie_tolerance) => best = Some(cand),
                _ => {}
            }
        }
    }
    let (a, b, value) = best.expect("grid is never empty");
    Ok(Optimum {
        a,
        b,
        value,
        evaluations,
    })
}
