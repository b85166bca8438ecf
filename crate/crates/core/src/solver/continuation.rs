use super::search::{search, SBCSolution, SolverOptions};
use crate::config::SpectrumS;
use crate::error::{Result, SbcError};
use crate::inertia::InertiaTriple;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuationOptions {
    pub solver: SolverOptions,
    /// Smallest parameter step (in the max norm of the weights) before the branch is declared lost.
    pub min_step: f64,
    /// A warm-started solve that moves farther than this (mass norm) has jumped branches.
    pub max_jump: f64,
    /// Bisection on an index change stops once the bracket is this narrow.
    pub bisect_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { solver: SolverOptions::default(), min_step: 1e-8, max_jump: 0.1, bisect_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Degeneracy {
    /// Weights at which the degeneracy was located.
    pub spectrum: SpectrumS,
    pub solution: SBCSolution,
    pub before: InertiaTriple,
    /// Triple on the far side of the crossing, when it was reached.
    pub after: Option<InertiaTriple>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    /// One solution per path entry reached, in path order.
    pub branch: Vec<SBCSolution>,
    /// Set when the branch stopped at a degenerate point.
    pub degeneracy: Option<Degeneracy>,
}

fn weight_distance(a: &SpectrumS, b: &SpectrumS) -> f64 {
    a.weights().iter().zip(b.weights()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Warm-started solve at new weights; `None` if it fails or jumps away.
fn warm_solve(prev: &SBCSolution, s: &SpectrumS, opts: &ContinuationOptions) -> Result<Option<SBCSolution>> {
    let start = prev.config.normalized(s);
    match search(&start, s, &opts.solver)? {
        Ok(q) if q.mass_distance(&start) < opts.max_jump => Ok(Some(SBCSolution::from_config(&q, s, &opts.solver)?)),
        _ => Ok(None),
    }
}

/// Natural-parameter continuation of `sol` along a piecewise-linear path of weights.
///
/// A failed step is halved. When the inertia triple changes between two
/// accepted points the crossing is bisected until a nullity shows up (or the
/// bracket collapses) and the branch stops there.
pub fn continue_in_s(sol: &SBCSolution, path: &[SpectrumS], opts: &ContinuationOptions) -> Result<Continuation> {
    if sol.triple.nullity > 0 {
        return Err(SbcError::InvalidInput(format!("starting solution is degenerate {}", sol.triple)));
    }
    if path.iter().any(|s| s.d() != sol.spectrum.d()) {
        return Err(SbcError::InvalidInput("path weights have the wrong dimension".into()));
    }
    let mut current = sol.clone();
    let mut branch = Vec::with_capacity(path.len());
    for target in path {
        let start = current.spectrum.clone();
        let length = weight_distance(&start, target);
        let (mut done, mut h) = (0.0f64, 1.0f64);
        while done < 1.0 {
            let next = (done + h).min(1.0);
            let s_next = SpectrumS::lerp(&start, target, next)?;
            match warm_solve(&current, &s_next, opts)? {
                Some(new) if new.triple.nullity > 0 => {
                    return Ok(Continuation {
                        branch,
                        degeneracy: Some(Degeneracy {
                            spectrum: s_next,
                            before: current.triple,
                            after: None,
                            solution: new,
                        }),
                    });
                }
                Some(new) if new.triple != current.triple => {
                    let deg = bisect(&start, target, (done, current), (next, new), opts)?;
                    return Ok(Continuation { branch, degeneracy: Some(deg) });
                }
                Some(new) => {
                    current = new;
                    done = next;
                    h = (2.0 * h).min(1.0);
                }
                None => {
                    h *= 0.5;
                    if h * length < opts.min_step {
                        return Err(SbcError::BranchLost { step: h * length });
                    }
                }
            }
        }
        current.spectrum = target.clone();
        branch.push(current.clone());
    }
    Ok(Continuation { branch, degeneracy: None })
}

fn bisect(
    start: &SpectrumS,
    target: &SpectrumS,
    lo: (f64, SBCSolution),
    hi: (f64, SBCSolution),
    opts: &ContinuationOptions,
) -> Result<Degeneracy> {
    let length = weight_distance(start, target);
    let (mut lo, mut hi) = (lo, hi);
    let before = lo.1.triple;
    let after = hi.1.triple;
    while (hi.0 - lo.0) * length > opts.bisect_tol {
        let mid = 0.5 * (lo.0 + hi.0);
        let s_mid = SpectrumS::lerp(start, target, mid)?;
        let Some(sol) = warm_solve(&lo.1, &s_mid, opts)? else {
            return Err(SbcError::BranchLost { step: (hi.0 - lo.0) * length });
        };
        if sol.triple.nullity > 0 {
            return Ok(Degeneracy { spectrum: s_mid, solution: sol, before, after: Some(after) });
        }
        if sol.triple == before {
            lo = (mid, sol);
        } else {
            hi = (mid, sol);
        }
    }
    Ok(Degeneracy { spectrum: hi.1.spectrum.clone(), solution: hi.1, before, after: Some(after) })
}
