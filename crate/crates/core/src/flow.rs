//! Normalized gradient flow of the potential on the S-sphere and the
//! collinearity angle along it.
//!
//! The field is `q' = (ŜM)⁻¹ ∇U(q) + U(q) q`. It is tangent to `I_S = 1` and
//! `U` is nondecreasing along it, so this is gradient ascent of the
//! restricted potential.

use crate::config::{Configuration, MassVector, SpectrumS};
use crate::error::{Result, SbcError};
use crate::potential::{gradient_unchecked, moment_of_inertia_s, potential_unchecked};
use crate::solver::random_sphere_point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Angle in degrees between the pair line `q_i - q_j` and the first axis.
fn pair_angle(q: &Configuration, i: usize, j: usize) -> f64 {
    let (a, b) = (q.point(i), q.point(j));
    let along = (a[0] - b[0]).abs();
    let across = a[1..].iter().zip(&b[1..]).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    across.atan2(along).to_degrees()
}

fn pair_angles(q: &Configuration) -> impl Iterator<Item = f64> + '_ {
    let n = q.n();
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| pair_angle(q, i, j)))
}

fn min_angle(q: &Configuration) -> f64 {
    pair_angles(q).fold(f64::INFINITY, f64::min)
}

fn max_angle(q: &Configuration) -> f64 {
    pair_angles(q).fold(0.0, f64::max)
}

/// Smallest angle, over all pairs of bodies, between the line through the
/// pair and the first coordinate axis, in degrees within `[0, 90]`.
pub fn collinearity_angle(q: &Configuration) -> Result<f64> {
    if !(2..=3).contains(&q.d()) {
        return Err(SbcError::UnsupportedCase(format!("collinearity angle in dimension {}", q.d())));
    }
    let min_sep = q.min_separation();
    if !(min_sep > 0.0) {
        return Err(SbcError::Collision { min_sep, guard: 0.0 });
    }
    Ok(min_angle(q))
}

/// `(ŜM)⁻¹ ∇U(q) + U(q) q`.
pub fn flow_field(q: &Configuration, s: &SpectrumS) -> Vec<f64> {
    let d = q.d();
    let m = q.masses();
    let u = potential_unchecked(q);
    let mut v = gradient_unchecked(q);
    for (idx, x) in v.iter_mut().enumerate() {
        let (i, k) = (idx / d, idx % d);
        *x = *x / (m[i] * s.get(k)) + u * q.coords()[idx];
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowControls {
    pub atol: f64,
    pub rtol: f64,
    pub initial_step: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Stationary once the S-mass norm of the field drops below this.
    pub converge_tol: f64,
    /// Stop when the minimal pair separation falls below this multiple of the scale.
    pub collision_guard: f64,
    /// Stop once the collinearity angle drops below this many degrees.
    pub angle_stop: Option<f64>,
}

impl Default for FlowControls {
    fn default() -> Self {
        FlowControls {
            atol: 1e-9,
            rtol: 1e-9,
            initial_step: 1e-3,
            min_step: 1e-14,
            max_steps: 2_000_000,
            converge_tol: 1e-10,
            collision_guard: 1e-3,
            angle_stop: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FinalTime,
    Converged,
    /// The next state would have crossed the collision guard; the last sample is the last safe state.
    Collision,
    AngleReached,
    MaxSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrajectory {
    pub spectrum: SpectrumS,
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
    /// Collinearity angle per sample, degrees.
    pub theta: Vec<f64>,
    /// Largest pair angle per sample, degrees.
    pub theta_max: Vec<f64>,
    pub potential: Vec<f64>,
    pub min_sep: Vec<f64>,
    pub stop: StopReason,
}

impl FlowTrajectory {
    pub fn last(&self) -> &Configuration {
        self.states.last().expect("trajectory has at least the initial state")
    }

    fn push(&mut self, t: f64, q: Configuration) {
        self.times.push(t);
        self.theta.push(min_angle(&q));
        self.theta_max.push(max_angle(&q));
        self.potential.push(potential_unchecked(&q));
        self.min_sep.push(q.min_separation());
        self.states.push(q);
    }

    /// One row per sample: `t, q…, theta, U, min_sep`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let q0 = &self.states[0];
        let mut header = vec!["t".to_string()];
        for i in 0..q0.n() {
            for k in 0..q0.d() {
                header.push(format!("q{}_{}", i + 1, k + 1));
            }
        }
        header.extend(["theta", "U", "min_sep"].map(String::from));
        out.write_record(&header)?;
        for (idx, q) in self.states.iter().enumerate() {
            let mut row = vec![self.times[idx].to_string()];
            row.extend(q.coords().iter().map(|x| x.to_string()));
            row.push(self.theta[idx].to_string());
            row.push(self.potential[idx].to_string());
            row.push(self.min_sep[idx].to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn s_norm(q: &Configuration, s: &SpectrumS, v: &[f64]) -> f64 {
    crate::potential::s_inner(q, s, v, v).sqrt()
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

struct Stepper<'a> {
    s: &'a SpectrumS,
    masses: MassVector,
    d: usize,
    guard: f64,
}

impl Stepper<'_> {
    fn field(&self, y: &[f64]) -> Option<Vec<f64>> {
        let q = Configuration::new(self.masses.clone(), self.d, y.to_vec()).ok()?;
        if !(q.min_separation() > self.guard * q.scale()) {
            return None;
        }
        Some(flow_field(&q, self.s))
    }

    /// One trial step; `None` when a stage lands inside the collision guard.
    #[allow(clippy::needless_range_loop)]
    fn attempt(&self, y: &[f64], k1: &[f64], h: f64) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut k: Vec<Vec<f64>> = vec![k1.to_vec()];
        for stage in 1..7 {
            let yi: Vec<f64> =
                (0..y.len()).map(|c| y[c] + h * (0..stage).map(|p| A[stage][p] * k[p][c]).sum::<f64>()).collect();
            k.push(self.field(&yi)?);
        }
        let y5: Vec<f64> = (0..y.len()).map(|c| y[c] + h * (0..7).map(|p| B5[p] * k[p][c]).sum::<f64>()).collect();
        let err: Vec<f64> = (0..y.len()).map(|c| h * (0..7).map(|p| (B5[p] - B4[p]) * k[p][c]).sum::<f64>()).collect();
        Some((y5, err))
    }
}

/// Integrates the flow from `q0` up to time `t_end`, renormalizing onto the
/// sphere after every accepted step and recording each accepted state.
pub fn integrate_flow(
    q0: &Configuration,
    s: &SpectrumS,
    t_end: f64,
    controls: &FlowControls,
) -> Result<FlowTrajectory> {
    if s.d() != q0.d() {
        return Err(SbcError::InvalidInput(format!("weights have dimension {}, configuration {}", s.d(), q0.d())));
    }
    if !(t_end >= 0.0) {
        return Err(SbcError::InvalidInput("final time must be nonnegative".into()));
    }
    let i_s = moment_of_inertia_s(q0, s);
    if (i_s - 1.0).abs() > 1e-9 {
        return Err(SbcError::InvalidInput(format!("start is not on the sphere: I_S = {i_s}")));
    }
    let guard = controls.collision_guard * q0.scale();
    let min_sep = q0.min_separation();
    if !(min_sep > guard) {
        return Err(SbcError::Collision { min_sep, guard });
    }
    let stepper = Stepper { s, masses: q0.masses().clone(), d: q0.d(), guard: controls.collision_guard };
    let mut traj = FlowTrajectory {
        spectrum: s.clone(),
        times: Vec::new(),
        states: Vec::new(),
        theta: Vec::new(),
        theta_max: Vec::new(),
        potential: Vec::new(),
        min_sep: Vec::new(),
        stop: StopReason::FinalTime,
    };
    traj.push(0.0, q0.clone());

    let mut t = 0.0;
    let mut q = q0.clone();
    let mut k1 = flow_field(&q, s);
    let mut h = controls.initial_step.min(t_end.max(f64::MIN_POSITIVE));
    let mut steps = 0;
    loop {
        if controls.angle_stop.is_some_and(|a| min_angle(&q) < a) {
            traj.stop = StopReason::AngleReached;
            break;
        }
        if s_norm(&q, s, &k1) < controls.converge_tol {
            traj.stop = StopReason::Converged;
            break;
        }
        if t >= t_end {
            traj.stop = StopReason::FinalTime;
            break;
        }
        if steps >= controls.max_steps {
            traj.stop = StopReason::MaxSteps;
            break;
        }
        if h < controls.min_step {
            if q.min_separation() < 10.0 * controls.collision_guard * q.scale() {
                traj.stop = StopReason::Collision;
                break;
            }
            return Err(SbcError::StepUnderflow { t });
        }
        let h_try = h.min(t_end - t);
        let Some((y5, err)) = stepper.attempt(q.coords(), &k1, h_try) else {
            h = 0.25 * h_try;
            continue;
        };
        let y = q.coords();
        let norm = (err
            .iter()
            .zip(y.iter().zip(&y5))
            .map(|(e, (a, b))| {
                let sc = controls.atol + controls.rtol * a.abs().max(b.abs());
                (e / sc) * (e / sc)
            })
            .sum::<f64>()
            / y.len() as f64)
            .sqrt();
        if norm <= 1.0 {
            steps += 1;
            t += h_try;
            let next = Configuration::new(q.masses().clone(), q.d(), y5)?.normalized(s);
            if !(next.min_separation() > stepper.guard * next.scale()) {
                traj.stop = StopReason::Collision;
                break;
            }
            q = next;
            k1 = flow_field(&q, s);
            traj.push(t, q.clone());
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h = h_try * factor;
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedStatus {
    AlreadyCollinear,
    OutsideRegion,
    Checked,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOutcome {
    pub index: usize,
    pub theta0: f64,
    pub status: SeedStatus,
    /// Every sampled increment of the angle stayed below the slack.
    pub monotone: bool,
    /// Largest sampled increment of the angle, degrees.
    pub worst_increase: f64,
    /// Same check for the largest pair angle.
    pub max_angle_monotone: bool,
    pub stop: Option<StopReason>,
    pub final_theta: f64,
    pub final_time: f64,
    pub samples: usize,
}

impl SeedOutcome {
    pub fn reached_attractor(&self) -> bool {
        self.stop == Some(StopReason::AngleReached)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Check45Options {
    pub controls: FlowControls,
    pub t_max: f64,
    /// Attractor reached below this angle, degrees.
    pub attractor_angle: f64,
    /// Allowed increase of the angle between samples, degrees.
    pub slack: f64,
}

impl Default for Check45Options {
    fn default() -> Self {
        Check45Options { controls: FlowControls::default(), t_max: 50.0, attractor_angle: 0.1, slack: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lyapunov45Report {
    pub seeds: usize,
    pub checked: usize,
    pub already_collinear: usize,
    pub outside_region: usize,
    pub monotone: usize,
    pub reached_attractor: usize,
    pub collisions: usize,
    pub max_angle_monotone: usize,
    pub outcomes: Vec<SeedOutcome>,
}

impl Lyapunov45Report {
    /// Every checked seed decreased monotonically.
    pub fn all_monotone(&self) -> bool {
        self.monotone == self.checked
    }
}

fn check_seed(index: usize, q: &Configuration, s: &SpectrumS, opts: &Check45Options) -> Result<SeedOutcome> {
    let theta0 = collinearity_angle(q)?;
    let mut out = SeedOutcome {
        index,
        theta0,
        status: SeedStatus::Checked,
        monotone: false,
        worst_increase: 0.0,
        max_angle_monotone: false,
        stop: None,
        final_theta: theta0,
        final_time: 0.0,
        samples: 0,
    };
    if theta0 <= 0.0 {
        out.status = SeedStatus::AlreadyCollinear;
        return Ok(out);
    }
    if theta0 > 45.0 {
        out.status = SeedStatus::OutsideRegion;
        return Ok(out);
    }
    let controls = FlowControls { angle_stop: Some(opts.attractor_angle), ..opts.controls };
    let traj = integrate_flow(q, s, opts.t_max, &controls)?;
    let increase = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    out.worst_increase = increase(&traj.theta);
    out.monotone = traj.theta.len() < 2 || out.worst_increase < opts.slack;
    out.max_angle_monotone = traj.theta_max.len() < 2 || increase(&traj.theta_max) < opts.slack;
    out.stop = Some(traj.stop);
    out.final_theta = *traj.theta.last().unwrap_or(&theta0);
    out.final_time = *traj.times.last().unwrap_or(&0.0);
    out.samples = traj.times.len();
    Ok(out)
}

/// Runs the flow from every seed and checks that the collinearity angle
/// decreases until the attractor angle or a collision stop.
pub fn lyapunov_45_check(seeds: &[Configuration], s: &SpectrumS, opts: &Check45Options) -> Result<Lyapunov45Report> {
    let outcomes: Vec<SeedOutcome> =
        seeds.par_iter().enumerate().map(|(i, q)| check_seed(i, q, s, opts)).collect::<Result<_>>()?;
    let checked: Vec<&SeedOutcome> = outcomes.iter().filter(|o| o.status == SeedStatus::Checked).collect();
    Ok(Lyapunov45Report {
        seeds: seeds.len(),
        checked: checked.len(),
        already_collinear: outcomes.iter().filter(|o| o.status == SeedStatus::AlreadyCollinear).count(),
        outside_region: outcomes.iter().filter(|o| o.status == SeedStatus::OutsideRegion).count(),
        monotone: checked.iter().filter(|o| o.monotone).count(),
        reached_attractor: checked.iter().filter(|o| o.reached_attractor()).count(),
        collisions: checked.iter().filter(|o| o.stop == Some(StopReason::Collision)).count(),
        max_angle_monotone: checked.iter().filter(|o| o.max_angle_monotone).count(),
        outcomes,
    })
}

/// `count` random points of the sphere with collinearity angle in `(0, max_angle]`,
/// drawn by rejection from the same distribution as census restarts.
pub fn seeds_in_cone(
    masses: &MassVector,
    s: &SpectrumS,
    count: usize,
    seed: u64,
    max_angle: f64,
) -> Vec<Configuration> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q = random_sphere_point(masses, s, &mut rng, 1e-3);
        let theta = min_angle(&q);
        if theta > 0.0 && theta <= max_angle {
            out.push(q);
        }
    }
    out
}
