use crate::args::{Cli, Command, Format, ProblemArgs, RunConfig};
use crate::error::{CliError, CliResult};
use sbc_core::collinear::{degeneracy_thresholds, enumerate_csbc_with, write_records_csv, CSBCRecord};
use sbc_core::equilibria::{classify_periodicity, lift, newton_residual, Periodicity};
use sbc_core::flow::{integrate_flow, lyapunov_45_check, seeds_in_cone, Check45Options, FlowControls, StopReason};
use sbc_core::morse::{
    a_sequence, betti_quotient, bounds_general, bounds_main1, coefficient_identity_suite, iterated_log_integral,
    morse_inequality_check, poincare_coeffs, xi_coeffs, IdentityReport, Regime,
};
use sbc_core::solver::{
    census_with, continue_in_s, Census, CensusOptions, CensusReport, ContinuationOptions, SBCSolution, SolverOptions,
};
use sbc_core::{ConfigDocument, InertiaTriple, MassVector, SpectrumS, Tolerances};
use serde::Serialize;
use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Where and how the report is written.
pub struct Sink {
    path: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::file(p, e))?)),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn csv(&self, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(self.writer()?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON report, or the CSV table when one was requested.
    fn emit<T: Serialize>(
        &self,
        value: &T,
        table: impl FnOnce() -> (Vec<&'static str>, Vec<Vec<String>>),
    ) -> CliResult<()> {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => {
                let (header, rows) = table();
                self.csv(&header, rows)
            }
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let cfg: RunConfig = read_json(path)?;
    let t = &cfg.tolerances;
    for (name, v) in [("res", t.res), ("null", t.null), ("col", t.col), ("com", t.com)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("tolerance override {name} must be positive, got {v}")));
            }
        }
    }
    Ok(cfg)
}

fn tolerances(cfg: &RunConfig) -> Tolerances {
    let mut t = Tolerances::default();
    let o = &cfg.tolerances;
    t.res = o.res.unwrap_or(t.res);
    t.null = o.null.unwrap_or(t.null);
    t.col = o.col.unwrap_or(t.col);
    t.com = o.com.unwrap_or(t.com);
    t
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions { tol: tolerances(cfg), ..SolverOptions::default() }
}

/// Builds the weights for dimension `d` from a list given on the command line.
pub fn spectrum(d: usize, list: &[f64]) -> CliResult<SpectrumS> {
    let weights = if list.len() == d {
        list.to_vec()
    } else if list.len() + 1 == d {
        list.iter().copied().chain([1.0]).collect()
    } else if list.len() == 1 && d > 2 {
        std::iter::once(list[0]).chain(std::iter::repeat_n(1.0, d - 1)).collect()
    } else {
        return Err(CliError::Usage(format!("{} weights do not fit dimension {d}", list.len())));
    };
    let h1 = SpectrumS::h1(weights.clone()).is_ok();
    Ok(SpectrumS::new(weights, h1)?)
}

struct Problem {
    masses: MassVector,
    spectrum: SpectrumS,
    seed: u64,
    restarts: usize,
}

struct Defaults<'a> {
    n: usize,
    d: usize,
    s: Option<&'a [f64]>,
}

fn resolve(args: &ProblemArgs, cfg: &RunConfig, def: Defaults) -> CliResult<Problem> {
    let n = args.n.or(cfg.n);
    let masses = match args.masses.clone().or_else(|| cfg.masses.clone()) {
        Some(m) => {
            if let Some(n) = n.filter(|&n| n != m.len()) {
                return Err(CliError::Usage(format!("{} masses given for n = {n}", m.len())));
            }
            MassVector::new(m)?
        }
        None => MassVector::equal(n.unwrap_or(def.n))?,
    };
    let s = match args.s.clone().or_else(|| cfg.s_values.clone()) {
        Some(s) => s,
        None => def.s.map(<[f64]>::to_vec).ok_or_else(|| CliError::Usage("weights are required (--s)".into()))?,
    };
    let d = match args.d.or(cfg.d) {
        Some(d) => d,
        None if s.len() > 1 && s.last() == Some(&1.0) => s.len(),
        None if s.len() > 1 => s.len() + 1,
        None => def.d,
    };
    Ok(Problem {
        masses,
        spectrum: spectrum(d, &s)?,
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        restarts: args.restarts.or(cfg.restarts).unwrap_or(1000),
    })
}

fn strings<T: ToString>(v: impl IntoIterator<Item = T>) -> Vec<String> {
    v.into_iter().map(|x| x.to_string()).collect()
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn triple_cells(t: &InertiaTriple) -> [String; 3] {
    [t.index.to_string(), t.nullity.to_string(), t.coindex.to_string()]
}

pub fn run(cli: Cli, cfg: RunConfig) -> CliResult<()> {
    let sink = Sink {
        path: cli.output.clone().or_else(|| cfg.output.path.clone()),
        format: cli.format.or(cfg.output.format).unwrap_or(Format::Json),
    };
    match cli.command {
        Command::Coeffs { n, identities, integral, quad_tol } => coeffs(&sink, n, identities, integral, quad_tol),
        Command::Bounds { n, d, regime } => bounds(&sink, n, d, regime),
        Command::Betti { n } => betti(&sink, n),
        Command::Collinear { problem, thresholds } => collinear(&sink, &cfg, &problem, thresholds),
        Command::Census { problem, saddle_follow, timing } => census(&sink, &cfg, &problem, saddle_follow, timing),
        Command::Continue { census, id, to, steps } => continuation(&sink, &cfg, &census, id, &to, steps),
        Command::Flow { problem, start, t_end, angle_stop } => {
            flow(&sink, &cfg, &problem, start.as_deref(), t_end, angle_stop)
        }
        Command::Check45 { problem, seeds, max_angle, t_max } => {
            check45(&sink, &cfg, &problem, seeds, max_angle, t_max)
        }
        Command::Orbit { census, census_id, problem, t_end, samples, rational_tol, max_den } => {
            orbit(&sink, &cfg, census.as_deref(), census_id, &problem, t_end, samples, rational_tol, max_den)
        }
        Command::MorseCheck { census } => morse_check(&sink, &cfg, &census),
    }
}

#[derive(Serialize)]
struct LogIntegralOut {
    j: usize,
    upper: f64,
    numeric: f64,
    closed_form: f64,
    relative_error: f64,
    evaluations: usize,
    /// Exact value of the recursion coefficient `a_j`.
    a_j: String,
}

#[derive(Serialize)]
struct CoeffsOut {
    n: usize,
    c: Vec<String>,
    sum: String,
    xi: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identities: Option<IdentityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_integral: Option<LogIntegralOut>,
}

fn coeffs(sink: &Sink, n: usize, identities: Option<usize>, integral: Option<usize>, quad_tol: f64) -> CliResult<()> {
    let table = poincare_coeffs(n)?;
    let xi = if n >= 2 { xi_coeffs(n)?.xi } else { Vec::new() };
    let identities = identities.map(coefficient_identity_suite).transpose()?;
    let log_integral = match integral {
        Some(j) => {
            let r = iterated_log_integral(n as f64, j, quad_tol)?;
            Some(LogIntegralOut {
                j,
                upper: n as f64,
                numeric: r.numeric,
                closed_form: r.closed_form,
                relative_error: r.relative_error(),
                evaluations: r.evaluations,
                a_j: a_sequence(j)[j].to_string(),
            })
        }
        None => None,
    };
    let out =
        CoeffsOut { n, c: strings(&table.c), sum: table.sum().to_string(), xi: strings(&xi), identities, log_integral };
    sink.emit(&out, || {
        let rows = (0..n)
            .map(|j| vec![j.to_string(), table.c[j].to_string(), xi.get(j).map(|x| x.to_string()).unwrap_or_default()]);
        (vec!["j", "c", "xi"], rows.collect())
    })
}

fn bounds(sink: &Sink, n: usize, d: Option<usize>, regime: Option<String>) -> CliResult<()> {
    let report = match regime {
        Some(r) => {
            if d.is_some_and(|d| d != 2) {
                return Err(CliError::Usage("--regime applies to the planar case d = 2".into()));
            }
            let regime: Regime = r.parse()?;
            bounds_main1(n, regime)?
        }
        None => bounds_general(n, d.unwrap_or(2))?,
    };
    sink.emit(&report, || {
        let rows = report
            .entries
            .iter()
            .map(|e| vec![e.label.clone(), opt(&e.total), opt(&e.non_collinear), e.hypothetical.to_string()]);
        (vec!["label", "total", "non_collinear", "hypothetical"], rows.collect())
    })
}

fn betti(sink: &Sink, n: usize) -> CliResult<()> {
    let report = betti_quotient(n)?;
    sink.emit(&report, || {
        let rows = report.betti.iter().enumerate().map(|(k, b)| vec![k.to_string(), b.to_string()]);
        (vec!["degree", "betti"], rows.collect())
    })
}

/// One collinear solution; bodies and axes are numbered from 1.
#[derive(Serialize)]
struct CollinearOut {
    ordering: Vec<usize>,
    axis: usize,
    positions: Vec<f64>,
    potential: f64,
    lambda: f64,
    residual_norm: f64,
    eta: Vec<f64>,
    thresholds: Vec<f64>,
    predicted: Option<InertiaTriple>,
    computed: InertiaTriple,
}

impl From<&CSBCRecord> for CollinearOut {
    fn from(r: &CSBCRecord) -> Self {
        CollinearOut {
            ordering: r.ordering.iter().map(|b| b + 1).collect(),
            axis: r.axis + 1,
            positions: (0..r.config.n()).map(|i| r.config.point(i)[r.axis]).collect(),
            potential: r.potential,
            lambda: r.lambda,
            residual_norm: r.residual_norm,
            eta: r.spectral.eta.clone(),
            thresholds: r.spectral.thresholds(),
            predicted: r.predicted,
            computed: r.computed,
        }
    }
}

#[derive(Serialize)]
struct ThresholdOut {
    ordering: Vec<usize>,
    thresholds: Vec<f64>,
}

#[derive(Serialize)]
struct CollinearReport {
    n: usize,
    d: usize,
    masses: Vec<f64>,
    #[serde(rename = "S")]
    s: Vec<f64>,
    count: usize,
    records: Vec<CollinearOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical_weights: Option<Vec<ThresholdOut>>,
}

fn collinear(sink: &Sink, cfg: &RunConfig, args: &ProblemArgs, thresholds: bool) -> CliResult<()> {
    let p = resolve(args, cfg, Defaults { n: 3, d: 2, s: None })?;
    let records = enumerate_csbc_with(&p.masses, &p.spectrum, &tolerances(cfg))?;
    if sink.format == Format::Csv {
        write_records_csv(&records, sink.writer()?)?;
        return Ok(());
    }
    let critical_weights = if thresholds {
        let t = degeneracy_thresholds(&p.masses)?;
        let rows = t
            .per_ordering
            .into_iter()
            .map(|o| ThresholdOut { ordering: o.ordering.iter().map(|b| b + 1).collect(), thresholds: o.thresholds });
        Some(rows.collect())
    } else {
        None
    };
    sink.json(&CollinearReport {
        n: p.masses.n(),
        d: p.spectrum.d(),
        masses: p.masses.as_slice().to_vec(),
        s: p.spectrum.weights().to_vec(),
        count: records.len(),
        records: records.iter().map(CollinearOut::from).collect(),
        critical_weights,
    })
}

fn census_rows(report: &CensusReport) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = report.solutions.iter().map(|s| {
        let mut row = vec![s.id.to_string(), s.classification.label()];
        row.extend(triple_cells(&s.triple));
        row.extend([s.lambda.to_string(), s.potential.to_string(), s.is_cc.to_string()]);
        row
    });
    (vec!["id", "classification", "index", "nullity", "coindex", "lambda", "U", "is_cc"], rows.collect())
}

fn run_census(p: &Problem, opts: &CensusOptions) -> CliResult<Census> {
    if p.restarts == 0 {
        return Err(CliError::Usage("restarts must be positive".into()));
    }
    Ok(census_with(&p.masses, &p.spectrum, p.restarts, p.seed, opts)?)
}

fn census(sink: &Sink, cfg: &RunConfig, args: &ProblemArgs, saddle_follow: bool, timing: bool) -> CliResult<()> {
    let p = resolve(args, cfg, Defaults { n: 3, d: 2, s: None })?;
    let opts = CensusOptions { solver: solver_options(cfg), saddle_follow, ..CensusOptions::default() };
    let clock = Instant::now();
    let c = run_census(&p, &opts)?;
    let mut report = c.report();
    if timing {
        report.wall_clock_seconds = Some(clock.elapsed().as_secs_f64());
    }
    sink.emit(&report, || census_rows(&report))
}

fn load_census(path: &Path, cfg: &RunConfig) -> CliResult<Census> {
    let report: CensusReport = read_json(path)?;
    Ok(report.into_census(&solver_options(cfg))?)
}

fn pick(census: &Census, id: usize) -> CliResult<&SBCSolution> {
    census
        .solutions
        .get(id)
        .ok_or_else(|| CliError::Usage(format!("census has {} solutions, no id {id}", census.solutions.len())))
}

#[derive(Serialize)]
struct BranchPoint {
    #[serde(rename = "S")]
    s: Vec<f64>,
    q: Vec<Vec<f64>>,
    lambda: f64,
    potential: f64,
    triple: InertiaTriple,
    classification: String,
}

impl From<&SBCSolution> for BranchPoint {
    fn from(s: &SBCSolution) -> Self {
        BranchPoint {
            s: s.spectrum.weights().to_vec(),
            q: s.config.rows(),
            lambda: s.lambda,
            potential: s.potential,
            triple: s.triple,
            classification: s.classification.label(),
        }
    }
}

#[derive(Serialize)]
struct DegeneracyOut {
    #[serde(rename = "S")]
    s: Vec<f64>,
    before: InertiaTriple,
    at: InertiaTriple,
    after: Option<InertiaTriple>,
    q: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ContinuationOut {
    id: usize,
    steps: usize,
    branch: Vec<BranchPoint>,
    degeneracy: Option<DegeneracyOut>,
}

fn continuation(sink: &Sink, cfg: &RunConfig, path: &Path, id: usize, to: &[f64], steps: usize) -> CliResult<()> {
    if steps == 0 {
        return Err(CliError::Usage("steps must be positive".into()));
    }
    let census = load_census(path, cfg)?;
    let start = pick(&census, id)?;
    let target = spectrum(start.spectrum.d(), to)?;
    let path: Vec<SpectrumS> = (1..=steps)
        .map(|k| SpectrumS::lerp(&start.spectrum, &target, k as f64 / steps as f64))
        .collect::<Result<_, _>>()?;
    let opts = ContinuationOptions { solver: solver_options(cfg), ..ContinuationOptions::default() };
    let c = continue_in_s(start, &path, &opts)?;
    let out = ContinuationOut {
        id,
        steps,
        branch: c.branch.iter().map(BranchPoint::from).collect(),
        degeneracy: c.degeneracy.map(|g| DegeneracyOut {
            s: g.spectrum.weights().to_vec(),
            before: g.before,
            at: g.solution.triple,
            after: g.after,
            q: g.solution.config.rows(),
        }),
    };
    sink.emit(&out, || {
        let rows = out.branch.iter().map(|b| {
            let mut row = vec![strings(&b.s).join(";")];
            row.extend(triple_cells(&b.triple));
            row.extend([b.lambda.to_string(), b.potential.to_string(), b.classification.clone()]);
            row
        });
        (vec!["S", "index", "nullity", "coindex", "lambda", "U", "classification"], rows.collect())
    })
}

#[derive(Serialize)]
struct FlowOut {
    #[serde(rename = "S")]
    s: Vec<f64>,
    stop: StopReason,
    samples: usize,
    final_time: f64,
    initial: ConfigDocument,
    last: ConfigDocument,
    theta: (f64, f64),
    potential: (f64, f64),
    min_separation: f64,
}

fn flow(
    sink: &Sink,
    cfg: &RunConfig,
    args: &ProblemArgs,
    start: Option<&Path>,
    t_end: f64,
    angle_stop: Option<f64>,
) -> CliResult<()> {
    let (q0, s) = match start {
        Some(file) => {
            let doc: ConfigDocument = read_json(file)?;
            let (q, s) = doc.into_parts()?;
            (q.normalized(&s), s)
        }
        None => {
            let p = resolve(args, cfg, Defaults { n: 3, d: 3, s: Some(&[2.0]) })?;
            let q = seeds_in_cone(&p.masses, &p.spectrum, 1, p.seed, 90.0).remove(0);
            (q, p.spectrum)
        }
    };
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(CliError::Usage("--T must be positive".into()));
    }
    let controls = FlowControls { angle_stop, ..FlowControls::default() };
    let traj = integrate_flow(&q0, &s, t_end, &controls)?;
    if sink.format == Format::Csv {
        traj.write_csv(sink.writer()?)?;
        return Ok(());
    }
    let first_last = |v: &[f64]| (v[0], v[v.len() - 1]);
    sink.json(&FlowOut {
        s: s.weights().to_vec(),
        stop: traj.stop,
        samples: traj.times.len(),
        final_time: traj.times[traj.times.len() - 1],
        initial: q0.to_document(&s),
        last: traj.last().to_document(&s),
        theta: first_last(&traj.theta),
        potential: first_last(&traj.potential),
        min_separation: traj.min_sep.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[derive(Serialize)]
struct Check45Out<'a> {
    #[serde(rename = "S")]
    s: Vec<f64>,
    seed: u64,
    max_angle: f64,
    all_monotone: bool,
    #[serde(flatten)]
    report: &'a sbc_core::flow::Lyapunov45Report,
}

fn check45(
    sink: &Sink,
    cfg: &RunConfig,
    args: &ProblemArgs,
    seeds: usize,
    max_angle: f64,
    t_max: f64,
) -> CliResult<()> {
    let p = resolve(args, cfg, Defaults { n: 3, d: 3, s: Some(&[2.0]) })?;
    if !(max_angle > 0.0 && max_angle <= 90.0) {
        return Err(CliError::Usage("--max-angle must lie in (0, 90]".into()));
    }
    let starts = seeds_in_cone(&p.masses, &p.spectrum, seeds, p.seed, max_angle);
    let opts = Check45Options { t_max, ..Check45Options::default() };
    let report = lyapunov_45_check(&starts, &p.spectrum, &opts)?;
    let out = Check45Out {
        s: p.spectrum.weights().to_vec(),
        seed: p.seed,
        max_angle,
        all_monotone: report.all_monotone(),
        report: &report,
    };
    sink.emit(&out, || {
        let rows = report.outcomes.iter().map(|o| {
            let stop = o.stop.map(|s| format!("{s:?}")).unwrap_or_default();
            vec![
                o.index.to_string(),
                o.theta0.to_string(),
                format!("{:?}", o.status),
                o.monotone.to_string(),
                o.worst_increase.to_string(),
                stop,
                o.final_theta.to_string(),
                o.final_time.to_string(),
            ]
        });
        (
            vec!["seed", "theta0", "status", "monotone", "worst_increase", "stop", "final_theta", "final_time"],
            rows.collect(),
        )
    })
}

#[derive(Serialize)]
struct OrbitOut {
    id: usize,
    s: f64,
    lambda: f64,
    omega: (f64, f64),
    periodicity: Periodicity,
    horizon: f64,
    samples: usize,
    newton_residual: f64,
    angular_momenta: (f64, f64),
    base: ConfigDocument,
}

#[allow(clippy::too_many_arguments)]
fn orbit(
    sink: &Sink,
    cfg: &RunConfig,
    census_file: Option<&Path>,
    id: usize,
    args: &ProblemArgs,
    t_end: Option<f64>,
    samples: usize,
    rational_tol: f64,
    max_den: u64,
) -> CliResult<()> {
    let census = match census_file {
        Some(path) => load_census(path, cfg)?,
        None => {
            let p = resolve(args, cfg, Defaults { n: 3, d: 2, s: None })?;
            run_census(&p, &CensusOptions { solver: solver_options(cfg), ..CensusOptions::default() })?
        }
    };
    let sol = pick(&census, id)?;
    let w = sol.spectrum.weights();
    if w.len() != 2 || w[1] != 1.0 {
        return Err(CliError::Usage(format!("orbits need planar weights (s, 1), got {w:?}")));
    }
    if samples < 2 {
        return Err(CliError::Usage("--samples must be at least 2".into()));
    }
    let orbit = lift(sol, w[0])?;
    let periodicity = classify_periodicity(&orbit, rational_tol, max_den);
    let horizon = match (t_end, &periodicity) {
        (Some(t), _) => t,
        (None, Periodicity::Periodic { period, .. }) => *period,
        (None, Periodicity::QuasiPeriodic { .. }) => TAU / orbit.omega.1,
    };
    let times: Vec<f64> = (0..samples).map(|k| horizon * k as f64 / (samples - 1) as f64).collect();
    if sink.format == Format::Csv {
        orbit.write_csv(&times, sink.writer()?)?;
        return Ok(());
    }
    sink.json(&OrbitOut {
        id,
        s: orbit.s,
        lambda: orbit.lambda,
        omega: orbit.omega,
        newton_residual: newton_residual(&orbit, &times),
        periodicity,
        horizon,
        samples,
        angular_momenta: orbit.angular_momenta(0.0),
        base: sol.to_document(),
    })
}

fn morse_check(sink: &Sink, cfg: &RunConfig, path: &Path) -> CliResult<()> {
    let census = load_census(path, cfg)?;
    let chk = morse_inequality_check(&census, census.masses.n(), census.spectrum.d())?;
    #[derive(Serialize)]
    struct Out<'a> {
        consistent: bool,
        #[serde(flatten)]
        check: &'a sbc_core::morse::MorseCheck,
    }
    sink.emit(&Out { consistent: chk.consistent(), check: &chk }, || {
        let cell = |v: &[_], k: usize| opt(&v.get(k));
        let len = chk.morse.len().max(chk.poincare.len());
        let rows =
            (0..len).map(|k| vec![k.to_string(), cell(&chk.morse, k), cell(&chk.poincare, k), cell(&chk.remainder, k)]);
        (vec!["degree", "morse", "poincare", "remainder"], rows.collect())
    })
}
