//! Config, input parsing and subcommand dispatch behind the `furstenberg`
//! binary. Outputs are JSON envelopes carrying the run config, the seed, a
//! build id and the schema version; curves go to CSV companions.

pub mod args;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{IsTerminal, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use furstenberg::algebraic::{exact_product_entropy, pingpong_certify, splitting_rate_bound};
use furstenberg::certificate::{build_example, full_report, large_element_pingpong, Budgets, Family};
use furstenberg::circle::{arc_mass_max, order_k_detail, CircleMeasure};
use furstenberg::suite::{run_suite, suite_failed, SuiteConfig};
use furstenberg::walk::{estimate_lyapunov, estimate_stationary, holder_probe, renewal_experiment, StationaryMethod};
use furstenberg::{Error, ExactMatrix, ExactScalar, MeasureSpec, ProjectivePoint, Result};

use args::{Cli, Command, ExampleFamily, MeasureArgs, Method};

pub const SCHEMA_VERSION: &str = "1";
pub const BUILD_ID: &str = env!("BUILD_GIT_DESCRIBE");

/// Radii of the Hölder probe on stationary samples.
const HOLDER_RADII: [f64; 5] = [1e-1, 3.162_277_660_168_38e-2, 1e-2, 3.162_277_660_168_38e-3, 1e-3];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureInput {
    /// A measure spec in canonical JSON form.
    Spec { origin: String, spec: Value },
    /// A circle measure read from CSV; only its shape is recorded.
    Circle { origin: String, variant: String, len: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub workers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureInput>,
    /// Budgets after defaults were applied.
    #[serde(default)]
    pub budgets: BTreeMap<String, u64>,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl RunConfig {
    fn new(command: &str, cli: &Cli) -> Self {
        RunConfig {
            command: command.to_string(),
            seed: cli.seed,
            workers: cli.workers,
            measure: None,
            budgets: BTreeMap::new(),
            params: BTreeMap::new(),
            out: cli.out.as_ref().map(|p| p.display().to_string()),
        }
    }

    fn budget(&mut self, name: &str, given: Option<usize>, default: usize) -> usize {
        let v = given.unwrap_or(default);
        self.budgets.insert(name.to_string(), v as u64);
        v
    }

    fn param(&mut self, name: &str, v: impl Serialize) {
        self.params.insert(name.to_string(), serde_json::to_value(v).expect("param serializes"));
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::ParseError {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })
}

/// A measure spec, or a report envelope whose `result` or `config.measure`
/// holds one.
pub fn parse_measure_text(text: &str) -> Result<MeasureSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::ParseError {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if v.get("atoms").is_some() {
        return MeasureSpec::from_json(&v);
    }
    if let Some(r) = v.get("result").filter(|r| r.get("atoms").is_some()) {
        return MeasureSpec::from_json(r);
    }
    if let Some(s) = v.pointer("/config/measure/spec") {
        return MeasureSpec::from_json(s);
    }
    Err(Error::ParseError { location: "$".into(), message: "expected a measure spec or a report containing one".into() })
}

pub fn envelope(cfg: &RunConfig, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "build_id": BUILD_ID,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg,
        "result": result,
    })
}

fn header(cfg: &RunConfig) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "build_id": BUILD_ID,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": cfg,
    })
}

/// What a subcommand produced.
#[derive(Debug)]
pub struct Outcome {
    /// Printed to stdout and written as `<command>.json` (or `.jsonl`).
    pub text: String,
    pub file_name: String,
    /// CSV companions, written only when an output directory is given.
    pub csv: Vec<(String, String)>,
    /// A check failed: exit status 2.
    pub check_failed: bool,
}

impl Outcome {
    fn json(cfg: &RunConfig, result: Value) -> Self {
        let text = serde_json::to_string_pretty(&envelope(cfg, result)).expect("report serializes") + "\n";
        Outcome { text, file_name: format!("{}.json", cfg.command), csv: Vec::new(), check_failed: false }
    }
}

fn csv_meta(cfg: &RunConfig) -> Vec<(String, String)> {
    vec![
        ("schema_version".into(), SCHEMA_VERSION.into()),
        ("build_id".into(), BUILD_ID.into()),
        ("command".into(), cfg.command.clone()),
        ("seed".into(), cfg.seed.to_string()),
        ("config".into(), serde_json::to_string(cfg).expect("config serializes")),
    ]
}

fn csv_table(cfg: &RunConfig, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut buf = Vec::new();
    for (k, v) in csv_meta(cfg) {
        buf.extend(format!("# {k}={v}\n").into_bytes());
    }
    let mut w = csv::Writer::from_writer(buf);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(columns).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn read_source(path: Option<&Path>) -> Result<(String, String)> {
    match path {
        Some(p) if p != Path::new("-") => Ok((std::fs::read_to_string(p)?, format!("file:{}", p.display()))),
        _ => {
            let stdin = std::io::stdin();
            if path.is_none() && stdin.is_terminal() {
                return Err(Error::ParameterOutOfScope(
                    "no measure given: use --input, --spec or pipe one on stdin".into(),
                ));
            }
            let mut s = String::new();
            stdin.lock().read_to_string(&mut s)?;
            Ok((s, "stdin".into()))
        }
    }
}

fn load_measure(cfg: &mut RunConfig, m: &MeasureArgs) -> Result<MeasureSpec> {
    let (text, origin) = match &m.spec {
        Some(s) => (s.clone(), "inline".to_string()),
        None => read_source(m.input.as_deref())?,
    };
    let spec = parse_measure_text(&text)?;
    cfg.measure = Some(MeasureInput::Spec { origin, spec: spec.to_json() });
    Ok(spec)
}

fn family_of(f: &ExampleFamily) -> Result<Family> {
    Ok(match f {
        ExampleFamily::TwoGen { n } => Family::TwoGen { n: *n },
        ExampleFamily::Rotational { a, entries } => {
            let entries = entries.as_deref().map(parse_entries).transpose()?;
            Family::Rotational { a: *a, entries }
        }
        ExampleFamily::LargeElement { r, n_steps, symmetrize } => {
            Family::LargeElement { r: *r, n_steps: *n_steps, symmetrize: *symmetrize }
        }
    })
}

/// `[[["2","0"],["0","1/2"]], …]`.
fn parse_entries(text: &str) -> Result<Vec<ExactMatrix>> {
    let perr = |loc: String, msg: String| Error::ParseError { location: loc, message: msg };
    let v: Value = serde_json::from_str(text).map_err(|e| perr("--entries".into(), e.to_string()))?;
    let list = v.as_array().ok_or_else(|| perr("--entries".into(), "expected an array of matrices".into()))?;
    list.iter()
        .enumerate()
        .map(|(i, m)| {
            let mut cells = Vec::with_capacity(4);
            for r in 0..2 {
                for c in 0..2 {
                    let loc = format!("--entries[{i}][{r}][{c}]");
                    let s = m
                        .get(r)
                        .and_then(|row| row.get(c))
                        .and_then(Value::as_str)
                        .ok_or_else(|| perr(loc.clone(), "expected a scalar string".into()))?;
                    cells.push(s.parse::<ExactScalar>().map_err(|e| perr(loc, e))?);
                }
            }
            let cells: [ExactScalar; 4] = cells.try_into().expect("four cells");
            ExactMatrix::new(cells)
        })
        .collect()
}

fn lyapunov(cli: &Cli, m: &MeasureArgs, steps: usize) -> Result<Outcome> {
    let mut cfg = RunConfig::new("lyapunov", cli);
    let spec = load_measure(&mut cfg, m)?;
    let samples = cfg.budget("samples", cli.samples, 200);
    cfg.param("steps", steps);
    let est = estimate_lyapunov(&spec, steps, samples, cli.seed)?;
    Ok(Outcome::json(&cfg, json!(est)))
}

fn stationary(cli: &Cli, m: &MeasureArgs, method: Method, t: f64) -> Result<Outcome> {
    let mut cfg = RunConfig::new("stationary", cli);
    let spec = load_measure(&mut cfg, m)?;
    let samples = cfg.budget("samples", cli.samples, 100_000);
    let burn_in = cfg.budget("burn_in", cli.burn_in, 2000);
    let method = match method {
        Method::Forward => StationaryMethod::Forward,
        Method::Attractor => StationaryMethod::Attractor,
    };
    cfg.param("method", method);
    cfg.param("t", t);
    let est = estimate_stationary(&spec, burn_in, samples, cli.seed, method)?;
    let measure = est.measure()?;
    let arc = arc_mass_max(&measure, t)?;
    let holder = match holder_probe(&measure, &HOLDER_RADII) {
        Ok(h) => json!(h),
        Err(e) => json!({ "error": e.code(), "message": e.to_string() }),
    };
    let result = json!({
        "samples": est.samples,
        "aborted": est.aborted,
        "burn_in": est.burn_in,
        "method": est.method,
        "arc_mass": arc,
        "holder": holder,
    });
    let mut out = Outcome::json(&cfg, result);
    let mut buf = Vec::new();
    measure.write_csv(&mut buf, &csv_meta(&cfg))?;
    out.csv.push(("stationary.csv".into(), String::from_utf8(buf).expect("csv is utf-8")));
    Ok(out)
}

fn detail(cli: &Cli, input: &Path, r: f64, k: usize) -> Result<Outcome> {
    let mut cfg = RunConfig::new("detail", cli);
    let (text, origin) = read_source(Some(input))?;
    let measure = CircleMeasure::read_csv(text.as_bytes())?;
    let variant = if measure.grid_size().is_some() { "grid" } else { "atoms" };
    cfg.measure = Some(MeasureInput::Circle { origin, variant: variant.into(), len: measure.len() });
    cfg.param("r", r);
    cfg.param("k", k);
    let value = order_k_detail(&measure, r, k)?;
    Ok(Outcome::json(&cfg, json!({ "r": r, "k": k, "detail": value })))
}

fn certificate(cli: &Cli, m: &MeasureArgs, t: f64, c: f64, steps: usize) -> Result<Outcome> {
    let mut cfg = RunConfig::new("certificate", cli);
    let spec = load_measure(&mut cfg, m)?;
    let defaults = Budgets::default();
    let budgets = Budgets {
        lyapunov_steps: steps,
        lyapunov_samples: cfg.budget("runs", cli.runs, defaults.lyapunov_samples),
        burn_in: cfg.budget("burn_in", cli.burn_in, defaults.burn_in),
        stationary_samples: cfg.budget("samples", cli.samples, defaults.stationary_samples),
        n_max: cfg.budget("n_max", cli.n_max, defaults.n_max),
    };
    cfg.param("t", t);
    cfg.param("C", c);
    cfg.param("steps", steps);
    let rep = full_report(&spec, t, c, &budgets, cli.seed)?;
    let rows: Vec<Vec<String>> = rep
        .detail_decay
        .iter()
        .map(|p| vec![p.r.to_string(), p.detail.to_string(), p.beta1.to_string(), p.beta2.to_string()])
        .collect();
    let decay = csv_table(&cfg, &["r", "detail", "beta1", "beta2"], rows)?;
    let entropy = entropy_csv(&cfg, &rep.entropy_envelope)?;
    let mut out = Outcome::json(&cfg, json!(rep));
    out.csv.push(("detail_decay.csv".into(), decay));
    out.csv.push(("entropy.csv".into(), entropy));
    Ok(out)
}

fn entropy_csv(cfg: &RunConfig, levels: &[furstenberg::algebraic::EntropyLevel]) -> Result<String> {
    let rows = levels.iter().map(|l| {
        vec![
            l.n.to_string(),
            l.support.to_string(),
            l.words.to_string(),
            l.entropy_per_step.to_string(),
            l.all_distinct.to_string(),
        ]
    });
    csv_table(cfg, &["n", "support", "words", "entropy_per_step", "all_distinct"], rows)
}

fn renewal(cli: &Cli, m: &MeasureArgs, p_levels: &[f64], directions: usize) -> Result<Outcome> {
    let mut cfg = RunConfig::new("renewal", cli);
    let spec = load_measure(&mut cfg, m)?;
    let runs = cfg.budget("runs", cli.runs, 1000);
    cfg.param("p_levels", p_levels);
    cfg.param("directions", directions);
    let grid: Vec<ProjectivePoint> =
        (0..directions).map(|i| ProjectivePoint::new(i as f64 * PI / directions as f64)).collect();
    let rep = renewal_experiment(&spec, &grid, p_levels, runs, cli.seed)?;
    let result = json!({ "levels": rep.levels, "decreased": rep.decreased, "runs": rep.runs, "seed": rep.seed });
    let mut out = Outcome::json(&cfg, result);
    out.check_failed = !rep.decreased;
    let levels = rep
        .levels
        .iter()
        .map(|l| vec![l.p.to_string(), l.statistic.to_string(), l.std_error.to_string()]);
    out.csv.push(("renewal_levels.csv".into(), csv_table(&cfg, &["p", "max_pairwise_w1", "std_error"], levels)?));
    let cells = rep
        .cells
        .iter()
        .flat_map(|c| c.points.iter().map(move |x| vec![c.v.to_string(), c.p.to_string(), x.to_string()]));
    out.csv.push(("renewal_cells.csv".into(), csv_table(&cfg, &["v", "p", "angle"], cells)?));
    Ok(out)
}

fn pingpong(cli: &Cli, elements: &[(f64, f64)], epsilon: f64, large: Option<f64>, n_steps: u32, symmetrize: bool) -> Result<Outcome> {
    let mut cfg = RunConfig::new("pingpong", cli);
    let attempt = match large {
        Some(r) => {
            cfg.param("large_element", json!({ "r": r, "n_steps": n_steps, "symmetrize": symmetrize }));
            large_element_pingpong(r, n_steps, symmetrize)
        }
        None => {
            cfg.param("elements", elements);
            cfg.param("epsilon", epsilon);
            pingpong_certify(elements, epsilon)
        }
    };
    match attempt {
        Ok(c) => Ok(Outcome::json(&cfg, json!({ "certified": true, "certificate": c }))),
        Err(e @ Error::ArcsOverlap(..)) => {
            let mut out =
                Outcome::json(&cfg, json!({ "certified": false, "reason": e.code(), "message": e.to_string() }));
            out.check_failed = true;
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

fn entropy(cli: &Cli, m: &MeasureArgs) -> Result<Outcome> {
    let mut cfg = RunConfig::new("entropy", cli);
    let spec = load_measure(&mut cfg, m)?;
    let n_max = cfg.budget("n_max", cli.n_max, 10);
    let levels = exact_product_entropy(&spec, n_max)?;
    let envelope_min = levels.iter().map(|l| l.entropy_per_step).fold(f64::INFINITY, f64::min);
    let heights = match splitting_rate_bound(&spec) {
        Ok(h) => json!(h),
        Err(e) => json!({ "error": e.code(), "message": e.to_string() }),
    };
    let result = json!({
        "levels": levels,
        "envelope_min": envelope_min,
        "note": "every H(μ*ⁿ)/n is an upper bound for the random-walk entropy",
        "heights": heights,
    });
    let csv = entropy_csv(&cfg, &levels)?;
    let mut out = Outcome::json(&cfg, result);
    out.csv.push(("entropy.csv".into(), csv));
    Ok(out)
}

fn checks(cli: &Cli, instances: usize) -> Result<Outcome> {
    let mut cfg = RunConfig::new("checks", cli);
    let d = SuiteConfig::default();
    let points = cli.samples;
    let suite = SuiteConfig {
        instances,
        cramer_runs: cfg.budget("runs", cli.runs, d.cramer_runs),
        haar_points: cfg.budget("samples", points, d.haar_points),
        entropy_samples: points.unwrap_or(d.entropy_samples),
        n_max: cfg.budget("n_max", cli.n_max, d.n_max),
    };
    cfg.param("suite", &suite);
    let reports = run_suite(&suite, cli.seed)?;
    let mut text = serde_json::to_string(&header(&cfg)).expect("header serializes") + "\n";
    for r in &reports {
        text.push_str(&r.to_json_line());
        text.push('\n');
    }
    let failures: Vec<&str> = reports.iter().filter(|r| r.is_failure()).map(|r| r.name.as_str()).collect();
    let inapplicable = reports.iter().filter(|r| !r.applicable).count();
    let summary = json!({ "summary": { "reports": reports.len(), "failures": failures, "inapplicable": inapplicable } });
    text.push_str(&summary.to_string());
    text.push('\n');
    Ok(Outcome { text, file_name: "checks.jsonl".into(), csv: Vec::new(), check_failed: suite_failed(&reports) })
}

fn example(cli: &Cli, f: &ExampleFamily) -> Result<Outcome> {
    let mut cfg = RunConfig::new("example", cli);
    let family = family_of(f)?;
    cfg.param("family", &family);
    let spec = build_example(&family)?;
    Ok(Outcome::json(&cfg, spec.to_json()))
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Lyapunov { measure, steps } => lyapunov(cli, measure, *steps),
        Command::Stationary { measure, method, t } => stationary(cli, measure, *method, *t),
        Command::Detail { input, r, k } => detail(cli, input, *r, *k),
        Command::Certificate { measure, t, c, steps } => certificate(cli, measure, *t, *c, *steps),
        Command::Renewal { measure, p_levels, directions } => renewal(cli, measure, p_levels, *directions),
        Command::Pingpong { elements, epsilon, large_element, n_steps, symmetrize } => {
            pingpong(cli, elements, *epsilon, *large_element, *n_steps, *symmetrize)
        }
        Command::Entropy { measure } => entropy(cli, measure),
        Command::Checks { instances } => checks(cli, *instances),
        Command::Example { family } => example(cli, family),
    }
}

/// Writes the report and its CSV companions into `dir`.
pub fn write_outputs(dir: &Path, out: &Outcome) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let main = dir.join(&out.file_name);
    std::fs::write(&main, &out.text)?;
    written.push(main);
    for (name, body) in &out.csv {
        let p = dir.join(name);
        std::fs::write(&p, body)?;
        written.push(p);
    }
    Ok(written)
}

/// Error document printed to stderr on exit status 1.
pub fn error_document(e: &Error) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "build_id": BUILD_ID,
        "error": { "code": e.code(), "message": e.to_string() },
    })
}
