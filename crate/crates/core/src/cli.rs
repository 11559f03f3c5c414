//! Command-line front end.
//!
//! Every subcommand writes one artifact (JSON by default, CSV with
//! `--format csv`) to stdout or `--out`. Reports embed the resolved
//! configuration. Floats are rounded to 12 significant digits; non-finite
//! values become `null` in JSON and `inf`/`nan` in CSV.
//!
//! Exit codes: 0 success, 2 invalid input, 3 computational failure (the
//! report is still written).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Number, Value};

use crate::atlas::{build_structure, AtlasOptions};
use crate::blowup::{ball_lip, eps_good, rescale, tangent_function, var_sandwich_check, view_lip};
use crate::differentiation::{differential_field, CoordinateTuple, RadiusRule};
use crate::error::{Error, Result};
use crate::field::{parse_field, ScalarField};
use crate::generators::{generate, GeneratorSpec};
use crate::lipschitz::liplip_ratio_field;
use crate::poincare::{pi_constant_estimate, PiOptions, ProbeFamily};
use crate::quasiconvex::{eps_graph, quasiconvexify, sample_pairs};
use crate::quasilinear::{dimension_bound, net_restriction_bound, span_rank_on_points};
use crate::space::{
    greedy_separated_net, metric_doubling_constant, measure_doubling_constant, Ball, DoublingOptions, LadderParams,
    MetricMeasureSpace, PointId, ScaleLadder, ScaleWindow,
};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "MMSLAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "mmslab", version, about = "Analysis on finite metric measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a space file.
    Gen(GenArgs),
    /// Pointwise Lipschitz profile of a function.
    Analyze(AnalyzeArgs),
    /// Poincaré constant estimate over a probe family.
    Pi(PiArgs),
    /// Quasiconvexity constant from sampled pairs.
    Qc(QcArgs),
    /// Doubling constants, net cardinalities and dimension bounds.
    Dim(DimArgs),
    /// Minimax differentials against a coordinate tuple.
    Diff(DiffArgs),
    /// Greedy coordinate atlas from a function dictionary.
    Atlas(AtlasArgs),
    /// Rescaled views and the variation sandwich at one point.
    Blowup(BlowupArgs),
    /// Bundle of summary reports.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    #[value(name = "euclidean_grid")]
    EuclideanGrid,
    #[value(name = "snowflake")]
    Snowflake,
    #[value(name = "glued")]
    Glued,
    #[value(name = "heisenberg_word")]
    HeisenbergWord,
    #[value(name = "laakso_like")]
    LaaksoLike,
    #[value(name = "sierpinski_gasket")]
    SierpinskiGasket,
    #[value(name = "cusp_pair")]
    CuspPair,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum, required_unless_present = "spec")]
    kind: Option<GenKind>,
    /// Grid side (grids, snowflake base, glued sides, cusp pair).
    #[arg(long, default_value_t = 16)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Word radius of the Heisenberg ball.
    #[arg(long, default_value_t = 4)]
    radius: usize,
    #[arg(long, default_value_t = 3)]
    level: usize,
    /// Full generator description as JSON; overrides the other flags.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// Space file.
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long, default_value_t = 0.75)]
    ratio: f64,
    #[arg(long)]
    floor: Option<f64>,
    /// Do not snap ladder radii to half-integer multiples of the step.
    #[arg(long)]
    no_snap: bool,
    #[arg(long)]
    w_lo: Option<f64>,
    #[arg(long)]
    w_hi: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    dep_tol: f64,
    #[arg(long, alias = "tol", default_value_t = 0.25)]
    residual_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    rank_tol: f64,
    #[arg(long, default_value_t = 0.02)]
    mass_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    slack: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "coord:0")]
    function: String,
    /// Ratio thresholds K for the mass fractions.
    #[arg(long, value_delimiter = ',', default_value = "1.5,2,4")]
    ks: Vec<f64>,
}

#[derive(Debug, Args)]
struct PiArgs {
    #[command(flatten)]
    common: Common,
    /// Probe fields; the default family when absent.
    #[arg(long = "probe")]
    probes: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    dilation: f64,
    /// Include every (ball, probe) ratio in the JSON.
    #[arg(long)]
    table: bool,
}

#[derive(Debug, Args)]
struct QcArgs {
    #[command(flatten)]
    common: Common,
    /// Graph scale; 1.1 × step (or minimal distance) when absent.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    #[arg(long, default_value_t = 64)]
    max_rounds: usize,
}

#[derive(Debug, Args)]
struct DimArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    ks: Vec<f64>,
    /// Ball center for the nets.
    #[arg(long, default_value_t = 0)]
    center: PointId,
    /// Ball radius; half the diameter when absent.
    #[arg(long)]
    radius: Option<f64>,
    /// Basis fields; coordinates plus four random fields when absent.
    #[arg(long = "basis")]
    basis: Vec<String>,
    #[arg(long, default_value_t = 4)]
    random_combinations: usize,
}

#[derive(Debug, Args)]
struct DiffArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    function: String,
    /// Coordinate fields; all chart coordinates when absent.
    #[arg(long = "coord")]
    coords: Vec<String>,
    /// Fixed ball radius instead of the point-count rule.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 3)]
    factor: usize,
    /// Restrict to these points.
    #[arg(long = "point", value_delimiter = ',')]
    points: Vec<PointId>,
}

#[derive(Debug, Args)]
struct AtlasArgs {
    #[command(flatten)]
    common: Common,
    /// Dictionary fields; chart coordinates plus `dist:0` when absent.
    #[arg(long = "dictionary", value_delimiter = ';')]
    dictionary: Vec<String>,
    #[arg(long, default_value_t = 5)]
    max_tuple: usize,
    /// Directory for per-patch differential CSVs.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BlowupArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    point: PointId,
    #[arg(long, default_value = "coord:0")]
    function: String,
    /// View scales r_k; the window radii when absent.
    #[arg(long, value_delimiter = ',')]
    scales: Vec<f64>,
    /// View radii R.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    radii: Vec<f64>,
    /// Lip-lip constant K for the ε-good test.
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "coord:0")]
    function: String,
    #[arg(long, default_value_t = 20)]
    pairs: usize,
}

/// Echo of every resolved setting.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: &'static str,
    space: String,
    ladder: LadderEcho,
    window: ScaleWindow,
    dependence_tol: f64,
    residual_tol: f64,
    rank_tol: f64,
    mass_fraction: f64,
    slack: f64,
    seed: u64,
    format: Format,
    params: Value,
}

#[derive(Debug, Clone, Serialize)]
struct LadderEcho {
    r_max: f64,
    ratio: f64,
    floor: f64,
    snap: bool,
    radii: usize,
}

struct Context {
    space: MetricMeasureSpace,
    ladder: ScaleLadder,
    window: ScaleWindow,
    config: RunConfig,
}

fn load(common: &Common, command: &'static str, params: Value) -> Result<Context> {
    for (name, v) in [
        ("dep_tol", common.dep_tol),
        ("residual_tol", common.residual_tol),
        ("rank_tol", common.rank_tol),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::input(format!("{name} must be > 0, got {v}")));
        }
    }
    for (name, v) in [("mass_fraction", common.mass_fraction), ("slack", common.slack)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::input(format!("{name} must lie in (0,1), got {v}")));
        }
    }
    let space = MetricMeasureSpace::read_json(&common.space).map_err(|e| match e {
        Error::Io(io) => Error::input(format!("cannot read space file {}: {io}", common.space.display())),
        other => other,
    })?;
    if space.len() < 2 {
        return Err(Error::input("space needs at least two points"));
    }
    let params_ladder = LadderParams {
        r_max: common.r_max,
        ratio: common.ratio,
        floor: common.floor,
        snap: !common.no_snap,
    };
    let ladder = ScaleLadder::for_space(&space, &params_ladder)?;
    let default = ladder.default_window();
    let window = ScaleWindow {
        lo: common.w_lo.unwrap_or(default.lo),
        hi: common.w_hi.unwrap_or(default.hi),
    };
    if !(window.lo > 0.0 && window.lo <= window.hi) {
        return Err(Error::input(format!("window must satisfy 0 < lo ≤ hi, got [{}, {}]", window.lo, window.hi)));
    }
    let config = RunConfig {
        command,
        space: common.space.display().to_string(),
        ladder: LadderEcho {
            r_max: ladder.r_max,
            ratio: ladder.ratio,
            floor: ladder.floor,
            snap: ladder.step.is_some(),
            radii: ladder.radii.len(),
        },
        window,
        dependence_tol: common.dep_tol,
        residual_tol: common.residual_tol,
        rank_tol: common.rank_tol,
        mass_fraction: common.mass_fraction,
        slack: common.slack,
        seed: common.seed,
        format: common.format,
        params,
    };
    Ok(Context {
        space,
        ladder,
        window,
        config,
    })
}

/// Round to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

/// CSV cell for a float.
pub fn fmt12(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{:?}", round12(v))
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|f| Number::from_f64(round12(f)))
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

fn to_value(x: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn render_json(v: Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&round_value(v))?;
    s.push('\n');
    Ok(s)
}

fn render_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
}

/// Rendered artifact plus an optional computational failure.
struct Outcome {
    body: String,
    failure: Option<String>,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Outcome { body, failure: None }
    }
}

fn report(ctx: &Context, body: Value) -> Result<String> {
    let mut map = Map::new();
    map.insert("config".into(), to_value(&ctx.config)?);
    map.insert(
        "space".into(),
        json!({
            "label": ctx.space.label(),
            "points": ctx.space.len(),
            "total_mass": ctx.space.total_mass(),
        }),
    );
    if let Value::Object(extra) = body {
        map.extend(extra);
    }
    render_json(Value::Object(map))
}

fn fields(space: &MetricMeasureSpace, specs: &[String]) -> Result<Vec<ScalarField>> {
    specs.iter().map(|s| parse_field(space, s)).collect()
}

fn chart_coordinates(space: &MetricMeasureSpace) -> Result<Vec<ScalarField>> {
    let dim = space.coords().map_or(0, |c| c.dim);
    (0..dim).map(|a| ScalarField::coordinate(space, a)).collect()
}

fn cmd_gen(a: &GenArgs) -> Result<Outcome> {
    let spec: GeneratorSpec = match &a.spec {
        Some(text) => serde_json::from_str(text).map_err(|e| Error::input(format!("bad generator spec: {e}")))?,
        None => {
            let grid = |dim| GeneratorSpec::EuclideanGrid { n: a.n, dim };
            match a.kind.expect("clap requires kind without spec") {
                GenKind::EuclideanGrid => grid(a.dim),
                GenKind::Snowflake => GeneratorSpec::Snowflake {
                    base: Box::new(grid(a.dim)),
                    alpha: a.alpha,
                },
                GenKind::Glued => GeneratorSpec::Glued {
                    a: Box::new(grid(1)),
                    b: Box::new(grid(a.dim)),
                    pairs: vec![(0, 0)],
                },
                GenKind::HeisenbergWord => GeneratorSpec::HeisenbergWord { radius: a.radius },
                GenKind::LaaksoLike => GeneratorSpec::LaaksoLike { level: a.level },
                GenKind::SierpinskiGasket => GeneratorSpec::SierpinskiGasket { level: a.level },
                GenKind::CuspPair => GeneratorSpec::CuspPair { n: a.n },
            }
        }
    };
    let space = generate(&spec)?;
    let mut body = space.to_json_string()?;
    body.push('\n');
    Ok(Outcome::ok(body))
}

fn cmd_analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let ctx = load(&a.common, "analyze", json!({ "function": a.function, "ks": a.ks }))?;
    let f = parse_field(&ctx.space, &a.function)?;
    let prof = liplip_ratio_field(&ctx.space, &f, &ctx.ladder, &ctx.window, &a.ks)?;
    if a.common.format == Format::Csv {
        let rows: Vec<Vec<String>> = prof
            .points
            .iter()
            .enumerate()
            .map(|(x, p)| {
                vec![
                    x.to_string(),
                    fmt12(p.lip),
                    fmt12(p.lip_upper),
                    fmt12(p.ratio),
                    p.degenerate.to_string(),
                ]
            })
            .collect();
        return Ok(Outcome::ok(render_csv(&["point", "lip", "lip_upper", "ratio", "degenerate"], &rows)?));
    }
    let points: Vec<Value> = prof
        .points
        .iter()
        .enumerate()
        .map(|(x, p)| json!({"point": x, "lip": p.lip, "lip_upper": p.lip_upper, "ratio": p.ratio, "degenerate": p.degenerate}))
        .collect();
    let body = json!({
        "function": prof.label,
        "global_lip": prof.global_lip,
        "radii": prof.radii,
        "fractions": prof.fractions,
        "ratio_q95": prof.ratio_quantile(&ctx.space, 0.95),
        "points": points,
    });
    Ok(Outcome::ok(report(&ctx, body)?))
}

fn probe_fields(ctx: &Context, specs: &[String]) -> Result<Vec<ScalarField>> {
    if specs.is_empty() {
        ProbeFamily {
            seed: ctx.config.seed,
            ..ProbeFamily::default()
        }
        .build(&ctx.space, &ctx.ladder)
    } else {
        fields(&ctx.space, specs)
    }
}

fn cmd_pi(a: &PiArgs) -> Result<Outcome> {
    let ctx = load(
        &a.common,
        "pi",
        json!({"probes": a.probes, "p": a.p, "dilation": a.dilation, "table": a.table}),
    )?;
    let probes = probe_fields(&ctx, &a.probes)?;
    let csv = a.common.format == Format::Csv;
    let opts = PiOptions {
        p: a.p,
        dilation: a.dilation,
        keep_table: a.table || csv,
    };
    let rep = pi_constant_estimate(&ctx.space, &probes, &ctx.ladder, &opts)?;
    if csv {
        let rows: Vec<Vec<String>> = rep
            .ratio_table
            .iter()
            .map(|r| {
                vec![
                    r.center.to_string(),
                    fmt12(r.radius),
                    rep.probes[r.probe].clone(),
                    fmt12(r.oscillation),
                    fmt12(r.gradient_mean),
                    fmt12(r.ratio),
                ]
            })
            .collect();
        return Ok(Outcome::ok(render_csv(
            &["center", "radius", "probe", "oscillation", "gradient_mean", "ratio"],
            &rows,
        )?));
    }
    Ok(Outcome::ok(report(&ctx, json!({ "pi": rep }))?))
}

fn default_eps(space: &MetricMeasureSpace) -> f64 {
    1.1 * space.step().unwrap_or_else(|| space.min_positive_distance())
}

fn cmd_qc(a: &QcArgs) -> Result<Outcome> {
    let ctx = load(&a.common, "qc", json!({"eps": a.eps, "pairs": a.pairs, "max_rounds": a.max_rounds}))?;
    let eps = a.eps.unwrap_or_else(|| default_eps(&ctx.space));
    let graph = eps_graph(&ctx.space, eps)?;
    let pairs = sample_pairs(&ctx.space, a.pairs, ctx.config.seed);
    let results: Vec<Result<_>> = pairs
        .par_iter()
        .map(|&(p, q)| quasiconvexify(&ctx.space, &graph, p, q, a.max_rounds))
        .collect();
    let mut rows = Vec::with_capacity(pairs.len());
    let mut constant = 1.0_f64;
    let mut worst = None;
    let mut failure = None;
    for (&(p, q), res) in pairs.iter().zip(results) {
        match res {
            Ok(qv) => {
                if worst.is_none() || qv.stretch > constant {
                    constant = constant.max(qv.stretch);
                    worst = Some((p, q));
                }
                rows.push(json!({
                    "a": p, "b": q, "distance": ctx.space.dist(p, q),
                    "length": qv.path.length, "stretch": qv.stretch,
                    "vertices": qv.path.vertices.len(), "rounds": qv.rounds.len() - 1,
                }));
            }
            Err(Error::Computation(msg)) => {
                constant = f64::INFINITY;
                worst = Some((p, q));
                rows.push(json!({"a": p, "b": q, "distance": ctx.space.dist(p, q), "error": msg}));
                failure.get_or_insert(format!("pair ({p}, {q}): {msg}"));
            }
            Err(e) => return Err(e),
        }
    }
    let body = if a.common.format == Format::Csv {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                let num = |k: &str| r.get(k).and_then(Value::as_f64).map_or("nan".to_string(), fmt12);
                vec![
                    r["a"].to_string(),
                    r["b"].to_string(),
                    num("distance"),
                    num("length"),
                    num("stretch"),
                ]
            })
            .collect();
        render_csv(&["a", "b", "distance", "length", "stretch"], &table)?
    } else {
        report(
            &ctx,
            json!({"eps": eps, "constant": constant, "worst_pair": worst, "edges": graph.edge_count(), "pairs": rows}),
        )?
    };
    Ok(Outcome { body, failure })
}

fn doubling_options(ladder: &ScaleLadder) -> DoublingOptions {
    DoublingOptions {
        exclude_below: Some(4.0 * ladder.floor),
    }
}

/// Largest 95th-percentile Lip/lip ratio over the probe fields.
fn k_hat(ctx: &Context, probes: &[ScalarField]) -> Result<f64> {
    let mut k = 1.0_f64;
    for f in probes {
        let prof = liplip_ratio_field(&ctx.space, f, &ctx.ladder, &ctx.window, &[])?;
        k = k.max(prof.ratio_quantile(&ctx.space, 0.95));
    }
    Ok(k)
}

fn dim_summary(ctx: &Context, a: &DimArgs) -> Result<(Value, Vec<Vec<String>>)> {
    let space = &ctx.space;
    space.check_point(a.center)?;
    let radius = a.radius.unwrap_or(space.diameter() / 2.0);
    if !(radius > 0.0) {
        return Err(Error::input(format!("ball radius must be > 0, got {radius}")));
    }
    let opts = doubling_options(&ctx.ladder);
    let c_metric = metric_doubling_constant(space, &ctx.ladder, &opts);
    let c_measure = measure_doubling_constant(space, &ctx.ladder, &opts);
    let basis = if a.basis.is_empty() {
        let mut b = chart_coordinates(space)?;
        b.extend((0..4).map(|i| ScalarField::random_lipschitz(space, 8, ctx.config.seed.wrapping_add(i))));
        b
    } else {
        fields(space, &a.basis)?
    };
    let k = k_hat(ctx, &basis)?;
    let bound = dimension_bound(k, c_metric)?;
    let mut nets = Vec::new();
    let mut rows = Vec::new();
    for &kk in &a.ks {
        if !(kk >= 1.0) {
            return Err(Error::input(format!("net constants K must be ≥ 1, got {kk}")));
        }
        let spacing = radius / (4.0 * kk);
        let net = greedy_separated_net(space, Ball::new(a.center, radius), spacing)?;
        let card_bound = (16.0 * kk).powf(c_metric.log2());
        let rank = span_rank_on_points(&net.members, &basis);
        let restriction = net_restriction_bound(space, &net, &basis, a.random_combinations, ctx.config.seed)?;
        let vanishing_ok = restriction.checks.iter().all(|c| c.vanishing_bound_ok != Some(false));
        let rank_at = rank.rank_at(ctx.config.rank_tol);
        rows.push(vec![
            fmt12(kk),
            fmt12(spacing),
            net.members.len().to_string(),
            fmt12(card_bound),
            rank_at.to_string(),
            vanishing_ok.to_string(),
        ]);
        nets.push(json!({
            "k": kk,
            "spacing": spacing,
            "net_size": net.members.len(),
            "cardinality_bound": card_bound,
            "within_bound": (net.members.len() as f64) <= card_bound,
            "span_rank": rank_at,
            "singular_values": rank.singular_values,
            "cover_radius": restriction.cover_radius,
            "vanishing_bound_ok": vanishing_ok,
            "checks": restriction.checks,
        }));
    }
    let body = json!({
        "ball": {"center": a.center, "radius": radius},
        "basis": basis.iter().map(|f| f.label.clone()).collect::<Vec<_>>(),
        "metric_doubling": c_metric,
        "measure_doubling": c_measure,
        "doubling_exclude_below": opts.exclude_below,
        "k_hat_q95": k,
        "dimension_bound": bound,
        "nets": nets,
    });
    Ok((body, rows))
}

fn cmd_dim(a: &DimArgs) -> Result<Outcome> {
    let ctx = load(
        &a.common,
        "dim",
        json!({"ks": a.ks, "center": a.center, "radius": a.radius, "basis": a.basis, "random_combinations": a.random_combinations}),
    )?;
    let (body, rows) = dim_summary(&ctx, a)?;
    if a.common.format == Format::Csv {
        return Ok(Outcome::ok(render_csv(
            &["k", "spacing", "net_size", "cardinality_bound", "span_rank", "vanishing_bound_ok"],
            &rows,
        )?));
    }
    Ok(Outcome::ok(report(&ctx, body)?))
}

fn cmd_diff(a: &DiffArgs) -> Result<Outcome> {
    let ctx = load(
        &a.common,
        "diff",
        json!({"function": a.function, "coords": a.coords, "radius": a.radius, "factor": a.factor, "points": a.points}),
    )?;
    let f = parse_field(&ctx.space, &a.function)?;
    let coords = if a.coords.is_empty() {
        chart_coordinates(&ctx.space)?
    } else {
        fields(&ctx.space, &a.coords)?
    };
    let tuple = CoordinateTuple::new(coords)?;
    let region: Vec<PointId> = if a.points.is_empty() {
        ctx.space.points().collect()
    } else {
        a.points.clone()
    };
    for &x in &region {
        if x >= ctx.space.len() {
            return Err(Error::input(format!("unknown point id {x}")));
        }
    }
    let rule = match a.radius {
        Some(r) => RadiusRule::Fixed(r),
        None => RadiusRule::MinPoints { factor: a.factor },
    };
    let field = differential_field(&ctx.space, &f, &tuple, &region, &ctx.ladder, rule, ctx.config.residual_tol)?;
    if a.common.format == Format::Csv {
        let mut header: Vec<String> = vec!["point".into()];
        header.extend((0..tuple.len()).map(|i| format!("df_{i}")));
        header.extend(["residual", "radius", "degenerate"].map(String::from));
        let rows: Vec<Vec<String>> = field
            .points
            .iter()
            .map(|d| {
                let mut r = vec![d.point.to_string()];
                r.extend(d.df.iter().map(|&v| fmt12(v)));
                r.extend([fmt12(d.residual), fmt12(d.radius_used), d.degenerate.to_string()]);
                r
            })
            .collect();
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        return Ok(Outcome::ok(render_csv(&h, &rows)?));
    }
    Ok(Outcome::ok(report(&ctx, json!({ "differential": field }))?))
}

fn write_patch_csvs(dir: &Path, atlas: &crate::atlas::Atlas) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (i, patch) in atlas.patches.iter().enumerate() {
        let member: std::collections::HashSet<PointId> = patch.subset.iter().copied().collect();
        for (j, field) in patch.differentials.iter().enumerate() {
            let mut header: Vec<String> = vec!["point".into()];
            header.extend(patch.coords.iter().map(|c| format!("d/d[{c}]")));
            header.push("residual".into());
            let rows: Vec<Vec<String>> = field
                .points
                .iter()
                .filter(|d| member.contains(&d.point))
                .map(|d| {
                    let mut r = vec![d.point.to_string()];
                    r.extend(d.df.iter().map(|&v| fmt12(v)));
                    r.push(fmt12(d.residual));
                    r
                })
                .collect();
            let h: Vec<&str> = header.iter().map(String::as_str).collect();
            std::fs::write(dir.join(format!("patch{i}_f{j}.csv")), render_csv(&h, &rows)?)?;
        }
    }
    Ok(())
}

fn cmd_atlas(a: &AtlasArgs) -> Result<Outcome> {
    let ctx = load(
        &a.common,
        "atlas",
        json!({"dictionary": a.dictionary, "max_tuple": a.max_tuple, "csv_dir": a.csv_dir}),
    )?;
    let dictionary = if a.dictionary.is_empty() {
        let mut d = chart_coordinates(&ctx.space)?;
        d.push(parse_field(&ctx.space, "dist:0")?);
        d
    } else {
        fields(&ctx.space, &a.dictionary)?
    };
    let opts = AtlasOptions {
        max_tuple: a.max_tuple,
        min_mass: ctx.config.mass_fraction,
        slack: ctx.config.slack,
        dependence_tol: ctx.config.dependence_tol,
        residual_tol: ctx.config.residual_tol,
        ..AtlasOptions::default()
    };
    let atlas = build_structure(&ctx.space, &dictionary, &ctx.ladder, &opts)?;
    if let Some(dir) = &a.csv_dir {
        write_patch_csvs(dir, &atlas)?;
    }
    let total = atlas.total_mass;
    let body = if a.common.format == Format::Csv {
        let mut owner = vec![None; ctx.space.len()];
        for (i, p) in atlas.patches.iter().enumerate() {
            for &x in &p.subset {
                owner[x] = Some((i, p.dimension));
            }
        }
        let rows: Vec<Vec<String>> = owner
            .iter()
            .enumerate()
            .map(|(x, o)| match o {
                Some((i, d)) => vec![x.to_string(), i.to_string(), d.to_string()],
                None => vec![x.to_string(), String::new(), "0".into()],
            })
            .collect();
        render_csv(&["point", "patch", "dimension"], &rows)?
    } else {
        let patches: Vec<Value> = atlas
            .patches
            .iter()
            .map(|p| {
                json!({
                    "dimension": p.dimension,
                    "coords": p.coords,
                    "coord_indices": p.coord_indices,
                    "mass": p.mass,
                    "mass_fraction": p.mass / total,
                    "independent_mass": p.independent_mass,
                    "best_mass": p.best_mass,
                    "good_mass_fractions": p.differentials.iter().map(|d| d.summary.good_mass_fraction).collect::<Vec<_>>(),
                    "subset": p.subset,
                })
            })
            .collect();
        report(
            &ctx,
            json!({
                "dictionary": dictionary.iter().map(|f| f.label.clone()).collect::<Vec<_>>(),
                "patches": patches,
                "dimensions": atlas.dimensions(),
                "uncovered_mass": atlas.uncovered_mass,
                "uncovered_fraction": atlas.uncovered_mass / total,
                "uncovered": atlas.uncovered,
                "atlas_window": atlas.window,
                "rounds": atlas.rounds,
                "stall": atlas.stall,
            }),
        )?
    };
    Ok(Outcome {
        body,
        failure: atlas.stall.clone(),
    })
}

fn cmd_blowup(a: &BlowupArgs) -> Result<Outcome> {
    let ctx = load(
        &a.common,
        "blowup",
        json!({"point": a.point, "function": a.function, "scales": a.scales, "radii": a.radii, "k": a.k, "eps": a.eps}),
    )?;
    let f = parse_field(&ctx.space, &a.function)?;
    ctx.space.check_point(a.point)?;
    let sandwich = var_sandwich_check(&ctx.space, &f, a.point, &ctx.ladder, &ctx.window, &a.radii)?;
    let good = eps_good(&ctx.space, &f, &[a.point], &ctx.ladder, &ctx.window, &a.radii, a.k, a.eps)?;
    let scales = if a.scales.is_empty() {
        ctx.ladder.window_radii(&ctx.window)
    } else {
        a.scales.clone()
    };
    let mut views = Vec::new();
    for &r in &scales {
        for &big_r in &a.radii {
            let view = rescale(&ctx.space, a.point, r, big_r)?;
            let g = tangent_function(&view, &f)?;
            views.push(json!({
                "scale": r,
                "radius": big_r,
                "points": view.len(),
                "view_lip": view_lip(&view, &g),
                "ball_lip": ball_lip(&view, &f),
                "view_var": view.variation(&g.values, big_r),
            }));
        }
    }
    if a.common.format == Format::Csv {
        let rows: Vec<Vec<String>> = sandwich
            .entries
            .iter()
            .map(|e| {
                vec![
                    fmt12(e.scale),
                    fmt12(e.radius),
                    fmt12(e.view_var),
                    fmt12(e.var),
                    e.in_window.to_string(),
                    fmt12(e.excess),
                ]
            })
            .collect();
        return Ok(Outcome::ok(render_csv(
            &["scale", "radius", "view_var", "var", "in_window", "excess"],
            &rows,
        )?));
    }
    Ok(Outcome::ok(report(
        &ctx,
        json!({"sandwich": sandwich, "eps_good": good, "views": views}),
    )?))
}

fn cmd_report(a: &ReportArgs) -> Result<Outcome> {
    let ctx = load(&a.common, "report", json!({"function": a.function, "pairs": a.pairs}))?;
    let f = parse_field(&ctx.space, &a.function)?;
    let prof = liplip_ratio_field(&ctx.space, &f, &ctx.ladder, &ctx.window, &[1.5, 2.0, 4.0])?;
    let probes = probe_fields(&ctx, &[])?;
    let pi = pi_constant_estimate(&ctx.space, &probes, &ctx.ladder, &PiOptions::default())?;
    let eps = default_eps(&ctx.space);
    let graph = eps_graph(&ctx.space, eps)?;
    let pairs = sample_pairs(&ctx.space, a.pairs, ctx.config.seed);
    let qc = crate::quasiconvex::quasiconvexity_constant(&ctx.space, &graph, &pairs, 64)?;
    let dim_args = DimArgs {
        common: a.common.clone(),
        ks: vec![1.0, 2.0, 4.0],
        center: 0,
        radius: None,
        basis: Vec::new(),
        random_combinations: 4,
    };
    let (dim, _) = dim_summary(&ctx, &dim_args)?;
    let body = json!({
        "analyze": {
            "function": prof.label,
            "global_lip": prof.global_lip,
            "fractions": prof.fractions,
            "ratio_q95": prof.ratio_quantile(&ctx.space, 0.95),
        },
        "pi": {
            "constant_estimate": pi.constant_estimate,
            "worst_ball": pi.worst_ball,
            "worst_probe": pi.worst_probe,
            "probes": pi.probes,
            "balls_tested": pi.balls_tested,
        },
        "qc": qc,
        "dim": dim,
    });
    let failure = qc.unreachable.map(|(p, q)| format!("points {p} and {q} are not joined by an ε-path"));
    Ok(Outcome {
        body: report(&ctx, body)?,
        failure,
    })
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::input(format!("{THREADS_ENV} must be a positive integer, got \"{raw}\"")))?;
    // a pool may already exist when called twice in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn out_path(cmd: &Command) -> Option<&Path> {
    match cmd {
        Command::Gen(a) => a.out.as_deref(),
        Command::Analyze(a) => a.common.out.as_deref(),
        Command::Pi(a) => a.common.out.as_deref(),
        Command::Qc(a) => a.common.out.as_deref(),
        Command::Dim(a) => a.common.out.as_deref(),
        Command::Diff(a) => a.common.out.as_deref(),
        Command::Atlas(a) => a.common.out.as_deref(),
        Command::Blowup(a) => a.common.out.as_deref(),
        Command::Report(a) => a.common.out.as_deref(),
    }
}

fn execute(cmd: &Command) -> Result<Outcome> {
    configure_threads()?;
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Pi(a) => cmd_pi(a),
        Command::Qc(a) => cmd_qc(a),
        Command::Dim(a) => cmd_dim(a),
        Command::Diff(a) => cmd_diff(a),
        Command::Atlas(a) => cmd_atlas(a),
        Command::Blowup(a) => cmd_blowup(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = execute(&cli.command).and_then(|o| {
        match out_path(&cli.command) {
            Some(p) => std::fs::write(p, &o.body)?,
            None => std::io::stdout().lock().write_all(o.body.as_bytes())?,
        }
        Ok(o)
    });
    match outcome {
        Ok(Outcome { failure: None, .. }) => 0,
        Ok(Outcome { failure: Some(msg), .. }) => {
            eprintln!("error: {}", Error::Computation(msg));
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
