use std::io::{BufReader, Write};

use lrkam::diophantine::{
    box_dimension, deficit_exponent, geometric_scales, measure_scan, FrequencyVector, HilbertCube, ScanRow,
};
use lrkam::dynamics::{resonant_strip_experiment, verify_torus_series, FlowSpec, StripConfig};
use lrkam::kam::{assemble_torus_embedding, run_iteration, run_iteration_partial, write_stage_csv, KamSchedule, TorusEmbedding};
use lrkam::mechanics::{
    action_map, check_p1, elliptic_point, frequency_chart, to_normal_form, ActionAngleChart, ConditionConfig,
    HamiltonianModel, NormalForm,
};
use lrkam::models::long_range_pairwise;
use lrkam::series::{io::read_series, io::write_series, MassSpec, MassVector, TFSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{BoxDimConfig, Loaded, ModelConfig, ScanConfig, DEFAULT_BETA0, DEFAULT_RHO, DEFAULT_SIGMA};
use crate::error::CliError;
use crate::output::{Format, PlotPoint, Sink};

pub struct Context<'a> {
    pub loaded: &'a Loaded,
    pub seed: u64,
    pub timing: bool,
}

/// `H0 = xi.J + P` with its masses and coupling size.
struct Model {
    h0: TFSeries,
    xi: Vec<f64>,
    masses: MassVector,
    eps: f64,
    normal_form: Option<(NormalForm, ActionAngleChart)>,
}

impl Model {
    fn perturbation(&self) -> TFSeries {
        &self.h0 - &TFSeries::frequency_part(&self.xi, &self.masses)
    }
}

fn masses(spec: MassSpec) -> Result<MassVector, CliError> {
    MassVector::from_spec(spec).map_err(|e| CliError::Usage(format!("mass: {e}")))
}

fn load_model(ctx: &Context) -> Result<Model, CliError> {
    let model = ctx.loaded.model()?;
    match model {
        ModelConfig::LongRange { xi, eps, mass } => {
            let m = masses(mass)?;
            if xi.len() != m.n_max() as usize {
                return Err(CliError::Usage(format!("{} frequencies for {} sites", xi.len(), m.n_max())));
            }
            Ok(Model {
                h0: long_range_pairwise(&xi, &m, eps),
                xi,
                masses: m,
                eps,
                normal_form: None,
            })
        }
        ModelConfig::Series { path, xi, mass, eps } => {
            let path = ctx.loaded.resolve(&path);
            let file = std::fs::File::open(&path)
                .map_err(|e| CliError::Usage(format!("cannot read model file {}: {e}", path.display())))?;
            let (header, h0) = read_series(BufReader::new(file))?;
            let spec = mass
                .or(header.mass)
                .ok_or_else(|| CliError::Usage("series model needs masses in the file header or the config".into()))?;
            let m = masses(spec)?;
            if xi.len() != h0.n_max() as usize || m.n_max() != h0.n_max() {
                return Err(CliError::Usage(format!(
                    "series has N = {}, got {} frequencies and {} masses",
                    h0.n_max(),
                    xi.len(),
                    m.n_max()
                )));
            }
            let eps = eps.or(ctx.loaded.config.schedule.eps0).unwrap_or(0.0);
            Ok(Model {
                h0,
                xi,
                masses: m,
                eps,
                normal_form: None,
            })
        }
        ModelConfig::Mechanical {
            potential,
            coupling,
            eps,
            mass,
            xi,
            domain,
            quadrature,
            normal_form,
        } => {
            let m = masses(mass)?;
            let chart = action_map(&potential, &domain, &quadrature)?;
            let model = HamiltonianModel::new(1, potential, m.clone(), coupling, eps)?;
            let nf = to_normal_form(&model, &chart, &xi, &normal_form)?;
            Ok(Model {
                h0: nf.series.clone(),
                xi,
                masses: m,
                eps,
                normal_form: Some((nf, chart)),
            })
        }
    }
}

fn schedule(ctx: &Context, eps: f64) -> Result<KamSchedule, CliError> {
    ctx.loaded.config.schedule.build(eps)
}

pub fn overrides(loaded: &Loaded) -> Vec<String> {
    let c = &loaded.config;
    let mut v: Vec<String> = c.schedule.overrides().into_iter().map(|k| format!("schedule.{k}")).collect();
    v.extend(c.caps.overrides().into_iter().map(|k| format!("caps.{k}")));
    v
}

pub fn iterate(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let model = load_model(ctx)?;
    let p = model.perturbation();
    if p.is_empty() {
        write_stages(sink, &[], ctx.timing)?;
        checkpoint(sink, &model.h0, &model.masses)?;
        return sink.summary(&json!({
            "verdict": "trivial",
            "stages_completed": 0,
            "tracked_norms": [],
            "fitted_exponent": null,
            "final_frequency": model.xi,
        }));
    }
    let sched = schedule(ctx, model.eps)?;
    let cfg = ctx.loaded.config.caps.kam_config();
    let run = run_iteration_partial(&model.h0, &model.xi, &sched, &model.masses, &cfg);
    write_stages(sink, &run.records, ctx.timing)?;
    let last = &run.state.normal_part(&model.masses) + &run.state.remainder;
    checkpoint(sink, &last, &model.masses)?;
    let norms = run.tracked_norms();
    let fit = run.convergence_fit();
    let decreasing = norms.windows(2).all(|w| w[1] < w[0]);
    let verdict = match (&run.failure, &fit) {
        (Some(_), _) => "failed",
        (None, Some(f)) if decreasing && f.exponent > 1.0 => "converging",
        (None, Some(_)) => "not_converging",
        (None, None) => "inconclusive",
    };
    sink.summary(&json!({
        "verdict": verdict,
        "stages_completed": run.records.len(),
        "tracked_norms": norms,
        "fitted_exponent": fit.as_ref().map(|f| f.exponent),
        "fit_intercept": fit.as_ref().map(|f| f.intercept),
        "target_exponent": 1.25,
        "final_frequency": run.state.frequency,
        "error": run.failure.as_ref().map(|e| e.to_string()),
    }))?;
    let points: Vec<PlotPoint> = norms
        .iter()
        .enumerate()
        .map(|(n, v)| PlotPoint::new(n as f64, v.log10(), "log10_norm"))
        .chain(run.records.iter().map(|r| PlotPoint::new(r.n as f64, r.eps_n.log10(), "log10_eps")))
        .collect();
    sink.plot(&points)?;
    match run.failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn write_stages(sink: &mut Sink, records: &[lrkam::kam::StageRecord], timing: bool) -> Result<(), CliError> {
    match sink.format {
        Format::Csv => {
            let mut w = sink.open("stages.csv")?;
            write_stage_csv(&mut w, records, timing)?;
            w.flush()?;
            Ok(())
        }
        Format::Jsonl => {
            let rows: Vec<_> = records
                .iter()
                .cloned()
                .map(|mut r| {
                    if !timing {
                        r.wall_time_ms = 0.0;
                    }
                    r
                })
                .collect();
            sink.table("stages", &rows)
        }
    }
}

fn checkpoint(sink: &mut Sink, h: &TFSeries, m: &MassVector) -> Result<(), CliError> {
    let mut w = sink.open("checkpoint.jsonl")?;
    write_series(&mut w, h, Some(m.spec()), None)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct DriftRow {
    time: f64,
    deviation: f64,
    angle_deviation: f64,
    action_deviation: f64,
}

pub fn verify(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let model = load_model(ctx)?;
    let vc = &ctx.loaded.config.verify;
    let n = model.masses.n_max();
    let (emb, omega, stages) = if model.eps == 0.0 || model.perturbation().is_empty() {
        (TorusEmbedding::identity(n), model.xi.clone(), 0)
    } else {
        let sched = schedule(ctx, model.eps)?;
        let cfg = ctx.loaded.config.caps.kam_config();
        let run = run_iteration(&model.h0, &model.xi, &sched, &model.masses, &cfg)?;
        let emb = assemble_torus_embedding(
            &run.state.generators,
            n,
            &model.masses,
            &cfg.caps,
            &sched.params(0),
            vc.embedding_tol,
        )?;
        (emb, run.state.frequency.clone(), sched.stages)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let samples: Vec<Vec<f64>> = (0..vc.samples)
        .map(|_| (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect())
        .collect();
    let spec = FlowSpec::new(vc.step, vc.time)?.recording(vc.record_every);
    let rep = verify_torus_series(&model.h0, &model.masses, &emb, &omega, &spec, &samples)?;
    let rows: Vec<DriftRow> = (0..rep.times.len())
        .map(|k| DriftRow {
            time: rep.times[k],
            deviation: rep.deviation[k],
            angle_deviation: rep.angle_deviation[k],
            action_deviation: rep.action_deviation[k],
        })
        .collect();
    sink.table("drift", &rows)?;
    let mut points = Vec::with_capacity(3 * rows.len());
    for (label, f) in [
        ("deviation", &rep.deviation),
        ("angle_deviation", &rep.angle_deviation),
        ("action_deviation", &rep.action_deviation),
    ] {
        points.extend(rep.times.iter().zip(f.iter()).map(|(t, v)| PlotPoint::new(*t, *v, label)));
    }
    sink.plot(&points)?;
    sink.summary(&json!({
        "stages": stages,
        "eps": model.eps,
        "samples": vc.samples,
        "time": vc.time,
        "sup_deviation": rep.sup_deviation,
        "energy_drift": rep.energy_drift,
        "frequency": omega,
    }))
}

pub fn strip_scan(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let cfg = StripConfig {
        seed: ctx.seed,
        ..ctx.loaded.config.strip.clone().unwrap_or_default()
    };
    let rows = resonant_strip_experiment(&cfg)?;
    sink.table("strip", &rows)?;
    let c = strip_contrast(&rows, cfg.varrho);
    let mut points: Vec<PlotPoint> = rows.iter().map(|r| PlotPoint::new(r.detuning, r.indicator, "indicator")).collect();
    points.extend(rows.iter().map(|r| PlotPoint::new(r.detuning, r.ftle, "ftle")));
    points.extend(rows.iter().map(|r| PlotPoint::new(r.detuning, r.baseline, "baseline")));
    sink.plot(&points)?;
    sink.summary(&json!({
        "eps": cfg.eps,
        "sites": cfg.sites,
        "varrho": cfg.varrho,
        "center_indicator": c.center,
        "inside_indicator": c.inside,
        "far_indicator": c.far,
        "contrast": c.ratio,
    }))
}

struct Contrast {
    center: Option<f64>,
    inside: Option<f64>,
    far: Option<f64>,
    ratio: Option<f64>,
}

/// Indicator at the strip center against the mean `|indicator|` of rows
/// at least `20 varrho` away, where the pendulum is far from resonance.
fn strip_contrast(rows: &[lrkam::dynamics::StripRow], varrho: f64) -> Contrast {
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let center = rows
        .iter()
        .filter(|r| r.inside)
        .min_by(|a, b| a.detuning.total_cmp(&b.detuning))
        .map(|r| r.indicator);
    let inside = mean(rows.iter().filter(|r| r.inside).map(|r| r.indicator).collect());
    let far = mean(rows.iter().filter(|r| r.detuning >= 20.0 * varrho).map(|r| r.indicator.abs()).collect());
    let ratio = match (center, far) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        _ => None,
    };
    Contrast { center, inside, far, ratio }
}

#[derive(Serialize)]
struct ExponentRow {
    d: f64,
    exponent: Option<f64>,
    intercept: Option<f64>,
    points: usize,
}

/// Cube centers `offset + n^{-gamma}`, `gamma = 1/d - 1`.
fn scan_cube(scan: &ScanConfig, d: f64) -> Result<HilbertCube, CliError> {
    let gamma = 1.0 / d - 1.0;
    let center: Vec<f64> = (1..=scan.sites).map(|n| scan.center_offset + (n as f64).powf(-gamma)).collect();
    let fv = FrequencyVector::new(center, scan.frequency_box.0, scan.frequency_box.1)?;
    Ok(HilbertCube::with_width_power(fv, scan.ell, d, scan.width_power)?)
}

pub fn measure(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let scan = ctx.loaded.config.scan.clone().unwrap_or_default();
    if scan.d.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(CliError::Usage("scan.d values must lie in (0, 1)".into()));
    }
    let spec = scan.mass.clone().unwrap_or(MassSpec::DeltaTail {
        delta: 1e-300,
        kappa: 1.0,
        n_max: scan.sites,
    });
    let m = masses(spec)?;
    let sc = &ctx.loaded.config.schedule;
    let mut rows: Vec<ScanRow> = Vec::new();
    let mut exps = Vec::new();
    for &d in &scan.d {
        let cube = scan_cube(&scan, d)?;
        let mut pts = Vec::new();
        for &eps in &scan.eps {
            let sched = KamSchedule::build_with_box(
                eps,
                sc.beta0.unwrap_or(DEFAULT_BETA0),
                sc.rho.unwrap_or(DEFAULT_RHO),
                sc.sigma.unwrap_or(DEFAULT_SIGMA),
                sc.stages.unwrap_or(scan.stages).max(1),
                sc.box_width,
            )?;
            let r = measure_scan(&cube, &sched, &m, scan.stages, scan.count, ctx.seed)?;
            if let Some(last) = r.last() {
                pts.push((eps, last.fraction));
            }
            rows.extend(r);
        }
        let fit = deficit_exponent(&pts);
        exps.push(ExponentRow {
            d,
            exponent: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
            points: pts.iter().filter(|p| p.1 < 1.0).count(),
        });
    }
    sink.table("scan", &rows)?;
    sink.table("exponents", &exps)?;
    let points: Vec<PlotPoint> = rows
        .iter()
        .map(|r| PlotPoint::new(r.eps.log10(), 1.0 - r.fraction, format!("d={}", r.d)))
        .collect();
    sink.plot(&points)?;
    sink.summary(&json!({
        "count": scan.count,
        "sites": scan.sites,
        "exponents": exps,
        "ordered": exps.windows(2).all(|w| match (w[0].exponent, w[1].exponent) {
            (Some(a), Some(b)) => (w[0].d < w[1].d) == (a > b),
            _ => false,
        }),
    }))
}

#[derive(Serialize)]
struct LineChartRow {
    energy: f64,
    action: f64,
    dl_dh: f64,
    frequency: f64,
    twist: f64,
}

#[derive(Serialize)]
struct PlanarChartRow {
    action: f64,
    angular_momentum: f64,
    energy: f64,
    frequency_l: f64,
    frequency_g: f64,
    det: f64,
    det_coarse: f64,
    det_fine: f64,
    gradient_error: f64,
    flagged: bool,
}

pub fn action_chart(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let cc = ctx
        .loaded
        .config
        .chart
        .clone()
        .ok_or_else(|| CliError::Usage("action-chart needs a [chart] section".into()))?;
    let chart = action_map(&cc.potential, &cc.domain, &cc.quadrature)?;
    let equilibrium = cc
        .equilibrium_guess
        .map(|g| elliptic_point(&cc.potential, None, g))
        .transpose()?;
    if chart.is_planar() {
        let fc = frequency_chart(&chart, &cc.frequency)?;
        let rows: Vec<PlanarChartRow> = fc
            .points
            .iter()
            .map(|p| PlanarChartRow {
                action: p.action,
                angular_momentum: p.angular_momentum,
                energy: p.energy,
                frequency_l: p.frequency[0],
                frequency_g: p.frequency[1],
                det: p.det,
                det_coarse: p.det_coarse,
                det_fine: p.det_fine,
                gradient_error: p.gradient_error,
                flagged: p.flagged,
            })
            .collect();
        sink.table("chart", &rows)?;
        let points: Vec<PlotPoint> = fc.points.iter().map(|p| PlotPoint::new(p.energy, p.det, format!("G={}", p.angular_momentum))).collect();
        sink.plot(&points)?;
        return sink.summary(&json!({
            "planar": true,
            "points": fc.points.len(),
            "min_abs_det": fc.min_abs_det,
            "max_gradient_error": fc.max_gradient_error,
            "max_richardson_gap": fc.max_richardson_gap,
            "flagged": fc.flagged,
            "equilibrium": equilibrium,
        }));
    }
    let (a, b) = cc.domain.energy;
    let n = cc.samples.max(2);
    let rows: Vec<LineChartRow> = (0..n)
        .map(|k| {
            let h = a + (b - a) * k as f64 / (n - 1) as f64;
            let d = chart.derivatives(h, 0.0)?;
            Ok(LineChartRow {
                energy: h,
                action: d.action,
                dl_dh: d.dl_dh,
                frequency: 1.0 / d.dl_dh,
                twist: chart.fitted_derivative(d.action, 2)?,
            })
        })
        .collect::<Result<_, CliError>>()?;
    sink.table("chart", &rows)?;
    let mut points: Vec<PlotPoint> = rows.iter().map(|r| PlotPoint::new(r.action, r.frequency, "frequency")).collect();
    points.extend(rows.iter().map(|r| PlotPoint::new(r.action, r.twist, "twist")));
    sink.plot(&points)?;
    let min_twist = rows.iter().map(|r| r.twist.abs()).fold(f64::INFINITY, f64::min);
    sink.summary(&json!({
        "planar": false,
        "points": rows.len(),
        "fit_residual": chart.fit_residual,
        "min_abs_twist": min_twist,
        "equilibrium": equilibrium,
    }))
}

#[derive(Serialize)]
struct SiteRow {
    site: usize,
    xi: f64,
    base_action: f64,
    base_energy: f64,
    frequency_lo: f64,
    frequency_hi: f64,
    twist: f64,
}

pub fn normal_form(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let model = load_model(ctx)?;
    let (nf, chart) = model
        .normal_form
        .as_ref()
        .ok_or_else(|| CliError::Usage("normal-form needs a mechanical model".into()))?;
    let twists = nf
        .base_actions
        .iter()
        .map(|l| chart.fitted_derivative(*l, 2))
        .collect::<Result<Vec<f64>, _>>()?;
    let rows: Vec<SiteRow> = (0..model.xi.len())
        .map(|i| SiteRow {
            site: i + 1,
            xi: model.xi[i],
            base_action: nf.base_actions[i],
            base_energy: nf.base_energies[i],
            frequency_lo: nf.frequency_box[i].0,
            frequency_hi: nf.frequency_box[i].1,
            twist: twists[i],
        })
        .collect();
    sink.table("sites", &rows)?;
    let mut w = sink.open("series.jsonl")?;
    write_series(&mut w, &nf.series, Some(model.masses.spec()), None)?;
    w.flush()?;
    let p1 = check_p1(&model.xi, &twists, &ConditionConfig::default());
    sink.summary(&json!({
        "terms": nf.series.len(),
        "coupling_norm": nf.coupling_norm,
        "energy_offset": nf.energy_offset,
        "frequency_mismatch": nf.frequency_mismatch,
        "aliasing_tail": nf.aliasing_tail,
        "truncation_error": nf.truncation_error,
        "p1": p1,
    }))
}

#[derive(Serialize)]
struct CountRow {
    gamma: f64,
    scale: f64,
    boxes: usize,
}

#[derive(Serialize)]
struct DimensionRow {
    gamma: f64,
    dimension: f64,
    expected: f64,
    residual_rms: f64,
    degenerate: bool,
}

pub fn box_dim(ctx: &Context, sink: &mut Sink) -> Result<(), CliError> {
    let bc: BoxDimConfig = ctx.loaded.config.box_dim.clone().unwrap_or_default();
    let mut counts = Vec::new();
    let mut dims = Vec::new();
    for &gamma in &bc.gammas {
        if !(gamma > 0.0) {
            return Err(CliError::Usage(format!("gamma = {gamma} must be positive")));
        }
        let seq: Vec<f64> = (1..=bc.points).map(|n| (n as f64).powf(-gamma)).collect();
        let range = 1.0 - (bc.points as f64).powf(-gamma);
        let scales = geometric_scales(bc.scale_hi * range, bc.scale_lo * range, bc.scale_count);
        let b = box_dimension(&seq, &scales)?;
        counts.extend(b.counts.iter().map(|(s, c)| CountRow { gamma, scale: *s, boxes: *c }));
        dims.push(DimensionRow {
            gamma,
            dimension: b.dimension,
            expected: 1.0 / (1.0 + gamma),
            residual_rms: b.residual_rms,
            degenerate: b.degenerate,
        });
    }
    sink.table("counts", &counts)?;
    sink.table("dimensions", &dims)?;
    let points: Vec<PlotPoint> = counts
        .iter()
        .map(|c| PlotPoint::new((1.0 / c.scale).ln(), (c.boxes as f64).ln(), format!("gamma={}", c.gamma)))
        .collect();
    sink.plot(&points)?;
    sink.summary(&json!({ "points": bc.points, "dimensions": dims }))
}
