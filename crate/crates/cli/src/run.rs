//! Fully resolved commands and their execution.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mapflux_core::classify::{trichotomy, PathEvidence};
use mapflux_core::duality::{
    invariance_tv, mirror_tv, occupation_histogram, reversal_check, stationary_initializer,
};
use mapflux_core::fluctuation::{
    exponential_clock, final_excursion_mass_estimate, g_at_clock, gbar_at_horizons, summarize,
    ExpSamples, FluctuationSummary, LaplaceEstimate,
};
use mapflux_core::io::{
    fmt_f64, read_map_path, read_ssmp_path, write_json, write_map_path, write_ssmp_path,
    PathMetadata,
};
use mapflux_core::lamperti::{a_table, image_grid, map_to_ssmp, ssmp_to_map, tau_table, uniform_output_grid};
use mapflux_core::models::{analytic_sup, generator_check, simulate_map, simulate_ssmp};
use mapflux_core::oracle::{enumerate_discrete_map, equivalence_suite};
use mapflux_core::parallel::map_indexed;
use mapflux_core::{Error, ModelSpec, OracleSpec, Result, SimulationConfig, Thresholds, UnitVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Map,
    Ssmp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    MapToSsmp,
    SsmpToMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridChoice {
    Image,
    Uniform,
}

/// Everything a run needs, with no reference to flags or config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunSpec {
    Simulate {
        config: SimulationConfig,
        kind: PathKind,
        theta0: Option<f64>,
        x0: [f64; 2],
    },
    Transform {
        input: PathBuf,
        direction: Direction,
        alpha: f64,
        grid: GridChoice,
    },
    Fluctuation {
        config: SimulationConfig,
        q: f64,
        lambda_grid: Vec<f64>,
        horizons: Vec<f64>,
        negate: bool,
        theta0: Option<f64>,
    },
    Classify {
        config: SimulationConfig,
        thresholds: Thresholds,
        negate: bool,
        theta0: Option<f64>,
    },
    VerifyDuality {
        config: SimulationConfig,
        t: f64,
        n: u64,
        occupation_time: f64,
        occupation_paths: u64,
        bins: usize,
        invariance_paths: u64,
    },
    VerifyLyapunov {
        model: ModelSpec,
        points: usize,
        h: f64,
        margin: f64,
        tolerance: f64,
    },
    Oracle {
        spec: OracleSpec,
        samples: u64,
        seed: u64,
        lambdas: Vec<f64>,
    },
}

impl RunSpec {
    pub fn config(&self) -> Option<&SimulationConfig> {
        match self {
            RunSpec::Simulate { config, .. }
            | RunSpec::Fluctuation { config, .. }
            | RunSpec::Classify { config, .. }
            | RunSpec::VerifyDuality { config, .. } => Some(config),
            _ => None,
        }
    }

    pub fn master_seed(&self) -> Option<u64> {
        match self {
            RunSpec::Oracle { seed, .. } => Some(*seed),
            _ => self.config().map(|c| c.master_seed),
        }
    }
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Output file names relative to the output directory, in write order.
    pub outputs: Vec<String>,
    pub wall_rejections: u64,
    /// A verification suite ran and failed.
    pub verification_failed: bool,
    /// One-line human summary.
    pub message: String,
}

fn start_theta(model: &ModelSpec, theta0: Option<f64>) -> UnitVector {
    theta0.map_or_else(|| model.default_theta0(), UnitVector::from_angle)
}

fn write_lines(file: &Path, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    writeln!(w, "{header}")?;
    for r in rows {
        writeln!(w, "{}", r.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn execute(run: &RunSpec, out: &Path, workers: usize) -> Result<Outcome> {
    std::fs::create_dir_all(out)?;
    match run {
        RunSpec::Simulate {
            config,
            kind,
            theta0,
            x0,
        } => simulate(config, *kind, *theta0, *x0, out, workers),
        RunSpec::Transform {
            input,
            direction,
            alpha,
            grid,
        } => transform(input, *direction, *alpha, *grid, out),
        RunSpec::Fluctuation {
            config,
            q,
            lambda_grid,
            horizons,
            negate,
            theta0,
        } => fluctuation(config, *q, lambda_grid, horizons, *negate, *theta0, out, workers),
        RunSpec::Classify {
            config,
            thresholds,
            negate,
            theta0,
        } => classify(config, thresholds, *negate, *theta0, out, workers),
        RunSpec::VerifyDuality {
            config,
            t,
            n,
            occupation_time,
            occupation_paths,
            bins,
            invariance_paths,
        } => duality(
            config,
            *t,
            *n,
            *occupation_time,
            *occupation_paths,
            *bins,
            *invariance_paths,
            out,
            workers,
        ),
        RunSpec::VerifyLyapunov {
            model,
            points,
            h,
            margin,
            tolerance,
        } => lyapunov(model, *points, *h, *margin, *tolerance, out),
        RunSpec::Oracle {
            spec,
            samples,
            seed,
            lambdas,
        } => oracle(spec, *samples, *seed, lambdas, out, workers),
    }
}

fn simulate(
    config: &SimulationConfig,
    kind: PathKind,
    theta0: Option<f64>,
    x0: [f64; 2],
    out: &Path,
    workers: usize,
) -> Result<Outcome> {
    config.validate()?;
    let th = start_theta(&config.model, theta0);
    if kind == PathKind::Map {
        config.model.check_in_arc(th, config.wall_delta).map_err(|e| {
            Error::Validation(format!("theta0 is not inside the arc: {e}"))
        })?;
    }
    let per_path = map_indexed(config.n_paths, workers, |i| {
        let stem = format!("path_{i:06}");
        let (rejections, kill_index) = match kind {
            PathKind::Map => {
                let o = simulate_map(config, th, i)?;
                write_map_path(&out.join(format!("{stem}.csv")), &o.path)?;
                (o.wall_rejections, o.path.kill_index)
            }
            PathKind::Ssmp => {
                let o = simulate_ssmp(config, x0, i)?;
                write_ssmp_path(&out.join(format!("{stem}.csv")), &o.path)?;
                (o.wall_rejections, o.path.kill_index)
            }
        };
        let meta = PathMetadata {
            model: config.model.clone(),
            alpha: config.alpha,
            dt: config.dt,
            t_max: config.t_max,
            seed: config.master_seed,
            kill_index,
        };
        write_json(&out.join(format!("{stem}.json")), &meta)?;
        Ok((stem, rejections))
    })?;
    let mut o = Outcome::default();
    for (stem, r) in per_path {
        o.outputs.push(format!("{stem}.csv"));
        o.outputs.push(format!("{stem}.json"));
        o.wall_rejections += r;
    }
    o.message = format!(
        "wrote {} {} paths of {} to {}",
        config.n_paths,
        match kind {
            PathKind::Map => "MAP",
            PathKind::Ssmp => "self-similar",
        },
        config.model.label(),
        out.display()
    );
    Ok(o)
}

#[derive(Serialize)]
struct TransformInfo<'a> {
    input: &'a Path,
    direction: Direction,
    alpha: f64,
    grid: GridChoice,
    output_points: usize,
    kill_index: Option<usize>,
}

fn transform(input: &Path, direction: Direction, alpha: f64, grid: GridChoice, out: &Path) -> Result<Outcome> {
    let file = out.join("transformed.csv");
    let (points, kill_index) = match direction {
        Direction::MapToSsmp => {
            let p = read_map_path(input)?;
            let table = tau_table(&p, alpha)?;
            let g = match grid {
                GridChoice::Image => image_grid(&table)?,
                GridChoice::Uniform => uniform_output_grid(table.mass(), p.len())?,
            };
            let x = map_to_ssmp(&p, alpha, &g)?;
            write_ssmp_path(&file, &x)?;
            (x.len(), x.kill_index)
        }
        Direction::SsmpToMap => {
            let x = read_ssmp_path(input)?;
            let table = a_table(&x, alpha)?;
            let g = match grid {
                GridChoice::Image => image_grid(&table)?,
                GridChoice::Uniform => uniform_output_grid(table.mass(), x.len())?,
            };
            let p = ssmp_to_map(&x, alpha, &g)?;
            write_map_path(&file, &p)?;
            (p.len(), p.kill_index)
        }
    };
    write_json(
        &out.join("transformed.json"),
        &TransformInfo {
            input,
            direction,
            alpha,
            grid,
            output_points: points,
            kill_index,
        },
    )?;
    Ok(Outcome {
        outputs: vec!["transformed.csv".into(), "transformed.json".into()],
        message: format!("transformed {} into {points} points", input.display()),
        ..Outcome::default()
    })
}

#[derive(Serialize)]
struct ClockLaplace {
    lambda: f64,
    gbar: Option<LaplaceEstimate>,
    gunder: Option<LaplaceEstimate>,
}

#[derive(Serialize)]
struct FluctuationDiagnostics {
    monotone_in_lambda: bool,
    monotone_in_horizon: bool,
    q: f64,
    clock_rejections: u64,
    wall_rejections: u64,
    exp_clock: Vec<ClockLaplace>,
}

#[derive(Serialize)]
struct FluctuationOutput {
    model: String,
    negated: bool,
    lambda_grid: Vec<f64>,
    horizons: Vec<f64>,
    laplace_matrix: Vec<Vec<f64>>,
    stderr_matrix: Vec<Vec<f64>>,
    proxy_value: f64,
    diagnostics: FluctuationDiagnostics,
}

#[allow(clippy::too_many_arguments)]
fn fluctuation(
    config: &SimulationConfig,
    q: f64,
    lambda_grid: &[f64],
    horizons: &[f64],
    negate: bool,
    theta0: Option<f64>,
    out: &Path,
    workers: usize,
) -> Result<Outcome> {
    config.validate()?;
    let horizon = config.grid()?.last();
    if !(q > 0.0) || horizon < 10.0 / q {
        return Err(Error::Validation(format!(
            "horizon {horizon} must be at least 10/q for q = {q}"
        )));
    }
    if horizons.iter().any(|h| *h > horizon + 1e-9) {
        return Err(Error::Validation(format!("horizons must not exceed t_max = {horizon}")));
    }
    let th = start_theta(&config.model, theta0);
    let eps = config.epsilon_zero;
    let per_path = map_indexed(config.n_paths, workers, |i| {
        let o = simulate_map(config, th, i)?;
        let p = if negate { o.path.negated() } else { o.path };
        let s = summarize(&p, eps);
        let ladder = gbar_at_horizons(&p, horizons, eps)?;
        let clock = g_at_clock(&p, exponential_clock(config.master_seed, i, q)?, eps);
        Ok((s, ladder, clock, o.wall_rejections))
    })?;
    let rows: Vec<Vec<f64>> = per_path.iter().map(|r| r.1.clone()).collect();
    let fm = final_excursion_mass_estimate(&rows, lambda_grid, horizons)?;
    let mut samples = ExpSamples {
        q,
        g_bar: vec![],
        g_under: vec![],
        since_sup: vec![],
        rejections: 0,
    };
    let mut wall = 0;
    for (_, _, c, r) in &per_path {
        wall += r;
        match c {
            Some((gb, gu, gap)) => {
                samples.g_bar.push(*gb);
                samples.g_under.push(*gu);
                samples.since_sup.push(*gap);
            }
            None => samples.rejections += 1,
        }
    }
    let exp_clock = lambda_grid
        .iter()
        .map(|&lambda| ClockLaplace {
            lambda,
            gbar: samples.laplace_gbar(lambda).ok(),
            gunder: samples.laplace_gunder(lambda).ok(),
        })
        .collect();
    let summaries: Vec<FluctuationSummary> = per_path.iter().map(|r| r.0).collect();
    write_lines(
        &out.join("summaries.csv"),
        "path,g_bar,g_under,sup,inf,horizon",
        summaries.iter().enumerate().map(|(i, s)| {
            vec![
                i.to_string(),
                fmt_f64(s.g_bar),
                fmt_f64(s.g_under),
                fmt_f64(s.sup),
                fmt_f64(s.inf),
                fmt_f64(s.horizon),
            ]
        }),
    )?;
    let proxy = fm.proxy_value;
    write_json(
        &out.join("summary.json"),
        &FluctuationOutput {
            model: config.model.label(),
            negated: negate,
            lambda_grid: fm.lambda_grid,
            horizons: fm.horizons,
            laplace_matrix: fm.laplace_matrix,
            stderr_matrix: fm.stderr_matrix,
            proxy_value: proxy,
            diagnostics: FluctuationDiagnostics {
                monotone_in_lambda: fm.monotone_in_lambda,
                monotone_in_horizon: fm.monotone_in_horizon,
                q,
                clock_rejections: samples.rejections,
                wall_rejections: wall,
                exp_clock,
            },
        },
    )?;
    Ok(Outcome {
        outputs: vec!["summaries.csv".into(), "summary.json".into()],
        wall_rejections: wall,
        verification_failed: false,
        message: format!("final-excursion proxy {proxy:.4}"),
    })
}

fn classify(
    config: &SimulationConfig,
    thresholds: &Thresholds,
    negate: bool,
    theta0: Option<f64>,
    out: &Path,
    workers: usize,
) -> Result<Outcome> {
    config.validate()?;
    let th = start_theta(&config.model, theta0);
    let per_path = map_indexed(config.n_paths, workers, |i| {
        let o = simulate_map(config, th, i)?;
        let e = PathEvidence::from_path(&o.path, config.burn_in, config.epsilon_zero)?;
        Ok((if negate { e.mirrored() } else { e }, o.wall_rejections))
    })?;
    let evidence: Vec<PathEvidence> = per_path.iter().map(|r| r.0).collect();
    let c = trichotomy(&evidence, thresholds)?;
    write_json(&out.join("classification.json"), &c)?;
    Ok(Outcome {
        outputs: vec!["classification.json".into()],
        wall_rejections: per_path.iter().map(|r| r.1).sum(),
        verification_failed: false,
        message: format!("{:?} (slope {:.4}, consistent: {})", c.verdict, c.slope, c.consistent),
    })
}

#[derive(Serialize)]
struct DualityOutput {
    model: String,
    reversal: mapflux_core::duality::ReversalReport,
    /// Mirror-symmetry TV of π̂ at full and 8× coarsened resolution.
    mirror_tv: f64,
    mirror_tv_coarse: f64,
    /// TV between π̂ and π̂ evolved for one time unit (16× coarsened bins).
    invariance_tv: Option<f64>,
    pass: bool,
}

#[allow(clippy::too_many_arguments)]
fn duality(
    config: &SimulationConfig,
    t: f64,
    n: u64,
    occupation_time: f64,
    occupation_paths: u64,
    bins: usize,
    invariance_paths: u64,
    out: &Path,
    workers: usize,
) -> Result<Outcome> {
    let hist = occupation_histogram(config, occupation_time, occupation_paths, bins, workers)?;
    let sampler = stationary_initializer(&hist)?;
    let reversal = reversal_check(config, &sampler, t, n, config.epsilon_zero, workers)?;
    let coarse = if bins % 8 == 0 { hist.coarsen(8)? } else { hist.clone() };
    let inv = if invariance_paths > 0 {
        let factor = if bins % 16 == 0 { 16 } else { 1 };
        Some(invariance_tv(config, &sampler, 1.0, invariance_paths, factor, workers)?)
    } else {
        None
    };
    let report = DualityOutput {
        model: config.model.label(),
        reversal,
        mirror_tv: mirror_tv(&hist)?,
        mirror_tv_coarse: mirror_tv(&coarse)?,
        invariance_tv: inv,
        pass: reversal.pass,
    };
    let norm = hist.normalized();
    write_lines(
        &out.join("pi_hat.csv"),
        "angle_lo,angle_hi,probability",
        norm.iter()
            .enumerate()
            .map(|(i, p)| vec![fmt_f64(hist.edges[i]), fmt_f64(hist.edges[i + 1]), fmt_f64(*p)]),
    )?;
    write_json(&out.join("duality.json"), &report)?;
    Ok(Outcome {
        outputs: vec!["pi_hat.csv".into(), "duality.json".into()],
        wall_rejections: 0,
        verification_failed: !reversal.pass,
        message: format!(
            "KS {:.4} vs critical {:.4}: {}",
            reversal.ks_stat,
            reversal.threshold,
            if reversal.pass { "pass" } else { "FAIL" }
        ),
    })
}

#[derive(Serialize)]
struct LyapunovOutput {
    report: mapflux_core::models::GeneratorReport,
    /// Supremum of the published form over the arc (free Bessel only), with
    /// the expected value 3√2 at the symmetric angle π/4.
    sup: Option<SupCheck>,
    pass: bool,
}

#[derive(Serialize)]
struct SupCheck {
    value: f64,
    angle: f64,
    expected: f64,
    pass: bool,
}

fn lyapunov(model: &ModelSpec, points: usize, h: f64, margin: f64, tolerance: f64, out: &Path) -> Result<Outcome> {
    model.validate()?;
    let report = generator_check(model, points, h, margin, tolerance)?;
    let sup = if *model == ModelSpec::FreeBessel2D {
        let (value, angle) = analytic_sup(model, 1e-9)?;
        let expected = 3.0 * 2f64.sqrt();
        Some(SupCheck {
            value,
            angle,
            expected,
            pass: (value - expected).abs() <= 1e-6,
        })
    } else {
        None
    };
    let pass = report.analytic_agrees && sup.as_ref().is_none_or(|s| s.pass);
    write_lines(
        &out.join("lyapunov_points.csv"),
        "angle,analytic,finite_difference,rederived,rel_error_analytic,rel_error_rederived",
        report.points.iter().map(|p| {
            vec![
                fmt_f64(p.angle),
                fmt_f64(p.analytic),
                fmt_f64(p.finite_difference),
                fmt_f64(p.rederived),
                fmt_f64(p.rel_error_analytic),
                fmt_f64(p.rel_error_rederived),
            ]
        }),
    )?;
    let msg = format!(
        "{}: max relative error published {:.3e}, rederived {:.3e} (tolerance {tolerance:e})",
        report.model, report.max_rel_error_analytic, report.max_rel_error_rederived
    );
    write_json(&out.join("lyapunov.json"), &LyapunovOutput { report, sup, pass })?;
    Ok(Outcome {
        outputs: vec!["lyapunov_points.csv".into(), "lyapunov.json".into()],
        wall_rejections: 0,
        verification_failed: !pass,
        message: msg,
    })
}

fn oracle(spec: &OracleSpec, samples: u64, seed: u64, lambdas: &[f64], out: &Path, workers: usize) -> Result<Outcome> {
    let t = enumerate_discrete_map(spec)?;
    write_lines(
        &out.join("tables.csv"),
        "m,gbar,gunder,sup,inf,ladder_count,ladder_epoch",
        (0..=t.horizon).map(|m| {
            let mut r = vec![m.to_string()];
            for col in [&t.gbar, &t.gunder, &t.sup, &t.inf, &t.ladder_count, &t.ladder_epoch] {
                r.push(fmt_f64(col[m]));
            }
            r
        }),
    )?;
    write_lines(
        &out.join("excursion_end.csv"),
        "state,height,mass",
        (0..2).flat_map(|s| {
            let col = &t.excursion_end[s];
            (0..col.len()).map(move |h| vec![s.to_string(), h.to_string(), fmt_f64(col[h])])
        }),
    )?;
    let report = equivalence_suite(spec, samples, seed, lambdas, workers)?;
    write_json(&out.join("equivalence.json"), &report)?;
    Ok(Outcome {
        outputs: vec!["tables.csv".into(), "excursion_end.csv".into(), "equivalence.json".into()],
        wall_rejections: 0,
        verification_failed: !report.pass,
        message: format!(
            "oracle n={}: TV(gbar) {:.4}, equivalence {}",
            spec.horizon,
            report.gbar_tv,
            if report.pass { "pass" } else { "FAIL" }
        ),
    })
}
