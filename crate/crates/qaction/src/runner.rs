//! Experiment pipelines behind the subcommands.

use std::path::Path;

use qaction_core::fitter::{fit_temperature_series, one_loop_coefficients, FitResult, FitSeries};
use qaction_core::instanton::{extract_instanton, instanton_from_fit};
use qaction_core::model::BoundarySet;
use qaction_core::oracle::PropagatorOracle;
use qaction_core::pimc::{pimc_propagator, PimcOutput};
use qaction_core::spectral::{ground_state_energy, solve_eigen};
use qaction_core::PropagatorTable;

use crate::config::{Manifest, OracleKind, RunConfig, RunInfo, System};
use crate::error::RunError;
use crate::exec::Pool;
use crate::output::{self, num, tag, CsvFile, OutputDir};

/// What a subcommand produced, for the console.
#[derive(Debug, Default)]
pub struct Report {
    pub lines: Vec<String>,
    pub files: Vec<String>,
}

fn boundaries(cfg: &RunConfig) -> Result<Vec<BoundarySet>, RunError> {
    cfg.intervals
        .iter()
        .map(|&a| BoundarySet::symmetric(a, cfg.points).map_err(RunError::from))
        .collect()
}

fn exact_tables(
    cfg: &RunConfig,
    kind: OracleKind,
    t: f64,
    sets: &[BoundarySet],
    exec: &Pool,
) -> Result<Vec<PropagatorTable>, RunError> {
    let p = cfg.classical(t)?;
    match kind {
        OracleKind::Spectral => cfg.spectral()?.tables(&p.potential, p.mass, t, sets, exec),
        OracleKind::Transfer => cfg.transfer()?.tables(&p.potential, p.mass, t, sets, exec),
        OracleKind::ClosedForm => cfg.closed_form().tables(&p.potential, p.mass, t, sets, exec),
        OracleKind::Pimc | OracleKind::Both => unreachable!("not an exact oracle"),
    }
    .map_err(RunError::at("oracle"))
}

fn pimc_tables(
    cfg: &RunConfig,
    t_index: usize,
    t: f64,
    sets: &[BoundarySet],
    exec: &Pool,
) -> Result<Vec<PimcOutput>, RunError> {
    let p = cfg.classical(t)?;
    sets.iter()
        .enumerate()
        .map(|(ai, b)| {
            let lattice = cfg.pimc(t, cfg.table_seed(t_index, ai)).lattice;
            pimc_propagator(&p.potential, p.mass, b, t, &lattice, cfg.units(), exec).map_err(RunError::at("pimc"))
        })
        .collect()
}

fn label(kind: OracleKind) -> &'static str {
    match kind {
        OracleKind::Spectral => "spectral",
        OracleKind::Transfer => "transfer",
        OracleKind::Pimc => "pimc",
        OracleKind::ClosedForm => "closed_form",
        OracleKind::Both => "both",
    }
}

fn system_name(cfg: &RunConfig) -> String {
    match cfg.system {
        System::Harmonic => format!("harmonic m={} omega={}", cfg.mass, cfg.omega),
        System::WeakAnharmonic => format!("weak anharmonic m={} omega={} lambda={}", cfg.mass, cfg.omega, cfg.lambda),
        System::Quartic => format!("quartic m={} v4={}", cfg.mass, cfg.v4),
        System::DoubleWell => format!("double well m={} A={} a={}", cfg.mass, cfg.amplitude, cfg.half_distance),
        System::Custom => format!("custom m={} v={:?}", cfg.mass, cfg.coefficients),
    }
}

/// `tables[t][interval]` from one oracle, writing tables and sidecars.
fn collect_tables(
    cfg: &RunConfig,
    kind: OracleKind,
    sets: &[BoundarySet],
    exec: &Pool,
    out: &mut OutputDir,
) -> Result<Vec<Vec<PropagatorTable>>, RunError> {
    let name = label(kind);
    let mut all = Vec::with_capacity(cfg.transition_times.len());
    for (ti, &t) in cfg.transition_times.iter().enumerate() {
        let tables = if kind == OracleKind::Pimc {
            let outs = pimc_tables(cfg, ti, t, sets, exec)?;
            for (o, &a) in outs.iter().zip(&cfg.intervals) {
                let comment = format!(
                    "pimc diagnostics, {}, T={t}, interval ±{a}, epsilon={}, epsilon_too_coarse={}",
                    system_name(cfg),
                    num(o.epsilon),
                    o.epsilon_too_coarse
                );
                out.write(
                    &format!("pimc_diagnostics_T{}_a{}.csv", tag(t), tag(a)),
                    &output::diagnostics_csv(&o.diagnostics, &comment),
                )?;
            }
            outs.into_iter().map(|o| o.table).collect()
        } else {
            exact_tables(cfg, kind, t, sets, exec)?
        };
        for (table, &a) in tables.iter().zip(&cfg.intervals) {
            let comment = format!("propagator table ({name}), {}, T={t}, J={}", system_name(cfg), cfg.points);
            out.write(
                &format!("table_{name}_T{}_a{}.csv", tag(t), tag(a)),
                &output::table_csv(table, &comment),
            )?;
        }
        all.push(tables);
    }
    Ok(all)
}

/// Fits `fits[interval][t]`, warm-started along `T` for each interval.
fn fit_all(
    cfg: &RunConfig,
    tables: &[Vec<PropagatorTable>],
    exec: &Pool,
) -> Result<Vec<FitSeries>, RunError> {
    let classical = cfg.classical(cfg.transition_times[0])?;
    let options = cfg.fit_options();
    (0..cfg.intervals.len())
        .map(|ai| {
            let column: Vec<PropagatorTable> = tables.iter().map(|row| row[ai].clone()).collect();
            fit_temperature_series(&column, &classical, cfg.degree, &options, exec).map_err(RunError::at("fit"))
        })
        .collect()
}

fn interval_series(cfg: &RunConfig, fits: &[FitSeries], ti: usize) -> Result<FitSeries, RunError> {
    let mut order: Vec<usize> = (0..cfg.intervals.len()).collect();
    order.sort_by(|&a, &b| cfg.intervals[a].total_cmp(&cfg.intervals[b]));
    let scan = order.iter().map(|&a| cfg.intervals[a]).collect();
    let results = order.iter().map(|&a| fits[a].results[ti].clone()).collect();
    FitSeries::new(scan, results).map_err(RunError::from)
}

fn pipeline(
    cfg: &RunConfig,
    kind: OracleKind,
    sets: &[BoundarySet],
    exec: &Pool,
    out: &mut OutputDir,
    report: &mut Report,
) -> Result<(), RunError> {
    let name = label(kind);
    let tables = collect_tables(cfg, kind, sets, exec, out)?;
    let fits = fit_all(cfg, &tables, exec)?;
    let e0 = solve_eigen(
        &cfg.potential()?,
        cfg.mass,
        &cfg.spectral()?.grid,
        1,
        cfg.units(),
    )
    .ok()
    .map(|es| ground_state_energy(&es));

    let degree = cfg.degree;
    let mut flow = CsvFile::with_header(
        format!(
            "renormalized parameters vs transition time ({name}), {}, J={}, mean and sigma over {} intervals; e0 is the exact ground-state energy",
            system_name(cfg),
            cfg.points,
            cfg.intervals.len()
        ),
        {
            let mut h = vec!["T".to_string(), "beta".into(), "tau".into()];
            let cols: Vec<String> = std::iter::once("m".to_string())
                .chain((0..=degree).map(|k| format!("v{k}")))
                .chain(std::iter::once("logZ".to_string()))
                .collect();
            h.extend(cols.iter().cloned());
            h.extend(cols.iter().map(|c| format!("{c}_sigma")));
            h.extend(cols[..degree + 2].iter().map(|c| format!("{c}_err")));
            h.push("e0".into());
            h
        },
    );
    for (ti, &t) in cfg.transition_times.iter().enumerate() {
        let series = interval_series(cfg, &fits, ti)?;
        let comment = format!(
            "renormalized parameters vs interval ({name}), {}, T={t}, J={}; v0 with unit normalization",
            system_name(cfg),
            cfg.points
        );
        out.write(&format!("fits_{name}_T{}.csv", tag(t)), &output::series_csv(&series, &comment, true))?;
        let units = cfg.units();
        let mut row = vec![num(t), num(units.beta(t)), num(units.temperature(t))];
        row.extend(series.mean.iter().map(|&x| num(x)));
        row.extend(series.sigma.iter().map(|&x| num(x)));
        let n = series.results.len() as f64;
        for c in 0..degree + 2 {
            let e: f64 = series.results.iter().map(|r| r.table_errors()[c]).sum::<f64>() / n;
            row.push(num(e));
        }
        row.push(e0.map(num).unwrap_or_default());
        flow.push(row);
        let m = &series.mean;
        report.lines.push(format!(
            "{name} T={t}: m={} v2={} v4={} (mean over {} intervals)",
            num(m[0]),
            num(m.get(3).copied().unwrap_or(0.0)),
            num(m.get(5).copied().unwrap_or(0.0)),
            series.results.len()
        ));
    }
    out.write(&format!("tflow_{name}.csv"), &flow)?;

    if cfg.system == System::WeakAnharmonic {
        let (d2, d4) = one_loop_coefficients(cfg.mass, cfg.omega, cfg.lambda, cfg.hbar)?;
        let p = cfg.potential()?;
        let mut csv = CsvFile::new(
            format!("fitted shifts vs one-loop prediction ({name}), {}", system_name(cfg)),
            &["T", "interval", "lambda", "dv2", "dv2_err", "dv2_one_loop", "dv4", "dv4_err", "dv4_one_loop"],
        );
        for (series, &a) in fits.iter().zip(&cfg.intervals) {
            for r in &series.results {
                csv.push(vec![
                    num(r.transition_time()),
                    format!("{},{}", num(-a), num(a)),
                    num(cfg.lambda),
                    num(r.coeff(2) - p.coeff(2)),
                    num(r.coeff_errors[2]),
                    num(d2),
                    num(r.coeff(4) - p.coeff(4)),
                    num(r.coeff_errors.get(4).copied().unwrap_or(0.0)),
                    num(d4),
                ]);
            }
        }
        out.write(&format!("one_loop_{name}.csv"), &csv)?;
    }

    if cfg.system == System::DoubleWell || (cfg.potential()?.even_part().coeff(2) < 0.0) {
        let mut summary = output::instanton_summary_header();
        let a = cfg.intervals[0];
        for (ti, &t) in cfg.transition_times.iter().enumerate() {
            let fit: &FitResult = &fits[0].results[ti];
            let r = instanton_from_fit(fit).map_err(|e| e.to_string());
            if let Ok(p) = &r {
                let comment = format!(
                    "quantum instanton of the action fitted ({name}) at T={t}, interval ±{a}, {}",
                    system_name(cfg)
                );
                out.write(
                    &format!("instanton_{name}_T{}.csv", tag(t)),
                    &output::profile_csv(p, &comment),
                )?;
            } else if let Err(e) = &r {
                report.lines.push(format!("{name} T={t}: no instanton: {e}"));
            }
            output::instanton_summary_row(
                &mut summary,
                &format!("fit {name} interval ±{a}"),
                Some(t),
                Some(cfg.units().temperature(t)),
                &r,
            );
        }
        out.write(&format!("instanton_summary_{name}.csv"), &summary)?;
    }
    Ok(())
}

fn write_manifest(
    cfg: &RunConfig,
    command: &str,
    exec: &Pool,
    out: &mut OutputDir,
) -> Result<(), RunError> {
    let seeds = (0..cfg.transition_times.len())
        .flat_map(|ti| (0..cfg.intervals.len()).map(move |ai| (ti, ai)))
        .map(|(ti, ai)| cfg.table_seed(ti, ai))
        .collect();
    let mut files = out.files().to_vec();
    files.push("manifest.toml".into());
    let manifest = Manifest {
        run: RunInfo {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            threads: exec.threads(),
            table_seeds: seeds,
            files,
        },
        config: cfg.clone(),
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    out.write_text("manifest.toml", &text)
}

fn finish(cfg: &RunConfig, command: &str, exec: &Pool, mut out: OutputDir, mut report: Report) -> Result<Report, RunError> {
    write_manifest(cfg, command, exec, &mut out)?;
    report.files = out.files().to_vec();
    Ok(report)
}

/// Tables, fits, interval and temperature series, instantons for double
/// wells and one-loop comparisons for weak anharmonicity.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path, exec: &Pool) -> Result<Report, RunError> {
    cfg.validate()?;
    let sets = boundaries(cfg)?;
    let mut out = OutputDir::create(out_dir)?;
    let mut report = Report::default();
    let kinds: Vec<OracleKind> = match cfg.oracle {
        OracleKind::Both => vec![cfg.reference, OracleKind::Pimc],
        k => vec![k],
    };
    if cfg.system == System::DoubleWell {
        instanton_classical(cfg, &mut out, &mut report)?;
    }
    for kind in kinds {
        pipeline(cfg, kind, &sets, exec, &mut out, &mut report)?;
    }
    finish(cfg, "run", exec, out, report)
}

/// Per-entry pulls `(G_pimc − G_ref) / σ` against the exact reference.
pub fn compare_oracles(cfg: &RunConfig, out_dir: &Path, exec: &Pool) -> Result<Report, RunError> {
    cfg.validate()?;
    let sets = boundaries(cfg)?;
    let mut out = OutputDir::create(out_dir)?;
    let mut report = Report::default();
    let reference = label(cfg.reference);
    let mut csv = CsvFile::new(
        format!("pimc vs {reference} amplitudes, {}, J={}", system_name(cfg), cfg.points),
        &["T", "interval", "x_in", "x_fi", "G_reference", "G_pimc", "sigma", "pull"],
    );
    let mut pulls = Vec::new();
    for (ti, &t) in cfg.transition_times.iter().enumerate() {
        let exact = exact_tables(cfg, cfg.reference, t, &sets, exec)?;
        let mc = pimc_tables(cfg, ti, t, &sets, exec)?;
        for ((e, m), &a) in exact.iter().zip(&mc).zip(&cfg.intervals) {
            let comment = format!(
                "pimc diagnostics, {}, T={t}, interval ±{a}, epsilon={}, epsilon_too_coarse={}",
                system_name(cfg),
                num(m.epsilon),
                m.epsilon_too_coarse
            );
            out.write(
                &format!("pimc_diagnostics_T{}_a{}.csv", tag(t), tag(a)),
                &output::diagnostics_csv(&m.diagnostics, &comment),
            )?;
            if m.epsilon_too_coarse {
                report.lines.push(format!("T={t} ±{a}: lattice spacing too coarse, expect biased pulls"));
            }
            let x = e.boundary.points();
            for i in 0..x.len() {
                for j in 0..x.len() {
                    let (g, h, s) = (e.get(i, j), m.table.get(i, j), m.table.sigma(i, j));
                    let pull = (h - g) / s;
                    pulls.push(pull);
                    csv.push(vec![
                        num(t),
                        format!("{},{}", num(-a), num(a)),
                        num(x[i]),
                        num(x[j]),
                        num(g),
                        num(h),
                        num(s),
                        num(pull),
                    ]);
                }
            }
        }
    }
    out.write("compare.csv", &csv)?;
    let n = pulls.len() as f64;
    let inside = pulls.iter().filter(|p| p.abs() < 3.0).count();
    let mean = pulls.iter().sum::<f64>() / n;
    report.lines.push(format!(
        "{inside}/{} entries with |pull| < 3; mean pull {:.3} (expected 0 ± {:.3})",
        pulls.len(),
        mean,
        1.0 / n.sqrt()
    ));
    finish(cfg, "compare-oracles", exec, out, report)
}

fn instanton_classical(cfg: &RunConfig, out: &mut OutputDir, report: &mut Report) -> Result<(), RunError> {
    let p = extract_instanton(&cfg.potential()?, cfg.mass, 0.0).map_err(RunError::at("instanton"))?;
    out.write(
        "instanton_classical.csv",
        &output::profile_csv(&p, &format!("classical instanton, {}", system_name(cfg))),
    )?;
    let mut summary = output::instanton_summary_header();
    output::instanton_summary_row(&mut summary, "classical", None, None, &Ok(p.clone()));
    out.write("instanton_summary_classical.csv", &summary)?;
    report.lines.push(format!(
        "classical instanton: action {} wells ±{}",
        num(p.action),
        num(p.well)
    ));
    Ok(())
}

/// Classical instanton profile and action.
pub fn instanton(cfg: &RunConfig, out_dir: &Path, exec: &Pool) -> Result<Report, RunError> {
    cfg.validate()?;
    let mut out = OutputDir::create(out_dir)?;
    let mut report = Report::default();
    instanton_classical(cfg, &mut out, &mut report)?;
    finish(cfg, "instanton", exec, out, report)
}

/// One-loop shifts of `v2` and `v4` for the weakly anharmonic oscillator.
pub fn one_loop(cfg: &RunConfig, out_dir: &Path, exec: &Pool) -> Result<Report, RunError> {
    cfg.validate()?;
    if cfg.system != System::WeakAnharmonic {
        return Err(RunError::Config {
            field: "system".into(),
            reason: "one-loop shifts need system = \"weak-anharmonic\"".into(),
        });
    }
    let mut out = OutputDir::create(out_dir)?;
    let (d2, d4) = one_loop_coefficients(cfg.mass, cfg.omega, cfg.lambda, cfg.hbar)?;
    let p = cfg.potential()?;
    let mut csv = CsvFile::new(
        format!("one-loop effective potential, {}", system_name(cfg)),
        &["mass", "omega", "lambda", "dv2", "dv4", "v2_eff", "v4_eff"],
    );
    csv.push_numbers(&[cfg.mass, cfg.omega, cfg.lambda, d2, d4, p.coeff(2) + d2, p.coeff(4) + d4]);
    out.write("one_loop_prediction.csv", &csv)?;
    let report = Report {
        lines: vec![format!("dv2 = {}  dv4 = {}", num(d2), num(d4))],
        files: Vec::new(),
    };
    finish(cfg, "one-loop", exec, out, report)
}
