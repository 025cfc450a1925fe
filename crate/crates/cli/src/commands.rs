use crate::config::RunConfig;
use crate::{CliError, CliResult, FunctionArg, StudyArg};
use anovaemu::db_anova::{
    fit_db, predict_db, predict_db_batch, sensitivity_report, DerivativeModel, IndexOptions,
    SensitivityReport,
};
use anovaemu::df_emulator::{
    build_df, default_spec, fit_df, plan_design, predict_df, predict_df_batch, ComponentSelection,
    DfEmulator, EmulatorSpec, PlanSampling,
};
use anovaemu::distributions::{make_marginal, rho_min, Generator, Marginal};
use anovaemu::heat_pde::{gradient, pde_input_marginals, qoi, solve_forward, HeatModel, PdeConfig};
use anovaemu::subset::{power_set, subsets_up_to};
use anovaemu::testbed::{
    holdout_points, metrics, probe_points, replication_study, GType, Metrics, StudyResult,
    TestFunction,
};
use anovaemu::Subset;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub struct Output {
    dir: PathBuf,
    plot_data: bool,
}

impl Output {
    pub fn new(dir: &Path, plot_data: bool) -> CliResult<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("creating {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            plot_data,
        })
    }

    fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Config(format!("writing {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}

struct Selected {
    name: &'static str,
    model: Box<dyn DerivativeModel>,
    marginals: Vec<Marginal>,
    /// Whether total indices are estimated by default.
    total: bool,
}

fn select(function: FunctionArg, cfg: &RunConfig) -> CliResult<Selected> {
    let test = |f: TestFunction| Selected {
        name: function.name(),
        marginals: f.marginals.clone(),
        model: Box::new(f),
        total: true,
    };
    Ok(match function {
        FunctionArg::Ishigami => test(TestFunction::ishigami()),
        FunctionArg::GfunctionA => test(TestFunction::gfunction(GType::A)),
        FunctionArg::GfunctionB => test(TestFunction::gfunction(GType::B)),
        FunctionArg::GfunctionC => test(TestFunction::gfunction(GType::C)),
        FunctionArg::HeatPde => Selected {
            name: function.name(),
            marginals: pde_input_marginals(&cfg.pde),
            model: Box::new(HeatModel::new(cfg.pde.clone())?),
            total: false,
        },
        FunctionArg::ExternalTable => {
            return Err(CliError::Config(
                "external-table has no derivatives; only fit-predict supports it".into(),
            ))
        }
    })
}

fn run_screen(sel: &Selected, cfg: &RunConfig, n: usize) -> CliResult<SensitivityReport> {
    let opts = IndexOptions {
        n,
        seed: cfg.run.seed,
        total: cfg.run.total.unwrap_or(sel.total),
        ..IndexOptions::default()
    };
    Ok(sensitivity_report(
        &sel.model.as_ref(),
        &sel.marginals,
        &opts,
        cfg.run.eps,
        &cfg.thresholds,
    )?)
}

fn print_report(name: &str, r: &SensitivityReport) {
    let sum_s: f64 = r.indices.iter().map(|i| i.first.value).sum();
    let count = r.indices.iter().filter(|i| i.upper.value > 0.01).count();
    println!("{name}: variance {:.6e}", r.variance);
    println!("{name}: sum S = {sum_s:.4}; {count} inputs with UB > 0.01");
    println!("{name}: recommended d0 = {}", r.recommended_d0);
    let comps: Vec<String> = r.components.iter().map(ToString::to_string).collect();
    println!("{name}: {} retained components: {}", comps.len(), comps.join(" "));
    for line in &r.decision_log {
        println!("  {line}");
    }
}

pub fn screen(function: FunctionArg, cfg: &RunConfig, out: &Output) -> CliResult<()> {
    let sel = select(function, cfg)?;
    let report = run_screen(&sel, cfg, cfg.run.n.unwrap_or(1 << 14))?;
    print_report(sel.name, &report);
    out.write(&format!("screen_{}.csv", sel.name), &report.to_csv())?;
    out.write_json(&format!("screen_{}.json", sel.name), &report)?;
    Ok(())
}

/// Selection for the derivative-free emulator from a retained family (without the empty set).
fn selection_for(components: &[Subset], d: usize, d0: usize) -> ComponentSelection {
    let all = subsets_up_to(&(0..d).collect::<Vec<_>>(), d0);
    if components == all.as_slice() {
        ComponentSelection::AllUpTo
    } else {
        ComponentSelection::Explicit(components.to_vec())
    }
}

#[derive(Serialize)]
struct FitSummary<'a> {
    function: &'a str,
    n: usize,
    d0: usize,
    l: usize,
    h: f64,
    xi: f64,
    sampling: PlanSampling,
    components: Vec<String>,
    metrics: Vec<(String, Metrics)>,
}

pub fn fit_predict(function: FunctionArg, db: bool, cfg: &RunConfig, out: &Output) -> CliResult<()> {
    if function == FunctionArg::ExternalTable {
        return external_table(cfg, out);
    }
    let sel = select(function, cfg)?;
    let d = sel.marginals.len();
    let n = cfg.run.n.unwrap_or(500);
    let (d0, components) = match cfg.run.d0 {
        Some(d0) if d0 > d => {
            return Err(CliError::Config(format!("d0 = {d0} exceeds d = {d}")));
        }
        Some(d0) => (d0, subsets_up_to(&(0..d).collect::<Vec<_>>(), d0)),
        None => {
            let report = run_screen(&sel, cfg, cfg.run.screen_n)?;
            print_report(sel.name, &report);
            let comps: Vec<Subset> = report.components.into_iter().filter(|v| !v.is_empty()).collect();
            (report.recommended_d0, comps)
        }
    };
    let rho = rho_min(&sel.marginals)
        .ok_or_else(|| CliError::Config("minimum density unknown".into()))?;
    let mut spec = default_spec(&sel.marginals, d0, rho, n, selection_for(&components, d, d0))?;
    spec.sampling = cfg.run.sampling;
    let model = sel.model.as_ref();
    let em = build_df(&spec, n, cfg.run.seed, |x| model.value(x))?;

    let test = holdout_points(&sel.marginals, cfg.run.test_n)?;
    let truth: Vec<f64> = {
        use rayon::prelude::*;
        test.points.par_chunks(d).map(|x| model.value(x)).collect()
    };
    let mut columns: Vec<(String, Vec<f64>)> = vec![("df".into(), predict_df_batch(&em, &test.points)?)];
    if let Some(tau) = cfg.run.tau {
        let base = sel
            .marginals
            .iter()
            .map(|m| m.right_mixture(tau))
            .collect::<anovaemu::Result<Vec<_>>>()?;
        let mut mix = spec.clone();
        mix.base = base;
        let em_mix = build_df(&mix, n, cfg.run.seed, |x| model.value(x))?;
        columns.push(("df_mixture".into(), predict_df_batch(&em_mix, &test.points)?));
    }
    if db {
        let mut comps = vec![Subset::empty()];
        comps.extend(components.iter().cloned());
        let dbe = fit_db(&model, &sel.marginals, n, cfg.run.seed, Generator::SobolSequence, &comps)?;
        columns.push(("db".into(), predict_db_batch(&dbe, &test.points)?));
    }

    let mut summary = FitSummary {
        function: sel.name,
        n,
        d0,
        l: spec.l,
        h: spec.h,
        xi: spec.xi,
        sampling: spec.sampling,
        components: spec.components().iter().map(ToString::to_string).collect(),
        metrics: Vec::new(),
    };
    for (name, pred) in &columns {
        let m = metrics(&truth, pred)?;
        println!(
            "{}: {name} R2 = {:.4}, RMSE = {:.4e}, max abs = {:.4e}",
            sel.name, m.r2, m.rmse, m.max_abs
        );
        summary.metrics.push((name.clone(), m));
    }

    let mut csv = String::new();
    for k in 1..=d {
        let _ = write!(csv, "x{k},");
    }
    csv.push_str("truth");
    for (name, _) in &columns {
        let _ = write!(csv, ",{name}");
    }
    csv.push('\n');
    for (i, x) in test.rows().enumerate() {
        for v in x {
            let _ = write!(csv, "{v},");
        }
        let _ = write!(csv, "{}", truth[i]);
        for (_, pred) in &columns {
            let _ = write!(csv, ",{}", pred[i]);
        }
        csv.push('\n');
    }
    out.write(&format!("predictions_{}.csv", sel.name), &csv)?;
    out.write_json(&format!("metrics_{}.json", sel.name), &summary)?;
    out.write(&format!("emulator_{}.json", sel.name), &em.to_json()?)?;
    if out.plot_data {
        let mut plot = String::from("method,observation,prediction\n");
        for (name, pred) in &columns {
            for (t, p) in truth.iter().zip(pred) {
                let _ = writeln!(plot, "{name},{t},{p}");
            }
        }
        out.write(&format!("plot_{}.csv", sel.name), &plot)?;
    }
    Ok(())
}

fn external_spec(cfg: &RunConfig) -> CliResult<EmulatorSpec> {
    let ext = &cfg.external;
    if ext.inputs.is_empty() {
        return Err(CliError::Config("external-table needs [[external.inputs]] entries".into()));
    }
    let marginals = ext
        .inputs
        .iter()
        .map(|i| make_marginal(&i.kind, &i.params))
        .collect::<anovaemu::Result<Vec<_>>>()?;
    let d = marginals.len();
    let d0 = cfg
        .run
        .d0
        .ok_or_else(|| CliError::Config("external-table needs d0 (--d0 or run.d0)".into()))?;
    let selection = match &ext.influential {
        Some(u) => {
            if u.iter().any(|&j| j == 0 || j > d) {
                return Err(CliError::Config(format!("influential inputs {u:?} outside 1..={d}")));
            }
            ComponentSelection::Influential(u.iter().map(|j| j - 1).collect())
        }
        None => ComponentSelection::AllUpTo,
    };
    let rho = rho_min(&marginals).ok_or_else(|| CliError::Config("minimum density unknown".into()))?;
    let mut spec = default_spec(&marginals, d0, rho, cfg.run.n.unwrap_or(500), selection)?;
    spec.sampling = cfg.run.sampling;
    Ok(spec)
}

fn read_column(path: &Path, column: Option<&str>) -> CliResult<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?
        .clone();
    let pick = match column {
        Some(c) => Some(
            headers
                .iter()
                .position(|h| h.trim() == c)
                .ok_or_else(|| CliError::Config(format!("{} has no column {c:?}", path.display())))?,
        ),
        None => None,
    };
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| {
                CliError::Config(format!("{} row {}: {s:?}: {e}", path.display(), line + 1))
            })
        };
        rows.push(match pick {
            Some(k) => vec![parse(&rec[k])?],
            None => rec.iter().map(parse).collect::<CliResult<Vec<_>>>()?,
        });
    }
    Ok(rows)
}

/// Two-step workflow for models evaluated elsewhere: write the plan, then fit from its outputs.
fn external_table(cfg: &RunConfig, out: &Output) -> CliResult<()> {
    let spec = external_spec(cfg)?;
    let n = cfg.run.n.unwrap_or(500);
    let plan = plan_design(&spec, n, cfg.run.seed)?;
    let Some(outputs) = &cfg.external.outputs else {
        let mut csv = String::from("row,i,l");
        for k in 1..=spec.d {
            let _ = write!(csv, ",x{k}");
        }
        csv.push('\n');
        for (row, &(i, l)) in plan.tags.iter().enumerate() {
            let _ = write!(csv, "{row},{i},{l}");
            for v in plan.point(row) {
                let _ = write!(csv, ",{v}");
            }
            csv.push('\n');
        }
        out.write("plan_external.csv", &csv)?;
        println!(
            "evaluate the model at the {} plan rows and rerun with --outputs <csv with column y>",
            plan.rows()
        );
        return Ok(());
    };
    let y: Vec<f64> = read_column(outputs, Some("y"))?.into_iter().map(|r| r[0]).collect();
    let em: DfEmulator = fit_df(&plan, &y, &spec)?;
    println!("external-table: fitted from {} runs; mean estimate {}", y.len(), em.mean);
    out.write("emulator_external.json", &em.to_json()?)?;
    if let Some(points) = &cfg.external.predict_at {
        let rows = read_column(points, None)?;
        let mut csv = String::new();
        for k in 1..=spec.d {
            let _ = write!(csv, "x{k},");
        }
        csv.push_str("prediction\n");
        for x in rows {
            let p = predict_df(&em, &x)?;
            for v in &x {
                let _ = write!(csv, "{v},");
            }
            let _ = writeln!(csv, "{p}");
        }
        out.write("predictions_external.csv", &csv)?;
    }
    Ok(())
}

pub fn benchmark(study: StudyArg, cfg: &RunConfig, out: &Output) -> CliResult<()> {
    let b = &cfg.benchmark;
    let seed = cfg.run.seed;
    let result: StudyResult = match study {
        StudyArg::DbLinear | StudyArg::DbIshigami => {
            let (f, comps) = if study == StudyArg::DbLinear {
                let f = TestFunction::linear(vec![1.0, -2.0, 3.0]);
                let mut comps = vec![Subset::empty()];
                comps.extend((0..3).map(Subset::singleton));
                (f, comps)
            } else {
                (TestFunction::ishigami(), power_set(3))
            };
            let probes = probe_points(&f.marginals)?;
            let truth: Vec<f64> = probes.iter().map(|x| f.value(x)).collect();
            replication_study(
                |n, s| {
                    let em = fit_db(&f, &f.marginals, n, s, Generator::PseudoRandom, &comps)?;
                    probes.iter().map(|x| predict_db(&em, x)).collect()
                },
                &truth,
                &b.ns,
                b.replications,
                seed,
            )?
        }
        StudyArg::DfAdditive | StudyArg::DfConstant => {
            let f = if study == StudyArg::DfAdditive {
                TestFunction::additive(vec![1.0, 2.0, 3.0, 4.0, 5.0])
            } else {
                TestFunction::constant(2.5, 3)
            };
            let probes = probe_points(&f.marginals)?;
            let truth: Vec<f64> = probes.iter().map(|x| f.value(x)).collect();
            let rho = rho_min(&f.marginals).expect("uniform marginals");
            replication_study(
                |n, s| {
                    let mut spec = default_spec(&f.marginals, 1, rho, n, ComponentSelection::AllUpTo)?;
                    spec.sampling = PlanSampling::PseudoRandom;
                    let em = build_df(&spec, n, s, |x| f.value(x))?;
                    probes.iter().map(|x| predict_df(&em, x)).collect()
                },
                &truth,
                &b.ns,
                b.replications,
                seed,
            )?
        }
    };
    let name = study.name();
    let s = &result.slope;
    println!(
        "{name}: log-log MSE slope {:.3} (95% band [{:.3}, {:.3}]) over N = {:?}, R = {}",
        s.slope, s.lower, s.upper, result.ns, result.replications
    );
    let mut slopes = String::from("scope,slope,se,lower,upper\n");
    let _ = writeln!(slopes, "mean,{},{},{},{}", s.slope, s.se, s.lower, s.upper);
    for (q, p) in result.probe_slopes.iter().enumerate() {
        let _ = writeln!(slopes, "probe{},{},{},{},{}", q + 1, p.slope, p.se, p.lower, p.upper);
    }
    out.write(&format!("study_{name}.csv"), &result.to_csv())?;
    out.write(&format!("slopes_{name}.csv"), &slopes)?;
    out.write_json(&format!("study_{name}.json"), &result)?;
    Ok(())
}

#[derive(Serialize)]
struct PdeSummary {
    config: PdeConfig,
    samples: usize,
    sum_first_order: f64,
    inputs_above_001: usize,
    recommended_d0: usize,
    retained_components: usize,
    mean_initial_qoi: f64,
    gradient_check_d10_max_rel_error: f64,
}

/// Max relative error of the adjoint gradient against central differences on a 10-node grid.
fn gradient_check(base: &PdeConfig) -> CliResult<f64> {
    let cfg = PdeConfig { d: 10, ..base.clone() };
    let z: Vec<f64> = cfg.nodes().iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect();
    let g = gradient(&z, &cfg)?;
    let j = |z: &[f64]| -> CliResult<f64> { Ok(qoi(&solve_forward(z, &cfg)?)) };
    let mut worst: f64 = 0.0;
    for k in 0..cfg.d {
        let h = 1e-5;
        let (mut zp, mut zm) = (z.clone(), z.clone());
        zp[k] += h;
        zm[k] -= h;
        let fd = (j(&zp)? - j(&zm)?) / (2.0 * h);
        worst = worst.max((fd - g[k]).abs() / g[k].abs());
    }
    Ok(worst)
}

pub fn pde_demo(cfg: &RunConfig, out: &Output) -> CliResult<()> {
    let sel = select(FunctionArg::HeatPde, cfg)?;
    let n = cfg.run.n.unwrap_or(1000);
    let report = run_screen(&sel, cfg, n)?;
    print_report(sel.name, &report);
    let z: Vec<f64> = cfg.pde.nodes().iter().map(|x| (2.0 * std::f64::consts::PI * x).sin()).collect();
    let field = solve_forward(&z, &cfg.pde)?;
    let check = gradient_check(&cfg.pde)?;
    println!("heat-pde: adjoint vs finite differences (d = 10) max relative error {check:.3e}");
    let summary = PdeSummary {
        config: cfg.pde.clone(),
        samples: n,
        sum_first_order: report.indices.iter().map(|i| i.first.value).sum(),
        inputs_above_001: report.indices.iter().filter(|i| i.upper.value > 0.01).count(),
        recommended_d0: report.recommended_d0,
        retained_components: report.components.len() - 1,
        mean_initial_qoi: qoi(&field),
        gradient_check_d10_max_rel_error: check,
    };
    out.write("pde_screen.csv", &report.to_csv())?;
    out.write_json("pde_screen.json", &report)?;
    out.write("pde_field.csv", &field.to_csv())?;
    out.write_json("pde_summary.json", &summary)?;
    Ok(())
}
