//! The three subcommands and the mapping of failures to exit codes.

use std::fmt;
use std::fs::File;
use std::path::Path;

use shrinklasso::analysis::{fit_table, run_prostate, ProstateConfig as CoreProstateConfig};
use shrinklasso::evaluation::{s_grid, Pipeline, Tuning};
use shrinklasso::prostate::{bundled, load_prostate, load_table, FormatOptions};
use shrinklasso::simulation::{export_rmse_table, run_simulation, LambdaRule, SimConfig};
use shrinklasso::{Dataset, Error, Estimator, ShrinkageVariant};

use crate::config::{resolve, FitArgs, FitConfig, ProstateArgs, ProstateConfig, SimulateArgs, SimulateConfig, FORMAT_TABLE_SVG};
use crate::output::{OutDir, Table};
use crate::svg::{box_plot, line_chart, Series};
use crate::Common;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Lib(Error),
}

impl CliError {
    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Lib(e) if e.is_numerical() => 3,
            CliError::Lib(Error::Config(_)) => 1,
            CliError::Lib(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Data(format!("cannot read `{}`: {e}", path.display())))
}

/// Attaches the file name to input errors.
fn in_file(path: &Path, e: Error) -> CliError {
    match e {
        Error::Io(io) => CliError::Data(format!("cannot read `{}`: {io}", path.display())),
        e if e.is_data_error() => CliError::Data(format!("`{}`: {e}", path.display())),
        e => CliError::Lib(e),
    }
}

fn parse_variants(names: &[String]) -> Result<Vec<ShrinkageVariant>, CliError> {
    let mut out: Vec<ShrinkageVariant> = Vec::new();
    for n in names.iter().filter(|n| !n.trim().is_empty()) {
        let v: ShrinkageVariant = n.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

/// Shortest round-trip decimal; negative zero prints as `0`.
fn num(v: f64) -> String {
    if v == 0.0 { "0".into() } else { v.to_string() }
}

pub fn fit(args: FitArgs, common: &Common) -> Result<(), CliError> {
    let cfg: FitConfig = resolve("fit", common, || FitConfig::from_args(args, common))?;
    let tuning = match (cfg.lambda, cfg.s) {
        (Some(l), None) => Tuning::Lambda(l),
        (None, Some(s)) => Tuning::S(s),
        (None, None) => return Err(CliError::Usage("one of --lambda or --s is required".into())),
        (Some(_), Some(_)) => return Err(CliError::Usage("--lambda and --s are mutually exclusive".into())),
    };
    if let Tuning::S(s) = tuning {
        if !(0.0..=1.0).contains(&s) {
            return Err(CliError::Usage(format!("--s must lie in [0, 1], got {s}")));
        }
    }
    if let Tuning::Lambda(l) = tuning {
        if !(l >= 0.0 && l.is_finite()) {
            return Err(CliError::Usage(format!("--lambda must be finite and >= 0, got {l}")));
        }
    }
    let variants = parse_variants(&cfg.variants)?;
    let d: Dataset<f64> = match &cfg.data {
        Some(path) => load_table(open(path)?, &cfg.response, None).map_err(|e| in_file(path, e))?,
        None => bundled(),
    };
    let table = fit_table(&d, &Pipeline::new(tuning, cfg.scale_columns), &variants, cfg.shrink_intercept)?;

    let mut out = OutDir::create(common.out_dir.clone())?;
    let mut header = vec!["term".to_string()];
    header.extend(table.estimators.iter().map(|e| e.name().to_string()));
    let mut coef = Table::new(&header);
    let mut row = vec!["coef".to_string()];
    row.extend(table.intercepts.iter().map(|&v| num(v)));
    coef.row(&row);
    for (j, name) in table.feature_names.iter().enumerate() {
        let mut row = vec![name.clone()];
        row.extend(table.slopes.iter().map(|s| num(s[j])));
        coef.row(&row);
    }
    out.write("coefficients.csv", &coef.into_string())?;

    let mut diag = Table::new(&["quantity", "value"]);
    diag.row(&["n".to_string(), d.n().to_string()]);
    diag.row(&["p".to_string(), d.p().to_string()]);
    diag.row(&["lambda".to_string(), num(table.lambda)]);
    diag.row(&["s".to_string(), num(table.s)]);
    if let Some(st) = &table.stein {
        diag.row(&["a".to_string(), num(st.a)]);
        diag.row(&["w_n".to_string(), num(st.w)]);
        diag.row(&["sigma2".to_string(), num(st.sigma2)]);
        diag.row(&["rank_deficient".to_string(), st.rank_deficient.to_string()]);
    }
    for dg in &table.diagnostics {
        let v = dg.variant.name();
        diag.row(&[format!("factor_{v}"), num(dg.factor)]);
        diag.row(&[format!("degenerate_w_{v}"), dg.degenerate_w.to_string()]);
        diag.row(&[format!("expansion_{v}"), dg.expansion.to_string()]);
    }
    out.write("diagnostics.csv", &diag.into_string())?;
    out.finish("fit", &cfg, cfg.seed, common.workers)
}

fn parse_lambda_rule(rule: &str, folds: usize) -> Result<LambdaRule<f64>, CliError> {
    let bad = || CliError::Usage(format!("invalid --lambda-rule `{rule}` (expected cv-min, fixed:<lambda> or fraction:<f>)"));
    let value = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match rule.trim().split_once(':') {
        None if rule.trim() == "cv-min" => Ok(LambdaRule::CvMin {
            folds,
            count: 100,
            ratio: 1e-3,
        }),
        Some(("fixed", v)) => Ok(LambdaRule::Fixed(value(v)?)),
        Some(("fraction", v)) => Ok(LambdaRule::FractionOfMax(value(v)?)),
        _ => Err(bad()),
    }
}

pub fn simulate(args: SimulateArgs, common: &Common) -> Result<(), CliError> {
    let cfg: SimulateConfig = resolve("simulate", common, || SimulateConfig::from_args(args, common))?;
    let mut estimators: Vec<Estimator> = Vec::new();
    for name in cfg.estimators.iter().filter(|n| !n.trim().is_empty()) {
        let e: Estimator = name.parse().map_err(|e: Error| CliError::Usage(e.to_string()))?;
        if e == Estimator::Baseline {
            return Err(CliError::Usage("the MEAN predictor has no coefficients to score".into()));
        }
        if !estimators.contains(&e) {
            estimators.push(e);
        }
    }
    let mut sim = SimConfig::new(cfg.n, cfg.p, cfg.alpha, cfg.r2_max);
    sim.grid_points = cfg.grid_points;
    sim.replications = cfg.replications;
    sim.seed = cfg.seed;
    sim.estimators = estimators;
    sim.lambda_rule = parse_lambda_rule(&cfg.lambda_rule, cfg.cv_folds)?;
    sim.scale_columns = cfg.scale_columns;
    sim.workers = common.workers as usize;
    sim.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let res = run_simulation(&sim)?;

    let mut out = OutDir::create(common.out_dir.clone())?;
    out.write("rmse.csv", &export_rmse_table(&res)?)?;
    let mut grid = Table::new(&["r2", "c", "beta_norm_sq"]);
    for p in &res.points {
        grid.row(&[num(p.r2), num(p.c), num(p.beta_norm_sq)]);
    }
    out.write("grid.csv", &grid.into_string())?;
    let mut meta = Table::new(&["quantity", "value"]);
    meta.row(&["lambda_rule", res.lambda_rule.as_str()]);
    meta.row(&["nonconverged", &res.nonconverged.to_string()]);
    meta.row(&["degenerate_stein", &res.degenerate_stein.to_string()]);
    out.write("summary.csv", &meta.into_string())?;
    if cfg.format == FORMAT_TABLE_SVG {
        let series: Vec<Series> = sim
            .estimators
            .iter()
            .enumerate()
            .map(|(k, e)| Series {
                label: e.name().to_string(),
                points: res.points.iter().map(|p| (p.r2, p.cells[k].rmse)).collect(),
            })
            .collect();
        let title = format!("RMSE, n = {}, p = {}, alpha = {}", cfg.n, cfg.p, cfg.alpha);
        out.write("rmse.svg", &line_chart(&title, "population R2", "MSE / MSE(LASSO)", &series, Some(1.0), None))?;
    }
    out.finish("simulate", &cfg, cfg.seed, common.workers)
}

pub fn prostate(args: ProstateArgs, common: &Common) -> Result<(), CliError> {
    let cfg: ProstateConfig = resolve("prostate", common, || ProstateConfig::from_args(args, common))?;
    let variants = parse_variants(&cfg.variants)?;
    let d: Dataset<f64> = match &cfg.data {
        Some(path) => load_prostate(open(path)?, FormatOptions::default()).map_err(|e| in_file(path, e))?,
        None => bundled(),
    };
    if cfg.folds < 2 || cfg.folds > d.n() {
        return Err(CliError::Usage(format!("--folds must lie in [2, {}], got {}", d.n(), cfg.folds)));
    }
    if cfg.s_grid < 2 {
        return Err(CliError::Usage("--s-grid must be at least 2".into()));
    }
    let core = CoreProstateConfig {
        seed: cfg.seed,
        folds: cfg.folds,
        s_grid_points: cfg.s_grid,
        scale_columns: cfg.scale_columns,
        shrink_intercept: cfg.shrink_intercept,
        variants: variants.clone(),
        bootstrap_replicates: cfg.bootstrap,
        reselect_per_replicate: cfg.reselect,
        workers: common.workers as usize,
        pipeline: Pipeline::new(Tuning::S(1.0), cfg.scale_columns),
    };
    let a = run_prostate(&d, &core)?;
    let features = d.feature_names();
    let mut out = OutDir::create(common.out_dir.clone())?;

    let mut path = Table::new(&["s", "estimator", "feature", "coefficient"]);
    for r in &a.path_rows {
        for (j, f) in features.iter().enumerate() {
            path.row(&[num(r.s), r.estimator.name().to_string(), f.clone(), num(r.slopes[j])]);
        }
    }
    out.write("path.csv", &path.into_string())?;

    let mut curve = Table::new(&["s", "pe_mean", "pe_se"]);
    for (s, c) in s_grid::<f64>(cfg.s_grid).iter().zip(&a.cv_curve) {
        curve.row(&[num(*s), num(c.pe_mean), num(c.pe_se)]);
    }
    out.write("cv_curve.csv", &curve.into_string())?;
    out.write("selected_s.txt", &format!("{}\n", a.selected_s))?;

    let t = &a.table;
    let mut header = vec!["term".to_string()];
    header.extend(t.estimators.iter().map(|e| e.name().to_string()));
    let mut table = Table::new(&header);
    let mut row = vec!["coef".to_string()];
    row.extend(t.intercepts.iter().map(|&v| num(v)));
    table.row(&row);
    for (j, f) in features.iter().enumerate() {
        let mut row = vec![f.clone()];
        row.extend(t.slopes.iter().map(|s| num(s[j])));
        table.row(&row);
    }
    if let Some(b) = &a.bootstrap {
        for (label, pick) in [("PE", 0), ("PE_SE", 1), ("RPE", 2)] {
            let mut row = vec![label.to_string()];
            for e in &t.estimators {
                let r = b.get(*e).expect("bootstrap covers every tabulated estimator");
                row.push(num([r.pe_mean, r.pe_se, r.rpe][pick]));
            }
            table.row(&row);
        }
    }
    out.write("table.csv", &table.into_string())?;

    if let Some(b) = &a.bootstrap {
        let mut coefs = Table::new(&["replicate", "estimator", "feature", "coefficient"]);
        let mut pe = Table::new(&["replicate", "estimator", "pe"]);
        for r in &b.estimators {
            for (i, row) in r.bootstrap_coefficients.rows().into_iter().enumerate() {
                for (j, f) in features.iter().enumerate() {
                    coefs.row(&[i.to_string(), r.estimator.name().to_string(), f.clone(), num(row[j])]);
                }
            }
            for (i, v) in r.bootstrap_pe.iter().enumerate() {
                pe.row(&[i.to_string(), r.estimator.name().to_string(), num(*v)]);
            }
        }
        out.write("bootstrap_coefficients.csv", &coefs.into_string())?;
        out.write("bootstrap_pe.csv", &pe.into_string())?;
        let mut meta = Table::new(&["quantity", "value"]);
        meta.row(&["replicates", &b.replicates.to_string()]);
        meta.row(&["skipped", &b.skipped.to_string()]);
        meta.row(&["degenerate_folds", &b.degenerate_folds.to_string()]);
        out.write("bootstrap_summary.csv", &meta.into_string())?;
    }

    if cfg.format == FORMAT_TABLE_SVG {
        let series: Vec<Series> = features
            .iter()
            .enumerate()
            .map(|(j, f)| Series {
                label: f.clone(),
                points: a
                    .path_rows
                    .iter()
                    .filter(|r| r.estimator == Estimator::Lasso)
                    .map(|r| (r.s, r.slopes[j]))
                    .collect(),
            })
            .collect();
        out.write(
            "path.svg",
            &line_chart("LASSO coefficient path", "s", "coefficient", &series, Some(0.0), Some(a.selected_s)),
        )?;
        if let Some(b) = &a.bootstrap {
            let members: Vec<String> = b.estimators.iter().map(|r| r.estimator.name().to_string()).collect();
            let groups: Vec<(String, Vec<Vec<f64>>)> = features
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let sets = b.estimators.iter().map(|r| r.bootstrap_coefficients.column(j).to_vec()).collect();
                    (f.clone(), sets)
                })
                .collect();
            out.write(
                "bootstrap.svg",
                &box_plot("Bootstrap coefficients", "coefficient", &members, &groups),
            )?;
        }
    }
    out.finish("prostate", &cfg, cfg.seed, common.workers)
}
