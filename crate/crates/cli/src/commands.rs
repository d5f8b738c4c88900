use crate::{Command, ConfigArgs};
use splinet::{BasisType, KnotVector};
use splinet_fda::classify::{ClassModel, Classifier};
use splinet_fda::ddk::{self, DdkParams, KnotSelection};
use splinet_fda::error::{FdaError, Result};
use splinet_fda::io::{
    read_common_grid, read_labels, read_per_curve_files, write_atomic, write_common_grid,
    write_labels, write_matrix,
};
use splinet_fda::metrics;
use splinet_fda::pipeline::{
    self, center_curves, derive_seed, ingest, run_scenario, PipelineConfig, RunArtifacts, Scenario,
};
use splinet_fda::report::{render_basis_table, render_confusion_percent, render_metrics, report};
use splinet_fda::search::SearchOutcome;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest { config, out } => cmd_ingest(&load_config(&config)?, &out),
        Command::Knots {
            config,
            class,
            stage,
            r_max,
            replications,
            rho,
            out,
        } => cmd_knots(
            &load_config(&config)?,
            class,
            &stage,
            r_max,
            replications,
            rho,
            &out,
        ),
        Command::Basis {
            knots,
            equidistant,
            range,
            order,
            basis_type,
            out,
        } => cmd_basis(
            knots.as_deref(),
            equidistant,
            &range,
            order,
            &basis_type,
            &out,
        ),
        Command::Project {
            curves,
            per_curve,
            knots,
            order,
            basis_type,
            out,
        } => cmd_project(
            curves.as_deref(),
            &per_curve,
            &knots,
            order,
            &basis_type,
            &out,
        ),
        Command::Train { config, out } => cmd_train(&load_config(&config)?, &out),
        Command::Search {
            config,
            models,
            out,
        } => cmd_search(&load_config(&config)?, &models, &out),
        Command::Classify {
            config,
            models,
            counts,
            search,
            curves,
            out,
        } => cmd_classify(
            &load_config(&config)?,
            &models,
            counts.as_deref(),
            search.as_deref(),
            curves.as_deref(),
            &out,
        ),
        Command::Evaluate {
            predictions,
            targets,
            classes,
            out,
        } => cmd_evaluate(&predictions, &targets, classes, &out),
        Command::Scenario { config, out } => cmd_scenario(&load_config(&config)?, &out),
        Command::Report { artifacts, out } => {
            let run = RunArtifacts::load(&artifacts)?;
            report(&run, &out)?;
            println!("report written to {}", out.display());
            Ok(())
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<PipelineConfig> {
    let mut config: PipelineConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| FdaError::io(path.display().to_string(), e))?;
            toml::from_str(&text)
                .map_err(|e| FdaError::Config(format!("{}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(s) = &args.scenario {
        config.scenario = Scenario::from_name(s)?;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(budget) = args.budget {
        config.knot_budget = budget;
    }
    if let Some(order) = args.order {
        config.order = order;
    }
    if args.full_scale {
        config.full_scale = true;
    }
    if let Some(dir) = &args.cache_dir {
        config.cache_dir = Some(dir.clone());
    }
    config.validate()?;
    Ok(config)
}

fn cmd_ingest(config: &PipelineConfig, out: &Path) -> Result<()> {
    let data = ingest(config)?;
    for (name, split) in [
        ("train", &data.train),
        ("validation", &data.val),
        ("test", &data.test),
    ] {
        let (set, labels) = split.pooled()?;
        write_common_grid(&out.join(format!("curves_{name}.tsv")), &set)?;
        write_labels(&out.join(format!("labels_{name}.txt")), &labels)?;
        println!(
            "{name}: {} curves of length {}",
            labels.len(),
            split.arguments.len()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_knots(
    config: &PipelineConfig,
    class: usize,
    stage: &str,
    r_max: Option<usize>,
    replications: usize,
    rho: f64,
    out: &Path,
) -> Result<()> {
    let data = ingest(config)?;
    if class >= data.train.classes() {
        return Err(FdaError::LabelOutOfRange {
            label: class,
            classes: data.train.classes(),
        });
    }
    let class_curves = data.train.class_set(class)?;
    let (args, mean) = class_curves.mean_curve()?;
    let endpoints = vec![args[0], args[args.len() - 1]];
    let grid_len = args.len();
    let mean_curve = splinet::DiscreteCurveSet::common_grid(args, vec![mean])?;

    let r_max = r_max.unwrap_or_else(|| ddk::default_r_max(grid_len));
    let reference = pipeline::reference_with_cache(
        config.cache_dir().as_deref(),
        grid_len,
        r_max,
        replications,
        derive_seed(config.seed, "ddk-reference"),
    )?;

    let mean_params = DdkParams {
        r_max,
        rho: 1.0,
        seed: derive_seed(config.seed, &format!("ddk-mean:{class}")),
        stop: config.ddk_config().stop,
    };
    let mean_sel = ddk::select_knots(&mean_curve, &endpoints, &reference, &mean_params)?;

    let selection = match stage {
        "mean" => mean_sel,
        "centered" => {
            let centered = center_curves(&class_curves, &mean_curve)?;
            let params = DdkParams {
                r_max,
                rho,
                seed: derive_seed(config.seed, &format!("ddk-centered:{class}")),
                stop: config.ddk_config().stop,
            };
            ddk::select_knots(&centered, mean_sel.knots.values(), &reference, &params)?
        }
        other => {
            return Err(FdaError::Config(format!(
                "stage must be mean or centered, got {other:?}"
            )))
        }
    };

    write_atomic(
        &out.join(format!("selection_class_{class}_{stage}.json")),
        &serde_json::to_vec_pretty(&selection).expect("selection serializes"),
    )?;
    let mut table = String::from("step\tknot\tamse\teps\teps0\taccepted\n");
    for (i, s) in selection.history.iter().enumerate() {
        writeln!(
            table,
            "{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            s.knot,
            s.amse,
            s.eps,
            reference.eps0.get(i).copied().unwrap_or(f64::NAN),
            i < selection.n_selected
        )
        .expect("string write");
    }
    write_atomic(
        &out.join(format!("history_class_{class}_{stage}.tsv")),
        table.as_bytes(),
    )?;
    println!(
        "class {class} {stage}: {} knots selected of {} recorded steps",
        selection.n_selected,
        selection.history.len()
    );
    Ok(())
}

fn parse_knot_file(path: &Path) -> Result<KnotVector> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| FdaError::io(&name, e))?;
    if let Ok(selection) = serde_json::from_str::<KnotSelection>(&text) {
        return Ok(selection.knots);
    }
    let values: Vec<f64> = serde_json::from_str(&text).map_err(|e| FdaError::MalformedData {
        path: name,
        what: format!("neither a knot selection nor a number array: {e}"),
    })?;
    KnotVector::new(values).map_err(FdaError::from)
}

fn parse_basis_type(name: &str) -> Result<BasisType> {
    BasisType::from_name(name)
        .ok_or_else(|| FdaError::Config(format!("unknown basis type {name:?}")))
}

fn cmd_basis(
    knots: Option<&Path>,
    equidistant: Option<usize>,
    range: &str,
    order: usize,
    basis_type: &str,
    out: &Path,
) -> Result<()> {
    let knots = match (knots, equidistant) {
        (Some(path), None) => parse_knot_file(path)?,
        (None, Some(internal)) => {
            let parts: Vec<&str> = range.split(',').collect();
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| FdaError::Config(format!("bad range component {s:?}")))
            };
            if parts.len() != 2 {
                return Err(FdaError::Config("range must be lo,hi".to_string()));
            }
            KnotVector::equidistant(parse(parts[0])?, parse(parts[1])?, internal + 2)
                .map_err(FdaError::from)?
        }
        _ => {
            return Err(FdaError::Config(
                "exactly one of --knots or --equidistant is required".to_string(),
            ))
        }
    };
    let basis = splinet::build_basis(&knots, order, parse_basis_type(basis_type)?)
        .map_err(FdaError::from)?;
    write_atomic(
        &out.join("basis.json"),
        &serde_json::to_vec(&basis).expect("basis serializes"),
    )?;
    write_atomic(
        &out.join("members.tsv"),
        render_basis_table(&basis).as_bytes(),
    )?;
    println!(
        "{} basis: {} members over {} knots",
        basis.basis_type().name(),
        basis.len(),
        knots.len()
    );
    Ok(())
}

fn cmd_project(
    curves: Option<&Path>,
    per_curve: &[PathBuf],
    knots: &Path,
    order: usize,
    basis_type: &str,
    out: &Path,
) -> Result<()> {
    let data = match (curves, per_curve.is_empty()) {
        (Some(path), true) => read_common_grid(path)?,
        (None, false) => read_per_curve_files(per_curve)?,
        _ => {
            return Err(FdaError::Config(
                "give either --curves or --per-curve files".to_string(),
            ))
        }
    };
    let knots = parse_knot_file(knots)?;
    let result = splinet::project_data(&data, &knots, order, parse_basis_type(basis_type)?)
        .map_err(FdaError::from)?;
    write_matrix(&out.join("coeff.tsv"), &result.coeff)?;
    write_atomic(
        &out.join("projected.json"),
        &serde_json::to_vec(&result.projected).expect("family serializes"),
    )?;
    println!(
        "projected {} curves onto {} basis members",
        data.len(),
        result.basis.len()
    );
    Ok(())
}

fn cmd_train(config: &PipelineConfig, out: &Path) -> Result<()> {
    let data = ingest(config)?;
    let selections = pipeline::select_all_knots(config, &data.train)?;
    let classes = pipeline::fit_all_classes(config, &data.train, &selections)?;
    write_atomic(
        &out.join("models.json"),
        &serde_json::to_vec(&classes).expect("models serialize"),
    )?;
    for class in &classes {
        println!(
            "class {}: {} internal knots, {} retained eigenfunctions",
            class.label,
            class.centered_selection.knots.internal_count(),
            class.model.n_retained
        );
    }
    Ok(())
}

fn load_models(dir: &Path) -> Result<Vec<ClassModel>> {
    let path = dir.join("models.json");
    let name = path.display().to_string();
    let text =
        std::fs::read_to_string(&path).map_err(|_| FdaError::MissingArtifact(name.clone()))?;
    let classes: Vec<pipeline::ClassArtifacts> =
        serde_json::from_str(&text).map_err(|e| FdaError::MalformedData {
            path: name,
            what: e.to_string(),
        })?;
    Ok(classes.into_iter().map(|c| c.model).collect())
}

fn cmd_search(config: &PipelineConfig, models_dir: &Path, out: &Path) -> Result<()> {
    let data = ingest(config)?;
    let models = load_models(models_dir)?;
    let classifier = Classifier::new(&models)?;
    let (set, targets) = data.val.pooled()?;
    let tables = classifier.tables(&set)?;
    let params = splinet_fda::search::SearchParams {
        patience: config.search.patience,
        restarts: config.search.restarts,
        seed: derive_seed(config.seed, "search"),
        max_per_class: None,
    };
    let outcome = splinet_fda::search::search_eigen_counts(&tables, &targets, &params)?;
    write_atomic(
        &out.join("search.json"),
        &serde_json::to_vec_pretty(&outcome).expect("outcome serializes"),
    )?;
    let counts: Vec<String> = outcome.n_opt.iter().map(|n| n.to_string()).collect();
    println!(
        "optimal counts [{}], validation average accuracy {:.4}",
        counts.join(", "),
        outcome.best_average_accuracy
    );
    Ok(())
}

fn cmd_classify(
    config: &PipelineConfig,
    models_dir: &Path,
    counts: Option<&str>,
    search_dir: Option<&Path>,
    curves: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let models = load_models(models_dir)?;
    let counts: Vec<usize> = match (counts, search_dir) {
        (Some(text), _) => text
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| FdaError::Config(format!("bad count {s:?}")))
            })
            .collect::<Result<_>>()?,
        (None, Some(dir)) => {
            let path = dir.join("search.json");
            let text = std::fs::read_to_string(&path)
                .map_err(|_| FdaError::MissingArtifact(path.display().to_string()))?;
            let outcome: SearchOutcome =
                serde_json::from_str(&text).map_err(|e| FdaError::MalformedData {
                    path: path.display().to_string(),
                    what: e.to_string(),
                })?;
            outcome.n_opt
        }
        (None, None) => vec![0; models.len()],
    };
    if counts.len() != models.len() {
        return Err(FdaError::Config(format!(
            "{} counts for {} classes",
            counts.len(),
            models.len()
        )));
    }

    let (set, targets) = match curves {
        Some(path) => (read_common_grid(path)?, None),
        None => {
            let data = ingest(config)?;
            let (set, targets) = data.test.pooled()?;
            (set, Some(targets))
        }
    };
    let classifier = Classifier::new(&models)?;
    let outputs = classifier.classify_set(&set, &counts)?;

    let labels: Vec<usize> = outputs.iter().map(|o| o.label).collect();
    write_labels(&out.join("predictions.txt"), &labels)?;
    let mut weights = String::new();
    let mut norms = String::new();
    for o in &outputs {
        let w: Vec<String> = o.weights.iter().map(|v| v.to_string()).collect();
        let n: Vec<String> = o.residual_norms.iter().map(|v| v.to_string()).collect();
        writeln!(weights, "{}", w.join("\t")).expect("string write");
        writeln!(norms, "{}", n.join("\t")).expect("string write");
    }
    write_atomic(&out.join("weights.tsv"), weights.as_bytes())?;
    write_atomic(&out.join("residual_norms.tsv"), norms.as_bytes())?;
    if let Some(targets) = targets {
        write_labels(&out.join("targets.txt"), &targets)?;
    }
    println!("classified {} curves", outputs.len());
    Ok(())
}

fn cmd_evaluate(predictions: &Path, targets: &Path, classes: usize, out: &Path) -> Result<()> {
    let predictions = read_labels(predictions)?;
    let targets = read_labels(targets)?;
    let report = metrics::evaluate(&predictions, &targets, classes)?;
    let names: Vec<&str> = if classes == 10 {
        pipeline::FASHION_CLASS_NAMES.to_vec()
    } else {
        vec!["?"; classes]
    };
    write_atomic(
        &out.join("confusion.txt"),
        render_confusion_percent(&report, &names).as_bytes(),
    )?;
    write_atomic(
        &out.join("metrics.tsv"),
        render_metrics(&report, &names).as_bytes(),
    )?;
    println!(
        "overall accuracy {:.4}, macro F1 {:.4}",
        report.overall_accuracy, report.macro_f1
    );
    Ok(())
}

fn cmd_scenario(config: &PipelineConfig, out: &Path) -> Result<()> {
    let artifacts = run_scenario(config)?;
    artifacts.save(out)?;
    report(&artifacts, &out.join("report"))?;
    let counts: Vec<String> = artifacts
        .search
        .n_opt
        .iter()
        .map(|n| n.to_string())
        .collect();
    println!(
        "scenario {:?}: validation accuracy {:.4}, test accuracy {:.4}, counts [{}]",
        artifacts.config.scenario,
        artifacts.validation_report.overall_accuracy,
        artifacts.test_report.overall_accuracy,
        counts.join(", ")
    );
    Ok(())
}
