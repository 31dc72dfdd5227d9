//! The four subcommands. Each one resolves its settings, computes every output
//! in memory, and only then creates the output directory and writes files.

use std::fs;
use std::path::{Path, PathBuf};

use qtsne::ansatz::feature_map_state;
use qtsne::datagen::{
    self, deserialize_states, generate_ising, serialize_instances, serialize_states, snapshot_of,
    STATE_HEADER,
};
use qtsne::landscape::{
    build_trajectory_matrix, default_half_width, evaluate_grid, pca_two_components,
    project_trajectory,
};
use qtsne::optimizer::{AdamConfig, SamConfig};
use qtsne::similarity::PerplexityConfig;
use qtsne::trainer::{
    compute_p, train_nonparametric, train_problem, Backend, Dataset, Inputs, Problem, RunConfig,
};
use qtsne::{Dataset64, RunConfig64};

use crate::config::RunSettings;
use crate::error::CliError;
use crate::svg;

pub const BUILTIN_IRIS: &str = "iris";
pub const MANIFEST: &str = "manifest.toml";
pub const DEFAULT_RESOLUTION: usize = 41;
pub const DEFAULT_SNAPSHOT: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenerateIsing,
    Embed,
    Baseline,
    Landscape,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::GenerateIsing => "generate-ising",
            Command::Embed => "embed",
            Command::Baseline => "baseline",
            Command::Landscape => "landscape",
        }
    }
}

/// Result of a successful command.
#[derive(Debug, Clone)]
pub struct Report {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub summary: String,
}

struct Outputs {
    files: Vec<(&'static str, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Self { files: Vec::new() }
    }

    fn add(&mut self, name: &'static str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name, bytes.into()));
    }

    fn write(self, dir: &Path) -> Result<Vec<String>, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut names = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|source| CliError::Write { path, source })?;
            names.push(name.to_string());
        }
        Ok(names)
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| CliError::Data(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(enc)?;
    for r in rows {
        w.write_record(&r).map_err(enc)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Data(format!("csv encoding failed: {e}")))
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn execute(command: Command, settings: RunSettings) -> Result<Report, CliError> {
    if let Some(c) = settings.command.as_deref() {
        if c != command.as_str() {
            return Err(CliError::Config(format!(
                "config was written for `{c}`, not `{}`",
                command.as_str()
            )));
        }
    }
    settings.check_seed()?;
    let mut settings = settings;
    settings.command = Some(command.as_str().to_string());
    match command {
        Command::GenerateIsing => generate(settings),
        Command::Embed => embed(settings),
        Command::Baseline => baseline(settings),
        Command::Landscape => landscape(settings),
    }
}

fn finish(mut outputs: Outputs, resolved: &RunSettings, summary: String) -> Result<Report, CliError> {
    let out_dir = PathBuf::from(resolved.require_out()?);
    outputs.add(MANIFEST, resolved.to_toml()?);
    let files = outputs.write(&out_dir)?;
    Ok(Report {
        out_dir,
        files,
        summary,
    })
}

fn generate(mut s: RunSettings) -> Result<Report, CliError> {
    s.require_out()?;
    let samples = *s.samples.get_or_insert(datagen::DEFAULT_SAMPLES_PER_SIGN);
    let seed = *s.seed.get_or_insert(0);
    let tau = *s.tau.get_or_insert(datagen::DEFAULT_TAU);
    let dt = *s.dt.get_or_insert(datagen::DEFAULT_DT);
    if samples == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    let steps: Vec<usize> = match s.snapshot {
        Some(step) => vec![step],
        None => datagen::DEFAULT_SNAPSHOTS.to_vec(),
    };
    let dataset = generate_ising(samples, seed, tau, dt, &steps)?;
    let mut states = Vec::new();
    serialize_states(&dataset, &mut states)?;
    let mut instances = Vec::new();
    serialize_instances(&dataset, &mut instances)?;
    let mut outputs = Outputs::new();
    outputs.add("states.csv", states);
    outputs.add("instances.csv", instances);
    let summary = format!(
        "{} instances, snapshots {:?}",
        dataset.instances.len(),
        steps
    );
    finish(outputs, &s, summary)
}

/// Loaded input together with the backend it implies when none is configured.
struct LoadedInput {
    dataset: Dataset64,
    is_state_file: bool,
}

fn reject_snapshot(s: &RunSettings, input: &str) -> Result<(), CliError> {
    match s.snapshot {
        Some(_) => Err(CliError::Config(format!(
            "--snapshot only applies to state files, but {input} is a classical table"
        ))),
        None => Ok(()),
    }
}

fn load_input(s: &mut RunSettings) -> Result<LoadedInput, CliError> {
    let input = s.require_input()?.to_string();
    if input == BUILTIN_IRIS {
        reject_snapshot(s, &input)?;
        let iris = datagen::iris();
        return Ok(LoadedInput {
            dataset: Dataset::classical(iris.features, iris.labels),
            is_state_file: false,
        });
    }
    let text = fs::read_to_string(&input)
        .map_err(|e| CliError::Data(format!("cannot read input {input}: {e}")))?;
    let first = text.lines().next().unwrap_or("");
    let is_states = first.split(',').map(str::trim).eq(STATE_HEADER.iter().copied());
    if is_states {
        let records = deserialize_states(text.as_bytes())?;
        let step = *s.snapshot.get_or_insert(DEFAULT_SNAPSHOT);
        let (states, labels) = snapshot_of(&records, step)?;
        Ok(LoadedInput {
            dataset: Dataset::quantum(states, labels),
            is_state_file: true,
        })
    } else {
        reject_snapshot(s, &input)?;
        let table = datagen::load_and_normalize(text.as_bytes())?;
        Ok(LoadedInput {
            dataset: Dataset::classical(table.features, table.labels),
            is_state_file: false,
        })
    }
}

fn parse_backend(name: &str) -> Result<Backend, CliError> {
    name.parse::<Backend>().map_err(|_| {
        CliError::Config(format!(
            "unknown backend '{name}'; expected euclidean, observables, infidelity or neg-log-fidelity"
        ))
    })
}

/// Fills defaults into `s` and builds the dataset and run config it describes.
fn resolve_training(s: &mut RunSettings) -> Result<(Dataset64, RunConfig64), CliError> {
    let loaded = load_input(s)?;
    let default_backend = if loaded.is_state_file {
        Backend::Infidelity
    } else {
        Backend::Euclidean
    };
    let backend = match s.backend.as_deref() {
        Some(name) => parse_backend(name)?,
        None => default_backend,
    };
    s.backend = Some(backend.to_string());
    let dataset = match (loaded.dataset.inputs, backend.needs_quantum_input()) {
        (Inputs::Classical(x), true) => {
            let states = x
                .iter()
                .map(|row| feature_map_state(row))
                .collect::<qtsne::Result<Vec<_>>>()?;
            Dataset::quantum(states, loaded.dataset.labels)
        }
        (inputs, _) => Dataset {
            inputs,
            labels: loaded.dataset.labels,
        },
    };
    let defaults = RunConfig64::default();
    let adam_defaults = AdamConfig::<f64>::default();
    let sam_defaults = SamConfig::<f64>::default();
    let config = RunConfig {
        backend,
        perplexity: PerplexityConfig::with_target(
            *s.perplexity.get_or_insert(defaults.perplexity.target),
        ),
        scale_a: *s.scale_a.get_or_insert(defaults.scale_a),
        depth: *s.depth.get_or_insert(defaults.depth),
        epochs: *s.epochs.get_or_insert(defaults.epochs),
        seed: *s.seed.get_or_insert(defaults.seed),
        adam: AdamConfig {
            lr: *s.learning_rate.get_or_insert(adam_defaults.lr),
            ..adam_defaults
        },
        sam: SamConfig {
            rho: *s.sam_rho.get_or_insert(sam_defaults.rho),
            weight_decay: *s.weight_decay.get_or_insert(sam_defaults.weight_decay),
        },
    };
    config.validate_for(&dataset)?;
    Ok((dataset, config))
}

fn embedding_csv(points: &[[f64; 2]], labels: &[String]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &strings(&["id", "label", "y1", "y2"]),
        points
            .iter()
            .zip(labels)
            .enumerate()
            .map(|(i, (p, l))| vec![i.to_string(), l.clone(), num(p[0]), num(p[1])]),
    )
}

fn cost_csv(costs: &[f64]) -> Result<Vec<u8>, CliError> {
    csv_bytes(
        &strings(&["epoch", "cost"]),
        costs.iter().enumerate().map(|(k, c)| vec![k.to_string(), num(*c)]),
    )
}

fn embed(mut s: RunSettings) -> Result<Report, CliError> {
    s.require_out()?;
    let (dataset, config) = resolve_training(&mut s)?;
    let problem = Problem::new(dataset, &config)?;
    let run = train_problem(&problem, &config)?;

    let n_params = problem.n_params();
    let mut header = vec!["epoch".to_string()];
    header.extend((0..n_params).map(|k| format!("theta_{k}")));
    let trajectory = csv_bytes(
        &header,
        run.theta_trajectory.iter().enumerate().map(|(k, row)| {
            std::iter::once(k.to_string())
                .chain(row.iter().map(|v| num(*v)))
                .collect()
        }),
    )?;
    let mut outputs = Outputs::new();
    outputs.add("embedding.csv", embedding_csv(&run.final_points, &run.labels)?);
    outputs.add("cost_history.csv", cost_csv(&run.cost_history)?);
    outputs.add("trajectory.csv", trajectory);
    outputs.add(
        "embedding.svg",
        svg::scatter(
            &format!("{} embedding, a = {}, L = {}", config.backend, config.scale_a, config.depth),
            &run.final_points,
            &run.labels,
        ),
    );
    let summary = format!(
        "{} points, cost {:.6} -> {:.6}",
        run.final_points.len(),
        run.cost_history[0],
        run.cost_history.last().expect("non-empty history")
    );
    finish(outputs, &s, summary)
}

fn baseline(mut s: RunSettings) -> Result<Report, CliError> {
    s.require_out()?;
    for (key, set) in [
        ("scale_a", s.scale_a.is_some()),
        ("depth", s.depth.is_some()),
    ] {
        if set {
            return Err(CliError::Config(format!("`{key}` has no effect on the baseline")));
        }
    }
    let (dataset, mut config) = resolve_training(&mut s)?;
    s.scale_a = None;
    s.depth = None;
    config.scale_a = 1.0;
    let p = compute_p(&dataset, &config)?;
    let run = train_nonparametric(&p, &config)?;
    let mut outputs = Outputs::new();
    outputs.add("embedding.csv", embedding_csv(&run.points, &dataset.labels)?);
    outputs.add("cost_history.csv", cost_csv(&run.cost_history)?);
    outputs.add(
        "embedding.svg",
        svg::scatter("t-SNE baseline", &run.points, &dataset.labels),
    );
    let summary = format!(
        "{} points, cost {:.6} -> {:.6}",
        run.points.len(),
        run.cost_history[0],
        run.cost_history.last().expect("non-empty history")
    );
    finish(outputs, &s, summary)
}

fn read_trajectory(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("missing trajectory {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Data(format!("{}: row {} has a non-numeric entry", path.display(), k + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn read_final_cost(path: &Path) -> Result<f64, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("missing cost history {}: {e}", path.display())))?;
    let mut last = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        last = rec.get(1).and_then(|f| f.parse::<f64>().ok());
    }
    last.ok_or_else(|| CliError::Data(format!("{} has no cost rows", path.display())))
}

fn landscape(mut s: RunSettings) -> Result<Report, CliError> {
    s.require_out()?;
    let run_dir = PathBuf::from(s.require_input()?);
    let manifest_path = run_dir.join(MANIFEST);
    if !manifest_path.is_file() {
        return Err(CliError::Data(format!(
            "{} is not an embed run directory (no {MANIFEST})",
            run_dir.display()
        )));
    }
    let mut run_settings = RunSettings::load(&manifest_path)?;
    if run_settings.command.as_deref() != Some(Command::Embed.as_str()) {
        return Err(CliError::Config(format!(
            "{} was not written by `embed`",
            manifest_path.display()
        )));
    }
    let trajectory = read_trajectory(&run_dir.join("trajectory.csv"))?;
    let recorded_final = read_final_cost(&run_dir.join("cost_history.csv"))?;
    let (dataset, config) = resolve_training(&mut run_settings)?;
    let problem = Problem::new(dataset, &config)?;
    if trajectory.first().map(Vec::len) != Some(problem.n_params()) {
        return Err(CliError::Data(format!(
            "trajectory width does not match the {} circuit parameters",
            problem.n_params()
        )));
    }

    let m = build_trajectory_matrix(&trajectory)?;
    let pca = pca_two_components(&m)?;
    let projected = project_trajectory(&m, &pca.dir1, &pca.dir2)?;
    let resolution = *s.resolution.get_or_insert(DEFAULT_RESOLUTION);
    let half_width = *s.half_width.get_or_insert(default_half_width(&projected));
    let grid = evaluate_grid(
        |theta: &[f64]| problem.forward(theta).map(|f| f.cost),
        m.final_theta(),
        &pca.dir1,
        &pca.dir2,
        half_width,
        resolution,
    )?;

    let contour = csv_bytes(
        &strings(&["alpha", "beta", "cost"]),
        grid.cells.iter().map(|c| {
            let cost = if c.finite { num(c.cost) } else { "nan".to_string() };
            vec![num(c.alpha), num(c.beta), cost]
        }),
    )?;
    let projection = csv_bytes(
        &strings(&["epoch", "alpha", "beta"]),
        projected
            .iter()
            .enumerate()
            .map(|(k, p)| vec![k.to_string(), num(p[0]), num(p[1])]),
    )?;
    let center = grid.center_cell();
    let center_norm = m.final_theta().iter().map(|v| v * v).sum::<f64>().sqrt();
    let flagged = grid.cells.iter().filter(|c| !c.finite).count();
    let meta = format!(
        "center_norm = {}\nexplained_ratio_1 = {}\nexplained_ratio_2 = {}\nhalf_width = {}\nresolution = {}\ncenter_cost = {}\nrecorded_final_cost = {}\nflagged_cells = {}\n",
        center_norm,
        pca.explained[0],
        pca.explained[1],
        half_width,
        resolution,
        center.cost,
        recorded_final,
        flagged
    );
    let cells: Vec<(f64, f64, Option<f64>)> = grid
        .cells
        .iter()
        .map(|c| (c.alpha, c.beta, c.finite.then_some(c.cost)))
        .collect();
    let mut outputs = Outputs::new();
    outputs.add("contour.csv", contour);
    outputs.add("contour_meta.toml", meta);
    outputs.add("trajectory_projection.csv", projection);
    outputs.add(
        "landscape.svg",
        svg::contour(
            &format!(
                "cost landscape, PC ratios {:.3} / {:.3}",
                pca.explained[0], pca.explained[1]
            ),
            &cells,
            resolution,
            &projected,
        ),
    );
    let summary = format!(
        "{}x{} grid, center cost {:.6} (recorded {:.6}), {} flagged cells",
        resolution, resolution, center.cost, recorded_final, flagged
    );
    finish(outputs, &s, summary)
}
