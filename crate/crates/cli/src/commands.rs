use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use synroute::bits::BitSet;
use synroute::datagen::{
    default_score, extract_all, generate_dataset, read_shard, write_shard, write_trees, DatagenError, DatagenStats,
    Featurizer,
};
use synroute::hash::fnv1a;
use synroute::metrics::{corpus_summary, correlation_report, property_pairs, Correlation};
use synroute::molgraph::{parse_smiles, DescriptorKind, Molecule};
use synroute::neural::{load_checkpoint, save_checkpoint, train_policy, KnnIndex, NeuralError, Policy};
use synroute::optimizer::{ga_init, ga_run, Oracle, OracleSpec};
use synroute::planner::{Planner, RecoveryReport};
use synroute::reactions::{parse_blocks, parse_templates, World};
use synroute::synthtree::Environment;
use synroute::Real;

use crate::config::Config;
use crate::manifest::RunManifest;
use crate::{write, Failure, WorldArgs};

const TEMPLATES_FILE: &str = "templates.tsv";
const BLOCKS_FILE: &str = "blocks.smi";
const DATASET_FILE: &str = "dataset.json";
const CHECKPOINT_FILE: &str = "policy.ckpt";
const SPLITS: [&str; 3] = ["train", "valid", "test"];

/// Metadata `gen-data` leaves for `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DatasetInfo {
    featurizer: Featurizer,
    templates_hash: u64,
    blocks_hash: u64,
    stats: DatagenStats,
    sizes: [usize; 3],
    examples: [usize; 3],
}

struct LoadedWorld {
    world: World,
    templates_text: String,
    blocks_text: String,
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn load_world(cfg: &Config) -> Result<LoadedWorld, Failure> {
    let tpath = cfg
        .templates
        .as_deref()
        .ok_or_else(|| Failure::parse("no templates file given"))?;
    let bpath = cfg
        .blocks
        .as_deref()
        .ok_or_else(|| Failure::parse("no blocks file given"))?;
    let templates_text = read_input(tpath)?;
    let blocks_text = read_input(bpath)?;
    let templates =
        parse_templates(&templates_text, &tpath.display().to_string()).map_err(|e| Failure::parse(e.to_string()))?;
    let blocks = parse_blocks(&blocks_text, &bpath.display().to_string()).map_err(|e| Failure::parse(e.to_string()))?;
    let world = World::new(templates, blocks);
    log::info!(
        "{} templates, {} admitted blocks ({} rejected)",
        world.templates.len(),
        world.blocks.len(),
        world.rejected
    );
    Ok(LoadedWorld {
        world,
        templates_text,
        blocks_text,
    })
}

/// A dataset directory supplies templates and blocks unless given explicitly.
pub fn apply_world_args(cfg: &mut Config, args: WorldArgs) -> Option<PathBuf> {
    if let Some(d) = &args.data {
        cfg.templates = Some(d.join(TEMPLATES_FILE));
        cfg.blocks = Some(d.join(BLOCKS_FILE));
    }
    cfg.templates = args.templates.or(cfg.templates.take());
    cfg.blocks = args.blocks.or(cfg.blocks.take());
    args.data
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::other(format!("{}: {e}", dir.display())))
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(v).expect("serializable")
}

fn datagen_failure(e: DatagenError) -> Failure {
    match e {
        DatagenError::InsufficientYield { .. } => Failure::yield_(e.to_string()),
        DatagenError::Config(_) | DatagenError::Format(_) => Failure::parse(e.to_string()),
        _ => Failure::other(e.to_string()),
    }
}

fn neural_failure(e: NeuralError) -> Failure {
    match e {
        NeuralError::Dimension(_) | NeuralError::Compatibility(_) => Failure::mismatch(e.to_string()),
        NeuralError::Format(_) => Failure::parse(e.to_string()),
        NeuralError::Io(_) => Failure::parse(e.to_string()),
        _ => Failure::other(e.to_string()),
    }
}

pub fn gen_data(cfg: &Config, out: &Path) -> Result<(), Failure> {
    let mut manifest = RunManifest::new("gen-data", cfg);
    let w = load_world(cfg)?;
    manifest.input("templates", fnv1a(w.templates_text.as_bytes()));
    manifest.input("blocks", fnv1a(w.blocks_text.as_bytes()));
    let dims = cfg.model.dims(w.world.templates.len());
    dims.validate().map_err(neural_failure)?;
    let env = Environment::new(&w.world, cfg.datagen.t_max);
    let ds = generate_dataset(&env, &cfg.datagen, &default_score).map_err(datagen_failure)?;
    create_dir(&out.join("examples"))?;
    let splits = [&ds.train, &ds.valid, &ds.test];
    let mut examples = [0; 3];
    for (i, (name, trees)) in SPLITS.iter().zip(splits).enumerate() {
        write_trees(&out.join(format!("{name}.jsonl")), trees).map_err(datagen_failure)?;
        let ex = extract_all(trees, &env, &dims.featurizer).map_err(datagen_failure)?;
        examples[i] = ex.len();
        write_shard(&out.join("examples").join(format!("{name}.shard")), &ex).map_err(datagen_failure)?;
    }
    write(&out.join(TEMPLATES_FILE), w.templates_text.as_bytes())?;
    write(&out.join(BLOCKS_FILE), w.blocks_text.as_bytes())?;
    let info = DatasetInfo {
        featurizer: dims.featurizer,
        templates_hash: w.world.templates_hash(),
        blocks_hash: w.world.blocks_hash(),
        stats: ds.stats.clone(),
        sizes: [ds.train.len(), ds.valid.len(), ds.test.len()],
        examples,
    };
    write(&out.join(DATASET_FILE), &to_json(&info))?;
    let all: Vec<_> = splits.into_iter().flatten().cloned().collect();
    write(&out.join("summary.json"), &to_json(&corpus_summary(&all)))?;
    log::info!("{} trees ({:?}), {:?} examples", all.len(), info.sizes, examples);
    manifest.finish(out)
}

fn read_dataset(data: &Path) -> Result<DatasetInfo, Failure> {
    let path = data.join(DATASET_FILE);
    serde_json::from_str(&read_input(&path)?).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn curves_csv(report: &synroute::neural::TrainReport) -> String {
    let mut head = vec!["epoch".to_string()];
    for name in report.curves.keys() {
        head.extend(["train_loss", "valid_loss", "valid_accuracy"].map(|c| format!("{name}_{c}")));
    }
    let epochs = report.curves.values().map(Vec::len).max().unwrap_or(0);
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut out = head.join(",") + "\n";
    for e in 0..epochs {
        let mut row = vec![(e + 1).to_string()];
        for c in report.curves.values() {
            match c.get(e) {
                Some(s) => row.extend([s.train_loss.to_string(), opt(s.valid_loss), opt(s.valid_accuracy)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        out += &(row.join(",") + "\n");
    }
    out
}

pub fn train(cfg: &Config, data: &Path, out: &Path, resume: Option<&Path>) -> Result<(), Failure> {
    let mut cfg = cfg.clone();
    cfg.templates = Some(data.join(TEMPLATES_FILE));
    cfg.blocks = Some(data.join(BLOCKS_FILE));
    let mut manifest = RunManifest::new("train", &cfg);
    let info = read_dataset(data)?;
    let w = load_world(&cfg)?;
    let world = &w.world;
    if (info.templates_hash, info.blocks_hash) != (world.templates_hash(), world.blocks_hash()) {
        return Err(Failure::mismatch(
            "dataset metadata does not match its templates/blocks",
        ));
    }
    let dims = cfg.model.dims(world.templates.len());
    if dims.featurizer != info.featurizer {
        return Err(Failure::mismatch(format!(
            "dataset fingerprints {:?} differ from model fingerprints {:?}",
            info.featurizer, dims.featurizer
        )));
    }
    let mut shards = Vec::new();
    for name in ["train", "valid"] {
        let path = data.join("examples").join(format!("{name}.shard"));
        let bytes = std::fs::read(&path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        manifest.input(&format!("{name}_shard"), fnv1a(&bytes));
        shards.push(read_shard(&path).map_err(datagen_failure)?);
    }
    let mut policy = match resume {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
            manifest.input("checkpoint", fnv1a(&bytes));
            let p: Policy<Real> = load_checkpoint(path).map_err(neural_failure)?;
            p.check_compatible(world.templates_hash(), world.blocks_hash(), world.templates.len())
                .map_err(neural_failure)?;
            if p.dims != dims {
                return Err(Failure::mismatch(format!(
                    "checkpoint dims {:?} differ from config {:?}",
                    p.dims, dims
                )));
            }
            p
        }
        None => {
            Policy::new(dims, cfg.train.seed, world.templates_hash(), world.blocks_hash()).map_err(neural_failure)?
        }
    };
    let fps: Vec<BitSet> = world.blocks.iter().map(|b| dims.featurizer.knn_fp(b)).collect();
    let knn = KnnIndex::from_bits(&fps).map_err(neural_failure)?;
    let report = train_policy(&mut policy, &shards[0], &shards[1], &cfg.train, Some(&knn)).map_err(neural_failure)?;
    create_dir(out)?;
    save_checkpoint(&policy, &out.join(CHECKPOINT_FILE)).map_err(neural_failure)?;
    write(&out.join("curves.csv"), curves_csv(&report).as_bytes())?;
    manifest.finish(out)
}

fn load_policy(path: &Path, manifest: &mut RunManifest) -> Result<Policy<Real>, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    manifest.input("checkpoint", fnv1a(&bytes));
    load_checkpoint(path).map_err(neural_failure)
}

fn read_smiles_file(path: &Path) -> Result<Vec<Molecule>, Failure> {
    read_input(path)?
        .lines()
        .enumerate()
        .filter_map(|(i, l)| {
            l.split_whitespace()
                .next()
                .filter(|t| !t.starts_with('#'))
                .map(|t| (i, t))
        })
        .map(|(i, s)| parse_smiles(s).map_err(|e| Failure::parse(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

pub enum Targets {
    One(String),
    File(PathBuf),
}

#[derive(Serialize)]
struct PlanSummary<'a> {
    n: usize,
    recovery_rate: f64,
    average_similarity: f64,
    unrecovered_similarity: Option<f64>,
    correlations: &'a [Correlation],
}

pub fn plan(
    cfg: &Config,
    data: Option<&Path>,
    ckpt: &Path,
    targets: &Targets,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let mut manifest = RunManifest::new("plan", cfg);
    let w = load_world(cfg)?;
    if let Some(d) = data {
        log::info!("world from {}", d.display());
    }
    let policy = load_policy(ckpt, &mut manifest)?;
    let planner = Planner::new(&w.world, &policy, cfg.decode).map_err(neural_failure)?;
    let mols = match targets {
        Targets::One(s) => vec![parse_smiles(s).map_err(|e| Failure::parse(format!("target {s}: {e}")))?],
        Targets::File(f) => {
            manifest.input("targets", fnv1a(read_input(f)?.as_bytes()));
            read_smiles_file(f)?
        }
    };
    let report: RecoveryReport = planner
        .evaluate_recovery(&mols)
        .map_err(|e| Failure::other(e.to_string()))?;
    let mut lines = String::new();
    for r in &report.records {
        lines += &serde_json::to_string(r).expect("record serializes");
        lines.push('\n');
    }
    print!("{lines}");
    log::info!(
        "recovered {:.3} of {} targets, mean similarity {:.3}",
        report.recovery_rate,
        report.n,
        report.average_similarity
    );
    if let Some(out) = out {
        create_dir(out)?;
        write(&out.join("results.jsonl"), lines.as_bytes())?;
        let sets = DescriptorKind::ALL
            .iter()
            .map(|&k| property_pairs(&report.records, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::other(e.to_string()))?;
        // Too few or constant values leave correlation undefined; report what is defined.
        let correlations: Vec<Correlation> = sets
            .iter()
            .filter_map(|s| correlation_report(std::slice::from_ref(s)).ok())
            .flatten()
            .collect();
        for c in &correlations {
            write(&out.join(format!("scatter_{}.csv", c.property)), c.scatter.as_bytes())?;
        }
        let summary = PlanSummary {
            n: report.n,
            recovery_rate: report.recovery_rate,
            average_similarity: report.average_similarity,
            unrecovered_similarity: report.unrecovered_similarity,
            correlations: &correlations,
        };
        write(&out.join("report.json"), &to_json(&summary))?;
        manifest.finish(out)?;
    }
    Ok(())
}

/// Parses the compact `--oracle` syntax.
pub fn parse_oracle(spec: &str) -> Result<OracleSpec, Failure> {
    let bad = || Failure::parse(format!("bad oracle spec {spec:?}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    match kind {
        "similarity" => Ok(OracleSpec::Similarity { reference: rest.into() }),
        "descriptor" => {
            let parts: Vec<&str> = rest.split(':').collect();
            let [name, target, width] = parts[..] else {
                return Err(bad());
            };
            Ok(OracleSpec::Descriptor {
                descriptor: DescriptorKind::from_name(name).ok_or_else(bad)?,
                target: target.parse().map_err(|_| bad())?,
                width: width.parse().map_err(|_| bad())?,
            })
        }
        "external" => {
            let command: Vec<String> = rest.split_whitespace().map(String::from).collect();
            if command.is_empty() {
                return Err(bad());
            }
            Ok(OracleSpec::External {
                command,
                timeout_secs: 60.0,
                batch: 64,
            })
        }
        _ => Err(bad()),
    }
}

pub fn optimize(
    cfg: &Config,
    data: Option<&Path>,
    ckpt: &Path,
    seeds: Option<&Path>,
    out: &Path,
) -> Result<(), Failure> {
    let mut manifest = RunManifest::new("optimize", cfg);
    let spec = cfg.oracle.as_ref().ok_or_else(|| Failure::parse("no oracle given"))?;
    let w = load_world(cfg)?;
    if let Some(d) = data {
        log::info!("world from {}", d.display());
    }
    let policy = load_policy(ckpt, &mut manifest)?;
    let planner = Planner::new(&w.world, &policy, cfg.decode).map_err(neural_failure)?;
    let fz = *planner.featurizer();
    let oracle = Oracle::from_spec(spec, fz.mlp).map_err(|e| Failure::parse(e.to_string()))?;
    let seed_fps: Vec<BitSet> = match seeds {
        Some(p) => {
            manifest.input("seeds", fnv1a(read_input(p)?.as_bytes()));
            read_smiles_file(p)?.iter().map(|m| fz.mlp_fp(m)).collect()
        }
        None => Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.ga.seed);
    let init = ga_init(&seed_fps, fz.mlp.nbits, &cfg.ga, &mut rng).map_err(|e| Failure::parse(e.to_string()))?;
    let result = ga_run(&planner, &oracle, init, &cfg.ga).map_err(|e| Failure::other(e.to_string()))?;
    create_dir(out)?;
    let io = |e: std::io::Error| Failure::other(e.to_string());
    result.write_history(&out.join("history.json")).map_err(io)?;
    result.write_ranked(&out.join("results.jsonl")).map_err(io)?;
    log::info!(
        "{} generations ({:?}); best {:?}",
        result.generations(),
        result.stop,
        result.ranked.first().map(|r| (&r.smiles, r.fitness))
    );
    manifest.finish(out)
}

#[derive(Serialize)]
struct TemplateReport {
    id: usize,
    name: String,
    /// Compatible admitted blocks per reactant position.
    compatible: Vec<usize>,
}

#[derive(Serialize)]
struct ValidateReport {
    templates: Vec<TemplateReport>,
    admitted_blocks: usize,
    rejected_blocks: usize,
    /// Templates with a reactant position no admitted block fills.
    dead_templates: Vec<String>,
}

pub fn validate(cfg: &Config, out: Option<&Path>) -> Result<(), Failure> {
    let mut manifest = RunManifest::new("validate", cfg);
    let w = load_world(cfg)?;
    manifest.input("templates", fnv1a(w.templates_text.as_bytes()));
    manifest.input("blocks", fnv1a(w.blocks_text.as_bytes()));
    let world = &w.world;
    let templates: Vec<TemplateReport> = world
        .templates
        .iter()
        .enumerate()
        .map(|(t, tpl)| TemplateReport {
            id: tpl.id,
            name: tpl.name.clone(),
            compatible: world.masks.by_position[t].iter().map(BitSet::count_ones).collect(),
        })
        .collect();
    let report = ValidateReport {
        dead_templates: templates
            .iter()
            .filter(|t| t.compatible.contains(&0))
            .map(|t| t.name.clone())
            .collect(),
        templates,
        admitted_blocks: world.blocks.len(),
        rejected_blocks: world.rejected,
    };
    let json = to_json(&report);
    println!("{}", String::from_utf8_lossy(&json));
    for name in &report.dead_templates {
        log::warn!("template {name} has a reactant position with no compatible block");
    }
    if let Some(out) = out {
        create_dir(out)?;
        write(&out.join("validate.json"), &json)?;
        manifest.finish(out)?;
    }
    Ok(())
}
