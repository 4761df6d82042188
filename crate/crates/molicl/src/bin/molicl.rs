//! Thin command-line front end over the library. Every subcommand maps to a
//! library call; the runnable examples under `examples/` show the same
//! operations as code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use molicl::encoder::EncoderConfig;
use molicl::experiment::{self, load_config, AblationVariant, ExperimentConfig, StrategyKind};
use molicl::fingerprint::{morgan_fingerprint, write_cache};
use molicl::metrics::ScoreReport;
use molicl::molgraph::parse_smiles;
use molicl::numerics::{finite_diff_check, Tensor2};
use molicl::promptllm::{export_prompts, Task};
use molicl::retrieval::{self, MmrConfig, Payload, PoolQuery};

const USAGE: &str = "molicl <command> [options]

commands:
  parse <SMILES>                        parse and summarize a molecule
  fp <SMILES> [--radius R] [--nbits N]  fingerprint one molecule
  fp --dataset F --task T --out F.gfpr  fingerprint a dataset into a cache
  train --config CFG [--gae]            train the projector (or GAE baseline)
  build-index --config CFG --out F.gidx build and save a demonstration pool
  retrieve --config CFG --smiles S      retrieve demonstrations for a query
  prompt --config CFG [--export F]      build prompts for the test split
  run --config CFG [overrides]          run a full experiment
  sweep-k --config CFG [--ks 0,1,..]    sweep demonstration counts
  sweep-lambda --config CFG [--lambdas] sweep the MMR balance
  ablate --config CFG [--variant V]     run training ablations (or 'all')
  gradcheck [--molecules N] [--seed S]  finite-difference gradient check

run overrides: --strategy random|scaffold|gae|gamic, --k N, --mmr on|off,
  --lambda X, --repeats N, --out DIR, --split-index I";

struct Args {
    positional: Vec<String>,
    flags: Vec<(String, Option<String>)>,
}

impl Args {
    fn parse(raw: &[String]) -> Args {
        let mut positional = Vec::new();
        let mut flags = Vec::new();
        let mut i = 0;
        while i < raw.len() {
            if let Some(name) = raw[i].strip_prefix("--") {
                let value = raw.get(i + 1).filter(|v| !v.starts_with("--")).cloned();
                if value.is_some() {
                    i += 1;
                }
                flags.push((name.to_string(), value));
            } else {
                positional.push(raw[i].clone());
            }
            i += 1;
        }
        Args { positional, flags }
    }

    fn flag(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| v.as_deref())
    }

    fn has(&self, name: &str) -> bool {
        self.flags.iter().any(|(n, _)| n == name)
    }
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    if raw.is_empty() {
        eprintln!("{USAGE}");
        return ExitCode::FAILURE;
    }
    let command = raw[0].clone();
    let args = Args::parse(&raw[1..]);
    match dispatch(&command, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: &str, args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    match command {
        "parse" => cmd_parse(args),
        "fp" => cmd_fp(args),
        "train" => cmd_train(args),
        "build-index" => cmd_build_index(args),
        "retrieve" => cmd_retrieve(args),
        "prompt" => cmd_prompt(args),
        "run" => cmd_run(args),
        "sweep-k" => cmd_sweep_k(args),
        "sweep-lambda" => cmd_sweep_lambda(args),
        "ablate" => cmd_ablate(args),
        "gradcheck" => cmd_gradcheck(args),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(format!("unknown command '{other}'\n\n{USAGE}").into()),
    }
}

fn config_from(args: &Args) -> Result<ExperimentConfig, Box<dyn std::error::Error>> {
    let path = args.flag("config").ok_or("missing --config <file.json>")?;
    let mut cfg = load_config(Path::new(path))?;
    if let Some(strategy) = args.flag("strategy") {
        cfg.strategy = match strategy {
            "random" => StrategyKind::Random,
            "scaffold" => StrategyKind::Scaffold,
            "gae" => StrategyKind::Gae,
            "gamic" => StrategyKind::Gamic,
            other => return Err(format!("unknown strategy '{other}'").into()),
        };
    }
    if let Some(k) = args.flag("k") {
        cfg.k = Some(k.parse()?);
    }
    if let Some(mmr) = args.flag("mmr") {
        cfg.mmr = match mmr {
            "on" | "true" => true,
            "off" | "false" => false,
            other => return Err(format!("--mmr expects on|off, got '{other}'").into()),
        };
    }
    if let Some(lambda) = args.flag("lambda") {
        cfg.lambda = lambda.parse()?;
    }
    if let Some(repeats) = args.flag("repeats") {
        cfg.repeats = repeats.parse()?;
    }
    if let Some(out) = args.flag("out") {
        cfg.out_dir = PathBuf::from(out);
    }
    if let Some(index) = args.flag("split-index") {
        cfg.split_index = index.parse()?;
    }
    Ok(cfg)
}

fn cmd_parse(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let smiles = args
        .positional
        .first()
        .ok_or("usage: molicl parse <SMILES>")?;
    let graph = parse_smiles(smiles)?;
    println!(
        "{} atoms, {} bonds, node features {} wide",
        graph.atom_count(),
        graph.bond_count(),
        molicl::molgraph::NODE_FEATURE_WIDTH
    );
    for (i, atom) in graph.atoms.iter().enumerate() {
        println!(
            "  atom {i}: {}{} degree {} implicit_h {} charge {}{}",
            atom.element,
            if atom.aromatic { " (aromatic)" } else { "" },
            atom.degree,
            atom.implicit_h,
            atom.formal_charge,
            if molicl::molgraph::atom_in_ring(&graph, i) {
                " ring"
            } else {
                ""
            }
        );
    }
    for bond in &graph.bonds {
        println!(
            "  bond {}-{} {:?}{}",
            bond.endpoints.0,
            bond.endpoints.1,
            bond.order,
            if bond.in_ring { " ring" } else { "" }
        );
    }
    Ok(())
}

fn cmd_fp(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let radius: usize = args.flag("radius").unwrap_or("2").parse()?;
    let nbits: usize = args.flag("nbits").unwrap_or("2048").parse()?;
    if let Some(dataset) = args.flag("dataset") {
        let task = parse_task(args.flag("task").unwrap_or("caption"))?;
        let out = args
            .flag("out")
            .ok_or("--dataset needs --out <file.gfpr>")?;
        let (records, summary) = experiment::ingest(Path::new(dataset), task)?;
        let entries: Vec<(String, _)> = records
            .iter()
            .map(|r| {
                let graph = parse_smiles(&r.smiles).expect("validated at ingest");
                (r.id.clone(), morgan_fingerprint(&graph, radius, nbits))
            })
            .collect();
        write_cache(Path::new(out), &entries)?;
        println!(
            "wrote {} fingerprints (radius {radius}, {nbits} bits) to {out}; {} records skipped",
            entries.len(),
            summary.skipped.len()
        );
        return Ok(());
    }
    let smiles = args
        .positional
        .first()
        .ok_or("usage: molicl fp <SMILES> | fp --dataset F --out F.gfpr")?;
    let graph = parse_smiles(smiles)?;
    let fp = morgan_fingerprint(&graph, radius, nbits);
    let bits = fp.on_bits();
    println!("{} bits set of {nbits} (radius {radius})", fp.popcount());
    println!(
        "on bits: {}",
        bits.iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    Ok(())
}

fn parse_task(text: &str) -> Result<Task, String> {
    match text {
        "caption" => Ok(Task::Caption),
        "property" => Ok(Task::Property),
        "yield" => Ok(Task::Yield),
        other => Err(format!("unknown task '{other}'")),
    }
}

fn cmd_train(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    experiment::train_encoder(&cfg, args.has("gae"))?;
    Ok(())
}

fn cmd_build_index(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let out = args.flag("out").ok_or("missing --out <file.gidx>")?;
    let prepared = experiment::prepare(&cfg)?;
    retrieval::save_pool(&prepared.pool, Path::new(out))?;
    println!(
        "wrote index with {} entries to {out} ({} skipped)",
        prepared.pool.len(),
        prepared.skipped.len()
    );
    Ok(())
}

fn cmd_retrieve(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let smiles = args.flag("smiles").ok_or("missing --smiles <SMILES>")?;
    let k = cfg.effective_k();
    let prepared = experiment::prepare(&cfg)?;

    let graph = parse_smiles(smiles)?;
    let fingerprint = morgan_fingerprint(&graph, cfg.fp_radius, cfg.fp_nbits);
    let query_embedding = match cfg.strategy {
        StrategyKind::Gae | StrategyKind::Gamic => Some(experiment::embed_query(&cfg, &graph)?),
        _ => None,
    };
    let query = PoolQuery {
        fingerprint: Some(fingerprint),
        embedding: query_embedding,
    };

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let picked = if let (true, Some(z)) = (cfg.mmr, query.embedding.as_ref()) {
        retrieval::select_mmr(z, &prepared.pool, &MmrConfig::new(k, cfg.lambda))?
    } else {
        let strategy = match cfg.strategy {
            StrategyKind::Random => retrieval::Strategy::Random,
            StrategyKind::Scaffold => retrieval::Strategy::Scaffold,
            _ => retrieval::Strategy::Embedding,
        };
        retrieval::select_topk(&query, &prepared.pool, k, strategy, &mut rng)?
    };
    println!("top {k} demonstrations for {smiles} ({}):", cfg.strategy);
    for (rank, &i) in picked.iter().enumerate() {
        let entry = prepared.pool.entry(i);
        let payload = match &entry.payload {
            Payload::Caption(c) => c.clone(),
            Payload::Label(l) => cfg.task.render_label(*l).to_string(),
        };
        println!(
            "  {}. {} {} -> {}",
            rank + 1,
            entry.id,
            entry.smiles,
            payload
        );
    }
    Ok(())
}

fn cmd_prompt(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let k = cfg.effective_k();
    let prepared = experiment::prepare(&cfg)?;
    let bundles = experiment::build_test_prompts(&cfg, &prepared, k)?;
    if let Some(path) = args.flag("export") {
        export_prompts(&bundles, Path::new(path))?;
        println!("exported {} prompts to {path}", bundles.len());
    } else if let Some((id, bundle)) = bundles.first() {
        println!("prompt for {id}:\n---\n{}\n---", bundle.rendered_text);
        println!(
            "({} prompts total; use --export FILE to write all)",
            bundles.len()
        );
    }
    Ok(())
}

fn print_report(report: &ScoreReport) {
    for m in &report.metrics {
        println!("  {:8} mean {:.4} std {:.4}", m.name, m.mean, m.std);
    }
}

fn cmd_run(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let out = experiment::run_experiment(&cfg)?;
    println!(
        "{} / {} / mmr={} k={} -> {}",
        cfg.task,
        cfg.strategy,
        cfg.mmr,
        cfg.effective_k(),
        out.out_dir.display()
    );
    print_report(&out.report);
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|e| format!("bad value '{p}': {e}"))
        })
        .collect()
}

fn cmd_sweep_k(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let ks: Vec<usize> = match args.flag("ks") {
        Some(text) => parse_list(text)?,
        None => vec![0, 1, 2, 3, 4, 5, 10],
    };
    let results = experiment::sweep_k(&cfg, &ks)?;
    for (k, report) in &results {
        let line: Vec<String> = report
            .metrics
            .iter()
            .map(|m| format!("{} {:.4}", m.name, m.mean))
            .collect();
        println!("k = {k:2}: {}", line.join("  "));
    }
    println!("wrote {}", cfg.out_dir.join("sweep_k.csv").display());
    Ok(())
}

fn cmd_sweep_lambda(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let lambdas: Vec<f64> = match args.flag("lambdas") {
        Some(text) => parse_list(text)?,
        None => vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
    };
    let results = experiment::sweep_lambda(&cfg, &lambdas)?;
    for (lambda, report) in &results {
        let line: Vec<String> = report
            .metrics
            .iter()
            .map(|m| format!("{} {:.4}", m.name, m.mean))
            .collect();
        println!("lambda = {lambda:.1}: {}", line.join("  "));
    }
    println!("wrote {}", cfg.out_dir.join("sweep_lambda.csv").display());
    Ok(())
}

fn cmd_ablate(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    let cfg = config_from(args)?;
    let variants: Vec<AblationVariant> = match args.flag("variant") {
        None | Some("all") => AblationVariant::ALL.to_vec(),
        Some(name) => {
            vec![AblationVariant::parse(name).ok_or_else(|| format!("unknown variant '{name}'"))?]
        }
    };
    for variant in variants {
        let out = experiment::run_ablation(&cfg, variant)?;
        println!("{}:", variant.name());
        print_report(&out.report);
    }
    Ok(())
}

fn cmd_gradcheck(args: &Args) -> Result<(), Box<dyn std::error::Error>> {
    use rand::{RngExt, SeedableRng};
    let molecules: usize = args.flag("molecules").unwrap_or("3").parse()?;
    let seed: u64 = args.flag("seed").unwrap_or("7").parse()?;
    let tolerance: f64 = args.flag("tolerance").unwrap_or("1e-4").parse()?;

    let corpus = molicl::toy::caption_dataset();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let enc_cfg = EncoderConfig {
        hidden_dim: 8,
        heads_layer1: 2,
        out_dim: 4,
        attn_negative_slope: 0.2,
    };
    let mut all_pass = true;
    for i in 0..molecules {
        let record = &corpus[rng.random_range(0..corpus.len())];
        let graph = parse_smiles(&record.smiles)?;
        let mut store = molicl::encoder::init_params(
            &enc_cfg,
            molicl::molgraph::NODE_FEATURE_WIDTH,
            molicl::molgraph::EDGE_FEATURE_WIDTH,
            seed + i as u64,
        )?;
        let positive: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let negatives: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let report = finite_diff_check(
            &mut store,
            |tape, s| {
                let vars = molicl::encoder::bind_encoder(tape, s, &enc_cfg);
                let gi = molicl::encoder::graph_inputs(tape, &graph).unwrap();
                let z = molicl::encoder::encode_on_tape(tape, &vars, &gi);
                // one-anchor NCE against fixed caption vectors
                let tau = 0.1;
                let pos = tape.constant(Tensor2::row_vector(&positive));
                let dp = tape.dot(z, pos);
                let lp = tape.scale(dp, 1.0 / tau);
                let mut row = vec![lp];
                for n in &negatives {
                    let nv = tape.constant(Tensor2::row_vector(n));
                    let dn = tape.dot(z, nv);
                    row.push(tape.scale(dn, 1.0 / tau));
                }
                let logits = tape.concat_cols(&row);
                let probs = tape.softmax_row(logits);
                let mut sel = vec![0.0; row.len()];
                sel[0] = 1.0;
                let selv = tape.constant(Tensor2::row_vector(&sel));
                let p0 = tape.dot(probs, selv);
                let lg = tape.log(p0);
                tape.scale(lg, -1.0)
            },
            1e-5,
            tolerance,
        )?;
        println!(
            "molecule {} ({}): max rel error {:.3e} {}",
            record.id,
            record.smiles,
            report.max_rel_error(),
            if report.all_pass() { "ok" } else { "FAIL" }
        );
        all_pass &= report.all_pass();
    }
    if !all_pass {
        return Err("gradient check failed".into());
    }
    Ok(())
}
