use super::*;
use crate::reactions::World;
use crate::toy;
use std::sync::OnceLock;

fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(toy::world)
}

#[test]
fn filter_extremes_and_rate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((0..1000).all(|_| product_filter(1.0, &mut rng)));
    assert!((0..1000).all(|_| !product_filter(0.0, &mut rng)));
    let n = 10_000;
    let hits = (0..n).filter(|_| product_filter(0.25, &mut rng)).count();
    let rate = hits as f64 / n as f64;
    assert!((rate - 0.5).abs() <= 0.02, "{rate}");
}

#[test]
fn default_score_range() {
    let w = world();
    for m in &w.blocks {
        let s = default_score(m);
        assert!(s > 0.0 && s <= 1.0);
    }
    let drug = crate::molgraph::parse_smiles("CC(=O)Nc1ccc(-c2ccccc2)cc1").unwrap();
    assert_eq!(default_score(&drug), 1.0);
}

#[test]
fn one_step_cap_with_zero_end_weight() {
    let env = Environment::new(world(), 1);
    let cfg = DatagenConfig {
        t_max: 1,
        action_weights: [1.0, 1.0, 1.0, 0.0],
        ..DatagenConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut n = 0;
    for _ in 0..200 {
        if let Some(t) = random_rollout(&env, &cfg, &mut rng) {
            assert_eq!(t.reaction_count(), 1);
            n += 1;
        }
    }
    assert!(n > 0);
}

fn small_cfg(n: usize, seed: u64) -> DatagenConfig {
    DatagenConfig {
        n_target_trees: n,
        seed,
        ..DatagenConfig::default()
    }
}

#[test]
fn dataset_split_dedup_and_determinism() {
    let env = Environment::new(world(), DEFAULT_T_MAX);
    let cfg = small_cfg(101, 9);
    let d = generate_dataset(&env, &cfg, &default_score).unwrap();
    assert_eq!(d.train.len() + d.valid.len() + d.test.len(), 101);
    assert!((d.train.len() as f64 - 60.6).abs() <= 1.0);
    assert!((d.valid.len() as f64 - 20.2).abs() <= 1.0);
    assert!((d.test.len() as f64 - 20.2).abs() <= 1.0);
    let mut roots = HashSet::new();
    for t in d.train.iter().chain(&d.valid).chain(&d.test) {
        assert!(roots.insert(t.root_smiles().unwrap().to_string()));
        for leaf in t.leaves() {
            assert!(env.world.block_index(&leaf.smiles).is_some());
        }
        assert_eq!(&env.replay(&t.action_log).unwrap().0, t);
    }
    let again = generate_dataset(&env, &cfg, &default_score).unwrap();
    assert_eq!(again, d);
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| generate_dataset(&env, &cfg, &default_score).unwrap());
    assert_eq!(single, d);
    let dir = tempfile::tempdir().unwrap();
    let (p1, p2) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    write_trees(&p1, &d.train).unwrap();
    write_trees(&p2, &again.train).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(read_trees(&p1).unwrap(), d.train);
}

#[test]
fn mean_depth_is_shallow() {
    let env = Environment::new(world(), DEFAULT_T_MAX);
    let d = generate_dataset(&env, &small_cfg(200, 4), &default_score).unwrap();
    let all: Vec<_> = d.train.iter().chain(&d.valid).chain(&d.test).collect();
    let mean = all.iter().map(|t| t.reaction_count()).sum::<usize>() as f64 / all.len() as f64;
    assert!((1.5..=4.0).contains(&mean), "mean depth {mean}");
}

#[test]
fn insufficient_yield() {
    let env = Environment::new(world(), DEFAULT_T_MAX);
    let cfg = DatagenConfig {
        max_rollouts: 5,
        ..small_cfg(50, 1)
    };
    assert!(matches!(
        generate_dataset(&env, &cfg, &default_score),
        Err(DatagenError::InsufficientYield { .. })
    ));
    let bad = DatagenConfig {
        split: [0.5, 0.2, 0.2],
        ..small_cfg(5, 1)
    };
    assert!(matches!(
        generate_dataset(&env, &bad, &default_score),
        Err(DatagenError::Config(_))
    ));
}

fn count(ex: &[TrainingExample], tag: NetworkTag) -> usize {
    ex.iter().filter(|e| e.tag == tag).count()
}

#[test]
fn one_reaction_tree_examples() {
    let w = world();
    let env = Environment::new(w, DEFAULT_T_MAX);
    let fz = Featurizer::toy(w.templates.len());
    let b = |s: &str| w.block_index(&crate::molgraph::canonicalize(s).unwrap()).unwrap();
    let amide = w.templates.iter().position(|t| t.name == "amide_coupling").unwrap();
    let nitro = w.templates.iter().position(|t| t.name == "nitro_reduction").unwrap();
    let bi = env
        .replay(&[Action::add(b("CC(=O)O"), amide, Some(b("CN")), 0), Action::end()])
        .unwrap()
        .0;
    let ex = extract_training_examples(&bi, &env, &fz).unwrap();
    assert_eq!(
        [NetworkTag::Act, NetworkTag::Rt1, NetworkTag::Rxn, NetworkTag::Rt2].map(|t| count(&ex, t)),
        [2, 1, 1, 1]
    );
    let uni = env
        .replay(&[Action::add(b("O=[N+]([O-])c1ccccc1"), nitro, None, 0), Action::end()])
        .unwrap()
        .0;
    let ex = extract_training_examples(&uni, &env, &fz).unwrap();
    assert_eq!(
        [NetworkTag::Act, NetworkTag::Rt1, NetworkTag::Rxn, NetworkTag::Rt2].map(|t| count(&ex, t)),
        [2, 1, 1, 0]
    );
    for e in &ex {
        let want = match e.tag {
            NetworkTag::Act | NetworkTag::Rt1 => fz.act_dim(),
            NetworkTag::Rxn => fz.rxn_dim(),
            NetworkTag::Rt2 => fz.rt2_dim(),
        };
        assert_eq!(e.input.len(), want);
    }
}

#[test]
fn merge_steps_emit_no_rt2_and_targets_in_range() {
    let w = world();
    let env = Environment::new(w, DEFAULT_T_MAX);
    let fz = Featurizer::toy(w.templates.len());
    let d = generate_dataset(&env, &small_cfg(150, 21), &default_score).unwrap();
    let mut merges = 0;
    for t in &d.train {
        let ex = extract_training_examples(t, &env, &fz).unwrap();
        let bi_non_merge = t
            .action_log
            .iter()
            .filter(|a| a.kind != ActionKind::Merge && a.rt2.is_some())
            .count();
        merges += t.action_log.iter().filter(|a| a.kind == ActionKind::Merge).count();
        assert_eq!(count(&ex, NetworkTag::Rt2), bi_non_merge);
        assert_eq!(count(&ex, NetworkTag::Act), t.action_log.len());
        for e in &ex {
            match (&e.tag, &e.target) {
                (NetworkTag::Act, Target::Class(c)) => assert!(*c < 4),
                (NetworkTag::Rxn, Target::Class(c)) => assert!((*c as usize) < w.templates.len()),
                (NetworkTag::Rt1 | NetworkTag::Rt2, Target::Bits(b)) => assert_eq!(b.len(), fz.knn.nbits),
                _ => panic!("target kind does not fit tag"),
            }
        }
        assert_eq!(extract_training_examples(t, &env, &fz).unwrap(), ex);
    }
    assert!(merges > 0, "corpus should exercise Merge");
}

#[test]
fn shard_round_trip_and_corruption() {
    let w = world();
    let env = Environment::new(w, DEFAULT_T_MAX);
    let fz = Featurizer::toy(w.templates.len());
    let d = generate_dataset(&env, &small_cfg(20, 3), &default_score).unwrap();
    let ex = extract_all(&d.train, &env, &fz).unwrap();
    let bytes = encode_shard(&ex);
    assert_eq!(decode_shard(&bytes).unwrap(), ex);
    let mut bad = bytes.clone();
    bad[20] ^= 1;
    assert!(matches!(decode_shard(&bad), Err(DatagenError::Format(_))));
    assert!(matches!(
        decode_shard(&bytes[..bytes.len() - 3]),
        Err(DatagenError::Format(_))
    ));
}
