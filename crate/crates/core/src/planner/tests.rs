use super::*;
use crate::datagen::{default_score, extract_all, generate_dataset};
use crate::neural::{train_policy, AdamConfig, PolicyDims, TrainConfig};
use crate::reactions::{parse_blocks, parse_templates, World};
use crate::synthtree::Role;
use crate::toy;
use std::sync::OnceLock;

fn world() -> &'static World {
    static W: OnceLock<World> = OnceLock::new();
    W.get_or_init(toy::world)
}

fn small_dims(w: &World) -> PolicyDims {
    let mut d = PolicyDims::toy(w.templates.len());
    d.hidden = [64; 4];
    d.depth = 1;
    d
}

fn untrained(w: &World, seed: u64) -> Policy<f32> {
    Policy::new(small_dims(w), seed, w.templates_hash(), w.blocks_hash()).unwrap()
}

fn check_tree(w: &World, t: &SyntheticTree) {
    assert_eq!(t.action_log[0].kind, ActionKind::Add);
    for n in t.nodes.iter().filter(|n| n.role == Role::BuildingBlock) {
        assert!(w.block_index(&n.smiles).is_some());
    }
    let env = Environment::new(w, DEFAULT_T_MAX);
    assert_eq!(&env.replay(&t.action_log).unwrap().0, t);
}

#[test]
fn random_policies_only_emit_valid_actions() {
    let w = world();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut steps = 0;
    for seed in 0..6 {
        let p = untrained(w, seed);
        for temperature in [None, Some(1.0)] {
            let planner = Planner::new(
                w,
                &p,
                DecodeConfig {
                    temperature,
                    ..DecodeConfig::default()
                },
            )
            .unwrap();
            for _ in 0..25 {
                let z = BitSet::from_indices(1024, (0..1024).filter(|_| rng.random_bool(0.05)));
                let d = planner.decode(&z, rng.random_range(0..3), &mut rng).unwrap();
                steps += d.tree().action_log.len();
                if let Decoded::Complete(t) = d {
                    check_tree(w, &t);
                }
            }
        }
    }
    assert!(steps > 300);
}

#[test]
fn plan_contracts() {
    let w = world();
    let p = untrained(w, 1);
    let planner = Planner::new(w, &p, DecodeConfig::default()).unwrap();
    let target = crate::molgraph::parse_smiles("CC(=O)Nc1ccc(-c2ccccc2)cc1").unwrap();
    let r = planner.plan(&target).unwrap();
    assert!(r.candidates.len() <= 3);
    for c in &r.candidates {
        let sim = tanimoto_bits(
            &planner.featurizer().mlp_fp(c.molecule(c.root().unwrap())),
            &planner.featurizer().mlp_fp(&target),
        );
        assert!(r.similarity >= sim);
    }
    assert_eq!(r, planner.plan(&target).unwrap());
    if r.recovered {
        assert_eq!(r.similarity, 1.0);
    }
}

#[test]
fn incompatible_checkpoint_refused() {
    let w = world();
    let p = Policy::<f32>::new(small_dims(w), 0, w.templates_hash() ^ 1, w.blocks_hash()).unwrap();
    assert!(matches!(
        Planner::new(w, &p, DecodeConfig::default()),
        Err(NeuralError::Compatibility(_))
    ));
}

#[test]
fn memorized_one_step_world_is_fully_recovered() {
    let templates = parse_templates("nitro\t[c:1][N+](=O)[O-]>>[c:1][NH2]\n", "t").unwrap();
    let blocks = parse_blocks(
        "O=[N+]([O-])c1ccccc1\nCc1ccc([N+](=O)[O-])cc1\nCOc1ccc([N+](=O)[O-])cc1\nO=[N+]([O-])c1cccnc1\n",
        "b",
    )
    .unwrap();
    let w = World::new(templates, blocks);
    let env = Environment::new(&w, 2);
    let trees: Vec<SyntheticTree> = (0..w.blocks.len())
        .map(|b| env.replay(&[Action::add(b, 0, None, 0), Action::end()]).unwrap().0)
        .collect();
    let mut dims = small_dims(&w);
    dims.hidden = [32; 4];
    let fz = dims.featurizer;
    let ex = extract_all(&trees, &env, &fz).unwrap();
    let mut p = Policy::<f32>::new(dims, 3, w.templates_hash(), w.blocks_hash()).unwrap();
    let cfg = TrainConfig {
        epochs: 300,
        batch_size: 8,
        adam: AdamConfig {
            lr: 3e-3,
            ..AdamConfig::default()
        },
        seed: 0,
    };
    train_policy(&mut p, &ex, &[], &cfg, None).unwrap();
    let planner = Planner::new(
        &w,
        &p,
        DecodeConfig {
            k_rt1: 1,
            t_max: 2,
            ..DecodeConfig::default()
        },
    )
    .unwrap();
    let targets: Vec<Molecule> = trees.iter().map(|t| t.molecule(t.root().unwrap()).clone()).collect();
    let rep = planner.evaluate_recovery(&targets).unwrap();
    assert_eq!(rep.recovery_rate, 1.0, "{:?}", rep.records);
    assert_eq!(rep.average_similarity, 1.0);
    assert_eq!(rep.unrecovered_similarity, None);
}

#[test]
fn report_algebra_and_random_baseline() {
    let w = world();
    let env = Environment::new(w, DEFAULT_T_MAX);
    let fz = Featurizer::toy(w.templates.len());
    let cfg = crate::datagen::DatagenConfig {
        n_target_trees: 30,
        seed: 2,
        ..Default::default()
    };
    let d = generate_dataset(&env, &cfg, &default_score).unwrap();
    let targets: Vec<Molecule> = d.train.iter().map(|t| t.molecule(t.root().unwrap()).clone()).collect();
    let rep = evaluate_random(&env, &fz, &targets, 3, 0);
    assert_eq!(rep.n, targets.len());
    assert!((0.0..=1.0).contains(&rep.recovery_rate));
    assert!(rep.average_similarity >= rep.recovery_rate);
    assert!(rep.recovery_rate < 0.2);
    assert_eq!(rep, evaluate_random(&env, &fz, &targets, 3, 0));
}
