use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::sample::Index;

use voyagegraph::corpus::{corpus_stats, parse_corpus, serialize_corpus, split_corpus, split_sizes, SplitRatio};
use voyagegraph::eval::{cohens_kappa, evaluate_irp, pair_f1, PairF1Report, DEPTH_DEEP, DEPTH_SHALLOW};
use voyagegraph::graph::{ChainMode, GraphInput, OrderRelation, Parent, VisitNode, VisitingOrderGraph};
use voyagegraph::label::{Label, MentionLabel};
use voyagegraph::score::argmax_first;
use voyagegraph::synth::{generate_corpus, SynthConfig};
use voyagegraph::vop::{random_parent_baseline, sequence_sort};
use voyagegraph::vsp::{aggregate_mla, argmax_label};

fn node(i: usize) -> VisitNode {
    VisitNode::single(format!("v{i:02}"))
}

/// A valid graph: each node attaches to ROOT or an earlier node; siblings
/// are ordered by a key and cut into chains.
fn graph_strategy() -> impl Strategy<Value = GraphInput> {
    (1usize..13)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((any::<bool>(), any::<Index>()), n),
                prop::collection::vec(any::<u16>(), n),
                prop::collection::vec(prop::bool::weighted(0.3), n),
            )
        })
        .prop_map(|(attach, keys, cuts)| {
            let n = attach.len();
            let parent: Vec<Option<usize>> =
                attach.iter().enumerate().map(|(i, (root, ix))| (i > 0 && !root).then(|| ix.index(i))).collect();
            let mut groups: BTreeMap<Option<usize>, Vec<usize>> = BTreeMap::new();
            for (i, p) in parent.iter().enumerate() {
                groups.entry(*p).or_default().push(i);
            }
            let mut transition = Vec::new();
            for members in groups.values_mut() {
                members.sort_by_key(|&i| (keys[i], i));
                for w in members.windows(2) {
                    if !cuts[w[1]] {
                        transition.push((node(w[0]), node(w[1])));
                    }
                }
            }
            GraphInput {
                nodes: (0..n).map(node).collect(),
                inclusion: parent
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| p.map(|p| (Parent::Node(node(p)), node(i))))
                    .collect(),
                transition,
                ..Default::default()
            }
        })
}

fn built(input: &GraphInput) -> VisitingOrderGraph {
    input.build(ChainMode::Lenient).expect("strategy yields valid graphs")
}

fn small_config() -> impl Strategy<Value = SynthConfig> {
    (1usize..4, 1usize..6, 0usize..20, 1usize..5, 1usize..6, 0.0..1.0f64, 0.0..1.0f64, 0.0..0.2f64, 0.0..0.2f64, any::<u64>())
        .prop_map(|(documents, lo, span, max_depth, max_group, root, reverse, multi, overlap, seed)| SynthConfig {
            documents,
            entities_per_document: (lo, lo + span),
            max_depth,
            max_group_size: max_group.max(4),
            root_attach_rate: root,
            reverse_rate: reverse,
            multi_visit_rate: multi,
            overlap_rate: overlap,
            seed,
            ..Default::default()
        })
        .prop_filter("feasible configs", |c| c.validate().is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn order_relation_is_antisymmetric(input in graph_strategy()) {
        let g = built(&input);
        for a in &input.nodes {
            for b in &input.nodes {
                let ab = g.order_relation(a, b).unwrap();
                prop_assert_eq!(ab, g.order_relation(b, a).unwrap().inverse());
                prop_assert_eq!(ab == OrderRelation::Same, a == b);
            }
        }
    }

    #[test]
    fn rebuilt_graphs_validate_clean(input in graph_strategy()) {
        let g = built(&input);
        let again = g.to_input();
        prop_assert!(again.validate(ChainMode::Lenient).is_empty());
        prop_assert_eq!(built(&again), g);
    }

    #[test]
    fn depth_follows_parent(input in graph_strategy()) {
        let g = built(&input);
        for n in g.nodes() {
            let expected = match g.parent(n).unwrap() {
                Parent::Root => 1,
                Parent::Node(p) => g.depth(p).unwrap() + 1,
            };
            prop_assert_eq!(g.depth(n).unwrap(), expected);
        }
    }

    #[test]
    fn irp_depth_buckets_partition_the_pairs(input in graph_strategy(), seed in any::<u64>()) {
        let g = built(&input);
        let nodes: Vec<VisitNode> = g.nodes().cloned().collect();
        let r = evaluate_irp(&g, &random_parent_baseline(&nodes, seed)).unwrap();
        let band = |k: &str, f: fn(&PairF1Report) -> usize| r.breakdowns.get(k).map_or(0, f);
        prop_assert_eq!(band(DEPTH_SHALLOW, |b| b.tp) + band(DEPTH_DEEP, |b| b.tp), r.tp);
        prop_assert_eq!(band(DEPTH_SHALLOW, |b| b.fn_) + band(DEPTH_DEEP, |b| b.fn_), r.fn_);
        let per_depth: usize = r.breakdowns.iter()
            .filter(|(k, _)| k.starts_with("depth=") && k.as_str() != DEPTH_SHALLOW)
            .map(|(_, b)| b.tp)
            .sum();
        prop_assert_eq!(per_depth, band(DEPTH_DEEP, |b| b.tp));
        prop_assert_eq!(r.tp + r.fn_, nodes.len());
    }

    #[test]
    fn argmax_ignores_monotone_transforms(scores in prop::collection::vec(-1000i32..1000, 1..20)) {
        let raw: Vec<f64> = scores.iter().map(|&s| s as f64).collect();
        let moved: Vec<f64> = raw.iter().map(|x| 3.0 * x + 7.0).collect();
        let best = argmax_first(&raw).unwrap();
        prop_assert_eq!(argmax_first(&moved), Some(best));
        prop_assert!(raw[..best].iter().all(|&x| x < raw[best]));
        prop_assert!(raw.iter().all(|&x| x <= raw[best]));
    }

    #[test]
    fn label_argmax_ignores_monotone_transforms(scores in prop::collection::vec(0u32..50, 6)) {
        let w: BTreeMap<MentionLabel, f64> = MentionLabel::ALL.iter().copied().zip(scores.iter().map(|&s| s as f64)).collect();
        let e: BTreeMap<MentionLabel, f64> = w.iter().map(|(l, x)| (*l, x * x + 1.0)).collect();
        prop_assert_eq!(argmax_label("m", &w).unwrap(), argmax_label("m", &e).unwrap());
    }

    #[test]
    fn sequence_sort_returns_a_permutation(
        matrix in (1usize..9).prop_flat_map(|n| prop::collection::vec(prop::collection::vec(-5i8..5, n), n))
    ) {
        let m: Vec<Vec<f64>> = matrix.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect();
        let mut order = sequence_sort(&m);
        order.sort_unstable();
        prop_assert_eq!(order, (0..m.len()).collect::<Vec<_>>());
    }

    #[test]
    fn mla_ignores_mention_order(
        labels in prop::collection::vec(prop::sample::select(MentionLabel::ALL), 1..10).prop_shuffle()
    ) {
        let mut sorted = labels.clone();
        sorted.sort();
        prop_assert_eq!(aggregate_mla(&labels).unwrap(), aggregate_mla(&sorted).unwrap());
    }

    #[test]
    fn pair_f1_is_symmetric(a in prop::collection::btree_set(0u8..30, 0..20), b in prop::collection::btree_set(0u8..30, 0..20)) {
        let ab = pair_f1(&a, &b);
        let ba = pair_f1(&b, &a);
        prop_assert_eq!(ab.f1, ba.f1);
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.tp + ab.fn_, a.len());
        prop_assert_eq!(ab.tp + ab.fp, b.len());
    }

    #[test]
    fn kappa_is_symmetric_and_bounded(pairs in prop::collection::vec((0u8..4, 0u8..4), 1..60)) {
        let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
        let k = cohens_kappa(&a, &b).unwrap();
        prop_assert!((k - cohens_kappa(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k));
        prop_assert_eq!(cohens_kappa(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn splits_partition_the_ids(n in 3usize..60, r in (1u32..8, 1u32..8, 1u32..8), seed in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        let ratio = SplitRatio([r.0, r.1, r.2]);
        let s = split_corpus(&ids, ratio, seed).unwrap();
        let sizes = split_sizes(n, ratio);
        prop_assert_eq!([s.train.len(), s.dev.len(), s.test.len()], sizes);
        let all: BTreeSet<&String> = s.train.iter().chain(&s.dev).chain(&s.test).collect();
        prop_assert_eq!(all.len(), n);
        prop_assert_eq!(s, split_corpus(&ids, ratio, seed).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_corpora_are_valid_and_reproducible(config in small_config()) {
        let a = generate_corpus(&config).unwrap();
        let b = generate_corpus(&config).unwrap();
        prop_assert_eq!(&a.documents, &b.documents);
        for d in &a.documents {
            prop_assert!(d.build_graph(ChainMode::Strict).is_ok(), "{} fails strict validation", d.id);
        }
        let bytes = serialize_corpus(&a.documents);
        let parsed = parse_corpus(&bytes, true).unwrap();
        prop_assert_eq!(&parsed, &a.documents);
        prop_assert_eq!(serialize_corpus(&parsed), bytes);
        prop_assert_eq!(corpus_stats(&a.documents), a.stats);
    }

    #[test]
    fn stats_are_additive(x in small_config(), y in small_config()) {
        let a = generate_corpus(&x).unwrap().documents;
        let b = generate_corpus(&y).unwrap().documents;
        let both: Vec<_> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(corpus_stats(&both), corpus_stats(&a) + corpus_stats(&b));
    }
}
