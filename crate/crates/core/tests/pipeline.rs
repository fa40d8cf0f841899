use std::collections::BTreeMap;

use circlelink::egonet::{extract_all, CircleLevel, CircleParams};
use circlelink::evalstats::precision;
use circlelink::experiment::{run_experiment, ExperimentConfig, Input, Mode};
use circlelink::graph::{NodeId, NodePair};
use circlelink::similarity::{Similarity, SimilarityKind};
use circlelink::slicing::{slice, SliceSpec};
use circlelink::synth::{generate_synthetic, SyntheticSpec};
use circlelink::unsupervised::{confusion, rank_candidates};

#[test]
fn ranking_matches_full_sort_on_a_synthetic_graph() {
    let data = generate_synthetic(&SyntheticSpec { n_egos: 20, seed: 9, ..SyntheticSpec::default() }).unwrap();
    let g = data.graph().unwrap();
    let (egos, _) = extract_all(&g, &CircleParams::default());
    let ids: Vec<NodeId> = egos.keys().copied().collect();
    let snaps = data.snapshots(&g, &ids).unwrap();
    let sim = Similarity::default();
    for level in [CircleLevel::C1, CircleLevel::C3, CircleLevel::All] {
        let view = slice(&g, &egos, SliceSpec::new(level, false)).unwrap();
        for kind in SimilarityKind::ALL {
            let mut all: Vec<(NodePair, f64)> = Vec::new();
            for (a, &i) in ids.iter().enumerate() {
                for &j in &ids[a + 1..] {
                    let p = NodePair::new(i, j);
                    if !snaps.e_old().contains(&p) {
                        all.push((p, sim.score(&view, kind, i, j).unwrap()));
                    }
                }
            }
            all.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
            for k in [1, 7, 30, all.len()] {
                let ranked = rank_candidates(&view, &sim, kind, &snaps, k).unwrap();
                assert_eq!(ranked.entries, all[..k]);
            }
        }
    }
}

#[test]
fn inner_circle_beats_full_neighborhood_on_planted_data() {
    let data = generate_synthetic(&SyntheticSpec { n_egos: 100, seed: 12, ..SyntheticSpec::default() }).unwrap();
    let g = data.graph().unwrap();
    let (egos, _) = extract_all(&g, &CircleParams::default());
    let ids: Vec<NodeId> = egos.keys().copied().collect();
    let snaps = data.snapshots(&g, &ids).unwrap();
    let sim = Similarity::default();
    let k = snaps.e_new().len();
    let prec = |level| {
        let view = slice(&g, &egos, SliceSpec::new(level, false)).unwrap();
        let ranked = rank_candidates(&view, &sim, SimilarityKind::ResourceAllocation, &snaps, k).unwrap();
        precision(&confusion(&ranked, &snaps, ids.len()).unwrap()).value
    };
    let (c1, all) = (prec(CircleLevel::C1), prec(CircleLevel::All));
    assert!(c1 >= all, "RA@C1 {c1} < RA@All {all}");
}

#[test]
fn experiment_outputs_are_deterministic_and_complete() {
    let run = |dir: &std::path::Path| {
        let cfg = ExperimentConfig {
            input: Input::Synthetic(SyntheticSpec { n_egos: 40, seed: 1, ..SyntheticSpec::default() }),
            mode: Mode::Unsupervised,
            slices: vec!["C1".into(), "Active/DomainEdges".into()],
            kinds: vec![SimilarityKind::Jaccard, SimilarityKind::AdamicAdar],
            ks: vec![3, 30],
            out_dir: Some(dir.to_path_buf()),
            ..ExperimentConfig::default()
        };
        run_experiment(&cfg).unwrap();
        ["report.csv", "report.json", "manifest.json"].map(|f| std::fs::read(dir.join(f)).unwrap())
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (run(a.path()), run(b.path()));
    assert_eq!(ra[0], rb[0]);
    assert_eq!(ra[1], rb[1]);

    let rows: Vec<serde_json::Value> = serde_json::from_slice(&ra[1]).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let manifest: BTreeMap<String, serde_json::Value> = serde_json::from_slice(&ra[2]).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["rows"], 8);
}
