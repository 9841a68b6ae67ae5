mod common;

use common::rng;
use common::synth::feature_collection;
use gridforge::ingest::{partition_features, IngestOptions, ReadDiagnostics};
use gridforge::topology::finalize::component_sizes;
use gridforge::topology::{build_topology, TopologyOptions};
use proptest::prelude::*;
use rand::seq::SliceRandom;

fn build(raw: &[gridforge::ingest::RawFeature]) -> Option<gridforge::NetworkModel> {
    let parsed = partition_features(raw, ReadDiagnostics::default(), &IngestOptions::default());
    build_topology(&parsed, &[], &TopologyOptions::default()).ok().map(|t| t.model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_networks_are_connected_with_one_slack(seed in any::<u64>()) {
        if let Some(m) = build(&feature_collection(seed)) {
            let sizes = component_sizes(&m);
            prop_assert_eq!(sizes.len(), 1);
            prop_assert_eq!(m.buses.iter().filter(|b| b.is_slack).count(), 1);
            let n = m.buses.len();
            for b in &m.branches {
                prop_assert!(b.from_bus < n && b.to_bus < n && b.from_bus != b.to_bus);
            }
            for g in &m.generators {
                prop_assert!(g.bus < n);
            }
            prop_assert!(m.buses.iter().all(|b| b.base_kv > 0.0));
        }
    }

    #[test]
    fn feature_order_does_not_change_the_model(seed in any::<u64>()) {
        let raw = feature_collection(seed);
        let mut shuffled = raw.clone();
        shuffled.shuffle(&mut rng(seed ^ 0x5eed));
        let (a, b) = (build(&raw), build(&shuffled));
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
