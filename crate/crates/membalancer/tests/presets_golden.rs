//! Presets are frozen: their serialized form must not drift across releases.

use membalancer::workloads::preset;
use serde_json::json;

#[test]
fn preset_serialization_matches_golden_file() {
    let current = json!({
        "case-study-trio": preset("case-study-trio").unwrap(),
        "fig1-pair": preset("fig1-pair").unwrap(),
        "idle-burst": preset("idle-burst").unwrap(),
        "quad-mix": preset("quad-mix").unwrap(),
        "homogeneous-2": preset("homogeneous-2").unwrap(),
    });
    let golden: serde_json::Value =
        serde_json::from_str(include_str!("golden/presets.json")).unwrap();
    assert_eq!(
        current, golden,
        "preset definitions changed; if intentional, regenerate tests/golden/presets.json"
    );
}

#[test]
fn presets_roundtrip_through_json() {
    for name in [
        "case-study-trio",
        "fig1-pair",
        "idle-burst",
        "quad-mix",
        "homogeneous-3",
    ] {
        for spec in preset(name).unwrap() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: membalancer::workloads::WorkloadSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }
}
