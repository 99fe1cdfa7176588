#![no_main]

use contrarian::graph::{read_graph_snapshot, Partition};
use libfuzzer_sys::fuzz_target;

const GRAPH: &str = "{\"vertices\":4,\"edges\":4,\"threshold\":1}\na b 2\nb a 1\nc d 3\nb c 1\n";

fuzz_target!(|data: &[u8]| {
    let Ok(json) = std::str::from_utf8(data) else {
        return;
    };
    let (_, graph) = read_graph_snapshot(GRAPH.as_bytes()).unwrap();
    if let Ok(partition) = Partition::from_json(&graph, json) {
        let again = Partition::from_json(&graph, &partition.to_json(&graph)).unwrap();
        assert_eq!(again.side, partition.side);
    }
});
