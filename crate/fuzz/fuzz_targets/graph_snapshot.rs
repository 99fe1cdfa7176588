#![no_main]

use contrarian::graph::{read_graph_snapshot, write_graph_snapshot};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok((header, graph)) = read_graph_snapshot(data) else {
        return;
    };
    let mut out = Vec::new();
    write_graph_snapshot(&graph, header.seed, &mut out).unwrap();
    let (again_header, again) = read_graph_snapshot(out.as_slice()).unwrap();
    assert_eq!(again_header, header);
    assert_eq!(again, graph);
});
