#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(pair) = scgame::io::parse_boundary_csv(text) {
            let again = scgame::io::parse_boundary_csv(&scgame::io::boundary_csv(&pair)).expect("written CSV reparses");
            assert_eq!(again.t_nodes, pair.t_nodes);
        }
    }
});
