#![no_main]

use libfuzzer_sys::fuzz_target;
use pairnf::frontend::{parse_program, print_program, SourceUnit};

// Accepted inputs must survive print -> parse unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(program) = parse_program(&SourceUnit::new(text, "<fuzz>")) {
        let printed = print_program(&program);
        let again = parse_program(&SourceUnit::new(&printed, "<printed>"))
            .expect("canonical form must re-parse");
        assert_eq!(program, again, "print/parse must be the identity");
    }
});
