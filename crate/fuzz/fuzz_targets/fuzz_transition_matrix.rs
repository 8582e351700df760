#![no_main]

use libfuzzer_sys::fuzz_target;
use lyapspec::config::parse_transition_matrix;
use lyapspec::symbolic::Language;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    match parse_transition_matrix(text) {
        Ok(m) => {
            assert!(m.primitivity_exponent().is_some());
            let lang = Language::new(m);
            assert!(lang.count_words(3) > 0);
        }
        Err(e) => assert_eq!(e.exit_code(), 2),
    }
});
