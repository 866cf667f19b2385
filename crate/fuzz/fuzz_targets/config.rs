#![no_main]

use becgate::config::Settings;
use libfuzzer_sys::fuzz_target;

// Any accepted input must dump to text that parses back to the same dump.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(settings) = Settings::parse(text) {
        let dump = settings.to_config_text();
        let again = Settings::parse(&dump).expect("resolved dump parses");
        assert_eq!(again.to_config_text(), dump);
    }
});
