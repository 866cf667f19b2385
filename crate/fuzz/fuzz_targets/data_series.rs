#![no_main]

use becgate::fit::DataSeries;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(series) = DataSeries::from_csv(text) {
        let again = DataSeries::from_csv(&series.to_csv()).expect("written CSV parses");
        assert_eq!(again, series);
    }
});
