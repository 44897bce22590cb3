//! Runs the acceptance battery, printing one line per criterion. Exits
//! nonzero if any criterion fails.

use std::process::ExitCode;

use digitstate::battery::{run_battery, BatteryConfig};

fn main() -> ExitCode {
    let results = run_battery(&BatteryConfig::default(), |r| println!("{}", r.line()));
    let passed = results.iter().filter(|r| r.pass).count();
    println!("acceptance: {passed} of {} criteria pass", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
