//! Loads a scenario (a bundled one, or the file named on the command line),
//! runs it and prints the report as a table and as canonical JSON.

use qframes::scenario::{corpus, load_scenario, Format, RunOptions, Scenario};

fn main() {
    let scenario = match std::env::args().nth(1) {
        Some(path) => load_scenario(path),
        None => Scenario::from_str(corpus::text("z2_flip.json").expect("bundled")),
    };
    let scenario = match scenario {
        Ok(s) => s,
        Err(e) => {
            eprintln!("load error: {e}");
            std::process::exit(2);
        }
    };
    let report = scenario.run(&RunOptions::default());
    print!("{}", String::from_utf8_lossy(&report.emit(Format::Text)));
    println!("{}", String::from_utf8_lossy(&report.emit(Format::Json)));
}
