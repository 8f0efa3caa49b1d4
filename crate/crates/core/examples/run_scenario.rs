//! Running a built-in scenario and a modified copy of it from the library.

use shadowlab::scenario::{builtin, list_scenarios, run_scenario};

fn main() -> shadowlab::Result<()> {
    for s in list_scenarios() {
        println!("{:<26} {}", s.name, s.experiment);
    }
    let out = std::env::temp_dir().join("shadowlab-example");
    let mut cfg = builtin("translation-adversarial")?;
    let report = run_scenario(&cfg, &out)?;
    println!("{}: {} ({})", report.scenario, report.verdict.name(), report.summary);

    cfg.name = "translation-short".into();
    cfg.set_window(8)?;
    let text = serde_json::to_string_pretty(&cfg)?;
    let report = run_scenario(&shadowlab::ScenarioConfig::from_json(&text)?, &out)?;
    println!("{}: {} -> {}", report.scenario, report.verdict.name(), report.output_dir.display());
    Ok(())
}
