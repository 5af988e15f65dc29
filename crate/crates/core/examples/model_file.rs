//! Classifies a JSON model description and prints the same report the
//! `regime classify` command writes.
//!
//! cargo run --example model_file [path/to/model.json]

use regime_switch::analysis::{analyze, AnalysisOptions, CriterionChoice};
use regime_switch::model::{load_model, parse_model};
use regime_switch::report::Report;

const BUILTIN: &str = r#"{
  "regimes": 2,
  "q": {"matrix": [[-1, 1], [2, -2]]},
  "drift": {"kind": "ou", "b": [-2, 1]}
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (name, model) = match std::env::args().nth(1) {
        Some(path) => (path.clone(), load_model(path.as_ref())?),
        None => ("builtin".to_string(), parse_model(BUILTIN)?),
    };
    let analysis = analyze(&model, CriterionChoice::Auto, AnalysisOptions::default())?;
    let report = Report::classification(&name, &analysis);
    print!("{}", report.to_text());
    println!("--- json ---");
    print!("{}", report.to_json());
    Ok(())
}
