//! Draw a sample from a registered model and print it as CSV.
//!
//! ```text
//! cargo run --example simulate_samples -- M5 20 7
//! ```

use transform_ident::model::{CovariateLaw, TransformationModel};

fn main() -> transform_ident::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map_or("M1", String::as_str);
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let model = TransformationModel::registered(name)?;
    let samples = model.simulate(n, seed, &CovariateLaw::on_weight(&model.default_weight()))?;
    samples.write_csv(std::io::stdout().lock())
}
