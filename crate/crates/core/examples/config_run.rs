//! Drive a full run from a TOML configuration, as the binary does.

use transform_ident::config::RunConfig;
use transform_ident::run::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("transform-ident-example");
    let text = format!(
        r#"
mode = "oracle"
model = "M5"
output = {:?}

[grid]
points = 201
half_width = 1.0

[constraints]
kind = "two-point"
ya = -1.0
yb = 0.5
alpha_a = 0.0
alpha_b = 1.0
"#,
        out.display().to_string()
    );
    let overrides = [("reconstruction.excision".to_string(), "0.002".to_string())];
    let cfg = RunConfig::from_toml_str(&text, &overrides)?;
    let report = run(&cfg)?;
    println!("wrote {} to {}", report.files.join(", "), report.dir.display());
    print!("{}", std::fs::read_to_string(report.dir.join("metadata.toml"))?);
    Ok(())
}
