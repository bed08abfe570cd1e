//! Parses a configuration from text, echoes it with defaults filled in and
//! runs the `effective` subcommand into a temporary directory.

use std::path::Path;

use thermohom::cli::{dispatch, Command};
use thermohom::config::RunConfig;

const TEXT: &str = r#"
[geometry]
radius = 0.2
cell_resolution = 12

[transformation]
family = "radial_growth"
rate = 0.15

[effective]
times = [0.0, 0.25, 0.5]
points_per_axis = 2
"#;

fn main() -> thermohom::Result<()> {
    let cfg = RunConfig::from_toml(TEXT, Path::new("."))?;
    println!("# echo (hash {})\n{}", cfg.hash(), cfg.to_toml());
    if let Err(e) = RunConfig::from_toml("[geometry]\nradious = 0.2\n", Path::new(".")) {
        println!("rejected: {e}");
    }
    let dir = std::env::temp_dir().join("thermohom-run-config");
    let out = dispatch(Command::Effective, &cfg, &dir)?;
    println!("{}", out.summary);
    for a in &out.artifacts {
        println!("wrote {}", dir.join(a).display());
    }
    Ok(())
}
