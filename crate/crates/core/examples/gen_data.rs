//! Regenerates the bundled synthetic markets under `data/`.
//!
//! ```text
//! cargo run -p qubo-portfolio --example gen_data
//! ```

use std::fs::{self, File};
use std::path::Path;

use qubo_portfolio::synthetic::{simulate_market, write_rates_csv, write_series_csv};

fn write(dir: &Path, assets: usize, seed: u64) -> qubo_portfolio::Result<()> {
    fs::create_dir_all(dir).expect("create data dir");
    let m = simulate_market(assets, 254, seed);
    let open = |name: &str| File::create(dir.join(name)).expect("create data file");
    write_series_csv(open("prices.csv"), &m.prices)?;
    write_series_csv(open("indices.csv"), &m.indices)?;
    write_rates_csv(open("riskfree.csv"), &m.dates, &m.risk_free)
}

fn main() -> qubo_portfolio::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    write(&root.join("market12"), 12, 2024)?;
    write(&root.join("market10"), 10, 1010)?;
    Ok(())
}
