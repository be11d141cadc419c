//! Sampling modes for the trusted data: time prefix and spatial ratio.

use mucor::grid::StructuredGrid;
use mucor::opt::{Provenance, SamplingMode, TrustedData};

fn main() -> mucor::Result<()> {
    let grid = StructuredGrid::new(10, 10)?;
    let values = (1..=10).map(|n| vec![n as f64; grid.node_count()]).collect();
    let data = TrustedData::new(&grid, 0.1, values, Provenance::default())?;
    for mode in [
        SamplingMode::Full,
        SamplingMode::TimePrefix { t_star: 0.4 },
        SamplingMode::SpatialRatio { ratio: 0.8 },
        SamplingMode::SpatialRatio { ratio: 0.6 },
    ] {
        let s = data.sample(mode, 42)?;
        println!(
            "{:<24} steps {:?}, {} observed values",
            mode.describe(),
            s.observed_steps(),
            s.observed_count()
        );
    }
    Ok(())
}
