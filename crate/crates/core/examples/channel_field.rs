//! Generate a channelized permeability field and write it as CSV.
//!
//! cargo run --example channel_field -- [out.csv]

use mucor::field::{generate_channel_field, ChannelSpec, RandomStrokes, Stroke};
use mucor::grid::StructuredGrid;
use mucor::io::store_cell_field;

fn main() -> mucor::Result<()> {
    let fine = StructuredGrid::new(10, 10)?.refine(10)?;
    let spec = ChannelSpec {
        background: 1.0,
        channel: 100.0,
        strokes: vec![Stroke { x0: 0.05, y0: 0.3, x1: 0.95, y1: 0.35, width: 0.04 }],
        seed: 7,
        random_strokes: Some(RandomStrokes { count: 4, min_width: 0.01, max_width: 0.03 }),
    };
    let field = generate_channel_field(&spec, &fine)?;
    let high = field.values().iter().filter(|&&v| v == spec.channel).count();
    println!("{}x{} cells, {:.1}% channel", fine.nx(), fine.ny(), 100.0 * high as f64 / fine.cell_count() as f64);

    // coarse ASCII view, one character per 5x5 cells
    for j in (0..fine.ny()).step_by(5).rev() {
        let row: String = (0..fine.nx())
            .step_by(5)
            .map(|i| if field.values()[fine.cell_index(i, j)] > spec.background { '#' } else { '.' })
            .collect();
        println!("{row}");
    }

    if let Some(path) = std::env::args().nth(1) {
        store_cell_field(&field, path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
