//! Effective tensors from periodic cell problems: layered blocks against
//! their closed forms, then a channel field upscaled onto a coarse grid.

use mucor::field::{generate_channel_field, ChannelSpec, Stroke};
use mucor::grid::StructuredGrid;
use mucor::homogenize::{homogenize_block, interpolate_to_nodes, upscale, BlockKappa};

fn main() -> mucor::Result<()> {
    let n = 10;
    let layers = (0..n * n).map(|c| if c % n < n / 2 { 1.0 } else { 100.0 }).collect();
    let t = homogenize_block(0, &BlockKappa::new(n, n, layers)?)?;
    println!("layers 1|100: k11 = {:.10} (harmonic {:.10})", t.k11, 200.0 / 101.0);
    println!("              k22 = {:.10} (arithmetic 50.5)", t.k22);

    let coarse = StructuredGrid::new(4, 4)?;
    let fine = coarse.refine(8)?;
    let spec = ChannelSpec {
        background: 1.0,
        channel: 100.0,
        strokes: vec![Stroke { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0, width: 0.05 }],
        seed: 0,
        random_strokes: None,
    };
    let kappa = upscale(&fine, &generate_channel_field(&spec, &fine)?, &coarse)?;
    println!("\ndiagonal channel, 4x4 blocks of 8x8 cells:");
    for j in (0..coarse.ny()).rev() {
        let row: Vec<String> = (0..coarse.nx())
            .map(|i| {
                let k = kappa.values()[coarse.cell_index(i, j)];
                format!("{:6.2}/{:6.2}/{:+5.2}", k.k11, k.k22, k.k12)
            })
            .collect();
        println!("{}", row.join("  "));
    }
    let nodal = interpolate_to_nodes(&coarse, &kappa)?;
    println!("\nnodal k11 at the centre: {:.4}", nodal[coarse.node_index(2, 2)].k11);
    Ok(())
}
