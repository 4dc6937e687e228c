//! Draw unconditional gramophone-noise revolutions from the example model.
//!
//! ```bash
//! cargo run --release --example unconditional
//! ```

mod common;

use gramonoise::dataset::write_wav;
use gramonoise::sampler::{sample_unconditional, SamplerRun};

fn main() -> gramonoise::Result<()> {
    let model = common::example_model(2000);
    let out_dir = common::output_dir();
    for seed in 0..4u64 {
        let run = SamplerRun::unconditional(150, seed);
        let frame = sample_unconditional(&model, &run)?;
        let path = out_dir.join(format!("unconditional_{seed}.wav"));
        write_wav(&path, &frame, common::FS)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
