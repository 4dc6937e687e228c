//! Train the small example model on a self-generated hiss+clicks corpus
//! and cache the checkpoint for the other examples.
//!
//! ```bash
//! cargo run --release --example train_desk
//! ```

mod common;

fn main() {
    let model = common::example_model(2000);
    println!(
        "model ready: frame {} samples, EMA weights selected: {}",
        model.net.config.sample_count, model.use_ema
    );
    println!("checkpoint cached at examples_output/desk.ckpt");
}
