//! Writes the demo corpus into a directory so the full pipeline can be
//! driven by hand:
//!
//! ```text
//! cargo run -p photostyle-cli --example gen_fixture -- demo
//! cd demo && photostyle ingest && photostyle finetune && ...
//! ```

use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "demo".into()));
    let seed = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(7);
    match photostyle_cli::fixture::generate(&dir, seed) {
        Ok(summary) => {
            println!(
                "wrote {} legislators, {} photos, {} training crops, {} responses to {}",
                summary.legislators,
                summary.photos,
                summary.train_images,
                summary.responses,
                dir.display()
            );
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}
