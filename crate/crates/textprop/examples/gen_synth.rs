//! Generate a synthetic two-class corpus CSV for demo runs.
//!
//! ```text
//! cargo run --example gen_synth -- /tmp/synth.csv 2000 7
//! ```

use std::path::PathBuf;

use textprop::synth::{generate, write_csv, SynthConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "synth.csv".into()));
    let docs: usize = args
        .next()
        .map(|s| s.parse().expect("docs must be an integer"))
        .unwrap_or(2_000);
    let seed: u64 = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(0);

    let cfg = SynthConfig {
        docs,
        seed,
        ..Default::default()
    };
    let corpus = generate(&cfg);
    write_csv(&corpus, &path).expect("writing csv");
    println!("wrote {} documents to {}", corpus.len(), path.display());
}
