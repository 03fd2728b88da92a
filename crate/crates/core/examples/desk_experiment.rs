//! Runs the desk-scale distillation protocol on a synthetic corpus, or on
//! `<dir>/train.csv` and `<dir>/test.csv` when a directory is given.

use std::path::PathBuf;
use std::time::Instant;

use blendcnn_core::experiment::{run_desk_experiment, DeskConfig};
use blendcnn_core::synth::{write_synthetic_corpus, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let start = Instant::now();
    let (train, test, _guard) = match std::env::args().nth(1) {
        Some(dir) => {
            let dir = PathBuf::from(dir);
            (dir.join("train.csv"), dir.join("test.csv"), None)
        }
        None => {
            let dir = tempfile::tempdir()?;
            let (train, test) = write_synthetic_corpus(dir.path(), &SynthConfig::default())?;
            (train, test, Some(dir))
        }
    };
    let outcome = run_desk_experiment(&train, &test, &DeskConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
