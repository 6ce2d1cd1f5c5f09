//! Writes the census clone as files: `schema.json`, `train.csv` and
//! `test.csv` under the given directory (default `data/adult-clone`).
//!
//!     cargo run -p limi --example export_adult -- data/adult-clone [seed]

use std::path::PathBuf;

use limi::datasets::adult;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/adult-clone".into()));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    std::fs::create_dir_all(&dir)?;
    let (train, test) = adult::train_test(seed)?;
    std::fs::write(dir.join("schema.json"), train.schema().to_json_string() + "\n")?;
    train.write_csv(dir.join("train.csv"))?;
    test.write_csv(dir.join("test.csv"))?;
    println!("{} training and {} test rows in {}", train.len(), test.len(), dir.display());
    Ok(())
}
