//! Regenerates `data/friedman1.csv` (1000 rows, noise sd 1, seed 42).

fn main() -> Result<(), rpdp_core::Error> {
    let ds = rpdp_core::synthetic::friedman1(1000, 1.0, 42);
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/friedman1.csv");
    rpdp_core::data::save_csv(&ds, path)?;
    println!("wrote {path}");
    Ok(())
}
