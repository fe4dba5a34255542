//! Generate, split, save and reload both datasets.
use qfmap::dataset::{make_adhoc, make_moons, AdhocOracle, Dataset};

fn main() -> qfmap::Result<()> {
    let moons = make_moons(140, 0.1, 0)?.split(100.0 / 140.0, 0)?;
    let adhoc = make_adhoc(140, 0.3, 0)?.split(100.0 / 140.0, 0)?;
    for (name, d) in [("moons", &moons), ("adhoc", &adhoc)] {
        let pos = d.labels().iter().filter(|&&y| y > 0.0).count();
        println!(
            "{name}: {} samples, {} features, {} positive, train {} / test {}",
            d.len(),
            d.dim(),
            pos,
            d.train_indices().len(),
            d.test_indices().len()
        );
    }

    let oracle = AdhocOracle::new(0);
    let margins: Vec<f64> = adhoc
        .features()
        .iter()
        .map(|x| oracle.margin(x))
        .collect::<qfmap::Result<_>>()?;
    let min = margins.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    println!("smallest ad hoc |margin| {min:.3}");

    let path = std::env::temp_dir().join("qfmap_moons.csv");
    moons.save_csv(&path)?;
    let back = Dataset::load_csv(&path)?;
    println!("round trip through {}: {} rows", path.display(), back.len());
    Ok(())
}
