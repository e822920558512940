//! Fit the radial I-PPP density to a synthetic BS dataset drawn from the
//! Brussels model, then write and reload the dataset file.
use emfcov::cli::cmd_fit;
use emfcov::model::GeometryConfig;
use emfcov::montecarlo::realization_rng;
use emfcov::pointprocess::{fit_radial_density, IpppSampler};
use emfcov::scenario::{Scenario, ScenarioTopology};
use std::io::Write;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::brussels();
    let ScenarioTopology::Ippp(truth) = sc.topology else { unreachable!() };
    let center = truth.center();
    // an I-PPP sample seen from the max-density point, pooled over 30 draws
    let local = truth.recenter(center);
    let geom = GeometryConfig::new(0.0, 7000.0)?;
    let sampler = IpppSampler::new(&local, &geom);
    let draws = 30;
    let mut pts = Vec::new();
    for k in 0..draws {
        pts.extend(sampler.sample(&mut realization_rng(1, k)).points.iter().map(|p| [p[0] + center[0], p[1] + center[1]]));
    }
    println!("{} points", pts.len());

    let fit = fit_radial_density(&pts, center, 7000.0, 20)?;
    for d in [500.0, 1000.0, 3000.0, 5000.0] {
        println!("Δ = {:>4} m: fitted {:.3e}, true {:.3e} /m2", d, fit.model.density_at_delta(d) / draws as f64, truth.density_at_delta(d));
    }

    let path = std::env::temp_dir().join("emfcov_fit_example.csv");
    let mut f = std::fs::File::create(&path)?;
    writeln!(f, "unit: m")?;
    for p in &pts {
        writeln!(f, "{},{}", p[0], p[1])?;
    }
    drop(f);
    let (block, hash) = cmd_fit(path.to_str().unwrap(), center, 7000.0, 20)?;
    println!("\ndataset sha256 {hash}\n{block}");
    Ok(())
}
