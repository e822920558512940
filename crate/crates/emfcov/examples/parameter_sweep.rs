//! How the Brussels coverage and mean exposure change with network density.
use emfcov::cli::{cmd_sweep, AnalyzeOptions, CurveMetric, SweepParam};
use emfcov::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::brussels();
    let opts = AnalyzeOptions { grid: Some(vec![-5.0, 0.0, 5.0, 10.0]), ..Default::default() };
    let tables = cmd_sweep(&sc, SweepParam::DensityScale, &[0.5, 1.0, 2.0], CurveMetric::SinrCcdf, &opts)?;
    for t in &tables {
        println!("{}", t.columns.join("\t"));
        for r in &t.rows {
            println!("{}", r.join("\t"));
        }
        println!();
    }
    Ok(())
}
