//! Monte Carlo check of the Paris analytics with 10^5 realizations.
use emfcov::cli::{cmd_validate, simulation_plan};
use emfcov::montecarlo::simulate;
use emfcov::scenario::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::paris();
    let (report, _) = cmd_validate(&sc, 100_000, sc.seed, 0.01)?;
    for c in &report.checks {
        println!("{:<18} analytic {:<12.5e} mc {:<12.5e} gap {:.4} (limit {})", c.name, c.analytic, c.monte_carlo, c.gap, c.limit);
    }
    println!("passed: {}", report.passed());

    // the raw simulator, conditioned on the serving distance; the CF is
    // sampled at frequencies around 1/E[I]
    let res = simulate(&simulation_plan(&sc, 20_000, 7))?;
    let near = res.conditioned(0.0, 300.0, &[1e8, 1e9])?;
    println!("\nserving BS within 300 m ({} draws)", near.retained);
    println!("  E[I] = {:.4e} ± {:.1e} W", near.mean_interference, near.std_error);
    for (q, v, se) in &near.cf {
        println!("  E[exp(jqI)] at q = {q:.0e}: {v:.4} ± {se:.1e}");
    }
    println!("illuminated links: {:.4}", res.illumination_rate());
    Ok(())
}
