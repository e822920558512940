//! Exposure percentiles for Brussels users at a few locations. The I-PPP
//! density is recentered on each user.
use emfcov::ippp::MvStudy;
use emfcov::model::dbm_to_watt;
use emfcov::scenario::{Scenario, ScenarioTopology};

fn percentile(st: &MvStudy, p: f64) -> Result<f64, Box<dyn std::error::Error>> {
    let (mut lo, mut hi) = (-90.0, 10.0);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if st.cdf_exposure(dbm_to_watt(mid))?.value < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::brussels();
    let ScenarioTopology::Ippp(model) = sc.topology else { unreachable!() };
    println!("{:>14} {:>9} {:>9} {:>9}", "user (km)", "p50 dBm", "p95 dBm", "mean dBm");
    for (x, y) in [(0.0, 0.0), (-0.145, -0.569), (1.5, 1.5), (-3.0, -3.0)] {
        let st = MvStudy::new(&model.recenter([x * 1e3, y * 1e3]), &sc.geom, &sc.radio, &sc.bf)?;
        let mean = emfcov::model::watt_to_dbm(st.mean_exposure());
        println!("{:>14} {:>9.2} {:>9.2} {mean:>9.2}", format!("({x}, {y})"), percentile(&st, 0.5)?, percentile(&st, 0.95)?);
    }
    Ok(())
}
