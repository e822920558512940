//! Coarse map of the mean exposure (IPD) and of P[exposure <= -35.7 dBm]
//! around the Brussels density peak.
use emfcov::ippp::{linspace, spatial_map, MapMetric};
use emfcov::model::dbm_to_watt;
use emfcov::scenario::{Scenario, ScenarioTopology};
use std::f64::consts::PI;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::brussels();
    let ScenarioTopology::Ippp(model) = sc.topology else { unreachable!() };
    let axis = linspace(-3000.0, 3000.0, 7);
    let to_ipd = sc.radio.kappa() / (4.0 * PI);

    let mean = spatial_map(MapMetric::MeanExposure, &axis, &axis, &model, &sc.geom, &sc.radio, &sc.bf)?;
    let cdf = spatial_map(MapMetric::ExposureCdf(dbm_to_watt(-35.7)), &axis, &axis, &model, &sc.geom, &sc.radio, &sc.bf)?;
    for (title, map, scale) in [("mean IPD (mW/m2)", &mean, to_ipd * 1e3), ("P[exposure <= -35.7 dBm]", &cdf, 1.0)] {
        println!("{title}");
        for iy in (0..axis.len()).rev() {
            let row: Vec<String> = (0..axis.len()).map(|ix| map.get(ix, iy).map_or("      -".into(), |v| format!("{:7.4}", v * scale))).collect();
            println!("{:>5.1} km {}", axis[iy] / 1e3, row.join(" "));
        }
        println!("average {:.4e}\n", map.average * scale);
    }
    Ok(())
}
