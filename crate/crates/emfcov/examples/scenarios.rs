//! Loading the bundled presets and a custom scenario, and converting between
//! exposure units.
use emfcov::model::ExposureValue;
use emfcov::scenario::{Scenario, ScenarioTopology, BRUSSELS_PRESET};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for sc in [Scenario::paris(), Scenario::brussels()] {
        println!("{} (sha256 {}…)", sc.name, &sc.hash[..12]);
        println!("  f = {} Hz, noise {:.2} dBm, kappa {:.3}", sc.radio.f, emfcov::model::watt_to_dbm(sc.noise_power()), sc.radio.kappa());
        match sc.topology {
            ScenarioTopology::Bgpp(m) => println!("  β-GPP λ = {:.3e} /m2, β = {}, N = {}", m.lambda, m.beta, m.n_trunc),
            ScenarioTopology::Ippp(m) => println!("  I-PPP density {:.3e} /m2 at 1 km from the peak {:?} m", m.density_at_delta(1000.0), m.center()),
        }
    }

    // a variant: Brussels with beamforming and a 4 km radius
    let text = BRUSSELS_PRESET
        .replace("enabled = false", "enabled = true\nomega = \"0.2 rad\"")
        .replace("outer_radius = \"7 km\"", "outer_radius = \"4 km\"");
    let sc = Scenario::parse(&text)?;
    println!("variant: tau = {} m, beamforming {:?}", sc.geom.tau, sc.bf);

    let radio = Scenario::paris().radio;
    for dbm in [-40.0, -6.36] {
        let e = ExposureValue::from_dbm(dbm, &radio)?;
        println!("{dbm} dBm = {:.4e} W/m2 = {:.3} V/m", e.ipd, e.field);
    }
    Ok(())
}
