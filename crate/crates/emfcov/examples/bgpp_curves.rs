//! Exposure CDF and SINR CCDF of the Paris β-GPP network, for two
//! truncation depths N.
use emfcov::bgpp::BgppStudy;
use emfcov::model::{db_to_linear, dbm_to_watt};
use emfcov::pointprocess::BetaGppModel;
use emfcov::scenario::{Scenario, ScenarioTopology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::paris();
    let ScenarioTopology::Bgpp(base) = sc.topology else { unreachable!() };
    let sigma2 = sc.noise_power();
    let study = |n| -> Result<BgppStudy, Box<dyn std::error::Error>> {
        Ok(BgppStudy::new(&BetaGppModel::new(base.lambda, base.beta, n)?, &sc.geom, &sc.radio, &sc.bf)?)
    };
    let (s10, s50) = (study(10)?, study(50)?);

    println!("{:>8} {:>10} {:>10}", "dBm", "F(N=10)", "F(N=50)");
    for dbm in [-60.0, -50.0, -45.0, -40.0, -35.0, -30.0] {
        let t = dbm_to_watt(dbm);
        println!("{dbm:>8.1} {:>10.5} {:>10.5}", s10.cdf_exposure(t)?.value, s50.cdf_exposure(t)?.value);
    }
    println!();
    println!("{:>8} {:>10} {:>10}", "dB", "P(N=10)", "P(N=50)");
    for db in [-5.0, 0.0, 5.0, 10.0, 20.0] {
        let t = db_to_linear(db);
        println!("{db:>8.1} {:>10.5} {:>10.5}", s10.ccdf_sinr(t, sigma2)?.value, s50.ccdf_sinr(t, sigma2)?.value);
    }
    Ok(())
}
