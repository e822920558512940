//! Joint law P[SINR > T, exposure <= T'] for the Brussels user at the origin,
//! next to its Fréchet bounds.
use emfcov::bgpp::frechet_bounds;
use emfcov::ippp::MvStudy;
use emfcov::model::{db_to_linear, dbm_to_watt};
use emfcov::scenario::{Scenario, ScenarioTopology};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::brussels();
    let ScenarioTopology::Ippp(model) = sc.topology else { unreachable!() };
    let st = MvStudy::new(&model, &sc.geom, &sc.radio, &sc.bf)?;
    let sigma2 = sc.noise_power();

    println!("{:>6} {:>8} {:>9} {:>9} {:>9}", "T dB", "T' dBm", "lower", "joint", "upper");
    for db in [0.0, 10.0] {
        let t = db_to_linear(db);
        let cov = st.ccdf_sinr(t, sigma2)?.value;
        for dbm in [-50.0, -40.0, -30.0] {
            let tp = dbm_to_watt(dbm);
            let (lo, hi) = frechet_bounds(cov, st.cdf_exposure(tp)?.value)?;
            let j = st.joint_cdf(t, tp, sigma2)?.value;
            println!("{db:>6.1} {dbm:>8.1} {lo:>9.5} {j:>9.5} {hi:>9.5}");
        }
    }
    Ok(())
}
