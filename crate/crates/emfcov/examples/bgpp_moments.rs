//! Mean and variance of the exposure for the Paris β-GPP preset.
use emfcov::bgpp::BgppStudy;
use emfcov::model::{dbm_to_watt, BeamformingConfig, GeometryConfig, RadioConfig};
use emfcov::pointprocess::BetaGppModel;
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let radio = RadioConfig::new(2132.7e6, 14.8e6, dbm_to_watt(66.0), 33.0, 3.2, 1, 6.0)?;
    let geom = GeometryConfig::new(0.0, 6000.0)?;
    let bf = BeamformingConfig::directional(0.0982)?;
    let model = BetaGppModel::new(6.17e-6, 0.75, 50)?;
    let t0 = Instant::now();
    let st = BgppStudy::new(&model, &geom, &radio, &bf)?;
    let to_ipd = radio.kappa() / (4.0 * std::f64::consts::PI);
    let mean = st.mean_exposure();
    let var = st.variance_exposure();
    println!("mean  {:.4e} W/m^2", mean * to_ipd);
    println!("var   {:.4e} W^2/m^4", var * to_ipd * to_ipd);
    println!("no BF {:.4e} W/m^2", st.mean_exposure_nobf() * to_ipd);
    println!("nobf var {:.4e}", (st.second_moment_nobf() - st.mean_exposure_nobf().powi(2)) * to_ipd * to_ipd);
    println!("({:.2} s)", t0.elapsed().as_secs_f64());
    let t1 = Instant::now();
    for dbm in [-50.0, -45.0, -40.0, -35.0] {
        let p = st.cdf_exposure(dbm_to_watt(dbm))?;
        println!("F_emf({dbm} dBm) = {:.5} ± {:.1e}", p.value, p.error);
    }
    println!("({:.2} s)", t1.elapsed().as_secs_f64());
    let t2 = Instant::now();
    for db in [-5.0, 0.0, 5.0, 10.0] {
        let p = st.ccdf_sinr(10f64.powf(db / 10.0), radio.noise_power())?;
        println!("P[SINR > {db} dB] = {:.5} ± {:.1e}", p.value, p.error);
    }
    println!("({:.2} s)", t2.elapsed().as_secs_f64());
    Ok(())
}
