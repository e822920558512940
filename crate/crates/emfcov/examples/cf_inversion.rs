//! Gil-Pelaez inversion of characteristic functions with known laws.
use emfcov::inversion::{gil_pelaez_cdf, gil_pelaez_ccdf_shifted, QuadratureConfig, WithDecay};
use num_complex::Complex64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let quad = QuadratureConfig::default();
    // Gamma(k = 2, θ = 1): φ(q) = (1 - jq)^-2
    let gamma2 = WithDecay { f: |q: f64| (Complex64::new(1.0, -q)).powi(-2), order: 2.0 };
    for x in [0.5, 1.0, 2.0, 5.0] {
        let p = gil_pelaez_cdf(&gamma2, x, &quad)?;
        let exact = 1.0 - (1.0 + x) * (-x).exp();
        println!("F({x}) = {:.10} ± {:.1e}  (exact {exact:.10})", p.value, p.error);
    }

    // P[S > t (I + σ²)] for S ~ Exp(1), I ~ Exp(2): closed form e^{-tσ²}/(1 + t/2)
    let s = |q: f64| Complex64::new(1.0, 0.0) / Complex64::new(1.0, -q);
    let i = |q: f64| Complex64::new(1.0, 0.0) / Complex64::new(1.0, -q / 2.0);
    for t in [0.1, 1.0, 3.0] {
        let p = gil_pelaez_ccdf_shifted(&s, &i, t, 0.2, &quad)?;
        println!("P[S > {t}(I + 0.2)] = {:.10}  (exact {:.10})", p.value, (-t * 0.2f64).exp() / (1.0 + t / 2.0));
    }
    Ok(())
}
