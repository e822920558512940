//! The special-function kernel at a few representative arguments.
use emfcov::specfun::*;
use num_complex::Complex64;

fn main() -> Result<(), SpecError> {
    let z = Complex64::new(2.0, -1.5);
    println!("γ(2, {z}) = {}", lower_incomplete_gamma(2, z)?);
    println!("Γ(2, {z}) = {}", upper_incomplete_gamma(2, z)?);
    for m in [-0.5, -10.0, -1e4] {
        println!("K({m}) = {:.12}  E({m}) = {:.12}", elliptic_k(m)?, elliptic_e(m)?);
    }
    for x in [0.5, 0.95, 5.0, 500.0] {
        let z = Complex64::new(0.0, x);
        println!("2F1(1, -0.625; 0.375; {x}j) = {:.10}  [{:?}]", gauss_2f1_imag(1.0, -0.625, 0.375, z)?, hyp_branch(z));
    }
    for x in [0.0, 1.0, 50.0, 700.0, 1e6] {
        println!("e^-x I0({x}) = {:.12e}", bessel_i0_scaled(x));
    }
    println!("(1-2j)^0.5 = {}", complex_pow_principal(Complex64::new(1.0, -2.0), 0.5)?);
    Ok(())
}
