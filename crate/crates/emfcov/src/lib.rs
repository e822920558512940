pub mod bgpp;
pub mod cli;
pub mod error;
pub mod inversion;
pub mod ippp;
pub mod model;
pub mod montecarlo;
pub mod pointprocess;
pub mod quad;
pub mod scenario;
pub mod specfun;
