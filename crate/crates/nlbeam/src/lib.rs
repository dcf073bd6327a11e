pub mod elliptic;
pub mod element;
pub mod transform;
pub mod analytic;
pub mod solver;
pub mod model_io;
