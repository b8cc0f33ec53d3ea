pub mod config;
pub mod env;
pub mod episode;
pub mod geom;
pub mod harness;
pub mod humans;
pub mod nav;
pub mod rng;
pub mod server;
pub mod world;
