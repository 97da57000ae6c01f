pub mod rng;
pub mod scenario;
pub mod sim;
pub mod agents;
pub mod harness;
pub mod learn;
pub mod metrics;
pub mod lifelong;
pub mod topology;
pub mod workload;
pub mod world;
