pub mod cli;
pub mod geom;
pub mod graspdb;
pub mod motion;
pub mod planner;
pub mod regrasp;
pub mod replay;
pub mod rng;
pub mod robot;
pub mod scene;
pub mod suction;
pub mod trajectory;
pub mod world;
