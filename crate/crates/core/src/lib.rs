pub mod bench;
pub mod boosting;
pub mod cli;
pub mod data;
pub mod learners;
pub mod linalg;
pub mod model;
pub mod randomness;
