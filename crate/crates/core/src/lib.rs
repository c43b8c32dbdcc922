pub mod bench;
pub mod chain;
pub mod gateway;
pub mod logic;
pub mod retrieval;
pub mod sanitize;
pub mod soft;
pub mod solver;
