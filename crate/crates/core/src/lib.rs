pub mod analysis;
pub mod binary16;
pub mod exact;
pub mod fixed;
pub mod flow;
pub mod frames;
pub mod oracle;
pub mod posit;
pub mod report;
pub mod scalar;
pub mod verify;
