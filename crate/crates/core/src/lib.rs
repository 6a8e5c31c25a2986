pub mod specfun;
pub mod geometry;
pub mod farfield;
pub mod forward;
pub mod oracle;
pub mod imaging;
pub mod verify;
pub mod config;
pub mod cli;
