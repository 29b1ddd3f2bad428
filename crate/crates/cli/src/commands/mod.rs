pub mod asymptotics;
pub mod fig2;
pub mod k0;
pub mod optimize;
pub mod predict;
pub mod selftest;
pub mod simulate;
