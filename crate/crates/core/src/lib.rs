pub mod analysis;
pub mod channel;
pub mod cli;
pub mod ledger;
pub mod membrane;
pub mod profile;
pub mod rational;
pub mod report;
pub mod reach;
pub mod scenario;
pub mod state;
pub mod tags;
