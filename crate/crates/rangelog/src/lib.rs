//! Datalog micro-engine built around automatic index selection: rules compile
//! to range nested-loop joins, and each relation gets a provably minimal set of
//! lexicographic indexes answering every lookup pattern the rules perform.

pub mod engine;
pub mod matching;
pub mod mosp;
pub mod parser;
pub mod report;
pub mod search;
pub mod storage;
pub mod verify;
