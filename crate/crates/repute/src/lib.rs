//! Web corpus collection, a replayable LLM gateway, report rendering and
//! pipeline orchestration around `repute-core`.

pub mod clock;
pub mod config;
pub mod fetch;
pub mod files;
pub mod gateway;
pub mod html;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod script;
pub mod search;
