use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;
use crate::label::GoodEvilLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    PriorStudy,
    ScandalJapanese,
    ScandalForeign,
    Other,
}

/// Year (and month when known) a scandal became public.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ScandalDate {
    pub year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub month: Option<u8>,
}

impl ScandalDate {
    /// True when the date is strictly later than the month `(year, month)`.
    /// A bare year equal to the cutoff year is not considered later.
    pub fn is_after(&self, cutoff_year: i32, cutoff_month: u8) -> bool {
        match self.year.cmp(&cutoff_year) {
            core::cmp::Ordering::Greater => true,
            core::cmp::Ordering::Less => false,
            core::cmp::Ordering::Equal => self.month.is_some_and(|m| m > cutoff_month),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CelebrityProfile {
    pub canonical_name: String,
    pub query_aliases: Vec<String>,
    pub cohort: Cohort,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scandal_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scandal_month: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_label: Option<GoodEvilLabel>,
}

impl CelebrityProfile {
    pub fn new(canonical_name: impl Into<String>, cohort: Cohort) -> Self {
        let name = canonical_name.into();
        Self {
            query_aliases: alloc::vec![name.clone()],
            canonical_name: name,
            cohort,
            scandal_year: None,
            scandal_month: None,
            reference_label: None,
        }
    }

    pub fn with_alias(mut self, alias: impl Into<String>) -> Self {
        let alias = alias.into();
        if !self.query_aliases.contains(&alias) {
            self.query_aliases.push(alias);
        }
        self
    }

    pub fn with_scandal(mut self, year: i32, month: Option<u8>) -> Self {
        self.scandal_year = Some(year);
        self.scandal_month = month;
        self
    }

    pub fn scandal_date(&self) -> Option<ScandalDate> {
        self.scandal_year.map(|year| ScandalDate { year, month: self.scandal_month })
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.query_aliases.is_empty() {
            return Err(ProfileError::NoAliases(self.canonical_name.clone()));
        }
        if !self.query_aliases.contains(&self.canonical_name) {
            return Err(ProfileError::CanonicalNotAlias(self.canonical_name.clone()));
        }
        if matches!(self.cohort, Cohort::ScandalJapanese | Cohort::ScandalForeign) && self.scandal_year.is_none() {
            return Err(ProfileError::MissingScandalYear(self.canonical_name.clone()));
        }
        Ok(())
    }
}
