//! Geo-temporal event detection and summarisation for streams of geo-tagged,
//! keyword-classed short messages.
//!
//! The pipeline runs in three stages:
//!
//! 1. [`geo`] turns message coordinates into convex-hull regions (DBSCAN) and
//!    [`ingest`] parses messages, matches keyword groups and builds daily count
//!    series per `(group, region)`.
//! 2. [`surveillance`] runs EARS C2/C3 over the series, merges flagged days into
//!    alarms and keeps the ones whose robust spike score (`mu_max`) and
//!    tweet-user ratio pass the event filters.
//! 3. [`tnt`] summarises each event with discriminative terms (Fisher's exact
//!    test), news articles from a local [`newsstore`] gated by pairwise cosine
//!    coherence ([`textvec::pcss`]), and centroid-ranked top messages.
//!
//! [`eval`] holds the threshold sweeps and the seeded synthetic corpus
//! generator used by the end-to-end tests.

// `!(x >= t)` is how NaN fails range checks here.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eval;
pub mod geo;
pub mod ingest;
pub mod newsstore;
pub mod pipeline;
pub mod surveillance;
pub mod textvec;
pub mod tnt;

mod par;

pub use geo::{ClusterRegion, GeoPoint, Zone};
pub use ingest::{KeywordGroup, Message};
pub use newsstore::{NewsArticle, NewsStore};
pub use surveillance::{Alarm, Event};
pub use tnt::EventSummary;
