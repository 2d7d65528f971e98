//! File formats, the replicated experiment harness, SVG charts and the
//! command-line front end for [`pasta_core`].

pub mod cli;
pub mod harness;
pub mod io;
pub mod plot;
