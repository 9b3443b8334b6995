//! Report rendering. One `Report` value feeds both the text and the JSON
//! emitters, so the two views can never drift apart.

use std::io::{self, Write};

use serde::Serialize;

/// Everything a run wants to say. Error runs carry only `status`,
/// `message`, and an empty query list.
#[derive(Debug, Serialize)]
pub struct Report {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stationarity_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nullspace_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jdv: Option<Vec<WorldProb>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nullspace: Option<Vec<Vec<f64>>>,
    pub queries: Vec<QueryRow>,
}

/// One world of the maximum-likelihood joint distribution.
#[derive(Debug, Serialize)]
pub struct WorldProb {
    pub world: String,
    pub p: f64,
}

impl WorldProb {
    pub fn new(world: String, p: f64) -> WorldProb {
        WorldProb { world, p: clean(p) }
    }
}

/// One answered (or refused) query.
#[derive(Debug, Serialize)]
pub struct QueryRow {
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl QueryRow {
    pub fn answer(text: String, lo: f64, hi: f64, degenerate: bool) -> QueryRow {
        QueryRow {
            text,
            lo: Some(clean(lo)),
            hi: Some(clean(hi)),
            degenerate: Some(degenerate),
            error: None,
        }
    }

    pub fn failure(text: String, reason: String) -> QueryRow {
        QueryRow { text, lo: None, hi: None, degenerate: None, error: Some(reason) }
    }
}

impl Report {
    pub fn error(status: &str, message: impl Into<String>) -> Report {
        Report {
            status: status.to_string(),
            message: Some(message.into()),
            log_likelihood: None,
            iterations: None,
            stationarity_gap: None,
            nullspace_dim: None,
            jdv: None,
            nullspace: None,
            queries: Vec::new(),
        }
    }

    pub fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut *out, self)?;
        writeln!(out)
    }

    pub fn write_text(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "status: {}", self.status)?;
        if let Some(m) = &self.message {
            writeln!(out, "error: {m}")?;
        }
        if let Some(v) = self.log_likelihood {
            writeln!(out, "log-likelihood: {v:.6}")?;
        }
        if let Some(n) = self.iterations {
            writeln!(out, "iterations: {n}")?;
        }
        if let Some(g) = self.stationarity_gap {
            writeln!(out, "stationarity gap: {g:.3e}")?;
        }
        if let Some(d) = self.nullspace_dim {
            writeln!(out, "null space dimension: {d}")?;
        }
        if let Some(jdv) = &self.jdv {
            writeln!(out, "joint distribution:")?;
            let pad = jdv.iter().map(|w| w.world.chars().count()).max().unwrap_or(0);
            for w in jdv {
                writeln!(out, "  {:pad$}  {:.6}", w.world, clean(w.p))?;
            }
        }
        if let Some(basis) = &self.nullspace {
            writeln!(out, "null space basis:")?;
            for v in basis {
                let parts: Vec<String> = v.iter().map(|&x| format!("{:.6}", clean(x))).collect();
                writeln!(out, "  [{}]", parts.join(", "))?;
            }
        }
        for q in &self.queries {
            match (&q.error, q.lo, q.hi) {
                (Some(e), _, _) => writeln!(out, "{}: {e}", q.text)?,
                (None, Some(lo), Some(hi)) if q.degenerate == Some(true) => {
                    writeln!(out, "{} = {:.3}", q.text, clean(0.5 * (lo + hi)))?
                }
                (None, Some(lo), Some(hi)) => {
                    writeln!(out, "{} = {:.3} : {:.3}", q.text, clean(lo), clean(hi))?
                }
                _ => writeln!(out, "{}: no answer", q.text)?,
            }
        }
        Ok(())
    }
}

/// Keeps `-0.0` (and sub-resolution negatives from LP round-off) from
/// leaking into output.
pub fn clean(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}
