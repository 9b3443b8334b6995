//! The evidence file language: one statement per line.
//!
//! ```text
//! prop RAIN "rain fell overnight"
//! prop WET
//! obs RAIN : 3/10            # ten mornings, three wet lawns
//! obs WET | RAIN : 9/9
//! axiom WET -> RAIN
//! bound 0.1 <= P(WET) <= 0.8
//! query P(RAIN | WET)
//! ```
//!
//! `#` starts a comment unless it sits inside a quoted description. In an
//! `obs` head or a `query` argument, a `|` outside any parentheses splits
//! event from condition, so a disjunction in that position needs its own
//! parentheses: `query P((A | B))`. Bounds take a single unconditional
//! formula.

use evid_core::logic::{AtomRegistry, Formula};
use evid_core::parse::parse_formula;
use evid_core::KnowledgeBase;

/// A rejected evidence file, pointing at the offending spot.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct DslError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// One `query` statement, kept in file order.
#[derive(Debug, Clone)]
pub struct QuerySpec {
    pub event: Formula,
    pub condition: Option<Formula>,
    /// Canonical rendering, used verbatim in reports.
    pub text: String,
}

/// Everything a parsed evidence file contributes.
#[derive(Debug)]
pub struct EvidenceFile {
    pub kb: KnowledgeBase,
    pub queries: Vec<QuerySpec>,
}

/// Parses a whole evidence file.
pub fn parse_evidence(src: &str) -> Result<EvidenceFile, DslError> {
    let mut kb = KnowledgeBase::new();
    let mut queries = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line = Line { no: idx + 1, text: strip_comment(raw) };
        let Some((keyword, kw_off)) = line.first_token() else { continue };
        let rest_off = kw_off + keyword.len();
        match keyword {
            "prop" => parse_prop(&line, rest_off, &mut kb)?,
            "obs" => parse_obs(&line, rest_off, &mut kb)?,
            "axiom" => parse_axiom(&line, rest_off, &mut kb)?,
            "bound" => parse_bound(&line, rest_off, &mut kb)?,
            "query" => parse_query(&line, rest_off, &kb, &mut queries)?,
            other => {
                return Err(line.err(
                    kw_off,
                    format!(
                        "unknown statement `{other}`; expected prop, obs, axiom, bound, or query"
                    ),
                ))
            }
        }
    }
    Ok(EvidenceFile { kb, queries })
}

/// `P(event)` or `P(event | condition)`, parenthesizing any formula whose
/// rendering would otherwise be split at a top-level `|` when read back.
pub fn probability_text(
    event: &Formula,
    condition: Option<&Formula>,
    registry: &AtomRegistry,
) -> String {
    match condition {
        Some(c) => format!("P({} | {})", formula_text(event, registry), formula_text(c, registry)),
        None => format!("P({})", formula_text(event, registry)),
    }
}

/// Renders one formula so that it reads back as a single formula in any
/// statement position, even where a bare top-level `|` would be taken as
/// the event/condition separator.
pub fn formula_text(f: &Formula, registry: &AtomRegistry) -> String {
    let s = f.display(registry).to_string();
    if depth0_positions(&s, '|').is_empty() {
        s
    } else {
        format!("({s})")
    }
}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl Line<'_> {
    fn err(&self, byte: usize, message: impl Into<String>) -> DslError {
        let col = self.text[..byte.min(self.text.len())].chars().count() + 1;
        DslError { line: self.no, col, message: message.into() }
    }

    /// First whitespace-delimited token and its byte offset.
    fn first_token(&self) -> Option<(&str, usize)> {
        let start = self.text.len() - self.text.trim_start().len();
        let rest = &self.text[start..];
        if rest.is_empty() {
            return None;
        }
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        Some((&rest[..end], start))
    }

    /// Byte offset of the first non-whitespace at or after `from`.
    fn skip_ws(&self, from: usize) -> usize {
        let tail = &self.text[from..];
        from + (tail.len() - tail.trim_start().len())
    }

    fn formula(&self, registry: &AtomRegistry, start: usize, end: usize) -> Result<Formula, DslError> {
        parse_formula(&self.text[start..end], registry)
            .map_err(|e| self.err(start + e.offset, e.message))
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_string = !in_string,
            '#' if !in_string => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Byte offsets of `needle` at parenthesis depth zero.
fn depth0_positions(s: &str, needle: char) -> Vec<usize> {
    let mut out = Vec::new();
    let mut depth = 0i64;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == needle && depth == 0 => out.push(i),
            _ => {}
        }
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_prop(line: &Line, rest_off: usize, kb: &mut KnowledgeBase) -> Result<(), DslError> {
    let name_off = line.skip_ws(rest_off);
    let tail = &line.text[name_off..];
    let name_len = tail
        .find(|c: char| c.is_whitespace() || c == '"')
        .unwrap_or(tail.len());
    let name = &tail[..name_len];
    if !is_ident(name) {
        return Err(line.err(name_off, "expected a proposition name (letters, digits, '_')"));
    }
    let after = line.skip_ws(name_off + name_len);
    let description = if after == line.text.len() {
        None
    } else if line.text[after..].starts_with('"') {
        let inner_start = after + 1;
        let Some(close) = line.text[inner_start..].find('"') else {
            return Err(line.err(after, "unterminated description string"));
        };
        let desc = &line.text[inner_start..inner_start + close];
        let trailing = line.skip_ws(inner_start + close + 1);
        if trailing != line.text.len() {
            return Err(line.err(trailing, "unexpected input after description"));
        }
        Some(desc)
    } else {
        return Err(line.err(after, "expected a quoted description or end of line"));
    };
    kb.add_atom(name, description)
        .map(|_| ())
        .map_err(|e| line.err(name_off, e.to_string()))
}

/// Splits `event` from an optional `| condition` at parenthesis depth zero.
fn split_conditional<'a>(
    line: &Line<'a>,
    start: usize,
    end: usize,
) -> Result<((usize, usize), Option<(usize, usize)>), DslError> {
    let bars = depth0_positions(&line.text[start..end], '|');
    match bars.len() {
        0 => Ok(((start, end), None)),
        1 => {
            let b = start + bars[0];
            Ok(((start, b), Some((b + 1, end))))
        }
        _ => Err(line.err(
            start + bars[1],
            "at most one top-level '|' (event | condition); parenthesize disjunctions",
        )),
    }
}

fn parse_obs(line: &Line, rest_off: usize, kb: &mut KnowledgeBase) -> Result<(), DslError> {
    let text = line.text;
    let Some(colon) = text[rest_off..].find(':').map(|i| rest_off + i) else {
        return Err(line.err(
            text.len(),
            "expected ':' between the observed formula and its counts",
        ));
    };
    let ((e0, e1), cond_span) = split_conditional(line, rest_off, colon)?;
    let event = line.formula(kb.registry(), e0, e1)?;
    let condition = match cond_span {
        Some((c0, c1)) => Some(line.formula(kb.registry(), c0, c1)?),
        None => None,
    };

    let counts_off = colon + 1;
    let counts = &text[counts_off..];
    let parse_count = |s: &str, off: usize| -> Result<u64, DslError> {
        s.trim()
            .parse::<u64>()
            .map_err(|_| line.err(off, "expected counts as 'SUCCESSES/TRIALS'"))
    };
    let Some(slash) = counts.find('/') else {
        return Err(line.err(counts_off, "expected counts as 'SUCCESSES/TRIALS'"));
    };
    let successes = parse_count(&counts[..slash], counts_off)?;
    let trials = parse_count(&counts[slash + 1..], counts_off + slash + 1)?;
    kb.add_experiment(event, condition, successes, trials)
        .map_err(|e| line.err(counts_off, e.to_string()))
}

fn parse_axiom(line: &Line, rest_off: usize, kb: &mut KnowledgeBase) -> Result<(), DslError> {
    let start = line.skip_ws(rest_off);
    let f = line.formula(kb.registry(), start, line.text.len())?;
    kb.add_axiom(f).map_err(|e| line.err(start, e.to_string()))
}

/// Extracts the argument span of a `P( ... )` application beginning at
/// `from`; returns (inner_start, inner_end, after_paren).
fn probability_argument(
    line: &Line,
    from: usize,
) -> Result<(usize, usize, usize), DslError> {
    let p = line.skip_ws(from);
    if !line.text[p..].starts_with('P') {
        return Err(line.err(p, "expected 'P(...)'"));
    }
    let open = line.skip_ws(p + 1);
    if !line.text[open..].starts_with('(') {
        return Err(line.err(open, "expected '(' after 'P'"));
    }
    let mut depth = 0i64;
    for (i, c) in line.text[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Ok((open + 1, open + i, open + i + 1));
                }
            }
            _ => {}
        }
    }
    Err(line.err(open, "unmatched '('"))
}

fn parse_bound(line: &Line, rest_off: usize, kb: &mut KnowledgeBase) -> Result<(), DslError> {
    let text = line.text;
    let usage = "expected 'bound LO <= P(FORMULA) <= HI'";
    let lo_off = line.skip_ws(rest_off);
    let Some(le1) = text[lo_off..].find("<=").map(|i| lo_off + i) else {
        return Err(line.err(lo_off, usage));
    };
    let lo: f64 = text[lo_off..le1]
        .trim()
        .parse()
        .map_err(|_| line.err(lo_off, "expected a probability before '<='"))?;

    let (inner_start, inner_end, after) = probability_argument(line, le1 + 2)?;
    let bars = depth0_positions(&text[inner_start..inner_end], '|');
    if let Some(&b) = bars.first() {
        return Err(line.err(
            inner_start + b,
            "a bound takes one unconditional formula; parenthesize '|' if it means OR",
        ));
    }
    let f = line.formula(kb.registry(), inner_start, inner_end)?;

    let le2_off = line.skip_ws(after);
    if !text[le2_off..].starts_with("<=") {
        return Err(line.err(le2_off, usage));
    }
    let hi_off = line.skip_ws(le2_off + 2);
    let hi: f64 = text[hi_off..]
        .trim()
        .parse()
        .map_err(|_| line.err(hi_off, "expected a probability after '<='"))?;
    kb.add_interval(f, lo, hi).map_err(|e| line.err(lo_off, e.to_string()))
}

fn parse_query(
    line: &Line,
    rest_off: usize,
    kb: &KnowledgeBase,
    queries: &mut Vec<QuerySpec>,
) -> Result<(), DslError> {
    let (inner_start, inner_end, after) = probability_argument(line, rest_off)?;
    let trailing = line.skip_ws(after);
    if trailing != line.text.len() {
        return Err(line.err(trailing, "unexpected input after query"));
    }
    let ((e0, e1), cond_span) = split_conditional(line, inner_start, inner_end)?;
    let event = line.formula(kb.registry(), e0, e1)?;
    let condition = match cond_span {
        Some((c0, c1)) => Some(line.formula(kb.registry(), c0, c1)?),
        None => None,
    };
    let text = probability_text(&event, condition.as_ref(), kb.registry());
    queries.push(QuerySpec { event, condition, text });
    Ok(())
}
