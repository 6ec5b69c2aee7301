//! Shared plumbing for the line-oriented text formats: comment stripping,
//! tokenizing with column positions, `[section]` grouping, and the diagnostic
//! type every parser reports.

/// Parse failure with the 1-based position of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub(crate) fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, column, message: message.into() })
}

/// Tokens of one line with their 1-based starting columns. The line must
/// already be comment-stripped.
pub(crate) fn split_tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

/// Meaningful lines of a document: comments (`#` to end of line) stripped,
/// blank lines dropped, original 1-based line numbers kept.
pub(crate) fn meaningful_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let cut = raw.split('#').next().unwrap_or("");
            let trimmed = cut.trim_end();
            if trimmed.trim().is_empty() {
                None
            } else {
                Some((i + 1, trimmed))
            }
        })
        .collect()
}

/// Group meaningful lines into named `[section]` blocks after `skip` leading
/// lines, preserving file order.
pub(crate) fn split_sections<'a>(
    lines: &[(usize, &'a str)],
    skip: usize,
) -> Result<Vec<(usize, String, Vec<(usize, &'a str)>)>, ParseError> {
    let mut sections: Vec<(usize, String, Vec<(usize, &'a str)>)> = Vec::new();
    for &(line_no, line) in &lines[skip.min(lines.len())..] {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            if !trimmed.ends_with(']') {
                return err(line_no, 1, "unterminated section header");
            }
            let name = &trimmed[1..trimmed.len() - 1];
            if name.is_empty() {
                return err(line_no, 1, "empty section name");
            }
            sections.push((line_no, name.to_string(), Vec::new()));
        } else {
            match sections.last_mut() {
                Some((_, _, body)) => body.push((line_no, line)),
                None => return err(line_no, 1, format!("expected a [section] header, found `{trimmed}`")),
            }
        }
    }
    Ok(sections)
}
