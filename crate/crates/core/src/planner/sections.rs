use std::collections::BTreeMap;

use super::BackendError;

/// Split a reply on `##Name##:` headers. Bodies are trimmed; a body that is
/// exactly `null` (any case) becomes `None`; fenced code inside a body is
/// reduced to the fenced payload. Every name in `required` must be present.
pub fn parse_sectioned_response(
    text: &str,
    required: &[&str],
) -> Result<BTreeMap<String, Option<String>>, BackendError> {
    let mut sections: BTreeMap<String, Option<String>> = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    let finish = |cur: Option<(String, String)>, sections: &mut BTreeMap<String, Option<String>>| {
        if let Some((name, body)) = cur {
            sections.insert(name, normalize_body(&body));
        }
    };
    for line in text.lines() {
        if let Some((name, rest)) = header(line) {
            finish(current.take(), &mut sections);
            current = Some((name, rest.to_string()));
        } else if let Some((_, body)) = current.as_mut() {
            body.push('\n');
            body.push_str(line);
        }
    }
    finish(current, &mut sections);
    for name in required {
        if !sections.contains_key(*name) {
            return Err(BackendError::MissingSection(name.to_string()));
        }
    }
    Ok(sections)
}

fn header(line: &str) -> Option<(String, &str)> {
    let rest = line.trim_start().strip_prefix("##")?;
    let end = rest.find("##")?;
    let name = rest[..end].trim();
    if name.is_empty() {
        return None;
    }
    let after = rest[end + 2..].trim_start();
    let after = after.strip_prefix(':').unwrap_or(after);
    Some((name.to_string(), after))
}

fn normalize_body(body: &str) -> Option<String> {
    let trimmed = body.trim();
    let payload = fenced_payload(trimmed).unwrap_or(trimmed);
    let payload = payload.trim();
    if payload.eq_ignore_ascii_case("null") || payload.trim_matches(|c| c == '\'' || c == '"').eq_ignore_ascii_case("null") {
        None
    } else {
        Some(payload.to_string())
    }
}

/// Content of the first ``` fence, without the language tag.
fn fenced_payload(body: &str) -> Option<&str> {
    let start = body.find("```")?;
    let after = &body[start + 3..];
    let newline = after.find('\n')?;
    let inner = &after[newline + 1..];
    let end = inner.find("```").unwrap_or(inner.len());
    Some(&inner[..end])
}
