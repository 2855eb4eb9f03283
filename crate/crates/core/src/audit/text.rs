//! HTML to plain text.

use std::borrow::Cow;

/// Elements whose content is dropped entirely.
const SKIPPED: &[&str] = &["script", "style", "noscript", "template", "svg", "head"];

/// Elements that separate words.
const BLOCK: &[&str] = &[
    "p",
    "div",
    "br",
    "li",
    "ul",
    "ol",
    "tr",
    "td",
    "th",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "blockquote",
    "pre",
    "hr",
    "article",
    "section",
    "header",
    "footer",
    "nav",
    "main",
    "table",
    "title",
    "body",
    "html",
    "dd",
    "dt",
    "dl",
    "aside",
    "form",
    "option",
];

/// Strips markup, drops script/style bodies, decodes entities and collapses
/// whitespace. Invalid UTF-8 is replaced.
pub fn extract_text(html: &[u8]) -> String {
    let src = String::from_utf8_lossy(html);
    let stripped = strip_tags(&src);
    let decoded = html_escape::decode_html_entities(&stripped);
    collapse_whitespace(&decoded)
}

pub fn collapse_whitespace(s: &str) -> String {
    s.split(char::is_whitespace)
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn tag_name(tag: &str) -> (bool, String) {
    let (closing, rest) = match tag.strip_prefix('/') {
        Some(r) => (true, r),
        None => (false, tag),
    };
    let name = rest
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    (closing, name)
}

fn find_ignore_case(haystack: &str, needle: &str) -> Option<usize> {
    let hay = haystack.as_bytes();
    let needle = needle.as_bytes();
    hay.windows(needle.len())
        .position(|w| w.eq_ignore_ascii_case(needle))
}

fn strip_tags(src: &str) -> Cow<'_, str> {
    if !src.contains('<') {
        return Cow::Borrowed(src);
    }
    let mut out = String::with_capacity(src.len());
    let mut rest = src;
    while let Some(lt) = rest.find('<') {
        out.push_str(&rest[..lt]);
        let after = &rest[lt + 1..];
        let starts_markup = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '/' || c == '!' || c == '?');
        if !starts_markup {
            out.push('<');
            rest = after;
            continue;
        }
        if let Some(body) = after.strip_prefix("!--") {
            rest = match body.find("-->") {
                Some(end) => &body[end + 3..],
                None => "",
            };
            continue;
        }
        let Some(gt) = after.find('>') else {
            // unterminated tag swallows the remainder
            rest = "";
            break;
        };
        let tag = &after[..gt];
        rest = &after[gt + 1..];
        let (closing, name) = tag_name(tag);
        if BLOCK.contains(&name.as_str()) {
            out.push(' ');
        }
        if !closing && !tag.ends_with('/') && SKIPPED.contains(&name.as_str()) {
            let close = format!("</{name}");
            rest = match find_ignore_case(rest, &close) {
                Some(pos) => {
                    let tail = &rest[pos..];
                    tail.find('>').map_or("", |g| &tail[g + 1..])
                }
                None => "",
            };
            out.push(' ');
        }
    }
    out.push_str(rest);
    Cow::Owned(out)
}
