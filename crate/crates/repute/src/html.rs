//! Main-text extraction from HTML and a coarse language guess.

use ego_tree::NodeRef;
use scraper::{ElementRef, Html, Node, Selector};

use repute_core::text::collapse_whitespace;

const SKIPPED_TAGS: &[&str] = &[
    "script", "style", "noscript", "template", "head", "nav", "header", "footer", "aside", "form", "iframe", "svg",
    "button", "select", "textarea", "canvas", "object", "embed", "menu",
];

const BLOCK_TAGS: &[&str] = &[
    "p",
    "div",
    "section",
    "article",
    "main",
    "li",
    "ul",
    "ol",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "table",
    "tr",
    "td",
    "th",
    "blockquote",
    "pre",
    "dd",
    "dt",
    "dl",
    "figure",
    "figcaption",
    "br",
    "hr",
    "body",
];

const BOILERPLATE_WORDS: &[&str] = &[
    "nav",
    "navbar",
    "navigation",
    "menu",
    "footer",
    "header",
    "sidebar",
    "breadcrumb",
    "breadcrumbs",
    "share",
    "social",
    "advert",
    "ad",
    "ads",
    "banner",
    "cookie",
    "related",
    "comment",
    "comments",
    "pagination",
    "subnav",
    "masthead",
    "widget",
    "popup",
    "modal",
];

const BOILERPLATE_ROLES: &[&str] = &["navigation", "banner", "contentinfo", "complementary", "search"];

fn is_boilerplate(el: &scraper::node::Element) -> bool {
    if SKIPPED_TAGS.contains(&el.name()) {
        return true;
    }
    if el.attr("role").is_some_and(|r| BOILERPLATE_ROLES.contains(&r.trim())) {
        return true;
    }
    if el.attr("hidden").is_some() || el.attr("aria-hidden") == Some("true") {
        return true;
    }
    ["class", "id"].iter().filter_map(|a| el.attr(a)).any(|v| {
        v.split(|c: char| c.is_whitespace() || c == '-' || c == '_')
            .any(|w| BOILERPLATE_WORDS.contains(&w.to_ascii_lowercase().as_str()))
    })
}

fn walk(node: NodeRef<'_, Node>, out: &mut String) {
    match node.value() {
        Node::Text(t) => out.push_str(t),
        Node::Element(el) => {
            if is_boilerplate(el) {
                return;
            }
            let block = BLOCK_TAGS.contains(&el.name());
            if block {
                out.push('\n');
            }
            for child in node.children() {
                walk(child, out);
            }
            if block {
                out.push('\n');
            }
        }
        Node::Document | Node::Fragment => {
            for child in node.children() {
                walk(child, out);
            }
        }
        _ => {}
    }
}

/// Replace `<` before a letter, `/`, `!` or `?` with a fullwidth `＜`, so
/// literal text can never look like markup downstream.
fn defang(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        let tag_like = c == '<' && chars.peek().is_some_and(|n| n.is_alphabetic() || matches!(n, '/' | '!' | '?'));
        out.push(if tag_like { '＜' } else { c });
    }
    out
}

/// Visible main text of a page, one block per line.
///
/// `main` or `article` content is preferred when present; scripts, styles,
/// navigation, headers, footers, sidebars and elements whose class or id
/// marks them as boilerplate are dropped.
pub fn extract_text(raw_html: &[u8]) -> String {
    let source = String::from_utf8_lossy(raw_html);
    let doc = Html::parse_document(&source);
    let mut out = String::new();
    let mut roots: Vec<ElementRef<'_>> = Vec::new();
    for sel in ["main", "article"] {
        let selector = Selector::parse(sel).expect("static selector");
        roots = doc.select(&selector).collect();
        // Keep outermost matches only.
        roots.retain(|r| !r.ancestors().any(|a| ElementRef::wrap(a).is_some_and(|e| e.value().name() == sel)));
        if !roots.is_empty() {
            break;
        }
    }
    if roots.is_empty() {
        walk(doc.tree.root(), &mut out);
    } else {
        for r in roots {
            walk(*r, &mut out);
            out.push('\n');
        }
    }
    let lines: Vec<String> = out.lines().map(collapse_whitespace).filter(|l| !l.is_empty()).collect();
    defang(&lines.join("\n"))
}

/// `ja` when kana appear and Japanese script dominates the letters, `en`
/// for mostly-ASCII letters, otherwise `und`.
pub fn detect_language(text: &str) -> &'static str {
    let (mut kana, mut han, mut latin, mut other) = (0usize, 0usize, 0usize, 0usize);
    for c in text.chars() {
        match c {
            '\u{3040}'..='\u{30ff}' | '\u{ff66}'..='\u{ff9f}' => kana += 1,
            '\u{4e00}'..='\u{9fff}' | '\u{3400}'..='\u{4dbf}' => han += 1,
            c if c.is_ascii_alphabetic() => latin += 1,
            c if c.is_alphabetic() => other += 1,
            _ => {}
        }
    }
    let letters = kana + han + latin + other;
    if letters == 0 {
        return "und";
    }
    if kana > 0 && (kana + han) * 5 >= letters {
        "ja"
    } else if latin * 2 > letters {
        "en"
    } else {
        "und"
    }
}
