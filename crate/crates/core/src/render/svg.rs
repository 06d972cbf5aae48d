//! Minimal deterministic SVG text builder.

use std::fmt::Write;

/// Fixed four-decimal formatting with trailing zeros trimmed; `-0` prints
/// as `0`.
pub fn num(v: f64) -> String {
    fixed(v, 4)
}

pub fn fixed(v: f64, decimals: usize) -> String {
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s.remove(0);
    }
    s
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub type Attrs<'a> = &'a [(&'a str, String)];

pub struct SvgDoc {
    buf: String,
    depth: usize,
    stack: Vec<&'static str>,
}

impl SvgDoc {
    pub fn new(width: f64, height: f64, font_family: &str, font_size: f64) -> Self {
        let mut doc = SvgDoc {
            buf: String::new(),
            depth: 0,
            stack: Vec::new(),
        };
        doc.buf.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        let (w, h) = (num(width), num(height));
        doc.open(
            "svg",
            &[
                ("xmlns", "http://www.w3.org/2000/svg".into()),
                ("version", "1.1".into()),
                ("width", w.clone()),
                ("height", h.clone()),
                ("viewBox", format!("0 0 {w} {h}")),
                ("font-family", font_family.into()),
                ("font-size", num(font_size)),
            ],
        );
        doc
    }

    fn start_tag(&mut self, tag: &str, attrs: Attrs) {
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
        self.buf.push('<');
        self.buf.push_str(tag);
        for (k, v) in attrs {
            let _ = write!(self.buf, " {k}=\"{}\"", escape(v));
        }
    }

    pub fn open(&mut self, tag: &'static str, attrs: Attrs) {
        self.start_tag(tag, attrs);
        self.buf.push_str(">\n");
        self.depth += 1;
        self.stack.push(tag);
    }

    pub fn close(&mut self) {
        let tag = self.stack.pop().expect("close without open");
        self.depth -= 1;
        for _ in 0..self.depth {
            self.buf.push_str("  ");
        }
        let _ = writeln!(self.buf, "</{tag}>");
    }

    pub fn empty(&mut self, tag: &str, attrs: Attrs) {
        self.start_tag(tag, attrs);
        self.buf.push_str("/>\n");
    }

    pub fn text(&mut self, tag: &str, attrs: Attrs, content: &str) {
        self.start_tag(tag, attrs);
        let _ = writeln!(self.buf, ">{}</{tag}>", escape(content));
    }

    pub fn finish(mut self) -> String {
        while !self.stack.is_empty() {
            self.close();
        }
        self.buf
    }
}
