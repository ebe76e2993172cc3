//! The `.eos` text format.
//!
//! ```text
//! # comments run to the end of the line
//! objectnet N1
//!   place a1
//!   place b1
//!   trans t1 pre a1 post b1
//!   label t1 x            # optional channel
//! end
//! systemnet sys
//!   place p1
//!   place p2
//!   trans t pre p1 post p2
//!   type p1 N1            # untyped places hold black tokens (`dot` or `•`)
//!   type p2 N1
//!   label t N1:x          # optional channel demand
//! end
//! events explicit
//!   event t { N1: t1 }
//!   event id@p1 { N1: t1 }
//! end
//! initial p1[a1 + b1] + 2'p2[]
//! ```
//!
//! Instead of an explicit block, `events from-labels max_sync=<k>` generates the
//! events from the channel labels. Object nets precede the system net, and every
//! name must be declared before it is used. Declaration order fixes all node orders.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::eos::{
    events_from_labels, Eos, EosEvent, Labels, NestedMarking, NetId, SysTrans, Token, BLACK,
    DEFAULT_LABEL_CAP,
};
use crate::multiset::Multiset;
use crate::ptnet::{NetError, PtMarking, PtNet};

/// 1-based line and column (in characters).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum DiagnosticKind {
    Syntax,
    MalformedMultiset,
    UnknownId,
    Duplicate,
    TypeMismatch,
    Invalid,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Syntax => "syntax error",
            DiagnosticKind::MalformedMultiset => "malformed multiset",
            DiagnosticKind::UnknownId => "unknown identifier",
            DiagnosticKind::Duplicate => "duplicate declaration",
            DiagnosticKind::TypeMismatch => "type mismatch",
            DiagnosticKind::Invalid => "invalid model",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub span: Span,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.span, self.kind, self.message)
    }
}

/// All diagnostics of a failed parse, in source order.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError(pub Vec<Diagnostic>);

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// How the events of a document were given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventSource {
    Explicit,
    FromLabels { max_sync: u32 },
}

/// Keys of the span map.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpanKey {
    Net(NetId),
    System,
    /// A place or transition; `None` is the system net.
    Node(Option<NetId>, String),
    /// The `type` line of a system place.
    Typing(String),
    /// Index into `eos.events()`.
    Event(usize),
    Events,
    Initial,
}

#[derive(Clone, Debug)]
pub struct ModelDocument {
    pub source: String,
    pub eos: Eos,
    pub initial: NestedMarking,
    pub events: EventSource,
    pub spans: BTreeMap<SpanKey, Span>,
}

impl ModelDocument {
    pub fn render(&self) -> String {
        render(&self.eos, &self.initial, self.events)
    }

    pub fn span(&self, key: &SpanKey) -> Option<Span> {
        self.spans.get(key).copied()
    }
}

fn diag(span: Span, kind: DiagnosticKind, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        span,
        kind,
        message: message.into(),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '•'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '•')
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn new(text: &str, line: usize) -> Self {
        let code = text.split('#').next().unwrap_or("");
        Cursor {
            chars: code.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn span(&self) -> Span {
        Span {
            line: self.line,
            col: self.pos + 1,
        }
    }

    fn ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.chars.get(self.pos).copied()
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), Diagnostic> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn unexpected(&mut self, what: &str) -> Diagnostic {
        let span = {
            self.ws();
            self.span()
        };
        match self.chars.get(self.pos) {
            Some(c) => diag(
                span,
                DiagnosticKind::Syntax,
                format!("expected {what}, found `{c}`"),
            ),
            None => diag(
                span,
                DiagnosticKind::Syntax,
                format!("expected {what}, found end of line"),
            ),
        }
    }

    fn peek_word(&mut self) -> Option<String> {
        self.ws();
        let start = self.pos;
        let first = *self.chars.get(start)?;
        if !is_ident_start(first) {
            return None;
        }
        let end = (start..self.chars.len())
            .find(|&i| !is_ident_char(self.chars[i]))
            .unwrap_or(self.chars.len());
        Some(self.chars[start..end].iter().collect())
    }

    fn ident(&mut self) -> Option<(String, Span)> {
        let w = self.peek_word()?;
        let span = self.span();
        self.pos += w.chars().count();
        Some((w, span))
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Span), Diagnostic> {
        match self.ident() {
            Some(x) => Ok(x),
            None => Err(self.unexpected(what)),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Span, Diagnostic> {
        match self.peek_word() {
            Some(w) if w == kw => Ok(self.ident().map(|(_, s)| s).unwrap_or_else(|| self.span())),
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn number(&mut self) -> Option<Result<(u32, Span), Diagnostic>> {
        self.ws();
        let start = self.pos;
        if !self.chars.get(start).is_some_and(|c| c.is_ascii_digit()) {
            return None;
        }
        let span = self.span();
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        Some(digits.parse::<u32>().map(|n| (n, span)).map_err(|_| {
            diag(
                span,
                DiagnosticKind::MalformedMultiset,
                format!("multiplicity `{digits}` is out of range"),
            )
        }))
    }

    fn expect_end(&mut self) -> Result<(), Diagnostic> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }
}

/// One addend `k'x` or, nested, `k'p[inner]`.
struct Term {
    count: u32,
    name: String,
    span: Span,
    inner: Option<Vec<Term>>,
}

/// Parses `0`, an empty multiset (at the end of input or before `stop`), or
/// `k'x + ...`. With `nested`, every addend carries a bracketed inner multiset.
fn terms(cur: &mut Cursor, nested: bool, stop: Option<&str>) -> Result<Vec<Term>, Diagnostic> {
    let mut out = Vec::new();
    match cur.peek() {
        None | Some(']') | Some(';') | Some('}') => return Ok(out),
        _ => {}
    }
    if stop.is_some() && cur.peek_word().as_deref() == stop {
        return Ok(out);
    }
    loop {
        let mut count = 1;
        let mut span = {
            cur.ws();
            cur.span()
        };
        if let Some(n) = cur.number() {
            let (n, s) = n?;
            span = s;
            if cur.chars.get(cur.pos) == Some(&'\'') {
                cur.pos += 1;
                if n == 0 {
                    return Err(diag(
                        s,
                        DiagnosticKind::MalformedMultiset,
                        "multiplicity must be positive",
                    ));
                }
                count = n;
            } else if n == 0 && out.is_empty() {
                return Ok(out);
            } else {
                return Err(diag(
                    cur.span(),
                    DiagnosticKind::MalformedMultiset,
                    "expected `'` after a multiplicity",
                ));
            }
        }
        let Some((name, name_span)) = cur.ident() else {
            let mut e = cur.unexpected("an identifier");
            e.kind = DiagnosticKind::MalformedMultiset;
            return Err(e);
        };
        if count == 1 {
            span = name_span;
        }
        let inner = if nested {
            cur.expect('[').map_err(|mut e| {
                e.kind = DiagnosticKind::MalformedMultiset;
                e
            })?;
            let inner = terms(cur, false, None)?;
            cur.expect(']').map_err(|mut e| {
                e.kind = DiagnosticKind::MalformedMultiset;
                e
            })?;
            Some(inner)
        } else {
            None
        };
        out.push(Term {
            count,
            name,
            span,
            inner,
        });
        if !cur.eat('+') {
            return Ok(out);
        }
    }
}

fn place_ms(net: &PtNet, ts: &[Term], what: &str) -> Result<PtMarking, Diagnostic> {
    let mut m = PtMarking::new();
    for t in ts {
        match net.place_by_name(&t.name) {
            Some(p) => m.insert_n(p, t.count),
            None => {
                return Err(diag(
                    t.span,
                    DiagnosticKind::UnknownId,
                    format!("`{}` is not a place of {what}", t.name),
                ))
            }
        }
    }
    Ok(m)
}

enum Block {
    Top,
    Object { net: PtNet, labels: Vec<(String, Span, String)>, header: Span },
    System { net: PtNet, header: Span },
    Events { header: Span },
}

struct Builder {
    diags: Vec<Diagnostic>,
    objects: Vec<PtNet>,
    obj_labels: BTreeMap<(NetId, crate::ptnet::Trans), String>,
    spans: BTreeMap<SpanKey, Span>,
    eos: Option<Eos>,
    events: Option<(EventSource, Span)>,
    explicit: Vec<(EosEvent, Span)>,
    initial: Option<(NestedMarking, Span)>,
}

/// Parses a model. On failure, every diagnostic that could be collected is returned.
pub fn parse(text: &str) -> Result<ModelDocument, ParseError> {
    let mut b = Builder {
        diags: Vec::new(),
        objects: Vec::new(),
        obj_labels: BTreeMap::new(),
        spans: BTreeMap::new(),
        eos: None,
        events: None,
        explicit: Vec::new(),
        initial: None,
    };
    let mut block = Block::Top;
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        last_line = i + 1;
        let mut cur = Cursor::new(raw, i + 1);
        if cur.at_end() {
            continue;
        }
        if let Err(d) = b.line(&mut cur, &mut block) {
            b.diags.push(d);
        }
    }
    let eof = Span {
        line: last_line.max(1),
        col: 1,
    };
    match block {
        Block::Top => {}
        Block::Object { header, .. } | Block::System { header, .. } | Block::Events { header } => {
            b.diags.push(diag(header, DiagnosticKind::Syntax, "block is not closed by `end`"))
        }
    }
    b.finish(text, eof)
}

impl Builder {
    fn line(&mut self, cur: &mut Cursor, block: &mut Block) -> Result<(), Diagnostic> {
        let (kw, kw_span) = cur.expect_ident("a keyword")?;
        if kw == "end" {
            cur.expect_end()?;
            return self.close(std::mem::replace(block, Block::Top), kw_span);
        }
        match block {
            Block::Top => self.top(cur, &kw, kw_span, block),
            Block::Object { net, labels, .. } => {
                let owner = NetId(self.objects.len() + 1);
                match kw.as_str() {
                    "place" | "trans" => self.node(cur, &kw, net, Some(owner)),
                    "label" => {
                        let (t, span) = cur.expect_ident("a transition")?;
                        let (ch, _) = cur.expect_ident("a channel")?;
                        cur.expect_end()?;
                        if labels.iter().any(|(x, _, _)| *x == t) {
                            return Err(diag(
                                span,
                                DiagnosticKind::Duplicate,
                                format!("transition `{t}` is already labelled"),
                            ));
                        }
                        labels.push((t, span, ch));
                        Ok(())
                    }
                    _ => Err(diag(
                        kw_span,
                        DiagnosticKind::Syntax,
                        format!("unexpected `{kw}` in an object net (place, trans, label or end)"),
                    )),
                }
            }
            Block::System { net, .. } => match kw.as_str() {
                "place" | "trans" => self.node(cur, &kw, net, None),
                "type" | "label" => {
                    // Applied once the system net is closed; checked here for early errors.
                    let eos = self.eos.as_mut().expect("opened with the system block");
                    *eos = Eos::new(net.clone(), eos.nets()[1..].to_vec()).with_from(eos);
                    if kw == "type" {
                        system_type(cur, eos, &mut self.spans)
                    } else {
                        system_label(cur, eos)
                    }
                }
                _ => Err(diag(
                    kw_span,
                    DiagnosticKind::Syntax,
                    format!("unexpected `{kw}` in the system net (place, trans, type, label or end)"),
                )),
            },
            Block::Events { .. } => {
                if kw != "event" {
                    return Err(diag(
                        kw_span,
                        DiagnosticKind::Syntax,
                        format!("unexpected `{kw}` in an events block (event or end)"),
                    ));
                }
                let eos = self.eos.as_ref().expect("events follow the system net");
                let e = event_line(cur, eos)?;
                if let Some((_, first)) = self.explicit.iter().find(|(x, _)| *x == e) {
                    return Err(diag(
                        kw_span,
                        DiagnosticKind::Duplicate,
                        format!("event is already declared at {first}"),
                    ));
                }
                self.explicit.push((e, kw_span));
                Ok(())
            }
        }
    }

    fn top(
        &mut self,
        cur: &mut Cursor,
        kw: &str,
        span: Span,
        block: &mut Block,
    ) -> Result<(), Diagnostic> {
        match kw {
            "objectnet" => {
                if self.eos.is_some() {
                    return Err(diag(
                        span,
                        DiagnosticKind::Syntax,
                        "object nets must be declared before the system net",
                    ));
                }
                let (name, nspan) = cur.expect_ident("an object net name")?;
                cur.expect_end()?;
                if name == "dot" || name == "•" {
                    return Err(diag(
                        nspan,
                        DiagnosticKind::Duplicate,
                        format!("`{name}` names the black-token net"),
                    ));
                }
                if self.objects.iter().any(|n| n.name() == name) {
                    return Err(diag(
                        nspan,
                        DiagnosticKind::Duplicate,
                        format!("object net `{name}` is already declared"),
                    ));
                }
                self.spans
                    .insert(SpanKey::Net(NetId(self.objects.len() + 1)), nspan);
                *block = Block::Object {
                    net: PtNet::new(name),
                    labels: Vec::new(),
                    header: span,
                };
                Ok(())
            }
            "systemnet" => {
                if self.eos.is_some() {
                    return Err(diag(span, DiagnosticKind::Duplicate, "second system net"));
                }
                let name = cur.ident().map_or_else(|| "system".to_owned(), |(n, _)| n);
                cur.expect_end()?;
                let net = PtNet::new(name);
                self.eos = Some(Eos::new(net.clone(), self.objects.clone()));
                self.spans.insert(SpanKey::System, span);
                *block = Block::System { net, header: span };
                Ok(())
            }
            "events" => {
                let Some(eos) = self.eos.as_ref() else {
                    return Err(diag(span, DiagnosticKind::Syntax, "events must follow the system net"));
                };
                if let Some((_, first)) = self.events {
                    return Err(diag(
                        span,
                        DiagnosticKind::Duplicate,
                        format!("events are already declared at {first}"),
                    ));
                }
                let (mode, mspan) = cur.expect_ident("`explicit` or `from-labels`")?;
                match mode.as_str() {
                    "explicit" => {
                        cur.expect_end()?;
                        self.events = Some((EventSource::Explicit, span));
                        *block = Block::Events { header: span };
                        Ok(())
                    }
                    "from-labels" => {
                        cur.keyword("max_sync")?;
                        cur.expect('=')?;
                        let k = match cur.number() {
                            Some(n) => n?.0,
                            None => return Err(cur.unexpected("a number")),
                        };
                        cur.expect_end()?;
                        let mut eos = eos.clone();
                        if eos.labels().is_none() {
                            eos.set_labels(Labels::default());
                        }
                        let events = events_from_labels(&eos, k, DEFAULT_LABEL_CAP)
                            .map_err(|e| diag(mspan, DiagnosticKind::Invalid, e.to_string()))?;
                        eos.set_events(events);
                        self.eos = Some(eos);
                        self.events = Some((EventSource::FromLabels { max_sync: k }, span));
                        Ok(())
                    }
                    other => Err(diag(
                        mspan,
                        DiagnosticKind::Syntax,
                        format!("unknown event source `{other}` (explicit or from-labels)"),
                    )),
                }
            }
            "initial" => {
                let Some(eos) = self.eos.as_ref() else {
                    return Err(diag(span, DiagnosticKind::Syntax, "initial must follow the system net"));
                };
                if let Some((_, first)) = self.initial {
                    return Err(diag(
                        span,
                        DiagnosticKind::Duplicate,
                        format!("initial marking is already declared at {first}"),
                    ));
                }
                let mu = nested_marking(cur, eos)?;
                self.initial = Some((mu, span));
                Ok(())
            }
            other => Err(diag(
                span,
                DiagnosticKind::Syntax,
                format!("unexpected `{other}` (objectnet, systemnet, events, initial)"),
            )),
        }
    }

    fn node(
        &mut self,
        cur: &mut Cursor,
        kw: &str,
        net: &mut PtNet,
        owner: Option<NetId>,
    ) -> Result<(), Diagnostic> {
        if kw == "place" {
            let mut any = false;
            while let Some((name, span)) = cur.ident() {
                any = true;
                add_node(net.add_place(name.clone()), span)?;
                self.spans.insert(SpanKey::Node(owner, name), span);
            }
            if !any {
                return Err(cur.unexpected("a place name"));
            }
            return cur.expect_end();
        }
        let (name, span) = cur.expect_ident("a transition name")?;
        let what = format!("net `{}`", net.name());
        cur.keyword("pre")?;
        let pre = place_ms(net, &terms(cur, false, Some("post"))?, &what)?;
        cur.keyword("post")?;
        let post = place_ms(net, &terms(cur, false, None)?, &what)?;
        cur.expect_end()?;
        add_node(net.add_transition(name.clone(), pre, post), span)?;
        self.spans.insert(SpanKey::Node(owner, name), span);
        Ok(())
    }

    fn close(&mut self, block: Block, span: Span) -> Result<(), Diagnostic> {
        match block {
            Block::Top => Err(diag(span, DiagnosticKind::Syntax, "`end` outside a block")),
            Block::Object { net, labels, .. } => {
                let id = NetId(self.objects.len() + 1);
                let mut result = Ok(());
                for (t, tspan, ch) in labels {
                    match net.trans_by_name(&t) {
                        Some(tr) => {
                            self.obj_labels.insert((id, tr), ch);
                        }
                        None => {
                            result = Err(diag(
                                tspan,
                                DiagnosticKind::UnknownId,
                                format!("`{t}` is not a transition of `{}`", net.name()),
                            ))
                        }
                    }
                }
                self.objects.push(net);
                result
            }
            Block::System { net, .. } => {
                let eos = self.eos.as_mut().expect("opened with the system block");
                let mut fresh = Eos::new(net, eos.nets()[1..].to_vec()).with_from(eos);
                if !self.obj_labels.is_empty() {
                    let mut labels = fresh.labels().cloned().unwrap_or_default();
                    labels.object = self.obj_labels.clone();
                    fresh.set_labels(labels);
                }
                *eos = fresh;
                Ok(())
            }
            Block::Events { .. } => Ok(()),
        }
    }

    fn finish(mut self, text: &str, eof: Span) -> Result<ModelDocument, ParseError> {
        let Some(mut eos) = self.eos.take() else {
            self.diags
                .push(diag(eof, DiagnosticKind::Syntax, "missing `systemnet` block"));
            return Err(ParseError(self.diags));
        };
        let source = match self.events {
            Some((EventSource::Explicit, span)) => {
                let mut evs = std::mem::take(&mut self.explicit);
                evs.sort_by(|a, b| a.0.cmp(&b.0));
                for (i, (_, s)) in evs.iter().enumerate() {
                    self.spans.insert(SpanKey::Event(i), *s);
                }
                eos.set_events(evs.into_iter().map(|(e, _)| e).collect());
                self.spans.insert(SpanKey::Events, span);
                EventSource::Explicit
            }
            Some((src, span)) => {
                self.spans.insert(SpanKey::Events, span);
                src
            }
            None => EventSource::Explicit,
        };
        let initial = match self.initial {
            Some((mu, span)) => {
                self.spans.insert(SpanKey::Initial, span);
                mu
            }
            None => NestedMarking::new(),
        };
        if self.diags.is_empty() {
            let at = self.spans.get(&SpanKey::System).copied().unwrap_or(eof);
            for issue in eos.validate() {
                let span = match issue {
                    crate::eos::Issue::DuplicateEvent { event }
                    | crate::eos::Issue::IdleTypeMismatch { event, .. } => {
                        self.spans.get(&SpanKey::Event(event)).copied().unwrap_or(at)
                    }
                    _ => at,
                };
                self.diags
                    .push(diag(span, DiagnosticKind::Invalid, issue.to_string()));
            }
        }
        if !self.diags.is_empty() {
            self.diags.sort_by_key(|d| d.span);
            return Err(ParseError(self.diags));
        }
        Ok(ModelDocument {
            source: text.to_owned(),
            eos,
            initial,
            events: source,
            spans: self.spans,
        })
    }
}

trait WithFrom {
    /// Carries typing, events and labels over from an older version of the system.
    fn with_from(self, old: &Eos) -> Self;
}

impl WithFrom for Eos {
    fn with_from(mut self, old: &Eos) -> Self {
        for p in self.system().places().collect::<Vec<_>>() {
            if p.0 < old.typing().len() {
                self.set_type(p, old.type_of(p));
            }
        }
        if let Some(l) = old.labels() {
            self.set_labels(l.clone());
        }
        self.set_events(old.events().to_vec());
        self
    }
}

fn add_node<T>(r: Result<T, NetError>, span: Span) -> Result<T, Diagnostic> {
    r.map_err(|e| match e {
        NetError::Duplicate(n) => diag(
            span,
            DiagnosticKind::Duplicate,
            format!("`{n}` is already declared in this net"),
        ),
        other => diag(span, DiagnosticKind::Invalid, other.to_string()),
    })
}

fn net_ref(eos: &Eos, name: &str, span: Span) -> Result<NetId, Diagnostic> {
    eos.net_by_name(name).ok_or_else(|| {
        diag(
            span,
            DiagnosticKind::UnknownId,
            format!("unknown object net `{name}`"),
        )
    })
}

fn system_type(
    cur: &mut Cursor,
    eos: &mut Eos,
    spans: &mut BTreeMap<SpanKey, Span>,
) -> Result<(), Diagnostic> {
    let (p, pspan) = cur.expect_ident("a system place")?;
    let (n, nspan) = cur.expect_ident("an object net name")?;
    cur.expect_end()?;
    let place = eos.system().place_by_name(&p).ok_or_else(|| {
        diag(
            pspan,
            DiagnosticKind::UnknownId,
            format!("`{p}` is not a system place"),
        )
    })?;
    let net = net_ref(eos, &n, nspan)?;
    let key = SpanKey::Typing(p.clone());
    if let Some(first) = spans.get(&key) {
        return Err(diag(
            pspan,
            DiagnosticKind::Duplicate,
            format!("`{p}` is already typed at {first}"),
        ));
    }
    spans.insert(key, pspan);
    eos.set_type(place, net);
    Ok(())
}

fn system_label(cur: &mut Cursor, eos: &mut Eos) -> Result<(), Diagnostic> {
    let (t, tspan) = cur.expect_ident("a system transition")?;
    let (n, nspan) = cur.expect_ident("an object net name")?;
    cur.expect(':')?;
    let chans = terms(cur, false, None)?;
    cur.expect_end()?;
    let trans = eos.system().trans_by_name(&t).ok_or_else(|| {
        diag(
            tspan,
            DiagnosticKind::UnknownId,
            format!("`{t}` is not a system transition"),
        )
    })?;
    let net = net_ref(eos, &n, nspan)?;
    if net == BLACK {
        return Err(diag(
            nspan,
            DiagnosticKind::TypeMismatch,
            "the black-token net has no channels",
        ));
    }
    let mut labels = eos.labels().cloned().unwrap_or_default();
    if labels.system.contains_key(&(trans, net)) {
        return Err(diag(
            tspan,
            DiagnosticKind::Duplicate,
            format!("`{t}` already carries a label for `{n}`"),
        ));
    }
    let ms: Multiset<String> = chans.into_iter().map(|c| (c.name, c.count)).collect();
    labels.system.insert((trans, net), ms);
    eos.set_labels(labels);
    Ok(())
}

fn event_line(cur: &mut Cursor, eos: &Eos) -> Result<EosEvent, Diagnostic> {
    let (name, span) = cur.expect_ident("a system transition or `id@place`")?;
    let system = if cur.eat('@') {
        if name != "id" && name != "idle" {
            return Err(diag(
                span,
                DiagnosticKind::Syntax,
                format!("expected `id@` or `idle@`, found `{name}@`"),
            ));
        }
        let (p, pspan) = cur.expect_ident("a system place")?;
        let place = eos.system().place_by_name(&p).ok_or_else(|| {
            diag(
                pspan,
                DiagnosticKind::UnknownId,
                format!("`{p}` is not a system place"),
            )
        })?;
        SysTrans::Idle(place)
    } else {
        let t = eos.system().trans_by_name(&name).ok_or_else(|| {
            diag(
                span,
                DiagnosticKind::UnknownId,
                format!("`{name}` is not a system transition"),
            )
        })?;
        SysTrans::Transition(t)
    };
    let mut e = EosEvent::new(system);
    cur.expect('{')?;
    let mut seen: HashMap<NetId, Span> = HashMap::new();
    while !cur.eat('}') {
        let (n, nspan) = cur.expect_ident("an object net name or `}`")?;
        let net = net_ref(eos, &n, nspan)?;
        if net == BLACK {
            return Err(diag(
                nspan,
                DiagnosticKind::TypeMismatch,
                "events cannot synchronise with the black-token net",
            ));
        }
        if let Some(first) = seen.insert(net, nspan) {
            return Err(diag(
                nspan,
                DiagnosticKind::Duplicate,
                format!("`{n}` already appears in this event at {first}"),
            ));
        }
        cur.expect(':')?;
        let object = &eos.nets()[net.0];
        let mut ts = Multiset::new();
        for t in terms(cur, false, None)? {
            match object.trans_by_name(&t.name) {
                Some(tr) => ts.insert_n(tr, t.count),
                None => {
                    return Err(diag(
                        t.span,
                        DiagnosticKind::UnknownId,
                        format!("`{}` is not a transition of `{n}`", t.name),
                    ))
                }
            }
        }
        if let SysTrans::Idle(p) = system {
            if eos.type_of(p) != net {
                return Err(diag(
                    nspan,
                    DiagnosticKind::TypeMismatch,
                    format!(
                        "an idle event on `{}` can only synchronise with its type",
                        eos.system().place_name(p)
                    ),
                ));
            }
        }
        e.set_sync(net, ts);
        if !cur.eat(';') && cur.peek() != Some('}') {
            return Err(cur.unexpected("`;` or `}`"));
        }
    }
    cur.expect_end()?;
    Ok(e)
}

fn nested_marking(cur: &mut Cursor, eos: &Eos) -> Result<NestedMarking, Diagnostic> {
    let ts = terms(cur, true, None)?;
    cur.expect_end()?;
    let mut mu = NestedMarking::new();
    for t in ts {
        let place = eos.system().place_by_name(&t.name).ok_or_else(|| {
            diag(
                t.span,
                DiagnosticKind::UnknownId,
                format!("`{}` is not a system place", t.name),
            )
        })?;
        let d = eos.type_of(place);
        let net = &eos.nets()[d.0];
        let inner = t.inner.expect("nested terms carry brackets");
        let mut m = PtMarking::new();
        for x in inner {
            match net.place_by_name(&x.name) {
                Some(q) => m.insert_n(q, x.count),
                None => {
                    let elsewhere = eos.nets().iter().any(|n| n.place_by_name(&x.name).is_some());
                    let (kind, msg) = if d == BLACK {
                        (
                            DiagnosticKind::TypeMismatch,
                            format!("`{}` holds black tokens, written `{}[]`", t.name, t.name),
                        )
                    } else if elsewhere {
                        (
                            DiagnosticKind::TypeMismatch,
                            format!(
                                "`{}` is not a place of `{}`, the type of `{}`",
                                x.name,
                                net.name(),
                                t.name
                            ),
                        )
                    } else {
                        (
                            DiagnosticKind::UnknownId,
                            format!("`{}` is not an object place", x.name),
                        )
                    };
                    return Err(diag(x.span, kind, msg));
                }
            }
        }
        mu.add_token(Token::new(place, m), t.count);
    }
    Ok(mu)
}

/// Parses a nested marking such as `1'S1[p2+p3] + S2[p1+p4]` against a model.
pub fn parse_marking(eos: &Eos, text: &str) -> Result<NestedMarking, Diagnostic> {
    let mut cur = Cursor::new(text, 1);
    nested_marking(&mut cur, eos)
}

fn render_ms(net: &PtNet, m: &PtMarking) -> String {
    if m.is_empty() {
        "0".to_owned()
    } else {
        net.render_marking(m)
    }
}

/// Renders a model in the `.eos` format. Parsing the output gives back an equal system.
pub fn render(eos: &Eos, initial: &NestedMarking, events: EventSource) -> String {
    let mut out = String::new();
    let labels = eos.labels();
    for id in eos.net_ids().skip(1) {
        let net = &eos.nets()[id.0];
        out.push_str(&format!("objectnet {}\n", net.name()));
        render_nodes(&mut out, net);
        if let Some(l) = labels {
            for t in net.transitions() {
                if let Some(ch) = l.object.get(&(id, t)) {
                    out.push_str(&format!("  label {} {ch}\n", net.trans_name(t)));
                }
            }
        }
        out.push_str("end\n\n");
    }
    let sys = eos.system();
    out.push_str(&format!("systemnet {}\n", sys.name()));
    render_nodes(&mut out, sys);
    for p in sys.places() {
        let d = eos.type_of(p);
        if d != BLACK {
            out.push_str(&format!(
                "  type {} {}\n",
                sys.place_name(p),
                eos.nets()[d.0].name()
            ));
        }
    }
    if let Some(l) = labels {
        for ((t, n), chans) in &l.system {
            let rendered = chans
                .display_with(|c, f| f.write_str(c))
                .to_string()
                .replace(' ', "");
            out.push_str(&format!(
                "  label {} {}:{rendered}\n",
                sys.trans_name(*t),
                eos.nets()[n.0].name()
            ));
        }
    }
    out.push_str("end\n\n");
    match events {
        EventSource::FromLabels { max_sync } => {
            out.push_str(&format!("events from-labels max_sync={max_sync}\n"));
        }
        EventSource::Explicit => {
            out.push_str("events explicit\n");
            for e in eos.events() {
                let head = match e.system {
                    SysTrans::Transition(t) => sys.trans_name(t).to_owned(),
                    SysTrans::Idle(p) => format!("id@{}", sys.place_name(p)),
                };
                let parts: Vec<String> = e
                    .sync
                    .iter()
                    .map(|(n, ts)| {
                        let net = &eos.nets()[n.0];
                        let body = ts
                            .display_with(|t, f| f.write_str(net.trans_name(*t)))
                            .to_string()
                            .replace(' ', "");
                        format!("{}: {body}", net.name())
                    })
                    .collect();
                if parts.is_empty() {
                    out.push_str(&format!("  event {head} {{ }}\n"));
                } else {
                    out.push_str(&format!("  event {head} {{ {} }}\n", parts.join("; ")));
                }
            }
            out.push_str("end\n");
        }
    }
    out.push_str(&format!("\ninitial {}\n", eos.render_marking(initial)));
    out
}

fn render_nodes(out: &mut String, net: &PtNet) {
    for p in net.places() {
        out.push_str(&format!("  place {}\n", net.place_name(p)));
    }
    for t in net.transitions() {
        out.push_str(&format!(
            "  trans {} pre {} post {}\n",
            net.trans_name(t),
            render_ms(net, net.pre(t)),
            render_ms(net, net.post(t))
        ));
    }
}
