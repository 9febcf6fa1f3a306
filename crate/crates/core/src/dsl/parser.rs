use std::collections::BTreeMap;

use super::lexer::{Attr, Lexer, LineIndex, Token};
use super::{ParseDetail, ParseError, ParseErrorKind, ParseOptions, ParseOutcome, SourceSpan};
use crate::model::{Activity, Branch, Gateway, GatewayKind, Node, ProcessModel};

enum FrameKind {
    Process {
        name: String,
        nodes: Vec<Node>,
    },
    Gateway {
        id: String,
        kind: GatewayKind,
        branches: Vec<Branch>,
    },
    Branch {
        condition: Option<String>,
        children: Vec<Node>,
    },
    /// A non-self-closing `<activity>` waiting for its `</activity>`.
    Activity(Activity),
    /// Element being skipped along with everything inside it.
    Skip { name: String },
}

struct Frame {
    kind: FrameKind,
    span: SourceSpan,
    /// Tree path of this element.
    path: String,
}

impl Frame {
    fn tag(&self) -> &str {
        match &self.kind {
            FrameKind::Process { .. } => "process",
            FrameKind::Gateway { kind, .. } => kind.tag(),
            FrameKind::Branch { .. } => "branch",
            FrameKind::Activity(_) => "activity",
            FrameKind::Skip { name } => name,
        }
    }

    /// Path prefix for children appended to this frame, if it holds nodes.
    fn child_path(&self) -> Option<String> {
        match &self.kind {
            FrameKind::Process { nodes, .. } => Some(format!("/nodes/{}", nodes.len())),
            FrameKind::Branch { children, .. } => {
                Some(format!("{}/children/{}", self.path, children.len()))
            }
            _ => None,
        }
    }
}

struct Builder<'a> {
    opts: ParseOptions,
    lines: &'a LineIndex<'a>,
    stack: Vec<Frame>,
    model: Option<ProcessModel>,
    seen_process: bool,
    errors: Vec<ParseError>,
    warnings: Vec<ParseError>,
    spans: BTreeMap<String, SourceSpan>,
}

const ACTIVITY_ATTRS: [&str; 4] = ["role", "action", "object", "id"];

impl<'a> Builder<'a> {
    fn current_path(&self) -> Option<String> {
        self.stack.last().map(|f| f.path.clone())
    }

    fn push_error(&mut self, kind: ParseErrorKind, span: SourceSpan, message: String, detail: ParseDetail) {
        let path = self.current_path();
        self.errors.push(ParseError {
            kind,
            span,
            message,
            detail,
            path,
        });
    }

    /// Unknown tags/attributes: an error in strict mode, a warning in lenient mode.
    fn push_unknown(&mut self, kind: ParseErrorKind, span: SourceSpan, message: String, detail: ParseDetail) {
        let path = self.current_path();
        let err = ParseError {
            kind,
            span,
            message,
            detail,
            path,
        };
        if self.opts.lenient {
            self.warnings.push(err);
        } else {
            self.errors.push(err);
        }
    }

    /// Validates the attribute set of an element and returns a lookup.
    fn attributes<'t>(
        &mut self,
        element: &str,
        attrs: &'t [Attr],
        allowed: &[&str],
        required: &[&str],
        span: SourceSpan,
    ) -> impl Fn(&str) -> Option<&'t str> {
        for a in attrs {
            if !allowed.contains(&a.name.as_str()) {
                self.push_unknown(
                    ParseErrorKind::UnknownAttribute,
                    span,
                    format!("<{element}> does not accept attribute \"{}\"", a.name),
                    ParseDetail::Unknown {
                        element: element.to_owned(),
                        attribute: a.name.clone(),
                    },
                );
            }
        }
        for r in required {
            if !attrs.iter().any(|a| a.name == *r) {
                self.push_error(
                    ParseErrorKind::MissingAttribute,
                    span,
                    format!("<{element}> is missing required attribute \"{r}\""),
                    ParseDetail::Missing {
                        element: element.to_owned(),
                        attribute: (*r).to_owned(),
                    },
                );
            }
        }
        move |name| attrs.iter().find(|a| a.name == name).map(|a| a.value.as_str())
    }

    fn start(&mut self, name: String, attrs: Vec<Attr>, self_closing: bool, span: SourceSpan) {
        // Inside a skipped subtree nothing is interpreted.
        if matches!(self.stack.last(), Some(Frame { kind: FrameKind::Skip { .. }, .. })) {
            if !self_closing {
                self.skip(name, span);
            }
            return;
        }
        if let Some(Frame {
            kind: FrameKind::Activity(_),
            ..
        }) = self.stack.last()
        {
            self.push_error(
                ParseErrorKind::BadNesting,
                span,
                format!("<activity> cannot contain <{name}>"),
                ParseDetail::None,
            );
            if !self_closing {
                self.skip(name, span);
            }
            return;
        }

        match name.as_str() {
            "process" => self.start_process(attrs, self_closing, span),
            "activity" => self.start_activity(attrs, self_closing, span),
            "branch" => self.start_branch(attrs, self_closing, span),
            other => match GatewayKind::from_tag(other) {
                Some(kind) => self.start_gateway(kind, attrs, self_closing, span),
                None => {
                    self.push_unknown(
                        ParseErrorKind::UnexpectedTag,
                        span,
                        format!("unknown element <{name}>"),
                        ParseDetail::UnknownTag { tag: name.clone() },
                    );
                    if !self_closing {
                        self.skip(name, span);
                    }
                }
            },
        }
    }

    fn skip(&mut self, name: String, span: SourceSpan) {
        let path = self.current_path().unwrap_or_default();
        self.stack.push(Frame {
            kind: FrameKind::Skip { name },
            span,
            path,
        });
    }

    fn start_process(&mut self, attrs: Vec<Attr>, self_closing: bool, span: SourceSpan) {
        if !self.stack.is_empty() {
            self.push_error(
                ParseErrorKind::BadNesting,
                span,
                "<process> cannot be nested".into(),
                ParseDetail::None,
            );
            if !self_closing {
                self.skip("process".into(), span);
            }
            return;
        }
        if self.seen_process {
            self.push_error(
                ParseErrorKind::UnexpectedTag,
                span,
                "only one <process> element is allowed".into(),
                ParseDetail::None,
            );
            if !self_closing {
                self.skip("process".into(), span);
            }
            return;
        }
        self.seen_process = true;
        let get = self.attributes("process", &attrs, &["name"], &["name"], span);
        let name = get("name").unwrap_or_default().to_owned();
        let frame = Frame {
            kind: FrameKind::Process {
                name,
                nodes: Vec::new(),
            },
            span,
            path: String::new(),
        };
        if self_closing {
            self.close(frame);
        } else {
            self.stack.push(frame);
        }
    }

    /// Path the next node would get, or a nesting error if nodes are not
    /// allowed at the current position.
    fn node_slot(&mut self, tag: &str, span: SourceSpan) -> Option<String> {
        match self.stack.last() {
            None => {
                self.push_error(
                    ParseErrorKind::BadNesting,
                    span,
                    format!("<{tag}> must be inside <process>"),
                    ParseDetail::None,
                );
                None
            }
            Some(f) => match f.child_path() {
                Some(p) => Some(p),
                None => {
                    let parent = f.tag().to_owned();
                    self.push_error(
                        ParseErrorKind::BadNesting,
                        span,
                        format!("<{tag}> cannot appear directly inside <{parent}>; wrap it in a <branch>"),
                        ParseDetail::None,
                    );
                    None
                }
            },
        }
    }

    fn start_activity(&mut self, attrs: Vec<Attr>, self_closing: bool, span: SourceSpan) {
        let Some(path) = self.node_slot("activity", span) else {
            if !self_closing {
                self.skip("activity".into(), span);
            }
            return;
        };
        let get = self.attributes(
            "activity",
            &attrs,
            &ACTIVITY_ATTRS,
            &["role", "action", "id"],
            span,
        );
        let activity = Activity {
            id: get("id").unwrap_or_default().to_owned(),
            role: get("role").unwrap_or_default().to_owned(),
            action: get("action").unwrap_or_default().to_owned(),
            object: get("object").map(str::to_owned),
        };
        self.spans.insert(path.clone(), span);
        let frame = Frame {
            kind: FrameKind::Activity(activity),
            span,
            path,
        };
        if self_closing {
            self.close(frame);
        } else {
            self.stack.push(frame);
        }
    }

    fn start_gateway(&mut self, kind: GatewayKind, attrs: Vec<Attr>, self_closing: bool, span: SourceSpan) {
        let Some(path) = self.node_slot(kind.tag(), span) else {
            if !self_closing {
                self.skip(kind.tag().into(), span);
            }
            return;
        };
        let get = self.attributes(kind.tag(), &attrs, &["id"], &["id"], span);
        let id = get("id").unwrap_or_default().to_owned();
        self.spans.insert(path.clone(), span);
        let frame = Frame {
            kind: FrameKind::Gateway {
                id,
                kind,
                branches: Vec::new(),
            },
            span,
            path,
        };
        if self_closing {
            self.close(frame);
        } else {
            self.stack.push(frame);
        }
    }

    fn start_branch(&mut self, attrs: Vec<Attr>, self_closing: bool, span: SourceSpan) {
        let parent = match self.stack.last() {
            Some(Frame {
                kind: FrameKind::Gateway { kind, branches, .. },
                path,
                ..
            }) => Some((*kind, format!("{path}/branches/{}", branches.len()))),
            _ => None,
        };
        let Some((gw_kind, path)) = parent else {
            self.push_error(
                ParseErrorKind::BadNesting,
                span,
                "<branch> must be directly inside a gateway".into(),
                ParseDetail::BranchOutsideGateway,
            );
            if !self_closing {
                self.skip("branch".into(), span);
            }
            return;
        };
        let required: &[&str] = if gw_kind.requires_condition() {
            &["condition"]
        } else {
            &[]
        };
        let get = self.attributes("branch", &attrs, &["condition"], required, span);
        let condition = get("condition").map(str::to_owned);
        self.spans.insert(path.clone(), span);
        let frame = Frame {
            kind: FrameKind::Branch {
                condition,
                children: Vec::new(),
            },
            span,
            path,
        };
        if self_closing {
            self.close(frame);
        } else {
            self.stack.push(frame);
        }
    }

    /// Attaches a finished element to its parent.
    fn close(&mut self, frame: Frame) {
        let node = match frame.kind {
            FrameKind::Skip { .. } => return,
            FrameKind::Process { name, nodes } => {
                self.model = Some(ProcessModel { name, nodes });
                return;
            }
            FrameKind::Branch {
                condition,
                children,
            } => {
                if let Some(Frame {
                    kind: FrameKind::Gateway { branches, .. },
                    ..
                }) = self.stack.last_mut()
                {
                    branches.push(Branch {
                        condition,
                        children,
                    });
                }
                return;
            }
            FrameKind::Activity(a) => Node::Activity(a),
            FrameKind::Gateway { id, kind, branches } => Node::Gateway(Gateway { id, kind, branches }),
        };
        match self.stack.last_mut() {
            Some(Frame {
                kind: FrameKind::Process { nodes, .. },
                ..
            }) => nodes.push(node),
            Some(Frame {
                kind: FrameKind::Branch { children, .. },
                ..
            }) => children.push(node),
            _ => {}
        }
    }

    fn end(&mut self, name: String, span: SourceSpan) {
        let Some(depth) = self.stack.iter().rposition(|f| f.tag() == name) else {
            if !matches!(self.stack.last(), Some(Frame { kind: FrameKind::Skip { .. }, .. })) {
                self.push_error(
                    ParseErrorKind::BadNesting,
                    span,
                    format!("closing tag </{name}> does not match any open element"),
                    ParseDetail::None,
                );
            }
            return;
        };
        // A closer inside a skipped subtree only closes skipped elements.
        let skipping = self.stack[depth..]
            .iter()
            .any(|f| matches!(f.kind, FrameKind::Skip { .. }));
        if skipping && !matches!(self.stack.last().unwrap().kind, FrameKind::Skip { .. }) {
            return;
        }
        while self.stack.len() > depth + 1 {
            let frame = self.stack.pop().unwrap();
            if !matches!(frame.kind, FrameKind::Skip { .. }) {
                self.errors.push(ParseError {
                    kind: ParseErrorKind::UnclosedTag,
                    span: frame.span,
                    message: format!("<{}> is not closed before </{name}>", frame.tag()),
                    detail: ParseDetail::None,
                    path: Some(frame.path.clone()),
                });
            }
            self.close(frame);
        }
        let frame = self.stack.pop().unwrap();
        self.close(frame);
    }

    fn finish(mut self, input_len: usize) -> ParseOutcome {
        while let Some(frame) = self.stack.pop() {
            if !matches!(frame.kind, FrameKind::Skip { .. }) {
                self.errors.push(ParseError {
                    kind: ParseErrorKind::UnclosedTag,
                    span: frame.span,
                    message: format!("<{}> is never closed", frame.tag()),
                    detail: ParseDetail::None,
                    path: Some(frame.path.clone()),
                });
            }
            self.close(frame);
        }
        if !self.seen_process {
            self.errors.push(ParseError {
                kind: ParseErrorKind::NotWellFormed,
                span: self.lines.span(0, input_len),
                message: "no <process> element found".into(),
                detail: ParseDetail::None,
                path: None,
            });
        }
        self.errors.sort_by_key(|e| e.span.start.offset);
        self.warnings.sort_by_key(|e| e.span.start.offset);
        let model = if self.errors.is_empty() { self.model } else { None };
        ParseOutcome {
            model,
            errors: self.errors,
            warnings: self.warnings,
            spans: self.spans,
        }
    }
}

/// Parses BPMN text, collecting every recoverable error in one pass.
pub fn parse_document(text: &str, opts: ParseOptions) -> ParseOutcome {
    let lines = LineIndex::new(text);
    let mut lexer = Lexer::new(text, &lines);
    let mut builder = Builder {
        opts,
        lines: &lines,
        stack: Vec::new(),
        model: None,
        seen_process: false,
        errors: Vec::new(),
        warnings: Vec::new(),
        spans: BTreeMap::new(),
    };
    while let Some(tok) = lexer.next_token() {
        match tok {
            Token::Start {
                name,
                attrs,
                self_closing,
                span,
            } => builder.start(name, attrs, self_closing, span),
            Token::End { name, span } => builder.end(name, span),
        }
    }
    builder.errors.append(&mut lexer.errors);
    builder.finish(text.len())
}

#[cfg(test)]
mod tests {
    use super::super::{parse, parse_lenient};
    use super::*;

    fn kinds(text: &str) -> Vec<ParseErrorKind> {
        parse(text).unwrap_err().into_iter().map(|e| e.kind).collect()
    }

    #[test]
    fn single_activity() {
        let m = parse(r#"<process name="p"><activity role="clerk" action="check order" id="a1"/></process>"#)
            .unwrap();
        assert_eq!(m.name, "p");
        assert_eq!(m.nodes.len(), 1);
        let a = m.nodes[0].as_activity().unwrap();
        assert_eq!((a.role.as_str(), a.action.as_str(), a.id.as_str()), ("clerk", "check order", "a1"));
        assert_eq!(a.object, None);
    }

    #[test]
    fn unclosed_activity() {
        let errs = parse(r#"<process name="p"><activity role="r" action="a" id="a1">"#).unwrap_err();
        assert!(errs.iter().any(|e| e.kind == ParseErrorKind::UnclosedTag));
        assert!(errs.iter().all(|e| e.span.end.offset <= 58));
    }

    #[test]
    fn delivery_gateway() {
        let text = r#"<process name="d"><exclusiveGateway id="g1"><branch condition="home pickup"><activity role="system" action="assign a courier for pickup" id="a1"/></branch><branch condition="self-service"><activity role="customer" action="go to the mailing point to send" id="a2"/></branch></exclusiveGateway></process>"#;
        let m = parse(text).unwrap();
        let Node::Gateway(g) = &m.nodes[0] else { panic!() };
        assert_eq!(g.kind, GatewayKind::Exclusive);
        assert_eq!(g.branches.len(), 2);
        assert_eq!(g.branches[0].condition.as_deref(), Some("home pickup"));
        assert_eq!(
            g.branches[1].children[0].as_activity().unwrap().action,
            "go to the mailing point to send"
        );
    }

    #[test]
    fn unknown_tag_strict_vs_lenient() {
        let text = r#"<process name="p"><task id="t"><x/></task><activity role="r" action="a" id="a1" color="red"/></process>"#;
        assert_eq!(
            kinds(text),
            vec![ParseErrorKind::UnexpectedTag, ParseErrorKind::UnknownAttribute]
        );
        let out = parse_document(text, ParseOptions::lenient());
        assert!(out.errors.is_empty());
        assert_eq!(out.warnings.len(), 2);
        assert_eq!(out.model.unwrap().nodes.len(), 1);
        assert!(parse_lenient(text).is_ok());
    }

    #[test]
    fn missing_attributes() {
        let errs = parse(r#"<process name="p"><activity role="r" id="a1"/></process>"#).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ParseErrorKind::MissingAttribute);
        assert_eq!(
            errs[0].detail,
            ParseDetail::Missing {
                element: "activity".into(),
                attribute: "action".into()
            }
        );
    }

    #[test]
    fn branch_condition_required_only_for_exclusive_and_inclusive() {
        let par = r#"<process name="p"><parallelGateway id="g"><branch/><branch/></parallelGateway></process>"#;
        assert!(parse(par).is_ok());
        let xor = r#"<process name="p"><exclusiveGateway id="g"><branch/><branch condition="x"/></exclusiveGateway></process>"#;
        assert_eq!(kinds(xor), vec![ParseErrorKind::MissingAttribute]);
    }

    #[test]
    fn nesting_errors() {
        let branch_outside = r#"<process name="p"><branch condition="x"></branch></process>"#;
        let errs = parse(branch_outside).unwrap_err();
        assert_eq!(errs[0].detail, ParseDetail::BranchOutsideGateway);

        let act_in_gw = r#"<process name="p"><parallelGateway id="g"><activity role="r" action="a" id="a"/></parallelGateway></process>"#;
        assert_eq!(kinds(act_in_gw), vec![ParseErrorKind::BadNesting]);

        let stray_close = r#"<process name="p"></branch></process>"#;
        assert_eq!(kinds(stray_close), vec![ParseErrorKind::BadNesting]);

        let nested = r#"<process name="p"><process name="q"></process></process>"#;
        assert_eq!(kinds(nested), vec![ParseErrorKind::BadNesting]);
    }

    #[test]
    fn mismatched_close_reports_unclosed_inner() {
        let text = r#"<process name="p"><parallelGateway id="g"><branch></parallelGateway></process>"#;
        assert_eq!(kinds(text), vec![ParseErrorKind::UnclosedTag]);
    }

    #[test]
    fn not_well_formed_inputs() {
        assert_eq!(kinds(""), vec![ParseErrorKind::NotWellFormed]);
        assert_eq!(kinds("just prose")[0], ParseErrorKind::NotWellFormed);
        let text = r#"<process name="p">hello<activity role="r" action="a" id="a"/></process>"#;
        assert_eq!(kinds(text), vec![ParseErrorKind::NotWellFormed]);
        let unquoted = r#"<process name=p></process>"#;
        assert!(kinds(unquoted).contains(&ParseErrorKind::NotWellFormed));
        let dup = r#"<process name="p" name="q"><activity role="r" action="a" id="a"/></process>"#;
        assert_eq!(kinds(dup), vec![ParseErrorKind::NotWellFormed]);
    }

    #[test]
    fn comments_and_declaration_are_skipped() {
        let text = "<?xml version=\"1.0\"?>\n<!-- model -->\n<process name=\"p\">\n  <!-- first -->\n  <activity role=\"r\" action=\"a\" id=\"a\"/>\n</process>\n";
        assert!(parse(text).is_ok());
    }

    #[test]
    fn activity_with_explicit_close_tag() {
        let text = r#"<process name="p"><activity role="r" action="a" id="a"></activity></process>"#;
        assert_eq!(parse(text).unwrap().nodes.len(), 1);
    }

    #[test]
    fn spans_are_recorded_by_path() {
        let text = "<process name=\"p\">\n  <parallelGateway id=\"g\">\n    <branch>\n      <activity role=\"r\" action=\"a\" id=\"a\"/>\n    </branch>\n  </parallelGateway>\n</process>";
        let out = parse_document(text, ParseOptions::strict());
        assert_eq!(out.spans["/nodes/0"].start.line, 2);
        assert_eq!(out.spans["/nodes/0/branches/0"].start.line, 3);
        assert_eq!(out.spans["/nodes/0/branches/0/children/0"].start.line, 4);
        assert_eq!(out.spans["/nodes/0/branches/0/children/0"].start.column, 7);
    }

    #[test]
    fn second_process_is_rejected() {
        let text = r#"<process name="p"><activity role="r" action="a" id="a"/></process><process name="q"></process>"#;
        assert_eq!(kinds(text), vec![ParseErrorKind::UnexpectedTag]);
    }
}
