//! Content MathML rendering and re-parsing of terms.

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use crate::error::MathmlError;

use super::{SymbolId, Term};

pub const MATHML_NS: &str = "http://www.w3.org/1998/Math/MathML";
pub const QUERY_NS: &str = "http://search.mathweb.org/ns";
pub const SPSHP_CDGROUP: &str = "http://oaff.info/spshp/";

/// Serializes a term as a content MathML `math` element.
///
/// Variable-free terms carry the `cdgroup` attribute; terms with variables
/// bind the `q` prefix to the query namespace instead.
pub fn term_to_mathml(term: &Term) -> String {
    let mut out = String::new();
    if term.has_vars() {
        out.push_str(&format!(r#"<math xmlns="{MATHML_NS}" xmlns:q="{QUERY_NS}">"#));
    } else {
        out.push_str(&format!(r#"<math xmlns="{MATHML_NS}" cdgroup="{SPSHP_CDGROUP}">"#));
    }
    write_term(term, &mut out);
    out.push_str("</math>");
    out
}

fn write_csymbol(sym: &SymbolId, out: &mut String) {
    out.push_str(r#"<csymbol cd=""#);
    out.push_str(&escape(sym.cd.as_str()));
    out.push_str(r#"">"#);
    out.push_str(&escape(sym.name.as_str()));
    out.push_str("</csymbol>");
}

fn write_term(term: &Term, out: &mut String) {
    match term {
        Term::Apply { head, args } => {
            out.push_str("<apply>");
            write_csymbol(head, out);
            for a in args {
                write_term(a, out);
            }
            out.push_str("</apply>");
        }
        Term::Sym(s) => write_csymbol(s, out),
        Term::Num(n) => {
            out.push_str("<mn>");
            out.push_str(&escape(n.as_str()));
            out.push_str("</mn>");
        }
        Term::Str(s) => {
            out.push_str("<ms>");
            out.push_str(&escape(s.as_str()));
            out.push_str("</ms>");
        }
        Term::IndexVar(i) => out.push_str(&format!(r#"<q:qvar name="X{i}"/>"#)),
        Term::QVar(n) => {
            out.push_str(r#"<q:qvar name=""#);
            out.push_str(&escape(n.as_str()));
            out.push_str(r#""/>"#);
        }
    }
}

#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn xml_err(e: impl std::fmt::Display) -> MathmlError {
    MathmlError::Xml(e.to_string())
}

fn open(start: &BytesStart<'_>) -> Result<Element, MathmlError> {
    let name = String::from_utf8_lossy(start.local_name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for attr in start.attributes() {
        let attr = attr.map_err(xml_err)?;
        let key = String::from_utf8_lossy(attr.key.local_name().as_ref()).into_owned();
        let value = attr.unescape_value().map_err(xml_err)?.into_owned();
        attrs.push((key, value));
    }
    Ok(Element {
        name,
        attrs,
        ..Default::default()
    })
}

fn read_tree(text: &str) -> Result<Element, MathmlError> {
    let mut reader = Reader::from_str(text);
    let mut stack: Vec<Element> = Vec::new();
    let mut root = None;
    loop {
        match reader.read_event().map_err(xml_err)? {
            Event::Start(e) => stack.push(open(&e)?),
            Event::Empty(e) => {
                let el = open(&e)?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(MathmlError::Xml("multiple root elements".into())),
                }
            }
            Event::End(_) => {
                let el = stack
                    .pop()
                    .ok_or_else(|| MathmlError::Xml("unbalanced end tag".into()))?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(el),
                    None if root.is_none() => root = Some(el),
                    None => return Err(MathmlError::Xml("multiple root elements".into())),
                }
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(xml_err)?;
                match stack.last_mut() {
                    Some(el) => el.text.push_str(&s),
                    None if s.trim().is_empty() => {}
                    None => return Err(MathmlError::Xml("text outside the root element".into())),
                }
            }
            Event::CData(c) => {
                if let Some(el) = stack.last_mut() {
                    el.text.push_str(&String::from_utf8_lossy(&c));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !stack.is_empty() {
        return Err(MathmlError::Xml("unclosed element".into()));
    }
    root.ok_or_else(|| MathmlError::Xml("empty document".into()))
}

fn structure(msg: impl Into<String>) -> MathmlError {
    MathmlError::Structure(msg.into())
}

fn no_stray_text(el: &Element) -> Result<(), MathmlError> {
    if el.text.trim().is_empty() {
        Ok(())
    } else {
        Err(structure(format!("unexpected text inside <{}>", el.name)))
    }
}

fn csymbol(el: &Element) -> Result<SymbolId, MathmlError> {
    let cd = el.attr("cd").ok_or_else(|| structure("csymbol without cd attribute"))?;
    Ok(SymbolId::new(cd, el.text.trim()))
}

fn to_term(el: &Element) -> Result<Term, MathmlError> {
    match el.name.as_str() {
        "apply" => {
            no_stray_text(el)?;
            let (head, args) = el.children.split_first().ok_or_else(|| structure("empty <apply>"))?;
            if head.name != "csymbol" {
                return Err(structure(format!(
                    "<apply> head must be a csymbol, found <{}>",
                    head.name
                )));
            }
            Ok(Term::Apply {
                head: csymbol(head)?,
                args: args.iter().map(to_term).collect::<Result<_, _>>()?,
            })
        }
        "csymbol" => Ok(Term::Sym(csymbol(el)?)),
        "mn" => Ok(Term::Num(el.text.trim().to_string())),
        "ms" => Ok(Term::Str(el.text.clone())),
        "qvar" => {
            let name = el
                .attr("name")
                .ok_or_else(|| structure("qvar without name attribute"))?;
            match name.strip_prefix('X').and_then(|d| d.parse::<u32>().ok()) {
                Some(id) if name[1..].bytes().all(|b| b.is_ascii_digit()) => Ok(Term::IndexVar(id)),
                _ => Ok(Term::QVar(name.to_string())),
            }
        }
        other => Err(structure(format!("unsupported element <{other}>"))),
    }
}

/// Parses MathML produced by [`term_to_mathml`] (or any equivalent
/// whitespace layout). `qvar` names of the form `X<digits>` read back as
/// index variables, every other name as a query variable.
pub fn parse_mathml(text: &str) -> Result<Term, MathmlError> {
    let root = read_tree(text)?;
    if root.name != "math" {
        return Err(structure(format!("root element must be <math>, found <{}>", root.name)));
    }
    no_stray_text(&root)?;
    match root.children.as_slice() {
        [only] => to_term(only),
        _ => Err(structure("<math> must contain exactly one child")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lone_number() {
        assert_eq!(
            term_to_mathml(&Term::num("2")),
            format!(r#"<math xmlns="{MATHML_NS}" cdgroup="{SPSHP_CDGROUP}"><mn>2</mn></math>"#)
        );
    }

    #[test]
    fn escapes_and_round_trips() {
        let t = Term::apply(
            SymbolId::new("spsht-arith", "opConcat"),
            vec![Term::Str(" a<&>\"b ".into()), Term::qvar("x"), Term::IndexVar(3)],
        );
        let xml = term_to_mathml(&t);
        assert!(xml.contains(r#"xmlns:q="http://search.mathweb.org/ns""#));
        assert_eq!(parse_mathml(&xml).unwrap(), t);
    }

    #[test]
    fn tolerates_layout_whitespace() {
        let xml = "<math xmlns=\"http://www.w3.org/1998/Math/MathML\">\n  <apply>\n    <csymbol cd=\"spsht-arith\"> sum </csymbol>\n    <mn> 1 </mn>\n  </apply>\n</math>\n";
        assert_eq!(
            parse_mathml(xml).unwrap(),
            Term::apply(SymbolId::new("spsht-arith", "sum"), vec![Term::num("1")])
        );
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_mathml("<math><apply>"), Err(MathmlError::Xml(_))));
        assert!(matches!(parse_mathml("<foo/>"), Err(MathmlError::Structure(_))));
        assert!(parse_mathml("<math><apply><mn>1</mn></apply></math>").is_err());
        assert!(parse_mathml("<math><mn>1</mn><mn>2</mn></math>").is_err());
        assert!(parse_mathml("<math><csymbol>x</csymbol></math>").is_err());
        assert!(parse_mathml("not xml at all").is_err());
    }
}
