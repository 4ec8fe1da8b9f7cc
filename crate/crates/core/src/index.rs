//! Substitution-tree style index: a trie over preorder token sequences.
//!
//! Every distinct term owns one root-to-leaf path; the leaf records the
//! term id and the postings (harvest ids) that share the term. Queries walk
//! the trie treating variables on either side as wildcards over one
//! subterm, then verify every surviving candidate with [`unify`].

use std::collections::HashMap;
use std::mem::size_of;

use crate::error::IndexError;
use crate::term::{term_tokens, SymbolId, Term, Token};
use crate::unify::{unify, Substitution};

pub type TermId = u32;

/// Interned token. Variants order so that index variables sort first among
/// a node's children.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Key {
    IVar(u32),
    Sym { head: u32, arity: u32 },
    Const(u32),
    Num(u32),
    Str(u32),
}

impl Key {
    fn arity(self) -> usize {
        match self {
            Key::Sym { arity, .. } => arity as usize,
            _ => 0,
        }
    }
}

#[derive(Debug, Default)]
struct Node {
    children: Vec<(Key, u32)>,
    leaf: Option<TermId>,
}

#[derive(Debug)]
struct Entry<H> {
    term: Term,
    postings: Vec<H>,
}

#[derive(Debug, Default)]
struct Interner {
    ids: HashMap<String, u32>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.ids.len() as u32;
        self.ids.insert(s.to_string(), id);
        id
    }

    fn get(&self, s: &str) -> Option<u32> {
        self.ids.get(s).copied()
    }
}

#[derive(Debug, Default)]
struct Vocabulary {
    symbols: HashMap<SymbolId, u32>,
    numbers: Interner,
    strings: Interner,
}

impl Vocabulary {
    fn symbol(&mut self, s: &SymbolId) -> u32 {
        let next = self.symbols.len() as u32;
        *self.symbols.entry(s.clone()).or_insert(next)
    }

    fn key(&mut self, tok: &Token) -> Key {
        match tok {
            Token::Sym { head, arity } => Key::Sym {
                head: self.symbol(head),
                arity: *arity as u32,
            },
            Token::Const(s) => Key::Const(self.symbol(s)),
            Token::Num(n) => Key::Num(self.numbers.intern(n)),
            Token::Str(s) => Key::Str(self.strings.intern(s)),
            Token::IVar(i) => Key::IVar(*i),
            Token::QVar(_) => unreachable!("query variables are rejected before interning"),
        }
    }

    /// Key of a concrete query token, `None` if it never occurs in the index.
    fn lookup(&self, tok: &Token) -> Option<Key> {
        Some(match tok {
            Token::Sym { head, arity } => Key::Sym {
                head: *self.symbols.get(head)?,
                arity: u32::try_from(*arity).ok()?,
            },
            Token::Const(s) => Key::Const(*self.symbols.get(s)?),
            Token::Num(n) => Key::Num(self.numbers.get(n)?),
            Token::Str(s) => Key::Str(self.strings.get(s)?),
            Token::IVar(_) | Token::QVar(_) => return None,
        })
    }
}

/// One query answer.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexHit<H> {
    pub term_id: TermId,
    pub harvest: H,
    pub substitution: Substitution,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IndexStats {
    pub term_count: usize,
    pub posting_count: usize,
    /// Sum of token lengths of the distinct terms.
    pub token_count: usize,
    pub node_count: usize,
    pub approx_bytes: usize,
}

/// Estimated bytes per trie node: the node itself plus its entry in the
/// parent's child list.
pub const NODE_BYTES: usize = size_of::<Node>() + size_of::<(Key, u32)>();

#[derive(Debug)]
pub struct SubstitutionIndex<H> {
    nodes: Vec<Node>,
    entries: Vec<Entry<H>>,
    vocab: Vocabulary,
    posting_count: usize,
    token_count: usize,
}

impl<H> Default for SubstitutionIndex<H> {
    fn default() -> Self {
        SubstitutionIndex {
            nodes: vec![Node::default()],
            entries: Vec::new(),
            vocab: Vocabulary::default(),
            posting_count: 0,
            token_count: 0,
        }
    }
}

enum QTok {
    Var,
    Concrete(Option<Key>),
}

impl<H: Clone + Ord> SubstitutionIndex<H> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Estimated bytes per posting: the harvest handle and its term id.
    pub fn posting_bytes() -> usize {
        size_of::<H>() + size_of::<TermId>()
    }

    fn child(&self, node: u32, key: Key) -> Option<u32> {
        let kids = &self.nodes[node as usize].children;
        kids.binary_search_by(|(k, _)| k.cmp(&key)).ok().map(|i| kids[i].1)
    }

    /// Adds a posting for `harvest` under `term`, interning the term.
    /// Adding the same (term, harvest) pair twice is a no-op.
    pub fn insert(&mut self, term: &Term, harvest: H) -> Result<TermId, IndexError> {
        if let Some(name) = term.first_qvar() {
            return Err(IndexError::QueryVariable(name.to_string()));
        }
        let tokens = term_tokens(term);
        let mut node = 0u32;
        for tok in &tokens {
            let key = self.vocab.key(tok);
            node = match self.child(node, key) {
                Some(next) => next,
                None => {
                    let next = self.nodes.len() as u32;
                    self.nodes.push(Node::default());
                    let kids = &mut self.nodes[node as usize].children;
                    let at = kids.partition_point(|(k, _)| *k < key);
                    kids.insert(at, (key, next));
                    next
                }
            };
        }
        let id = match self.nodes[node as usize].leaf {
            Some(id) => id,
            None => {
                let id = self.entries.len() as TermId;
                self.nodes[node as usize].leaf = Some(id);
                self.entries.push(Entry {
                    term: term.clone(),
                    postings: Vec::new(),
                });
                self.token_count += tokens.len();
                id
            }
        };
        let postings = &mut self.entries[id as usize].postings;
        if let Err(at) = postings.binary_search(&harvest) {
            postings.insert(at, harvest);
            self.posting_count += 1;
        }
        Ok(id)
    }

    pub fn term(&self, id: TermId) -> Option<&Term> {
        self.entries.get(id as usize).map(|e| &e.term)
    }

    pub fn postings(&self, id: TermId) -> &[H] {
        self.entries
            .get(id as usize)
            .map(|e| e.postings.as_slice())
            .unwrap_or(&[])
    }

    /// All interned terms in id order.
    pub fn terms(&self) -> impl Iterator<Item = (TermId, &Term)> {
        self.entries.iter().enumerate().map(|(i, e)| (i as TermId, &e.term))
    }

    /// Term ids whose token path is compatible with `q` when every variable
    /// is read as a wildcard. A superset of the unifying terms.
    fn candidates(&self, q: &Term) -> Vec<TermId> {
        let tokens = term_tokens(q);
        let qtoks: Vec<QTok> = tokens
            .iter()
            .map(|t| match t {
                Token::IVar(_) | Token::QVar(_) => QTok::Var,
                other => QTok::Concrete(self.vocab.lookup(other)),
            })
            .collect();
        let mut end = vec![0usize; tokens.len()];
        for i in (0..tokens.len()).rev() {
            let mut j = i + 1;
            for _ in 0..tokens[i].arity() {
                j = end[j];
            }
            end[i] = j;
        }
        let mut out = Vec::new();
        let mut stack = vec![(0u32, 0usize)];
        while let Some((node, pos)) = stack.pop() {
            if pos == qtoks.len() {
                out.extend(self.nodes[node as usize].leaf);
                continue;
            }
            match qtoks[pos] {
                QTok::Var => self.skip_subterm(node, 1, pos + 1, &mut stack),
                QTok::Concrete(key) => {
                    let kids = &self.nodes[node as usize].children;
                    let vars = kids.partition_point(|(k, _)| matches!(k, Key::IVar(_)));
                    for &(_, child) in &kids[..vars] {
                        stack.push((child, end[pos]));
                    }
                    if let Some(next) = key.and_then(|k| self.child(node, k)) {
                        stack.push((next, pos + 1));
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Pushes every node reached after consuming `pending` complete
    /// subterms below `node`.
    fn skip_subterm(&self, node: u32, pending: usize, resume: usize, stack: &mut Vec<(u32, usize)>) {
        for &(key, child) in &self.nodes[node as usize].children {
            let left = pending - 1 + key.arity();
            if left == 0 {
                stack.push((child, resume));
            } else {
                self.skip_subterm(child, left, resume, stack);
            }
        }
    }

    /// Every posting whose term unifies with `q`, ordered by term id then
    /// harvest.
    pub fn query(&self, q: &Term) -> Vec<IndexHit<H>> {
        let mut hits = Vec::new();
        for id in self.candidates(q) {
            let entry = &self.entries[id as usize];
            if let Some(subst) = unify(q, &entry.term) {
                hits.extend(entry.postings.iter().map(|h| IndexHit {
                    term_id: id,
                    harvest: h.clone(),
                    substitution: subst.clone(),
                }));
            }
        }
        hits
    }

    /// Reference implementation of [`query`](Self::query): unify against
    /// every interned term without using the trie.
    pub fn query_brute_force(&self, q: &Term) -> Vec<IndexHit<H>> {
        let mut hits = Vec::new();
        for (id, entry) in self.entries.iter().enumerate() {
            if let Some(subst) = unify(q, &entry.term) {
                hits.extend(entry.postings.iter().map(|h| IndexHit {
                    term_id: id as TermId,
                    harvest: h.clone(),
                    substitution: subst.clone(),
                }));
            }
        }
        hits
    }

    pub fn stats(&self) -> IndexStats {
        // The root is allocated up front and not counted.
        let node_count = self.nodes.len() - 1;
        IndexStats {
            term_count: self.entries.len(),
            posting_count: self.posting_count,
            token_count: self.token_count,
            node_count,
            approx_bytes: node_count * NODE_BYTES + self.posting_count * Self::posting_bytes(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::term::{ast_to_query_term, formula_to_term, SymbolTable};

    fn query_term(src: &str) -> Term {
        ast_to_query_term(&parse_formula(src, true).unwrap(), &SymbolTable::default())
    }

    fn index_term(src: &str) -> Term {
        formula_to_term(src, &SymbolTable::default(), true).unwrap()
    }

    #[test]
    fn interning_and_stats() {
        let mut idx: SubstitutionIndex<String> = SubstitutionIndex::new();
        assert_eq!(idx.stats().term_count, 0);
        assert_eq!(idx.stats().approx_bytes, 0);
        let t = index_term("C7+(E$3-C$3)/(D$3-C$3)*(D7-C7)");
        assert_eq!(idx.insert(&t, "h1".into()).unwrap(), 0);
        assert_eq!(idx.stats().token_count, 13);
        assert_eq!(idx.insert(&t, "h2".into()).unwrap(), 0);
        let s = idx.stats();
        assert_eq!(
            (s.term_count, s.posting_count, s.token_count, s.node_count),
            (1, 2, 13, 13)
        );
        assert_eq!(idx.postings(0), ["h1".to_string(), "h2".to_string()]);
    }

    #[test]
    fn rejects_query_variables() {
        let mut idx: SubstitutionIndex<u32> = SubstitutionIndex::new();
        assert!(matches!(
            idx.insert(&Term::qvar("x"), 0),
            Err(IndexError::QueryVariable(n)) if n == "x"
        ));
    }

    #[test]
    fn linear_extrapolation_hit() {
        let mut idx = SubstitutionIndex::new();
        idx.insert(&index_term("C7+(E$3-C$3)/(D$3-C$3)*(D7-C7)"), 7u32).unwrap();
        idx.insert(&index_term("SUM(A1:A4)"), 8u32).unwrap();
        let hits = idx.query(&query_term("?fa+(?x-?a)/(?b-?a)*(?fb-?fa)"));
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].harvest, 7);
        assert!(idx.query(&query_term("1+2")).is_empty());
    }

    #[test]
    fn sum_times_two() {
        let mut idx = SubstitutionIndex::new();
        idx.insert(&index_term("SUM(A5:A8)*2"), 1u32).unwrap();
        let q = query_term("SUM(?r)*2");
        let hits = idx.query(&q);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].substitution.query_bindings(&q)["r"], Term::IndexVar(0));
    }

    #[test]
    fn index_variables_skip_query_subterms() {
        let mut idx = SubstitutionIndex::new();
        idx.insert(&index_term("A1*2"), 1u32).unwrap();
        idx.insert(&index_term("A1*3"), 2u32).unwrap();
        let hits = idx.query(&query_term("SUM(1,2)*2"));
        assert_eq!(hits.iter().map(|h| h.harvest).collect::<Vec<_>>(), vec![1]);
        let hits = idx.query(&query_term("?x*?y"));
        assert_eq!(hits.len(), 2);
    }
}
