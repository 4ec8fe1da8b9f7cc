//! First-order syntactic unification between query and index terms.

use std::collections::{BTreeMap, HashMap};

use crate::term::Term;

/// A variable of either side. Query variables live on the query side,
/// index variables inside stored terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    Query(String),
    Index(u32),
}

impl VarKey {
    fn of(term: &Term) -> Option<VarKey> {
        match term {
            Term::QVar(n) => Some(VarKey::Query(n.clone())),
            Term::IndexVar(i) => Some(VarKey::Index(*i)),
            _ => None,
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            VarKey::Query(n) => Term::QVar(n.clone()),
            VarKey::Index(i) => Term::IndexVar(*i),
        }
    }
}

/// A fully resolved, idempotent substitution: no bound variable occurs in
/// any binding.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<VarKey, Term>,
}

impl Substitution {
    pub fn get(&self, var: &VarKey) -> Option<&Term> {
        self.map.get(var)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarKey, &Term)> {
        self.map.iter()
    }

    pub fn apply(&self, term: &Term) -> Term {
        match term {
            Term::Apply { head, args } => Term::Apply {
                head: head.clone(),
                args: args.iter().map(|a| self.apply(a)).collect(),
            },
            Term::QVar(_) | Term::IndexVar(_) => {
                let key = VarKey::of(term).expect("variable");
                self.map.get(&key).cloned().unwrap_or_else(|| term.clone())
            }
            other => other.clone(),
        }
    }

    /// What each query variable of `q` stands for under this substitution.
    pub fn query_bindings(&self, q: &Term) -> BTreeMap<String, Term> {
        q.qvar_names()
            .into_iter()
            .map(|n| {
                let t = self.apply(&Term::QVar(n.clone()));
                (n, t)
            })
            .collect()
    }
}

struct Unifier {
    bound: HashMap<VarKey, Term>,
}

impl Unifier {
    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Some(next) = VarKey::of(t).and_then(|k| self.bound.get(&k)) {
            t = next;
        }
        t
    }

    fn occurs(&self, var: &VarKey, t: &Term) -> bool {
        let t = self.walk(t);
        match VarKey::of(t) {
            Some(k) => &k == var,
            None => t.args().iter().any(|a| self.occurs(var, a)),
        }
    }

    fn bind(&mut self, var: VarKey, t: &Term) -> bool {
        if self.occurs(&var, t) {
            return false;
        }
        self.bound.insert(var, t.clone());
        true
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((a, b)) = stack.pop() {
            let a = self.walk(&a).clone();
            let b = self.walk(&b).clone();
            let ok = match (VarKey::of(&a), VarKey::of(&b)) {
                (Some(x), Some(y)) if x == y => true,
                // A query variable meeting an index variable names it, so
                // bindings read `?x -> X0` rather than the reverse.
                (Some(x @ VarKey::Query(_)), Some(VarKey::Index(_))) => self.bind(x, &b),
                (Some(VarKey::Index(_)), Some(y @ VarKey::Query(_))) => self.bind(y, &a),
                (Some(x), _) => self.bind(x, &b),
                (None, Some(y)) => self.bind(y, &a),
                (None, None) => match (&a, &b) {
                    (Term::Apply { head: h1, args: a1 }, Term::Apply { head: h2, args: a2 }) => {
                        if h1 != h2 || a1.len() != a2.len() {
                            false
                        } else {
                            stack.extend(a1.iter().cloned().zip(a2.iter().cloned()).rev());
                            true
                        }
                    }
                    _ => a == b,
                },
            };
            if !ok {
                return false;
            }
        }
        true
    }

    fn resolve(&self, t: &Term) -> Term {
        let t = self.walk(t);
        match t {
            Term::Apply { head, args } => Term::Apply {
                head: head.clone(),
                args: args.iter().map(|a| self.resolve(a)).collect(),
            },
            other => other.clone(),
        }
    }

    fn finish(self) -> Substitution {
        let map = self
            .bound
            .keys()
            .map(|k| (k.clone(), self.resolve(&k.to_term())))
            .collect();
        Substitution { map }
    }
}

/// Most general unifier of `q` and `t`, or `None` if they do not unify.
/// Variables bind whole subterms; the occurs check is always performed.
pub fn unify(q: &Term, t: &Term) -> Option<Substitution> {
    let mut u = Unifier { bound: HashMap::new() };
    u.unify(q, t).then(|| u.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{formula_to_term, SymbolId, SymbolTable};

    fn add(a: Term, b: Term) -> Term {
        Term::apply(SymbolId::new("spsht-arith", "opAdd"), vec![a, b])
    }

    #[test]
    fn linear_extrapolation_query() {
        let table = SymbolTable::default();
        let t = formula_to_term("C7+(E$3-C$3)/(D$3-C$3)*(D7-C7)", &table, true).unwrap();
        let ast = crate::formula::parse_formula("?fa+(?x-?a)/(?b-?a)*(?fb-?fa)", true).unwrap();
        let q = crate::term::ast_to_query_term(&ast, &table);
        let s = unify(&q, &t).unwrap();
        let b = s.query_bindings(&q);
        let want: Vec<(&str, u32)> = vec![("a", 2), ("b", 3), ("fa", 0), ("fb", 4), ("x", 1)];
        let got: Vec<(&str, u32)> = b
            .iter()
            .map(|(k, v)| match v {
                Term::IndexVar(i) => (k.as_str(), *i),
                other => panic!("{k} bound to {other}"),
            })
            .collect();
        assert_eq!(got, want);
        assert_eq!(s.apply(&q), s.apply(&t));
    }

    #[test]
    fn universal_query() {
        let t = add(Term::num("1"), Term::IndexVar(0));
        let s = unify(&Term::qvar("x"), &t).unwrap();
        assert_eq!(s.get(&VarKey::Query("x".into())), Some(&t));
    }

    #[test]
    fn repeated_query_variable_joins_index_variables() {
        let q = add(Term::qvar("v"), Term::qvar("v"));
        let t = add(Term::IndexVar(0), Term::IndexVar(1));
        let s = unify(&q, &t).unwrap();
        let v = s.apply(&Term::qvar("v"));
        assert_eq!(s.apply(&Term::IndexVar(0)), v);
        assert_eq!(s.apply(&Term::IndexVar(1)), v);
        assert_eq!(s.apply(&q), s.apply(&t));
    }

    #[test]
    fn clashes_fail() {
        let q = add(Term::num("1"), Term::num("2"));
        let t = add(Term::num("1"), Term::num("3"));
        assert!(unify(&q, &t).is_none());
        assert!(unify(&Term::num("1"), &Term::Str("1".into())).is_none());
        let sum = |a| Term::apply(SymbolId::new("spsht-arith", "sum"), vec![a]);
        assert!(unify(&sum(Term::num("1")), &add(Term::num("1"), Term::num("1"))).is_none());
    }

    #[test]
    fn occurs_check() {
        let q = add(Term::qvar("x"), Term::qvar("x"));
        let t = add(Term::IndexVar(0), add(Term::IndexVar(0), Term::num("1")));
        assert!(unify(&q, &t).is_none());
        assert!(unify(&Term::qvar("x"), &add(Term::qvar("x"), Term::num("1"))).is_none());
    }
}
