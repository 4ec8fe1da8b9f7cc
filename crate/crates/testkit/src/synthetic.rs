//! Seeded synthetic formula corpus for index benchmarks.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use xlsearch_core::address::CellAddr;

/// Fifty spreadsheet functions drawn from the built-in symbol table.
pub const FUNCTIONS: [&str; 50] = [
    "SUM",
    "AVERAGE",
    "MIN",
    "MAX",
    "COUNT",
    "COUNTA",
    "ROUND",
    "ROUNDUP",
    "ROUNDDOWN",
    "ABS",
    "SQRT",
    "EXP",
    "LN",
    "LOG10",
    "POWER",
    "MOD",
    "INT",
    "TRUNC",
    "SIGN",
    "PRODUCT",
    "MEDIAN",
    "STDEV",
    "VAR",
    "SIN",
    "COS",
    "TAN",
    "ATAN",
    "PI",
    "IF",
    "AND",
    "OR",
    "NOT",
    "IFERROR",
    "LEN",
    "LEFT",
    "RIGHT",
    "MID",
    "UPPER",
    "LOWER",
    "TRIM",
    "CONCATENATE",
    "VLOOKUP",
    "HLOOKUP",
    "INDEX",
    "MATCH",
    "COUNTIF",
    "SUMIF",
    "NPV",
    "PMT",
    "FV",
];

const OPERATORS: [&str; 5] = ["+", "-", "*", "/", "^"];

pub struct Synthetic {
    rng: StdRng,
}

impl Synthetic {
    pub fn new(seed: u64) -> Self {
        Synthetic {
            rng: StdRng::seed_from_u64(seed),
        }
    }

    fn reference(&mut self) -> String {
        let a = CellAddr::new(self.rng.gen_range(1..=40), self.rng.gen_range(1..=500))
            .with_abs(self.rng.gen_bool(0.2), self.rng.gen_bool(0.2));
        if self.rng.gen_bool(0.3) {
            let b = CellAddr::new(a.col + self.rng.gen_range(0..3), a.row + self.rng.gen_range(1..20));
            format!("{}:{}", a.local_a1(), b.local_a1())
        } else {
            a.local_a1()
        }
    }

    fn constant(&mut self) -> String {
        if self.rng.gen_bool(0.5) {
            self.rng.gen_range(0..100_000u32).to_string()
        } else {
            format!("{}.{}", self.rng.gen_range(0..1000u32), self.rng.gen_range(1..10u32))
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.25);
        if leaf {
            return if self.rng.gen_bool(0.6) {
                self.reference()
            } else {
                self.constant()
            };
        }
        if self.rng.gen_bool(0.5) {
            let f = FUNCTIONS.choose(&mut self.rng).expect("non-empty");
            let n = self.rng.gen_range(1..=3);
            let args: Vec<String> = (0..n).map(|_| self.expr(depth - 1)).collect();
            format!("{f}({})", args.join(","))
        } else {
            let op = OPERATORS.choose(&mut self.rng).expect("non-empty");
            let a = self.expr(depth - 1);
            let b = self.expr(depth - 1);
            format!("({a}){op}({b})")
        }
    }

    /// A templated arithmetic formula of nesting depth at most three,
    /// always headed by a function call or operator.
    pub fn formula(&mut self) -> String {
        let f = FUNCTIONS.choose(&mut self.rng).expect("non-empty");
        let n = self.rng.gen_range(1..=3);
        let args: Vec<String> = (0..n).map(|_| self.expr(2)).collect();
        let core = format!("{f}({})", args.join(","));
        if self.rng.gen_bool(0.5) {
            let op = OPERATORS.choose(&mut self.rng).expect("non-empty");
            format!("{core}{op}{}", self.constant())
        } else {
            core
        }
    }

    pub fn formulas(&mut self, n: usize) -> Vec<String> {
        (0..n).map(|_| self.formula()).collect()
    }
}
