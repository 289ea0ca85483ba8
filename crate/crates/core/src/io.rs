//! Text formats: net expressions, generalized numbers as CSV/JSON and grid
//! functions as a directory of per-eps CSV files.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genfun::GridFn;
use crate::grid::SpatialGrid;
use crate::scale::{EpsGrid, GenNumber};

const MAX_DEPTH: usize = 64;

/// Real net given as an arithmetic expression in `eps`. The bare word `log`
/// stands for `ln(1/eps)`.
#[derive(Clone, Debug, PartialEq)]
pub enum NetExpr {
    Num(f64),
    Eps,
    Neg(Box<NetExpr>),
    Bin(char, Box<NetExpr>, Box<NetExpr>),
    Call(Func, Box<NetExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Ln,
    Exp,
    Sqrt,
    Abs,
    Sin,
    Cos,
}

impl NetExpr {
    pub fn parse(s: &str) -> Result<Self> {
        let mut p = Parser {
            s: s.as_bytes(),
            i: 0,
            depth: 0,
        };
        let e = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(p.err("unexpected input"));
        }
        Ok(e)
    }

    pub fn eval(&self, eps: f64) -> f64 {
        match self {
            NetExpr::Num(v) => *v,
            NetExpr::Eps => eps,
            NetExpr::Neg(a) => -a.eval(eps),
            NetExpr::Bin(op, a, b) => {
                let (x, y) = (a.eval(eps), b.eval(eps));
                match op {
                    '+' => x + y,
                    '-' => x - y,
                    '*' => x * y,
                    '/' => x / y,
                    _ => x.powf(y),
                }
            }
            NetExpr::Call(f, a) => {
                let x = a.eval(eps);
                match f {
                    Func::Ln => x.ln(),
                    Func::Exp => x.exp(),
                    Func::Sqrt => x.sqrt(),
                    Func::Abs => x.abs(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                }
            }
        }
    }

    pub fn net(&self, eps: &EpsGrid) -> Result<GenNumber> {
        GenNumber::real(eps, |e| self.eval(e))
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    depth: usize,
}

impl Parser<'_> {
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at offset {} in net expression", self.i))
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn enter(&mut self) -> Result<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.err("nesting too deep"));
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<NetExpr> {
        self.enter()?;
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            lhs = NetExpr::Bin(c as char, Box::new(lhs), Box::new(self.term()?));
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<NetExpr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.i += 1;
            lhs = NetExpr::Bin(c as char, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<NetExpr> {
        self.enter()?;
        let out = if self.peek() == Some(b'-') {
            self.i += 1;
            NetExpr::Neg(Box::new(self.unary()?))
        } else if self.peek() == Some(b'+') {
            self.i += 1;
            self.unary()?
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> Result<NetExpr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            // right associative; the exponent may carry a sign
            return Ok(NetExpr::Bin('^', Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<NetExpr> {
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.i += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.i;
                while self.i < self.s.len()
                    && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_')
                {
                    self.i += 1;
                }
                let word = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
                let func = match word {
                    "ln" | "log" => Some(Func::Ln),
                    "exp" => Some(Func::Exp),
                    "sqrt" => Some(Func::Sqrt),
                    "abs" => Some(Func::Abs),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                };
                match (word, func) {
                    ("eps", _) => Ok(NetExpr::Eps),
                    ("pi", _) => Ok(NetExpr::Num(std::f64::consts::PI)),
                    (_, Some(f)) if self.peek() == Some(b'(') => {
                        Ok(NetExpr::Call(f, Box::new(self.atom()?)))
                    }
                    ("log", _) => Ok(NetExpr::Call(
                        Func::Ln,
                        Box::new(NetExpr::Bin(
                            '/',
                            Box::new(NetExpr::Num(1.0)),
                            Box::new(NetExpr::Eps),
                        )),
                    )),
                    _ => Err(self.err(&format!("unknown name `{word}`"))),
                }
            }
            _ => Err(self.err("expected a number, name or `(`")),
        }
    }

    fn number(&mut self) -> Result<NetExpr> {
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
            self.i += 1;
        }
        if self.i < self.s.len() && matches!(self.s[self.i], b'e' | b'E') {
            let save = self.i;
            self.i += 1;
            if self.i < self.s.len() && matches!(self.s[self.i], b'+' | b'-') {
                self.i += 1;
            }
            let digits = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            if self.i == digits {
                // `e` without digits is not an exponent
                self.i = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
        text.parse::<f64>()
            .map(NetExpr::Num)
            .map_err(|_| self.err(&format!("bad number `{text}`")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    eps: f64,
    re: f64,
    #[serde(default)]
    im: f64,
}

pub fn write_gennumber_csv<W: Write>(u: &GenNumber, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for (&eps, v) in u.grid().values().iter().zip(u.values()) {
        wr.serialize(CsvRow {
            eps,
            re: v.re,
            im: v.im,
        })?;
    }
    wr.flush()?;
    Ok(())
}

/// Columns `eps,re[,im]`, eps strictly decreasing.
pub fn read_gennumber_csv<R: Read>(r: R) -> Result<GenNumber> {
    let mut rd = csv::Reader::from_reader(r);
    let mut eps = Vec::new();
    let mut vals = Vec::new();
    for row in rd.deserialize() {
        let row: CsvRow = row?;
        eps.push(row.eps);
        vals.push(Complex64::new(row.re, row.im));
    }
    GenNumber::new(EpsGrid::new(eps)?, vals)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenNumberJson {
    eps: Vec<f64>,
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
}

pub fn gennumber_to_json(u: &GenNumber) -> Result<String> {
    let rec = GenNumberJson {
        eps: u.grid().values().to_vec(),
        re: u.re(),
        im: (!u.is_real()).then(|| u.values().iter().map(|v| v.im).collect()),
    };
    Ok(serde_json::to_string_pretty(&rec)?)
}

pub fn gennumber_from_json(s: &str) -> Result<GenNumber> {
    let rec: GenNumberJson = serde_json::from_str(s)?;
    let im = rec.im.unwrap_or_else(|| vec![0.0; rec.re.len()]);
    if im.len() != rec.re.len() {
        return Err(Error::GridMismatch("re and im lengths differ".into()));
    }
    let vals = rec
        .re
        .iter()
        .zip(&im)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    GenNumber::new(EpsGrid::new(rec.eps)?, vals)
}

pub const GRIDFN_FORMAT: u32 = 1;

/// `metadata.json` of a stored grid function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFnMeta {
    pub format: u32,
    pub grid: SpatialGrid,
    pub eps: EpsGrid,
    /// One CSV per eps, relative to the directory.
    pub files: Vec<String>,
    #[serde(default)]
    pub note: Option<String>,
}

impl GridFnMeta {
    pub fn parse(s: &str) -> Result<Self> {
        let m: GridFnMeta = serde_json::from_str(s)?;
        if m.format != GRIDFN_FORMAT {
            return Err(Error::Parse(format!("unsupported format {}", m.format)));
        }
        if m.files.len() != m.eps.len() {
            return Err(Error::GridMismatch(format!(
                "{} files for {} epsilons",
                m.files.len(),
                m.eps.len()
            )));
        }
        for f in &m.files {
            let p = Path::new(f);
            if f.is_empty() || p.is_absolute() || p.components().count() != 1 || f.starts_with('.')
            {
                return Err(Error::Parse(format!(
                    "file name `{f}` must be a plain relative name"
                )));
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    re: f64,
    im: f64,
}

/// Writes `metadata.json` and `eps_XXX.csv` files into `dir`.
pub fn save_gridfn(u: &GridFn, dir: &Path, note: Option<&str>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let files: Vec<String> = (0..u.eps().len())
        .map(|k| format!("eps_{k:03}.csv"))
        .collect();
    for (f, s) in files.iter().zip(u.samples()) {
        let mut wr = csv::Writer::from_path(dir.join(f))?;
        for v in s {
            wr.serialize(NodeRow { re: v.re, im: v.im })?;
        }
        wr.flush()?;
    }
    let meta = GridFnMeta {
        format: GRIDFN_FORMAT,
        grid: u.grid().clone(),
        eps: u.eps().clone(),
        files,
        note: note.map(str::to_owned),
    };
    fs::write(
        dir.join("metadata.json"),
        serde_json::to_string_pretty(&meta)?,
    )?;
    Ok(())
}

pub fn load_gridfn(dir: &Path) -> Result<GridFn> {
    let meta = GridFnMeta::parse(&fs::read_to_string(dir.join("metadata.json"))?)?;
    let mut samples = Vec::with_capacity(meta.files.len());
    for f in &meta.files {
        let mut rd = csv::Reader::from_path(dir.join(f))?;
        let mut s = Vec::with_capacity(meta.grid.len());
        for row in rd.deserialize() {
            let row: NodeRow = row?;
            s.push(Complex64::new(row.re, row.im));
        }
        samples.push(s);
    }
    GridFn::new(meta.grid, meta.eps, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions() {
        let cases = [
            ("eps^2", 0.25),
            ("log", 2f64.ln()),
            ("ln(1/eps)^2", 2f64.ln().powi(2)),
            ("5*eps^-0.5", 5.0 * 2f64.sqrt()),
            ("2^3^2", 512.0),
            ("-eps + 1e-1", -0.4),
            ("exp(2*log(eps))", 0.25),
            ("sqrt(eps) * (1 + eps)", 0.5f64.sqrt() * 1.5),
            ("1.5E+2", 150.0),
        ];
        for (s, want) in cases {
            let v = NetExpr::parse(s).unwrap().eval(0.5);
            assert!((v - want).abs() < 1e-12, "{s}: {v}");
        }
        for bad in [
            "",
            "eps^",
            "(eps",
            "foo",
            "1..2",
            "eps eps",
            &"(".repeat(100),
        ] {
            assert!(NetExpr::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn gennumber_round_trips() {
        let g = EpsGrid::dyadic(1, 10).unwrap();
        let u = GenNumber::from_fn(&g, |e| Complex64::new(e, -e * e)).unwrap();
        let mut buf = Vec::new();
        write_gennumber_csv(&u, &mut buf).unwrap();
        assert_eq!(read_gennumber_csv(buf.as_slice()).unwrap(), u);
        assert_eq!(
            gennumber_from_json(&gennumber_to_json(&u).unwrap()).unwrap(),
            u
        );
        assert!(read_gennumber_csv("eps,re\n0.1,1\n0.2,1\n".as_bytes()).is_err());
        assert!(gennumber_from_json(r#"{"eps":[0.5],"re":[1,2]}"#).is_err());
    }

    #[test]
    fn gridfn_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = SpatialGrid::line(0.0, 1.0, 64).unwrap();
        let e = EpsGrid::dyadic(2, 4).unwrap();
        let u = GridFn::from_real_fn(&g, &e, |_, eps, x| x[0] / eps).unwrap();
        save_gridfn(&u, dir.path(), Some("test")).unwrap();
        assert_eq!(load_gridfn(dir.path()).unwrap(), u);
        let bad = r#"{"format":1,"grid":{"axes":[{"min":0,"max":1,"n":64}]},"eps":[0.5],"files":["../x"]}"#;
        assert!(GridFnMeta::parse(bad).is_err());
    }
}
