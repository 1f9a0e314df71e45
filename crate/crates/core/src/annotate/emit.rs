//! Contract blocks in an ACSL-like syntax around generated observer-update
//! pseudocode. Predicates are plain scalar arithmetic; quadratic forms are
//! expanded term by term.

use std::fmt::Write as _;

use super::cert::{verify_certificate, CertificateFile};
use super::grammar::{parse_predicate, Predicate};
use crate::error::{CertError, CertResult};
use crate::linalg::{norm2, Mat};
use crate::observer::{LtiModel, Observer};

/// One annotated update step: `assumes`/`requires` hold before `body`,
/// `ensures` after it.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationBlock {
    pub name: String,
    pub assumes: Vec<String>,
    pub requires: Vec<String>,
    pub ensures: Vec<String>,
    pub body: Vec<String>,
}

impl AnnotationBlock {
    /// Builds a block, grammar-checking every predicate.
    pub fn new(
        name: impl Into<String>,
        assumes: Vec<String>,
        requires: Vec<String>,
        ensures: Vec<String>,
        body: Vec<String>,
    ) -> CertResult<Self> {
        let b = AnnotationBlock {
            name: name.into(),
            assumes,
            requires,
            ensures,
            body,
        };
        b.predicates()?;
        if b.name.contains('\n')
            || b.body
                .iter()
                .any(|l| l.trim().is_empty() || l.contains('\n'))
        {
            return Err(CertError::Annotation(
                "names and body lines must be single non-blank lines".into(),
            ));
        }
        Ok(b)
    }

    fn clauses(&self) -> impl Iterator<Item = (&'static str, &String)> + '_ {
        self.assumes
            .iter()
            .map(|p| ("assumes", p))
            .chain(self.requires.iter().map(|p| ("requires", p)))
            .chain(self.ensures.iter().map(|p| ("ensures", p)))
    }

    /// All predicates parsed, in `assumes, requires, ensures` order.
    pub fn predicates(&self) -> CertResult<Vec<(&'static str, Predicate)>> {
        self.clauses()
            .map(|(kw, p)| Ok((kw, parse_predicate(p)?)))
            .collect()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        if !self.name.is_empty() {
            writeln!(s, "// {}", self.name).unwrap();
        }
        for (i, (kw, p)) in self.clauses().enumerate() {
            let lead = if i == 0 { "/*@" } else { "  @" };
            writeln!(s, "{lead} {kw} {p};").unwrap();
        }
        if self.clauses().next().is_none() {
            writeln!(s, "/*@").unwrap();
        }
        writeln!(s, "  @*/").unwrap();
        for line in &self.body {
            writeln!(s, "{line}").unwrap();
        }
        s
    }
}

/// Blocks separated by blank lines.
pub fn render_blocks(blocks: &[AnnotationBlock]) -> String {
    blocks
        .iter()
        .map(AnnotationBlock::render)
        .collect::<Vec<_>>()
        .join("\n")
}

/// Inverse of [`render_blocks`].
pub fn parse_blocks(text: &str) -> CertResult<Vec<AnnotationBlock>> {
    let err = |line: usize, msg: &str| CertError::Annotation(format!("line {line}: {msg}"));
    let mut blocks = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0;
    while i < lines.len() {
        if lines[i].trim().is_empty() {
            i += 1;
            continue;
        }
        let mut name = String::new();
        if let Some(n) = lines[i].strip_prefix("// ") {
            name = n.to_string();
            i += 1;
        }
        let (mut assumes, mut requires, mut ensures) = (Vec::new(), Vec::new(), Vec::new());
        let mut first = true;
        loop {
            let Some(line) = lines.get(i) else {
                return Err(err(i + 1, "unterminated contract"));
            };
            i += 1;
            if line.trim() == "@*/" {
                break;
            }
            let rest = if first {
                line.strip_prefix("/*@")
            } else {
                line.strip_prefix("  @")
            }
            .ok_or_else(|| err(i, "expected a contract line"))?;
            first = false;
            let rest = rest.trim();
            if rest.is_empty() {
                continue;
            }
            let pred = rest
                .strip_suffix(';')
                .ok_or_else(|| err(i, "missing `;`"))?;
            let (kw, pred) = pred
                .split_once(' ')
                .ok_or_else(|| err(i, "missing predicate"))?;
            match kw {
                "assumes" => assumes.push(pred.to_string()),
                "requires" => requires.push(pred.to_string()),
                "ensures" => ensures.push(pred.to_string()),
                other => return Err(err(i, &format!("unknown clause `{other}`"))),
            }
        }
        let mut body = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            body.push(lines[i].to_string());
            i += 1;
        }
        blocks.push(AnnotationBlock::new(
            name, assumes, requires, ensures, body,
        )?);
    }
    Ok(blocks)
}

/// `prefix` alone for a single variable, else `prefix1 … prefixN`.
pub fn variable_names(prefix: &str, n: usize) -> Vec<String> {
    if n == 1 {
        vec![prefix.to_string()]
    } else {
        (1..=n).map(|i| format!("{prefix}{i}")).collect()
    }
}

/// Sum of `c·a·b` terms with unit coefficients dropped and signs folded
/// into the joins. Zero terms are skipped; an empty sum renders as `0`.
fn render_sum(terms: &[(f64, String)]) -> String {
    let mut s = String::new();
    for (c, v) in terms.iter().filter(|(c, _)| *c != 0.0) {
        let neg = *c < 0.0;
        let mag = c.abs();
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if v.is_empty() {
            write!(s, "{mag}").unwrap();
        } else if mag == 1.0 {
            s.push_str(v);
        } else {
            write!(s, "{mag}*{v}").unwrap();
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// `eᵀPe` expanded over `vars`, terms in `(i, j)` order with `i ≤ j` and
/// cross terms carrying `P_ij + P_ji`.
pub fn quadratic_form(p: &Mat, vars: &[String]) -> String {
    let mut terms = Vec::new();
    for i in 0..vars.len() {
        for j in i..vars.len() {
            let c = if i == j {
                p[(i, i)]
            } else {
                p[(i, j)] + p[(j, i)]
            };
            terms.push((c, format!("{}*{}", vars[i], vars[j])));
        }
    }
    render_sum(&terms)
}

/// `eᵀPe <= level`.
pub fn ellipsoid_predicate(p: &Mat, level: f64, vars: &[String]) -> String {
    format!("{} <= {level}", quadratic_form(p, vars))
}

/// Sample contract: `requires x<=1`, `x=2*x`, `ensures x<=2`.
pub fn doubling_sample() -> AnnotationBlock {
    AnnotationBlock::new(
        "",
        Vec::new(),
        vec!["x<=1".into()],
        vec!["x<=2".into()],
        vec!["x=2*x;".into()],
    )
    .expect("sample block is well formed")
}

/// Terms of row `i` of `Σ M_k v_k`.
fn affine(rows: &[(&Mat, &[String])], i: usize) -> Vec<(f64, String)> {
    let mut terms = Vec::new();
    for (m, vars) in rows {
        for (j, v) in vars.iter().enumerate() {
            terms.push((m[(i, j)], v.clone()));
        }
    }
    terms
}

/// `d_v = …` for every state, then `v = v + dt*d_v`, so every right-hand
/// side reads the pre-step state.
fn euler(out: &mut Vec<String>, states: &[String], rows: &[Vec<(f64, String)>]) {
    for (v, t) in states.iter().zip(rows) {
        out.push(format!("d_{v} = {};", render_sum(t)));
    }
    for v in states {
        out.push(format!("{v} = {v} + dt*d_{v};"));
    }
}

/// Explicit-Euler update lines of the observer; `dt` is left symbolic.
fn update_body(obs: &Observer, model: &LtiModel) -> Vec<String> {
    let n = model.n();
    let u = variable_names("u", model.m());
    let y = variable_names("y", model.p());
    let mut out = Vec::new();
    match obs {
        Observer::Output(o) => {
            let xh = variable_names("xhat", n);
            let r = variable_names("r", model.p());
            for (i, ri) in r.iter().enumerate() {
                let mut t = vec![(1.0, y[i].clone())];
                t.extend(
                    affine(&[(model.c(), &xh)], i)
                        .into_iter()
                        .map(|(c, v)| (-c, v)),
                );
                out.push(format!("{ri} = {};", render_sum(&t)));
            }
            let rows: Vec<_> = (0..n)
                .map(|i| affine(&[(model.a(), &xh), (model.b(), &u), (&o.l, &r)], i))
                .collect();
            euler(&mut out, &xh, &rows);
        }
        Observer::Uio(uo) => {
            let z = variable_names("z", n);
            let xh = variable_names("xhat", n);
            let tb = &uo.t * model.b();
            let rows: Vec<_> = (0..n)
                .map(|i| affine(&[(&uo.f, &z), (&tb, &u), (&uo.k, &y)], i))
                .collect();
            euler(&mut out, &z, &rows);
            for (i, xi) in xh.iter().enumerate() {
                let mut t = vec![(1.0, z[i].clone())];
                t.extend(affine(&[(&uo.h, &y)], i));
                out.push(format!("{xi} = {};", render_sum(&t)));
            }
        }
        Observer::Sliding(s) => {
            let n1 = s.n1();
            let p = model.p();
            let w = variable_names("w", n);
            let (w1, w2) = (&w[..n1], &w[n1..]);
            let ey = variable_names("ey", p);
            let pe = variable_names("pe", p);
            let nu = variable_names("nu", p);
            for j in 0..p {
                out.push(format!(
                    "{} = {};",
                    ey[j],
                    render_sum(&[(1.0, w2[j].clone()), (-1.0, y[j].clone())])
                ));
            }
            for j in 0..p {
                out.push(format!(
                    "{} = {};",
                    pe[j],
                    render_sum(&affine(&[(&s.p2, &ey)], j))
                ));
            }
            let sq: Vec<(f64, String)> = pe.iter().map(|v| (1.0, format!("{v}*{v}"))).collect();
            out.push(format!("s = sqrt({});", render_sum(&sq)));
            let gain = -s.rho * norm2(&s.d2);
            for j in 0..p {
                out.push(format!("{} = {gain}*{}/(s + {});", nu[j], pe[j], s.sigma));
            }
            let a22d = &s.a22 - &s.a22s;
            let mut rows = Vec::with_capacity(n);
            for i in 0..n1 {
                let mut t = affine(&[(&s.a11, w1), (&s.a12, w2), (&s.b1, &u)], i);
                t.extend(
                    affine(&[(&s.a12, &ey)], i)
                        .into_iter()
                        .map(|(c, v)| (-c, v)),
                );
                rows.push(t);
            }
            for j in 0..p {
                let mut t = affine(&[(&s.a21, w1), (&s.a22, w2), (&s.b2, &u)], j);
                t.extend(affine(&[(&a22d, &ey)], j).into_iter().map(|(c, v)| (-c, v)));
                t.push((1.0, nu[j].clone()));
                rows.push(t);
            }
            euler(&mut out, &w, &rows);
        }
    }
    out
}

fn norm_bound(vars: &[String], bound: f64) -> String {
    let sq: Vec<(f64, String)> = vars.iter().map(|v| (1.0, format!("{v}*{v}"))).collect();
    format!("{} <= {}", render_sum(&sq), bound * bound)
}

/// Contract blocks for a verified certificate.
///
/// Two blocks wrap the same update step: a nominal one with `E_n` as loop
/// invariant under faults below `f_max`, and a bounded-fault one with `E_f`
/// under faults below `f_max + σ̄`. Both assume the closed-loop `u`, `y`
/// envelopes. The error variables `e…` are ghost state in the observer's
/// own error convention. Refuses certificates that fail verification.
pub fn emit_annotations(
    cert: &CertificateFile,
    model: &LtiModel,
) -> CertResult<Vec<AnnotationBlock>> {
    let report = verify_certificate(cert, model);
    if let Some(why) = &report.refused {
        return Err(CertError::Refused(why.clone()));
    }
    if !report.passed() {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(CertError::Refused(format!(
            "failed checks: {}",
            names.join(", ")
        )));
    }
    let sm = match cert.channel {
        Some(i) => model.isolating(i)?,
        None => model.clone(),
    };
    let (n, m, p, q) = cert.dims();
    let e = variable_names("e", n);
    let f = variable_names("f", q);
    let th = &cert.thresholds;
    let envelope = vec![
        norm_bound(&variable_names("u", m), th.u_max),
        norm_bound(&variable_names("y", p), th.y_max),
    ];
    let body = update_body(&cert.observer, &sm);
    let mut blocks = Vec::new();
    for (suffix, set, fault_bound) in [
        ("nominal", "E_n", th.f_max),
        ("bounded_fault", "E_f", th.f_max + th.sigma_bar),
    ] {
        let el = cert
            .ellipsoid(set)
            .expect("verified certificates carry E_n and E_f");
        let inv = ellipsoid_predicate(&el.p, el.level, &e);
        let mut assumes = envelope.clone();
        assumes.push(norm_bound(&f, fault_bound));
        blocks.push(AnnotationBlock::new(
            format!("{}_{suffix}_step", cert.label),
            assumes,
            vec![inv.clone()],
            vec![inv],
            body.clone(),
        )?);
    }
    Ok(blocks)
}
