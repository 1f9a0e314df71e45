//! `.fdcert` certificate files: a line-oriented text format holding one
//! detector's matrices, invariant sets, gain witnesses and thresholds. The
//! grammar is in `docs/certificate-format.md`.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::design::DetectorDesign;
use crate::error::{CertError, CertResult};
use crate::gains::{
    check_lmi_feasibility, settling_time_bound, GainBounds, LmiCertificate, LmiKind, NormKind,
    Weighting,
};
use crate::linalg::{
    asymmetry, block, eig, hstack, lambda_max_sym, lambda_min_sym, norm2, symmetrize, vstack, Mat,
    TOL_DECOMP,
};
use crate::monitor::default_eps_v;
use crate::observer::{
    check_uio_algebra, LtiModel, Observer, ObserverKind, OutputObserver, SlidingModeObserver, Uio,
};

pub const CERT_SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "fdcert";

/// One invariant set `{e : eᵀPe ≤ level}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CertEllipsoid {
    pub name: String,
    pub p: Mat,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertThresholds {
    pub r_th: f64,
    pub theta_th: f64,
    pub eps: f64,
    pub eps_v: f64,
    pub t_s: f64,
    pub sigma_bar: f64,
    pub zeta: f64,
    pub zeta_bar: f64,
    pub f_max: f64,
    pub u_max: f64,
    pub y_max: f64,
}

impl CertThresholds {
    const NAMES: [&'static str; 11] = [
        "r_th",
        "theta_th",
        "eps",
        "eps_v",
        "t_s",
        "sigma_bar",
        "zeta",
        "zeta_bar",
        "f_max",
        "u_max",
        "y_max",
    ];

    fn values(&self) -> [f64; 11] {
        [
            self.r_th,
            self.theta_th,
            self.eps,
            self.eps_v,
            self.t_s,
            self.sigma_bar,
            self.zeta,
            self.zeta_bar,
            self.f_max,
            self.u_max,
            self.y_max,
        ]
    }

    fn from_values(v: [f64; 11]) -> Self {
        CertThresholds {
            r_th: v[0],
            theta_th: v[1],
            eps: v[2],
            eps_v: v[3],
            t_s: v[4],
            sigma_bar: v[5],
            zeta: v[6],
            zeta_bar: v[7],
            f_max: v[8],
            u_max: v[9],
            y_max: v[10],
        }
    }
}

/// Parsed or freshly built certificate.
///
/// `digest` is the SHA-256 of the serialized text above the digest line. It
/// is stored as read; [`verify_certificate`] recomputes and compares it.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateFile {
    pub schema_version: u32,
    /// Fingerprint of the synthesis model (the channel-isolating model for a UIO).
    pub model_hash: String,
    pub label: String,
    pub channel: Option<usize>,
    pub observer: Observer,
    pub e_eff: Mat,
    pub c_err: Mat,
    /// Plant input count; only the sliding-mode matrices carry it.
    pub inputs: usize,
    pub gains: GainBounds,
    pub thresholds: CertThresholds,
    pub ellipsoids: Vec<CertEllipsoid>,
    pub lmis: Vec<LmiCertificate>,
    pub digest: String,
}

impl CertificateFile {
    pub fn from_design(d: &DetectorDesign) -> Self {
        let th = &d.thresholds;
        let mut ellipsoids = vec![
            CertEllipsoid {
                name: "E_n".into(),
                p: d.p.clone(),
                level: th.zeta,
            },
            CertEllipsoid {
                name: "E_f".into(),
                p: d.p.clone(),
                level: th.zeta_bar,
            },
        ];
        if let Some(s) = &d.sliding {
            ellipsoids.push(CertEllipsoid {
                name: "E_s".into(),
                p: s.e_s.p().clone(),
                level: s.e_s.level(),
            });
            ellipsoids.push(CertEllipsoid {
                name: "E_e".into(),
                p: s.e_e.p().clone(),
                level: s.e_e.level(),
            });
        }
        let mut cert = CertificateFile {
            schema_version: CERT_SCHEMA_VERSION,
            model_hash: d.model.fingerprint(),
            label: d.label.clone(),
            channel: d.channel,
            observer: d.observer.clone(),
            e_eff: d.e_eff.clone(),
            c_err: d.c_err.clone(),
            inputs: d.model.m(),
            gains: th.gains,
            thresholds: CertThresholds {
                r_th: d.r_th,
                theta_th: th.theta_th,
                eps: d.eps,
                eps_v: default_eps_v(th.zeta, d.t_s),
                t_s: d.t_s,
                sigma_bar: d.sigma_bar,
                zeta: th.zeta,
                zeta_bar: th.zeta_bar,
                f_max: th.f_max,
                u_max: d.u_max,
                y_max: d.y_max,
            },
            ellipsoids,
            lmis: d.certificates.clone(),
            digest: String::new(),
        };
        cert.seal();
        cert
    }

    /// Recomputes and stores the digest.
    pub fn seal(&mut self) {
        self.digest = digest_of(&self.body());
    }

    pub fn ellipsoid(&self, name: &str) -> Option<&CertEllipsoid> {
        self.ellipsoids.iter().find(|e| e.name == name)
    }

    pub fn a_err(&self) -> &Mat {
        self.observer.error_dynamics()
    }

    /// `(n, m, p, q)`: states, inputs, outputs, fault columns of `E_eff`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (
            self.observer.state_dim(),
            self.inputs,
            self.c_err.nrows(),
            self.e_eff.ncols(),
        )
    }

    pub fn to_text(&self) -> String {
        let mut s = self.body();
        writeln!(s, "digest {}", self.digest).unwrap();
        s
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_text())
    }

    pub fn read(path: &Path) -> CertResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CertError::Io(format!("{}: {e}", path.display())))?;
        parse_certificate(&text)
    }

    fn body(&self) -> String {
        let mut w = String::new();
        let (n, m, p, q) = self.dims();
        writeln!(w, "{MAGIC}").unwrap();
        writeln!(w, "schema_version {}", self.schema_version).unwrap();
        writeln!(w, "model_hash {}", self.model_hash).unwrap();
        writeln!(w, "label {}", self.label).unwrap();
        writeln!(w, "kind {}", self.observer.kind().as_str()).unwrap();
        match self.channel {
            Some(c) => writeln!(w, "channel {c}").unwrap(),
            None => writeln!(w, "channel none").unwrap(),
        }
        writeln!(w, "dims {n} {m} {p} {q}").unwrap();
        writeln!(
            w,
            "gains {} {} {}",
            self.gains.norm_kind.as_str(),
            num(self.gains.pi),
            num(self.gains.pi_bar)
        )
        .unwrap();
        for (name, v) in CertThresholds::NAMES.iter().zip(self.thresholds.values()) {
            writeln!(w, "scalar {name} {}", num(v)).unwrap();
        }
        for (name, v) in observer_scalars(&self.observer) {
            writeln!(w, "scalar {name} {}", num(v)).unwrap();
        }
        for (name, mtx) in observer_matrices(&self.observer) {
            write_matrix(&mut w, name, mtx);
        }
        write_matrix(&mut w, "E_eff", &self.e_eff);
        write_matrix(&mut w, "C_err", &self.c_err);
        writeln!(w, "ellipsoids {}", self.ellipsoids.len()).unwrap();
        for e in &self.ellipsoids {
            writeln!(w, "ellipsoid {} {}", e.name, num(e.level)).unwrap();
            write_matrix(&mut w, "P", &e.p);
        }
        writeln!(w, "lmis {}", self.lmis.len()).unwrap();
        for c in &self.lmis {
            writeln!(
                w,
                "lmi {} {} {} {}",
                c.kind.as_str(),
                num(c.rho),
                opt_num(c.upsilon),
                opt_num(c.phi)
            )
            .unwrap();
            write_matrix(&mut w, "Q", &c.q);
        }
        w
    }
}

fn digest_of(body: &str) -> String {
    crate::observer::hex(&Sha256::digest(body.as_bytes()))
}

/// 17 significant digits: enough for a bit-exact round trip.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), num)
}

fn write_matrix(w: &mut String, name: &str, m: &Mat) {
    writeln!(w, "matrix {name} {} {}", m.nrows(), m.ncols()).unwrap();
    if m.ncols() == 0 {
        return;
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| num(m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" ")).unwrap();
    }
}

fn observer_scalars(o: &Observer) -> Vec<(&'static str, f64)> {
    match o {
        Observer::Sliding(s) => vec![("rho", s.rho), ("sigma", s.sigma)],
        _ => Vec::new(),
    }
}

fn observer_matrices(o: &Observer) -> Vec<(&'static str, &Mat)> {
    match o {
        Observer::Output(o) => vec![("L", &o.l), ("A_err", &o.a_err)],
        Observer::Uio(u) => vec![
            ("F", &u.f),
            ("T", &u.t),
            ("K", &u.k),
            ("H", &u.h),
            ("K1", &u.k1),
            ("K2", &u.k2),
        ],
        Observer::Sliding(s) => vec![
            ("T_o", &s.t_o),
            ("T_o_inv", &s.t_o_inv),
            ("A11", &s.a11),
            ("A12", &s.a12),
            ("A21", &s.a21),
            ("A22", &s.a22),
            ("B1", &s.b1),
            ("B2", &s.b2),
            ("D2", &s.d2),
            ("A22s", &s.a22s),
            ("P2", &s.p2),
            ("G_l", &s.g_l),
            ("G_n", &s.g_n),
            ("A_err", &s.a_err),
            ("D2_pinv", &s.d2_pinv),
        ],
    }
}

fn perr(line: usize, msg: impl Into<String>) -> CertError {
    CertError::Parse {
        line,
        msg: msg.into(),
    }
}

struct Reader<'a> {
    lines: Vec<&'a str>,
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Next line as whitespace-separated tokens with its 1-based number.
    fn next(&mut self, what: &str) -> CertResult<(usize, Vec<&'a str>)> {
        let Some(line) = self.lines.get(self.pos) else {
            return Err(perr(
                self.lines.len() + 1,
                format!("unexpected end of file, expected {what}"),
            ));
        };
        self.pos += 1;
        Ok((self.pos, line.split_whitespace().collect()))
    }

    /// Next line, which must read `key v1 .. v_arity`; returns the values.
    fn keyed(&mut self, key: &str, arity: usize) -> CertResult<(usize, Vec<&'a str>)> {
        let (line, toks) = self.next(&format!("`{key}`"))?;
        if toks.first() != Some(&key) || toks.len() != arity + 1 {
            return Err(perr(
                line,
                format!(
                    "expected `{key}` with {arity} value(s), found `{}`",
                    toks.join(" ")
                ),
            ));
        }
        Ok((line, toks[1..].to_vec()))
    }

    fn scalar(&mut self, name: &str) -> CertResult<f64> {
        let (line, toks) = self.keyed("scalar", 2)?;
        if toks[0] != name {
            return Err(perr(
                line,
                format!("expected scalar `{name}`, found `{}`", toks[0]),
            ));
        }
        parse_num(toks[1], line)
    }

    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> CertResult<Mat> {
        let (line, toks) = self.keyed("matrix", 3)?;
        if toks[0] != name {
            return Err(perr(
                line,
                format!("expected matrix `{name}`, found `{}`", toks[0]),
            ));
        }
        let (r, c) = (parse_usize(toks[1], line)?, parse_usize(toks[2], line)?);
        if (r, c) != (rows, cols) {
            return Err(CertError::Dimension(format!(
                "line {line}: matrix `{name}` is {r}x{c}, expected {rows}x{cols}"
            )));
        }
        let mut m = Mat::zeros(rows, cols);
        if cols == 0 {
            return Ok(m);
        }
        for i in 0..rows {
            let (line, toks) = self.next(&format!("row {} of `{name}`", i + 1))?;
            if toks.len() != cols {
                return Err(CertError::Dimension(format!(
                    "line {line}: row {} of `{name}` has {} entries, expected {cols}",
                    i + 1,
                    toks.len()
                )));
            }
            for (j, t) in toks.iter().enumerate() {
                m[(i, j)] = parse_num(t, line)?;
            }
        }
        Ok(m)
    }
}

fn parse_num(tok: &str, line: usize) -> CertResult<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(perr(line, format!("`{tok}` is not a finite number"))),
    }
}

fn parse_usize(tok: &str, line: usize) -> CertResult<usize> {
    tok.parse()
        .map_err(|_| perr(line, format!("`{tok}` is not a count")))
}

fn parse_opt(tok: &str, line: usize) -> CertResult<Option<f64>> {
    if tok == "none" {
        Ok(None)
    } else {
        parse_num(tok, line).map(Some)
    }
}

/// Parses and structurally validates a certificate.
///
/// Checks shapes against the declared dimensions, rejects negative or
/// non-finite levels and ellipsoids whose `P` is not positive definite.
/// Symmetry, identities and the digest are left to [`verify_certificate`].
pub fn parse_certificate(text: &str) -> CertResult<CertificateFile> {
    let mut r = Reader {
        lines: text.lines().collect(),
        pos: 0,
    };
    let (line, toks) = r.next("the file header")?;
    if toks != [MAGIC] {
        return Err(CertError::Schema(format!(
            "line {line}: not a certificate file"
        )));
    }
    let (line, v) = r.keyed("schema_version", 1)?;
    let schema_version: u32 = v[0].parse().map_err(|_| perr(line, "bad schema version"))?;
    if schema_version != CERT_SCHEMA_VERSION {
        return Err(CertError::Schema(format!(
            "line {line}: schema version {schema_version} is not supported (expected {CERT_SCHEMA_VERSION})"
        )));
    }
    let (line, v) = r.keyed("model_hash", 1)?;
    if v[0].len() != 64 || !v[0].bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(perr(line, "model hash must be 64 hex digits"));
    }
    let model_hash = v[0].to_string();
    let label = r.keyed("label", 1)?.1[0].to_string();
    let (line, v) = r.keyed("kind", 1)?;
    let kind = ObserverKind::parse(v[0])
        .ok_or_else(|| perr(line, format!("unknown observer kind `{}`", v[0])))?;
    let (line, v) = r.keyed("channel", 1)?;
    let channel = if v[0] == "none" {
        None
    } else {
        Some(parse_usize(v[0], line)?)
    };
    let (line, v) = r.keyed("dims", 4)?;
    let [n, m, p, q] = [0, 1, 2, 3].map(|i| parse_usize(v[i], line));
    let (n, m, p, q) = (n?, m?, p?, q?);
    if n == 0 || p == 0 || p > n {
        return Err(CertError::Dimension(format!(
            "line {line}: need 0 < outputs ≤ states, got n={n}, p={p}"
        )));
    }
    let (line, v) = r.keyed("gains", 3)?;
    let norm_kind =
        NormKind::parse(v[0]).ok_or_else(|| perr(line, format!("unknown norm `{}`", v[0])))?;
    let gains = GainBounds {
        pi: parse_num(v[1], line)?,
        pi_bar: parse_num(v[2], line)?,
        norm_kind,
    };
    let mut tv = [0.0; 11];
    for (slot, name) in tv.iter_mut().zip(CertThresholds::NAMES) {
        *slot = r.scalar(name)?;
    }
    let thresholds = CertThresholds::from_values(tv);

    let observer = match kind {
        ObserverKind::Output => Observer::Output(OutputObserver {
            l: r.matrix("L", n, p)?,
            a_err: r.matrix("A_err", n, n)?,
        }),
        ObserverKind::Uio => Observer::Uio(Uio {
            f: r.matrix("F", n, n)?,
            t: r.matrix("T", n, n)?,
            k: r.matrix("K", n, p)?,
            h: r.matrix("H", n, p)?,
            k1: r.matrix("K1", n, p)?,
            k2: r.matrix("K2", n, p)?,
        }),
        ObserverKind::Sliding => {
            let rho = r.scalar("rho")?;
            let sigma = r.scalar("sigma")?;
            let n1 = n - p;
            Observer::Sliding(SlidingModeObserver {
                t_o: r.matrix("T_o", n, n)?,
                t_o_inv: r.matrix("T_o_inv", n, n)?,
                a11: r.matrix("A11", n1, n1)?,
                a12: r.matrix("A12", n1, p)?,
                a21: r.matrix("A21", p, n1)?,
                a22: r.matrix("A22", p, p)?,
                b1: r.matrix("B1", n1, m)?,
                b2: r.matrix("B2", p, m)?,
                d2: r.matrix("D2", p, q)?,
                a22s: r.matrix("A22s", p, p)?,
                p2: r.matrix("P2", p, p)?,
                g_l: r.matrix("G_l", n, p)?,
                g_n: r.matrix("G_n", n, p)?,
                rho,
                sigma,
                a_err: r.matrix("A_err", n, n)?,
                d2_pinv: r.matrix("D2_pinv", q, p)?,
            })
        }
    };
    let e_eff = r.matrix("E_eff", n, q)?;
    let c_err = r.matrix("C_err", p, n)?;

    let (line, v) = r.keyed("ellipsoids", 1)?;
    let count = parse_usize(v[0], line)?;
    let mut ellipsoids: Vec<CertEllipsoid> = Vec::with_capacity(count.min(8));
    for _ in 0..count {
        let (line, v) = r.keyed("ellipsoid", 2)?;
        let name = v[0].to_string();
        let dim = match name.as_str() {
            "E_s" => p,
            "E_n" | "E_f" | "E_e" => n,
            other => return Err(perr(line, format!("unknown set `{other}`"))),
        };
        if ellipsoids.iter().any(|e| e.name == name) {
            return Err(perr(line, format!("set `{name}` appears twice")));
        }
        let level = parse_num(v[1], line)?;
        if level < 0.0 {
            return Err(perr(
                line,
                format!("level of `{name}` is negative ({level})"),
            ));
        }
        let pm = r.matrix("P", dim, dim)?;
        if !(lambda_min_sym(&symmetrize(&pm)) > 0.0) {
            return Err(CertError::NotPositiveDefinite(name));
        }
        ellipsoids.push(CertEllipsoid { name, p: pm, level });
    }
    for required in ["E_n", "E_f"] {
        if !ellipsoids.iter().any(|e| e.name == required) {
            return Err(CertError::Schema(format!("set `{required}` is missing")));
        }
    }

    let (line, v) = r.keyed("lmis", 1)?;
    let count = parse_usize(v[0], line)?;
    let mut lmis = Vec::with_capacity(count.min(8));
    for _ in 0..count {
        let (line, v) = r.keyed("lmi", 4)?;
        let kind = LmiKind::parse(v[0])
            .ok_or_else(|| perr(line, format!("unknown LMI kind `{}`", v[0])))?;
        let rho = parse_num(v[1], line)?;
        let upsilon = parse_opt(v[2], line)?;
        let phi = parse_opt(v[3], line)?;
        let q = r.matrix("Q", n, n)?;
        lmis.push(LmiCertificate {
            kind,
            rho,
            q,
            upsilon,
            phi,
        });
    }
    let (line, v) = r.keyed("digest", 1)?;
    if v[0].len() != 64 || !v[0].bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(perr(line, "digest must be 64 hex digits"));
    }
    let digest = v[0].to_string();
    if let Some(extra) = r.lines[r.pos..].iter().position(|l| !l.trim().is_empty()) {
        return Err(perr(r.pos + extra + 1, "content after the digest line"));
    }
    Ok(CertificateFile {
        schema_version,
        model_hash,
        label,
        channel,
        observer,
        e_eff,
        c_err,
        inputs: m,
        gains,
        thresholds,
        ellipsoids,
        lmis,
        digest,
    })
}

/// One verification check. `margin > 0` iff it passed; for tolerance checks
/// it is the tolerance minus the defect, for boolean checks `±1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub label: String,
    /// Set when the certificate does not belong to the model; no other
    /// checks are run then.
    pub refused: Option<String>,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.refused.is_none() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn min_margin(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.margin)
            .fold(f64::INFINITY, f64::min)
    }

    /// Plain-text report, one `check` line per check and a closing `verify` line.
    pub fn render(&self) -> String {
        let mut s = String::new();
        if let Some(why) = &self.refused {
            writeln!(s, "verify {} REFUSED {why}", self.label).unwrap();
            return s;
        }
        for c in &self.checks {
            writeln!(
                s,
                "check {} {} {} margin={:.3e}",
                self.label,
                c.name.replace(' ', "_"),
                if c.passed { "pass" } else { "FAIL" },
                c.margin
            )
            .unwrap();
        }
        writeln!(
            s,
            "verify {} {} checks={} min_margin={:.3e}",
            self.label,
            if self.passed() { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.min_margin()
        )
        .unwrap();
        s
    }

    fn push(&mut self, name: impl Into<String>, margin: f64) {
        self.checks.push(CheckResult {
            name: name.into(),
            passed: margin > 0.0,
            margin,
        });
    }

    fn push_bool(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name, if ok { 1.0 } else { -1.0 });
    }

    /// `tol − defect`.
    fn push_defect(&mut self, name: impl Into<String>, defect: f64, tol: f64) {
        self.push(
            name,
            if defect.is_nan() {
                f64::NEG_INFINITY
            } else {
                tol - defect
            },
        );
    }

    fn push_relative(&mut self, name: impl Into<String>, actual: f64, expected: f64) {
        self.push_defect(name, rel_defect(actual, expected), REL_TOL);
    }
}

const REL_TOL: f64 = 1e-12;

fn rel_defect(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

/// Re-checks a certificate against the full plant model.
///
/// Binding comes first: the certificate's model hash must match the model
/// (channel-isolated for a UIO), otherwise the report is refused. Then the
/// digest, the observer identities, stability, the invariant sets, every
/// gain witness and the threshold arithmetic are checked, each with a margin.
pub fn verify_certificate(cert: &CertificateFile, model: &LtiModel) -> VerifyReport {
    let mut rep = VerifyReport {
        label: cert.label.clone(),
        refused: None,
        checks: Vec::new(),
    };
    let bound = match (cert.observer.kind(), cert.channel) {
        (ObserverKind::Uio, Some(i)) => model.isolating(i).map_err(|e| e.to_string()),
        (ObserverKind::Uio, None) => Err("a UIO certificate must name its channel".into()),
        (_, Some(_)) => Err("only UIO certificates carry a channel".into()),
        (_, None) => Ok(model.clone()),
    };
    let sm = match bound {
        Ok(m) => m,
        Err(why) => {
            rep.refused = Some(why);
            return rep;
        }
    };
    let hash = sm.fingerprint();
    if hash != cert.model_hash {
        rep.refused = Some(format!(
            "certificate is bound to model {}, not {}",
            &cert.model_hash[..12],
            &hash[..12]
        ));
        return rep;
    }
    let (n, m, p, q) = cert.dims();
    if (n, m, p) != (sm.n(), sm.m(), sm.p()) || cert.c_err.ncols() != n {
        rep.refused = Some(format!(
            "certificate dimensions {n}/{m}/{p} do not match the model {}/{}/{}",
            sm.n(),
            sm.m(),
            sm.p()
        ));
        return rep;
    }

    rep.push_bool("digest", digest_of(&cert.body()) == cert.digest);
    let a_err = cert.a_err();
    let eps = cert.thresholds.eps;
    let expected_maps: Option<(Mat, Mat)> = match &cert.observer {
        Observer::Output(o) => {
            let tol = eps * 1f64.max(norm2(sm.a()));
            rep.push_defect(
                "A_err = A - LC",
                norm2(&(a_err - (sm.a() - &o.l * sm.c()))),
                tol,
            );
            (q == sm.e_bar().ncols()).then(|| (sm.e_bar(), sm.c().clone()))
        }
        Observer::Uio(u) => {
            for (name, v) in check_uio_algebra(u, &sm, eps).entries() {
                rep.push_defect(name, v, eps);
            }
            (q == sm.nf()).then(|| (&u.t * sm.e_f(), sm.c().clone()))
        }
        Observer::Sliding(s) => {
            sliding_identities(&mut rep, s, &sm);
            let n1 = s.n1();
            Some((
                vstack(&[&Mat::zeros(n1, s.d2.ncols()), &s.d2]),
                hstack(&[&Mat::zeros(p, n1), &Mat::identity(p, p)]),
            ))
        }
    };
    match expected_maps {
        Some((e_eff, c_err)) if e_eff.shape() == cert.e_eff.shape() => {
            rep.push_defect(
                "E_eff",
                norm2(&(&cert.e_eff - &e_eff)),
                TOL_DECOMP * 1f64.max(norm2(&e_eff)),
            );
            rep.push_defect(
                "C_err",
                norm2(&(&cert.c_err - &c_err)),
                TOL_DECOMP * 1f64.max(norm2(&c_err)),
            );
        }
        _ => rep.push_bool("E_eff shape", false),
    }
    rep.push(
        "error dynamics Hurwitz",
        eig(a_err).map_or(f64::NEG_INFINITY, |s| -s.max_real_part),
    );

    for e in &cert.ellipsoids {
        rep.push_defect(
            format!("{} symmetric", e.name),
            asymmetry(&e.p),
            1e-10 * 1f64.max(norm2(&e.p)),
        );
        rep.push(
            format!("{} positive definite", e.name),
            lambda_min_sym(&symmetrize(&e.p)),
        );
    }
    let (Some(e_n), Some(e_f)) = (cert.ellipsoid("E_n"), cert.ellipsoid("E_f")) else {
        rep.push_bool("E_n and E_f present", false);
        return rep;
    };
    let pn = &e_n.p;
    rep.push_defect(
        "E_n and E_f share P",
        norm2(&(pn - &e_f.p)),
        REL_TOL * norm2(pn),
    );
    rep.push(
        "E_n inside E_f",
        e_f.level - e_n.level + REL_TOL * e_f.level.abs().max(1.0),
    );
    match &cert.observer {
        Observer::Sliding(s) => sliding_metric(&mut rep, s, cert, pn),
        _ => {
            let lyap = a_err.transpose() * pn + pn * a_err;
            rep.push(
                "metric decreases along the error",
                -lambda_max_sym(&symmetrize(&lyap)),
            );
        }
    }

    for c in &cert.lmis {
        let weighting = if c.kind.uses_state_metric() {
            Weighting::StateMetric(symmetrize(pn))
        } else {
            Weighting::Output(cert.c_err.clone())
        };
        let name = c.kind.as_str();
        match check_lmi_feasibility(c, a_err, &cert.e_eff, &weighting) {
            Ok(chk) => rep.push(format!("{name} feasible"), chk.margin),
            Err(_) => rep.push(format!("{name} feasible"), f64::NEG_INFINITY),
        }
        let gain = if c.kind.uses_state_metric() {
            cert.gains.pi_bar
        } else {
            cert.gains.pi
        };
        rep.push(format!("{name} bound covers gain"), c.rho - gain);
    }
    rep.push_bool(
        "residual and state witnesses present",
        cert.lmis.iter().any(|c| c.kind.uses_state_metric())
            && cert.lmis.iter().any(|c| !c.kind.uses_state_metric()),
    );

    let th = &cert.thresholds;
    let g = &cert.gains;
    let f_max = th.r_th / g.pi;
    let zeta = (g.pi_bar * f_max).powi(2);
    let zeta_bar = (zeta.sqrt() + g.pi_bar * th.sigma_bar).powi(2);
    rep.push_relative("f_max = r_th/pi", th.f_max, f_max);
    rep.push_relative("zeta", th.zeta, zeta);
    rep.push_relative("zeta_bar", th.zeta_bar, zeta_bar);
    rep.push_relative("theta_th", th.theta_th, norm2(&cert.e_eff) * f_max);
    rep.push_relative("eps_V", th.eps_v, default_eps_v(th.zeta, th.t_s));
    rep.push_relative("E_n level", e_n.level, th.zeta);
    rep.push_relative("E_f level", e_f.level, th.zeta_bar);
    match &cert.observer {
        Observer::Sliding(_) => rep.push("t_s positive", th.t_s),
        _ => match settling_time_bound(a_err) {
            Ok(t_s) => rep.push_relative("t_s", th.t_s, t_s),
            Err(_) => rep.push("t_s", f64::NEG_INFINITY),
        },
    }
    rep
}

fn sliding_identities(rep: &mut VerifyReport, s: &SlidingModeObserver, sm: &LtiModel) {
    let (n, p) = (sm.n(), sm.p());
    let n1 = s.n1();
    let e_bar = sm.e_bar();
    let scale = 1f64.max(norm2(&s.t_o))
        * 1f64.max(norm2(&s.t_o_inv))
        * 1f64
            .max(norm2(sm.a()))
            .max(norm2(sm.b()))
            .max(norm2(&e_bar))
            .max(norm2(sm.c()));
    let tol = TOL_DECOMP * scale;
    let z12 = Mat::zeros(n1, p);
    rep.push_defect(
        "T_o T_o_inv = I",
        norm2(&(&s.t_o * &s.t_o_inv - Mat::identity(n, n))),
        tol,
    );
    let ar = block(&[&[&s.a11, &s.a12], &[&s.a21, &s.a22]]);
    rep.push_defect(
        "regular form of A",
        norm2(&(&s.t_o * sm.a() * &s.t_o_inv - ar)),
        tol,
    );
    rep.push_defect(
        "regular form of B",
        norm2(&(&s.t_o * sm.b() - vstack(&[&s.b1, &s.b2]))),
        tol,
    );
    if e_bar.ncols() == s.d2.ncols() {
        let er = vstack(&[&Mat::zeros(n1, s.d2.ncols()), &s.d2]);
        rep.push_defect(
            "regular form of faults",
            norm2(&(&s.t_o * &e_bar - er)),
            tol,
        );
    } else {
        rep.push_bool("regular form of faults", false);
    }
    let cr = hstack(&[&Mat::zeros(p, n1), &Mat::identity(p, p)]);
    rep.push_defect("regular form of C", norm2(&(sm.c() * &s.t_o_inv - cr)), tol);
    let a_err = block(&[&[&s.a11, &z12], &[&s.a21, &s.a22s]]);
    rep.push_defect("A_err structure", norm2(&(&s.a_err - a_err)), tol);
    let g_l = &s.t_o_inv * vstack(&[&s.a12, &(&s.a22 - &s.a22s)]);
    rep.push_defect("G_l", norm2(&(&s.g_l - g_l)), tol);
    let g_n = &s.t_o_inv * vstack(&[&z12, &Mat::identity(p, p)]);
    rep.push_defect("G_n", norm2(&(&s.g_n - g_n)), tol);
    let q = s.d2.ncols();
    rep.push_defect(
        "D2 left inverse",
        norm2(&(&s.d2_pinv * &s.d2 - Mat::identity(q, q))),
        TOL_DECOMP * 1f64.max(norm2(&s.d2) * norm2(&s.d2_pinv)),
    );
    let lyap2 = s.a22s.transpose() * &s.p2 + &s.p2 * &s.a22s + Mat::identity(p, p);
    rep.push_defect(
        "P2 Lyapunov",
        norm2(&lyap2),
        TOL_DECOMP * 1f64.max(norm2(&s.p2) * norm2(&s.a22s)),
    );
    rep.push("injection parameters positive", s.rho.min(s.sigma));
}

fn sliding_metric(
    rep: &mut VerifyReport,
    s: &SlidingModeObserver,
    cert: &CertificateFile,
    pn: &Mat,
) {
    let n1 = s.n1();
    let p = s.p2.nrows();
    let p1 = pn.view((0, 0), (n1, n1)).into_owned();
    let lyap1 = s.a11.transpose() * &p1 + &p1 * &s.a11 + Mat::identity(n1, n1);
    let tol = TOL_DECOMP * 1f64.max(norm2(&p1) * norm2(&s.a11));
    rep.push_defect(
        "P1 Lyapunov",
        if n1 == 0 { 0.0 } else { norm2(&lyap1) },
        tol,
    );
    let p22 = pn.view((n1, n1), (p, p)).into_owned();
    rep.push_defect(
        "metric output block is P2",
        norm2(&(p22 - &s.p2)),
        REL_TOL * norm2(&s.p2),
    );
    let off = if n1 == 0 {
        0.0
    } else {
        pn.view((0, n1), (n1, p)).amax()
    };
    rep.push_defect("metric block diagonal", off, REL_TOL * norm2(pn));
    let alpha = 4.0 * s.sigma * s.sigma / lambda_min_sym(&s.p2);
    match (cert.ellipsoid("E_s"), cert.ellipsoid("E_e")) {
        (Some(es), Some(ee)) => {
            rep.push_defect(
                "E_s metric is P2",
                norm2(&(&es.p - &s.p2)),
                REL_TOL * norm2(&s.p2),
            );
            rep.push_relative("E_s level", es.level, alpha);
            rep.push_defect("E_e metric", norm2(&(&ee.p - pn)), REL_TOL * norm2(pn));
            rep.push(
                "E_e holds the boundary layer",
                ee.level / (2.0 * alpha) - 1.0 + REL_TOL,
            );
        }
        _ => rep.push_bool("sliding sets present", false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::design_detectors;
    use crate::plant::{model_from_str, ModelFile};

    fn heli() -> ModelFile {
        model_from_str(include_str!("../../../../fixtures/helicopter.toml")).unwrap()
    }

    fn certs(kind: ObserverKind) -> (ModelFile, Vec<CertificateFile>) {
        let mf = heli();
        let d = design_detectors(&mf, kind).unwrap();
        let c = d.iter().map(CertificateFile::from_design).collect();
        (mf, c)
    }

    #[test]
    fn fresh_certificates_verify() {
        for kind in [
            ObserverKind::Output,
            ObserverKind::Uio,
            ObserverKind::Sliding,
        ] {
            let (mf, certs) = certs(kind);
            for c in &certs {
                let text = c.to_text();
                let back = parse_certificate(&text).unwrap();
                assert_eq!(&back, c);
                assert_eq!(back.to_text(), text);
                let rep = verify_certificate(&back, &mf.model);
                assert!(rep.passed(), "{}", rep.render());
                assert!(rep.min_margin() > 0.0);
            }
        }
    }

    #[test]
    fn binding_and_tamper() {
        let (mf, certs) = certs(ObserverKind::Uio);
        // uio1's certificate does not belong to channel 2
        let mut wrong = certs[0].clone();
        wrong.channel = Some(1);
        assert!(verify_certificate(&wrong, &mf.model).refused.is_some());

        let mut asym = certs[1].clone();
        asym.ellipsoids[0].p[(0, 1)] += 1e-3;
        asym.seal();
        let rep = verify_certificate(&asym, &mf.model);
        assert!(
            rep.failures().any(|c| c.name == "E_n symmetric"),
            "{}",
            rep.render()
        );

        let text = certs[2].to_text();
        let negated = text.replacen("ellipsoid E_n ", "ellipsoid E_n -", 1);
        assert!(matches!(
            parse_certificate(&negated),
            Err(CertError::Parse { .. })
        ));
        let cut: String = text.lines().take(40).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            parse_certificate(&cut),
            Err(CertError::Parse { line: 41, .. })
        ));
        let v2 = text.replacen("schema_version 1", "schema_version 2", 1);
        assert!(matches!(parse_certificate(&v2), Err(CertError::Schema(_))));
    }
}
