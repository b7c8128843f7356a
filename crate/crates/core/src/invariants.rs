//! Dispersive symbol, perturbative roots about the double eigenvalue,
//! residue formulas and the semisimple central-invariant formula.

use crate::coefffield::{CoeffExpr, FieldError};
use crate::localops::GradedPencil;
use crate::rational::Q;

/// Polynomial in `p`, indexed by degree.
pub type PPoly = Vec<CoeffExpr>;
/// Polynomial in `λ` with `PPoly` coefficients, indexed by λ-degree.
pub type LamP = Vec<PPoly>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvError {
    #[error("leading coefficient of ∂^{order} at ε^{layer} entry ({i},{j}) is not jet-free")]
    NotJetFree { layer: usize, i: usize, j: usize, order: usize },
    #[error("determinant is not quadratic in λ")]
    NotQuadratic,
    #[error("odd leading discriminant order {0} (Puiseux regime)")]
    Puiseux(usize),
    #[error("simple root at p = 0: use the semisimple central-invariant formula")]
    Semisimple,
    #[error("λ̂ is not a double root of det g_λ")]
    NotDoubleRoot,
    #[error("unexpected pole of order {0}")]
    HigherPole(usize),
    #[error("coincident roots")]
    Coincident,
    #[error("root expansion needs n = 2")]
    Size,
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn pp_trim(mut p: PPoly) -> PPoly {
    while matches!(p.last(), Some(c) if c.is_zero()) {
        p.pop();
    }
    p
}

fn pp_add(a: &[CoeffExpr], b: &[CoeffExpr]) -> PPoly {
    let n = a.len().max(b.len());
    pp_trim((0..n).map(|k| a.get(k).cloned().unwrap_or_default().add(&b.get(k).cloned().unwrap_or_default())).collect())
}

fn pp_scale(a: &[CoeffExpr], c: &CoeffExpr) -> PPoly {
    pp_trim(a.iter().map(|x| x.mul(c)).collect())
}

fn pp_mul(a: &[CoeffExpr], b: &[CoeffExpr]) -> PPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![CoeffExpr::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    pp_trim(out)
}

fn pp_get(a: &[CoeffExpr], k: usize) -> CoeffExpr {
    a.get(k).cloned().unwrap_or_default()
}

fn lp_add(a: &LamP, b: &LamP) -> LamP {
    let n = a.len().max(b.len());
    let mut out: LamP = (0..n).map(|k| pp_add(a.get(k).map(|v| v.as_slice()).unwrap_or(&[]), b.get(k).map(|v| v.as_slice()).unwrap_or(&[]))).collect();
    while matches!(out.last(), Some(c) if c.is_empty()) {
        out.pop();
    }
    out
}

pub(crate) fn lp_neg(a: &LamP) -> LamP {
    a.iter().map(|p| pp_scale(p, &CoeffExpr::int(-1))).collect()
}

pub(crate) fn lp_mul(a: &LamP, b: &LamP) -> LamP {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out: LamP = vec![Vec::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let m = pp_mul(x, y);
            if !m.is_empty() {
                out[i + j] = pp_add(&out[i + j], &m);
            }
        }
    }
    while matches!(out.last(), Some(c) if c.is_empty()) {
        out.pop();
    }
    out
}

pub(crate) fn lp_det(m: &[Vec<LamP>]) -> LamP {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    if n == 2 {
        return lp_add(&lp_mul(&m[0][0], &m[1][1]), &lp_neg(&lp_mul(&m[0][1], &m[1][0])));
    }
    let mut acc: LamP = Vec::new();
    for c in 0..n {
        if m[0][c].is_empty() {
            continue;
        }
        let minor: Vec<Vec<LamP>> = (1..n).map(|r| (0..n).filter(|&k| k != c).map(|k| m[r][k].clone()).collect()).collect();
        let t = lp_mul(&m[0][c], &lp_det(&minor));
        acc = if c % 2 == 0 { lp_add(&acc, &t) } else { lp_add(&acc, &lp_neg(&t)) };
    }
    acc
}

/// Jet-free leading data `(g₂, g₁)` at ε⁰ and `(A_{2;k,0}, A_{1;k,0})` for
/// each layer k ≥ 1, the coefficients of `∂^{k+1}`.
pub type LeadingData = Vec<(Vec<Vec<CoeffExpr>>, Vec<Vec<CoeffExpr>>)>;

pub fn leading_data(pi: &GradedPencil) -> Result<LeadingData, InvError> {
    let n = pi.n;
    let mut out = Vec::new();
    for k in 0..=pi.max_layer() {
        let (a, b) = pi.layer(k);
        let mut ma = vec![vec![CoeffExpr::zero(); n]; n];
        let mut mb = vec![vec![CoeffExpr::zero(); n]; n];
        for (op, m) in [(&a, &mut ma), (&b, &mut mb)] {
            for i in 0..n {
                for j in 0..n {
                    let c = op.coeff(i, j, k + 1);
                    m[i][j] = c.as_coeff().ok_or(InvError::NotJetFree { layer: k, i, j, order: k + 1 })?;
                }
            }
        }
        out.push((ma, mb));
    }
    Ok(out)
}

/// `g₂ − λg₁ + Σ_k (A_{2;k,0} − λA_{1;k,0}) p^k` entrywise.
pub fn symbol_matrix(pi: &GradedPencil) -> Result<Vec<Vec<LamP>>, InvError> {
    Ok(symbol_from_leading(&leading_data(pi)?))
}

/// `g₂ − λg₁ + Σ_k (A_{2;k,0} − λA_{1;k,0}) p^k` from leading data.
pub fn symbol_from_leading(data: &LeadingData) -> Vec<Vec<LamP>> {
    let n = data.first().map(|d| d.0.len()).unwrap_or(0);
    let mut m = vec![vec![LamP::new(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let mut l0 = vec![CoeffExpr::zero(); data.len()];
            let mut l1 = vec![CoeffExpr::zero(); data.len()];
            for (k, (a, b)) in data.iter().enumerate() {
                l0[k] = a[i][j].clone();
                l1[k] = b[i][j].neg();
            }
            let mut v = vec![pp_trim(l0), pp_trim(l1)];
            while matches!(v.last(), Some(c) if c.is_empty()) {
                v.pop();
            }
            *e = v;
        }
    }
    m
}

pub fn symbol_det_from_leading(data: &LeadingData) -> LamP {
    lp_det(&symbol_from_leading(data))
}

/// `b² − 4ac` of a λ-quadratic determinant.
pub fn discriminant(det: &LamP) -> Result<PPoly, InvError> {
    if det.len() != 3 {
        return Err(InvError::NotQuadratic);
    }
    let (c, b, a) = (&det[0], &det[1], &det[2]);
    Ok(pp_add(&pp_mul(b, b), &pp_scale(&pp_mul(a, c), &CoeffExpr::int(-4))))
}

/// `det(symbol matrix)` as a polynomial in `λ` over polynomials in `p`.
pub fn dispersive_symbol_det(pi: &GradedPencil) -> Result<LamP, InvError> {
    Ok(lp_det(&symbol_matrix(pi)?))
}

/// Element `x + yσ` with `σ² = s`.
#[derive(Clone, Debug)]
struct Sig {
    x: CoeffExpr,
    y: CoeffExpr,
}

fn sig_mul(a: &Sig, b: &Sig, s: &CoeffExpr) -> Sig {
    Sig { x: a.x.mul(&b.x).add(&a.y.mul(&b.y).mul(s)), y: a.x.mul(&b.y).add(&a.y.mul(&b.x)) }
}

/// One branch `λ(p) = Σ (a_k + sign·b_k σ) p^k`, `σ² = sigma_sq`.
#[derive(Clone, Debug)]
pub struct PSeries {
    pub a: Vec<CoeffExpr>,
    pub b: Vec<CoeffExpr>,
    pub sigma_sq: CoeffExpr,
    pub sign: i32,
}

impl PSeries {
    pub fn base(&self) -> CoeffExpr {
        self.a[0].clone()
    }

    pub fn order(&self) -> usize {
        self.a.len() - 1
    }

    /// `λ_k` when it is σ-free.
    pub fn coeff(&self, k: usize) -> Option<CoeffExpr> {
        if self.b[k].is_zero() {
            Some(self.a[k].clone())
        } else if self.a[k].is_zero() {
            None
        } else {
            None
        }
    }

    /// `(λ_k)²`, σ-free when `a_k b_k = 0`.
    pub fn coeff_sq(&self, k: usize) -> Option<CoeffExpr> {
        let (x, y) = (&self.a[k], &self.b[k]);
        if x.mul(y).is_zero() {
            Some(x.mul(x).add(&y.mul(y).mul(&self.sigma_sq)))
        } else {
            None
        }
    }

    /// σ-part `sign·b_k`.
    pub fn sigma_part(&self, k: usize) -> CoeffExpr {
        if self.sign < 0 {
            self.b[k].neg()
        } else {
            self.b[k].clone()
        }
    }

    /// Renders `λ_k` with `σ = sqrt(sigma_sq)`.
    pub fn coeff_string(&self, k: usize) -> String {
        let s = self.sigma_part(k);
        if s.is_zero() {
            return self.a[k].to_string();
        }
        if self.a[k].is_zero() {
            return format!("({})*sqrt({})", s, self.sigma_sq);
        }
        format!("{} + ({})*sqrt({})", self.a[k], s, self.sigma_sq)
    }
}

#[derive(Clone, Debug)]
pub struct RootPair {
    pub first: PSeries,
    pub second: PSeries,
    /// Leading p-order of the discriminant, `None` if it vanishes identically.
    pub disc_order: Option<usize>,
}

impl RootPair {
    /// `λ¹_{2k+1} + λ²_{2k+1} = 0` and `λ¹_{2k} = λ²_{2k}` through the order.
    pub fn relations_hold(&self) -> bool {
        let k = self.first.order();
        (1..=k).all(|j| if j % 2 == 1 { self.first.a[j].is_zero() } else { self.first.b[j].is_zero() })
    }

    /// Unordered comparison through order `k`.
    pub fn same_as(&self, o: &RootPair, k: usize) -> bool {
        let eq = |x: &PSeries, y: &PSeries| {
            (0..=k).all(|j| x.a[j].sub(&y.a[j]).is_zero() && x.sigma_part(j).mul(&x.sigma_part(j)).mul(&x.sigma_sq).sub(&y.sigma_part(j).mul(&y.sigma_part(j)).mul(&y.sigma_sq)).is_zero())
        };
        eq(&self.first, &o.first) && eq(&self.second, &o.second) || eq(&self.first, &o.second) && eq(&self.second, &o.first)
    }
}

/// Power-series inverse of `a` through order `k`.
fn series_inv(a: &[CoeffExpr], k: usize) -> Result<PPoly, FieldError> {
    let a0 = pp_get(a, 0).try_inverse_structural()?;
    let mut out = vec![CoeffExpr::zero(); k + 1];
    out[0] = a0.clone();
    for j in 1..=k {
        let mut s = CoeffExpr::zero();
        for i in 1..=j {
            let ai = pp_get(a, i);
            if !ai.is_zero() {
                s = s.add(&ai.mul(&out[j - i]));
            }
        }
        out[j] = s.mul(&a0).neg();
    }
    Ok(out)
}

fn series_mul(a: &[CoeffExpr], b: &[CoeffExpr], k: usize) -> PPoly {
    let mut out = vec![CoeffExpr::zero(); k + 1];
    for (i, x) in a.iter().enumerate().take(k + 1) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(k + 1 - i) {
            if !y.is_zero() {
                out[i + j] = out[i + j].add(&x.mul(y));
            }
        }
    }
    out
}

/// Roots `λ(p) = (−b ± √(b²−4ac))/(2a)` of a λ-quadratic determinant,
/// expanded through `p^order`. Only `b²−4ac` through `p^(2·order)` enters.
pub fn expand_roots(det: &LamP, order: usize) -> Result<RootPair, InvError> {
    if det.len() != 3 {
        return Err(InvError::NotQuadratic);
    }
    let (b, a) = (&det[1], &det[2]);
    let k = order;
    let mut disc = discriminant(det)?;
    disc.truncate(2 * k + 1);
    let inv2a = series_inv(&pp_scale(a, &CoeffExpr::int(2)), k)?;
    let avg = series_mul(&pp_scale(b, &CoeffExpr::int(-1)), &inv2a, k);
    let m = disc.iter().position(|x| !x.is_zero());
    let (split, sigma_sq) = match m {
        None => (vec![CoeffExpr::zero(); k + 1], CoeffExpr::zero()),
        Some(0) => return Err(InvError::Semisimple),
        Some(m) if m % 2 == 1 => return Err(InvError::Puiseux(m)),
        Some(m) => {
            let dm = disc[m].clone();
            let dinv = dm.try_inverse_structural()?;
            let e: Vec<CoeffExpr> = (0..=k).map(|j| if j == 0 { CoeffExpr::zero() } else { pp_get(&disc, m + j).mul(&dinv) }).collect();
            let mut s = vec![CoeffExpr::zero(); k + 1];
            s[0] = CoeffExpr::one();
            for j in 1..=k {
                let mut acc = e[j].clone();
                for i in 1..j {
                    acc = acc.sub(&s[i].mul(&s[j - i]));
                }
                s[j] = acc.scale(&Q::new(1, 2));
            }
            let half = m / 2;
            let mut shifted = vec![CoeffExpr::zero(); k + 1];
            for j in 0..=k {
                if j + half <= k {
                    shifted[j + half] = s[j].clone();
                }
            }
            (series_mul(&shifted, &inv2a, k), dm)
        }
    };
    let first = PSeries { a: avg.clone(), b: split.clone(), sigma_sq: sigma_sq.clone(), sign: 1 };
    let second = PSeries { a: avg, b: split, sigma_sq, sign: -1 };
    Ok(RootPair { first, second, disc_order: m })
}

/// Residual `det(λ(p), p)` through `p^order`; zero means the branch is a
/// root to that order.
pub fn back_substitute(det: &LamP, s: &PSeries) -> Vec<(CoeffExpr, CoeffExpr)> {
    let k = s.order();
    let lam: Vec<Sig> = (0..=k).map(|j| Sig { x: s.a[j].clone(), y: s.sigma_part(j) }).collect();
    let zero = Sig { x: CoeffExpr::zero(), y: CoeffExpr::zero() };
    let mul = |x: &[Sig], y: &[Sig]| -> Vec<Sig> {
        let mut out = vec![zero.clone(); k + 1];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate().take(k + 1 - i) {
                let t = sig_mul(a, b, &s.sigma_sq);
                out[i + j] = Sig { x: out[i + j].x.add(&t.x), y: out[i + j].y.add(&t.y) };
            }
        }
        out
    };
    let mut total = vec![zero.clone(); k + 1];
    let mut pw: Vec<Sig> = vec![zero.clone(); k + 1];
    pw[0] = Sig { x: CoeffExpr::one(), y: CoeffExpr::zero() };
    for coef in det.iter() {
        let cs: Vec<Sig> = (0..=k).map(|j| Sig { x: pp_get(coef, j), y: CoeffExpr::zero() }).collect();
        let t = mul(&cs, &pw);
        for j in 0..=k {
            total[j] = Sig { x: total[j].x.add(&t[j].x), y: total[j].y.add(&t[j].y) };
        }
        pw = mul(&pw, &lam);
    }
    total.into_iter().map(|t| (t.x, t.y)).collect()
}

/// Taylor shift of a λ-polynomial (over plain coefficients) to `λ = λ̂ + t`.
fn shift_poly(c: &[CoeffExpr], lhat: &CoeffExpr) -> PPoly {
    let mut out = vec![CoeffExpr::zero(); c.len()];
    for (d, cd) in c.iter().enumerate() {
        if cd.is_zero() {
            continue;
        }
        for j in 0..=d {
            let coef = cd.mul(&lhat.pow((d - j) as u32)).scale(&Q::binomial(d as u32, j as u32));
            out[j] = out[j].add(&coef);
        }
    }
    pp_trim(out)
}

/// Result of the residue formula.
#[derive(Clone, Debug)]
pub struct Residue {
    /// `Res_{λ=λ̂} Tr(g_λ^{-1} Λ_λ)`.
    pub residue: CoeffExpr,
    pub pole_order: usize,
}

impl Residue {
    /// `−½ Res`.
    pub fn lambda2(&self) -> CoeffExpr {
        self.residue.scale(&Q::new(-1, 2))
    }
}

/// `Res_{λ=λ̂} Tr(g_λ^{-1} Λ_λ)` with `Λ = Q_λ + ½ (g_λ^{-1})_{lk} P^{li} P^{kj}`,
/// `P_θ`, `Q_θ` the leading jet-free coefficients at ε¹ and ε².
pub fn residue_invariant(pi: &GradedPencil, lambda_hat: &CoeffExpr) -> Result<Residue, InvError> {
    if pi.n != 2 {
        return Err(InvError::Size);
    }
    let data = leading_data(pi)?;
    let zero2 = vec![vec![CoeffExpr::zero(); 2]; 2];
    let get = |k: usize| data.get(k).cloned().unwrap_or((zero2.clone(), zero2.clone()));
    let (g2, g1) = get(0);
    let (p2, p1) = get(1);
    let (q2, q1) = get(2);
    // entries as polynomials in t = λ − λ̂
    let tp = |x: &CoeffExpr, y: &CoeffExpr| shift_poly(&[x.clone(), y.neg()], lambda_hat);
    let g: Vec<Vec<PPoly>> = (0..2).map(|i| (0..2).map(|j| tp(&g2[i][j], &g1[i][j])).collect()).collect();
    let p: Vec<Vec<PPoly>> = (0..2).map(|i| (0..2).map(|j| tp(&p2[i][j], &p1[i][j])).collect()).collect();
    let q: Vec<Vec<PPoly>> = (0..2).map(|i| (0..2).map(|j| tp(&q2[i][j], &q1[i][j])).collect()).collect();
    let d = pp_add(&pp_mul(&g[0][0], &g[1][1]), &pp_scale(&pp_mul(&g[0][1], &g[1][0]), &CoeffExpr::int(-1)));
    if !pp_get(&d, 0).is_zero() || !pp_get(&d, 1).is_zero() || d.len() != 3 {
        return Err(InvError::NotDoubleRoot);
    }
    let alpha = d[2].clone();
    let neg = |x: &PPoly| pp_scale(x, &CoeffExpr::int(-1));
    let adj = [[g[1][1].clone(), neg(&g[0][1])], [neg(&g[1][0]), g[0][0].clone()]];
    // Tr(g^{-1} Q) = N1 / D
    let mut n1: PPoly = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            n1 = pp_add(&n1, &pp_mul(&adj[i][j], &q[j][i]));
        }
    }
    // ½ Σ (g^{-1})_{ij} (g^{-1})_{lk} P^{lj} P^{ki} = N2 / D²
    let mut n2: PPoly = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                for k in 0..2 {
                    let t = pp_mul(&pp_mul(&adj[i][j], &adj[l][k]), &pp_mul(&p[l][j], &p[k][i]));
                    n2 = pp_add(&n2, &t);
                }
            }
        }
    }
    n2 = pp_scale(&n2, &CoeffExpr::rat(1, 2));
    // total = (N1 α t² + N2) / (α² t⁴)
    let mut num = pp_add(&pp_mul(&pp_scale(&n1, &alpha), &[CoeffExpr::zero(), CoeffExpr::zero(), CoeffExpr::one()]), &n2);
    num.resize(5, CoeffExpr::zero());
    let jmin = num.iter().position(|x| !x.is_zero()).unwrap_or(4);
    let pole_order = 4usize.saturating_sub(jmin);
    let p_zero = p.iter().all(|r| r.iter().all(|e| e.is_empty()));
    if p_zero && pole_order > 2 {
        return Err(InvError::HigherPole(pole_order));
    }
    let a2inv = alpha.mul(&alpha).try_inverse_structural()?;
    Ok(Residue { residue: num[3].mul(&a2inv), pole_order })
}

/// `c^i = (Q^{ii}₂ − r^iQ^{ii}₁ + Σ_{k≠i} (P^{ki}₂ − r^iP^{ki}₁)²/(f^k(r^k − r^i))) / (f^i)²`.
pub fn central_invariants_semisimple(
    f: &[CoeffExpr],
    r: &[CoeffExpr],
    p2: &[Vec<CoeffExpr>],
    p1: &[Vec<CoeffExpr>],
    q2: &[Vec<CoeffExpr>],
    q1: &[Vec<CoeffExpr>],
) -> Result<Vec<CoeffExpr>, InvError> {
    let n = f.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = q2[i][i].sub(&r[i].mul(&q1[i][i]));
        for k in 0..n {
            if k == i {
                continue;
            }
            let diff = r[k].sub(&r[i]);
            if diff.is_zero() {
                return Err(InvError::Coincident);
            }
            let t = p2[k][i].sub(&r[i].mul(&p1[k][i]));
            if t.is_zero() {
                continue;
            }
            s = s.add(&t.mul(&t).mul(&f[k].mul(&diff).try_inverse_structural()?));
        }
        out.push(s.mul(&f[i].mul(&f[i]).try_inverse_structural()?));
    }
    Ok(out)
}

/// Numeric λ₂ of the branch average: roots of the instantiated determinant
/// are solved at sample points `p` and the p² coefficient is extracted by
/// Richardson-extrapolated central differences.
pub fn numeric_lambda2(det: &LamP, env: &dyn Fn(&crate::coefffield::AtomKind) -> Option<f64>) -> Option<f64> {
    let coef: Vec<Vec<f64>> = det.iter().map(|pp| pp.iter().map(|c| c.eval_f64(env)).collect::<Option<Vec<f64>>>()).collect::<Option<Vec<_>>>()?;
    if coef.len() != 3 {
        return None;
    }
    let ev = |v: &[f64], p: f64| v.iter().rev().fold(0.0, |acc, c| acc * p + c);
    let avg = |p: f64| {
        let (c, b, a) = (ev(&coef[0], p), ev(&coef[1], p), ev(&coef[2], p));
        let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
        let r1 = (-b + disc) / (2.0 * a);
        let r2 = (-b - disc) / (2.0 * a);
        (r1 + r2) / 2.0
    };
    let d2 = |h: f64| (avg(h) - 2.0 * avg(0.0) + avg(-h)) / (2.0 * h * h);
    let h = 1e-2;
    let (a1, a2, a3) = (d2(h), d2(h / 2.0), d2(h / 4.0));
    let r1 = (4.0 * a2 - a1) / 3.0;
    let r2 = (4.0 * a3 - a2) / 3.0;
    Some((16.0 * r2 - r1) / 15.0)
}
