//! Polynomial Miura transformations `ũ = u + Σ ε^k F_k(u)` and their action
//! on graded pencils.

use crate::brackets::lie_along_field;
use crate::jetspace::{EvoField, JetPoly};
use crate::localops::{GradedPencil, MatDiffOp};
use crate::rational::Q;
use std::collections::HashMap;

/// ε-series `Σ_k s[k] ε^k`, truncated at `s.len() − 1`.
pub type Series = Vec<JetPoly>;

fn series_zero(n: usize) -> Series {
    vec![JetPoly::zero(); n + 1]
}

fn series_mul(a: &[JetPoly], b: &[JetPoly], top: usize) -> Series {
    let mut out = series_zero(top);
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j > top {
                break;
            }
            if !y.is_zero() {
                out[i + j].add_assign(&x.mul(y));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiuraError {
    #[error("layer {layer} component {comp} is not homogeneous of degree {layer}")]
    NotHomogeneous { layer: usize, comp: usize },
    #[error("logarithmic coefficients cannot be substituted")]
    Logarithmic,
    #[error("size mismatch")]
    Size,
}

/// Jets of a shift `δ^i = Σ ε^k δ^i_k`, computed on demand.
struct Shift {
    n: usize,
    top: usize,
    jets: HashMap<(usize, u32), Series>,
}

impl Shift {
    fn new(delta: Vec<Series>, top: usize) -> Shift {
        let n = delta.len();
        let mut jets = HashMap::new();
        for (i, s) in delta.into_iter().enumerate() {
            jets.insert((i, 0), s);
        }
        Shift { n, top, jets }
    }

    fn jet(&mut self, comp: usize, s: u32) -> &Series {
        if !self.jets.contains_key(&(comp, s)) {
            let prev = self.jet(comp, s - 1).clone();
            let d: Series = prev.iter().map(|p| p.total_x()).collect();
            self.jets.insert((comp, s), d);
        }
        &self.jets[&(comp, s)]
    }

    /// Taylor expansion of `f(u + δ)` through `ε^cap`, padded to `top`.
    fn substitute_to(&mut self, f: &JetPoly, cap: usize) -> Series {
        if cap == 0 {
            let mut out = series_zero(self.top);
            out[0] = f.clone();
            return out;
        }
        let top = self.top;
        self.top = cap.min(top);
        let mut s = self.substitute(f);
        self.top = top;
        s.resize(top + 1, JetPoly::zero());
        s
    }

    /// Taylor expansion of `f(u + δ)` as an ε-series.
    fn substitute(&mut self, f: &JetPoly) -> Series {
        let mut out = series_zero(self.top);
        out[0] = f.clone();
        if f.is_zero() {
            return out;
        }
        let keys: Vec<(usize, u32)> = f.dependencies(self.n).into_iter().filter(|k| k.0 < self.n).collect();
        let mut one = series_zero(self.top);
        one[0] = JetPoly::one();
        self.rec(f, &keys, 0, None, 0, &one, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(&mut self, g: &JetPoly, keys: &[(usize, u32)], start: usize, last: Option<usize>, mult: u32, prod: &Series, out: &mut Series) {
        for idx in start..keys.len() {
            let (comp, s) = keys[idx];
            let d = g.partial(comp, s);
            if d.is_zero() {
                continue;
            }
            let m = if last == Some(idx) { mult + 1 } else { 1 };
            let dj = self.jet(comp, s).clone();
            let mut np = series_mul(prod, &dj, self.top);
            if np.iter().all(|p| p.is_zero()) {
                continue;
            }
            let inv = Q::new(1, m as i64);
            for p in np.iter_mut() {
                *p = p.scale_q(&inv);
            }
            for (k, p) in np.iter().enumerate() {
                if !p.is_zero() {
                    out[k].add_assign(&d.mul(p));
                }
            }
            self.rec(&d, keys, idx, Some(idx), m, &np, out);
        }
    }
}

/// `ũ^i = u^i + Σ_{k≥1} ε^k F^i_k`, truncated at N.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiuraMap {
    pub n: usize,
    /// `layers[k][i] = F^i_k`; `layers[0]` is zero.
    pub layers: Vec<Vec<JetPoly>>,
    pub truncation: usize,
}

impl MiuraMap {
    pub fn identity(n: usize, truncation: usize) -> MiuraMap {
        MiuraMap { n, layers: vec![vec![JetPoly::zero(); n]; truncation + 1], truncation }
    }

    /// Builds the map from `layers[k-1] = F_k` and checks homogeneity.
    pub fn new(n: usize, layers: Vec<Vec<JetPoly>>, truncation: usize) -> Result<MiuraMap, MiuraError> {
        let mut m = MiuraMap::identity(n, truncation);
        for (k, l) in layers.into_iter().enumerate() {
            if l.len() != n {
                return Err(MiuraError::Size);
            }
            for (i, f) in l.iter().enumerate() {
                if f.has_log() {
                    return Err(MiuraError::Logarithmic);
                }
                if !f.is_zero() && !f.is_homogeneous(k as i32 + 1) {
                    return Err(MiuraError::NotHomogeneous { layer: k + 1, comp: i });
                }
            }
            if k < truncation {
                m.layers[k + 1] = l;
            }
        }
        Ok(m)
    }

    /// The map `u → exp(−ε^d Y) u` for `Y` homogeneous of degree `d`.
    pub fn from_flow(y: &EvoField, truncation: usize) -> MiuraMap {
        let n = y.n();
        let d = y.comps.iter().find(|c| !c.is_zero()).and_then(|c| c.degrees().first().copied()).unwrap_or(1).max(1) as usize;
        let mut m = MiuraMap::identity(n, truncation);
        let mut cur: Vec<JetPoly> = (0..n).map(JetPoly::u).collect();
        let mut k = 1;
        while k * d <= truncation {
            cur = cur.iter().map(|c| y.prolong(c)).collect();
            let coef = Q::new(if k % 2 == 1 { -1 } else { 1 }, 1) * Q::factorial(k as u32).inv();
            m.layers[k * d] = cur.iter().map(|c| c.scale_q(&coef)).collect();
            k += 1;
        }
        m
    }

    pub fn is_identity(&self) -> bool {
        self.layers.iter().all(|l| l.iter().all(|f| f.is_zero()))
    }

    fn shift_of(&self) -> Shift {
        let delta: Vec<Series> = (0..self.n).map(|i| (0..=self.truncation).map(|k| self.layers[k][i].clone()).collect()).collect();
        Shift::new(delta, self.truncation)
    }

    /// Image of `f(u)` under `u → u + Σ ε^k F_k(u)`.
    pub fn substitute(&self, f: &JetPoly) -> Series {
        self.shift_of().substitute(f)
    }

    /// Inverse map by fixed-point iteration `u = ũ − Σ ε^k F_k(u)`.
    pub fn inverse(&self) -> MiuraMap {
        let n = self.n;
        let top = self.truncation;
        let mut delta: Vec<Series> = vec![series_zero(top); n];
        for _ in 0..top {
            let mut sh = Shift::new(delta.clone(), top);
            let mut next: Vec<Series> = vec![series_zero(top); n];
            for k in 1..=top {
                for i in 0..n {
                    let f = &self.layers[k][i];
                    if f.is_zero() {
                        continue;
                    }
                    let s = sh.substitute(f);
                    for (r, p) in s.iter().enumerate() {
                        if k + r <= top && !p.is_zero() {
                            next[i][k + r].add_assign(&p.neg());
                        }
                    }
                }
            }
            delta = next;
        }
        let mut m = MiuraMap::identity(n, top);
        for (i, d) in delta.into_iter().enumerate() {
            for (k, p) in d.into_iter().enumerate() {
                m.layers[k][i] = p;
            }
        }
        m
    }

    /// `self` followed by `other`: `u → other(self(u))`.
    pub fn then(&self, other: &MiuraMap) -> MiuraMap {
        let top = self.truncation.min(other.truncation);
        let mut sh = self.shift_of();
        sh.top = top;
        let mut m = MiuraMap::identity(self.n, top);
        for k in 1..=top {
            for i in 0..self.n {
                m.layers[k][i].add_assign(&self.layers[k][i]);
                let f = &other.layers[k][i];
                if f.is_zero() {
                    continue;
                }
                let s = sh.substitute(f);
                for (r, p) in s.iter().enumerate() {
                    if k + r <= top {
                        m.layers[k + r][i].add_assign(p);
                    }
                }
            }
        }
        m
    }

    /// ε-graded Fréchet derivative `L★ = Σ_k ε^k L★_k`.
    pub fn frechet_layers(&self) -> Vec<MatDiffOp> {
        (0..=self.truncation)
            .map(|k| if k == 0 { MatDiffOp::identity(self.n) } else { EvoField::new(self.layers[k].clone()).frechet() })
            .collect()
    }
}

fn op_series_substitute(ops: &[MatDiffOp], sh: &mut Shift, top: usize) -> Vec<MatDiffOp> {
    let n = sh.n;
    let mut out = vec![MatDiffOp::zero(n); top + 1];
    for (m, op) in ops.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                for (o, c) in op.entry(i, j).iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let s = sh.substitute_to(c, top - m);
                    for (r, p) in s.iter().enumerate() {
                        if m + r <= top && !p.is_zero() {
                            out[m + r].add_entry(i, j, o, p);
                        }
                    }
                }
            }
        }
    }
    out
}

/// `Π̃(ũ) = L★ Π L★† |_{u = M^{-1}(ũ)}`, re-expanded in ε.
pub fn pushforward_miura(pi: &GradedPencil, m: &MiuraMap) -> GradedPencil {
    let top = pi.truncation.min(m.truncation);
    if m.is_identity() {
        let mut r = pi.clone();
        r.layers.truncate(top + 1);
        return r;
    }
    let ls = m.frechet_layers();
    let la: Vec<MatDiffOp> = ls.iter().map(|l| l.adjoint()).collect();
    let mut ta = vec![MatDiffOp::zero(pi.n); top + 1];
    let mut tb = vec![MatDiffOp::zero(pi.n); top + 1];
    for b in 0..=top.min(pi.max_layer()) {
        let (pa, pb) = pi.layer(b);
        for a in 0..=(top - b) {
            if ls[a].is_zero() {
                continue;
            }
            let lpa = ls[a].compose(&pa).unwrap();
            let lpb = ls[a].compose(&pb).unwrap();
            for c in 0..=(top - a - b) {
                if la[c].is_zero() {
                    continue;
                }
                ta[a + b + c] = ta[a + b + c].add(&lpa.compose(&la[c]).unwrap());
                tb[a + b + c] = tb[a + b + c].add(&lpb.compose(&la[c]).unwrap());
            }
        }
    }
    let inv = m.inverse();
    let mut sh = inv.shift_of();
    sh.top = top;
    let ra = op_series_substitute(&ta, &mut sh, top);
    let rb = op_series_substitute(&tb, &mut sh, top);
    let mut out = GradedPencil { n: pi.n, layers: Vec::new(), truncation: pi.truncation };
    for k in 0..=top {
        out.add_layer(k, &ra[k], &rb[k]);
    }
    while out.layers.len() > 1 && matches!(out.layers.last(), Some((a, b)) if a.is_zero() && b.is_zero()) {
        out.layers.pop();
    }
    out
}

/// `Σ_m ε^{md}/m! (Lie_Y)^m Π` through ε-order `order`, `d = deg Y`; this is
/// the pushforward of `u → exp(−ε^d Y) u`.
pub fn exp_ad_flow(y: &EvoField, pi: &GradedPencil, order: usize) -> GradedPencil {
    if y.is_zero() {
        return pi.clone();
    }
    let d = y.comps.iter().find(|c| !c.is_zero()).and_then(|c| c.degrees().first().copied()).unwrap_or(1).max(1) as usize;
    let mut out = pi.clone();
    out.layers.truncate(order + 1);
    let mut cur: Vec<(MatDiffOp, MatDiffOp)> = pi.layers.clone();
    let mut k = 1;
    while k * d <= order {
        cur = cur.iter().map(|(a, b)| (lie_along_field(y, a), lie_along_field(y, b))).collect();
        let coef = Q::factorial(k as u32).inv();
        for (l, (a, b)) in cur.iter().enumerate() {
            if l + k * d <= order && !(a.is_zero() && b.is_zero()) {
                out.add_layer(l + k * d, &a.scale_q(&coef), &b.scale_q(&coef));
            }
        }
        k += 1;
    }
    out
}

/// `X^i = P^{ij} δH/δu^j`.
pub fn hamiltonian_vector_field(p: &MatDiffOp, density: &JetPoly) -> EvoField {
    EvoField::new(p.apply(&density.variational_gradient(p.size())))
}
