use super::{AnnularGrid, MappingJacobian, PlanarMapping, ScalarField, SymMatrixField};
use crate::linalg::Sym2;

/// Polar derivatives `(u_r, u_rr, u_θ, u_θθ, u_rθ)` at node `(i, j)`.
fn polar_derivs(g: &AnnularGrid, v: &[f64], i: usize, j: usize) -> [f64; 5] {
    let s = &g.stencils;
    let nt = g.n_theta();
    let at = |ii: usize, jj: usize| v[ii * nt + jj];
    let wrap = |b: usize| (j + nt + b - s.half) % nt;

    let d1 = &s.d1[i];
    let d2 = &s.d2[i];
    let mut ur = 0.0;
    for (a, w) in d1.w.iter().enumerate() {
        ur += w * at(d1.start + a, j);
    }
    let mut urr = 0.0;
    for (a, w) in d2.w.iter().enumerate() {
        urr += w * at(d2.start + a, j);
    }
    let mut ut = 0.0;
    let mut utt = 0.0;
    for (b, (w1, w2)) in s.t1.iter().zip(&s.t2).enumerate() {
        let x = at(i, wrap(b));
        ut += w1 * x;
        utt += w2 * x;
    }
    let mut urt = 0.0;
    for (a, wr) in d1.w.iter().enumerate() {
        let mut inner = 0.0;
        for (b, wt) in s.t1.iter().enumerate() {
            inner += wt * at(d1.start + a, wrap(b));
        }
        urt += wr * inner;
    }
    [ur, urr, ut, utt, urt]
}

/// Rotates polar Hessian components `(H_rr, H_rθ, H_θθ)` to Cartesian.
#[inline]
fn polar_to_cartesian(c: f64, s: f64, hrr: f64, hrt: f64, htt: f64) -> Sym2 {
    Sym2::new(
        c * c * hrr - 2.0 * c * s * hrt + s * s * htt,
        c * s * (hrr - htt) + (c * c - s * s) * hrt,
        s * s * hrr + 2.0 * c * s * hrt + c * c * htt,
    )
}

fn node_gradient(g: &AnnularGrid, v: &[f64], i: usize, j: usize) -> [f64; 2] {
    let [ur, _, ut, _, _] = polar_derivs(g, v, i, j);
    let r = g.radius(i);
    let (c, s) = g.cos_sin(j);
    [c * ur - s * ut / r, s * ur + c * ut / r]
}

fn node_hessian(g: &AnnularGrid, v: &[f64], i: usize, j: usize) -> Sym2 {
    let [ur, urr, ut, utt, urt] = polar_derivs(g, v, i, j);
    let r = g.radius(i);
    let (c, s) = g.cos_sin(j);
    let hrt = urt / r - ut / (r * r);
    let htt = ur / r + utt / (r * r);
    polar_to_cartesian(c, s, urr, hrt, htt)
}

fn grad_raw(g: &AnnularGrid, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (0..g.len())
        .map(|k| {
            let (i, j) = g.ring_angle(k);
            let d = node_gradient(g, v, i, j);
            (d[0], d[1])
        })
        .unzip()
}

/// Cartesian gradient `(u₁, u₂)` at every node.
pub fn gradient(u: &ScalarField) -> PlanarMapping {
    let g = u.grid();
    let (p, q) = grad_raw(g, u.values());
    PlanarMapping::new(g.clone(), p, q).expect("stencils of finite values are finite")
}

/// Cartesian Hessian at every node.
pub fn hessian(u: &ScalarField) -> SymMatrixField {
    let g = u.grid();
    let v = u.values();
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = g.ring_angle(k);
            node_hessian(g, v, i, j)
        })
        .collect();
    SymMatrixField::new(g.clone(), values).expect("stencils of finite values are finite")
}

/// Laplacian as the trace of the discrete Hessian.
pub fn laplacian(u: &ScalarField) -> ScalarField {
    let g = u.grid();
    let v = u.values();
    let values = (0..g.len())
        .map(|k| {
            let (i, j) = g.ring_angle(k);
            let [ur, urr, _, utt, _] = polar_derivs(g, v, i, j);
            let r = g.radius(i);
            urr + ur / r + utt / (r * r)
        })
        .collect();
    ScalarField::new(g.clone(), values).expect("stencils of finite values are finite")
}

/// Stencil derivatives `(p₁, p₂, q₁, q₂)` of a mapping.
pub fn jacobian(w: &PlanarMapping) -> MappingJacobian {
    let g = w.grid();
    let (p1, p2) = grad_raw(g, w.p());
    let (q1, q2) = grad_raw(g, w.q());
    MappingJacobian { p1, p2, q1, q2 }
}

/// Linear weights of the discrete Hessian at one node: entry `(k, W)` means
/// the Hessian picks up `W · u[k]` componentwise.
#[derive(Clone, Debug, Default)]
pub struct HessianWeights {
    pub entries: Vec<(usize, Sym2)>,
}

impl HessianWeights {
    /// `Σ_k ⟨a, W_k⟩ u_k` with `⟨a, W⟩ = a11 W11 + 2 a12 W12 + a22 W22`.
    pub fn contract(&self, a: &Sym2) -> impl Iterator<Item = (usize, f64)> + '_ {
        let a = *a;
        self.entries.iter().map(move |(k, w)| (*k, a.m11 * w.m11 + 2.0 * a.m12 * w.m12 + a.m22 * w.m22))
    }
}

impl AnnularGrid {
    /// Hessian stencil at node `(i, j)` with duplicate columns merged, sorted by column.
    pub fn hessian_weights(&self, i: usize, j: usize) -> HessianWeights {
        let s = &self.stencils;
        let nt = self.n_theta();
        let r = self.radius(i);
        let (c, sn) = self.cos_sin(j);
        let wrap = |b: usize| (j + nt + b - s.half) % nt;
        // (column, H_rr, H_rθ, H_θθ)
        let mut raw: Vec<(usize, f64, f64, f64)> = Vec::new();
        let d1 = &s.d1[i];
        let d2 = &s.d2[i];
        for (a, w) in d2.w.iter().enumerate() {
            raw.push(((d2.start + a) * nt + j, *w, 0.0, 0.0));
        }
        for (a, w) in d1.w.iter().enumerate() {
            raw.push(((d1.start + a) * nt + j, 0.0, 0.0, w / r));
        }
        for (b, (w1, w2)) in s.t1.iter().zip(&s.t2).enumerate() {
            raw.push((i * nt + wrap(b), 0.0, -w1 / (r * r), w2 / (r * r)));
        }
        for (a, wr) in d1.w.iter().enumerate() {
            for (b, wt) in s.t1.iter().enumerate() {
                raw.push(((d1.start + a) * nt + wrap(b), 0.0, wr * wt / r, 0.0));
            }
        }
        raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(usize, Sym2)> = Vec::with_capacity(raw.len());
        for (k, hrr, hrt, htt) in raw {
            let m = polar_to_cartesian(c, sn, hrr, hrt, htt);
            match entries.last_mut() {
                Some((last, acc)) if *last == k => *acc = acc.add(&m),
                _ => entries.push((k, m)),
            }
        }
        HessianWeights { entries }
    }
}
