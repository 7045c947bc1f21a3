//! Quadrature of `⟨ξ ⊗ ξ, H⟩` for band-limited `ξ` along a sequence of cutoffs.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::{freq_index, Fft2};
use crate::field::SpectralField;
use crate::kernel::{bump, kernel_hat, KernelTable};
use crate::modes::{modes_in_ball, torus_delta};
use crate::testfn::TestFunction;

/// Values `⟨ξ ⊗ ξ, H_n⟩` with successive absolute differences.
#[derive(Debug, Clone)]
pub struct PairingSequence {
    pub cutoffs: Vec<Option<usize>>,
    pub values: Vec<Complex64>,
    pub differences: Vec<f64>,
    pub grid: usize,
}

/// `h⁴ Σ_x Σ_y ξ(x) ξ(y) H_n(x, y)` on the `n × n` node grid of `table`.
///
/// By oddness of the kernel the double sum equals `h⁴ Σ_x ξ(x) ∇φ(x)·(K_n ⋆ ξ)(x)`,
/// evaluated with a periodic FFT convolution. `None` in `cutoffs` means the uncut `H`.
pub fn white_noise_pairing(
    xi: &SpectralField,
    phi: &TestFunction,
    table: &KernelTable,
    cutoffs: &[Option<usize>],
    r: f64,
) -> Result<PairingSequence> {
    let n = table.n;
    let band = xi.m.max(phi.band());
    if n <= 2 * band {
        return Err(Error::UnderResolved {
            grid: n,
            band,
            need: 2 * band,
        });
    }
    let fft = Fft2::new(n);
    let h = 1.0 / n as f64;
    // ξ on the nodes
    let mut xv = vec![Complex64::default(); n * n];
    for k in modes_in_ball(xi.m) {
        xv[freq_index(k.k1, n) * n + freq_index(k.k2, n)] = xi.get(k);
    }
    fft.process(&mut xv, true);
    let mut xhat: Vec<Complex64> = xv.iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    fft.process(&mut xhat, false);
    let grads: Vec<[Complex64; 2]> = (0..n * n)
        .map(|t| phi.grad([(t / n) as f64 * h, (t % n) as f64 * h]))
        .collect();

    let mut values = Vec::with_capacity(cutoffs.len());
    for cut in cutoffs {
        let mut kx = vec![Complex64::default(); n * n];
        let mut ky = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                let w = match cut {
                    None => 1.0,
                    Some(c) => {
                        let d = torus_delta([i as f64 * h, j as f64 * h], [0.0, 0.0]);
                        1.0 - bump(*c as f64 * d[0].hypot(d[1]), r)
                    }
                };
                let v = table.node(i, j);
                kx[i * n + j] = Complex64::new(v[0] * w, 0.0);
                ky[i * n + j] = Complex64::new(v[1] * w, 0.0);
            }
        }
        fft.process(&mut kx, false);
        fft.process(&mut ky, false);
        let norm = 1.0 / (n * n) as f64;
        for t in 0..n * n {
            kx[t] *= xhat[t] * norm;
            ky[t] *= xhat[t] * norm;
        }
        fft.process(&mut kx, true);
        fft.process(&mut ky, true);
        let mut s = Complex64::default();
        for t in 0..n * n {
            s += (grads[t][0] * kx[t].re + grads[t][1] * ky[t].re) * xv[t].re;
        }
        values.push(s * h.powi(4));
    }
    let differences = values.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    Ok(PairingSequence {
        cutoffs: cutoffs.to_vec(),
        values,
        differences,
        grid: n,
    })
}

/// Exact `⟨ξ ⊗ ξ, H_ε^φ⟩ = ∫ ξ ∇φ·(K ∗ ξ)` for band-limited `ξ`, kernel truncated at `mk`:
/// `Σ_{q+l+p=0} ĉ(q) φ̂(l) 2πi l·K̂(p) ĉ(p)`.
pub fn h_pairing_spectral(
    xi: &SpectralField,
    phi: &TestFunction,
    eps: f64,
    mk: usize,
) -> Complex64 {
    let mut s = Complex64::default();
    for (l, c) in phi.terms() {
        for p in modes_in_ball(xi.m.min(mk)) {
            let q = match p.add(*l) {
                Some(v) => v.neg(),
                None => continue,
            };
            let kh = kernel_hat(p, eps);
            let lk = kh[0] * l.k1 as f64 + kh[1] * l.k2 as f64;
            s += xi.get(q) * c * Complex64::new(0.0, 2.0 * PI) * lk * xi.get(p);
        }
    }
    s
}
