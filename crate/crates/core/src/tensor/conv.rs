//! Direct-loop 2-D convolution kernels (NCHW, zero padding, no dilation).
//!
//! Transposed convolution scatters each input pixel through the kernel, the
//! adjoint of `conv2d` with the weight laid out as `[in_ch, out_ch, kh, kw]`.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub batch: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
}

impl ConvGeom {
    /// Input pixel coordinate hit by output `(oh, ow)` and kernel tap `(u, v)`.
    #[inline]
    fn tap(&self, o: usize, k: usize, limit: usize) -> Option<usize> {
        let pos = (o * self.stride + k) as isize - self.pad as isize;
        (pos >= 0 && (pos as usize) < limit).then_some(pos as usize)
    }
}

pub(crate) fn conv2d_forward(g: &ConvGeom, x: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.batch * g.out_ch * g.out_h * g.out_w];
    for b in 0..g.batch {
        for o in 0..g.out_ch {
            for oh in 0..g.out_h {
                for ow in 0..g.out_w {
                    let mut acc = 0.0;
                    for c in 0..g.in_ch {
                        let xbase = (b * g.in_ch + c) * g.in_h * g.in_w;
                        let wbase = (o * g.in_ch + c) * g.kh * g.kw;
                        for u in 0..g.kh {
                            let Some(ih) = g.tap(oh, u, g.in_h) else { continue };
                            for v in 0..g.kw {
                                let Some(iw) = g.tap(ow, v, g.in_w) else { continue };
                                acc += x[xbase + ih * g.in_w + iw] * w[wbase + u * g.kw + v];
                            }
                        }
                    }
                    out[((b * g.out_ch + o) * g.out_h + oh) * g.out_w + ow] = acc;
                }
            }
        }
    }
    out
}

/// Returns `(d_input, d_weight)` for an upstream gradient over the output.
pub(crate) fn conv2d_backward(
    g: &ConvGeom,
    x: &[f64],
    w: &[f64],
    grad: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; w.len()];
    for b in 0..g.batch {
        for o in 0..g.out_ch {
            for oh in 0..g.out_h {
                for ow in 0..g.out_w {
                    let gv = grad[((b * g.out_ch + o) * g.out_h + oh) * g.out_w + ow];
                    if gv == 0.0 {
                        continue;
                    }
                    for c in 0..g.in_ch {
                        let xbase = (b * g.in_ch + c) * g.in_h * g.in_w;
                        let wbase = (o * g.in_ch + c) * g.kh * g.kw;
                        for u in 0..g.kh {
                            let Some(ih) = g.tap(oh, u, g.in_h) else { continue };
                            for v in 0..g.kw {
                                let Some(iw) = g.tap(ow, v, g.in_w) else { continue };
                                let xi = xbase + ih * g.in_w + iw;
                                let wi = wbase + u * g.kw + v;
                                dx[xi] += gv * w[wi];
                                dw[wi] += gv * x[xi];
                            }
                        }
                    }
                }
            }
        }
    }
    (dx, dw)
}

pub(crate) fn conv_transpose2d_forward(g: &ConvGeom, x: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.batch * g.out_ch * g.out_h * g.out_w];
    for b in 0..g.batch {
        for c in 0..g.in_ch {
            for ih in 0..g.in_h {
                for iw in 0..g.in_w {
                    let xv = x[((b * g.in_ch + c) * g.in_h + ih) * g.in_w + iw];
                    for o in 0..g.out_ch {
                        let wbase = (c * g.out_ch + o) * g.kh * g.kw;
                        let obase = (b * g.out_ch + o) * g.out_h * g.out_w;
                        for u in 0..g.kh {
                            let Some(oh) = g.tap(ih, u, g.out_h) else { continue };
                            for v in 0..g.kw {
                                let Some(ow) = g.tap(iw, v, g.out_w) else { continue };
                                out[obase + oh * g.out_w + ow] += xv * w[wbase + u * g.kw + v];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub(crate) fn conv_transpose2d_backward(
    g: &ConvGeom,
    x: &[f64],
    w: &[f64],
    grad: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; x.len()];
    let mut dw = vec![0.0; w.len()];
    for b in 0..g.batch {
        for c in 0..g.in_ch {
            for ih in 0..g.in_h {
                for iw in 0..g.in_w {
                    let xi = ((b * g.in_ch + c) * g.in_h + ih) * g.in_w + iw;
                    let xv = x[xi];
                    let mut acc = 0.0;
                    for o in 0..g.out_ch {
                        let wbase = (c * g.out_ch + o) * g.kh * g.kw;
                        let obase = (b * g.out_ch + o) * g.out_h * g.out_w;
                        for u in 0..g.kh {
                            let Some(oh) = g.tap(ih, u, g.out_h) else { continue };
                            for v in 0..g.kw {
                                let Some(ow) = g.tap(iw, v, g.out_w) else { continue };
                                let gv = grad[obase + oh * g.out_w + ow];
                                let wi = wbase + u * g.kw + v;
                                acc += gv * w[wi];
                                dw[wi] += gv * xv;
                            }
                        }
                    }
                    dx[xi] = acc;
                }
            }
        }
    }
    (dx, dw)
}
