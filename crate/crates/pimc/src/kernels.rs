//! Hot row kernels for the Metropolis moves, with a runtime-dispatched
//! AVX2+FMA path (the weighted sums over all slices dominate the sampling
//! cost; the baseline build only vectorizes them 2-wide).

macro_rules! weighted_pair_body {
    ($xs:ident, $ys:ident, $zs:ident, $w:ident, $new:ident, $old:ident, $inv_cap:ident) => {{
        let mut acc_n = [0.0f64; 4];
        let mut acc_o = [0.0f64; 4];
        let mut it = $xs
            .chunks_exact(4)
            .zip($ys.chunks_exact(4))
            .zip($zs.chunks_exact(4))
            .zip($w.chunks_exact(4));
        for (((cx, cy), cz), cw) in it.by_ref() {
            let cx: &[f64; 4] = cx.try_into().unwrap();
            let cy: &[f64; 4] = cy.try_into().unwrap();
            let cz: &[f64; 4] = cz.try_into().unwrap();
            let cw: &[f64; 4] = cw.try_into().unwrap();
            for lane in 0..4 {
                let dxn = $new[0] - cx[lane];
                let dyn_ = $new[1] - cy[lane];
                let dzn = $new[2] - cz[lane];
                let dxo = $old[0] - cx[lane];
                let dyo = $old[1] - cy[lane];
                let dzo = $old[2] - cz[lane];
                let dn = dxn * dxn + dyn_ * dyn_ + dzn * dzn;
                let do_ = dxo * dxo + dyo * dyo + dzo * dzo;
                acc_n[lane] += cw[lane] * (1.0 / dn.sqrt()).min($inv_cap);
                acc_o[lane] += cw[lane] * (1.0 / do_.sqrt()).min($inv_cap);
            }
        }
        let mut sn = (acc_n[0] + acc_n[1]) + (acc_n[2] + acc_n[3]);
        let mut so = (acc_o[0] + acc_o[1]) + (acc_o[2] + acc_o[3]);
        let tail = $xs.len() - $xs.len() % 4;
        for l in tail..$xs.len() {
            let dxn = $new[0] - $xs[l];
            let dyn_ = $new[1] - $ys[l];
            let dzn = $new[2] - $zs[l];
            let dxo = $old[0] - $xs[l];
            let dyo = $old[1] - $ys[l];
            let dzo = $old[2] - $zs[l];
            let dn = dxn * dxn + dyn_ * dyn_ + dzn * dzn;
            let do_ = dxo * dxo + dyo * dyo + dzo * dzo;
            sn += $w[l] * (1.0 / dn.sqrt()).min($inv_cap);
            so += $w[l] * (1.0 / do_.sqrt()).min($inv_cap);
        }
        (sn, so)
    }};
}

macro_rules! weighted_one_body {
    ($xs:ident, $ys:ident, $zs:ident, $w:ident, $point:ident, $inv_cap:ident) => {{
        let mut acc = [0.0f64; 4];
        let mut it = $xs
            .chunks_exact(4)
            .zip($ys.chunks_exact(4))
            .zip($zs.chunks_exact(4))
            .zip($w.chunks_exact(4));
        for (((cx, cy), cz), cw) in it.by_ref() {
            let cx: &[f64; 4] = cx.try_into().unwrap();
            let cy: &[f64; 4] = cy.try_into().unwrap();
            let cz: &[f64; 4] = cz.try_into().unwrap();
            let cw: &[f64; 4] = cw.try_into().unwrap();
            for lane in 0..4 {
                let dx = $point[0] - cx[lane];
                let dy = $point[1] - cy[lane];
                let dz = $point[2] - cz[lane];
                let d = dx * dx + dy * dy + dz * dz;
                acc[lane] += cw[lane] * (1.0 / d.sqrt()).min($inv_cap);
            }
        }
        let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
        let tail = $xs.len() - $xs.len() % 4;
        for l in tail..$xs.len() {
            let dx = $point[0] - $xs[l];
            let dy = $point[1] - $ys[l];
            let dz = $point[2] - $zs[l];
            let d = dx * dx + dy * dy + dz * dz;
            s += $w[l] * (1.0 / d.sqrt()).min($inv_cap);
        }
        s
    }};
}

#[allow(clippy::too_many_arguments)]
fn weighted_pair_scalar(
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
    w: &[f64],
    new: [f64; 3],
    old: [f64; 3],
    inv_cap: f64,
) -> (f64, f64) {
    weighted_pair_body!(xs, ys, zs, w, new, old, inv_cap)
}

fn weighted_one_scalar(
    xs: &[f64],
    ys: &[f64],
    zs: &[f64],
    w: &[f64],
    point: [f64; 3],
    inv_cap: f64,
) -> f64 {
    weighted_one_body!(xs, ys, zs, w, point, inv_cap)
}

#[cfg(target_arch = "x86_64")]
mod avx {
    #[allow(clippy::too_many_arguments)]
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn weighted_pair_avx2(
        xs: &[f64],
        ys: &[f64],
        zs: &[f64],
        w: &[f64],
        new: [f64; 3],
        old: [f64; 3],
        inv_cap: f64,
    ) -> (f64, f64) {
        weighted_pair_body!(xs, ys, zs, w, new, old, inv_cap)
    }

    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn weighted_one_avx2(
        xs: &[f64],
        ys: &[f64],
        zs: &[f64],
        w: &[f64],
        point: [f64; 3],
        inv_cap: f64,
    ) -> f64 {
        weighted_one_body!(xs, ys, zs, w, point, inv_cap)
    }
}

/// Dispatcher, resolved once per chain.
#[derive(Clone, Copy)]
pub(crate) struct RowKernel {
    use_avx2: bool,
}

impl RowKernel {
    pub fn detect() -> Self {
        #[cfg(target_arch = "x86_64")]
        {
            Self {
                use_avx2: std::arch::is_x86_feature_detected!("avx2")
                    && std::arch::is_x86_feature_detected!("fma"),
            }
        }
        #[cfg(not(target_arch = "x86_64"))]
        {
            Self { use_avx2: false }
        }
    }

    /// `(sum w * capped 1/|new - x_l|, same for old)` over all `l`.
    #[allow(clippy::too_many_arguments)]
    #[inline]
    pub fn weighted_pair(
        &self,
        xs: &[f64],
        ys: &[f64],
        zs: &[f64],
        w: &[f64],
        new: [f64; 3],
        old: [f64; 3],
        inv_cap: f64,
    ) -> (f64, f64) {
        #[cfg(target_arch = "x86_64")]
        if self.use_avx2 {
            // dispatcher checked the features at construction
            return unsafe { avx::weighted_pair_avx2(xs, ys, zs, w, new, old, inv_cap) };
        }
        weighted_pair_scalar(xs, ys, zs, w, new, old, inv_cap)
    }

    /// `sum w * capped 1/|point - x_l|` over all `l`.
    #[inline]
    pub fn weighted_one(
        &self,
        xs: &[f64],
        ys: &[f64],
        zs: &[f64],
        w: &[f64],
        point: [f64; 3],
        inv_cap: f64,
    ) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if self.use_avx2 {
            return unsafe { avx::weighted_one_avx2(xs, ys, zs, w, point, inv_cap) };
        }
        weighted_one_scalar(xs, ys, zs, w, point, inv_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn avx_and_scalar_paths_agree() {
        let n = 103;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let zs: Vec<f64> = (0..n).map(|i| 0.1 * i as f64).collect();
        let w: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let new = [0.3, -0.2, 4.0];
        let old = [0.1, 0.0, 3.5];
        let k = RowKernel::detect();
        let (sn, so) = k.weighted_pair(&xs, &ys, &zs, &w, new, old, 16.0);
        let (rn, ro) = weighted_pair_scalar(&xs, &ys, &zs, &w, new, old, 16.0);
        assert!((sn - rn).abs() < 1e-9 * rn.abs());
        assert!((so - ro).abs() < 1e-9 * ro.abs());
        let s1 = k.weighted_one(&xs, &ys, &zs, &w, new, 16.0);
        assert!((s1 - sn).abs() < 1e-9 * sn.abs());
    }
}
