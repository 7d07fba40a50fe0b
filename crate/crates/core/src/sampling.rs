//! Product initial states with uniformly distributed m_0^x and their
//! parity partners.

use std::f64::consts::PI;
use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::VectorizedLayerState;
use crate::error::{QcaError, Result};
use crate::linalg::ComplexMatrix;

/// Tolerance on the Bloch-sphere constraint when specs are read back in.
const SPHERE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductStateSpec {
    pub sample_id: usize,
    pub m0x: f64,
    pub m0y: f64,
    pub m0z: f64,
    pub theta: f64,
    pub phi: f64,
    pub is_partner: bool,
}

/// Piecewise arctangent with phi in (-pi, pi]; the origin maps to 0.
pub fn quadrant_angle(y: f64, x: f64) -> f64 {
    if x > 0.0 {
        (y / x).atan()
    } else if x < 0.0 {
        if y > 0.0 {
            (y / x).atan() + PI
        } else if y < 0.0 {
            (y / x).atan() - PI
        } else {
            PI
        }
    } else if y > 0.0 {
        PI / 2.0
    } else if y < 0.0 {
        -PI / 2.0
    } else {
        0.0
    }
}

impl ProductStateSpec {
    /// Spec from magnetizations on the sphere m^2 = 1/4.
    pub fn from_bloch(sample_id: usize, m0x: f64, m0y: f64, m0z: f64, is_partner: bool) -> Result<Self> {
        let r2 = m0x * m0x + m0y * m0y + m0z * m0z;
        if !r2.is_finite() || (r2 - 0.25).abs() > SPHERE_TOLERANCE {
            return Err(QcaError::InvalidParameter(format!(
                "magnetization ({m0x}, {m0y}, {m0z}) is off the Bloch sphere"
            )));
        }
        let theta = (2.0 * m0z).clamp(-1.0, 1.0).acos();
        let phi = quadrant_angle(m0y, m0x);
        Ok(Self { sample_id, m0x, m0y, m0z, theta, phi, is_partner })
    }

    /// Input with the given m0x, m0y = 0 and m0z = +sqrt(1/4 - m0x^2).
    pub fn in_xz_plane(sample_id: usize, m0x: f64) -> Result<Self> {
        if !(m0x.abs() <= 0.5) {
            return Err(QcaError::InvalidParameter(format!("|m0x| = {m0x} exceeds 1/2")));
        }
        Self::from_bloch(sample_id, m0x, 0.0, (0.25 - m0x * m0x).sqrt(), false)
    }

    /// Image under conjugation by the layer parity: (m0x, m0y) negated.
    pub fn partner(&self, sample_id: usize) -> Self {
        Self {
            sample_id,
            m0x: -self.m0x,
            m0y: -self.m0y,
            m0z: self.m0z,
            theta: self.theta,
            phi: quadrant_angle(-self.m0y, -self.m0x),
            is_partner: !self.is_partner,
        }
    }

    /// |psi><psi| with |psi> = cos(theta/2)|e> + e^{i phi} sin(theta/2)|v>,
    /// |e> the sigma_z = +1 level (index 1) and |v> the vacuum (index 0).
    pub fn site_density(&self) -> ComplexMatrix {
        let c_exc = C64::from((self.theta / 2.0).cos());
        let c_vac = C64::from_polar((self.theta / 2.0).sin(), self.phi);
        let ket = [c_vac, c_exc];
        Array2::from_shape_fn((2, 2), |(i, j)| ket[i] * ket[j].conj())
    }

    pub fn to_layer_state(&self, n_sites: usize) -> Result<VectorizedLayerState> {
        VectorizedLayerState::product_from_density(&self.site_density(), n_sites)
    }
}

/// Draws one unpartnered spec from its own stream seeded with `seed ^ sample_id`.
pub fn sample_one(sample_id: usize, seed: u64) -> ProductStateSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ sample_id as u64);
    let m0x: f64 = rng.random::<f64>() * 0.5;
    let alpha: f64 = rng.random::<f64>() * 2.0 * PI;
    let r = (0.25 - m0x * m0x).max(0.0).sqrt();
    let (m0y, m0z) = (r * alpha.sin(), r * alpha.cos());
    ProductStateSpec::from_bloch(sample_id, m0x, m0y, m0z, false).expect("on the sphere by construction")
}

/// `n` samples (ids 0..n) followed by their partners (ids n..2n).
pub fn sample_initial_states(n: usize, seed: u64) -> Result<Vec<ProductStateSpec>> {
    if n == 0 {
        return Err(QcaError::InvalidParameter("need at least one sample".into()));
    }
    let base: Vec<ProductStateSpec> = (0..n).map(|l| sample_one(l, seed)).collect();
    let partners: Vec<ProductStateSpec> = base.iter().map(|s| s.partner(s.sample_id + n)).collect();
    Ok(base.into_iter().chain(partners).collect())
}

/// Kolmogorov-Smirnov distance between the samples and Uniform[lo, hi].
pub fn ks_statistic_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

pub fn write_manifest<W: Write>(specs: &[ProductStateSpec], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for s in specs {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_manifest<R: Read>(r: R) -> Result<Vec<ProductStateSpec>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let s: ProductStateSpec = rec?;
        ProductStateSpec::from_bloch(s.sample_id, s.m0x, s.m0y, s.m0z, s.is_partner)
            .map_err(|e| QcaError::MalformedInput(format!("sample {}: {e}", s.sample_id)))?;
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Axis;
    use proptest::prelude::*;

    #[test]
    fn quadrant_angle_cases() {
        assert_eq!(quadrant_angle(0.0, 1.0), 0.0);
        assert!((quadrant_angle(1.0, -1.0) - 3.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(quadrant_angle(0.0, -1.0), PI);
        assert!((quadrant_angle(-1.0, -1.0) + 3.0 * PI / 4.0).abs() < 1e-15);
        assert_eq!(quadrant_angle(2.0, 0.0), PI / 2.0);
        assert_eq!(quadrant_angle(-2.0, 0.0), -PI / 2.0);
        assert_eq!(quadrant_angle(0.0, 0.0), 0.0);
        for (y, x) in [(0.3, 0.2), (-0.3, 0.2), (0.3, -0.2), (-0.3, -0.2)] {
            assert!((quadrant_angle(y, x) - f64::atan2(y, x)).abs() < 1e-15);
        }
    }

    #[test]
    fn edge_of_interval_is_the_x_pole() {
        let s = ProductStateSpec::from_bloch(0, 0.5, 0.0, 0.0, false).unwrap();
        assert!((s.theta - PI / 2.0).abs() < 1e-15);
        assert_eq!(s.phi, 0.0);
        let layer = s.to_layer_state(4).unwrap();
        assert!((layer.magnetization(Axis::X) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_polar_angle_is_the_excited_layer() {
        let s = ProductStateSpec::from_bloch(0, 0.0, 0.0, 0.5, false).unwrap();
        assert_eq!(s.theta, 0.0);
        let layer = s.to_layer_state(3).unwrap();
        assert!((layer.magnetization(Axis::Z) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn partner_flips_transverse_components() {
        let s = ProductStateSpec::from_bloch(3, 0.3, 0.4 * 0.5, (0.25f64 - 0.09 - 0.04).sqrt(), false).unwrap();
        let p = s.partner(13);
        assert_eq!((p.m0x, p.m0y, p.m0z), (-0.3, -s.m0y, s.m0z));
        assert!(p.is_partner && p.sample_id == 13);
        let a = s.to_layer_state(2).unwrap();
        let b = p.to_layer_state(2).unwrap();
        let c = a.z2_partner().to_coefficients().unwrap() - b.to_coefficients().unwrap();
        assert!(c.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn sampler_is_deterministic_and_balanced() {
        let a = sample_initial_states(50, 11).unwrap();
        let b = sample_initial_states(50, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        for l in 0..50 {
            assert_eq!(a[l + 50].m0x, -a[l].m0x);
            assert!(a[l].m0x >= 0.0 && a[l].m0x <= 0.5);
            assert!(!a[l].is_partner && a[l + 50].is_partner);
        }
        assert_ne!(sample_initial_states(50, 12).unwrap(), a);
    }

    #[test]
    fn sample_streams_do_not_depend_on_ensemble_size() {
        let small = sample_initial_states(5, 3).unwrap();
        let large = sample_initial_states(20, 3).unwrap();
        assert_eq!(small[..5], large[..5]);
    }

    #[test]
    fn sampled_order_parameter_is_uniform() {
        let specs = sample_initial_states(10_000, 2024).unwrap();
        let pos: Vec<f64> = specs[..10_000].iter().map(|s| s.m0x).collect();
        assert!(ks_statistic_uniform(&pos, 0.0, 0.5) < ks_critical_1pct(pos.len()));
        let all: Vec<f64> = specs.iter().map(|s| s.m0x).collect();
        assert!(ks_statistic_uniform(&all, -0.5, 0.5) < ks_critical_1pct(all.len()));
    }

    #[test]
    fn ks_detects_a_skewed_sample() {
        let skewed: Vec<f64> = (0..1000).map(|i| 0.5 * (i as f64 / 1000.0).powi(2)).collect();
        assert!(ks_statistic_uniform(&skewed, 0.0, 0.5) > ks_critical_1pct(1000));
    }

    #[test]
    fn manifest_round_trip() {
        let specs = sample_initial_states(3, 5).unwrap();
        let mut buf = Vec::new();
        write_manifest(&specs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("sample_id,m0x,m0y,m0z,theta,phi,is_partner\n"));
        assert_eq!(read_manifest(&buf[..]).unwrap(), specs);
    }

    #[test]
    fn off_sphere_manifest_is_rejected() {
        let text = "sample_id,m0x,m0y,m0z,theta,phi,is_partner\n0,0.3,0.0,0.0,1.0,0.0,false\n";
        assert!(matches!(read_manifest(text.as_bytes()), Err(QcaError::MalformedInput(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn layer_state_reproduces_spec_magnetization(id in 0usize..1000, seed in any::<u64>(), partner in any::<bool>()) {
            let mut s = sample_one(id, seed);
            if partner {
                s = s.partner(id + 1000);
            }
            prop_assert!((s.m0x.powi(2) + s.m0y.powi(2) + s.m0z.powi(2) - 0.25).abs() < 1e-12);
            prop_assert!(s.theta >= 0.0 && s.theta <= PI);
            prop_assert!(s.phi > -PI && s.phi <= PI);
            let layer = s.to_layer_state(3).unwrap();
            prop_assert!((layer.magnetization(Axis::X) - s.m0x).abs() < 1e-12);
            prop_assert!((layer.magnetization(Axis::Y) - s.m0y).abs() < 1e-12);
            prop_assert!((layer.magnetization(Axis::Z) - s.m0z).abs() < 1e-12);
        }
    }
}
