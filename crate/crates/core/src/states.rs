//! State families: maximally entangled and antisymmetric vectors, the
//! isotropic segment, the 3x3 tiles bound-entangled state, seeded random
//! and separable samplers, and regrouped tensor powers.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::linalg::{
    basis_vector, kron_vec, permute_systems, tensor, BipartiteShape, ComplexMatrix, DensityMatrix, C64, ZERO,
};
use crate::rng::{ginibre, random_unit_vector, seeded};

pub const DEFAULT_DIM_CAP: usize = 4096;
pub const DIM_CAP_ENV: &str = "SEPKIT_DIM_CAP";
const WEIGHT_TOL: f64 = 1e-10;

/// Total-dimension cap for tensor powers and extensions; `SEPKIT_DIM_CAP`
/// overrides the default.
pub fn dim_cap() -> usize {
    std::env::var(DIM_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_DIM_CAP)
}

pub fn check_cap(requested: usize, cap: usize) -> Result<()> {
    if requested > cap {
        return Err(Error::CapExceeded { requested, cap });
    }
    Ok(())
}

/// Finite mixture `sum_i p_i rho_i` over one shape.
#[derive(Clone, Debug)]
pub struct Ensemble {
    members: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(members: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let shape = first.1.shape();
        if members.iter().any(|(_, s)| s.shape() != shape) {
            return Err(Error::DimensionMismatch("ensemble members differ in shape".into()));
        }
        check_weights(members.iter().map(|(w, _)| *w))?;
        Ok(Ensemble { members })
    }

    pub fn uniform(states: Vec<DensityMatrix>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(states.into_iter().map(|s| (w, s)).collect())
    }

    pub fn members(&self) -> &[(f64, DensityMatrix)] {
        &self.members
    }

    pub fn shape(&self) -> BipartiteShape {
        self.members[0].1.shape()
    }

    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::mixture(self.members.iter().map(|(w, s)| (*w, s))).expect("validated at construction")
    }
}

#[derive(Clone, Debug)]
pub struct ProductMember {
    pub weight: f64,
    pub a: DensityMatrix,
    pub b: DensityMatrix,
}

/// Certificate of separability: `sum_i p_i a_i ⊗ b_i`.
#[derive(Clone, Debug)]
pub struct ProductEnsemble {
    members: Vec<ProductMember>,
    shape: BipartiteShape,
}

impl ProductEnsemble {
    pub fn new(members: Vec<ProductMember>) -> Result<Self> {
        let first = members.first().ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
        let shape = BipartiteShape::new(first.a.dim(), first.b.dim())?;
        if members.iter().any(|m| m.a.dim() != shape.dim_a || m.b.dim() != shape.dim_b) {
            return Err(Error::DimensionMismatch("product members differ in local dimension".into()));
        }
        check_weights(members.iter().map(|m| m.weight))?;
        Ok(ProductEnsemble { members, shape })
    }

    pub fn members(&self) -> &[ProductMember] {
        &self.members
    }

    pub fn shape(&self) -> BipartiteShape {
        self.shape
    }

    pub fn state(&self) -> DensityMatrix {
        let n = self.shape.total();
        let mut m = ComplexMatrix::zeros(n, n);
        for member in &self.members {
            m += &tensor(member.a.matrix(), member.b.matrix()).scale(member.weight);
        }
        DensityMatrix::from_trusted(m, self.shape)
    }

    /// The same mixture with each member as a joint product state.
    pub fn to_ensemble(&self) -> Ensemble {
        Ensemble {
            members: self
                .members
                .iter()
                .map(|m| (m.weight, DensityMatrix::from_trusted(tensor(m.a.matrix(), m.b.matrix()), self.shape)))
                .collect(),
        }
    }
}

fn check_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut total = 0.0;
    for w in weights {
        if !(w >= 0.0) {
            return Err(Error::InvalidArgument(format!("weight {w} is negative")));
        }
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::InvalidArgument(format!("weights sum to {total}, expected 1")));
    }
    Ok(())
}

/// `|Φ(d)> = (1/sqrt d) sum_i |i,i>`
pub fn max_entangled_vector(d: usize) -> Result<Vec<C64>> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("maximally entangled state needs d >= 2, got {d}")));
    }
    let mut v = vec![ZERO; d * d];
    let amp = 1.0 / (d as f64).sqrt();
    for i in 0..d {
        v[i * d + i] = C64::new(amp, 0.0);
    }
    Ok(v)
}

/// `(1/d) sum_{i,j} |i,i><j,j|`, entries exact.
pub fn max_entangled(d: usize) -> Result<DensityMatrix> {
    max_entangled_vector(d)?;
    let n = d * d;
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..d {
        for j in 0..d {
            m[(i * d + i, j * d + j)] = C64::new(1.0 / d as f64, 0.0);
        }
    }
    Ok(DensityMatrix::from_trusted(m, BipartiteShape::square(d)?))
}

/// `(|i>|j> - |j>|i>) / sqrt 2`
pub fn antisym_vector(i: usize, j: usize, d: usize) -> Result<Vec<C64>> {
    if !(i < j && j < d) {
        return Err(Error::InvalidArgument(format!("need 0 <= i < j < d, got i={i} j={j} d={d}")));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![ZERO; d * d];
    v[i * d + j] = C64::new(s, 0.0);
    v[j * d + i] = C64::new(-s, 0.0);
    Ok(v)
}

/// `(1 - t) rho + t Φ(d)`
pub fn segment_state(rho: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    let d = rho
        .shape()
        .local_dim()
        .ok_or_else(|| Error::DimensionMismatch("segment needs dim_a == dim_b".into()))?;
    let phi = max_entangled(d)?;
    let m = &rho.matrix().scale(1.0 - t) + &phi.matrix().scale(t);
    Ok(DensityMatrix::from_trusted(m, rho.shape()))
}

/// Isotropic state on the segment from `I/d^2` towards `Φ(d)`.
pub fn isotropic(d: usize, t: f64) -> Result<DensityMatrix> {
    segment_state(&DensityMatrix::maximally_mixed(BipartiteShape::square(d)?), t)
}

/// PPT threshold of the isotropic segment, `1 / (d + 1)`.
pub fn isotropic_ppt_threshold(d: usize) -> f64 {
    1.0 / (d as f64 + 1.0)
}

/// The five tiles product vectors as `(a, b)` factor pairs.
pub fn tiles_upb_factors() -> Vec<(Vec<C64>, Vec<C64>)> {
    let e = |i| basis_vector(3, i);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let diff = |i: usize, j: usize| -> Vec<C64> {
        let mut v = vec![ZERO; 3];
        v[i] = C64::new(s, 0.0);
        v[j] = C64::new(-s, 0.0);
        v
    };
    let uniform = vec![C64::new(1.0 / 3f64.sqrt(), 0.0); 3];
    vec![
        (e(0), diff(0, 1)),
        (e(2), diff(1, 2)),
        (diff(0, 1), e(2)),
        (diff(1, 2), e(0)),
        (uniform.clone(), uniform),
    ]
}

pub fn tiles_upb_vectors() -> Vec<Vec<C64>> {
    tiles_upb_factors().iter().map(|(a, b)| kron_vec(a, b)).collect()
}

/// `(I - sum_k |psi_k><psi_k|) / 4` for the tiles unextendible product basis.
pub fn tiles_upb_state() -> DensityMatrix {
    let mut m = ComplexMatrix::identity(9);
    for v in tiles_upb_vectors() {
        m -= &ComplexMatrix::projector(&v);
    }
    DensityMatrix::from_trusted(m.scale(0.25).hermitian_part(), BipartiteShape { dim_a: 3, dim_b: 3 })
}

/// Hilbert-Schmidt sample `G G^dagger / Tr(G G^dagger)`.
pub fn random_density(shape: BipartiteShape, seed: u64) -> DensityMatrix {
    let n = shape.total();
    let g = ginibre(n, n, &mut seeded(seed));
    let m = g.matmul(&g.adjoint()).hermitian_part();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.scale(1.0 / tr), shape)
}

fn local_pure(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let v = random_unit_vector(d, rng);
    DensityMatrix::from_trusted(ComplexMatrix::projector(&v), BipartiteShape { dim_a: d, dim_b: 1 })
}

pub fn random_product_pure(shape: BipartiteShape, seed: u64) -> DensityMatrix {
    let mut rng = seeded(seed);
    let a = local_pure(shape.dim_a, &mut rng);
    let b = local_pure(shape.dim_b, &mut rng);
    DensityMatrix::from_trusted(tensor(a.matrix(), b.matrix()), shape)
}

/// Mixture of `k` product pure states with flat-Dirichlet weights; returns
/// the state with its certifying ensemble.
pub fn random_separable(shape: BipartiteShape, k: usize, seed: u64) -> Result<(DensityMatrix, ProductEnsemble)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    let mut rng = seeded(seed);
    let raw: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1) + f64::MIN_POSITIVE).collect();
    let total: f64 = raw.iter().sum();
    let members = raw
        .iter()
        .map(|w| ProductMember {
            weight: w / total,
            a: local_pure(shape.dim_a, &mut rng),
            b: local_pure(shape.dim_b, &mut rng),
        })
        .collect();
    let ens = ProductEnsemble::new(members)?;
    Ok((ens.state(), ens))
}

/// Kronecker product of bipartite states regrouped as `A_1..A_n : B_1..B_n`.
pub fn regrouped_product(factors: &[&DensityMatrix], cap: usize) -> Result<DensityMatrix> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("no factors".into()));
    }
    let total: usize = factors.iter().try_fold(1usize, |acc, f| acc.checked_mul(f.dim())).unwrap_or(usize::MAX);
    check_cap(total, cap)?;
    let mut m = factors[0].matrix().clone();
    for f in &factors[1..] {
        m = tensor(&m, f.matrix());
    }
    let n = factors.len();
    let mut dims = Vec::with_capacity(2 * n);
    for f in factors {
        dims.push(f.shape().dim_a);
        dims.push(f.shape().dim_b);
    }
    let perm: Vec<usize> = (0..n).map(|i| 2 * i).chain((0..n).map(|i| 2 * i + 1)).collect();
    let m = permute_systems(&m, &dims, &perm)?;
    let shape = BipartiteShape::new(
        factors.iter().map(|f| f.shape().dim_a).product(),
        factors.iter().map(|f| f.shape().dim_b).product(),
    )?;
    Ok(DensityMatrix::from_trusted(m, shape))
}

/// `rho^{⊗n}` as a state on `A^n : B^n`, under the global dimension cap.
pub fn tensor_power_bipartite(rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
    tensor_power_bipartite_capped(rho, n, dim_cap())
}

pub fn tensor_power_bipartite_capped(rho: &DensityMatrix, n: usize, cap: usize) -> Result<DensityMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("tensor power needs n >= 1".into()));
    }
    let factors: Vec<&DensityMatrix> = std::iter::repeat_n(rho, n).collect();
    regrouped_product(&factors, cap)
}
