use super::{KernelEvaluator, KernelParams};
use crate::error::{Error, Result};
use crate::model::{ParticleSet, QuadrantPoint, SymmetryConfig};
use crate::parallel;

fn psi_with(ev: &mut KernelEvaluator, particles: &ParticleSet, p: QuadrantPoint) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..particles.len() {
        if particles.nu[i] == 0.0 {
            continue;
        }
        acc += ev.psi_kernel(p, particles.point(i))? * particles.nu[i];
    }
    Ok(acc)
}

fn velocity_with(
    ev: &mut KernelEvaluator,
    particles: &ParticleSet,
    p: QuadrantPoint,
) -> Result<(f64, f64)> {
    let (mut ur, mut us) = (0.0, 0.0);
    for i in 0..particles.len() {
        let nu = particles.nu[i];
        if nu == 0.0 {
            continue;
        }
        let (kr, ks) = ev.velocity_kernel(p, particles.point(i))?;
        ur += kr * nu;
        us += ks * nu;
    }
    Ok((ur, us))
}

/// `psi(P) = sum_i K_psi(P, Q_i) nu_i`.
pub fn eval_psi(
    particles: &ParticleSet,
    p: QuadrantPoint,
    cfg: &SymmetryConfig,
    params: &KernelParams,
) -> Result<f64> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let mut ev = KernelEvaluator::new(*cfg, *params)?;
    psi_with(&mut ev, particles, p)
}

/// `(u^r, u^s)(P)` from the velocity kernels.
pub fn eval_velocity(
    particles: &ParticleSet,
    p: QuadrantPoint,
    cfg: &SymmetryConfig,
    params: &KernelParams,
) -> Result<(f64, f64)> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let mut ev = KernelEvaluator::new(*cfg, *params)?;
    velocity_with(&mut ev, particles, p)
}

/// Stream function at many targets, distributed over workers.
pub fn eval_psi_many(
    particles: &ParticleSet,
    targets: &[QuadrantPoint],
    cfg: &SymmetryConfig,
    params: &KernelParams,
) -> Result<Vec<f64>> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let proto = KernelEvaluator::new(*cfg, *params)?;
    parallel::map_init(
        targets,
        || proto.clone(),
        |ev, &p| psi_with(ev, particles, p),
    )
    .into_iter()
    .collect()
}

/// Direct `O(N T)` velocity at every target.
pub fn velocity_direct(
    particles: &ParticleSet,
    targets: &[QuadrantPoint],
    cfg: &SymmetryConfig,
    params: &KernelParams,
) -> Result<Vec<(f64, f64)>> {
    if particles.is_empty() {
        return Err(Error::EmptyParticleSet);
    }
    let proto = KernelEvaluator::new(*cfg, *params)?;
    parallel::map_init(
        targets,
        || proto.clone(),
        |ev, &p| velocity_with(ev, particles, p),
    )
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SymmetryConfig {
        SymmetryConfig::new(1, 1).unwrap()
    }

    fn single(r: f64, s: f64, nu: f64) -> ParticleSet {
        let c = cfg();
        let q = nu / c.weight(r, s);
        ParticleSet::from_parts(&c, &[QuadrantPoint { r, s }], &[q], &[1.0], 1.0)
    }

    #[test]
    fn empty_set() {
        let empty = ParticleSet::from_parts(&cfg(), &[], &[], &[], 1.0);
        let p = QuadrantPoint { r: 1.0, s: 1.0 };
        assert!(matches!(
            eval_psi(&empty, p, &cfg(), &KernelParams::default()),
            Err(Error::EmptyParticleSet)
        ));
        assert!(velocity_direct(&empty, &[p], &cfg(), &KernelParams::default()).is_err());
    }

    #[test]
    fn linearity_is_exact() {
        let a = single(1.0, 1.5, 0.3);
        let b = single(2.0, 0.7, -0.1);
        let k = KernelParams::with_delta(0.01);
        let p = QuadrantPoint { r: 1.3, s: 1.1 };
        let sep = eval_psi(&a, p, &cfg(), &k).unwrap() + eval_psi(&b, p, &cfg(), &k).unwrap();
        let joint = eval_psi(&a.merged(&b), p, &cfg(), &k).unwrap();
        assert_eq!(sep, joint);
    }

    #[test]
    fn far_field_power_law() {
        // the axis-vanishing source behaves like r s times a Newtonian
        // potential in d + 4 dimensions, so along the diagonal ray the
        // decay exponent is d (not d - 2)
        let src = single(1.0, 1.0, 1.0);
        let k = KernelParams::default();
        let vals: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|&t| {
                eval_psi(&src, QuadrantPoint { r: t, s: t }, &cfg(), &k)
                    .unwrap()
                    .abs()
                    .ln()
            })
            .collect();
        let slope = (vals[2] - vals[0]) / 4f64.ln();
        assert!((slope + 4.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn mirrored_pair_symmetry() {
        let c = cfg();
        let pts = [
            QuadrantPoint { r: 1.0, s: 2.0 },
            QuadrantPoint { r: 2.0, s: 1.0 },
        ];
        let nu = 0.5;
        let qs: Vec<f64> = pts.iter().map(|p| nu / c.weight(p.r, p.s)).collect();
        let set = ParticleSet::from_parts(&c, &pts, &qs, &[1.0, 1.0], 1.0);
        let k = KernelParams::with_delta(0.05);
        for (a, b) in [(1.3, 1.7), (1.0, 2.0)] {
            let u = velocity_direct(
                &set,
                &[QuadrantPoint { r: a, s: b }, QuadrantPoint { r: b, s: a }],
                &c,
                &k,
            )
            .unwrap();
            assert!((u[0].0 + u[1].1).abs() < 1e-11 * u[0].0.abs(), "{u:?}");
            assert!((u[0].1 + u[1].0).abs() < 1e-11 * u[0].1.abs());
        }
    }
}
