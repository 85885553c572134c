use crate::error::Result;
use crate::model::ParticleSet;
use crate::velocity::{self, GridBackend, GridVelocity, Interpolation, StreamInterpolant};

/// Source of the advecting velocity.
pub trait VelocityProvider: Sync {
    /// Recomputes the field for the given particle positions.
    fn refresh(&mut self, particles: &ParticleSet) -> Result<()>;
    fn sample(&self, r: f64, s: f64) -> Result<(f64, f64)>;
    fn max_speed(&self) -> f64;
}

/// The grid pipeline.
#[derive(Debug, Clone)]
pub struct GridProvider {
    pub backend: GridBackend,
    pub interpolation: Interpolation,
    current: Option<GridVelocity>,
    stream: Option<StreamInterpolant>,
}

impl GridProvider {
    pub fn new(backend: GridBackend) -> Self {
        GridProvider {
            backend,
            interpolation: Interpolation::Stream,
            current: None,
            stream: None,
        }
    }

    pub fn with_interpolation(backend: GridBackend, interpolation: Interpolation) -> Self {
        GridProvider {
            interpolation,
            ..Self::new(backend)
        }
    }

    /// Field of the last refresh.
    pub fn current(&self) -> Option<&GridVelocity> {
        self.current.as_ref()
    }
}

impl VelocityProvider for GridProvider {
    fn refresh(&mut self, particles: &ParticleSet) -> Result<()> {
        let field = self.backend.compute(particles)?;
        self.stream = match self.interpolation {
            Interpolation::Stream => Some(StreamInterpolant::new(&field.psi, &self.backend.cfg)),
            Interpolation::Bilinear => None,
        };
        self.current = Some(field);
        Ok(())
    }

    fn sample(&self, r: f64, s: f64) -> Result<(f64, f64)> {
        if let Some(si) = &self.stream {
            return si.velocity(r, s);
        }
        let cur = self.current.as_ref().expect("refresh before sampling");
        velocity::sample_velocity(&cur.velocity, r, s)
    }

    fn max_speed(&self) -> f64 {
        self.current
            .as_ref()
            .map_or(0.0, |c| velocity::max_speed(&c.velocity))
    }
}

/// A prescribed field, independent of the particles.
pub struct AnalyticProvider<F> {
    f: F,
    /// Reported maximum speed.
    pub speed: f64,
}

impl<F: Fn(f64, f64) -> (f64, f64) + Sync> AnalyticProvider<F> {
    pub fn new(f: F) -> Self {
        AnalyticProvider { f, speed: 1.0 }
    }
}

impl<F: Fn(f64, f64) -> (f64, f64) + Sync> VelocityProvider for AnalyticProvider<F> {
    fn refresh(&mut self, _particles: &ParticleSet) -> Result<()> {
        Ok(())
    }

    fn sample(&self, r: f64, s: f64) -> Result<(f64, f64)> {
        Ok((self.f)(r, s))
    }

    fn max_speed(&self) -> f64 {
        self.speed
    }
}
