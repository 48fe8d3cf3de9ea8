//! Lévy (characteristic) measures, their truncated moments and the
//! small-jump scaling `alpha(eps) = (∫_{|x|≤eps} x² ν(dx))^{1/2}`, plus
//! compound-Poisson sampling of the jumps inside a size band.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{invalid, Error, Result};
use crate::scalar::{loglog_slope, Real};

/// Default per-path cap on the expected number of sampled jumps.
pub const DEFAULT_JUMP_BUDGET: f64 = 1e7;

/// Default slope threshold used by [`LevyMeasure::ratio_verdict`].
pub const DEFAULT_SLOPE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    Symmetric,
    /// Mass on `x > 0` only. Gives a nonzero third moment.
    PositiveOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom<T> {
    pub location: T,
    pub mass: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T> {
    /// Density `c |x|^{-1-beta}` on the side(s) selected by `sided`.
    StableLike { intensity: T, index: T, sided: Sidedness },
    /// Density `c` on `0 < |x| <= radius`.
    UniformDensity { level: T, radius: T },
    /// Finite sum of point masses.
    Atomic { atoms: Vec<Atom<T>> },
}

/// A validated characteristic measure.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyMeasure<T> {
    family: Family<T>,
}

/// Inner truncation for simulating an infinite-activity measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffPlan<T> {
    pub epsilon: T,
    pub delta: T,
    /// Second moment below `delta` relative to the second moment below `epsilon`.
    pub neglected_fraction: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<T> {
    pub time: T,
    pub size: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioTrend {
    Vanishing,
    NonVanishing,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioVerdict<T> {
    pub trend: RatioTrend,
    /// Fitted slope of `ln(eps/alpha)` against `ln eps`; `None` when undefined.
    pub slope: Option<T>,
}

impl<T: Real> LevyMeasure<T> {
    pub fn stable(intensity: T, index: T, sided: Sidedness) -> Result<Self> {
        if !(intensity > T::zero()) || !intensity.is_finite() {
            return Err(invalid("stable intensity must be positive and finite"));
        }
        if !(index > T::zero() && index < T::lit(2.0)) {
            return Err(invalid("stability index must lie in (0, 2)"));
        }
        Ok(Self {
            family: Family::StableLike { intensity, index, sided },
        })
    }

    pub fn uniform(level: T, radius: T) -> Result<Self> {
        if !(level > T::zero()) || !level.is_finite() {
            return Err(invalid("uniform density level must be positive and finite"));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(invalid("uniform support radius must be positive and finite"));
        }
        Ok(Self {
            family: Family::UniformDensity { level, radius },
        })
    }

    pub fn atomic(atoms: Vec<Atom<T>>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("atomic measure needs at least one atom"));
        }
        for a in &atoms {
            if a.location == T::zero() || !a.location.is_finite() {
                return Err(invalid("atom locations must be finite and nonzero"));
            }
            if !(a.mass > T::zero()) || !a.mass.is_finite() {
                return Err(invalid("atom masses must be positive and finite"));
            }
        }
        Ok(Self {
            family: Family::Atomic { atoms },
        })
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::StableLike { sided, .. } => *sided == Sidedness::Symmetric,
            Family::UniformDensity { .. } => true,
            Family::Atomic { atoms } => atoms.iter().all(|a| {
                let mirror: T = atoms
                    .iter()
                    .filter(|b| b.location == -a.location)
                    .map(|b| b.mass)
                    .sum();
                mirror == a.mass
            }),
        }
    }

    /// True when the measure has finite total mass near the origin, so a zero
    /// inner cutoff is admissible.
    pub fn finite_activity(&self) -> bool {
        !matches!(self.family, Family::StableLike { .. })
    }

    /// Lebesgue density at `x`, or `None` for the atomic family.
    pub fn density(&self, x: f64) -> Option<f64> {
        match &self.family {
            Family::StableLike { intensity, index, sided } => {
                if x == 0.0 || (*sided == Sidedness::PositiveOnly && x < 0.0) {
                    return Some(0.0);
                }
                Some(intensity.to_f64_lossy() * x.abs().powf(-1.0 - index.to_f64_lossy()))
            }
            Family::UniformDensity { level, radius } => {
                if x != 0.0 && x.abs() <= radius.to_f64_lossy() {
                    Some(level.to_f64_lossy())
                } else {
                    Some(0.0)
                }
            }
            Family::Atomic { .. } => None,
        }
    }

    /// `∫_{|x|≤eps} x² ν(dx)`.
    pub fn truncated_second_moment(&self, eps: T) -> T {
        match &self.family {
            Family::StableLike { intensity, index, sided } => {
                let two = T::lit(2.0);
                side_weight::<T>(*sided) * *intensity * eps.powf(two - *index) / (two - *index)
            }
            Family::UniformDensity { level, radius } => {
                let r = eps.min(*radius);
                T::lit(2.0) * *level * r * r * r / T::lit(3.0)
            }
            Family::Atomic { atoms } => atoms
                .iter()
                .filter(|a| a.location.abs() <= eps)
                .map(|a| a.mass * a.location * a.location)
                .sum(),
        }
    }

    /// `∫_{|x|≤eps} x³ ν(dx)`; identically zero for symmetric measures.
    pub fn truncated_third_moment(&self, eps: T) -> T {
        match &self.family {
            Family::StableLike { intensity, index, sided } => match sided {
                Sidedness::Symmetric => T::zero(),
                Sidedness::PositiveOnly => {
                    let three = T::lit(3.0);
                    *intensity * eps.powf(three - *index) / (three - *index)
                }
            },
            Family::UniformDensity { .. } => T::zero(),
            Family::Atomic { atoms } => atoms
                .iter()
                .filter(|a| a.location.abs() <= eps)
                .map(|a| a.mass * a.location.powi(3))
                .sum(),
        }
    }

    pub fn alpha(&self, eps: T) -> T {
        self.truncated_second_moment(eps).sqrt()
    }

    /// `eps / alpha(eps)`.
    pub fn small_jump_ratio(&self, eps: T) -> Result<T> {
        let a = self.alpha(eps);
        if a == T::zero() {
            return Err(Error::SmallJumpMassAbsent { eps: eps.to_f64_lossy() });
        }
        Ok(eps / a)
    }

    /// Decides whether `eps/alpha(eps)` vanishes as `eps → 0` from a
    /// strictly decreasing grid of at least four points.
    pub fn ratio_verdict(&self, eps_grid: &[T], slope_tolerance: T) -> Result<RatioVerdict<T>> {
        if eps_grid.len() < 4 {
            return Err(invalid("ratio verdict needs at least 4 grid points"));
        }
        if eps_grid.windows(2).any(|w| !(w[1] < w[0])) || !(eps_grid[eps_grid.len() - 1] > T::zero())
        {
            return Err(invalid("eps grid must be positive and strictly decreasing"));
        }
        let mut ratios = Vec::with_capacity(eps_grid.len());
        for &eps in eps_grid {
            match self.small_jump_ratio(eps) {
                Ok(r) => ratios.push(r),
                Err(Error::SmallJumpMassAbsent { .. }) => {
                    return Ok(RatioVerdict { trend: RatioTrend::Undefined, slope: None })
                }
                Err(e) => return Err(e),
            }
        }
        let slope = loglog_slope(eps_grid, &ratios);
        let trend = match slope {
            Some(s) if s > slope_tolerance => RatioTrend::Vanishing,
            Some(_) => RatioTrend::NonVanishing,
            None => RatioTrend::Undefined,
        };
        Ok(RatioVerdict { trend, slope })
    }

    fn check_band(&self, delta: T, eps: T) -> Result<()> {
        if !(delta >= T::zero()) || !(delta < eps) {
            return Err(invalid("jump band requires 0 <= delta < eps"));
        }
        if delta == T::zero() && !self.finite_activity() {
            return Err(Error::InfiniteIntensity {
                delta: 0.0,
                eps: eps.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Compound-Poisson rate `ν({delta ≤ |x| ≤ eps})`.
    pub fn jump_intensity(&self, delta: T, eps: T) -> Result<T> {
        self.check_band(delta, eps)?;
        Ok(match &self.family {
            Family::StableLike { intensity, index, sided } => {
                side_weight::<T>(*sided) * *intensity * (delta.powf(-*index) - eps.powf(-*index))
                    / *index
            }
            Family::UniformDensity { level, radius } => {
                let hi = eps.min(*radius);
                if hi <= delta {
                    T::zero()
                } else {
                    T::lit(2.0) * *level * (hi - delta)
                }
            }
            Family::Atomic { atoms } => in_band(atoms, delta, eps).map(|a| a.mass).sum(),
        })
    }

    /// Band mean `∫_{delta≤|x|≤eps} x ν(dx)`, the per-unit-time compensator drift.
    pub fn compensator_mean(&self, delta: T, eps: T) -> Result<T> {
        self.check_band(delta, eps)?;
        Ok(match &self.family {
            Family::StableLike { intensity, index, sided } => match sided {
                Sidedness::Symmetric => T::zero(),
                Sidedness::PositiveOnly => {
                    let one = T::one();
                    if *index == one {
                        *intensity * (eps / delta).ln()
                    } else {
                        *intensity * (eps.powf(one - *index) - delta.powf(one - *index))
                            / (one - *index)
                    }
                }
            },
            Family::UniformDensity { .. } => T::zero(),
            Family::Atomic { atoms } => in_band(atoms, delta, eps).map(|a| a.mass * a.location).sum(),
        })
    }

    /// Chooses the inner cutoff `delta` so that the second moment neglected
    /// below it is at most `neglect_tol` of the moment below `eps`.
    pub fn inner_cutoff(&self, eps: T, neglect_tol: T) -> Result<CutoffPlan<T>> {
        if !(neglect_tol > T::zero() && neglect_tol < T::one()) {
            return Err(invalid("neglect tolerance must lie in (0, 1)"));
        }
        let total = self.truncated_second_moment(eps);
        if total == T::zero() {
            return Err(Error::SmallJumpMassAbsent { eps: eps.to_f64_lossy() });
        }
        let delta = match &self.family {
            Family::StableLike { index, .. } => {
                eps * neglect_tol.powf(T::one() / (T::lit(2.0) - *index))
            }
            Family::UniformDensity { radius, .. } => {
                eps.min(*radius) * neglect_tol.powf(T::one() / T::lit(3.0))
            }
            Family::Atomic { .. } => T::zero(),
        };
        let neglected_fraction = if delta == T::zero() {
            T::zero()
        } else {
            self.truncated_second_moment(delta) / total
        };
        Ok(CutoffPlan { epsilon: eps, delta, neglected_fraction })
    }

    /// Inverse-transform draw of a jump size from ν restricted to the band,
    /// given `u` uniform on `[0, 1)` and a sign draw.
    ///
    /// StableLike: `|x| = (δ^{-β} − u(δ^{-β} − ε^{-β}))^{-1/β}`.
    /// UniformDensity: `|x| = δ + u(min(ε,R) − δ)`.
    /// Atomic: atom picked by cumulative mass.
    pub fn band_size_quantile(&self, plan: &CutoffPlan<T>, u: T, negative: bool) -> T {
        let (delta, eps) = (plan.delta, plan.epsilon);
        match &self.family {
            Family::StableLike { index, sided, .. } => {
                let lo = delta.powf(-*index);
                let hi = eps.powf(-*index);
                let mag = (lo - u * (lo - hi)).powf(-T::one() / *index);
                signed(mag.max(delta).min(eps), *sided == Sidedness::Symmetric && negative)
            }
            Family::UniformDensity { radius, .. } => {
                let hi = eps.min(*radius);
                signed((delta + u * (hi - delta)).min(hi), negative)
            }
            Family::Atomic { atoms } => {
                let total: T = in_band(atoms, delta, eps).map(|a| a.mass).sum();
                let target = u * total;
                let mut acc = T::zero();
                let mut last = T::zero();
                for a in in_band(atoms, delta, eps) {
                    acc = acc + a.mass;
                    last = a.location;
                    if target < acc {
                        return a.location;
                    }
                }
                last
            }
        }
    }

    /// Samples the Poisson point process of jumps in the band of `plan` over
    /// `[0, horizon]`. Arrival gaps are exponential, so times are increasing
    /// and the count is Poisson with mean `horizon · intensity`.
    pub fn sample_jumps<R: Rng + ?Sized>(
        &self,
        plan: &CutoffPlan<T>,
        horizon: T,
        rng: &mut R,
        budget: f64,
    ) -> Result<Vec<JumpEvent<T>>> {
        let rate = self.jump_intensity(plan.delta, plan.epsilon)?;
        let expected = (rate * horizon).to_f64_lossy();
        if !expected.is_finite() || expected > budget {
            return Err(Error::JumpBudgetExceeded { expected, budget });
        }
        let mut events = Vec::new();
        if rate == T::zero() {
            return Ok(events);
        }
        events.reserve((expected + 4.0 * expected.sqrt() + 1.0) as usize);
        let rate = rate.to_f64_lossy();
        let horizon = horizon.to_f64_lossy();
        let mut t = 0.0f64;
        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / rate;
            if t > horizon {
                break;
            }
            let u: f64 = rng.random();
            let negative: bool = rng.random();
            let size = self.band_size_quantile(plan, T::lit(u), negative);
            events.push(JumpEvent { time: T::lit(t), size });
        }
        Ok(events)
    }
}

fn side_weight<T: Real>(sided: Sidedness) -> T {
    match sided {
        Sidedness::Symmetric => T::lit(2.0),
        Sidedness::PositiveOnly => T::one(),
    }
}

fn signed<T: Real>(mag: T, negative: bool) -> T {
    if negative {
        -mag
    } else {
        mag
    }
}

fn in_band<T: Real>(atoms: &[Atom<T>], delta: T, eps: T) -> impl Iterator<Item = &Atom<T>> {
    atoms
        .iter()
        .filter(move |a| a.location.abs() >= delta && a.location.abs() <= eps)
}
