//! Multi-vehicle scenes: one region of interest per vehicle.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use super::{
    draw_jitter, emission_levels, observe, ChannelError, ChannelParams, EmissionSchedule,
    LuminanceTrace,
};
use crate::rng::SeedPath;
use crate::VehicleId;

#[derive(Debug, Clone, PartialEq)]
pub struct Emitter {
    pub vehicle_id: VehicleId,
    pub lane_offset_m: f64,
    pub distance_m: f64,
    pub schedule: EmissionSchedule,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub emitters: Vec<Emitter>,
    pub camera_height_m: f64,
}

/// Stray light from one vehicle's headlights into another's region of
/// interest: `min(ceiling, coefficient / lateral_separation²)` times the
/// source's lit level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakageModel {
    /// In m².
    pub coefficient: f64,
    pub ceiling: f64,
    /// Emitters closer than this laterally cannot be told apart.
    pub min_separation_m: f64,
}

impl Default for LeakageModel {
    fn default() -> Self {
        Self {
            coefficient: 0.05,
            ceiling: 0.05,
            min_separation_m: 1.0,
        }
    }
}

impl LeakageModel {
    pub fn factor(&self, separation_m: f64) -> f64 {
        (self.coefficient / (separation_m * separation_m)).min(self.ceiling)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoiOptions {
    pub leakage: LeakageModel,
    /// Vehicles whose region of interest is covered: the camera sees only
    /// background there.
    pub obstructed: Vec<VehicleId>,
}

impl Scene {
    /// Line-of-sight distance from the camera to a vehicle's headlights.
    pub fn range_to(&self, emitter: &Emitter) -> f64 {
        libm::hypot(emitter.distance_m, self.camera_height_m)
    }

    /// Channel parameters used for one vehicle's region of interest: the
    /// scene geometry sets the distance and the seed is split per vehicle.
    pub fn roi_params(&self, emitter: &Emitter, params: &ChannelParams) -> ChannelParams {
        ChannelParams {
            distance_m: self.range_to(emitter),
            seed: SeedPath::new(params.seed)
                .named("roi")
                .child(emitter.vehicle_id.0)
                .seed(),
            ..*params
        }
    }

    fn check(&self, min_separation_m: f64) -> Result<(), ChannelError> {
        for (i, a) in self.emitters.iter().enumerate() {
            for b in &self.emitters[i + 1..] {
                if a.vehicle_id == b.vehicle_id {
                    return Err(ChannelError::DuplicateVehicle(a.vehicle_id.0));
                }
                if (a.lane_offset_m - b.lane_offset_m).abs() < min_separation_m {
                    return Err(ChannelError::AmbiguousEmitters(
                        a.vehicle_id.0,
                        b.vehicle_id.0,
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Cuts the scene into one trace per vehicle. Each region sees its own
/// vehicle through the usual channel plus leakage from the others.
pub fn extract_rois(
    scene: &Scene,
    params: &ChannelParams,
    capture_duration: f64,
    options: &RoiOptions,
) -> Result<BTreeMap<VehicleId, LuminanceTrace>, ChannelError> {
    params.validate()?;
    scene.check(options.leakage.min_separation_m)?;
    let frames = params.frame_count(capture_duration);

    let mut lit = Vec::with_capacity(scene.emitters.len());
    for e in &scene.emitters {
        if capture_duration < e.schedule.span() {
            return Err(ChannelError::CaptureTooShort {
                capture: capture_duration,
                span: e.schedule.span(),
            });
        }
        let p = scene.roi_params(e, params);
        let shifted = e.schedule.shifted(draw_jitter(&p));
        lit.push((p, emission_levels(&shifted, &p, frames)));
    }

    let mut out = BTreeMap::new();
    for (i, e) in scene.emitters.iter().enumerate() {
        let mut leak = vec![0.0; frames];
        let mut any_leak = false;
        for (j, other) in scene.emitters.iter().enumerate() {
            if i == j {
                continue;
            }
            let k = options
                .leakage
                .factor((e.lane_offset_m - other.lane_offset_m).abs());
            if k == 0.0 {
                continue;
            }
            any_leak = true;
            for (acc, [l, r]) in leak.iter_mut().zip(&lit[j].1) {
                *acc += k * 0.5 * (l + r);
            }
        }
        let (p, levels) = &lit[i];
        let levels = if options.obstructed.contains(&e.vehicle_id) {
            vec![[0.0; 2]; frames]
        } else {
            levels.clone()
        };
        let trace = observe(&levels, any_leak.then_some(&leak[..]), p);
        out.insert(e.vehicle_id, trace);
    }
    Ok(out)
}
