//! Timed 2D routes for the three evaluation drives, plus the
//! prediction-rate subsampler.
//!
//! Each route family is defined as a waypoint polyline in a reference frame
//! spanning the full-scale fingerprint area (2505 mm square). For a given
//! scenario the polyline is scaled into the scenario bounds and rigidly
//! jittered (rotation plus translation) by the seed, so distinct seeds drive
//! distinct but congruent paths of the declared length.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geom::{Bounds, PointMm};
use crate::rng;

/// Side of the reference frame the route templates are drawn in: the span
/// of the full-scale fingerprint grid (502 points at 5 mm).
pub const ROUTE_FRAME_MM: f64 = 2505.0;

/// Ground-truth sampling period of the simulated drive.
pub const DEFAULT_TIMESTEP_S: f64 = 0.05;

/// The three evaluation drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RouteKind {
    /// Straight line at constant speed.
    UniformMotion,
    /// Dog-leg polyline detouring around an implicit obstacle, with the
    /// robot slowing for the turns.
    ObstacleAvoidance,
    /// Driven path interrupted by one instantaneous teleport.
    Kidnap,
}

impl RouteKind {
    /// Driven path length in the reference frame, in millimetres.
    pub fn reference_length_mm(&self) -> f64 {
        match self {
            RouteKind::UniformMotion => 1429.0,
            RouteKind::ObstacleAvoidance => 1880.0,
            RouteKind::Kidnap => 1779.0,
        }
    }

    /// Experiment number used in file names and reports.
    pub fn experiment_number(&self) -> usize {
        match self {
            RouteKind::UniformMotion => 1,
            RouteKind::ObstacleAvoidance => 2,
            RouteKind::Kidnap => 3,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            RouteKind::UniformMotion => "uniform-motion",
            RouteKind::ObstacleAvoidance => "obstacle-avoidance",
            RouteKind::Kidnap => "kidnap",
        }
    }

    pub fn all() -> [RouteKind; 3] {
        [RouteKind::UniformMotion, RouteKind::ObstacleAvoidance, RouteKind::Kidnap]
    }
}

/// One template segment: heading (degrees, counter-clockwise from +x),
/// length (mm, reference frame) and driving speed (mm/s, reference frame).
struct TemplateLeg {
    heading_deg: f64,
    length_mm: f64,
    speed_mm_s: f64,
}

const fn leg(heading_deg: f64, length_mm: f64, speed_mm_s: f64) -> TemplateLeg {
    TemplateLeg { heading_deg, length_mm, speed_mm_s }
}

/// Straight 1429 mm drive at 30 degrees.
const UNIFORM_START: (f64, f64) = (538.0, 900.0);
const UNIFORM_LEGS: [TemplateLeg; 1] = [leg(30.0, 1429.0, 250.0)];

/// 1880 mm dog-leg around an obstacle near (900, 1100): the robot slows on
/// the four turning legs and speeds up on the straights.
const OBSTACLE_START: (f64, f64) = (820.0, 400.0);
const OBSTACLE_LEGS: [TemplateLeg; 6] = [
    leg(90.0, 420.0, 250.0),
    leg(30.0, 260.0, 180.0),
    leg(90.0, 300.0, 220.0),
    leg(150.0, 260.0, 180.0),
    leg(90.0, 360.0, 250.0),
    leg(45.0, 280.0, 200.0),
];

/// 1779 mm of driving split by one teleport of about 595 mm after the third
/// leg (the kidnap), at a constant 220 mm/s while driving.
const KIDNAP_START: (f64, f64) = (600.0, 700.0);
const KIDNAP_LEGS_BEFORE: [TemplateLeg; 3] =
    [leg(0.0, 350.0, 220.0), leg(60.0, 300.0, 220.0), leg(0.0, 250.0, 220.0)];
const KIDNAP_JUMP: (f64, f64) = (-200.0, 560.0);
const KIDNAP_LEGS_AFTER: [TemplateLeg; 3] =
    [leg(90.0, 300.0, 220.0), leg(150.0, 329.0, 220.0), leg(90.0, 250.0, 220.0)];

/// Rigid-jitter ranges applied to the scaled waypoints: rotation about the
/// route centroid and a translation, both small enough that every template
/// stays inside the bounds (verified at generation).
const JITTER_ROTATION_RAD: f64 = 0.1;
const JITTER_TRANSLATION_FRACTION: f64 = 0.02;

/// A timed polyline drive. Waypoints are scenario-frame millimetres; the
/// segment `waypoints[i] -> waypoints[i+1]` is driven at `speeds_mm_s[i]`,
/// except an optional teleport segment crossed in zero time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    kind: RouteKind,
    waypoints: Vec<PointMm>,
    speeds_mm_s: Vec<f64>,
    /// Index of the segment traversed instantaneously (the kidnap), if any.
    teleport_segment: Option<usize>,
    timestep_s: f64,
}

impl Route {
    pub fn new(
        kind: RouteKind,
        waypoints: Vec<PointMm>,
        speeds_mm_s: Vec<f64>,
        teleport_segment: Option<usize>,
        timestep_s: f64,
    ) -> Result<Self, SimError> {
        if waypoints.len() < 2 {
            return Err(SimError::BadRoute { what: "a route needs at least two waypoints" });
        }
        if waypoints.iter().any(|w| !w.is_finite()) {
            return Err(SimError::BadRoute { what: "waypoints must be finite" });
        }
        if speeds_mm_s.len() != waypoints.len() - 1 {
            return Err(SimError::BadRoute { what: "one speed per segment is required" });
        }
        if !(timestep_s.is_finite() && timestep_s > 0.0) {
            return Err(SimError::BadRoute { what: "timestep must be positive" });
        }
        match teleport_segment {
            Some(i) if i >= speeds_mm_s.len() => {
                return Err(SimError::BadRoute { what: "teleport segment out of range" });
            }
            Some(_) if kind != RouteKind::Kidnap => {
                return Err(SimError::BadRoute { what: "only kidnap routes teleport" });
            }
            None if kind == RouteKind::Kidnap => {
                return Err(SimError::BadRoute { what: "kidnap routes need a teleport segment" });
            }
            _ => {}
        }
        for (i, &s) in speeds_mm_s.iter().enumerate() {
            if Some(i) != teleport_segment && !(s.is_finite() && s > 0.0) {
                return Err(SimError::BadRoute { what: "driving speeds must be positive" });
            }
        }
        Ok(Self { kind, waypoints, speeds_mm_s, teleport_segment, timestep_s })
    }

    pub fn kind(&self) -> RouteKind {
        self.kind
    }

    pub fn waypoints(&self) -> &[PointMm] {
        &self.waypoints
    }

    pub fn timestep_s(&self) -> f64 {
        self.timestep_s
    }

    /// Total driven distance, excluding any teleport, in millimetres.
    pub fn driven_length_mm(&self) -> f64 {
        self.segments()
            .filter(|(i, _, _)| Some(*i) != self.teleport_segment)
            .map(|(_, a, b)| a.distance(&b))
            .sum()
    }

    /// Wall-clock duration of the drive in seconds (teleports are free).
    pub fn duration_s(&self) -> f64 {
        self.segments()
            .filter(|(i, _, _)| Some(*i) != self.teleport_segment)
            .map(|(i, a, b)| a.distance(&b) / self.speeds_mm_s[i])
            .sum()
    }

    /// The teleport as `(time s, target mm)`, if this is a kidnap route.
    pub fn kidnap_event(&self) -> Option<(f64, PointMm)> {
        let seg = self.teleport_segment?;
        let mut t = 0.0;
        for (i, a, b) in self.segments() {
            if i == seg {
                return Some((t, b));
            }
            t += a.distance(&b) / self.speeds_mm_s[i];
        }
        None
    }

    fn segments(&self) -> impl Iterator<Item = (usize, PointMm, PointMm)> + '_ {
        self.waypoints
            .windows(2)
            .enumerate()
            .map(|(i, w)| (i, w[0], w[1]))
    }

    /// Ground-truth positions at every simulator tick `0, dt, 2dt, ...` up
    /// to the route duration. At the kidnap instant itself the position is
    /// the post-teleport one.
    pub fn truth(&self) -> Vec<(f64, PointMm)> {
        // Segment schedule: (start time, duration, from, to); the teleport
        // contributes a zero-duration entry, so sampling at or after its
        // start lands on the later segment.
        let mut schedule = Vec::with_capacity(self.waypoints.len() - 1);
        let mut t = 0.0;
        for (i, a, b) in self.segments() {
            let duration = if Some(i) == self.teleport_segment {
                0.0
            } else {
                a.distance(&b) / self.speeds_mm_s[i]
            };
            schedule.push((t, duration, a, b));
            t += duration;
        }
        let total = t;

        let ticks = (total / self.timestep_s + 1e-9) as usize;
        let mut out = Vec::with_capacity(ticks + 1);
        for k in 0..=ticks {
            let tk = k as f64 * self.timestep_s;
            out.push((tk, position_at(&schedule, total, tk)));
        }
        out
    }
}

fn position_at(schedule: &[(f64, f64, PointMm, PointMm)], total: f64, t: f64) -> PointMm {
    if t >= total {
        return schedule.last().map(|&(_, _, _, b)| b).unwrap();
    }
    // Last segment whose start time is <= t; zero-duration segments are
    // skipped past, which puts the kidnap instant on the following segment.
    let mut current = 0;
    for (i, &(start, duration, _, _)) in schedule.iter().enumerate() {
        if start <= t && (duration > 0.0 || start < t) {
            current = i;
        }
    }
    let (start, duration, a, b) = schedule[current];
    if duration <= 0.0 {
        return b;
    }
    let f = ((t - start) / duration).clamp(0.0, 1.0);
    PointMm::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
}

/// Scale factor from the reference frame into `bounds`.
fn frame_scale(bounds: &Bounds) -> f64 {
    bounds.width().min(bounds.height()) / ROUTE_FRAME_MM
}

/// Build the seeded route of one kind inside the scenario bounds: the
/// template polyline is scaled by `min(bounds side)/2505`, rotated by up to
/// ±0.1 rad about its centroid, and translated by up to ±2% of the smaller
/// side. Driving speeds scale with the geometry, so durations are
/// scale-invariant. Fails with `OutOfBounds` if any jittered waypoint
/// leaves the bounds.
pub fn generate_route(kind: RouteKind, bounds: &Bounds, seed: u64) -> Result<Route, SimError> {
    if !bounds.is_valid() {
        return Err(SimError::BadParameter { what: "scenario bounds are empty or non-finite" });
    }
    let scale = frame_scale(bounds);

    let (start, legs, jump): (_, &[TemplateLeg], _) = match kind {
        RouteKind::UniformMotion => (UNIFORM_START, &UNIFORM_LEGS, None),
        RouteKind::ObstacleAvoidance => (OBSTACLE_START, &OBSTACLE_LEGS, None),
        RouteKind::Kidnap => (KIDNAP_START, &KIDNAP_LEGS_BEFORE, Some(KIDNAP_JUMP)),
    };

    // Reference-frame waypoints and per-segment speeds.
    let mut points = alloc::vec![PointMm::new(start.0, start.1)];
    let mut speeds = Vec::new();
    let mut teleport_segment = None;
    let extend = |points: &mut Vec<PointMm>, speeds: &mut Vec<f64>, legs: &[TemplateLeg]| {
        for l in legs {
            let last = *points.last().unwrap();
            let h = l.heading_deg.to_radians();
            points.push(PointMm::new(
                last.x + l.length_mm * h.cos(),
                last.y + l.length_mm * h.sin(),
            ));
            speeds.push(l.speed_mm_s);
        }
    };
    extend(&mut points, &mut speeds, legs);
    if let Some((dx, dy)) = jump {
        let last = *points.last().unwrap();
        teleport_segment = Some(speeds.len());
        points.push(PointMm::new(last.x + dx, last.y + dy));
        speeds.push(0.0); // crossed in zero time; value unused
        extend(&mut points, &mut speeds, &KIDNAP_LEGS_AFTER);
    }

    // Into the scenario frame.
    for p in &mut points {
        *p = PointMm::new(bounds.min.x + p.x * scale, bounds.min.y + p.y * scale);
    }
    for s in &mut speeds {
        *s *= scale;
    }

    // Seeded rigid jitter about the centroid.
    let mut jitter_rng = rng::stream(seed, &[kind.experiment_number() as u64]);
    let theta = jitter_rng.gen_range(-JITTER_ROTATION_RAD..=JITTER_ROTATION_RAD);
    let shift = JITTER_TRANSLATION_FRACTION * bounds.width().min(bounds.height());
    let dx = jitter_rng.gen_range(-shift..=shift);
    let dy = jitter_rng.gen_range(-shift..=shift);
    let cx = points.iter().map(|p| p.x).sum::<f64>() / points.len() as f64;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / points.len() as f64;
    let (sin_t, cos_t) = theta.sin_cos();
    for p in &mut points {
        let (rx, ry) = (p.x - cx, p.y - cy);
        *p = PointMm::new(
            cx + cos_t * rx - sin_t * ry + dx,
            cy + sin_t * rx + cos_t * ry + dy,
        );
    }

    for p in &points {
        if !bounds.contains(p) {
            return Err(SimError::OutOfBounds { x: p.x, y: p.y });
        }
    }

    let route = Route::new(kind, points, speeds, teleport_segment, DEFAULT_TIMESTEP_S)?;
    let declared = kind.reference_length_mm() * scale;
    if (route.driven_length_mm() - declared).abs() > 1.0 * scale.max(1e-6) {
        return Err(SimError::BadRoute { what: "generated length disagrees with the declared one" });
    }
    Ok(route)
}

/// Prediction rate (whole predictions per second) per antenna count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpsTable {
    entries: Vec<(usize, u32)>,
}

impl FpsTable {
    pub fn new(mut entries: Vec<(usize, u32)>) -> Result<Self, SimError> {
        if entries.is_empty() {
            return Err(SimError::BadParameter { what: "prediction-rate table is empty" });
        }
        entries.sort_unstable();
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SimError::BadParameter { what: "duplicate antenna count in rate table" });
        }
        if entries.iter().any(|&(_, fps)| fps == 0) {
            return Err(SimError::BadParameter { what: "prediction rates must be positive" });
        }
        Ok(Self { entries })
    }

    pub fn fps(&self, antennas: usize) -> Option<u32> {
        self.entries
            .iter()
            .find(|&&(a, _)| a == antennas)
            .map(|&(_, fps)| fps)
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }
}

impl Default for FpsTable {
    /// Published rates for the full-scale models: 8 -> 5, 16 -> 4,
    /// 32 -> 4, 64 -> 3 predictions per second.
    fn default() -> Self {
        Self { entries: alloc::vec![(8, 5), (16, 4), (32, 4), (64, 3)] }
    }
}

/// Ground-truth positions at the prediction instants `0, 1/fps, 2/fps, ...`
/// (each snapped to the nearest simulator tick). Sample count is
/// `floor(duration * fps) + 1`.
pub fn subsample(
    route: &Route,
    antennas: usize,
    fps_table: &FpsTable,
) -> Result<Vec<(f64, PointMm)>, SimError> {
    let fps = fps_table
        .fps(antennas)
        .ok_or(SimError::UnknownAntennaCount { antennas })? as f64;
    let truth = route.truth();
    let duration = route.duration_s();
    let count = (duration * fps + 1e-9) as usize + 1;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let t = i as f64 / fps;
        let tick = ((t / route.timestep_s()).round() as usize).min(truth.len() - 1);
        out.push((t, truth[tick].1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn desk_bounds() -> Bounds {
        Bounds::new(PointMm::new(0.0, 0.0), PointMm::new(500.0, 500.0))
    }

    fn full_bounds() -> Bounds {
        Bounds::new(PointMm::new(0.0, 0.0), PointMm::new(2505.0, 2505.0))
    }

    #[test]
    fn reference_lengths_match_the_declared_distances() {
        // In the full-scale frame the driven lengths are the declared ones.
        for kind in RouteKind::all() {
            for seed in 0..5 {
                let route = generate_route(kind, &full_bounds(), seed).unwrap();
                assert_abs_diff_eq!(
                    route.driven_length_mm(),
                    kind.reference_length_mm(),
                    epsilon = 1.0
                );
            }
        }
    }

    #[test]
    fn desk_scale_routes_shrink_by_the_frame_ratio() {
        let scale = 500.0 / ROUTE_FRAME_MM;
        for kind in RouteKind::all() {
            let route = generate_route(kind, &desk_bounds(), 3).unwrap();
            assert_abs_diff_eq!(
                route.driven_length_mm(),
                kind.reference_length_mm() * scale,
                epsilon = 1.0 * scale
            );
            for p in route.waypoints() {
                assert!(desk_bounds().contains(p), "waypoint {p:?} escaped the bounds");
            }
        }
    }

    #[test]
    fn durations_are_scale_invariant() {
        for kind in RouteKind::all() {
            let full = generate_route(kind, &full_bounds(), 9).unwrap();
            let desk = generate_route(kind, &desk_bounds(), 9).unwrap();
            assert_abs_diff_eq!(full.duration_s(), desk.duration_s(), epsilon = 1e-9);
        }
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let a = generate_route(RouteKind::ObstacleAvoidance, &desk_bounds(), 11).unwrap();
        let b = generate_route(RouteKind::ObstacleAvoidance, &desk_bounds(), 11).unwrap();
        let c = generate_route(RouteKind::ObstacleAvoidance, &desk_bounds(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.waypoints(), c.waypoints());
        assert_eq!(a.truth(), b.truth());
    }

    #[test]
    fn uniform_route_is_a_straight_constant_speed_drive() {
        let route = generate_route(RouteKind::UniformMotion, &full_bounds(), 2).unwrap();
        assert_eq!(route.waypoints().len(), 2);
        let truth = route.truth();
        // Ticks stop strictly before the route end, so every step is a full
        // speed * dt move.
        let step0 = truth[0].1.distance(&truth[1].1);
        assert_abs_diff_eq!(step0, 250.0 * DEFAULT_TIMESTEP_S, epsilon = 1e-9);
        for w in truth.windows(2) {
            assert_abs_diff_eq!(w[0].1.distance(&w[1].1), step0, epsilon = 1e-9);
        }
        assert!(route.kidnap_event().is_none());
    }

    #[test]
    fn kidnap_route_has_exactly_one_discontinuity() {
        for seed in 0..5 {
            let route = generate_route(RouteKind::Kidnap, &desk_bounds(), seed).unwrap();
            let truth = route.truth();
            let per_step: Vec<f64> = truth.windows(2).map(|w| w[0].1.distance(&w[1].1)).collect();
            // Typical per-step motion: speed * dt.
            let typical = 220.0 * (500.0 / ROUTE_FRAME_MM) * DEFAULT_TIMESTEP_S;
            let jumps = per_step.iter().filter(|&&d| d > 5.0 * typical).count();
            assert_eq!(jumps, 1, "seed {seed}");
            // And the jump is the kidnap displacement.
            let max = per_step.iter().cloned().fold(0.0, f64::max);
            let expected_jump =
                (200.0f64.powi(2) + 560.0f64.powi(2)).sqrt() * (500.0 / ROUTE_FRAME_MM);
            // The jump shares a tick with up to one step of driving.
            assert!((max - expected_jump).abs() < 2.0 * typical, "jump {max} vs {expected_jump}");
        }
    }

    #[test]
    fn non_kidnap_routes_have_no_discontinuity() {
        for kind in [RouteKind::UniformMotion, RouteKind::ObstacleAvoidance] {
            let route = generate_route(kind, &desk_bounds(), 1).unwrap();
            let truth = route.truth();
            let scale = 500.0 / ROUTE_FRAME_MM;
            let max_speed = 250.0 * scale;
            for w in truth.windows(2) {
                assert!(
                    w[0].1.distance(&w[1].1) <= max_speed * DEFAULT_TIMESTEP_S + 1e-9,
                    "{kind:?} moved too far in one tick"
                );
            }
        }
    }

    #[test]
    fn kidnap_event_reports_the_teleport_target() {
        let route = generate_route(RouteKind::Kidnap, &full_bounds(), 4).unwrap();
        let (t, target) = route.kidnap_event().unwrap();
        // The teleport happens after the three driven legs: 900 mm at 220.
        assert_abs_diff_eq!(t, 900.0 / 220.0, epsilon = 1e-9);
        // Truth at the kidnap instant is already the post-jump position...
        let truth = route.truth();
        let at = truth.iter().find(|(tt, _)| *tt >= t).unwrap();
        assert!(at.1.distance(&target) < 220.0 * DEFAULT_TIMESTEP_S + 1e-9);
        // ...and the waypoint list contains the target verbatim.
        assert!(route.waypoints().iter().any(|w| *w == target));
    }

    #[test]
    fn truth_ticks_are_uniform_in_time() {
        let route = generate_route(RouteKind::ObstacleAvoidance, &desk_bounds(), 7).unwrap();
        let truth = route.truth();
        for (k, (t, _)) in truth.iter().enumerate() {
            assert_abs_diff_eq!(*t, k as f64 * DEFAULT_TIMESTEP_S, epsilon = 1e-12);
        }
        let last = truth.last().unwrap().0;
        assert!(last <= route.duration_s() + 1e-9);
        assert!(last > route.duration_s() - DEFAULT_TIMESTEP_S - 1e-9);
    }

    #[test]
    fn subsample_counts_follow_the_rate_formula() {
        // A 10 s drive: 2500 mm straight at 250 mm/s in the full frame.
        let route = Route::new(
            RouteKind::UniformMotion,
            alloc::vec![PointMm::new(0.0, 0.0), PointMm::new(2500.0, 0.0)],
            alloc::vec![250.0],
            None,
            DEFAULT_TIMESTEP_S,
        )
        .unwrap();
        assert_abs_diff_eq!(route.duration_s(), 10.0, epsilon = 1e-12);
        let table = FpsTable::default();
        for (antennas, want) in [(8usize, 51usize), (16, 41), (32, 41), (64, 31)] {
            let samples = subsample(&route, antennas, &table).unwrap();
            assert_eq!(samples.len(), want, "{antennas} antennas");
        }
        assert!(matches!(
            subsample(&route, 7, &table),
            Err(SimError::UnknownAntennaCount { antennas: 7 })
        ));
    }

    #[test]
    fn subsample_positions_sit_on_truth_ticks() {
        let route = generate_route(RouteKind::UniformMotion, &desk_bounds(), 5).unwrap();
        let truth = route.truth();
        let samples = subsample(&route, 8, &FpsTable::default()).unwrap();
        for (t, p) in &samples {
            assert!(truth.iter().any(|(_, q)| q == p), "sample at {t} not a truth tick");
        }
        // First sample is the start, last is within one prediction period of
        // the end of the drive.
        assert_eq!(samples[0].1, truth[0].1);
        assert!(samples.last().unwrap().0 <= route.duration_s());
    }

    #[test]
    fn route_validation_rejects_malformed_inputs() {
        let two = alloc::vec![PointMm::new(0.0, 0.0), PointMm::new(1.0, 0.0)];
        assert!(matches!(
            Route::new(RouteKind::UniformMotion, alloc::vec![PointMm::new(0.0, 0.0)], alloc::vec![], None, 0.05),
            Err(SimError::BadRoute { .. })
        ));
        assert!(matches!(
            Route::new(RouteKind::UniformMotion, two.clone(), alloc::vec![1.0, 2.0], None, 0.05),
            Err(SimError::BadRoute { .. })
        ));
        assert!(matches!(
            Route::new(RouteKind::UniformMotion, two.clone(), alloc::vec![-5.0], None, 0.05),
            Err(SimError::BadRoute { .. })
        ));
        assert!(matches!(
            Route::new(RouteKind::UniformMotion, two.clone(), alloc::vec![1.0], Some(0), 0.05),
            Err(SimError::BadRoute { .. })
        ));
        assert!(matches!(
            Route::new(RouteKind::Kidnap, two.clone(), alloc::vec![1.0], None, 0.05),
            Err(SimError::BadRoute { .. })
        ));
        assert!(matches!(
            Route::new(RouteKind::UniformMotion, two, alloc::vec![1.0], None, 0.0),
            Err(SimError::BadRoute { .. })
        ));
    }

    #[test]
    fn fps_table_validation() {
        assert!(FpsTable::new(alloc::vec![]).is_err());
        assert!(FpsTable::new(alloc::vec![(8, 5), (8, 4)]).is_err());
        assert!(FpsTable::new(alloc::vec![(8, 0)]).is_err());
        let t = FpsTable::new(alloc::vec![(16, 4), (4, 5)]).unwrap();
        assert_eq!(t.fps(4), Some(5));
        assert_eq!(t.fps(16), Some(4));
        assert_eq!(t.fps(64), None);
        assert_eq!(t.entries(), &[(4, 5), (16, 4)]);
    }
}
