use super::*;
use crate::road::{RoadKind, RoadLayout};
use rand::SeedableRng;

const DT: f64 = 0.5;

fn layout() -> RoadLayout {
    RoadLayout::build(RoadKind::Straight { length_m: 270.0 }, 1, 3.5, &[135.0])
}

fn params(gap: f64, monitor: bool) -> PedestrianParams {
    PedestrianParams {
        trait_: Trait::Average,
        accepted_gap: gap,
        walk_speed: 1.4,
        noise_sigma: 0.0,
        monitor_while_crossing: monitor,
    }
}

/// Pedestrian standing at the south curb of the straight road.
fn ped(mode: ObservationMode, gap: f64, monitor: bool) -> Pedestrian {
    let path = layout().crossing_path(0, false);
    let th = compute_scan_threshold(80.0, 13.9, gap).unwrap();
    Pedestrian::new(1, params(gap, monitor), mode, path, 0.0, th, ChaCha8Rng::seed_from_u64(9))
}

/// Vehicle in `lane` (0 eastbound, 1 westbound) at road position `x`.
fn veh(id: u64, lane: usize, x: f64, speed: f64) -> VehicleState {
    let l = &layout().lanes[lane];
    let s = l.progress_of(DVec2::new(x, 0.0));
    VehicleState {
        id,
        lane,
        position: l.point_at(s),
        heading: l.heading,
        speed,
        acceleration: 0.0,
        length: 4.5,
        width: 1.8,
        desired_speed: speed,
    }
}

fn tick(p: &mut Pedestrian, world: &[VehicleState], t: f64) -> StepEvents {
    p.perceive(world, &FieldOfView::default(), t);
    p.step(t, DT)
}

#[test]
fn empty_road_head_turns() {
    // memory crosses after one look each way
    let mut p = ped(ObservationMode::FovMem, 4.5, true);
    assert_eq!(p.phase, Phase::Wait);
    assert_eq!(p.gaze_side, Some(Side::Left));
    p.perceive(&[], &FieldOfView::default(), 0.0);
    assert_eq!(p.step_scan(0.0, DT), Decision::KeepWaiting);
    assert_eq!(p.head_turns, 1);
    assert_eq!(p.gaze_side, Some(Side::Right));
    p.perceive(&[], &FieldOfView::default(), DT);
    assert_eq!(p.step_scan(DT, DT), Decision::StartCrossing);
    assert_eq!(p.head_turns, 1);

    // without memory the walker looks back left before leaving
    let mut p = ped(ObservationMode::Fov, 4.5, true);
    p.perceive(&[], &FieldOfView::default(), 0.0);
    assert_eq!(p.step_scan(0.0, DT), Decision::KeepWaiting);
    p.perceive(&[], &FieldOfView::default(), DT);
    assert_eq!(p.step_scan(DT, DT), Decision::KeepWaiting);
    assert_eq!(p.head_turns, 2);
    assert_eq!(p.gaze_side, Some(Side::Left));
    p.perceive(&[], &FieldOfView::default(), 2.0 * DT);
    assert_eq!(p.step_scan(2.0 * DT, DT), Decision::StartCrossing);
    assert_eq!(p.head_turns, 2);
}

#[test]
fn omnidirectional_view_crosses_at_once() {
    let mut p = ped(ObservationMode::All, 4.5, true);
    let ev = tick(&mut p, &[], 0.0);
    assert!(ev.started_crossing);
    assert_eq!(p.cross_start, Some(0.0));
    assert_eq!(p.head_turns, 0);
}

#[test]
fn memory_keeps_gaze_right_until_threshold() {
    // aggressive gap: th_scan = 80 / 13.9 - 3 = 2.76 s
    let mut p = ped(ObservationMode::FovMem, 3.0, true);
    let blocker = veh(7, 1, 135.5, 0.2);
    tick(&mut p, &[], 0.0);
    assert_eq!(p.head_turns, 1);
    let mut t = DT;
    while t <= 2.5 + 1e-9 {
        tick(&mut p, &[blocker.clone()], t);
        assert_eq!(p.head_turns, 1, "turned early at t={t}");
        assert_eq!(p.gaze_side, Some(Side::Right));
        t += DT;
    }
    // t = 3.0 exceeds the threshold
    tick(&mut p, &[blocker.clone()], t);
    assert_eq!(p.head_turns, 2);
    assert_eq!(p.gaze_side, Some(Side::Left));
    assert_eq!(p.phase, Phase::Wait);
}

#[test]
fn without_memory_unsafe_right_forces_look_back() {
    let mut p = ped(ObservationMode::Fov, 3.0, true);
    let blocker = veh(7, 1, 135.5, 0.2);
    tick(&mut p, &[], 0.0);
    assert_eq!(p.gaze_side, Some(Side::Right));
    tick(&mut p, &[blocker.clone()], DT);
    assert_eq!(p.head_turns, 2);
    assert_eq!(p.gaze_side, Some(Side::Left));
    tick(&mut p, &[blocker.clone()], 2.0 * DT);
    assert_eq!(p.head_turns, 3);
    assert_eq!(p.gaze_side, Some(Side::Right));
}

#[test]
fn lane_safety_examples() {
    let path = layout().crossing_path(0, false);
    let near = &path.lanes[0];
    // TTC 6 s against a 4 s gap
    let mut p = ped(ObservationMode::Fov, 4.0, true);
    p.perceive(&[veh(1, 0, 75.0, 10.0)], &FieldOfView::default(), 0.0);
    assert!((p.lane_min_ttc(near, 0.0) - 6.0).abs() < 1e-9);
    assert!(p.lane_safe(near, 0.0));
    // nothing known
    p.perceive(&[], &FieldOfView::default(), 0.0);
    assert!(p.lane_safe(near, 0.0));
}

#[test]
fn memory_beliefs_take_part_in_decisions() {
    let fov = FieldOfView::default();
    let near_lane = layout().crossing_path(0, false).lanes[0].clone();
    let car = veh(1, 0, 105.0, 10.0); // 30 m out: TTC 3 s
    for (mode, expect_safe) in [(ObservationMode::FovMem, false), (ObservationMode::Fov, true)] {
        let mut p = ped(mode, 4.0, true);
        p.perceive(&[car.clone()], &fov, 0.0);
        assert!(!p.lane_safe(&near_lane, 0.0));
        p.look(Some(Side::Right), true);
        p.perceive(&[car.clone()], &fov, 0.0);
        assert!(p.percepts().is_empty(), "car should be out of view");
        assert_eq!(p.lane_safe(&near_lane, 0.0), expect_safe, "{mode}");
    }
}

#[test]
fn memory_belief_matches_omniscient_view() {
    let fov = FieldOfView::default();
    let near_lane = layout().crossing_path(0, false).lanes[0].clone();
    let mut with_mem = ped(ObservationMode::FovMem, 4.5, true);
    let mut omni = ped(ObservationMode::All, 4.5, true);
    let start = veh(1, 0, 60.0, 12.0);
    with_mem.perceive(&[start.clone()], &fov, 0.0);
    with_mem.look(Some(Side::Right), true);
    for k in 1..10 {
        let t = k as f64 * DT;
        let mut now = start.clone();
        now.position.x += 12.0 * t;
        with_mem.perceive(&[now.clone()], &fov, t);
        omni.perceive(&[now.clone()], &fov, t);
        assert!(with_mem.percepts().is_empty());
        let a = with_mem.lane_min_ttc(&near_lane, t);
        let b = omni.lane_min_ttc(&near_lane, t);
        assert!((a - b).abs() < 1e-9, "k={k}: {a} vs {b}");
        assert_eq!(with_mem.lane_safe(&near_lane, t), omni.lane_safe(&near_lane, t));
    }
}

#[test]
fn seven_metre_road_takes_ten_steps() {
    let mut p = ped(ObservationMode::FovMem, 4.5, true);
    tick(&mut p, &[], 0.0);
    let mut t = DT;
    let mut steps = 0;
    loop {
        let ev = tick(&mut p, &[], t);
        if p.phase == Phase::Cross || ev.finished {
            steps += 1;
        }
        if ev.finished {
            break;
        }
        t += DT;
        assert!(steps < 100);
    }
    assert_eq!(steps, 10);
    assert_eq!(p.phase, Phase::Done);
    assert!(p.memory.is_empty());
    assert!((p.progress - 7.0).abs() < 1e-12);
}

/// Walks a pedestrian to the center line of the empty road.
fn walk_to_center_line(p: &mut Pedestrian) -> f64 {
    let mut t = 0.0;
    while p.progress < 3.5 - 1e-6 {
        tick(p, &[], t);
        t += DT;
    }
    t
}

#[test]
fn monitoring_stops_at_lane_line() {
    for mode in [ObservationMode::Fov, ObservationMode::FovMem, ObservationMode::All] {
        let mut p = ped(mode, 4.5, true);
        let t = walk_to_center_line(&mut p);
        assert_eq!(p.phase, Phase::Cross);
        if mode.limited_view() {
            assert_eq!(p.gaze_side, Some(Side::Right));
        }
        // westbound car 2 s away
        let ev = tick(&mut p, &[veh(5, 1, 155.0, 10.0)], t);
        assert!(ev.stopped_mid_road, "{mode}");
        assert_eq!(p.phase, Phase::Wait);
        assert!((p.progress - 3.5).abs() < 1e-9);
        assert_eq!(p.mid_road_stops, 1);
    }
}

#[test]
fn distracted_walker_keeps_going() {
    let mut p = ped(ObservationMode::FovMem, 4.5, false);
    let t = walk_to_center_line(&mut p);
    let before = p.progress;
    let ev = tick(&mut p, &[veh(5, 1, 155.0, 10.0)], t);
    assert!(!ev.stopped_mid_road);
    assert_eq!(p.phase, Phase::Cross);
    assert!(p.progress > before);
}

#[test]
fn head_turns_never_decrease() {
    let mut p = ped(ObservationMode::Fov, 4.5, true);
    let mut last = 0;
    for k in 0..200 {
        let t = k as f64 * DT;
        let x = 60.0 + ((k * 37) % 120) as f64;
        let world = [veh(1, 0, x - 60.0, 10.0), veh(2, 1, x + 40.0, 10.0)];
        let before = p.phase;
        tick(&mut p, &world, t);
        let allowed = matches!(
            (before, p.phase),
            (Phase::Wait, Phase::Wait)
                | (Phase::Wait, Phase::Cross)
                | (Phase::Wait, Phase::Done)
                | (Phase::Cross, Phase::Cross)
                | (Phase::Cross, Phase::Wait)
                | (Phase::Cross, Phase::Done)
                | (Phase::Done, Phase::Done)
        );
        assert!(allowed, "{before:?} -> {:?}", p.phase);
        assert!(p.head_turns >= last);
        last = p.head_turns;
    }
}
