//! Library results checked against slow, independent reference computations.

mod common;

use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::sync::Arc;

use fpnav_core::dataset::{annotate_trajectory, gen_synthetic_floorplan, FloorPlanSpec};
use fpnav_core::eval::{
    navigation_error, run_episode, GoalDistance, NavTask, PlanContext, PlanMode, PolicyKind,
    PolicySpec,
};
use fpnav_core::geometry::{region_adjacency, FloorPlan, Point2, Region, DOORWAY_MIN_WIDTH};
use fpnav_core::render::{raycast_observation, RasterConfig, RaycastConfig};
use fpnav_core::simulator::{
    Action, AgentPose, DistanceMode, EpisodeState, NoiseConfig, World, FORWARD_STEP,
    WALL_CLEARANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    covering_region, passable_pairs, ray_hit, rect, seg_seg_dist, shared_stretches, suite,
};

fn procedural(rooms: usize, seed: u64) -> FloorPlan {
    gen_synthetic_floorplan(&FloorPlanSpec {
        room_count: rooms,
        seed,
        ..Default::default()
    })
    .unwrap()
}

/// Cell grid at `res` with the region id of every cell center.
struct Labels {
    origin: Point2,
    res: f64,
    nx: usize,
    ny: usize,
    ids: Vec<Option<u32>>,
}

fn label_grid(fp: &FloorPlan, res: f64) -> Labels {
    let b = fp.bounds();
    let origin = Point2::new(b.min.x + res / 2.0, b.min.y + res / 2.0);
    let nx = (b.width() / res).ceil() as usize;
    let ny = (b.height() / res).ceil() as usize;
    let mut ids = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let p = Point2::new(origin.x + i as f64 * res, origin.y + j as f64 * res);
            // Cheap bounding-box rejection before the exact oracle.
            let hit = fp
                .regions()
                .iter()
                .filter(|r| r.polygon.bounds().contains(p))
                .map(|r| r.id)
                .next()
                .and(covering_region(fp, p));
            ids.push(hit);
        }
    }
    Labels {
        origin,
        res,
        nx,
        ny,
        ids,
    }
}

impl Labels {
    fn center(&self, k: usize) -> Point2 {
        Point2::new(
            self.origin.x + (k % self.nx) as f64 * self.res,
            self.origin.y + (k / self.nx) as f64 * self.res,
        )
    }
}

#[test]
fn adjacency_equals_flood_fill_on_fine_grid() {
    let fp = procedural(8, 5);
    let labels = label_grid(&fp, 0.05);
    let doors: Vec<(u32, u32, Point2, Point2)> = passable_pairs(&fp, DOORWAY_MIN_WIDTH)
        .into_iter()
        .flat_map(|(i, j)| {
            shared_stretches(&fp, i, j)
                .into_iter()
                .filter(|(a, b)| a.distance(*b) >= DOORWAY_MIN_WIDTH - 1e-9)
                .map(move |(a, b)| (i, j, a, b))
        })
        .collect();
    let crossing_allowed = |i: u32, j: u32, p: Point2, q: Point2| {
        doors.iter().any(|&(a_id, b_id, a, b)| {
            ((a_id, b_id) == (i, j) || (a_id, b_id) == (j, i)) && seg_seg_dist(p, q, a, b) == 0.0
        })
    };

    let mut seen = vec![false; labels.ids.len()];
    let mut found: BTreeSet<(u32, u32)> = BTreeSet::new();
    let mut components: Vec<BTreeSet<u32>> = Vec::new();
    for start in 0..labels.ids.len() {
        if seen[start] || labels.ids[start].is_none() {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(k) = queue.pop_front() {
            let here = labels.ids[k].unwrap();
            comp.insert(here);
            let (i, j) = ((k % labels.nx) as i64, (k / labels.nx) as i64);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= labels.nx as i64 || nj >= labels.ny as i64 {
                    continue;
                }
                let n = nj as usize * labels.nx + ni as usize;
                let Some(there) = labels.ids[n] else { continue };
                if there != here {
                    if !crossing_allowed(here, there, labels.center(k), labels.center(n)) {
                        continue;
                    }
                    found.insert((here.min(there), here.max(there)));
                }
                if !seen[n] {
                    seen[n] = true;
                    queue.push_back(n);
                }
            }
        }
        components.push(comp);
    }

    assert!(found.len() >= 7, "eight regions need at least seven doorways");
    let adjacency = region_adjacency(&fp);
    assert_eq!(adjacency.pairs(), &found);
    let all: Vec<u32> = fp.regions().iter().map(|r| r.id).collect();
    assert_eq!(components.len(), 1, "{components:?}");
    assert!(adjacency.is_connected(&all));
}

#[test]
fn generated_plans_validate_and_connect() {
    for seed in 0..200 {
        let fp = procedural(3 + (seed as usize % 8), seed);
        let reparsed = FloorPlan::parse(&fp.to_json()).expect("valid document");
        assert_eq!(reparsed, fp);
        // Breadth-first search over independently computed passable pairs.
        let pairs = passable_pairs(&fp, DOORWAY_MIN_WIDTH);
        let ids: Vec<u32> = fp.regions().iter().map(|r| r.id).collect();
        let mut reached = BTreeSet::from([ids[0]]);
        let mut queue = VecDeque::from([ids[0]]);
        while let Some(r) = queue.pop_front() {
            for &(a, b) in &pairs {
                let other = if a == r { b } else if b == r { a } else { continue };
                if reached.insert(other) {
                    queue.push_back(other);
                }
            }
        }
        assert_eq!(reached.len(), ids.len(), "plan seed {seed} is disconnected");
        assert_eq!(region_adjacency(&fp).pairs(), &pairs, "plan seed {seed}");
    }
}

#[test]
fn waypoint_labels_equal_brute_force_containment() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for t in 0..50 {
        let fp = procedural(6, 300 + t);
        let b = fp.bounds();
        let mut p = Point2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
        let mut waypoints = Vec::new();
        for _ in 0..40 {
            waypoints.push(p);
            p = Point2::new(
                (p.x + rng.gen_range(-1.5..1.5)).clamp(b.min.x, b.max.x),
                (p.y + rng.gen_range(-1.5..1.5)).clamp(b.min.y, b.max.y),
            );
        }
        // Include shared-edge points, where the tie-break decides.
        for r in fp.regions() {
            waypoints.push(r.polygon.vertices()[0]);
        }
        let trace = annotate_trajectory(&fp, &waypoints);
        assert_eq!(trace.per_waypoint.len(), waypoints.len());
        for (label, w) in trace.per_waypoint.iter().zip(&waypoints) {
            let expected = covering_region(&fp, *w);
            assert_eq!(label.region_id, expected, "waypoint {w:?}");
            assert_eq!(
                label.region_type.as_deref(),
                expected.map(|id| fp.region(id).unwrap().region_type.as_str())
            );
        }
    }
}

#[test]
fn raycast_equals_brute_force_intersection() {
    let world = World::new(procedural(6, 42));
    let cfg = RaycastConfig {
        columns: 96,
        ..RaycastConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = world.floorplan.bounds();
    let mut poses = 0;
    let mut hits = 0;
    while poses < 40 {
        let p = Point2::new(rng.gen_range(b.min.x..b.max.x), rng.gen_range(b.min.y..b.max.y));
        if !world.is_free(p) {
            continue;
        }
        poses += 1;
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let obs = raycast_observation(&world, AgentPose::at(p, theta), &cfg, &RasterConfig::default())
            .unwrap();
        let fov = cfg.fov_degrees.to_radians();
        for c in 0..cfg.columns {
            let offset = -fov / 2.0 + (c as f64 + 0.5) * fov / cfg.columns as f64;
            let phi = theta + offset;
            let d = Point2::new(phi.sin(), phi.cos());
            let nearest = world
                .walls
                .walls
                .iter()
                .filter_map(|w| ray_hit(p, d, w.a, w.b))
                .filter(|&t| t <= cfg.max_range)
                .fold(f64::INFINITY, f64::min);
            match obs.distances[c as usize] {
                Some(got) => assert!(
                    (got - nearest * offset.cos()).abs() < 1e-9,
                    "column {c}: {got} vs {}",
                    nearest * offset.cos()
                ),
                None => assert!(nearest.is_infinite(), "column {c} missed a wall at {nearest}"),
            }
        }
        hits += obs.distances.iter().flatten().count();
    }
    assert!(hits > 1000, "too few wall hits to be meaningful: {hits}");
}

/// Dijkstra over an 8-connected lattice at `res`: nodes keep the wall
/// clearance and every edge keeps it along its whole length.
fn dijkstra_oracle(world: &World, a: Point2, b: Point2, res: f64) -> f64 {
    let walls: Vec<(Point2, Point2)> = world.walls.walls.iter().map(|w| (w.a, w.b)).collect();
    let clear = |p: Point2, q: Point2| {
        walls
            .iter()
            .all(|&(u, v)| seg_seg_dist(p, q, u, v) >= WALL_CLEARANCE - 1e-9)
    };
    let labels = label_grid(&world.floorplan, res);
    let free: Vec<bool> = (0..labels.ids.len())
        .map(|k| labels.ids[k].is_some() && clear(labels.center(k), labels.center(k)))
        .collect();
    let attach = |p: Point2| -> Vec<(usize, f64)> {
        (0..free.len())
            .filter(|&k| free[k] && labels.center(k).distance(p) <= 2.5 * res)
            .filter(|&k| clear(p, labels.center(k)))
            .map(|k| (k, labels.center(k).distance(p)))
            .collect()
    };
    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            o.0.total_cmp(&self.0)
        }
    }
    let mut dist = vec![f64::INFINITY; free.len()];
    let mut heap = BinaryHeap::new();
    for (k, d) in attach(a) {
        dist[k] = d;
        heap.push(Entry(d, k));
    }
    let goals = attach(b);
    while let Some(Entry(d, k)) = heap.pop() {
        if d > dist[k] {
            continue;
        }
        let (i, j) = ((k % labels.nx) as i64, (k / labels.nx) as i64);
        for di in -1..=1i64 {
            for dj in -1..=1i64 {
                let (ni, nj) = (i + di, j + dj);
                if (di, dj) == (0, 0) || ni < 0 || nj < 0 || ni >= labels.nx as i64 || nj >= labels.ny as i64 {
                    continue;
                }
                let n = nj as usize * labels.nx + ni as usize;
                if !free[n] {
                    continue;
                }
                let nd = d + res * ((di * di + dj * dj) as f64).sqrt();
                if nd < dist[n] && clear(labels.center(k), labels.center(n)) {
                    dist[n] = nd;
                    heap.push(Entry(nd, n));
                }
            }
        }
    }
    goals
        .into_iter()
        .map(|(k, d)| dist[k] + d)
        .fold(f64::INFINITY, f64::min)
}

/// Two rooms joined by a 1 m wide corridor that bends once.
fn l_corridor() -> FloorPlan {
    FloorPlan::new(
        "l",
        "0",
        vec![
            Region::new(0, "kitchen", rect(0.0, 0.0, 4.0, 4.0)),
            Region::new(1, "hallway", rect(4.0, 1.5, 8.0, 2.5)),
            Region::new(2, "hallway", rect(7.0, 2.5, 8.0, 8.0)),
            Region::new(3, "bedroom", rect(5.0, 8.0, 10.0, 12.0)),
        ],
    )
    .unwrap()
}

#[test]
fn planner_matches_fine_dijkstra_on_l_corridor() {
    let ctx = PlanContext::new(l_corridor());
    let world = ctx.world();
    let planner = ctx.planner();
    for (a, b) in [
        (Point2::new(1.0, 1.0), Point2::new(9.0, 11.0)),
        (Point2::new(3.5, 3.5), Point2::new(5.5, 11.5)),
        (Point2::new(0.5, 2.0), Point2::new(7.5, 5.0)),
    ] {
        let got = planner.shortest_path_length(a, b).unwrap();
        let oracle = dijkstra_oracle(world, a, b, 0.05);
        assert!(oracle.is_finite());
        assert!((got - oracle).abs() <= 0.05 * oracle, "{a:?}->{b:?}: {got} vs {oracle}");
        assert!(got > a.distance(b) + 0.5, "path must detour around the corner");
    }
}

#[test]
fn obstacle_free_diagonal_is_exact() {
    let ctx = PlanContext::new(
        FloorPlan::new("open", "0", vec![Region::new(0, "garage", rect(0.0, 0.0, 10.0, 10.0))]).unwrap(),
    );
    let got = ctx
        .planner()
        .shortest_path_length(Point2::new(1.0, 1.0), Point2::new(9.0, 9.0))
        .unwrap();
    assert!((got - 8.0 * std::f64::consts::SQRT_2).abs() < 1e-6, "{got}");
}

#[test]
fn geodesic_error_matches_dijkstra_behind_a_wall() {
    // Rooms 0 and 3 of the L plan touch nowhere; the goal is reached only
    // through the corridor.
    let ctx = Arc::new(PlanContext::new(l_corridor()));
    let goal = Point2::new(6.0, 9.0);
    let start = AgentPose::new(3.0, 3.0, 0.0);
    let task = NavTask::new("detour", Arc::clone(&ctx), start, goal).unwrap();
    let mut state =
        EpisodeState::reset(Arc::clone(ctx.world()), start, goal, NoiseConfig::noiseless(0)).unwrap();
    state.step(Action::Stop).unwrap();
    let result = state.result(task.reference_length(), |p| p.distance(goal)).unwrap();
    let geodesic = navigation_error(&result, GoalDistance::Geodesic(task.geodesic_field()));
    let oracle = dijkstra_oracle(ctx.world(), start.position(), goal, 0.05);
    assert!((geodesic - oracle).abs() <= 0.05 * oracle, "{geodesic} vs {oracle}");
    let euclid = navigation_error(&result, GoalDistance::Euclidean(goal));
    assert!(geodesic > euclid + 1.0);
}

#[test]
fn oracle_policy_never_truncates_a_step() {
    let s = suite(3, 6);
    for task in &s.tasks {
        let run = run_episode(
            task,
            &PolicySpec::new(PolicyKind::OracleClosedLoop),
            PlanMode::Full,
            &NoiseConfig::noiseless(0),
            DistanceMode::Euclidean,
            &[],
        )
        .unwrap();
        let traj = run.state.trajectory();
        for (k, a) in run.state.actions().iter().enumerate() {
            if let Action::MoveForward(_) = a {
                let moved = traj[k].position().distance(traj[k + 1].position());
                assert!(
                    (moved - FORWARD_STEP).abs() < 1e-9,
                    "{}: step {k} truncated to {moved}",
                    task.episode_id
                );
            }
            let p = traj[k + 1].position();
            assert!(world_clearance(run.state.world(), p) >= WALL_CLEARANCE - 1e-6);
        }
        assert!(run.result.success, "{}", task.episode_id);
    }
}

fn world_clearance(world: &World, p: Point2) -> f64 {
    world
        .walls
        .walls
        .iter()
        .map(|w| common::seg_dist(p, w.a, w.b))
        .fold(f64::INFINITY, f64::min)
}
