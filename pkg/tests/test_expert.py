import math

import numpy as np
import pytest

from dtspn.dubins import Pose, shortest_path_length
from dtspn import expert as ex
from dtspn import instance as inst
from oracles import gtsp_brute_force, held_karp_atsp


def make_gtsp(rng, sizes, lo=1.0, hi=100.0):
    """Random asymmetric GTSP with the given cluster sizes (cluster 0 first)."""
    n = sum(sizes)
    cluster_of = np.concatenate([np.full(s, i) for i, s in enumerate(sizes)])
    cost = rng.uniform(lo, hi, size=(n, n))
    cost[cluster_of[:, None] == cluster_of[None, :]] = np.inf
    return ex.GtspProblem(cost=cost, cluster_of=cluster_of, n_clusters=len(sizes))


def clusters_from(cluster_of):
    k = int(max(cluster_of)) + 1
    return [list(np.nonzero(np.asarray(cluster_of) == c)[0]) for c in range(k)]


# ---------------------------------------------------------------- sampling

def test_sample_poses_smallest_budget():
    x = inst.generate(3, seed=2)
    cs = ex.sample_poses(x, 1, 1)
    assert all(len(c) == 1 for c in cs.clusters)
    for (tx, ty), c in zip(x.tasks, cs.clusters):
        p = c[0]
        assert p.x == pytest.approx(tx + 0.8 * 58.0, abs=1e-9)
        assert p.y == pytest.approx(ty, abs=1e-9)
        assert p.theta == 0.0
    assert len(cs.start_cluster) == 1
    assert cs.start_cluster[0].x == x.start.x


def test_sample_poses_geometry():
    x = inst.generate(4, seed=5)
    cs = ex.sample_poses(x, 8, 4)
    for (tx, ty), c in zip(x.tasks, cs.clusters):
        assert len(c) == 32
        for p in c:
            d = math.hypot(p.x - tx, p.y - ty)
            assert d == pytest.approx(0.8 * 58.0, abs=1e-9)
            ang = math.atan2(p.y - ty, p.x - tx) % (2 * math.pi)
            r = ang % (math.pi / 4)
            assert min(r, math.pi / 4 - r) < 1e-9
        headings = {round(p.theta, 12) for p in c}
        assert len(headings) == 4
    assert len(cs.start_cluster) == 4
    with pytest.raises(ValueError):
        ex.sample_poses(x, 0, 1)


# ---------------------------------------------------------------- build_gtsp

def test_build_gtsp_costs_and_sentinels():
    a = Pose(0, 0, 0)
    b = Pose(100, 50, 1.0)
    cs = ex.PoseClusterSet(clusters=((b,),), start_cluster=(a,))
    g = ex.build_gtsp(cs, 30.0)
    assert g.n == 2 and g.n_clusters == 2
    assert g.cost[0, 1] == pytest.approx(shortest_path_length(a, b, 30.0))
    assert g.cost[1, 0] == pytest.approx(shortest_path_length(b, a, 30.0))
    assert g.cost[0, 1] != g.cost[1, 0]       # Dubins costs are asymmetric
    assert not np.isfinite(g.cost[0, 0])
    assert not np.isfinite(g.cost[1, 1])


def test_build_gtsp_seven_node_count():
    rng = np.random.default_rng(0)
    poses = [Pose(*rng.uniform((0, 0, -3), (300, 300, 3))) for _ in range(7)]
    cs = ex.PoseClusterSet(
        clusters=(tuple(poses[1:3]), tuple(poses[3:5]), tuple(poses[5:7])),
        start_cluster=(poses[0],))
    g = ex.build_gtsp(cs, 30.0)
    assert g.n == 7
    assert np.isfinite(g.cost).sum() == 6 * (7 - 1)
    with pytest.raises(ValueError):
        ex.build_gtsp(ex.PoseClusterSet(clusters=((),), start_cluster=(poses[0],)), 30.0)


# ---------------------------------------------------------------- noon_bean

def test_noon_bean_singleton_degeneracy():
    rng = np.random.default_rng(1)
    g = make_gtsp(rng, [1, 1, 1, 1])
    a = ex.noon_bean(g)
    off = ~np.eye(4, dtype=bool)
    assert np.allclose(a.cost[off], g.cost[off] + a.big_m)
    assert not np.isfinite(np.diagonal(a.cost)).any()
    c_g, tour_g = held_karp_atsp(g.cost)
    c_a, tour_a = held_karp_atsp(a.cost)
    assert tour_a == tour_g
    assert c_a == pytest.approx(c_g + 4 * a.big_m)


def test_noon_bean_big_m_and_cycle_edges():
    rng = np.random.default_rng(2)
    g = make_gtsp(rng, [1, 2, 3])
    a = ex.noon_bean(g)
    assert a.big_m > g.cost[np.isfinite(g.cost)].sum()
    for c, nodes in enumerate(clusters_from(g.cluster_of)):
        if len(nodes) == 1:
            continue
        for u, v in zip(nodes, nodes[1:] + nodes[:1]):
            assert a.cost[u, v] == 0.0
    # re-attachment: arc (u -> v) departs from u's cycle predecessor
    assert a.cost[1, 0] == pytest.approx(a.big_m + g.cost[2, 0])
    assert a.cost[2, 0] == pytest.approx(a.big_m + g.cost[1, 0])


def test_noon_bean_accounting_identity():
    rng = np.random.default_rng(3)
    for _ in range(20):
        sizes = [1] + list(rng.integers(1, 4, size=3))
        g = make_gtsp(rng, sizes)
        a = ex.noon_bean(g)
        c_a, tour = held_karp_atsp(a.cost)
        decoded = ex.decode_tour(tour, a)
        gtsp_cost = sum(g.cost[u, v] for u, v in
                        zip(decoded, decoded[1:] + decoded[:1]))
        assert gtsp_cost == pytest.approx(c_a - len(sizes) * a.big_m, rel=1e-12)
        best, _ = gtsp_brute_force(g.cost, clusters_from(g.cluster_of))
        assert gtsp_cost == pytest.approx(best, rel=1e-12)


def test_noon_bean_rejects_empty_cluster():
    g = ex.GtspProblem(cost=np.full((3, 3), np.inf),
                       cluster_of=np.array([0, 0, 2]), n_clusters=3)
    with pytest.raises(ValueError, match="empty"):
        ex.noon_bean(g)


# ---------------------------------------------------------------- solve_atsp

def test_solve_atsp_three_nodes():
    rng = np.random.default_rng(4)
    cost = rng.uniform(1, 10, size=(3, 3))
    np.fill_diagonal(cost, np.inf)
    m = ex.AtspMatrix(n=3, cost=cost, cluster_of=np.arange(3), big_m=0.0,
                      succ=np.arange(3))
    tour = ex.solve_atsp(m, seed=0)
    exact, _ = held_karp_atsp(cost)
    assert ex.tour_cost(cost, tour) == pytest.approx(exact)


def test_solve_atsp_deterministic():
    rng = np.random.default_rng(5)
    cost = rng.uniform(1, 100, size=(24, 24))
    np.fill_diagonal(cost, np.inf)
    m = ex.AtspMatrix(n=24, cost=cost, cluster_of=np.arange(24), big_m=0.0,
                      succ=np.arange(24))
    t1 = ex.solve_atsp(m, seed=7)
    t2 = ex.solve_atsp(m, seed=7)
    assert t1 == t2
    assert sorted(t1) == list(range(24))


def test_solve_atsp_near_optimal_small():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(4, 10))
        cost = rng.uniform(1, 100, size=(n, n))
        np.fill_diagonal(cost, np.inf)
        m = ex.AtspMatrix(n=n, cost=cost, cluster_of=np.arange(n), big_m=0.0,
                          succ=np.arange(n))
        tour = ex.solve_atsp(m, seed=seed)
        exact, _ = held_karp_atsp(cost)
        if ex.tour_cost(cost, tour) <= 1.05 * exact + 1e-9:
            hits += 1
    assert hits >= 95


def test_solve_atsp_local_optimum_mid_size():
    # termination means no single available move improves the tour
    rng = np.random.default_rng(6)
    cost = rng.uniform(1, 100, size=(30, 30))
    np.fill_diagonal(cost, np.inf)
    m = ex.AtspMatrix(n=30, cost=cost, cluster_of=np.arange(30), big_m=0.0,
                      succ=np.arange(30))
    order = np.asarray(ex.solve_atsp(m, seed=1))
    base = ex.tour_cost(cost, order)
    n = 30
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                cand = ex._apply_move(order, i, j, k)
                assert ex.tour_cost(cost, cand) >= base - ex.GAIN_EPS


# ---------------------------------------------------------------- decode

def test_decode_singleton_clusters_is_tour_order():
    m = ex.AtspMatrix(n=4, cost=np.zeros((4, 4)), cluster_of=np.array([0, 1, 2, 3]),
                      big_m=0.0, succ=np.arange(4))
    assert ex.decode_tour([2, 3, 0, 1], m) == [0, 1, 2, 3]


def test_decode_rotation_invariance():
    cluster_of = np.array([0, 1, 1, 2, 2])
    m = ex.AtspMatrix(n=5, cost=np.zeros((5, 5)), cluster_of=cluster_of,
                      big_m=0.0, succ=np.array([0, 2, 1, 4, 3]))
    tour = [0, 1, 2, 3, 4]
    want = ex.decode_tour(tour, m)
    for r in range(1, 5):
        rotated = tour[r:] + tour[:r]
        assert ex.decode_tour(rotated, m) == want


def test_decode_reports_missing_cluster():
    m = ex.AtspMatrix(n=4, cost=np.zeros((4, 4)), cluster_of=np.array([0, 1, 1, 2]),
                      big_m=0.0, succ=np.array([0, 2, 1, 3]))
    with pytest.raises(ValueError, match="cover"):
        ex.decode_tour([0, 1, 2], m)


# ---------------------------------------------------------------- plan

def test_plan_trivial_when_all_tasks_at_start():
    probe = inst.generate(1, seed=0)
    tx, ty = probe.tasks[0]
    x = inst.generate(1, seed=0, start=Pose(tx + 10.0, ty, 0.0))
    ep = ex.plan(x)
    assert ep.waypoints == (x.start,)
    assert ep.total_length == 0.0
    assert ep.sensed_order == (0,)
    assert ep.solve_time is not None


def test_plan_senses_all_and_length_consistent():
    x = inst.generate(4, seed=11)
    ep = ex.plan(x, n_pos=3, n_head=2, seed=0)
    wp = ep.waypoint_array()
    for t, (tx, ty) in enumerate(x.tasks):
        d = np.hypot(wp[:, 0] - tx, wp[:, 1] - ty)
        assert d.min() <= x.r_sense
    assert sorted(ep.sensed_order) == list(range(4))
    # spacing bound along the polyline
    step = 0.12 * math.pi * x.turn_radius
    gaps = np.hypot(np.diff(wp[:, 0]), np.diff(wp[:, 1]))
    assert gaps.max() <= step + 1e-6
    # recorded length equals the sum of Dubins legs between visiting poses
    legs = sum(shortest_path_length(a, b, x.turn_radius)
               for a, b in zip(ep.visiting_poses, ep.visiting_poses[1:]))
    assert ep.total_length == pytest.approx(legs, abs=1e-6)
    # the polyline starts at the start position with the chosen heading
    assert ep.waypoints[0].x == x.start.x
    assert ep.waypoints[0].y == x.start.y


def test_plan_matches_exhaustive_gtsp_oracle():
    x = inst.generate(3, seed=21)
    n_pos, n_head = 3, 2
    ep = ex.plan(x, n_pos=n_pos, n_head=n_head, seed=0)
    sampled = ex.sample_poses(x, n_pos, n_head)
    g = ex.build_gtsp(sampled, x.turn_radius)
    best, tour = gtsp_brute_force(g.cost, clusters_from(g.cluster_of))
    # plan optimizes the closed tour, then drops the leg back to the start
    closed = sum(shortest_path_length(a, b, x.turn_radius) for a, b in
                 zip(ep.visiting_poses, ep.visiting_poses[1:]))
    closed += shortest_path_length(ep.visiting_poses[-1], ep.visiting_poses[0],
                                   x.turn_radius)
    assert closed == pytest.approx(best, abs=1e-6)


def test_plan_mirror_symmetric_tasks():
    start = Pose(400.0, 40.0, 0.0)
    a = inst.Instance(map_width=800, map_height=800,
                      tasks=((300.0, 300.0), (500.0, 300.0)),
                      r_sense=58.0, turn_radius=30.0, start=start, seed=0)
    b = inst.Instance(map_width=800, map_height=800,
                      tasks=((500.0, 300.0), (300.0, 300.0)),
                      r_sense=58.0, turn_radius=30.0, start=start, seed=0)
    ea = ex.plan(a, n_pos=2, n_head=2, seed=0)
    eb = ex.plan(b, n_pos=2, n_head=2, seed=0)
    assert ea.total_length == pytest.approx(eb.total_length, abs=1e-6)


def test_plan_monotone_in_sampling_budget():
    lo, hi = [], []
    for seed in range(30):
        x = inst.generate(3, seed=300 + seed)
        lo.append(ex.plan(x, n_pos=1, n_head=1, seed=0).total_length)
        hi.append(ex.plan(x, n_pos=2, n_head=2, seed=0).total_length)
    diff = np.asarray(lo) - np.asarray(hi)
    se = diff.std(ddof=1) / math.sqrt(len(diff))
    assert diff.mean() >= -se


# ---------------------------------------------------------------- file io

def test_expert_round_trip(tmp_path):
    x = inst.generate(3, seed=31)
    ep = ex.plan(x, n_pos=2, n_head=2, seed=0)
    p = tmp_path / "e.txt"
    ex.save(ep, p)
    back = ex.load(p)
    assert back == ep
    assert back.visiting_poses is None
    assert back.waypoints == ep.waypoints


def test_expert_load_errors(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("dtspn-expert v1\nlength 10.0\n")
    with pytest.raises(ex.ExpertFormatError, match="order"):
        ex.load(p)
    p.write_text("dtspn-expert v1\nlength 10.0\norder 0\nwp 1 2\n")
    with pytest.raises(ex.ExpertFormatError, match="line 4"):
        ex.load(p)
    p.write_text("not a header\n")
    with pytest.raises(ex.ExpertFormatError, match="header"):
        ex.load(p)
