"""Independent oracles for box-constrained QPs, used only by tests.

Two methods, both unrelated to the active-set path under test:

* ``grid_search_objective`` — brute-force lattice evaluation at a fixed
  tension resolution. Exhaustive for n <= 2.
* ``hybrid_oracle_objective`` — lattice over the trailing n-2 coordinates
  crossed with an exact closed-form minimization of the leading 2-D box
  problem (interior candidate plus the four clamped edge minimizers).
  The result is never above the pure-grid value at the same resolution,
  so any bound it certifies is at least as strong as the grid's.
"""

import numpy as np


def _grid_axis(lo, hi, resolution):
    n_pts = int(round((hi - lo) / resolution)) + 1
    return lo + resolution * np.arange(n_pts)


def grid_search_objective(qp, resolution=1.0):
    """Best objective over the full lattice. Use only for n <= 3."""
    axes = [_grid_axis(lo, hi, resolution)
            for lo, hi in zip(qp.lower, qp.upper)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)  # (m, n)
    vals = 0.5 * np.einsum("mi,ij,mj->m", pts, qp.p, pts) + pts @ qp.q
    return float(vals.min())


def _box_min_2d(a11, a12, a22, b1, b2, l1, u1, l2, u2):
    """Exact min of 1/2 y'Ay + b'y over a 2-D box, vectorized over b.

    b1, b2 are arrays (one entry per reduced subproblem); the A matrix and
    box are scalars. Convexity means the minimum is either the interior
    stationary point or lies on one of the four edges, where the 1-D
    minimizer clamps to the edge's extent (covering the corners).
    """
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)

    def value(y1, y2):
        return (0.5 * (a11 * y1 * y1 + 2 * a12 * y1 * y2 + a22 * y2 * y2)
                + b1 * y1 + b2 * y2)

    det = a11 * a22 - a12 * a12
    y1i = (-a22 * b1 + a12 * b2) / det
    y2i = (a12 * b1 - a11 * b2) / det
    inside = (y1i >= l1) & (y1i <= u1) & (y2i >= l2) & (y2i <= u2)
    best = np.where(inside, value(y1i, y2i), np.inf)

    for y1_edge in (l1, u1):
        y2 = np.clip(-(b2 + a12 * y1_edge) / a22, l2, u2)
        best = np.minimum(best, value(np.full_like(b1, y1_edge), y2))
    for y2_edge in (l2, u2):
        y1 = np.clip(-(b1 + a12 * y2_edge) / a11, l1, u1)
        best = np.minimum(best, value(y1, np.full_like(b2, y2_edge)))
    return best


def hybrid_oracle_objective(qp, resolution=1.0):
    """Trailing-coordinate lattice crossed with exact leading 2-D solves."""
    n = qp.n
    if n < 2:
        axis = _grid_axis(qp.lower[0], qp.upper[0], resolution)
        return float((0.5 * qp.p[0, 0] * axis**2 + qp.q[0] * axis).min())
    if n == 2:
        rest = np.zeros((1, 0))
    else:
        axes = [_grid_axis(lo, hi, resolution)
                for lo, hi in zip(qp.lower[2:], qp.upper[2:])]
        grids = np.meshgrid(*axes, indexing="ij")
        rest = np.stack([g.ravel() for g in grids], axis=1)  # (m, n-2)

    p_ll = qp.p[:2, :2]
    p_lr = qp.p[:2, 2:]
    p_rr = qp.p[2:, 2:]
    b = qp.q[:2][None, :] + rest @ p_lr.T                     # (m, 2)
    const = (0.5 * np.einsum("mi,ij,mj->m", rest, p_rr, rest)
             + rest @ qp.q[2:])
    best = _box_min_2d(p_ll[0, 0], p_ll[0, 1], p_ll[1, 1],
                       b[:, 0], b[:, 1],
                       qp.lower[0], qp.upper[0], qp.lower[1], qp.upper[1])
    return float((best + const).min())


def oracle_objective(qp, resolution=1.0):
    """Grid oracle for small n, hybrid refinement above."""
    if qp.n <= 2:
        return grid_search_objective(qp, resolution)
    return hybrid_oracle_objective(qp, resolution)


def grid_slack(qp, resolution=1.0):
    """Bound on how far the lattice optimum can sit above the true one."""
    lam_max = float(np.linalg.eigvalsh(qp.p).max())
    return 0.5 * lam_max * qp.n * (0.5 * resolution) ** 2


def random_instance(rng, n, force_scale=300.0, t_lo=30.0, t_hi=300.0):
    """Random strictly convex planar allocation instance as standard form."""
    from cablesim.allocation import AllocationWeights, formulate
    from cablesim.core import ModuleGeometry, PayloadModel, PlanarPose, Wrench
    from cablesim.kinematics import build_jacobian, compute_cable_states

    payload = PayloadModel(mass=16.0, inertia_yy=0.5)
    pose = PlanarPose(float(rng.uniform(1.0, 3.0)),
                      float(rng.uniform(0.3, 1.8)), 0.0)
    modules = []
    for _ in range(n):
        anchor = (float(rng.uniform(-0.5, 4.5)), float(rng.uniform(2.2, 3.0)))
        attach = (float(rng.uniform(-0.2, 0.2)), float(rng.uniform(-0.2, 0.2)))
        modules.append(ModuleGeometry(anchor=anchor, attachment=attach,
                                      t_min=t_lo, t_max=t_hi))
    w_des = Wrench(float(rng.uniform(-force_scale, force_scale)), 0.0,
                   float(rng.uniform(0.0, 2 * force_scale)), 0.0,
                   float(rng.uniform(-20.0, 20.0)), 0.0)
    weights = AllocationWeights(w_cart=(1000.0, 0.0, 1000.0, 0.0, 50.0, 0.0),
                                w_t=1.0)
    cables = compute_cable_states(pose, payload, modules)
    j = build_jacobian(cables)
    return formulate(j, w_des, weights,
                     [m.t_min for m in modules], [m.t_max for m in modules])
