import numpy as np

from fogopt import NodeParams, PowerParams, Scenario


def make_node(mu, lam, user_rtt=0.0, chi=None, ident="n", pue=1.0, w_dynamic=0.0,
              eta_cap=1.0):
    """ A node whose efficiency cap binds at `chi` (unbinding when None) """
    if chi is None:
        chi = 1e6
    static = chi * (eta_cap - pue * w_dynamic) / pue
    return NodeParams(ident, lam, mu, user_rtt, PowerParams(pue, static, w_dynamic, eta_cap))


def random_node(rng, ident=0):
    mu = rng.uniform(6.0, 12.0)
    lam = rng.uniform(1.0, 9.0)
    chi = rng.uniform(0.6 * mu, 1.2 * mu)
    pue = rng.uniform(1.0, 1.5)
    w_dynamic = rng.uniform(0.0, 0.2)
    eta_cap = pue * w_dynamic + rng.uniform(0.2, 1.0)
    return make_node(mu, lam, rng.uniform(0.005, 0.02), chi, ident, pue, w_dynamic, eta_cap)


def random_mask(rng, n, density=0.6):
    upper = np.triu(rng.uniform(size=(n, n)) < density, 1)
    return upper | upper.T | np.eye(n, dtype=bool)


def random_scenario(rng, n, density=0.6, cloud_rtt=0.1, inter_rtt=0.02):
    nodes = tuple(random_node(rng, ident=k) for k in range(n))
    return Scenario(nodes, inter_rtt, cloud_rtt, 0.5, random_mask(rng, n, density))


def partial_response(mu, lam, user_rtt, cloud_rtt, alpha):
    return user_rtt + alpha / (mu - alpha * lam) + (1.0 - alpha) * cloud_rtt


def grid_alpha(n, cloud_rtt, points=100001, constraint="capacity"):
    """ Brute-force minimizer over a uniform grid of the feasible fractions """
    lam, mu = n.arrival_rate, n.service_rate
    p = n.power
    chi = p.static_power * p.pue / (p.efficiency_cap - p.pue * p.dynamic_power_per_unit)
    stab = 0.999 * mu / lam
    if constraint == "capacity":
        alphas = np.linspace(0.0, min(1.0, chi / lam, stab), points)
    else:
        lower, upper = chi / lam, min(1.0, stab)
        alphas = np.array([0.0])
        if lower <= upper:
            alphas = np.concatenate([alphas, np.linspace(lower, upper, points)])
    values = partial_response(mu, lam, n.user_rtt, cloud_rtt, alphas)
    k = int(np.argmin(values))
    return float(alphas[k]), float(values[k])


def hand_coop_response(j, phi, phi_cloud, s):
    """ Response time of node j written out term by term """
    total = sum(n.arrival_rate for n in s.nodes)
    value = s.nodes[j].user_rtt
    for i, node in enumerate(s.nodes):
        load = sum(phi[k][i] for k in range(s.size))
        value += phi[j][i] * (s.inter_rtt[j][i] + 1.0 / (node.service_rate - load)) / total
    return value + phi_cloud[j] / s.nodes[j].arrival_rate * s.cloud_rtt


def random_feasible_matrix(rng, s, fill=0.7):
    """ Random N x (N+1) allocation respecting rows, masks and capacities """
    size = s.size
    lam = s.arrival_rates()
    room = s.capacities() * fill
    matrix = np.zeros((size, size + 1))
    for j in rng.permutation(size):
        weights = rng.uniform(size=size) * s.coop_mask[j]
        share = lam[j] * rng.uniform() * weights / weights.sum()
        take = np.minimum(share, room)
        room -= take
        matrix[j, :size] = take
        matrix[j, size] = lam[j] - take.sum()
    return matrix


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        step = np.zeros_like(x)
        step[idx] = h
        grad[idx] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def coop_total(matrix, s):
    """ Total response time of an N x (N+1) allocation, cloud column last,
        written from the model equations. Infinite when a queue overflows.
    """
    size = s.size
    matrix = np.asarray(matrix, dtype=float)
    phi, cloud = matrix[:, :size], matrix[:, size]
    lam = np.array([n.arrival_rate for n in s.nodes])
    mu = np.array([n.service_rate for n in s.nodes])
    loads = phi.sum(axis=0)
    if np.any(loads >= mu):
        return np.inf
    fog = np.sum(phi * (np.asarray(s.inter_rtt) + 1.0 / (mu - loads))) / lam.sum()
    return float(sum(n.user_rtt for n in s.nodes) + fog + np.sum(cloud / lam) * s.cloud_rtt)


def brute_force_coop(s, rng, samples=3000):
    """ Best random feasible allocation, refined by shrinking transfers.

        A transfer moves workload between two entries of one row, or swaps
        it between two rows across two fog columns so column loads stay put.
    """
    size = s.size
    lam, cap = s.arrival_rates(), s.capacities()
    allowed = np.hstack([np.asarray(s.coop_mask, dtype=bool), np.ones((size, 1), dtype=bool)])
    x = np.zeros((size, size + 1))
    x[:, size] = lam
    best = coop_total(x, s)
    for _ in range(samples):
        y = random_feasible_matrix(rng, s, fill=0.999)
        value = coop_total(y, s)
        if value < best:
            x, best = y, value

    cols = range(size + 1)
    row_moves = [(j, a, b) for j in range(size) for a in cols for b in cols
                 if a != b and allowed[j, a] and allowed[j, b]]
    swaps = [(j, k, a, b) for j in range(size) for k in range(size) if j != k
             for a in range(size) for b in range(size)
             if a != b and allowed[j, a] and allowed[j, b] and allowed[k, a] and allowed[k, b]]
    delta = float(lam.max()) / 4.0
    while delta > 1e-10 * float(lam.max()):
        improved = False
        for j, a, b in row_moves:
            amount = min(delta, x[j, a])
            if b < size:
                amount = min(amount, cap[b] - x[:, b].sum())
            if amount <= 0.0:
                continue
            y = x.copy()
            y[j, a] -= amount
            y[j, b] += amount
            value = coop_total(y, s)
            if value < best:
                x, best, improved = y, value, True
        for j, k, a, b in swaps:
            amount = min(delta, x[j, a], x[k, b])
            if amount <= 0.0:
                continue
            y = x.copy()
            y[j, a] -= amount
            y[j, b] += amount
            y[k, b] -= amount
            y[k, a] += amount
            value = coop_total(y, s)
            if value < best:
                x, best, improved = y, value, True
        if not improved:
            delta /= 2.0
    return x, best


def grid_minimize(f, lower, upper, feasible=None, points=41, rounds=10):
    """ Minimizes a vectorized f over a box with a dense grid that is refined
        around the best point each round. f and feasible take an (M, dim)
        array of candidate points.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    lo, hi = lower.copy(), upper.copy()
    best, best_value = None, np.inf
    for _ in range(rounds):
        axes = [np.array([a]) if b <= a else np.linspace(a, b, points) for a, b in zip(lo, hi)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        if feasible is not None:
            mesh = mesh[feasible(mesh)]
        values = f(mesh)
        k = int(np.argmin(values))
        if values[k] <= best_value:
            best, best_value = mesh[k], float(values[k])
        spacing = (hi - lo) / (points - 1)
        lo = np.maximum(best - 2.0 * spacing, lower)
        hi = np.minimum(best + 2.0 * spacing, upper)
    return best, best_value


def project_row_bisection(values, total, allowed, iterations=200):
    """ Projection of one row onto {x >= 0, sum(x) = total, x = 0 where not
        allowed}, found by bisection on the shift theta in max(v - theta, 0).
    """
    values = np.asarray(values, dtype=float)
    allowed = np.asarray(allowed, dtype=bool)
    free = values[allowed]
    lo, hi = free.min() - total, free.max()
    for _ in range(iterations):
        theta = 0.5 * (lo + hi)
        if np.maximum(free - theta, 0.0).sum() > total:
            lo = theta
        else:
            hi = theta
    out = np.zeros_like(values)
    out[allowed] = np.maximum(free - 0.5 * (lo + hi), 0.0)
    return out
