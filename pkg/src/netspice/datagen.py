"""Synthetic sparse dynamic networks: generation and simulation.

A ground-truth network couples J nodes through strictly causal rational
filters G[i][j] (edge j -> i) and colors each node's innovation with a monic
filter H[i]:

    w_i(t) = sum_j (G_ij w_j)(t) + (H_i e_i)(t),     e_i ~ N(0, sigma2_i).

Generators draw random topologies and filters, rejection-sampling until the
interconnection is stable; the simulator runs the causal recursion through a
stacked state-space realization.  true_predictor_taps exposes the finite-lag
ground truth the estimator is compared against.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "TransferFunction",
    "GroundTruthNetwork",
    "random_topology",
    "random_fir",
    "random_rational",
    "random_monic_fir",
    "random_monic_rational",
    "network_stable",
    "simulate",
    "true_predictor_taps",
    "generate_network",
]

_MAX_POLE_MODULUS = 0.95
_STABILITY_MARGIN = 1e-6
_IR_HORIZON = 512


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(eq=False)
class TransferFunction:
    """Rational filter in the delay operator.

    num[d] and den[d] weight delay d; den is monic (den[0] = 1) and its roots
    (the poles) lie strictly inside the unit circle.  The identity filter is
    TransferFunction([1.0], [1.0]).
    """

    num: np.ndarray
    den: np.ndarray = field(default_factory=lambda: np.array([1.0]))

    def __post_init__(self):
        self.num = np.atleast_1d(np.asarray(self.num, dtype=float))
        self.den = np.atleast_1d(np.asarray(self.den, dtype=float))
        if self.num.ndim != 1 or self.den.ndim != 1:
            raise ValueError("num and den must be 1-d coefficient lists")
        if self.den.shape[0] < 1 or self.den[0] != 1.0:
            raise ValueError("den must be monic (den[0] == 1)")
        if not (np.all(np.isfinite(self.num)) and np.all(np.isfinite(self.den))):
            raise ValueError("coefficients must be finite")
        poles = self.poles()
        if poles.size and np.max(np.abs(poles)) >= 1.0:
            raise ValueError("unstable filter: pole on or outside unit circle")

    def poles(self) -> np.ndarray:
        """Roots of z^n + den[1] z^(n-1) + ... + den[n]."""
        if self.den.shape[0] == 1:
            return np.empty(0, dtype=complex)
        return np.roots(self.den)

    def zeros_of_num(self) -> np.ndarray:
        nz = np.trim_zeros(self.num, "f")
        if nz.size <= 1:
            return np.empty(0, dtype=complex)
        return np.roots(nz)

    @property
    def strictly_causal(self) -> bool:
        return self.num.shape[0] == 0 or self.num[0] == 0.0

    @property
    def is_monic(self) -> bool:
        return self.num.shape[0] >= 1 and self.num[0] == 1.0

    def impulse_response(self, length: int) -> np.ndarray:
        imp = np.zeros(length)
        imp[0] = 1.0
        return lfilter(self.num, self.den, imp)

    def to_dict(self) -> dict:
        return {"num": [float(c) for c in self.num],
                "den": [float(c) for c in self.den]}

    @classmethod
    def from_dict(cls, d: dict) -> "TransferFunction":
        return cls(num=np.asarray(d["num"], dtype=float),
                   den=np.asarray(d["den"], dtype=float))


def identity_tf() -> TransferFunction:
    return TransferFunction(num=np.array([1.0]))


@dataclass(eq=False)
class GroundTruthNetwork:
    """True network: topology, edge filters, noise filters, noise powers.

    adjacency[i, j] marks an edge from node j into node i (diagonal False).
    G[i][j] is that edge's filter (None off the support; strictly causal on
    it).  H[i] is node i's monic noise filter with stably invertible
    numerator.  sigma2[i] > 0 is the innovation variance.  seed records the
    generator entropy for provenance.
    """

    adjacency: np.ndarray
    G: list
    H: list
    sigma2: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=bool)
        J = self.adjacency.shape[0]
        if self.adjacency.shape != (J, J) or J < 2:
            raise ValueError("adjacency must be square with J >= 2")
        if np.any(np.diag(self.adjacency)):
            raise ValueError("adjacency diagonal must be False")
        if len(self.G) != J or any(len(row) != J for row in self.G):
            raise ValueError("G must be a J x J nested list")
        if len(self.H) != J:
            raise ValueError("H must have one filter per node")
        self.sigma2 = np.asarray(self.sigma2, dtype=float)
        if self.sigma2.shape != (J,) or np.any(self.sigma2 < 0):
            raise ValueError("sigma2 must be J nonnegative variances")
        for i in range(J):
            for j in range(J):
                tf = self.G[i][j]
                if self.adjacency[i, j]:
                    if tf is None or not tf.strictly_causal:
                        raise ValueError(
                            f"edge ({j}->{i}) needs a strictly causal filter")
                elif tf is not None:
                    raise ValueError(f"filter present off support at ({j}->{i})")
            h = self.H[i]
            if not h.is_monic:
                raise ValueError(f"H[{i}] must be monic")
            hz = h.zeros_of_num()
            if hz.size and np.max(np.abs(hz)) >= 1.0:
                raise ValueError(f"H[{i}] is not stably invertible")

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    def to_dict(self) -> dict:
        """JSON form with 1-based node ids, matching the CSV header naming."""
        J = self.n_nodes
        edges = []
        for i in range(J):
            for j in range(J):
                if self.adjacency[i, j]:
                    edges.append({"from": j + 1, "to": i + 1,
                                  **self.G[i][j].to_dict()})
        return {
            "J": J,
            "edges": edges,
            "noise_filters": [h.to_dict() for h in self.H],
            "sigma2": [float(s) for s in self.sigma2],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruthNetwork":
        J = int(d["J"])
        adjacency = np.zeros((J, J), dtype=bool)
        G = [[None] * J for _ in range(J)]
        for e in d["edges"]:
            i, j = int(e["to"]) - 1, int(e["from"]) - 1
            adjacency[i, j] = True
            G[i][j] = TransferFunction.from_dict(e)
        H = [TransferFunction.from_dict(h) for h in d["noise_filters"]]
        return cls(adjacency=adjacency, G=G, H=H,
                   sigma2=np.asarray(d["sigma2"], dtype=float),
                   seed=d.get("seed"))

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load_json(cls, path) -> "GroundTruthNetwork":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def random_topology(n_nodes: int, density: float, rng) -> np.ndarray:
    """Random directed graph with exactly round(density * J * (J-1)) edges.

    Edges are drawn without replacement among the J(J-1) ordered off-diagonal
    pairs; no self-loops.  Deterministic given the rng state.
    """
    if n_nodes < 2:
        raise ValueError("need at least 2 nodes")
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    rng = _as_rng(rng)
    slots = [(i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j]
    n_edges = int(round(density * len(slots)))
    picked = rng.choice(len(slots), size=n_edges, replace=False)
    adjacency = np.zeros((n_nodes, n_nodes), dtype=bool)
    for k in picked:
        adjacency[slots[k]] = True
    return adjacency


def random_fir(K: int, rng) -> TransferFunction:
    """Strictly causal FIR filter with K taps uniform on [0, 1] at delays 1..K."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = _as_rng(rng)
    num = np.concatenate([[0.0], rng.uniform(0.0, 1.0, size=K)])
    return TransferFunction(num=num)


def random_monic_fir(length: int, rng) -> TransferFunction:
    """Monic FIR 1 + h_1 q^-1 + ... with uniform [0, 1] taps, stably invertible.

    Uniform nonnegative taps of this length are minimum phase except on a
    measure-zero boundary; redraw on that boundary for safety.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = _as_rng(rng)
    for _ in range(100):
        num = np.concatenate([[1.0], rng.uniform(0.0, 1.0, size=length - 1)])
        tf = TransferFunction(num=num)
        zz = tf.zeros_of_num()
        if not zz.size or np.max(np.abs(zz)) < 1.0 - _STABILITY_MARGIN:
            return tf
    raise RuntimeError("could not draw a stably invertible monic FIR")


def _random_poles(order: int, rng) -> np.ndarray:
    """Poles as random conjugate pairs and reals, modulus uniform on [0, 0.95]."""
    poles = []
    remaining = order
    while remaining > 0:
        if remaining >= 2 and rng.uniform() < 0.5:
            radius = rng.uniform(0.0, _MAX_POLE_MODULUS)
            angle = rng.uniform(0.0, np.pi)
            pole = radius * np.exp(1j * angle)
            poles.extend([pole, np.conj(pole)])
            remaining -= 2
        else:
            radius = rng.uniform(0.0, _MAX_POLE_MODULUS)
            sign = 1.0 if rng.uniform() < 0.5 else -1.0
            poles.append(sign * radius)
            remaining -= 1
    return np.asarray(poles, dtype=complex)


def random_rational(min_order: int, max_order: int, rng) -> TransferFunction:
    """Strictly causal stable rational filter of random order.

    Order n is uniform on {min_order..max_order}; poles have modulus at most
    0.95; numerator coefficients at delays 1..n start uniform on [-1, 1] and
    are rescaled so the impulse-response l2 norm lands in [0.1, 1] (target
    drawn uniformly).
    """
    if not 1 <= min_order <= max_order:
        raise ValueError("need 1 <= min_order <= max_order")
    rng = _as_rng(rng)
    order = int(rng.integers(min_order, max_order + 1))
    den = np.real(np.poly(_random_poles(order, rng)))
    for _ in range(100):
        raw = rng.uniform(-1.0, 1.0, size=order)
        if np.any(raw != 0.0):
            break
    num = np.concatenate([[0.0], raw])
    tf = TransferFunction(num=num, den=den)
    norm = float(np.linalg.norm(tf.impulse_response(_IR_HORIZON)))
    target = rng.uniform(0.1, 1.0)
    return TransferFunction(num=num * (target / norm), den=den)


def random_monic_rational(min_order: int, max_order: int, rng) -> TransferFunction:
    """Monic, stable, stably invertible rational filter (noise coloring).

    Both poles and zeros are drawn with modulus at most 0.95, so the filter
    and its inverse are stable and the leading coefficient is 1.
    """
    if not 1 <= min_order <= max_order:
        raise ValueError("need 1 <= min_order <= max_order")
    rng = _as_rng(rng)
    order = int(rng.integers(min_order, max_order + 1))
    den = np.real(np.poly(_random_poles(order, rng)))
    num = np.real(np.poly(_random_poles(order, rng)))
    return TransferFunction(num=num, den=den)


def _tf_to_ss(tf: TransferFunction):
    """Controllable-canonical (A, B, C) with D = 0 of a strictly causal filter."""
    if not tf.strictly_causal:
        raise ValueError("state-space path requires a strictly causal filter")
    b = tf.num[1:]
    a = tf.den[1:]
    m = max(b.shape[0], a.shape[0], 1)
    bpad = np.zeros(m)
    bpad[:b.shape[0]] = b
    apad = np.zeros(m)
    apad[:a.shape[0]] = a
    A = np.zeros((m, m))
    A[0, :] = -apad
    if m > 1:
        A[1:, :-1] = np.eye(m - 1)
    B = np.zeros(m)
    B[0] = 1.0
    return A, B, bpad


def _interconnection_matrix(net: GroundTruthNetwork):
    """Stacked closed-loop state matrix plus input/output maps.

    Every edge contributes its realization; the loop closes through
    w_i = sum over incoming edges of C_e x_e (plus colored noise).  Returns
    (M, B_sel, C_out) with x+ = M x + B_sel v, w = C_out x + v.
    """
    J = net.n_nodes
    blocks = []
    for i in range(J):
        for j in range(J):
            if net.adjacency[i, j]:
                A, B, C = _tf_to_ss(net.G[i][j])
                blocks.append((i, j, A, B, C))
    nx = sum(b[2].shape[0] for b in blocks)
    M = np.zeros((nx, nx))
    B_sel = np.zeros((nx, J))
    C_out = np.zeros((J, nx))
    offs = []
    pos = 0
    for (_, _, A, _, _) in blocks:
        offs.append(pos)
        pos += A.shape[0]
    for e, (i, j, A, B, C) in enumerate(blocks):
        o = offs[e]
        m = A.shape[0]
        M[o:o + m, o:o + m] += A
        B_sel[o:o + m, j] = B
        C_out[i, o:o + m] += C
    # Close the loop: edge inputs are node outputs.
    M += B_sel @ C_out
    return M, B_sel, C_out


def network_stable(net: GroundTruthNetwork,
                   margin: float = _STABILITY_MARGIN) -> bool:
    """True when the interconnection's spectral radius is below 1 - margin."""
    M, _, _ = _interconnection_matrix(net)
    if M.shape[0] == 0:
        return True
    radius = float(np.max(np.abs(np.linalg.eigvals(M))))
    return radius < 1.0 - margin


def simulate(net: GroundTruthNetwork, n_samples: int, rng,
             burn_in: int = 500):
    """Run the network recursion and return the last n_samples samples.

    Innovation rows are drawn node by node (node i's stream depends only on
    its own substream scale sigma2[i]), colored by H_i, then fed through the
    closed-loop recursion.  The initial state is zero; burn_in samples are
    discarded.  Raises on numeric blow-up (|w| > 1e9), which indicates an
    unstable network slipped through.
    """
    from .netmodel import TimeSeries

    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    rng = _as_rng(rng)
    J = net.n_nodes
    total = burn_in + n_samples
    e = rng.standard_normal((J, total)) * np.sqrt(net.sigma2)[:, None]
    v = np.empty_like(e)
    for i in range(J):
        v[i] = lfilter(net.H[i].num, net.H[i].den, e[i])
    M, B_sel, C_out = _interconnection_matrix(net)
    nx = M.shape[0]
    x = np.zeros(nx)
    w = np.empty((J, total))
    for t in range(total):
        wt = C_out @ x + v[:, t]
        if np.max(np.abs(wt)) > 1e9:
            raise ArithmeticError("simulation overflow: unstable network")
        w[:, t] = wt
        x = M @ x + B_sel @ v[:, t]
    return TimeSeries(w[:, burn_in:])


def true_predictor_taps(net: GroundTruthNetwork, K: int) -> list[np.ndarray]:
    """Finite-lag ground truth the estimator aims at.

    For node i the one-step predictor in terms of past samples has block
    structure: block j holds the first K impulse-response coefficients
    (delays 1..K) of G_ij / H_i for an edge, the zero vector otherwise, and
    block i holds the first K coefficients of 1 - H_i^{-1}.  Returns one
    length-J*K vector per node.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    J = net.n_nodes
    out = []
    for i in range(J):
        h = net.H[i]
        hz = h.zeros_of_num()
        if not h.is_monic or (hz.size and np.max(np.abs(hz)) >= 1.0):
            raise ValueError(f"H[{i}] is not stably invertible")
        theta = np.zeros(J * K)
        for j in range(J):
            if j == i:
                # 1 - 1/H = (num - den)/num in delay powers.
                width = max(h.num.shape[0], h.den.shape[0])
                diff = np.zeros(width)
                diff[:h.num.shape[0]] += h.num
                diff[:h.den.shape[0]] -= h.den
                imp = np.zeros(K + 1)
                imp[0] = 1.0
                resp = lfilter(diff, h.num, imp)
            elif net.adjacency[i, j]:
                g = net.G[i][j]
                num = np.convolve(g.num, h.den)
                den = np.convolve(g.den, h.num)
                imp = np.zeros(K + 1)
                imp[0] = 1.0
                resp = lfilter(num, den, imp)
            else:
                continue
            theta[j * K: (j + 1) * K] = resp[1: K + 1]
        out.append(theta)
    return out


_MODES = ("fir", "fir_noise", "rational")


def generate_network(n_nodes: int, density: float, mode: str, K: int, rng,
                     order_range: tuple[int, int] = (1, 5),
                     max_topology_attempts: int = 100,
                     max_filter_attempts: int = 100) -> GroundTruthNetwork:
    """Draw a stable random network for one synthetic run.

    mode "fir": edge filters are FIR with K uniform taps, noise is white
    (H = 1).  mode "fir_noise": same edges, monic stable FIR noise filters of
    length 3.  mode "rational": strictly causal stable rational edges and
    monic stable rational noise filters, order uniform over order_range.

    Filters are redrawn (up to max_filter_attempts) until the closed loop is
    stable; after that many failures a fresh topology is drawn.  Noise
    variances are uniform on [0, 1].
    """
    if mode not in _MODES:
        raise ValueError(f"mode must be one of {_MODES}, got {mode!r}")
    seed = rng if isinstance(rng, (int, np.integer)) else None
    rng = _as_rng(rng)
    for _ in range(max_topology_attempts):
        adjacency = random_topology(n_nodes, density, rng)
        for _ in range(max_filter_attempts):
            G = [[None] * n_nodes for _ in range(n_nodes)]
            for i in range(n_nodes):
                for j in range(n_nodes):
                    if adjacency[i, j]:
                        if mode == "rational":
                            G[i][j] = random_rational(*order_range, rng)
                        else:
                            G[i][j] = random_fir(K, rng)
            if mode == "fir":
                H = [identity_tf() for _ in range(n_nodes)]
            elif mode == "fir_noise":
                H = [random_monic_fir(3, rng) for _ in range(n_nodes)]
            else:
                H = [random_monic_rational(*order_range, rng)
                     for _ in range(n_nodes)]
            sigma2 = rng.uniform(0.0, 1.0, size=n_nodes)
            net = GroundTruthNetwork(adjacency=adjacency, G=G, H=H,
                                     sigma2=sigma2, seed=seed)
            if network_stable(net):
                return net
    raise RuntimeError(
        f"no stable network found in {max_topology_attempts} topologies")
