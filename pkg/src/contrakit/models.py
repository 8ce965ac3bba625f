"""System-model abstraction and the zoo of concrete example systems.

Every model bundles a vector field, its analytic Jacobian, a domain, and,
where one exists, a closed-form solution oracle used to validate the
integrator.  Models are immutable after construction and safe to share.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import domains
from .domains import DomainSpec, box, positive_orthant_box
from .errors import NumericError, ParameterError, SchemaError
from .measures import L1, MeasureSpec


@dataclass(frozen=True, eq=False)
class SystemModel:
    """A time-varying vector field with Jacobian and domain.

    ``closed_form(t, t1, a)`` returns the exact solution when available.
    ``discontinuities`` lists known switching times the integrator must
    split at.  ``init_transform(t1, u)`` maps free parameters sampled in
    ``init_box`` to a feasible initial state; it defaults to the identity
    and exists for models whose feasible initial set depends on the start
    time.
    """

    name: str
    n: int
    f: Callable[[float, np.ndarray], np.ndarray]
    jacobian: Callable[[float, np.ndarray], np.ndarray]
    domain: DomainSpec
    time_invariant: bool = False
    period: Optional[float] = None
    closed_form: Optional[Callable] = None
    lipschitz_bound: Optional[float] = None
    discontinuities: tuple = ()
    init_transform: Optional[Callable] = None
    init_box: Optional[DomainSpec] = None
    spec: dict = field(default_factory=dict)

    def initial_state(self, t1: float, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.init_transform is None:
            return u
        return np.asarray(self.init_transform(t1, u), dtype=float)

    def sampling_box(self) -> DomainSpec:
        """Box the pair sampler draws free initial parameters from."""
        return self.init_box if self.init_box is not None else self.domain


# ---------------------------------------------------------------------------
# scalar zoo


def _g_drift(t: float) -> float:
    # antiderivative of exp(-t^2) - 1
    return math.sqrt(math.pi) / 2.0 * math.erf(t) - t


def erf_system() -> SystemModel:
    """Scalar system x' = (exp(-t^2) - 1) x on (-1, 1).

    Closed form: x(t, t1, a) = exp(g(t) - g(t1)) a with
    g(t) = sqrt(pi)/2 * erf(t) - t.
    """

    def f(t, x):
        return (math.exp(-t * t) - 1.0) * x

    def jac(t, x):
        return np.array([[math.exp(-t * t) - 1.0]])

    def closed(t, t1, a):
        return np.atleast_1d(a) * math.exp(_g_drift(t) - _g_drift(t1))

    return SystemModel(
        name="erf", n=1, f=f, jacobian=jac,
        domain=box([-1.0], [1.0], open_lower=(True,), open_upper=(True,)),
        closed_form=closed, lipschitz_bound=1.0,
        spec={"model": "erf"},
    )


def counterexample_system() -> SystemModel:
    """Scalar system x' = -x / (t + 1) on [-1, 1].

    Closed form: x(t, t1, a) = a (t1 + 1) / (t + 1).  The Jacobian is
    negative for every t, yet the decay rate drains away as t grows.
    """

    def f(t, x):
        return -x / (t + 1.0)

    def jac(t, x):
        return np.array([[-1.0 / (t + 1.0)]])

    def closed(t, t1, a):
        return np.atleast_1d(a) * (t1 + 1.0) / (t + 1.0)

    return SystemModel(
        name="time-counterexample", n=1, f=f, jacobian=jac,
        domain=box([-1.0], [1.0]),
        closed_form=closed, lipschitz_bound=1.0,
        spec={"model": "counterexample"},
    )


def shifted_system() -> SystemModel:
    """Scalar system that idles on [0, 1] and then decays at rate 2.

    x' = 0 for t <= 1, x' = -2x for t > 1, on (-1, 1); the switching time
    t = 1 is declared so the integrator restarts there.
    """

    def f(t, x):
        return np.zeros_like(x) if t <= 1.0 else -2.0 * x

    def jac(t, x):
        return np.array([[0.0 if t <= 1.0 else -2.0]])

    def closed(t, t1, a):
        a = np.atleast_1d(a)
        if t1 <= 1.0:
            return a if t <= 1.0 else a * math.exp(-2.0 * (t - 1.0))
        return a * math.exp(-2.0 * (t - t1))

    return SystemModel(
        name="shifted", n=1, f=f, jacobian=jac,
        domain=box([-1.0], [1.0], open_lower=(True,), open_upper=(True,)),
        closed_form=closed, lipschitz_bound=2.0, discontinuities=(1.0,),
        spec={"model": "shifted"},
    )


def linear_decay_system() -> SystemModel:
    """Baseline contractive reference: x' = -x on [-1, 1]."""

    def f(t, x):
        return -x

    def jac(t, x):
        return np.array([[-1.0]])

    def closed(t, t1, a):
        return np.atleast_1d(a) * math.exp(-(t - t1))

    return SystemModel(
        name="linear-decay", n=1, f=f, jacobian=jac,
        domain=box([-1.0], [1.0]), time_invariant=True,
        closed_form=closed, lipschitz_bound=1.0,
        spec={"model": "linear-decay"},
    )


def forced_linear_system() -> SystemModel:
    """x' = -x + sin(t): 2*pi-periodic forcing of the decay system.

    The unique periodic orbit is (sin t - cos t) / 2.
    """

    def f(t, x):
        return -x + math.sin(t)

    def jac(t, x):
        return np.array([[-1.0]])

    def closed(t, t1, a):
        a = np.atleast_1d(a)
        orbit = lambda s: (math.sin(s) - math.cos(s)) / 2.0
        return orbit(t) + (a - orbit(t1)) * math.exp(-(t - t1))

    return SystemModel(
        name="forced-linear", n=1, f=f, jacobian=jac,
        domain=box([-2.0], [2.0]), period=2.0 * math.pi,
        closed_form=closed, lipschitz_bound=1.0,
        spec={"model": "forced-linear"},
    )


def logistic_system() -> SystemModel:
    """x' = x(1 - x) on [0, 1]; both endpoints are equilibria, so the
    boundary-entry half of the interior-contractivity test fails."""

    def f(t, x):
        return x * (1.0 - x)

    def jac(t, x):
        return np.array([[1.0 - 2.0 * float(x[0])]])

    return SystemModel(
        name="logistic", n=1, f=f, jacobian=jac,
        domain=box([0.0], [1.0]), time_invariant=True, lipschitz_bound=1.0,
        spec={"model": "logistic"},
    )


def erf_augmented_system() -> SystemModel:
    """Two-state autonomous rewrite of the erf system: the clock becomes a
    state with x2' = 1.

    Feasible initial conditions at start time t1 are (a1, t1), so any two
    feasible starts agree in the clock component; ``init_transform``
    encodes that constraint and the nested family re-anchors at t1.
    """

    def f(t, x):
        return np.array([(math.exp(-x[1] * x[1]) - 1.0) * x[0], 1.0])

    def jac(t, x):
        e = math.exp(-x[1] * x[1])
        return np.array([[e - 1.0, -2.0 * x[0] * x[1] * e], [0.0, 0.0]])

    def init(t1, u):
        return np.array([float(u[0]), float(t1)])

    x2_cap = 1e6

    def family(zeta, t1=0.0):
        return box([-1.0, t1 + zeta], [1.0, x2_cap],
                   open_lower=(True, False), open_upper=(True, False))

    def closed(t, t1, a):
        a = np.atleast_1d(a)
        # feasible states carry x2 = time
        x1 = a[0] * math.exp(_g_drift(t) - _g_drift(a[1]))
        return np.array([x1, a[1] + (t - t1)])

    return SystemModel(
        name="erf-augmented", n=2, f=f, jacobian=jac,
        domain=box([-1.0, 0.0], [1.0, x2_cap],
                   open_lower=(True, False), open_upper=(True, False),
                   nested_family=family),
        time_invariant=True, closed_form=closed, lipschitz_bound=2.0,
        init_transform=init,
        init_box=box([-1.0], [1.0], open_lower=(True,), open_upper=(True,)),
        spec={"model": "erf-augmented"},
    )


# ---------------------------------------------------------------------------
# biochemical control circuit


@dataclass(frozen=True)
class BioParams:
    """Parameters of the protein-synthesis feedback loop.

    ``alphas`` are the per-stage degradation rates, ``k`` the saturation
    constant of the production nonlinearity g(u) = (1 + u) / (k + u).
    """

    n: int
    alphas: tuple
    k: float

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        if self.n < 1 or len(self.alphas) != self.n:
            raise ParameterError(
                f"need {self.n} alpha values, got {len(self.alphas)}"
            )
        if any(a <= 0 for a in self.alphas):
            raise ParameterError("all alphas must be > 0")
        if self.k <= 1:
            raise ParameterError(f"k must be > 1, got {self.k}")

    @property
    def alpha_product(self) -> float:
        return float(np.prod(self.alphas))

    def g(self, u: float) -> float:
        return (1.0 + u) / (self.k + u)

    def g_prime(self, u: float) -> float:
        # exact derivative; the corner Jacobian entry drives every
        # contraction threshold, so no finite differences here
        return (self.k - 1.0) / (self.k + u) ** 2


def bio_omega_r(p: BioParams, r: float = 1.0) -> DomainSpec:
    """Invariant box Omega_r = r * prod_i [0, 1/(alpha_1...alpha_i)]."""
    uppers = []
    prod = 1.0
    for a in p.alphas:
        prod *= a
        uppers.append(r / prod)
    return positive_orthant_box(uppers)


def bio_weight_matrix(p: BioParams, eps: float) -> np.ndarray:
    """Diagonal weight diag(1, a1-eps, (a1-eps)(a2-eps), ...) defining the
    weighted-L1 norm under which the circuit contracts."""
    if eps < 0 or eps >= min(p.alphas):
        raise ParameterError(
            f"eps must satisfy 0 <= eps < min(alphas)={min(p.alphas)}, got {eps}"
        )
    diag = [1.0]
    for a in p.alphas[:-1]:
        diag.append(diag[-1] * (a - eps))
    return np.diag(diag)


def bio_measure_spec(p: BioParams, eps: float) -> MeasureSpec:
    if eps == 0.0:
        return MeasureSpec(L1, bio_weight_matrix(p, 0.0))
    return MeasureSpec(L1, bio_weight_matrix(p, eps))


def bio_mu_closed_form(p: BioParams, eps: float, x_n: float) -> float:
    """Weighted-L1 measure of the circuit Jacobian in closed form:
    max{-eps, (g'(x_n) - alpha_n * prod(alpha_i - eps)) / prod(alpha_i - eps)}.
    """
    if eps < 0 or eps >= min(p.alphas):
        raise ParameterError(
            f"eps must satisfy 0 <= eps < min(alphas)={min(p.alphas)}, got {eps}"
        )
    prod = float(np.prod([a - eps for a in p.alphas[:-1]]))
    return max(-eps, (p.g_prime(x_n) - p.alphas[-1] * prod) / prod)


def bio_contraction_eps(p: BioParams, zeta: float, tol: float = 1e-12) -> float:
    """Weight parameter making the circuit strictly contractive on the
    nested region {x >= zeta}.

    Chooses eps by bisection so that alpha_n * prod_{i<n}(alpha_i - eps)
    lands midway between g'(zeta) and alpha_1...alpha_n, which keeps the
    weighted measure negative uniformly on the region.  Requires zeta > 0
    and g'(zeta) < alpha_1...alpha_n.
    """
    if zeta <= 0:
        raise ParameterError(f"zeta must be > 0, got {zeta}")
    alpha = p.alpha_product
    if p.g_prime(zeta) >= alpha:
        raise ParameterError(
            f"g'(zeta)={p.g_prime(zeta)} must be below alpha product {alpha}")
    target = (p.g_prime(zeta) + alpha) / 2.0

    def h(eps):
        return p.alphas[-1] * float(np.prod([a - eps for a in p.alphas[:-1]])) - target

    hi_cap = 0.999 * min(p.alphas)
    if h(hi_cap) > 0.0:
        return hi_cap
    lo, hi = 0.0, hi_cap
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def bio_norm_family(p: BioParams):
    """zeta -> weighted-L1 norm under which the circuit contracts on the
    nested region {x >= zeta}."""

    def family(zeta: float) -> MeasureSpec:
        return bio_measure_spec(p, bio_contraction_eps(p, zeta))

    return family


def bio_jacobian(p: BioParams, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    J = np.zeros((p.n, p.n))
    for i in range(p.n):
        J[i, i] = -p.alphas[i]
        if i > 0:
            J[i, i - 1] = 1.0
    if p.n == 1:
        J[0, 0] += p.g_prime(x[-1])
    else:
        J[0, p.n - 1] = p.g_prime(x[-1])
    return J


def bio_circuit(p: BioParams, r_max: float = 2.0) -> SystemModel:
    """Biochemical feedback circuit on the positive orthant.

    The working domain is the invariant box Omega_{r_max}; the orthant is
    unbounded, and every Omega_r with r >= 1 is forward invariant.
    """

    def f(t, x):
        out = np.empty(p.n)
        out[0] = p.g(x[-1]) - p.alphas[0] * x[0]
        for i in range(1, p.n):
            out[i] = x[i - 1] - p.alphas[i] * x[i]
        return out

    def jac(t, x):
        return bio_jacobian(p, x)

    def family(zeta, t1=0.0):
        dom = bio_omega_r(p, r_max)
        return box([zeta] * p.n, dom.upper)

    return SystemModel(
        name="bio", n=p.n, f=f, jacobian=jac,
        domain=DomainSpec(domains.POSITIVE_ORTHANT_BOX,
                          bio_omega_r(p, r_max).lower,
                          bio_omega_r(p, r_max).upper,
                          nested_family=family),
        time_invariant=True,
        lipschitz_bound=None,
        spec={"model": "bio", "n": p.n, "alphas": list(p.alphas), "k": p.k},
    )


def bio_equilibrium(p: BioParams, tol: float = 1e-14) -> np.ndarray:
    """Unique equilibrium of the circuit, found by bisection on the scalar
    reduced equation g(x_n) = alpha * x_n, then exact back-substitution."""
    alpha = p.alpha_product
    if p.k - 1.0 > alpha * p.k ** 2:
        raise ParameterError(
            "equilibrium solver requires k - 1 <= alpha * k^2"
        )
    h = lambda u: p.g(u) - alpha * u
    lo, hi = 0.0, 1.0 / alpha
    # g < 1 on the orthant, so the root lies below 1/alpha; extend until a
    # sign change just in case of roundoff at the cap
    while h(hi) > 0.0:
        hi *= 2.0
        if hi > 1e12:
            raise NumericError("no sign change found for the reduced equation")
    if h(lo) <= 0.0:
        raise NumericError("reduced equation has no positive bracket")
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    x_n = (lo + hi) / 2.0
    # back-substitution: x_{i-1} = alpha_i * x_i
    x = np.empty(p.n)
    x[-1] = x_n
    for i in range(p.n - 1, 0, -1):
        x[i - 1] = p.alphas[i] * x[i]
    return x


def periodic_bio_circuit(p: BioParams, amplitude: float, period: float,
                         r_max: float = 2.0) -> SystemModel:
    """Circuit with the first degradation rate replaced by the T-periodic
    alpha_1(t) = alpha_1 + amplitude * sin(2*pi*t / T).

    The forcing placement is this toolkit's choice; reports flag it as a
    generalization of the static circuit.
    """
    if period <= 0:
        raise ParameterError(f"forcing period must be > 0, got {period}")
    if abs(amplitude) >= p.alphas[0]:
        raise ParameterError(
            f"forcing amplitude {amplitude} drives alpha_1 to <= 0"
        )
    omega = 2.0 * math.pi / period

    def alpha1(t):
        return p.alphas[0] + amplitude * math.sin(omega * t)

    def f(t, x):
        out = np.empty(p.n)
        out[0] = p.g(x[-1]) - alpha1(t) * x[0]
        for i in range(1, p.n):
            out[i] = x[i - 1] - p.alphas[i] * x[i]
        return out

    def jac(t, x):
        J = bio_jacobian(p, x)
        J[0, 0] = -alpha1(t)
        return J

    base = bio_omega_r(
        BioParams(p.n, (p.alphas[0] - abs(amplitude),) + p.alphas[1:], p.k),
        r_max,
    )
    return SystemModel(
        name="bio-periodic", n=p.n, f=f, jacobian=jac,
        domain=base, time_invariant=False, period=period,
        spec={"model": "bio-periodic", "n": p.n, "alphas": list(p.alphas),
              "k": p.k, "forcing": {"amplitude": amplitude, "period": period}},
    )


# ---------------------------------------------------------------------------
# model specification files

_ZOO = {
    "erf": lambda spec: erf_system(),
    "counterexample": lambda spec: counterexample_system(),
    "shifted": lambda spec: shifted_system(),
    "linear-decay": lambda spec: linear_decay_system(),
    "forced-linear": lambda spec: forced_linear_system(),
    "logistic": lambda spec: logistic_system(),
    "erf-augmented": lambda spec: erf_augmented_system(),
}

_BIO_FIELDS = {"model", "n", "alphas", "k", "r_max"}
_BIO_PERIODIC_FIELDS = _BIO_FIELDS | {"forcing"}


def _bio_params_from_spec(spec: dict, location: str) -> BioParams:
    for key in ("n", "alphas", "k"):
        if key not in spec:
            raise SchemaError(f"missing required field {key!r}", location)
    if not isinstance(spec["n"], int):
        raise SchemaError(f"field 'n' must be an integer, got {spec['n']!r}",
                          f"{location}.n")
    if not isinstance(spec["alphas"], list):
        raise SchemaError("field 'alphas' must be a list of positive numbers",
                          f"{location}.alphas")
    try:
        return BioParams(spec["n"], tuple(spec["alphas"]), float(spec["k"]))
    except (ParameterError, TypeError, ValueError) as exc:
        raise SchemaError(str(exc), location) from exc


def model_from_spec(spec: dict, location: str = "model spec") -> SystemModel:
    """Build a model from a JSON record like
    ``{"model": "bio", "n": 2, "alphas": [1.0, 1.0], "k": 2.0}``.

    Unknown model names and unknown fields are rejected with
    location-bearing errors.
    """
    if not isinstance(spec, dict):
        raise SchemaError("model spec must be a JSON object", location)
    if "model" not in spec:
        raise SchemaError("missing required field 'model'", location)
    name = spec["model"]
    if name in _ZOO:
        extra = set(spec) - {"model"}
        if extra:
            raise SchemaError(f"unknown fields for model {name!r}: {sorted(extra)}",
                              location)
        return _ZOO[name](spec)
    if name == "bio":
        extra = set(spec) - _BIO_FIELDS
        if extra:
            raise SchemaError(f"unknown fields for model 'bio': {sorted(extra)}",
                              location)
        return bio_circuit(_bio_params_from_spec(spec, location),
                           r_max=float(spec.get("r_max", 2.0)))
    if name == "bio-periodic":
        extra = set(spec) - _BIO_PERIODIC_FIELDS
        if extra:
            raise SchemaError(
                f"unknown fields for model 'bio-periodic': {sorted(extra)}", location)
        p = _bio_params_from_spec(spec, location)
        forcing = spec.get("forcing")
        if not isinstance(forcing, dict) or set(forcing) != {"amplitude", "period"}:
            raise SchemaError(
                "field 'forcing' must be {\"amplitude\": ..., \"period\": ...}",
                f"{location}.forcing")
        try:
            return periodic_bio_circuit(p, float(forcing["amplitude"]),
                                        float(forcing["period"]),
                                        r_max=float(spec.get("r_max", 2.0)))
        except ParameterError as exc:
            raise SchemaError(str(exc), f"{location}.forcing") from exc
    known = sorted(list(_ZOO) + ["bio", "bio-periodic"])
    raise SchemaError(f"unknown model {name!r}; known models: {known}",
                      f"{location}.model")


def load_model(path: str) -> SystemModel:
    """Load a model specification JSON file."""
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", path) from exc
    return model_from_spec(spec, location=path)
