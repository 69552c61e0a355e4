"""Monte Carlo estimates of the full-connection probability and what to fit to them.

High-density theory predicts ``P_fc = exp(-a * rho**(D/2))``: a stretched
exponential in node density with exponent half the boundary dimension.  The
helpers here run seeded density sweeps, fit ``ln(-ln P)`` against
``ln rho``, and compare ``P(rho / r**2)`` with ``P(rho)**n``.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

from scipy import stats

from .geometry import DEFAULT_MAX_DEPTH, make_domain
from .sampling import DEFAULT_SEED, sample_poisson_nodes, trial_seed

log = logging.getLogger(__name__)

AMBIENT_DIM = 2


class InsufficientDataError(ValueError):
    pass


class NoMatchingPairsError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    family: int
    thetas: tuple
    rhos: tuple
    trials: int = 100
    seed: int = DEFAULT_SEED
    r0: float = 1.0
    max_depth: int = DEFAULT_MAX_DEPTH
    confidence: float = 0.95

    def __post_init__(self):
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        object.__setattr__(self, "rhos", tuple(float(r) for r in self.rhos))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.thetas:
            raise ValueError("need at least one theta")
        if not self.rhos or any(r <= 0 for r in self.rhos):
            raise ValueError("rho grid must be non-empty and positive")
        if any(b <= a for a, b in zip(self.rhos, self.rhos[1:])):
            raise ValueError("rho grid must be strictly ascending")
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")

    def as_dict(self):
        d = asdict(self)
        d["thetas"] = list(self.thetas)
        d["rhos"] = list(self.rhos)
        return d


@dataclass(frozen=True)
class SweepRow:
    family: int
    theta: float
    rho: float
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    mean_n: float
    mean_isolated: float
    depth_exhausted: int


@dataclass(frozen=True)
class FitResult:
    beta_hat: float
    a_hat: float
    beta_se: float
    a_se: float
    log_a_se: float
    rows_used: int
    rho_min: float
    estimator: str = "p_hat"
    rhos: tuple = field(default=(), repr=False)


@dataclass(frozen=True)
class TrialOutcome:
    connected: bool
    n_nodes: int
    isolated: int
    exhausted: int


@dataclass(frozen=True)
class ScalingPair:
    rho: float
    rho_scaled: float
    lhs: float
    rhs: float
    lhs_ci: tuple
    rhs_ci: tuple
    overlap: bool


def wilson_interval(successes, trials, confidence=0.95):
    """Wilson score interval for a binomial proportion; always contains the point estimate."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z / denom * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))
    lo = 0.0 if successes == 0 else min(p, max(0.0, center - half))
    hi = 1.0 if successes == trials else max(p, min(1.0, center + half))
    return lo, hi


def run_trial(domain, rho, seed, r0=1.0, max_depth=DEFAULT_MAX_DEPTH):
    """One deployment: sample, link, count components."""
    nodes = sample_poisson_nodes(domain, rho, seed, max_depth)
    pts = nodes.points
    count, isolated, exhausted = domain.kernel.trial(pts[:, 0], pts[:, 1], float(r0), int(max_depth))
    return TrialOutcome(count <= 1, len(pts), isolated, exhausted)


def _run_point(domain, rho, config, pool):
    def one(k):
        seed = trial_seed(config.seed, domain.n, domain.theta, rho, k)
        return run_trial(domain, rho, seed, config.r0, config.max_depth)

    if pool is None:
        outcomes = [one(k) for k in range(config.trials)]
    else:
        outcomes = list(pool.map(one, range(config.trials)))
    successes = sum(o.connected for o in outcomes)
    lo, hi = wilson_interval(successes, config.trials, config.confidence)
    return SweepRow(
        family=domain.n,
        theta=domain.theta,
        rho=rho,
        trials=config.trials,
        successes=successes,
        p_hat=successes / config.trials,
        ci_low=lo,
        ci_high=hi,
        mean_n=sum(o.n_nodes for o in outcomes) / config.trials,
        mean_isolated=sum(o.isolated for o in outcomes) / config.trials,
        depth_exhausted=sum(1 for o in outcomes if o.exhausted),
    )


def run_sweep(config, threads=1, progress=None):
    """Estimate P_fc on every (theta, rho) of the config, in config order.

    Trial seeds depend only on the master seed and the trial's coordinates,
    so the rows are identical for any ``threads``.
    """
    rows = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for theta in config.thetas:
            domain = make_domain(config.family, theta)
            for rho in config.rhos:
                row = _run_point(domain, rho, config, pool)
                log.info("F%d(%g) rho=%g: %d/%d", row.family, row.theta, rho, row.successes, row.trials)
                if progress is not None:
                    progress(row)
                rows.append(row)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def fit_stretched_exponential(rows, rho_min=0.0, estimator="p_hat"):
    """Least-squares line through ``(ln rho, ln(-ln P))``; slope is beta, ``exp(intercept)`` is a.

    ``estimator="p_hat"`` uses the connection frequency and drops rows with
    ``p_hat`` equal to 0 or 1.  ``estimator="isolated"`` replaces ``-ln P``
    by the mean isolated-node count, the Poisson approximation that stays
    usable when ``P`` is too small to observe.
    """
    xs, ys, used = [], [], []
    for row in rows:
        if row.rho < rho_min:
            continue
        if estimator == "p_hat":
            if not 0 < row.successes < row.trials:
                continue
            y = -math.log(row.p_hat)
        elif estimator == "isolated":
            if not row.mean_isolated > 0:
                continue
            y = row.mean_isolated
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        xs.append(math.log(row.rho))
        ys.append(math.log(y))
        used.append(row.rho)
    if len(xs) < 3:
        raise InsufficientDataError(
            f"need at least 3 usable rows (rho >= {rho_min}, estimator {estimator}), got {len(xs)}"
        )
    fit = stats.linregress(xs, ys)
    a_hat = math.exp(fit.intercept)
    return FitResult(
        beta_hat=float(fit.slope),
        a_hat=a_hat,
        beta_se=float(fit.stderr),
        a_se=a_hat * float(fit.intercept_stderr),
        log_a_se=float(fit.intercept_stderr),
        rows_used=len(xs),
        rho_min=float(rho_min),
        estimator=estimator,
        rhos=tuple(used),
    )


def scaled_density(domain, rho):
    """Density one self-similar level deeper: ``rho * r**(-d)``."""
    return rho * domain.r ** (-AMBIENT_DIM)


def scaling_check(rows, domain, rel_tol=0.01):
    """Compare ``P(rho r^-2)`` with ``P(rho)^n`` wherever the grid holds both densities.

    The interval for ``P(rho)^n`` is the Wilson interval raised to the n-th
    power (a monotone map).
    """
    mine = [r for r in rows if r.family == domain.n and math.isclose(r.theta, domain.theta, rel_tol=1e-12)]
    out = []
    for row in mine:
        target = scaled_density(domain, row.rho)
        match = [r for r in mine if abs(r.rho / target - 1.0) <= rel_tol]
        if not match:
            continue
        other = min(match, key=lambda r: abs(r.rho / target - 1.0))
        n = domain.n
        lhs_ci = (other.ci_low, other.ci_high)
        rhs_ci = (row.ci_low**n, row.ci_high**n)
        overlap = lhs_ci[0] <= rhs_ci[1] and rhs_ci[0] <= lhs_ci[1]
        out.append(ScalingPair(row.rho, other.rho, other.p_hat, row.p_hat**n, lhs_ci, rhs_ci, overlap))
    if not out:
        raise NoMatchingPairsError(
            f"no (rho, rho/r^2) pairs within {rel_tol:.0%} for F{domain.n}({domain.theta:g}); "
            f"r^-2 = {domain.r ** -2:.6g}"
        )
    return out


def gateway_estimate(scale_ratio, D):
    """Gateway nodes needed to cover a boundary of dimension D: ``scale_ratio**D``."""
    if scale_ratio < 1:
        raise ValueError("scale_ratio must be >= 1")
    if not 1 <= D <= 2:
        raise ValueError("D must lie in [1, 2]")
    return float(scale_ratio) ** D


def stretched_exponential_rows(a, beta, rhos, family=2, theta=0.5, trials=10**6):
    """Rows whose ``p_hat`` follows ``exp(-a rho^beta)`` exactly (for calibration and tests)."""
    rows = []
    for rho in rhos:
        p = math.exp(-a * rho**beta)
        succ = min(trials - 1, max(1, round(p * trials)))
        rows.append(SweepRow(family, theta, float(rho), trials, succ, p, p, p, 0.0, 0.0, 0))
    return rows


def sweep_grid(domain, rhos):
    """Ascending grid containing every ``rho`` and its scaled partner ``rho / r^2``."""
    pts = set(float(r) for r in rhos)
    pts.update(scaled_density(domain, float(r)) for r in rhos)
    return tuple(sorted(pts))
