"""Perturb a transition above a protected jet until chosen types die.

The input is a transition, a protected order N0, a rational budget
epsilon and a list of types (k, nu).  The output transition agrees with
the input through degree N0 bit for bit, differs from it by less than
epsilon in sup norm, and comes with an obstruction certificate for
every requested type.

Types are processed in stages ordered by their working orders: all
types sharing the n-th distinct order form one stage, and stage n may
spend strictly less than epsilon / 2^n of the budget, so the total
stays under epsilon by the geometric series no matter how many stages
run.  Each stage first tries the current transition unchanged (a free
attempt), then redraws the whole band of degrees between N0 and the
stage's working order with fresh seeded dyadic coefficients under the
stage bound.  An attempt succeeds only if every type of the stage AND
every type secured earlier certifies obstructed on the candidate;
earlier certificates are never assumed stable under later perturbation,
they are re-earned each stage since the bands overlap.

Obstruction certificates over the rationals inherit the probabilistic
caveat of the decision walk; the hardening loop treats any verdict
other than obstructed_at_order (a found foliation, or an inconclusive
budget trip) as a failed attempt.  When a stage exhausts its retries,
harden raises HardenExhausted carrying the full attempt log; that can
mean bad luck, a working order too small for the type, or a transition
whose low jet already carries the foliation at every nearby choice.
"""

from dataclasses import dataclass
from fractions import Fraction

from .certify import estimate_n1
from .germs import DiffeoJet, difference_norm
from .prng import derive
from .prolong import Certificate, DecidePolicy, decide_type
from .rings import RationalRing
from .series import DegreeBand, OrderError


@dataclass(frozen=True)
class HardenRequest:
    """What to protect, how much to move, and which types must die.

    working_orders, when given, pairs up with types entrywise;
    otherwise each type's order is estimated from rank growth plus a
    margin of two degrees.  retries bounds the redraws per stage, not
    counting the free unperturbed attempt.
    """

    transition: DiffeoJet
    base_order: int
    epsilon: Fraction
    types: tuple
    seed: int = 0
    working_orders: tuple | None = None
    retries: int = 32

    def __post_init__(self):
        if self.base_order < 1:
            raise ValueError("protected order must be at least 1")
        if Fraction(self.epsilon) <= 0:
            raise ValueError("perturbation budget must be positive")
        for k, nu in self.types:
            if k < 0 or nu < 0:
                raise ValueError(f"type ({k}, {nu}) is not valid")
        if self.working_orders is not None and len(self.working_orders) != len(
            self.types
        ):
            raise ValueError(
                f"{len(self.working_orders)} working orders for "
                f"{len(self.types)} types"
            )
        if self.retries < 0:
            raise ValueError("retries must be nonnegative")


@dataclass(frozen=True)
class HardenResult:
    """Perturbed transition with its audit trail.

    certificates pairs each requested type with the obstruction
    certificate earned on the final transition; attempts is the flat
    log of every candidate tried; stages summarizes band, budget and
    attempt count per stage.
    """

    transition: DiffeoJet
    certificates: tuple
    attempts: tuple
    stages: tuple


class HardenExhausted(RuntimeError):
    """A stage ran out of retries; carries the report and full log."""

    def __init__(self, report: dict, attempts: tuple):
        super().__init__(
            f"stage {report['stage']} (working order {report['working_order']}) "
            f"found no perturbation in {report['attempts_allowed']} attempts"
        )
        self.report = report
        self.attempts = attempts


def default_working_orders(types, seed: int, *, max_N: int = 10, samples: int = 3):
    """Rank-growth estimate plus a two-degree margin, one per type."""
    out = []
    cache: dict = {}
    for k, nu in types:
        if (k, nu) not in cache:
            est = estimate_n1(k, nu, max_N, samples, seed)
            if est["N1"] is None:
                raise ValueError(
                    f"no working order for type ({k}, {nu}) within N <= {max_N}; "
                    "pass working_orders explicitly"
                )
            cache[(k, nu)] = est["N1"] + 2
        out.append(cache[(k, nu)])
    return tuple(out)


def _policy_for(seed: int, stage: int, attempt: int, k: int, nu: int) -> DecidePolicy:
    return DecidePolicy(seed=derive(seed, "harden-policy", stage, attempt, k, nu).u64())


def _check_all(candidate, checks, seed, stage, attempt):
    """Run the decision walk for every (type, order); stop at first survivor.

    Returns (certificates by type, failure info or None).
    """
    certs = {}
    for (k, nu), W in checks:
        cert = decide_type(candidate, k, nu, W, _policy_for(seed, stage, attempt, k, nu))
        certs[(k, nu)] = cert
        if cert.verdict != "obstructed_at_order":
            return certs, {"type": [k, nu], "verdict": cert.verdict}
    return certs, None


def harden(req: HardenRequest) -> HardenResult:
    """Move the transition above its protected jet until the types die.

    Raises HardenExhausted when some stage runs out of retries, and
    OrderError when the transition is too short for a requested working
    order.  The returned result has been re-verified: protected jet
    bit-identical, total movement strictly under budget, every
    certificate obstructed.
    """
    phi0 = req.transition
    if not isinstance(phi0.phi.ring, RationalRing):
        raise ValueError("hardening draws rational perturbations; use the q ring")
    types = tuple(tuple(t) for t in req.types)
    if not types:
        return HardenResult(phi0, (), (), ())
    orders = req.working_orders or default_working_orders(types, req.seed)
    epsilon = Fraction(req.epsilon)
    for (k, nu), W in zip(types, orders):
        if W < nu:
            raise ValueError(
                f"working order {W} cannot hold type ({k}, {nu}) forms"
            )
    need = max(orders) + 1
    if phi0.order < need:
        raise OrderError(
            f"transition order {phi0.order} cannot certify working orders "
            f"{sorted(set(orders))}; need at least {need}"
        )

    by_order: dict = {}
    for t, W in zip(types, orders):
        by_order.setdefault(W, [])
        if t not in by_order[W]:
            by_order[W].append(t)

    current = phi0
    secured: list = []
    attempts_log: list = []
    stage_rows: list = []
    final_certs: dict = {}
    for stage, W in enumerate(sorted(by_order), start=1):
        stage_types = by_order[W]
        budget = epsilon / 2**stage
        band = DegreeBand(req.base_order, W) if W > req.base_order else None
        allowed = 1 + (req.retries if band is not None else 0)
        checks = [(t, dict(zip(types, orders))[t]) for t in stage_types] + secured
        won = None
        for attempt in range(allowed):
            if attempt == 0:
                candidate, drawn = current, Fraction(0)
            else:
                rng = derive(req.seed, "harden", stage, attempt)
                candidate = current.perturb_band(band, rng, budget)
                drawn = difference_norm(candidate, current)
                assert drawn < budget
            certs, failure = _check_all(candidate, checks, req.seed, stage, attempt)
            attempts_log.append(
                {
                    "stage": stage,
                    "working_order": W,
                    "attempt": attempt,
                    "perturbed": attempt > 0,
                    "drawn_norm": str(drawn),
                    "checked": [
                        [k, nu, c.verdict] for (k, nu), c in certs.items()
                    ],
                    "secured": failure is None,
                    "failure": failure,
                }
            )
            if failure is None:
                won = (candidate, certs, drawn, attempt)
                break
        if won is None:
            raise HardenExhausted(
                {
                    "stage": stage,
                    "working_order": W,
                    "types": [list(t) for t in stage_types],
                    "attempts_allowed": allowed,
                    "budget": str(budget),
                    "band_empty": band is None,
                },
                tuple(attempts_log),
            )
        current, final_certs, drawn, used = won
        secured = checks
        stage_rows.append(
            {
                "stage": stage,
                "working_order": W,
                "types": [list(t) for t in stage_types],
                "band": [req.base_order, W] if band is not None else None,
                "budget": str(budget),
                "attempts_used": used + 1,
                "drawn_norm": str(drawn),
            }
        )

    if current.jet(req.base_order) != phi0.jet(req.base_order):
        raise RuntimeError("protected jet moved; this is an engine bug")
    total = difference_norm(current, phi0)
    if not total < epsilon:
        raise RuntimeError(f"total movement {total} reached the budget {epsilon}")
    for t in types:
        if final_certs[t].verdict != "obstructed_at_order":
            raise RuntimeError("secured type lost its certificate; engine bug")
    certificates = tuple((t, final_certs[t]) for t in types)
    return HardenResult(current, certificates, tuple(attempts_log), tuple(stage_rows))
