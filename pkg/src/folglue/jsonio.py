"""Wire formats for jets, forms, transitions and certificates.

Every structure serializes to plain JSON types.  Scalars go through the
ring (rationals as "p/q" strings, prime-field residues as tagged
{"mod", "val"} pairs so a file can never silently change
characteristic).  Term lists are sorted by (total degree, x exponent)
on output; parsers reject terms above the declared order, duplicate
monomials, and any identity-part term of a transition, and report the
JSON path of whatever they reject.
"""

from fractions import Fraction

from .compat import Residual
from .forms import OneFormJet
from .germs import DiffeoJet
from .harden import HardenRequest
from .rings import QQ, Ring
from .series import BiSeries


class SchemaError(ValueError):
    """Input does not match the wire format; `path` locates the offender."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _require_dict(obj, keys, path, optional=()):
    if not isinstance(obj, dict):
        raise SchemaError(path, f"expected an object, got {type(obj).__name__}")
    missing = set(keys) - set(obj)
    if missing:
        raise SchemaError(path, f"missing keys {sorted(missing)}")
    extra = set(obj) - set(keys) - set(optional)
    if extra:
        raise SchemaError(path, f"unexpected keys {sorted(extra)}")


def _index(value, path):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise SchemaError(path, f"exponent must be a nonnegative integer, got {value!r}")
    return value


def _order(value, path):
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise SchemaError(path, f"order must be a nonnegative integer, got {value!r}")
    return value


def _terms_out(ring: Ring, table: dict) -> list:
    return [
        [i, j, ring.serialize(c)]
        for (i, j), c in sorted(table.items(), key=lambda kv: (sum(kv[0]), kv[0][0]))
    ]


def _terms_in(ring: Ring, terms, order: int, path: str, *, min_degree=0) -> dict:
    if not isinstance(terms, list):
        raise SchemaError(path, "terms must be a list")
    table: dict = {}
    for idx, entry in enumerate(terms):
        here = f"{path}[{idx}]"
        if not isinstance(entry, list) or len(entry) != 3:
            raise SchemaError(here, "term must be [i, j, scalar]")
        i = _index(entry[0], here)
        j = _index(entry[1], here)
        if i + j > order:
            raise SchemaError(here, f"monomial x^{i} y^{j} exceeds order {order}")
        if i + j < min_degree:
            raise SchemaError(
                here,
                f"monomial x^{i} y^{j} below degree {min_degree} "
                "(the identity part stays implicit)",
            )
        if (i, j) in table:
            raise SchemaError(here, f"duplicate monomial x^{i} y^{j}")
        try:
            c = ring.parse(entry[2])
        except ValueError as exc:
            raise SchemaError(here, str(exc)) from exc
        if c:
            table[(i, j)] = c
    return table


# ---------------------------------------------------------------------------
# series


def dump_series(series: BiSeries) -> dict:
    return {"order": series.order, "terms": _terms_out(series.ring, series.coeffs)}


def parse_series(ring: Ring, obj, path: str = "series") -> BiSeries:
    _require_dict(obj, ("order", "terms"), path)
    order = _order(obj["order"], f"{path}.order")
    return BiSeries(ring, order, _terms_in(ring, obj["terms"], order, f"{path}.terms"))


# ---------------------------------------------------------------------------
# transitions


def dump_diffeo(transition: DiffeoJet) -> dict:
    a, b = transition.perturbation()
    ring = transition.phi.ring
    return {
        "order": transition.order,
        "phi": _terms_out(ring, a),
        "psi": _terms_out(ring, b),
    }


def parse_diffeo(ring: Ring, obj, path: str = "transition") -> DiffeoJet:
    _require_dict(obj, ("order", "phi", "psi"), path)
    order = _order(obj["order"], f"{path}.order")
    a = _terms_in(ring, obj["phi"], order, f"{path}.phi", min_degree=2)
    b = _terms_in(ring, obj["psi"], order, f"{path}.psi", min_degree=2)
    return DiffeoJet.from_perturbation(ring, order, a, b)


# ---------------------------------------------------------------------------
# forms


def dump_form(w: OneFormJet) -> dict:
    if w.chart is None or w.k is None or w.nu is None:
        raise ValueError("only chart-tagged form jets have a wire format")
    return {
        "chart": w.chart,
        "k": w.k,
        "nu": w.nu,
        "order": w.P.order,
        "P": _terms_out(w.P.ring, w.P.coeffs),
        "Q": _terms_out(w.Q.ring, w.Q.coeffs),
    }


def parse_form(ring: Ring, obj, path: str = "form") -> OneFormJet:
    _require_dict(obj, ("chart", "k", "nu", "order", "P", "Q"), path)
    order = _order(obj["order"], f"{path}.order")
    P = BiSeries(ring, order, _terms_in(ring, obj["P"], order, f"{path}.P"))
    Q = BiSeries(ring, order, _terms_in(ring, obj["Q"], order, f"{path}.Q"))
    try:
        return OneFormJet(P, Q, obj["chart"], obj["k"], obj["nu"])
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from exc


# ---------------------------------------------------------------------------
# residuals


def dump_residual(res: Residual) -> dict:
    out = dump_series(res.series)
    out["valid_order"] = res.valid_order
    return out


def parse_residual(ring: Ring, obj, path: str = "residual") -> Residual:
    _require_dict(obj, ("order", "terms", "valid_order"), path)
    order = _order(obj["order"], f"{path}.order")
    valid = _order(obj["valid_order"], f"{path}.valid_order")
    series = BiSeries(ring, order, _terms_in(ring, obj["terms"], order, f"{path}.terms"))
    try:
        return Residual(series, valid)
    except ValueError as exc:
        raise SchemaError(path, str(exc)) from exc


# ---------------------------------------------------------------------------
# certificates and harden traffic


def dump_certificate(cert) -> dict:
    """Decision certificate (decide_type or brute_force_oracle) to JSON."""
    witness = None
    if cert.witness is not None:
        w1, w2 = cert.witness
        witness = {"w1": dump_form(w1), "w2": dump_form(w2)}
    return {
        "kind": "decision",
        "mode": cert.mode,
        "verdict": cert.verdict,
        "k": cert.k,
        "nu": cert.nu,
        "working_order": cert.working_order,
        "obstruction_order": cert.obstruction_order,
        "probabilistic": cert.probabilistic,
        "ring": cert.ring_name,
        "seed": cert.seed,
        "branches": list(cert.branches),
        "witness": witness,
        "witness_reverified": cert.witness_reverified,
    }


def dump_harden_result(res) -> dict:
    return {
        "kind": "harden",
        "transition": dump_diffeo(res.transition),
        "certificates": [
            {"type": list(t), "certificate": dump_certificate(c)}
            for t, c in res.certificates
        ],
        "attempts": list(res.attempts),
        "stages": list(res.stages),
    }


def parse_harden_request(obj, path: str = "request") -> HardenRequest:
    """HardenRequest from JSON; the transition must live over the rationals."""
    _require_dict(
        obj,
        ("transition", "base_order", "epsilon", "types"),
        path,
        optional=("seed", "working_orders", "retries"),
    )
    transition = parse_diffeo(QQ, obj["transition"], f"{path}.transition")
    base = _order(obj["base_order"], f"{path}.base_order")
    try:
        epsilon = Fraction(QQ.parse(obj["epsilon"]))
    except ValueError as exc:
        raise SchemaError(f"{path}.epsilon", str(exc)) from exc
    if not isinstance(obj["types"], list):
        raise SchemaError(f"{path}.types", "types must be a list of [k, nu]")
    types = []
    for idx, pair in enumerate(obj["types"]):
        here = f"{path}.types[{idx}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(here, "type must be [k, nu]")
        types.append((_index(pair[0], here), _index(pair[1], here)))
    orders = obj.get("working_orders")
    if orders is not None:
        if not isinstance(orders, list) or not all(
            isinstance(w, int) and not isinstance(w, bool) for w in orders
        ):
            raise SchemaError(f"{path}.working_orders", "must be a list of integers")
        orders = tuple(orders)
    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise SchemaError(f"{path}.seed", f"seed must be an integer, got {seed!r}")
    retries = obj.get("retries", 32)
    if isinstance(retries, bool) or not isinstance(retries, int):
        raise SchemaError(f"{path}.retries", "retries must be an integer")
    return HardenRequest(
        transition,
        base,
        epsilon,
        tuple(types),
        seed=seed,
        working_orders=orders,
        retries=retries,
    )
