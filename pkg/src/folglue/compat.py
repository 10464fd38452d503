"""Compatibility residual of a glued foliation candidate.

A candidate of type (k, nu) is a pair of chart 1-form jets together with
the transition jet identifying the charts.  The candidate defines one
foliation germ exactly when the pullback of the first form along the
transition is proportional to the second, i.e. when the residual 2-form

    E(transition, w1, w2) = pullback(transition, w1) ^ w2

vanishes.  Everything downstream (Jacobians, rank certificates, the
order-by-order solver, the hardening loop) consumes E through this module.

Validity bookkeeping.  The inputs are jets, so E is only determined up to
some degree.  Perturbing the transition in degree n moves E from degree
n - 1 + nu1 + nu2 up (one derivative in the chain rule, a factor
vanishing to order nu1, a wedge factor vanishing to order nu2);
perturbing w1 or w2 in degree n moves E from degree n + nu2 or n + nu1.
Hence coefficients of E up to

    V = min(n_t - 1 + nu1 + nu2,  n_1 + nu2,  n_2 + nu1)

depend only on the given jets, where n_t, n_1, n_2 are the working
orders.  evaluate_E pads its inputs with zeros above their orders purely
to push the jet algebra's min rule out to V; by the bound above those
fictitious zeros cannot touch the reported coefficients.  The truncation
tests exercise exactly this claim: evaluating on truncations of richer
data reproduces the richer residual through V.
"""

from __future__ import annotations

from dataclasses import dataclass

from .forms import HomVectorField, OneFormJet, TwoFormJet, pullback, wedge
from .germs import DiffeoJet
from .rings import Dual, DualRing
from .series import BiSeries, OrderError


@dataclass(frozen=True)
class Residual:
    """2-form coefficient jet of E, certified through valid_order."""

    series: BiSeries
    valid_order: int

    def __post_init__(self):
        if self.series.order != self.valid_order:
            raise OrderError(
                f"residual series at order {self.series.order} labeled "
                f"valid to {self.valid_order}"
            )

    @property
    def ring(self):
        return self.series.ring

    @property
    def f(self) -> TwoFormJet:
        return TwoFormJet(self.series)

    def is_zero(self) -> bool:
        return self.series.is_zero()

    def order_of_vanishing(self) -> int | None:
        return self.series.order_of_vanishing()

    def truncated(self, n: int) -> "Residual":
        return Residual(self.series.jet(n), n)


@dataclass(frozen=True)
class Directional:
    """Residual together with its derivative along a transition direction."""

    value: Residual
    derivative: Residual


def pair_valid_order(n_t: int, n_1: int, nu1: int, n_2: int, nu2: int) -> int:
    """Largest degree of E determined by jets of the given working orders."""
    return min(n_t - 1 + nu1 + nu2, n_1 + nu2, n_2 + nu1)


def evaluate_E(
    transition: DiffeoJet,
    w1: OneFormJet,
    w2: OneFormJet,
    *,
    expect_nu: tuple[int, int] | None = None,
) -> Residual:
    """Compatibility residual, computed as far as the input jets determine it.

    When both forms carry chart tags they must sit in charts 1 and 2
    respectively; untagged jets (directions, scratch data) are accepted
    as-is.
    """
    if w1.chart is not None and w2.chart is not None:
        if (w1.chart, w2.chart) != (1, 2):
            raise ValueError(
                f"residual pairs a chart-1 with a chart-2 form, got charts "
                f"({w1.chart}, {w2.chart})"
            )
        if w1.nu != w2.nu:
            raise ValueError(
                f"declared vanishing orders differ: {w1.nu} vs {w2.nu}"
            )
    nu1 = w1.vanishing_order()
    nu2 = w2.vanishing_order()
    if nu1 is None or nu2 is None:
        raise ValueError("residual of a zero form jet has no certified degree range")
    if expect_nu is not None and (nu1, nu2) != tuple(expect_nu):
        raise ValueError(
            f"forms vanish to orders ({nu1}, {nu2}), expected {tuple(expect_nu)}"
        )
    V = pair_valid_order(transition.order, w1.order, nu1, w2.order, nu2)
    t = transition if transition.order >= V + 1 else DiffeoJet(
        transition.phi.padded(V + 1), transition.psi.padded(V + 1)
    )
    w1p = w1 if w1.order >= V else w1.padded(V)
    w2p = w2 if w2.order >= V else w2.padded(V)
    f = wedge(pullback(t, w1p), w2p).f
    return Residual(f.jet(V), V)


def truncated_E(
    transition: DiffeoJet, w1: OneFormJet, w2: OneFormJet, level: int
) -> Residual:
    """Residual through degree level + 2 nu for forms of matching order nu.

    This is the window the order-by-order solver consumes: once the form
    jets are known through degree `level`, the residual is determined
    exactly through degree level + 2 nu and nothing beyond.  Raises when
    the inputs are too short for that window.
    """
    nu1 = w1.vanishing_order()
    nu2 = w2.vanishing_order()
    if nu1 is None or nu2 is None:
        raise ValueError("residual of a zero form jet has no certified degree range")
    if nu1 != nu2:
        raise ValueError(f"forms vanish to different orders ({nu1}, {nu2})")
    target = level + 2 * nu1
    if transition.order < level + 1 or w1.order < level + nu1 or w2.order < level + nu1:
        raise OrderError(
            f"level-{level} residual needs transition order >= {level + 1} and "
            f"form orders >= {level + nu1}, got "
            f"({transition.order}, {w1.order}, {w2.order})"
        )
    return evaluate_E(transition, w1, w2).truncated(target)


def residual_with_phi_derivative(
    transition: DiffeoJet,
    w1: OneFormJet,
    w2: OneFormJet,
    field: HomVectorField,
) -> Directional:
    """E and its exact directional derivative when the transition moves by
    the homogeneous field (phi + t a, psi + t b).

    Dual numbers make this a single evaluation: the derivative is the
    nilpotent part, certified to the same degree as the value since the
    direction is exactly known.
    """
    if field.degree > transition.order:
        raise OrderError(
            f"degree-{field.degree} direction invisible at working order "
            f"{transition.order}"
        )
    base = transition.ring
    D = DualRing(base)
    zero = base.zero()

    def lift_series(s: BiSeries) -> BiSeries:
        return s.map_coefficients(lambda c: D.lift(c), D)

    phi = lift_series(transition.phi) + BiSeries(
        D, transition.order, {k: Dual(zero, c) for k, c in field.a.items()}
    )
    psi = lift_series(transition.psi) + BiSeries(
        D, transition.order, {k: Dual(zero, c) for k, c in field.b.items()}
    )
    t_dual = DiffeoJet(phi, psi)
    w1_dual = OneFormJet(lift_series(w1.P), lift_series(w1.Q))
    w2_dual = OneFormJet(lift_series(w2.P), lift_series(w2.Q))
    r = evaluate_E(t_dual, w1_dual, w2_dual)
    value = r.series.map_coefficients(lambda d: d.a, base)
    deriv = r.series.map_coefficients(lambda d: d.b, base)
    return Directional(
        Residual(value, r.valid_order), Residual(deriv, r.valid_order)
    )


def dE_phi(
    transition: DiffeoJet,
    w1: OneFormJet,
    w2: OneFormJet,
    direction: HomVectorField,
) -> Residual:
    """Directional derivative of E in the transition slot."""
    return residual_with_phi_derivative(transition, w1, w2, direction).derivative


def dE_omega(
    transition: DiffeoJet,
    w1: OneFormJet,
    w2: OneFormJet,
    which: int,
    direction: OneFormJet,
) -> Residual:
    """Directional derivative of E in a form slot.

    E is linear in each form separately, so the derivative along a form
    direction is E itself with that slot replaced.  A zero direction maps
    to the zero residual, certified as far as a direction of that working
    order and the base form's vanishing order would reach.
    """
    if which not in (1, 2):
        raise ValueError(f"form slot must be 1 or 2, got {which}")
    base = w1 if which == 1 else w2
    other = w2 if which == 1 else w1
    nu_dir = direction.vanishing_order()
    if nu_dir is None:
        nu_base = base.vanishing_order()
        nu_other = other.vanishing_order()
        if nu_base is None or nu_other is None:
            raise ValueError(
                "residual of a zero form jet has no certified degree range"
            )
        if which == 1:
            V = pair_valid_order(
                transition.order, direction.order, nu_base, other.order, nu_other
            )
        else:
            V = pair_valid_order(
                transition.order, other.order, nu_other, direction.order, nu_base
            )
        return Residual(BiSeries.zero(transition.ring, V), V)
    if which == 1:
        return evaluate_E(transition, direction, w2)
    return evaluate_E(transition, w1, direction)
