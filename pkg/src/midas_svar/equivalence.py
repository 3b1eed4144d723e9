"""Likelihood-ratio tests of equivalence between the mixed-frequency VAR and an aggregated VAR."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import IdentificationFailure
from .layout import (
    AggregationScheme,
    FrequencyLayout,
    reduced_equivalence_restrictions,
    selection_matrix,
    structural_equivalence_restrictions,
)
from .reduced_form import (
    ReducedFormFit,
    StackedDataset,
    _gaussian_loglik,
    estimate_ols,
    estimate_restricted,
)
from .structural import AbRestrictions, LrTestResult, check_identification, estimate_ml, lr_test

logger = logging.getLogger(__name__)


def _layout_of(data: StackedDataset, layout: FrequencyLayout | None) -> FrequencyLayout:
    layout = layout or data.layout
    if layout is None:
        raise ValueError("a frequency layout is required")
    return layout


def reduced_test_parts(data, p, scheme, layout=None, intercept=True):
    """Unrestricted and restricted reduced-form fits and the constraint set."""
    layout = _layout_of(data, layout)
    restr = reduced_equivalence_restrictions(layout, scheme, data.coef_layout(p, intercept))
    fit_u = estimate_ols(data, p, intercept)
    fit_r = estimate_restricted(data, p, restr, intercept)
    return fit_u, fit_r, restr


def test_reduced_equivalence(
    data: StackedDataset,
    p: int,
    scheme: AggregationScheme,
    layout: FrequencyLayout | None = None,
    intercept: bool = True,
) -> LrTestResult:
    """LR test that the mean dynamics of the aggregated variables ignore the discarded slots."""
    fit_u, fit_r, restr = reduced_test_parts(data, p, scheme, layout, intercept)
    dof = restr.rank
    if fit_u.n_free - fit_r.n_free != dof:
        raise RuntimeError("free-parameter count and constraint rank disagree")
    return lr_test(fit_r.loglik, fit_u.loglik, dof, label=f"reduced:{scheme}")


test_reduced_equivalence.__test__ = False


@dataclass(frozen=True)
class StructuralTestParts:
    unrestricted: object
    restricted: object
    restrictions: AbRestrictions
    dof: int
    raw_count: int


def structural_test_parts(fit: ReducedFormFit, layout, scheme, ab_scheme: AbRestrictions) -> StructuralTestParts:
    RA, RB = structural_equivalence_restrictions(layout, scheme)
    restricted = ab_scheme.with_extra(RA, RB, name=f"{ab_scheme.name}+equivalence:{scheme}")
    for r in (ab_scheme, restricted):
        rep = check_identification(r, fit.sigma_u)
        if not rep.identified:
            raise IdentificationFailure(
                f"scheme {r.name!r} is not identified (rank {rep.jacobian_rank} < {rep.required_rank})"
            )
    dof = ab_scheme.added_rank(restricted)
    ab_u = estimate_ml(fit, ab_scheme)
    ab_r = estimate_ml(fit, restricted, start=(ab_u.A, ab_u.B))
    return StructuralTestParts(ab_u, ab_r, restricted, dof, RA.n_rows + RB.n_rows)


def test_structural_equivalence(
    data: StackedDataset,
    p: int,
    scheme: AggregationScheme,
    ab_scheme: AbRestrictions,
    layout: FrequencyLayout | None = None,
    intercept: bool = True,
) -> LrTestResult:
    """LR test of the structural equivalence restrictions added on top of ``ab_scheme``.

    ``dof`` counts only constraints that bind beyond ``ab_scheme``.
    """
    layout = _layout_of(data, layout)
    fit = estimate_ols(data, p, intercept)
    parts = structural_test_parts(fit, layout, scheme, ab_scheme)
    if parts.dof == 0:
        raise ValueError("structural equivalence restrictions are all implied by the scheme")
    return lr_test(parts.restricted.loglik, parts.unrestricted.loglik, parts.dof, label=f"structural:{scheme}")


test_structural_equivalence.__test__ = False


@dataclass
class EquivalenceReport:
    scheme: AggregationScheme
    reduced_lr: LrTestResult
    structural_lr: LrTestResult | None
    restriction_counts: tuple
    logliks: dict
    structural_skipped: bool = False

    def rows(self) -> list[dict]:
        out = []
        for name, res in (("reduced", self.reduced_lr), ("structural", self.structural_lr)):
            if res is None:
                continue
            out.append({
                "test": name, "scheme": str(self.scheme), "statistic": res.statistic, "dof": res.dof,
                "pvalue": res.pvalue, "l_unrestricted": res.l_unrestricted, "l_restricted": res.l_restricted,
            })
        return out


def run_equivalence(
    data: StackedDataset,
    p: int,
    scheme: AggregationScheme,
    ab_scheme: AbRestrictions | None = None,
    layout: FrequencyLayout | None = None,
    intercept: bool = True,
    level: float = 0.05,
    skip_structural_on_reject: bool = False,
) -> EquivalenceReport:
    """Reduced-form test, then (unless skipped) the structural test."""
    layout = _layout_of(data, layout)
    fit_u, fit_r, restr = reduced_test_parts(data, p, scheme, layout, intercept)
    red = lr_test(fit_r.loglik, fit_u.loglik, restr.rank, label=f"reduced:{scheme}")
    logliks = {"reduced": (fit_u.loglik, fit_r.loglik)}
    struct, sdof, skipped = None, None, False
    if ab_scheme is not None:
        if skip_structural_on_reject and red.pvalue < level:
            skipped = True
            logger.info("reduced-form equivalence rejected at %.3g; structural test skipped", level)
        else:
            parts = structural_test_parts(fit_u, layout, scheme, ab_scheme)
            sdof = parts.dof
            if sdof > 0:
                struct = lr_test(parts.restricted.loglik, parts.unrestricted.loglik, sdof,
                                 label=f"structural:{scheme}")
                logliks["structural"] = (parts.unrestricted.loglik, parts.restricted.loglik)
    return EquivalenceReport(scheme, red, struct, (restr.rank, sdof), logliks, skipped)


def aggregated_loglik(fit: ReducedFormFit, layout: FrequencyLayout, scheme: AggregationScheme) -> float:
    """Gaussian log-likelihood of the aggregated rows ``G u(t)`` of a fitted model's residuals."""
    G = selection_matrix(layout, scheme)
    E = fit.residuals @ G.T
    S = E.T @ E / E.shape[0]
    return _gaussian_loglik(0.5 * (S + S.T), E.shape[0])[0]


def fit_aggregated_var(data: StackedDataset, p: int, scheme: AggregationScheme,
                       layout: FrequencyLayout | None = None, intercept: bool = True) -> ReducedFormFit:
    """OLS VAR on the aggregated series ``G x(t)``."""
    layout = _layout_of(data, layout)
    G = selection_matrix(layout, scheme)
    agg = StackedDataset(data.Y @ G.T, data.Z, labels=layout.aggregated_labels())
    return estimate_ols(agg, p, intercept)
