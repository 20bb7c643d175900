"""Overdispersed-Poisson residual bootstrap, the comparison baseline.

Unlike the conditional engine in predictive.py, this procedure reads the
triangle inside its loop: Pearson residuals are resampled onto the
fitted surface, development factors are re-estimated from each pseudo
triangle, and future cells receive Gamma process error. The structural
contrast is the point: the observed data are treated as one more sample
rather than as fixed conditioning information.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import RngStream
from .patterns import link_ratios
from .predictive import ReserveDistribution, YearPredictive, _summarise
from .triangle import Triangle

_ODP_DOMAIN = 2  # stream tag for the residual bootstrap
_POOL_FLOOR = 1e-9  # fitted means at or below this leave the residual pool
_MEAN_FLOOR = 1e-12
_MAX_REDRAWS = 100


class OdpError(ValueError):
    """The ODP fit or bootstrap cannot proceed on the given input."""


@dataclass(frozen=True)
class OdpFit:
    """Cross-classified ODP fit of an incremental triangle.

    fitted_incrementals and residuals are (I, J) arrays with NaN outside
    the observed region (residuals are also NaN where the fitted mean is
    too small to standardise). The fit reproduces the row and column
    margins of the data, dof = observed cells - (I + J - 1), and
    projected_future holds the chain-ladder means of the unobserved
    cells.
    """

    I: int
    J: int
    fitted_incrementals: np.ndarray
    dispersion: float
    residuals: np.ndarray
    dof: int
    n_cells: int
    link_ratios: np.ndarray
    projected_future: np.ndarray

    def pattern_F(self) -> np.ndarray:
        F = np.ones(self.J)
        for j in range(self.J - 2, -1, -1):
            F[j] = F[j + 1] / self.link_ratios[j]
        return F


def odp_fit(t: Triangle) -> OdpFit:
    """Fit the ODP surface by the chain-ladder margin identity.

    Fitted cumulatives are obtained by dividing each row's latest
    observed cumulative backward through the volume-weighted link
    ratios; differencing gives fitted incrementals whose row and column
    sums match the data. Dispersion is the Pearson chi-square over
    degrees of freedom.
    """
    I, J = t.I, t.J
    n_cells = len(t.cells)
    n_params = I + J - 1
    dof = n_cells - n_params
    if dof < 1:
        raise OdpError(
            f"saturated triangle: {n_cells} cells for {n_params} parameters leaves dof = {dof}"
        )
    f = link_ratios(t)
    X = t.to_matrix()
    fitted = np.full((I, J), np.nan)
    future = np.full((I, J), np.nan)
    for i in range(1, I + 1):
        last = t.last_lag(i)
        cum_fit = np.empty(last + 1)
        cum_fit[last] = t.row(i).sum()
        for j in range(last, 0, -1):
            cum_fit[j - 1] = cum_fit[j] / f[j - 1]
        fitted[i - 1, : last + 1] = np.diff(np.concatenate([[0.0], cum_fit]))
        run = cum_fit[last]
        for j in range(last + 1, J):
            nxt = run * f[j - 1]
            future[i - 1, j] = nxt - run
            run = nxt
    if np.nanmin(fitted) < 0.0:
        raise OdpError("negative fitted incrementals: data are too non-monotone for ODP")
    with np.errstate(invalid="ignore", divide="ignore"):
        residuals = np.where(fitted > _POOL_FLOOR, (X - fitted) / np.sqrt(fitted), np.nan)
    r2 = residuals[np.isfinite(residuals)]
    dispersion = float(np.sum(r2 * r2) / dof)
    return OdpFit(
        I=I,
        J=J,
        fitted_incrementals=fitted,
        dispersion=dispersion,
        residuals=residuals,
        dof=dof,
        n_cells=n_cells,
        link_ratios=f,
        projected_future=future,
    )


def _refit_factors(cum: np.ndarray, row_masks: list[np.ndarray]):
    """Volume-weighted factors per replication from (B, I, J) pseudo
    cumulatives; returns factors (B, J-1) and a validity flag per b."""
    B, _, J = cum.shape
    f = np.empty((B, J - 1))
    valid = np.ones(B, dtype=bool)
    for j in range(J - 1):
        rows = row_masks[j]
        num = cum[:, rows, j + 1].sum(axis=1)
        den = cum[:, rows, j].sum(axis=1)
        ok = (num > 0.0) & (den > 0.0)
        valid &= ok
        with np.errstate(invalid="ignore", divide="ignore"):
            f[:, j] = np.where(ok, num / den, np.nan)
    return f, valid


def odp_bootstrap(fit: OdpFit, B: int, seed: int) -> ReserveDistribution:
    """Residual-resampling bootstrap over the fitted ODP surface.

    Per replication: dof-adjusted Pearson residuals are resampled with
    replacement, pseudo increments m + r sqrt(m) are refitted by chain
    ladder, future means are projected from the pseudo diagonal, and
    each future cell draws Gamma process error with variance dispersion
    times mean. Replications whose refit degenerates (non-positive
    column sums) are redrawn, up to 100 rounds, and counted.
    """
    if int(B) != B or B < 1:
        raise OdpError(f"B must be a positive integer, got {B}")
    I, J = fit.I, fit.J
    last = [min(J - 1, I - i) for i in range(1, I + 1)]
    F = fit.pattern_F()
    points = np.array(
        [np.nansum(fit.projected_future[i - 1]) if last[i - 1] < J - 1 else 0.0
         for i in range(1, I + 1)]
    )
    phi = fit.dispersion

    def finish(years, meta):
        included = [y for y in years if not y.excluded]
        total = np.zeros(B)
        for y in included:
            total += y.draws
        return ReserveDistribution(
            per_year=tuple(years),
            total=total,
            summary=_summarise(total, mean_suppressed=False),
            flags={},
            anchor="ODP",
            meta=meta,
        )

    def year(i, draws):
        return YearPredictive(
            accident=i,
            F=float(F[min(last[i - 1], J - 1)]),
            c_times_F=float("nan"),
            point_reserve=float(points[i - 1]),
            draws=draws,
        )

    if phi <= 0.0:
        years = [year(i, np.full(B, points[i - 1])) for i in range(1, I + 1)]
        return finish(years, {"rejected_replications": 0, "dispersion": phi, "dof": fit.dof})

    obs_mask = np.zeros((I, J), dtype=bool)
    for i in range(1, I + 1):
        obs_mask[i - 1, : last[i - 1] + 1] = True
    m_obs = fit.fitted_incrementals[obs_mask]
    sqrt_m = np.sqrt(m_obs)
    pool = fit.residuals[np.isfinite(fit.residuals)]
    if pool.size == 0:
        raise OdpError("empty residual pool: every fitted mean is degenerate")
    pool = pool * np.sqrt(fit.n_cells / fit.dof)
    row_masks = [np.array([last[i] >= j + 1 for i in range(I)]) for j in range(J - 1)]

    g = RngStream(seed).derive(_ODP_DOMAIN).generator()

    def build(idx: np.ndarray):
        nb = idx.shape[0]
        inc = np.zeros((nb, I, J))
        inc[:, obs_mask] = m_obs + pool[idx] * sqrt_m
        cum = np.cumsum(inc, axis=2)
        factors, valid = _refit_factors(cum, row_masks)
        return cum, factors, valid

    idx = g.integers(0, pool.size, size=(B, m_obs.size))
    cum, factors, valid = build(idx)
    rejected = 0
    rounds = 0
    while not np.all(valid):
        rounds += 1
        if rounds > _MAX_REDRAWS:
            raise OdpError(
                f"{int((~valid).sum())} replications still degenerate after "
                f"{_MAX_REDRAWS} redraw rounds"
            )
        bad = np.nonzero(~valid)[0]
        rejected += bad.size
        re_idx = g.integers(0, pool.size, size=(bad.size, m_obs.size))
        re_cum, re_f, re_valid = build(re_idx)
        cum[bad] = re_cum
        factors[bad] = re_f
        keep = np.zeros_like(valid)
        keep[bad] = re_valid
        valid |= keep

    # Project future means per accident year and attach Gamma process error.
    blocks: list[tuple[int, int]] = []  # (accident, future-cell count)
    means: list[np.ndarray] = []
    for i in range(1, I + 1):
        L = last[i - 1]
        if L >= J - 1:
            continue
        latest = cum[:, i - 1, L]
        walk = np.cumprod(factors[:, L : J - 1], axis=1) * latest[:, None]
        proj = np.diff(np.concatenate([latest[:, None], walk], axis=1), axis=1)
        blocks.append((i, proj.shape[1]))
        means.append(proj)
    all_means = np.concatenate(means, axis=1) if means else np.empty((B, 0))
    np.maximum(all_means, _MEAN_FLOOR, out=all_means)
    process = g.gamma(shape=all_means / phi, scale=phi)

    years = []
    offset = 0
    per_year_draws: dict[int, np.ndarray] = {}
    for i, width in blocks:
        per_year_draws[i] = process[:, offset : offset + width].sum(axis=1)
        offset += width
    for i in range(1, I + 1):
        years.append(year(i, per_year_draws.get(i, np.zeros(B))))
    return finish(
        years,
        {"rejected_replications": rejected, "dispersion": phi, "dof": fit.dof},
    )
