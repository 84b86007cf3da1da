"""Twenty-sample, five-fold walkthrough of StackMC on ``poly1d``.

The samples are stored fold by fold (four test points per fold) with the
reference numbers they are expected to reproduce.  ``run()`` feeds them
through :func:`stackmc_estimate` with that fold assignment injected and
returns one comparison per reference number.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import DistributionSpec, Uniform
from .estimators import Dataset, FoldPartition, StackReport, stackmc_estimate
from .fitters import polynomial, predict, FitModel

# (x, f(x), held-out prediction of that fold's fit)
SAMPLES = (
    ((0.4087, 0.2438, -0.3549), (-0.6950, 7.8350, 7.0498),
     (-0.0943, 0.9259, 3.1237), (0.1152, -0.0166, 2.1675)),
    ((0.4117, 0.2420, -0.2284), (0.2745, 0.1108, 1.0774),
     (0.1823, -0.0163, 1.6825), (0.2882, 0.1342, 0.9708)),
    ((-0.6318, 7.6689, 7.4398), (-0.3923, 4.7811, 2.4864),
     (-0.8345, 6.4358, 15.6002), (0.7716, -5.2874, -7.0489)),
    ((0.5711, -0.5683, -2.3831), (-0.5988, 7.4412, 6.0312),
     (0.9607, -16.6302, -6.1154), (-0.6411, 7.7172, 6.3677)),
    ((0.7124, -3.2834, -6.0740), (0.1206, -0.0208, 1.8609),
     (-0.3960, 4.8377, 4.0722), (0.2816, 0.1230, 0.7901)),
)

FOLD_BETAS = (
    (2.7385, -4.3737, -3.9500, -9.4712),
    (2.4683, -3.3829, -3.0183, -11.3595),
    (0.7900, 0.3755, 3.3397, -22.0257),
    (1.8054, -6.7386, -0.2738, -1.3468),
    (2.3965, -3.8653, -3.4306, -10.9995),
)
FOLD_G_HATS = (1.4281, 1.4622, 1.9032, 1.7141, 1.2529)
FOLD_CORRECTED = (0.8795, 0.6271, 1.0407, 0.1318, 1.3613)
FOLD1_CORRECTION = -0.3553
ALPHA_BLOCK = {
    "mu_f": 1.1337, "mu_g": 1.9258, "sigma_f": 5.6835, "sigma_g": 5.2678,
    "cov_fg": 24.0999, "rho": 0.8049, "alpha": 0.8685,
}
F_HAT_MC = 1.1337
F_HAT_FIT = 1.3412
F_HAT_SMC = 0.8081
TRUTH = 0.7069

DIST = DistributionSpec((Uniform(-1.0, 1.0),))
SPEC = polynomial(1, 3)


def dataset() -> Dataset:
    rows = np.array([s for fold in SAMPLES for s in fold])
    return Dataset(rows[:, :1], rows[:, 1])


def partition() -> FoldPartition:
    return FoldPartition(5, tuple(np.arange(4 * i, 4 * i + 4) for i in range(5)))


@dataclass(frozen=True)
class Check:
    name: str
    got: float
    expected: float
    tol: float

    @property
    def ok(self) -> bool:
        return abs(self.got - self.expected) <= self.tol


def report() -> StackReport:
    return stackmc_estimate(dataset(), DIST, SPEC, k=5, partition=partition())


def run() -> list[Check]:
    rep = report()
    checks = []
    for i, fold in enumerate(rep.per_fold):
        for j, b in enumerate(fold.beta):
            checks.append(Check(f"fold{i + 1}.beta{j}", float(b), FOLD_BETAS[i][j], 1e-2))
        model = FitModel(SPEC, fold.beta)
        for x, _, g in SAMPLES[i]:
            checks.append(Check(f"fold{i + 1}.g({x:+.4f})", predict(model, [x]), g, 5e-3))
        checks.append(Check(f"fold{i + 1}.g_hat", fold.g_hat, FOLD_G_HATS[i], 1e-2))
        checks.append(Check(f"fold{i + 1}.corrected", fold.corrected, FOLD_CORRECTED[i], 1e-2))
    checks.append(Check("fold1.correction", rep.per_fold[0].correction, FOLD1_CORRECTION, 1e-2))
    s = rep.alpha_stats
    for key, expected in ALPHA_BLOCK.items():
        checks.append(Check(key, getattr(s, key), expected, 2e-3))
    checks.append(Check("f_hat_mc", rep.f_hat_mc, F_HAT_MC, 1e-3))
    checks.append(Check("f_hat_fit", rep.f_hat_fit, F_HAT_FIT, 1e-2))
    checks.append(Check("f_hat_smc", rep.f_hat_smc, F_HAT_SMC, 1e-2))
    return checks


def format_checks(checks) -> str:
    lines = [f"{'quantity':<22}{'computed':>12}{'reference':>12}{'diff':>11}{'tol':>8}  status"]
    for c in checks:
        lines.append(
            f"{c.name:<22}{c.got:>12.4f}{c.expected:>12.4f}{c.got - c.expected:>11.2e}"
            f"{c.tol:>8.0e}  {'ok' if c.ok else 'FAIL'}"
        )
    return "\n".join(lines)
