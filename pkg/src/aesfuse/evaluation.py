"""Quadratic weighted kappa, Spearman correlation, paired t-tests, and
per-prompt report assembly with significance marks against the
semantic-only baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

PROMPTS_LONG = (1, 2, 8)  # the long-essay prompt group reported separately
SIGNIFICANCE_LEVEL = 0.05


class UndefinedMetric(ValueError):
    """Raised when a metric has no defined value for the given inputs."""


def qwk(gold, pred, score_min: int, score_max: int) -> float:
    """Quadratic weighted kappa over integer ratings in [score_min, score_max].

    With N categories and weights w_ij = (i-j)^2/(N-1)^2: kappa = 1 -
    sum(w*O)/sum(w*E), O the observed contingency counts and E the
    outer product of the marginal histograms scaled to n.
    """
    g = np.asarray(gold, dtype=np.int64)
    p = np.asarray(pred, dtype=np.int64)
    if g.shape != p.shape or g.ndim != 1 or g.size == 0:
        raise ValueError("gold and pred must be equal-length non-empty 1-d sequences")
    if score_max <= score_min:
        raise ValueError("score_max must exceed score_min")
    for name, v in (("gold", g), ("pred", p)):
        if v.min() < score_min or v.max() > score_max:
            raise ValueError(f"{name} ratings outside [{score_min}, {score_max}]")
    ncat = score_max - score_min + 1
    gi = g - score_min
    pi = p - score_min
    observed = np.zeros((ncat, ncat), dtype=np.float64)
    np.add.at(observed, (gi, pi), 1.0)
    hist_g = np.bincount(gi, minlength=ncat).astype(np.float64)
    hist_p = np.bincount(pi, minlength=ncat).astype(np.float64)
    expected = np.outer(hist_g, hist_p) / g.size
    idx = np.arange(ncat, dtype=np.float64)
    weights = (idx[:, None] - idx[None, :]) ** 2 / (ncat - 1) ** 2
    denom = float(np.sum(weights * expected))
    if denom == 0.0:
        raise UndefinedMetric("both raters constant at the same value: kappa undefined")
    return 1.0 - float(np.sum(weights * observed)) / denom


def average_ranks(values) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average ranks; needs n >= 3 and rank variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length 1-d sequences")
    if x.size < 3:
        raise ValueError("spearman needs at least 3 points")
    rx = average_ranks(x)
    ry = average_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetric("zero rank variance: correlation undefined")
    return float(np.sum(dx * dy) / (sx * sy))


# ---------------------------------------------------------------------------
# Student-t two-sided p via the regularized incomplete beta function
# (continued fraction, modified Lentz), so no external stats dependency.

def _betacf(a: float, b: float, x: float) -> float:
    max_iter, eps, fpmin = 300, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    return h


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, dof: int) -> float:
    if math.isinf(t):
        return 0.0
    return regularized_incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t))


@dataclass
class TTestResult:
    t: float
    p: float
    note: str = ""  # "", "all-zero differences", or "exact dominance"


def paired_ttest(a, b) -> TTestResult:
    """Two-sided paired t-test; t = mean(d) / (sample_std(d)/sqrt(n))."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("paired t-test needs two equal-length samples, n >= 2")
    d = a - b
    if np.all(d == 0.0):
        return TTestResult(t=0.0, p=1.0, note="all-zero differences")
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        t = math.inf if d[0] > 0 else -math.inf
        return TTestResult(t=t, p=0.0, note="exact dominance")
    t = float(d.mean() / (sd / math.sqrt(d.size)))
    return TTestResult(t=t, p=student_t_two_sided_p(t, d.size - 1))


# ---------------------------------------------------------------------------
# Report assembly


@dataclass
class RunResult:
    model: str
    prompt_id: int
    fold_id: int
    qwk: float


@dataclass
class EvalReport:
    models: list[str]
    prompts: list[int]
    per_prompt: dict[str, dict[int, float | None]]  # model -> prompt -> mean QWK
    avg_qwk: dict[str, float | None]
    avg_long: dict[str, float | None]  # prompts 1, 2, 8
    baseline: str | None
    p_vs_baseline: dict[str, float | None] = field(default_factory=dict)
    feature_correlations: dict[str, float] = field(default_factory=dict)
    missing: list[tuple[str, int, int]] = field(default_factory=list)


def assemble_report(
    runs: list[RunResult],
    baseline: str | None = "semantic",
    feature_correlations: dict[str, float] | None = None,
) -> EvalReport:
    """Aggregate per-(model, prompt, fold) QWKs into the per-prompt table.

    Per-prompt cells are fold means; the overall average and the
    1-2-8 average are means of per-prompt cells. Missing cells stay as
    explicit gaps. Significance is a paired t-test against the baseline
    model over all matched (prompt, fold) cells.
    """
    cells: dict[str, dict[tuple[int, int], float]] = {}
    for run in runs:
        cells.setdefault(run.model, {})[(run.prompt_id, run.fold_id)] = run.qwk
    models = sorted(cells)
    prompts = sorted({pf[0] for m in cells.values() for pf in m})
    folds = sorted({pf[1] for m in cells.values() for pf in m})

    per_prompt: dict[str, dict[int, float | None]] = {}
    missing: list[tuple[str, int, int]] = []
    for model in models:
        per_prompt[model] = {}
        for prompt in prompts:
            vals = [cells[model][(prompt, f)] for f in folds if (prompt, f) in cells[model]]
            for f in folds:
                if (prompt, f) not in cells[model]:
                    missing.append((model, prompt, f))
            per_prompt[model][prompt] = float(np.mean(vals)) if vals else None

    def _mean_over(model: str, prompt_ids) -> float | None:
        vals = [per_prompt[model][p] for p in prompt_ids if per_prompt[model].get(p) is not None]
        return float(np.mean(vals)) if vals else None

    avg_qwk = {m: _mean_over(m, prompts) for m in models}
    long_present = [p for p in PROMPTS_LONG if p in prompts]
    avg_long = {m: _mean_over(m, long_present) for m in models}

    p_vs_baseline: dict[str, float | None] = {}
    if baseline in cells:
        base = cells[baseline]
        for model in models:
            if model == baseline:
                p_vs_baseline[model] = None
                continue
            shared = sorted(set(cells[model]) & set(base))
            if len(shared) < 2:
                p_vs_baseline[model] = None
                continue
            a = [cells[model][k] for k in shared]
            b = [base[k] for k in shared]
            p_vs_baseline[model] = paired_ttest(a, b).p
    return EvalReport(
        models=models,
        prompts=prompts,
        per_prompt=per_prompt,
        avg_qwk=avg_qwk,
        avg_long=avg_long,
        baseline=baseline if baseline in cells else None,
        p_vs_baseline=p_vs_baseline,
        feature_correlations=dict(feature_correlations or {}),
        missing=missing,
    )


def _fmt(v: float | None) -> str:
    return f"{v:.3f}" if v is not None else "-"


def format_report_table(report: EvalReport) -> str:
    """Plain-text table; '*' marks p < 0.05 against the baseline model."""
    head = ["Model"] + [f"P{p}" for p in report.prompts] + ["1-2-8 Avg", "Avg QWK"]
    lines = ["\t".join(head)]
    for model in report.models:
        mark = ""
        p = report.p_vs_baseline.get(model)
        if p is not None and p < SIGNIFICANCE_LEVEL:
            mark = "*"
        row = [model + mark]
        row += [_fmt(report.per_prompt[model].get(p)) for p in report.prompts]
        row.append(_fmt(report.avg_long.get(model)))
        row.append(_fmt(report.avg_qwk.get(model)))
        lines.append("\t".join(row))
    if report.feature_correlations:
        lines.append("")
        lines.append("feature\tspearman_rho")
        for name, rho in report.feature_correlations.items():
            lines.append(f"{name}\t{rho:.4f}")
    if report.missing:
        lines.append("")
        lines.append("# missing cells (model, prompt, fold): " +
                     ", ".join(f"({m},{p},{f})" for m, p, f in report.missing))
    return "\n".join(lines) + "\n"


def write_report_tsv(path, report: EvalReport) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("model\tprompt\tmean_qwk\n")
        for model in report.models:
            for prompt in report.prompts:
                v = report.per_prompt[model].get(prompt)
                f.write(f"{model}\t{prompt}\t{'' if v is None else f'{v:.17g}'}\n")
            f.write(f"{model}\tavg_128\t{'' if report.avg_long[model] is None else f'{report.avg_long[model]:.17g}'}\n")
            f.write(f"{model}\tavg\t{'' if report.avg_qwk[model] is None else f'{report.avg_qwk[model]:.17g}'}\n")
        for model, p in report.p_vs_baseline.items():
            if p is not None:
                f.write(f"{model}\tp_vs_{report.baseline}\t{p:.17g}\n")
        for name, rho in report.feature_correlations.items():
            f.write(f"feature:{name}\tspearman\t{rho:.17g}\n")
