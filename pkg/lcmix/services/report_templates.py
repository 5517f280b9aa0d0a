"""Plain-text report templates for fits, BIC sweeps, comparisons and studies."""

from datetime import datetime
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from lcmix.schemas.document import ResultDocument
from lcmix.schemas.fit import FitResult
from lcmix.schemas.inference import significance_stars
from lcmix.services.inference import direct_effect_tests, gaussian_wald_tests, parameter_table
from lcmix.services.parameter_vector import ParameterLayout

SELECTION_CAVEAT = (
    "BIC values can be compared for LCdist and LCcw, which model the same data (Y and Z). "
    "LCreg conditions on Z and does not model it, so its BIC is not on the same scale "
    "and is not ranked against the other two."
)


def _get_rule(width: int = 72) -> str:
    return "-" * width


def _get_header(title: str, created: Optional[datetime] = None) -> str:
    """Report title with a timestamp line."""
    created = created or datetime.now()
    return "\n".join([title, "=" * len(title), f"generated {created:%Y-%m-%d %H:%M:%S}", ""])


def _get_section(title: str, body: str) -> str:
    return "\n".join([title, _get_rule(len(title)), body, ""])


def _format_number(value: Optional[float], digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and np.isnan(value)):
        return "."
    return f"{value:.{digits}f}"


def _format_estimate(value: float, se: Optional[float]) -> str:
    if se is None:
        return _format_number(value)
    return f"{value:.4f} ({se:.4f})"


def _format_p(p_value: Optional[float]) -> str:
    if p_value is None:
        return "."
    return f"{p_value:.4f}{significance_stars(p_value)}"


def _table(frame: pd.DataFrame) -> str:
    return frame.to_string(index=False)


# ============================================
# FIT REPORT
# ============================================

def _get_summary(document: ResultDocument) -> str:
    rows = [
        ("Model", f"{document.model.variant.value} (S={document.model.s})"),
        ("Observations", str(document.n_obs)),
        ("Log-likelihood", f"{document.loglik:.4f}"),
        ("BIC", f"{document.bic:.2f}"),
        ("#par", str(document.n_params)),
        ("Entropy R2", f"{document.entropy_r2:.4f}"),
        ("Classification error", f"{document.classification_error:.4f}"),
        ("Converged", f"{document.converged} after {document.n_iterations} iterations (start {document.start_index})"),
        ("Seed / starts", f"{document.seed} / {document.n_starts}"),
    ]
    width = max(len(label) for label, _ in rows)
    return "\n".join(f"{label.ljust(width)}  {value}" for label, value in rows)


def _get_class_table(fit: FitResult) -> pd.DataFrame:
    """Proportions, Z means and variances per class, with SEs and equality tests."""
    layout = ParameterLayout(fit.spec)
    se = fit.se
    columns = [f"Class {c + 1}" for c in range(fit.spec.s)]
    table: Dict[str, List[str]] = {"": ["Class size"]}
    for c, column in enumerate(columns):
        table[column] = [_format_number(float(fit.class_proportions[c]))]
    table["Wald(=) p"] = [""]

    if fit.spec.models_z:
        tests = gaussian_wald_tests(fit)
        table[""] += ["Mean of Z", "Variance of Z"]
        for c, column in enumerate(columns):
            mu_se = None if se is None else float(se[layout.mu[c]])
            position = layout.sigma2[c if len(layout.sigma2) > 1 else 0]
            var_se = None if se is None else float(se[position])
            table[column] += [
                _format_estimate(float(fit.params.mu[c]), mu_se),
                _format_estimate(float(fit.params.sigma2[c]), var_se),
            ]
        table["Wald(=) p"] += [
            _format_p(tests["means"].p_value) if "means" in tests else "",
            _format_p(tests["variances"].p_value) if "variances" in tests else "",
        ]
    if not any(table["Wald(=) p"]):
        del table["Wald(=) p"]
    return pd.DataFrame(table)


def _get_direct_effects_table(fit: FitResult, item_names: Sequence[str]) -> Optional[pd.DataFrame]:
    """Per item and category: slope per class with SE, then Wald(0) and Wald(=) p-values."""
    tests = {item: (zero, equal) for item, zero, equal in direct_effect_tests(fit)}
    layout = ParameterLayout(fit.spec)
    rows = []
    for item, slopes in enumerate(layout.slopes):
        if slopes is None:
            continue
        zero, equal = tests.get(item, (None, None))
        categories = fit.spec.cardinalities[item] - 1
        for category in range(categories):
            row = {"Item": item_names[item] if category == 0 else "", "Cat": category + 1}
            for c in range(fit.spec.s):
                position = slopes[c, category] if slopes.ndim == 2 else slopes[category]
                value = float(fit.params.beta[item][c, category + 1])
                row[f"Class {c + 1}"] = _format_estimate(value, None if fit.se is None else float(fit.se[position]))
            row["Wald(0) p"] = _format_p(zero.p_value) if zero is not None and category == 0 else ""
            row["Wald(=) p"] = _format_p(equal.p_value) if equal is not None and category == 0 else ""
            rows.append(row)
    if not rows:
        return None
    frame = pd.DataFrame(rows)
    if fit.spec.s < 2:
        frame = frame.drop(columns=["Wald(=) p"])
    return frame


def _get_parameter_table(fit: FitResult, item_names: Sequence[str]) -> pd.DataFrame:
    rows = [
        {
            "Parameter": row.name,
            "Estimate": _format_number(row.estimate),
            "SE": _format_number(row.se),
            "z": _format_number(row.z, 2),
            "p": _format_p(row.p_value),
        }
        for row in parameter_table(fit, list(item_names))
    ]
    return pd.DataFrame(rows)


def build_fit_report(
    *,
    fit: FitResult,
    document: ResultDocument,
    created: Optional[datetime] = None,
) -> str:
    """
    Text report of one fit.

    Args:
        fit: Fit with inference attached (SE columns show '.' otherwise)
        document: The machine-readable summary written alongside
        created: Timestamp shown in the header

    Returns:
        Report text
    """
    item_names = document.column_names[:-1]
    parts = [
        _get_header(f"{document.model.variant.value} fit with {document.model.s} class(es)", created),
        _get_section("Summary", _get_summary(document)),
        _get_section("Classes", _table(_get_class_table(fit))),
    ]
    effects = _get_direct_effects_table(fit, item_names)
    if effects is not None:
        parts.append(_get_section("Direct effects of Z", _table(effects)))
    parts.append(_get_section("Parameters", _table(_get_parameter_table(fit, item_names))))
    if document.warnings:
        parts.append(_get_section("Warnings", "\n".join(f"- {w}" for w in document.warnings)))
    parts.append("Significance: *** p<0.01, ** p<0.05, * p<0.1")
    return "\n".join(parts) + "\n"


# ============================================
# SELECTION, COMPARISON, STUDY
# ============================================

def build_selection_report(frame: pd.DataFrame, *, variants: Sequence[str], created: Optional[datetime] = None) -> str:
    """
    BIC sweep table; the row-minimum BIC within each model is marked with '*'.

    ``frame`` has columns ``Model, S, LL, BIC, #par, Entropy R2, Class. err.``.
    """
    shown = frame.copy()
    marks = pd.Series("", index=shown.index)
    for _, group in shown.groupby("Model", sort=False):
        marks[group["BIC"].idxmin()] = "*"
    shown["LL"] = shown["LL"].map(lambda v: f"{v:.2f}")
    shown["BIC"] = shown["BIC"].map(lambda v: f"{v:.2f}") + marks
    shown["Entropy R2"] = shown["Entropy R2"].map(lambda v: f"{v:.4f}")
    shown["Class. err."] = shown["Class. err."].map(lambda v: f"{v:.4f}")
    parts = [_get_header("Model selection with BIC", created), _table(shown), "", "* minimum BIC for the model"]
    if "lcreg" in variants and len(set(variants)) > 1:
        parts += ["", SELECTION_CAVEAT]
    return "\n".join(parts) + "\n"


def build_compare_report(
    *,
    names: Sequence[str],
    ari: np.ndarray,
    truth_ari: Optional[Sequence[float]] = None,
    created: Optional[datetime] = None,
) -> str:
    """Pairwise adjusted Rand indexes of modal partitions, optionally against the truth."""
    frame = pd.DataFrame(ari, columns=list(names))
    frame.insert(0, "", list(names))
    body = frame.to_string(index=False, float_format=lambda v: f"{v:.4f}")
    parts = [_get_header("Adjusted Rand indexes (modal assignment)", created), body, ""]
    if truth_ari is not None:
        truth = pd.DataFrame({"Fit": list(names), "ARI vs truth": [f"{v:.4f}" for v in truth_ari]})
        parts += [_get_section("Against the true partition", _table(truth))]
    return "\n".join(parts) + "\n"


def build_wald_report(*, fit: FitResult, item_names: Sequence[str], created: Optional[datetime] = None) -> str:
    """Equal-means/variances and direct-effect Wald tests of a stored fit."""
    parts = [_get_header(f"Wald tests for {fit.spec.variant.value} (S={fit.spec.s})", created)]
    tests = gaussian_wald_tests(fit)
    if tests:
        frame = pd.DataFrame(
            [
                {"Hypothesis": w.constraint_description, "W": f"{w.statistic:.4f}", "df": w.df, "p": _format_p(w.p_value)}
                for w in tests.values()
            ]
        )
        parts.append(_get_section("Distribution of Z", _table(frame)))
    effects = _get_direct_effects_table(fit, item_names)
    if effects is not None:
        parts.append(_get_section("Direct effects of Z", _table(effects)))
    if len(parts) == 1:
        parts.append("No Wald tests apply to this model.")
    return "\n".join(parts) + "\n"


def build_study_report(
    *,
    generator: str,
    seed: int,
    n: int,
    magnitude: float,
    fits: pd.DataFrame,
    classes: str,
    ari: pd.DataFrame,
    selection: str,
    created: Optional[datetime] = None,
) -> str:
    """One population study: the S=2 fits, their class tables, ARIs and the BIC sweep."""
    parts = [
        _get_header(f"Population study: {generator} data", created),
        f"n={n}  seed={seed}  intercept magnitude b={magnitude:.4f}",
        "",
        _get_section("Fits with S=2", _table(fits)),
        _get_section("Class distributions of Z", classes),
        _get_section("Adjusted Rand indexes against the true partition", _table(ari)),
        selection,
    ]
    return "\n".join(parts)


def format_class_table(fit: FitResult) -> str:
    """Class sizes and Z distribution of one fit, titled by model."""
    return _get_section(f"{fit.spec.label} (S={fit.spec.s})", _table(_get_class_table(fit)))
