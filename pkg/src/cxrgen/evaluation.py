"""System evaluation: per-model accuracy, strict all-correct accuracy, and
closed-form error propagation under the independence assumption.

The union error probability is computed with the full seven-term
inclusion-exclusion expansion rather than 1 - joint, so the complement
identity remains an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyDataset, LengthMismatch, OutOfRange


@dataclass(frozen=True)
class ErrorAnalysis:
    p_correct: tuple[float, float, float]
    p_error: tuple[float, float, float]
    p_joint_correct: float
    p_union_error: float


def _as_bits(triples) -> np.ndarray:
    arr = np.asarray(triples, dtype=np.int64)
    if arr.size == 0:
        raise EmptyDataset("no samples to evaluate")
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise LengthMismatch(f"expected Nx3 label triples, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise OutOfRange("labels must be 0 or 1")
    return arr


def _paired(preds, truths) -> tuple[np.ndarray, np.ndarray]:
    p = _as_bits(preds)
    t = _as_bits(truths)
    if len(p) != len(t):
        raise LengthMismatch(f"{len(p)} predictions vs {len(t)} truths")
    if len(p) == 0:
        raise EmptyDataset("no samples to evaluate")
    return p, t


def strict_system_accuracy(preds, truths) -> float:
    """Fraction of samples where all three bits match simultaneously."""
    p, t = _paired(preds, truths)
    return float((p == t).all(axis=1).mean())


def per_model_accuracy(preds, truths) -> tuple[float, float, float]:
    """Accuracy computed independently per bit position."""
    p, t = _paired(preds, truths)
    return tuple((p == t).mean(axis=0).tolist())


def error_analysis(p_correct) -> ErrorAnalysis:
    """Independent-error propagation from the three per-model accuracies."""
    pc = tuple(float(v) for v in p_correct)
    if len(pc) != 3:
        raise OutOfRange("expected exactly three accuracies")
    if any(not (0.0 <= v <= 1.0) for v in pc):
        raise OutOfRange(f"accuracies must lie in [0,1], got {pc}")
    a, b, c = pc
    ea, eb, ec = 1.0 - a, 1.0 - b, 1.0 - c
    joint = a * b * c
    union = ea + eb + ec - ea * eb - ea * ec - eb * ec + ea * eb * ec
    return ErrorAnalysis(
        p_correct=pc,
        p_error=(ea, eb, ec),
        p_joint_correct=joint,
        p_union_error=union,
    )


def simulate_error_analysis(p_correct, n_trials: int, seed: int = 0) -> ErrorAnalysis:
    """Monte-Carlo check: three independent Bernoulli outcomes per trial."""
    if n_trials < 1:
        raise OutOfRange("n_trials must be >= 1")
    pc = np.asarray(p_correct, dtype=np.float64)
    if pc.shape != (3,) or ((pc < 0) | (pc > 1)).any():
        raise OutOfRange("p_correct must be three values in [0,1]")
    rng = np.random.default_rng(seed)
    correct = rng.random((n_trials, 3)) < pc
    joint = float(correct.all(axis=1).mean())
    union_error = float((~correct).any(axis=1).mean())
    emp_correct = tuple(correct.mean(axis=0).tolist())
    return ErrorAnalysis(
        p_correct=emp_correct,
        p_error=tuple(1.0 - v for v in emp_correct),
        p_joint_correct=joint,
        p_union_error=union_error,
    )


def format_analysis(analysis: ErrorAnalysis, names=("cardiomegaly", "effusion", "consolidation")) -> str:
    """Aligned fixed 4-decimal text rendering."""
    width = max(len(n) for n in names)
    lines = []
    for name, pc, pe in zip(names, analysis.p_correct, analysis.p_error):
        lines.append(f"{name:<{width}}  P(correct) = {pc:.4f}  P(error) = {pe:.4f}")
    lines.append(f"{'joint correct':<{width}}  P = {analysis.p_joint_correct:.4f}")
    lines.append(f"{'union error':<{width}}  P = {analysis.p_union_error:.4f}")
    return "\n".join(lines)
