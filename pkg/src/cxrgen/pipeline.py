"""End-to-end inference: bytes in, result code + report out."""

from __future__ import annotations

from dataclasses import dataclass

from .bundle import ModelBundle
from .classifier import ABNORMALITY_TAGS, predict
from .imaging import preprocess
from .reportgen import aggregate, generate_report


@dataclass(frozen=True)
class Finding:
    abnormality: str
    label: int
    probability: float
    segment: str


@dataclass(frozen=True)
class PredictionResponse:
    result_code: str
    findings: tuple[Finding, ...]
    report_text: str

    def to_dict(self) -> dict:
        return {
            "result_code": self.result_code,
            "findings": [
                {
                    "abnormality": f.abnormality,
                    "label": f.label,
                    "probability": f.probability,
                    "segment": f.segment,
                }
                for f in self.findings
            ],
            "report_text": self.report_text,
        }


def predict_pipeline(bundle: ModelBundle, image_bytes: bytes, fmt: str | None = None) -> PredictionResponse:
    """preprocess -> route each model to its segment -> predict x3 ->
    aggregate -> render report. Deterministic for identical inputs."""
    pre = preprocess(image_bytes, fmt)
    segments = {"I": pre.seg1, "II": pre.seg2, "III": pre.seg3}
    findings = []
    labels = []
    for tag in ABNORMALITY_TAGS:
        model = bundle.models[tag]
        seg = model.abnormality.segment
        prob, label, _ = predict(model, segments[seg.tag].pixels)
        findings.append(Finding(tag, label, prob, seg.tag))
        labels.append(label)
    code = aggregate(labels)
    report = generate_report(code, bundle.master_text)
    return PredictionResponse(
        result_code=str(code),
        findings=tuple(findings),
        report_text=report.render(),
    )
