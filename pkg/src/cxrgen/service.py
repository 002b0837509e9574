"""HTTP inference service (JSON API over a loaded, immutable bundle).

Endpoints:
    GET  /api/health      liveness probe
    GET  /api/models      per-model metadata
    POST /api/predict     multipart field `image`, or JSON {"image_b64", "format"}
    POST /api/preprocess  same input; returns base64 PGM renderings of
                          the full image and the three segments

Domain errors map to 400 with a machine-readable code; uploads over the
size cap get 413.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .bundle import ModelBundle
from .errors import CxrError, MalformedImage
from .imaging import encode_pgm, preprocess, sniff_format
from .pipeline import predict_pipeline

DEFAULT_MAX_UPLOAD = 10 * 1024 * 1024


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


async def _extract_image(request: Request, max_bytes: int) -> tuple[bytes, str]:
    """Pull image bytes + format from multipart or JSON bodies."""
    content_type = request.headers.get("content-type", "")
    body = await request.body()
    if len(body) > max_bytes:
        raise _PayloadTooLarge(len(body))
    if content_type.startswith("multipart/form-data"):
        form = await request.form()
        upload = form.get("image")
        if upload is None:
            raise MalformedImage("multipart request is missing the 'image' field")
        data = await upload.read()
        if len(data) > max_bytes:
            raise _PayloadTooLarge(len(data))
        return data, sniff_format(data)
    if content_type.startswith("application/json"):
        payload = await request.json()
        if not isinstance(payload, dict) or "image_b64" not in payload:
            raise MalformedImage("JSON body needs an 'image_b64' field")
        try:
            data = base64.b64decode(payload["image_b64"], validate=True)
        except (binascii.Error, ValueError) as exc:
            raise MalformedImage(f"invalid base64 image data: {exc}") from exc
        fmt = payload.get("format")
        if fmt is None:
            fmt = sniff_format(data)
        elif fmt not in ("png", "pgm"):
            raise MalformedImage(f"format must be 'png' or 'pgm', got {fmt!r}")
        return data, fmt
    raise MalformedImage(f"unsupported content type {content_type!r}")


class _PayloadTooLarge(Exception):
    def __init__(self, size: int):
        self.size = size


def create_app(
    bundle: ModelBundle,
    max_upload_bytes: int = DEFAULT_MAX_UPLOAD,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="cxrgen", docs_url=None, redoc_url=None)

    @app.exception_handler(CxrError)
    async def _domain_error(_request, exc: CxrError):
        return _error_response(400, exc.code, str(exc))

    @app.exception_handler(_PayloadTooLarge)
    async def _too_large(_request, exc: _PayloadTooLarge):
        return _error_response(
            413, "PayloadTooLarge", f"upload of {exc.size} bytes exceeds cap {max_upload_bytes}"
        )

    @app.get("/api/health")
    async def health():
        return {"status": "ok"}

    @app.get("/api/models")
    async def models():
        return [
            {
                "abnormality": m.abnormality.tag,
                "segment": m.abnormality.segment.tag,
                "threshold": m.threshold,
                "train_accuracy": m.train_accuracy,
                "test_accuracy": m.test_accuracy,
            }
            for m in bundle.in_order()
        ]

    @app.post("/api/predict")
    async def predict(request: Request):
        data, fmt = await _extract_image(request, max_upload_bytes)
        return predict_pipeline(bundle, data, fmt).to_dict()

    @app.post("/api/preprocess")
    async def preprocess_endpoint(request: Request):
        data, fmt = await _extract_image(request, max_upload_bytes)
        pre = preprocess(data, fmt)
        encode = lambda img: base64.b64encode(encode_pgm(img)).decode("ascii")
        return {
            "full": encode(pre.full),
            "seg1": encode(pre.seg1),
            "seg2": encode(pre.seg2),
            "seg3": encode(pre.seg3),
        }

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
