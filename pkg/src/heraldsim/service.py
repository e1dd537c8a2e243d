"""HTTP service: submit a device description, get a verdict report back.

Stateless JSON-in/JSON-out wrapper around the analysis; the request and
response bodies reuse the device-file and report schemas, so a file on disk
can be posted as-is.
"""

from __future__ import annotations

from fastapi import Body, FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, ValidationError

from . import __version__
from .analysis import analyze_device
from .catalog import BUILTIN_BUILDERS, build_builtin
from .devicefile import (
    DeviceFile,
    ReportFile,
    device_to_file,
    file_to_device,
    report_from_analysis,
)
from .errors import DeviceValidationError


class AnalyzeOptions(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tol: float = 1e-9
    t_eff: float = 1.0
    photon_cap: int = 8


class AnalyzeRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    device: DeviceFile
    options: AnalyzeOptions = AnalyzeOptions()


class ValidationOutcome(BaseModel):
    model_config = ConfigDict(extra="forbid")

    valid: bool
    kind: str | None = None  # "parse" | "validation"
    detail: str | None = None


app = FastAPI(
    title="heraldsim",
    description="Operational-unitarity analysis of conditional linear-optical devices",
    version=__version__,
)


def _run_analysis(device: DeviceFile, options: AnalyzeOptions) -> ReportFile:
    try:
        dev = file_to_device(device)
    except DeviceValidationError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    analysis = analyze_device(
        dev, tol=options.tol, t_eff=options.t_eff, photon_cap=options.photon_cap
    )
    return report_from_analysis(analysis)


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/devices")
def list_devices() -> dict:
    return {"devices": sorted(BUILTIN_BUILDERS)}


@app.get("/devices/{name}", response_model=DeviceFile)
def get_device(name: str) -> DeviceFile:
    try:
        dev = build_builtin(name)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    return device_to_file(dev)


@app.post("/devices/{name}/analyze", response_model=ReportFile)
def analyze_builtin(name: str, options: AnalyzeOptions = AnalyzeOptions()) -> ReportFile:
    try:
        dev = build_builtin(name)
    except KeyError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc
    return _run_analysis(device_to_file(dev), options)


@app.post("/analyze", response_model=ReportFile)
def analyze(request: AnalyzeRequest) -> ReportFile:
    return _run_analysis(request.device, request.options)


@app.post("/validate", response_model=ValidationOutcome)
def validate(payload: dict = Body(...)) -> ValidationOutcome:
    """Check a device description without analyzing it.

    Distinguishes schema problems (kind "parse") from physical
    inconsistencies (kind "validation").
    """
    try:
        spec = DeviceFile.model_validate(payload)
    except ValidationError as exc:
        return ValidationOutcome(valid=False, kind="parse", detail=str(exc))
    try:
        file_to_device(spec)
    except DeviceValidationError as exc:
        return ValidationOutcome(valid=False, kind="validation", detail=str(exc))
    return ValidationOutcome(valid=True)
