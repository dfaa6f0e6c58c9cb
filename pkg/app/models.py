from pydantic import BaseModel, Field, confloat, conint, field_validator
from typing import List, Optional, Union, Dict, Any, Literal

import numpy as np

# --- Generic Models ---

class ErrorResponse(BaseModel):
    detail: Union[str, List[Dict[str, Any]]]


# --- Polynomial / Table Models ---
class Monomial(BaseModel):
    p_pow: conint(ge=0)
    q_pow: conint(ge=0)
    coeff: float

class CoefficientRow(BaseModel):
    k: conint(ge=0)
    terms: List[Monomial]  # c_k(q), canonical order

class CoefficientTableResponse(BaseModel):
    code: str
    channel: str
    rows: List[CoefficientRow]

class PolynomialResponse(BaseModel):
    code: str
    channel: str
    degree_p: int
    degree_q: int
    terms: List[Monomial]


# --- Curve Models ---
class CurveSample(BaseModel):
    p: float
    q_star: confloat(ge=0, le=1)

class TolerableQCurveResponse(BaseModel):
    code: str
    resolution: float
    samples: List[CurveSample]


# --- Code Models ---
class CodeSummary(BaseModel):
    label: str
    n_qubits: int
    channel: str
    augmented: bool
    gate_count: int

class FidelityPoint(BaseModel):
    code: str
    p: float
    q: float
    fidelity: float
    baseline: float
    useful: bool


# --- Verification / Optimization Reports ---
class PropertyResult(BaseModel):
    name: str
    passed: bool
    detail: str = ''

class VerifyReport(BaseModel):
    passed: bool
    properties: List[PropertyResult]

class OptimizationReport(BaseModel):
    code: str
    p: float
    q: float
    restarts: int
    seed: int
    best_angles: List[List[float]]
    best_fidelity: float
    augmented_fidelity: float
    unaugmented_fidelity: float
    gap: float  # augmented - best; <= 0 when the optimizer matches or beats augmentation
    evaluations: int


# --- CLI Config ---
def parse_grid(spec):
    """'start:stop:count' -> linearly spaced values with 0 < start <= stop <= 1."""
    try:
        start, stop, count = spec.split(':')
        start, stop, count = float(start), float(stop), int(count)
    except (AttributeError, ValueError):
        raise ValueError(f"grid must look like start:stop:count, got {spec!r}")
    if not 0 < start <= stop <= 1:
        raise ValueError(f"grid needs 0 < start <= stop <= 1, got {start}:{stop}")
    if count < 1:
        raise ValueError("grid count must be positive")
    return [float(v) for v in np.linspace(start, stop, count)]

class RunConfig(BaseModel):
    command: str
    code: Optional[str] = None
    channel: Optional[Literal['bitflip', 'depolarizing']] = None
    augment: Literal['none', 'top', 'full', 'on'] = 'none'
    p: Optional[confloat(ge=0, le=1)] = None
    q: Optional[confloat(ge=0, le=1)] = None
    p_grid: Optional[List[float]] = None
    max_order: conint(ge=0) = 1
    format: Optional[Literal['csv', 'json']] = None
    out: Optional[str] = None
    seed: int = 0
    workers: conint(ge=1) = 1
    restarts: conint(ge=1) = 8
    inject_fault: bool = Field(default=False, description='verify only: corrupt one code as a negative control')

    @field_validator('p_grid', mode='before')
    @classmethod
    def _expand_grid(cls, value):
        if isinstance(value, str):
            return parse_grid(value)
        return value
