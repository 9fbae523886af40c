"""JSON configuration for simulation studies.

A study file looks like::

    {
      "truth": {"g0": 1.0, "lam": 1.0},
      "design": {"kind": "uniform", "a": 0.0, "b": 1.0},
      "noise": {"kind": "normal", "sigma": 0.1},
      "n": 30,
      "reps": 1000,
      "methods": ["nw", "ll", "lq", "lc", "de1-1", "de1-2", "de1-3", "nls"],
      "seed": 20240501,
      "bandwidth_policy": {"kind": "loocv"},
      "kernel": "gaussian"
    }

Design kinds: ``uniform`` (a, b), ``beta`` (alpha, beta), ``beta_quantile``
(alpha, beta) and ``gapped`` (base, gap=[lo, hi]).  Noise kinds: ``normal``
(sigma), ``student_t`` (df) and ``laplace`` (loc, scale).  Bandwidth policies:
``loocv`` (optional explicit ``grid`` list, or ``grid_range`` = [lo, hi, num]
for log-spaced bandwidths), ``fixed`` (h) and ``corollary``.  The
``mse-curve`` command additionally reads ``eval_grid`` = [lo, hi, num]
(equispaced evaluation points).

Unknown keys are rejected everywhere.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError, DataFormatError
from .kernel import Kernel
from .simulation import (
    LOOCV,
    BetaQuantile,
    BetaRandom,
    CorollaryOptimal,
    ExponentialTruth,
    FixedBandwidth,
    Gapped,
    Laplace,
    Normal,
    SimConfig,
    StudentT,
    UniformRandom,
)

__all__ = ["StudyFile", "load_study", "study_from_dict"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TruthSpec(_Strict):
    g0: float = 1.0
    lam: float = 1.0


class UniformSpec(_Strict):
    kind: Literal["uniform"]
    a: float = 0.0
    b: float = 1.0

    @model_validator(mode="after")
    def _order(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        return self


class BetaSpec(_Strict):
    kind: Literal["beta", "beta_quantile"]
    alpha: float = Field(gt=0)
    beta: float = Field(gt=0)


class GappedSpec(_Strict):
    kind: Literal["gapped"]
    base: Annotated[Union[UniformSpec, BetaSpec], Field(discriminator="kind")]
    gap: tuple[float, float]


DesignSpec = Annotated[Union[UniformSpec, BetaSpec, GappedSpec], Field(discriminator="kind")]


class NormalSpec(_Strict):
    kind: Literal["normal"]
    sigma: float = Field(gt=0)


class StudentTSpec(_Strict):
    kind: Literal["student_t"]
    df: float = Field(gt=2)


class LaplaceSpec(_Strict):
    kind: Literal["laplace"]
    loc: float = 0.0
    scale: float = Field(default=1.0, gt=0)


NoiseSpec = Annotated[Union[NormalSpec, StudentTSpec, LaplaceSpec], Field(discriminator="kind")]


class LoocvSpec(_Strict):
    kind: Literal["loocv"]
    grid: Optional[list[float]] = None
    grid_range: Optional[tuple[float, float, int]] = None

    @model_validator(mode="after")
    def _one_grid(self):
        if self.grid is not None and self.grid_range is not None:
            raise ValueError("give at most one of grid and grid_range")
        return self


class FixedSpec(_Strict):
    kind: Literal["fixed"]
    h: float = Field(gt=0)


class CorollarySpec(_Strict):
    kind: Literal["corollary"]


PolicySpec = Annotated[Union[LoocvSpec, FixedSpec, CorollarySpec], Field(discriminator="kind")]


class StudyFile(_Strict):
    truth: TruthSpec = TruthSpec()
    design: DesignSpec
    noise: NoiseSpec
    n: int = Field(ge=1)
    reps: int = Field(ge=1)
    methods: list[str] = Field(min_length=1)
    seed: int = Field(default=0, ge=0, lt=2**64)
    bandwidth_policy: PolicySpec = LoocvSpec(kind="loocv")
    kernel: Literal["gaussian", "epanechnikov"] = "gaussian"
    eval_grid: Optional[tuple[float, float, int]] = None

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, methods):
        from .estimators import parse_method

        for name in methods:
            try:
                parse_method(name)
            except ConfigError as exc:
                raise ValueError(str(exc)) from None
        return methods

    def to_config(self) -> SimConfig:
        return SimConfig(
            truth=ExponentialTruth(self.truth.g0, self.truth.lam),
            design=_design(self.design),
            noise=_noise(self.noise),
            n=self.n,
            reps=self.reps,
            methods=tuple(self.methods),
            seed=self.seed,
            bandwidth_policy=_policy(self.bandwidth_policy),
            kernel=Kernel.parse(self.kernel),
        )

    def evaluation_grid(self) -> np.ndarray:
        if self.eval_grid is None:
            raise ConfigError("eval_grid: required for mse-curve ([lo, hi, num])")
        lo, hi, num = self.eval_grid
        if num < 1 or not lo <= hi:
            raise ConfigError("eval_grid: need lo <= hi and num >= 1")
        return np.linspace(lo, hi, num)


def _design(spec):
    if isinstance(spec, UniformSpec):
        return UniformRandom(spec.a, spec.b)
    if isinstance(spec, BetaSpec):
        return (BetaQuantile if spec.kind == "beta_quantile" else BetaRandom)(spec.alpha, spec.beta)
    return Gapped(_design(spec.base), tuple(spec.gap))


def _noise(spec):
    if isinstance(spec, NormalSpec):
        return Normal(spec.sigma)
    if isinstance(spec, StudentTSpec):
        return StudentT(spec.df)
    return Laplace(spec.loc, spec.scale)


def _policy(spec):
    if isinstance(spec, FixedSpec):
        return FixedBandwidth(spec.h)
    if isinstance(spec, CorollarySpec):
        return CorollaryOptimal()
    if spec.grid_range is not None:
        lo, hi, num = spec.grid_range
        if not (0 < lo < hi and num >= 1):
            raise ConfigError("bandwidth_policy.grid_range: need 0 < lo < hi and num >= 1")
        return LOOCV(tuple(float(v) for v in np.geomspace(lo, hi, num)))
    return LOOCV(None if spec.grid is None else tuple(spec.grid))


def _format_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{path}: {err['msg']}")
    return "; ".join(parts)


def study_from_dict(obj) -> StudyFile:
    try:
        return StudyFile.model_validate(obj)
    except ValidationError as exc:
        raise ConfigError(f"invalid study config: {_format_error(exc)}") from None


def load_study(path) -> StudyFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc.msg}, line {exc.lineno})") from None
    study = study_from_dict(obj)
    study.to_config()  # surfaces cross-field errors (e.g. a gap outside the design) early
    return study
