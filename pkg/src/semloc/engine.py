"""Replay engine: one MCL step per detection-log frame.

Per frame the engine applies, in order: odometry prediction, geometric scan
factors, semantic detection factors, text matching with particle injection,
the weight update, and a resampling pass when the effective sample size
drops below ess_ratio * n. Every random draw derives from the root seed and
the frame index, so identical (map, log, seed, config) replays are
bit-identical. An empty frame leaves the particle set untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .detlog import LogFrame
from .mcl import (
    InjectionPolicy,
    MotionNoise,
    ParticleSet,
    _inject,
    effective_sample_size,
    estimate_pose,
    init_in_rooms,
    init_uniform,
    predict,
    resample_low_variance,
    update,
)
from .seeding import PH_INJECT, PH_PREDICT, PH_RESAMPLE, make_rng
from .semmap import AbstractSemanticMap
from .sensor_models import (
    SemanticModelParams,
    build_likelihood_field,
    geometric_weights,
    match_text,
    semantic_weights,
)


@dataclass
class StepRecord:
    """One row of the estimated trajectory plus step diagnostics."""

    t: float
    x: float
    y: float
    theta: float
    cov: np.ndarray  # (3, 3)
    ess: float
    n_injected: int
    resampled: bool = False
    matched_tags: list = field(default_factory=list)


class MonteCarloLocalizer:
    """Single-owner filter state machine; step one frame at a time.

    on_event, when given, is called as on_event(name, t, particle_set) with
    name in {"pre_inject", "post_inject"} around each injection -- test
    probes use it to watch posterior mass move.
    """

    def __init__(
        self,
        semmap: AbstractSemanticMap,
        config: RunConfig | None = None,
        seed: int | None = None,
        on_event=None,
    ):
        self.map = semmap
        self.config = config or RunConfig()
        self.config.validate()
        self.seed = self.config.seed if seed is None else int(seed)
        self.on_event = on_event

        self.field = build_likelihood_field(
            semmap.grid,
            sigma_hit=self.config.sigma_hit,
            z_rand_weight=self.config.z_rand_weight,
            max_eval_range=self.config.max_eval_range,
        )
        self.motion_noise = MotionNoise(
            self.config.alpha1, self.config.alpha2, self.config.alpha3, self.config.alpha4
        )
        self.policy = InjectionPolicy(rho=self.config.rho, cooldown=self.config.cooldown)
        self.sem_params = SemanticModelParams(
            gamma=self.config.gamma, miss_penalty=self.config.miss_penalty, min_factor=self.config.min_factor
        )
        self._tags = [box.tag for box in semmap.text_boxes]
        self._last_fired: dict[str, float] = {}
        self._frame_index = 0

        if self.config.init == "uniform":
            self.pset: ParticleSet = init_uniform(semmap, self.config.particles, self.seed)
        else:
            category = self.config.init.split(":", 1)[1]
            self.pset = init_in_rooms(semmap, [category], self.config.particles, self.seed)

    def step(self, frame: LogFrame) -> StepRecord:
        cfg = self.config
        i = self._frame_index
        self._frame_index += 1
        pset = self.pset
        changed = False
        n_injected = 0
        matched = []

        if frame.odometry is not None:
            rng = make_rng(self.seed, PH_PREDICT, i)
            pset = predict(pset, frame.odometry, self.motion_noise, rng, grid=self.map.grid)
            changed = True

        factors = None
        if cfg.geometric and frame.scan is not None:
            factors = geometric_weights(self.field, pset.poses, frame.scan, cfg.stride)
        if cfg.semantic and frame.object_detections:
            sem = semantic_weights(self.map, pset.poses, frame.object_detections, self.sem_params)
            factors = sem if factors is None else factors * sem

        if cfg.text and frame.text_detections:
            for j, det in enumerate(frame.text_detections):
                tag = match_text(self._tags, det, cfg.max_edit_distance)
                if tag is None:
                    continue
                box = self.map.text_box(tag)
                if box is None:
                    continue
                matched.append(tag)
                if self.on_event is not None:
                    self.on_event("pre_inject", frame.t, pset)
                rng = make_rng(self.seed, PH_INJECT, i, j)
                new, replaced = _inject(
                    pset, box, self.policy, self.map, rng, now=frame.t, last_fired=self._last_fired
                )
                if replaced is not None:
                    self._last_fired[tag] = frame.t
                    n_injected += replaced.size
                    pset = new
                    changed = True
                    # injected hypotheses skip this frame's evidence factors:
                    # the factors were computed for the particles they replaced
                    if factors is not None:
                        factors = factors.copy()
                        factors[replaced] = 1.0
                if self.on_event is not None:
                    self.on_event("post_inject", frame.t, pset)

        if factors is not None:
            pset = update(pset, factors)
            changed = True

        resampled = False
        if changed and effective_sample_size(pset) < cfg.ess_ratio * pset.n:
            pset = resample_low_variance(pset, make_rng(self.seed, PH_RESAMPLE, i))
            resampled = True

        self.pset = pset
        mean, cov = estimate_pose(pset)
        return StepRecord(
            t=frame.t,
            x=mean.x,
            y=mean.y,
            theta=mean.theta,
            cov=cov,
            ess=effective_sample_size(pset),
            n_injected=n_injected,
            resampled=resampled,
            matched_tags=matched,
        )

    def run(self, frames) -> list[StepRecord]:
        return [self.step(frame) for frame in frames]
