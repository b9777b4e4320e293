"""Synthetic prints and the identification / FAR-FRR benchmark.

Real fingerprint databases are not bundled, so classes are sinusoidal ridge
patterns with analytic orientation. Each class is a flow angle (or a whorl
centre); samples of a class differ only in noise and occlusion.
"""
import csv
import io
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .errors import ConfigError
from .gallery import Gallery, GalleryRecord, add_record, identify
from .matcher import MatchConfig, match
from .pipeline import PipelineConfig, extract_field

PATTERNS = ("unidirectional", "whorl")
MID_GRAY = 128


@dataclass(frozen=True)
class SynthParams:
    size: int = 256
    pattern: str = "unidirectional"
    flow_angle: float = 0.0
    ridge_period: float = 8.0
    noise_sigma: float = 0.0
    occlusion_frac: float = 0.0
    seed: int = 0
    # whorl centre offset from the image centre, in pixels (x, y)
    center_offset: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ConfigError(f"unknown pattern {self.pattern!r}")
        if self.size < 3:
            raise ConfigError("image size must be at least 3")
        if self.ridge_period < 4:
            raise ConfigError("ridge period must be >= 4 pixels")
        if self.noise_sigma < 0:
            raise ConfigError("noise sigma must be non-negative")
        if not 0.0 <= self.occlusion_frac < 1.0:
            raise ConfigError("occlusion fraction must lie in [0, 1)")


def _round_half_up(v):
    return np.floor(v + 0.5)


def synth_print(p: SynthParams) -> np.ndarray:
    """Render a synthetic print.

    Intensity is ``round(127.5 * (1 + sin(2 pi u / period)))`` where ``u`` is
    the coordinate along the flow angle; ridges therefore run perpendicular
    to ``flow_angle``. For a whorl ``u`` is the distance from the centre,
    which gives concentric rings. Seeded Gaussian noise and one mid-gray
    rectangle covering ``occlusion_frac`` of the area follow.
    """
    n = p.size
    y, x = np.mgrid[0:n, 0:n].astype(np.float64)
    if p.pattern == "unidirectional":
        u = x * np.cos(p.flow_angle) + y * np.sin(p.flow_angle)
    else:
        c = (n - 1) / 2.0
        dx = x - c - p.center_offset[0]
        dy = y - c - p.center_offset[1]
        # the local angle replaces the flow angle: u = dx cos(a) + dy sin(a) = |(dx, dy)|
        u = np.hypot(dx, dy)
    img = _round_half_up(127.5 * (1.0 + np.sin(2.0 * np.pi * u / p.ridge_period)))

    rng = np.random.default_rng(p.seed)
    if p.noise_sigma > 0:
        img = _round_half_up(np.clip(img + rng.normal(0.0, p.noise_sigma, img.shape), 0, 255))
    if p.occlusion_frac > 0:
        area = p.occlusion_frac * n * n
        aspect = rng.uniform(0.5, 2.0)
        h = int(min(n, max(1, round(np.sqrt(area * aspect)))))
        w = int(min(n, max(1, round(area / h))))
        top = int(rng.integers(0, n - h + 1))
        left = int(rng.integers(0, n - w + 1))
        img[top:top + h, left:left + w] = MID_GRAY
    return img.astype(np.uint8)


@dataclass
class EvalReport:
    # rows of (gallery_size, rank1_rate, mean_genuine, mean_impostor)
    sizes: list = dc_field(default_factory=list)
    # rows of (threshold, far, frr)
    sweep: list = dc_field(default_factory=list)
    genuine_scores: np.ndarray = None
    impostor_scores: np.ndarray = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["gallery_size", "rank1_rate", "mean_genuine", "mean_impostor"])
        for g, r1, mg, mi in self.sizes:
            out.writerow([g, f"{r1:.6f}", f"{mg:.6f}", f"{mi:.6f}"])
        buf.write("\n")
        out.writerow(["threshold", "far", "frr"])
        for t, far, frr in self.sweep:
            out.writerow([f"{t:.6f}", f"{far:.6f}", f"{frr:.6f}"])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def sweep_thresholds():
    return [k / 20 for k in range(21)]


def far_frr(genuine, impostor, thresholds):
    genuine = np.asarray(genuine, dtype=np.float64)
    impostor = np.asarray(impostor, dtype=np.float64)
    rows = []
    for t in thresholds:
        far = float(np.mean(impostor >= t)) if impostor.size else 0.0
        frr = float(np.mean(genuine < t)) if genuine.size else 0.0
        rows.append((t, far, frr))
    return rows


def class_params(k: int, classes: int, base: SynthParams, rng) -> SynthParams:
    if base.pattern == "unidirectional":
        return replace(base, flow_angle=k * np.pi / classes)
    # whorl classes are told apart by where the centre sits
    span = base.size / 4.0
    off = tuple(float(v) for v in rng.uniform(-span, span, size=2))
    return replace(base, center_offset=off)


def run_benchmark(classes: int, samples_per_class: int, gallery_sizes,
                  synth: SynthParams = SynthParams(),
                  pipeline: PipelineConfig = PipelineConfig(),
                  match_cfg: MatchConfig = MatchConfig(),
                  seed: int = 0) -> EvalReport:
    """Closed-set identification over nested galleries plus a FAR/FRR sweep.

    Sample 0 of each class is enrolled, the rest are probes. Gallery order
    is a seeded permutation of the classes and each gallery size takes a
    prefix of it. The probe set is fixed across sizes: held-out samples of
    the classes in the smallest gallery, so rank-1 can only fall as the
    gallery grows. The sweep uses every probe against every enrolled class.
    """
    K, S = int(classes), int(samples_per_class)
    sizes = sorted(int(g) for g in gallery_sizes)
    if K < 2:
        raise ConfigError("need at least 2 classes for impostor scores")
    if S < 2:
        raise ConfigError("need at least 2 samples per class")
    if not sizes or sizes[0] < 1 or sizes[-1] > K:
        raise ConfigError(f"gallery sizes must lie in [1, {K}]")

    root = np.random.SeedSequence(seed)
    class_rng = np.random.default_rng(root.spawn(1)[0])
    order = class_rng.permutation(K)
    per_class = [class_params(k, K, synth, class_rng) for k in range(K)]

    sample_seeds = root.spawn(K * S)
    fields = {}
    for k in range(K):
        for s in range(S):
            ss = sample_seeds[k * S + s].generate_state(2, dtype=np.uint32)
            p = replace(per_class[k], seed=int(ss[0]) << 32 | int(ss[1]))
            fields[k, s] = extract_field(synth_print(p), pipeline)

    label = [f"class{k:04d}" for k in range(K)]

    # full score matrix: probes (k, s>0) against every enrolled class
    scores = {}
    for k in range(K):
        for s in range(1, S):
            for j in range(K):
                scores[k, s, j] = match(fields[j, 0], fields[k, s], match_cfg).score
    genuine = np.array([scores[k, s, k] for k in range(K) for s in range(1, S)])
    impostor = np.array([scores[k, s, j] for k in range(K) for s in range(1, S)
                         for j in range(K) if j != k])

    probe_classes = [int(k) for k in order[:sizes[0]]]
    report = EvalReport(genuine_scores=genuine, impostor_scores=impostor)
    for g in sizes:
        gallery = Gallery(pipeline.block_size, pipeline.mode)
        members = [int(k) for k in order[:g]]
        for k in members:
            gallery = add_record(gallery, GalleryRecord(label[k], fields[k, 0]))
        hits = 0
        gen, imp = [], []
        for k in probe_classes:
            for s in range(1, S):
                best, _, _ = identify(gallery, fields[k, s], match_cfg)
                hits += best == label[k]
                gen.append(scores[k, s, k])
                imp.extend(scores[k, s, j] for j in members if j != k)
        n_probes = len(probe_classes) * (S - 1)
        report.sizes.append((g, hits / n_probes, float(np.mean(gen)),
                             float(np.mean(imp)) if imp else 0.0))
    report.sweep = far_frr(genuine, impostor, sweep_thresholds())
    return report

