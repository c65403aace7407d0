"""Experiment harness: fixture generators, scenes, metrics, and oracle checks.

Scenes bundle contours with rigid poses (and optional animation frames);
experiments build the box trees under a chosen fitting method, run detection,
and emit schema-stable CSV records.  The brute-force oracle re-derives every
contact by exhaustive segment-pair verification, independent of the trees.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boxtree import BoxTree, FitMethod, RigidPose, build_tree, total_box_area
from .contour import ClosedContour, load_contour, sample_segment_uniform
from .detect import (
    EPS_CONTACT,
    EPS_SEP,
    NARROW_SAMPLES,
    InterferenceReport,
    detect_scene,
    polyline_min_distance,
)
from .multires import build_pyramid

__all__ = [
    "Scene",
    "SceneObject",
    "ExperimentRecord",
    "OracleCheckResult",
    "CSV_COLUMNS",
    "generate_fixture",
    "reference_scene",
    "load_scene",
    "scene_from_dict",
    "build_scene_objects",
    "run_experiment",
    "run_oracle_check",
    "animate",
    "records_to_csv",
    "write_records_csv",
]

FIXTURE_KINDS = ("blob", "gear", "star")

_ORACLE_MAX_SEGMENTS = 64


@dataclass(frozen=True)
class SceneObject:
    contour: ClosedContour
    pose: RigidPose
    source: str | None = None


@dataclass(frozen=True)
class Scene:
    """A named set of posed objects, optionally with per-frame pose updates."""

    name: str
    objects: tuple[SceneObject, ...]
    frames: tuple[tuple[RigidPose, ...], ...] | None = None
    seed: int | None = None

    def __post_init__(self):
        if len(self.objects) < 1:
            raise ValueError("scene needs at least one object")
        if self.frames is not None:
            for k, frame in enumerate(self.frames):
                if len(frame) != len(self.objects):
                    raise ValueError(
                        f"frame {k} has {len(frame)} poses for {len(self.objects)} objects"
                    )


@dataclass
class ExperimentRecord:
    """One detection run: structural counts, traversal counters, timing."""

    scene: str
    method: str
    boxes_total: int
    boxes_tested: int
    candidates: int
    contacts: int
    wall_time_s: float
    area_per_level: dict[int, float]
    frame: int | None = None


CSV_COLUMNS = (
    "scene",
    "method",
    "frame",
    "boxes_total",
    "boxes_tested",
    "candidates",
    "contacts",
    "wall_time_s",
    "area_per_level",
)


def _format_area_per_level(areas: dict[int, float]) -> str:
    return ";".join(f"{level}:{repr(areas[level])}" for level in sorted(areas))


def record_to_row(record: ExperimentRecord) -> list[str]:
    return [
        record.scene,
        record.method,
        "" if record.frame is None else str(record.frame),
        str(record.boxes_total),
        str(record.boxes_tested),
        str(record.candidates),
        str(record.contacts),
        repr(record.wall_time_s),
        _format_area_per_level(record.area_per_level),
    ]


def records_to_csv(records) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for record in records:
        lines.append(",".join(record_to_row(record)))
    return "\n".join(lines) + "\n"


def write_records_csv(records, path) -> None:
    Path(path).write_text(records_to_csv(records), encoding="utf-8")


# --- fixture generation ------------------------------------------------------

_KIND_CODE = {"blob": 1, "gear": 2, "star": 3}


def generate_fixture(kind: str, m: int, roughness: float, seed: int) -> ClosedContour:
    """Deterministic closed control polygon: radial harmonics around a circle.

    Kinds differ in harmonic content -- blob: a few low frequencies; gear:
    a tooth ripple; star: a dominant 5-fold lobe.  sigma is uniform.
    """
    if kind not in _KIND_CODE:
        raise ValueError(f"unknown fixture kind {kind!r}; expected one of {FIXTURE_KINDS}")
    if m < 8 or (m & (m - 1)) != 0:
        raise ValueError(f"m must be a power of two >= 8, got {m}")
    if roughness < 0.0:
        raise ValueError("roughness must be non-negative")
    rng = np.random.default_rng([_KIND_CODE[kind], int(seed)])
    theta = 2.0 * np.pi * np.arange(m) / m
    base_radius = 10.0
    radius = np.full(m, 1.0)
    if kind == "blob":
        # Amplitudes stay small and low-frequency so the coarsened levels of
        # the pyramid track the shape's orientation closely.
        for harmonic, amp_hi in ((1, 0.02), (2, 0.015), (3, 0.005)):
            amp = rng.uniform(0.5 * amp_hi, amp_hi)
            radius += amp * np.cos(harmonic * theta + rng.uniform(0.0, 2.0 * np.pi))
    elif kind == "gear":
        teeth = min(12, max(3, m // 8))
        radius += 0.05 * np.cos(teeth * theta + rng.uniform(0.0, 2.0 * np.pi))
        radius += rng.uniform(0.01, 0.03) * np.cos(2 * theta + rng.uniform(0.0, 2.0 * np.pi))
    else:  # star
        radius += 0.15 * np.cos(5 * theta + rng.uniform(0.0, 2.0 * np.pi))
        radius += rng.uniform(0.01, 0.04) * np.cos(3 * theta + rng.uniform(0.0, 2.0 * np.pi))
    points = base_radius * radius[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return ClosedContour(
        control_points=points,
        sigma=np.full(m, float(roughness)),
        q_factor=3.0,
    )


def reference_scene(situation: str, m: int = 512, roughness: float = 0.0, seed: int = 7) -> Scene:
    """Three smooth fixtures at canonical poses.

    situation: 'separated' (no pair overlaps), 'contact' (one touching pair),
    or 'deep' (all three interpenetrate with multiple contact regions).
    """
    contours = [generate_fixture("blob", m, roughness, seed + k) for k in range(3)]
    if situation == "separated":
        poses = [
            RigidPose(0.0, (0.0, 0.0)),
            RigidPose(0.7, (40.0, 5.0)),
            RigidPose(-1.1, (-38.0, -8.0)),
        ]
    elif situation == "contact":
        poses = [
            RigidPose(0.0, (0.0, 0.0)),
            RigidPose(0.7, (19.6, 0.0)),
            RigidPose(-1.1, (-45.0, -8.0)),
        ]
    elif situation == "deep":
        poses = [
            RigidPose(0.0, (0.0, 0.0)),
            RigidPose(0.55, (13.7, 0.0)),
            RigidPose(-1.1, (6.0, 12.2)),
        ]
    else:
        raise ValueError(f"unknown situation {situation!r}")
    objects = tuple(
        SceneObject(contour=c, pose=p, source=f"blob-{m}-{seed + k}")
        for k, (c, p) in enumerate(zip(contours, poses))
    )
    return Scene(name=f"reference-{situation}", objects=objects, seed=seed)


# --- scene files --------------------------------------------------------------


def _pose_from_dict(data: dict) -> RigidPose:
    return RigidPose(
        rotation=float(data.get("rotation", 0.0)),
        translation=np.asarray(data.get("translation", (0.0, 0.0)), dtype=float),
    )


def pose_to_dict(pose: RigidPose) -> dict:
    return {"rotation": pose.rotation, "translation": pose.translation.tolist()}


def scene_from_dict(data: dict, base_dir=None) -> Scene:
    base = Path(base_dir) if base_dir is not None else Path(".")
    raw_objects = data.get("objects")
    if not raw_objects:
        raise ValueError("scene has no objects")
    objects = []
    for entry in raw_objects:
        ref = entry.get("contour")
        if ref is None:
            raise ValueError("scene object is missing its contour reference")
        path = Path(ref)
        if not path.is_absolute():
            path = base / path
        contour = load_contour(path)
        objects.append(
            SceneObject(
                contour=contour,
                pose=_pose_from_dict(entry.get("pose", {})),
                source=str(ref),
            )
        )
    frames = None
    if data.get("frames"):
        frames = tuple(
            tuple(_pose_from_dict(p) for p in frame) for frame in data["frames"]
        )
    return Scene(
        name=str(data.get("name", "scene")),
        objects=tuple(objects),
        frames=frames,
        seed=data.get("seed"),
    )


def load_scene(path) -> Scene:
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        return scene_from_dict(json.load(fh), base_dir=path.parent)


# --- experiments --------------------------------------------------------------


def build_scene_objects(
    scene: Scene,
    method: FitMethod | str = FitMethod.ELEMENTARY,
    r: int = 5,
    min_level: int = 2,
    sampling: str = "parameter",
) -> list[tuple[BoxTree, ClosedContour, RigidPose]]:
    """Build one box tree per scene object (body frame) and pair it with its pose."""
    method = FitMethod(method)
    triples = []
    for obj in scene.objects:
        pyramid = (
            build_pyramid(obj.contour, min_level=min_level)
            if method is FitMethod.MULTIRESOLUTION
            else None
        )
        tree = build_tree(obj.contour, pyramid=pyramid, method=method, r=r, sampling=sampling)
        triples.append((tree, obj.contour, obj.pose))
    return triples


def _aggregate(
    scene_name: str,
    method: FitMethod,
    triples,
    reports: list[InterferenceReport],
    wall_time_s: float,
    frame: int | None = None,
) -> ExperimentRecord:
    trees = [tree for tree, _, _ in triples]
    areas: dict[int, float] = {}
    for tree in trees:
        for level in range(tree.depth + 1):
            areas[level] = areas.get(level, 0.0) + total_box_area(tree, level)
    return ExperimentRecord(
        scene=scene_name,
        method=method.value,
        boxes_total=sum(tree.node_count for tree in trees),
        boxes_tested=sum(rep.boxes_tested for rep in reports),
        candidates=sum(len(rep.candidate_pairs) for rep in reports),
        contacts=sum(len(rep.contacts) for rep in reports),
        wall_time_s=wall_time_s,
        area_per_level=areas,
        frame=frame,
    )


def run_experiment(
    scene: Scene,
    method: FitMethod | str = FitMethod.ELEMENTARY,
    r: int = 5,
    repeats: int = 5,
    eps_sep: float = EPS_SEP,
    eps_contact: float = EPS_CONTACT,
    narrow_samples: int = NARROW_SAMPLES,
) -> ExperimentRecord:
    """Build trees, detect interference, and time the detection phase only.

    The reported wall time is the minimum over `repeats` identical detection
    runs; tree construction is excluded.
    """
    method = FitMethod(method)
    triples = build_scene_objects(scene, method=method, r=r)
    reports = detect_scene(
        triples, eps_sep=eps_sep, eps_contact=eps_contact, narrow_samples=narrow_samples
    )
    best = float("inf")
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        detect_scene(
            triples, eps_sep=eps_sep, eps_contact=eps_contact, narrow_samples=narrow_samples
        )
        best = min(best, time.perf_counter() - start)
    return _aggregate(scene.name, method, triples, reports, best)


def animate(
    scene: Scene,
    method: FitMethod | str = FitMethod.ELEMENTARY,
    r: int = 5,
    eps_sep: float = EPS_SEP,
    eps_contact: float = EPS_CONTACT,
    narrow_samples: int = NARROW_SAMPLES,
):
    """Yield one ExperimentRecord per animation frame.

    Trees are built once; each frame only swaps the rigid poses.
    """
    if not scene.frames:
        raise ValueError(f"scene {scene.name!r} has no animation frames")
    method = FitMethod(method)
    triples = build_scene_objects(scene, method=method, r=r)
    for index, frame in enumerate(scene.frames):
        posed = [
            (tree, contour, pose)
            for (tree, contour, _), pose in zip(triples, frame)
        ]
        start = time.perf_counter()
        reports = detect_scene(
            posed, eps_sep=eps_sep, eps_contact=eps_contact, narrow_samples=narrow_samples
        )
        elapsed = time.perf_counter() - start
        yield _aggregate(scene.name, method, posed, reports, elapsed, frame=index)


# --- brute-force oracle ---------------------------------------------------------


@dataclass
class OracleCheckResult:
    """Diff between tree-based contacts and the exhaustive segment-pair oracle."""

    passed: bool
    missing: list[tuple[tuple[int, int], tuple[int, int]]]
    extra: list[tuple[tuple[int, int], tuple[int, int]]]
    oracle_contacts: dict
    tree_contacts: dict


def _all_pairs_contacts(objects, eps_contact: float, narrow_samples: int) -> dict:
    """Exhaustive contact search over every segment pair of every object pair.

    A bounding-circle distance bound skips pairs that provably cannot reach
    the contact threshold; surviving pairs get the exact polyline check.
    """
    sampled = []
    for _, contour, pose in objects:
        polylines = np.stack(
            [
                pose.apply_points(sample_segment_uniform(contour, seg, narrow_samples))
                for seg in range(contour.segment_count)
            ]
        )
        centers = polylines.mean(axis=1)
        radii = np.sqrt(
            ((polylines - centers[:, None, :]) ** 2).sum(axis=2).max(axis=1)
        )
        tolerances = contour.q_factor * np.asarray(contour.sigma, dtype=float)
        sampled.append((polylines, centers, radii, tolerances))
    contacts: dict = {}
    for ia in range(len(objects)):
        pl_a, centers_a, radii_a, tol_a = sampled[ia]
        for ib in range(ia + 1, len(objects)):
            pl_b, centers_b, radii_b, tol_b = sampled[ib]
            gaps = np.linalg.norm(
                centers_a[:, None, :] - centers_b[None, :, :], axis=2
            ) - radii_a[:, None] - radii_b[None, :]
            thresholds = tol_a[:, None] + tol_b[None, :] + eps_contact
            pair_contacts = set()
            for sa, sb in zip(*np.nonzero(gaps <= thresholds)):
                distance, _, _ = polyline_min_distance(pl_a[sa], pl_b[sb])
                if distance <= thresholds[sa, sb]:
                    pair_contacts.add((int(sa), int(sb)))
            contacts[(ia, ib)] = pair_contacts
    return contacts


def run_oracle_check(
    scene: Scene,
    method: FitMethod | str = FitMethod.ELEMENTARY,
    r: int = 5,
    eps_sep: float = EPS_SEP,
    eps_contact: float = EPS_CONTACT,
    narrow_samples: int = NARROW_SAMPLES,
) -> OracleCheckResult:
    """Compare tree-based detection against the all-pairs contact oracle.

    Fails (passed=False) on any contact the oracle finds that detection
    missed.  Extra tree contacts are reported but do not fail the check.
    """
    for obj in scene.objects:
        if obj.contour.segment_count > _ORACLE_MAX_SEGMENTS:
            raise ValueError(
                f"oracle limit is {_ORACLE_MAX_SEGMENTS} segments per object; "
                f"got {obj.contour.segment_count}"
            )
    triples = build_scene_objects(scene, method=method, r=r)
    reports = detect_scene(
        triples, eps_sep=eps_sep, eps_contact=eps_contact, narrow_samples=narrow_samples
    )
    tree_contacts: dict = {}
    pair_index = 0
    for ia in range(len(triples)):
        for ib in range(ia + 1, len(triples)):
            tree_contacts[(ia, ib)] = {
                (contact.segment_a, contact.segment_b)
                for contact in reports[pair_index].contacts
            }
            pair_index += 1
    oracle_contacts = _all_pairs_contacts(triples, eps_contact, narrow_samples)
    missing = []
    extra = []
    for key in oracle_contacts:
        missing.extend((key, pair) for pair in sorted(oracle_contacts[key] - tree_contacts[key]))
        extra.extend((key, pair) for pair in sorted(tree_contacts[key] - oracle_contacts[key]))
    return OracleCheckResult(
        passed=not missing,
        missing=missing,
        extra=extra,
        oracle_contacts=oracle_contacts,
        tree_contacts=tree_contacts,
    )
