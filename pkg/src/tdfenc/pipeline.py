"""End-to-end orchestration: configuration, the two-branch encode-fuse-train
flow, evaluation metrics, and the synthetic temporal benchmark generator.

A video is encoded in two branches. The time branch pools the (normalized,
optionally PCA-reduced) frame descriptors directly. The spectrum branch first
maps the sequence to per-dimension magnitude spectra on a shared frequency
axis and pools descriptors read from that matrix; ``dft_pool_axis`` selects
whether one descriptor is a frequency-bin column or a per-dimension spectral
profile row. Branch vectors are scaled to configured norms and concatenated;
a one-vs-rest linear SVM is trained on the fused vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .codebook import (
    Codebook,
    GmmModel,
    gmm_fit,
    kmeans_fit,
    load_codebook,
    load_gmm_model,
    save_codebook,
    save_gmm_model,
)
from .encode import LlcParams, VideoVector, average_pool, fisher_encode, fuse, llc_pool, vlad_encode
from .errors import ConfigError, DataError
from .featureio import (
    DatasetManifest,
    FeatureSequence,
    ManifestEntry,
    read_feature_sequence,
    split_train_test,
    write_feature_sequence,
    write_manifest,
)
from .preprocess import PcaModel, load_pca_model, pca_fit, pca_transform, save_pca_model
from .spectral import spectrum_of_sequence
from .svm import LinearSvmModel, predict, train_linear_svm

ENCODERS = ("average", "llc", "fv", "vlad")
POOL_AXES = ("dimension", "frequency")

# default codebook sizes when a size is not given explicitly
DEFAULT_CODEBOOK_SIZES = {"llc": 1024, "fv": 16, "vlad": 16}

PCA_SAMPLE_CAP = 100_000

# seed offsets so per-branch fits draw independent streams from one config seed
_TIME_FIT_SEED_OFFSET = 11
_DFT_FIT_SEED_OFFSET = 12


@dataclass(frozen=True)
class PipelineConfig:
    """All knobs of the two-branch pipeline; field names double as config-file keys."""

    pca_dims: int | None = None
    spectrum_length: int = 500
    time_encoder: str = "average"
    dft_encoder: str = "average"
    time_codebook_size: int | None = None
    dft_codebook_size: int | None = None
    llc_neighbors: int = 5
    llc_lambda: float = 1e-4
    fusion_time_norm: float = 0.6
    fusion_dft_norm: float = 0.4
    time_branch_enabled: bool = True
    dft_branch_enabled: bool = True
    signed_sqrt_l2: bool = True
    dft_pool_axis: str = "dimension"
    train_fraction: float = 2.0 / 3.0
    svm_c: float = 100.0
    svm_max_epochs: int = 200
    svm_tol: float = 1e-6
    kmeans_max_iters: int = 100
    gmm_max_iters: int = 100
    gmm_tol: float = 1e-6
    seed: int = 0

    def validate(self) -> None:
        if self.pca_dims is not None and self.pca_dims < 1:
            raise ConfigError(f"pca_dims must be positive, got {self.pca_dims}")
        if self.spectrum_length < 1:
            raise ConfigError(f"spectrum_length must be positive, got {self.spectrum_length}")
        for name in ("time_encoder", "dft_encoder"):
            if getattr(self, name) not in ENCODERS:
                raise ConfigError(f"{name} must be one of {ENCODERS}, got {getattr(self, name)!r}")
        for name in ("time_codebook_size", "dft_codebook_size"):
            size = getattr(self, name)
            if size is not None and size < 1:
                raise ConfigError(f"{name} must be positive, got {size}")
        if self.llc_neighbors < 1:
            raise ConfigError(f"llc_neighbors must be positive, got {self.llc_neighbors}")
        if self.llc_lambda < 0:
            raise ConfigError(f"llc_lambda must be non-negative, got {self.llc_lambda}")
        for name in ("fusion_time_norm", "fusion_dft_norm", "svm_c", "svm_tol", "gmm_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.time_branch_enabled and not self.dft_branch_enabled:
            raise ConfigError("at least one branch must be enabled")
        if self.dft_pool_axis not in POOL_AXES:
            raise ConfigError(
                f"dft_pool_axis must be one of {POOL_AXES}, got {self.dft_pool_axis!r}"
            )
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        for name in ("svm_max_epochs", "kmeans_max_iters", "gmm_max_iters"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")

    def codebook_size(self, branch: str) -> int:
        encoder = self.time_encoder if branch == "time" else self.dft_encoder
        explicit = self.time_codebook_size if branch == "time" else self.dft_codebook_size
        if explicit is not None:
            return explicit
        return DEFAULT_CODEBOOK_SIZES[encoder]

    @classmethod
    def emotion_defaults(cls, **overrides) -> "PipelineConfig":
        """Hyperparameters of the 8-emotion configuration: PCA to 1024 dims,
        spectra of length 500, branch norms 3/5 and 2/5, penalty 100."""
        base = cls(pca_dims=1024, spectrum_length=500, fusion_time_norm=0.6,
                   fusion_dft_norm=0.4, svm_c=100.0)
        return replace(base, **overrides)

    @classmethod
    def action_defaults(cls, **overrides) -> "PipelineConfig":
        """Hyperparameters of the action-recognition configuration: spectra of
        length 200, unit branch norms, 32-word FV/VLAD codebooks (LLC keeps
        its 1024 words), penalty 1."""
        base = cls(pca_dims=None, spectrum_length=200, fusion_time_norm=1.0,
                   fusion_dft_norm=1.0, svm_c=1.0)
        config = replace(base, **overrides)
        sizes = {}
        for field_name, encoder in (
            ("time_codebook_size", config.time_encoder),
            ("dft_codebook_size", config.dft_encoder),
        ):
            if getattr(config, field_name) is None and encoder in ("fv", "vlad"):
                sizes[field_name] = 32
        return replace(config, **sizes) if sizes else config


_CONFIG_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(text: str) -> bool:
    try:
        return _CONFIG_BOOL[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {text!r}") from None


_CONFIG_PARSERS = {
    "pca_dims": int,
    "spectrum_length": int,
    "time_encoder": str,
    "dft_encoder": str,
    "time_codebook_size": int,
    "dft_codebook_size": int,
    "llc_neighbors": int,
    "llc_lambda": float,
    "fusion_time_norm": float,
    "fusion_dft_norm": float,
    "time_branch_enabled": _parse_bool,
    "dft_branch_enabled": _parse_bool,
    "signed_sqrt_l2": _parse_bool,
    "dft_pool_axis": str,
    "train_fraction": float,
    "svm_c": float,
    "svm_max_epochs": int,
    "svm_tol": float,
    "kmeans_max_iters": int,
    "gmm_max_iters": int,
    "gmm_tol": float,
    "seed": int,
}

assert set(_CONFIG_PARSERS) == {f.name for f in fields(PipelineConfig)}


def _read_key_value_file(path, parsers: dict, kind: str) -> dict:
    path = Path(path)
    try:
        fh = open(path, "r", encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"{kind} file not found: {path}") from None
    values: dict = {}
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            key, _, text = line.partition("=")
            key = key.strip()
            if key not in parsers:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            if key in values:
                raise ConfigError(f"{path}: line {lineno}: duplicate key {key!r}")
            try:
                values[key] = parsers[key](text.strip())
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(
                    f"{path}: line {lineno}: bad value {text.strip()!r} for {key}"
                ) from None
    return values


def parse_pipeline_config(path) -> PipelineConfig:
    """Read a flat key=value config file; keys match PipelineConfig field names.

    Unknown keys are errors, as are encoder-specific keys for branches that do
    not use that encoder.
    """
    values = _read_key_value_file(path, _CONFIG_PARSERS, "config")
    config = PipelineConfig(**values)
    config.validate()
    uses_llc = (config.time_branch_enabled and config.time_encoder == "llc") or (
        config.dft_branch_enabled and config.dft_encoder == "llc"
    )
    for key in ("llc_neighbors", "llc_lambda"):
        if key in values and not uses_llc:
            raise ConfigError(f"{path}: {key} given but no enabled branch uses the llc encoder")
    for key, branch, encoder, enabled in (
        ("time_codebook_size", "time", config.time_encoder, config.time_branch_enabled),
        ("dft_codebook_size", "dft", config.dft_encoder, config.dft_branch_enabled),
    ):
        if key in values and (encoder == "average" or not enabled):
            raise ConfigError(
                f"{path}: {key} given but the {branch} branch does not use a codebook"
            )
    return config


@dataclass(frozen=True)
class SynthSpec:
    """Shape of a generated benchmark: sinusoid frequency per class in the first
    feature dimension, Gaussian noise everywhere else."""

    num_classes: int
    videos_per_class: int
    dims: int
    frames_min: int
    frames_max: int
    frequencies: tuple[float, ...]
    noise: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if self.num_classes < 1:
            raise ConfigError(f"num_classes must be positive, got {self.num_classes}")
        if self.videos_per_class < 1:
            raise ConfigError(f"videos_per_class must be positive, got {self.videos_per_class}")
        if self.dims < 1:
            raise ConfigError(f"dims must be positive, got {self.dims}")
        if not 16 <= self.frames_min <= self.frames_max <= 4096:
            raise ConfigError(
                f"frame-count range [{self.frames_min}, {self.frames_max}] must sit within [16, 4096]"
            )
        if len(self.frequencies) != self.num_classes:
            raise ConfigError(
                f"need one frequency per class: {self.num_classes} classes, "
                f"{len(self.frequencies)} frequencies"
            )
        for f in self.frequencies:
            if not 0.0 < f < 0.5:
                raise ConfigError(f"frequencies must lie in (0, 0.5) cycles/frame, got {f}")
        if self.noise < 0:
            raise ConfigError(f"noise must be non-negative, got {self.noise}")


def _parse_frequencies(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(","))


_SYNTH_PARSERS = {
    "num_classes": int,
    "videos_per_class": int,
    "dims": int,
    "frames_min": int,
    "frames_max": int,
    "frequencies": _parse_frequencies,
    "noise": float,
    "seed": int,
}


def parse_synth_spec(path) -> SynthSpec:
    """Read a flat key=value synthetic-dataset spec file."""
    values = _read_key_value_file(path, _SYNTH_PARSERS, "spec")
    required = ("num_classes", "videos_per_class", "dims", "frames_min", "frames_max", "frequencies")
    for key in required:
        if key not in values:
            raise ConfigError(f"{path}: missing required key {key!r}")
    spec = SynthSpec(**values)
    spec.validate()
    return spec


def generate_synthetic_dataset(spec: SynthSpec, out_dir) -> DatasetManifest:
    """Write a synthetic benchmark whose only class signal is temporal.

    Every video of class c carries ``1 + 0.5*sin(2*pi*f_c*n + phase)`` plus
    noise in dimension 1 (phase drawn per video) and pure Gaussian noise in
    the remaining dimensions, so per-video means are class-independent and
    only the oscillation frequency separates the classes. Feature files are
    written in TDFE format next to a ``manifest.tsv``.
    """
    spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    entries: list[ManifestEntry] = []
    for c in range(spec.num_classes):
        frequency = spec.frequencies[c]
        for j in range(spec.videos_per_class):
            frames = int(rng.integers(spec.frames_min, spec.frames_max + 1))
            phase = rng.uniform(0.0, 2.0 * np.pi)
            values = rng.normal(0.0, spec.noise, size=(spec.dims, frames))
            steps = np.arange(frames)
            values[0] += 1.0 + 0.5 * np.sin(2.0 * np.pi * frequency * steps + phase)
            video_id = f"class{c}_{j:04d}"
            path = out_dir / f"{video_id}.tdfe"
            write_feature_sequence(FeatureSequence(video_id=video_id, values=values), path)
            entries.append(ManifestEntry(video_id, path, c))
    manifest = DatasetManifest(tuple(entries), spec.num_classes)
    write_manifest(manifest, out_dir / "manifest.tsv")
    return manifest


@dataclass(frozen=True)
class ModelBundle:
    """Fitted preprocessing and per-branch encoder models."""

    pca: PcaModel | None = None
    time_model: Codebook | GmmModel | None = None
    dft_model: Codebook | GmmModel | None = None


def _normalized_frames(seq: FeatureSequence) -> np.ndarray:
    """Frames as rows, each scaled to unit length (zero frames left unchanged)."""
    frames = seq.values.T.copy()
    norms = np.linalg.norm(frames, axis=1)
    nonzero = norms > 0
    frames[nonzero] /= norms[nonzero, None]
    return frames


def _reduced_frames(config: PipelineConfig, bundle_pca: PcaModel | None, seq: FeatureSequence) -> np.ndarray:
    frames = _normalized_frames(seq)
    if config.pca_dims is None:
        return frames
    if bundle_pca is None:
        raise DataError("pca stage: config requests PCA but the bundle has no PCA model")
    if bundle_pca.input_dims != seq.dims:
        raise DataError(
            f"pca stage: sequence has {seq.dims} dims, PCA expects {bundle_pca.input_dims}"
        )
    if bundle_pca.output_dims != config.pca_dims:
        raise DataError(
            f"pca stage: bundle was fitted at pca_dims={bundle_pca.output_dims}, "
            f"config requests {config.pca_dims}"
        )
    return pca_transform(bundle_pca, frames)


def _dft_descriptors(config: PipelineConfig, frames: np.ndarray, video_id: str) -> np.ndarray:
    reduced_seq = FeatureSequence(video_id=video_id, values=frames.T)
    spectrum = spectrum_of_sequence(reduced_seq, config.spectrum_length)
    if config.dft_pool_axis == "frequency":
        return spectrum.values.T
    return spectrum.values


def _fit_branch_model(
    config: PipelineConfig, branch: str, encoder: str, descriptors: np.ndarray
) -> Codebook | GmmModel | None:
    if encoder == "average":
        return None
    size = config.codebook_size(branch)
    offset = _TIME_FIT_SEED_OFFSET if branch == "time" else _DFT_FIT_SEED_OFFSET
    seed = config.seed + offset
    if descriptors.shape[0] < size:
        raise DataError(
            f"{branch} branch: {descriptors.shape[0]} descriptors cannot support a "
            f"codebook of {size} words"
        )
    if encoder == "fv":
        return gmm_fit(descriptors, size, seed, config.gmm_max_iters, config.gmm_tol)
    return kmeans_fit(descriptors, size, seed, config.kmeans_max_iters)


def _read_sequence_checked(entry: ManifestEntry, expected_dims: int | None) -> FeatureSequence:
    seq = read_feature_sequence(entry.feature_path, entry.video_id)
    if expected_dims is not None and seq.dims != expected_dims:
        raise DataError(
            f"{entry.video_id}: has {seq.dims} descriptor dims, dataset uses {expected_dims}"
        )
    return seq


def fit_models(config: PipelineConfig, manifest: DatasetManifest) -> ModelBundle:
    """Fit the optional PCA and any branch codebooks/GMMs on training videos.

    PCA sees a seeded uniform subsample of the normalized frame descriptors
    (capped at 100,000). Branch models are fitted on that branch's descriptors
    from the training videos only, with separate seeds per branch.
    """
    config.validate()
    dims: int | None = None
    pca = None
    if config.pca_dims is not None:
        chunks = []
        for e in manifest.entries:
            seq = _read_sequence_checked(e, dims)
            dims = seq.dims
            chunks.append(_normalized_frames(seq))
        sample = np.vstack(chunks)
        if sample.shape[0] > PCA_SAMPLE_CAP:
            rng = np.random.default_rng(config.seed)
            keep = np.sort(rng.choice(sample.shape[0], PCA_SAMPLE_CAP, replace=False))
            sample = sample[keep]
        pca = pca_fit(sample, config.pca_dims)
    need_time = config.time_branch_enabled and config.time_encoder != "average"
    need_dft = config.dft_branch_enabled and config.dft_encoder != "average"
    time_model = dft_model = None
    if need_time or need_dft:
        time_parts: list[np.ndarray] = []
        dft_parts: list[np.ndarray] = []
        for e in manifest.entries:
            seq = _read_sequence_checked(e, dims)
            dims = seq.dims
            frames = _reduced_frames(config, pca, seq)
            if need_time:
                time_parts.append(frames)
            if need_dft:
                dft_parts.append(_dft_descriptors(config, frames, e.video_id))
        if need_time:
            time_model = _fit_branch_model(
                config, "time", config.time_encoder, np.vstack(time_parts)
            )
        if need_dft:
            dft_model = _fit_branch_model(config, "dft", config.dft_encoder, np.vstack(dft_parts))
    return ModelBundle(pca=pca, time_model=time_model, dft_model=dft_model)


def _encode_descriptor_set(
    config: PipelineConfig,
    branch: str,
    encoder: str,
    model: Codebook | GmmModel | None,
    descriptors: np.ndarray,
) -> VideoVector:
    if encoder == "average":
        return average_pool(descriptors, branch=branch)
    if model is None:
        raise DataError(f"{branch} branch: no fitted model for encoder {encoder!r}")
    if descriptors.shape[1] != model.dims:
        raise DataError(
            f"{branch} branch: descriptors have {descriptors.shape[1]} dims, "
            f"fitted model expects {model.dims}"
        )
    if encoder == "llc":
        params = LlcParams(neighbors=config.llc_neighbors, lam=config.llc_lambda)
        return llc_pool(model, params, descriptors, branch=branch)
    if encoder == "fv":
        return fisher_encode(model, descriptors, branch=branch, normalize=config.signed_sqrt_l2)
    return vlad_encode(model, descriptors, branch=branch, normalize=config.signed_sqrt_l2)


def encode_video(config: PipelineConfig, bundle: ModelBundle, seq: FeatureSequence) -> VideoVector:
    """Fused fixed-length representation of one video.

    Frames are unit-normalized, optionally PCA-reduced, then each enabled
    branch pools its descriptor set and the branch vectors are scaled to the
    configured norms and concatenated.
    """
    config.validate()
    frames = _reduced_frames(config, bundle.pca, seq)
    branches: list[tuple[VideoVector, float]] = []
    if config.time_branch_enabled:
        pooled = _encode_descriptor_set(
            config, "time", config.time_encoder, bundle.time_model, frames
        )
        branches.append((pooled, config.fusion_time_norm))
    if config.dft_branch_enabled:
        descriptors = _dft_descriptors(config, frames, seq.video_id)
        pooled = _encode_descriptor_set(
            config, "dft", config.dft_encoder, bundle.dft_model, descriptors
        )
        branches.append((pooled, config.fusion_dft_norm))
    return fuse(branches)


@dataclass(frozen=True)
class EvaluationReport:
    """Accuracy summary of one train/test run."""

    overall_accuracy: float
    per_class_accuracy: tuple[float, ...]
    confusion_matrix: np.ndarray


def evaluate(model: LinearSvmModel, test) -> EvaluationReport:
    """Confusion matrix and accuracies of the model on (vector, label) pairs."""
    if not test:
        raise DataError("test set is empty")
    classes = model.num_classes
    confusion = np.zeros((classes, classes), dtype=np.int64)
    for vector, label in test:
        if not 0 <= label < classes:
            raise DataError(f"label {label} out of range for {classes} classes")
        predicted, _ = predict(model, vector)
        confusion[label, predicted] += 1
    row_totals = confusion.sum(axis=1)
    per_class = tuple(
        float(confusion[c, c] / row_totals[c]) if row_totals[c] > 0 else 0.0
        for c in range(classes)
    )
    overall = float(np.trace(confusion) / confusion.sum())
    return EvaluationReport(
        overall_accuracy=overall, per_class_accuracy=per_class, confusion_matrix=confusion
    )


@dataclass(frozen=True)
class ExperimentResult:
    reports: tuple[EvaluationReport, ...]
    mean_overall_accuracy: float


def _encode_manifest(
    config: PipelineConfig, bundle: ModelBundle, manifest: DatasetManifest
) -> list[tuple[VideoVector, int]]:
    pairs = []
    dims: int | None = None
    for e in manifest.entries:
        seq = _read_sequence_checked(e, dims)
        dims = seq.dims
        pairs.append((encode_video(config, bundle, seq), e.label))
    return pairs


def run_repeated_experiment(
    config: PipelineConfig, manifest: DatasetManifest, repetitions: int
) -> ExperimentResult:
    """Repeat split/fit/encode/train/evaluate; run r splits with seed + r."""
    if repetitions < 1:
        raise DataError(f"repetitions must be positive, got {repetitions}")
    config.validate()
    reports = []
    for r in range(1, repetitions + 1):
        train_manifest, test_manifest = split_train_test(
            manifest, config.train_fraction, config.seed + r
        )
        bundle = fit_models(config, train_manifest)
        train_pairs = _encode_manifest(config, bundle, train_manifest)
        model = train_linear_svm(
            train_pairs,
            manifest.num_classes,
            config.svm_c,
            config.svm_max_epochs,
            config.svm_tol,
            seed=config.seed,
        )
        test_pairs = _encode_manifest(config, bundle, test_manifest)
        reports.append(evaluate(model, test_pairs))
    mean = float(np.mean([rep.overall_accuracy for rep in reports]))
    return ExperimentResult(reports=tuple(reports), mean_overall_accuracy=mean)


# bundle files live under one directory; names are fixed per branch and kind
_BUNDLE_FILES = {
    ("time", "codebook"): "time_codebook.tdfc",
    ("time", "gmm"): "time_gmm.tdfg",
    ("dft", "codebook"): "dft_codebook.tdfc",
    ("dft", "gmm"): "dft_gmm.tdfg",
}


def save_bundle(bundle: ModelBundle, out_dir) -> list[Path]:
    """Write every fitted model of the bundle into a directory; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if bundle.pca is not None:
        path = out_dir / "pca.tdfp"
        save_pca_model(bundle.pca, path)
        written.append(path)
    for branch, model in (("time", bundle.time_model), ("dft", bundle.dft_model)):
        if model is None:
            continue
        if isinstance(model, GmmModel):
            path = out_dir / _BUNDLE_FILES[(branch, "gmm")]
            save_gmm_model(model, path)
        else:
            path = out_dir / _BUNDLE_FILES[(branch, "codebook")]
            save_codebook(model, path)
        written.append(path)
    return written


def load_bundle(config: PipelineConfig, bundle_dir) -> ModelBundle:
    """Load the fitted models the configuration requires from a bundle directory."""
    bundle_dir = Path(bundle_dir)
    pca = None
    if config.pca_dims is not None:
        path = bundle_dir / "pca.tdfp"
        if not path.exists():
            raise DataError(f"pca stage: bundle {bundle_dir} has no PCA model")
        pca = load_pca_model(path)
    models: dict[str, Codebook | GmmModel | None] = {"time": None, "dft": None}
    for branch, encoder, enabled in (
        ("time", config.time_encoder, config.time_branch_enabled),
        ("dft", config.dft_encoder, config.dft_branch_enabled),
    ):
        if not enabled or encoder == "average":
            continue
        kind = "gmm" if encoder == "fv" else "codebook"
        path = bundle_dir / _BUNDLE_FILES[(branch, kind)]
        if not path.exists():
            raise DataError(f"{branch} branch: bundle {bundle_dir} is missing {path.name}")
        models[branch] = load_gmm_model(path) if kind == "gmm" else load_codebook(path)
    return ModelBundle(pca=pca, time_model=models["time"], dft_model=models["dft"])
