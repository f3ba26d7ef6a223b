"""EEG ingestion (EDF and synthetic) and the windowing/normalization pipeline."""

from .edf import EdfError, default_run_label_map, load_edf_directory, parse_edf, write_edf
from .pipeline import (
    CorruptedSegment,
    EegSegment,
    Recording,
    ZScoreNormalizer,
    corrupt,
    segment,
    split,
)
from .synth import UserProfile, sample_profile, synth_cohort, synth_recording

__all__ = [
    "Recording",
    "EegSegment",
    "CorruptedSegment",
    "ZScoreNormalizer",
    "segment",
    "split",
    "corrupt",
    "parse_edf",
    "write_edf",
    "EdfError",
    "default_run_label_map",
    "load_edf_directory",
    "UserProfile",
    "sample_profile",
    "synth_recording",
    "synth_cohort",
]
