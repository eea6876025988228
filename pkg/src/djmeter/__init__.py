"""Studio-metering features and random-forest DJ classification."""
from .audio_io import AudioClip, PreprocessConfig, WindowFrame
from .features import FEATURE_NAMES, SLOT_NAMES, SongRecord, extract_song
from .forest import ForestConfig, ForestModel

__version__ = "0.1.0"

__all__ = ["AudioClip", "PreprocessConfig", "WindowFrame", "FEATURE_NAMES", "SLOT_NAMES",
           "SongRecord", "extract_song", "ForestConfig", "ForestModel"]
