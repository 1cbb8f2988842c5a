"""Dual-channel (sentiment + semantic) LSTM emotion classifier for short
textual conversations, with classical baselines, evaluation metrics, and
semi-automated training-data mining.  Everything numerical is plain numpy."""

from sslstm.labels import EMOTION_LABELS, LABELS, N_CLASSES, label_index

__all__ = ["LABELS", "EMOTION_LABELS", "N_CLASSES", "label_index"]

__version__ = "0.1.0"
