"""Correlation-trained MWPM decoder for the Surface-17 memory experiment."""

from __future__ import annotations

import numpy as np

from ..code import DATA, build_surface17
from ..experiment import ShotBatch, SyndromeBatch, compute_syndromes
from .graph import DetectionGraph, Edge
from .matching import MatchingResult, correct_logical, decode_batch, mwpm_decode
from .weights import (EdgeProbabilities, PathSums, WeightMatrix, estimate_edge_probabilities,
                      path_sum_probabilities, weights_from_dict, weights_from_probabilities,
                      weights_to_dict)

__all__ = [
    "DetectionGraph", "Edge", "EdgeProbabilities", "PathSums", "WeightMatrix",
    "MatchingResult", "estimate_edge_probabilities", "path_sum_probabilities",
    "weights_from_probabilities", "weights_to_dict", "weights_from_dict", "mwpm_decode",
    "decode_batch", "correct_logical", "train_weights", "decode_shots", "logical_support",
]


def logical_support(basis: str) -> list[int]:
    return [DATA.index(q) for q in build_surface17().logical(basis).support]


def train_weights(syndromes: SyndromeBatch, n_cycles: int, cap: int = 4,
                  blocks: int = 100) -> tuple[EdgeProbabilities, WeightMatrix]:
    graph = DetectionGraph.surface17(syndromes.basis, n_cycles)
    probs = estimate_edge_probabilities(graph, syndromes.detection_events(), blocks=blocks)
    return probs, weights_from_probabilities(probs, cap)


def decode_shots(shots: ShotBatch, wm: WeightMatrix,
                 syndromes: SyndromeBatch | None = None) -> np.ndarray:
    """Corrected logical value (+/-1) per shot, before reference-sign removal."""
    syn = syndromes if syndromes is not None else compute_syndromes(shots)
    M = decode_batch(wm, syn.detection_events())
    return correct_logical(shots.final, M, logical_support(syn.basis))
