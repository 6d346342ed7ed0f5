"""Texture pipeline for dense-correspondence video data.

Extracts per-person UV texture atlases from frames via (partId, u, v)
correspondence maps, inpaints and transfers them to re-render videos,
plans the paired augmentation dataset, and quantifies input relevance and
correspondence quality (mutual information, geodesic point scores, AUC,
segmentation overlap).
"""

__version__ = "0.1.0"
