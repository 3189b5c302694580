"""Retrieval-augmented Japanese->Chinese translation pipeline and its
evaluation harness: analysis, retrieval, prompt construction, generation,
character-level sentence BLEU, knowledge-base size sweeps, and a
human-in-the-loop workbench service."""

__version__ = "0.1.0"
