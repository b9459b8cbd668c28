"""Gender signaling and gender performance in online review helpfulness.

Modules
-------
corpus     review and product ingestion, the on-disk corpus store
signal     user-name gender signals (name lexicon and keyword lists)
perform    character-level CNN text classifier and a bag-of-words baseline
features   confounder vectors (time, length, readability, sentiment, rating)
matching   Mahalanobis nearest-neighbour matching over an exact kd-tree
effects    relative helpfulness advantage, bootstrap, quadrants, rank curves
synth      seeded synthetic corpora with planted effects
cli        the staged command-line pipeline
"""

__version__ = "0.1.0"
