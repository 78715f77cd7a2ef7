"""dishrec: per-dish sentiment mining and restaurant recommendation.

The pipeline ingests restaurant reviews, scopes per-item opinion fragments,
classifies their sentiment, derives a sparse user x (restaurant, item)
rating matrix, and ranks restaurants for a queried food item with
neighborhood collaborative filtering or a factorization machine. Side-dish
affinities come from Louvain communities over the item co-mention graph and
per-restaurant LDA topics.
"""

__version__ = "0.1.0"
