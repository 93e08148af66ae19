"""Round-limited market protocols for bipartite matching and XOS auctions."""

__version__ = "0.1.0"
