"""Combinatorial workbench for pants decompositions of infinite-type
surfaces: symbolic pants graphs, end-space encodings, Fenchel-Nielsen
length data and quasiconformal certification."""

__version__ = "0.1.0"
