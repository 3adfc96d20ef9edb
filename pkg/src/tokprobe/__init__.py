"""Analytics for masked-token prediction logs.

Library surface: per-token accuracy tables (`apt`), confusion counting and
its graph pipeline (`confusion`), percolation clustering (`percolation`),
embedding cosine-similarity structure (`similarity`), confidence binning
(`confidence`), per-unit label-field statistics (`fields`), file formats
(`io`), and seeded synthetic generators with planted ground truth (`synth`).
The `tokprobe` command exposes the same pipelines; see the README.
"""

__version__ = "0.1.0"
