"""Single-cell D2D caching network simulator.

Reproduces, at desk scale, the throughput-outage tradeoffs of four
video-delivery schemes (multi-band D2D caching, conventional unicast, coded
multicasting, harmonic broadcasting) over realistic geometry and channel
models, plus closed-form scaling-law curves.
"""

__version__ = "0.1.0"
