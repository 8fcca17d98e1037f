"""Order-planning table-to-text generation.

A small numpy-backed research package: structured tables go in, fluent
token sequences come out. Field ordering is planned by a learned
field-transition link matrix blended with content attention through a
self-adaptive gate, and rare table values are emitted verbatim through
a copy mechanism. Gradients come from the package's own reverse-mode
tape (autodiff module); nothing here depends on a deep-learning
framework.
"""

__version__ = "0.1.0"
