"""Small-cancellation toolkit.

Verifies C'(lambda) presentations, decides the word problem by Dehn's
algorithm, builds exact Cayley-graph balls with geodesic spanning trees,
audits (epsilon, k)-tightness of the induced combings, constructs annulus
covers with linear control-function fits, and builds, reduces and
classifies van Kampen diagrams of simple geodesic triangles.
"""

__version__ = "0.1.0"
