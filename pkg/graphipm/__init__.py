"""Graph-structured nonlinear programs and an interior-point solver with
overlapping Schwarz linear algebra."""

from graphipm.model import OptiGraph
from graphipm.nlp import PrimalDualPoint, StandardNLP, flatten

__version__ = "0.1.0"

__all__ = ["OptiGraph", "PrimalDualPoint", "StandardNLP", "flatten", "__version__"]
