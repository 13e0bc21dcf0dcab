"""caseforge: a model-based assurance case engine.

Stores modular GSN-style argument structures with fine-grained traceability
to engineering artifacts, evaluates the case by executing embedded constraint
queries against those artifacts, renders the argument into a checkable formal
notation, computes change impact from artifact edits, and runs a periodic
runtime monitor over the dynamic parts of the case.
"""

__version__ = "0.1.0"
