"""planweave: human-in-the-loop orchestration for multi-agent plan graphs.

Generate plans with a language model, inspect and edit them as DAGs, execute
them over an agent registry, and benchmark how well feedback repairs
deliberately corrupted plans.
"""

__version__ = "0.1.0"
