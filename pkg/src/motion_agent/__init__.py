"""Conversational motion generation at desk scale.

Pipeline: continuous motion <-> discrete tokens (VQ codec) <-> an adapter-tuned
language model, coordinated by a planner that decomposes user turns into
translation-agent calls whose token outputs are concatenated and decoded once.
"""

__version__ = "0.1.0"
