"""Central configuration for knowledge-boundary dataset building and gated RAG.

All tunable parameters are defined here with descriptive names. Per-run
settings (endpoints, providers, templates) live in the YAML run config
loaded by ``pipeline_config.py``; its defaults come from this module.

See docs/HOW_GATING_WORKS.md for how these values flow through the stages.
"""

from __future__ import annotations

from enum import Enum

# =============================================================================
# SCORE SCALE
# =============================================================================

# Judge rubric endpoints: wrong answer and perfectly correct answer
SCORE_WRONG = 1.0
SCORE_CORRECT = 5.0

# =============================================================================
# THRESHOLDS (epsilon)
# =============================================================================

# Minimum mean judge score that counts as "inside the knowledge boundary"
# when building hard labels. 4 marks "mostly correct" on a 1-5 rubric.
LABEL_EPSILON = 4.0

# SKB inference threshold: retrieve when the soft score >= epsilon.
# 4.5 sits at the low-retrieval end of the sweep.
SKB_EPSILON = 4.5

# How far above the correct-answer score an SKB epsilon may go.
# Anything above SCORE_CORRECT disables retrieval entirely.
EPSILON_OVERSHOOT = 1.0

# =============================================================================
# SAMPLING
# =============================================================================

# Number of sampled answers per query
SAMPLE_COUNT = 30

# Sampling decoding defaults (recorded in manifests)
SAMPLING_TEMPERATURE = 0.7
SAMPLING_TOP_P = 0.9

# Greedy overrides used for boundary inference and answer decoding
GREEDY_DECODING = {"temperature": 0.0, "top_p": 1.0}

# =============================================================================
# JUDGE
# =============================================================================

# Extra judge requests issued when the reply has no parsable number
JUDGE_PARSE_RETRIES = 2

# A query keeps a mean score only with at least this many parsed judge scores
MIN_VALID_SCORES = 1

# =============================================================================
# PROMPTS
# =============================================================================

# Rendered prompts longer than this many characters are rejected
PROMPT_CHAR_BUDGET = 16000

# Dialect used when a profile does not name one
DEFAULT_DIALECT = "plain"


class TemplateVariant(str, Enum):
    """Prompt template variants shipped in configs/templates.yaml."""
    HARD = "hard"                        # boundary model, true/false verdict
    SOFT = "soft"                        # boundary model, 1.0-5.0 search score
    JUDGE = "judge"                      # text LLM grading a prediction against gold
    PROMPT_BASELINE = "prompt-baseline"  # ask the sampled model itself
    ANSWER = "answer"                    # answer without retrieved context
    ANSWER_RAG = "answer-rag"            # answer with retrieved context


# =============================================================================
# RETRIEVAL
# =============================================================================

# Snippets kept per search
SEARCH_TOP_K = 5

# Character budget for the assembled context segment
CONTEXT_CHAR_BUDGET = 4000

# Search cache entry lifetime in seconds (None = never expire)
SEARCH_CACHE_MAX_AGE = None


class RetrievalPolicy(str, Enum):
    """Which query is issued to the search provider."""
    GOLD_IF_PRESENT = "gold-if-present-else-text"  # gold query text search, else image search
    TEXT = "text"                                  # always text search on q_t
    IMAGE = "image"                                # always image search on the first image


# =============================================================================
# GATEWAY
# =============================================================================

# Transport retries after the first attempt
GATEWAY_MAX_RETRIES = 4

# Exponential backoff: base * 2**attempt, capped, jittered in [0.5, 1.0]
GATEWAY_BACKOFF_BASE_SECONDS = 0.5
GATEWAY_BACKOFF_CAP_SECONDS = 20.0

# Per-profile rate limit defaults
GATEWAY_REQUESTS_PER_SECOND = 5.0
GATEWAY_MAX_IN_FLIGHT = 8

# HTTP timeout per request
GATEWAY_TIMEOUT_SECONDS = 120.0

# =============================================================================
# EVALUATION
# =============================================================================

# Soft held-in prediction counts as correct within this distance (one rubric step)
HELD_IN_SOFT_TOLERANCE = 0.5

# Default epsilon grid for sweeps: start, stop, step (inclusive)
SWEEP_GRID = (1.0, 5.0, 0.5)

# =============================================================================
# RUN STORE
# =============================================================================

# Default worker count for fan-out stages
DEFAULT_PARALLELISM = 8

# Tool version recorded in manifests
TOOL_VERSION = "0.1.0"

# =============================================================================
# TRAINER METADATA
# =============================================================================

# Suggested fine-tuning settings recorded in SFT manifests for external trainers
TRAINER_HYPERPARAMETERS = {
    "base_model": "Qwen-VL-7B-Chat / DeepSeek-VL-7B-Chat",
    "lora_targets": ["q", "k", "v"],
    "lora_rank": 8,
    "lora_alpha": 32,
    "learning_rate": 1e-4,
    "optimizer": "AdamW",
    "lr_scheduler": "linear",
    "precision": "bf16",
    "batch_size": 1,
    "gradient_accumulation_steps": 16,
}
