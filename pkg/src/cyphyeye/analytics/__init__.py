"""Three-component analytics: log/flow risk scoring, behavioral anomaly over
field-bus windows, and a learned quarantine policy, plus the composite
per-system anomaly that drives the operator views."""

from cyphyeye.analytics.tokens import TokenVocab, build_vocab, tokenize
from cyphyeye.analytics.logmodel import (
    LogScoreModel, CorpusTooSmallError, train_log_model, score_line, raw_score,
    classify_flow, RiskLabel, save_log_model, load_log_model,
)
from cyphyeye.analytics.autoenc import (
    AutoencoderModel, BottleneckConfigError, ContaminatedTrainingError,
    train_autoencoder, behavioral_anomaly, save_autoencoder, load_autoencoder,
)
from cyphyeye.analytics.windows import (
    FEATURES, FEATURE_VERSION, WindowBuilder, tick_observations, build_windows,
)
from cyphyeye.analytics.composite import (
    CompositeConfig, AnomalyState, composite_anomaly, CompositeTracker, stage_for,
)
from cyphyeye.analytics.policy import (
    PolicyConfig, QuarantinePolicy, QuarantineDecision, TraceEntry,
    RuleTablePolicyHandle, policy_step, replay_total,
)
from cyphyeye.analytics.reports import (
    ReportRow, traffic_delta_report, render_report_csv, write_report_csv,
)
from cyphyeye.analytics.config import AnalyticsConfig, load_config

__all__ = [
    "TokenVocab", "build_vocab", "tokenize",
    "LogScoreModel", "CorpusTooSmallError", "train_log_model", "score_line",
    "raw_score", "classify_flow", "RiskLabel", "save_log_model", "load_log_model",
    "AutoencoderModel", "BottleneckConfigError", "ContaminatedTrainingError",
    "train_autoencoder", "behavioral_anomaly", "save_autoencoder", "load_autoencoder",
    "FEATURES", "FEATURE_VERSION", "WindowBuilder", "tick_observations", "build_windows",
    "CompositeConfig", "AnomalyState", "composite_anomaly", "CompositeTracker", "stage_for",
    "PolicyConfig", "QuarantinePolicy", "QuarantineDecision", "TraceEntry",
    "RuleTablePolicyHandle", "policy_step", "replay_total",
    "ReportRow", "traffic_delta_report", "render_report_csv", "write_report_csv",
    "AnalyticsConfig", "load_config",
]
