"""Value-aware adaptive caching for LLM tool-call results."""

from .annotator import (RemoteAnnotator, RemoteConfig, StaticAnnotator, ToolManifest,
                        ToolRule, annotate_static, is_cacheable)
from .baselines import LruPolicy, caca_group_reward, lru_select_victim, make_policy
from .engine import CacheEngine, RequestOutcome
from .keying import CacheKey, canonicalize, make_key
from .model import (CacheEntry, GroupNode, MalformedRequest, PolicyConfig, RequestType,
                    SemanticFeatures, SystemFeatures, ToolCallRequest, TTL_CLASSES,
                    validate_request)
from .policy import (AdmissionDecision, BanditPolicy, GroupCoords, GroupingState,
                     decide_admission, eviction_score, group_reward, locate_group,
                     purge_expired, regroup, select_victim, ucb_score)
from .simulate import (SweepSpec, compare_grouping, report_render, run_cell, run_sweep,
                       unique_cacheable_keys)
from .traceio import TraceRecord, read_trace, write_trace
from .value import FeatureRange, FeatureRanges, caching_value
from .workload import (Template, ToolSpec, WorkloadConfig, build_population,
                       default_catalog, gen_hotspot, gen_multiuser, gen_uniform,
                       gen_zipf, generate, manifest_from_catalog)

__version__ = "0.1.0"
