"""Zero-shot segmentation from diffusion self-attention maps.

The engine consumes pre-captured attention archives (ATNP format), fuses the
multi-resolution self-attention tensors into one probability-map tensor,
merges the maps into object proposals by symmetric-KL thresholding, and
suppresses them into a label mask plus confidence map. Cross-attention, when
present, drives prompt-guided region ranking and selection. Evaluation
utilities score binary masks with DSC/IoU/precision/recall and aggregate over
datasets.
"""

__version__ = "0.1.0"

from .aggregation import AggregatedTensor, WeightVector, aggregate_stack, compute_weights
from .archive import (
    archive_bytes,
    read_archive,
    read_archive_file,
    write_archive,
    write_archive_file,
)
from .errors import (
    ArchiveError,
    AttnMaskError,
    BadMagicError,
    ConfigError,
    DimensionMismatchError,
    ExtractorError,
    MissingCrossAttentionError,
    StackValidationError,
    TruncatedRecordError,
    UnknownLabelError,
    UnsupportedVersionError,
)
from .guidance import (
    RelevanceMap,
    TokenSelection,
    auto_select,
    build_relevance_map,
    default_token_selection,
    score_regions,
)
from .masking import (
    BinaryMask,
    ConfidenceMap,
    LabelMask,
    Region,
    extract_regions,
    nms_mask,
    render_overlay,
    select_regions,
)
from .merging import (
    MergeParams,
    Proposal,
    ProposalSet,
    anchor_coordinates,
    kl_distance,
    merge_first_pass,
    merge_proposals,
    merge_refine,
    sample_anchors,
)
from .metrics import (
    ConfusionCounts,
    DatasetEvalResult,
    MetricReport,
    compute_metrics,
    confusion_counts,
    evaluate_dataset,
)
from .pipeline import (
    RunConfig,
    RunManifest,
    invoke_extractor,
    run_benchmark,
    run_pipeline,
    segment_stack,
)
from .resample import resize_bilinear, upsample_bilinear
from .stack import (
    AttentionStack,
    AttentionTensor,
    CaptureMetadata,
    CrossAttentionTensor,
    Resolution,
    validate_stack,
)

__all__ = [name for name in dir() if not name.startswith("_")]
