"""Point-prompt generation and evaluation tooling for tool-wear masks."""

from .dataset import (
    AugmentDraw,
    AugmentSpec,
    DatasetManifest,
    ManifestEntry,
    apply_augment,
    augment_pair,
    draw_augment,
    read_manifest,
    stratified_split,
    subset,
    validate_manifest,
    write_manifest,
)
from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptyForegroundError,
    MaskFormatError,
    PromptSchemaError,
    StatisticsError,
    WearPromptError,
)
from .harness import (
    EvalRecord,
    Failure,
    GroupStats,
    SweepReport,
    aggregate,
    emit_report,
    lowres_mask,
    read_records_csv,
    run_phase1,
    run_phase2,
)
from .mask import (
    BinaryMask,
    ComponentLabels,
    Connectivity,
    GrayMask,
    PixelPoint,
    StructuringElement,
    binarize,
    centroid,
    connected_components,
    contour_pixels,
    erode,
    load_gray,
    load_mask,
    save_mask,
)
from .metrics import (
    OVERLAY_COLORS,
    AnovaResult,
    LossBreakdown,
    OverlayCategory,
    PixelCounts,
    ScoreSet,
    anova_oneway,
    composite_loss,
    overlay,
    save_overlay,
    score,
)
from .poi import (
    PoiConfig,
    PoiMethod,
    PromptPoints,
    gen_negatives,
    generate_prompt_points,
    poi_coga,
    poi_ms,
    poi_rcoga,
)
from .prompts import (
    PromptBundle,
    PromptPoint,
    PromptSource,
    downsample_maxpool,
    dumps_prompt,
    points_from_prompts,
    read_prompt,
    write_prompt,
)

__version__ = "0.1.0"
