"""Streaming-camera detection from byte-rate side channels.

Compare the bytes-per-time-step pattern of a trusted recording with the
transmission pattern of every nearby network device; devices whose
traffic tracks the observed scene are flagged as cameras watching it.
"""

from .classify import (
    DEFAULT_THRESHOLDS,
    AgreementReport,
    GridPoint,
    LabeledSample,
    Metrics,
    MlpModel,
    ParamGrid,
    ThresholdConfig,
    Verdict,
    convergence_analysis,
    evaluate,
    grid_search,
    measure_agreement,
    mlp_predict,
    mlp_train,
    portability_matrix,
    sweep_threshold,
    threshold_classify,
)
from .errors import SimobsError
from .mp4 import TrackSampleTable, parse_mp4, video_byte_series
from .pcap import DeviceId, DeviceStream, PacketRecord, extract_device_series, read_pcap, transmitter_of
from .similarity import (
    SimilarityVector,
    dtw_distance,
    gaussian_kld,
    jsd,
    pearson_cc,
    similarity_vector,
)
from .simulate import (
    ActivitySignal,
    CameraModel,
    SimDataset,
    SimScenario,
    background_traffic,
    camera_traffic,
    gen_activity,
    render_scenario,
    write_pcap,
)
from .timeseries import ByteSeries, NormalizedSeries, TimedEvent, align, bin_events, min_max_normalize

__version__ = "0.1.0"

__all__ = [
    "ActivitySignal",
    "AgreementReport",
    "ByteSeries",
    "CameraModel",
    "DEFAULT_THRESHOLDS",
    "DeviceId",
    "DeviceStream",
    "GridPoint",
    "LabeledSample",
    "Metrics",
    "MlpModel",
    "NormalizedSeries",
    "PacketRecord",
    "ParamGrid",
    "SimDataset",
    "SimScenario",
    "SimilarityVector",
    "SimobsError",
    "ThresholdConfig",
    "TimedEvent",
    "TrackSampleTable",
    "Verdict",
    "align",
    "background_traffic",
    "bin_events",
    "camera_traffic",
    "convergence_analysis",
    "dtw_distance",
    "evaluate",
    "extract_device_series",
    "gaussian_kld",
    "gen_activity",
    "grid_search",
    "jsd",
    "measure_agreement",
    "min_max_normalize",
    "mlp_predict",
    "mlp_train",
    "parse_mp4",
    "pearson_cc",
    "portability_matrix",
    "read_pcap",
    "render_scenario",
    "similarity_vector",
    "sweep_threshold",
    "threshold_classify",
    "transmitter_of",
    "video_byte_series",
    "write_pcap",
]
