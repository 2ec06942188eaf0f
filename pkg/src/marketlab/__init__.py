"""marketlab: windowed correlation analysis and a from-scratch LSTM forecaster
for daily market data, served over HTTP with a thin CLI client."""

__version__ = "0.1.0"

from .correlation import (
    AcfReport,
    CorrelationMatrix,
    SummaryStats,
    WindowedCorrelationReport,
    autocorrelation,
    bucket_histogram,
    correlation_matrix,
    discretize_windows,
    pearson,
    select_lookback,
    summary_stats,
    windowed_correlations,
)
from .errors import MarketLabError
from .experiments import (
    AblationTable,
    ExperimentResult,
    ExperimentSpec,
    ModelSettings,
    compose_features,
    render_prediction_plot,
    run_ablation,
    run_experiment,
    run_replicates,
)
from .frame import (
    AlignedFrame,
    ScalerParams,
    SupervisedTensors,
    align,
    apply_scaler,
    fit_scaler,
    invert_scaler,
    make_supervised_windows,
    split_by_date,
)
from .lstm import (
    ForwardCache,
    LstmConfig,
    LstmParams,
    backward,
    forward,
    init_params,
    load_checkpoint,
    lstm_cell_forward,
    mse_loss,
    param_count,
    save_checkpoint,
)
from .ohlcv import OhlcvBar, OhlcvSeries, parse_csv, serialize_csv
from .optim import AdamState, adam_step, gradient_check, init_adam
from .provider import ProviderClient, ProviderConfig, fetch_daily
from .svgplot import export_heatmap
from .training import MetricsReport, TrainConfig, TrainHistory, evaluate, predict, train
