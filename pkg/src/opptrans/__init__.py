"""Trace-driven simulation of opportunistic vehicular data transfer.

Building blocks: context traces (trace), data rate prediction (forest,
incremental_net), geospatial black-spot detection (blackspot), LinUCB
scheduling (bandit), the transmission schemes (schemes), the replay engine
(engine), KPI computation (kpi), and experiment orchestration (experiment,
cli).
"""

from .bandit import IDLE, TX, BanditState, select, update
from .blackspot import (BlackSpotConfig, BlackSpotDetector, BlackSpotEllipse,
                        BlackSpotMap, ErrorSample, contains,
                        detect_black_spots, fit_ellipse, in_any_black_spot,
                        kmeans)
from .engine import EpochResult, convergence_epoch, run_epoch, train_epochs
from .features import CellIdEncoder, feature_matrix, training_set
from .forest import ForestRatePredictor
from .incremental_net import IncrementalNetRegressor, concept_drift_experiment
from .kpi import (PowerModelParams, PrbTables, TransmissionRecord, aoi,
                  estimate_prbs, prbs_per_megabyte, summarize_run,
                  transmission_energy)
from .metrics import RegressionMetrics, evaluate
from .residual import ResidualRateModel, fit_residual_model, \
    sample_virtual_ground_truth
from .schemes import (SchemeConfig, cat_probability, efficiency_indicators,
                      idle_reward, make_agent, q_update, tx_reward)
from .trace import (ContextSample, SensorPacket, SyntheticConfig, Trace,
                    generate_synthetic_trace, load_trace, sensor_stream,
                    write_trace)

__version__ = "0.1.0"
