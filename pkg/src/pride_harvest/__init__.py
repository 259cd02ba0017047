"""Simulation of enhanced pRide ride matching and the blinded-distance location harvesting attack."""
from .attack import (DIVISOR_SEARCH, PAPER_FAITHFUL, GridFactorTable, RecoveryOutcome, harvest_session,
                     locate_driver, pairwise_diffs, recover_e, recover_r, unblind)
from .experiment import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .geometry import GridMap, GridRect, UtmPoint, candidate_points, corner_distances, squared_distance
from .protocol import SessionTranscript, World, run_session, simulate_session
from .roads import CITY_PRESETS, RoadNetwork, load_roads, preset_city, sample_on_road, synth_city

__version__ = "0.1.0"
