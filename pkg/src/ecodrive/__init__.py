"""OBD-II trip analytics: fuel and CO2 estimates, route and driving-style
classification with small backpropagation networks."""
from .errors import EcodriveError
from .fuel import Fuel, FuelEstimate, Method, VehicleProfile, co2_per_liter, estimate, trip_totals
from .mlp import MlpModel, TrainConfig, LabeledSet, ROUTE_LABELS, STYLE_LABELS
from .trace import Sample, Trip, Window, ingest_csv, emit_csv, derive_acceleration, windows

__version__ = "0.1.0"
