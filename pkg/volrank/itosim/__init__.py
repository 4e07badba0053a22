"""Simulation of continuous Ito semimartingales with a known volatility rank."""
from volrank.itosim.pathio import load_npz, save_npz, write_csv, write_sidecar
from volrank.itosim.scenarios import SCENARIOS, scenario, validate_rank_profile
from volrank.itosim.simulator import simulate
