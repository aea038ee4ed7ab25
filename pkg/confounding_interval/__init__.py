__version__ = "0.1.0"

DEFAULT_SETTINGS = {
    "feasibility_tol": 1e-12,  # Absolute tolerance for the box and band tests
    "grid_resolution": 201,  # Nodes per axis for the grid oracle
    "region_resolution": 101,  # Nodes per axis for region point clouds
    "probe_resolution": 11,  # Nodes per axis for the empty-set probe
    "dedup_distance": 1e-12,  # Max-norm distance below which candidates merge
    "degenerate_eps": 1e-14,  # Leading coefficient treated as zero
    "machine_digits": 12,  # Significant digits in CSV/JSON output
    "table_decimals": 2,  # Decimals in human-readable tables
    "prior_samples": 100_000,
    "prior_probe": 10_000,  # Draws used to estimate prior acceptance
    "min_acceptance": 1e-4,
    "seed": 0,
    "format": "table",
    "sweep_steps": 20,
    "verify_cases": 20,
    "config_timeout": 30,  # Seconds to wait for a remote config file
}
