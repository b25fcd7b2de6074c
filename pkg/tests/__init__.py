"""
Test suite for cubelab

Test modules:
- test_dynamics: Catalog systems, observables, orbits and external sequences
- test_cube_averages: Three- and seven-function averages, windows and traces
- test_cube_general: General cube averages, permutations and block statistics
- test_spectral: Wiener-Wintner statistic, correlations, seminorms and bounds
- test_factors: Factor projections and projection comparisons
- test_config: Configuration normalization, validation and JSON files
- test_report: Report metadata and CSV output
- test_thread: Trial threads and ordered execution
- test_harness: Experiment runner tasks and verify checks
- test_cli: Command line merging and exit codes
- test_integration: End-to-end command line runs
"""
